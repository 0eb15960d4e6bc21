//! Classification metrics, per-depth predictions and plot-data export.

mod export;
mod metrics;
mod predict;

pub use export::{
    confusion_csv, export_plot_data, facies_column_csv, facies_counts_csv, parse_confusion_csv,
    predictions_csv, ClassTriple, CONFUSION_FILE, COUNTS_FILE, FACIES_COLUMN_FILE, METRICS_FILE,
    PREDICTIONS_FILE,
};
pub use metrics::{
    adjacent_accuracy, confusion, precision_recall_f1, ClassScores, ConfusionMatrix, EvalReport,
    F1Summary,
};
pub use predict::{
    predict_with_confidence, ConfidenceBand, DepthPrediction, HIGH_CONFIDENCE, LOW_CONFIDENCE,
};
