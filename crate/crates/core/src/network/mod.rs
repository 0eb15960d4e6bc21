//! Inception ConvNet: topology, parameters, passes and checkpoints.

mod checkpoint;
mod model;
mod params;
mod spec;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_EXTENSION, CHECKPOINT_VERSION,
};
pub use model::{
    backward_example, forward_example, inception_backward, inception_forward, infer,
    model_backward, model_forward, sum_chunked, ExampleCache, InceptionCache, REDUCE_CHUNK,
    STAGE_PARAMS,
};
pub use params::{init_params, ModelParams};
pub use spec::{InceptionSpec, ModelSpec, ParamShape, StemSpec, STAGE_POOL};
