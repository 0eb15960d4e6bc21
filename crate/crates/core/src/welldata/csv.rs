//! Contest-layout CSV reader and writer.
//!
//! Header: `Facies,Formation,Well Name,Depth,GR,ILD_log10,DeltaPHI,PHIND,PE,NM_M,RELPOS`.
//! Column order is free and extra columns are ignored. `Facies` and
//! `Formation` are optional; empty numeric cells are gaps.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use super::{Well, CHANNELS, NUM_CHANNELS, NUM_FACIES, PE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// Accept files without a PE column; the channel is then all gaps.
    pub allow_missing_pe: bool,
}

pub fn parse_csv(path: impl AsRef<Path>, opts: CsvOptions) -> Result<Vec<Well>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_csv_bytes(&bytes, opts)
}

struct Row {
    line: usize,
    depth: f64,
    formation: String,
    values: [f64; NUM_CHANNELS],
    label: Option<u8>,
}

fn parse_number(cell: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        row: line,
        msg: format!("column `{column}`: `{cell}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row: line,
            msg: format!("column `{column}`: non-finite value `{cell}`"),
        });
    }
    Ok(v)
}

/// Parses CSV text into wells. Rows are grouped by well name (in order of
/// first appearance) and sorted by depth.
pub fn parse_csv_bytes(bytes: &[u8], opts: CsvOptions) -> Result<Vec<Well>> {
    let mut reader = ::csv::ReaderBuilder::new()
        .trim(::csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(Error::Format("empty header row".into()));
    }
    let col = |name: &str| header.iter().position(|h| h == name);
    let well_col = col("Well Name").ok_or_else(|| Error::MissingColumn("Well Name".into()))?;
    let depth_col = col("Depth").ok_or_else(|| Error::MissingColumn("Depth".into()))?;
    let mut channel_cols = [None; NUM_CHANNELS];
    for (i, name) in CHANNELS.iter().enumerate() {
        channel_cols[i] = col(name);
        if channel_cols[i].is_none() && !(i == PE && opts.allow_missing_pe) {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let facies_col = col("Facies");
    let formation_col = col("Formation");

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<Row>> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let cell = |i: usize| record.get(i).unwrap_or("");
        let name = cell(well_col);
        if name.is_empty() {
            return Err(Error::Parse {
                row: line,
                msg: "empty well name".into(),
            });
        }
        let depth_cell = cell(depth_col);
        if depth_cell.is_empty() {
            return Err(Error::Parse {
                row: line,
                msg: "empty depth".into(),
            });
        }
        let depth = parse_number(depth_cell, line, "Depth")?;
        let mut values = [f64::NAN; NUM_CHANNELS];
        for (i, c) in channel_cols.iter().enumerate() {
            if let Some(c) = *c {
                let v = cell(c);
                if !v.is_empty() {
                    values[i] = parse_number(v, line, CHANNELS[i])?;
                }
            }
        }
        let label = match facies_col.map(cell).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => match s.parse::<u8>() {
                Ok(l) if (1..=NUM_FACIES as u8).contains(&l) => Some(l),
                _ => {
                    return Err(Error::Parse {
                        row: line,
                        msg: format!("facies `{s}` is not a label in 1..={NUM_FACIES}"),
                    })
                }
            },
        };
        if !groups.contains_key(name) {
            order.push(name.to_string());
        }
        groups.entry(name.to_string()).or_default().push(Row {
            line,
            depth,
            formation: formation_col.map(cell).unwrap_or("").to_string(),
            values,
            label,
        });
    }

    order
        .into_iter()
        .map(|name| {
            let mut rows = groups.remove(&name).unwrap();
            rows.sort_by(|a, b| a.depth.total_cmp(&b.depth));
            let labeled = rows.iter().filter(|r| r.label.is_some()).count();
            if labeled != 0 && labeled != rows.len() {
                let r = rows.iter().find(|r| r.label.is_none()).unwrap();
                return Err(Error::Parse {
                    row: r.line,
                    msg: format!("well `{name}` is partially labeled; missing facies here"),
                });
            }
            if let Some(w) = rows.windows(2).find(|w| w[0].depth == w[1].depth) {
                return Err(Error::Parse {
                    row: w[1].line,
                    msg: format!("well `{name}` repeats depth {}", w[1].depth),
                });
            }
            let labels = (labeled != 0).then(|| rows.iter().map(|r| r.label.unwrap()).collect());
            let mut well = Well::new(
                name,
                rows.iter().map(|r| r.depth).collect(),
                (0..NUM_CHANNELS)
                    .map(|c| rows.iter().map(|r| r.values[c]).collect())
                    .collect(),
                labels,
            )?;
            well.formation = rows.into_iter().map(|r| r.formation).collect();
            Ok(well)
        })
        .collect()
}

/// Writes wells in the canonical column order. Gaps become empty cells;
/// numbers use the shortest representation that parses back bit-exactly.
pub fn write_csv<W: Write>(wells: &[Well], out: W) -> Result<()> {
    let io = |e: ::csv::Error| Error::Format(format!("csv write failed: {e}"));
    let mut w = ::csv::Writer::from_writer(out);
    let mut header = vec!["Facies", "Formation", "Well Name", "Depth"];
    header.extend(CHANNELS);
    w.write_record(&header).map_err(io)?;
    let num = |v: f64| {
        if v.is_nan() {
            String::new()
        } else {
            v.to_string()
        }
    };
    for well in wells {
        for i in 0..well.len() {
            let mut rec = vec![
                well.labels
                    .as_ref()
                    .map_or(String::new(), |l| l[i].to_string()),
                well.formation[i].clone(),
                well.name.clone(),
                num(well.depth[i]),
            ];
            rec.extend(well.channels.iter().map(|c| num(c[i])));
            w.write_record(&rec).map_err(io)?;
        }
    }
    w.flush()
        .map_err(|e| Error::Format(format!("csv flush failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "Facies,Formation,Well Name,Depth,GR,ILD_log10,DeltaPHI,PHIND,PE,NM_M,RELPOS\n";

    #[test]
    fn two_rows_one_well() {
        let text = format!("{HEADER}3,A1 SH,SHRIMPLIN,2793.5,77.45,0.664,9.9,11.915,4.6,1,1\n3,A1 SH,SHRIMPLIN,2793,78.26,0.661,14.2,12.565,4.1,1,0.979\n");
        let wells = parse_csv_bytes(text.as_bytes(), CsvOptions::default()).unwrap();
        assert_eq!(wells.len(), 1);
        let w = &wells[0];
        assert_eq!(w.len(), 2);
        assert_eq!(w.depth, vec![2793.0, 2793.5]);
        assert_eq!(w.channel("GR").unwrap(), &[78.26, 77.45]);
        assert_eq!(w.labels, Some(vec![3, 3]));
        assert_eq!(w.formation[0], "A1 SH");
    }

    #[test]
    fn groups_wells() {
        let text = format!(
            "{HEADER}1,F,A,1,1,1,1,1,1,1,1\n2,F,B,1,1,1,1,1,1,1,1\n3,F,A,2,1,1,1,1,1,1,1\n"
        );
        let wells = parse_csv_bytes(text.as_bytes(), CsvOptions::default()).unwrap();
        assert_eq!(
            wells.iter().map(|w| w.name.as_str()).collect::<Vec<_>>(),
            ["A", "B"]
        );
        assert_eq!(wells[0].len(), 2);
    }

    #[test]
    fn missing_pe_column() {
        let text = "Facies,Formation,Well Name,Depth,GR,ILD_log10,DeltaPHI,PHIND,NM_M,RELPOS\n1,F,A,1,1,1,1,1,1,1\n";
        let err = parse_csv_bytes(text.as_bytes(), CsvOptions::default()).unwrap_err();
        assert!(
            matches!(&err, Error::MissingColumn(c) if c == "PE"),
            "{err}"
        );
        let wells = parse_csv_bytes(
            text.as_bytes(),
            CsvOptions {
                allow_missing_pe: true,
            },
        )
        .unwrap();
        assert_eq!(wells[0].gap_count(PE), 1);
    }

    #[test]
    fn gaps_and_bad_cells() {
        let text = format!("{HEADER}1,F,A,1,1,1,1,1,,1,1\n");
        let wells = parse_csv_bytes(text.as_bytes(), CsvOptions::default()).unwrap();
        assert!(wells[0].channels[PE][0].is_nan());

        let text = format!("{HEADER}1,F,A,1,1,1,1,1,1,1,1\n1,F,A,2,x,1,1,1,1,1,1\n");
        match parse_csv_bytes(text.as_bytes(), CsvOptions::default()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = format!("{HEADER}12,F,A,1,1,1,1,1,1,1,1\n");
        assert!(parse_csv_bytes(text.as_bytes(), CsvOptions::default()).is_err());
        let text = format!("{HEADER}1,F,A,1,1,1,1,1,1,1,1\n1,F,A,1,1,1,1,1,1,1,1\n");
        assert!(parse_csv_bytes(text.as_bytes(), CsvOptions::default()).is_err());
    }

    #[test]
    fn unlabeled_file() {
        let text =
            "Well Name,Depth,GR,ILD_log10,DeltaPHI,PHIND,PE,NM_M,RELPOS\nX,1,1,1,1,1,1,1,1\n";
        let wells = parse_csv_bytes(text.as_bytes(), CsvOptions::default()).unwrap();
        assert!(!wells[0].is_labeled());
    }
}
