use super::{Well, CHANNELS, NUM_CHANNELS, PE};
use crate::error::{Error, Result};

const MAGIC: &str = "# faciesnet standardizer v1";
const MIN_STD: f64 = 1e-8;

/// Per-channel z-scoring fitted on training wells.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub channels: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity() -> Self {
        Standardizer {
            channels: CHANNELS.iter().map(|s| s.to_string()).collect(),
            mean: vec![0.0; NUM_CHANNELS],
            std: vec![1.0; NUM_CHANNELS],
        }
    }

    /// Population mean and standard deviation over every non-gap sample of
    /// the given wells. Near-constant channels (std < 1e-8) get std 1, and a
    /// channel with no samples at all gets mean 0.
    pub fn fit(wells: &[Well]) -> Result<Self> {
        if wells.is_empty() {
            return Err(Error::Config(
                "cannot fit a standardizer on zero wells".into(),
            ));
        }
        let mut mean = vec![0.0; NUM_CHANNELS];
        let mut std = vec![1.0; NUM_CHANNELS];
        for c in 0..NUM_CHANNELS {
            let values = || {
                wells
                    .iter()
                    .flat_map(|w| w.channels[c].iter())
                    .filter(|v| !v.is_nan())
            };
            let n = values().count();
            if n == 0 {
                continue;
            }
            let m = values().sum::<f64>() / n as f64;
            let var = values().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            mean[c] = m;
            let s = var.sqrt();
            std[c] = if s < MIN_STD { 1.0 } else { s };
        }
        Ok(Standardizer {
            channels: CHANNELS.iter().map(|s| s.to_string()).collect(),
            mean,
            std,
        })
    }

    fn check_channels(&self) -> Result<()> {
        if self.channels.len() != NUM_CHANNELS
            || self.channels.iter().zip(CHANNELS).any(|(a, b)| a != b)
        {
            return Err(Error::Mismatch(format!(
                "standardizer channels {:?} do not match data channels {:?}",
                self.channels, CHANNELS
            )));
        }
        Ok(())
    }

    /// `(x - mean) / std` per channel. Gaps stay gaps; labels are untouched.
    pub fn apply(&self, well: &Well) -> Result<Well> {
        self.check_channels()?;
        let mut out = well.clone();
        for (c, ch) in out.channels.iter_mut().enumerate() {
            ch.iter_mut()
                .for_each(|v| *v = (*v - self.mean[c]) / self.std[c]);
        }
        Ok(out)
    }

    pub fn invert(&self, well: &Well) -> Result<Well> {
        self.check_channels()?;
        let mut out = well.clone();
        for (c, ch) in out.channels.iter_mut().enumerate() {
            ch.iter_mut()
                .for_each(|v| *v = *v * self.std[c] + self.mean[c]);
        }
        Ok(out)
    }

    /// One `channel,mean,std` line per channel after a format header.
    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC}\nchannel,mean,std\n");
        for ((c, m), d) in self.channels.iter().zip(&self.mean).zip(&self.std) {
            s.push_str(&format!("{c},{m},{d}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == MAGIC => {}
            _ => {
                return Err(Error::Format(
                    "not a faciesnet standardizer document".into(),
                ))
            }
        }
        match lines.next() {
            Some((_, l)) if l.trim() == "channel,mean,std" => {}
            _ => return Err(Error::Format("standardizer column header missing".into())),
        }
        let mut st = Standardizer {
            channels: vec![],
            mean: vec![],
            std: vec![],
        };
        for (i, line) in lines {
            let row = i + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 || fields[0].is_empty() {
                return Err(Error::Parse {
                    row,
                    msg: "expected `channel,mean,std`".into(),
                });
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row,
                        msg: format!("`{s}` is not a finite number"),
                    })
            };
            let (m, d) = (num(fields[1])?, num(fields[2])?);
            if d <= 0.0 {
                return Err(Error::Parse {
                    row,
                    msg: format!("standard deviation {d} must be positive"),
                });
            }
            st.channels.push(fields[0].to_string());
            st.mean.push(m);
            st.std.push(d);
        }
        if st.channels.is_empty() {
            return Err(Error::Format("standardizer lists no channels".into()));
        }
        Ok(st)
    }
}

/// Standardizes wells for the network. With `impute_pe`, PE gaps are filled
/// with the training mean (0 after standardization). Any other remaining gap
/// is an error.
pub fn prepare_wells(
    wells: &[Well],
    standardizer: &Standardizer,
    impute_pe: bool,
) -> Result<Vec<Well>> {
    wells
        .iter()
        .map(|w| {
            let mut s = standardizer.apply(w)?;
            if impute_pe {
                s.channels[PE]
                    .iter_mut()
                    .filter(|v| v.is_nan())
                    .for_each(|v| *v = 0.0);
            }
            for (c, name) in CHANNELS.iter().enumerate() {
                let gaps = s.gap_count(c);
                if gaps > 0 {
                    let hint = if c == PE {
                        "; pass --allow-missing-pe to impute"
                    } else {
                        ""
                    };
                    return Err(Error::Format(format!(
                        "well `{}` has {gaps} missing {name} value(s){hint}",
                        w.name
                    )));
                }
            }
            Ok(s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::welldata::toy_well;

    fn channel_stats(wells: &[Well], c: usize) -> (f64, f64) {
        let v: Vec<f64> = wells.iter().flat_map(|w| w.channels[c].clone()).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        (m, s)
    }

    #[test]
    fn population_std() {
        let mut w = toy_well("A", &[1, 1, 1]);
        w.channels[0] = vec![1.0, 2.0, 3.0];
        w.channels[1] = vec![5.0, 5.0, 5.0];
        let s = Standardizer::fit(&[w]).unwrap();
        assert_eq!(s.mean[0], 2.0);
        assert!((s.std[0] - 0.816_496_580_927_726).abs() < 1e-12);
        assert_eq!((s.mean[1], s.std[1]), (5.0, 1.0));
    }

    #[test]
    fn fit_then_apply_is_unit() {
        let wells = vec![toy_well("A", &[1, 2, 3, 4]), toy_well("B", &[1, 1, 5])];
        let s = Standardizer::fit(&wells).unwrap();
        let out: Vec<Well> = wells.iter().map(|w| s.apply(w).unwrap()).collect();
        for c in 0..NUM_CHANNELS {
            let (m, d) = channel_stats(&out, c);
            assert!(
                m.abs() < 1e-6 && (d - 1.0).abs() < 1e-6,
                "channel {c}: {m} {d}"
            );
        }
        assert_eq!(out[0].labels, wells[0].labels);
        let twice = s.apply(&out[0]).unwrap();
        assert_ne!(twice, out[0]);
        let back = s.invert(&out[0]).unwrap();
        for (a, b) in back
            .channels
            .iter()
            .flatten()
            .zip(wells[0].channels.iter().flatten())
        {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(Standardizer::identity().apply(&wells[1]).unwrap(), wells[1]);
    }

    #[test]
    fn text_round_trip_and_errors() {
        let s = Standardizer::fit(&[toy_well("A", &[1, 2, 3])]).unwrap();
        assert_eq!(Standardizer::parse(&s.to_text()).unwrap(), s);
        assert!(Standardizer::parse("garbage").is_err());
        let bad = format!("{MAGIC}\nchannel,mean,std\nGR,1,0\n");
        assert!(Standardizer::parse(&bad).is_err());
        let other = format!("{MAGIC}\nchannel,mean,std\nSONIC,1,2\n");
        let st = Standardizer::parse(&other).unwrap();
        assert!(matches!(
            st.apply(&toy_well("A", &[1])),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn pe_imputation() {
        let mut w = toy_well("A", &[1, 2, 3]);
        w.channels[PE][1] = f64::NAN;
        let s = Standardizer::fit(std::slice::from_ref(&w)).unwrap();
        assert_eq!(s.mean[PE], (40.0 + 42.0) / 2.0);
        assert!(prepare_wells(std::slice::from_ref(&w), &s, false).is_err());
        let p = prepare_wells(&[w], &s, true).unwrap();
        assert_eq!(p[0].channels[PE][1], 0.0);
    }
}
