use crate::error::{Error, Result};

pub const NUM_FACIES: usize = 9;

/// Short codes of facies 1..=9, in label order.
pub const FACIES_CODES: [&str; NUM_FACIES] =
    ["SS", "CSiS", "FSiS", "SiSh", "MS", "WS", "D", "PS", "BS"];

pub const FACIES_NAMES: [&str; NUM_FACIES] = [
    "Nonmarine sandstone",
    "Nonmarine coarse siltstone",
    "Nonmarine fine siltstone",
    "Marine siltstone and shale",
    "Mudstone (limestone)",
    "Wackestone (limestone)",
    "Dolomite",
    "Packstone-grainstone (limestone)",
    "Phylloid-algal bafflestone (limestone)",
];

/// The nine facies plus a symmetric "neighbour" relation used by the
/// adjacent-facies accuracy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaciesTable {
    /// `adjacent[a][b]` for 0-based facies indices.
    adjacent: [[bool; NUM_FACIES]; NUM_FACIES],
}

impl Default for FaciesTable {
    /// Neighbours are the facies directly before and after in label order.
    fn default() -> Self {
        let mut t = FaciesTable::empty();
        for f in 1..NUM_FACIES {
            t.adjacent[f - 1][f] = true;
            t.adjacent[f][f - 1] = true;
        }
        t
    }
}

impl FaciesTable {
    /// A table where no facies has neighbours (adjacent accuracy == accuracy).
    pub fn empty() -> Self {
        FaciesTable {
            adjacent: [[false; NUM_FACIES]; NUM_FACIES],
        }
    }

    /// Builds a table from `(facies, neighbours)` entries. Facies may be given
    /// by code (`"WS"`) or label (`"6"`). The relation is symmetrized.
    pub fn from_entries<'a, I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, Vec<&'a str>)>,
    {
        let mut t = FaciesTable::empty();
        for (key, neighbours) in entries {
            let a = facies_index(key)?;
            for n in neighbours {
                let b = facies_index(n)?;
                if a == b {
                    return Err(Error::Config(format!(
                        "facies {} cannot be its own neighbour",
                        FACIES_CODES[a]
                    )));
                }
                t.adjacent[a][b] = true;
                t.adjacent[b][a] = true;
            }
        }
        Ok(t)
    }

    /// Parses an adjacency document, one `FACIES: NEIGHBOUR NEIGHBOUR ...`
    /// line per facies. `#` starts a comment; neighbours may be separated by
    /// spaces or commas.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(':').ok_or_else(|| Error::Parse {
                row: i + 1,
                msg: format!("expected `FACIES: NEIGHBOURS`, got `{line}`"),
            })?;
            let neighbours = rest
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            entries.push((key.trim(), neighbours));
        }
        FaciesTable::from_entries(entries)
    }

    /// Neighbour test on 1-based facies labels.
    pub fn is_adjacent(&self, a: u8, b: u8) -> bool {
        self.adjacent[a as usize - 1][b as usize - 1]
    }

    /// 1-based labels adjacent to `f`.
    pub fn neighbours(&self, f: u8) -> Vec<u8> {
        (1..=NUM_FACIES as u8)
            .filter(|&g| self.is_adjacent(f, g))
            .collect()
    }

    /// Serializes in the format accepted by [`FaciesTable::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in 1..=NUM_FACIES as u8 {
            let n: Vec<&str> = self
                .neighbours(f)
                .iter()
                .map(|&g| FACIES_CODES[g as usize - 1])
                .collect();
            out.push_str(&format!(
                "{}: {}\n",
                FACIES_CODES[f as usize - 1],
                n.join(" ")
            ));
        }
        out
    }
}

/// 0-based index of a facies given by code (case-insensitive) or 1-based label.
pub fn facies_index(token: &str) -> Result<usize> {
    let token = token.trim();
    if let Ok(n) = token.parse::<usize>() {
        if (1..=NUM_FACIES).contains(&n) {
            return Ok(n - 1);
        }
    }
    FACIES_CODES
        .iter()
        .position(|c| c.eq_ignore_ascii_case(token))
        .ok_or_else(|| Error::Config(format!("unknown facies `{token}`")))
}

pub fn facies_code(label: u8) -> &'static str {
    FACIES_CODES[label as usize - 1]
}
