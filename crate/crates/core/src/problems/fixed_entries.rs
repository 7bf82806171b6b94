use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

/// Prescribed off-diagonal correlations `v_i^T v_j = q_ij`, stored with
/// `i > j` (0-based).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FixedEntrySet {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl FixedEntrySet {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: BTreeMap::new(),
        }
    }

    /// Adds `(i, j, q)` with 0-based indices in either order.
    pub fn insert(&mut self, i: usize, j: usize, q: f64) -> Result<()> {
        if i == j || i >= self.n || j >= self.n {
            return Err(Error::InvalidParameter(format!(
                "fixed entry ({i}, {j}) must be off-diagonal and below {}",
                self.n
            )));
        }
        if !(-1.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("fixed value {q} outside [-1, 1]")));
        }
        let key = (i.max(j), i.min(j));
        if self.entries.insert(key, q).is_some() {
            return Err(Error::InvalidParameter(format!("duplicate fixed entry ({i}, {j})")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(i, j, q)` with `i > j`, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &q)| (i, j, q))
    }

    /// For each row `i`, up to `per_row` distinct partners `j > i`, all with
    /// target value `q`.
    pub fn sample_zero_pattern<R: Rng + ?Sized>(n: usize, per_row: usize, q: f64, rng: &mut R) -> Result<Self> {
        let mut set = Self::new(n);
        for i in 0..n {
            let avail = n - 1 - i;
            let k = per_row.min(avail);
            if k == 0 {
                continue;
            }
            for off in sample(rng, avail, k).into_iter() {
                set.insert(i, i + 1 + off, q)?;
            }
        }
        Ok(set)
    }

    /// Reads `i j q` lines with 1-based indices; `#` starts a comment.
    pub fn read<R: Read>(n: usize, reader: R) -> Result<Self> {
        let mut set = Self::new(n);
        for (ln, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let f: Vec<&str> = body.split_whitespace().collect();
            let err = |m: &str| Error::Parse {
                line: ln + 1,
                msg: m.to_string(),
            };
            if f.len() != 3 {
                return Err(err("expected 'i j q'"));
            }
            let i: usize = f[0].parse().map_err(|_| err("bad row index"))?;
            let j: usize = f[1].parse().map_err(|_| err("bad column index"))?;
            let q: f64 = f[2].parse().map_err(|_| err("bad value"))?;
            if i == 0 || j == 0 {
                return Err(err("indices start at 1"));
            }
            set.insert(i - 1, j - 1, q).map_err(|e| err(&e.to_string()))?;
        }
        Ok(set)
    }

    pub fn read_file(n: usize, path: impl AsRef<Path>) -> Result<Self> {
        Self::read(n, std::fs::File::open(path)?)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# i j q (1-based)")?;
        for (i, j, q) in self.iter() {
            writeln!(w, "{} {} {q:e}", i + 1, j + 1)?;
        }
        Ok(())
    }

    /// Largest index referenced plus one.
    pub fn max_index(&self) -> usize {
        self.iter().map(|(i, _, _)| i + 1).max().unwrap_or(0)
    }
}
