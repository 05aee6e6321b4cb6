//! Sum and difference co-arrays, redundancy, and the redundancy pattern that
//! maps physical Tx-Rx pairs onto virtual sensors.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ActiveArrayPair, ArrayConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoArrayKind {
    Sum,
    Difference,
}

/// Virtual array positions together with how many physical pairs land on each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoArraySummary {
    pub kind: CoArrayKind,
    pub positions: Vec<i64>,
    pub multiplicities: Vec<u64>,
    pub contiguous: bool,
    /// Largest `L` with `[0 : L-1]` contained in the positions.
    pub contiguous_prefix_len: usize,
}

impl CoArraySummary {
    fn from_counts(kind: CoArrayKind, offset: i64, counts: &[u64]) -> Self {
        let (positions, multiplicities): (Vec<i64>, Vec<u64>) = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as i64 + offset, c))
            .unzip();
        let contiguous = positions.len() == counts.len();
        let contiguous_prefix_len = {
            let zero = (-offset) as usize;
            counts[zero..].iter().take_while(|&&c| c > 0).count()
        };
        CoArraySummary {
            kind,
            positions,
            multiplicities,
            contiguous,
            contiguous_prefix_len,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.multiplicities.iter().sum()
    }

    pub fn max_position(&self) -> i64 {
        *self.positions.last().expect("co-array is never empty")
    }
}

pub fn sum_coarray(pair: &ActiveArrayPair) -> CoArraySummary {
    let size = (pair.tx().aperture() + pair.rx().aperture()) as usize + 1;
    let mut counts = vec![0u64; size];
    for &t in pair.tx().positions() {
        for &r in pair.rx().positions() {
            counts[(t + r) as usize] += 1;
        }
    }
    CoArraySummary::from_counts(CoArrayKind::Sum, 0, &counts)
}

/// Differences `d1 − d2` over ordered pairs, so the zero lag has weight `N`.
pub fn difference_coarray(config: &ArrayConfig) -> CoArraySummary {
    let a = config.aperture() as i64;
    let mut counts = vec![0u64; 2 * a as usize + 1];
    for &p in config.positions() {
        for &q in config.positions() {
            counts[(p as i64 - q as i64 + a) as usize] += 1;
        }
    }
    CoArraySummary::from_counts(CoArrayKind::Difference, -a, &counts)
}

/// Exact redundancy of a pair whose sum co-array is contiguous.
pub fn redundancy(pair: &ActiveArrayPair) -> Result<Ratio<u64>> {
    let sum = sum_coarray(pair);
    if !sum.contiguous {
        return Err(Error::UnsupportedConfiguration(format!(
            "sum co-array has holes (contiguous prefix {} of span {})",
            sum.contiguous_prefix_len,
            sum.max_position() + 1
        )));
    }
    let n_sigma = sum.len() as u64;
    let (nt, nr) = (pair.n_tx() as u64, pair.n_rx() as u64);
    Ok(if pair.is_fully_overlapping() {
        Ratio::new(nt * (nt + 1), 2 * n_sigma)
    } else {
        Ratio::new(nt * nr, n_sigma)
    })
}

/// Redundancy `N(N+1) / (2|D+D|)` of each member of a fully overlapping
/// family, for every `N` in `range`.
pub fn asymptotic_redundancy_estimate<F>(
    family: F,
    range: impl IntoIterator<Item = usize>,
) -> Result<Vec<(usize, Ratio<u64>)>>
where
    F: Fn(usize) -> Result<ArrayConfig>,
{
    range
        .into_iter()
        .map(|n| {
            let d = family(n)?;
            if d.len() != n {
                return Err(Error::invalid(format!(
                    "family member for N = {n} has {} sensors",
                    d.len()
                )));
            }
            Ok((n, redundancy(&ActiveArrayPair::shared(d))?))
        })
        .collect()
}

/// The binary map `Υ` from virtual sensors (rows) to Tx-Rx pairs (columns).
///
/// Column `i` pairs Tx sensor `i / N_rx` with Rx sensor `i % N_rx`, which is
/// the ordering of `w_tx ⊗ w_rx` and of `vec(W)` for an `N_rx × N_tx` matrix.
/// Each column holds exactly one nonzero, so the pattern is stored as the row
/// index of every column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedundancyPattern {
    n_tx: usize,
    n_rx: usize,
    positions: Vec<i64>,
    multiplicities: Vec<u64>,
    row_of_col: Vec<usize>,
}

impl RedundancyPattern {
    pub fn rows(&self) -> usize {
        self.positions.len()
    }

    pub fn cols(&self) -> usize {
        self.row_of_col.len()
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    /// Sum co-array positions indexing the rows.
    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.multiplicities
    }

    pub fn row_of_col(&self) -> &[usize] {
        &self.row_of_col
    }

    pub fn col_index(&self, tx: usize, rx: usize) -> usize {
        tx * self.n_rx + rx
    }

    pub fn row_of(&self, tx: usize, rx: usize) -> usize {
        self.row_of_col[self.col_index(tx, rx)]
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.cols()]; self.rows()];
        for (c, &r) in self.row_of_col.iter().enumerate() {
            m[r][c] = 1;
        }
        m
    }

    /// `Υ x` for a vector over Tx-Rx pairs.
    pub fn apply<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::AddAssign,
    {
        assert_eq!(x.len(), self.cols());
        let mut out = vec![T::default(); self.rows()];
        for (c, &r) in self.row_of_col.iter().enumerate() {
            out[r] += x[c];
        }
        out
    }

    /// `Υᵀ y` for a vector over virtual sensors.
    pub fn apply_transpose<T: Copy>(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows());
        self.row_of_col.iter().map(|&r| y[r]).collect()
    }
}

pub fn redundancy_pattern(pair: &ActiveArrayPair) -> RedundancyPattern {
    let sum = sum_coarray(pair);
    let span = sum.max_position() as usize + 1;
    let mut row_at = vec![usize::MAX; span];
    for (row, &p) in sum.positions.iter().enumerate() {
        row_at[p as usize] = row;
    }
    let mut row_of_col = Vec::with_capacity(pair.n_tx() * pair.n_rx());
    for &t in pair.tx().positions() {
        for &r in pair.rx().positions() {
            row_of_col.push(row_at[(t + r) as usize]);
        }
    }
    RedundancyPattern {
        n_tx: pair.n_tx(),
        n_rx: pair.n_rx(),
        positions: sum.positions,
        multiplicities: sum.multiplicities,
        row_of_col,
    }
}
