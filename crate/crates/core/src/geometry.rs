//! Physical array geometries on the half-wavelength grid.
//!
//! Positions are exact non-negative integers in units of `λ/2`. Every
//! constructor returns a normalized configuration: strictly increasing,
//! non-empty, and starting at zero.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A normalized linear array: sorted, duplicate-free integer positions with
/// the first sensor at the origin.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ArrayConfig(Vec<u32>);

impl ArrayConfig {
    /// Builds a configuration from arbitrary positions. Duplicates are merged
    /// and the result is shifted so that its smallest element is zero.
    pub fn from_positions<I: IntoIterator<Item = u32>>(positions: I) -> Result<Self> {
        let set: BTreeSet<u32> = positions.into_iter().collect();
        let min = *set
            .iter()
            .next()
            .ok_or_else(|| Error::invalid("array must contain at least one sensor"))?;
        Ok(ArrayConfig(set.into_iter().map(|p| p - min).collect()))
    }

    /// Accepts positions that are already normalized, rejecting anything else.
    pub fn new(positions: Vec<u32>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("array must contain at least one sensor"));
        }
        if positions[0] != 0 {
            return Err(Error::invalid("first sensor must be at position 0"));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("positions must be strictly increasing"));
        }
        Ok(ArrayConfig(positions))
    }

    pub fn positions(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false for a valid configuration; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn aperture(&self) -> u32 {
        *self.0.last().expect("non-empty by construction")
    }

    pub fn contains(&self, p: u32) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    /// The mirror image `max D - D`.
    pub fn mirrored(&self) -> ArrayConfig {
        let a = self.aperture();
        ArrayConfig(self.0.iter().rev().map(|&p| a - p).collect())
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.mirrored()
    }

    /// The lexicographically smaller of the configuration and its mirror.
    pub fn canonical(&self) -> ArrayConfig {
        let m = self.mirrored();
        if m < *self {
            m
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for ArrayConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

impl<'de> Deserialize<'de> for ArrayConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        ArrayConfig::from_positions(v).map_err(serde::de::Error::custom)
    }
}

/// How many sensors the transmit and receive arrays share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapCategory {
    FullyOverlapping,
    PartiallyOverlapping,
    NonOverlapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OverlapReport {
    pub category: OverlapCategory,
    pub n_union: usize,
    pub n_intersection: usize,
}

/// A transmit array and a receive array on a common grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActiveArrayPair {
    tx: ArrayConfig,
    rx: ArrayConfig,
}

impl ActiveArrayPair {
    pub fn new(tx: ArrayConfig, rx: ArrayConfig) -> Self {
        ActiveArrayPair { tx, rx }
    }

    /// Both arrays at the same positions (transceivers only).
    pub fn shared(d: ArrayConfig) -> Self {
        ActiveArrayPair {
            tx: d.clone(),
            rx: d,
        }
    }

    pub fn tx(&self) -> &ArrayConfig {
        &self.tx
    }

    pub fn rx(&self) -> &ArrayConfig {
        &self.rx
    }

    pub fn n_tx(&self) -> usize {
        self.tx.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx.len()
    }

    pub fn is_fully_overlapping(&self) -> bool {
        self.tx == self.rx
    }

    /// Swaps the roles of the two arrays.
    pub fn swapped(&self) -> Self {
        ActiveArrayPair {
            tx: self.rx.clone(),
            rx: self.tx.clone(),
        }
    }
}

pub fn overlap_category(pair: &ActiveArrayPair) -> OverlapReport {
    let tx = pair.tx.positions();
    let rx = pair.rx.positions();
    let (mut i, mut j, mut n_intersection) = (0, 0, 0);
    while i < tx.len() && j < rx.len() {
        match tx[i].cmp(&rx[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n_intersection += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let n_union = tx.len() + rx.len() - n_intersection;
    let category = if pair.tx == pair.rx {
        OverlapCategory::FullyOverlapping
    } else if n_intersection == 1 {
        // both arrays contain the origin, so the intersection is exactly {0}
        OverlapCategory::NonOverlapping
    } else {
        OverlapCategory::PartiallyOverlapping
    };
    OverlapReport {
        category,
        n_union,
        n_intersection,
    }
}

pub fn ula(n: usize) -> Result<ArrayConfig> {
    if n == 0 {
        return Err(Error::invalid("ULA needs at least one sensor"));
    }
    Ok(ArrayConfig((0..n as u32).collect()))
}

/// Dense segment `[0:n1-1]` followed by a sparse segment with spacing
/// `n1 + 1` and `n2` elements, starting at `n1`.
pub fn nested(n1: usize, n2: usize) -> Result<ArrayConfig> {
    if n1 + n2 == 0 {
        return Err(Error::invalid("nested array needs n1 + n2 >= 1"));
    }
    ArrayConfig::from_positions(nested_raw(n1 as u32, n2 as u32))
}

fn nested_raw(n1: u32, n2: u32) -> impl Iterator<Item = u32> {
    let dense = 0..n1;
    let sparse = (0..n2).map(move |k| k * (n1 + 1) + n1);
    dense.chain(sparse)
}

/// `G ∪ (max G - G + offset)`.
pub fn symmetric_from_generator(g: &ArrayConfig, offset: u32) -> ArrayConfig {
    let a = g.aperture();
    let mirror = g.positions().iter().map(|&p| a - p + offset);
    ArrayConfig::from_positions(g.positions().iter().copied().chain(mirror))
        .expect("generator is non-empty")
}

/// Concatenated nested array: the nested array joined to its mirror at
/// offset `n1`.
pub fn cna(n1: usize, n2: usize) -> Result<ArrayConfig> {
    if n1 + n2 == 0 {
        return Err(Error::invalid("CNA needs n1 + n2 >= 1"));
    }
    let (a, b) = (n1 as u32, n2 as u32);
    let tail = (0..a).map(move |p| p + (a + 1) * b);
    ArrayConfig::from_positions(nested_raw(a, b).chain(tail))
}

/// Parameters of the minimum-redundancy symmetric nested array for `n`
/// sensors, `n = 4m + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricNaParams {
    pub n1: usize,
    pub n2: usize,
    pub offset: usize,
    pub alpha: i64,
    pub n_total: usize,
}

impl SymmetricNaParams {
    pub fn closed_form(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("symmetric nested array needs n >= 2"));
        }
        let k = (n % 4) as i64;
        let alpha = (k + 1) % 4 - 1;
        let ni = n as i64;
        debug_assert_eq!((ni - alpha) % 4, 0);
        debug_assert_eq!((ni + alpha) % 2, 0);
        let n1 = ((ni - alpha) / 4) as usize;
        let n2 = ((ni + alpha) / 2) as usize;
        Ok(SymmetricNaParams {
            n1,
            n2,
            offset: n1,
            alpha,
            n_total: n,
        })
    }

    /// Number of elements in the (contiguous) sum co-array,
    /// `(N² + 6N − 7)/4 − (α − 1)²/4 + 1`.
    pub fn sum_coarray_size(&self) -> usize {
        let n = self.n_total as i64;
        let num = n * n + 6 * n - 7 - (self.alpha - 1) * (self.alpha - 1);
        debug_assert_eq!(num % 4, 0);
        (num / 4 + 1) as usize
    }
}

pub fn symmetric_na_min_redundancy(n: usize) -> Result<(SymmetricNaParams, ArrayConfig)> {
    let params = SymmetricNaParams::closed_form(n)?;
    let array = cna(params.n1, params.n2)?;
    Ok((params, array))
}

/// Non-redundant pair with a dense receive ULA and a transmit ULA of spacing
/// `n_rx`; the sum co-array is exactly `[0 : n_tx·n_rx − 1]`.
pub fn nonoverlapping_mra(n_tx: usize, n_rx: usize) -> Result<ActiveArrayPair> {
    if n_tx == 0 || n_rx == 0 {
        return Err(Error::invalid("sensor counts must be positive"));
    }
    let tx = ArrayConfig((0..n_tx as u32).map(|k| k * n_rx as u32).collect());
    let rx = ula(n_rx)?;
    Ok(ActiveArrayPair::new(tx, rx))
}
