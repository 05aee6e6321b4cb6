//! JSON and CSV interchange formats. Complex numbers are always written as
//! `{re, im}` objects.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::beamform::{ComponentSet, SynthesisMethod, SynthesisResult};
use crate::coarray::{
    difference_coarray, redundancy, sum_coarray, CoArrayKind, CoArraySummary, RedundancyPattern,
};
use crate::error::{Error, RankAttempt, Result};
use crate::geometry::{ActiveArrayPair, ArrayConfig};
use crate::linalg::CMatrix;
use crate::manifold::MeasurementBatch;
use crate::mra::{MraSolution, SearchStats};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Cx {
    fn from(z: C64) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

impl From<Cx> for C64 {
    fn from(z: Cx) -> Self {
        C64::new(z.re, z.im)
    }
}

pub fn to_cx(v: &[C64]) -> Vec<Cx> {
    v.iter().map(|&z| z.into()).collect()
}

pub fn from_cx(v: &[Cx]) -> Vec<C64> {
    v.iter().map(|&z| z.into()).collect()
}

/// `#[serde(with)]` adapter for a single complex value.
pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        Cx::from(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        Cx::deserialize(d).map(C64::from)
    }
}

/// `#[serde(with)]` adapter for complex vectors.
pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        to_cx(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        Vec::<Cx>::deserialize(d).map(|v| from_cx(&v))
    }
}

/// `#[serde(with)]` adapter for optional complex vectors.
pub mod complex_opt_vec {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &Option<Vec<C64>>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.as_deref().map(to_cx).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Vec<C64>>, D::Error> {
        Option::<Vec<Cx>>::deserialize(d).map(|v| v.map(|v| from_cx(&v)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryMeta {
    pub generator: String,
    #[serde(default)]
    pub params: BTreeMap<String, u64>,
}

/// Tx and Rx positions; a shared array has `tx == rx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryFile {
    pub tx: ArrayConfig,
    pub rx: ArrayConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<GeometryMeta>,
}

impl GeometryFile {
    pub fn new(pair: &ActiveArrayPair, meta: Option<GeometryMeta>) -> Self {
        GeometryFile {
            tx: pair.tx().clone(),
            rx: pair.rx().clone(),
            meta,
        }
    }

    pub fn pair(&self) -> ActiveArrayPair {
        ActiveArrayPair::new(self.tx.clone(), self.rx.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: u64,
    pub den: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoArrayReport {
    pub kind: CoArrayKind,
    pub positions: Vec<i64>,
    pub multiplicities: Vec<u64>,
    pub contiguous: bool,
    pub contiguous_prefix_len: usize,
    pub redundancy: Option<RationalJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl CoArrayReport {
    fn from_summary(
        s: CoArraySummary,
        redundancy: Option<RationalJson>,
        reason: Option<String>,
    ) -> Self {
        CoArrayReport {
            kind: s.kind,
            positions: s.positions,
            multiplicities: s.multiplicities,
            contiguous: s.contiguous,
            contiguous_prefix_len: s.contiguous_prefix_len,
            redundancy,
            reason,
        }
    }

    pub fn sum(pair: &ActiveArrayPair) -> Self {
        let (r, reason) = match redundancy(pair) {
            Ok(r) => (
                Some(RationalJson {
                    num: *r.numer(),
                    den: *r.denom(),
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        };
        Self::from_summary(sum_coarray(pair), r, reason)
    }

    /// Difference co-array of the Rx array. Redundancy is defined for the sum
    /// co-array only.
    pub fn difference(config: &ArrayConfig) -> Self {
        Self::from_summary(
            difference_coarray(config),
            None,
            Some("redundancy is reported for the sum co-array only".into()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MraSolutionFile {
    pub n: usize,
    pub aperture: usize,
    pub coarray_size: usize,
    pub configs: Vec<Vec<u32>>,
    pub complete: bool,
    pub aperture_upper_bound: usize,
    pub stats: StatsJson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsJson {
    pub nodes: u64,
    pub wall_time_ms: f64,
}

impl From<SearchStats> for StatsJson {
    fn from(s: SearchStats) -> Self {
        StatsJson {
            nodes: s.nodes,
            wall_time_ms: s.wall_time_ms,
        }
    }
}

impl From<&MraSolution> for MraSolutionFile {
    fn from(s: &MraSolution) -> Self {
        MraSolutionFile {
            n: s.n_sensors,
            aperture: s.aperture,
            coarray_size: s.coarray_size,
            configs: s.configs.iter().map(|c| c.positions().to_vec()).collect(),
            complete: s.complete,
            aperture_upper_bound: s.aperture_upper_bound,
            stats: s.stats.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentJson {
    #[serde(with = "complex_vec")]
    pub w_tx: Vec<C64>,
    #[serde(with = "complex_vec")]
    pub w_rx: Vec<C64>,
}

/// Component images, one entry per `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSetFile {
    pub q: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    pub components: Vec<ComponentJson>,
}

impl From<&ComponentSet> for ComponentSetFile {
    fn from(c: &ComponentSet) -> Self {
        ComponentSetFile {
            q: c.q(),
            n_tx: c.n_tx(),
            n_rx: c.n_rx(),
            components: (0..c.q())
                .map(|q| {
                    let w = c.component(q);
                    ComponentJson {
                        w_tx: w.w_tx,
                        w_rx: w.w_rx,
                    }
                })
                .collect(),
        }
    }
}

impl ComponentSetFile {
    pub fn to_components(&self) -> Result<ComponentSet> {
        if self.components.len() != self.q {
            return Err(Error::invalid(format!(
                "component file declares q = {} but lists {} components",
                self.q,
                self.components.len()
            )));
        }
        for c in &self.components {
            if c.w_tx.len() != self.n_tx || c.w_rx.len() != self.n_rx {
                return Err(Error::invalid("component weight length mismatch"));
            }
        }
        let w_tx = CMatrix::from_fn(self.n_tx, self.q, |j, q| self.components[q].w_tx[j]);
        let w_rx = CMatrix::from_fn(self.n_rx, self.q, |i, q| self.components[q].w_rx[i]);
        ComponentSet::new(w_tx, w_rx)
    }
}

/// Desired sum co-array weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoArrayWeightsFile {
    #[serde(with = "complex_vec")]
    pub w_sigma: Vec<C64>,
}

/// A synthesis target: explicit weights, or the multiplicities of a co-array
/// report (uniform physical weights on that array).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TargetFile {
    Weights(CoArrayWeightsFile),
    Report(CoArrayReport),
}

impl TargetFile {
    pub fn weights(&self) -> Vec<C64> {
        match self {
            TargetFile::Weights(w) => w.w_sigma.clone(),
            TargetFile::Report(r) => r
                .multiplicities
                .iter()
                .map(|&m| C64::new(m as f64, 0.0))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisReport {
    pub method: SynthesisMethod,
    pub q: usize,
    pub residual: f64,
    pub coarray_positions: Vec<i64>,
    #[serde(with = "complex_vec")]
    pub coarray_weights: Vec<C64>,
    pub attempts: Vec<RankAttempt>,
    pub components: ComponentSetFile,
}

impl SynthesisReport {
    pub fn new(result: &SynthesisResult, pattern: &RedundancyPattern) -> Self {
        SynthesisReport {
            method: result.method,
            q: result.components.q(),
            residual: result.residual,
            coarray_positions: pattern.positions().to_vec(),
            coarray_weights: result.coarray_weights.clone(),
            attempts: result.attempts.clone(),
            components: (&result.components).into(),
        }
    }
}

/// `vec(Y)` with interleaved `{re, im}` entries in column-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDump {
    pub rows: usize,
    pub cols: usize,
    pub layout: String,
    pub sigma2: f64,
    pub seed: u64,
    pub stream: u64,
    #[serde(with = "complex_vec")]
    pub data: Vec<C64>,
}

impl From<&MeasurementBatch> for MeasurementDump {
    fn from(b: &MeasurementBatch) -> Self {
        MeasurementDump {
            rows: b.y.nrows(),
            cols: b.y.ncols(),
            layout: "column_major".into(),
            sigma2: b.sigma2,
            seed: b.seed,
            stream: b.stream,
            data: b.y.as_slice().to_vec(),
        }
    }
}

impl MeasurementDump {
    pub fn matrix(&self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::invalid(
                "measurement dump size does not match its dimensions",
            ));
        }
        Ok(CMatrix::from_column_slice(self.rows, self.cols, &self.data))
    }
}

pub const BEAMPATTERN_CSV_HEADER: &str = "u,re,im,mag2";

pub fn beampattern_csv(us: &[f64], values: &[C64]) -> String {
    assert_eq!(us.len(), values.len());
    let mut out = String::with_capacity(48 * us.len());
    out.push_str(BEAMPATTERN_CSV_HEADER);
    out.push('\n');
    for (u, z) in us.iter().zip(values) {
        writeln!(out, "{u:e},{:e},{:e},{:e}", z.re, z.im, z.norm_sqr()).expect("write to string");
    }
    out
}

/// Parses the `u,re,im,mag2` CSV back into grid points and complex values.
pub fn parse_beampattern_csv(text: &str) -> Result<(Vec<f64>, Vec<C64>)> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == BEAMPATTERN_CSV_HEADER => {}
        _ => {
            return Err(Error::invalid(
                "beampattern CSV must start with u,re,im,mag2",
            ))
        }
    }
    let mut us = Vec::new();
    let mut vals = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("CSV row {}: {e}", k + 2)))?;
        if f.len() != 4 {
            return Err(Error::invalid(format!(
                "CSV row {} has {} fields",
                k + 2,
                f.len()
            )));
        }
        us.push(f[0]);
        vals.push(C64::new(f[1], f[2]));
    }
    Ok((us, vals))
}
