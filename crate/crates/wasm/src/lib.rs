//! Browser bindings for the interactive demo. Every export takes plain
//! values and returns a JSON string; failures come back as `{"error": ...}`.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use coarray_lab::beamform::{
    min_rank_synthesis, synthesized_beampattern, txrx_beampattern, u_grid, BeamWeights,
    MinRankOptions,
};
use coarray_lab::coarray::{redundancy_pattern, sum_coarray};
use coarray_lab::formats::{CoArrayReport, MraSolutionFile};
use coarray_lab::geometry::{self, overlap_category};
use coarray_lab::mra::{search_fully_overlapping, Budget};
use coarray_lab::{ActiveArrayPair, ArrayConfig, Error, C64};

/// Largest sensor count the demo will search.
pub const MAX_DEMO_SEARCH: usize = 14;
/// Largest aperture the demo will synthesize for.
pub const MAX_DEMO_APERTURE: u32 = 40;
/// Largest grid the demo will evaluate.
pub const MAX_DEMO_GRID: usize = 4096;

type DemoResult<T> = std::result::Result<T, String>;

fn respond<T: Serialize>(result: DemoResult<T>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v)
            .unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn parse_positions(text: &str) -> DemoResult<ArrayConfig> {
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u32>()
                .map_err(|_| format!("not a sensor position: {t:?}"))
        })
        .collect::<DemoResult<Vec<u32>>>()?;
    ArrayConfig::from_positions(values).map_err(err)
}

/// Preset geometry as comma-separated positions. `a` and `b` are the
/// parameters of the chosen kind (`n`, or `n1, n2`).
#[wasm_bindgen]
pub fn generate_geometry(kind: &str, a: u32, b: u32) -> String {
    respond(generate(kind, a as usize, b as usize))
}

fn generate(kind: &str, a: usize, b: usize) -> DemoResult<serde_json::Value> {
    let pair = match kind {
        "ula" => ActiveArrayPair::shared(geometry::ula(a).map_err(err)?),
        "nested" => ActiveArrayPair::shared(geometry::nested(a, b).map_err(err)?),
        "cna" => ActiveArrayPair::shared(geometry::cna(a, b).map_err(err)?),
        "sym-na" => {
            ActiveArrayPair::shared(geometry::symmetric_na_min_redundancy(a).map_err(err)?.1)
        }
        "nonoverlap-mra" => geometry::nonoverlapping_mra(a, b).map_err(err)?,
        other => return Err(format!("unknown geometry kind {other:?}")),
    };
    Ok(json!({
        "tx": pair.tx().positions(),
        "rx": pair.rx().positions(),
    }))
}

#[derive(Serialize)]
struct Explorer {
    tx: Vec<u32>,
    rx: Vec<u32>,
    overlap: geometry::OverlapReport,
    coarray: CoArrayReport,
    redundancy: Option<f64>,
}

/// Sum co-array, overlap class and redundancy of a Tx/Rx pair given as
/// position lists.
#[wasm_bindgen]
pub fn explore_coarray(tx: &str, rx: &str) -> String {
    respond(explore(tx, rx))
}

fn explore(tx: &str, rx: &str) -> DemoResult<Explorer> {
    let pair = ActiveArrayPair::new(parse_positions(tx)?, parse_positions(rx)?);
    let coarray = CoArrayReport::sum(&pair);
    let redundancy = coarray
        .redundancy
        .as_ref()
        .map(|r| r.num as f64 / r.den as f64);
    Ok(Explorer {
        tx: pair.tx().positions().to_vec(),
        rx: pair.rx().positions().to_vec(),
        overlap: overlap_category(&pair),
        coarray,
        redundancy,
    })
}

#[derive(Serialize)]
struct Comparison {
    u: Vec<f64>,
    ula_positions: Vec<u32>,
    ula_power: Vec<f64>,
    sparse_positions: Vec<u32>,
    sparse_uniform_power: Vec<f64>,
    sparse_synthesized_power: Vec<f64>,
    q: usize,
    residual: f64,
    attempts: Vec<coarray_lab::error::RankAttempt>,
}

/// Compares a uniform ULA with a fully overlapping sparse array of the same
/// aperture: the sparse array's single-shot uniform pattern and its
/// image-addition synthesis of the ULA's co-array weights.
#[wasm_bindgen]
pub fn compare_image_addition(positions: &str, grid: u32, seed: u32) -> String {
    respond(compare(positions, grid as usize, seed as u64))
}

fn power(values: &[C64]) -> Vec<f64> {
    values.iter().map(|z| z.norm_sqr()).collect()
}

fn compare(positions: &str, grid: usize, seed: u64) -> DemoResult<Comparison> {
    if !(2..=MAX_DEMO_GRID).contains(&grid) {
        return Err(format!("grid must lie in [2, {MAX_DEMO_GRID}]"));
    }
    let sparse = ActiveArrayPair::shared(parse_positions(positions)?);
    if sparse.tx().aperture() > MAX_DEMO_APERTURE {
        return Err(format!(
            "the demo synthesizes apertures up to {MAX_DEMO_APERTURE}"
        ));
    }
    if !sum_coarray(&sparse).contiguous {
        return Err("the sum co-array of this array has holes".into());
    }
    let ula =
        ActiveArrayPair::shared(geometry::ula(sparse.tx().aperture() as usize + 1).map_err(err)?);
    let target: Vec<C64> = sum_coarray(&ula)
        .multiplicities
        .iter()
        .map(|&m| C64::new(m as f64, 0.0))
        .collect();
    let us = u_grid(grid);
    let ones = |n: usize| vec![C64::new(1.0, 0.0); n];
    let ula_pattern = txrx_beampattern(
        &BeamWeights::new(ones(ula.n_tx()), ones(ula.n_rx())),
        &ula,
        &us,
    )
    .map_err(err)?;
    let uniform = txrx_beampattern(
        &BeamWeights::new(ones(sparse.n_tx()), ones(sparse.n_rx())),
        &sparse,
        &us,
    )
    .map_err(err)?;
    let opts = MinRankOptions {
        seed,
        ..MinRankOptions::default()
    };
    let result = min_rank_synthesis(&target, &redundancy_pattern(&sparse), &opts).map_err(err)?;
    let synthesized = synthesized_beampattern(&result.components, &sparse, &us).map_err(err)?;
    Ok(Comparison {
        u: us,
        ula_positions: ula.tx().positions().to_vec(),
        ula_power: power(&ula_pattern),
        sparse_positions: sparse.tx().positions().to_vec(),
        sparse_uniform_power: power(&uniform),
        sparse_synthesized_power: power(&synthesized),
        q: result.components.q(),
        residual: result.residual,
        attempts: result.attempts,
    })
}

/// Exact minimum-redundancy search for `n` fully overlapping sensors, with
/// mirror images listed alongside the canonical representatives.
#[wasm_bindgen]
pub fn search_mra(n: u32, max_nodes: u32) -> String {
    respond(search(n as usize, max_nodes as u64))
}

fn search(n: usize, max_nodes: u64) -> DemoResult<serde_json::Value> {
    if n > MAX_DEMO_SEARCH {
        return Err(format!(
            "the demo searches at most {MAX_DEMO_SEARCH} sensors"
        ));
    }
    let solution = match search_fully_overlapping(n, Budget::nodes(max_nodes)) {
        Ok(s) => s,
        Err(Error::PartialResult(s)) => *s,
        Err(e) => return Err(err(e)),
    };
    let all: Vec<Vec<u32>> = solution
        .with_mirrors()
        .iter()
        .map(|c| c.positions().to_vec())
        .collect();
    let mut value =
        serde_json::to_value(MraSolutionFile::from(&solution)).map_err(|e| e.to_string())?;
    value["with_mirrors"] = json!(all);
    Ok(value)
}
