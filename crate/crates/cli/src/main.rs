use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use coarray_lab::beamform::{
    image_addition_output, ls_synthesis, min_rank_synthesis, synthesized_beampattern,
    txrx_beampattern, u_grid, BeamWeights, ComponentSet, ImageAdditionOutput, MinRankOptions,
    SynthesisResult,
};
use coarray_lab::coarray::{redundancy_pattern, sum_coarray, RedundancyPattern};
use coarray_lab::error::RankAttempt;
use coarray_lab::formats::{
    beampattern_csv, CoArrayReport, ComponentSetFile, GeometryFile, GeometryMeta, MeasurementDump,
    MraSolutionFile, SynthesisReport, TargetFile,
};
use coarray_lab::geometry::{self, symmetric_from_generator};
use coarray_lab::manifold::{simulate, Scene, WaveformMatrix};
use coarray_lab::mra::{search_fully_overlapping, Budget};
use coarray_lab::{ActiveArrayPair, ArrayConfig, Error, C64};

#[derive(Parser)]
#[command(
    name = "coarray-lab",
    version,
    about = "Sparse array design and image-addition beamforming"
)]
struct Cli {
    /// Worker threads for parallel searches and solvers.
    #[arg(long, global = true, env = "COARRAY_LAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an array geometry.
    Arraygen(ArraygenArgs),
    /// Sum or difference co-array of a geometry.
    Coarray(CoarrayArgs),
    /// Exact minimum-redundancy search for fully overlapping arrays.
    SearchMra(SearchMraArgs),
    /// Synthesize physical weight components for a co-array target.
    Synth(SynthArgs),
    /// Evaluate a joint Tx/Rx beampattern on a grid in u = sin θ.
    Beampattern(BeampatternArgs),
    /// Simulate measurements and image-addition beamformer outputs.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ArrayKind {
    Ula,
    Nested,
    Cna,
    SymNa,
    NonoverlapMra,
    SymmetricFromGenerator,
}

#[derive(Args)]
struct ArraygenArgs {
    #[arg(long, value_enum)]
    kind: ArrayKind,
    /// Sensor count (ula, sym-na).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    ntx: Option<usize>,
    #[arg(long)]
    nrx: Option<usize>,
    /// Comma-separated generator positions (symmetric-from-generator).
    #[arg(long, value_delimiter = ',')]
    generator: Option<Vec<u32>>,
    /// Offset between the generator and its mirror image.
    #[arg(long)]
    offset: Option<u32>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoarrayMode {
    Sum,
    Difference,
}

#[derive(Args)]
struct CoarrayArgs {
    #[arg(long, short)]
    geometry: PathBuf,
    #[arg(long, value_enum, default_value = "sum")]
    mode: CoarrayMode,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchMraArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100_000_000)]
    max_nodes: u64,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    max_seconds: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Ls,
    MinRank,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, short)]
    geometry: PathBuf,
    /// Co-array weights `{"w_sigma": [...]}` or a co-array report.
    #[arg(long)]
    target: PathBuf,
    #[arg(long, value_enum, default_value = "min-rank")]
    method: Method,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Required for min-rank synthesis.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Synthesized beampattern CSV.
    #[arg(long)]
    pattern_out: Option<PathBuf>,
}

#[derive(Args)]
struct BeampatternArgs {
    #[arg(long, short)]
    geometry: PathBuf,
    /// Single weight pair `{"w_tx", "w_rx"}`.
    #[arg(
        long,
        conflicts_with = "components",
        required_unless_present = "components"
    )]
    weights: Option<PathBuf>,
    /// Component set or synthesis report; the pattern is the image-addition sum.
    #[arg(long)]
    components: Option<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WaveformPreset {
    PhasedArray,
    Orthogonal,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, short)]
    geometry: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_enum, default_value = "orthogonal")]
    waveform: WaveformPreset,
    /// Steering angle in radians for the phased-array preset.
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma2: f64,
    #[arg(long)]
    seed: u64,
    /// Component set or synthesis report for image-addition outputs.
    #[arg(long)]
    components: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Input(anyhow::Error),
    Synthesis(Error),
    Internal(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SynthesisFailure { .. } => Failure::Synthesis(e),
            other => Failure::Input(other.into()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Arraygen(a) => arraygen(a),
        Command::Coarray(a) => coarray(a),
        Command::SearchMra(a) => search_mra(a),
        Command::Synth(a) => synth(a),
        Command::Beampattern(a) => beampattern(a),
        Command::Simulate(a) => simulate_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Synthesis(e)) => {
            eprintln!("error: {e}");
            if let Error::SynthesisFailure { attempts, .. } = &e {
                print_attempts(attempts);
            }
            ExitCode::from(3)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(4)
        }
    }
}

fn print_attempts(attempts: &[RankAttempt]) {
    eprintln!("{:>4}  {:>12}", "Q", "residual");
    for a in attempts {
        eprintln!("{:>4}  {:>12.4e}", a.q, a.best_residual);
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(value)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}

fn read_geometry(path: &Path) -> CliResult<ActiveArrayPair> {
    let file: GeometryFile = read_json(path)?;
    Ok(file.pair())
}

fn require(value: Option<usize>, name: &str) -> CliResult<usize> {
    value.ok_or_else(|| Failure::Input(anyhow::anyhow!("--{name} is required for this kind")))
}

fn arraygen(a: ArraygenArgs) -> CliResult<()> {
    let mut params = BTreeMap::new();
    let (name, pair) = match a.kind {
        ArrayKind::Ula => {
            let n = require(a.n, "n")?;
            params.insert("n".into(), n as u64);
            ("ula", ActiveArrayPair::shared(geometry::ula(n)?))
        }
        ArrayKind::Nested | ArrayKind::Cna => {
            let n1 = require(a.n1, "n1")?;
            let n2 = require(a.n2, "n2")?;
            params.insert("n1".into(), n1 as u64);
            params.insert("n2".into(), n2 as u64);
            if matches!(a.kind, ArrayKind::Nested) {
                ("nested", ActiveArrayPair::shared(geometry::nested(n1, n2)?))
            } else {
                ("cna", ActiveArrayPair::shared(geometry::cna(n1, n2)?))
            }
        }
        ArrayKind::SymNa => {
            let n = require(a.n, "n")?;
            let (p, d) = geometry::symmetric_na_min_redundancy(n)?;
            params.insert("n".into(), n as u64);
            params.insert("n1".into(), p.n1 as u64);
            params.insert("n2".into(), p.n2 as u64);
            ("sym-na", ActiveArrayPair::shared(d))
        }
        ArrayKind::NonoverlapMra => {
            let ntx = require(a.ntx, "ntx")?;
            let nrx = require(a.nrx, "nrx")?;
            params.insert("ntx".into(), ntx as u64);
            params.insert("nrx".into(), nrx as u64);
            ("nonoverlap-mra", geometry::nonoverlapping_mra(ntx, nrx)?)
        }
        ArrayKind::SymmetricFromGenerator => {
            let g = a.generator.ok_or_else(|| {
                Failure::Input(anyhow::anyhow!("--generator is required for this kind"))
            })?;
            let g = ArrayConfig::new(g)?;
            let offset = a.offset.unwrap_or(0);
            params.insert("offset".into(), offset as u64);
            (
                "symmetric-from-generator",
                ActiveArrayPair::shared(symmetric_from_generator(&g, offset)),
            )
        }
    };
    let meta = GeometryMeta {
        generator: name.into(),
        params,
    };
    emit_json(a.out.as_deref(), &GeometryFile::new(&pair, Some(meta)))?;
    if pair.is_fully_overlapping() {
        eprintln!("{} sensors, aperture {}", pair.n_tx(), pair.tx().aperture());
    } else {
        eprintln!(
            "tx: {} sensors, aperture {}; rx: {} sensors, aperture {}",
            pair.n_tx(),
            pair.tx().aperture(),
            pair.n_rx(),
            pair.rx().aperture()
        );
    }
    Ok(())
}

fn coarray(a: CoarrayArgs) -> CliResult<()> {
    let pair = read_geometry(&a.geometry)?;
    let report = match a.mode {
        CoarrayMode::Sum => {
            let s = sum_coarray(&pair);
            let expected = (pair.n_tx() * pair.n_rx()) as u64;
            if s.total_multiplicity() != expected {
                return Err(Failure::Internal(format!(
                    "sum co-array multiplicities add to {} instead of {expected}",
                    s.total_multiplicity()
                )));
            }
            CoArrayReport::sum(&pair)
        }
        CoarrayMode::Difference => {
            if !pair.is_fully_overlapping() {
                return Err(Failure::Input(anyhow::anyhow!(
                    "difference co-array needs a fully overlapping geometry"
                )));
            }
            CoArrayReport::difference(pair.tx())
        }
    };
    emit_json(a.out.as_deref(), &report)?;
    match (&report.redundancy, &report.reason) {
        (Some(r), _) => eprintln!(
            "{} virtual sensors, redundancy {}/{} = {:.6}",
            report.positions.len(),
            r.num,
            r.den,
            r.num as f64 / r.den as f64
        ),
        (None, Some(reason)) => eprintln!("{} virtual sensors, {reason}", report.positions.len()),
        (None, None) => eprintln!("{} virtual sensors", report.positions.len()),
    }
    Ok(())
}

fn search_mra(a: SearchMraArgs) -> CliResult<()> {
    if !(a.max_seconds > 0.0 && a.max_seconds.is_finite()) {
        return Err(Failure::Input(anyhow::anyhow!(
            "--max-seconds must be positive"
        )));
    }
    let budget = Budget {
        max_nodes: a.max_nodes,
        max_time: Some(Duration::from_secs_f64(a.max_seconds)),
    };
    let solution = match search_fully_overlapping(a.n, budget) {
        Ok(s) => s,
        Err(Error::PartialResult(s)) => {
            eprintln!("budget exhausted; result is not certified optimal");
            *s
        }
        Err(e) => return Err(e.into()),
    };
    emit_json(a.out.as_deref(), &MraSolutionFile::from(&solution))?;
    eprintln!(
        "n = {}: aperture {}, {} configuration(s), {} nodes, {:.1} ms",
        solution.n_sensors,
        solution.aperture,
        solution.configs.len(),
        solution.stats.nodes,
        solution.stats.wall_time_ms
    );
    Ok(())
}

/// Component files are accepted bare or embedded in a synthesis report.
#[derive(Deserialize)]
#[serde(untagged)]
enum ComponentsInput {
    Set(ComponentSetFile),
    Report { components: ComponentSetFile },
}

fn read_components(path: &Path, pair: &ActiveArrayPair) -> CliResult<ComponentSet> {
    let input: ComponentsInput = read_json(path)?;
    let file = match input {
        ComponentsInput::Set(f) | ComponentsInput::Report { components: f } => f,
    };
    let set = file.to_components()?;
    set.validate(pair)?;
    Ok(set)
}

/// Recomputes the co-array weights realized by the components and compares
/// them with the reported residual.
fn check_result(
    result: &SynthesisResult,
    target: &[C64],
    pattern: &RedundancyPattern,
) -> CliResult<()> {
    let realized = result
        .components
        .coarray_weights(pattern)
        .map_err(|e| Failure::Internal(e.to_string()))?;
    let residual = realized
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = target.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if residual > result.residual + 1e-9 * scale {
        return Err(Failure::Internal(format!(
            "realized co-array weights miss the target by {residual:e}, reported {:e}",
            result.residual
        )));
    }
    Ok(())
}

fn synth(a: SynthArgs) -> CliResult<()> {
    let pair = read_geometry(&a.geometry)?;
    let target_file: TargetFile = read_json(&a.target)?;
    let target = target_file.weights();
    let pattern = redundancy_pattern(&pair);
    let result = match a.method {
        Method::Ls => ls_synthesis(&target, &pattern)?,
        Method::MinRank => {
            let opts = MinRankOptions {
                tol: a.tol,
                restarts: a.restarts,
                max_iters: a.max_iters,
                seed: a.seed.ok_or_else(|| {
                    Failure::Input(anyhow::anyhow!("--seed is required for min-rank synthesis"))
                })?,
            };
            min_rank_synthesis(&target, &pattern, &opts)?
        }
    };
    check_result(&result, &target, &pattern)?;
    emit_json(a.out.as_deref(), &SynthesisReport::new(&result, &pattern))?;
    if let Some(path) = &a.pattern_out {
        let us = u_grid(a.grid);
        let values = synthesized_beampattern(&result.components, &pair, &us)?;
        emit(Some(path), &beampattern_csv(&us, &values))?;
    }
    eprintln!(
        "Q = {}, residual {:.3e}",
        result.components.q(),
        result.residual
    );
    Ok(())
}

fn beampattern(a: BeampatternArgs) -> CliResult<()> {
    let pair = read_geometry(&a.geometry)?;
    let us = u_grid(a.grid);
    let values = match (&a.weights, &a.components) {
        (Some(path), _) => {
            let w: BeamWeights = read_json(path)?;
            w.validate(&pair)?;
            txrx_beampattern(&w, &pair, &us)?
        }
        (None, Some(path)) => {
            let set = read_components(path, &pair)?;
            synthesized_beampattern(&set, &pair, &us)?
        }
        (None, None) => unreachable!("clap requires one weight source"),
    };
    emit(a.out.as_deref(), &beampattern_csv(&us, &values))
}

#[derive(Serialize)]
struct SimulationOutput {
    measurement: MeasurementDump,
    #[serde(skip_serializing_if = "Option::is_none")]
    image_addition: Option<ImageAdditionOutput>,
}

fn simulate_cmd(a: SimulateArgs) -> CliResult<()> {
    let pair = read_geometry(&a.geometry)?;
    let scene: Scene = read_json(&a.scene)?;
    scene.validate()?;
    let waveform = match a.waveform {
        WaveformPreset::PhasedArray => WaveformMatrix::phased_array(pair.tx(), a.phi, a.t)?,
        WaveformPreset::Orthogonal => WaveformMatrix::orthogonal(pair.n_tx(), a.t)?,
    };
    let batch = simulate(&pair, &scene, &waveform, a.sigma2, a.seed)?;
    let image_addition = match &a.components {
        Some(path) => {
            let set = read_components(path, &pair)?;
            Some(image_addition_output(
                &pair, &scene, &set, a.t, a.sigma2, a.seed,
            )?)
        }
        None => None,
    };
    if let Some(ia) = &image_addition {
        eprintln!(
            "Q = {}, total output {:.6}{:+.6}i",
            ia.per_component.len(),
            ia.total.re,
            ia.total.im
        );
    }
    let output = SimulationOutput {
        measurement: MeasurementDump::from(&batch),
        image_addition,
    };
    emit_json(a.out.as_deref(), &output)
}
