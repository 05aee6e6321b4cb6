//! Rx, Tx and joint Tx-Rx beampatterns, sum co-array weights, and image
//! addition: synthesizing a co-array weighting as a sum of `Q` Tx-Rx
//! component images.
//!
//! Patterns are evaluated on direction cosines `u = sin θ ∈ [−1, 1]`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::coarray::RedundancyPattern;
use crate::error::{Error, RankAttempt, Result};
use crate::geometry::{ActiveArrayPair, ArrayConfig};
use crate::linalg::{kron_vec, lstsq, rank_threshold, svd, CMatrix, CVector};
use crate::manifold::{
    matched_temporal_filter, noise_rng, simulate_stream, steering_vector_u, Scene, WaveformMatrix,
};
use crate::C64;

/// `n` points uniform in `u` over `[−1, 1)`.
pub fn u_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect()
}

fn check_us(us: &[f64]) -> Result<()> {
    match us.iter().find(|u| !(-1.0..=1.0).contains(*u)) {
        Some(u) => Err(Error::invalid(format!(
            "direction cosine {u} outside [-1, 1]"
        ))),
        None => Ok(()),
    }
}

fn check_finite(name: &str, v: &[C64]) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} has non-finite entries")))
    }
}

fn check_len(name: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::invalid(format!(
            "{name} has length {got}, expected {want}"
        )));
    }
    Ok(())
}

fn dot_conj(w: &[C64], a: &[C64]) -> C64 {
    w.iter().zip(a).map(|(w, a)| w.conj() * a).sum()
}

/// Tx and Rx spatial weights of one acquisition, plus an optional temporal
/// combiner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamWeights {
    #[serde(with = "crate::formats::complex_vec")]
    pub w_tx: Vec<C64>,
    #[serde(with = "crate::formats::complex_vec")]
    pub w_rx: Vec<C64>,
    #[serde(
        default,
        with = "crate::formats::complex_opt_vec",
        skip_serializing_if = "Option::is_none"
    )]
    pub w_s: Option<Vec<C64>>,
}

impl BeamWeights {
    pub fn new(w_tx: Vec<C64>, w_rx: Vec<C64>) -> Self {
        BeamWeights {
            w_tx,
            w_rx,
            w_s: None,
        }
    }

    pub fn validate(&self, pair: &ActiveArrayPair) -> Result<()> {
        check_len("w_tx", self.w_tx.len(), pair.n_tx())?;
        check_len("w_rx", self.w_rx.len(), pair.n_rx())?;
        check_finite("w_tx", &self.w_tx)?;
        check_finite("w_rx", &self.w_rx)?;
        if let Some(ws) = &self.w_s {
            check_finite("w_s", ws)?;
        }
        Ok(())
    }
}

/// `H_rx(u) = w_rxᴴ a_rx(u)`.
pub fn rx_beampattern(w_rx: &[C64], config: &ArrayConfig, us: &[f64]) -> Result<Vec<C64>> {
    check_len("w_rx", w_rx.len(), config.len())?;
    check_finite("w_rx", w_rx)?;
    check_us(us)?;
    Ok(us
        .iter()
        .map(|&u| dot_conj(w_rx, &steering_vector_u(config.positions(), u)))
        .collect())
}

/// `H_tx(u) = w_txᴴ a_tx(u)`.
pub fn tx_beampattern(w_tx: &[C64], config: &ArrayConfig, us: &[f64]) -> Result<Vec<C64>> {
    rx_beampattern(w_tx, config, us)
}

/// Radiated power `B_tx(u) = a_txᴴ(u) R_tx a_tx(u)` for a transmit covariance
/// `R_tx = SᴴS`.
pub fn tx_beampattern_power(r_tx: &CMatrix, config: &ArrayConfig, us: &[f64]) -> Result<Vec<f64>> {
    let n = config.len();
    if r_tx.shape() != (n, n) {
        return Err(Error::invalid(format!(
            "transmit covariance is {}x{}, expected {n}x{n}",
            r_tx.nrows(),
            r_tx.ncols()
        )));
    }
    check_finite("transmit covariance", r_tx.as_slice())?;
    check_us(us)?;
    let scale = r_tx
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()))
        .max(f64::MIN_POSITIVE);
    let tol = 64.0 * rank_threshold(n, n, scale);
    if (r_tx - r_tx.adjoint()).iter().any(|z| z.norm() > tol) {
        return Err(Error::invalid("transmit covariance is not Hermitian"));
    }
    let eig = r_tx.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < -tol) {
        return Err(Error::invalid(
            "transmit covariance is not positive semidefinite",
        ));
    }
    Ok(us
        .iter()
        .map(|&u| {
            let a = CVector::from_vec(steering_vector_u(config.positions(), u));
            (a.adjoint() * r_tx * &a)[(0, 0)].re.max(0.0)
        })
        .collect())
}

/// `H_txrx(u) = H_tx(u) H_rx(u) = (w_tx ⊗ w_rx)ᴴ (a_tx(u) ⊗ a_rx(u))`.
pub fn txrx_beampattern(
    weights: &BeamWeights,
    pair: &ActiveArrayPair,
    us: &[f64],
) -> Result<Vec<C64>> {
    weights.validate(pair)?;
    let h_tx = tx_beampattern(&weights.w_tx, pair.tx(), us)?;
    let h_rx = rx_beampattern(&weights.w_rx, pair.rx(), us)?;
    Ok(h_tx.iter().zip(&h_rx).map(|(t, r)| t * r).collect())
}

/// Sum co-array weights `w_Σ = Υ (w_tx ⊗ w_rx)`.
pub fn physical_to_coarray_weights(
    pattern: &RedundancyPattern,
    w_tx: &[C64],
    w_rx: &[C64],
) -> Result<Vec<C64>> {
    check_len("w_tx", w_tx.len(), pattern.n_tx())?;
    check_len("w_rx", w_rx.len(), pattern.n_rx())?;
    Ok(pattern.apply(&kron_vec(w_tx, w_rx)))
}

/// `w_Σᴴ a_Σ(u)` over the sum co-array positions of `pattern`.
pub fn coarray_beampattern(
    pattern: &RedundancyPattern,
    w_sigma: &[C64],
    us: &[f64],
) -> Result<Vec<C64>> {
    check_len("co-array weights", w_sigma.len(), pattern.rows())?;
    check_us(us)?;
    let pos: Vec<f64> = pattern.positions().iter().map(|&p| p as f64).collect();
    Ok(us
        .iter()
        .map(|&u| dot_conj(w_sigma, &steering_vector_u(&pos, u)))
        .collect())
}

/// Tx and Rx weights of `Q` component images; column `q` of each factor is one
/// acquisition, and `W = W_rx W_txᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSet {
    pub w_tx: CMatrix,
    pub w_rx: CMatrix,
}

impl ComponentSet {
    pub fn new(w_tx: CMatrix, w_rx: CMatrix) -> Result<Self> {
        if w_tx.ncols() != w_rx.ncols() {
            return Err(Error::invalid(format!(
                "factor column counts differ ({} vs {})",
                w_tx.ncols(),
                w_rx.ncols()
            )));
        }
        check_finite("W_tx", w_tx.as_slice())?;
        check_finite("W_rx", w_rx.as_slice())?;
        Ok(ComponentSet { w_tx, w_rx })
    }

    pub fn empty(n_tx: usize, n_rx: usize) -> Self {
        ComponentSet {
            w_tx: CMatrix::zeros(n_tx, 0),
            w_rx: CMatrix::zeros(n_rx, 0),
        }
    }

    pub fn q(&self) -> usize {
        self.w_tx.ncols()
    }

    pub fn n_tx(&self) -> usize {
        self.w_tx.nrows()
    }

    pub fn n_rx(&self) -> usize {
        self.w_rx.nrows()
    }

    pub fn component(&self, q: usize) -> BeamWeights {
        BeamWeights::new(
            self.w_tx.column(q).iter().copied().collect(),
            self.w_rx.column(q).iter().copied().collect(),
        )
    }

    /// `W = W_rx W_txᵀ` (`N_rx × N_tx`).
    pub fn weight_matrix(&self) -> CMatrix {
        &self.w_rx * self.w_tx.transpose()
    }

    pub fn validate(&self, pair: &ActiveArrayPair) -> Result<()> {
        check_len("W_tx rows", self.n_tx(), pair.n_tx())?;
        check_len("W_rx rows", self.n_rx(), pair.n_rx())
    }

    /// `Υ vec(W)`.
    pub fn coarray_weights(&self, pattern: &RedundancyPattern) -> Result<Vec<C64>> {
        check_len("W_tx rows", self.n_tx(), pattern.n_tx())?;
        check_len("W_rx rows", self.n_rx(), pattern.n_rx())?;
        Ok(pattern.apply(self.weight_matrix().as_slice()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMethod {
    Ls,
    MinRank,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub components: ComponentSet,
    /// Co-array weights realized by the returned components.
    pub coarray_weights: Vec<C64>,
    /// Max-norm of `Υ vec(W) − w_Σ`.
    pub residual: f64,
    pub method: SynthesisMethod,
    /// Best residual reached at each rank tried.
    pub attempts: Vec<RankAttempt>,
}

fn max_norm_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn check_target(target: &[C64], pattern: &RedundancyPattern) -> Result<()> {
    check_len("desired co-array weights", target.len(), pattern.rows())?;
    check_finite("desired co-array weights", target)
}

fn finish(
    components: ComponentSet,
    pattern: &RedundancyPattern,
    target: &[C64],
    method: SynthesisMethod,
    attempts: Vec<RankAttempt>,
) -> Result<SynthesisResult> {
    let coarray_weights = components.coarray_weights(pattern)?;
    let residual = max_norm_diff(&coarray_weights, target);
    Ok(SynthesisResult {
        components,
        coarray_weights,
        residual,
        method,
        attempts,
    })
}

/// Spreads every virtual weight equally over the Tx-Rx pairs that realize it,
/// `vec(W) = Υᵀ (ΥΥᵀ)⁻¹ w_Σ`, then factors `W` by its SVD.
pub fn ls_synthesis(target: &[C64], pattern: &RedundancyPattern) -> Result<SynthesisResult> {
    check_target(target, pattern)?;
    let w = ls_weight_matrix(target, pattern);
    let components = factorize_components(&w)?;
    finish(components, pattern, target, SynthesisMethod::Ls, Vec::new())
}

fn ls_weight_matrix(target: &[C64], pattern: &RedundancyPattern) -> CMatrix {
    let spread: Vec<C64> = target
        .iter()
        .zip(pattern.multiplicities())
        .map(|(w, &m)| w / m as f64)
        .collect();
    CMatrix::from_column_slice(
        pattern.n_rx(),
        pattern.n_tx(),
        &pattern.apply_transpose(&spread),
    )
}

/// SVD factorization `W_tx = V*`, `W_rx = UΣ`, keeping the numerically
/// nonzero singular values.
pub fn factorize_components(w: &CMatrix) -> Result<ComponentSet> {
    factorize_truncated(w, usize::MAX)
}

fn factorize_truncated(w: &CMatrix, max_q: usize) -> Result<ComponentSet> {
    check_finite("W", w.as_slice())?;
    let (n_rx, n_tx) = w.shape();
    if w.is_empty() {
        return Ok(ComponentSet::empty(n_tx, n_rx));
    }
    let d = svd(w);
    let q = d.rank().min(max_q);
    let w_rx = CMatrix::from_fn(n_rx, q, |i, k| d.u[(i, k)] * d.s[k]);
    let w_tx = CMatrix::from_fn(n_tx, q, |j, k| d.v[(j, k)].conj());
    ComponentSet::new(w_tx, w_rx)
}

/// Settings for [`min_rank_synthesis`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinRankOptions {
    /// Max-norm residual accepted as success.
    pub tol: f64,
    /// Random starts per rank, in addition to the warm start (at least one
    /// is always made when there is no warm start).
    pub restarts: usize,
    /// Alternating iterations per restart.
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for MinRankOptions {
    fn default() -> Self {
        MinRankOptions {
            tol: 1e-9,
            restarts: 5,
            max_iters: 500,
            seed: 0,
        }
    }
}

struct Factors {
    w_tx: CMatrix,
    w_rx: CMatrix,
    residual: f64,
}

fn residual_of(pattern: &RedundancyPattern, target: &[C64], w_tx: &CMatrix, w_rx: &CMatrix) -> f64 {
    let w = w_rx * w_tx.transpose();
    max_norm_diff(&pattern.apply(w.as_slice()), target)
}

/// Least-squares update of `W_rx` with `W_tx` held fixed.
fn solve_rx(pattern: &RedundancyPattern, target: &CVector, w_tx: &CMatrix) -> CMatrix {
    let (n_tx, n_rx, q) = (pattern.n_tx(), pattern.n_rx(), w_tx.ncols());
    let mut m = CMatrix::zeros(pattern.rows(), q * n_rx);
    for (c, &row) in pattern.row_of_col().iter().enumerate() {
        let (j, i) = (c / n_rx, c % n_rx);
        for k in 0..q {
            m[(row, k * n_rx + i)] += w_tx[(j, k)];
        }
    }
    debug_assert_eq!(pattern.cols(), n_tx * n_rx);
    let x = lstsq(&m, target);
    CMatrix::from_column_slice(n_rx, q, x.as_slice())
}

/// Least-squares update of `W_tx` with `W_rx` held fixed.
fn solve_tx(pattern: &RedundancyPattern, target: &CVector, w_rx: &CMatrix) -> CMatrix {
    let (n_tx, n_rx, q) = (pattern.n_tx(), pattern.n_rx(), w_rx.ncols());
    let mut m = CMatrix::zeros(pattern.rows(), q * n_tx);
    for (c, &row) in pattern.row_of_col().iter().enumerate() {
        let (j, i) = (c / n_rx, c % n_rx);
        for k in 0..q {
            m[(row, k * n_tx + j)] += w_rx[(i, k)];
        }
    }
    let x = lstsq(&m, target);
    CMatrix::from_column_slice(n_tx, q, x.as_slice())
}

/// Equalizes the column norms of the two factors without changing `W`.
fn rebalance(w_tx: &mut CMatrix, w_rx: &mut CMatrix) {
    for k in 0..w_tx.ncols() {
        let a = w_tx.column(k).norm();
        let b = w_rx.column(k).norm();
        if a > 0.0 && b > 0.0 {
            let s = (b / a).sqrt();
            w_tx.column_mut(k).scale_mut(s);
            w_rx.column_mut(k).unscale_mut(s);
        }
    }
}

const POLISH: f64 = 1e-2;

/// Alternating minimization from an initial `W_tx`, starting with an Rx step.
fn alternate(
    pattern: &RedundancyPattern,
    target: &[C64],
    mut w_tx: CMatrix,
    opts: &MinRankOptions,
) -> Factors {
    let t = CVector::from_column_slice(target);
    let mut w_rx = solve_rx(pattern, &t, &w_tx);
    let mut best = Factors {
        residual: residual_of(pattern, target, &w_tx, &w_rx),
        w_tx: w_tx.clone(),
        w_rx: w_rx.clone(),
    };
    // Iterate slightly past the tolerance so accepted solutions have margin.
    for _ in 0..opts.max_iters {
        if best.residual <= POLISH * opts.tol {
            break;
        }
        w_tx = solve_tx(pattern, &t, &w_rx);
        w_rx = solve_rx(pattern, &t, &w_tx);
        rebalance(&mut w_tx, &mut w_rx);
        let r = residual_of(pattern, target, &w_tx, &w_rx);
        if r < best.residual {
            best = Factors {
                w_tx: w_tx.clone(),
                w_rx: w_rx.clone(),
                residual: r,
            };
        }
    }
    best
}

fn random_factor(rows: usize, cols: usize, seed: u64, stream: u64) -> CMatrix {
    let mut rng = noise_rng(seed, stream);
    let v = crate::manifold::complex_gaussian(&mut rng, 1.0, rows * cols);
    CMatrix::from_column_slice(rows, cols, &v)
}

fn run_restarts(
    pattern: &RedundancyPattern,
    target: &[C64],
    q: usize,
    warm: Option<CMatrix>,
    opts: &MinRankOptions,
) -> Factors {
    let n_tx = pattern.n_tx();
    let random = if warm.is_some() {
        opts.restarts
    } else {
        opts.restarts.max(1)
    };
    let mut inits: Vec<CMatrix> = warm.into_iter().collect();
    inits.extend(
        (0..random).map(|r| random_factor(n_tx, q, opts.seed, ((q as u64) << 32) | r as u64)),
    );
    let pick = |runs: Vec<Factors>| -> Factors {
        let mut best: Option<Factors> = None;
        for f in runs {
            let better = match &best {
                None => true,
                Some(b) => b.residual > opts.tol && f.residual < b.residual,
            };
            if better {
                best = Some(f);
            }
        }
        best.expect("at least one start")
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pick(
            inits
                .into_par_iter()
                .map(|w| alternate(pattern, target, w, opts))
                .collect(),
        )
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut runs = Vec::new();
        for w in inits {
            let f = alternate(pattern, target, w, opts);
            let done = f.residual <= opts.tol;
            runs.push(f);
            if done {
                break;
            }
        }
        pick(runs)
    }
}

/// Finds the smallest number of component images `Q` whose weight matrix
/// `W = W_rx W_txᵀ` realizes `target` through `Υ vec(W)` to within `tol`.
///
/// Ranks are scanned upwards from 1. At each rank the truncated SVD of the
/// least-squares spread is accepted directly when it meets `tol`; otherwise alternating least squares
/// runs from the previous rank's best factors (extended by a random column)
/// and from `restarts` seeded random starts. The warm start makes the best
/// residual non-increasing in `Q`.
pub fn min_rank_synthesis(
    target: &[C64],
    pattern: &RedundancyPattern,
    opts: &MinRankOptions,
) -> Result<SynthesisResult> {
    check_target(target, pattern)?;
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::invalid("tolerance must be positive and finite"));
    }
    let (n_tx, n_rx) = (pattern.n_tx(), pattern.n_rx());
    if target.iter().all(|z| z.norm() <= opts.tol) {
        let components = ComponentSet::empty(n_tx, n_rx);
        return finish(
            components,
            pattern,
            target,
            SynthesisMethod::MinRank,
            Vec::new(),
        );
    }

    let max_q = n_tx.min(n_rx);
    let ls = ls_weight_matrix(target, pattern);
    let mut attempts = Vec::new();
    let mut prev: Option<Factors> = None;
    for q in 1..=max_q {
        let components = factorize_truncated(&ls, q)?;
        let result = finish(
            components,
            pattern,
            target,
            SynthesisMethod::MinRank,
            Vec::new(),
        )?;
        if result.residual <= opts.tol {
            attempts.push(RankAttempt {
                q,
                best_residual: result.residual,
            });
            return Ok(SynthesisResult { attempts, ..result });
        }
        let warm = prev.as_ref().map(|p| {
            let mut w = p.w_tx.clone().insert_column(q - 1, C64::new(0.0, 0.0));
            let extra = random_factor(n_tx, 1, opts.seed, ((q as u64) << 32) | u64::from(u32::MAX));
            w.set_column(q - 1, &extra.column(0));
            w
        });
        let mut found = run_restarts(pattern, target, q, warm, opts);
        if let Some(p) = &prev {
            if p.residual < found.residual {
                found = Factors {
                    w_tx: p.w_tx.clone().insert_column(q - 1, C64::new(0.0, 0.0)),
                    w_rx: p.w_rx.clone().insert_column(q - 1, C64::new(0.0, 0.0)),
                    residual: p.residual,
                };
            }
        }
        attempts.push(RankAttempt {
            q,
            best_residual: found.residual,
        });
        if found.residual <= opts.tol {
            let w = &found.w_rx * found.w_tx.transpose();
            let compact = factorize_truncated(&w, q)?;
            let raw = ComponentSet::new(found.w_tx, found.w_rx)?;
            let components = if compact.q() > 0
                && residual_of(pattern, target, &compact.w_tx, &compact.w_rx) <= opts.tol
            {
                compact
            } else {
                raw
            };
            return finish(
                components,
                pattern,
                target,
                SynthesisMethod::MinRank,
                attempts,
            );
        }
        prev = Some(found);
    }
    Err(Error::SynthesisFailure {
        tol: opts.tol,
        max_q,
        attempts,
    })
}

/// `H̄_txrx(u) = Σ_q H_tx,q(u) H_rx,q(u)`.
pub fn synthesized_beampattern(
    components: &ComponentSet,
    pair: &ActiveArrayPair,
    us: &[f64],
) -> Result<Vec<C64>> {
    components.validate(pair)?;
    check_us(us)?;
    let mut out = vec![C64::new(0.0, 0.0); us.len()];
    for q in 0..components.q() {
        let h = txrx_beampattern(&components.component(q), pair, us)?;
        for (o, v) in out.iter_mut().zip(h) {
            *o += v;
        }
    }
    Ok(out)
}

/// Per-component beamformer outputs `y[q]` and their sum `ȳ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageAdditionOutput {
    #[serde(with = "crate::formats::complex_vec")]
    pub per_component: Vec<C64>,
    #[serde(with = "crate::formats::complex")]
    pub total: C64,
}

/// Simulates one acquisition per component with the phased-array waveform
/// `S[q] = u w_tx[q]ᴴ`, combines it with `y[q] = w_rx[q]ᴴ Y[q] w_s*` using the
/// temporal matched filter `w_s = u`, and sums the outputs. Noise for
/// component `q` comes from RNG stream `q` of `seed`.
pub fn image_addition_output(
    pair: &ActiveArrayPair,
    scene: &Scene,
    components: &ComponentSet,
    t: usize,
    sigma2: f64,
    seed: u64,
) -> Result<ImageAdditionOutput> {
    components.validate(pair)?;
    if t == 0 {
        return Err(Error::invalid("snapshot count T must be at least 1"));
    }
    let w_s = DVector::from_vec(matched_temporal_filter(t));
    let mut per_component = Vec::with_capacity(components.q());
    for q in 0..components.q() {
        let bw = components.component(q);
        let waveform = WaveformMatrix::beamformed(&bw.w_tx, t)?;
        let batch = simulate_stream(pair, scene, &waveform, sigma2, seed, q as u64)?;
        let w_rx = DVector::from_vec(bw.w_rx);
        per_component.push((w_rx.adjoint() * &batch.y * w_s.conjugate())[(0, 0)]);
    }
    let total = per_component.iter().sum();
    Ok(ImageAdditionOutput {
        per_component,
        total,
    })
}
