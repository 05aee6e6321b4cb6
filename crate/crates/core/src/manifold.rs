//! Steering matrices and the angle-only active sensing model
//! `Y = A_rx diag(γ) A_txᵀ Sᵀ + N`.
//!
//! Positions are in half-wavelength units, so the phase of sensor `d` towards
//! angle `θ` is `π d sin θ`. Pattern-oriented helpers take `u = sin θ`
//! directly.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coarray::{redundancy_pattern, RedundancyPattern};
use crate::error::{Error, Result};
use crate::geometry::{ActiveArrayPair, ArrayConfig};
use crate::linalg::{khatri_rao, kron, numerical_rank, CMatrix};
use crate::C64;

pub fn check_angle(theta: f64) -> Result<()> {
    if !(-FRAC_PI_2..FRAC_PI_2).contains(&theta) {
        return Err(Error::invalid(format!(
            "angle {theta} rad outside [-pi/2, pi/2)"
        )));
    }
    Ok(())
}

/// `exp(iπ d u)` for each position.
pub fn steering_vector_u<P>(positions: &[P], u: f64) -> Vec<C64>
where
    P: Copy + Into<f64>,
{
    positions
        .iter()
        .map(|&d| C64::from_polar(1.0, PI * d.into() * u))
        .collect()
}

/// Steering matrix with one column per direction cosine `u = sin θ`.
pub fn steering_matrix_u<P>(positions: &[P], us: &[f64]) -> CMatrix
where
    P: Copy + Into<f64>,
{
    CMatrix::from_fn(positions.len(), us.len(), |n, k| {
        C64::from_polar(1.0, PI * positions[n].into() * us[k])
    })
}

/// A steering matrix for a physical array and a set of angles.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringSet {
    pub positions: Vec<u32>,
    pub angles: Vec<f64>,
    /// `positions.len() × angles.len()`.
    pub matrix: CMatrix,
}

pub fn steering(config: &ArrayConfig, angles: &[f64]) -> Result<SteeringSet> {
    for &t in angles {
        check_angle(t)?;
    }
    let us: Vec<f64> = angles.iter().map(|t| t.sin()).collect();
    Ok(SteeringSet {
        positions: config.positions().to_vec(),
        angles: angles.to_vec(),
        matrix: steering_matrix_u(config.positions(), &us),
    })
}

/// Virtual (sum co-array) steering matrix `A_Σ`.
pub fn coarray_steering(pattern: &RedundancyPattern, angles: &[f64]) -> Result<CMatrix> {
    for &t in angles {
        check_angle(t)?;
    }
    let us: Vec<f64> = angles.iter().map(|t| t.sin()).collect();
    let pos: Vec<f64> = pattern.positions().iter().map(|&p| p as f64).collect();
    Ok(steering_matrix_u(&pos, &us))
}

/// Max-norm of `(A_tx ⊙ A_rx) − Υᵀ A_Σ`.
pub fn coarray_identity_residual(pair: &ActiveArrayPair, angles: &[f64]) -> Result<f64> {
    let a_tx = steering(pair.tx(), angles)?.matrix;
    let a_rx = steering(pair.rx(), angles)?.matrix;
    let pattern = redundancy_pattern(pair);
    let a_sigma = coarray_steering(&pattern, angles)?;
    let lhs = khatri_rao(&a_tx, &a_rx);
    let mut worst = 0.0f64;
    for k in 0..angles.len() {
        for (c, &row) in pattern.row_of_col().iter().enumerate() {
            worst = worst.max((lhs[(c, k)] - a_sigma[(row, k)]).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub theta_rad: f64,
    #[serde(with = "crate::formats::complex")]
    pub gamma: C64,
}

/// Point scatterers in the far field, all in the same delay-Doppler bin.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
}

impl Scene {
    pub fn new(scatterers: Vec<Scatterer>) -> Result<Self> {
        let scene = Scene { scatterers };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.scatterers.iter().enumerate() {
            check_angle(s.theta_rad)?;
            if self.scatterers[..i]
                .iter()
                .any(|o| o.theta_rad == s.theta_rad)
            {
                return Err(Error::invalid(format!(
                    "duplicate scatterer angle {}",
                    s.theta_rad
                )));
            }
        }
        Ok(())
    }

    pub fn angles(&self) -> Vec<f64> {
        self.scatterers.iter().map(|s| s.theta_rad).collect()
    }

    pub fn gammas(&self) -> Vec<C64> {
        self.scatterers.iter().map(|s| s.gamma).collect()
    }
}

/// Spatio-temporal transmit waveform `S` (`T × N_tx`).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformMatrix {
    s: CMatrix,
}

impl WaveformMatrix {
    pub fn custom(s: CMatrix) -> Result<Self> {
        if s.nrows() == 0 || s.ncols() == 0 {
            return Err(Error::invalid("waveform matrix must be non-empty"));
        }
        if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("waveform matrix has non-finite entries"));
        }
        Ok(WaveformMatrix { s })
    }

    /// Rank-one waveform `u · a_tx(φ)ᴴ` with a constant unit-norm temporal code,
    /// steering the transmit beam towards `phi`.
    pub fn phased_array(tx: &ArrayConfig, phi: f64, t: usize) -> Result<Self> {
        check_angle(phi)?;
        let a = steering_vector_u(tx.positions(), phi.sin());
        Self::beamformed(&a, t)
    }

    /// Rank-one waveform `u · w_txᴴ` with `u = 1/√T`; the temporal matched
    /// filter `w_s = u` then realizes the Tx weights `w_tx`.
    pub fn beamformed(w_tx: &[C64], t: usize) -> Result<Self> {
        if t == 0 || w_tx.is_empty() {
            return Err(Error::invalid("waveform needs T >= 1 and N_tx >= 1"));
        }
        let u = matched_temporal_filter(t);
        let s = CMatrix::from_fn(t, w_tx.len(), |r, n| u[r] * w_tx[n].conj());
        Self::custom(s)
    }

    /// Orthogonal DFT codes, `SᴴS = I`.
    pub fn orthogonal(n_tx: usize, t: usize) -> Result<Self> {
        if n_tx == 0 {
            return Err(Error::invalid("orthogonal waveform needs N_tx >= 1"));
        }
        if t < n_tx {
            return Err(Error::invalid(format!(
                "orthogonal waveforms need T >= N_tx (T = {t}, N_tx = {n_tx})"
            )));
        }
        let scale = 1.0 / (t as f64).sqrt();
        let s = CMatrix::from_fn(t, n_tx, |r, n| {
            C64::from_polar(scale, -2.0 * PI * (r * n) as f64 / t as f64)
        });
        Self::custom(s)
    }

    /// Rescales to total power `‖S‖²_F = power`.
    pub fn with_power(mut self, power: f64) -> Self {
        let current = self.power();
        if current > 0.0 {
            self.s *= C64::from((power / current).sqrt());
        }
        self
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.s
    }

    pub fn t(&self) -> usize {
        self.s.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.s.ncols()
    }

    pub fn power(&self) -> f64 {
        self.s.norm_squared()
    }

    /// `R_tx = SᴴS`.
    pub fn covariance(&self) -> CMatrix {
        self.s.adjoint() * &self.s
    }

    /// Tx weights `Sᴴ w_s` realized by a temporal combiner `w_s`.
    pub fn tx_weights(&self, w_s: &[C64]) -> Result<Vec<C64>> {
        if w_s.len() != self.t() {
            return Err(Error::invalid(format!(
                "temporal combiner has length {}, expected T = {}",
                w_s.len(),
                self.t()
            )));
        }
        let w = self.s.adjoint() * nalgebra::DVector::from_column_slice(w_s);
        Ok(w.iter().copied().collect())
    }

    /// Waveform rank `N_s`.
    pub fn rank(&self) -> usize {
        numerical_rank(&self.s)
    }
}

/// Unit-norm constant temporal code, the default `u` (and `w_s`).
pub fn matched_temporal_filter(t: usize) -> Vec<C64> {
    vec![C64::new(1.0 / (t as f64).sqrt(), 0.0); t]
}

/// Received data `Y` (`N_rx × T`) and the noise settings that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBatch {
    pub y: CMatrix,
    pub sigma2: f64,
    pub seed: u64,
    pub stream: u64,
}

/// Seeded ChaCha8 generator; `stream` selects an independent sequence.
pub fn noise_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circularly-symmetric `CN(0, σ²)` samples.
pub fn complex_gaussian(rng: &mut ChaCha8Rng, sigma2: f64, n: usize) -> Vec<C64> {
    let scale = (sigma2 / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(scale * re, scale * im)
        })
        .collect()
}

/// Noiseless part `A_rx diag(γ) A_txᵀ Sᵀ`.
pub fn noiseless_measurement(
    pair: &ActiveArrayPair,
    scene: &Scene,
    waveform: &WaveformMatrix,
) -> Result<CMatrix> {
    if waveform.n_tx() != pair.n_tx() {
        return Err(Error::invalid(format!(
            "waveform has {} columns but the Tx array has {} sensors",
            waveform.n_tx(),
            pair.n_tx()
        )));
    }
    scene.validate()?;
    let angles = scene.angles();
    let a_tx = steering(pair.tx(), &angles)?.matrix;
    let a_rx = steering(pair.rx(), &angles)?.matrix;
    let mut scaled = a_rx;
    for (k, g) in scene.gammas().into_iter().enumerate() {
        for v in scaled.column_mut(k).iter_mut() {
            *v *= g;
        }
    }
    Ok(scaled * a_tx.transpose() * waveform.matrix().transpose())
}

/// One batch of the measurement model with `CN(0, σ²)` noise drawn from
/// stream 0 of `seed`.
pub fn simulate(
    pair: &ActiveArrayPair,
    scene: &Scene,
    waveform: &WaveformMatrix,
    sigma2: f64,
    seed: u64,
) -> Result<MeasurementBatch> {
    simulate_stream(pair, scene, waveform, sigma2, seed, 0)
}

/// As [`simulate`], drawing noise from an explicit RNG stream so that
/// several batches sharing a seed stay independent.
pub fn simulate_stream(
    pair: &ActiveArrayPair,
    scene: &Scene,
    waveform: &WaveformMatrix,
    sigma2: f64,
    seed: u64,
    stream: u64,
) -> Result<MeasurementBatch> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid(
            "noise variance must be finite and non-negative",
        ));
    }
    let mut y = noiseless_measurement(pair, scene, waveform)?;
    if sigma2 > 0.0 {
        let mut rng = noise_rng(seed, stream);
        let noise = complex_gaussian(&mut rng, sigma2, y.len());
        for (v, n) in y.iter_mut().zip(noise) {
            *v += n;
        }
    }
    Ok(MeasurementBatch {
        y,
        sigma2,
        seed,
        stream,
    })
}

/// `vec(Y)`, stacking columns.
pub fn vectorize_measurement(batch: &MeasurementBatch) -> Vec<C64> {
    batch.y.as_slice().to_vec()
}

/// The effective model matrix `(S ⊗ I_{N_rx})(A_tx ⊙ A_rx)`.
pub fn vectorized_model(
    pair: &ActiveArrayPair,
    waveform: &WaveformMatrix,
    angles: &[f64],
) -> Result<CMatrix> {
    let a_tx = steering(pair.tx(), angles)?.matrix;
    let a_rx = steering(pair.rx(), angles)?.matrix;
    let eye = CMatrix::identity(pair.n_rx(), pair.n_rx());
    Ok(kron(waveform.matrix(), &eye) * khatri_rao(&a_tx, &a_rx))
}

/// `C = (S ⊗ I_{N_rx}) Υᵀ` and its numerical rank.
pub fn compression_operator(
    pair: &ActiveArrayPair,
    waveform: &WaveformMatrix,
) -> Result<(CMatrix, usize)> {
    if waveform.n_tx() != pair.n_tx() {
        return Err(Error::invalid("waveform column count must equal N_tx"));
    }
    let pattern = redundancy_pattern(pair);
    let eye = CMatrix::identity(pair.n_rx(), pair.n_rx());
    let s_kron = kron(waveform.matrix(), &eye);
    let mut c = CMatrix::zeros(s_kron.nrows(), pattern.rows());
    for (col, &row) in pattern.row_of_col().iter().enumerate() {
        for r in 0..s_kron.nrows() {
            c[(r, row)] += s_kron[(r, col)];
        }
    }
    let rank = numerical_rank(&c);
    Ok((c, rank))
}
