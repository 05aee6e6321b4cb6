//! Small dense complex linear algebra on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Singular values below `max(rows, cols) · ε · σ_max` count as zero.
pub fn rank_threshold(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Thin SVD `m = U diag(s) Vᴴ` with singular values in non-increasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    /// Number of singular values above [`rank_threshold`].
    pub fn rank(&self) -> usize {
        let Some(&top) = self.s.first() else { return 0 };
        if top == 0.0 {
            return 0;
        }
        let tol = rank_threshold(self.u.nrows(), self.v.nrows(), top);
        self.s.iter().filter(|&&x| x > tol).count()
    }
}

/// faer's bidiagonal SVD, falling back to one-sided Jacobi when it reports
/// non-convergence (observed on matrices with exactly repeated singular values).
pub fn svd(m: &CMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd {
            u: CMatrix::zeros(rows, 0),
            s: Vec::new(),
            v: CMatrix::zeros(cols, 0),
        };
    }
    let f = faer::Mat::<faer::c64>::from_fn(rows, cols, |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let Ok(d) = f.thin_svd() else {
        return jacobi_svd(m);
    };
    let (u, s, v) = (d.U(), d.S().column_vector(), d.V());
    let conv = |z: faer::c64| C64::new(z.re, z.im);
    Svd {
        u: CMatrix::from_fn(rows, k, |i, j| conv(u[(i, j)])),
        s: (0..k).map(|i| s[i].re).collect(),
        v: CMatrix::from_fn(cols, k, |i, j| conv(v[(i, j)])),
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
fn jacobi_svd(m: &CMatrix) -> Svd {
    if m.nrows() < m.ncols() {
        let t = jacobi_svd(&m.adjoint());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let n = m.ncols();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n, n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let rows = m.nrows();
    let mut u = CMatrix::zeros(rows, n);
    let mut vs = CMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    // left vectors of negligible singular values are roundoff; rebuild them
    let tol = rank_threshold(rows, n, norms[order[0]]);
    for (k, &j) in order.iter().enumerate() {
        s.push(norms[j]);
        vs.set_column(k, &v.column(j));
        if norms[j] > tol {
            u.set_column(k, &(a.column(j) / C64::new(norms[j], 0.0)));
        }
    }
    for k in 0..n {
        if s[k] <= tol {
            complete_column(&mut u, k);
        }
    }
    Svd { u, s, v: vs }
}

/// Columns `p, q` become `c·x_p − s·e^{-iφ}·x_q` and `s·x_p + c·e^{-iφ}·x_q`,
/// with `e^{iφ}` the phase of `x_pᴴ x_q`.
fn rotate(x: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let w = phase.conj();
    for i in 0..x.nrows() {
        let xp = x[(i, p)];
        let xq = x[(i, q)] * w;
        x[(i, p)] = xp * c - xq * s;
        x[(i, q)] = xp * s + xq * c;
    }
}

/// Replaces column `k` with a unit vector orthogonal to every other nonzero column.
fn complete_column(u: &mut CMatrix, k: usize) {
    for e in 0..u.nrows() {
        let mut x = CVector::zeros(u.nrows());
        x[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for j in (0..u.ncols()).filter(|&j| j != k) {
                let proj = u.column(j).dotc(&x);
                x.axpy(-proj, &u.column(j), C64::new(1.0, 0.0));
            }
        }
        let norm = x.norm();
        if norm > 0.5 {
            u.set_column(k, &(x / C64::new(norm, 0.0)));
            return;
        }
    }
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    svd(m).s
}

pub fn numerical_rank(m: &CMatrix) -> usize {
    svd(m).rank()
}

/// Minimum-norm least-squares solution of `a x = b` via the pseudo-inverse.
pub fn lstsq(a: &CMatrix, b: &CVector) -> CVector {
    let d = svd(a);
    let r = d.rank();
    let mut x = CVector::zeros(a.ncols());
    for i in 0..r {
        let coef = d.u.column(i).dotc(b) / d.s[i];
        x.axpy(coef, &d.v.column(i), C64::new(1.0, 0.0));
    }
    x
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

/// Column-wise Kronecker (Khatri-Rao) product `a ⊙ b`.
pub fn khatri_rao(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.ncols(), "Khatri-Rao needs equal column counts");
    let br = b.nrows();
    CMatrix::from_fn(a.nrows() * br, a.ncols(), |i, k| {
        a[(i / br, k)] * b[(i % br, k)]
    })
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
