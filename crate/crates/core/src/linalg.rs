//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `(A + A^*)/2` together with the largest entry of the discarded part `(A - A^*)/2`.
pub fn hermitian_part(a: &CMat) -> (CMat, f64) {
    let adj = a.adjoint();
    let skew = (a - &adj).map(|z| z.norm()).max() / 2.0;
    ((a + adj) * c(0.5), if a.is_empty() { 0.0 } else { skew })
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
    /// Magnitude of the anti-Hermitian part removed before solving.
    pub symmetrization: f64,
}

pub fn eigh(a: &CMat) -> HermitianEigen {
    let (h, symmetrization) = hermitian_part(a);
    let dim = h.nrows();
    if dim == 0 {
        return HermitianEigen { values: Vec::new(), vectors: CMat::zeros(0, 0), symmetrization };
    }
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(dim, dim, |r, k| eig.eigenvectors[(r, order[k])]);
    HermitianEigen { values, vectors, symmetrization }
}

pub fn min_eig(a: &CMat) -> f64 {
    eigh(a).values.first().copied().unwrap_or(0.0)
}

pub fn max_eig(a: &CMat) -> f64 {
    eigh(a).values.last().copied().unwrap_or(0.0)
}

/// Default PSD tolerance `1e-9 (1 + ||A||)`.
pub fn psd_tol(a: &CMat) -> f64 {
    1e-9 * (1.0 + op_norm(a))
}

/// Eigenvalues of magnitude below this are rounding noise of an `n x n` eigensolve.
pub fn noise_floor(dim: usize, norm: f64) -> f64 {
    16.0 * f64::EPSILON * dim.max(1) as f64 * norm
}

/// Hermitian square root of the PSD part of `a`, and the magnitude of the clipped negative spectrum.
///
/// Eigenvalues inside the rounding noise floor are treated as zero, so an exact
/// projection keeps an exact square root instead of picking up `sqrt(eps)` noise.
pub fn psd_sqrt(a: &CMat) -> (CMat, f64) {
    let e = eigh(a);
    let clipped = e.values.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    let top = e.values.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let floor = noise_floor(a.nrows(), top);
    let roots: Vec<f64> = e.values.iter().map(|&v| if v > floor { v.sqrt() } else { 0.0 }).collect();
    (scaled_outer(&e.vectors, &roots), clipped)
}

/// `V diag(d) V^*`.
pub fn scaled_outer(v: &CMat, d: &[f64]) -> CMat {
    let mut scaled = v.clone();
    for (k, &dk) in d.iter().enumerate() {
        scaled.column_mut(k).scale_mut(dk);
    }
    scaled * v.adjoint()
}

/// Largest singular value.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if a.nrows() > 2 * a.ncols() {
        // ||A|| = sqrt(||A^* A||) with the smaller Gram matrix
        return max_eig(&(a.adjoint() * a)).max(0.0).sqrt();
    }
    if a.ncols() > 2 * a.nrows() {
        return max_eig(&(a * a.adjoint())).max(0.0).sqrt();
    }
    a.clone().singular_values().max()
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (p, q) = (a.nrows(), b.nrows());
    let mut out = CMat::zeros(p + q, a.ncols() + b.ncols());
    out.view_mut((0, 0), (p, a.ncols())).copy_from(a);
    out.view_mut((p, a.ncols()), (q, b.ncols())).copy_from(b);
    out
}

/// Largest eigenvalue of a Hermitian operator given only through its action,
/// by Lanczos with full reorthogonalization. The result never exceeds the true
/// largest eigenvalue beyond rounding.
pub fn lanczos_max_eig<F>(dim: usize, mut apply: F, iters: usize, rng: &mut impl Rng) -> f64
where
    F: FnMut(&CVec) -> CVec,
{
    if dim == 0 {
        return 0.0;
    }
    let steps = iters.min(dim).max(1);
    let mut q = CVec::from_fn(dim, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    q /= c(q.norm());
    let mut basis: Vec<CVec> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    for j in 0..steps {
        let mut w = apply(&basis[j]);
        let alpha = basis[j].dotc(&w).re;
        alphas.push(alpha);
        for _ in 0..2 {
            for v in &basis {
                let proj = v.dotc(&w);
                w.axpy(-proj, v, ONE);
            }
        }
        let beta = w.norm();
        let scale = alphas.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        if j + 1 == steps || beta <= 1e-13 * scale {
            break;
        }
        betas.push(beta);
        basis.push(w / c(beta));
    }
    let k = alphas.len();
    let tri = DMatrix::<f64>::from_fn(k, k, |r, s| {
        if r == s {
            alphas[r]
        } else if r + 1 == s {
            betas[r]
        } else if s + 1 == r {
            betas[s]
        } else {
            0.0
        }
    });
    tri.symmetric_eigen().eigenvalues.max()
}

/// Orthonormal basis (as columns) of the span of `columns`, by classical Gram-Schmidt
/// applied twice. A column is kept when its residual exceeds `rel_tol` times the
/// largest column norm seen.
pub fn orthonormal_span(dim: usize, columns: &[CVec], rel_tol: f64) -> CMat {
    let max_norm = columns.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis = CMat::zeros(dim, 0);
    if max_norm == 0.0 {
        return basis;
    }
    for v in columns {
        let mut r = v.clone();
        for _ in 0..2 {
            if basis.ncols() > 0 {
                let coeffs = basis.adjoint() * &r;
                r -= &basis * coeffs;
            }
        }
        let nr = r.norm();
        if nr > rel_tol * max_norm {
            let k = basis.ncols();
            basis = basis.insert_column(k, ZERO);
            basis.set_column(k, &(r / c(nr)));
        }
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of the column span of `basis` (orthonormal).
pub fn orthogonal_complement(basis: &CMat) -> CMat {
    let dim = basis.nrows();
    if basis.ncols() == 0 {
        return identity(dim);
    }
    let proj = identity(dim) - basis * basis.adjoint();
    let e = eigh(&proj);
    let keep: Vec<usize> = (0..dim).filter(|&k| e.values[k] > 0.5).collect();
    CMat::from_fn(dim, keep.len(), |r, k| e.vectors[(r, keep[k])])
}

/// Sine of the largest principal angle between two orthonormal column spans of equal dimension.
pub fn max_principal_sine(a: &CMat, b: &CMat) -> f64 {
    let ab = b - a * (a.adjoint() * b);
    let ba = a - b * (b.adjoint() * a);
    op_norm(&ab).max(op_norm(&ba))
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) / c(2f64.sqrt())
    })
}

/// Haar-distributed unitary via QR with phase correction.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMat {
    let g = gaussian_matrix(dim, dim, rng);
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / c(d.norm()) } else { ONE };
        q.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

/// `(I - A A^*)` applied to `B`, returned as a norm; a residual for `range(B) ⊆ range(A)`.
pub fn range_residual(a: &CMat, b: &CMat) -> f64 {
    op_norm(&(b - a * (a.adjoint() * b)))
}
