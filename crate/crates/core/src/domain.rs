//! Membership in `D_f^m(H)`, the joint spectral radius, purity, and the
//! positivity lemmas for the completion map.

use serde::Serialize;

use crate::coefficients::validate_positive_regular;
use crate::error::{Error, Result};
use crate::fock::{CompletionMap, OperatorTuple};
use crate::linalg::{self, CMat};
use crate::poly::FreePolynomial;
use crate::words::binomial;

/// Iterates above this norm are treated as overflow.
pub const OVERFLOW_LIMIT: f64 = 1e300;

#[derive(Clone, Debug, Serialize)]
pub struct DomainReport {
    pub member: bool,
    /// Some `(id - Phi)^k(I)` has its minimum eigenvalue in `[-tol, 0)`.
    pub boundary: bool,
    /// Minimum eigenvalue of `(id - Phi)^k(I)` for `k = 1..=m`.
    pub min_eigs: Vec<f64>,
    /// Tolerance used for each `k`.
    pub tols: Vec<f64>,
    /// Largest anti-Hermitian part removed before the eigensolves.
    pub symmetrization: f64,
    /// `||Phi^K(I)||^{1/2K}`; absent when the iterates overflow.
    pub radius_estimate: Option<f64>,
    /// `||Phi^K(I)||` at the purity cutoff; only for members.
    pub purity_defect: Option<f64>,
    pub cnc: Option<bool>,
    pub radial_pass_fraction: Option<f64>,
}

/// Defaults used by [`check_membership`].
#[derive(Clone, Debug)]
pub struct DomainOptions {
    /// Fixed PSD tolerance; `None` means `1e-9 (1 + ||(id - Phi)^k(I)||)`.
    pub tol: Option<f64>,
    pub radius_steps: usize,
    pub purity_steps: usize,
    pub purity_tol: f64,
    pub r_grid: Option<Vec<f64>>,
}

impl Default for DomainOptions {
    fn default() -> Self {
        DomainOptions { tol: None, radius_steps: 32, purity_steps: 2000, purity_tol: 1e-12, r_grid: None }
    }
}

fn checked_map(f: &FreePolynomial, t: &OperatorTuple) -> Result<CompletionMap> {
    validate_positive_regular(f).into_result()?;
    CompletionMap::new(f, t)
}

/// Minimum eigenvalues of `(id - Phi)^k(I)`, `k = 1..=m`, with their tolerances.
fn power_min_eigs(phi: &CompletionMap, m: usize, tol: Option<f64>) -> (Vec<f64>, Vec<f64>, f64) {
    let chain = phi.defect_chain(m);
    let mut mins = Vec::with_capacity(m);
    let mut tols = Vec::with_capacity(m);
    let mut sym: f64 = 0.0;
    for d in &chain[1..] {
        let e = linalg::eigh(d);
        sym = sym.max(e.symmetrization);
        mins.push(e.values.first().copied().unwrap_or(0.0));
        let norm = e.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        tols.push(tol.unwrap_or(1e-9 * (1.0 + norm)));
    }
    (mins, tols, sym)
}

pub fn check_membership(f: &FreePolynomial, m: usize, t: &OperatorTuple, tol: Option<f64>) -> Result<DomainReport> {
    check_membership_with(f, m, t, &DomainOptions { tol, ..DomainOptions::default() })
}

pub fn check_membership_with(
    f: &FreePolynomial,
    m: usize,
    t: &OperatorTuple,
    opts: &DomainOptions,
) -> Result<DomainReport> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    let phi = checked_map(f, t)?;
    let (min_eigs, tols, symmetrization) = power_min_eigs(&phi, m, opts.tol);
    let member = min_eigs.iter().zip(&tols).all(|(v, tol)| *v >= -tol);
    let boundary = member && min_eigs.iter().any(|v| *v < 0.0);

    let radius_estimate = spectral_radius(f, t, opts.radius_steps).ok().map(|r| r.estimate);
    let (purity_defect, cnc) = if member {
        let p = purity(f, t, opts.purity_steps, opts.purity_tol)?;
        let top = linalg::max_eig(&p.q);
        (Some(p.final_norm), Some(top < 1.0 - opts.purity_tol.max(1e-9)))
    } else {
        (None, None)
    };
    let radial_pass_fraction = match &opts.r_grid {
        Some(grid) => Some(radial_check(f, m, t, grid, opts.tol)?.pass_fraction),
        None => None,
    };
    Ok(DomainReport {
        member,
        boundary,
        min_eigs,
        tols,
        symmetrization,
        radius_estimate,
        purity_defect,
        cnc,
        radial_pass_fraction,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusEstimate {
    /// `||Phi^K(I)||^{1/2K}` at `K = k_max`.
    pub estimate: f64,
    /// The estimates at `K = k_max - 2, k_max - 1, k_max`.
    pub trend: Vec<f64>,
}

/// `||Phi^k(I)||^{1/2k}` at `k = k_max`, computed with renormalized iterates.
pub fn spectral_radius(f: &FreePolynomial, t: &OperatorTuple, k_max: usize) -> Result<RadiusEstimate> {
    if k_max < 2 {
        return Err(Error::InvalidInput("k_max must be at least 2".into()));
    }
    let phi = CompletionMap::new(f, t)?;
    let mut y = linalg::identity(t.dim());
    let mut log_norm = 0.0f64;
    let mut estimates = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        y = phi.apply(&y);
        let nrm = linalg::op_norm(&y);
        if nrm == 0.0 {
            estimates.resize(k_max, 0.0);
            break;
        }
        log_norm += nrm.ln();
        if log_norm > OVERFLOW_LIMIT.ln() || !nrm.is_finite() {
            return Err(Error::Overflow { step: k });
        }
        y /= linalg::c(nrm);
        estimates.push((log_norm / (2.0 * k as f64)).exp());
    }
    let trend = estimates[k_max - 3.min(k_max)..].to_vec();
    Ok(RadiusEstimate { estimate: estimates[k_max - 1], trend })
}

#[derive(Clone, Debug)]
pub struct PurityReport {
    pub is_pure: bool,
    pub steps: usize,
    /// `||Phi^K(I)||` at the final step.
    pub final_norm: f64,
    /// `||Phi^K(I) - Phi^{K+1}(I)||` at the final step.
    pub last_change: f64,
    /// Estimate of `Q = lim Phi^k(I)`.
    pub q: CMat,
    /// `||Phi^k(I)||` for every step, starting at `k = 0`.
    pub norms: Vec<f64>,
}

/// Iterates `Phi^k(I)` until successive iterates differ by less than `tol` or `k_max` is reached.
pub fn purity(f: &FreePolynomial, t: &OperatorTuple, k_max: usize, tol: f64) -> Result<PurityReport> {
    let phi = CompletionMap::new(f, t)?;
    let mut y = linalg::identity(t.dim());
    let mut norms = vec![1.0];
    let mut last_change = f64::INFINITY;
    let mut steps = 0;
    while steps < k_max {
        let next = phi.apply(&y);
        last_change = linalg::op_norm(&(&next - &y));
        y = next;
        steps += 1;
        let nrm = linalg::op_norm(&y);
        if !nrm.is_finite() || nrm > OVERFLOW_LIMIT {
            return Err(Error::Overflow { step: steps });
        }
        norms.push(nrm);
        if last_change < tol {
            break;
        }
    }
    let final_norm = *norms.last().unwrap();
    let (q, _) = linalg::hermitian_part(&y);
    Ok(PurityReport { is_pure: final_norm < tol, steps, final_norm, last_change, q, norms })
}

/// `true` iff the largest eigenvalue of the estimated `Q_{f,T}` is below `1 - tol`.
pub fn is_cnc(f: &FreePolynomial, t: &OperatorTuple, k_max: usize, tol: f64) -> Result<bool> {
    let p = purity(f, t, k_max, tol)?;
    Ok(linalg::max_eig(&p.q) < 1.0 - tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialWitness {
    pub r: f64,
    pub member: bool,
    pub min_eig: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialReport {
    pub pass_fraction: f64,
    pub witnesses: Vec<RadialWitness>,
}

/// Membership of `rT` for each `r` in the grid.
pub fn radial_check(
    f: &FreePolynomial,
    m: usize,
    t: &OperatorTuple,
    r_grid: &[f64],
    tol: Option<f64>,
) -> Result<RadialReport> {
    let mut witnesses = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let phi = checked_map(f, &t.scaled(r))?;
        let (mins, tols, _) = power_min_eigs(&phi, m, tol);
        let member = mins.iter().zip(&tols).all(|(v, tol)| *v >= -tol);
        let min_eig = mins.iter().copied().fold(f64::INFINITY, f64::min);
        witnesses.push(RadialWitness { r, member, min_eig });
    }
    let passed = witnesses.iter().filter(|w| w.member).count();
    let pass_fraction = if witnesses.is_empty() { 1.0 } else { passed as f64 / witnesses.len() as f64 };
    Ok(RadialReport { pass_fraction, witnesses })
}

/// Residual norm of
/// `sum_{p=0}^q C(p+k-1, k-1) phi^p (id-phi)^k (D) = D - sum_{j=0}^{k-1} C(q+j, j) phi^{q+1} (id-phi)^j (D)`.
pub fn telescoping_check(f: &FreePolynomial, t: &OperatorTuple, d: &CMat, k: usize, q: usize) -> Result<f64> {
    if k == 0 || q == 0 {
        return Err(Error::InvalidInput("k and q must be at least 1".into()));
    }
    let phi = CompletionMap::new(f, t)?;
    if d.nrows() != t.dim() || d.ncols() != t.dim() {
        return Err(Error::DimensionMismatch("D does not act on the tuple's space".into()));
    }
    let mut lhs = CMat::zeros(t.dim(), t.dim());
    let mut term = phi.defect_power(d, k);
    for p in 0..=q {
        lhs += &term * linalg::c(binomial(p + k - 1, k - 1));
        term = phi.apply(&term);
    }
    let mut rhs = d.clone();
    let mut inner = d.clone();
    for j in 0..k {
        rhs -= phi.power(&inner, q + 1) * linalg::c(binomial(q + j, j));
        inner = phi.defect_power(&inner, 1);
    }
    Ok(linalg::op_norm(&(lhs - rhs)))
}

#[derive(Clone, Debug, Serialize)]
pub struct CascadeReport {
    /// `Phi(I) <= I` and `(id - Phi)^m(I) >= 0` within tolerance.
    pub precondition: bool,
    /// `(id-Phi)^m(I) <= ... <= (id-Phi)(I) <= I` and the last term is PSD.
    pub chain_holds: bool,
    /// Minimum eigenvalue of each consecutive difference `(id-Phi)^k(I) - (id-Phi)^{k+1}(I)`, `k = 0..m`,
    /// followed by the minimum eigenvalue of `(id-Phi)^m(I)`.
    pub slacks: Vec<f64>,
    pub min_slack: f64,
    pub tol: f64,
}

pub fn positivity_cascade_check(f: &FreePolynomial, m: usize, t: &OperatorTuple, tol: f64) -> Result<CascadeReport> {
    let phi = checked_map(f, t)?;
    let chain = phi.defect_chain(m);
    let mut slacks = Vec::with_capacity(m + 1);
    for k in 0..m {
        slacks.push(linalg::min_eig(&(&chain[k] - &chain[k + 1])));
    }
    let last = linalg::min_eig(&chain[m]);
    slacks.push(last);
    let precondition = slacks[0] >= -tol && last >= -tol;
    let min_slack = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CascadeReport { precondition, chain_holds: min_slack >= -tol, slacks, min_slack, tol })
}

/// `p^k lambda_max(Phi^p (id - Phi)^k (I))`; tends to zero on pure members for `k < m`.
pub fn defect_decay(f: &FreePolynomial, t: &OperatorTuple, k: usize, p: usize) -> Result<f64> {
    let phi = CompletionMap::new(f, t)?;
    let d = phi.defect_power(&linalg::identity(t.dim()), k);
    let v = linalg::max_eig(&phi.power(&d, p));
    Ok((p as f64).powi(k as i32) * v)
}
