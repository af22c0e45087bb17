//! Noncommutative varieties: the subspaces `M_Q` and `N_Q`, the compressed models,
//! the constrained Berezin kernel, and for the commutator ideal the symmetric
//! weighted Fock space with its eigenvectors `z_lambda` and reproducing kernel.

use serde::{Deserialize, Serialize};

use crate::berezin::{dense_tensor_apply, geometric_tail, BerezinKernel};
use crate::coefficients::{symmetric_weights, WeightTable};
use crate::error::{Error, Result};
use crate::fock::{poly_operator, FockOperator, OperatorTuple};
use crate::linalg::{self, c, CMat, CVec, C64, ZERO};
use crate::poly::FreePolynomial;
use crate::words::{MultiDegree, Word};

/// Relative rank threshold for orthonormalizing generating vectors.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    /// No constraints on `n` letters.
    Empty { n: usize },
    /// `X_i X_j - X_j X_i` for all `i < j`.
    Commutators { n: usize },
    Polys { polys: Vec<FreePolynomial> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    n: usize,
    polys: Vec<FreePolynomial>,
    homogeneous: Vec<bool>,
}

impl ConstraintSet {
    pub fn new(n: usize, polys: Vec<FreePolynomial>) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroGenerators);
        }
        if let Some(p) = polys.iter().find(|p| p.n() != n) {
            return Err(Error::DimensionMismatch(format!("constraint on {} letters, expected {n}", p.n())));
        }
        let homogeneous = polys.iter().map(FreePolynomial::is_homogeneous).collect();
        Ok(ConstraintSet { n, polys, homogeneous })
    }

    pub fn empty(n: usize) -> Self {
        ConstraintSet { n, polys: Vec::new(), homogeneous: Vec::new() }
    }

    pub fn commutators(n: usize) -> Self {
        let mut polys = Vec::new();
        for i in 1..=n as u32 {
            for j in i + 1..=n as u32 {
                polys.push(FreePolynomial::from_real(n, &[(&[i, j], 1.0), (&[j, i], -1.0)]).expect("valid letters"));
            }
        }
        let homogeneous = vec![true; polys.len()];
        ConstraintSet { n, polys, homogeneous }
    }

    pub fn from_spec(spec: &ConstraintSpec) -> Result<Self> {
        match spec {
            ConstraintSpec::Empty { n } => Self::new(*n, Vec::new()),
            ConstraintSpec::Commutators { n } if *n == 0 => Err(Error::ZeroGenerators),
            ConstraintSpec::Commutators { n } => Ok(Self::commutators(*n)),
            ConstraintSpec::Polys { polys } => {
                let n = polys.first().map(FreePolynomial::n).ok_or_else(|| {
                    Error::InvalidInput("polys: empty list; use kind \"empty\" with n".into())
                })?;
                Self::new(n, polys.clone())
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn polys(&self) -> &[FreePolynomial] {
        &self.polys
    }

    pub fn homogeneous_flags(&self) -> &[bool] {
        &self.homogeneous
    }

    pub fn all_homogeneous(&self) -> bool {
        self.homogeneous.iter().all(|&h| h)
    }

    pub fn is_empty(&self) -> bool {
        self.polys.iter().all(FreePolynomial::is_zero)
    }

    pub fn max_degree(&self) -> usize {
        self.polys.iter().map(FreePolynomial::degree).max().unwrap_or(0)
    }

    /// `max_q ||q(T)||` together with the index of the worst polynomial.
    pub fn residual(&self, t: &OperatorTuple) -> Result<(usize, f64)> {
        let mut worst = (0, 0.0);
        for (k, q) in self.polys.iter().enumerate() {
            let v = linalg::op_norm(&t.eval(q)?);
            if v > worst.1 {
                worst = (k, v);
            }
        }
        Ok(worst)
    }

    /// Rejects `T` with `||q(T)|| > tol` for some `q`.
    pub fn require_annihilates(&self, t: &OperatorTuple, tol: f64) -> Result<()> {
        let (index, norm) = self.residual(t)?;
        if norm > tol {
            return Err(Error::ConstraintViolated { index, norm });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceKind {
    NqComputed,
    MqComputed,
    SymmetricExplicit,
}

/// Orthonormal columns spanning a subspace of the truncated Fock space.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub columns: CMat,
    pub kind: SubspaceKind,
    /// Degree of each column when the subspace is graded.
    pub degrees: Option<Vec<usize>>,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.columns.adjoint() * &self.columns;
        (g - linalg::identity(self.dim())).iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    /// Number of columns in each degree `0..=N`, when graded.
    pub fn dims_per_degree(&self, max_len: usize) -> Option<Vec<usize>> {
        self.degrees.as_ref().map(|d| {
            let mut out = vec![0; max_len + 1];
            for &k in d {
                out[k] += 1;
            }
            out
        })
    }

    /// Columns of degree below `k` (all columns when ungraded).
    pub fn below_degree(&self, k: usize) -> Vec<usize> {
        match &self.degrees {
            Some(d) => (0..self.dim()).filter(|&j| d[j] < k).collect(),
            None => (0..self.dim()).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintSubspaces {
    pub m_q: SubspaceBasis,
    pub n_q: SubspaceBasis,
    /// `1` lies in `N_Q`.
    pub vacuum_in_n: bool,
}

/// `W_alpha q(W) W_beta 1 = sum_gamma q_gamma b_{alpha gamma beta}^{-1/2} e_{alpha gamma beta}`.
fn generator(table: &WeightTable, alpha: &Word, q: &FreePolynomial, beta: &Word) -> Option<CVec> {
    let g = table.grading();
    let mut v = CVec::zeros(table.dim());
    for (gamma, &coef) in q.terms() {
        let w = alpha.concat(gamma).concat(beta);
        if w.len() > g.max_len() {
            return None;
        }
        let idx = g.index(w.letters());
        v[idx] += coef / c(table.sqrt_b()[idx]);
    }
    Some(v)
}

fn words_of_len(n: usize, k: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    for _ in 0..k {
        out = out
            .iter()
            .flat_map(|w| (1..=n as u32).map(move |i| w.concat(&Word::generator(i))))
            .collect();
    }
    out
}

/// Generators `W_alpha q(W) W_beta 1` with `|alpha| + |beta| = budget`.
fn generators_with_budget(table: &WeightTable, q: &FreePolynomial, budget: usize) -> Vec<CVec> {
    let n = table.n();
    let mut out = Vec::new();
    for la in 0..=budget {
        let alphas = words_of_len(n, la);
        let betas = words_of_len(n, budget - la);
        for a in &alphas {
            for b in &betas {
                if let Some(v) = generator(table, a, q, b) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// `M_Q` and `N_Q` inside the truncated Fock space of `table`.
///
/// Homogeneous constraint sets are handled degree by degree, where the truncated
/// subspaces are exact. Otherwise all generators fitting inside the truncation are
/// orthonormalized together.
pub fn constraint_subspace(table: &WeightTable, q: &ConstraintSet) -> Result<ConstraintSubspaces> {
    if q.n() != table.n() {
        return Err(Error::DimensionMismatch("constraints and weights use different n".into()));
    }
    let g = table.grading();
    let dim = table.dim();
    let big_n = g.max_len();
    let polys: Vec<&FreePolynomial> = q.polys().iter().filter(|p| !p.is_zero()).collect();
    if polys.iter().any(|p| p.degree() > big_n) {
        return Err(Error::DegreeBudget {
            needed: q.max_degree(),
            available: big_n,
        });
    }
    let (m_q, n_q) = if q.all_homogeneous() {
        let mut m_cols: Vec<(usize, CVec)> = Vec::new();
        let mut n_cols: Vec<(usize, CVec)> = Vec::new();
        for k in 0..=big_n {
            let shell = g.shell(k);
            let mut gens = Vec::new();
            for p in &polys {
                if p.degree() <= k {
                    gens.extend(generators_with_budget(table, p, k - p.degree()));
                }
            }
            let local: Vec<CVec> = gens.iter().map(|v| v.rows(shell.start, shell.len()).into_owned()).collect();
            let span = linalg::orthonormal_span(shell.len(), &local, RANK_TOL);
            let comp = linalg::orthogonal_complement(&span);
            let lift = |m: &CMat, out: &mut Vec<(usize, CVec)>| {
                for j in 0..m.ncols() {
                    let mut v = CVec::zeros(dim);
                    v.rows_mut(shell.start, shell.len()).copy_from(&m.column(j));
                    out.push((k, v));
                }
            };
            lift(&span, &mut m_cols);
            lift(&comp, &mut n_cols);
        }
        let assemble = |cols: Vec<(usize, CVec)>, kind| SubspaceBasis {
            columns: CMat::from_fn(dim, cols.len(), |r, j| cols[j].1[r]),
            degrees: Some(cols.iter().map(|(k, _)| *k).collect()),
            kind,
        };
        (assemble(m_cols, SubspaceKind::MqComputed), assemble(n_cols, SubspaceKind::NqComputed))
    } else {
        let mut gens = Vec::new();
        for p in &polys {
            for budget in 0..=big_n - p.degree() {
                gens.extend(generators_with_budget(table, p, budget));
            }
        }
        let span = linalg::orthonormal_span(dim, &gens, RANK_TOL);
        let comp = linalg::orthogonal_complement(&span);
        (
            SubspaceBasis { columns: span, kind: SubspaceKind::MqComputed, degrees: None },
            SubspaceBasis { columns: comp, kind: SubspaceKind::NqComputed, degrees: None },
        )
    };
    if n_q.dim() == 0 {
        return Err(Error::DegenerateSubspace);
    }
    let mut vacuum = CVec::zeros(dim);
    vacuum[0] = c(1.0);
    let vacuum_in_n = (&vacuum - &n_q.columns * (n_q.columns.adjoint() * &vacuum)).norm() < 1e-12;
    Ok(ConstraintSubspaces { m_q, n_q, vacuum_in_n })
}

/// `P^* A_i P` for each model operator, with `P` the basis columns.
pub fn compress_models(models: &[FockOperator], basis: &SubspaceBasis) -> Vec<CMat> {
    models.iter().map(|a| basis.columns.adjoint() * a.apply_dense(&basis.columns)).collect()
}

pub fn compressed_tuple(models: &[FockOperator], basis: &SubspaceBasis) -> Result<OperatorTuple> {
    OperatorTuple::new(compress_models(models, basis))
}

/// `(P^* (x) I_D) K`: the Berezin kernel of a tuple in the variety, viewed in `N_Q (x) D`.
#[derive(Clone, Debug)]
pub struct ConstrainedKernel {
    pub matrix: CMat,
    pub d_dim: usize,
    /// `| ||K_Q|| - ||K|| |`; zero when the range of `K` lies in `N_Q (x) D`.
    pub norm_loss: f64,
    /// `||K - (P P^* (x) I) K||`.
    pub range_residual: f64,
}

pub fn constrained_kernel(
    k: &BerezinKernel,
    basis: &SubspaceBasis,
    t: &OperatorTuple,
    q: &ConstraintSet,
    tol: f64,
) -> Result<ConstrainedKernel> {
    q.require_annihilates(t, tol)?;
    let d = k.d_dim();
    let matrix = dense_tensor_apply(&basis.columns.adjoint(), k.matrix(), d);
    let back = dense_tensor_apply(&basis.columns, &matrix, d);
    let range_residual = linalg::op_norm(&(k.matrix() - back));
    let norm_loss = (linalg::op_norm(&matrix) - k.norm()).abs();
    Ok(ConstrainedKernel { matrix, d_dim: d, norm_loss, range_residual })
}

impl ConstrainedKernel {
    /// `K_Q^* (g (x) I_D) K_Q` for a dense `g` on `N_Q`.
    pub fn transform(&self, g: &CMat) -> CMat {
        self.matrix.adjoint() * dense_tensor_apply(g, &self.matrix, self.d_dim)
    }

    /// `max_i ||K_Q T_i^* - (B_i^* (x) I) K_Q||` restricted to the basis columns of degree `< N`.
    pub fn intertwining_residual(&self, t: &OperatorTuple, b: &[CMat], basis: &SubspaceBasis, max_len: usize) -> f64 {
        let keep = basis.below_degree(max_len);
        let d = self.d_dim;
        let rows: Vec<usize> = keep.iter().flat_map(|&j| (0..d).map(move |a| j * d + a)).collect();
        let mut worst: f64 = 0.0;
        for (i, bi) in b.iter().enumerate() {
            let diff = &self.matrix * t.get(i).adjoint() - dense_tensor_apply(&bi.adjoint(), &self.matrix, d);
            let sel = CMat::from_fn(rows.len(), diff.ncols(), |r, k| diff[(rows[r], k)]);
            worst = worst.max(linalg::op_norm(&sel));
        }
        worst
    }
}

/// The vectors `w^k` for `|k| <= N` and their weights `gamma_k`.
#[derive(Clone, Debug)]
pub struct SymmetricBasis {
    /// Columns `sqrt(gamma_k) w^k` (orthonormal).
    pub basis: SubspaceBasis,
    pub multidegrees: Vec<MultiDegree>,
    pub gamma: Vec<f64>,
}

pub fn symmetric_basis(table: &WeightTable) -> SymmetricBasis {
    let n = table.n();
    let sw = symmetric_weights(table);
    let g = table.grading();
    let multidegrees: Vec<MultiDegree> = {
        let mut ks: Vec<MultiDegree> = sw.gamma.keys().cloned().collect();
        ks.sort_by(|a, b| a.total().cmp(&b.total()).then_with(|| b.cmp(a)));
        ks
    };
    let position: std::collections::HashMap<&MultiDegree, usize> =
        multidegrees.iter().enumerate().map(|(j, k)| (k, j)).collect();
    let gamma: Vec<f64> = multidegrees.iter().map(|k| sw.gamma[k]).collect();
    let mut columns = CMat::zeros(table.dim(), multidegrees.len());
    for idx in 0..table.dim() {
        let k = g.word(idx).multidegree(n);
        let j = position[&k];
        columns[(idx, j)] = c(table.sqrt_b()[idx] / gamma[j].sqrt());
    }
    let degrees = multidegrees.iter().map(MultiDegree::total).collect();
    SymmetricBasis {
        basis: SubspaceBasis { columns, kind: SubspaceKind::SymmetricExplicit, degrees: Some(degrees) },
        multidegrees,
        gamma,
    }
}

impl SymmetricBasis {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// `w^k` itself, of norm `1/sqrt(gamma_k)`.
    pub fn w_vector(&self, j: usize) -> CVec {
        self.basis.columns.column(j) / c(self.gamma[j].sqrt())
    }

    /// Coefficients `c_k` with `psi = sum c_k w^k` for `psi` in the span.
    pub fn coefficients(&self, psi: &CVec) -> Vec<C64> {
        (0..self.len()).map(|j| self.w_vector(j).dotc(psi) * self.gamma[j]).collect()
    }

    /// `sum c_k lambda^k`.
    pub fn evaluate(&self, coeffs: &[C64], lambda: &[C64]) -> C64 {
        coeffs.iter().zip(&self.multidegrees).map(|(ck, k)| ck * k.monomial(lambda)).sum()
    }

    pub fn project(&self, v: &CVec) -> CVec {
        let p = &self.basis.columns;
        p * (p.adjoint() * v)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalarDomainPoint {
    /// `sum_{|alpha| >= 1} a_alpha |lambda_alpha|^2`.
    pub sum: f64,
    pub inside: bool,
    pub margin: f64,
}

pub fn point_in_scalar_domain(f: &FreePolynomial, lambda: &[C64]) -> Result<ScalarDomainPoint> {
    if lambda.len() != f.n() {
        return Err(Error::DimensionMismatch(format!("point has {} coordinates, f has {}", lambda.len(), f.n())));
    }
    let sum: f64 = f
        .terms()
        .filter(|(w, _)| !w.is_empty())
        .map(|(w, a)| a.re * crate::poly::word_value(w, lambda).norm_sqr())
        .sum();
    Ok(ScalarDomainPoint { sum, inside: sum < 1.0, margin: 1.0 - sum })
}

fn require_inside(f: &FreePolynomial, lambda: &[C64]) -> Result<ScalarDomainPoint> {
    let p = point_in_scalar_domain(f, lambda)?;
    if !p.inside {
        return Err(Error::OutsideScalarDomain { sum: p.sum });
    }
    Ok(p)
}

/// Truncated `z_lambda = sum sqrt(b_beta) conj(lambda_beta) e_beta` with its tail certificate.
#[derive(Clone, Debug)]
pub struct ZVector {
    pub vector: CVec,
    pub normalized: bool,
    pub truncated_norm: f64,
    /// `(1 - sum a_alpha |lambda_alpha|^2)^{-m/2}`.
    pub analytic_norm: f64,
    /// `sum_{|alpha|=k} b_alpha |lambda_alpha|^2` for `k = 0..=N`.
    pub shell_mass: Vec<f64>,
    /// Extrapolated `||z_lambda - P_N z_lambda||^2`.
    pub tail_mass: f64,
    pub certified: bool,
}

impl ZVector {
    /// `sqrt` of the extrapolated tail mass, scaled like `vector`.
    pub fn certificate(&self) -> f64 {
        let scale = if self.normalized { 1.0 / self.truncated_norm } else { 1.0 };
        self.tail_mass.sqrt() * scale
    }

    /// Exact size of `||W_gamma^* P_N z - conj(lambda_gamma) P_N z||` divided by `|lambda_gamma|`:
    /// the norm of the top `len` shells.
    pub fn top_shells(&self, len: usize) -> f64 {
        let scale = if self.normalized { 1.0 / self.truncated_norm } else { 1.0 };
        let k = self.shell_mass.len();
        self.shell_mass[k.saturating_sub(len)..].iter().sum::<f64>().sqrt() * scale
    }
}

pub fn eigenvector_z(table: &WeightTable, lambda: &[C64], normalize: bool) -> Result<ZVector> {
    let f = table.f();
    let p = require_inside(f, lambda)?;
    let g = table.grading();
    let n = table.n();
    // conj(lambda)_alpha via the prefix recursion lambda_{g_i alpha} = lambda_i lambda_alpha
    let mut lam_word = vec![ZERO; table.dim()];
    lam_word[0] = c(1.0);
    for idx in 0..table.dim() {
        for i in 1..=n as u32 {
            if let Some(child) = g.left_mul(i, idx) {
                lam_word[child] = lambda[i as usize - 1] * lam_word[idx];
            }
        }
    }
    let sqrt_b = table.sqrt_b();
    let mut vector = CVec::from_fn(table.dim(), |idx, _| lam_word[idx].conj() * sqrt_b[idx]);
    let shell_mass: Vec<f64> = (0..=g.max_len())
        .map(|k| g.shell(k).map(|idx| vector[idx].norm_sqr()).sum())
        .collect();
    let (tail_mass, certified) = geometric_tail(&shell_mass);
    let truncated_norm = vector.norm();
    if normalize {
        vector /= c(truncated_norm);
    }
    Ok(ZVector {
        vector,
        normalized: normalize,
        truncated_norm,
        analytic_norm: p.margin.powf(-(table.m() as f64) / 2.0),
        shell_mass,
        tail_mass,
        certified,
    })
}

/// `K_f(mu, lambda) = (1 - sum a_alpha mu_alpha conj(lambda_alpha))^{-m}`.
pub fn rkhs_kernel(f: &FreePolynomial, m: usize, mu: &[C64], lambda: &[C64]) -> Result<C64> {
    require_inside(f, mu)?;
    require_inside(f, lambda)?;
    let s: C64 = f
        .terms()
        .filter(|(w, _)| !w.is_empty())
        .map(|(w, a)| a * crate::poly::word_value(w, mu) * crate::poly::word_value(w, lambda).conj())
        .sum();
    Ok((c(1.0) - s).powi(-(m as i32)))
}

/// `G_{ij} = K_f(lambda_i, lambda_j)`.
pub fn gram_matrix(f: &FreePolynomial, m: usize, points: &[Vec<C64>]) -> Result<CMat> {
    let k = points.len();
    let mut g = CMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = rkhs_kernel(f, m, &points[i], &points[j])?;
        }
    }
    Ok(g)
}

/// Largest degree carrying a nonzero entry of `v`.
pub fn vector_degree(table: &WeightTable, v: &CVec) -> usize {
    let g = table.grading();
    (0..table.dim()).rev().find(|&i| v[i] != ZERO).map(|i| g.len_of(i)).unwrap_or(0)
}

/// `M_phi psi = P_{F_s^2} phi(W) psi`.
pub fn multiplier_apply(
    table: &WeightTable,
    sym: &SymmetricBasis,
    models: &[FockOperator],
    phi: &FreePolynomial,
    psi: &CVec,
) -> Result<CVec> {
    let needed = phi.degree() + vector_degree(table, psi);
    if needed > table.max_len() {
        return Err(Error::DegreeBudget { needed, available: table.max_len() });
    }
    Ok(sym.project(&poly_operator(phi, models).apply(psi)))
}

/// `<psi, z_lambda>`, the function represented by `psi`.
pub fn evaluate_at(psi: &CVec, z: &ZVector) -> C64 {
    z.vector.dotc(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::weights_recursive;
    use crate::fock::build_left_model;

    fn drury(len: usize, m: usize) -> WeightTable {
        weights_recursive(&FreePolynomial::linear_sum(2), m, len).unwrap()
    }

    #[test]
    fn empty_constraints_give_everything() {
        let table = drury(3, 1);
        let s = constraint_subspace(&table, &ConstraintSet::empty(2)).unwrap();
        assert_eq!(s.m_q.dim(), 0);
        assert_eq!(s.n_q.dim(), table.dim());
        assert!(s.vacuum_in_n);
    }

    #[test]
    fn commutator_subspace_dims() {
        let table = drury(2, 1);
        let s = constraint_subspace(&table, &ConstraintSet::commutators(2)).unwrap();
        assert_eq!(s.n_q.dims_per_degree(2).unwrap(), vec![1, 2, 3]);
        assert_eq!(s.m_q.dims_per_degree(2).unwrap(), vec![0, 0, 1]);
        assert!(s.n_q.orthonormality_residual() < 1e-12);
    }

    #[test]
    fn single_letter_constraint() {
        let table = drury(3, 1);
        let q = ConstraintSet::new(2, vec![FreePolynomial::from_real(2, &[(&[1], 1.0)]).unwrap()]).unwrap();
        let s = constraint_subspace(&table, &q).unwrap();
        let idx = table.grading().index(&[2, 2, 2]);
        let mut e = CVec::zeros(table.dim());
        e[idx] = c(1.0);
        assert!((&s.n_q.columns * (s.n_q.columns.adjoint() * &e) - &e).norm() < 1e-12);
        assert_eq!(s.n_q.dim(), 4);
    }

    #[test]
    fn symmetric_basis_examples() {
        let table = drury(3, 1);
        let sym = symmetric_basis(&table);
        assert!(sym.basis.orthonormality_residual() < 1e-14);
        let j = sym.multidegrees.iter().position(|k| k.0 == vec![1, 1]).unwrap();
        let w = sym.w_vector(j);
        assert!((w.norm() - 0.5f64.sqrt()).abs() < 1e-15);
        let g = table.grading();
        assert!((w[g.index(&[1, 2])] - c(0.5)).norm() < 1e-15);
        assert!((w[g.index(&[2, 1])] - c(0.5)).norm() < 1e-15);
        assert_eq!(sym.w_vector(0)[0], c(1.0));

        let t1 = weights_recursive(&FreePolynomial::from_real(1, &[(&[1], 1.0)]).unwrap(), 3, 5).unwrap();
        let s1 = symmetric_basis(&t1);
        for (j, k) in s1.multidegrees.iter().enumerate() {
            assert!((s1.w_vector(j).norm() - 1.0 / t1.b()[k.0[0]].sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn commutator_complement_is_symmetric_span() {
        for m in 1..=2 {
            let table = drury(4, m);
            let s = constraint_subspace(&table, &ConstraintSet::commutators(2)).unwrap();
            let sym = symmetric_basis(&table);
            assert_eq!(s.n_q.dim(), sym.len());
            assert!(linalg::max_principal_sine(&s.n_q.columns, &sym.basis.columns) < 1e-10);
            let w = build_left_model(&table);
            let b = compress_models(&w, &s.n_q);
            assert!((&b[0] * &b[1] - &b[1] * &b[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn scalar_domain_examples() {
        let f = FreePolynomial::linear_sum(2);
        assert_eq!(point_in_scalar_domain(&f, &[ZERO, ZERO]).unwrap().margin, 1.0);
        let r = 0.5f64.sqrt();
        let p = point_in_scalar_domain(&f, &[c(r), c(r)]).unwrap();
        assert!(!p.inside || (p.sum - 1.0).abs() < 1e-15);
        let g = FreePolynomial::from_real(1, &[(&[1], 1.0), (&[1, 1], 1.0)]).unwrap();
        assert!((point_in_scalar_domain(&g, &[c(0.7)]).unwrap().sum - 0.7301).abs() < 1e-15);
        assert!(eigenvector_z(&drury(3, 1), &[c(0.8), c(0.8)], false).is_err());
    }

    #[test]
    fn z_vector_geometric() {
        let t = C64::new(0.3, 0.5);
        let table = weights_recursive(&FreePolynomial::from_real(1, &[(&[1], 1.0)]).unwrap(), 1, 60).unwrap();
        let z = eigenvector_z(&table, &[t], false).unwrap();
        for k in 0..=60 {
            assert!((z.vector[k] - t.conj().powu(k as u32)).norm() < 1e-14);
        }
        let exact = 1.0 / (1.0 - t.norm_sqr());
        assert!((z.truncated_norm.powi(2) - exact).abs() <= z.tail_mass + 1e-13);
        assert!((z.analytic_norm.powi(2) - exact).abs() < 1e-13);
    }

    #[test]
    fn z_eigen_and_kernel() {
        let f = FreePolynomial::from_real(2, &[(&[1], 1.0), (&[2], 1.0), (&[2, 1], 1.0)]).unwrap();
        let table = weights_recursive(&f, 2, 8).unwrap();
        let w = build_left_model(&table);
        let lam = [C64::new(0.2, 0.1), C64::new(-0.1, 0.25)];
        let mu = [C64::new(0.05, -0.3), C64::new(0.15, 0.0)];
        let zl = eigenvector_z(&table, &lam, false).unwrap();
        let zm = eigenvector_z(&table, &mu, false).unwrap();
        for i in 0..2 {
            let r = (w[i].adjoint().apply(&zl.vector) - &zl.vector * lam[i].conj()).norm();
            assert!(r <= lam[i].norm() * zl.top_shells(1) * (1.0 + 1e-10) + 1e-15);
        }
        let k = rkhs_kernel(&f, 2, &mu, &lam).unwrap();
        let ip = zm.vector.dotc(&zl.vector);
        assert!((k - ip).norm() <= zl.certificate() * zm.certificate() + 1e-12 * k.norm());
    }

    #[test]
    fn multiplier_is_pointwise_product() {
        let f = FreePolynomial::linear_sum(2);
        let table = drury(6, 2);
        let w = build_left_model(&table);
        let sym = symmetric_basis(&table);
        let phi = FreePolynomial::from_real(2, &[(&[1], 1.0), (&[1, 2], -0.5), (&[], 0.3)]).unwrap();
        let psi = sym.w_vector(1) * c(2.0) + sym.w_vector(4) - sym.w_vector(0);
        let out = multiplier_apply(&table, &sym, &w, &phi, &psi).unwrap();
        let lam = [C64::new(0.3, 0.2), C64::new(0.1, -0.4)];
        let z = eigenvector_z(&table, &lam, false).unwrap();
        let lhs = evaluate_at(&out, &z);
        let rhs = phi.eval_point(&lam) * evaluate_at(&psi, &z);
        assert!((lhs - rhs).norm() < 1e-12);
        let coeffs = sym.coefficients(&psi);
        assert!((sym.evaluate(&coeffs, &lam) - evaluate_at(&psi, &z)).norm() < 1e-13);
        let _ = f;
    }
}
