//! The noncommutative Berezin kernel `K h = sum sqrt(b_alpha) e_alpha (x) Delta T_alpha^* h`,
//! the Berezin transform in kernel and resolvent form, the von Neumann inequality,
//! and the polynomial functional calculus.

use serde::Serialize;

use crate::coefficients::{weights_recursive, WeightTable};
use crate::domain::purity;
use crate::error::{Error, Result};
use crate::fock::{build_left_model, build_right_model, defect_operator, poly_operator, word_operator};
use crate::fock::{CompletionMap, Defect, FockOperator, OperatorTuple};
use crate::linalg::{self, c, CMat, C64, ONE};
use crate::poly::FreePolynomial;
use crate::words::{binomial, Word};

/// Eigenvalues of `Delta^2` above this span the defect space.
pub const DEFECT_THRESHOLD: f64 = 1e-12;

/// How many trailing shell ratios feed the geometric tail extrapolation.
const TAIL_RATIOS: usize = 3;

/// The matrix of `K_{f,T}^(m)` from `H` into `F^2_N (x) D`.
///
/// Row `alpha * d + j` holds the `j`-th defect coordinate of the `alpha` block.
#[derive(Clone, Debug)]
pub struct BerezinKernel {
    table: WeightTable,
    h_dim: usize,
    defect: Defect,
    /// Orthonormal eigenvectors of `Delta^2` spanning `D` (columns, `H x d`).
    defect_basis: CMat,
    matrix: CMat,
    /// `||sum_{|alpha|=k} K_alpha^* K_alpha||` for `k = 0..=N`.
    shell_mass: Vec<f64>,
    tail_bound: f64,
    tail_certified: bool,
}

/// Geometric extrapolation of the mass beyond the last shell, using the largest of the
/// trailing shell ratios. Returns `(bound, certified)`.
pub fn geometric_tail(shells: &[f64]) -> (f64, bool) {
    let last = match shells.last() {
        Some(&v) => v,
        None => return (0.0, true),
    };
    if last == 0.0 {
        return (0.0, true);
    }
    let ratios: Vec<f64> = shells
        .windows(2)
        .rev()
        .take(TAIL_RATIOS)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let rho = ratios.iter().copied().fold(f64::NAN, f64::max);
    if !(rho < 1.0) {
        return (f64::INFINITY, false);
    }
    (last * rho / (1.0 - rho), true)
}

pub fn build_kernel(f: &FreePolynomial, m: usize, t: &OperatorTuple, max_len: usize) -> Result<BerezinKernel> {
    build_kernel_with_table(&weights_recursive(f, m, max_len)?, t)
}

pub fn build_kernel_with_table(table: &WeightTable, t: &OperatorTuple) -> Result<BerezinKernel> {
    let f = table.f();
    let defect = defect_operator(f, table.m(), t, None)?;
    let e = linalg::eigh(&defect.delta_sq);
    let keep: Vec<usize> = (0..t.dim()).filter(|&k| e.values[k] > DEFECT_THRESHOLD).collect();
    let d = keep.len();
    let h = t.dim();
    let defect_basis = CMat::from_fn(h, d, |r, k| e.vectors[(r, keep[k])]);
    // Delta restricted to D, in D coordinates: diag(sqrt(ev)) V^*
    let mut delta_d = defect_basis.adjoint();
    for (k, &idx) in keep.iter().enumerate() {
        delta_d.row_mut(k).scale_mut(e.values[idx].sqrt());
    }

    let g = table.grading();
    let dim = g.dim();
    let adjoints: Vec<CMat> = t.mats().iter().map(|m| m.adjoint()).collect();
    // C_alpha = Delta_D T_alpha^*, with C_{g_i alpha} = C_alpha T_i^*
    let mut blocks: Vec<CMat> = vec![CMat::zeros(d, h); dim];
    blocks[0] = delta_d;
    for idx in 0..dim {
        for i in 1..=table.n() as u32 {
            if let Some(child) = g.left_mul(i, idx) {
                blocks[child] = &blocks[idx] * &adjoints[i as usize - 1];
            }
        }
    }
    let sqrt_b = table.sqrt_b();
    let mut matrix = CMat::zeros(dim * d, h);
    let mut shell_mass = vec![0.0; g.max_len() + 1];
    for k in 0..=g.max_len() {
        let mut gram = CMat::zeros(h, h);
        for idx in g.shell(k) {
            let block = &blocks[idx] * c(sqrt_b[idx]);
            gram += block.adjoint() * &block;
            matrix.view_mut((idx * d, 0), (d, h)).copy_from(&block);
        }
        shell_mass[k] = linalg::max_eig(&gram).max(0.0);
    }
    let (tail_bound, tail_certified) = geometric_tail(&shell_mass);
    Ok(BerezinKernel {
        table: table.clone(),
        h_dim: h,
        defect,
        defect_basis,
        matrix,
        shell_mass,
        tail_bound,
        tail_certified,
    })
}

impl BerezinKernel {
    pub fn table(&self) -> &WeightTable {
        &self.table
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn d_dim(&self) -> usize {
        self.defect_basis.ncols()
    }

    pub fn fock_dim(&self) -> usize {
        self.table.dim()
    }

    pub fn max_len(&self) -> usize {
        self.table.max_len()
    }

    pub fn defect(&self) -> &Defect {
        &self.defect
    }

    pub fn defect_basis(&self) -> &CMat {
        &self.defect_basis
    }

    pub fn shell_mass(&self) -> &[f64] {
        &self.shell_mass
    }

    /// Estimated `||sum_{|alpha| > N} K_alpha^* K_alpha||`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn tail_certified(&self) -> bool {
        self.tail_certified
    }

    /// Tail estimate for the kernel cut at degree `k <= N`: the stored shells beyond `k`
    /// plus the extrapolated remainder.
    pub fn tail_bound_from(&self, k: usize) -> f64 {
        self.shell_mass[k + 1..].iter().sum::<f64>() + self.tail_bound
    }

    /// `||K^* K - (I - Q)||`.
    pub fn isometry_residual(&self, q: &CMat) -> f64 {
        let kk = self.matrix.adjoint() * &self.matrix;
        linalg::op_norm(&(kk - (linalg::identity(self.h_dim) - q)))
    }

    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.matrix)
    }

    /// `(A (x) I_D) K` for a sparse `A` on the truncated Fock space.
    pub fn apply_fock(&self, a: &FockOperator) -> CMat {
        tensor_apply(a, &self.matrix, self.d_dim())
    }

    /// `(A^* (x) I_D) K`.
    pub fn apply_fock_adjoint(&self, a: &FockOperator) -> CMat {
        tensor_apply_adjoint(a, &self.matrix, self.d_dim())
    }
}

/// `(A (x) I_d) X` for `X` with rows indexed by `(alpha, j)`.
pub fn tensor_apply(a: &FockOperator, x: &CMat, d: usize) -> CMat {
    let mut out = CMat::zeros(x.nrows(), x.ncols());
    for col in 0..a.dim() {
        for &(row, v) in a.column(col) {
            for j in 0..d {
                for k in 0..x.ncols() {
                    out[(row * d + j, k)] += v * x[(col * d + j, k)];
                }
            }
        }
    }
    out
}

/// `(A^* (x) I_d) X`.
pub fn tensor_apply_adjoint(a: &FockOperator, x: &CMat, d: usize) -> CMat {
    let mut out = CMat::zeros(x.nrows(), x.ncols());
    for col in 0..a.dim() {
        for &(row, v) in a.column(col) {
            let vc = v.conj();
            for j in 0..d {
                for k in 0..x.ncols() {
                    out[(col * d + j, k)] += vc * x[(row * d + j, k)];
                }
            }
        }
    }
    out
}

/// `(G (x) I_d) X` for a dense `G`.
pub fn dense_tensor_apply(g: &CMat, x: &CMat, d: usize) -> CMat {
    let mut out = CMat::zeros(g.nrows() * d, x.ncols());
    for j in 0..d {
        let xj = CMat::from_fn(g.ncols(), x.ncols(), |s, k| x[(s * d + j, k)]);
        let yj = g * xj;
        for r in 0..g.nrows() {
            for k in 0..x.ncols() {
                out[(r * d + j, k)] = yj[(r, k)];
            }
        }
    }
    out
}

/// `(A (x) S) X` for `X` with rows indexed by `(alpha, j)`, `S` a dense `h x h` matrix.
fn tensor_apply_both(a: &FockOperator, s: &CMat, x: &CMat) -> CMat {
    let h = s.nrows();
    let mut out = CMat::zeros(x.nrows(), x.ncols());
    for col in 0..a.dim() {
        if a.column(col).is_empty() {
            continue;
        }
        let block = x.view((col * h, 0), (h, x.ncols()));
        if block.iter().all(|z| *z == linalg::ZERO) {
            continue;
        }
        let image = s * block;
        for &(row, v) in a.column(col) {
            let mut target = out.view_mut((row * h, 0), (h, x.ncols()));
            target += &image * v;
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct IntertwiningReport {
    /// `max_i ||K T_i^* - (W_i^* (x) I) K||` on rows of degree `< N`.
    pub safe: f64,
    /// The same difference on the top-degree rows, where the truncated `W_i^*` is zero.
    pub top_shell: f64,
}

pub fn intertwining_residual(k: &BerezinKernel, t: &OperatorTuple, w: &[FockOperator]) -> IntertwiningReport {
    let d = k.d_dim();
    let g = k.table.grading();
    let top = g.shell(g.max_len());
    let mut safe: f64 = 0.0;
    let mut top_shell: f64 = 0.0;
    for (i, wi) in w.iter().enumerate() {
        let lhs = &k.matrix * t.get(i).adjoint();
        let rhs = k.apply_fock_adjoint(wi);
        let diff = lhs - rhs;
        let split = top.start * d;
        let low = diff.rows(0, split).into_owned();
        let high = diff.rows(split, diff.nrows() - split).into_owned();
        safe = safe.max(linalg::op_norm(&low));
        top_shell = top_shell.max(linalg::op_norm(&high));
    }
    IntertwiningReport { safe, top_shell }
}

/// `K^* (g (x) I_D) K`.
pub fn transform(k: &BerezinKernel, g: &FockOperator) -> Result<CMat> {
    if g.dim() != k.fock_dim() {
        return Err(Error::DimensionMismatch(format!(
            "symbol acts on dimension {}, kernel on {}",
            g.dim(),
            k.fock_dim()
        )));
    }
    Ok(k.matrix.adjoint() * k.apply_fock(g))
}

/// `W_alpha W_beta^*` on the kernel's truncated space.
pub fn model_monomial(w: &[FockOperator], alpha: &Word, beta: &Word) -> FockOperator {
    word_operator(alpha, w).mul(&word_operator(beta, w).adjoint())
}

#[derive(Clone, Debug)]
pub struct ResolventTransform {
    pub value: CMat,
    /// Number of nonzero Neumann terms.
    pub terms: usize,
    pub last_term_norm: f64,
}

/// The Berezin transform through `(I - sum a_{alpha~} Lambda_alpha (x) T_{alpha~}^*)^{-m}`:
/// `B_T[g] = R^* (g (x) Delta^2) R` with `R = (I - A)^{-m} (1 (x) I_H)`.
///
/// On the truncated space `A` raises degree, so the Neumann series stops after at most `N` terms.
pub fn transform_resolvent(table: &WeightTable, t: &OperatorTuple, g: &FockOperator) -> Result<ResolventTransform> {
    let f = table.f();
    let m = table.m();
    let h = t.dim();
    let dim = table.dim();
    if g.dim() != dim {
        return Err(Error::DimensionMismatch("symbol and truncation differ".into()));
    }
    let phi_i = CompletionMap::new(f, t)?.apply(&linalg::identity(h));
    if linalg::op_norm(&phi_i) >= 1.0 {
        return Err(Error::InvalidInput("resolvent form needs ||Phi(I)|| < 1".into()));
    }
    let defect = defect_operator(f, m, t, None)?;
    let lambda = build_right_model(table);
    let pieces: Vec<(C64, FockOperator, CMat)> = f
        .terms()
        .filter(|(w, _)| !w.is_empty())
        .map(|(w, a)| (*a, word_operator(&w.reverse(), &lambda), t.word(w).adjoint()))
        .collect();

    let mut term = CMat::zeros(dim * h, h);
    for j in 0..h {
        term[(j, j)] = ONE;
    }
    let mut r = term.clone();
    let mut terms = 1;
    let mut last_term_norm = 1.0;
    for k in 1..=dim {
        let mut next = CMat::zeros(dim * h, h);
        for (a, op, s) in &pieces {
            next += tensor_apply_both(op, s, &term) * *a;
        }
        term = next;
        let nrm = term.norm();
        if !nrm.is_finite() {
            return Err(Error::Divergence { terms: k });
        }
        if nrm == 0.0 {
            break;
        }
        last_term_norm = nrm;
        terms += 1;
        r += &term * c(binomial(k + m - 1, m - 1));
    }
    let sandwich = tensor_apply_both(g, &defect.delta_sq, &r);
    Ok(ResolventTransform { value: r.adjoint() * sandwich, terms, last_term_norm })
}

/// `sum c_alpha conj(c_beta) X_alpha X_beta^*` for `p = sum c_alpha X_alpha`.
pub fn hermitian_square_symbol(p: &[(Word, C64)]) -> Vec<(Word, Word, C64)> {
    let mut out = Vec::with_capacity(p.len() * p.len());
    for (a, ca) in p {
        for (b, cb) in p {
            out.push((a.clone(), b.clone(), ca * cb.conj()));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct VonNeumannReport {
    /// `||sum c T_alpha T_beta^*||`.
    pub lhs: f64,
    /// `||P_N (sum c W_alpha W_beta^*) P_N||` at the final truncation; a lower bound for the
    /// untruncated norm.
    pub rhs: f64,
    pub max_len: usize,
    /// `(N, rhs_N)` for every truncation tried.
    pub history: Vec<(usize, f64)>,
    /// The last step changed `rhs` by less than the stabilization tolerance.
    pub stabilized: bool,
}

#[derive(Clone, Debug)]
pub struct VonNeumannOptions {
    pub start_len: usize,
    pub max_len: usize,
    pub stabilize_tol: f64,
    /// Stop increasing `N` once `lhs <= rhs_N`, which already certifies the inequality.
    pub stop_when_certified: bool,
    /// Double `N` between attempts instead of adding 2. Stabilization is still judged
    /// by the change from `N - 2` to `N` at the final truncation.
    pub doubling: bool,
}

impl Default for VonNeumannOptions {
    fn default() -> Self {
        VonNeumannOptions { start_len: 4, max_len: 12, stabilize_tol: 1e-6, stop_when_certified: false, doubling: false }
    }
}

/// `||P_N (sum c W_alpha W_beta^*) P_N||`.
fn truncated_symbol_norm(f: &FreePolynomial, m: usize, symbol: &[(Word, Word, C64)], len: usize) -> Result<f64> {
    let table = weights_recursive(f, m, len)?;
    let w = build_left_model(&table);
    let mut op = FockOperator::zeros(table.dim());
    for (a, b, coeff) in symbol {
        op = op.add_scaled(&model_monomial(&w, a, b), *coeff);
    }
    Ok(if op.dim() <= 400 { op.norm() } else { op.norm_lanczos(op.dim().min(300)) })
}

pub fn von_neumann_check(
    f: &FreePolynomial,
    m: usize,
    t: &OperatorTuple,
    symbol: &[(Word, Word, C64)],
    opts: &VonNeumannOptions,
) -> Result<VonNeumannReport> {
    let mut lhs_mat = CMat::zeros(t.dim(), t.dim());
    let mut budget = 0;
    for (a, b, coeff) in symbol {
        lhs_mat += t.word(a) * t.word(b).adjoint() * *coeff;
        budget = budget.max(a.len().max(b.len()));
    }
    let lhs = linalg::op_norm(&lhs_mat);
    let mut history: Vec<(usize, f64)> = Vec::new();
    let mut len = opts.start_len.max(budget);
    loop {
        let rhs = truncated_symbol_norm(f, m, symbol, len)?;
        let stabilized = matches!(history.last(), Some(&(l, prev)) if l + 2 == len && (rhs - prev).abs() < opts.stabilize_tol);
        history.push((len, rhs));
        let certified = opts.stop_when_certified && lhs <= rhs;
        let next = if opts.doubling { 2 * len } else { len + 2 };
        if stabilized || certified || next > opts.max_len {
            break;
        }
        len = next;
    }
    let &(max_len, rhs) = history.last().unwrap();
    let prev = match history.iter().rev().nth(1) {
        Some(&(l, v)) if l + 2 == max_len => Some(v),
        _ if max_len >= budget + 2 => Some(truncated_symbol_norm(f, m, symbol, max_len - 2)?),
        _ => None,
    };
    let stabilized = prev.is_some_and(|p| (rhs - p).abs() < opts.stabilize_tol);
    Ok(VonNeumannReport { lhs, rhs, max_len, history, stabilized })
}

#[derive(Clone, Debug)]
pub struct PolyCalculus {
    /// `K^* (g(W) (x) I) K`.
    pub transform: CMat,
    /// `g(T)`.
    pub direct: CMat,
    pub residual: f64,
}

/// `Psi_T(g) = B_T[g(W)]` for a polynomial `g`, compared with `g(T)`. Only pure `T` is accepted.
pub fn poly_calculus(k: &BerezinKernel, t: &OperatorTuple, g: &FreePolynomial) -> Result<PolyCalculus> {
    let f = k.table.f();
    let p = purity(f, t, 100_000, 1e-14)?;
    if !p.is_pure {
        return Err(Error::NotPure { residual: p.final_norm, steps: p.steps });
    }
    let w = build_left_model(&k.table);
    let transform = transform(k, &poly_operator(g, &w))?;
    let direct = t.eval(g)?;
    let residual = linalg::op_norm(&(&transform - &direct));
    Ok(PolyCalculus { transform, direct, residual })
}
