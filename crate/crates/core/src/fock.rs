//! Truncated full Fock space, the weighted shift models, operator tuples and the
//! completion map `Phi_{f,T}(Y) = sum a_alpha T_alpha Y T_alpha^*`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{validate_positive_regular, WeightTable};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, C64, ONE, ZERO};
use crate::poly::{word_matrix, FreePolynomial};
use crate::words::{binomial, Grading, Word};

/// The span of `e_alpha` for `|alpha| <= N`, in graded lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedFock {
    grading: Grading,
}

impl TruncatedFock {
    pub fn new(n: usize, max_len: usize) -> Result<Self> {
        Ok(TruncatedFock { grading: Grading::new(n, max_len)? })
    }

    pub fn from_grading(grading: Grading) -> Self {
        TruncatedFock { grading }
    }

    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    pub fn n(&self) -> usize {
        self.grading.n()
    }

    pub fn max_len(&self) -> usize {
        self.grading.max_len()
    }

    pub fn dim(&self) -> usize {
        self.grading.dim()
    }

    pub fn basis(&self) -> Vec<Word> {
        (0..self.dim()).map(|i| self.grading.word(i)).collect()
    }

    /// Orthogonal projection onto the degree `<= k` words, as a diagonal 0/1 mask.
    pub fn degree_mask(&self, k: usize) -> Vec<bool> {
        (0..self.dim()).map(|i| self.grading.len_of(i) <= k).collect()
    }
}

/// A square sparse complex matrix stored by columns.
///
/// Instances include the models `W_i`, `Lambda_i`, their compressions, and
/// polynomial expressions in them.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    dim: usize,
    cols: Vec<Vec<(usize, C64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

impl FockOperator {
    pub fn zeros(dim: usize) -> Self {
        FockOperator { dim, cols: vec![Vec::new(); dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![ONE; dim])
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let cols = d
            .iter()
            .enumerate()
            .map(|(i, &v)| if v == ZERO { Vec::new() } else { vec![(i, v)] })
            .collect();
        FockOperator { dim: d.len(), cols }
    }

    /// Rank-one projection onto `e_i`.
    pub fn basis_projection(dim: usize, i: usize) -> Self {
        let mut op = Self::zeros(dim);
        op.cols[i].push((i, ONE));
        op
    }

    pub fn from_dense(a: &CMat) -> Self {
        let dim = a.nrows();
        let cols = (0..dim)
            .map(|j| (0..dim).filter(|&i| a[(i, j)] != ZERO).map(|i| (i, a[(i, j)])).collect())
            .collect();
        FockOperator { dim, cols }
    }

    pub fn from_triplets(dim: usize, triplets: &[Triplet]) -> Result<Self> {
        let mut op = Self::zeros(dim);
        for t in triplets {
            if t.row >= dim || t.col >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({}, {}) outside a {dim}-dimensional space",
                    t.row, t.col
                )));
            }
            op.push(t.row, t.col, C64::new(t.re, t.im));
        }
        Ok(op)
    }

    fn push(&mut self, row: usize, col: usize, v: C64) {
        match self.cols[col].iter_mut().find(|(r, _)| *r == row) {
            Some(entry) => entry.1 += v,
            None => self.cols[col].push((row, v)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn column(&self, j: usize) -> &[(usize, C64)] {
        &self.cols[j]
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.cols[j].iter().find(|(r, _)| *r == i).map(|e| e.1).unwrap_or(ZERO)
    }

    pub fn to_dense(&self) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                out[(i, j)] += v;
            }
        }
        out
    }

    pub fn triplets(&self) -> Vec<Triplet> {
        let mut out: Vec<Triplet> = self
            .cols
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |&(i, v)| Triplet { row: i, col: j, re: v.re, im: v.im }))
            .collect();
        out.sort_by_key(|t| (t.col, t.row));
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut cols = vec![Vec::new(); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                cols[i].push((j, v.conj()));
            }
        }
        for col in &mut cols {
            col.sort_by_key(|e| e.0);
        }
        FockOperator { dim: self.dim, cols }
    }

    /// `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let mut acc = vec![ZERO; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut cols = Vec::with_capacity(self.dim);
        for col in &other.cols {
            for &(k, b) in col {
                for &(i, a) in &self.cols[k] {
                    if acc[i] == ZERO {
                        touched.push(i);
                    }
                    acc[i] += a * b;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let mut out = Vec::with_capacity(touched.len());
            for &i in &touched {
                if acc[i] != ZERO {
                    out.push((i, acc[i]));
                }
                acc[i] = ZERO;
            }
            touched.clear();
            cols.push(out);
        }
        FockOperator { dim: self.dim, cols }
    }

    pub fn add_scaled(&self, other: &Self, s: C64) -> Self {
        let mut out = self.clone();
        for (j, col) in other.cols.iter().enumerate() {
            for &(i, v) in col {
                out.push(i, j, v * s);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, ONE)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, c(-1.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        FockOperator {
            dim: self.dim,
            cols: self.cols.iter().map(|col| col.iter().map(|&(i, v)| (i, v * s)).collect()).collect(),
        }
    }

    pub fn apply(&self, x: &CVec) -> CVec {
        let mut y = CVec::zeros(self.dim);
        for (j, col) in self.cols.iter().enumerate() {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            for &(i, v) in col {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `self * X` for a dense `X` with `dim` rows.
    pub fn apply_dense(&self, x: &CMat) -> CMat {
        let mut y = CMat::zeros(self.dim, x.ncols());
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                for k in 0..x.ncols() {
                    y[(i, k)] += v * x[(j, k)];
                }
            }
        }
        y
    }

    /// `self^* * X` without materializing the adjoint.
    pub fn apply_adjoint_dense(&self, x: &CMat) -> CMat {
        let mut y = CMat::zeros(self.dim, x.ncols());
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                let vc = v.conj();
                for k in 0..x.ncols() {
                    y[(j, k)] += vc * x[(i, k)];
                }
            }
        }
        y
    }

    /// Diagonal entries, or `None` when an off-diagonal entry is nonzero.
    pub fn as_diagonal(&self) -> Option<Vec<C64>> {
        let mut d = vec![ZERO; self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                if i != j {
                    if v != ZERO {
                        return None;
                    }
                } else {
                    d[j] += v;
                }
            }
        }
        Some(d)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.cols.iter().flatten().map(|e| e.1.norm()).fold(0.0, f64::max)
    }

    /// Operator norm: exact for diagonal operators, dense SVD for small ones,
    /// and Lanczos on `A^* A` otherwise (a lower estimate).
    pub fn norm(&self) -> f64 {
        if let Some(d) = self.as_diagonal() {
            return d.iter().map(|z| z.norm()).fold(0.0, f64::max);
        }
        if self.dim <= 400 {
            return linalg::op_norm(&self.to_dense());
        }
        self.norm_lanczos(120)
    }

    pub fn norm_lanczos(&self, iters: usize) -> f64 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let adj = self.adjoint();
        linalg::lanczos_max_eig(self.dim, |x| adj.apply(&self.apply(x)), iters, &mut rng)
            .max(0.0)
            .sqrt()
    }

    /// Restriction of columns and rows to a degree cap, zeroing everything else.
    pub fn restrict(&self, keep: &[bool]) -> Self {
        FockOperator {
            dim: self.dim,
            cols: self
                .cols
                .iter()
                .enumerate()
                .map(|(j, col)| {
                    if keep[j] {
                        col.iter().copied().filter(|&(i, _)| keep[i]).collect()
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
        }
    }
}

/// Product `X_{i_1} ... X_{i_k}` of sparse operators.
pub fn word_operator(w: &Word, ops: &[FockOperator]) -> FockOperator {
    let dim = ops[0].dim();
    let mut acc = FockOperator::identity(dim);
    for &l in w.letters() {
        acc = acc.mul(&ops[l as usize - 1]);
    }
    acc
}

/// `p(X)` for sparse operators.
pub fn poly_operator(p: &FreePolynomial, ops: &[FockOperator]) -> FockOperator {
    let dim = ops[0].dim();
    let mut acc = FockOperator::zeros(dim);
    for (w, coeff) in p.terms() {
        acc = acc.add_scaled(&word_operator(w, ops), *coeff);
    }
    acc
}

/// `n` square complex matrices of equal size.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTuple {
    dim: usize,
    mats: Vec<CMat>,
}

impl OperatorTuple {
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::ZeroGenerators);
        }
        let dim = mats[0].nrows();
        for (k, m) in mats.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "matrix {k} is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("matrix {k} has a non-finite entry")));
            }
        }
        Ok(OperatorTuple { dim, mats })
    }

    pub fn zero(n: usize, dim: usize) -> Self {
        OperatorTuple { dim, mats: vec![CMat::zeros(dim, dim); n] }
    }

    /// The `1x1` tuple of a scalar point.
    pub fn scalar(point: &[C64]) -> Self {
        OperatorTuple { dim: 1, mats: point.iter().map(|&z| CMat::from_element(1, 1, z)).collect() }
    }

    pub fn n(&self) -> usize {
        self.mats.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mats(&self) -> &[CMat] {
        &self.mats
    }

    pub fn get(&self, i: usize) -> &CMat {
        &self.mats[i]
    }

    /// `T_alpha`.
    pub fn word(&self, w: &Word) -> CMat {
        word_matrix(w, &self.mats)
    }

    pub fn eval(&self, p: &FreePolynomial) -> Result<CMat> {
        p.eval_matrices(&self.mats)
    }

    pub fn scaled(&self, t: f64) -> Self {
        OperatorTuple { dim: self.dim, mats: self.mats.iter().map(|m| m * c(t)).collect() }
    }

    /// `U^* T_i U`.
    pub fn conjugated(&self, u: &CMat) -> Self {
        let ua = u.adjoint();
        OperatorTuple { dim: self.dim, mats: self.mats.iter().map(|m| &ua * m * u).collect() }
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch("tuples have different lengths".into()));
        }
        Ok(OperatorTuple {
            dim: self.dim + other.dim,
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| linalg::block_diag(a, b)).collect(),
        })
    }

    /// `T_i (x) I_k`.
    pub fn tensor_identity(&self, k: usize) -> Self {
        let id = linalg::identity(k);
        OperatorTuple { dim: self.dim * k, mats: self.mats.iter().map(|m| m.kronecker(&id)).collect() }
    }

    fn check_poly(&self, f: &FreePolynomial) -> Result<()> {
        if f.n() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "polynomial has {} variables, tuple has {} operators",
                f.n(),
                self.n()
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TupleRepr {
    matrices: Vec<Vec<Vec<[f64; 2]>>>,
}

impl Serialize for OperatorTuple {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TupleRepr { matrices: self.mats.iter().map(matrix_to_rows).collect() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OperatorTuple {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = TupleRepr::deserialize(deserializer)?;
        let mut mats = Vec::with_capacity(repr.matrices.len());
        for (k, rows) in repr.matrices.iter().enumerate() {
            mats.push(rows_to_matrix(rows).map_err(|e| serde::de::Error::custom(format!("matrices[{k}]: {e}")))?);
        }
        OperatorTuple::new(mats).map_err(serde::de::Error::custom)
    }
}

pub fn matrix_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMat, String> {
    let n = rows.len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(format!("row {i} has {} entries, expected {n} (matrix must be square)", r.len()));
    }
    Ok(CMat::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// `Phi_{f,X}` with the products `X_alpha` precomputed.
#[derive(Clone, Debug)]
pub struct CompletionMap {
    dim: usize,
    terms: Vec<(C64, CMat)>,
}

impl CompletionMap {
    pub fn new(f: &FreePolynomial, x: &OperatorTuple) -> Result<Self> {
        x.check_poly(f)?;
        let terms = f
            .terms()
            .filter(|(w, _)| !w.is_empty())
            .map(|(w, a)| (*a, x.word(w)))
            .collect();
        Ok(CompletionMap { dim: x.dim(), terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, y: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (a, t) in &self.terms {
            out += t * y * t.adjoint() * *a;
        }
        out
    }

    pub fn power(&self, y: &CMat, k: usize) -> CMat {
        let mut out = y.clone();
        for _ in 0..k {
            out = self.apply(&out);
        }
        out
    }

    /// `(id - Phi)^k(Y)`.
    pub fn defect_power(&self, y: &CMat, k: usize) -> CMat {
        let mut out = y.clone();
        for _ in 0..k {
            out = &out - self.apply(&out);
        }
        out
    }

    /// `[(id - Phi)^k(I)]` for `k = 0..=m`.
    pub fn defect_chain(&self, m: usize) -> Vec<CMat> {
        let mut chain = vec![linalg::identity(self.dim)];
        for k in 1..=m {
            let prev = &chain[k - 1];
            chain.push(prev - self.apply(prev));
        }
        chain
    }
}

/// `Phi_{f,X}(Y) = sum_{|alpha| >= 1} a_alpha X_alpha Y X_alpha^*`.
pub fn completion_map(f: &FreePolynomial, x: &OperatorTuple, y: &CMat) -> Result<CMat> {
    if y.nrows() != x.dim() || y.ncols() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Y is {}x{}, tuple acts on dimension {}",
            y.nrows(),
            y.ncols(),
            x.dim()
        )));
    }
    Ok(CompletionMap::new(f, x)?.apply(y))
}

/// Sparse version of [`completion_map`] for operators on a truncated Fock space.
pub fn completion_map_sparse(f: &FreePolynomial, ops: &[FockOperator], y: &FockOperator) -> FockOperator {
    let mut out = FockOperator::zeros(y.dim());
    for (w, a) in f.terms() {
        if w.is_empty() {
            continue;
        }
        let t = word_operator(w, ops);
        out = out.add_scaled(&t.mul(y).mul(&t.adjoint()), *a);
    }
    out
}

/// Weighted left creation operators `W_i e_alpha = sqrt(b_alpha / b_{g_i alpha}) e_{g_i alpha}`,
/// with the top degree mapped to zero.
pub fn build_left_model(table: &WeightTable) -> Vec<FockOperator> {
    build_model(table, |g, i, idx| g.left_mul(i, idx))
}

/// Weighted right creation operators `Lambda_i e_gamma = sqrt(b_gamma / b_{gamma g_i}) e_{gamma g_i}`.
pub fn build_right_model(table: &WeightTable) -> Vec<FockOperator> {
    build_model(table, |g, i, idx| g.right_mul(idx, i))
}

fn build_model(table: &WeightTable, step: impl Fn(&Grading, u32, usize) -> Option<usize>) -> Vec<FockOperator> {
    let g = table.grading();
    let s = table.sqrt_b();
    (1..=table.n() as u32)
        .map(|i| {
            let cols = (0..g.dim())
                .map(|idx| match step(g, i, idx) {
                    Some(to) => vec![(to, c(s[idx] / s[to]))],
                    None => Vec::new(),
                })
                .collect();
            FockOperator { dim: g.dim(), cols }
        })
        .collect()
}

/// The unitary `U e_alpha = e_{alpha~}`.
pub fn reversal_unitary(grading: &Grading) -> FockOperator {
    let cols = (0..grading.dim())
        .map(|idx| {
            let w = grading.word(idx).reverse();
            vec![(grading.index(w.letters()), ONE)]
        })
        .collect();
    FockOperator { dim: grading.dim(), cols }
}

/// `Delta = [(id - Phi_{f,T})^m(I)]^{1/2}` with bookkeeping.
#[derive(Clone, Debug)]
pub struct Defect {
    /// `(id - Phi)^m(I)` after Hermitian symmetrization.
    pub delta_sq: CMat,
    pub delta: CMat,
    pub min_eig: f64,
    /// Size of the negative spectrum clipped to zero.
    pub clipped: f64,
    pub symmetrization: f64,
}

pub fn defect_operator(f: &FreePolynomial, m: usize, t: &OperatorTuple, tol: Option<f64>) -> Result<Defect> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    let phi = CompletionMap::new(f, t)?;
    let raw = phi.defect_power(&linalg::identity(t.dim()), m);
    let (delta_sq, symmetrization) = linalg::hermitian_part(&raw);
    let min_eig = linalg::min_eig(&delta_sq);
    let tol = tol.unwrap_or_else(|| linalg::psd_tol(&delta_sq));
    if min_eig < -tol {
        return Err(Error::NotInDomain { power: m, min_eig });
    }
    let (delta, clipped) = linalg::psd_sqrt(&delta_sq);
    Ok(Defect { delta_sq, delta, min_eig, clipped, symmetrization })
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    /// `max_i ||U^* Lambda_i^(f) U - W_i^(f~)||` with `U e_alpha = e_{alpha~}`.
    pub reversal: f64,
    /// `max_{i,j} ||[W_i, Lambda_j]||` on columns of degree at most `N - 2`.
    pub commutator: f64,
}

/// Reversal and commutation relations between the left and right models; `reversed`
/// holds the weights of `f~` at the same truncation.
pub fn model_symmetries(table: &WeightTable, reversed: &WeightTable) -> Result<SymmetryReport> {
    if table.grading() != reversed.grading() {
        return Err(Error::DimensionMismatch("weight tables use different truncations".into()));
    }
    let g = table.grading();
    let u = reversal_unitary(g);
    let lambda = build_right_model(table);
    let w = build_left_model(table);
    let w_rev = build_left_model(reversed);
    let mut reversal: f64 = 0.0;
    for (l, wt) in lambda.iter().zip(&w_rev) {
        reversal = reversal.max(u.adjoint().mul(l).mul(&u).sub(wt).norm());
    }
    let safe: Vec<bool> = (0..g.dim()).map(|i| g.len_of(i) + 2 <= g.max_len()).collect();
    let mut commutator: f64 = 0.0;
    for wi in &w {
        for lj in &lambda {
            let comm = wi.mul(lj).sub(&lj.mul(wi));
            let restricted = FockOperator {
                dim: comm.dim,
                cols: comm.cols.iter().enumerate().map(|(j, col)| if safe[j] { col.clone() } else { Vec::new() }).collect(),
            };
            commutator = commutator.max(restricted.norm());
        }
    }
    Ok(SymmetryReport { reversal, commutator })
}

/// Residuals of the universal-model identities on the truncated space.
#[derive(Clone, Debug, Serialize)]
pub struct UniversalModelReport {
    pub n: usize,
    pub m: usize,
    pub max_len: usize,
    pub dim: usize,
    /// `max(0, lambda_max(Phi_{f,W}(I)) - 1)`.
    pub phi_contractive: f64,
    /// `||(id - Phi_{f,W})^m(I) - P_C||`.
    pub defect_is_vacuum_projection: f64,
    /// `max ||Phi^p_{f,W}(I) e_alpha||` over `p > |alpha|`.
    pub phi_powers_vanish: f64,
    /// `||sum_beta b_beta W_beta P_C W_beta^* - I||`.
    pub resolution_of_identity: f64,
    /// `max_k max(0, ||sum_{|beta|=k} b_beta W_beta W_beta^*|| - C(k+m-1, m-1))`.
    pub shell_bound_excess: f64,
    /// `||diag Phi_{f,W}(I) - (b^(m) - b^(m-1))/b^(m)||`.
    pub phi_diagonal_formula: f64,
}

impl UniversalModelReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.phi_contractive,
            self.defect_is_vacuum_projection,
            self.phi_powers_vanish,
            self.resolution_of_identity,
            self.shell_bound_excess,
            self.phi_diagonal_formula,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn verify_universal_model(table: &WeightTable) -> UniversalModelReport {
    let f = table.f();
    let m = table.m();
    let g = table.grading();
    let dim = g.dim();
    let big_n = g.max_len();
    let w = build_left_model(table);

    let phi_i = completion_map_sparse(f, &w, &FockOperator::identity(dim));
    let phi_contractive = (phi_i.norm() - 1.0).max(0.0);

    let b = table.b();
    let b_prev = table.level(m - 1);
    let predicted: Vec<C64> = (0..dim).map(|i| c((b[i] - b_prev[i]) / b[i])).collect();
    let phi_diagonal_formula = phi_i.sub(&FockOperator::diagonal(&predicted)).max_abs();

    let mut defect = FockOperator::identity(dim);
    for _ in 0..m {
        defect = defect.sub(&completion_map_sparse(f, &w, &defect));
    }
    let vacuum = FockOperator::basis_projection(dim, 0);
    let defect_is_vacuum_projection = defect.sub(&vacuum).norm();

    let mut phi_powers_vanish: f64 = 0.0;
    let mut power = FockOperator::identity(dim);
    for p in 1..=big_n + 1 {
        power = completion_map_sparse(f, &w, &power);
        for j in 0..dim {
            if g.len_of(j) < p {
                let col: f64 = power.column(j).iter().map(|e| e.1.norm_sqr()).sum();
                phi_powers_vanish = phi_powers_vanish.max(col.sqrt());
            }
        }
    }

    // W_beta e_0 for every beta, built letter by letter from the left
    let mut vac_images: Vec<CVec> = Vec::with_capacity(dim);
    let mut e0 = CVec::zeros(dim);
    e0[0] = ONE;
    vac_images.push(e0);
    for idx in 1..dim {
        let word = g.word(idx);
        let first = word.letters()[0];
        let rest = g.index(&word.letters()[1..]);
        let v = w[first as usize - 1].apply(&vac_images[rest]);
        vac_images.push(v);
    }
    let mut resolution = FockOperator::zeros(dim);
    let mut shells = vec![FockOperator::zeros(dim); big_n + 1];
    for (idx, v) in vac_images.iter().enumerate() {
        let entries: Vec<(usize, C64)> = (0..dim).filter(|&i| v[i] != ZERO).map(|i| (i, v[i])).collect();
        let mut outer = FockOperator::zeros(dim);
        for &(j, vj) in &entries {
            for &(i, vi) in &entries {
                outer.push(i, j, vi * vj.conj() * b[idx]);
            }
        }
        resolution = resolution.add(&outer);
        let beta = g.word(idx);
        let wb = word_operator(&beta, &w);
        shells[beta.len()] = shells[beta.len()].add_scaled(&wb.mul(&wb.adjoint()), c(b[idx]));
    }
    let resolution_of_identity = resolution.sub(&FockOperator::identity(dim)).norm();
    let shell_bound_excess = shells
        .iter()
        .enumerate()
        .map(|(k, s)| (s.norm() - binomial(k + m - 1, m - 1)).max(0.0))
        .fold(0.0, f64::max);

    UniversalModelReport {
        n: table.n(),
        m,
        max_len: big_n,
        dim,
        phi_contractive,
        defect_is_vacuum_projection,
        phi_powers_vanish,
        resolution_of_identity,
        shell_bound_excess,
        phi_diagonal_formula,
    }
}

/// Checks `f` and builds both models.
pub fn models(table: &WeightTable) -> Result<(Vec<FockOperator>, Vec<FockOperator>)> {
    validate_positive_regular(table.f()).into_result()?;
    Ok((build_left_model(table), build_right_model(table)))
}
