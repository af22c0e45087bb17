//! Dilation of a variety member to `(B (x) I_D) (+) U` on `(N_Q (x) D) (+) K`,
//! the constrained-shift characterizations, and the boundary fixed-point lemma.

use serde::Serialize;

use crate::berezin::{build_kernel_with_table, dense_tensor_apply, tensor_apply, tensor_apply_adjoint, BerezinKernel};
use crate::coefficients::weights_recursive;
use crate::domain::{check_membership, purity};
use crate::error::{Error, Result};
use crate::fock::{build_left_model, completion_map_sparse, CompletionMap, FockOperator, OperatorTuple};
use crate::linalg::{self, c, CMat, CVec};
use crate::poly::FreePolynomial;
use crate::variety::{constraint_subspace, symmetric_basis, ConstraintSet, SubspaceBasis};
use crate::words::Word;

#[derive(Clone, Debug)]
pub struct DilationOptions {
    pub start_len: usize,
    pub max_len: usize,
    /// Required bound on the kernel mass in the top shell and beyond.
    pub shell_tol: f64,
    /// Eigenvalues of `Q` above this span `K`.
    pub q_threshold: f64,
    /// Tolerance for `||q(T)|| = 0`.
    pub constraint_tol: f64,
    pub purity_steps: usize,
    pub purity_tol: f64,
    /// Largest `|alpha|, |beta|` for the `T_alpha T_beta^* = E^* V_alpha V_beta^* E` residual.
    pub word_budget: usize,
}

impl Default for DilationOptions {
    fn default() -> Self {
        DilationOptions {
            start_len: 2,
            max_len: 16,
            shell_tol: 1e-20,
            q_threshold: 1e-10,
            constraint_tol: 1e-9,
            purity_steps: 200_000,
            purity_tol: 1e-15,
            word_budget: 2,
        }
    }
}

/// The shift operators `B_i`: the full truncated model when `Q` is empty, otherwise
/// dense compressions to an orthonormal basis of `N_Q`.
#[derive(Clone, Debug)]
pub enum ShiftPart {
    Full { models: Vec<FockOperator> },
    Compressed { basis: SubspaceBasis, b: Vec<CMat>, phi_identity: CMat },
}

impl ShiftPart {
    pub fn dim(&self) -> usize {
        match self {
            ShiftPart::Full { models } => models[0].dim(),
            ShiftPart::Compressed { basis, .. } => basis.dim(),
        }
    }

    /// `(B_i (x) I_d) X`.
    pub fn apply(&self, i: usize, x: &CMat, d: usize) -> CMat {
        match self {
            ShiftPart::Full { models } => tensor_apply(&models[i], x, d),
            ShiftPart::Compressed { b, .. } => dense_tensor_apply(&b[i], x, d),
        }
    }

    /// `(B_i^* (x) I_d) X`.
    pub fn apply_adjoint(&self, i: usize, x: &CMat, d: usize) -> CMat {
        match self {
            ShiftPart::Full { models } => tensor_apply_adjoint(&models[i], x, d),
            ShiftPart::Compressed { b, .. } => dense_tensor_apply(&b[i].adjoint(), x, d),
        }
    }

    /// `||Phi_{f,B}(I) - I||`.
    fn phi_identity_deviation(&self, f: &FreePolynomial) -> f64 {
        match self {
            ShiftPart::Full { models } => {
                let phi = completion_map_sparse(f, models, &FockOperator::identity(models[0].dim()));
                phi.sub(&FockOperator::identity(phi.dim())).norm()
            }
            ShiftPart::Compressed { phi_identity, .. } => {
                linalg::op_norm(&(phi_identity - linalg::identity(phi_identity.nrows())))
            }
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DilationResiduals {
    /// `||E^* E - I||`.
    pub isometry: f64,
    /// `max_i ||V_i^* E - E T_i^*||`.
    pub intertwining: f64,
    /// `max_i ||(I - E E^*) V_i^* E||`.
    pub co_invariance: f64,
    /// `max ||T_alpha T_beta^* - E^* V_alpha V_beta^* E||` over the word budget.
    pub words: f64,
    /// `||Phi_{f,U}(I) - I||`.
    pub phi_u_identity: f64,
    /// `max_q ||q(U)||`.
    pub constraints_u: f64,
    /// `max_i max(0, ||L_i|| - 1/sqrt(a_{g_i}))`.
    pub l_bound_excess: f64,
}

impl DilationResiduals {
    pub fn max(&self) -> f64 {
        [
            self.isometry,
            self.intertwining,
            self.co_invariance,
            self.words,
            self.phi_u_identity,
            self.constraints_u,
            self.l_bound_excess,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct Dilation {
    pub f: FreePolynomial,
    pub m: usize,
    pub max_len: usize,
    pub h_dim: usize,
    pub d_dim: usize,
    pub k_dim: usize,
    /// `E = [K_{f,T,Q}; Y]`, rows ordered as `N_Q (x) D` then `K`.
    pub embed: CMat,
    pub shift: ShiftPart,
    /// The boundary tuple `U_i` on `K` (empty matrices when `K = {0}`).
    pub u: Vec<CMat>,
    pub kernel_tail: f64,
    pub top_shell_mass: f64,
    pub is_pure: bool,
    pub purity_steps: usize,
    /// `||Phi_{f,T}(I) - I||`.
    pub phi_t_deviation: f64,
    /// `||Phi_{f,V}(I) - I||` on the dilation space.
    pub phi_v_deviation: f64,
    pub constraints: ConstraintSet,
    pub residuals: DilationResiduals,
}

fn shift_part(table: &crate::coefficients::WeightTable, q: &ConstraintSet) -> Result<ShiftPart> {
    let models = build_left_model(table);
    if q.is_empty() {
        return Ok(ShiftPart::Full { models });
    }
    let basis = if *q == ConstraintSet::commutators(q.n()) {
        symmetric_basis(table).basis
    } else {
        constraint_subspace(table, q)?.n_q
    };
    let b = crate::variety::compress_models(&models, &basis);
    let phi = completion_map_sparse(table.f(), &models, &FockOperator::identity(table.dim()));
    let phi_identity = basis.columns.adjoint() * phi.apply_dense(&basis.columns);
    Ok(ShiftPart::Compressed { basis, b, phi_identity })
}

/// `(P^* (x) I_D) K` for the compressed shift part, `K` itself otherwise.
fn project_kernel(shift: &ShiftPart, k: &BerezinKernel) -> CMat {
    match shift {
        ShiftPart::Full { .. } => k.matrix().clone(),
        ShiftPart::Compressed { basis, .. } => dense_tensor_apply(&basis.columns.adjoint(), k.matrix(), k.d_dim()),
    }
}

pub fn dilate(f: &FreePolynomial, m: usize, t: &OperatorTuple, q: &ConstraintSet, opts: &DilationOptions) -> Result<Dilation> {
    let membership = check_membership(f, m, t, None)?;
    if !membership.member {
        let (k, &v) = membership
            .min_eigs
            .iter()
            .enumerate()
            .zip(&membership.tols)
            .find(|((_, v), tol)| **v < -**tol)
            .map(|(p, _)| p)
            .expect("a failing power");
        return Err(Error::NotInDomain { power: k + 1, min_eig: v });
    }
    if q.n() != f.n() {
        return Err(Error::DimensionMismatch("constraints and f use different n".into()));
    }
    q.require_annihilates(t, opts.constraint_tol)?;

    // truncation: smallest N whose top shell and extrapolated tail are below shell_tol
    let mut len = opts.start_len.max(q.max_degree()).max(1);
    let (table, kernel) = loop {
        let table = weights_recursive(f, m, len)?;
        let kernel = build_kernel_with_table(&table, t)?;
        let top = *kernel.shell_mass().last().unwrap();
        if kernel.tail_certified() && top <= opts.shell_tol && kernel.tail_bound() <= opts.shell_tol {
            break (table, kernel);
        }
        if len >= opts.max_len {
            return Err(Error::TailUnattainable {
                achieved: top.max(kernel.tail_bound()),
                target: opts.shell_tol,
                cap: opts.max_len,
            });
        }
        len += 1;
    };

    let p = purity(f, t, opts.purity_steps, opts.purity_tol)?;
    let e = linalg::eigh(&p.q);
    let keep: Vec<usize> = (0..t.dim()).filter(|&k| e.values[k] > opts.q_threshold).collect();
    let k_dim = keep.len();
    let r = CMat::from_fn(t.dim(), k_dim, |row, k| e.vectors[(row, keep[k])]);
    let sig: Vec<f64> = keep.iter().map(|&k| e.values[k]).collect();
    // Y = Sigma^{1/2} R^*, L_i = Y T_i^* R Sigma^{-1/2}, U_i = L_i^*
    let mut y = r.adjoint();
    let mut r_inv = r.clone();
    for (k, &s) in sig.iter().enumerate() {
        y.row_mut(k).scale_mut(s.sqrt());
        r_inv.column_mut(k).scale_mut(1.0 / s.sqrt());
    }
    let u: Vec<CMat> = t.mats().iter().map(|ti| (&y * ti.adjoint() * &r_inv).adjoint()).collect();

    let shift = shift_part(&table, q)?;
    let kq = project_kernel(&shift, &kernel);
    let shift_rows = kq.nrows();
    let mut embed = CMat::zeros(shift_rows + k_dim, t.dim());
    embed.rows_mut(0, shift_rows).copy_from(&kq);
    embed.rows_mut(shift_rows, k_dim).copy_from(&y);

    let phi_t = CompletionMap::new(f, t)?.apply(&linalg::identity(t.dim()));
    let phi_t_deviation = linalg::op_norm(&(phi_t - linalg::identity(t.dim())));
    let phi_u_dev = if k_dim == 0 {
        0.0
    } else {
        let ut = OperatorTuple::new(u.clone())?;
        linalg::op_norm(&(CompletionMap::new(f, &ut)?.apply(&linalg::identity(k_dim)) - linalg::identity(k_dim)))
    };
    let phi_v_deviation = if kernel.d_dim() == 0 { phi_u_dev } else { phi_u_dev.max(shift.phi_identity_deviation(f)) };

    let mut d = Dilation {
        f: f.clone(),
        m,
        max_len: len,
        h_dim: t.dim(),
        d_dim: kernel.d_dim(),
        k_dim,
        embed,
        shift,
        u,
        kernel_tail: kernel.tail_bound(),
        top_shell_mass: *kernel.shell_mass().last().unwrap(),
        is_pure: p.is_pure,
        purity_steps: p.steps,
        phi_t_deviation,
        phi_v_deviation,
        constraints: q.clone(),
        residuals: DilationResiduals::default(),
    };
    d.residuals = verify_dilation(&d, t, opts.word_budget)?;
    Ok(d)
}

impl Dilation {
    fn shift_rows(&self) -> usize {
        self.shift.dim() * self.d_dim
    }

    /// `V_i^* X` for `X` with rows in `(N_Q (x) D) (+) K`.
    pub fn apply_v_adjoint(&self, i: usize, x: &CMat) -> CMat {
        self.apply_block(x, |s, top| s.shift.apply_adjoint(i, top, s.d_dim), |s| s.u[i].adjoint())
    }

    /// `V_i X`.
    pub fn apply_v(&self, i: usize, x: &CMat) -> CMat {
        self.apply_block(x, |s, top| s.shift.apply(i, top, s.d_dim), |s| s.u[i].clone())
    }

    fn apply_block(&self, x: &CMat, shift: impl Fn(&Self, &CMat) -> CMat, boundary: impl Fn(&Self) -> CMat) -> CMat {
        let sr = self.shift_rows();
        let top = x.rows(0, sr).into_owned();
        let mut out = CMat::zeros(x.nrows(), x.ncols());
        if self.d_dim > 0 {
            out.rows_mut(0, sr).copy_from(&shift(self, &top));
        }
        if self.k_dim > 0 {
            let bottom = x.rows(sr, self.k_dim).into_owned();
            out.rows_mut(sr, self.k_dim).copy_from(&(boundary(self) * bottom));
        }
        out
    }

    /// `V_beta^* E` with `V_beta^* = V_{i_k}^* ... V_{i_1}^*`.
    pub fn word_adjoint_embed(&self, beta: &Word) -> CMat {
        let mut x = self.embed.clone();
        for &l in beta.letters() {
            x = self.apply_v_adjoint(l as usize - 1, &x);
        }
        x
    }

    pub fn is_shift(&self) -> bool {
        self.k_dim == 0
    }
}

fn words_up_to(n: usize, len: usize) -> Vec<Word> {
    let mut all = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..len {
        layer = layer
            .iter()
            .flat_map(|w| (1..=n as u32).map(move |i| w.concat(&Word::generator(i))))
            .collect();
        all.extend(layer.iter().cloned());
    }
    all
}

pub fn verify_dilation(d: &Dilation, t: &OperatorTuple, word_budget: usize) -> Result<DilationResiduals> {
    let e = &d.embed;
    let h = d.h_dim;
    let isometry = linalg::op_norm(&(e.adjoint() * e - linalg::identity(h)));
    let mut intertwining: f64 = 0.0;
    let mut co_invariance: f64 = 0.0;
    for i in 0..t.n() {
        let x = d.apply_v_adjoint(i, e);
        intertwining = intertwining.max(linalg::op_norm(&(&x - e * t.get(i).adjoint())));
        co_invariance = co_invariance.max(linalg::op_norm(&(&x - e * (e.adjoint() * &x))));
    }
    let words = words_up_to(t.n(), word_budget);
    let images: Vec<CMat> = words.iter().map(|w| d.word_adjoint_embed(w)).collect();
    let mut word_res: f64 = 0.0;
    for (a, xa) in words.iter().zip(&images) {
        for (b, xb) in words.iter().zip(&images) {
            let lhs = t.word(a) * t.word(b).adjoint();
            word_res = word_res.max(linalg::op_norm(&(lhs - xa.adjoint() * xb)));
        }
    }
    let (phi_u_identity, constraints_u, l_bound_excess) = if d.k_dim == 0 {
        (0.0, 0.0, 0.0)
    } else {
        let ut = OperatorTuple::new(d.u.clone())?;
        let phi = CompletionMap::new(&d.f, &ut)?.apply(&linalg::identity(d.k_dim));
        let excess = d
            .u
            .iter()
            .enumerate()
            .map(|(i, ui)| {
                let a = d.f.coeff(&Word::generator(i as u32 + 1)).re;
                (linalg::op_norm(ui) - 1.0 / a.sqrt()).max(0.0)
            })
            .fold(0.0, f64::max);
        (
            linalg::op_norm(&(phi - linalg::identity(d.k_dim))),
            d.constraints.residual(&ut)?.1,
            excess,
        )
    };
    Ok(DilationResiduals {
        isometry,
        intertwining,
        co_invariance,
        words: word_res,
        phi_u_identity,
        constraints_u,
        l_bound_excess,
    })
}

/// The four characterizations of a constrained weighted shift, evaluated independently.
#[derive(Clone, Debug, Serialize)]
pub struct WoldReport {
    /// `dim range (id - Phi_V)^m(I)`.
    pub multiplicity: usize,
    /// Dimension of `N_Q` at the truncation.
    pub n_q_dim: usize,
    /// (i) the Berezin kernel of `V` is a unitary onto `N_Q (x) G`.
    pub shift_identification: bool,
    pub identification_residual: f64,
    /// (ii) `Phi_V^k(I) -> 0`.
    pub pure: bool,
    /// (iii) `span {V_beta Delta_V h}` is the whole space.
    pub spanning: bool,
    pub span_rank: usize,
    /// (iv) `sum b_beta V_beta (id - Phi_V)^m(I) V_beta^* = I`.
    pub summation: bool,
    pub summation_residual: f64,
    pub all_agree: bool,
}

pub fn wold_shift_check(
    f: &FreePolynomial,
    m: usize,
    v: &OperatorTuple,
    q: &ConstraintSet,
    max_len: usize,
    tol: f64,
) -> Result<WoldReport> {
    let dim = v.dim();
    let table = weights_recursive(f, m, max_len)?;
    let phi = CompletionMap::new(f, v)?;
    let delta_sq = linalg::hermitian_part(&phi.defect_power(&linalg::identity(dim), m)).0;
    let de = linalg::eigh(&delta_sq);
    let multiplicity = de.values.iter().filter(|&&x| x > tol).count();

    // (i)
    let n_q = if q.is_empty() { table.dim() } else { constraint_subspace(&table, q)?.n_q.dim() };
    let (shift_identification, identification_residual) = match build_kernel_with_table(&table, v) {
        Ok(k) => {
            let iso = linalg::op_norm(&(k.matrix().adjoint() * k.matrix() - linalg::identity(dim)));
            let range = if q.is_empty() || k.d_dim() == 0 {
                0.0
            } else {
                let basis = constraint_subspace(&table, q)?.n_q;
                let proj = dense_tensor_apply(&basis.columns.adjoint(), k.matrix(), k.d_dim());
                linalg::op_norm(&(k.matrix() - dense_tensor_apply(&basis.columns, &proj, k.d_dim())))
            };
            let res = iso.max(range);
            (res <= tol && n_q * multiplicity == dim, res)
        }
        Err(_) => (false, f64::INFINITY),
    };

    // (ii)
    let pure = purity(f, v, 20 * (max_len + 1) + 1000, tol * 1e-3)?.is_pure;

    // (iii), (iv)
    // Delta_V on the eigenvalues that define the multiplicity, so noise never adds rank
    let roots: Vec<f64> = de.values.iter().map(|&x| if x > tol { x.sqrt() } else { 0.0 }).collect();
    let delta = linalg::scaled_outer(&de.vectors, &roots);
    let words = words_up_to(f.n(), max_len);
    let mut cols: Vec<CVec> = Vec::new();
    let mut sum = CMat::zeros(dim, dim);
    for w in &words {
        let vb = v.word(w);
        let img = &vb * &delta;
        cols.extend((0..dim).map(|j| img.column(j).into_owned()));
        let b = table.b_word(w).expect("word within truncation");
        sum += &vb * &delta_sq * vb.adjoint() * c(b);
    }
    let span_rank = linalg::orthonormal_span(dim, &cols, crate::variety::RANK_TOL).ncols();
    let spanning = span_rank == dim;
    let summation_residual = linalg::op_norm(&(sum - linalg::identity(dim)));
    let summation = summation_residual <= tol;
    let flags = [shift_identification, pure, spanning, summation];
    Ok(WoldReport {
        multiplicity,
        n_q_dim: n_q,
        shift_identification,
        identification_residual,
        pure,
        spanning,
        span_rank,
        summation,
        summation_residual,
        all_agree: flags.iter().all(|&x| x == flags[0]),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointReport {
    /// `||(id - Phi)^m(I)||`.
    pub defect_deviation: f64,
    /// `||Phi(I) - I||`.
    pub phi_deviation: f64,
    pub agree: bool,
}

/// Checks `(id - Phi)^m(I) = 0 <=> Phi(I) = I` on `X` with `Phi_{f,X}(I) <= I`.
pub fn boundary_fixed_point_check(f: &FreePolynomial, m: usize, x: &OperatorTuple, tol: f64) -> Result<FixedPointReport> {
    let phi = CompletionMap::new(f, x)?;
    let id = linalg::identity(x.dim());
    let pi = phi.apply(&id);
    let slack = linalg::min_eig(&(&id - &pi));
    if slack < -tol {
        return Err(Error::InvalidInput(format!("Phi(I) <= I fails by {}", -slack)));
    }
    let defect_deviation = linalg::op_norm(&phi.defect_power(&id, m));
    let phi_deviation = linalg::op_norm(&(pi - id));
    Ok(FixedPointReport {
        defect_deviation,
        phi_deviation,
        agree: (defect_deviation <= tol) == (phi_deviation <= tol),
    })
}
