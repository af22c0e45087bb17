use std::path::PathBuf;

use clap::Args;
use ncdomain::berezin::{
    build_kernel_with_table, intertwining_residual, model_monomial, transform, transform_resolvent,
};
use ncdomain::coefficients::{symmetric_weights, weights_bruteforce, weights_recursive};
use ncdomain::dilation::{dilate, DilationOptions};
use ncdomain::domain::{check_membership, purity};
use ncdomain::fock::{build_left_model, FockOperator};
use ncdomain::io::{load_constraints, load_points, load_poly, load_symbol, load_tuple};
use ncdomain::linalg::{self, CMat, C64};
use ncdomain::sampling::phi_norm;
use ncdomain::variety::{
    compress_models, constraint_subspace, eigenvector_z, gram_matrix, point_in_scalar_domain, rkhs_kernel,
    symmetric_basis, ConstraintSet,
};
use ncdomain::words::{basis_size, enumerate_words, Word};
use ncdomain::{Error, FreePolynomial, OperatorTuple, Result};
use serde_json::{json, Value};

use crate::report::{complex, matrix, Checks, Report};

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a positive finite number".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// Flags shared by every subcommand. Each command requires the subset it uses.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Polynomial file `{n, terms: [{word, coeff: [re, im]}]}`.
    #[arg(long = "f")]
    pub f: Option<PathBuf>,
    /// Order m >= 1.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: Option<u64>,
    /// Truncation length N >= 1.
    #[arg(long = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub big_n: Option<u64>,
    /// Operator tuple file `{matrices: [[[[re, im], ...], ...], ...]}`.
    #[arg(long)]
    pub tuple: Option<PathBuf>,
    /// Constraint file `{kind: empty|commutators|polys, ...}`.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Tolerance override for the command's primary check.
    #[arg(long, value_parser = positive_f64)]
    pub tol: Option<f64>,
    /// Seed for sampled instances.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report path; the report goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Point file `{points: [[[re, im], ...], ...]}` for `kernel`.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Symbol file `{n, terms: [{left, right, coeff}]}` for `berezin`.
    #[arg(long)]
    pub symbol: Option<PathBuf>,
    /// Suite file for `verify`; the bundled suite is used when neither this nor `--f` is given.
    #[arg(long)]
    pub suite: Option<PathBuf>,
}

fn missing(flag: &str) -> Error {
    Error::Schema { path: flag.to_string(), message: "required flag is missing".into() }
}

fn path_value(p: &Option<PathBuf>) -> Value {
    p.as_ref().map_or(Value::Null, |p| json!(p.display().to_string()))
}

impl Flags {
    pub fn poly(&self) -> Result<FreePolynomial> {
        load_poly(self.f.as_deref().ok_or_else(|| missing("--f"))?)
    }

    pub fn m(&self) -> Result<usize> {
        self.m.map(|m| m as usize).ok_or_else(|| missing("--m"))
    }

    pub fn big_n(&self) -> Result<usize> {
        self.big_n.map(|n| n as usize).ok_or_else(|| missing("--N"))
    }

    pub fn tuple_for(&self, f: &FreePolynomial) -> Result<OperatorTuple> {
        let t = load_tuple(self.tuple.as_deref().ok_or_else(|| missing("--tuple"))?)?;
        same_n(f, t.n(), "--tuple")?;
        Ok(t)
    }

    pub fn constraints_for(&self, f: &FreePolynomial) -> Result<ConstraintSet> {
        match &self.constraints {
            Some(p) => {
                let q = load_constraints(p)?;
                same_n(f, q.n(), "--constraints")?;
                Ok(q)
            }
            None => Ok(ConstraintSet::empty(f.n())),
        }
    }

    /// Echo of the flags as given.
    pub fn echo(&self) -> Value {
        json!({
            "f": path_value(&self.f),
            "m": self.m,
            "N": self.big_n,
            "tuple": path_value(&self.tuple),
            "constraints": path_value(&self.constraints),
            "tol": self.tol,
            "seed": self.seed,
            "points": path_value(&self.points),
            "symbol": path_value(&self.symbol),
            "suite": path_value(&self.suite),
        })
    }
}

fn same_n(f: &FreePolynomial, n: usize, what: &str) -> Result<()> {
    if f.n() != n {
        return Err(Error::DimensionMismatch(format!("{what} has n = {n} but f has n = {}", f.n())));
    }
    Ok(())
}

pub fn inputs(flags: &Flags, f: &FreePolynomial) -> Value {
    let mut v = flags.echo();
    v["polynomial"] = json!(f);
    v
}

/// Largest relative gap between the recursive table and the brute-force sum on words up to `len`.
pub fn oracle_error(f: &FreePolynomial, m: usize, table_b: &[f64], len: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (idx, w) in enumerate_words(f.n(), len)?.iter().enumerate() {
        let brute = weights_bruteforce(f, m, w)?;
        worst = worst.max((table_b[idx] - brute).abs() / brute.abs());
    }
    Ok(worst)
}

pub fn coeffs(flags: &Flags) -> Result<Report> {
    let f = flags.poly()?;
    let (results, checks) = coeffs_core(&f, flags.m()?, flags.big_n()?, flags.tol.unwrap_or(1e-12))?;
    Ok(checks.into_report("coeffs", inputs(flags, &f), results))
}

pub fn coeffs_core(f: &FreePolynomial, m: usize, big_n: usize, tol: f64) -> Result<(Value, Checks)> {
    let table = weights_recursive(f, m, big_n)?;
    let relation = table.relation_residual();
    let oracle_len = big_n.min(4);
    let oracle = oracle_error(f, m, table.b(), oracle_len)?;
    let sym = symmetric_weights(&table);
    let mut checks = Checks::default();
    checks.at_most("relation_residual", relation, tol);
    checks.at_most(format!("bruteforce_rel_err_len_{oracle_len}"), oracle, 1e-10);
    let results = json!({
        "dim": table.dim(),
        "c": table.c(),
        "rows": table.rows(),
        "symmetric_weights": sym,
        "relation_residual": relation,
        "bruteforce_rel_err": oracle,
    });
    Ok((results, checks))
}

pub fn check_domain(flags: &Flags) -> Result<Report> {
    let f = flags.poly()?;
    let m = flags.m()?;
    let t = flags.tuple_for(&f)?;
    let report = check_membership(&f, m, &t, flags.tol)?;
    let mut checks = Checks::default();
    checks.holds("member", report.member);
    Ok(checks.into_report("check-domain", inputs(flags, &f), json!(report)))
}

pub fn berezin(flags: &Flags) -> Result<Report> {
    let f = flags.poly()?;
    let t = flags.tuple_for(&f)?;
    let symbols = match &flags.symbol {
        Some(p) => vec![load_symbol(p)?],
        None => default_symbols(f.n()),
    };
    let (results, checks) = berezin_core(&f, flags.m()?, flags.big_n()?, &t, &symbols, flags.tol.unwrap_or(1e-12))?;
    Ok(checks.into_report("berezin", inputs(flags, &f), results))
}

/// One symbol per generator: `W_i`, whose transform on pure tuples is `T_i`.
pub fn default_symbols(n: usize) -> Vec<Vec<(Word, Word, C64)>> {
    (1..=n as u32).map(|i| vec![(Word::generator(i), Word::empty(), C64::new(1.0, 0.0))]).collect()
}

pub fn berezin_core(
    f: &FreePolynomial,
    m: usize,
    big_n: usize,
    t: &OperatorTuple,
    symbols: &[Vec<(Word, Word, C64)>],
    tol: f64,
) -> Result<(Value, Checks)> {
    let table = weights_recursive(f, m, big_n)?;
    let k = build_kernel_with_table(&table, t)?;
    let w = build_left_model(&table);
    let p = purity(f, t, 100_000, 1e-14)?;
    let iso = k.isometry_residual(&p.q);
    let inter = intertwining_residual(&k, t, &w);
    let t_norm = t.mats().iter().map(linalg::op_norm).fold(0.0, f64::max);
    let phi = phi_norm(f, t)?;
    let mut checks = Checks::default();
    checks.at_most("intertwining", inter.safe, tol * (1.0 + k.norm() * t_norm));
    if k.tail_certified() {
        checks.at_most("isometry_vs_tail", iso - k.tail_bound(), 1e-9);
    }
    let mut transforms = Vec::new();
    for (s, terms) in symbols.iter().enumerate() {
        let mut g = FockOperator::zeros(table.dim());
        let mut direct = CMat::zeros(t.dim(), t.dim());
        let mut bound = 0.0;
        for (a, b, coeff) in terms {
            let deg = a.len().max(b.len());
            if deg > big_n {
                return Err(Error::DegreeBudget { needed: deg, available: big_n });
            }
            for l in a.letters().iter().chain(b.letters()) {
                if *l as usize > f.n() {
                    return Err(Error::LetterOutOfRange { letter: *l, n: f.n() });
                }
            }
            g = g.add_scaled(&model_monomial(&w, a, b), *coeff);
            let (ta, tb) = (t.word(a), t.word(b));
            bound += coeff.norm() * linalg::op_norm(&ta) * linalg::op_norm(&tb) * k.tail_bound_from(big_n - deg);
            direct += ta * tb.adjoint() * *coeff;
        }
        let kernel_form = transform(&k, &g)?;
        let kernel_err = linalg::op_norm(&(&kernel_form - &direct));
        let resolvent = if phi < 1.0 { Some(transform_resolvent(&table, t, &g)?) } else { None };
        let forms_gap = resolvent.as_ref().map(|r| linalg::op_norm(&(&kernel_form - &r.value)));
        if p.is_pure && k.tail_certified() {
            checks.at_most(format!("symbol[{s}].kernel_vs_direct"), kernel_err - bound, 1e-8);
        }
        if let Some(gap) = forms_gap {
            checks.at_most(format!("symbol[{s}].kernel_vs_resolvent"), gap, 1e-8);
        }
        transforms.push(json!({
            "terms": terms.iter().map(|(a, b, c)| json!({"left": a, "right": b, "coeff": complex(*c)})).collect::<Vec<_>>(),
            "kernel_form": matrix(&kernel_form),
            "resolvent_form": resolvent.as_ref().map(|r| matrix(&r.value)),
            "resolvent_terms": resolvent.as_ref().map(|r| r.terms),
            "direct": matrix(&direct),
            "kernel_vs_direct": kernel_err,
            "tail_allowance": bound,
            "kernel_vs_resolvent": forms_gap,
        }));
    }
    let results = json!({
        "fock_dim": k.fock_dim(),
        "h_dim": k.h_dim(),
        "d_dim": k.d_dim(),
        "max_len": k.max_len(),
        "phi_norm": phi,
        "pure": p.is_pure,
        "purity_steps": p.steps,
        "shell_mass": k.shell_mass(),
        "tail_bound": k.tail_bound(),
        "tail_certified": k.tail_certified(),
        "kernel_norm": k.norm(),
        "isometry_residual": iso,
        "intertwining": inter,
        "transforms": transforms,
    });
    Ok((results, checks))
}

pub fn dilation_checks(d: &ncdomain::dilation::Dilation) -> Checks {
    let r = &d.residuals;
    let mut checks = Checks::default();
    checks.at_most("isometry", r.isometry, 1e-9);
    checks.at_most("intertwining", r.intertwining, 1e-8);
    checks.at_most("co_invariance", r.co_invariance, 1e-8);
    checks.at_most("words", r.words, 1e-8);
    checks.at_most("phi_u_identity", r.phi_u_identity, 1e-9);
    checks.at_most("constraints_u", r.constraints_u, 1e-8);
    checks.at_most("l_bound_excess", r.l_bound_excess, 1e-9);
    checks.holds("pure_iff_k_zero", d.is_pure == (d.k_dim == 0));
    checks.holds("boundary_iff", (d.phi_t_deviation <= 1e-9) == (d.phi_v_deviation <= 1e-9));
    checks
}

pub fn dilation_summary(d: &ncdomain::dilation::Dilation, n: usize) -> Value {
    let shift_dim = d.shift.dim();
    json!({
        "max_len": d.max_len,
        "fock_dim": basis_size(n, d.max_len).map(|v| v as u64),
        "shift_dim": shift_dim,
        "h_dim": d.h_dim,
        "d_dim": d.d_dim,
        "k_dim": d.k_dim,
        "blocks": {"shift_rows": shift_dim * d.d_dim, "boundary_rows": d.k_dim},
        "is_pure": d.is_pure,
        "purity_steps": d.purity_steps,
        "kernel_tail": d.kernel_tail,
        "top_shell_mass": d.top_shell_mass,
        "phi_t_deviation": d.phi_t_deviation,
        "phi_v_deviation": d.phi_v_deviation,
        "residuals": d.residuals,
    })
}

pub fn dilate_cmd(flags: &Flags) -> Result<Report> {
    let f = flags.poly()?;
    let m = flags.m()?;
    let t = flags.tuple_for(&f)?;
    let q = flags.constraints_for(&f)?;
    let mut opts = DilationOptions::default();
    if let Some(n) = flags.big_n {
        opts.max_len = n as usize;
    }
    if let Some(tol) = flags.tol {
        opts.constraint_tol = tol;
    }
    let d = dilate(&f, m, &t, &q, &opts)?;
    let mut results = dilation_summary(&d, f.n());
    results["u"] = json!(d.u.iter().map(matrix).collect::<Vec<_>>());
    Ok(dilation_checks(&d).into_report("dilate", inputs(flags, &f), results))
}

pub fn kernel(flags: &Flags) -> Result<Report> {
    let f = flags.poly()?;
    let m = flags.m()?;
    let points = load_points(flags.points.as_deref().ok_or_else(|| missing("--points"))?)?;
    for (k, p) in points.iter().enumerate() {
        if p.len() != f.n() {
            return Err(Error::Schema {
                path: format!("points[{k}]"),
                message: format!("expected {} coordinates, found {}", f.n(), p.len()),
            });
        }
    }
    let mut checks = Checks::default();
    let inside = points.iter().map(|p| point_in_scalar_domain(&f, p)).collect::<Result<Vec<_>>>()?;
    let gram = gram_matrix(&f, m, &points)?;
    let min_eig = if points.is_empty() { 0.0 } else { linalg::min_eig(&gram) };
    checks.at_least("gram_min_eig", min_eig, -flags.tol.unwrap_or(1e-10));
    let mut pairs = Vec::new();
    if let Some(big_n) = flags.big_n {
        let table = weights_recursive(&f, m, big_n as usize)?;
        let z = points.iter().map(|p| eigenvector_z(&table, p, false)).collect::<Result<Vec<_>>>()?;
        let mut worst_excess = f64::NEG_INFINITY;
        for (i, mu) in points.iter().enumerate() {
            for (j, lam) in points.iter().enumerate() {
                let exact = rkhs_kernel(&f, m, mu, lam)?;
                let err = (z[i].vector.dotc(&z[j].vector) - exact).norm();
                let bound = z[i].certificate() * z[j].certificate() + 1e-12 * exact.norm();
                worst_excess = worst_excess.max(err - bound);
                pairs.push(json!({"mu": i, "lambda": j, "error": err, "certificate": bound}));
            }
        }
        checks.holds("z_certified", z.iter().all(|v| v.certified));
        if !points.is_empty() {
            checks.at_most("z_inner_product_excess", worst_excess, 0.0);
        }
    }
    let results = json!({
        "points": points.len(),
        "inside": inside,
        "gram": matrix(&gram),
        "gram_min_eig": min_eig,
        "truncated_pairs": pairs,
    });
    Ok(checks.into_report("kernel", inputs(flags, &f), results))
}

/// `max ||q(B) P_safe||` over `q` in `Q`, with `B` compressed to `N_Q` and `P_safe` the columns
/// of degree at most `N - deg q`.
fn compressed_constraint_residual(
    q: &ConstraintSet,
    b: &[CMat],
    basis: &ncdomain::variety::SubspaceBasis,
    big_n: usize,
) -> Result<f64> {
    let bt = OperatorTuple::new(b.to_vec())?;
    let mut worst: f64 = 0.0;
    for p in q.polys() {
        let safe = basis.below_degree(big_n + 1 - p.degree());
        let v = bt.eval(p)?;
        let sel = CMat::from_fn(v.nrows(), safe.len(), |r, k| v[(r, safe[k])]);
        let scale = 1.0 + p.terms().map(|(_, c)| c.norm()).sum::<f64>();
        worst = worst.max(linalg::op_norm(&sel) / scale);
    }
    Ok(worst)
}

pub fn variety(flags: &Flags) -> Result<Report> {
    let f = flags.poly()?;
    let q = match &flags.constraints {
        Some(_) => flags.constraints_for(&f)?,
        None => return Err(missing("--constraints")),
    };
    let (results, checks) = variety_core(&f, flags.m()?, flags.big_n()?, &q, flags.tol.unwrap_or(1e-10))?;
    Ok(checks.into_report("variety", inputs(flags, &f), results))
}

pub fn variety_core(f: &FreePolynomial, m: usize, big_n: usize, q: &ConstraintSet, tol: f64) -> Result<(Value, Checks)> {
    let table = weights_recursive(f, m, big_n)?;
    let s = constraint_subspace(&table, q)?;
    let models = build_left_model(&table);
    let b = compress_models(&models, &s.n_q);
    let q_b = compressed_constraint_residual(q, &b, &s.n_q, big_n)?;
    let cross = linalg::op_norm(&(s.m_q.columns.adjoint() * &s.n_q.columns));
    let symmetric_sine = if *q == ConstraintSet::commutators(f.n()) {
        Some(linalg::max_principal_sine(&s.n_q.columns, &symmetric_basis(&table).basis.columns))
    } else {
        None
    };
    let mut checks = Checks::default();
    checks.at_most("n_q_orthonormality", s.n_q.orthonormality_residual(), tol);
    checks.at_most("m_q_orthonormality", s.m_q.orthonormality_residual(), tol);
    checks.at_most("m_q_perp_n_q", cross, tol);
    checks.holds("dimensions_add_up", s.n_q.dim() + s.m_q.dim() == table.dim());
    if q.all_homogeneous() {
        checks.at_most("q_of_b_safe_degrees", q_b, 1e-12);
    }
    if let Some(sine) = symmetric_sine {
        checks.at_most("symmetric_span_sine", sine, 1e-8);
    }
    let results = json!({
        "fock_dim": table.dim(),
        "homogeneous": q.all_homogeneous(),
        "n_q_dim": s.n_q.dim(),
        "m_q_dim": s.m_q.dim(),
        "n_q_dims_per_degree": s.n_q.dims_per_degree(big_n),
        "m_q_dims_per_degree": s.m_q.dims_per_degree(big_n),
        "vacuum_in_n_q": s.vacuum_in_n,
        "m_q_perp_n_q": cross,
        "q_of_b_safe_degrees": q_b,
        "symmetric_span_sine": symmetric_sine,
    });
    Ok((results, checks))
}
