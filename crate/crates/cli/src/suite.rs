use std::path::Path;

use ncdomain::coefficients::weights_recursive;
use ncdomain::dilation::{dilate, DilationOptions};
use ncdomain::domain::check_membership;
use ncdomain::fock::{model_symmetries, verify_universal_model};
use ncdomain::io::{parse_json, read_json};
use ncdomain::sampling::{
    random_boundary_diagonal, random_commuting_member, random_member, random_mixed, random_nilpotent,
    random_row_coisometry,
};
use ncdomain::variety::{ConstraintSet, ConstraintSpec};
use ncdomain::words::binomial_u128;
use ncdomain::{Error, FreePolynomial, OperatorTuple, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::{
    berezin_core, coeffs_core, default_symbols, dilation_checks, dilation_summary, inputs, variety_core, Flags,
};
use crate::report::{Checks, Report};

const BUNDLED: &str = include_str!("../instances/suite.json");

/// How a case obtains its tuple when none is given inline.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sample {
    Member { dim: usize, phi: f64 },
    Commuting { dim: usize, phi: f64 },
    Nilpotent { dim: usize, phi: f64 },
    BoundaryDiagonal { dim: usize },
    RowCoisometry { dim: usize },
    Mixed { pure_dim: usize, boundary_dim: usize, phi: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub name: String,
    pub f: FreePolynomial,
    pub m: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    #[serde(default)]
    pub tuple: Option<OperatorTuple>,
    #[serde(default)]
    pub sample: Option<Sample>,
    #[serde(default)]
    pub constraints: Option<ConstraintSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub cases: Vec<Case>,
}

pub fn bundled() -> Result<Suite> {
    parse_json(BUNDLED, "instances/suite.json")
}

fn draw(f: &FreePolynomial, m: usize, s: &Sample, rng: &mut ChaCha8Rng) -> Result<OperatorTuple> {
    match *s {
        Sample::Member { dim, phi } => random_member(f, m, dim, phi, rng),
        Sample::Commuting { dim, phi } => random_commuting_member(f, m, dim, phi, rng),
        Sample::Nilpotent { dim, phi } => random_nilpotent(f, m, dim, phi, rng),
        Sample::BoundaryDiagonal { dim } => random_boundary_diagonal(f, dim, rng),
        Sample::RowCoisometry { dim } => random_row_coisometry(f, dim, rng),
        Sample::Mixed { pure_dim, boundary_dim, phi } => random_mixed(f, m, pure_dim, boundary_dim, phi, rng),
    }
}

/// Runs every applicable check on one case.
pub fn run_case(case: &Case, seed: u64) -> Result<(Value, Checks)> {
    let (f, m, big_n) = (&case.f, case.m, case.big_n);
    if case.m == 0 {
        return Err(Error::ZeroOrder);
    }
    let q = match &case.constraints {
        Some(spec) => ConstraintSet::from_spec(spec)?,
        None => ConstraintSet::empty(f.n()),
    };
    let mut checks = Checks::default();
    let mut results = serde_json::Map::new();

    let (coeffs, c) = coeffs_core(f, m, big_n, 1e-12)?;
    checks.prefixed("coeffs", c);
    results.insert("relation_residual".into(), coeffs["relation_residual"].clone());
    let table = weights_recursive(f, m, big_n)?;
    if *f == FreePolynomial::from_real(1, &[(&[1], 1.0)])? {
        let worst = (0..=big_n)
            .map(|k| {
                let exact = binomial_u128(k + m - 1, m - 1) as f64;
                (table.b()[k] - exact).abs() / exact
            })
            .fold(0.0, f64::max);
        checks.at_most("coeffs.binomial_closed_form", worst, 1e-12);
    }

    let model = verify_universal_model(&table);
    checks.at_most("universal_model.defect_is_vacuum_projection", model.defect_is_vacuum_projection, 1e-12);
    checks.at_most("universal_model.resolution_of_identity", model.resolution_of_identity, 1e-12);
    checks.at_most("universal_model.max_residual", model.max_residual(), 1e-10);
    let sym = model_symmetries(&table, &weights_recursive(&f.reversed(), m, big_n)?)?;
    checks.at_most("model_symmetries.reversal", sym.reversal, 1e-12);
    checks.at_most("model_symmetries.commutator", sym.commutator, 1e-12);
    results.insert("universal_model".into(), json!(model));
    results.insert("model_symmetries".into(), json!(sym));

    if !q.is_empty() {
        let (v, c) = variety_core(f, m, big_n, &q, 1e-10)?;
        checks.prefixed("variety", c);
        results.insert("variety".into(), v);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tuple = match (&case.tuple, &case.sample) {
        (Some(t), _) => Some(t.clone()),
        (None, Some(s)) => Some(draw(f, m, s, &mut rng)?),
        (None, None) => None,
    };
    if let Some(t) = tuple {
        if t.n() != f.n() {
            return Err(Error::DimensionMismatch(format!("tuple has n = {} but f has n = {}", t.n(), f.n())));
        }
        let domain = check_membership(f, m, &t, None)?;
        checks.holds("domain.member", domain.member);
        results.insert("domain".into(), json!(domain));
        let (b, c) = berezin_core(f, m, big_n, &t, &default_symbols(f.n()), 1e-12)?;
        checks.prefixed("berezin", c);
        results.insert(
            "berezin".into(),
            json!({
                "d_dim": b["d_dim"],
                "pure": b["pure"],
                "tail_bound": b["tail_bound"],
                "tail_certified": b["tail_certified"],
                "isometry_residual": b["isometry_residual"],
                "intertwining": b["intertwining"],
            }),
        );
        let d = dilate(f, m, &t, &q, &DilationOptions::default())?;
        checks.prefixed("dilation", dilation_checks(&d));
        results.insert("dilation".into(), dilation_summary(&d, f.n()));
    }
    Ok((Value::Object(results), checks))
}

fn run_suite(suite: &Suite, seed: u64) -> Result<(Value, Checks)> {
    let mut checks = Checks::default();
    let mut cases = Vec::new();
    for (k, case) in suite.cases.iter().enumerate() {
        let (v, c) = run_case(case, seed.wrapping_add(k as u64))?;
        checks.prefixed(&case.name, c);
        cases.push(json!({"name": case.name, "results": v}));
    }
    Ok((json!({ "cases": cases }), checks))
}

/// `verify`: a single case from the flags when `--f` is given, otherwise a suite file
/// (`--suite`) or the bundled curated suite.
pub fn verify(flags: &Flags) -> Result<Report> {
    if flags.f.is_some() {
        let f = flags.poly()?;
        let q = flags.constraints_for(&f)?;
        let commutative = q == ConstraintSet::commutators(f.n());
        let tuple = match &flags.tuple {
            Some(_) => Some(flags.tuple_for(&f)?),
            None => None,
        };
        let sample = match (&tuple, q.is_empty(), commutative) {
            (Some(_), _, _) => None,
            (None, true, _) => Some(Sample::Member { dim: 3, phi: 0.02 }),
            (None, false, true) => Some(Sample::Commuting { dim: 3, phi: 0.02 }),
            (None, false, false) => return Err(Error::Schema {
                path: "--tuple".into(),
                message: "a tuple is required with general constraints".into(),
            }),
        };
        let case = Case {
            name: "case".into(),
            f: f.clone(),
            m: flags.m()?,
            big_n: flags.big_n()?,
            tuple,
            sample,
            constraints: flags.constraints.as_ref().map(|p| read_json(p)).transpose()?,
        };
        let (v, checks) = run_case(&case, flags.seed)?;
        return Ok(checks.into_report("verify", inputs(flags, &f), v));
    }
    let suite = match &flags.suite {
        Some(p) => read_json::<Suite>(Path::new(p))?,
        None => bundled()?,
    };
    let (v, checks) = run_suite(&suite, flags.seed)?;
    let mut echo = flags.echo();
    echo["cases"] = json!(suite.cases.iter().map(|c| &c.name).collect::<Vec<_>>());
    Ok(checks.into_report("verify", echo, v))
}
