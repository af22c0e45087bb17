//! Weight families `b_alpha^(m)`, the coefficients `c_gamma^(m)` of `1 - (1 - f)^m`,
//! and the symmetric weights `gamma_k^(m)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::FreePolynomial;
use crate::words::{binomial, binomial_u128, factorizations, Grading, MultiDegree, Word};

/// Largest word length accepted by the factorization-enumerating oracle.
pub const BRUTEFORCE_GUARD: usize = 12;

/// One failed positive-regularity condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ConstantTerm { coeff: [f64; 2] },
    NotNonnegativeReal { word: Word, coeff: [f64; 2] },
    MissingLinearTerm { generator: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn into_result(self) -> Result<()> {
        if self.passed {
            return Ok(());
        }
        let msg = self
            .violations
            .iter()
            .map(|v| match v {
                Violation::ConstantTerm { coeff } => format!("constant term {:?}", coeff),
                Violation::NotNonnegativeReal { word, coeff } => {
                    format!("coefficient {:?} at {word} is not a nonnegative real", coeff)
                }
                Violation::MissingLinearTerm { generator } => {
                    format!("coefficient at g{generator} is not positive")
                }
            })
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::NotPositiveRegular(msg))
    }
}

/// Checks `a_{g_0} = 0`, `a_alpha >= 0` real, and `a_{g_i} > 0`.
pub fn validate_positive_regular(f: &FreePolynomial) -> ValidationReport {
    let mut violations = Vec::new();
    let c0 = f.constant_term();
    if c0 != Complex64::new(0.0, 0.0) {
        violations.push(Violation::ConstantTerm { coeff: [c0.re, c0.im] });
    }
    for (w, c) in f.terms() {
        if w.is_empty() {
            continue;
        }
        if c.im != 0.0 || !(c.re >= 0.0) || !c.re.is_finite() {
            violations.push(Violation::NotNonnegativeReal { word: w.clone(), coeff: [c.re, c.im] });
        }
    }
    for i in 1..=f.n() as u32 {
        if !(f.coeff(&Word::generator(i)).re > 0.0) {
            violations.push(Violation::MissingLinearTerm { generator: i });
        }
    }
    ValidationReport { passed: violations.is_empty(), violations }
}

/// Coefficients of `1 - (1 - f)^m`, dropping words longer than `cap`.
pub fn one_minus_power_coeffs(f: &FreePolynomial, m: usize, cap: Option<usize>) -> FreePolynomial {
    let one = FreePolynomial::one(f.n());
    let base = one.sub(f);
    one.sub(&base.pow_truncated(m, cap))
}

/// `b_w^(m)` by summing over all factorizations of `w`.
pub fn weights_bruteforce(f: &FreePolynomial, m: usize, w: &Word) -> Result<f64> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    if w.len() > BRUTEFORCE_GUARD {
        return Err(Error::WordTooLong { len: w.len(), guard: BRUTEFORCE_GUARD });
    }
    if w.is_empty() {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for j in 1..=w.len() {
        let mut inner = 0.0;
        for split in factorizations(w, j)? {
            inner += split.iter().map(|g| f.coeff(g).re).product::<f64>();
        }
        total += binomial(j + m - 1, m - 1) * inner;
    }
    Ok(total)
}

/// Exact rational version of [`weights_bruteforce`]; every coefficient must be real.
pub fn weights_bruteforce_exact(f: &FreePolynomial, m: usize, w: &Word) -> Result<BigRational> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    if w.len() > BRUTEFORCE_GUARD {
        return Err(Error::WordTooLong { len: w.len(), guard: BRUTEFORCE_GUARD });
    }
    let exact = |c: Complex64| -> Result<BigRational> {
        if c.im != 0.0 {
            return Err(Error::InvalidInput("exact oracle needs real coefficients".into()));
        }
        BigRational::from_float(c.re)
            .ok_or_else(|| Error::InvalidInput("non-finite coefficient".into()))
    };
    if w.is_empty() {
        return Ok(BigRational::one());
    }
    let mut total = BigRational::zero();
    for j in 1..=w.len() {
        let mut inner = BigRational::zero();
        for split in factorizations(w, j)? {
            let mut prod = BigRational::one();
            for g in &split {
                prod *= exact(f.coeff(g))?;
            }
            inner += prod;
        }
        let binom = BigInt::from(binomial_u128(j + m - 1, m - 1));
        total += BigRational::from_integer(binom) * inner;
    }
    Ok(total)
}

/// Weights `b^(k)` for `k = 0..=m` on every word of length at most `N`, together
/// with `c^(m)` and the cached square roots of `b^(m)`.
#[derive(Clone, Debug)]
pub struct WeightTable {
    f: FreePolynomial,
    m: usize,
    grading: Grading,
    levels: Vec<Vec<f64>>,
    c: FreePolynomial,
    sqrt_b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightRow {
    pub word: Word,
    pub b: f64,
    pub c: f64,
}

/// Builds the table level by level: `b^(0) = delta_{g_0}` and
/// `b^(k)_alpha = b^(k-1)_alpha + sum_{gamma sigma = alpha, |gamma| >= 1} a_gamma b^(k)_sigma`.
pub fn weights_recursive(f: &FreePolynomial, m: usize, max_len: usize) -> Result<WeightTable> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    if f.n() == 0 {
        return Err(Error::ZeroGenerators);
    }
    validate_positive_regular(f).into_result()?;
    let grading = Grading::new(f.n(), max_len)?;
    let dim = grading.dim();

    let support: Vec<(usize, f64)> = f
        .terms()
        .filter(|(w, c)| !w.is_empty() && w.len() <= max_len && c.re != 0.0)
        .map(|(w, c)| (grading.index(w.letters()), c.re))
        .collect();

    let mut levels = Vec::with_capacity(m + 1);
    let mut base = vec![0.0; dim];
    base[0] = 1.0;
    levels.push(base);
    for k in 1..=m {
        let prev = &levels[k - 1];
        let mut cur = vec![0.0; dim];
        // indices are graded, so every suffix is filled before it is read
        for beta in 0..dim {
            let mut acc = prev[beta];
            for &(gamma, a) in &support {
                if let Some(sigma) = grading.strip_prefix(beta, gamma) {
                    acc += a * cur[sigma];
                }
            }
            cur[beta] = acc;
        }
        levels.push(cur);
    }

    let sqrt_b = levels[m].iter().map(|b| b.sqrt()).collect();
    let c = one_minus_power_coeffs(f, m, Some(max_len));
    Ok(WeightTable { f: f.clone(), m, grading, levels, c, sqrt_b })
}

impl WeightTable {
    pub fn f(&self) -> &FreePolynomial {
        &self.f
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.grading.n()
    }

    pub fn max_len(&self) -> usize {
        self.grading.max_len()
    }

    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    pub fn dim(&self) -> usize {
        self.grading.dim()
    }

    /// `b^(m)` indexed by basis position.
    pub fn b(&self) -> &[f64] {
        &self.levels[self.m]
    }

    /// `b^(k)` for `0 <= k <= m`.
    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn sqrt_b(&self) -> &[f64] {
        &self.sqrt_b
    }

    pub fn b_word(&self, w: &Word) -> Option<f64> {
        (w.len() <= self.max_len()).then(|| self.b()[self.grading.index(w.letters())])
    }

    /// Coefficients of `1 - (1 - f)^m` up to the truncation degree.
    pub fn c(&self) -> &FreePolynomial {
        &self.c
    }

    /// Largest relative residual of `b_beta = sum_{gamma alpha = beta} b_alpha c_gamma`
    /// over all stored words of positive length.
    pub fn relation_residual(&self) -> f64 {
        let b = self.b();
        let support: Vec<(usize, f64)> = self
            .c
            .terms()
            .filter(|(w, _)| !w.is_empty())
            .map(|(w, c)| (self.grading.index(w.letters()), c.re))
            .collect();
        let mut worst: f64 = 0.0;
        for beta in 1..self.dim() {
            let mut acc = 0.0;
            let mut scale: f64 = 0.0;
            for &(gamma, c) in &support {
                if let Some(alpha) = self.grading.strip_prefix(beta, gamma) {
                    acc += b[alpha] * c;
                    scale += (b[alpha] * c).abs();
                }
            }
            worst = worst.max((b[beta] - acc).abs() / scale.max(b[beta]));
        }
        worst
    }

    /// JSON-ready rows `{word, b, c}`.
    pub fn rows(&self) -> Vec<WeightRow> {
        (0..self.dim())
            .map(|i| {
                let word = self.grading.word(i);
                let c = self.c.coeff(&word).re;
                WeightRow { word, b: self.b()[i], c }
            })
            .collect()
    }
}

/// `gamma_k^(m) = sum_{alpha in Lambda_k} b_alpha^(m)` for every multidegree of total at most `N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetricWeights {
    pub n: usize,
    /// Serialized as `[{multidegree, gamma}]`, since JSON keys must be strings.
    #[serde(serialize_with = "gamma_entries")]
    pub gamma: BTreeMap<MultiDegree, f64>,
}

fn gamma_entries<S: serde::Serializer>(
    gamma: &BTreeMap<MultiDegree, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Entry<'a> {
        multidegree: &'a MultiDegree,
        gamma: f64,
    }
    s.collect_seq(gamma.iter().map(|(k, &g)| Entry { multidegree: k, gamma: g }))
}

impl SymmetricWeights {
    pub fn get(&self, k: &MultiDegree) -> Option<f64> {
        self.gamma.get(k).copied()
    }
}

pub fn symmetric_weights(table: &WeightTable) -> SymmetricWeights {
    let n = table.n();
    let mut gamma = BTreeMap::new();
    let b = table.b();
    for (i, &bi) in b.iter().enumerate() {
        let k = table.grading().word(i).multidegree(n);
        *gamma.entry(k).or_insert(0.0) += bi;
    }
    SymmetricWeights { n, gamma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::enumerate_words;
    use num_traits::Signed;

    fn x() -> FreePolynomial {
        FreePolynomial::from_real(1, &[(&[1], 1.0)]).unwrap()
    }

    fn w(l: &[u32]) -> Word {
        Word::from(l)
    }

    #[test]
    fn validation_examples() {
        assert!(validate_positive_regular(&FreePolynomial::linear_sum(2)).passed);

        let with_const = FreePolynomial::from_real(1, &[(&[], 1.0), (&[1], 1.0)]).unwrap();
        let r = validate_positive_regular(&with_const);
        assert!(!r.passed);
        assert!(matches!(r.violations[0], Violation::ConstantTerm { .. }));

        let no_linear = FreePolynomial::from_real(2, &[(&[1, 2], 1.0)]).unwrap();
        let r = validate_positive_regular(&no_linear);
        assert_eq!(
            r.violations,
            vec![
                Violation::MissingLinearTerm { generator: 1 },
                Violation::MissingLinearTerm { generator: 2 }
            ]
        );

        let negative = FreePolynomial::from_real(1, &[(&[1], -1.0)]).unwrap();
        assert_eq!(validate_positive_regular(&negative).violations.len(), 2);
    }

    #[test]
    fn bruteforce_examples() {
        let f = x();
        assert_eq!(weights_bruteforce(&f, 4, &Word::empty()).unwrap(), 1.0);
        assert_eq!(weights_bruteforce(&f, 2, &w(&[1, 1])).unwrap(), 3.0);
        let g = FreePolynomial::from_real(2, &[(&[1], 1.0), (&[2], 1.0), (&[1, 2], 1.0)]).unwrap();
        assert_eq!(weights_bruteforce(&g, 1, &w(&[1, 2])).unwrap(), 2.0);
        assert!(weights_bruteforce(&f, 1, &Word::new(vec![1; 13])).is_err());
    }

    #[test]
    fn single_variable_binomials() {
        let t = weights_recursive(&x(), 1, 10).unwrap();
        assert!(t.b().iter().all(|&b| b == 1.0));
        let t = weights_recursive(&x(), 3, 8).unwrap();
        assert_eq!(t.b()[4], 15.0);
        for k in 0..=8 {
            assert_eq!(t.b()[k], binomial(k + 2, 2));
        }
    }

    #[test]
    fn drury_weights_are_one() {
        let t = weights_recursive(&FreePolynomial::linear_sum(2), 1, 5).unwrap();
        assert!(t.b().iter().all(|&b| b == 1.0));
    }

    #[test]
    fn generator_weight_is_m_times_coefficient() {
        let f = FreePolynomial::from_real(2, &[(&[1], 0.5), (&[2], 2.0), (&[2, 1], 1.0)]).unwrap();
        for m in 1..=4 {
            let t = weights_recursive(&f, m, 2).unwrap();
            assert!((t.b_word(&w(&[1])).unwrap() - 0.5 * m as f64).abs() < 1e-15);
            assert!((t.b_word(&w(&[2])).unwrap() - 2.0 * m as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn recursive_matches_exact_oracle() {
        let f = FreePolynomial::from_real(2, &[(&[1], 0.5), (&[2], 0.25), (&[2, 1], 0.75), (&[1, 1, 2], 0.125)])
            .unwrap();
        for m in 1..=3 {
            let t = weights_recursive(&f, m, 6).unwrap();
            for word in enumerate_words(2, 6).unwrap() {
                let exact = weights_bruteforce_exact(&f, m, &word).unwrap();
                let approx = BigRational::from_float(t.b_word(&word).unwrap()).unwrap();
                let diff = (exact.clone() - approx).abs();
                // relative error below 1e-12
                assert!(diff * BigRational::from_integer(BigInt::from(10).pow(12)) <= exact, "{word}");
            }
        }
    }

    #[test]
    fn one_minus_power_examples() {
        let c = one_minus_power_coeffs(&x(), 2, None);
        assert_eq!(c, FreePolynomial::from_real(1, &[(&[1], 2.0), (&[1, 1], -1.0)]).unwrap());

        let f = FreePolynomial::from_real(2, &[(&[1], 0.3), (&[1, 2], 0.2)]).unwrap();
        assert_eq!(one_minus_power_coeffs(&f, 1, None), f);

        let c = one_minus_power_coeffs(&FreePolynomial::linear_sum(2), 2, None);
        assert_eq!(c.len(), 6);
        assert_eq!(c.coeff(&w(&[1])).re, 2.0);
        for word in [[1, 1], [1, 2], [2, 1], [2, 2]] {
            assert_eq!(c.coeff(&w(&word)).re, -1.0);
        }
    }

    #[test]
    fn symmetric_weight_examples() {
        let t = weights_recursive(&FreePolynomial::linear_sum(2), 1, 3).unwrap();
        let s = symmetric_weights(&t);
        assert_eq!(s.get(&MultiDegree(vec![1, 1])), Some(2.0));
        assert_eq!(s.get(&MultiDegree(vec![0, 0])), Some(1.0));
        assert_eq!(s.get(&MultiDegree(vec![2, 1])), Some(3.0));

        let t = weights_recursive(&x(), 2, 5).unwrap();
        let s = symmetric_weights(&t);
        for k in 0..=5 {
            assert_eq!(s.get(&MultiDegree(vec![k])), Some(t.b()[k]));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(weights_recursive(&x(), 0, 3), Err(Error::ZeroOrder)));
        let bad = FreePolynomial::from_real(2, &[(&[1], 1.0)]).unwrap();
        assert!(matches!(weights_recursive(&bad, 1, 3), Err(Error::NotPositiveRegular(_))));
    }

    #[test]
    fn rows_serialize() {
        let t = weights_recursive(&x(), 2, 2).unwrap();
        let rows = serde_json::to_string(&t.rows()).unwrap();
        assert_eq!(
            rows,
            r#"[{"word":[],"b":1.0,"c":0.0},{"word":[1],"b":2.0,"c":2.0},{"word":[1,1],"b":3.0,"c":-1.0}]"#
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// Positive-regular polynomials with up to 3 generators and degree up to 3.
        fn poly_strategy() -> impl Strategy<Value = FreePolynomial> {
            (1usize..=3).prop_flat_map(|n| {
                let linear = prop::collection::vec(0.05f64..1.5, n);
                let extra = prop::collection::vec(
                    (prop::collection::vec(1u32..=n as u32, 2..=3), 0.0f64..1.0),
                    0..4,
                );
                (Just(n), linear, extra).prop_map(|(n, linear, extra)| {
                    let mut f = FreePolynomial::zero(n);
                    for (i, a) in linear.into_iter().enumerate() {
                        f.add_term(Word::generator(i as u32 + 1), Complex64::new(a, 0.0));
                    }
                    for (letters, a) in extra {
                        f.add_term(Word::new(letters), Complex64::new(a, 0.0));
                    }
                    f
                })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn recursion_matches_bruteforce(f in poly_strategy(), m in 1usize..=3) {
                let len = if f.n() == 3 { 4 } else { 5 };
                let t = weights_recursive(&f, m, len).unwrap();
                for (i, word) in enumerate_words(f.n(), len).unwrap().iter().enumerate() {
                    let brute = weights_bruteforce(&f, m, word).unwrap();
                    prop_assert!((t.b()[i] - brute).abs() <= 1e-10 * brute);
                }
            }

            #[test]
            fn relation_and_bounds(f in poly_strategy(), m in 1usize..=3) {
                let len = if f.n() == 3 { 4 } else { 5 };
                let t = weights_recursive(&f, m, len).unwrap();
                prop_assert!(t.relation_residual() <= 1e-10);
                let g = t.grading();
                let b = t.b();
                prop_assert_eq!(b[0], 1.0);
                for i in 0..t.dim() {
                    prop_assert!(b[i] > 0.0);
                    prop_assert!(b[i] >= t.level(m - 1)[i]);
                    for l in 1..=f.n() as u32 {
                        if let Some(j) = g.left_mul(l, i) {
                            let a = f.coeff(&Word::generator(l)).re;
                            prop_assert!(b[j] >= a * b[i] * (1.0 - 1e-12));
                        }
                    }
                }
                // b_alpha b_beta <= C(|beta|+m-1, m-1) b_{alpha beta}
                for alpha in 0..t.dim() {
                    for beta in 0..t.dim() {
                        if let Some(ab) = g.concat(alpha, beta) {
                            let bound = binomial(g.len_of(beta) + m - 1, m - 1) * b[ab];
                            prop_assert!(b[alpha] * b[beta] <= bound * (1.0 + 1e-12));
                        }
                    }
                }
            }

            #[test]
            fn symmetric_weight_dominates(f in poly_strategy(), m in 1usize..=3) {
                let t = weights_recursive(&f, m, 3).unwrap();
                let s = symmetric_weights(&t);
                for i in 0..t.dim() {
                    let k = t.grading().word(i).multidegree(f.n());
                    prop_assert!(s.get(&k).unwrap() >= t.b()[i]);
                }
            }
        }
    }
}
