//! Finitely supported noncommutative polynomials `sum_alpha a_alpha X_alpha`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::words::Word;

/// A polynomial in `n` noncommuting indeterminates with complex coefficients.
///
/// Exact zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct FreePolynomial {
    n: usize,
    terms: BTreeMap<Word, Complex64>,
}

impl FreePolynomial {
    pub fn zero(n: usize) -> Self {
        FreePolynomial { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Word::empty(), Complex64::new(1.0, 0.0));
        p
    }

    /// Convenience constructor from real coefficients.
    pub fn from_real(n: usize, terms: &[(&[u32], f64)]) -> Result<Self> {
        let mut p = Self::zero(n);
        for (letters, c) in terms {
            let w = Word::checked(letters.to_vec(), n)?;
            p.add_term(w, Complex64::new(*c, 0.0));
        }
        Ok(p)
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Word, Complex64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroGenerators);
        }
        let mut p = Self::zero(n);
        for (w, c) in terms {
            let w = Word::checked(w.letters().to_vec(), n)?;
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite coefficient at {w}")));
            }
            p.add_term(w, c);
        }
        Ok(p)
    }

    /// `X_1 + ... + X_n`.
    pub fn linear_sum(n: usize) -> Self {
        let mut p = Self::zero(n);
        for i in 1..=n as u32 {
            p.add_term(Word::generator(i), Complex64::new(1.0, 0.0));
        }
        p
    }

    pub fn monomial(n: usize, w: Word, c: Complex64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(w, c);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, w: Word, c: Complex64) {
        let sum = self.coeff(&w) + c;
        if sum == Complex64::new(0.0, 0.0) {
            self.terms.remove(&w);
        } else {
            self.terms.insert(w, sum);
        }
    }

    pub fn coeff(&self, w: &Word) -> Complex64 {
        self.terms.get(w).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    /// Maximum length of a word with nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    /// True iff every monomial has the same length.
    pub fn is_homogeneous(&self) -> bool {
        let mut lens = self.terms.keys().map(Word::len);
        match lens.next() {
            None => true,
            Some(first) => lens.all(|l| l == first),
        }
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coeff(&Word::empty())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut p = Self::zero(self.n);
        for (w, c) in &self.terms {
            p.add_term(w.clone(), c * s);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (w, c) in &other.terms {
            p.add_term(w.clone(), *c);
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Product in the free algebra, dropping words longer than `cap`.
    pub fn mul_truncated(&self, other: &Self, cap: Option<usize>) -> Self {
        let mut p = Self::zero(self.n.max(other.n));
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                if let Some(cap) = cap {
                    if u.len() + v.len() > cap {
                        continue;
                    }
                }
                p.add_term(u.concat(v), a * b);
            }
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_truncated(other, None)
    }

    /// `self^k`, dropping words longer than `cap` after every step.
    pub fn pow_truncated(&self, k: usize, cap: Option<usize>) -> Self {
        let mut acc = Self::one(self.n);
        for _ in 0..k {
            acc = acc.mul_truncated(self, cap);
        }
        acc
    }

    /// `f~ = sum a_{alpha~} X_alpha`, the polynomial with reversed words.
    pub fn reversed(&self) -> Self {
        let mut p = Self::zero(self.n);
        for (w, c) in &self.terms {
            p.add_term(w.reverse(), *c);
        }
        p
    }

    pub fn conj(&self) -> Self {
        let mut p = Self::zero(self.n);
        for (w, c) in &self.terms {
            p.add_term(w.clone(), c.conj());
        }
        p
    }

    /// Evaluation at a scalar point, `sum a_alpha lambda_alpha`.
    pub fn eval_point(&self, point: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(w, c)| c * word_value(w, point))
            .sum()
    }

    /// Evaluation at a matrix tuple, `sum a_alpha X_alpha`.
    pub fn eval_matrices(&self, mats: &[DMatrix<Complex64>]) -> Result<DMatrix<Complex64>> {
        let dim = mats.first().map(|m| m.nrows()).unwrap_or(0);
        if mats.len() < self.n {
            return Err(Error::DimensionMismatch(format!(
                "polynomial in {} variables evaluated at {} matrices",
                self.n,
                mats.len()
            )));
        }
        let mut out = DMatrix::zeros(dim, dim);
        for (w, c) in &self.terms {
            out += word_matrix(w, mats) * *c;
        }
        Ok(out)
    }
}

/// `lambda_alpha = lambda_{i_1} ... lambda_{i_k}`.
pub fn word_value(w: &Word, point: &[Complex64]) -> Complex64 {
    w.letters()
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &l| acc * point[l as usize - 1])
}

/// `X_alpha = X_{i_1} ... X_{i_k}`.
pub fn word_matrix(w: &Word, mats: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let dim = mats.first().map(|m| m.nrows()).unwrap_or(0);
    let mut acc = DMatrix::identity(dim, dim);
    for &l in w.letters() {
        acc *= &mats[l as usize - 1];
    }
    acc
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    word: Vec<u32>,
    coeff: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    n: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for FreePolynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| TermRepr { word: w.letters().to_vec(), coeff: [c.re, c.im] })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FreePolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(deserializer)?;
        FreePolynomial::from_terms(
            repr.n,
            repr.terms
                .into_iter()
                .map(|t| (Word::new(t.word), Complex64::new(t.coeff[0], t.coeff[1]))),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn multiplication_is_noncommutative() {
        let x1 = FreePolynomial::monomial(2, Word::generator(1), c(1.0));
        let x2 = FreePolynomial::monomial(2, Word::generator(2), c(1.0));
        let a = x1.mul(&x2);
        let b = x2.mul(&x1);
        assert_ne!(a, b);
        assert_eq!(a.coeff(&Word::new(vec![1, 2])), c(1.0));
        assert_eq!(a.sub(&a), FreePolynomial::zero(2));
    }

    #[test]
    fn square_of_linear_sum_has_four_words() {
        let f = FreePolynomial::linear_sum(2);
        let sq = f.mul(&f);
        assert_eq!(sq.len(), 4);
        assert!(sq.terms().all(|(w, v)| w.len() == 2 && *v == c(1.0)));
        assert!(sq.is_homogeneous());
        assert_eq!(f.pow_truncated(3, Some(2)), FreePolynomial::zero(2));
    }

    #[test]
    fn json_shape() {
        let f = FreePolynomial::from_real(2, &[(&[1], 1.0), (&[2, 1], 0.5)]).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"n":2,"terms":[{"word":[1],"coeff":[1.0,0.0]},{"word":[2,1],"coeff":[0.5,0.0]}]}"#);
        let back: FreePolynomial = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn json_rejects_out_of_range_letter() {
        let bad = r#"{"n":2,"terms":[{"word":[3],"coeff":[1.0,0.0]}]}"#;
        assert!(serde_json::from_str::<FreePolynomial>(bad).is_err());
    }

    #[test]
    fn evaluation_agrees_between_scalars_and_matrices() {
        let f = FreePolynomial::from_real(2, &[(&[1], 1.0), (&[1, 2], 2.0), (&[2, 2, 1], -1.0)]).unwrap();
        let point = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4)];
        let mats: Vec<_> = point.iter().map(|z| DMatrix::from_element(1, 1, *z)).collect();
        let scalar = f.eval_point(&point);
        let matrix = f.eval_matrices(&mats).unwrap()[(0, 0)];
        assert!((scalar - matrix).norm() < 1e-15);
    }
}
