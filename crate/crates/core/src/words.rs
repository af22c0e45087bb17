//! Words in the free monoid on `n` generators.
//!
//! Letters are 1-based generator indices; the empty word is the identity `g_0`.
//! Words are ordered graded-lexicographically (length first, then letters), and
//! that order fixes the basis index used by every Fock-space layout. The index
//! is a mixed-radix encoding, so all words of one length occupy a contiguous
//! block.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default hard cap on the number of basis words.
pub const DEFAULT_MAX_BASIS: usize = 200_000;

/// Environment variable overriding [`DEFAULT_MAX_BASIS`].
pub const MAX_BASIS_ENV: &str = "NCDOMAIN_MAX_BASIS";

/// The active basis cap (environment override or the default).
pub fn max_basis() -> usize {
    std::env::var(MAX_BASIS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_BASIS)
}

/// A word `g_{i_1} ... g_{i_k}` stored as its letters.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<u32>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<u32>) -> Self {
        Word(letters)
    }

    /// Builds a word and checks every letter lies in `1..=n`.
    pub fn checked(letters: Vec<u32>, n: usize) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l == 0 || l as usize > n) {
            return Err(Error::LetterOutOfRange { letter: bad, n });
        }
        Ok(Word(letters))
    }

    pub fn generator(i: u32) -> Self {
        Word(vec![i])
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.0);
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    /// The reversed word `g_{i_k} ... g_{i_1}`.
    pub fn reverse(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn multidegree(&self, n: usize) -> MultiDegree {
        multidegree(self, n)
    }

    pub fn max_letter(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "g0");
        }
        for l in &self.0 {
            write!(f, "g{l}")?;
        }
        Ok(())
    }
}

impl From<&[u32]> for Word {
    fn from(letters: &[u32]) -> Self {
        Word(letters.to_vec())
    }
}

/// Letter counts `(k_1, ..., k_n)` of a word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiDegree(pub Vec<usize>);

impl MultiDegree {
    pub fn zero(n: usize) -> Self {
        MultiDegree(vec![0; n])
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// `lambda^k = prod lambda_i^{k_i}`.
    pub fn monomial<T>(&self, point: &[T]) -> T
    where
        T: Copy + num_traits::One + std::ops::Mul<Output = T>,
    {
        let mut acc = T::one();
        for (&k, &z) in self.0.iter().zip(point) {
            for _ in 0..k {
                acc = acc * z;
            }
        }
        acc
    }
}

/// Number of words of length at most `max_len`, or `None` on overflow.
pub fn basis_size(n: usize, max_len: usize) -> Option<u128> {
    let mut total: u128 = 0;
    let mut shell: u128 = 1;
    for _ in 0..=max_len {
        total = total.checked_add(shell)?;
        shell = shell.checked_mul(n as u128)?;
    }
    Some(total)
}

/// Checks `n` and the basis size against `cap`, returning the dimension.
pub fn checked_basis_size(n: usize, max_len: usize, cap: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::ZeroGenerators);
    }
    match basis_size(n, max_len) {
        Some(size) if size <= cap as u128 => Ok(size as usize),
        Some(size) => Err(Error::TruncationTooLarge { requested: size, cap }),
        None => Err(Error::TruncationTooLarge { requested: u128::MAX, cap }),
    }
}

/// All words of length at most `max_len`, in graded lexicographic order.
pub fn enumerate_words(n: usize, max_len: usize) -> Result<Vec<Word>> {
    enumerate_words_capped(n, max_len, max_basis())
}

pub fn enumerate_words_capped(n: usize, max_len: usize, cap: usize) -> Result<Vec<Word>> {
    let dim = checked_basis_size(n, max_len, cap)?;
    let mut out = Vec::with_capacity(dim);
    out.push(Word::empty());
    let mut start = 0;
    for _ in 0..max_len {
        let end = out.len();
        for idx in start..end {
            for letter in 1..=n as u32 {
                let mut letters = out[idx].0.clone();
                letters.push(letter);
                out.push(Word(letters));
            }
        }
        start = end;
    }
    Ok(out)
}

/// Graded-lex index of a word over `n` generators.
pub fn word_index(n: usize, letters: &[u32]) -> usize {
    let mut offset = 0usize;
    let mut shell = 1usize;
    for _ in 0..letters.len() {
        offset += shell;
        shell *= n;
    }
    let mut digits = 0usize;
    for &l in letters {
        digits = digits * n + (l as usize - 1);
    }
    offset + digits
}

/// Inverse of [`word_index`].
pub fn word_at(n: usize, mut index: usize) -> Word {
    let mut len = 0;
    let mut shell = 1usize;
    while index >= shell {
        index -= shell;
        shell *= n;
        len += 1;
    }
    let mut letters = vec![0u32; len];
    for slot in letters.iter_mut().rev() {
        *slot = (index % n) as u32 + 1;
        index /= n;
    }
    Word(letters)
}

/// Index arithmetic for the graded basis of words of length at most `max_len`.
///
/// A word of length `k` with 0-based letters `d_1 ... d_k` sits at
/// `offset(k) + sum d_j n^(k-j)`, so prefixes and suffixes are recovered by
/// integer division and remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grading {
    n: usize,
    max_len: usize,
    offsets: Vec<usize>,
    powers: Vec<usize>,
}

impl Grading {
    pub fn new(n: usize, max_len: usize) -> Result<Self> {
        Self::with_cap(n, max_len, max_basis())
    }

    pub fn with_cap(n: usize, max_len: usize, cap: usize) -> Result<Self> {
        let dim = checked_basis_size(n, max_len, cap)?;
        let mut offsets = Vec::with_capacity(max_len + 2);
        let mut powers = Vec::with_capacity(max_len + 1);
        let mut off = 0usize;
        let mut pow = 1usize;
        for _ in 0..=max_len {
            offsets.push(off);
            powers.push(pow);
            off += pow;
            pow = pow.saturating_mul(n);
        }
        offsets.push(dim);
        Ok(Grading { n, max_len, offsets, powers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.max_len + 1]
    }

    /// Index range of the words of length `k`.
    pub fn shell(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    /// `n^k`.
    pub fn power(&self, k: usize) -> usize {
        self.powers[k]
    }

    pub fn len_of(&self, idx: usize) -> usize {
        // offsets is sorted; the shell containing idx is the last offset <= idx
        self.offsets.partition_point(|&o| o <= idx) - 1
    }

    pub fn index(&self, letters: &[u32]) -> usize {
        word_index(self.n, letters)
    }

    pub fn word(&self, idx: usize) -> Word {
        word_at(self.n, idx)
    }

    /// Index of `g_i alpha` given the index of `alpha`, or `None` past the truncation.
    pub fn left_mul(&self, i: u32, idx: usize) -> Option<usize> {
        let k = self.len_of(idx);
        if k >= self.max_len {
            return None;
        }
        let digits = idx - self.offsets[k];
        Some(self.offsets[k + 1] + (i as usize - 1) * self.powers[k] + digits)
    }

    /// Index of `alpha g_i` given the index of `alpha`, or `None` past the truncation.
    pub fn right_mul(&self, idx: usize, i: u32) -> Option<usize> {
        let k = self.len_of(idx);
        if k >= self.max_len {
            return None;
        }
        let digits = idx - self.offsets[k];
        Some(self.offsets[k + 1] + digits * self.n + (i as usize - 1))
    }

    /// Index of `u v`, or `None` past the truncation.
    pub fn concat(&self, u: usize, v: usize) -> Option<usize> {
        let (ku, kv) = (self.len_of(u), self.len_of(v));
        if ku + kv > self.max_len {
            return None;
        }
        let du = u - self.offsets[ku];
        let dv = v - self.offsets[kv];
        Some(self.offsets[ku + kv] + du * self.powers[kv] + dv)
    }

    /// If the word at `idx` starts with the word at `prefix`, the index of the remaining suffix.
    pub fn strip_prefix(&self, idx: usize, prefix: usize) -> Option<usize> {
        let (k, p) = (self.len_of(idx), self.len_of(prefix));
        if p > k {
            return None;
        }
        let d = idx - self.offsets[k];
        let dp = prefix - self.offsets[p];
        let rest = self.powers[k - p];
        (d / rest == dp).then(|| self.offsets[k - p] + d % rest)
    }
}

/// Ordered splittings of `w` into `parts` nonempty contiguous factors.
pub fn factorizations(w: &Word, parts: usize) -> Result<Vec<Vec<Word>>> {
    if parts == 0 {
        if w.is_empty() {
            return Ok(vec![Vec::new()]);
        }
        return Err(Error::InvalidPartCount { len: w.len(), parts });
    }
    if parts > w.len() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut cuts = Vec::with_capacity(parts - 1);
    split_rec(w.letters(), 0, parts, &mut cuts, &mut out);
    Ok(out)
}

fn split_rec(
    letters: &[u32],
    start: usize,
    remaining: usize,
    cuts: &mut Vec<usize>,
    out: &mut Vec<Vec<Word>>,
) {
    if remaining == 1 {
        let mut pieces = Vec::with_capacity(cuts.len() + 1);
        let mut prev = 0;
        for &c in cuts.iter() {
            pieces.push(Word::from(&letters[prev..c]));
            prev = c;
        }
        pieces.push(Word::from(&letters[prev..]));
        out.push(pieces);
        return;
    }
    // leave room for `remaining - 1` more nonempty pieces
    for cut in start + 1..=letters.len() - (remaining - 1) {
        cuts.push(cut);
        split_rec(letters, cut, remaining - 1, cuts, out);
        cuts.pop();
    }
}

pub fn reverse(w: &Word) -> Word {
    w.reverse()
}

pub fn multidegree(w: &Word, n: usize) -> MultiDegree {
    let mut counts = vec![0usize; n];
    for &l in w.letters() {
        counts[l as usize - 1] += 1;
    }
    MultiDegree(counts)
}

/// All multidegrees `k` with `|k| = total` over `n` generators, in lexicographic order.
pub fn multidegrees_of_total(n: usize, total: usize) -> Vec<MultiDegree> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fill_multidegrees(0, total, &mut current, &mut out);
    out
}

fn fill_multidegrees(pos: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<MultiDegree>) {
    if pos + 1 == current.len() {
        current[pos] = left;
        out.push(MultiDegree(current.clone()));
        return;
    }
    for k in (0..=left).rev() {
        current[pos] = k;
        fill_multidegrees(pos + 1, left - k, current, out);
    }
    current[pos] = 0;
}

/// Binomial coefficient as `f64` (exact for the small arguments used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Exact binomial coefficient.
pub fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn w(letters: &[u32]) -> Word {
        Word::from(letters)
    }

    #[test]
    fn enumerate_single_generator() {
        let words = enumerate_words(1, 2).unwrap();
        assert_eq!(words, vec![w(&[]), w(&[1]), w(&[1, 1])]);
    }

    #[test]
    fn enumerate_degree_one() {
        let words = enumerate_words(2, 1).unwrap();
        assert_eq!(words, vec![w(&[]), w(&[1]), w(&[2])]);
    }

    #[test]
    fn enumerate_two_generators_degree_two() {
        let words = enumerate_words(2, 2).unwrap();
        assert_eq!(words.len(), 7);
        assert_eq!(words.last().unwrap(), &w(&[2, 2]));
        assert!(words.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn enumerate_rejects_bad_input() {
        assert!(matches!(enumerate_words(0, 3), Err(Error::ZeroGenerators)));
        assert!(matches!(
            enumerate_words_capped(2, 20, 1000),
            Err(Error::TruncationTooLarge { .. })
        ));
    }

    #[test]
    fn index_round_trip_matches_enumeration() {
        for n in 1..=3 {
            let words = enumerate_words(n, 4).unwrap();
            for (i, word) in words.iter().enumerate() {
                assert_eq!(word_index(n, word.letters()), i);
                assert_eq!(&word_at(n, i), word);
            }
        }
    }

    #[test]
    fn grading_arithmetic_matches_words() {
        let n = 3;
        let g = Grading::new(n, 4).unwrap();
        let words = enumerate_words(n, 4).unwrap();
        assert_eq!(g.dim(), words.len());
        for (i, u) in words.iter().enumerate() {
            assert_eq!(g.len_of(i), u.len());
            for l in 1..=n as u32 {
                let left = g.left_mul(l, i).map(|j| words[j].clone());
                let right = g.right_mul(i, l).map(|j| words[j].clone());
                if u.len() < 4 {
                    assert_eq!(left.unwrap(), Word::generator(l).concat(u));
                    assert_eq!(right.unwrap(), u.concat(&Word::generator(l)));
                } else {
                    assert!(left.is_none() && right.is_none());
                }
            }
            for (j, v) in words.iter().enumerate().take(40) {
                match g.concat(i, j) {
                    Some(k) => assert_eq!(words[k], u.concat(v)),
                    None => assert!(u.len() + v.len() > 4),
                }
                let stripped = g.strip_prefix(i, j).map(|k| words[k].clone());
                let expected = u
                    .letters()
                    .strip_prefix(v.letters())
                    .map(Word::from);
                assert_eq!(stripped, expected);
            }
        }
    }

    #[test]
    fn reverse_examples() {
        assert_eq!(w(&[1, 2]).reverse(), w(&[2, 1]));
        assert_eq!(Word::empty().reverse(), Word::empty());
        assert_eq!(w(&[1, 1, 2]).reverse(), w(&[2, 1, 1]));
    }

    #[test]
    fn factorization_examples() {
        assert_eq!(factorizations(&w(&[1, 2]), 2).unwrap(), vec![vec![w(&[1]), w(&[2])]]);
        assert_eq!(
            factorizations(&w(&[1, 1, 1]), 2).unwrap(),
            vec![vec![w(&[1]), w(&[1, 1])], vec![w(&[1, 1]), w(&[1])]]
        );
        assert_eq!(factorizations(&w(&[1, 2, 2, 1]), 3).unwrap().len(), 3);
        assert!(factorizations(&w(&[1]), 2).unwrap().is_empty());
        assert!(factorizations(&w(&[1]), 0).is_err());
    }

    #[test]
    fn multidegree_examples() {
        assert_eq!(multidegree(&w(&[1, 2, 1]), 2), MultiDegree(vec![2, 1]));
        assert_eq!(multidegree(&Word::empty(), 3), MultiDegree(vec![0, 0, 0]));
    }

    #[test]
    fn multidegrees_partition_words() {
        let n = 3;
        for total in 0..=4 {
            let classes = multidegrees_of_total(n, total);
            let words: Vec<_> = enumerate_words(n, total)
                .unwrap()
                .into_iter()
                .filter(|x| x.len() == total)
                .collect();
            let mut seen = 0;
            for k in &classes {
                seen += words.iter().filter(|x| &x.multidegree(n) == k).count();
            }
            assert_eq!(seen, words.len());
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 2), 15.0);
        assert_eq!(binomial_u128(30, 15), 155_117_520);
        assert_eq!(binomial(3, 5), 0.0);
    }

    #[test]
    fn enumeration_is_injective() {
        let words = enumerate_words(3, 5).unwrap();
        let set: HashSet<_> = words.iter().map(|x| x.letters().to_vec()).collect();
        assert_eq!(set.len(), words.len());
        assert_eq!(words.len(), 1 + 3 + 9 + 27 + 81 + 243);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn word_strategy(max_len: usize) -> impl Strategy<Value = Word> {
            prop::collection::vec(1u32..=3, 0..=max_len).prop_map(Word::new)
        }

        proptest! {
            #[test]
            fn factorization_counts_and_concat(word in word_strategy(8), j in 1usize..=8) {
                let parts = factorizations(&word, j).unwrap();
                if j <= word.len() {
                    prop_assert_eq!(parts.len() as u128, binomial_u128(word.len() - 1, j - 1));
                } else {
                    prop_assert!(parts.is_empty());
                }
                for split in &parts {
                    prop_assert!(split.iter().all(|p| !p.is_empty()));
                    let joined = split.iter().fold(Word::empty(), |acc, p| acc.concat(p));
                    prop_assert_eq!(&joined, &word);
                }
            }

            #[test]
            fn reverse_is_involution(word in word_strategy(10)) {
                prop_assert_eq!(word.reverse().reverse(), word.clone());
                prop_assert_eq!(word.reverse().len(), word.len());
                prop_assert_eq!(word.reverse().multidegree(3), word.multidegree(3));
            }
        }
    }
}
