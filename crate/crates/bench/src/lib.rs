//! Fixtures shared by the benches in `benches/`.

use ncdomain::sampling::random_member;
use ncdomain::{FreePolynomial, OperatorTuple};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn drury(n: usize) -> FreePolynomial {
    FreePolynomial::linear_sum(n)
}

/// `X1 + X2 + X2 X1`.
pub fn nonlinear() -> FreePolynomial {
    FreePolynomial::from_real(2, &[(&[1], 1.0), (&[2], 1.0), (&[2, 1], 1.0)]).expect("valid polynomial")
}

/// A random member of `D_f^m` on `C^dim` with `||Phi(I)|| = phi`, fixed by `seed`.
pub fn member(f: &FreePolynomial, m: usize, dim: usize, phi: f64, seed: u64) -> OperatorTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_member(f, m, dim, phi, &mut rng).expect("sampled member")
}
