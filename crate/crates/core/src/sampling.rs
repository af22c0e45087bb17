//! Random members of `D_f^m`: interior (pure) tuples, commuting tuples, boundary
//! tuples with `Phi(I) = I`, and mixtures of the two.

use rand::Rng;

use crate::domain::check_membership;
use crate::error::{Error, Result};
use crate::fock::{CompletionMap, OperatorTuple};
use crate::linalg::{self, c, CMat, C64};
use crate::poly::FreePolynomial;

/// `||Phi_{f,T}(I)||`.
pub fn phi_norm(f: &FreePolynomial, t: &OperatorTuple) -> Result<f64> {
    let phi = CompletionMap::new(f, t)?;
    Ok(linalg::op_norm(&phi.apply(&linalg::identity(t.dim()))))
}

/// The scale `r` with `||Phi_{f, rT}(I)|| = target`, by bisection (the map is increasing in `r`).
pub fn scale_to_phi_norm(f: &FreePolynomial, t: &OperatorTuple, target: f64) -> Result<f64> {
    if phi_norm(f, t)? == 0.0 {
        return Err(Error::InvalidInput("Phi(I) vanishes; tuple cannot be rescaled".into()));
    }
    let mut hi = 1.0;
    while phi_norm(f, &t.scaled(hi))? < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi_norm(f, &t.scaled(mid))? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Gaussian tuple rescaled so that `||Phi(I)|| = phi_target < 1`.
///
/// `||Phi(I)|| < 1` alone does not force `(id - Phi)^k(I) >= 0` for `k >= 2`, so the
/// target is shrunk until membership is confirmed.
pub fn random_member(
    f: &FreePolynomial,
    m: usize,
    dim: usize,
    phi_target: f64,
    rng: &mut impl Rng,
) -> Result<OperatorTuple> {
    let raw = OperatorTuple::new((0..f.n()).map(|_| linalg::gaussian_matrix(dim, dim, rng)).collect())?;
    rescale_into_domain(f, m, &raw, phi_target)
}

fn rescale_into_domain(f: &FreePolynomial, m: usize, raw: &OperatorTuple, phi_target: f64) -> Result<OperatorTuple> {
    let mut target = phi_target;
    for _ in 0..60 {
        let t = raw.scaled(scale_to_phi_norm(f, raw, target)?);
        if check_membership(f, m, &t, Some(0.0))?.member {
            return Ok(t);
        }
        target *= 0.8;
    }
    Err(Error::InvalidInput("could not rescale the sample into the domain".into()))
}

/// Commuting tuple `T_i = p_i(A)` for a random matrix `A` and random quadratic `p_i`
/// without constant term, rescaled into the domain.
pub fn random_commuting_member(
    f: &FreePolynomial,
    m: usize,
    dim: usize,
    phi_target: f64,
    rng: &mut impl Rng,
) -> Result<OperatorTuple> {
    let a = linalg::gaussian_matrix(dim, dim, rng);
    let a2 = &a * &a;
    let mats = (0..f.n())
        .map(|_| {
            let c1 = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let c2 = C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let c0 = C64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
            linalg::identity(dim) * c0 + &a * c1 + &a2 * c2
        })
        .collect();
    rescale_into_domain(f, m, &OperatorTuple::new(mats)?, phi_target)
}

/// A point `lambda` with `sum_alpha a_alpha |lambda_alpha|^2 = level`.
pub fn scalar_point_at_level(f: &FreePolynomial, level: f64, rng: &mut impl Rng) -> Result<Vec<C64>> {
    let dir: Vec<C64> = (0..f.n())
        .map(|_| C64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    let t = OperatorTuple::scalar(&dir);
    let r = scale_to_phi_norm(f, &t, level)?;
    Ok(dir.iter().map(|z| z * r).collect())
}

/// Normal commuting boundary tuple `U^* diag(lambda^(j)) U` with every `lambda^(j)`
/// on the scalar boundary, so `Phi(I) = I`.
pub fn random_boundary_diagonal(f: &FreePolynomial, dim: usize, rng: &mut impl Rng) -> Result<OperatorTuple> {
    let points: Vec<Vec<C64>> =
        (0..dim).map(|_| scalar_point_at_level(f, 1.0, rng)).collect::<Result<_>>()?;
    let mats = (0..f.n())
        .map(|i| CMat::from_fn(dim, dim, |r, s| if r == s { points[r][i] } else { c(0.0) }))
        .collect();
    let u = linalg::random_unitary(dim, rng);
    Ok(OperatorTuple::new(mats)?.conjugated(&u))
}

/// Row coisometry `[T_1 ... T_n]` with `sum a_i T_i T_i^* = I` for linear `f = sum a_i X_i`,
/// taken from the first rows of a random unitary.
pub fn random_row_coisometry(f: &FreePolynomial, dim: usize, rng: &mut impl Rng) -> Result<OperatorTuple> {
    if f.degree() != 1 {
        return Err(Error::InvalidInput("row coisometries need a linear f".into()));
    }
    let n = f.n();
    let u = linalg::random_unitary(n * dim, rng);
    let mats = (0..n)
        .map(|i| {
            let a = f.coeff(&crate::words::Word::generator(i as u32 + 1)).re;
            u.view((0, i * dim), (dim, dim)).into_owned() / c(a.sqrt())
        })
        .collect();
    OperatorTuple::new(mats)
}

/// `U^* (P (+) B) U` with `P` a pure member and `B` a boundary tuple.
pub fn random_mixed(
    f: &FreePolynomial,
    m: usize,
    pure_dim: usize,
    boundary_dim: usize,
    phi_target: f64,
    rng: &mut impl Rng,
) -> Result<OperatorTuple> {
    let pure = random_member(f, m, pure_dim, phi_target, rng)?;
    let boundary = random_boundary_diagonal(f, boundary_dim, rng)?;
    let u = linalg::random_unitary(pure_dim + boundary_dim, rng);
    Ok(pure.direct_sum(&boundary)?.conjugated(&u))
}

/// Strictly upper triangular Gaussian tuple (so `T_alpha = 0` for `|alpha| >= dim`), rescaled into the domain.
pub fn random_nilpotent(
    f: &FreePolynomial,
    m: usize,
    dim: usize,
    phi_target: f64,
    rng: &mut impl Rng,
) -> Result<OperatorTuple> {
    let mats = (0..f.n())
        .map(|_| {
            let g = linalg::gaussian_matrix(dim, dim, rng);
            CMat::from_fn(dim, dim, |r, s| if s > r { g[(r, s)] } else { c(0.0) })
        })
        .collect();
    rescale_into_domain(f, m, &OperatorTuple::new(mats)?, phi_target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::purity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nonlinear() -> FreePolynomial {
        FreePolynomial::from_real(2, &[(&[1], 1.0), (&[2], 1.0), (&[2, 1], 1.0)]).unwrap()
    }

    #[test]
    fn members_hit_their_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = nonlinear();
        let t = random_member(&f, 2, 3, 0.3, &mut rng).unwrap();
        assert!((phi_norm(&f, &t).unwrap() - 0.3).abs() < 1e-12);
        assert!(purity(&f, &t, 500, 1e-13).unwrap().is_pure);
    }

    #[test]
    fn commuting_members_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = random_commuting_member(&FreePolynomial::linear_sum(2), 2, 4, 0.4, &mut rng).unwrap();
        let comm = t.get(0) * t.get(1) - t.get(1) * t.get(0);
        assert!(comm.norm() < 1e-13);
    }

    #[test]
    fn boundary_samples_are_fixed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = nonlinear();
        let t = random_boundary_diagonal(&f, 3, &mut rng).unwrap();
        let phi = CompletionMap::new(&f, &t).unwrap().apply(&linalg::identity(3));
        assert!((phi - linalg::identity(3)).norm() < 1e-12);

        let f = FreePolynomial::from_real(2, &[(&[1], 0.5), (&[2], 2.0)]).unwrap();
        let t = random_row_coisometry(&f, 2, &mut rng).unwrap();
        let phi = CompletionMap::new(&f, &t).unwrap().apply(&linalg::identity(2));
        assert!((phi - linalg::identity(2)).norm() < 1e-12);
    }

    #[test]
    fn nilpotent_samples_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = random_nilpotent(&FreePolynomial::linear_sum(2), 1, 3, 0.5, &mut rng).unwrap();
        let w = crate::words::Word::new(vec![1, 2, 1]);
        assert!(t.word(&w).norm() < 1e-15);
    }
}
