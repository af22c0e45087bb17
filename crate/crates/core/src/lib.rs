//! Numerical workbench for noncommutative domains defined by positive regular
//! polynomials: weighted Fock-space models, Berezin kernels and transforms,
//! domain membership, reproducing kernels on symmetric Fock spaces, and
//! dilations on truncated Fock spaces.

pub mod berezin;
pub mod coefficients;
pub mod dilation;
pub mod domain;
pub mod error;
pub mod fock;
pub mod io;
pub mod linalg;
pub mod poly;
pub mod sampling;
pub mod variety;
pub mod words;

pub use berezin::{build_kernel, transform, BerezinKernel};
pub use coefficients::{
    one_minus_power_coeffs, symmetric_weights, validate_positive_regular, weights_bruteforce,
    weights_recursive, SymmetricWeights, WeightTable,
};
pub use domain::{check_membership, DomainReport};
pub use error::{Error, Result};
pub use fock::{FockOperator, OperatorTuple, TruncatedFock};
pub use poly::FreePolynomial;
pub use words::{Grading, MultiDegree, Word};
