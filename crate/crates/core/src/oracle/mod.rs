//! Independent references for the closed forms: exact polynomial calculus,
//! literal nested operator application, direct quadrature of the kernel
//! lemmas and discrete Hölder estimators.

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::kernels::KernelError;
use crate::operators::OperatorError;
use crate::quadrature::QuadratureError;

pub mod hoelder;
pub mod lemmas;
pub mod nested;
pub mod polynomial;

pub use polynomial::PolynomialField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("term z^{p} zbar^{q} exceeds the polynomial degree cap")]
    DegreeCap { p: usize, q: usize },
    #[error("nested programs are limited to {max} operators, got {got}")]
    DepthCap { got: usize, max: usize },
    #[error("intermediate field is not a polynomial of degree <= 8 (fit residual {residual:e})")]
    NotPolynomial { residual: f64 },
    #[error("the nested oracle needs a disk centred at the origin, got centre {0}")]
    UncenteredDomain(Complex64),
    #[error("invalid {what}: {value}")]
    InvalidParameter { what: &'static str, value: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
