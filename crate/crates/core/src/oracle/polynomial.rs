//! Polynomials in `z` and `z̄` with exact Wirtinger calculus.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::kernels::factorial;

/// Highest power of `z` and of `z̄` a [`PolynomialField`] can hold.
pub const MAX_DEGREE: usize = 8;

const SIZE: usize = MAX_DEGREE + 1;

/// `Σ c[p][q] z^p z̄^q` with `p, q ≤ MAX_DEGREE`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialField {
    coeffs: [[Complex64; SIZE]; SIZE],
}

impl Default for PolynomialField {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Debug for PolynomialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .terms()
            .map(|(p, q, c)| format!("({c})z^{p}zbar^{q}"))
            .collect();
        if terms.is_empty() {
            write!(f, "PolynomialField(0)")
        } else {
            write!(f, "PolynomialField({})", terms.join(" + "))
        }
    }
}

impl PolynomialField {
    pub fn zero() -> Self {
        Self {
            coeffs: [[Complex64::new(0.0, 0.0); SIZE]; SIZE],
        }
    }

    pub fn constant(c: Complex64) -> Self {
        let mut out = Self::zero();
        out.coeffs[0][0] = c;
        out
    }

    /// `c z^p z̄^q`.
    pub fn monomial(p: usize, q: usize, c: Complex64) -> Result<Self, OracleError> {
        let mut out = Self::zero();
        out.set(p, q, c)?;
        Ok(out)
    }

    /// Builds a field from `(p, q, coefficient)` triples; repeated pairs add up.
    pub fn from_terms<I>(terms: I) -> Result<Self, OracleError>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut out = Self::zero();
        for (p, q, c) in terms {
            let old = out.coeff(p, q);
            out.set(p, q, old + c)?;
        }
        Ok(out)
    }

    pub fn coeff(&self, p: usize, q: usize) -> Complex64 {
        if p < SIZE && q < SIZE {
            self.coeffs[p][q]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, p: usize, q: usize, c: Complex64) -> Result<(), OracleError> {
        if p >= SIZE || q >= SIZE {
            if c == Complex64::new(0.0, 0.0) {
                return Ok(());
            }
            return Err(OracleError::DegreeCap { p, q });
        }
        self.coeffs[p][q] = c;
        Ok(())
    }

    /// Nonzero terms as `(p, q, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..SIZE).flat_map(move |p| {
            (0..SIZE).filter_map(move |q| {
                let c = self.coeffs[p][q];
                (c != Complex64::new(0.0, 0.0)).then_some((p, q, c))
            })
        })
    }

    pub fn is_zero(&self) -> bool {
        self.terms().next().is_none()
    }

    /// Highest `p + q` among nonzero terms; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms().map(|(p, q, _)| p + q).max().unwrap_or(0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let zb = z.conj();
        let mut total = Complex64::new(0.0, 0.0);
        let mut zp = Complex64::new(1.0, 0.0);
        for row in &self.coeffs {
            // Horner in z̄ along the row
            let mut acc = Complex64::new(0.0, 0.0);
            for c in row.iter().rev() {
                acc = acc * zb + c;
            }
            total += zp * acc;
            zp *= z;
        }
        total
    }

    /// `conj(P(z))` as a polynomial: `c z^p z̄^q → c̄ z^q z̄^p`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero();
        for p in 0..SIZE {
            for q in 0..SIZE {
                out.coeffs[q][p] = self.coeffs[p][q].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = *self;
        out.coeffs.iter_mut().flatten().for_each(|c| *c *= s);
        out
    }

    /// Exact `∂^mu ∂̄^nu`.
    pub fn wirtinger_exact(&self, mu: u32, nu: u32) -> Self {
        let (mu, nu) = (mu as usize, nu as usize);
        let mut out = Self::zero();
        for (p, q, c) in self.terms() {
            if p >= mu && q >= nu {
                let k = factorial(p as u32) / factorial((p - mu) as u32) * factorial(q as u32)
                    / factorial((q - nu) as u32);
                out.coeffs[p - mu][q - nu] = c * k;
            }
        }
        out
    }

    /// Product, failing if a power exceeds the cap.
    pub fn try_mul(&self, other: &Self) -> Result<Self, OracleError> {
        let mut out = Self::zero();
        for (p1, q1, c1) in self.terms() {
            for (p2, q2, c2) in other.terms() {
                let (p, q) = (p1 + p2, q1 + q2);
                let old = out.coeff(p, q);
                out.set(p, q, old + c1 * c2)?;
            }
        }
        Ok(out)
    }

    pub fn try_pow(&self, k: u32) -> Result<Self, OracleError> {
        let mut out = Self::constant(Complex64::new(1.0, 0.0));
        for _ in 0..k {
            out = out.try_mul(self)?;
        }
        Ok(out)
    }

    /// `T` on the origin-centred disk of radius `radius`, in closed form.
    ///
    /// `z^p z̄^{q+1}/(q+1)` is a `∂̄`-primitive of `z^p z̄^q`; subtracting its
    /// boundary Cauchy integral (`z̄ = R²/z` on the circle) leaves `T`.
    pub fn exact_t(&self, radius: f64) -> Result<Self, OracleError> {
        let mut out = Self::zero();
        for (p, q, c) in self.terms() {
            let k = (q + 1) as f64;
            let old = out.coeff(p, q + 1);
            out.set(p, q + 1, old + c / k)?;
            if p > q {
                let m = p - q - 1;
                let old = out.coeff(m, 0);
                out.set(m, 0, old - c * radius.powi(2 * (q as i32 + 1)) / k)?;
            }
        }
        Ok(out)
    }

    /// `T̄ f = conj(T conj f)`.
    pub fn exact_tbar(&self, radius: f64) -> Result<Self, OracleError> {
        Ok(self.conj().exact_t(radius)?.conj())
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for PolynomialField {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self
            .coeffs
            .iter_mut()
            .flatten()
            .zip(rhs.coeffs.iter().flatten())
        {
            *a += b;
        }
        self
    }
}

impl Sub for PolynomialField {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for PolynomialField {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for PolynomialField {
    type Output = Self;

    fn mul(self, rhs: Complex64) -> Self {
        self.scale(rhs)
    }
}
