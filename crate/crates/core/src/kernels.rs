//! Closed-form kernels of the iterated Cauchy transforms.
//!
//! With `L(a, b) = ln((R² − a b̄)/|a − b|²)`:
//!
//! * `∫_D (ζ − b)^{k−1} / ((ζ − a)(ζ̄ − b̄)) dζ̄∧dζ = 2πi (c1(a,b,k) + (a − b)^{k−1} L)`
//! * `∮_C (ζ̄ − b̄)^l (ζ − b)^{ν−1} / (ζ − a) dζ = 2πi c2(a,b,l,ν)`
//! * `∫_D (ζ̄ − ā)^{μ−1} (ζ − b)^{ν−1} / ((ζ − a)(ζ̄ − b̄)) dζ̄∧dζ = 2πi c3(a,b,μ,ν)`
//!
//! `c3` is the kernel of `T^μ T̄^ν` up to the factor returned by
//! [`mixed_prefactor`].

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::{GeometryError, MultiIndex};

/// Largest order accepted by any kernel.
pub const MAX_ORDER: u32 = 20;

/// Points closer than `COINCIDENCE_EPS · R` are treated as coincident.
pub const COINCIDENCE_EPS: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("points {a} and {b} coincide (|a - b| = {distance:e})")]
    CoincidentPoints {
        a: Complex64,
        b: Complex64,
        distance: f64,
    },
    #[error("kernel orders start at 1")]
    ZeroOrder,
    #[error("order {0} exceeds the supported maximum of {MAX_ORDER}")]
    OrderTooLarge(u32),
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn pascal() -> &'static [[u64; MAX_ORDER as usize + 1]; MAX_ORDER as usize + 1] {
    static TABLE: OnceLock<[[u64; MAX_ORDER as usize + 1]; MAX_ORDER as usize + 1]> =
        OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0u64; MAX_ORDER as usize + 1]; MAX_ORDER as usize + 1];
        for n in 0..=MAX_ORDER as usize {
            t[n][0] = 1;
            for k in 1..=n {
                t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            }
        }
        t
    })
}

/// `C(n, k)` from an integer Pascal table; zero when `k > n`.
///
/// Panics if `n > MAX_ORDER`; callers validate orders first.
pub fn binomial(n: u32, k: u32) -> f64 {
    assert!(n <= MAX_ORDER, "binomial order {n} above {MAX_ORDER}");
    if k > n {
        0.0
    } else {
        pascal()[n as usize][k as usize] as f64
    }
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn check_order(k: u32) -> Result<(), KernelError> {
    match k {
        0 => Err(KernelError::ZeroOrder),
        k if k > MAX_ORDER => Err(KernelError::OrderTooLarge(k)),
        _ => Ok(()),
    }
}

fn check_radius(radius: f64) -> Result<(), KernelError> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(KernelError::InvalidRadius(radius))
    }
}

fn check_separation(a: Complex64, b: Complex64, radius: f64) -> Result<(), KernelError> {
    let distance = (a - b).norm();
    if distance < COINCIDENCE_EPS * radius {
        Err(KernelError::CoincidentPoints { a, b, distance })
    } else {
        Ok(())
    }
}

fn pow(z: Complex64, n: u32) -> Complex64 {
    z.powu(n)
}

/// Polynomial part of the first kernel lemma:
/// `Σ_{l=1}^{k−1} (−b^l/l) Σ_{j=0}^{k−1−l} C(k−1,j) a^{k−1−l−j} (−b)^j`.
///
/// This is the `1/ζ` coefficient of `(ζ − b)^{k−1} ln(1 − b/ζ) / (ζ − a)` at
/// infinity; `k = 1` gives exactly zero.
pub fn c1(a: Complex64, b: Complex64, k: u32) -> Result<Complex64, KernelError> {
    check_order(k)?;
    let mut total = Complex64::new(0.0, 0.0);
    for l in 1..k {
        let mut inner = Complex64::new(0.0, 0.0);
        for j in 0..=(k - 1 - l) {
            inner += binomial(k - 1, j) * pow(a, k - 1 - l - j) * pow(-b, j);
        }
        total += -pow(b, l) / f64::from(l) * inner;
    }
    Ok(total)
}

/// Residue sum of the boundary lemma:
/// `Σ_{p ≤ q} C(l,p) C(ν−1,q) R^{2p} (−b̄)^{l−p} (−b)^{ν−1−q} a^{q−p}`.
pub fn c2(
    a: Complex64,
    b: Complex64,
    l: u32,
    nu: u32,
    radius: f64,
) -> Result<Complex64, KernelError> {
    check_order(l)?;
    check_order(nu)?;
    check_radius(radius)?;
    let r2 = radius * radius;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..=l {
        for q in p..nu {
            total += binomial(l, p)
                * binomial(nu - 1, q)
                * r2.powi(p as i32)
                * pow(-b.conj(), l - p)
                * pow(-b, nu - 1 - q)
                * pow(a, q - p);
        }
    }
    Ok(total)
}

/// `ln((R² − a b̄)/|a − b|²)` evaluated as
/// `ln R² + Log(1 − a b̄/R²) − 2 ln|a − b|` with the principal branch.
pub fn log_term(a: Complex64, b: Complex64, radius: f64) -> Result<Complex64, KernelError> {
    check_radius(radius)?;
    check_separation(a, b, radius)?;
    let r2 = radius * radius;
    let inner = (Complex64::new(1.0, 0.0) - a * b.conj() / r2).ln();
    Ok(inner + r2.ln() - 2.0 * (a - b).norm().ln())
}

/// Kernel of `T^μ T̄^ν`:
///
/// `c3 = (b̄ − ā)^{μ−1} (c1(a,b,ν) + (a − b)^{ν−1} L)
///      + Σ_{l=1}^{μ−1} C(μ−1,l) (b̄ − ā)^{μ−1−l} (c2(a,b,l,ν) − (ā − b̄)^l (a − b)^{ν−1}) / l`.
pub fn c3(
    a: Complex64,
    b: Complex64,
    mu: u32,
    nu: u32,
    radius: f64,
) -> Result<Complex64, KernelError> {
    check_order(mu)?;
    check_order(nu)?;
    let log = log_term(a, b, radius)?;
    let shift = b.conj() - a.conj();
    let diff_pow = pow(a - b, nu - 1);
    let mut total = pow(shift, mu - 1) * (c1(a, b, nu)? + diff_pow * log);
    for l in 1..mu {
        let tail = c2(a, b, l, nu, radius)? - pow(a.conj() - b.conj(), l) * diff_pow;
        total += binomial(mu - 1, l) * pow(shift, mu - 1 - l) * tail / f64::from(l);
    }
    Ok(total)
}

/// Bundled arguments of a `c3` evaluation with its admissibility checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuery {
    pub a: Complex64,
    pub b: Complex64,
    pub mu: u32,
    pub nu: u32,
    pub radius: f64,
}

impl KernelQuery {
    pub fn new(
        a: Complex64,
        b: Complex64,
        mu: u32,
        nu: u32,
        radius: f64,
    ) -> Result<Self, KernelError> {
        check_radius(radius)?;
        check_order(mu)?;
        check_order(nu)?;
        let disk = crate::geometry::DiskDomain::new(radius)?;
        disk.check(a)?;
        disk.check(b)?;
        check_separation(a, b, radius)?;
        Ok(Self {
            a,
            b,
            mu,
            nu,
            radius,
        })
    }

    pub fn evaluate(&self) -> Result<Complex64, KernelError> {
        c3(self.a, self.b, self.mu, self.nu, self.radius)
    }
}

/// Explicit low-order forms of `c3(z, η, μ, ν)` for `μ, ν ∈ {1, 2}`.
/// Returns `None` outside that table.
pub fn c3_low_order(
    z: Complex64,
    eta: Complex64,
    mu: u32,
    nu: u32,
    radius: f64,
) -> Result<Option<Complex64>, KernelError> {
    let l = log_term(z, eta, radius)?;
    let r2 = radius * radius;
    let value = match (mu, nu) {
        (1, 1) => l,
        (1, 2) => -eta + (z - eta) * l,
        (2, 1) => (eta.conj() - z.conj()) * l - z.conj(),
        (2, 2) => {
            (eta.conj() - z.conj()) * (-eta + (z - eta) * l) - (z - eta).norm_sqr() + eta.norm_sqr()
                - z * eta.conj()
                + r2
        }
        _ => return Ok(None),
    };
    Ok(Some(value))
}

/// `1/(2πi)`.
pub fn inv_two_pi_i() -> Complex64 {
    Complex64::new(0.0, -1.0 / (2.0 * PI))
}

/// `(−1)^μ / ((μ−1)! (ν−1)! 2πi)`, the factor in front of `∫ c3 f`.
pub fn mixed_prefactor(mu: u32, nu: u32) -> Complex64 {
    let sign = if mu.is_multiple_of(2) { 1.0 } else { -1.0 };
    inv_two_pi_i() * (sign / (factorial(mu - 1) * factorial(nu - 1)))
}

/// `(−1)^{|μ|} / ((μ−1)! (ν−1)! (2πi)^n)` for the polydisc operator.
pub fn c8(mu: &MultiIndex, nu: &MultiIndex) -> Result<Complex64, KernelError> {
    let n = mu.len();
    mu.require_kernel_admissible(n)?;
    nu.require_kernel_admissible(n)?;
    for &m in mu.entries().iter().chain(nu.entries()) {
        check_order(m)?;
    }
    let sign = if mu.order().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    let denom: f64 = mu
        .entries()
        .iter()
        .chain(nu.entries())
        .map(|&m| factorial(m - 1))
        .product();
    Ok(inv_two_pi_i().powu(n as u32) * (sign / denom))
}

/// Kernel of `T^l`: `(−1)^l (ζ̄ − z̄)^{l−1} / (2πi (l−1)! (ζ − z))`.
pub fn g_diag(z: Complex64, zeta: Complex64, l: u32) -> Result<Complex64, KernelError> {
    check_order(l)?;
    let distance = (zeta - z).norm();
    if distance < COINCIDENCE_EPS * z.norm().max(zeta.norm()).max(1.0) {
        return Err(KernelError::CoincidentPoints {
            a: z,
            b: zeta,
            distance,
        });
    }
    let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(
        inv_two_pi_i() * sign * pow(zeta.conj() - z.conj(), l - 1)
            / (factorial(l - 1) * (zeta - z)),
    )
}

/// Kernel of `T^μ T̄^ν`: `mixed_prefactor(μ, ν) · c3(z, ζ, μ, ν)`.
pub fn g_mixed(
    z: Complex64,
    zeta: Complex64,
    mu: u32,
    nu: u32,
    radius: f64,
) -> Result<Complex64, KernelError> {
    Ok(mixed_prefactor(mu, nu) * c3(z, zeta, mu, nu, radius)?)
}
