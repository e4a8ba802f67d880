//! Solutions of `∂^μ ∂̄^ν u = A` on a disk built from holomorphic free data.
//!
//! The general solution is
//! `u = Σ_{j<ν} T^j g_j + T^ν Σ_{i<μ} T̄^i f̄_i + T^ν T̄^μ A`
//! with `T⁰ = id`, and each term is a single integral against one of the
//! kernels `G(z, ζ, l)` (for `T^l`) or `G(z, ζ, ν, i)` (for `T^ν T̄^i`).

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{fd_step, wirtinger_split, DiskDomain, GeometryError};
use crate::kernels::{self, KernelError};
use crate::operators::{GreenOperators, OperatorError, ScalarField};
use crate::quadrature::{build_area_rule, QuadratureError, QuadratureRule};

/// Highest degree a [`HolomorphicPolynomial`] may have.
pub const MAX_POLY_DEGREE: usize = 20;

/// Largest `|Im A|` tolerated by [`solve_biharmonic`].
pub const REALNESS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("holomorphic polynomial degree {0} exceeds {MAX_POLY_DEGREE}")]
    DegreeTooLarge(usize),
    #[error("expected {expected} {what} functions, got {got}")]
    FreeDataLength {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("right-hand side is not real at {point}: imaginary part {imag:e}")]
    NonRealRHS { point: Complex64, imag: f64 },
    #[error("stencil of reach {reach:e} around {point} leaves the disk")]
    StencilOutOfDomain { point: Complex64, reach: f64 },
    #[error("operator orders must be at least 1")]
    ZeroOrder,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `Σ c_k z^k`, `k ≤ MAX_POLY_DEGREE`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HolomorphicPolynomial {
    coeffs: Vec<Complex64>,
}

impl HolomorphicPolynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, SolverError> {
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.len() > MAX_POLY_DEGREE + 1 {
            return Err(SolverError::DegreeTooLarge(coeffs.len() - 1));
        }
        Ok(Self { coeffs })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c]).expect("degree 0")
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }
}

/// Free data and right-hand side for `∂^μ ∂̄^ν u = A`.
#[derive(Debug, Clone)]
pub struct SolutionSpec {
    pub mu: u32,
    pub nu: u32,
    pub rhs: ScalarField,
    /// `g_0, …, g_{ν−1}`.
    pub g_list: Vec<HolomorphicPolynomial>,
    /// `f_0, …, f_{μ−1}`.
    pub f_list: Vec<HolomorphicPolynomial>,
}

impl SolutionSpec {
    pub fn new(
        mu: u32,
        nu: u32,
        rhs: ScalarField,
        g_list: Vec<HolomorphicPolynomial>,
        f_list: Vec<HolomorphicPolynomial>,
    ) -> Result<Self, SolverError> {
        let spec = Self {
            mu,
            nu,
            rhs,
            g_list,
            f_list,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec with all free functions zero.
    pub fn particular(mu: u32, nu: u32, rhs: ScalarField) -> Result<Self, SolverError> {
        Self::new(
            mu,
            nu,
            rhs,
            vec![HolomorphicPolynomial::zero(); nu as usize],
            vec![HolomorphicPolynomial::zero(); mu as usize],
        )
    }

    fn validate(&self) -> Result<(), SolverError> {
        if self.mu == 0 || self.nu == 0 {
            return Err(SolverError::ZeroOrder);
        }
        if self.mu > kernels::MAX_ORDER || self.nu > kernels::MAX_ORDER {
            return Err(KernelError::OrderTooLarge(self.mu.max(self.nu)).into());
        }
        if self.g_list.len() != self.nu as usize {
            return Err(SolverError::FreeDataLength {
                what: "g",
                expected: self.nu as usize,
                got: self.g_list.len(),
            });
        }
        if self.f_list.len() != self.mu as usize {
            return Err(SolverError::FreeDataLength {
                what: "f",
                expected: self.mu as usize,
                got: self.f_list.len(),
            });
        }
        Ok(())
    }

    pub fn domain(&self) -> &DiskDomain {
        self.rhs.domain()
    }
}

/// Pointwise evaluator `z ↦ u(z)`.
pub type Solution = Arc<dyn Fn(Complex64) -> Result<Complex64, SolverError> + Send + Sync>;

/// Evaluates `u(z)` for `spec` by a single quadrature pass at `z`:
/// `u = g_0 + ∫ [Σ_{1≤j<ν} G(j) g_j + G(ν) f̄_0 + Σ_{1≤i<μ} G(ν, i) f̄_i + G(ν, μ) A] dζ̄∧dζ`.
pub fn evaluate_solution(
    ops: &GreenOperators,
    spec: &SolutionSpec,
    z: Complex64,
    include_rhs: bool,
) -> Result<Complex64, SolverError> {
    spec.validate()?;
    let domain = *spec.domain();
    domain.check(z)?;
    if !domain.is_interior(z) {
        return Err(OperatorError::NotInterior(z).into());
    }
    let (c, r) = (domain.center(), domain.radius());
    let (mu, nu) = (spec.mu, spec.nu);
    let rule = build_area_rule(&domain, z, ops.resolution)?;
    let integral = rule.try_integrate(|zeta| {
        let mut v = Complex64::new(0.0, 0.0);
        for (j, g) in spec.g_list.iter().enumerate().skip(1) {
            if !g.is_zero() {
                v += kernels::g_diag(z, zeta, j as u32)? * g.eval(zeta);
            }
        }
        if let Some(f0) = spec.f_list.first().filter(|f| !f.is_zero()) {
            v += kernels::g_diag(z, zeta, nu)? * f0.eval(zeta).conj();
        }
        for (i, f) in spec.f_list.iter().enumerate().skip(1) {
            if !f.is_zero() {
                v += kernels::g_mixed(z - c, zeta - c, nu, i as u32, r)? * f.eval(zeta).conj();
            }
        }
        if include_rhs {
            v += kernels::g_mixed(z - c, zeta - c, nu, mu, r)? * spec.rhs.eval(zeta);
        }
        Ok::<_, SolverError>(v)
    })?;
    Ok(spec.g_list[0].eval(z) + integral)
}

/// Solution family member of the homogeneous equation `∂^μ ∂̄^ν u = 0`.
pub fn solve_homogeneous(ops: GreenOperators, spec: SolutionSpec) -> Result<Solution, SolverError> {
    spec.validate()?;
    Ok(Arc::new(move |z| evaluate_solution(&ops, &spec, z, false)))
}

/// Solution of `∂^μ ∂̄^ν u = A` with the free data in `spec`.
pub fn solve_pde(ops: GreenOperators, spec: SolutionSpec) -> Result<Solution, SolverError> {
    spec.validate()?;
    Ok(Arc::new(move |z| evaluate_solution(&ops, &spec, z, true)))
}

/// Real solution of `Δ²u = A` for real `A`:
/// `u = Re(1/(32πi) ∫ C3(z, η, 2, 2) A dη̄∧dη) + |z|² Re h1 + Re h2`.
pub fn solve_biharmonic(
    ops: GreenOperators,
    rhs: ScalarField,
    h1: HolomorphicPolynomial,
    h2: HolomorphicPolynomial,
) -> Result<Solution, SolverError> {
    let domain = *rhs.domain();
    for p in crate::oracle::hoelder::disk_samples(&domain, 64, 1.0) {
        let v = rhs.eval(p);
        if v.im.abs() > REALNESS_TOL {
            return Err(SolverError::NonRealRHS {
                point: p,
                imag: v.im,
            });
        }
    }
    Ok(Arc::new(move |z| {
        let w = biharmonic_integral(&ops, &rhs, z)?;
        let zc = z - domain.center();
        Ok(Complex64::new(
            w.re + zc.norm_sqr() * h1.eval(z).re + h2.eval(z).re,
            0.0,
        ))
    }))
}

/// `1/(32πi) ∫ C3(z, η, 2, 2) A dη̄∧dη` before taking the real part.
pub fn biharmonic_integral(
    ops: &GreenOperators,
    rhs: &ScalarField,
    z: Complex64,
) -> Result<Complex64, SolverError> {
    let domain = *rhs.domain();
    domain.check(z)?;
    if !domain.is_interior(z) {
        return Err(OperatorError::NotInterior(z).into());
    }
    let (c, r) = (domain.center(), domain.radius());
    let rule = build_area_rule(&domain, z, ops.resolution)?;
    let v = rule.try_integrate(|eta| {
        let a = rhs.eval(eta);
        if a.im.abs() > REALNESS_TOL {
            return Err(SolverError::NonRealRHS {
                point: eta,
                imag: a.im,
            });
        }
        Ok(kernels::c3(z - c, eta - c, 2, 2, r)? * a.re)
    })?;
    Ok(v / Complex64::new(0.0, 32.0 * std::f64::consts::PI))
}

/// `|FD[∂^μ ∂̄^ν] u(z) − A(z)|` at each point, scaled by `factor` on the
/// derivative (16 turns `∂²∂̄²` into `Δ²`).
pub fn fd_residual<U, A>(
    u: U,
    mu: u32,
    nu: u32,
    factor: f64,
    rhs: A,
    domain: &DiskDomain,
    points: &[Complex64],
) -> Result<Vec<f64>, SolverError>
where
    U: Fn(Complex64) -> Result<Complex64, SolverError> + Sync,
    A: Fn(Complex64) -> Complex64 + Sync,
{
    let stencil = wirtinger_split(mu, nu);
    let h = fd_step(mu + nu, domain.radius());
    let reach = stencil.reach(h);
    for &p in points {
        if (p - domain.center()).norm() + reach > domain.radius() {
            return Err(SolverError::StencilOutOfDomain { point: p, reach });
        }
    }
    points
        .par_iter()
        .map(|&p| {
            let d = stencil.apply(&u, p, h)?;
            Ok((d * factor - rhs(p)).norm())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::PolynomialField;
    use crate::quadrature::Resolution;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ops() -> GreenOperators {
        GreenOperators::new(Resolution::new(32, 64).unwrap(), 128).unwrap()
    }

    fn hp(coeffs: &[(f64, f64)]) -> HolomorphicPolynomial {
        HolomorphicPolynomial::new(coeffs.iter().map(|&(a, b)| c(a, b)).collect()).unwrap()
    }

    #[test]
    fn polynomial_basics() {
        let p = hp(&[(1.0, 0.0), (0.0, 2.0), (0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(p.coeffs().len(), 2);
        assert_eq!(p.eval(c(0.5, 0.0)), c(1.0, 1.0));
        assert!(HolomorphicPolynomial::new(vec![c(1.0, 0.0); 22]).is_err());
        assert!(HolomorphicPolynomial::new(vec![c(1.0, 0.0); 21]).is_ok());
    }

    #[test]
    fn spec_lengths_checked() {
        let d = DiskDomain::unit();
        let a = ScalarField::zero(d);
        assert!(matches!(
            SolutionSpec::new(
                2,
                1,
                a.clone(),
                vec![],
                vec![HolomorphicPolynomial::zero(); 2]
            ),
            Err(SolverError::FreeDataLength { what: "g", .. })
        ));
        assert!(matches!(
            SolutionSpec::particular(0, 1, a),
            Err(SolverError::ZeroOrder)
        ));
    }

    #[test]
    fn holomorphic_g0_is_returned() {
        let d = DiskDomain::unit();
        let spec = SolutionSpec::new(
            1,
            1,
            ScalarField::zero(d),
            vec![hp(&[(0.0, 0.0), (1.0, 0.0)])],
            vec![HolomorphicPolynomial::zero()],
        )
        .unwrap();
        let u = solve_homogeneous(ops(), spec).unwrap();
        let z = c(0.3, -0.2);
        assert!((u(z).unwrap() - z).norm() < 1e-15);
    }

    #[test]
    fn conjugate_free_data_gives_t_of_one() {
        let d = DiskDomain::unit();
        let spec = SolutionSpec::new(
            1,
            1,
            ScalarField::zero(d),
            vec![HolomorphicPolynomial::zero()],
            vec![hp(&[(1.0, 0.0)])],
        )
        .unwrap();
        let u = solve_homogeneous(ops(), spec).unwrap();
        let z = c(0.3, -0.2);
        assert!((u(z).unwrap() - z.conj()).norm() < 1e-12);
        let res = fd_residual(&*u, 1, 1, 1.0, |_| c(0.0, 0.0), &d, &[z, c(-0.1, 0.4)]).unwrap();
        assert!(res.iter().all(|&r| r < 1e-5), "{res:?}");
    }

    #[test]
    fn particular_solution_matches_operator() {
        let d = DiskDomain::unit();
        let one = ScalarField::constant(d, c(1.0, 0.0));
        let spec = SolutionSpec::particular(1, 1, one.clone()).unwrap();
        let ops = ops();
        let u = solve_pde(ops, spec).unwrap();
        let o = c(0.0, 0.0);
        // same kernel and rule; only the placement of the prefactor differs
        let (a, b) = (u(o).unwrap(), ops.apply_mixed(&one, o, 1, 1).unwrap());
        assert!((a - b).norm() < 1e-14, "{a} {b}");
    }

    #[test]
    fn residual_of_known_functions() {
        let d = DiskDomain::unit();
        let pts = [c(0.1, 0.2), c(-0.3, 0.0)];
        let r = fd_residual(|z| Ok(z * z.conj()), 1, 1, 1.0, |_| c(1.0, 0.0), &d, &pts).unwrap();
        assert!(r.iter().all(|&x| x < 1e-6), "{r:?}");
        let r = fd_residual(
            |z| Ok((z * z.conj()).powi(2)),
            2,
            2,
            1.0,
            |_| c(4.0, 0.0),
            &d,
            &pts,
        )
        .unwrap();
        assert!(r.iter().all(|&x| x < 1e-4), "{r:?}");
        assert!(matches!(
            fd_residual(Ok, 1, 1, 1.0, |_| c(0.0, 0.0), &d, &[c(0.99999, 0.0)]),
            Err(SolverError::StencilOutOfDomain { .. })
        ));
    }

    #[test]
    fn biharmonic_harmonic_parts_and_realness() {
        let d = DiskDomain::unit();
        let u = solve_biharmonic(
            ops(),
            ScalarField::zero(d),
            HolomorphicPolynomial::zero(),
            hp(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]),
        )
        .unwrap();
        let z = c(0.3, 0.4);
        assert!((u(z).unwrap() - c(0.09 - 0.16, 0.0)).norm() < 1e-14);
        let u = solve_biharmonic(
            ops(),
            ScalarField::zero(d),
            hp(&[(1.0, 0.0)]),
            HolomorphicPolynomial::zero(),
        )
        .unwrap();
        assert!((u(z).unwrap() - c(0.25, 0.0)).norm() < 1e-14);
        let complex = ScalarField::constant(d, c(1.0, 1.0));
        assert!(matches!(
            solve_biharmonic(
                ops(),
                complex,
                HolomorphicPolynomial::zero(),
                HolomorphicPolynomial::zero()
            ),
            Err(SolverError::NonRealRHS { .. })
        ));
        let a = ScalarField::from_polynomial(
            d,
            PolynomialField::from_terms([(0, 0, c(16.0, 0.0)), (1, 1, c(3.0, 0.0))]).unwrap(),
        );
        let w = biharmonic_integral(&ops(), &a, c(0.2, -0.5)).unwrap();
        assert!(w.im.abs() < 1e-10 * w.re.abs().max(1.0), "{w}");
    }
}
