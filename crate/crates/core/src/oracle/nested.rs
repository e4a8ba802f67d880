//! Literal composition of single `T`/`T̄` applications.
//!
//! Each inner layer is evaluated by quadrature on a polar sampling grid and
//! projected back onto polynomials in `z`, `z̄`. `T` and `T̄` map such
//! polynomials to polynomials one degree higher, so the projection is exact
//! up to quadrature error; a residual check rejects fields that are not of
//! this form. The outermost operator is applied directly at the target.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::polynomial::{PolynomialField, MAX_DEGREE};
use super::OracleError;
use crate::geometry::DiskDomain;
use crate::operators::{GreenOperators, ScalarField};
use crate::quadrature::Resolution;

/// Longest program accepted by [`nested_apply`].
pub const MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    T,
    Tbar,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::T => write!(f, "T"),
            Step::Tbar => write!(f, "Tbar"),
        }
    }
}

impl FromStr for Step {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "T" => Ok(Step::T),
            "Tbar" => Ok(Step::Tbar),
            other => Err(format!("unknown step {other:?}")),
        }
    }
}

/// `[T; mu]` followed by `[Tbar; nu]`, i.e. the program for `T^μ T̄^ν`.
pub fn mixed_program(mu: usize, nu: usize) -> Vec<Step> {
    let mut p = vec![Step::T; mu];
    p.extend(std::iter::repeat_n(Step::Tbar, nu));
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestedConfig {
    /// Resolution of every single-operator quadrature.
    pub resolution: Resolution,
    /// Sampling rings in `(0, 0.85R]`.
    pub rings: usize,
    /// Samples per ring; must exceed twice the largest Fourier mode.
    pub angles: usize,
    /// Accepted relative fit residual.
    pub fit_tol: f64,
}

impl Default for NestedConfig {
    fn default() -> Self {
        Self {
            resolution: Resolution::default(),
            rings: 10,
            angles: 32,
            fit_tol: 1e-9,
        }
    }
}

fn sample_grid(domain: &DiskDomain, cfg: &NestedConfig) -> Vec<(f64, Vec<Complex64>)> {
    let r = domain.radius();
    (0..cfg.rings)
        .map(|k| {
            let rho = 0.85 * r * (k as f64 + 1.0) / cfg.rings as f64;
            let pts = (0..cfg.angles)
                .map(|j| Complex64::from_polar(rho, 2.0 * PI * j as f64 / cfg.angles as f64))
                .collect();
            (rho, pts)
        })
        .collect()
}

/// Least-squares projection of ring samples onto `Σ c_{pq} z^p z̄^q` with
/// `p + q ≤ MAX_DEGREE`.
pub fn project_polynomial(
    domain: &DiskDomain,
    cfg: &NestedConfig,
    samples: &[(f64, Vec<Complex64>, Vec<Complex64>)],
) -> Result<PolynomialField, OracleError> {
    let r = domain.radius();
    let n_ang = cfg.angles;
    let dmax = MAX_DEGREE as i64;
    // Fourier modes per ring
    let modes: Vec<Vec<Complex64>> = samples
        .iter()
        .map(|(_, _, vals)| {
            (-dmax..=dmax)
                .map(|m| {
                    let s: Complex64 = vals
                        .iter()
                        .enumerate()
                        .map(|(j, v)| {
                            v * Complex64::from_polar(
                                1.0,
                                -2.0 * PI * (m * j as i64) as f64 / n_ang as f64,
                            )
                        })
                        .sum();
                    s / n_ang as f64
                })
                .collect()
        })
        .collect();

    let mut poly = PolynomialField::zero();
    for (mi, m) in (-dmax..=dmax).enumerate() {
        let am = m.unsigned_abs() as usize;
        let basis: Vec<usize> = (0..)
            .map(|s| am + 2 * s)
            .take_while(|&d| d <= MAX_DEGREE)
            .collect();
        let a = DMatrix::from_fn(samples.len(), basis.len(), |k, s| {
            (samples[k].0 / r).powi(basis[s] as i32)
        });
        let solve = |part: fn(&Complex64) -> f64| {
            let rhs = DVector::from_fn(samples.len(), |k, _| part(&modes[k][mi]));
            a.clone().svd(true, true).solve(&rhs, 1e-14)
        };
        let re = solve(|c| c.re).map_err(|_| OracleError::NotPolynomial { residual: f64::NAN })?;
        let im = solve(|c| c.im).map_err(|_| OracleError::NotPolynomial { residual: f64::NAN })?;
        for (s, &d) in basis.iter().enumerate() {
            // z^p z̄^q = ρ^{p+q} e^{i(p−q)θ}
            let p = ((d as i64 + m) / 2) as usize;
            let q = ((d as i64 - m) / 2) as usize;
            let c = Complex64::new(re[s], im[s]) / r.powi(d as i32);
            poly.set(p, q, c)?;
        }
    }

    let scale = samples
        .iter()
        .flat_map(|s| s.2.iter())
        .map(|v| v.norm())
        .fold(1.0, f64::max);
    let residual = samples
        .iter()
        .flat_map(|(_, pts, vals)| pts.iter().zip(vals))
        .map(|(&z, &v)| (poly.eval(z) - v).norm())
        .fold(0.0, f64::max)
        / scale;
    if residual > cfg.fit_tol {
        return Err(OracleError::NotPolynomial { residual });
    }
    Ok(poly)
}

fn apply_step(
    ops: &GreenOperators,
    step: Step,
    f: &ScalarField,
    z: Complex64,
) -> Result<Complex64, OracleError> {
    Ok(match step {
        Step::T => ops.apply_t(f, z)?,
        Step::Tbar => ops.apply_tbar(f, z)?,
    })
}

fn sample_layer<F>(
    domain: &DiskDomain,
    cfg: &NestedConfig,
    eval: F,
) -> Result<PolynomialField, OracleError>
where
    F: Fn(Complex64) -> Result<Complex64, OracleError> + Sync,
{
    let samples = sample_grid(domain, cfg)
        .into_iter()
        .map(|(rho, pts)| {
            let vals = pts
                .par_iter()
                .map(|&z| eval(z))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((rho, pts, vals))
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    project_polynomial(domain, cfg, &samples)
}

/// Evaluates `program[0] ∘ program[1] ∘ … ∘ program[last]` applied to `f`
/// at `z`; the last step acts first, matching written operator order.
pub fn nested_apply(
    f: &ScalarField,
    z: Complex64,
    program: &[Step],
    cfg: &NestedConfig,
) -> Result<Complex64, OracleError> {
    if program.len() > MAX_DEPTH {
        return Err(OracleError::DepthCap {
            got: program.len(),
            max: MAX_DEPTH,
        });
    }
    let domain = *f.domain();
    if domain.center() != Complex64::new(0.0, 0.0) {
        return Err(OracleError::UncenteredDomain(domain.center()));
    }
    domain.check(z)?;
    if program.is_empty() {
        return Ok(f.eval(z));
    }
    if cfg.angles < 2 * MAX_DEGREE + 1 || cfg.rings < MAX_DEGREE / 2 + 1 {
        return Err(OracleError::InvalidParameter {
            what: "sampling grid size",
            value: (cfg.rings * cfg.angles) as f64,
        });
    }
    let ops = GreenOperators::new(cfg.resolution, 64)?;
    let mut current = match f.polynomial() {
        Some(p) => *p,
        None => sample_layer(&domain, cfg, |w| Ok(f.eval(w)))?,
    };
    for &step in program[1..].iter().rev() {
        let field = ScalarField::from_polynomial(domain, current);
        current = sample_layer(&domain, cfg, |w| apply_step(&ops, step, &field, w))?;
    }
    let field = ScalarField::from_polynomial(domain, current);
    apply_step(&ops, program[0], &field, z)
}
