//! Direct quadrature of the integrals that the kernel closed forms evaluate.
//!
//! The area integrands are singular at two points `a` and `b`. A rational
//! partition of unity `χ_a + χ_b = 1` splits the integral into two pieces,
//! each singular only at one point, and each piece gets a polar rule centred
//! at its own singularity.

use num_complex::Complex64;

use super::OracleError;
use crate::geometry::DiskDomain;
use crate::kernels::{self, KernelError, COINCIDENCE_EPS};
use crate::quadrature::{build_area_rule, ContourRule, QuadratureRule, Resolution};

/// Which integral to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaKind {
    /// `∫_D (ζ − b)^{k−1} / ((ζ − a)(ζ̄ − b̄)) dζ̄∧dζ`.
    LogKernel { k: u32 },
    /// `∮_C (ζ̄ − b̄)^l (ζ − b)^{ν−1} / (ζ − a) dζ`.
    BoundaryContour { l: u32, nu: u32 },
    /// `∫_D (ζ̄ − ā)^{μ−1} (ζ − b)^{ν−1} / ((ζ − a)(ζ̄ − b̄)) dζ̄∧dζ`.
    MixedKernel { mu: u32, nu: u32 },
}

impl LemmaKind {
    /// The value the closed-form kernels predict for this integral.
    pub fn closed_form(
        &self,
        a: Complex64,
        b: Complex64,
        radius: f64,
    ) -> Result<Complex64, KernelError> {
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        Ok(match *self {
            LemmaKind::LogKernel { k } => {
                let log = kernels::log_term(a, b, radius)?;
                two_pi_i * (kernels::c1(a, b, k)? + (a - b).powu(k - 1) * log)
            }
            LemmaKind::BoundaryContour { l, nu } => two_pi_i * kernels::c2(a, b, l, nu, radius)?,
            LemmaKind::MixedKernel { mu, nu } => two_pi_i * kernels::c3(a, b, mu, nu, radius)?,
        })
    }
}

/// Weight of the rule centred at `a` in the partition of unity
/// `|ζ − b|² / (|ζ − a|² + |ζ − b|²)`.
///
/// It vanishes to second order at `b` and is real-analytic elsewhere, so
/// `χ_a F` is smooth away from `a` and `(1 − χ_a) F` smooth away from `b`.
pub fn partition_weight(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let wa = (z - b).norm_sqr();
    let wb = (z - a).norm_sqr();
    wa / (wa + wb)
}

/// `∫_D F dζ̄∧dζ` for `F` singular only at `a` and `b`.
pub fn two_center_area<F>(
    domain: &DiskDomain,
    a: Complex64,
    b: Complex64,
    resolution: Resolution,
    f: F,
) -> Result<Complex64, OracleError>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    domain.check(a)?;
    domain.check(b)?;
    let dist = (a - b).norm();
    if dist <= COINCIDENCE_EPS * domain.radius() {
        return Err(KernelError::CoincidentPoints {
            a,
            b,
            distance: dist,
        }
        .into());
    }
    let near_a =
        build_area_rule(domain, a, resolution)?.integrate(|z| partition_weight(z, a, b) * f(z))?;
    let near_b =
        build_area_rule(domain, b, resolution)?.integrate(|z| partition_weight(z, b, a) * f(z))?;
    Ok(near_a + near_b)
}

/// Numeric value of the integral selected by `kind`, on the origin-centred
/// disk of radius `radius`.
pub fn lemma_lhs_quadrature(
    kind: LemmaKind,
    a: Complex64,
    b: Complex64,
    radius: f64,
    resolution: Resolution,
    contour_count: usize,
) -> Result<Complex64, OracleError> {
    let domain = DiskDomain::new(radius)?;
    match kind {
        LemmaKind::LogKernel { k } => {
            if k == 0 {
                return Err(KernelError::ZeroOrder.into());
            }
            two_center_area(&domain, a, b, resolution, |z| {
                (z - b).powu(k - 1) / ((z - a) * (z - b).conj())
            })
        }
        LemmaKind::MixedKernel { mu, nu } => {
            if mu == 0 || nu == 0 {
                return Err(KernelError::ZeroOrder.into());
            }
            two_center_area(&domain, a, b, resolution, |z| {
                (z - a).conj().powu(mu - 1) * (z - b).powu(nu - 1) / ((z - a) * (z - b).conj())
            })
        }
        LemmaKind::BoundaryContour { l, nu } => {
            if l == 0 || nu == 0 {
                return Err(KernelError::ZeroOrder.into());
            }
            domain.check(a)?;
            domain.check(b)?;
            let rule = ContourRule::on_circle(Complex64::new(0.0, 0.0), radius, contour_count)?;
            Ok(rule.integrate(|z| (z - b).conj().powu(l) * (z - b).powu(nu - 1) / (z - a))?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn res() -> Resolution {
        Resolution::new(64, 128).unwrap()
    }

    #[test]
    fn partition_sums_to_one() {
        let (a, b) = (c(0.1, 0.2), c(-0.5, 0.0));
        for z in [c(0.0, 0.0), c(0.9, -0.1), a, b] {
            let s = partition_weight(z, a, b) + partition_weight(z, b, a);
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert_eq!(partition_weight(b, a, b), 0.0);
    }

    #[test]
    fn two_center_rule_integrates_constants() {
        let d = DiskDomain::unit();
        let v = two_center_area(&d, c(0.3, 0.1), c(-0.2, 0.4), res(), |_| c(1.0, 0.0)).unwrap();
        assert!((v - c(0.0, 2.0 * std::f64::consts::PI)).norm() < 1e-7);
    }

    #[test]
    fn log_kernel_first_order() {
        let (a, b) = (c(0.2, -0.3), c(-0.4, 0.5));
        for k in 1..=3 {
            let kind = LemmaKind::LogKernel { k };
            let q = lemma_lhs_quadrature(kind, a, b, 1.0, res(), 64).unwrap();
            let e = kind.closed_form(a, b, 1.0).unwrap();
            assert!(
                (q - e).norm() < 1e-8 * e.norm().max(1.0),
                "k={k}: {q} vs {e}"
            );
        }
    }

    #[test]
    fn contour_first_order() {
        let (a, b) = (c(0.1, 0.2), c(-0.3, 0.3));
        let q = lemma_lhs_quadrature(
            LemmaKind::BoundaryContour { l: 1, nu: 1 },
            a,
            b,
            1.0,
            res(),
            64,
        )
        .unwrap();
        let e = c(0.0, 2.0 * std::f64::consts::PI) * (-b.conj());
        assert!((q - e).norm() < 1e-12);
    }

    #[test]
    fn mixed_kernel_matches_closed_form() {
        let (a, b) = (c(0.5, 0.1), c(-0.1, -0.6));
        for (mu, nu) in [(1, 1), (2, 3), (3, 2)] {
            let kind = LemmaKind::MixedKernel { mu, nu };
            let q = lemma_lhs_quadrature(kind, a, b, 1.0, res(), 64).unwrap();
            let e = kind.closed_form(a, b, 1.0).unwrap();
            assert!(
                (q - e).norm() < 1e-8 * e.norm().max(1.0),
                "{mu},{nu}: {q} vs {e}"
            );
        }
    }

    #[test]
    fn coincident_points_rejected() {
        let z = c(0.2, 0.2);
        let err = lemma_lhs_quadrature(
            LemmaKind::MixedKernel { mu: 1, nu: 1 },
            z,
            z,
            1.0,
            res(),
            64,
        );
        assert!(matches!(
            err,
            Err(OracleError::Kernel(KernelError::CoincidentPoints { .. }))
        ));
    }
}
