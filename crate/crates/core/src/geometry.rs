//! Domains, multi-indices and the Wirtinger finite-difference stencils that
//! every other module shares.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::binomial;

/// Complex scalar used for points and values.
pub type ComplexScalar = Complex64;

/// Relative tolerance applied when testing `|z - c| <= R`.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("a polydisc needs at least one factor")]
    NoFactors,
    #[error("non-finite complex value {0}")]
    NonFinite(Complex64),
    #[error("point {point} lies outside the closed disk |z - {center}| <= {radius}")]
    OutsideDomain {
        point: Complex64,
        center: Complex64,
        radius: f64,
    },
    #[error("multi-index has {got} entries but the domain has {expected} factors")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("multi-index entry {index} is zero; kernel orders start at 1")]
    ZeroOrder { index: usize },
}

/// Rejects NaN and infinite components.
pub fn checked(z: Complex64) -> Result<Complex64, GeometryError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(GeometryError::NonFinite(z))
    }
}

/// Closed disk `{ z : |z - center| <= radius }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskDomain {
    center: Complex64,
    radius: f64,
}

impl DiskDomain {
    /// Disk centred at the origin.
    pub fn new(radius: f64) -> Result<Self, GeometryError> {
        Self::centered(Complex64::new(0.0, 0.0), radius)
    }

    pub fn centered(center: Complex64, radius: f64) -> Result<Self, GeometryError> {
        checked(center)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidRadius(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn unit() -> Self {
        Self {
            center: Complex64::new(0.0, 0.0),
            radius: 1.0,
        }
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius * (1.0 + BOUNDARY_TOL)
    }

    /// Strictly inside, with the boundary band of relative width
    /// [`BOUNDARY_TOL`] counted as boundary.
    pub fn is_interior(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius * (1.0 - BOUNDARY_TOL)
    }

    pub fn check(&self, z: Complex64) -> Result<Complex64, GeometryError> {
        checked(z)?;
        if self.contains(z) {
            Ok(z)
        } else {
            Err(GeometryError::OutsideDomain {
                point: z,
                center: self.center,
                radius: self.radius,
            })
        }
    }
}

/// `n`-fold product of origin-centred disks sharing one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolydiscDomain {
    factors: usize,
    radius: f64,
}

impl PolydiscDomain {
    pub fn new(factors: usize, radius: f64) -> Result<Self, GeometryError> {
        if factors == 0 {
            return Err(GeometryError::NoFactors);
        }
        DiskDomain::new(radius)?;
        Ok(Self { factors, radius })
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The disk every factor ranges over.
    pub fn factor_disk(&self) -> DiskDomain {
        DiskDomain {
            center: Complex64::new(0.0, 0.0),
            radius: self.radius,
        }
    }

    pub fn check(&self, z: &[Complex64]) -> Result<(), GeometryError> {
        if z.len() != self.factors {
            return Err(GeometryError::DimensionMismatch {
                expected: self.factors,
                got: z.len(),
            });
        }
        let disk = self.factor_disk();
        for &zj in z {
            disk.check(zj)?;
        }
        Ok(())
    }
}

/// Per-factor operator orders `(μ_1, …, μ_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn uniform(n: usize, order: u32) -> Self {
        Self(vec![order; n])
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|μ| = Σ μ_j`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `μ! = ∏ μ_j!`.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&m| crate::kernels::factorial(m))
            .product()
    }

    /// Kernel-level indices must match the factor count and be at least 1.
    pub fn require_kernel_admissible(&self, factors: usize) -> Result<(), GeometryError> {
        if self.0.len() != factors {
            return Err(GeometryError::DimensionMismatch {
                expected: factors,
                got: self.0.len(),
            });
        }
        match self.0.iter().position(|&m| m == 0) {
            Some(index) => Err(GeometryError::ZeroOrder { index }),
            None => Ok(()),
        }
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// One real-coordinate partial derivative `coeff · ∂_x^dx ∂_y^dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialTerm {
    pub dx: u32,
    pub dy: u32,
    pub coeff: Complex64,
}

/// A sampling offset of a merged stencil, in units of `h/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilPoint {
    pub offset: (i32, i32),
    pub weight: Complex64,
}

/// `∂^μ ∂̄^ν` written as a combination of real partial derivatives, with a
/// second-order central-difference discretisation refined by one Richardson
/// step.
#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerStencil {
    order_d: u32,
    order_dbar: u32,
    terms: Vec<PartialTerm>,
}

/// Expands `∂^μ ∂̄^ν = 2^{-(μ+ν)} (∂_x − i∂_y)^μ (∂_x + i∂_y)^ν`.
pub fn wirtinger_split(order_d: u32, order_dbar: u32) -> WirtingerStencil {
    let total = order_d + order_dbar;
    let i = Complex64::i();
    let mut by_dx = vec![Complex64::new(0.0, 0.0); total as usize + 1];
    for a in 0..=order_d {
        for b in 0..=order_dbar {
            let c = binomial(order_d, a)
                * binomial(order_dbar, b)
                * (-i).powu(order_d - a)
                * i.powu(order_dbar - b);
            by_dx[(a + b) as usize] += c;
        }
    }
    let scale = 0.5f64.powi(total as i32);
    let terms = by_dx
        .into_iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(dx, c)| PartialTerm {
            dx: dx as u32,
            dy: total - dx as u32,
            coeff: c * scale,
        })
        .collect();
    WirtingerStencil {
        order_d,
        order_dbar,
        terms,
    }
}

/// Step used for a derivative of total order `order`: `(1e-12)^{1/(order+2)} R`.
pub fn fd_step(order: u32, radius: f64) -> f64 {
    1e-12f64.powf(1.0 / (order as f64 + 2.0)) * radius
}

/// Central `k`-th difference with step `s`: offsets `(k/2 - j) s` in units of
/// `s/2`, i.e. `k - 2j`.
fn central_difference(k: u32) -> Vec<(i32, f64)> {
    (0..=k)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            (k as i32 - 2 * j as i32, sign * binomial(k, j))
        })
        .collect()
}

impl WirtingerStencil {
    pub fn order_d(&self) -> u32 {
        self.order_d
    }

    pub fn order_dbar(&self) -> u32 {
        self.order_dbar
    }

    pub fn total_order(&self) -> u32 {
        self.order_d + self.order_dbar
    }

    pub fn terms(&self) -> &[PartialTerm] {
        &self.terms
    }

    /// Merged sampling points for step `h`. Offsets are integers in units of
    /// `h/4` so that the `h` and `h/2` levels share one lattice.
    pub fn sample_points(&self, h: f64) -> Vec<StencilPoint> {
        let mut merged: BTreeMap<(i32, i32), Complex64> = BTreeMap::new();
        // Richardson: (4 D(h/2) - D(h)) / 3; level scale is the quarter-unit
        // multiplier of a half step.
        for (level_weight, quarter_per_half, step) in [(-1.0 / 3.0, 2, h), (4.0 / 3.0, 1, 0.5 * h)]
        {
            for term in &self.terms {
                let xs = central_difference(term.dx);
                let ys = central_difference(term.dy);
                let inv = 1.0 / step.powi((term.dx + term.dy) as i32);
                for &(ox, wx) in &xs {
                    for &(oy, wy) in &ys {
                        let key = (ox * quarter_per_half, oy * quarter_per_half);
                        *merged.entry(key).or_default() +=
                            term.coeff * (level_weight * wx * wy * inv);
                    }
                }
            }
        }
        merged
            .into_iter()
            .filter(|(_, w)| w.norm() > 0.0)
            .map(|(offset, weight)| StencilPoint { offset, weight })
            .collect()
    }

    /// Largest distance from the centre to a sampling point.
    pub fn reach(&self, h: f64) -> f64 {
        self.sample_points(h)
            .iter()
            .map(|p| offset_to_complex(p.offset, h).norm())
            .fold(0.0, f64::max)
    }

    /// Applies the stencil to `f` at `z`. Samples are evaluated in parallel and
    /// reduced in lattice order.
    pub fn apply<F, E>(&self, f: F, z: Complex64, h: f64) -> Result<Complex64, E>
    where
        F: Fn(Complex64) -> Result<Complex64, E> + Sync,
        E: Send,
    {
        let points = self.sample_points(h);
        let values: Vec<Complex64> = points
            .par_iter()
            .map(|p| f(z + offset_to_complex(p.offset, h)).map(|v| v * p.weight))
            .collect::<Result<_, E>>()?;
        Ok(crate::quadrature::pairwise_sum(&values))
    }
}

/// Converts a quarter-step lattice offset to a displacement.
pub fn offset_to_complex(offset: (i32, i32), h: f64) -> Complex64 {
    Complex64::new(offset.0 as f64, offset.1 as f64) * (0.25 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ok(
        f: impl Fn(Complex64) -> Complex64 + Sync,
    ) -> impl Fn(Complex64) -> Result<Complex64, ()> + Sync {
        move |z| Ok(f(z))
    }

    #[test]
    fn laplacian_quarter_on_radial_square() {
        let s = wirtinger_split(1, 1);
        // ∂∂̄ = (∂_x² + ∂_y²)/4
        assert_eq!(s.terms().len(), 2);
        for t in s.terms() {
            assert!((t.coeff - c(0.25, 0.0)).norm() < 1e-15);
        }
        let v = s
            .apply(ok(|z| c(z.norm_sqr(), 0.0)), c(0.2, -0.1), 1e-2)
            .unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-9, "{v}");
    }

    #[test]
    fn dbar_of_conjugate_is_one() {
        let s = wirtinger_split(0, 1);
        let v = s.apply(ok(|z| z.conj()), c(0.3, 0.4), 1e-3).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-10);
        let d = wirtinger_split(1, 0);
        let v = d.apply(ok(|z| z.conj()), c(0.3, 0.4), 1e-3).unwrap();
        assert!(v.norm() < 1e-10);
    }

    #[test]
    fn fourth_order_on_modulus_to_the_fourth() {
        // ∂²∂̄²(z² z̄²) = 4
        let s = wirtinger_split(2, 2);
        let h = fd_step(4, 1.0);
        let v = s
            .apply(ok(|z| c(z.norm_sqr().powi(2), 0.0)), c(0.1, 0.2), h)
            .unwrap();
        assert!((v - c(4.0, 0.0)).norm() < 1e-6, "{v}");
    }

    #[test]
    fn identity_stencil_samples_once() {
        let s = wirtinger_split(0, 0);
        let pts = s.sample_points(0.1);
        assert_eq!(pts.len(), 1);
        assert!((pts[0].weight - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn conjugation_is_an_involution() {
        let z = c(0.123456789, -9.87654321);
        assert_eq!(z.conj().conj(), z);
    }

    #[test]
    fn domain_validation() {
        assert!(DiskDomain::new(0.0).is_err());
        assert!(DiskDomain::new(f64::NAN).is_err());
        let d = DiskDomain::new(2.0).unwrap();
        assert!(d.contains(c(2.0, 0.0)));
        assert!(d.contains(c(2.0 + 1e-13, 0.0)));
        assert!(d.check(c(2.001, 0.0)).is_err());
        assert!(!d.is_interior(c(0.0, 2.0)));
        assert!(PolydiscDomain::new(0, 1.0).is_err());
        let p = PolydiscDomain::new(2, 1.0).unwrap();
        assert!(p.check(&[c(0.1, 0.0)]).is_err());
        assert!(p.check(&[c(0.1, 0.0), c(0.0, 0.9)]).is_ok());
    }

    #[test]
    fn multi_index_rules() {
        let m = MultiIndex::new(vec![2, 1, 3]);
        assert_eq!(m.order(), 6);
        assert_eq!(m.factorial(), 12.0);
        assert!(m.require_kernel_admissible(3).is_ok());
        assert_eq!(
            m.require_kernel_admissible(2),
            Err(GeometryError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        );
        assert_eq!(
            MultiIndex::new(vec![1, 0]).require_kernel_admissible(2),
            Err(GeometryError::ZeroOrder { index: 1 })
        );
    }
}
