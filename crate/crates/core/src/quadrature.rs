//! Quadrature for weakly singular area integrals over disks and for contour
//! integrals over their boundary circles.
//!
//! An [`AreaRule`] is built in polar coordinates around the point where the
//! integrand is singular. The disk is star-shaped with respect to any of its
//! points, so each ray `ζ = s + t ρ_max(φ) e^{iφ}`, `t ∈ [0, 1]`, covers it
//! exactly once. The polar Jacobian cancels a `1/|ζ − s|` singularity and the
//! radial panels are geometrically graded towards `t = 0`, with degree
//! growing outwards, to absorb `ρ log ρ` behaviour. Radial panels use Gauss–Legendre nodes; the angular
//! direction uses the equispaced trapezoid rule, which is spectrally
//! accurate for periodic integrands.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DiskDomain, GeometryError, BOUNDARY_TOL};

/// Ratio between consecutive radial panel breakpoints near the centre.
pub const RADIAL_GRADING: f64 = 0.15;

/// Gauss–Legendre points on the innermost radial panel.
pub const FIRST_PANEL_POINTS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error(
        "resolution too low: need n_radial >= 4 and n_angular >= 8, got ({n_radial}, {n_angular})"
    )]
    ResolutionTooLow { n_radial: usize, n_angular: usize },
    #[error("contour rule needs at least 8 nodes, got {0}")]
    ContourTooCoarse(usize),
    #[error("integrand is not finite at node {node} (index {index})")]
    NonFiniteSample { index: usize, node: Complex64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Radial and angular node counts of an area rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Resolution {
    pub fn new(n_radial: usize, n_angular: usize) -> Result<Self, QuadratureError> {
        let r = Self {
            n_radial,
            n_angular,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if self.n_radial < 4 || self.n_angular < 8 {
            Err(QuadratureError::ResolutionTooLow {
                n_radial: self.n_radial,
                n_angular: self.n_angular,
            })
        } else {
            Ok(())
        }
    }

    pub fn doubled(&self) -> Self {
        Self {
            n_radial: 2 * self.n_radial,
            n_angular: 2 * self.n_angular,
        }
    }
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            n_radial: 32,
            n_angular: 64,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Sums in a fixed binary-tree order so results do not depend on thread
/// scheduling.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        values
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, v| acc + v)
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Shared behaviour of area and contour rules.
pub trait QuadratureRule: Sync {
    fn nodes(&self) -> &[Complex64];
    fn weights(&self) -> &[Complex64];

    /// `Σ w_k f(ζ_k)`.
    fn integrate<F>(&self, f: F) -> Result<Complex64, QuadratureError>
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        self.try_integrate(|z| Ok::<_, QuadratureError>(f(z)))
    }

    /// Like [`integrate`](Self::integrate) for integrands that can fail.
    fn try_integrate<F, E>(&self, f: F) -> Result<Complex64, E>
    where
        F: Fn(Complex64) -> Result<Complex64, E> + Sync,
        E: From<QuadratureError> + Send,
    {
        let nodes = self.nodes();
        let terms: Vec<Complex64> = nodes
            .par_iter()
            .zip(self.weights().par_iter())
            .enumerate()
            .map(|(index, (&node, &w))| {
                let v = f(node)?;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(QuadratureError::NonFiniteSample { index, node }.into());
                }
                Ok(v * w)
            })
            .collect::<Result<_, E>>()?;
        Ok(pairwise_sum(&terms))
    }
}

/// Area rule for `∫_D · dζ̄∧dζ`; weights include the `2i` factor.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaRule {
    nodes: Vec<Complex64>,
    weights: Vec<Complex64>,
    center: Complex64,
    resolution: Resolution,
}

impl AreaRule {
    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl QuadratureRule for AreaRule {
    fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    fn weights(&self) -> &[Complex64] {
        &self.weights
    }
}

/// Breakpoints `0 = t_0 < t_1 < … < t_P = 1` and node counts per panel.
///
/// Panel `k` (counted from the centre) gets `FIRST_PANEL_POINTS + k` nodes,
/// so the rule refines in both panel count and degree as `n_radial` grows.
fn radial_panels(n_radial: usize) -> Vec<(f64, f64, usize)> {
    let mut counts = Vec::new();
    let mut next = FIRST_PANEL_POINTS;
    while counts.iter().sum::<usize>() + next <= n_radial {
        counts.push(next);
        next += 1;
    }
    if counts.is_empty() {
        counts.push(0);
    }
    // leftovers go to the outer panels first
    let mut rem = n_radial - counts.iter().sum::<usize>();
    let mut i = counts.len() - 1;
    while rem > 0 {
        counts[i] += 1;
        rem -= 1;
        i = if i == 0 { counts.len() - 1 } else { i - 1 };
    }
    let panels = counts.len();
    let mut breaks = vec![0.0];
    for k in 1..=panels {
        breaks.push(RADIAL_GRADING.powi((panels - k) as i32));
    }
    (0..panels)
        .map(|k| (breaks[k], breaks[k + 1], counts[k]))
        .collect()
}

/// Distance from `rel` (relative to the centre) to the circle of radius `r`
/// along direction `(cos φ, sin φ)`.
fn ray_length(rel: Complex64, r: f64, cos: f64, sin: f64) -> f64 {
    let b = rel.re * cos + rel.im * sin;
    let c = (r * r - rel.norm_sqr()).max(0.0);
    let disc = (b * b + c).sqrt();
    if b > 0.0 {
        c / (b + disc)
    } else {
        disc - b
    }
}

/// Polar rule around `singularity` covering the whole disk.
///
/// For an interior centre the angle runs over the full period with the
/// trapezoid rule at `φ_j = 2πj/N`, a set closed under `φ → −φ`, so the rule
/// for `s̄` is the mirror image of the rule for `s`. A centre on the boundary
/// only sees a half-plane of directions; that range is covered by
/// Gauss–Legendre nodes.
pub fn build_area_rule(
    domain: &DiskDomain,
    singularity: Complex64,
    resolution: Resolution,
) -> Result<AreaRule, QuadratureError> {
    resolution.validate()?;
    domain.check(singularity)?;
    let radius = domain.radius();
    let rel = singularity - domain.center();
    let panels = radial_panels(resolution.n_radial);
    let radial: Vec<(f64, f64)> = panels
        .iter()
        .flat_map(|&(t0, t1, count)| {
            let (x, w) = gauss_legendre(count);
            let half = 0.5 * (t1 - t0);
            x.into_iter()
                .zip(w)
                .map(move |(x, w)| (t0 + half * (x + 1.0), half * w))
                .collect::<Vec<_>>()
        })
        .collect();

    let n = resolution.n_angular;
    let angles: Vec<(f64, f64)> = if domain.is_interior(singularity) {
        let h = 2.0 * PI / n as f64;
        (0..n).map(|j| (h * j as f64, h)).collect()
    } else {
        let phi0 = rel.arg();
        let (x, w) = gauss_legendre(n);
        let (lo, hi) = (phi0 + 0.5 * PI, phi0 + 1.5 * PI);
        let half = 0.5 * (hi - lo);
        x.into_iter()
            .zip(w)
            .map(|(x, w)| (lo + half * (x + 1.0), half * w))
            .collect()
    };

    let mut nodes = Vec::with_capacity(angles.len() * radial.len());
    let mut weights = Vec::with_capacity(angles.len() * radial.len());
    let two_i = Complex64::new(0.0, 2.0);
    for &(phi, w_phi) in &angles {
        let (sin, cos) = phi.sin_cos();
        let rho_max = ray_length(rel, radius, cos, sin);
        let dir = Complex64::new(cos, sin);
        for &(t, w_t) in &radial {
            nodes.push(singularity + dir * (t * rho_max));
            // dA = ρ dρ dφ with ρ = t ρ_max
            weights.push(two_i * (w_t * t * rho_max * rho_max * w_phi));
        }
    }
    Ok(AreaRule {
        nodes,
        weights,
        center: singularity,
        resolution,
    })
}

/// Equispaced rule on a circle; weights are `dζ = iρe^{iθ}dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourRule {
    nodes: Vec<Complex64>,
    weights: Vec<Complex64>,
    count: usize,
}

impl ContourRule {
    /// Counterclockwise circle `|ζ - center| = radius`.
    pub fn on_circle(
        center: Complex64,
        radius: f64,
        count: usize,
    ) -> Result<Self, QuadratureError> {
        if count < 8 {
            return Err(QuadratureError::ContourTooCoarse(count));
        }
        DiskDomain::centered(center, radius)?;
        let h = 2.0 * PI / count as f64;
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for j in 0..count {
            let e = Complex64::from_polar(1.0, h * j as f64);
            nodes.push(center + e * radius);
            weights.push(Complex64::i() * e * (radius * h));
        }
        Ok(Self {
            nodes,
            weights,
            count,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Weights for `dζ̄`, the conjugates of the `dζ` weights.
    pub fn conj_weights(&self) -> Vec<Complex64> {
        self.weights.iter().map(|w| w.conj()).collect()
    }
}

impl QuadratureRule for ContourRule {
    fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    fn weights(&self) -> &[Complex64] {
        &self.weights
    }
}

/// Origin-centred counterclockwise circle of radius `radius`.
pub fn build_contour_rule(radius: f64, count: usize) -> Result<ContourRule, QuadratureError> {
    ContourRule::on_circle(Complex64::new(0.0, 0.0), radius, count)
}

/// `true` when the point sits on the boundary band of the disk.
pub fn on_boundary(domain: &DiskDomain, z: Complex64) -> bool {
    let d = (z - domain.center()).norm();
    d >= domain.radius() * (1.0 - BOUNDARY_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 8, 16, 33] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn radial_panels_cover_unit_interval() {
        for n in [4, 7, 8, 16, 20, 64] {
            let panels = radial_panels(n);
            assert_eq!(panels.iter().map(|p| p.2).sum::<usize>(), n);
            assert_eq!(panels[0].0, 0.0);
            assert_eq!(panels.last().unwrap().1, 1.0);
            assert!(panels.windows(2).all(|p| p[0].1 == p[1].0));
        }
    }

    #[test]
    fn weights_sum_to_twice_i_area() {
        let d = DiskDomain::centered(c(0.5, -1.0), 1.7).unwrap();
        for s in [c(0.5, -1.0), c(1.2, -0.3), c(0.5 + 1.7, -1.0)] {
            let rule = build_area_rule(&d, s, Resolution::new(16, 32).unwrap()).unwrap();
            let total = rule.integrate(|_| c(1.0, 0.0)).unwrap();
            let expected = c(0.0, 2.0 * d.area());
            assert!(
                (total - expected).norm() < 1e-10 * expected.norm(),
                "{s}: {total}"
            );
            assert!(rule.nodes().iter().all(|&z| d.contains(z)));
        }
    }

    #[test]
    fn resolution_minimum() {
        let d = DiskDomain::unit();
        assert!(matches!(
            build_area_rule(
                &d,
                c(0.0, 0.0),
                Resolution {
                    n_radial: 3,
                    n_angular: 64
                }
            ),
            Err(QuadratureError::ResolutionTooLow { .. })
        ));
        assert!(matches!(
            build_area_rule(
                &d,
                c(0.0, 0.0),
                Resolution {
                    n_radial: 8,
                    n_angular: 7
                }
            ),
            Err(QuadratureError::ResolutionTooLow { .. })
        ));
        assert!(build_area_rule(&d, c(1.5, 0.0), Resolution::default()).is_err());
        assert!(matches!(
            build_contour_rule(1.0, 4),
            Err(QuadratureError::ContourTooCoarse(4))
        ));
    }

    #[test]
    fn cauchy_kernel_at_off_centre_point() {
        // ∫ dζ̄∧dζ/(ζ − z) = −2πi z̄ on the unit disk
        let d = DiskDomain::unit();
        let z = c(0.3, 0.0);
        let rule = build_area_rule(&d, z, Resolution::new(16, 32).unwrap()).unwrap();
        let v = rule.integrate(|w| 1.0 / (w - z)).unwrap();
        let expected = c(0.0, -2.0 * PI) * z.conj();
        assert!((v - expected).norm() < 1e-12, "{v}");
    }

    fn lem2_error(d: &DiskDomain, w: Complex64, l: i32, res: Resolution) -> f64 {
        let z0 = d.center();
        let rule = build_area_rule(d, w, res).unwrap();
        let v = rule
            .integrate(|z| (z - z0).conj().powi(l) / (z - w))
            .unwrap();
        let expected = c(0.0, -2.0 * PI) / (l as f64 + 1.0) * (w - z0).conj().powi(l + 1);
        (v - expected).norm() / expected.norm().max(1e-300)
    }

    #[test]
    fn conjugate_power_golden_on_shifted_disk() {
        let d = DiskDomain::centered(c(0.4, -0.2), 1.3).unwrap();
        let res = Resolution::new(64, 128).unwrap();
        for l in 0..=5 {
            for w in [c(0.9, 0.3), c(-0.5, -0.7), c(0.0, 0.5)] {
                let err = lem2_error(&d, w, l, res);
                assert!(err < 1e-8, "l={l} w={w}: {err:e}");
            }
        }
    }

    #[test]
    fn doubling_resolution_reduces_error() {
        let d = DiskDomain::unit();
        for (l, w) in [(0, c(0.6, 0.2)), (3, c(-0.3, 0.7)), (5, c(0.1, -0.8))] {
            let mut res = Resolution::new(4, 8).unwrap();
            let mut prev = lem2_error(&d, w, l, res);
            for _ in 0..4 {
                res = res.doubled();
                let err = lem2_error(&d, w, l, res);
                assert!(
                    err <= (prev / 4.0).max(1e-10),
                    "l={l} {res:?}: {prev:e} -> {err:e}"
                );
                prev = err;
            }
        }
    }

    #[test]
    fn rules_are_mirror_symmetric() {
        let d = DiskDomain::centered(c(0.25, 0.0), 1.0).unwrap();
        let s = c(0.5, 0.35);
        let res = Resolution::new(16, 32).unwrap();
        let f = |z: Complex64| z * z.conj().powi(2) + c(0.3, 1.1) * (z + 2.0).ln();
        let a = build_area_rule(&d, s, res).unwrap().integrate(f).unwrap();
        let b = build_area_rule(&d, s.conj(), res)
            .unwrap()
            .integrate(|z| f(z.conj()).conj())
            .unwrap();
        // the reflection reverses orientation, so dζ̄∧dζ picks up a sign
        assert!((b + a.conj()).norm() < 1e-13 * a.norm().max(1.0), "{a} {b}");
    }

    #[test]
    fn non_finite_samples_are_reported() {
        let d = DiskDomain::unit();
        let rule = build_area_rule(&d, c(0.0, 0.0), Resolution::new(4, 8).unwrap()).unwrap();
        let err = rule
            .integrate(|z| if z.re > 0.0 { c(f64::NAN, 0.0) } else { z })
            .unwrap_err();
        assert!(matches!(err, QuadratureError::NonFiniteSample { .. }));
    }

    #[test]
    fn contour_rule_residues() {
        let rule = build_contour_rule(1.0, 16).unwrap();
        let v = rule.integrate(|z| 1.0 / z).unwrap();
        assert!((v - c(0.0, 2.0 * PI)).norm() < 1e-12);

        let rule = build_contour_rule(1.0, 64).unwrap();
        let a = c(0.2, -0.4);
        let v = rule.integrate(|z| 1.0 / (z - a)).unwrap();
        assert!((v - c(0.0, 2.0 * PI)).norm() < 1e-12);
        // ζ̄ = 1/ζ on the unit circle
        let v = rule.integrate(|z| z.conj()).unwrap();
        assert!((v - c(0.0, 2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<Complex64> = (0..1000).map(|k| c(k as f64, -(k as f64) * 0.5)).collect();
        let s = pairwise_sum(&v);
        assert_eq!(s, c(499500.0, -249750.0));
    }
}
