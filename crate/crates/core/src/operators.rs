//! The Cauchy/Pompeiu operator family on a disk, its iterated closed forms,
//! and the tensor-product operator on the polydisc.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DiskDomain, GeometryError, MultiIndex, PolydiscDomain};
use crate::kernels::{self, factorial, KernelError};
use crate::oracle::polynomial::PolynomialField;
use crate::quadrature::{
    build_area_rule, pairwise_sum, ContourRule, QuadratureError, QuadratureRule, Resolution,
};

/// Largest polydisc dimension accepted by [`GreenOperators::apply_polydisc`].
pub const MAX_POLYDISC_FACTORS: usize = 3;

/// Hölder exponent assigned to fields that do not state one.
pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("Hölder exponent must lie strictly between 0 and 1, got {0}")]
    InvalidHoelder(f64),
    #[error("point {0} must be interior to the disk")]
    NotInterior(Complex64),
    #[error("polydisc operators are limited to {max} factors, got {got}", max = MAX_POLYDISC_FACTORS)]
    DimensionCap { got: usize },
    #[error("operator order must be at least 1")]
    ZeroOrder,
    #[error("unknown operator {0:?}")]
    UnknownOperator(String),
    #[error("grid point {0} lies outside the domain")]
    GridOutsideDomain(Complex64),
    #[error("grid must contain at least one point")]
    EmptyGrid,
}

fn check_alpha(alpha: f64) -> Result<f64, OperatorError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(OperatorError::InvalidHoelder(alpha))
    }
}

type Evaluator = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
type PolyEvaluator = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;

/// A complex-valued function on a disk.
#[derive(Clone)]
pub struct ScalarField {
    evaluator: Evaluator,
    domain: DiskDomain,
    hoelder_alpha: f64,
    description: String,
    polynomial: Option<PolynomialField>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("domain", &self.domain)
            .field("hoelder_alpha", &self.hoelder_alpha)
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new<F>(
        domain: DiskDomain,
        hoelder_alpha: f64,
        description: impl Into<String>,
        f: F,
    ) -> Result<Self, OperatorError>
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Ok(Self {
            evaluator: Arc::new(f),
            domain,
            hoelder_alpha: check_alpha(hoelder_alpha)?,
            description: description.into(),
            polynomial: None,
        })
    }

    /// Field backed by an exact polynomial in the absolute coordinate `z`.
    pub fn from_polynomial(domain: DiskDomain, poly: PolynomialField) -> Self {
        Self {
            evaluator: Arc::new(move |z| poly.eval(z)),
            domain,
            hoelder_alpha: DEFAULT_ALPHA,
            description: format!("{poly:?}"),
            polynomial: Some(poly),
        }
    }

    pub fn constant(domain: DiskDomain, c: Complex64) -> Self {
        Self::from_polynomial(domain, PolynomialField::constant(c))
    }

    pub fn zero(domain: DiskDomain) -> Self {
        Self::constant(domain, Complex64::new(0.0, 0.0))
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, OperatorError> {
        self.hoelder_alpha = check_alpha(alpha)?;
        Ok(self)
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.evaluator)(z)
    }

    pub fn domain(&self) -> &DiskDomain {
        &self.domain
    }

    pub fn hoelder_alpha(&self) -> f64 {
        self.hoelder_alpha
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn polynomial(&self) -> Option<&PolynomialField> {
        self.polynomial.as_ref()
    }

    /// `ζ ↦ conj(f(ζ))`.
    pub fn conj(&self) -> Self {
        let inner = self.evaluator.clone();
        Self {
            evaluator: Arc::new(move |z| inner(z).conj()),
            domain: self.domain,
            hoelder_alpha: self.hoelder_alpha,
            description: format!("conj({})", self.description),
            polynomial: self.polynomial.map(|p| p.conj()),
        }
    }
}

/// A complex-valued function on a polydisc.
#[derive(Clone)]
pub struct PolydiscField {
    evaluator: PolyEvaluator,
    domain: PolydiscDomain,
    hoelder_alpha: f64,
    description: String,
}

impl fmt::Debug for PolydiscField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolydiscField")
            .field("domain", &self.domain)
            .field("hoelder_alpha", &self.hoelder_alpha)
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

impl PolydiscField {
    pub fn new<F>(
        domain: PolydiscDomain,
        hoelder_alpha: f64,
        description: impl Into<String>,
        f: F,
    ) -> Result<Self, OperatorError>
    where
        F: Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static,
    {
        Ok(Self {
            evaluator: Arc::new(f),
            domain,
            hoelder_alpha: check_alpha(hoelder_alpha)?,
            description: description.into(),
        })
    }

    /// `f(η) = Π_j g_j(η_j)`.
    pub fn separable(
        domain: PolydiscDomain,
        factors: Vec<ScalarField>,
    ) -> Result<Self, OperatorError> {
        if factors.len() != domain.factors() {
            return Err(GeometryError::DimensionMismatch {
                expected: domain.factors(),
                got: factors.len(),
            }
            .into());
        }
        let alpha = factors
            .iter()
            .map(|f| f.hoelder_alpha())
            .fold(DEFAULT_ALPHA, f64::min);
        let description = factors
            .iter()
            .map(|f| f.description().to_string())
            .collect::<Vec<_>>()
            .join(" * ");
        Self::new(domain, alpha, description, move |z| {
            factors.iter().zip(z).map(|(f, &z)| f.eval(z)).product()
        })
    }

    #[inline]
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        (self.evaluator)(z)
    }

    pub fn domain(&self) -> &PolydiscDomain {
        &self.domain
    }

    pub fn hoelder_alpha(&self) -> f64 {
        self.hoelder_alpha
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

/// The operators that can be applied pointwise to a [`ScalarField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    T,
    Tbar,
    S,
    Sbar,
    /// `²T`, the derivative `∂T`.
    T2,
    /// `²T̄`, the derivative `∂̄T̄`.
    Tbar2,
    TPower(u32),
    TbarPower(u32),
    /// `T^μ T̄^ν`.
    Mixed {
        mu: u32,
        nu: u32,
    },
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::T => write!(f, "T"),
            Operator::Tbar => write!(f, "Tbar"),
            Operator::S => write!(f, "S"),
            Operator::Sbar => write!(f, "Sbar"),
            Operator::T2 => write!(f, "2T"),
            Operator::Tbar2 => write!(f, "2Tbar"),
            Operator::TPower(k) => write!(f, "T^{k}"),
            Operator::TbarPower(k) => write!(f, "Tbar^{k}"),
            Operator::Mixed { mu, nu } => write!(f, "T^{mu}Tbar^{nu}"),
        }
    }
}

fn parse_power(s: &str, prefix: &str) -> Option<u32> {
    let rest = s.strip_prefix(prefix)?;
    if rest.is_empty() {
        return Some(1);
    }
    rest.strip_prefix('^')?.parse().ok()
}

impl FromStr for Operator {
    type Err = OperatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let unknown = || OperatorError::UnknownOperator(s.to_string());
        let op = match text.as_str() {
            "T" => Operator::T,
            "Tbar" => Operator::Tbar,
            "S" => Operator::S,
            "Sbar" => Operator::Sbar,
            "2T" => Operator::T2,
            "2Tbar" => Operator::Tbar2,
            _ => {
                if let Some(rest) = text.strip_prefix("Tbar") {
                    let k = parse_power(&format!("Tbar{rest}"), "Tbar").ok_or_else(unknown)?;
                    Operator::TbarPower(k)
                } else if let Some(idx) = text.find("Tbar") {
                    let mu = parse_power(&text[..idx], "T").ok_or_else(unknown)?;
                    let nu = parse_power(&text[idx..], "Tbar").ok_or_else(unknown)?;
                    Operator::Mixed { mu, nu }
                } else {
                    Operator::TPower(parse_power(&text, "T").ok_or_else(unknown)?)
                }
            }
        };
        match op {
            Operator::TPower(0) | Operator::TbarPower(0) => Err(OperatorError::ZeroOrder),
            Operator::Mixed { mu, nu } if mu == 0 || nu == 0 => Err(OperatorError::ZeroOrder),
            op => Ok(op),
        }
    }
}

/// Evaluates the operator family by quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenOperators {
    pub resolution: Resolution,
    pub contour_count: usize,
}

impl Default for GreenOperators {
    fn default() -> Self {
        Self {
            resolution: Resolution::default(),
            contour_count: 256,
        }
    }
}

fn require_interior(domain: &DiskDomain, z: Complex64) -> Result<(), OperatorError> {
    domain.check(z)?;
    if domain.is_interior(z) {
        Ok(())
    } else {
        Err(OperatorError::NotInterior(z))
    }
}

fn check_order(k: u32) -> Result<(), OperatorError> {
    if k == 0 {
        Err(OperatorError::ZeroOrder)
    } else if k > kernels::MAX_ORDER {
        Err(KernelError::OrderTooLarge(k).into())
    } else {
        Ok(())
    }
}

impl GreenOperators {
    pub fn new(resolution: Resolution, contour_count: usize) -> Result<Self, OperatorError> {
        resolution.validate()?;
        if contour_count < 8 {
            return Err(QuadratureError::ContourTooCoarse(contour_count).into());
        }
        Ok(Self {
            resolution,
            contour_count,
        })
    }

    /// `−1/(2πi) ∫ kernel(ζ) f(ζ) dζ̄∧dζ` with the rule centred at `z`.
    fn area<K>(&self, f: &ScalarField, z: Complex64, kernel: K) -> Result<Complex64, OperatorError>
    where
        K: Fn(Complex64) -> Result<Complex64, OperatorError> + Sync,
    {
        let rule = build_area_rule(f.domain(), z, self.resolution)?;
        rule.try_integrate(|zeta| Ok(kernel(zeta)? * f.eval(zeta)))
    }

    fn contour(&self, domain: &DiskDomain) -> Result<ContourRule, OperatorError> {
        Ok(ContourRule::on_circle(
            domain.center(),
            domain.radius(),
            self.contour_count,
        )?)
    }

    /// `Tf(z) = −1/(2πi) ∫_D f(ζ)/(ζ − z) dζ̄∧dζ`.
    pub fn apply_t(&self, f: &ScalarField, z: Complex64) -> Result<Complex64, OperatorError> {
        let v = self.area(f, z, |zeta| Ok(1.0 / (zeta - z)))?;
        Ok(-kernels::inv_two_pi_i() * v)
    }

    /// `T̄f(z) = −1/(2πi) ∫_D f(ζ)/(ζ̄ − z̄) dζ̄∧dζ`.
    pub fn apply_tbar(&self, f: &ScalarField, z: Complex64) -> Result<Complex64, OperatorError> {
        let v = self.area(f, z, |zeta| Ok(1.0 / (zeta - z).conj()))?;
        Ok(-kernels::inv_two_pi_i() * v)
    }

    /// `Sf(z) = 1/(2πi) ∮ f(ζ)/(ζ − z) dζ`, interior `z` only.
    pub fn apply_s(&self, f: &ScalarField, z: Complex64) -> Result<Complex64, OperatorError> {
        require_interior(f.domain(), z)?;
        let rule = self.contour(f.domain())?;
        let v = rule.integrate(|zeta| f.eval(zeta) / (zeta - z))?;
        Ok(kernels::inv_two_pi_i() * v)
    }

    /// `S̄f(z) = −1/(2πi) ∮ f(ζ)/(ζ̄ − z̄) dζ̄`, interior `z` only.
    pub fn apply_sbar(&self, f: &ScalarField, z: Complex64) -> Result<Complex64, OperatorError> {
        require_interior(f.domain(), z)?;
        let rule = self.contour(f.domain())?;
        // dζ̄ = conj(dζ): integrate against conjugated weights
        let terms: Vec<Complex64> = rule
            .nodes()
            .par_iter()
            .zip(rule.conj_weights().into_par_iter())
            .map(|(&zeta, w)| w * f.eval(zeta) / (zeta - z).conj())
            .collect();
        let v = pairwise_sum(&terms);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(QuadratureError::NonFiniteSample { index: 0, node: z }.into());
        }
        Ok(-kernels::inv_two_pi_i() * v)
    }

    /// `²Tf(z) = −1/(2πi) ∫ (f(ζ) − f(z))/(ζ − z)² dζ̄∧dζ`, taken as the
    /// symmetric (principal value) limit about `z`.
    pub fn apply_2t(&self, f: &ScalarField, z: Complex64) -> Result<Complex64, OperatorError> {
        require_interior(f.domain(), z)?;
        let fz = f.eval(z);
        let rule = build_area_rule(f.domain(), z, self.resolution)?;
        let v = rule.integrate(|zeta| (f.eval(zeta) - fz) / ((zeta - z) * (zeta - z)))?;
        Ok(-kernels::inv_two_pi_i() * v)
    }

    /// `²T̄f(z) = −1/(2πi) ∫ (f(ζ) − f(z))/(ζ̄ − z̄)² dζ̄∧dζ`.
    pub fn apply_2tbar(&self, f: &ScalarField, z: Complex64) -> Result<Complex64, OperatorError> {
        require_interior(f.domain(), z)?;
        let fz = f.eval(z);
        let rule = build_area_rule(f.domain(), z, self.resolution)?;
        let v = rule.integrate(|zeta| {
            let d = (zeta - z).conj();
            (f.eval(zeta) - fz) / (d * d)
        })?;
        Ok(-kernels::inv_two_pi_i() * v)
    }

    /// `T^k f(z) = (−1)^k/((k−1)! 2πi) ∫ (ζ̄ − z̄)^{k−1} f(ζ)/(ζ − z) dζ̄∧dζ`.
    pub fn apply_t_power(
        &self,
        f: &ScalarField,
        z: Complex64,
        k: u32,
    ) -> Result<Complex64, OperatorError> {
        check_order(k)?;
        let v = self.area(f, z, |zeta| Ok((zeta - z).conj().powu(k - 1) / (zeta - z)))?;
        Ok(power_prefactor(k) * v)
    }

    /// `T̄^k f(z) = (−1)^k/((k−1)! 2πi) ∫ (ζ − z)^{k−1} f(ζ)/(ζ̄ − z̄) dζ̄∧dζ`.
    pub fn apply_tbar_power(
        &self,
        f: &ScalarField,
        z: Complex64,
        k: u32,
    ) -> Result<Complex64, OperatorError> {
        check_order(k)?;
        let v = self.area(f, z, |zeta| Ok((zeta - z).powu(k - 1) / (zeta - z).conj()))?;
        Ok(power_prefactor(k) * v)
    }

    /// `T^μ T̄^ν f(z)` as a single integral against the `C3` kernel.
    pub fn apply_mixed(
        &self,
        f: &ScalarField,
        z: Complex64,
        mu: u32,
        nu: u32,
    ) -> Result<Complex64, OperatorError> {
        check_order(mu)?;
        check_order(nu)?;
        require_interior(f.domain(), z)?;
        let (c, r) = (f.domain().center(), f.domain().radius());
        let v = self.area(f, z, |eta| Ok(kernels::c3(z - c, eta - c, mu, nu, r)?))?;
        Ok(kernels::mixed_prefactor(mu, nu) * v)
    }

    /// `T̄^μ T^ν f(z)`, evaluated as `conj(T^μ T̄^ν f̄ (z))`.
    pub fn apply_conjugate_dual(
        &self,
        f: &ScalarField,
        z: Complex64,
        mu: u32,
        nu: u32,
    ) -> Result<Complex64, OperatorError> {
        Ok(self.apply_mixed(&f.conj(), z, mu, nu)?.conj())
    }

    /// `T̄^μ T^ν f(z)` integrated directly against the conjugate kernel
    /// `conj(C3)`; an independent route to [`apply_conjugate_dual`](Self::apply_conjugate_dual).
    pub fn apply_conjugate_kernel(
        &self,
        f: &ScalarField,
        z: Complex64,
        mu: u32,
        nu: u32,
    ) -> Result<Complex64, OperatorError> {
        check_order(mu)?;
        check_order(nu)?;
        require_interior(f.domain(), z)?;
        let (c, r) = (f.domain().center(), f.domain().radius());
        let v = self.area(f, z, |eta| {
            Ok(kernels::c3(z - c, eta - c, mu, nu, r)?.conj())
        })?;
        // conj(dη̄∧dη) = −dη̄∧dη
        Ok(-kernels::mixed_prefactor(mu, nu).conj() * v)
    }

    /// `T^μ T̄^ν f(z)` on the polydisc: a tensor product of per-factor
    /// rules centred at `z_j`, weighted by `Π C3(z_j, η_j, μ_j, ν_j)`.
    pub fn apply_polydisc(
        &self,
        f: &PolydiscField,
        z: &[Complex64],
        mu: &MultiIndex,
        nu: &MultiIndex,
    ) -> Result<Complex64, OperatorError> {
        let domain = f.domain();
        let n = domain.factors();
        if n > MAX_POLYDISC_FACTORS {
            return Err(OperatorError::DimensionCap { got: n });
        }
        domain.check(z)?;
        mu.require_kernel_admissible(n)?;
        nu.require_kernel_admissible(n)?;
        let disk = domain.factor_disk();
        let r = disk.radius();
        let mut factors: Vec<(Vec<Complex64>, Vec<Complex64>)> = Vec::with_capacity(n);
        for ((&zj, &m), &v) in z.iter().zip(mu.entries()).zip(nu.entries()) {
            require_interior(&disk, zj)?;
            check_order(m)?;
            check_order(v)?;
            let rule = build_area_rule(&disk, zj, self.resolution)?;
            let kw = rule
                .nodes()
                .par_iter()
                .zip(rule.weights().par_iter())
                .map(|(&eta, &w)| Ok(w * kernels::c3(zj, eta, m, v, r)?))
                .collect::<Result<Vec<_>, OperatorError>>()?;
            factors.push((rule.nodes().to_vec(), kw));
        }
        let (first_nodes, first_kw) = &factors[0];
        let rest = &factors[1..];
        let inner_len: usize = rest.iter().map(|f| f.0.len()).product();
        let partial: Vec<Complex64> = (0..first_nodes.len())
            .into_par_iter()
            .map(|i| {
                let mut point = vec![first_nodes[i]; n];
                let mut acc = Vec::with_capacity(inner_len);
                for flat in 0..inner_len {
                    let mut rem = flat;
                    let mut weight = first_kw[i];
                    for (j, (nodes, kw)) in rest.iter().enumerate() {
                        let k = rem % nodes.len();
                        rem /= nodes.len();
                        point[j + 1] = nodes[k];
                        weight *= kw[k];
                    }
                    acc.push(weight * f.eval(&point));
                }
                pairwise_sum(&acc)
            })
            .collect();
        let total = pairwise_sum(&partial);
        if !(total.re.is_finite() && total.im.is_finite()) {
            return Err(QuadratureError::NonFiniteSample {
                index: 0,
                node: z[0],
            }
            .into());
        }
        Ok(kernels::c8(mu, nu)? * total)
    }

    pub fn apply(
        &self,
        op: Operator,
        f: &ScalarField,
        z: Complex64,
    ) -> Result<Complex64, OperatorError> {
        match op {
            Operator::T => self.apply_t(f, z),
            Operator::Tbar => self.apply_tbar(f, z),
            Operator::S => self.apply_s(f, z),
            Operator::Sbar => self.apply_sbar(f, z),
            Operator::T2 => self.apply_2t(f, z),
            Operator::Tbar2 => self.apply_2tbar(f, z),
            Operator::TPower(k) => self.apply_t_power(f, z, k),
            Operator::TbarPower(k) => self.apply_tbar_power(f, z, k),
            Operator::Mixed { mu, nu } => self.apply_mixed(f, z, mu, nu),
        }
    }

    /// Applies `op` at every grid point.
    pub fn evaluate_grid(
        &self,
        op: Operator,
        f: &ScalarField,
        geometry: &GridGeometry,
    ) -> Result<GridField, OperatorError> {
        let points = geometry.points();
        if points.is_empty() {
            return Err(OperatorError::EmptyGrid);
        }
        if let Some(&p) = points.iter().find(|&&p| !f.domain().contains(p)) {
            return Err(OperatorError::GridOutsideDomain(p));
        }
        let values = points
            .par_iter()
            .map(|&z| self.apply(op, f, z))
            .collect::<Result<Vec<_>, _>>()?;
        GridField::new(geometry.clone(), values)
    }
}

fn power_prefactor(k: u32) -> Complex64 {
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    kernels::inv_two_pi_i() * (sign / factorial(k - 1))
}

/// Sample layout of a [`GridField`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridGeometry {
    /// `origin + (i dx, j dy)` for `i < nx`, `j < ny`; rows are constant `y`.
    Cartesian {
        origin: (f64, f64),
        spacing: (f64, f64),
        shape: (usize, usize),
    },
    /// `center + r e^{2πik/n_angles}` for each listed radius.
    Polar {
        center: (f64, f64),
        radii: Vec<f64>,
        n_angles: usize,
    },
}

impl GridGeometry {
    /// `n × n` Cartesian grid filling the square `[-s, s]²` around the disk
    /// centre, with `s = fill · R / √2` so the square fits inside the disk.
    pub fn cartesian_in_disk(domain: &DiskDomain, n: usize, fill: f64) -> Self {
        let s = fill * domain.radius() / 2f64.sqrt();
        let c = domain.center();
        let step = if n > 1 { 2.0 * s / (n - 1) as f64 } else { 0.0 };
        let origin = if n > 1 {
            (c.re - s, c.im - s)
        } else {
            (c.re, c.im)
        };
        GridGeometry::Cartesian {
            origin,
            spacing: (step, step),
            shape: (n, n),
        }
    }

    /// Polar grid with `n_radii` equispaced rings in `(0, fill·R]`.
    pub fn polar_in_disk(domain: &DiskDomain, n_radii: usize, n_angles: usize, fill: f64) -> Self {
        let c = domain.center();
        let radii = (1..=n_radii)
            .map(|k| fill * domain.radius() * k as f64 / n_radii as f64)
            .collect();
        GridGeometry::Polar {
            center: (c.re, c.im),
            radii,
            n_angles,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            GridGeometry::Cartesian { shape, .. } => shape.0 * shape.1,
            GridGeometry::Polar {
                radii, n_angles, ..
            } => radii.len() * n_angles,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in row-major order.
    pub fn points(&self) -> Vec<Complex64> {
        match self {
            GridGeometry::Cartesian {
                origin,
                spacing,
                shape,
            } => (0..shape.1)
                .flat_map(|j| {
                    (0..shape.0).map(move |i| {
                        Complex64::new(
                            origin.0 + i as f64 * spacing.0,
                            origin.1 + j as f64 * spacing.1,
                        )
                    })
                })
                .collect(),
            GridGeometry::Polar {
                center,
                radii,
                n_angles,
            } => {
                let c = Complex64::new(center.0, center.1);
                radii
                    .iter()
                    .flat_map(|&r| {
                        (0..*n_angles).map(move |k| {
                            c + Complex64::from_polar(r, 2.0 * PI * k as f64 / *n_angles as f64)
                        })
                    })
                    .collect()
            }
        }
    }
}

/// Complex samples on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    geometry: GridGeometry,
    values: Vec<Complex64>,
}

impl GridField {
    pub fn new(geometry: GridGeometry, values: Vec<Complex64>) -> Result<Self, OperatorError> {
        if values.len() != geometry.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: geometry.len(),
                got: values.len(),
            }
            .into());
        }
        if let Some(&v) = values
            .iter()
            .find(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(GeometryError::NonFinite(v).into());
        }
        Ok(Self { geometry, values })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// CSV with header `x,y,re,im`, one row per sample in grid order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y,re,im")?;
        for (p, v) in self.geometry.points().iter().zip(&self.values) {
            writeln!(out, "{:e},{:e},{:e},{:e}", p.re, p.im, v.re, v.im)?;
        }
        Ok(())
    }

    /// JSON document holding the grid, samples and the supplied config echo.
    pub fn to_json(&self, config: &serde_json::Value) -> serde_json::Value {
        let samples: Vec<_> = self
            .geometry
            .points()
            .iter()
            .zip(&self.values)
            .map(|(p, v)| serde_json::json!({ "x": p.re, "y": p.im, "re": v.re, "im": v.im }))
            .collect();
        serde_json::json!({
            "config": config,
            "geometry": self.geometry,
            "samples": samples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ops() -> GreenOperators {
        GreenOperators::new(Resolution::new(32, 64).unwrap(), 128).unwrap()
    }

    fn poly(domain: DiskDomain, terms: &[(usize, usize, Complex64)]) -> ScalarField {
        ScalarField::from_polynomial(
            domain,
            PolynomialField::from_terms(terms.iter().copied()).unwrap(),
        )
    }

    #[test]
    fn operator_names_round_trip() {
        for s in [
            "T",
            "Tbar",
            "S",
            "Sbar",
            "2T",
            "2Tbar",
            "T^3",
            "Tbar^2",
            "T^2Tbar^3",
            "TTbar",
        ] {
            let op: Operator = s.parse().unwrap();
            let again: Operator = op.to_string().parse().unwrap();
            assert_eq!(op, again, "{s}");
        }
        assert_eq!(
            "TTbar".parse::<Operator>().unwrap(),
            Operator::Mixed { mu: 1, nu: 1 }
        );
        assert_eq!("T^1".parse::<Operator>().unwrap(), Operator::TPower(1));
        assert!(matches!(
            "T^0".parse::<Operator>(),
            Err(OperatorError::ZeroOrder)
        ));
        assert!(matches!(
            "Q".parse::<Operator>(),
            Err(OperatorError::UnknownOperator(_))
        ));
        assert!("T^x".parse::<Operator>().is_err());
    }

    #[test]
    fn alpha_must_be_open_unit_interval() {
        let d = DiskDomain::unit();
        for a in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(ScalarField::new(d, a, "", |z| z).is_err());
        }
        assert!(ScalarField::new(d, 0.3, "", |z| z).is_ok());
    }

    #[test]
    fn t_of_conjugate_powers() {
        let d = DiskDomain::unit();
        let ops = ops();
        for l in 0..4 {
            let f = poly(d, &[(0, l, c(1.0, 0.0))]);
            let z = c(0.3, -0.45);
            let expected = z.conj().powu(l as u32 + 1) / (l as f64 + 1.0);
            let got = ops.apply_t(&f, z).unwrap();
            assert!(
                (got - expected).norm() < 1e-12,
                "l={l}: {got} vs {expected}"
            );
        }
        assert_eq!(
            ops.apply_t(&ScalarField::zero(d), c(0.1, 0.1)).unwrap(),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn tbar_is_conjugate_of_t() {
        let d = DiskDomain::new(1.4).unwrap();
        let f = poly(d, &[(2, 1, c(0.5, 1.0)), (0, 0, c(-1.0, 0.3))]);
        let z = c(-0.2, 0.6);
        let ops = ops();
        let a = ops.apply_tbar(&f, z).unwrap();
        let b = ops.apply_t(&f.conj(), z).unwrap().conj();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn s_and_sbar() {
        let d = DiskDomain::unit();
        let ops = ops();
        let one = ScalarField::constant(d, c(1.0, 0.0));
        assert!((ops.apply_s(&one, c(0.3, 0.2)).unwrap() - 1.0).norm() < 1e-13);
        assert!((ops.apply_sbar(&one, c(0.3, 0.2)).unwrap() - 1.0).norm() < 1e-13);
        // S of a holomorphic polynomial reproduces it
        let f = poly(d, &[(3, 0, c(1.0, -2.0)), (1, 0, c(0.5, 0.0))]);
        let z = c(-0.4, 0.1);
        assert!((ops.apply_s(&f, z).unwrap() - f.eval(z)).norm() < 1e-13);
        assert!(matches!(
            ops.apply_s(&one, c(1.0, 0.0)),
            Err(OperatorError::NotInterior(_))
        ));
    }

    #[test]
    fn two_t_is_derivative_of_t() {
        let d = DiskDomain::unit();
        let ops = ops();
        let z = c(0.2, 0.1);
        // T(z̄) = z̄²/2 has ∂ = 0; T(z z̄) = z z̄²/2 has ∂ = z̄²/2
        let zb = poly(d, &[(0, 1, c(1.0, 0.0))]);
        assert!(ops.apply_2t(&zb, z).unwrap().norm() < 1e-10);
        let zzb = poly(d, &[(1, 1, c(1.0, 0.0))]);
        let expected = z.conj().powi(2) / 2.0;
        assert!((ops.apply_2t(&zzb, z).unwrap() - expected).norm() < 1e-10);
        // ²T̄ f = conj(²T conj f)
        let a = ops.apply_2tbar(&zzb, z).unwrap();
        let b = ops.apply_2t(&zzb.conj(), z).unwrap().conj();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn powers_collapse_and_compose() {
        let d = DiskDomain::unit();
        let ops = ops();
        let f = poly(d, &[(1, 0, c(1.0, 1.0)), (0, 2, c(0.0, 0.5))]);
        let z = c(0.25, -0.3);
        assert!(
            (ops.apply_t_power(&f, z, 1).unwrap() - ops.apply_t(&f, z).unwrap()).norm() < 1e-14
        );
        assert!(
            (ops.apply_tbar_power(&f, z, 1).unwrap() - ops.apply_tbar(&f, z).unwrap()).norm()
                < 1e-14
        );

        let p = *f.polynomial().unwrap();
        let t3 = p
            .exact_t(1.0)
            .unwrap()
            .exact_t(1.0)
            .unwrap()
            .exact_t(1.0)
            .unwrap();
        assert!((ops.apply_t_power(&f, z, 3).unwrap() - t3.eval(z)).norm() < 1e-11);
        let tb2 = p.exact_tbar(1.0).unwrap().exact_tbar(1.0).unwrap();
        assert!((ops.apply_tbar_power(&f, z, 2).unwrap() - tb2.eval(z)).norm() < 1e-11);

        let one = ScalarField::constant(d, c(1.0, 0.0));
        assert!(ops.apply_t_power(&one, c(0.0, 0.0), 2).unwrap().norm() < 1e-14);
    }

    #[test]
    fn mixed_matches_exact_polynomial_composition() {
        let d = DiskDomain::new(1.2).unwrap();
        let ops = ops();
        let f = poly(
            d,
            &[
                (1, 1, c(1.0, 0.0)),
                (2, 0, c(0.0, -1.0)),
                (0, 0, c(0.5, 0.0)),
            ],
        );
        let p = *f.polynomial().unwrap();
        let z = c(-0.3, 0.5);
        for mu in 1..=2u32 {
            for nu in 1..=2u32 {
                let mut e = p;
                for _ in 0..nu {
                    e = e.exact_tbar(1.2).unwrap();
                }
                for _ in 0..mu {
                    e = e.exact_t(1.2).unwrap();
                }
                let got = ops.apply_mixed(&f, z, mu, nu).unwrap();
                assert!(
                    (got - e.eval(z)).norm() < 1e-8 * e.eval(z).norm().max(1.0),
                    "{mu},{nu}: {got} vs {}",
                    e.eval(z)
                );
            }
        }
    }

    #[test]
    fn mixed_of_one_at_origin() {
        let ops = ops();
        let one = ScalarField::constant(DiskDomain::unit(), c(1.0, 0.0));
        let v = ops.apply_mixed(&one, c(0.0, 0.0), 1, 1).unwrap();
        assert!((v + 1.0).norm() < 1e-8, "{v}");
    }

    #[test]
    fn shifted_disk_uses_shifted_kernel() {
        // T T̄ 1 = |z − c|² − R² on a disk centred at c
        let d = DiskDomain::centered(c(0.5, -0.25), 0.8).unwrap();
        let ops = ops();
        let one = ScalarField::constant(d, c(1.0, 0.0));
        let z = c(0.7, -0.1);
        let expected = (z - d.center()).norm_sqr() - 0.64;
        assert!((ops.apply_mixed(&one, z, 1, 1).unwrap() - expected).norm() < 1e-8);
    }

    #[test]
    fn conjugate_routes_agree() {
        let d = DiskDomain::unit();
        let ops = ops();
        let f = poly(d, &[(1, 0, c(1.0, 0.0)), (0, 2, c(0.3, -0.7))]);
        let z = c(0.1, 0.4);
        for (mu, nu) in [(1, 1), (2, 1), (1, 3)] {
            let a = ops.apply_conjugate_dual(&f, z, mu, nu).unwrap();
            let b = ops.apply_conjugate_kernel(&f, z, mu, nu).unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn polydisc_separable_and_caps() {
        let dom = PolydiscDomain::new(2, 1.0).unwrap();
        let disk = dom.factor_disk();
        let ops = GreenOperators::new(Resolution::new(8, 16).unwrap(), 64).unwrap();
        let g = poly(disk, &[(1, 0, c(1.0, 0.0)), (0, 0, c(0.5, 0.0))]);
        let h = poly(disk, &[(0, 1, c(0.0, 1.0))]);
        let f = PolydiscField::separable(dom, vec![g.clone(), h.clone()]).unwrap();
        let z = [c(0.2, 0.1), c(-0.3, 0.0)];
        let mu = MultiIndex::new(vec![1, 2]);
        let nu = MultiIndex::new(vec![1, 1]);
        let v = ops.apply_polydisc(&f, &z, &mu, &nu).unwrap();
        let prod =
            ops.apply_mixed(&g, z[0], 1, 1).unwrap() * ops.apply_mixed(&h, z[1], 2, 1).unwrap();
        assert!(
            (v - prod).norm() < 1e-12 * prod.norm().max(1.0),
            "{v} {prod}"
        );

        let big = PolydiscDomain::new(4, 1.0).unwrap();
        let f4 = PolydiscField::new(big, 0.5, "1", |_| c(1.0, 0.0)).unwrap();
        let err = ops
            .apply_polydisc(
                &f4,
                &[c(0.0, 0.0); 4],
                &MultiIndex::uniform(4, 1),
                &MultiIndex::uniform(4, 1),
            )
            .unwrap_err();
        assert_eq!(err, OperatorError::DimensionCap { got: 4 });
    }

    #[test]
    fn grid_output() {
        let d = DiskDomain::unit();
        let ops = GreenOperators::new(Resolution::new(8, 16).unwrap(), 32).unwrap();
        let f = poly(d, &[(0, 1, c(1.0, 0.0))]);
        let g = GridGeometry::cartesian_in_disk(&d, 3, 0.9);
        let field = ops.evaluate_grid(Operator::T, &f, &g).unwrap();
        assert_eq!(field.values().len(), 9);
        let mut buf = Vec::new();
        field.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "x,y,re,im");
        assert_eq!(text.lines().count(), 10);
        let json = field.to_json(&serde_json::json!({"radius": 1.0}));
        assert_eq!(json["samples"].as_array().unwrap().len(), 9);

        let polar = GridGeometry::polar_in_disk(&d, 2, 5, 0.5);
        assert_eq!(polar.points().len(), 10);
        let outside = GridGeometry::Cartesian {
            origin: (0.9, 0.9),
            spacing: (0.1, 0.1),
            shape: (1, 1),
        };
        assert!(matches!(
            ops.evaluate_grid(Operator::T, &f, &outside),
            Err(OperatorError::GridOutsideDomain(_))
        ));
    }
}
