//! Discrete Hölder estimators.
//!
//! Every estimate is a supremum over a finite sample, hence a lower bound of
//! the continuum quantity. Samples come from a Halton sequence, so a larger
//! budget always contains the smaller one and estimates are monotone.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::OracleError;
use crate::geometry::{fd_step, offset_to_complex, wirtinger_split, DiskDomain, PolydiscDomain};
use crate::operators::{GreenOperators, PolydiscField, ScalarField};

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Pairs closer than this fraction of `R` are skipped.
pub const MIN_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoelderEstimate {
    pub alpha: f64,
    pub order: usize,
    pub value: f64,
    pub samples: usize,
}

/// Radical inverse of `i` in the given base.
pub fn halton(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b;
        r += f * (i % base as u64) as f64;
        i /= base as u64;
    }
    r
}

fn disk_point(u: f64, v: f64, center: Complex64, radius: f64) -> Complex64 {
    center + Complex64::from_polar(radius * u.sqrt(), 2.0 * std::f64::consts::PI * v)
}

/// The first `count` Halton points in the disk of radius `fill · R`.
pub fn disk_samples(domain: &DiskDomain, count: usize, fill: f64) -> Vec<Complex64> {
    (1..=count as u64)
        .map(|i| {
            disk_point(
                halton(i, 2),
                halton(i, 3),
                domain.center(),
                fill * domain.radius(),
            )
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<(), OracleError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(OracleError::InvalidParameter {
            what: "Hölder exponent",
            value: alpha,
        })
    }
}

/// `max |g(z_i) − g(z_j)| / |z_i − z_j|^α` over all sample pairs.
pub fn pair_quotient(points: &[Complex64], values: &[Complex64], alpha: f64, min_sep: f64) -> f64 {
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..points.len())
                .filter_map(|j| {
                    let d = (points[i] - points[j]).norm();
                    (d >= min_sep).then(|| (values[i] - values[j]).norm() / d.powf(alpha))
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Estimate of `H_α[f]` on the closed disk from `budget` sample points.
pub fn hoelder_seminorm<F>(
    domain: &DiskDomain,
    f: F,
    alpha: f64,
    budget: usize,
) -> Result<HoelderEstimate, OracleError>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    check_alpha(alpha)?;
    let points = disk_samples(domain, budget, 1.0);
    let values: Vec<Complex64> = points.par_iter().map(|&z| f(z)).collect();
    Ok(HoelderEstimate {
        alpha,
        order: 1,
        value: pair_quotient(&points, &values, alpha, MIN_SEPARATION * domain.radius()),
        samples: budget,
    })
}

/// Estimate of `||f|| = |f| + (2R)^α H_α[f]`.
pub fn hoelder_norm<F>(
    domain: &DiskDomain,
    f: F,
    alpha: f64,
    budget: usize,
) -> Result<f64, OracleError>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    check_alpha(alpha)?;
    let points = disk_samples(domain, budget, 1.0);
    let values: Vec<Complex64> = points.par_iter().map(|&z| f(z)).collect();
    let sup = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let h = pair_quotient(&points, &values, alpha, MIN_SEPARATION * domain.radius());
    Ok(sup + (2.0 * domain.radius()).powf(alpha) * h)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Estimate of `H^{(k)}_α[f]`: the largest order-`k` mixed difference
/// quotient over distinct coordinate sets `i_1 < … < i_k`.
pub fn polydisc_seminorm(
    f: &PolydiscField,
    alpha: f64,
    order: usize,
    budget: usize,
) -> Result<HoelderEstimate, OracleError> {
    check_alpha(alpha)?;
    let domain = f.domain();
    let n = domain.factors();
    if order == 0 || order > n || 2 * (n + order) > PRIMES.len() {
        return Err(OracleError::InvalidParameter {
            what: "difference order",
            value: order as f64,
        });
    }
    let disk = domain.factor_disk();
    let r = disk.radius();
    let sets = combinations(n, order);
    let value = (1..=budget as u64)
        .into_par_iter()
        .map(|s| {
            let dim = |d: usize| halton(s, PRIMES[d]);
            let base: Vec<Complex64> = (0..n)
                .map(|j| disk_point(dim(2 * j), dim(2 * j + 1), disk.center(), r))
                .collect();
            let primed: Vec<Complex64> = (0..order)
                .map(|t| disk_point(dim(2 * (n + t)), dim(2 * (n + t) + 1), disk.center(), r))
                .collect();
            sets.iter()
                .filter_map(|set| mixed_quotient(f, &base, &primed, set, alpha, MIN_SEPARATION * r))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(HoelderEstimate {
        alpha,
        order,
        value,
        samples: budget,
    })
}

fn mixed_quotient(
    f: &PolydiscField,
    base: &[Complex64],
    primed: &[Complex64],
    set: &[usize],
    alpha: f64,
    min_sep: f64,
) -> Option<f64> {
    let mut denom = 1.0;
    for (t, &i) in set.iter().enumerate() {
        let d = (base[i] - primed[t]).norm();
        if d < min_sep {
            return None;
        }
        denom *= d.powf(alpha);
    }
    let k = set.len();
    let mut diff = Complex64::new(0.0, 0.0);
    let mut point = base.to_vec();
    for mask in 0..(1u32 << k) {
        for (t, &i) in set.iter().enumerate() {
            point[i] = if mask & (1 << t) != 0 {
                primed[t]
            } else {
                base[i]
            };
        }
        let sign = if mask.count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        diff += f.eval(&point) * sign;
    }
    Some(diff.norm() / denom)
}

/// Estimate of the polydisc norm `|f| + Σ_{k=1}^{n} (2R)^{kα}/k! H^{(k)}_α[f]`.
pub fn polydisc_norm(f: &PolydiscField, alpha: f64, budget: usize) -> Result<f64, OracleError> {
    let domain: &PolydiscDomain = f.domain();
    let n = domain.factors();
    let r = domain.radius();
    let disk = domain.factor_disk();
    let sup = (1..=budget as u64)
        .into_par_iter()
        .map(|s| {
            let z: Vec<Complex64> = (0..n)
                .map(|j| {
                    disk_point(
                        halton(s, PRIMES[2 * j]),
                        halton(s, PRIMES[2 * j + 1]),
                        disk.center(),
                        r,
                    )
                })
                .collect();
            f.eval(&z).norm()
        })
        .reduce(|| 0.0, f64::max);
    let mut total = sup;
    let mut fact = 1.0;
    for k in 1..=n {
        fact *= k as f64;
        let h = polydisc_seminorm(f, alpha, k, budget)?.value;
        total += (2.0 * r).powf(k as f64 * alpha) / fact * h;
    }
    Ok(total)
}

/// `C0 = 12/(α(1−α))`.
pub fn c0(alpha: f64) -> f64 {
    12.0 / (alpha * (1.0 - alpha))
}

/// `C4 = 2^{α+1}/α`.
pub fn c4(alpha: f64) -> f64 {
    2f64.powf(alpha + 1.0) / alpha
}

/// `C5 = 4/(α(1−α))`.
pub fn c5(alpha: f64) -> f64 {
    4.0 / (alpha * (1.0 - alpha))
}

/// `2^{(m−1)m/2} (C4 m + C0 + (m−1) C5)^m`.
pub fn bound_constant(m: u32, alpha: f64) -> f64 {
    let mf = m as f64;
    2f64.powf((mf - 1.0) * mf / 2.0)
        * (c4(alpha) * mf + c0(alpha) + (mf - 1.0) * c5(alpha)).powf(mf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormCheckConfig {
    /// Halton points where derivatives of `T^μ T̄^ν f` are sampled.
    pub derivative_samples: usize,
    /// Radius fraction containing those points (stencils need room).
    pub fill: f64,
    /// Halton points used for `||f||`.
    pub field_samples: usize,
}

impl Default for NormCheckConfig {
    fn default() -> Self {
        Self {
            derivative_samples: 24,
            fill: 0.8,
            field_samples: 1500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBound {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// One-sided check of
/// `||T^μ T̄^ν f||^{(m)} ≤ 2^{(m−1)m/2}(C4 m + C0 + (m−1)C5)^m ||f||`, `m = μ + ν`.
///
/// The left side is `max_{i+j=m} ||∂^i ∂̄^j u||` for `u = T^μ T̄^ν f`, with
/// derivatives from finite differences of pointwise evaluations.
pub fn check_norm_bound(
    ops: &GreenOperators,
    f: &ScalarField,
    mu: u32,
    nu: u32,
    alpha: f64,
    cfg: &NormCheckConfig,
) -> Result<NormBound, OracleError> {
    check_alpha(alpha)?;
    let m = mu + nu;
    if mu == 0 || nu == 0 || m > 4 {
        return Err(OracleError::InvalidParameter {
            what: "order mu + nu",
            value: m as f64,
        });
    }
    let domain = *f.domain();
    let r = domain.radius();
    let h = fd_step(m, r);
    let stencils: Vec<_> = (0..=m).map(|i| wirtinger_split(i, m - i)).collect();
    let reach = stencils.iter().map(|s| s.reach(h)).fold(0.0, f64::max);
    let fill = cfg.fill.min(1.0 - reach / r - 1e-9);
    if fill <= 0.0 {
        return Err(OracleError::InvalidParameter {
            what: "sample fill",
            value: cfg.fill,
        });
    }
    let points = disk_samples(&domain, cfg.derivative_samples, fill);

    // every stencil lives on the same h/4 lattice, so u is sampled once per offset
    let mut offsets = BTreeMap::new();
    for s in &stencils {
        for p in s.sample_points(h) {
            offsets.insert(p.offset, ());
        }
    }
    let offsets: Vec<(i32, i32)> = offsets.into_keys().collect();
    let samples = points
        .par_iter()
        .map(|&z| {
            offsets
                .iter()
                .map(|&o| Ok((o, ops.apply_mixed(f, z + offset_to_complex(o, h), mu, nu)?)))
                .collect::<Result<BTreeMap<_, _>, OracleError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut lhs: f64 = 0.0;
    for s in &stencils {
        let values: Vec<Complex64> = samples
            .iter()
            .map(|table| {
                s.sample_points(h)
                    .iter()
                    .map(|p| table[&p.offset] * p.weight)
                    .sum()
            })
            .collect();
        let sup = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let hq = pair_quotient(&points, &values, alpha, MIN_SEPARATION * r);
        lhs = lhs.max(sup + (2.0 * r).powf(alpha) * hq);
    }
    let norm_f = hoelder_norm(&domain, |z| f.eval(z), alpha, cfg.field_samples)?;
    let rhs = bound_constant(m, alpha) * norm_f;
    Ok(NormBound {
        holds: lhs <= rhs,
        lhs,
        rhs,
    })
}
