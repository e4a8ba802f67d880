//! Seeded self-checks run by `pmp verify`.
//!
//! Each suite compares closed forms against an independent route (direct
//! quadrature, nested composition, exact polynomial algebra or finite
//! differences) and reports the worst discrepancy per check.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::geometry::{
    fd_step, wirtinger_split, DiskDomain, GeometryError, MultiIndex, PolydiscDomain,
};
use crate::kernels::{self, KernelError, KernelQuery};
use crate::operators::{GreenOperators, OperatorError, PolydiscField, ScalarField};
use crate::oracle::hoelder::{check_norm_bound, hoelder_seminorm, NormCheckConfig};
use crate::oracle::lemmas::{lemma_lhs_quadrature, LemmaKind};
use crate::oracle::nested::{mixed_program, nested_apply, NestedConfig, Step};
use crate::oracle::polynomial::MAX_DEGREE;
use crate::oracle::{OracleError, PolynomialField};
use crate::solver::{
    fd_residual, solve_biharmonic, solve_pde, HolomorphicPolynomial, SolutionSpec, SolverError,
};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("unknown suite {0:?} (expected kernels, operators, pde or norms)")]
    UnknownSuite(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kernels,
    Operators,
    Pde,
    Norms,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Kernels, Suite::Operators, Suite::Pde, Suite::Norms];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Kernels => "kernels",
            Suite::Operators => "operators",
            Suite::Pde => "pde",
            Suite::Norms => "norms",
        })
    }
}

impl FromStr for Suite {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.to_string() == s)
            .ok_or_else(|| SuiteError::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed discrepancy.
    pub error: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: error <= tolerance,
            error,
            tolerance,
        }
    }

    fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            error: if passed { 0.0 } else { 1.0 },
            tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `|got − want| / max(1, |want|)`.
pub fn relative_error(got: Complex64, want: Complex64) -> f64 {
    (got - want).norm() / want.norm().max(1.0)
}

/// Uniform random point with `|z − c| ≤ fill·R`.
pub fn random_point<R: Rng>(rng: &mut R, domain: &DiskDomain, fill: f64) -> Complex64 {
    let r = domain.radius() * fill * rng.gen::<f64>().sqrt();
    let t = 2.0 * PI * rng.gen::<f64>();
    domain.center() + Complex64::from_polar(r, t)
}

/// Random `Σ c_pq z^p z̄^q` over `p + q ≤ degree`, coefficients in the unit square.
pub fn random_polynomial<R: Rng>(rng: &mut R, degree: usize) -> PolynomialField {
    let degree = degree.min(MAX_DEGREE);
    let mut p = PolynomialField::zero();
    for total in 0..=degree {
        for q in 0..=total {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            p.set(total - q, q, c).expect("degree capped above");
        }
    }
    p
}

fn random_pair<R: Rng>(rng: &mut R, domain: &DiskDomain, min_sep: f64) -> (Complex64, Complex64) {
    loop {
        let a = random_point(rng, domain, 0.9);
        let b = random_point(rng, domain, 0.9);
        if (a - b).norm() >= min_sep * domain.radius() {
            return (a, b);
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &RunConfig) -> Result<SuiteReport, SuiteError> {
    cfg.validate()?;
    // distinct streams per suite so adding checks to one leaves the others unchanged
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(suite as u64);
    let checks = match suite {
        Suite::Kernels => kernel_checks(cfg, &mut rng)?,
        Suite::Operators => operator_checks(cfg, &mut rng)?,
        Suite::Pde => pde_checks(cfg, &mut rng)?,
        Suite::Norms => norm_checks(cfg, &mut rng)?,
    };
    Ok(SuiteReport {
        suite,
        seed: cfg.seed,
        checks,
    })
}

fn kernel_checks(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>, SuiteError> {
    let tol = cfg.tolerances;
    let domain = cfg.domain()?;
    let r = cfg.radius;
    let res = cfg.resolution()?;
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..3 {
        let (a, b) = random_pair(rng, &domain, 0.05);
        for mu in 1..=3 {
            for nu in 1..=3 {
                let kind = LemmaKind::MixedKernel { mu, nu };
                let q = lemma_lhs_quadrature(kind, a, b, r, res, cfg.contour_count)?;
                worst = worst.max(relative_error(q, kind.closed_form(a, b, r)?));
            }
        }
    }
    out.push(CheckResult::new(
        "mixed kernel vs two-center quadrature",
        worst,
        tol.kernel_oracle,
    ));

    let mut worst = 0.0f64;
    for _ in 0..3 {
        let (a, b) = random_pair(rng, &domain, 0.05);
        for k in 1..=3 {
            let kind = LemmaKind::LogKernel { k };
            let q = lemma_lhs_quadrature(kind, a, b, r, res, cfg.contour_count)?;
            worst = worst.max(relative_error(q, kind.closed_form(a, b, r)?));
        }
    }
    out.push(CheckResult::new(
        "log kernel vs two-center quadrature",
        worst,
        tol.kernel_oracle,
    ));

    let mut worst = 0.0f64;
    for _ in 0..3 {
        let (a, b) = random_pair(rng, &domain, 0.05);
        for l in 1..=4 {
            for nu in 1..=4 {
                let kind = LemmaKind::BoundaryContour { l, nu };
                let q = lemma_lhs_quadrature(kind, a, b, r, res, cfg.contour_count)?;
                worst = worst.max((q - kind.closed_form(a, b, r)?).norm());
            }
        }
    }
    out.push(CheckResult::new(
        "boundary kernel vs contour quadrature",
        worst,
        tol.contour,
    ));

    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (a, b) = random_pair(rng, &domain, 0.01);
        for (mu, nu) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let general = KernelQuery::new(a, b, mu, nu, r)?.evaluate()?;
            let table =
                kernels::c3_low_order(a, b, mu, nu, r)?.expect("order covered by the table");
            worst = worst.max((general - table).norm() / general.norm().max(f64::MIN_POSITIVE));
        }
    }
    out.push(CheckResult::new(
        "low-order kernel table vs general kernel",
        worst,
        tol.kernel_table,
    ));
    Ok(out)
}

fn operator_checks(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>, SuiteError> {
    let tol = cfg.tolerances;
    let domain = cfg.domain()?;
    let r = cfg.radius;
    let ops = cfg.operators()?;
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for l in 0..=5 {
        let f = ScalarField::from_polynomial(
            domain,
            PolynomialField::monomial(0, l, Complex64::new(1.0, 0.0)).unwrap(),
        );
        for _ in 0..3 {
            let z = random_point(rng, &domain, 0.9);
            let want = z.conj().powu(l as u32 + 1) / (l as f64 + 1.0);
            worst = worst.max(relative_error(ops.apply_t(&f, z)?, want));
        }
    }
    out.push(CheckResult::new(
        "T on conjugate powers vs exact",
        worst,
        tol.golden,
    ));

    let nested_cfg = NestedConfig {
        resolution: ops.resolution,
        ..NestedConfig::default()
    };
    let f = ScalarField::from_polynomial(domain, random_polynomial(rng, 2));
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let z = random_point(rng, &domain, 0.8);
        let v = ops.apply_t_power(&f, z, 2)?;
        worst = worst.max(relative_error(
            v,
            nested_apply(&f, z, &[Step::T, Step::T], &nested_cfg)?,
        ));
        for (mu, nu) in [(1, 1), (2, 1)] {
            let v = ops.apply_mixed(&f, z, mu, nu)?;
            let n = nested_apply(&f, z, &mixed_program(mu as usize, nu as usize), &nested_cfg)?;
            worst = worst.max(relative_error(v, n));
        }
    }
    out.push(CheckResult::new(
        "closed-form operators vs nested composition",
        worst,
        tol.nested,
    ));

    let p = random_polynomial(rng, 3);
    let f = ScalarField::from_polynomial(domain, p);
    let dbar_f = ScalarField::from_polynomial(domain, p.wirtinger_exact(0, 1));
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let z = random_point(rng, &domain, 0.9);
        let lhs = ops.apply_t(&dbar_f, z)? + ops.apply_s(&f, z)?;
        worst = worst.max((lhs - f.eval(z)).norm());
    }
    out.push(CheckResult::new("T dbar f + S f = f", worst, tol.interior));

    let f = ScalarField::from_polynomial(domain, random_polynomial(rng, 2));
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let z = random_point(rng, &domain, 0.9);
        for (mu, nu) in [(1, 1), (1, 2), (2, 1)] {
            let dual = ops.apply_conjugate_dual(&f, z, mu, nu)?;
            let direct = ops.apply_conjugate_kernel(&f, z, mu, nu)?;
            worst = worst.max((dual - direct).norm());
        }
    }
    out.push(CheckResult::new(
        "conjugate dual vs conjugate kernel",
        worst,
        tol.conjugation,
    ));

    let pd = PolydiscDomain::new(2, r)?;
    let disk = pd.factor_disk();
    let g = ScalarField::from_polynomial(disk, random_polynomial(rng, 2));
    let h = ScalarField::from_polynomial(disk, random_polynomial(rng, 2));
    let field = PolydiscField::separable(pd, vec![g.clone(), h.clone()])?;
    let z = [random_point(rng, &disk, 0.8), random_point(rng, &disk, 0.8)];
    let (mu, nu) = (MultiIndex::new(vec![1, 2]), MultiIndex::new(vec![1, 1]));
    let v = ops.apply_polydisc(&field, &z, &mu, &nu)?;
    let prod = ops.apply_mixed(&g, z[0], 1, 1)? * ops.apply_mixed(&h, z[1], 2, 1)?;
    out.push(CheckResult::new(
        "polydisc vs factor-wise product",
        relative_error(v, prod),
        tol.polydisc,
    ));
    Ok(out)
}

fn pde_checks(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>, SuiteError> {
    let tol = cfg.tolerances;
    let domain = cfg.domain()?;
    let ops = cfg.operators()?;
    let mut out = Vec::new();

    let f = ScalarField::from_polynomial(domain, random_polynomial(rng, 2));
    let stencil = wirtinger_split(0, 1);
    let h = fd_step(1, cfg.radius);
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let z = random_point(rng, &domain, 0.7);
        let d = stencil.apply(|w| ops.apply_t(&f, w), z, h)?;
        worst = worst.max(relative_error(d, f.eval(z)));
    }
    out.push(CheckResult::new(
        "FD dbar of T f reproduces f",
        worst,
        tol.inversion,
    ));

    let a = ScalarField::from_polynomial(domain, random_polynomial(rng, 2));
    let spec = SolutionSpec::new(
        1,
        1,
        a.clone(),
        vec![HolomorphicPolynomial::new(vec![Complex64::new(
            rng.gen_range(-1.0..1.0),
            0.0,
        )])?],
        vec![HolomorphicPolynomial::new(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(rng.gen_range(-1.0..1.0), 0.0),
        ])?],
    )?;
    let u = solve_pde(ops, spec)?;
    let points: Vec<_> = (0..4).map(|_| random_point(rng, &domain, 0.6)).collect();
    let scale = points.iter().map(|&p| a.eval(p).norm()).fold(1.0, f64::max);
    let res = fd_residual(&*u, 1, 1, 1.0, |z| a.eval(z), &domain, &points)?;
    let worst = res.iter().fold(0.0f64, |m, &e| m.max(e)) / scale;
    out.push(CheckResult::new(
        "first-order mixed equation FD residual",
        worst,
        tol.pde_first,
    ));

    let c0 = rng.gen_range(0.5..1.5);
    let rhs = ScalarField::from_polynomial(
        domain,
        PolynomialField::from_terms([
            (0, 0, Complex64::new(c0, 0.0)),
            (1, 1, Complex64::new(1.0, 0.0)),
        ])?,
    );
    let u = solve_biharmonic(
        ops,
        rhs.clone(),
        HolomorphicPolynomial::zero(),
        HolomorphicPolynomial::zero(),
    )?;
    let points: Vec<_> = (0..3).map(|_| random_point(rng, &domain, 0.5)).collect();
    let scale = points
        .iter()
        .map(|&p| rhs.eval(p).norm())
        .fold(1.0, f64::max);
    let res = fd_residual(&*u, 2, 2, 16.0, |z| rhs.eval(z), &domain, &points)?;
    let worst = res.iter().fold(0.0f64, |m, &e| m.max(e)) / scale;
    out.push(CheckResult::new(
        "biharmonic FD residual",
        worst,
        tol.pde_second,
    ));
    Ok(out)
}

fn norm_checks(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>, SuiteError> {
    let domain = cfg.domain()?;
    let ops: GreenOperators = cfg.operators()?;
    let mut out = Vec::new();

    let p = random_polynomial(rng, 3);
    let mut prev = 0.0;
    let mut monotone = true;
    for budget in [50, 100, 200, 400] {
        let est = hoelder_seminorm(&domain, |z| p.eval(z), 0.5, budget)?;
        monotone &= est.value >= prev;
        prev = est.value;
    }
    out.push(CheckResult::flag(
        "Hoelder estimate monotone in budget",
        monotone,
    ));

    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let est = hoelder_seminorm(&domain, |_| c, 0.5, 200)?;
    out.push(CheckResult::new(
        "constant has zero Hoelder seminorm",
        est.value,
        f64::EPSILON,
    ));

    let check_cfg = NormCheckConfig {
        derivative_samples: 8,
        field_samples: 400,
        ..NormCheckConfig::default()
    };
    let mut holds = true;
    for (mu, nu) in [(1, 1), (2, 1)] {
        let alpha = [0.25, 0.5, 0.75][rng.gen_range(0..3)];
        let f =
            ScalarField::from_polynomial(domain, random_polynomial(rng, 3)).with_alpha(alpha)?;
        holds &= check_norm_bound(&ops, &f, mu, nu, alpha, &check_cfg)?.holds;
    }
    out.push(CheckResult::flag("norm bound holds", holds));
    Ok(out)
}
