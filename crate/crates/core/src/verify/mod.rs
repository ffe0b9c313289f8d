//! Numerical checks of the trace identities and inequalities.
//!
//! Volume integrals are taken against the same measure as the boundary
//! side: `∫_Ω g = ∫ (1/ℓ) ∫_{]α,β[} g(sθ + y) ds dμ_θ`. For an exact measure
//! this is the fiber sweep; for a Monte Carlo measure it is a conditioned
//! estimator on the very samples that carry the boundary side.

mod consistency;
mod lemma;
mod partition;

pub use consistency::{check_consistency, Cluster, ConsistencyReport, Verdict};
pub use lemma::check_1d_lemma;
pub use partition::check_sufficiency_partition;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::measure::{BoundaryMeasure, FiberSpan};
use crate::point::Direction;
use crate::quadrature::{integrate_vec, Estimate, QuadConfig};
use crate::trace::{g_plus_minus, trace_on_span};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub domain: String,
    pub field: String,
    pub theta: Option<Vec<f64>>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub error_budget: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::MAX.copysign(if v.is_nan() { 1.0 } else { v })
    }
}

impl VerificationReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        check: &str,
        domain: &str,
        field: &str,
        theta: Option<&Direction>,
        lhs: f64,
        rhs: f64,
        residual: f64,
        tolerance: f64,
        error_budget: f64,
    ) -> Self {
        let (lhs, rhs, residual, error_budget) = (finite(lhs), finite(rhs), finite(residual), finite(error_budget));
        Self {
            check: check.into(),
            domain: domain.into(),
            field: field.into(),
            theta: theta.map(|t| t.comps().to_vec()),
            lhs,
            rhs,
            residual,
            tolerance,
            error_budget,
            pass: residual <= tolerance + error_budget,
            seed: None,
            detail: None,
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn with_domain(mut self, name: &str) -> Self {
        self.domain = name.into();
        self
    }

    /// One summary line, `PASS`/`FAIL` first.
    pub fn summary(&self) -> String {
        format!(
            "{} {} [{} / {}] lhs={:.12e} rhs={:.12e} residual={:.3e} tol={:.1e}+{:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check,
            self.domain,
            self.field,
            self.lhs,
            self.rhs,
            self.residual,
            self.tolerance,
            self.error_budget
        )
    }
}

/// `|a − b| / max(|a|, |b|)`, or the absolute difference when both are
/// below `1e−12`.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    let m = a.abs().max(b.abs());
    if m < 1e-12 {
        d
    } else {
        d / m
    }
}

/// Settings shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    /// Quadrature for the outer integral over the measure.
    pub outer: QuadConfig,
    /// Quadrature along fiber components.
    pub inner: QuadConfig,
    /// Relative tolerance of exact-quadrature identity checks.
    pub rel_tol: f64,
    /// Allowed violation of inequalities.
    pub slack: f64,
    /// Bound on trace values accepted as zero.
    pub zero_trace: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { outer: QuadConfig::default(), inner: QuadConfig::default(), rel_tol: 1e-6, slack: 1e-9, zero_trace: 1e-8 }
    }
}

impl CheckConfig {
    /// For smooth fields on polygonal domains: single panels, no grading.
    pub fn smooth() -> Self {
        let q = QuadConfig { grading_levels: 0, ..QuadConfig::default() };
        Self { outer: q, inner: q, ..Self::default() }
    }

    /// Both quadratures refined once.
    pub fn refined(&self) -> Self {
        Self { outer: self.outer.refined(), inner: self.inner.refined(), ..*self }
    }
}

fn fiber_point(theta: &Direction, span: &FiberSpan, t: f64) -> crate::point::Point {
    theta.line_point(&span.y, t)
}

/// Integrals along one fiber component: the two kernel integrals of `u`
/// (times `ℓ`), and `∫u²`, `∫(∂_θu)²`.
fn fiber_terms(u: &dyn ScalarField, theta: &Direction, span: &FiberSpan, cfg: &QuadConfig) -> Result<[Estimate; 4]> {
    let th = theta.comps();
    let origin = theta.lift(&span.y);
    let breaks = u.interfaces_along(&origin, th, span.alpha, span.beta);
    integrate_vec(
        |t| {
            let (v, dv) = u.value_and_directional(&fiber_point(theta, span, t), th);
            Ok([v + dv * (t - span.alpha), v + dv * (t - span.beta), v * v, dv * dv])
        },
        span.alpha,
        span.beta,
        &breaks,
        cfg,
    )
}

fn require_undivided(mu: &BoundaryMeasure) -> Result<()> {
    if mu.divided {
        return Err(Error::UnsupportedKind("divided measure"));
    }
    Ok(())
}

/// Budget for a Monte Carlo measure: three standard errors of the mean of
/// the per-sample values `v`.
fn mc_budget(mu: &BoundaryMeasure, values: &[f64]) -> f64 {
    let Some(n) = mu.samples else { return 0.0 };
    let vol = mu.domain.bbox().volume();
    let s1: f64 = values.iter().sum::<f64>() / n as f64;
    let s2: f64 = values.iter().map(|v| v * v).sum::<f64>() / n as f64;
    3.0 * vol * ((s2 - s1 * s1).max(0.0) / n as f64).sqrt()
}

/// Green's formula along θ:
/// `∫_Ω (u ∂_θv + v ∂_θu) = ∫ (γ_θu γ_θv − γ_{−θ}u γ_{−θ}v)/ℓ dμ_θ`.
pub fn check_green(u: &dyn ScalarField, v: &dyn ScalarField, mu: &BoundaryMeasure, cfg: &CheckConfig) -> Result<VerificationReport> {
    require_undivided(mu)?;
    let theta = &mu.theta;
    let th = theta.comps();
    let per_span = |span: &FiberSpan| -> Result<[f64; 2]> {
        let l = span.chord();
        let origin = theta.lift(&span.y);
        let mut breaks = u.interfaces_along(&origin, th, span.alpha, span.beta);
        breaks.extend(v.interfaces_along(&origin, th, span.alpha, span.beta));
        let [vol] = integrate_vec(
            |t| {
                let x = fiber_point(theta, span, t);
                let (uu, du) = u.value_and_directional(&x, th);
                let (vv, dv) = v.value_and_directional(&x, th);
                Ok([uu * dv + vv * du])
            },
            span.alpha,
            span.beta,
            &breaks,
            &cfg.inner,
        )?;
        let tu = trace_on_span(u, theta, span, &cfg.inner)?;
        let tv = trace_on_span(v, theta, span, &cfg.inner)?;
        let (a, b) = (tu.at_beta.value, tu.at_alpha.value);
        let (a2, b2) = (tv.at_beta.value, tv.at_alpha.value);
        Ok([vol.value / l, (a * a2 - b * b2) / l])
    };
    let [lhs, rhs] = mu.integrate_boundary_vec(&cfg.outer, per_span)?;
    let (tol, budget) = match mu.samples {
        Some(_) => {
            let diffs: Vec<f64> = mu.atoms.iter().map(|a| per_span(&a.span).map(|[l, r]| l - r)).collect::<Result<_>>()?;
            let scale = lhs.value.abs().max(rhs.value.abs()).max(1e-12);
            // the formula holds fiber by fiber, so only rounding remains
            // beyond the sampling spread
            (cfg.slack, mc_budget(mu, &diffs) / scale)
        }
        None => {
            let scale = lhs.value.abs().max(rhs.value.abs());
            let budget = if scale < 1e-12 { lhs.error + rhs.error } else { (lhs.error + rhs.error) / scale };
            (cfg.rel_tol, budget)
        }
    };
    Ok(VerificationReport::new(
        "green",
        mu.domain.kind().name(),
        &format!("u={}; v={}", u.label(), v.label()),
        Some(theta),
        lhs.value,
        rhs.value,
        relative_gap(lhs.value, rhs.value),
        tol,
        budget,
    )
    .with_seed(mu.seed))
}

/// Right-hand side of Green's formula assembled from `G₊` and `G₋`:
/// `∫ (G₊u G₊v − G₋u G₋v) dμ_θ`.
pub fn green_rhs_via_g(u: &dyn ScalarField, v: &dyn ScalarField, mu: &BoundaryMeasure, cfg: &CheckConfig) -> Result<Estimate> {
    require_undivided(mu)?;
    let theta = &mu.theta;
    mu.integrate_boundary_with(&cfg.outer, |span| {
        let tu = trace_on_span(u, theta, span, &cfg.inner)?;
        let tv = trace_on_span(v, theta, span, &cfg.inner)?;
        let (pu, mu_) = g_plus_minus(tu.at_beta.value, tu.at_alpha.value, span.chord())?;
        let (pv, mv) = g_plus_minus(tv.at_beta.value, tv.at_alpha.value, span.chord())?;
        Ok(pu * pv - mu_ * mv)
    })
}

/// The functionals entering the four bounds, computed in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// `∫ (γ_θu)² dμ_θ`.
    pub trace_sq: Estimate,
    /// `∫ (γ_θu + γ_{−θ}u∘z_{−θ})² dμ_θ`.
    pub sum_sq: Estimate,
    /// `∫ ((γ_θu − γ_{−θ}u∘z_{−θ})/ℓ)² dμ_θ`.
    pub diff_sq: Estimate,
    /// `‖u‖²_{L²(Ω)}`.
    pub l2_sq: Estimate,
    /// `‖∂_θu‖²_{L²(Ω)}`.
    pub dtheta_sq: Estimate,
}

impl BoundTerms {
    /// `‖u‖²_θ = ‖u‖² + ‖∂_θu‖²`.
    pub fn norm_theta_sq(&self) -> f64 {
        self.l2_sq.value + self.dtheta_sq.value
    }
}

pub fn bound_terms(u: &dyn ScalarField, mu: &BoundaryMeasure, cfg: &CheckConfig) -> Result<BoundTerms> {
    require_undivided(mu)?;
    let theta = &mu.theta;
    let [t, s, d, l2, dt] = mu.integrate_boundary_vec(&cfg.outer, |span| {
        let l = span.chord();
        let [ib, ia, uu, du] = fiber_terms(u, theta, span, &cfg.inner)?;
        let (a, b) = (ib.value / l, ia.value / l);
        Ok([a * a, (a + b) * (a + b), ((a - b) / l).powi(2), uu.value / l, du.value / l])
    })?;
    Ok(BoundTerms { trace_sq: t, sum_sq: s, diff_sq: d, l2_sq: l2, dtheta_sq: dt })
}

fn bound_report(check: &str, u: &dyn ScalarField, mu: &BoundaryMeasure, lhs: Estimate, rhs: f64, rhs_err: f64, cfg: &CheckConfig) -> VerificationReport {
    VerificationReport::new(check, mu.domain.kind().name(), &u.label(), Some(&mu.theta), lhs.value, rhs, lhs.value - rhs, cfg.slack, lhs.error + rhs_err)
        .with_seed(mu.seed)
}

/// The three boundary bounds from one set of [`BoundTerms`], in the order
/// trace, sum, difference.
pub fn check_trace_bounds(u: &dyn ScalarField, mu: &BoundaryMeasure, cfg: &CheckConfig) -> Result<[VerificationReport; 3]> {
    let t = bound_terms(u, mu, cfg)?;
    let diam = mu.domain.diameter();
    let c = 1f64.max(diam * diam);
    let n = t.norm_theta_sq();
    let ne = t.l2_sq.error + t.dtheta_sq.error;
    Ok([
        bound_report("trace_bound", u, mu, t.trace_sq, 2.0 * c * n, 2.0 * c * ne, cfg),
        bound_report("sum_bound", u, mu, t.sum_sq, 4.0 * c * n, 4.0 * c * ne, cfg),
        bound_report("diff_bound", u, mu, t.diff_sq, n, ne, cfg),
    ])
}

/// `∫ (γ_θu)² dμ_θ ≤ 2 max(1, diam²) ‖u‖²_θ`.
pub fn check_trace_bound(u: &dyn ScalarField, mu: &BoundaryMeasure, cfg: &CheckConfig) -> Result<VerificationReport> {
    Ok(check_trace_bounds(u, mu, cfg)?[0].clone())
}

/// `∫ (γ_θu + γ_{−θ}u∘z_{−θ})² dμ_θ ≤ 4 max(1, diam²) ‖u‖²_θ`.
pub fn check_sum_bound(u: &dyn ScalarField, mu: &BoundaryMeasure, cfg: &CheckConfig) -> Result<VerificationReport> {
    Ok(check_trace_bounds(u, mu, cfg)?[1].clone())
}

/// `∫ ((γ_θu − γ_{−θ}u∘z_{−θ})/ℓ)² dμ_θ ≤ ‖u‖²_θ`.
pub fn check_diff_bound(u: &dyn ScalarField, mu: &BoundaryMeasure, cfg: &CheckConfig) -> Result<VerificationReport> {
    Ok(check_trace_bounds(u, mu, cfg)?[2].clone())
}

/// `‖u‖ ≤ diam ‖∂_θu‖`, only after the traces of `u` at the nodes of `mu`
/// have been found to vanish.
pub fn check_poincare(u: &dyn ScalarField, mu: &BoundaryMeasure, cfg: &CheckConfig) -> Result<VerificationReport> {
    let nodes = mu.nodes(2, 8);
    let mut worst: f64 = 0.0;
    for n in &nodes {
        worst = worst.max(trace_on_span(u, &mu.theta, &n.span, &cfg.inner)?.at_beta.value.abs());
    }
    if worst > cfg.zero_trace {
        return Err(Error::HypothesisViolated(worst));
    }
    let t = bound_terms(u, mu, cfg)?;
    let lhs = t.l2_sq.value.max(0.0).sqrt();
    let rhs = mu.domain.diameter() * t.dtheta_sq.value.max(0.0).sqrt();
    // error of a square root from the error of its argument
    let err = |e: Estimate| if e.value > 0.0 { e.error / (2.0 * e.value.sqrt()) } else { e.error.sqrt() };
    Ok(VerificationReport::new(
        "poincare",
        mu.domain.kind().name(),
        &u.label(),
        Some(&mu.theta),
        lhs,
        rhs,
        lhs - rhs,
        cfg.slack,
        err(t.l2_sq) + mu.domain.diameter() * err(t.dtheta_sq),
    )
    .with_seed(mu.seed)
    .with_detail(format!("max |trace| at {} nodes = {worst:.3e}", nodes.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ExprField, Polynomial};
    use crate::geometry::Domain;
    use crate::measure::{mu_exact, mu_monte_carlo};

    fn square() -> Domain {
        Domain::rectilinear(vec![[0.0, 0.0, 1.0, 1.0]], vec![], vec![]).unwrap()
    }

    fn e(src: &str) -> ExprField {
        ExprField::parse(src, 2).unwrap()
    }

    #[test]
    fn green_examples_on_square() {
        let th = Direction::new(&[1.0, 0.0]).unwrap();
        let mu = mu_exact(&square(), &th).unwrap();
        let r = check_green(&e("x1"), &e("1"), &mu, &CheckConfig::smooth()).unwrap();
        assert!(r.pass && (r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-12, "{r:?}");
        let r = check_green(&e("1"), &e("1"), &mu, &CheckConfig::smooth()).unwrap();
        assert!(r.pass && r.lhs.abs() < 1e-14 && r.rhs.abs() < 1e-14);
    }

    #[test]
    fn green_is_symmetric_and_antisymmetric_in_theta() {
        let th = Direction::from_degrees(30.0).unwrap();
        let (u, v) = (e("x1^2*x2 - x2"), e("sin(x1) + x2^3"));
        let mu = mu_exact(&square(), &th).unwrap();
        let a = check_green(&u, &v, &mu, &CheckConfig::smooth()).unwrap();
        let b = check_green(&v, &u, &mu, &CheckConfig::smooth()).unwrap();
        assert!(a.pass && b.pass);
        assert!((a.lhs - b.lhs).abs() < 1e-12 && (a.rhs - b.rhs).abs() < 1e-12);
        let mu_neg = mu_exact(&square(), &th.negate()).unwrap();
        let c = check_green(&u, &v, &mu_neg, &CheckConfig::smooth()).unwrap();
        assert!((a.lhs + c.lhs).abs() < 1e-10 && (a.rhs + c.rhs).abs() < 1e-10);
    }

    #[test]
    fn green_on_monte_carlo_measure() {
        let th = Direction::from_degrees(60.0).unwrap();
        let mu = mu_monte_carlo(&Domain::cusp(), &th, 20_000, 3).unwrap();
        let r = check_green(&e("x1 + x2^2"), &e("x2"), &mu, &CheckConfig::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.seed, Some(3));
    }

    #[test]
    fn g_pair_reproduces_green() {
        let th = Direction::from_degrees(-20.0).unwrap();
        let mu = mu_exact(&square(), &th).unwrap();
        let (u, v) = (e("x1*x2"), e("x2^2 - x1"));
        let cfg = CheckConfig::smooth();
        let g = green_rhs_via_g(&u, &v, &mu, &cfg).unwrap();
        let r = check_green(&u, &v, &mu, &cfg).unwrap();
        assert!((g.value - r.rhs).abs() < 1e-12);
    }

    #[test]
    fn bound_examples() {
        let th = Direction::new(&[1.0, 0.0]).unwrap();
        let mu = mu_exact(&square(), &th).unwrap();
        let [_, _, diff] = check_trace_bounds(&e("x1"), &mu, &CheckConfig::smooth()).unwrap();
        assert!((diff.lhs - 1.0).abs() < 1e-12 && (diff.rhs - 4.0 / 3.0).abs() < 1e-12 && diff.pass);
        let [t, _, _] = check_trace_bounds(&e("3"), &mu, &CheckConfig::smooth()).unwrap();
        assert!((t.lhs - 9.0).abs() < 1e-12 && (t.rhs - 2.0 * 2.0 * 9.0).abs() < 1e-12);
    }

    #[test]
    fn poincare_example() {
        let th = Direction::new(&[1.0, 0.0]).unwrap();
        let mu = mu_exact(&square(), &th).unwrap();
        let r = check_poincare(&e("sin(pi*x1)"), &mu, &CheckConfig::smooth()).unwrap();
        assert!((r.lhs - 0.5f64.sqrt()).abs() < 1e-10, "{r:?}");
        assert!((r.rhs - std::f64::consts::PI).abs() < 1e-10);
        assert!(r.pass);
        let bad = check_poincare(&e("x1"), &mu, &CheckConfig::smooth());
        assert!(matches!(bad, Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn report_json_round_trip() {
        let th = Direction::new(&[1.0, 0.0]).unwrap();
        let mu = mu_exact(&square(), &th).unwrap();
        let u = Polynomial::new(2, vec![(vec![2, 1], 0.3), (vec![0, 0], -1.0)]);
        let r = check_green(&u, &u, &mu, &CheckConfig::smooth()).unwrap().with_detail("x");
        let text = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
