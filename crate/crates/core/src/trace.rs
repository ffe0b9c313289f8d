//! Directional traces through the one-dimensional kernel
//! `T_β f = (1/(β−α)) ∫_α^β (f(t) + f′(t)(t−α)) dt`.
//!
//! Both ends of a fiber component come out of the same integral: the value
//! at `α` uses `t − β` in place of `t − α`, and is the trace for `−θ` at
//! the partner point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::Domain;
use crate::measure::{BoundaryMeasure, FiberSpan};
use crate::point::{Direction, Point};
use crate::quadrature::{integrate_vec, Estimate, QuadConfig};

/// Trace values at both ends of `]α, β[`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndValues {
    pub at_beta: Estimate,
    pub at_alpha: Estimate,
}

/// `γ_θu` at an exit point, with the `−θ` trace at its partner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub z: Point,
    pub theta: Direction,
    pub value: f64,
    pub quadrature_error: f64,
    pub chord: f64,
    /// `z_{−θ}(z)`.
    pub partner: Point,
    /// `γ_{−θ}u(z_{−θ}(z))`.
    pub partner_value: f64,
}

/// Evaluates the kernel on `]α, β[` given `f` and `Df`.
pub fn trace_1d<F, D>(f: F, df: D, alpha: f64, beta: f64, cfg: &QuadConfig) -> Result<EndValues>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    trace_1d_split(|t| (f(t), df(t)), alpha, beta, &[], cfg)
}

fn trace_1d_split<G>(g: G, alpha: f64, beta: f64, breaks: &[f64], cfg: &QuadConfig) -> Result<EndValues>
where
    G: Fn(f64) -> (f64, f64),
{
    if !(alpha < beta) {
        return Err(Error::ZeroChord);
    }
    let l = beta - alpha;
    let [b, a] = integrate_vec(
        |t| {
            let (v, dv) = g(t);
            Ok([v + dv * (t - alpha), v + dv * (t - beta)])
        },
        alpha,
        beta,
        breaks,
        cfg,
    )?;
    let scale = |e: Estimate| Estimate { value: e.value / l, error: e.error / l };
    Ok(EndValues { at_beta: scale(b), at_alpha: scale(a) })
}

/// Trace values of `u` at both ends of a fiber component. Quadrature
/// panels never straddle the field's declared interfaces.
pub fn trace_on_span(field: &dyn ScalarField, theta: &Direction, span: &FiberSpan, cfg: &QuadConfig) -> Result<EndValues> {
    let origin = theta.lift(&span.y);
    let th = theta.comps();
    let breaks = field.interfaces_along(&origin, th, span.alpha, span.beta);
    trace_1d_split(
        |t| {
            let x: Point = origin.iter().zip(th).map(|(o, c)| o + t * c).collect();
            field.value_and_directional(&x, th)
        },
        span.alpha,
        span.beta,
        &breaks,
        cfg,
    )
}

fn sample(theta: &Direction, span: &FiberSpan, ends: EndValues) -> TraceSample {
    TraceSample {
        z: span.z.clone(),
        theta: theta.clone(),
        value: ends.at_beta.value,
        quadrature_error: ends.at_beta.error,
        chord: span.chord(),
        partner: span.partner(theta),
        partner_value: ends.at_alpha.value,
    }
}

/// `γ_θu(z_θ(x))` from the fiber component through the interior point `x`.
pub fn trace_at(field: &dyn ScalarField, domain: &Domain, theta: &Direction, x: &[f64]) -> Result<TraceSample> {
    trace_at_with(field, domain, theta, x, &QuadConfig::default())
}

pub fn trace_at_with(field: &dyn ScalarField, domain: &Domain, theta: &Direction, x: &[f64], cfg: &QuadConfig) -> Result<TraceSample> {
    let (y, s, a, b) = domain.locate(x, theta)?;
    let mut span = FiberSpan::new(theta, &y, a, b);
    span.z = crate::point::axpy(x, b - s, theta.comps());
    let ends = trace_on_span(field, theta, &span, cfg)?;
    Ok(sample(theta, &span, ends))
}

/// Anchoring of boundary nodes: interior points `z − tθ` are tried from
/// `t = factor · scale` down through `halvings` halvings, where `scale` is
/// the chord when known and the diameter otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorRule {
    pub factor: f64,
    pub halvings: u32,
}

impl Default for AnchorRule {
    fn default() -> Self {
        Self { factor: 1e-3, halvings: 40 }
    }
}

/// Interior anchor for `z` along θ, if `z` is an exit point in direction θ.
pub fn anchor(domain: &Domain, z: &[f64], theta: &Direction, scale: f64, rule: &AnchorRule) -> Option<Point> {
    let tol = 1e-9 * domain.diameter();
    let mut t = rule.factor * scale;
    for _ in 0..=rule.halvings {
        let x = crate::point::axpy(z, -t, theta.comps());
        if domain.contains(&x) {
            if let Ok(rec) = domain.exit_record(&x, theta) {
                if crate::point::dist(&rec.z_plus, z) <= tol {
                    return Some(x);
                }
            }
        }
        t *= 0.5;
    }
    None
}

/// `γ_θu(z)` at a boundary point, anchored with the default rule.
pub fn trace_at_boundary(field: &dyn ScalarField, domain: &Domain, theta: &Direction, z: &[f64]) -> Result<TraceSample> {
    let x = anchor(domain, z, theta, domain.diameter(), &AnchorRule::default()).ok_or_else(|| Error::AnchorFailure(vec![Point::from_slice(z)]))?;
    let mut s = trace_at(field, domain, theta, &x)?;
    s.z = Point::from_slice(z);
    Ok(s)
}

/// Traces at arbitrary boundary points, anchoring each one. Points that
/// cannot be anchored are returned separately.
pub fn trace_points(
    field: &dyn ScalarField,
    domain: &Domain,
    theta: &Direction,
    points: &[(Point, Option<f64>)],
    rule: &AnchorRule,
    cfg: &QuadConfig,
) -> (Vec<Option<TraceSample>>, Vec<Point>) {
    let results: Vec<Option<TraceSample>> = points
        .par_iter()
        .map(|(z, chord)| {
            let scale = chord.unwrap_or(domain.diameter());
            let x = anchor(domain, z, theta, scale, rule)?;
            let mut s = trace_at_with(field, domain, theta, &x, cfg).ok()?;
            s.z = z.clone();
            Some(s)
        })
        .collect();
    let failed = points.iter().zip(&results).filter(|(_, r)| r.is_none()).map(|((z, _), _)| z.clone()).collect();
    (results, failed)
}

/// One trace sample per node of `mu` (atoms and sheet nodes), each node
/// anchored independently from its exit point.
pub fn trace_field(field: &dyn ScalarField, domain: &Domain, mu: &BoundaryMeasure, rule: &AnchorRule, panels: usize, order: usize) -> Result<Vec<TraceSample>> {
    let nodes = mu.nodes(panels, order);
    let points: Vec<(Point, Option<f64>)> = nodes.iter().map(|n| (n.span.z.clone(), Some(n.span.chord()))).collect();
    let (samples, failed) = trace_points(field, domain, &mu.theta, &points, rule, &QuadConfig::default());
    if !failed.is_empty() {
        return Err(Error::AnchorFailure(failed));
    }
    Ok(samples.into_iter().flatten().collect())
}

/// `c·(a + b ± (a − b)/ℓ)` with `c = 1/2`, the constant for which
/// `G₊u G₊v − G₋u G₋v = (aa′ − bb′)/ℓ`.
pub fn g_plus_minus(a: f64, b: f64, ell: f64) -> Result<(f64, f64)> {
    if !(ell > 0.0) {
        return Err(Error::ZeroChord);
    }
    const C: f64 = 0.5;
    let (s, d) = (a + b, (a - b) / ell);
    Ok((C * (s + d), C * (s - d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ExprField, FnField};
    use crate::measure::mu_exact;

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    #[test]
    fn kernel_examples() {
        let e = trace_1d(|s| s, |_| 1.0, 0.0, 1.0, &cfg()).unwrap();
        assert!((e.at_beta.value - 1.0).abs() < 1e-14 && e.at_alpha.value.abs() < 1e-14);
        let e = trace_1d(|s| s * s, |s| 2.0 * s, 0.0, 1.0, &cfg()).unwrap();
        assert!((e.at_beta.value - 1.0).abs() < 1e-14);
        let pi = std::f64::consts::PI;
        let e = trace_1d(|s| (pi * s).cos(), |s| -pi * (pi * s).sin(), 0.0, 1.0, &cfg()).unwrap();
        assert!((e.at_beta.value + 1.0).abs() < 1e-12);
        assert!((e.at_alpha.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(matches!(trace_1d(|s| s, |_| 1.0, 1.0, 1.0, &cfg()), Err(Error::ZeroChord)));
    }

    #[test]
    fn smooth_trace_on_square() {
        let sq = Domain::rectilinear(vec![[0.0, 0.0, 1.0, 1.0]], vec![], vec![]).unwrap();
        let u = ExprField::parse("x1", 2).unwrap();
        let th = Direction::new(&[1.0, 0.0]).unwrap();
        let s = trace_at(&u, &sq, &th, &[0.3, 0.5]).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert_eq!(s.z.to_vec(), vec![1.0, 0.5]);
        assert!(s.partner_value.abs() < 1e-12);
    }

    #[test]
    fn cusp_singular_field() {
        let u = ExprField::parse("x2^-0.75", 2).unwrap();
        let th = Direction::new(&[1.0, 0.0]).unwrap();
        let s = trace_at(&u, &Domain::cusp(), &th, &[0.0, 0.5]).unwrap();
        assert!((s.value - 0.5f64.powf(-0.75)).abs() < 1e-9);
        assert!((s.z[0] - 0.125).abs() < 1e-15);
        // vertical fibers off the axis start at x₂ = x₁^{1/3} > 0
        let up = Direction::new(&[0.0, 1.0]).unwrap();
        let s = trace_at(&u, &Domain::cusp(), &up, &[1e-3, 0.5]).unwrap();
        assert!((s.partner[1] - 0.1).abs() < 1e-12);
        assert!((s.partner_value - 0.1f64.powf(-0.75)).abs() < 1e-8);
        assert!((s.value - 1.0).abs() < 1e-8, "{s:?}");
    }

    #[test]
    fn fisund_traces() {
        let d = Domain::intervals(vec![(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let u = FnField::new(1, "fisund", |x| if x[0] < 1.0 { x[0] } else { x[0] - 1.0 }, |_| crate::point::point(&[1.0]));
        let plus = Direction::new(&[1.0]).unwrap();
        let minus = plus.negate();
        assert!((trace_at(&u, &d, &plus, &[0.5]).unwrap().value - 1.0).abs() < 1e-12);
        let s = trace_at(&u, &d, &minus, &[1.5]).unwrap();
        assert!(s.value.abs() < 1e-12 && (s.z[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn field_traces_on_square() {
        let sq = Domain::rectilinear(vec![[0.0, 0.0, 1.0, 1.0]], vec![], vec![]).unwrap();
        let u = ExprField::parse("x1*x2", 2).unwrap();
        let th = Direction::new(&[1.0, 0.0]).unwrap();
        let mu = mu_exact(&sq, &th).unwrap();
        let t = trace_field(&u, &sq, &mu, &AnchorRule::default(), 2, 8).unwrap();
        assert_eq!(t.len(), 16);
        for s in t {
            assert!((s.value - s.z[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn g_constant_fixed_by_identity() {
        let (gp, gm) = g_plus_minus(1.0, -1.0, 2.0).unwrap();
        assert!((gp - 0.5).abs() < 1e-15 && (gm + 0.5).abs() < 1e-15);
        let (p, m) = g_plus_minus(1.0, 0.0, 1.0).unwrap();
        assert!((p * p - m * m - 1.0).abs() < 1e-15);
        assert!(matches!(g_plus_minus(1.0, 1.0, 0.0), Err(Error::ZeroChord)));
    }
}
