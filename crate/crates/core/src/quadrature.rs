//! Composite Gauss–Legendre quadrature on graded meshes.
//!
//! Every integration starts from a mesh graded dyadically toward both ends
//! of each smooth segment, then refines globally by bisecting the panel with
//! the largest two-level error estimate `|GL(panel) − GL(halves)|`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::point;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared rule of order `n` (cached for n ≤ 64).
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static CACHE: [OnceLock<GaussLegendre>; 65] = [const { OnceLock::new() }; 65];
        assert!((1..=64).contains(&n), "cached Gauss–Legendre order must be in 1..=64");
        CACHE[n].get_or_init(|| GaussLegendre::new(n))
    }

    /// Nodes mapped to `[a, b]` with scaled weights.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, h * w))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Settings for [`integrate`] and [`integrate_vec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Points per panel.
    pub order: usize,
    /// Equal panels each graded panel is cut into before adapting.
    #[serde(default = "one")]
    pub panels: usize,
    /// Dyadic grading levels toward each end of every smooth segment.
    pub grading_levels: u32,
    /// Bisections allowed below an initial panel.
    pub max_levels: u32,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

fn one() -> usize {
    1
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { order: 16, panels: 1, grading_levels: 2, max_levels: 60, abs_tol: 1e-9, rel_tol: 1e-9, max_evals: 4_000_000 }
    }
}

impl QuadConfig {
    /// One refinement doubling: every initial panel bisected, one more
    /// grading level, and the tolerance halved.
    pub fn refined(&self) -> Self {
        Self { panels: 2 * self.panels.max(1), grading_levels: self.grading_levels + 1, abs_tol: self.abs_tol / 2.0, rel_tol: self.rel_tol / 2.0, ..*self }
    }

    pub fn with_order(self, order: usize) -> Self {
        Self { order, ..self }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Self { abs_tol: tol, rel_tol: tol, ..self }
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol + self.rel_tol * value.abs()
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, error: self.error + o.error }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Self {
        iter.fold(Estimate::default(), |a, b| a + b)
    }
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    depth: u32,
    halves: [[f64; N]; 2],
    err: [f64; N],
    priority: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, o: &Self) -> bool {
        self.priority.total_cmp(&o.priority) == Ordering::Equal
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.priority.total_cmp(&o.priority)
    }
}

struct Engine<'a, const N: usize, F> {
    f: F,
    rule: &'a GaussLegendre,
    evals: usize,
}

impl<const N: usize, F: FnMut(f64) -> Result<[f64; N]>> Engine<'_, N, F> {
    fn rule(&mut self, a: f64, b: f64) -> Result<[f64; N]> {
        let mut acc = [0.0; N];
        for (t, w) in self.rule.mapped(a, b) {
            let v = (self.f)(t)?;
            for k in 0..N {
                if !v[k].is_finite() {
                    return Err(Error::NonFiniteIntegrand(point(&[t])));
                }
                acc[k] += w * v[k];
            }
        }
        self.evals += self.rule.nodes.len();
        Ok(acc)
    }

    fn panel(&mut self, a: f64, b: f64, whole: [f64; N], depth: u32) -> Result<Panel<N>> {
        let m = 0.5 * (a + b);
        let l = self.rule(a, m)?;
        let r = self.rule(m, b)?;
        let mut err = [0.0; N];
        for k in 0..N {
            err[k] = (l[k] + r[k] - whole[k]).abs();
        }
        Ok(Panel { a, b, depth, halves: [l, r], err, priority: err.iter().cloned().fold(0.0, f64::max) })
    }
}

fn graded_panels(a: f64, b: f64, levels: u32) -> Vec<(f64, f64)> {
    if levels == 0 {
        return vec![(a, b)];
    }
    let h = 0.5 * (b - a);
    let mut cuts = vec![a];
    for k in (1..=levels).rev() {
        cuts.push(a + h / f64::powi(2.0, k as i32));
    }
    cuts.push(a + h);
    for k in 1..=levels {
        cuts.push(b - h / f64::powi(2.0, k as i32));
    }
    cuts.push(b);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Integrates `N` integrands at once over `[a, b]`, never placing a panel
/// across any of `breakpoints`.
pub fn integrate_vec<const N: usize, F>(f: F, a: f64, b: f64, breakpoints: &[f64], cfg: &QuadConfig) -> Result<[Estimate; N]>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    let mut out = [Estimate::default(); N];
    if b <= a {
        return Ok(out);
    }
    let mut cuts: Vec<f64> = breakpoints.iter().cloned().filter(|t| *t > a && *t < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.insert(0, a);
    cuts.push(b);

    let mut eng = Engine { f, rule: GaussLegendre::cached(cfg.order), evals: 0 };
    let mut heap = BinaryHeap::new();
    let mut frozen_err = [0.0; N];
    for seg in cuts.windows(2) {
        for (ga, gb) in graded_panels(seg[0], seg[1], cfg.grading_levels) {
            let n = cfg.panels.max(1);
            let h = (gb - ga) / n as f64;
            for i in 0..n {
                let (pa, pb) = (ga + i as f64 * h, if i + 1 == n { gb } else { ga + (i + 1) as f64 * h });
                let whole = eng.rule(pa, pb)?;
                heap.push(eng.panel(pa, pb, whole, 0)?);
            }
        }
    }

    loop {
        let mut value = [0.0; N];
        let mut err = frozen_err;
        for p in heap.iter() {
            for k in 0..N {
                value[k] += p.halves[0][k] + p.halves[1][k];
                err[k] += p.err[k];
            }
        }
        let converged = (0..N).all(|k| err[k] <= cfg.tolerance(value[k]));
        let refinable = heap.peek().is_some_and(|p| p.priority > 0.0);
        if converged || !refinable || eng.evals >= cfg.max_evals {
            if !converged {
                let (k, _) = (0..N).map(|k| (k, err[k] - cfg.tolerance(value[k]))).fold((0, f64::MIN), |m, c| if c.1 > m.1 { c } else { m });
                return Err(Error::QuadratureNoConverge { estimate: err[k], tolerance: cfg.tolerance(value[k]) });
            }
            for k in 0..N {
                out[k] = Estimate { value: value[k], error: err[k] };
            }
            return Ok(out);
        }
        let p = heap.pop().expect("refinable panel");
        if p.depth >= cfg.max_levels {
            for k in 0..N {
                frozen_err[k] += p.err[k];
            }
            // keep its value, drop it from further refinement
            heap.push(Panel { err: [0.0; N], priority: 0.0, ..p });
            continue;
        }
        let m = 0.5 * (p.a + p.b);
        heap.push(eng.panel(p.a, m, p.halves[0], p.depth + 1)?);
        heap.push(eng.panel(m, p.b, p.halves[1], p.depth + 1)?);
    }
}

/// Scalar version of [`integrate_vec`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, breakpoints: &[f64], cfg: &QuadConfig) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    let [e] = integrate_vec(|t| Ok([f(t)?]), a, b, breakpoints, cfg)?;
    Ok(e)
}

/// Fixed composite rule: `panels` equal panels of the given order. Returns
/// `(node, weight)` pairs; used where a deterministic node set is needed.
pub fn fixed_nodes(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::cached(order);
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|i| {
            let pa = a + i as f64 * h;
            rule.mapped(pa, pa + h).collect::<Vec<_>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 33] {
            let r = GaussLegendre::new(n);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let q: f64 = r.mapped(0.0, 1.0).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let r = GaussLegendre::cached(16);
        for w in r.nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..16 {
            assert_eq!(r.nodes[i], -r.nodes[15 - i]);
        }
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 t^{-1/2} dt = 2
        let cfg = QuadConfig::default();
        let e = integrate(|t| Ok(t.powf(-0.5)), 0.0, 1.0, &[], &cfg).unwrap();
        assert!((e.value - 2.0).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn indicator_converges() {
        let cfg = QuadConfig::default().with_tol(1e-10);
        let e = integrate(|t| Ok(if t <= 0.3 { 1.0 } else { 0.0 }), 0.0, 1.0, &[], &cfg).unwrap();
        assert!((e.value - 0.3).abs() < 1e-9, "{e:?}");
    }

    #[test]
    fn breakpoints_split_jumps() {
        let cfg = QuadConfig::default();
        let e = integrate(|t| Ok(if t < 0.25 { 0.0 } else { 1.0 }), 0.0, 1.0, &[0.25], &cfg).unwrap();
        assert!((e.value - 0.75).abs() < 1e-14);
    }

    #[test]
    fn vector_integrands() {
        let cfg = QuadConfig::default();
        let [a, b] = integrate_vec(|t| Ok([t.sin(), t.cos()]), 0.0, 1.0, &[], &cfg).unwrap();
        assert!((a.value - (1.0 - 1f64.cos())).abs() < 1e-13);
        assert!((b.value - 1f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn non_finite_reported() {
        let cfg = QuadConfig::default();
        let r = integrate(|_| Ok(f64::NAN), 0.0, 1.0, &[], &cfg);
        assert!(matches!(r, Err(Error::NonFiniteIntegrand(_))));
    }

    #[test]
    fn no_converge_reported() {
        let cfg = QuadConfig { max_levels: 2, grading_levels: 0, ..QuadConfig::default() };
        let r = integrate(|t| Ok((1.0 / t.max(1e-300)).sin() / t.max(1e-300)), 0.0, 1.0, &[], &cfg);
        assert!(matches!(r, Err(Error::QuadratureNoConverge { .. })));
    }
}
