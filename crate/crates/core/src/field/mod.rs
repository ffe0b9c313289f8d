//! Scalar fields `u` with gradients, as used by the trace formula.

pub mod expr;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::point::{dot, Point};

pub use expr::Expr;

/// A candidate `u ∈ H¹(Ω)` given by evaluators for `u` and `∇u`.
///
/// Implementations must be stateless: evaluators are called concurrently.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Point;

    /// `(u(x), ∂_θ u(x))`.
    fn value_and_directional(&self, x: &[f64], theta: &[f64]) -> (f64, f64) {
        (self.value(x), dot(&self.gradient(x), theta))
    }

    fn label(&self) -> String;

    /// Parameters `s ∈ (lo, hi)` where `origin + s θ` crosses a set across
    /// which `u` is not smooth. Quadrature panels never straddle them.
    fn interfaces_along(&self, _origin: &[f64], _theta: &[f64], _lo: f64, _hi: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Smooth piece containing `x`; finite differences only compare values
    /// inside one piece.
    fn component(&self, _x: &[f64]) -> usize {
        0
    }
}

impl fmt::Debug for dyn ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.label())
    }
}

/// Field given by an [`Expr`].
#[derive(Debug, Clone)]
pub struct ExprField {
    expr: Expr,
    dim: usize,
}

impl ExprField {
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        let expr = Expr::parse(src)?;
        if dim == 0 || dim > 3 {
            return Err(Error::Expression(format!("expression fields support 1 to 3 coordinates, not {dim}")));
        }
        if expr.arity() > dim {
            return Err(Error::DimensionMismatch { expected: dim, got: expr.arity() });
        }
        Ok(Self { expr, dim })
    }

    pub fn source(&self) -> &str {
        self.expr.source()
    }
}

impl ScalarField for ExprField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.expr.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Point {
        let (_, g) = self.expr.eval_grad(x);
        SmallVec::from_slice(&g[..self.dim])
    }

    fn value_and_directional(&self, x: &[f64], theta: &[f64]) -> (f64, f64) {
        let (v, g) = self.expr.eval_grad(x);
        (v, dot(&g[..self.dim], theta))
    }

    fn label(&self) -> String {
        self.expr.source().to_string()
    }
}

/// Polynomial `Σ c_k x^{e_k}` in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(SmallVec<[u32; 3]>, f64)>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(Vec<u32>, f64)>) -> Self {
        let mut p = Self { dim, terms: terms.into_iter().map(|(e, c)| (SmallVec::from_vec(e), c)).collect() };
        p.normalize();
        p
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, vec![(vec![0; dim], c)])
    }

    /// Linear form `Σ a_i x_i + b`.
    pub fn affine(a: &[f64], b: f64) -> Self {
        let d = a.len();
        let mut terms = vec![(vec![0; d], b)];
        for (i, &ai) in a.iter().enumerate() {
            let mut e = vec![0; d];
            e[i] = 1;
            terms.push((e, ai));
        }
        Self::new(d, terms)
    }

    /// Random coefficients uniform in `[−1, 1]` on all monomials of total
    /// degree ≤ `degree`.
    pub fn random<R: Rng>(dim: usize, degree: u32, rng: &mut R) -> Self {
        let mut terms = Vec::new();
        let mut e = vec![0u32; dim];
        loop {
            if e.iter().sum::<u32>() <= degree {
                terms.push((e.clone(), rng.random_range(-1.0..=1.0)));
            }
            let mut k = 0;
            loop {
                if k == dim {
                    return Self::new(dim, terms);
                }
                e[k] += 1;
                if e[k] <= degree {
                    break;
                }
                e[k] = 0;
                k += 1;
            }
        }
    }

    fn normalize(&mut self) {
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(SmallVec<[u32; 3]>, f64)> = Vec::with_capacity(self.terms.len());
        for (e, c) in self.terms.drain(..) {
            match out.last_mut() {
                Some((le, lc)) if *le == e => *lc += c,
                _ => out.push((e, c)),
            }
        }
        out.retain(|(_, c)| *c != 0.0);
        self.terms = out;
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                terms.push((ea.iter().zip(eb).map(|(a, b)| a + b).collect::<Vec<_>>(), ca * cb));
            }
        }
        Self::new(self.dim, terms)
    }

    pub fn add(&self, other: &Self) -> Self {
        let terms = self.terms.iter().chain(&other.terms).map(|(e, c)| (e.to_vec(), *c)).collect();
        Self::new(self.dim, terms)
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }

    fn powers(&self, x: &[f64]) -> SmallVec<[SmallVec<[f64; 16]>; 3]> {
        let deg = self.degree() as usize;
        x.iter()
            .take(self.dim)
            .map(|&xi| {
                let mut p: SmallVec<[f64; 16]> = SmallVec::with_capacity(deg + 1);
                p.push(1.0);
                for k in 1..=deg {
                    p.push(p[k - 1] * xi);
                }
                p
            })
            .collect()
    }
}

impl ScalarField for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let pw = self.powers(x);
        self.terms.iter().map(|(e, c)| c * e.iter().enumerate().map(|(i, &k)| pw[i][k as usize]).product::<f64>()).sum()
    }

    fn gradient(&self, x: &[f64]) -> Point {
        let pw = self.powers(x);
        let mut g: Point = SmallVec::from_elem(0.0, self.dim);
        for (e, c) in &self.terms {
            for (j, gj) in g.iter_mut().enumerate() {
                if e[j] == 0 {
                    continue;
                }
                let mut t = c * e[j] as f64;
                for (i, &k) in e.iter().enumerate() {
                    t *= if i == j { pw[i][k as usize - 1] } else { pw[i][k as usize] };
                }
                *gj += t;
            }
        }
        g
    }

    fn label(&self) -> String {
        let names = ["x1", "x2", "x3"];
        let mut s = String::new();
        for (e, c) in &self.terms {
            if !s.is_empty() {
                s.push_str(" + ");
            }
            s.push_str(&format!("{c:?}"));
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => s.push_str(&format!("*{}", names.get(i).unwrap_or(&"x"))),
                    _ => s.push_str(&format!("*{}^{k}", names.get(i).unwrap_or(&"x"))),
                }
            }
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Point + Send + Sync;
type InterfaceFn = dyn Fn(&[f64], &[f64], f64, f64) -> Vec<f64> + Send + Sync;
type ComponentFn = dyn Fn(&[f64]) -> usize + Send + Sync;

/// Field defined by closures; used for piecewise gallery fields.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    label: String,
    value: Arc<ValueFn>,
    grad: Arc<GradFn>,
    interfaces: Option<Arc<InterfaceFn>>,
    component: Option<Arc<ComponentFn>>,
}

impl FnField {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self { dim, label: label.into(), value: Arc::new(value), grad: Arc::new(grad), interfaces: None, component: None }
    }

    pub fn with_interfaces(mut self, f: impl Fn(&[f64], &[f64], f64, f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.interfaces = Some(Arc::new(f));
        self
    }

    pub fn with_components(mut self, f: impl Fn(&[f64]) -> usize + Send + Sync + 'static) -> Self {
        self.component = Some(Arc::new(f));
        self
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnField({})", self.label)
    }
}

impl ScalarField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Point {
        (self.grad)(x)
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn interfaces_along(&self, origin: &[f64], theta: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        self.interfaces.as_ref().map_or_else(Vec::new, |f| f(origin, theta, lo, hi))
    }

    fn component(&self, x: &[f64]) -> usize {
        self.component.as_ref().map_or(0, |f| f(x))
    }
}

/// Parameters where `origin + s θ` crosses the hyperplane `x_axis = level`,
/// restricted to `(lo, hi)`.
pub fn crossings_of_level(origin: &[f64], theta: &[f64], axis: usize, levels: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    if theta[axis] == 0.0 {
        return Vec::new();
    }
    levels.iter().map(|l| (l - origin[axis]) / theta[axis]).filter(|s| *s > lo && *s < hi).collect()
}

/// Worst relative mismatch between `∂_θ u` from the gradient and a centered
/// difference with step `h`, over the given points and directions. Points
/// whose stencil leaves the domain or the smooth piece are skipped.
pub fn gradient_mismatch(field: &dyn ScalarField, points: &[Point], thetas: &[Point], h: f64, inside: impl Fn(&[f64]) -> bool) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (x, th) in points.iter().zip(thetas.iter().cycle()) {
        let xp: Point = x.iter().zip(th).map(|(a, b)| a + h * b).collect();
        let xm: Point = x.iter().zip(th).map(|(a, b)| a - h * b).collect();
        if !inside(&xp) || !inside(&xm) {
            continue;
        }
        let c = field.component(x);
        if field.component(&xp) != c || field.component(&xm) != c {
            continue;
        }
        let fd = (field.value(&xp) - field.value(&xm)) / (2.0 * h);
        let an = dot(&field.gradient(x), th);
        worst = worst.max((fd - an).abs() / an.abs().max(1.0));
        checked += 1;
    }
    (worst, checked)
}
