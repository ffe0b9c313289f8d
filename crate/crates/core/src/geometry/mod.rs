//! Bounded open domains, ray exits and fiber decompositions.
//!
//! For a direction θ and a point `y` of the hyperplane `H_θ`, the fiber
//! `ω_θ(y) = {s : sθ + y ∈ Ω}` is a union of open intervals. The exit
//! distance, exit point and chord of an interior point all come from the
//! fiber interval that contains it.

mod buckets;
pub mod cantor;
pub mod cusp;
mod oracle;
pub mod planar;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Expr;
use crate::point::{axpy, dist, dot, point, Direction, Point};

pub use cantor::CantorSlit;
use oracle::Oracle;
use planar::{Planar, Seg};

/// Structural kind of a [`Domain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    IntervalUnion,
    Rectilinear,
    Polygon,
    Cusp,
    Oracle,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::IntervalUnion => "interval_union",
            Self::Rectilinear => "rectilinear",
            Self::Polygon => "polygon",
            Self::Cusp => "cusp",
            Self::Oracle => "oracle",
        }
    }
}

/// JSON description of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    IntervalUnion {
        intervals: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bbox: Option<[Vec<f64>; 2]>,
    },
    Rectilinear {
        boxes: Vec<[f64; 4]>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        slits: Vec<Seg>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        cantor_slits: Vec<CantorSlit>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bbox: Option<[Vec<f64>; 2]>,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        slits: Vec<Seg>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        cantor_slits: Vec<CantorSlit>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bbox: Option<[Vec<f64>; 2]>,
    },
    Cusp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bbox: Option<[Vec<f64>; 2]>,
    },
    /// Membership `expr > 0` inside `bbox`.
    Oracle {
        expr: String,
        bbox: [Vec<f64>; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<f64>,
    },
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: Point,
    pub hi: Point,
}

impl BBox {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| v >= a && v <= b)
    }

    fn pair(&self) -> [Vec<f64>; 2] {
        [self.lo.to_vec(), self.hi.to_vec()]
    }
}

enum Shape {
    Intervals(Vec<(f64, f64)>),
    Planar(Planar),
    Cusp,
    Oracle(Oracle),
}

struct Inner {
    shape: Shape,
    bbox: BBox,
    diameter: f64,
    eta: f64,
    spec: Option<DomainSpec>,
}

/// A bounded open set. Cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct Domain(Arc<Inner>);

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain").field("kind", &self.kind()).field("bbox", &self.0.bbox).field("diameter", &self.0.diameter).finish()
    }
}

/// Ordered components `]α, β[` of `ω_θ(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    pub theta: Direction,
    pub y: Point,
    pub intervals: Vec<(f64, f64)>,
}

impl Fiber {
    /// The point `sθ + y`.
    pub fn point(&self, s: f64) -> Point {
        self.theta.line_point(&self.y, s)
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

/// Two-sided exit data of an interior point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub x: Point,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub z_plus: Point,
    pub z_minus: Point,
    pub chord: f64,
}

/// Orthogonal projection onto `H_θ` in the frame of `theta`.
pub fn project(x: &[f64], theta: &Direction) -> Point {
    theta.project(x)
}

fn check_intervals(mut iv: Vec<(f64, f64)>) -> Result<Vec<(f64, f64)>> {
    if iv.is_empty() {
        return Err(Error::InvalidDomain("no intervals".into()));
    }
    for &(a, b) in &iv {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidDomain(format!("interval ]{a},{b}[ has no positive length")));
        }
    }
    iv.sort_by(|p, q| p.0.total_cmp(&q.0));
    for w in iv.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::InvalidDomain(format!("intervals {:?} and {:?} overlap", w[0], w[1])));
        }
    }
    Ok(iv)
}

impl Domain {
    fn wrap(shape: Shape, bbox: BBox, diameter: f64, spec: Option<DomainSpec>) -> Self {
        Self(Arc::new(Inner { shape, bbox, diameter, eta: 1e-13 * diameter, spec }))
    }

    /// Disjoint open intervals of the line.
    pub fn intervals(iv: Vec<(f64, f64)>) -> Result<Self> {
        let iv = check_intervals(iv)?;
        let (lo, hi) = (iv[0].0, iv[iv.len() - 1].1);
        let spec = DomainSpec::IntervalUnion { intervals: iv.iter().map(|&(a, b)| [a, b]).collect(), bbox: None };
        let bbox = BBox { lo: point(&[lo]), hi: point(&[hi]) };
        Ok(Self::wrap(Shape::Intervals(iv), bbox, hi - lo, Some(spec)))
    }

    /// Union of open boxes `]x0,x1[ × ]y0,y1[`, minus closed slits and Cantor obstacles.
    pub fn rectilinear(boxes: Vec<[f64; 4]>, slits: Vec<Seg>, cantor: Vec<CantorSlit>) -> Result<Self> {
        let spec = DomainSpec::Rectilinear { boxes: boxes.clone(), slits: slits.clone(), cantor_slits: cantor.clone(), bbox: None };
        Ok(Self::planar(Planar::boxes(boxes, slits, cantor)?, spec))
    }

    /// Interior of a simple polygon, minus closed slits and Cantor obstacles.
    pub fn polygon(vertices: Vec<[f64; 2]>, slits: Vec<Seg>, cantor: Vec<CantorSlit>) -> Result<Self> {
        let p = Planar::polygon(vertices, slits.clone(), cantor.clone())?;
        let spec = DomainSpec::Polygon {
            vertices: match &p.base {
                planar::Base::Polygon { vertices, .. } => vertices.clone(),
                planar::Base::Boxes { .. } => unreachable!(),
            },
            slits,
            cantor_slits: cantor,
            bbox: None,
        };
        Ok(Self::planar(p, spec))
    }

    fn planar(p: Planar, spec: DomainSpec) -> Self {
        let bbox = BBox { lo: point(&[p.bbox[0], p.bbox[1]]), hi: point(&[p.bbox[2], p.bbox[3]]) };
        let d = p.diameter();
        Self::wrap(Shape::Planar(p), bbox, d, Some(spec))
    }

    /// `{−x₂³ < x₁ < x₂³, 0 < x₂ < 1}`.
    pub fn cusp() -> Self {
        let bbox = BBox { lo: point(&[-1.0, 0.0]), hi: point(&[1.0, 1.0]) };
        Self::wrap(Shape::Cusp, bbox, 2.0, Some(DomainSpec::Cusp { bbox: None }))
    }

    /// `{x ∈ bbox : expr(x) > 0}`, resolved by marching with step `h`.
    pub fn oracle_expr(src: &str, lo: &[f64], hi: &[f64], h: Option<f64>) -> Result<Self> {
        let expr = Expr::parse(src)?;
        if expr.arity() > lo.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: expr.arity() });
        }
        let spec = DomainSpec::Oracle { expr: src.to_string(), bbox: [lo.to_vec(), hi.to_vec()], h };
        Self::oracle_inner(move |x: &[f64]| expr.eval(x) > 0.0, lo, hi, h, Some(spec))
    }

    /// Membership oracle given as a closure; cannot be exported as JSON.
    pub fn oracle_fn(pred: impl Fn(&[f64]) -> bool + Send + Sync + 'static, lo: &[f64], hi: &[f64], h: Option<f64>) -> Result<Self> {
        Self::oracle_inner(pred, lo, hi, h, None)
    }

    fn oracle_inner(pred: impl Fn(&[f64]) -> bool + Send + Sync + 'static, lo: &[f64], hi: &[f64], h: Option<f64>, spec: Option<DomainSpec>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidDomain("oracle bounding box must be non-empty and finite".into()));
        }
        let diameter = dist(lo, hi);
        let h = h.unwrap_or(diameter / 2048.0);
        if !(h > 0.0) {
            return Err(Error::InvalidDomain("oracle step must be positive".into()));
        }
        let bbox = BBox { lo: point(lo), hi: point(hi) };
        let o = Oracle::new(Arc::new(pred), bbox.clone(), h);
        Ok(Self::wrap(Shape::Oracle(o), bbox, diameter, spec))
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        match spec {
            DomainSpec::IntervalUnion { intervals, .. } => Self::intervals(intervals.iter().map(|v| (v[0], v[1])).collect()),
            DomainSpec::Rectilinear { boxes, slits, cantor_slits, .. } => Self::rectilinear(boxes.clone(), slits.clone(), cantor_slits.clone()),
            DomainSpec::Polygon { vertices, slits, cantor_slits, .. } => Self::polygon(vertices.clone(), slits.clone(), cantor_slits.clone()),
            DomainSpec::Cusp { .. } => Ok(Self::cusp()),
            DomainSpec::Oracle { expr, bbox, h } => Self::oracle_expr(expr, &bbox[0], &bbox[1], *h),
        }
    }

    /// Description with the computed bounding box filled in.
    pub fn spec(&self) -> Result<DomainSpec> {
        let mut s = self.0.spec.clone().ok_or(Error::UnsupportedKind("oracle without expression"))?;
        let b = Some(self.0.bbox.pair());
        match &mut s {
            DomainSpec::IntervalUnion { bbox, .. } | DomainSpec::Rectilinear { bbox, .. } | DomainSpec::Polygon { bbox, .. } | DomainSpec::Cusp { bbox } => {
                *bbox = b
            }
            DomainSpec::Oracle { .. } => {}
        }
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.spec()?)?)
    }

    pub fn kind(&self) -> DomainKind {
        match &self.0.shape {
            Shape::Intervals(_) => DomainKind::IntervalUnion,
            Shape::Planar(p) => match p.base {
                planar::Base::Boxes { .. } => DomainKind::Rectilinear,
                planar::Base::Polygon { .. } => DomainKind::Polygon,
            },
            Shape::Cusp => DomainKind::Cusp,
            Shape::Oracle(_) => DomainKind::Oracle,
        }
    }

    pub fn is_structured(&self) -> bool {
        self.kind() != DomainKind::Oracle
    }

    pub fn dim(&self) -> usize {
        self.0.bbox.lo.len()
    }

    pub fn bbox(&self) -> &BBox {
        &self.0.bbox
    }

    pub fn diameter(&self) -> f64 {
        self.0.diameter
    }

    /// Boundary band width: points closer than this to a wall are not members.
    pub fn eta(&self) -> f64 {
        self.0.eta
    }

    /// Oracle marching step, if any.
    pub fn resolution(&self) -> Option<f64> {
        match &self.0.shape {
            Shape::Oracle(o) => Some(o.h),
            _ => None,
        }
    }

    /// Interval components of a 1-D domain.
    pub fn interval_list(&self) -> Option<&[(f64, f64)]> {
        match &self.0.shape {
            Shape::Intervals(iv) => Some(iv),
            _ => None,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let eta = self.0.eta;
        match &self.0.shape {
            Shape::Intervals(iv) => iv.iter().any(|&(a, b)| x[0] > a + eta && x[0] < b - eta),
            Shape::Planar(p) => p.contains(x),
            Shape::Cusp => cusp::contains(x, eta),
            Shape::Oracle(o) => o.contains(x),
        }
    }

    fn check_dir(&self, theta: &Direction) -> Result<()> {
        if theta.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: theta.dim() });
        }
        Ok(())
    }

    /// Components of `ω_θ(y)` as `(α, β)` pairs, ascending.
    pub fn fiber_intervals(&self, theta: &Direction, y: &[f64]) -> Vec<(f64, f64)> {
        match &self.0.shape {
            Shape::Intervals(iv) => {
                if theta.comps()[0] > 0.0 {
                    iv.clone()
                } else {
                    iv.iter().rev().map(|&(a, b)| (-b, -a)).collect()
                }
            }
            Shape::Planar(p) => p.fiber(theta, y[0]),
            Shape::Cusp => cusp::fiber(theta, y[0], self.0.eta),
            Shape::Oracle(o) => o.fiber(theta, y),
        }
    }

    pub fn fiber(&self, theta: &Direction, y: &[f64]) -> Result<Fiber> {
        self.check_dir(theta)?;
        if y.len() + 1 != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim() - 1, got: y.len() });
        }
        Ok(Fiber { theta: theta.clone(), y: Point::from_slice(y), intervals: self.fiber_intervals(theta, y) })
    }

    /// `(y, s, α, β)`: hyperplane coordinate and line parameter of `x`, and
    /// the fiber interval containing it.
    pub fn locate(&self, x: &[f64], theta: &Direction) -> Result<(Point, f64, f64, f64)> {
        self.check_dir(theta)?;
        if !self.contains(x) {
            return Err(Error::PointNotInterior(Point::from_slice(x)));
        }
        let y = theta.project(x);
        let s = dot(x, theta.comps());
        if let Shape::Oracle(o) = &self.0.shape {
            let plus = o.march(x, theta.comps())?;
            let minus = o.march(x, theta.negate().comps())?;
            return Ok((y, s, s - minus, s + plus));
        }
        let iv = self.fiber_intervals(theta, &y);
        let tol = 1e-9 * self.0.diameter;
        let hit = iv.iter().find(|&&(a, b)| a <= s && s <= b).or_else(|| iv.iter().find(|&&(a, b)| a - tol <= s && s <= b + tol));
        match hit {
            Some(&(a, b)) => Ok((y, s, a.min(s), b.max(s))),
            None => Err(Error::RayUnresolved { origin: Point::from_slice(x) }),
        }
    }

    /// `δ_θ(x) = sup{s ≥ 0 : x + tθ ∈ Ω for t ∈ [0, s[}`.
    pub fn delta_theta(&self, x: &[f64], theta: &Direction) -> Result<f64> {
        let (_, s, _, b) = self.locate(x, theta)?;
        Ok(b - s)
    }

    pub fn exit_record(&self, x: &[f64], theta: &Direction) -> Result<ExitRecord> {
        let (_, s, a, b) = self.locate(x, theta)?;
        let (dp, dm) = (b - s, s - a);
        let th = theta.comps();
        Ok(ExitRecord { x: Point::from_slice(x), delta_plus: dp, delta_minus: dm, z_plus: axpy(x, dp, th), z_minus: axpy(x, -dm, th), chord: dp + dm })
    }

    /// Hyperplane offsets between which the fiber structure of a planar
    /// structured domain does not change. Empty for 1-D domains.
    pub fn critical_offsets(&self, theta: &Direction) -> Result<Vec<f64>> {
        self.check_dir(theta)?;
        match &self.0.shape {
            Shape::Intervals(_) => Ok(Vec::new()),
            Shape::Planar(p) => Ok(p.critical_offsets(theta)),
            Shape::Cusp => Ok(cusp::critical_offsets(theta)),
            Shape::Oracle(_) => Err(Error::UnsupportedKind("oracle")),
        }
    }

    /// Lebesgue measure computed from the structure alone (no fibers).
    pub fn area(&self) -> Result<f64> {
        match &self.0.shape {
            Shape::Intervals(iv) => Ok(iv.iter().map(|(a, b)| b - a).sum()),
            Shape::Planar(p) => Ok(p.area()),
            Shape::Cusp => Ok(0.5),
            Shape::Oracle(_) => Err(Error::UnsupportedKind("oracle")),
        }
    }

    /// Wall segments of a planar structured domain.
    pub fn walls(&self) -> &[Seg] {
        match &self.0.shape {
            Shape::Planar(p) => p.walls(),
            _ => &[],
        }
    }

    /// Cantor obstacles of a planar structured domain.
    pub fn cantor_slits(&self) -> &[CantorSlit] {
        match &self.0.shape {
            Shape::Planar(p) => &p.cantor,
            _ => &[],
        }
    }

    /// Uniform point of the bounding box from two-or-three unit variates.
    pub fn bbox_point(&self, u: &[f64]) -> Point {
        let b = &self.0.bbox;
        b.lo.iter().zip(&b.hi).zip(u).map(|((lo, hi), t)| lo + t * (hi - lo)).collect()
    }

    /// Interior anchor `x` with `z_θ(x) = z` within `1e−9·diam`, trying
    /// `x = z − tθ` from `t0` down by 40 halvings.
    pub fn anchor(&self, z: &[f64], theta: &Direction, t0: f64) -> Option<(Point, ExitRecord)> {
        let tol = 1e-9 * self.0.diameter;
        let mut t = t0;
        for _ in 0..=40 {
            let x = axpy(z, -t, theta.comps());
            if self.contains(&x) {
                if let Ok(rec) = self.exit_record(&x, theta) {
                    if dist(&rec.z_plus, z) <= tol {
                        return Some((x, rec));
                    }
                }
            }
            t *= 0.5;
        }
        None
    }
}
