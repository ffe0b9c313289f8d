//! Planar domains bounded by straight walls: unions of open boxes or a
//! simple polygon, minus slit segments and Cantor obstacles.
//!
//! Every obstacle is reduced to closed wall segments. A fiber is found by
//! intersecting the line with the walls and classifying each piece between
//! consecutive crossings by the membership of its midpoint.

use std::sync::{Arc, RwLock};

use super::buckets::{Buckets, Grid};
use super::cantor::CantorSlit;
use crate::error::{Error, Result};
use crate::point::Direction;

pub type Seg = [[f64; 2]; 2];

#[derive(Debug, Clone)]
pub(crate) enum Base {
    Boxes { boxes: Vec<[f64; 4]>, index: Buckets },
    Polygon { vertices: Vec<[f64; 2]>, rows: Buckets },
}

#[derive(Debug)]
pub(crate) struct Planar {
    pub base: Base,
    pub cantor: Vec<CantorSlit>,
    walls: Vec<Seg>,
    near: Grid,
    cache: RwLock<Vec<([u64; 2], Arc<Buckets>)>>,
    pub eta: f64,
    pub bbox: [f64; 4],
    diameter: f64,
}

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn seg_dist(p: &[f64], s: &Seg) -> f64 {
    let e = [s[1][0] - s[0][0], s[1][1] - s[0][1]];
    let w = [p[0] - s[0][0], p[1] - s[0][1]];
    let ee = e[0] * e[0] + e[1] * e[1];
    let t = if ee > 0.0 { ((w[0] * e[0] + w[1] * e[1]) / ee).clamp(0.0, 1.0) } else { 0.0 };
    let d = [w[0] - t * e[0], w[1] - t * e[1]];
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

fn seg_box(s: &Seg) -> [f64; 4] {
    [s[0][0].min(s[1][0]), s[0][1].min(s[1][1]), s[0][0].max(s[1][0]), s[0][1].max(s[1][1])]
}

/// Parameters where `o + s θ` meets the closed segment; a collinear
/// segment contributes both endpoints.
fn crossing(seg: &Seg, o: &[f64], th: &[f64], eta: f64, out: &mut Vec<f64>) {
    let e = [seg[1][0] - seg[0][0], seg[1][1] - seg[0][1]];
    let ao = [seg[0][0] - o[0], seg[0][1] - o[1]];
    let t = [th[0], th[1]];
    let denom = cross2(t, e);
    let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
    if denom.abs() > 1e-14 * len {
        let u = cross2(ao, t) / denom;
        if (-1e-12..=1.0 + 1e-12).contains(&u) {
            out.push(cross2(ao, e) / denom);
        }
    } else if cross2(ao, t).abs() <= eta {
        out.push(ao[0] * t[0] + ao[1] * t[1]);
        let bo = [seg[1][0] - o[0], seg[1][1] - o[1]];
        out.push(bo[0] * t[0] + bo[1] * t[1]);
    }
}

fn segments_intersect(p: &Seg, q: &Seg) -> bool {
    let d = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| cross2([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
    let (d1, d2) = (d(q[0], q[1], p[0]), d(q[0], q[1], p[1]));
    let (d3, d4) = (d(p[0], p[1], q[0]), d(p[0], p[1], q[1]));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2], dd: f64| {
        dd == 0.0 && c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    on(q[0], q[1], p[0], d1) || on(q[0], q[1], p[1], d2) || on(p[0], p[1], q[0], d3) || on(p[0], p[1], q[1], d4)
}

/// Walls of a union of open boxes: box edges minus the parts lying inside
/// another box.
fn box_walls(boxes: &[[f64; 4]], index: &Buckets) -> Vec<Seg> {
    let mut walls = Vec::new();
    let mut near: Vec<u32> = Vec::new();
    for (i, b) in boxes.iter().enumerate() {
        near.clear();
        near.extend(index.range(b[0], b[2]));
        near.sort_unstable();
        near.dedup();
        // (axis of the fixed coordinate, fixed value, span start, span end)
        let edges = [(1, b[1], b[0], b[2]), (1, b[3], b[0], b[2]), (0, b[0], b[1], b[3]), (0, b[2], b[1], b[3])];
        for &(axis, c, p0, p1) in &edges {
            let other = 1 - axis;
            let mut cuts = vec![p0, p1];
            for &j in &near {
                let o = &boxes[j as usize];
                if j as usize == i || c < o[axis] || c > o[axis + 2] {
                    continue;
                }
                for v in [o[other], o[other + 2]] {
                    if v > p0 && v < p1 {
                        cuts.push(v);
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            for w in cuts.windows(2) {
                let m = 0.5 * (w[0] + w[1]);
                let mut pt = [0.0; 2];
                pt[axis] = c;
                pt[other] = m;
                let covered = near.iter().any(|&j| {
                    let o = &boxes[j as usize];
                    j as usize != i && pt[0] > o[0] && pt[0] < o[2] && pt[1] > o[1] && pt[1] < o[3]
                });
                if !covered {
                    let mut a = [0.0; 2];
                    let mut bb = [0.0; 2];
                    a[axis] = c;
                    bb[axis] = c;
                    a[other] = w[0];
                    bb[other] = w[1];
                    walls.push([a, bb]);
                }
            }
        }
    }
    walls
}

fn convex_hull_diameter(mut pts: Vec<[f64; 2]>) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 2 {
        return 0.0;
    }
    let mut hull: Vec<[f64; 2]> = Vec::new();
    let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| cross2([a[0] - o[0], a[1] - o[1]], [b[0] - o[0], b[1] - o[1]]);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut best: f64 = 0.0;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            best = best.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
    }
    best
}

impl Planar {
    pub fn boxes(boxes: Vec<[f64; 4]>, slits: Vec<Seg>, cantor: Vec<CantorSlit>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::InvalidDomain("no boxes".into()));
        }
        for b in &boxes {
            if b.iter().any(|v| !v.is_finite()) || !(b[0] < b[2] && b[1] < b[3]) {
                return Err(Error::InvalidDomain(format!("degenerate box {b:?}")));
            }
        }
        let ranges: Vec<(f64, f64)> = boxes.iter().map(|b| (b[0], b[2])).collect();
        let index = Buckets::build(&ranges, 0.0);
        let walls = box_walls(&boxes, &index);
        let corners: Vec<[f64; 2]> = boxes.iter().flat_map(|b| [[b[0], b[1]], [b[0], b[3]], [b[2], b[1]], [b[2], b[3]]]).collect();
        Self::finish(Base::Boxes { boxes, index }, walls, corners, slits, cantor)
    }

    pub fn polygon(mut vertices: Vec<[f64; 2]>, slits: Vec<Seg>, cantor: Vec<CantorSlit>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 || vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDomain("polygon needs at least 3 finite vertices".into()));
        }
        let area = shoelace(&vertices);
        if area == 0.0 {
            return Err(Error::InvalidDomain("polygon has zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let edges: Vec<Seg> = (0..n).map(|i| [vertices[i], vertices[(i + 1) % n]]).collect();
        if n <= 20000 {
            for i in 0..n {
                for j in i + 2..n {
                    if i == 0 && j == n - 1 {
                        continue;
                    }
                    if segments_intersect(&edges[i], &edges[j]) {
                        return Err(Error::InvalidDomain(format!("polygon edges {i} and {j} intersect")));
                    }
                }
            }
        }
        let ranges: Vec<(f64, f64)> = edges.iter().map(|e| (e[0][1].min(e[1][1]), e[0][1].max(e[1][1]))).collect();
        let rows = Buckets::build(&ranges, 0.0);
        let corners = vertices.clone();
        Self::finish(Base::Polygon { vertices, rows }, edges, corners, slits, cantor)
    }

    fn finish(base: Base, mut walls: Vec<Seg>, corners: Vec<[f64; 2]>, slits: Vec<Seg>, cantor: Vec<CantorSlit>) -> Result<Self> {
        for s in &slits {
            if s.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDomain("non-finite slit".into()));
            }
        }
        for c in &cantor {
            c.validate()?;
        }
        let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &corners {
            bbox = [bbox[0].min(p[0]), bbox[1].min(p[1]), bbox[2].max(p[0]), bbox[3].max(p[1])];
        }
        let diameter = convex_hull_diameter(corners);
        let eta = 1e-13 * diameter;
        walls.extend(slits.iter().copied());
        let boxes: Vec<[f64; 4]> = walls.iter().map(seg_box).collect();
        let near = Grid::build(&boxes, eta);
        Ok(Self { base, cantor, walls, near, cache: RwLock::new(Vec::new()), eta, bbox, diameter })
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    fn base_contains(&self, x: &[f64]) -> bool {
        match &self.base {
            Base::Boxes { boxes, index } => index.at(x[0]).iter().any(|&i| {
                let b = &boxes[i as usize];
                x[0] > b[0] && x[0] < b[2] && x[1] > b[1] && x[1] < b[3]
            }),
            Base::Polygon { vertices, rows } => {
                let n = vertices.len();
                let mut inside = false;
                for &i in rows.at(x[1]) {
                    let a = vertices[i as usize];
                    let b = vertices[(i as usize + 1) % n];
                    if (a[1] > x[1]) != (b[1] > x[1]) {
                        let t = (x[1] - a[1]) / (b[1] - a[1]);
                        if a[0] + t * (b[0] - a[0]) > x[0] {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if !(x[0] > self.bbox[0] && x[0] < self.bbox[2] && x[1] > self.bbox[1] && x[1] < self.bbox[3]) {
            return false;
        }
        if !self.base_contains(x) {
            return false;
        }
        if self.near.at(x).iter().any(|&i| seg_dist(x, &self.walls[i as usize]) <= self.eta) {
            return false;
        }
        !self.cantor.iter().any(|c| c.touches(x, self.eta))
    }

    fn index_for(&self, theta: &Direction) -> Arc<Buckets> {
        let key = [theta.comps()[0].to_bits(), theta.comps()[1].to_bits()];
        if let Some((_, b)) = self.cache.read().unwrap().iter().find(|(k, _)| *k == key) {
            return b.clone();
        }
        let f = &theta.frame()[0];
        let ranges: Vec<(f64, f64)> = self
            .walls
            .iter()
            .map(|w| {
                let (p, q) = (f[0] * w[0][0] + f[1] * w[0][1], f[0] * w[1][0] + f[1] * w[1][1]);
                (p.min(q), p.max(q))
            })
            .collect();
        let b = Arc::new(Buckets::build(&ranges, self.eta));
        let mut cache = self.cache.write().unwrap();
        if cache.len() >= 32 {
            cache.clear();
        }
        cache.push((key, b.clone()));
        b
    }

    /// Range of `s` for which `o + s θ` lies in the (slightly padded) bounding box.
    fn clip(&self, o: &[f64], th: &[f64]) -> Option<(f64, f64)> {
        let pad = 1e-9 * self.diameter();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..2 {
            let (a, b) = (self.bbox[k] - pad, self.bbox[k + 2] + pad);
            if th[k] == 0.0 {
                if o[k] <= a || o[k] >= b {
                    return None;
                }
            } else {
                let (t0, t1) = ((a - o[k]) / th[k], (b - o[k]) / th[k]);
                lo = lo.max(t0.min(t1));
                hi = hi.min(t0.max(t1));
            }
        }
        (lo < hi).then_some((lo, hi))
    }

    pub fn fiber(&self, theta: &Direction, y: f64) -> Vec<(f64, f64)> {
        let th = theta.comps();
        let f = &theta.frame()[0];
        let o = [y * f[0], y * f[1]];
        let Some((lo, hi)) = self.clip(&o, th) else {
            return Vec::new();
        };
        let index = self.index_for(theta);
        let mut ts = vec![lo, hi];
        for &i in index.at(y) {
            crossing(&self.walls[i as usize], &o, th, self.eta, &mut ts);
        }
        for c in &self.cantor {
            c.crossings(&o, th, self.eta, &mut ts);
        }
        ts.retain(|t| *t >= lo && *t <= hi);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in ts.windows(2) {
            if w[1] - w[0] <= self.eta {
                continue;
            }
            let m = 0.5 * (w[0] + w[1]);
            if self.contains(&[o[0] + m * th[0], o[1] + m * th[1]]) {
                out.push((w[0], w[1]));
            }
        }
        out
    }

    /// Projected wall endpoints: the fiber structure is constant between
    /// consecutive offsets.
    pub fn critical_offsets(&self, theta: &Direction) -> Vec<f64> {
        let f = &theta.frame()[0];
        let mut ys: Vec<f64> =
            self.walls.iter().flat_map(|w| [w[0], w[1]]).chain(self.cantor.iter().flat_map(|c| c.endpoints())).map(|p| f[0] * p[0] + f[1] * p[1]).collect();
        ys.sort_by(f64::total_cmp);
        ys.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * self.diameter());
        ys
    }

    pub fn area(&self) -> f64 {
        match &self.base {
            Base::Polygon { vertices, .. } => shoelace(vertices).abs(),
            Base::Boxes { boxes, index } => {
                let mut xs: Vec<f64> = boxes.iter().flat_map(|b| [b[0], b[2]]).collect();
                xs.sort_by(f64::total_cmp);
                xs.dedup();
                let mut total = 0.0;
                let mut iv: Vec<(f64, f64)> = Vec::new();
                for w in xs.windows(2) {
                    let m = 0.5 * (w[0] + w[1]);
                    iv.clear();
                    iv.extend(index.at(m).iter().map(|&i| &boxes[i as usize]).filter(|b| b[0] < m && m < b[2]).map(|b| (b[1], b[3])));
                    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut len = 0.0;
                    let mut cur: Option<(f64, f64)> = None;
                    for &(a, b) in &iv {
                        cur = match cur {
                            Some((c0, c1)) if a <= c1 => Some((c0, c1.max(b))),
                            Some((c0, c1)) => {
                                len += c1 - c0;
                                Some((a, b))
                            }
                            None => Some((a, b)),
                        };
                    }
                    if let Some((c0, c1)) = cur {
                        len += c1 - c0;
                    }
                    total += len * (w[1] - w[0]);
                }
                total
            }
        }
    }

    pub fn walls(&self) -> &[Seg] {
        &self.walls
    }
}

pub fn shoelace(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| cross2(v[i], v[(i + 1) % n])).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(x: f64, y: f64) -> Direction {
        Direction::new(&[x, y]).unwrap()
    }

    #[test]
    fn seams_between_abutting_boxes_remain_walls() {
        let p = Planar::boxes(vec![[0.0, 0.0, 1.0, 1.0], [1.0, 0.0, 2.0, 1.0]], vec![], vec![]).unwrap();
        assert!(!p.contains(&[1.0, 0.5]));
        assert_eq!(p.fiber(&dir(1.0, 0.0), 0.5).len(), 2);
        assert!((p.area() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_boxes_merge() {
        let p = Planar::boxes(vec![[0.0, 0.0, 1.0, 1.0], [0.5, 0.0, 2.0, 1.0]], vec![], vec![]).unwrap();
        let f = p.fiber(&dir(1.0, 0.0), 0.5);
        assert_eq!(f.len(), 1);
        assert!((f[0].0).abs() < 1e-15 && (f[0].1 - 2.0).abs() < 1e-15);
        assert!((p.area() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn polygon_orientation_and_hull() {
        let cw = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        let p = Planar::polygon(cw, vec![], vec![]).unwrap();
        assert!((p.area() - 1.0).abs() < 1e-15);
        assert!((p.diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert!(p.contains(&[0.5, 0.5]));
    }

    #[test]
    fn rejects_self_intersection() {
        let bow = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Planar::polygon(bow, vec![], vec![]).is_err());
    }

    #[test]
    fn collinear_slit_blocks() {
        let p = Planar::boxes(vec![[0.0, 0.0, 1.0, 1.0]], vec![[[0.25, 0.5], [0.75, 0.5]]], vec![]).unwrap();
        let f = p.fiber(&dir(1.0, 0.0), 0.5);
        assert_eq!(f.len(), 2);
        assert!((f[0].1 - 0.25).abs() < 1e-15 && (f[1].0 - 0.75).abs() < 1e-15);
    }
}
