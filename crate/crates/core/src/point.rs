//! Small-dimensional points and unit directions.
//!
//! Points are stored inline for d ≤ 3. A [`Direction`] carries its unit
//! vector together with a fixed orthonormal frame of the orthogonal
//! hyperplane, so that hyperplane coordinates are reproducible.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Point = SmallVec<[f64; 3]>;

pub fn point(coords: &[f64]) -> Point {
    SmallVec::from_slice(coords)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `a + t * b`
pub fn axpy(a: &[f64], t: f64, b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Unit vector on the sphere together with an orthonormal frame of the
/// hyperplane orthogonal to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Direction {
    comps: Point,
    frame: Vec<Point>,
}

impl Direction {
    /// Builds a direction from raw components, renormalizing them.
    pub fn new(comps: &[f64]) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::InvalidDirection("empty component list".into()));
        }
        if comps.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDirection(format!("non-finite components {comps:?}")));
        }
        let n = norm(comps);
        if n == 0.0 {
            return Err(Error::InvalidDirection("zero vector".into()));
        }
        let unit: Point = comps.iter().map(|c| c / n).collect();
        let frame = hyperplane_frame(&unit);
        Ok(Self { comps: unit, frame })
    }

    /// Planar direction at `degrees` from the first axis, counterclockwise.
    /// Multiples of 90° are snapped to exact axis vectors.
    pub fn from_degrees(degrees: f64) -> Result<Self> {
        let quarter = degrees / 90.0;
        if quarter.fract() == 0.0 {
            let q = (quarter as i64).rem_euclid(4);
            let c = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]][q as usize];
            return Self::new(&c);
        }
        let r = degrees.to_radians();
        Self::new(&[r.cos(), r.sin()])
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    /// Orthonormal frame of the hyperplane orthogonal to `self`.
    pub fn frame(&self) -> &[Point] {
        &self.frame
    }

    /// Exact negation; the hyperplane frame is shared with `self`.
    pub fn negate(&self) -> Self {
        Self { comps: self.comps.iter().map(|c| -c).collect(), frame: self.frame.clone() }
    }

    /// Hyperplane coordinates of the orthogonal projection of `x`.
    pub fn project(&self, x: &[f64]) -> Point {
        self.frame.iter().map(|f| dot(f, x)).collect()
    }

    /// Point of the hyperplane with frame coordinates `y`.
    pub fn lift(&self, y: &[f64]) -> Point {
        let mut p: Point = SmallVec::from_elem(0.0, self.dim());
        for (f, c) in self.frame.iter().zip(y) {
            for (pi, fi) in p.iter_mut().zip(f) {
                *pi += c * fi;
            }
        }
        p
    }

    /// Point `s θ + ψ(y)` on the line over `y`.
    pub fn line_point(&self, y: &[f64], s: f64) -> Point {
        let base = self.lift(y);
        axpy(&base, s, &self.comps)
    }
}

impl TryFrom<Vec<f64>> for Direction {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Direction::new(&v)
    }
}

impl From<Direction> for Vec<f64> {
    fn from(d: Direction) -> Self {
        d.comps.to_vec()
    }
}

/// Gram–Schmidt seeded with canonical basis vectors ordered from least to
/// most aligned with `theta` (ties by lowest index).
fn hyperplane_frame(theta: &[f64]) -> Vec<Point> {
    let d = theta.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| theta[i].abs().partial_cmp(&theta[j].abs()).unwrap().then(i.cmp(&j)));
    let mut basis: Vec<Point> = vec![SmallVec::from_slice(theta)];
    for &i in &order {
        if basis.len() == d {
            break;
        }
        let mut v: Point = SmallVec::from_elem(0.0, d);
        v[i] = 1.0;
        for b in &basis {
            let c = dot(&v, b);
            for (vk, bk) in v.iter_mut().zip(b) {
                *vk -= c * bk;
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|c| *c /= n);
            basis.push(v);
        }
    }
    basis.remove(0);
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_vector() {
        assert!(matches!(Direction::new(&[0.0, 0.0]), Err(Error::InvalidDirection(_))));
    }

    #[test]
    fn normalizes_input() {
        let d = Direction::new(&[3.0, 4.0]).unwrap();
        assert!((norm(d.comps()) - 1.0).abs() < 1e-14);
        assert_eq!(d.comps(), &[0.6, 0.8]);
    }

    #[test]
    fn projection_examples() {
        let e1 = Direction::new(&[1.0, 0.0]).unwrap();
        assert_eq!(e1.project(&[3.0, 7.0])[0], 7.0);
        let e2 = Direction::new(&[0.0, 1.0]).unwrap();
        assert_eq!(e2.project(&[3.0, 7.0])[0], 3.0);
        let diag = Direction::new(&[1.0, 1.0]).unwrap();
        let f = &diag.frame()[0];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f[0] - h).abs() < 1e-15 && (f[1] + h).abs() < 1e-15);
        assert!((diag.project(&[1.0, 0.0])[0] - h).abs() < 1e-15);
        assert!(dot(f, diag.comps()).abs() < 1e-15);
    }

    #[test]
    fn negation_is_bitwise() {
        let d = Direction::from_degrees(37.0).unwrap();
        let n = d.negate();
        for (a, b) in d.comps().iter().zip(n.comps()) {
            assert_eq!(a.to_bits() ^ (1 << 63), b.to_bits());
        }
        assert_eq!(d.frame(), n.frame());
        assert_eq!(n.negate(), d);
    }

    #[test]
    fn axis_degrees_are_exact() {
        assert_eq!(Direction::from_degrees(90.0).unwrap().comps(), &[0.0, 1.0]);
        assert_eq!(Direction::from_degrees(-90.0).unwrap().comps(), &[0.0, -1.0]);
        assert_eq!(Direction::from_degrees(180.0).unwrap().comps(), &[-1.0, 0.0]);
    }

    #[test]
    fn frame_three_dimensional() {
        let d = Direction::new(&[0.2, -0.5, 0.8]).unwrap();
        let fr = d.frame();
        assert_eq!(fr.len(), 2);
        for f in fr {
            assert!((norm(f) - 1.0).abs() < 1e-14);
            assert!(dot(f, d.comps()).abs() < 1e-14);
        }
        assert!(dot(&fr[0], &fr[1]).abs() < 1e-14);
    }

    #[test]
    fn one_dimensional_has_empty_frame() {
        let d = Direction::new(&[-2.0]).unwrap();
        assert_eq!(d.comps(), &[-1.0]);
        assert!(d.frame().is_empty());
        assert!(d.project(&[0.3]).is_empty());
    }
}
