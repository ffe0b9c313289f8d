//! Domains known only through a membership predicate.
//!
//! Rays march with step `h` and the last crossing is refined by 60
//! bisection steps. Components narrower than `h` can be missed.

use std::sync::Arc;

use super::BBox;
use crate::error::{Error, Result};
use crate::point::{axpy, Direction, Point};

pub(crate) type Pred = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

pub(crate) struct Oracle {
    pred: Pred,
    bbox: BBox,
    pub h: f64,
}

impl Oracle {
    pub fn new(pred: Pred, bbox: BBox, h: f64) -> Self {
        Self { pred, bbox, h }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.bbox.contains(x) && (self.pred)(x)
    }

    fn refine(&self, inside: f64, outside: f64, at: impl Fn(f64) -> Point) -> f64 {
        let (mut a, mut b) = (inside, outside);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if self.contains(&at(m)) {
                a = m;
            } else {
                b = m;
            }
        }
        a
    }

    /// Distance from `x` to the first exit along `dir`.
    pub fn march(&self, x: &[f64], dir: &[f64]) -> Result<f64> {
        let mut t = 0.0;
        loop {
            let next = t + self.h;
            let p = axpy(x, next, dir);
            if !self.contains(&p) {
                if !self.bbox.contains(&p) && (self.pred)(&p) {
                    return Err(Error::RayUnresolved { origin: Point::from_slice(x) });
                }
                return Ok(self.refine(t, next, |s| axpy(x, s, dir)));
            }
            t = next;
        }
    }

    pub fn fiber(&self, theta: &Direction, y: &[f64]) -> Vec<(f64, f64)> {
        let th = theta.comps();
        let o = theta.lift(y);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..th.len() {
            let (a, b) = (self.bbox.lo[k], self.bbox.hi[k]);
            if th[k] == 0.0 {
                if o[k] < a || o[k] > b {
                    return Vec::new();
                }
            } else {
                let (t0, t1) = ((a - o[k]) / th[k], (b - o[k]) / th[k]);
                lo = lo.max(t0.min(t1));
                hi = hi.min(t0.max(t1));
            }
        }
        if !(lo < hi) {
            return Vec::new();
        }
        let at = |s: f64| axpy(&o, s, th);
        let n = ((hi - lo) / self.h).ceil().max(1.0) as usize;
        let step = (hi - lo) / n as f64;
        let mut out = Vec::new();
        let mut start: Option<f64> = None;
        let mut prev = lo;
        let mut prev_in = self.contains(&at(lo));
        if prev_in {
            start = Some(lo);
        }
        for i in 1..=n {
            let s = if i == n { hi } else { lo + i as f64 * step };
            let now_in = self.contains(&at(s));
            if now_in && !prev_in {
                // refine entry: outside at prev, inside at s
                let (mut a, mut b) = (prev, s);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if self.contains(&at(m)) {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                start = Some(b);
            } else if !now_in && prev_in {
                let end = self.refine(prev, s, at);
                if let Some(a) = start.take() {
                    if end > a {
                        out.push((a, end));
                    }
                }
            }
            prev = s;
            prev_in = now_in;
        }
        if let (Some(a), true) = (start, prev_in) {
            out.push((a, hi));
        }
        out
    }
}
