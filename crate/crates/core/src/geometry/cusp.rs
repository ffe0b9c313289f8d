//! The cusp `{−x₂³ < x₁ < x₂³, 0 < x₂ < 1}`.

use crate::point::Direction;

/// Real roots of `c[0] + c[1] s + c[2] s² + c[3] s³` in `[lo, hi]`, found by
/// bisection on monotone pieces. Double roots without sign change are skipped.
pub fn poly_roots(c: [f64; 4], lo: f64, hi: f64) -> Vec<f64> {
    let eval = |s: f64| ((c[3] * s + c[2]) * s + c[1]) * s + c[0];
    // critical points solve 3c3 s² + 2c2 s + c1 = 0
    let (a, b, cc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    let mut cuts = vec![lo, hi];
    if a != 0.0 {
        let disc = b * b - 4.0 * a * cc;
        if disc >= 0.0 {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            if q != 0.0 {
                cuts.push(q / a);
                cuts.push(cc / q);
            } else {
                cuts.push(0.0);
            }
        }
    } else if b != 0.0 {
        cuts.push(-cc / b);
    }
    cuts.retain(|t| *t >= lo && *t <= hi);
    cuts.sort_by(f64::total_cmp);
    let mut roots = Vec::new();
    for w in cuts.windows(2) {
        let (mut l, mut r) = (w[0], w[1]);
        let (fl, fr) = (eval(l), eval(r));
        if fl == 0.0 {
            roots.push(l);
            continue;
        }
        if fr == 0.0 || fl.signum() == fr.signum() {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            if eval(m).signum() == fl.signum() {
                l = m;
            } else {
                r = m;
            }
        }
        roots.push(0.5 * (l + r));
    }
    if eval(hi) == 0.0 {
        roots.push(hi);
    }
    roots
}

pub(crate) fn contains(x: &[f64], eta: f64) -> bool {
    let (x1, x2) = (x[0], x[1]);
    x2 > eta && x2 < 1.0 - eta && x2 * x2 * x2 - x1.abs() > eta * (1.0 + 9.0 * x2.powi(4)).sqrt()
}

pub(crate) fn fiber(theta: &Direction, y: f64, eta: f64) -> Vec<(f64, f64)> {
    let th = theta.comps();
    let f = &theta.frame()[0];
    let o = [y * f[0], y * f[1]];
    // clip to the bounding box [−1,1]×[0,1], padded
    let pad = 1e-9;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (k, (a, b)) in [(-1.0 - pad, 1.0 + pad), (-pad, 1.0 + pad)].into_iter().enumerate() {
        if th[k] == 0.0 {
            if o[k] <= a || o[k] >= b {
                return Vec::new();
            }
        } else {
            let (t0, t1) = ((a - o[k]) / th[k], (b - o[k]) / th[k]);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    if lo >= hi {
        return Vec::new();
    }
    let mut ts = vec![lo, hi];
    if th[1] != 0.0 {
        ts.push(-o[1] / th[1]);
        ts.push((1.0 - o[1]) / th[1]);
    }
    // x₂(s)³ ∓ x₁(s) = 0
    let (p, q) = (o[1], th[1]);
    let cube = [p * p * p, 3.0 * p * p * q, 3.0 * p * q * q, q * q * q];
    for sign in [1.0, -1.0] {
        let c = [cube[0] - sign * o[0], cube[1] - sign * th[0], cube[2], cube[3]];
        ts.extend(poly_roots(c, lo, hi));
    }
    ts.retain(|t| *t >= lo && *t <= hi);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut out = Vec::new();
    for w in ts.windows(2) {
        if w[1] - w[0] <= eta {
            continue;
        }
        let m = 0.5 * (w[0] + w[1]);
        if contains(&[o[0] + m * th[0], o[1] + m * th[1]], eta) {
            out.push((w[0], w[1]));
        }
    }
    out
}

/// Projected corners and the points where lines along `θ` are tangent to
/// the curved sides.
pub(crate) fn critical_offsets(theta: &Direction) -> Vec<f64> {
    let th = theta.comps();
    let f = &theta.frame()[0];
    let mut pts = vec![[0.0, 0.0], [-1.0, 1.0], [1.0, 1.0]];
    if th[1] != 0.0 {
        let r = th[0] / (3.0 * th[1]);
        if r > 0.0 && r < 1.0 {
            let t = r.sqrt();
            pts.push([t * t * t, t]);
        }
        if -r > 0.0 && -r < 1.0 {
            let t = (-r).sqrt();
            pts.push([-t * t * t, t]);
        }
    }
    let mut ys: Vec<f64> = pts.iter().map(|p| f[0] * p[0] + f[1] * p[1]).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    ys
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots() {
        let expand = |r: [f64; 3]| {
            let (a, b, d) = (r[0], r[1], r[2]);
            [-(a * b * d), a * b + a * d + b * d, -(a + b + d), 1.0]
        };
        let r = poly_roots(expand([0.1, 0.5, -2.0]), -3.0, 3.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-2.0, 0.1, 0.5]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert_eq!(poly_roots([1.0, 0.0, 1.0, 0.0], -5.0, 5.0), Vec::<f64>::new());
        let lin = poly_roots([-1.0, 2.0, 0.0, 0.0], 0.0, 1.0);
        assert_eq!(lin, vec![0.5]);
    }

    #[test]
    fn horizontal_fiber() {
        let th = Direction::new(&[1.0, 0.0]).unwrap();
        let f = fiber(&th, 0.5, 1e-13);
        assert_eq!(f.len(), 1);
        assert!((f[0].0 + 0.125).abs() < 1e-15 && (f[0].1 - 0.125).abs() < 1e-15);
    }

    #[test]
    fn vertical_fiber() {
        let th = Direction::new(&[0.0, 1.0]).unwrap();
        let f = fiber(&th, 0.001, 1e-13);
        assert_eq!(f.len(), 1);
        assert!((f[0].0 - 0.1).abs() < 1e-12 && (f[0].1 - 1.0).abs() < 1e-15);
    }
}
