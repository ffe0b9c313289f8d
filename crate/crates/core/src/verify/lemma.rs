//! The one-dimensional kernel lemma on random functions and intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::VerificationReport;
use crate::error::Result;
use crate::quadrature::{integrate_vec, QuadConfig};
use crate::trace::trace_1d;

/// A random test function with its derivative.
#[derive(Debug, Clone)]
enum Sample {
    /// `Σ c_k (t − m)^k`.
    Poly { m: f64, c: Vec<f64> },
    /// `a sin(ωt + φ) + b`.
    Trig { a: f64, w: f64, p: f64, b: f64 },
}

impl Sample {
    fn random<R: Rng>(rng: &mut R, m: f64) -> Self {
        if rng.random_bool(0.5) {
            let deg = rng.random_range(0..=5);
            Sample::Poly { m, c: (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect() }
        } else {
            Sample::Trig {
                a: rng.random_range(-2.0..2.0),
                w: rng.random_range(0.1..6.0),
                p: rng.random_range(0.0..std::f64::consts::TAU),
                b: rng.random_range(-1.0..1.0),
            }
        }
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        match self {
            Sample::Poly { m, c } => {
                let x = t - m;
                let (mut v, mut d) = (0.0, 0.0);
                for ck in c.iter().rev() {
                    d = d * x + v;
                    v = v * x + ck;
                }
                (v, d)
            }
            Sample::Trig { a, w, p, b } => (a * (w * t + p).sin() + b, a * w * (w * t + p).cos()),
        }
    }
}

struct Worst {
    slack: f64,
    lhs: f64,
    rhs: f64,
}

impl Worst {
    fn new() -> Self {
        Self { slack: f64::INFINITY, lhs: 0.0, rhs: 0.0 }
    }

    fn see(&mut self, lhs: f64, rhs: f64) {
        if rhs - lhs < self.slack {
            *self = Self { slack: rhs - lhs, lhs, rhs };
        }
    }
}

/// Checks the kernel identity and its four inequalities on `n` random
/// functions (polynomials and sinusoids) over random intervals of length
/// between 0.05 and 3. Returns one report per statement, each carrying the
/// worst case found.
pub fn check_1d_lemma(n: usize, seed: u64) -> Result<Vec<VerificationReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = QuadConfig::default();
    let mut ident: f64 = 0.0;
    let mut ident_err: f64 = 0.0;
    let (mut maj, mut sum, mut diff, mut poin) = (Worst::new(), Worst::new(), Worst::new(), Worst::new());
    for _ in 0..n {
        let alpha = rng.random_range(-2.0..2.0);
        let l = rng.random_range(0.05..3.0);
        let beta = alpha + l;
        let f = Sample::random(&mut rng, 0.5 * (alpha + beta));
        let ends = trace_1d(|t| f.eval(t).0, |t| f.eval(t).1, alpha, beta, &cfg)?;
        let (tb, ta) = (ends.at_beta.value, ends.at_alpha.value);
        ident = ident.max((tb - f.eval(beta).0).abs()).max((ta - f.eval(alpha).0).abs());
        ident_err = ident_err.max(ends.at_beta.error).max(ends.at_alpha.error);
        let fb = f.eval(beta).0;
        let [uu, du, gg] = integrate_vec(
            |t| {
                let (v, d) = f.eval(t);
                Ok([v * v, d * d, (v - fb) * (v - fb)])
            },
            alpha,
            beta,
            &[],
            &cfg,
        )?;
        let h1 = uu.value + du.value;
        let c = 1f64.max(l * l);
        maj.see(tb.powi(2).max(ta.powi(2)), h1 * 2.0 * c / l);
        sum.see((tb + ta).powi(2), h1 * 4.0 * c / l);
        diff.see(((tb - ta) / l).powi(2), h1 / l);
        // g = f − f(β) vanishes at β and has the same derivative
        poin.see(gg.value.sqrt(), l * du.value.sqrt());
    }
    let label = format!("{n} random functions");
    let mk = |name: &str, w: &Worst| VerificationReport::new(name, "interval", &label, None, w.lhs, w.rhs, w.lhs - w.rhs, 1e-9, 0.0).with_seed(Some(seed));
    Ok(vec![
        VerificationReport::new("kernel_identity", "interval", &label, None, ident, 0.0, ident, 1e-10, 0.0)
            .with_seed(Some(seed))
            .with_detail(format!("max quadrature error {ident_err:.2e}")),
        mk("kernel_max_bound", &maj),
        mk("kernel_sum_bound", &sum),
        mk("kernel_diff_bound", &diff),
        mk("kernel_poincare", &poin),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivative() {
        let f = Sample::Poly { m: 1.0, c: vec![1.0, 2.0, 3.0] };
        // 1 + 2x + 3x², x = t − 1
        let (v, d) = f.eval(3.0);
        assert_eq!((v, d), (1.0 + 4.0 + 12.0, 2.0 + 12.0));
    }

    #[test]
    fn lemma_holds() {
        let reports = check_1d_lemma(50, 11).unwrap();
        assert_eq!(reports.len(), 5);
        for r in reports {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn poincare_example() {
        // f = 1 − s on ]0,1[: ‖f‖ = 1/√3 ≤ ‖Df‖ = 1
        let f = Sample::Poly { m: 0.5, c: vec![0.5, -1.0] };
        let [ff] = integrate_vec(|t| Ok([f.eval(t).0.powi(2)]), 0.0, 1.0, &[], &QuadConfig::default()).unwrap();
        assert!((ff.value.sqrt() - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }
}
