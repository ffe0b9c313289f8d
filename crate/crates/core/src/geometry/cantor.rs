//! ρ-Cantor sets on `[0, 1]`.
//!
//! Level `k` removes from each of the `2^k` remaining closed intervals
//! `[a_m, b_m]` (m = 2^k..2^{k+1}) the centered open gap `]c_m, d_m[` of
//! width `ρ^{k+1}`. A set truncated at depth `K` keeps levels `0..=K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 / 3.0 {
        Ok(())
    } else {
        Err(Error::BadRho(rho))
    }
}

/// One removed gap, with its recursion index `m` and level `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub m: usize,
    pub level: u32,
    pub c: f64,
    pub d: f64,
}

fn split(a: f64, b: f64, width: f64) -> (f64, f64) {
    let mid = (a + b) / 2.0;
    (mid - width / 2.0, mid + width / 2.0)
}

/// Gaps `]c_m, d_m[` for `m = 1 .. 2^{depth+1} − 1`, in index order.
pub fn gaps(rho: f64, depth: u32) -> Result<Vec<Gap>> {
    check_rho(rho)?;
    let count = (1usize << (depth + 1)) - 1;
    // a_m, b_m indexed from 1
    let mut a = vec![0.0; 2 * count + 2];
    let mut b = vec![0.0; 2 * count + 2];
    a[1] = 0.0;
    b[1] = 1.0;
    let mut out = Vec::with_capacity(count);
    for k in 0..=depth {
        let width = rho.powi(k as i32 + 1);
        for m in (1usize << k)..(1usize << (k + 1)) {
            let (c, d) = split(a[m], b[m], width);
            out.push(Gap { m, level: k, c, d });
            if 2 * m + 1 < a.len() {
                a[2 * m] = a[m];
                b[2 * m] = c;
                a[2 * m + 1] = d;
                b[2 * m + 1] = b[m];
            }
        }
    }
    Ok(out)
}

/// Closed intervals left after removing the gaps up to `depth`, sorted.
pub fn remainder(rho: f64, depth: u32) -> Result<Vec<(f64, f64)>> {
    let mut g: Vec<(f64, f64)> = gaps(rho, depth)?.into_iter().map(|g| (g.c, g.d)).collect();
    g.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = Vec::with_capacity(g.len() + 1);
    let mut left = 0.0;
    for (c, d) in g {
        out.push((left, c));
        left = d;
    }
    out.push((left, 1.0));
    Ok(out)
}

/// Lebesgue measure of the removed gaps up to `depth`:
/// `Σ_{k≤K} 2^k ρ^{k+1} = ρ (1 − (2ρ)^{K+1}) / (1 − 2ρ)`.
pub fn truncated_mass(rho: f64, depth: u32) -> f64 {
    (rho - rho * (2.0 * rho).powi(depth as i32 + 1)) / (1.0 - 2.0 * rho)
}

/// Mass of all gaps, `ρ / (1 − 2ρ)`.
pub fn full_mass(rho: f64) -> f64 {
    rho / (1.0 - 2.0 * rho)
}

/// Gap mass dropped by truncating at `depth`: `ρ (2ρ)^{K+1} / (1 − 2ρ)`.
pub fn truncation_deficit(rho: f64, depth: u32) -> f64 {
    rho * (2.0 * rho).powi(depth as i32 + 1) / (1.0 - 2.0 * rho)
}

/// Horizontal obstacle `origin + t·(length, 0)` for `t` in the depth-`K`
/// remainder of the ρ-Cantor set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorSlit {
    pub origin: [f64; 2],
    pub length: f64,
    pub rho: f64,
    pub depth: u32,
}

impl CantorSlit {
    pub fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        if !(self.length > 0.0) {
            return Err(Error::InvalidDomain("Cantor slit length must be positive".into()));
        }
        Ok(())
    }

    /// Remainder interval of `[0,1]` containing `t` (with slack `tol`), if any.
    pub fn locate(&self, t: f64, tol: f64) -> Option<(f64, f64)> {
        if t < -tol || t > 1.0 + tol {
            return None;
        }
        let (mut a, mut b) = (0.0, 1.0);
        for k in 0..=self.depth {
            let (c, d) = split(a, b, self.rho.powi(k as i32 + 1));
            if t > c + tol && t < d - tol {
                return None;
            }
            if t <= 0.5 * (c + d) {
                b = c;
            } else {
                a = d;
            }
        }
        Some((a, b))
    }

    /// Whether the planar point lies on the obstacle within `eta`.
    pub fn touches(&self, x: &[f64], eta: f64) -> bool {
        (x[1] - self.origin[1]).abs() <= eta && self.locate((x[0] - self.origin[0]) / self.length, eta / self.length).is_some()
    }

    pub fn endpoints(&self) -> Vec<[f64; 2]> {
        remainder(self.rho, self.depth)
            .unwrap_or_default()
            .into_iter()
            .flat_map(|(a, b)| [a, b])
            .map(|t| [self.origin[0] + t * self.length, self.origin[1]])
            .collect()
    }

    /// Parameters where the line `o + s θ` meets the obstacle.
    pub fn crossings(&self, o: &[f64], theta: &[f64], eta: f64, out: &mut Vec<f64>) {
        if theta[1] != 0.0 {
            let s = (self.origin[1] - o[1]) / theta[1];
            let x = o[0] + s * theta[0];
            if self.locate((x - self.origin[0]) / self.length, 0.0).is_some() {
                out.push(s);
            }
        } else if (o[1] - self.origin[1]).abs() <= eta {
            for p in self.endpoints() {
                out.push((p[0] - o[0]) / theta[0]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_gap_third() {
        let g = gaps(1.0 / 3.0, 0).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0].c - 1.0 / 3.0).abs() < 1e-15 && (g[0].d - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quarter_lengths() {
        let g = gaps(0.25, 1).unwrap();
        let w: Vec<f64> = g.iter().map(|g| g.d - g.c).collect();
        assert_eq!(w, vec![0.25, 0.0625, 0.0625]);
    }

    #[test]
    fn counts_and_mass() {
        for (rho, k) in [(0.25, 12), (1.0 / 3.0, 12), (0.1, 5)] {
            let g = gaps(rho, k).unwrap();
            assert_eq!(g.len(), (1 << (k + 1)) - 1);
            let total: f64 = g.iter().map(|g| g.d - g.c).sum();
            assert!((total - truncated_mass(rho, k)).abs() < 1e-12);
            assert!((truncated_mass(rho, k) + truncation_deficit(rho, k) - full_mass(rho)).abs() < 1e-15);
        }
    }

    #[test]
    fn gaps_disjoint() {
        let mut g: Vec<(f64, f64)> = gaps(1.0 / 3.0, 8).unwrap().iter().map(|g| (g.c, g.d)).collect();
        g.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in g.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
    }

    #[test]
    fn bad_rho() {
        assert!(matches!(gaps(0.4, 2), Err(Error::BadRho(_))));
        assert!(matches!(gaps(0.0, 2), Err(Error::BadRho(_))));
    }

    #[test]
    fn slit_locate_matches_remainder() {
        let s = CantorSlit { origin: [0.0, 0.0], length: 1.0, rho: 1.0 / 3.0, depth: 4 };
        let rem = remainder(s.rho, s.depth).unwrap();
        for i in 0..2000 {
            let t = (i as f64 + 0.37) / 2000.0;
            let expect = rem.iter().find(|(a, b)| *a <= t && t <= *b).copied();
            assert_eq!(s.locate(t, 0.0), expect, "t={t}");
        }
    }
}
