//! Monte Carlo probe of the hypotheses under which a partition into
//! subdomains carries trace consistency over to the whole domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::VerificationReport;
use crate::error::{Error, Result};
use crate::geometry::{BBox, Domain};
use crate::point::{point, Direction, Point};

const CHUNK: usize = 65536;
const PROBES: usize = 16;

/// Per-sample contributions: `(uncovered, shared)` weights, or the pair of
/// overlapping subdomains.
type Contribution = std::result::Result<(f64, f64), (usize, usize)>;

fn near_box(b: &BBox, z: &[f64], pad: f64) -> bool {
    b.lo.iter().zip(&b.hi).zip(z).all(|((lo, hi), c)| *c >= lo - pad && *c <= hi + pad)
}

/// Points on a sphere of radius `eps` around `z` (two in 1-D, a circle of
/// 16 in 2-D).
fn probes(z: &[f64], eps: f64) -> Result<Vec<Point>> {
    match z.len() {
        1 => Ok(vec![point(&[z[0] - eps]), point(&[z[0] + eps])]),
        2 => Ok((0..PROBES)
            .map(|k| {
                let a = std::f64::consts::TAU * (k as f64 + 0.5) / PROBES as f64;
                point(&[z[0] + eps * a.cos(), z[1] + eps * a.sin()])
            })
            .collect()),
        _ => Err(Error::UnsupportedKind("partition probes beyond 2-D")),
    }
}

fn sample(domain: &Domain, subs: &[Domain], theta: &Direction, x: &[f64], vol: f64, n: usize) -> Contribution {
    let hits: Vec<usize> = (0..subs.len()).filter(|&i| subs[i].contains(x)).collect();
    if hits.len() > 1 {
        return Err((hits[0], hits[1]));
    }
    let Ok(rec) = domain.exit_record(x, theta) else {
        return Ok((0.0, 0.0));
    };
    let w = vol / n as f64 / rec.chord;
    let z = &rec.z_plus;
    let diam = domain.diameter();
    let eps = 1e-9 * diam;
    let candidates: Vec<usize> = (0..subs.len()).filter(|&j| near_box(subs[j].bbox(), z, eps)).collect();
    // try the subdomain holding x first, it is the usual owner of z
    let order = hits.iter().copied().chain(candidates.iter().copied().filter(|j| !hits.contains(j)));
    let covered = order.into_iter().any(|j| subs[j].anchor(z, theta, diam).is_some());
    let ring = probes(z, eps).unwrap_or_default();
    let near = candidates.iter().filter(|&&j| ring.iter().any(|p| subs[j].contains(p))).count();
    Ok((if covered { 0.0 } else { w }, if near >= 2 { w } else { 0.0 }))
}

/// Probes, for every direction in `thetas`, that (a) the part of `∂_θΩ`
/// not reached as an exit of any subdomain and (b) the part lying next to
/// two or more subdomains both carry `μ_θ`-mass at most `tol`. Masses are
/// estimated from `n` uniform samples of the bounding box; each report
/// carries a `3σ` budget. Returns two reports per direction.
pub fn check_sufficiency_partition(domain: &Domain, subs: &[Domain], thetas: &[Direction], n: usize, seed: u64, tol: f64) -> Result<Vec<VerificationReport>> {
    if subs.is_empty() {
        return Err(Error::InvalidDomain("empty partition".into()));
    }
    for s in subs {
        if s.dim() != domain.dim() {
            return Err(Error::DimensionMismatch { expected: domain.dim(), got: s.dim() });
        }
    }
    probes(&vec![0.0; domain.dim()], 1.0)?;
    let vol = domain.bbox().volume();
    let name = domain.kind().name();
    let mut out = Vec::with_capacity(2 * thetas.len());
    for (t, theta) in thetas.iter().enumerate() {
        let chunks: Vec<Vec<Contribution>> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((t * n.div_ceil(CHUNK) + c) as u64);
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(n);
                (lo..hi)
                    .filter_map(|_| {
                        let u: Vec<f64> = (0..domain.dim()).map(|_| rng.random::<f64>()).collect();
                        let x = domain.bbox_point(&u);
                        domain.contains(&x).then(|| sample(domain, subs, theta, &x, vol, n))
                    })
                    .collect()
            })
            .collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for r in chunks.into_iter().flatten() {
            let (wa, wb) = r.map_err(|(i, j)| Error::BadPartition(i, j))?;
            a.push(wa);
            b.push(wb);
        }
        for (check, w) in [("partition_uncovered", &a), ("partition_shared", &b)] {
            let (mass, se) = mass_and_error(w, n);
            out.push(VerificationReport::new(check, name, "-", Some(theta), mass, 0.0, mass, tol, 3.0 * se).with_seed(Some(seed)).with_detail(format!(
                "{} subdomains, {n} samples, {} hits",
                subs.len(),
                w.iter().filter(|v| **v > 0.0).count()
            )));
        }
    }
    Ok(out)
}

/// Sum of per-sample weights and its standard error, counting the samples
/// that fell outside the domain as zeros.
fn mass_and_error(w: &[f64], n: usize) -> (f64, f64) {
    let nf = n as f64;
    let sum: f64 = w.iter().sum();
    let sq: f64 = w.iter().map(|v| v * v).sum();
    let mean = sum / nf;
    let var = (sq / nf - mean * mean).max(0.0);
    (sum, (nf * var).sqrt() * (nf / (nf - 1.0).max(1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Domain {
        Domain::rectilinear(vec![[0.0, 0.0, 1.0, 1.0]], vec![], vec![]).unwrap()
    }

    #[test]
    fn overlapping_halves_rejected() {
        let left = Domain::rectilinear(vec![[0.0, 0.0, 0.6, 1.0]], vec![], vec![]).unwrap();
        let right = Domain::rectilinear(vec![[0.4, 0.0, 1.0, 1.0]], vec![], vec![]).unwrap();
        let th = Direction::from_degrees(0.0).unwrap();
        let err = check_sufficiency_partition(&square(), &[left, right], &[th], 2000, 1, 1e-3).unwrap_err();
        assert!(matches!(err, Error::BadPartition(0, 1)));
    }

    #[test]
    fn disjoint_halves_pass() {
        let left = Domain::rectilinear(vec![[0.0, 0.0, 0.5, 1.0]], vec![], vec![]).unwrap();
        let right = Domain::rectilinear(vec![[0.5, 0.0, 1.0, 1.0]], vec![], vec![]).unwrap();
        let ths: Vec<_> = [0.0, 90.0, 200.0].iter().map(|d| Direction::from_degrees(*d).unwrap()).collect();
        let reports = check_sufficiency_partition(&square(), &[left, right], &ths, 20000, 2, 1e-3).unwrap();
        assert_eq!(reports.len(), 6);
        for r in reports {
            assert!(r.pass, "{r:?}");
            assert_eq!(r.lhs, 0.0);
        }
    }

    #[test]
    fn missing_subdomain_uncovers_boundary() {
        // only the left half: exits on the right face are not reached
        let left = Domain::rectilinear(vec![[0.0, 0.0, 0.5, 1.0]], vec![], vec![]).unwrap();
        let th = Direction::from_degrees(0.0).unwrap();
        let r = check_sufficiency_partition(&square(), &[left], &[th], 20000, 3, 1e-3).unwrap();
        // μ of the right face is 1
        assert!((r[0].lhs - 1.0).abs() < 0.05, "{:?}", r[0]);
        assert!(!r[0].pass);
    }

    #[test]
    fn two_intervals_share_their_endpoint() {
        let d = Domain::intervals(vec![(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let subs = [Domain::intervals(vec![(0.0, 1.0)]).unwrap(), Domain::intervals(vec![(1.0, 2.0)]).unwrap()];
        let th = Direction::new(&[1.0]).unwrap();
        let r = check_sufficiency_partition(&d, &subs, &[th], 10000, 4, 1e-3).unwrap();
        assert!(r[0].pass);
        // the atom at 1 carries mass 1 and touches both pieces
        assert!((r[1].lhs - 1.0).abs() < 0.05, "{:?}", r[1]);
        assert!(!r[1].pass);
    }
}
