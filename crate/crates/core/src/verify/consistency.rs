//! Agreement of directional traces across directions at shared boundary
//! points.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::Domain;
use crate::measure::BoundaryMeasure;
use crate::point::{Direction, Point};
use crate::quadrature::QuadConfig;
use crate::trace::{anchor, trace_at_with, AnchorRule};

/// A boundary point reached as an exit in at least two directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub z: Point,
    /// `(θ, γ_θu(z))` for every direction in which `z` could be anchored.
    pub values: Vec<(Vec<f64>, f64)>,
    /// `max − min` of the values.
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    /// No candidate point was an exit in two directions.
    NoSharedSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub domain: String,
    pub field: String,
    pub directions: Vec<Vec<f64>>,
    pub candidates: usize,
    pub clusters: Vec<Cluster>,
    pub max_spread: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Clusters whose spread exceeds the tolerance.
    pub witnesses: Vec<Cluster>,
}

impl ConsistencyReport {
    pub fn summary(&self) -> String {
        format!(
            "{:?} consistency [{} / {}] clusters={} max_spread={:.3e} witnesses={}",
            self.verdict,
            self.domain,
            self.field,
            self.clusters.len(),
            self.max_spread,
            self.witnesses.len()
        )
    }

    /// The cluster nearest to `z`, if any.
    pub fn cluster_at(&self, z: &[f64]) -> Option<&Cluster> {
        self.clusters.iter().min_by(|a, b| crate::point::dist(&a.z, z).total_cmp(&crate::point::dist(&b.z, z)))
    }
}

/// Candidate points closer than `radius` are merged (first one kept).
fn dedup(points: Vec<Point>, radius: f64) -> Vec<Point> {
    let key = |p: &Point| -> Vec<i64> { p.iter().map(|c| (c / radius).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut out: Vec<Point> = Vec::new();
    'next: for p in points {
        let k = key(&p);
        let dims = k.len();
        for off in 0..3usize.pow(dims as u32) {
            let mut nk = k.clone();
            let mut o = off;
            for c in nk.iter_mut() {
                *c += (o % 3) as i64 - 1;
                o /= 3;
            }
            if let Some(ids) = grid.get(&nk) {
                if ids.iter().any(|&i| crate::point::dist(&out[i], &p) <= radius) {
                    continue 'next;
                }
            }
        }
        grid.entry(k).or_default().push(out.len());
        out.push(p);
    }
    out
}

/// Probes whether `γ_θu` agrees across `directions` on boundary points
/// shared by their supports. Candidates are the nodes of `measures` and the
/// extra `probes`; each candidate is anchored in every direction, and those
/// anchored in at least two form a cluster. Candidates are merged within
/// `1e−9·diam`.
pub fn check_consistency(
    domain: &Domain,
    u: &dyn ScalarField,
    directions: &[Direction],
    measures: &[BoundaryMeasure],
    probes: &[Point],
    tol: f64,
) -> Result<ConsistencyReport> {
    if directions.len() < 2 {
        return Err(Error::InvalidDirection("consistency needs at least two directions".into()));
    }
    let diam = domain.diameter();
    let mut cands: Vec<Point> = probes.to_vec();
    for mu in measures {
        cands.extend(mu.nodes(1, 8).into_iter().map(|n| n.span.z));
    }
    let cands = dedup(cands, 1e-9 * diam);
    let rule = AnchorRule::default();
    let cfg = QuadConfig::default();
    let clusters: Vec<Option<Cluster>> = cands
        .par_iter()
        .map(|z| {
            let values: Vec<(Vec<f64>, f64)> = directions
                .iter()
                .filter_map(|th| {
                    let x = anchor(domain, z, th, diam, &rule)?;
                    let s = trace_at_with(u, domain, th, &x, &cfg).ok()?;
                    Some((th.comps().to_vec(), s.value))
                })
                .collect();
            if values.len() < 2 {
                return None;
            }
            let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.1), b.max(v.1)));
            Some(Cluster { z: z.clone(), values, spread: hi - lo })
        })
        .collect();
    let clusters: Vec<Cluster> = clusters.into_iter().flatten().collect();
    let max_spread = clusters.iter().map(|c| c.spread).fold(0.0, f64::max);
    let witnesses: Vec<Cluster> = clusters.iter().filter(|c| c.spread > tol).cloned().collect();
    let verdict = if clusters.is_empty() {
        Verdict::NoSharedSupport
    } else if witnesses.is_empty() {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    Ok(ConsistencyReport {
        domain: domain.kind().name().into(),
        field: u.label(),
        directions: directions.iter().map(|d| d.comps().to_vec()).collect(),
        candidates: cands.len(),
        clusters,
        max_spread,
        tolerance: tol,
        verdict,
        witnesses,
    })
}
