//! Directional boundary measures `μ_θ(A) = λ(x ∈ Ω : z_θ(x) ∈ A)`.
//!
//! In one dimension `μ_θ` is a finite sum of atoms at fiber ends. In the
//! plane, structured domains are swept along the hyperplane coordinate `y`:
//! between consecutive critical offsets the fiber has a fixed number of
//! components ("slots"), and each slot deposits mass `ℓ = β − α` per unit
//! `y` at its exit point `βθ + y`. Oracle domains only get the Monte Carlo
//! representation.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::point::{axpy, Direction, Point};
use crate::quadrature::{fixed_nodes, integrate, integrate_vec, Estimate, QuadConfig};

const MC_CHUNK: usize = 1 << 16;

/// How a node of a measure was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Exact atom of a one-dimensional domain.
    Atom,
    /// Quadrature node of a swept sheet.
    Sheet,
    /// Monte Carlo sample pushed to its exit point.
    Sample,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Atom => "atom",
            Provenance::Sheet => "sheet",
            Provenance::Sample => "sample",
        }
    }
}

/// A fiber component `]α, β[` over `y` together with its exit point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpan {
    pub y: Point,
    pub alpha: f64,
    pub beta: f64,
    /// `βθ + y`.
    pub z: Point,
}

impl FiberSpan {
    pub fn new(theta: &Direction, y: &[f64], alpha: f64, beta: f64) -> Self {
        Self { y: Point::from_slice(y), alpha, beta, z: theta.line_point(y, beta) }
    }

    pub fn chord(&self) -> f64 {
        self.beta - self.alpha
    }

    /// `z_{−θ}(z) = αθ + y`.
    pub fn partner(&self, theta: &Direction) -> Point {
        theta.line_point(&self.y, self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub provenance: Provenance,
    pub span: FiberSpan,
}

/// A strip `y_lo < y < y_hi` of the hyperplane over which the fiber has
/// `slots` components. `mass` is `∫ Σ ℓ dy` over the strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub y_lo: f64,
    pub y_hi: f64,
    pub slots: usize,
    pub mass: Estimate,
}

/// Quadrature node of a measure, ready for export or trace evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub weight: f64,
    pub provenance: Provenance,
    pub span: FiberSpan,
    /// Cell and slot for sheet nodes.
    pub sheet: Option<(usize, usize)>,
}

/// A directional boundary measure.
#[derive(Debug, Clone)]
pub struct BoundaryMeasure {
    pub theta: Direction,
    pub domain: Domain,
    pub atoms: Vec<Atom>,
    pub cells: Vec<Cell>,
    pub total_mass: f64,
    /// Quadrature error of `total_mass` (exact mode).
    pub mass_error: f64,
    /// Standard error of `total_mass` (Monte Carlo mode).
    pub standard_error: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// Mass lost by truncating a Cantor construction, when known.
    pub truncation_deficit: Option<f64>,
    /// Whether this is `μ_θ / ℓ_θ` rather than `μ_θ`.
    pub divided: bool,
    cfg: QuadConfig,
}

/// Strips of constant fiber structure for a planar structured domain.
fn strips(domain: &Domain, theta: &Direction) -> Result<Vec<(f64, f64, usize)>> {
    let ys = domain.critical_offsets(theta)?;
    let mut out = Vec::new();
    for w in ys.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let n = domain.fiber_intervals(theta, &[0.5 * (w[0] + w[1])]).len();
        if n > 0 {
            out.push((w[0], w[1], n));
        }
    }
    Ok(out)
}

/// Quadrature settings adequate for the mass of `domain`: chords of
/// polygonal domains are piecewise linear in `y`, so a low-order rule on
/// each strip is exact.
pub fn mass_config(domain: &Domain) -> QuadConfig {
    match domain.kind() {
        crate::geometry::DomainKind::Cusp => QuadConfig::default().with_tol(1e-13),
        _ => QuadConfig { order: 4, grading_levels: 0, ..QuadConfig::default() },
    }
}

/// Fubini along θ: `Σ_strips ∫ Σ_{]α,β[ ∈ 𝓘_θ(y)} f(span) dy`, or the plain
/// sum over components for one-dimensional domains.
pub fn sweep<const N: usize, F>(domain: &Domain, theta: &Direction, cfg: &QuadConfig, f: F) -> Result<[Estimate; N]>
where
    F: Fn(&FiberSpan) -> Result<[f64; N]> + Sync,
{
    if !domain.is_structured() {
        return Err(Error::UnsupportedKind(domain.kind().name()));
    }
    let mut total = [Estimate::default(); N];
    if domain.dim() == 1 {
        for (a, b) in domain.fiber_intervals(theta, &[]) {
            let v = f(&FiberSpan::new(theta, &[], a, b))?;
            for k in 0..N {
                total[k].value += v[k];
            }
        }
        return Ok(total);
    }
    let parts: Vec<Result<[Estimate; N]>> = strips(domain, theta)?
        .into_par_iter()
        .map(|(lo, hi, _)| {
            integrate_vec(
                |y| {
                    let mut acc = [0.0; N];
                    for (a, b) in domain.fiber_intervals(theta, &[y]) {
                        let v = f(&FiberSpan::new(theta, &[y], a, b))?;
                        for k in 0..N {
                            acc[k] += v[k];
                        }
                    }
                    Ok(acc)
                },
                lo,
                hi,
                &[],
                cfg,
            )
        })
        .collect();
    for p in parts {
        let p = p?;
        for k in 0..N {
            total[k] = total[k] + p[k];
        }
    }
    Ok(total)
}

/// Merges atoms whose exit points agree within `tol`, summing weights.
fn merge_atoms(mut atoms: Vec<Atom>, tol: f64) -> Vec<Atom> {
    atoms.sort_by(|a, b| a.span.z.iter().zip(&b.span.z).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if crate::point::dist(&last.span.z, &a.span.z) <= tol => last.weight += a.weight,
            _ => out.push(a),
        }
    }
    out
}

/// `μ_θ` of a structured domain by an exact fiber sweep.
pub fn mu_exact(domain: &Domain, theta: &Direction) -> Result<BoundaryMeasure> {
    mu_exact_with(domain, theta, &mass_config(domain))
}

pub fn mu_exact_with(domain: &Domain, theta: &Direction, cfg: &QuadConfig) -> Result<BoundaryMeasure> {
    if !domain.is_structured() {
        return Err(Error::UnsupportedKind(domain.kind().name()));
    }
    if theta.dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: theta.dim() });
    }
    let mut mu = BoundaryMeasure {
        theta: theta.clone(),
        domain: domain.clone(),
        atoms: Vec::new(),
        cells: Vec::new(),
        total_mass: 0.0,
        mass_error: 0.0,
        standard_error: None,
        samples: None,
        seed: None,
        truncation_deficit: None,
        divided: false,
        cfg: *cfg,
    };
    if domain.dim() == 1 {
        let atoms = domain
            .fiber_intervals(theta, &[])
            .into_iter()
            .map(|(a, b)| Atom { weight: b - a, provenance: Provenance::Atom, span: FiberSpan::new(theta, &[], a, b) })
            .collect();
        mu.atoms = merge_atoms(atoms, 1e-12 * domain.diameter());
        mu.total_mass = mu.atoms.iter().map(|a| a.weight).sum();
        return Ok(mu);
    }
    let cells: Vec<Result<Cell>> = strips(domain, theta)?
        .into_par_iter()
        .map(|(lo, hi, slots)| {
            let mass = integrate(|y| Ok(domain.fiber_intervals(theta, &[y]).iter().map(|(a, b)| b - a).sum()), lo, hi, &[], cfg)?;
            Ok(Cell { y_lo: lo, y_hi: hi, slots, mass })
        })
        .collect();
    mu.cells = cells.into_iter().collect::<Result<_>>()?;
    mu.total_mass = mu.cells.iter().map(|c| c.mass.value).sum();
    mu.mass_error = mu.cells.iter().map(|c| c.mass.error).sum();
    Ok(mu)
}

/// `μ_θ` by pushing uniform samples of the bounding box to their exits.
/// Sample `i` is drawn from stream `i / 65536` of a ChaCha8 generator
/// seeded with `seed`, so results do not depend on the thread count.
pub fn mu_monte_carlo(domain: &Domain, theta: &Direction, n_samples: usize, seed: u64) -> Result<BoundaryMeasure> {
    if n_samples == 0 {
        return Err(Error::DegenerateDomain(0));
    }
    if theta.dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: theta.dim() });
    }
    let vol = domain.bbox().volume();
    let w = vol / n_samples as f64;
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let parts: Vec<Result<Vec<Atom>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(n_samples - c * MC_CHUNK);
            let mut out = Vec::new();
            let mut u = [0.0; 3];
            for _ in 0..count {
                for v in u.iter_mut().take(domain.dim()) {
                    *v = rng.random::<f64>();
                }
                let x = domain.bbox_point(&u[..domain.dim()]);
                if !domain.contains(&x) {
                    continue;
                }
                let (y, s, a, b) = domain.locate(&x, theta)?;
                let mut span = FiberSpan::new(theta, &y, a, b);
                span.z = axpy(&x, b - s, theta.comps());
                out.push(Atom { weight: w, provenance: Provenance::Sample, span });
            }
            Ok(out)
        })
        .collect();
    let mut atoms = Vec::new();
    for p in parts {
        atoms.extend(p?);
    }
    if atoms.is_empty() {
        return Err(Error::DegenerateDomain(n_samples));
    }
    let p = atoms.len() as f64 / n_samples as f64;
    Ok(BoundaryMeasure {
        theta: theta.clone(),
        domain: domain.clone(),
        total_mass: vol * p,
        mass_error: 0.0,
        standard_error: Some(vol * (p * (1.0 - p) / n_samples as f64).sqrt()),
        samples: Some(n_samples),
        seed: Some(seed),
        atoms,
        cells: Vec::new(),
        truncation_deficit: None,
        divided: false,
        cfg: QuadConfig::default(),
    })
}

impl BoundaryMeasure {
    pub fn with_truncation_deficit(mut self, deficit: f64) -> Self {
        self.truncation_deficit = Some(deficit);
        self
    }

    /// Quadrature settings used for integrals over sheets.
    pub fn config(&self) -> &QuadConfig {
        &self.cfg
    }

    pub fn with_config(mut self, cfg: QuadConfig) -> Self {
        self.cfg = cfg;
        self
    }

    /// The measure `μ_θ / ℓ_θ`.
    pub fn divided(&self) -> Self {
        let mut out = self.clone();
        if self.divided {
            return out;
        }
        out.divided = true;
        for a in &mut out.atoms {
            a.weight /= a.span.chord();
        }
        let cells: Vec<Cell> = out
            .cells
            .iter()
            .map(|c| {
                let mass = integrate(|y| Ok(self.domain.fiber_intervals(&self.theta, &[y]).len() as f64), c.y_lo, c.y_hi, &[], &self.cfg)
                    .unwrap_or(Estimate::exact((c.y_hi - c.y_lo) * c.slots as f64));
                Cell { mass, ..*c }
            })
            .collect();
        out.cells = cells;
        out.total_mass = out.atoms.iter().map(|a| a.weight).sum::<f64>() + out.cells.iter().map(|c| c.mass.value).sum::<f64>();
        out.mass_error = out.cells.iter().map(|c| c.mass.error).sum();
        out
    }

    /// Density per unit `y` of a sheet span.
    fn density(&self, span: &FiberSpan) -> f64 {
        if self.divided {
            1.0
        } else {
            span.chord()
        }
    }

    /// `Σ_i w_i f(z_i) + Σ_cells ∫ Σ_slots f(z) ℓ dy`. The evaluator gets
    /// the whole fiber span so it can use the component ending at `z`.
    pub fn integrate_boundary<F>(&self, f: F) -> Result<Estimate>
    where
        F: Fn(&FiberSpan) -> Result<f64> + Sync,
    {
        self.integrate_boundary_with(&self.cfg, f)
    }

    pub fn integrate_boundary_with<F>(&self, cfg: &QuadConfig, f: F) -> Result<Estimate>
    where
        F: Fn(&FiberSpan) -> Result<f64> + Sync,
    {
        let [e] = self.integrate_boundary_vec(cfg, |s| Ok([f(s)?]))?;
        Ok(e)
    }

    /// Vector form of [`Self::integrate_boundary`].
    pub fn integrate_boundary_vec<const N: usize, F>(&self, cfg: &QuadConfig, f: F) -> Result<[Estimate; N]>
    where
        F: Fn(&FiberSpan) -> Result<[f64; N]> + Sync,
    {
        let mut total = [Estimate::default(); N];
        let atoms: Vec<Result<[f64; N]>> = self
            .atoms
            .par_iter()
            .map(|a| {
                let v = f(&a.span)?;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFiniteIntegrand(a.span.z.clone()));
                }
                Ok(v.map(|x| a.weight * x))
            })
            .collect();
        for v in atoms {
            let v = v?;
            for k in 0..N {
                total[k].value += v[k];
            }
        }
        let parts: Vec<Result<[Estimate; N]>> = self
            .cells
            .par_iter()
            .map(|c| {
                integrate_vec(
                    |y| {
                        let mut acc = [0.0; N];
                        for (a, b) in self.domain.fiber_intervals(&self.theta, &[y]) {
                            let span = FiberSpan::new(&self.theta, &[y], a, b);
                            let v = f(&span)?;
                            let d = self.density(&span);
                            for k in 0..N {
                                acc[k] += v[k] * d;
                            }
                        }
                        Ok(acc)
                    },
                    c.y_lo,
                    c.y_hi,
                    &[],
                    cfg,
                )
            })
            .collect();
        for p in parts {
            let p = p?;
            for k in 0..N {
                total[k] = total[k] + p[k];
            }
        }
        Ok(total)
    }

    /// Mass of the boundary points satisfying `pred`. On sheets, changes of
    /// the predicate are located on 64 samples per slot and refined by
    /// bisection; components narrower than the sample spacing can be missed.
    pub fn measure_of<P>(&self, pred: P) -> Result<f64>
    where
        P: Fn(&[f64]) -> bool + Sync,
    {
        let mut total: f64 = self.atoms.iter().filter(|a| pred(&a.span.z)).map(|a| a.weight).sum();
        let slot = |y: f64, j: usize, n: usize| -> Option<FiberSpan> {
            let iv = self.domain.fiber_intervals(&self.theta, &[y]);
            (iv.len() == n).then(|| FiberSpan::new(&self.theta, &[y], iv[j].0, iv[j].1))
        };
        let parts: Vec<Result<f64>> = self
            .cells
            .par_iter()
            .map(|c| {
                const M: usize = 64;
                let h = (c.y_hi - c.y_lo) / M as f64;
                let mut breaks = Vec::new();
                for j in 0..c.slots {
                    let mut prev: Option<(f64, bool)> = None;
                    for i in 0..M {
                        let y = c.y_lo + (i as f64 + 0.5) * h;
                        let Some(s) = slot(y, j, c.slots) else { continue };
                        let v = pred(&s.z);
                        if let Some((py, pv)) = prev {
                            if pv != v {
                                let (mut lo, mut hi) = (py, y);
                                for _ in 0..60 {
                                    let m = 0.5 * (lo + hi);
                                    match slot(m, j, c.slots) {
                                        Some(sm) if pred(&sm.z) == pv => lo = m,
                                        _ => hi = m,
                                    }
                                }
                                breaks.push(0.5 * (lo + hi));
                            }
                        }
                        prev = Some((y, v));
                    }
                }
                let e = integrate(
                    |y| {
                        let mut acc = 0.0;
                        for (a, b) in self.domain.fiber_intervals(&self.theta, &[y]) {
                            let span = FiberSpan::new(&self.theta, &[y], a, b);
                            if pred(&span.z) {
                                acc += self.density(&span);
                            }
                        }
                        Ok(acc)
                    },
                    c.y_lo,
                    c.y_hi,
                    &breaks,
                    &self.cfg,
                )?;
                Ok(e.value)
            })
            .collect();
        for p in parts {
            total += p?;
        }
        Ok(total)
    }

    /// Atoms plus `order`-point Gauss–Legendre nodes on `panels` equal
    /// panels of every cell, one node per slot.
    pub fn nodes(&self, panels: usize, order: usize) -> Vec<Node> {
        let mut out: Vec<Node> = self.atoms.iter().map(|a| Node { weight: a.weight, provenance: a.provenance, span: a.span.clone(), sheet: None }).collect();
        for (ci, c) in self.cells.iter().enumerate() {
            for (y, w) in fixed_nodes(c.y_lo, c.y_hi, panels, order) {
                let iv = self.domain.fiber_intervals(&self.theta, &[y]);
                for (j, &(a, b)) in iv.iter().enumerate() {
                    let span = FiberSpan::new(&self.theta, &[y], a, b);
                    out.push(Node { weight: w * self.density(&span), provenance: Provenance::Sheet, span, sheet: Some((ci, j)) });
                }
            }
        }
        out
    }

    /// Density of a sheet node with respect to arclength of the curve
    /// traced by its exit point, `ℓ / |dz/dy|`.
    pub fn arclength_density(&self, node: &Node) -> Option<f64> {
        let (ci, j) = node.sheet?;
        let c = &self.cells[ci];
        let y = node.span.y[0];
        let h = 1e-6 * (c.y_hi - c.y_lo);
        let (lo, hi) = ((y - h).max(c.y_lo), (y + h).min(c.y_hi));
        let beta = |t: f64| {
            let iv = self.domain.fiber_intervals(&self.theta, &[t]);
            (iv.len() == c.slots).then(|| iv[j].1)
        };
        let slope = (beta(hi)? - beta(lo)?) / (hi - lo);
        Some(self.density(&node.span) / (1.0 + slope * slope).sqrt())
    }

    /// Writes nodes as CSV with columns `x, y, weight, provenance`.
    pub fn write_csv<W: Write>(&self, out: W, panels: usize, order: usize) -> Result<()> {
        write_nodes_csv(out, &self.nodes(panels, order))
    }

    /// JSON export: summary, atoms and per-sheet nodes with densities.
    pub fn to_json(&self, panels: usize, order: usize) -> Result<String> {
        let nodes = self.nodes(panels, order);
        let sheets: Vec<serde_json::Value> = nodes
            .iter()
            .filter_map(|n| {
                let (ci, j) = n.sheet?;
                Some(serde_json::json!({
                    "sheet": format!("{ci}:{j}"),
                    "y": n.span.y[0],
                    "z": n.span.z.to_vec(),
                    "weight": n.weight,
                    "density": self.density(&n.span),
                    "arclength_density": self.arclength_density(n),
                }))
            })
            .collect();
        let atoms: Vec<serde_json::Value> =
            self.atoms.iter().map(|a| serde_json::json!({"z": a.span.z.to_vec(), "weight": a.weight, "provenance": a.provenance})).collect();
        let doc = serde_json::json!({
            "theta": self.theta.comps().to_vec(),
            "divided": self.divided,
            "total_mass": self.total_mass,
            "mass_error": self.mass_error,
            "standard_error": self.standard_error,
            "samples": self.samples,
            "seed": self.seed,
            "truncation_deficit": self.truncation_deficit,
            "atoms": atoms,
            "sheet_nodes": sheets,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// CSV rows `x, y, weight, provenance`; `y` is empty in one dimension.
pub fn write_nodes_csv<W: Write>(out: W, nodes: &[Node]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "weight", "provenance"])?;
    for n in nodes {
        let z = &n.span.z;
        let y = z.get(1).map(|v| v.to_string()).unwrap_or_default();
        w.write_record([z[0].to_string(), y, n.weight.to_string(), n.provenance.as_str().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// A boundary node read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvNode {
    pub z: Point,
    pub weight: f64,
    pub provenance: String,
}

pub fn read_nodes_csv<R: std::io::Read>(input: R) -> Result<Vec<CsvNode>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<Option<f64>> {
            let s = rec.get(i).unwrap_or("").trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|e| Error::InvalidDomain(format!("bad number `{s}` in node CSV: {e}")))
        };
        let x = num(0)?.ok_or_else(|| Error::InvalidDomain("node CSV row without x".into()))?;
        let mut z = Point::from_slice(&[x]);
        if let Some(y) = num(1)? {
            z.push(y);
        }
        out.push(CsvNode { z, weight: num(2)?.unwrap_or(0.0), provenance: rec.get(3).unwrap_or("").to_string() });
    }
    Ok(out)
}

/// `∫_ε^1 y^{−2α} √(1 + 9y⁴) dy`: the squared arclength norm of `x₂^{−α}`
/// on the right side of the cusp, cut off at height `ε`. Integrated in
/// `log y` to tame the singular end.
pub fn cusp_arclength_norm(alpha: f64, eps: f64) -> Result<Estimate> {
    let cfg = QuadConfig::default();
    integrate(
        |u| {
            let y = u.exp();
            Ok(y.powf(1.0 - 2.0 * alpha) * (1.0 + 9.0 * y.powi(4)).sqrt())
        },
        eps.ln(),
        0.0,
        &[],
        &cfg,
    )
}

/// Cutoffs `ε_j = ε₀ 2^{−j/(2α−1)}`, `j = 0..=steps`, each of which
/// roughly doubles the divergent part `ε^{1−2α}/(2α−1)`, paired with
/// [`cusp_arclength_norm`].
pub fn cusp_arclength_table(alpha: f64, eps0: f64, steps: usize) -> Result<Vec<(f64, f64)>> {
    (0..=steps)
        .map(|j| {
            let eps = eps0 * 2f64.powf(-(j as f64) / (2.0 * alpha - 1.0));
            Ok((eps, cusp_arclength_norm(alpha, eps)?.value))
        })
        .collect()
}
