//! Example domains and fields with the quantities they are known to
//! produce.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{crossings_of_level, ExprField, FnField, ScalarField};
use crate::geometry::cantor::{self, CantorSlit};
use crate::geometry::{Domain, DomainSpec};
use crate::measure::{cusp_arclength_table, mu_exact, mu_monte_carlo};
use crate::point::{point, Direction};
use crate::quadrature::{integrate, QuadConfig};
use crate::trace::{trace_at, trace_at_boundary, trace_on_span};
use crate::verify::{check_green, check_sufficiency_partition, CheckConfig};

pub const NAMES: &[&str] = &["cantor", "cusp", "fisund", "fisdeuxd", "cantor-disc", "bicantor", "serpent", "square", "lshape"];

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// A closed form worked out for the example.
    ClosedForm,
    /// A value or bound stated with the example itself.
    Stated,
    /// A refinement or sampling study.
    Study,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|computed − value| ≤ tol`.
    Equal,
    /// `computed ≥ value − tol`.
    AtLeast,
    /// `computed ≤ value + tol`.
    AtMost,
}

impl Relation {
    pub fn holds(self, computed: f64, value: f64, tol: f64) -> bool {
        match self {
            Relation::Equal => (computed - value).abs() <= tol,
            Relation::AtLeast => computed >= value - tol,
            Relation::AtMost => computed <= value + tol,
        }
    }
}

type Compute = Arc<dyn Fn() -> Result<f64> + Send + Sync>;

/// An expected quantity and the computation that reproduces it.
#[derive(Clone)]
pub struct Expected {
    pub id: String,
    pub value: f64,
    pub relation: Relation,
    pub source: Source,
    pub tol: f64,
    compute: Compute,
}

impl fmt::Debug for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Expected")
            .field("id", &self.id)
            .field("value", &self.value)
            .field("relation", &self.relation)
            .field("source", &self.source)
            .field("tol", &self.tol)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: String,
    pub expected: f64,
    pub computed: f64,
    pub relation: Relation,
    pub source: Source,
    pub tol: f64,
    pub pass: bool,
}

impl Expected {
    fn new(id: &str, value: f64, relation: Relation, source: Source, tol: f64, compute: impl Fn() -> Result<f64> + Send + Sync + 'static) -> Self {
        Self { id: id.into(), value, relation, source, tol, compute: Arc::new(compute) }
    }

    pub fn compute(&self) -> Result<f64> {
        (self.compute)()
    }

    pub fn evaluate(&self) -> Result<Outcome> {
        let computed = self.compute()?;
        Ok(Outcome {
            id: self.id.clone(),
            expected: self.value,
            computed,
            relation: self.relation,
            source: self.source,
            tol: self.tol,
            pass: self.relation.holds(computed, self.value, self.tol),
        })
    }
}

/// Constructor parameters; unset ones take per-example defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GalleryParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmax: Option<u32>,
}

pub type SharedField = Arc<dyn ScalarField>;

#[derive(Clone)]
pub struct GalleryEntry {
    pub name: String,
    pub params: GalleryParams,
    pub domain: Domain,
    pub fields: Vec<(String, SharedField)>,
    pub expected: Vec<Expected>,
    /// Partition used to probe the sufficiency hypotheses, if any.
    pub subdomains: Vec<Domain>,
    /// Mass missing from the truncated construction, if truncated.
    pub truncation_deficit: Option<f64>,
}

impl fmt::Debug for GalleryEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GalleryEntry")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("domain", &self.domain.kind())
            .field("fields", &self.fields.iter().map(|(n, _)| n).collect::<Vec<_>>())
            .field("expected", &self.expected)
            .field("subdomains", &self.subdomains.len())
            .field("truncation_deficit", &self.truncation_deficit)
            .finish()
    }
}

/// File written by `gallery --emit`: enough to rebuild the entry, plus the
/// plain domain description for tools that only read geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryFile {
    pub gallery: String,
    pub params: GalleryParams,
    pub domain: DomainSpec,
    pub fields: Vec<String>,
}

impl GalleryEntry {
    pub fn field(&self, name: &str) -> Option<SharedField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f.clone())
    }

    pub fn evaluate(&self) -> Result<Vec<Outcome>> {
        self.expected.iter().map(Expected::evaluate).collect()
    }

    pub fn to_file(&self) -> Result<GalleryFile> {
        Ok(GalleryFile {
            gallery: self.name.clone(),
            params: self.params,
            domain: self.domain.spec()?,
            fields: self.fields.iter().map(|(n, _)| n.clone()).collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file()?)?)
    }
}

impl GalleryFile {
    pub fn rebuild(&self) -> Result<GalleryEntry> {
        build(&self.gallery, &self.params)
    }
}

pub fn build(name: &str, p: &GalleryParams) -> Result<GalleryEntry> {
    let mut e = match name {
        "cantor" => cantor_complement(p.rho.unwrap_or(0.25), p.depth.unwrap_or(8)),
        "cusp" => cusp(p.alpha.unwrap_or(0.75)),
        "fisund" => disconnected_1d(),
        "fisdeuxd" => slit_square(),
        "cantor-disc" => cantor_disc(p.depth.unwrap_or(cantor_depth_for(1e-3))),
        "bicantor" => bicantor(p.rho.unwrap_or(0.25), p.depth.unwrap_or(4)),
        "serpent" => serpent(p.kmax.unwrap_or(64)),
        "square" => square(),
        "lshape" => lshape(),
        _ => Err(Error::UnknownName(name.to_string())),
    }?;
    e.params = *p;
    Ok(e)
}

fn entry(name: &str, domain: Domain) -> GalleryEntry {
    GalleryEntry {
        name: name.into(),
        params: GalleryParams::default(),
        domain,
        fields: Vec::new(),
        expected: Vec::new(),
        subdomains: Vec::new(),
        truncation_deficit: None,
    }
}

fn expr(src: &str, dim: usize) -> Result<SharedField> {
    Ok(Arc::new(ExprField::parse(src, dim)?))
}

fn dir(c: &[f64]) -> Direction {
    Direction::new(c).expect("nonzero direction")
}

fn mass_check(id: &str, d: &Domain, deg: f64, area: f64, source: Source) -> Expected {
    let d = d.clone();
    Expected::new(id, area, Relation::Equal, source, 1e-9 * area, move || Ok(mu_exact(&d, &Direction::from_degrees(deg)?)?.total_mass))
}

/// Largest-over-directions residual beyond budget of the partition probe.
fn partition_check(d: &Domain, subs: &[Domain], n: usize, tol: f64) -> Expected {
    let (d, subs) = (d.clone(), subs.to_vec());
    Expected::new("partition_hypotheses", 0.0, Relation::AtMost, Source::Stated, tol, move || {
        let thetas: Vec<Direction> = if d.dim() == 1 {
            vec![dir(&[1.0]), dir(&[-1.0])]
        } else {
            [0.0, 90.0, 150.0, 250.0].iter().map(|a| Direction::from_degrees(*a)).collect::<Result<_>>()?
        };
        let reports = check_sufficiency_partition(&d, &subs, &thetas, n, 7, tol)?;
        Ok(reports.iter().map(|r| r.residual - r.error_budget).fold(f64::NEG_INFINITY, f64::max))
    })
}

// ---- cantor -------------------------------------------------------------

/// `]0,1[ ∖ 𝒞_ρ` truncated at depth `K`, with the sawtooth field
/// `u(x) = x − (c_m + d_m)/2` on each gap.
pub fn cantor_complement(rho: f64, depth: u32) -> Result<GalleryEntry> {
    cantor::check_rho(rho)?;
    let gaps = cantor::gaps(rho, depth)?;
    let mut sorted: Vec<(f64, f64)> = gaps.iter().map(|g| (g.c, g.d)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let domain = Domain::intervals(sorted.clone())?;
    let mut e = entry("cantor", domain.clone());
    let lookup = sorted.clone();
    let mid = move |x: f64| -> f64 {
        let i = lookup.partition_point(|g| g.0 < x).saturating_sub(1);
        0.5 * (lookup[i].0 + lookup[i].1)
    };
    let m2 = mid.clone();
    let saw: SharedField =
        Arc::new(FnField::new(1, "sawtooth", move |x| x[0] - mid(x[0]), |_| point(&[1.0])).with_components(move |x| (m2(x[0]) * 1e9) as usize));
    e.fields.push(("sawtooth".into(), saw.clone()));
    e.fields.push(("x".into(), expr("x1", 1)?));
    let deficit = cantor::truncation_deficit(rho, depth);
    e.truncation_deficit = Some(deficit);
    e.subdomains = sorted.iter().map(|&g| Domain::intervals(vec![g])).collect::<Result<_>>()?;
    let plus = dir(&[1.0]);
    let count = (1usize << (depth + 1)) - 1;
    {
        let (d, th) = (domain.clone(), plus.clone());
        e.expected.push(Expected::new("atom_count", count as f64, Relation::Equal, Source::ClosedForm, 0.0, move || Ok(mu_exact(&d, &th)?.atoms.len() as f64)));
    }
    {
        let (d, th, gaps) = (domain.clone(), plus.clone(), gaps.clone());
        e.expected.push(Expected::new("atom_weight_error", 0.0, Relation::AtMost, Source::Stated, 1e-15, move || {
            let mu = mu_exact(&d, &th)?;
            let mut worst: f64 = 0.0;
            for g in &gaps {
                let a = mu.atoms.iter().find(|a| a.span.z[0] == g.d).ok_or(Error::SweepInconsistent(format!("no atom at {}", g.d)))?;
                worst = worst.max((a.weight - rho.powi(g.level as i32 + 1)).abs());
            }
            Ok(worst)
        }));
    }
    {
        let (d, th) = (domain.clone(), plus.clone());
        e.expected.push(Expected::new("truncated_mass", cantor::truncated_mass(rho, depth), Relation::Equal, Source::ClosedForm, 1e-12, move || {
            Ok(mu_exact(&d, &th)?.total_mass)
        }));
    }
    {
        let (d, th) = (domain.clone(), plus.clone());
        e.expected.push(Expected::new("full_mass", cantor::full_mass(rho), Relation::Equal, Source::Stated, deficit + 1e-12, move || {
            Ok(mu_exact(&d, &th)?.total_mass)
        }));
    }
    e.expected.push(Expected::new("cantor_set_length", (1.0 - 3.0 * rho) / (1.0 - 2.0 * rho), Relation::Equal, Source::Stated, deficit + 1e-12, move || {
        Ok(cantor::remainder(rho, depth)?.iter().map(|(a, b)| b - a).sum())
    }));
    {
        let (d, g) = (domain.clone(), gaps[0]);
        let u = saw.clone();
        e.expected.push(Expected::new("sawtooth_trace_at_d1", rho / 2.0, Relation::Equal, Source::ClosedForm, 1e-12, move || {
            Ok(trace_at_boundary(u.as_ref(), &d, &dir(&[1.0]), &[g.d])?.value)
        }));
    }
    e.expected.push(partition_check(&domain, &e.subdomains, 4000, 1e-3));
    Ok(e)
}

// ---- cusp ---------------------------------------------------------------

/// `{−x₂³ < x₁ < x₂³, 0 < x₂ < 1}` with `u = x₂^{−α}`.
pub fn cusp(alpha: f64) -> Result<GalleryEntry> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::InvalidDomain(format!("cusp exponent {alpha} outside ]1/2,1[")));
    }
    let domain = Domain::cusp();
    let mut e = entry("cusp", domain.clone());
    let u: SharedField =
        Arc::new(FnField::new(2, format!("x2^(-{alpha})"), move |x| x[1].powf(-alpha), move |x| point(&[0.0, -alpha * x[1].powf(-alpha - 1.0)])));
    e.fields.push(("u".into(), u.clone()));
    e.fields.push(("bubble".into(), expr("(x2^6 - x1^2)*(1 - x2)", 2)?));
    let horiz = dir(&[1.0, 0.0]);
    e.expected.push(mass_check("mu_total", &domain, 0.0, 0.5, Source::ClosedForm));
    {
        let (d, th) = (domain.clone(), horiz.clone());
        e.expected.push(Expected::new("mu_below_half", 1.0 / 32.0, Relation::Equal, Source::ClosedForm, 1e-12, move || {
            mu_exact(&d, &th)?.measure_of(|z| z[1] <= 0.5)
        }));
    }
    {
        let (d, th, u) = (domain.clone(), horiz.clone(), u.clone());
        e.expected.push(Expected::new("trace_l2_mu", 1.0 / (2.0 - alpha), Relation::Equal, Source::ClosedForm, 1e-4, move || {
            let mu = mu_exact(&d, &th)?;
            let cfg = QuadConfig::default();
            Ok(mu.integrate_boundary(|span| Ok(trace_on_span(u.as_ref(), &th, span, &cfg)?.at_beta.value.powi(2)))?.value)
        }));
    }
    {
        let (d, th, u) = (domain.clone(), horiz.clone(), u.clone());
        e.expected.push(Expected::new("trace_at_half", 0.5f64.powf(-alpha), Relation::Equal, Source::ClosedForm, 1e-9, move || {
            Ok(trace_at(u.as_ref(), &d, &th, &[0.0, 0.5])?.value)
        }));
    }
    e.expected.push(Expected::new("arclength_growth_ratio", 10.0, Relation::AtLeast, Source::Study, 0.0, move || {
        let t = cusp_arclength_table(alpha, 0.5, 6)?;
        Ok(t[t.len() - 1].1 / t[0].1)
    }));
    Ok(e)
}

// ---- fisund / fisdeuxd --------------------------------------------------

/// `]0,1[ ∪ ]1,2[` with `u = x` on the left piece and `x − 1` on the right.
pub fn disconnected_1d() -> Result<GalleryEntry> {
    let domain = Domain::intervals(vec![(0.0, 1.0), (1.0, 2.0)])?;
    let mut e = entry("fisund", domain.clone());
    let u: SharedField =
        Arc::new(FnField::new(1, "fisund", |x| if x[0] < 1.0 { x[0] } else { x[0] - 1.0 }, |_| point(&[1.0])).with_components(|x| (x[0] >= 1.0) as usize));
    e.fields.push(("u".into(), u.clone()));
    for (id, th, z, v) in
        [("trace_plus_at_1", 1.0, 1.0, 1.0), ("trace_plus_at_2", 1.0, 2.0, 1.0), ("trace_minus_at_0", -1.0, 0.0, 0.0), ("trace_minus_at_1", -1.0, 1.0, 0.0)]
    {
        let (d, u) = (domain.clone(), u.clone());
        e.expected.push(Expected::new(id, v, Relation::Equal, Source::Stated, 1e-9, move || Ok(trace_at_boundary(u.as_ref(), &d, &dir(&[th]), &[z])?.value)));
    }
    Ok(e)
}

/// The field of the slit square: `−x₂` left of the slit, `x₂` right of it,
/// `0` below.
pub fn slit_square_field() -> FnField {
    FnField::new(
        2,
        "fisdeuxd",
        |x| {
            if x[1] <= 0.0 {
                0.0
            } else if x[0] < 0.5 {
                -x[1]
            } else {
                x[1]
            }
        },
        |x| {
            if x[1] <= 0.0 {
                point(&[0.0, 0.0])
            } else if x[0] < 0.5 {
                point(&[0.0, -1.0])
            } else {
                point(&[0.0, 1.0])
            }
        },
    )
    .with_interfaces(|o, th, lo, hi| {
        let mut s = crossings_of_level(o, th, 1, &[0.0], lo, hi);
        s.extend(crossings_of_level(o, th, 0, &[0.5], lo, hi));
        s
    })
    .with_components(|x| {
        if x[1] <= 0.0 {
            0
        } else if x[0] < 0.5 {
            1
        } else {
            2
        }
    })
}

/// `(]0,1[ × ]−1,1[) ∖ ({1/2} × [0,1])`.
pub fn slit_square() -> Result<GalleryEntry> {
    let domain = Domain::rectilinear(vec![[0.0, -1.0, 1.0, 1.0]], vec![[[0.5, 0.0], [0.5, 1.0]]], vec![])?;
    let mut e = entry("fisdeuxd", domain.clone());
    let u: SharedField = Arc::new(slit_square_field());
    e.fields.push(("u".into(), u.clone()));
    for s in [0.2, 0.5, 0.8] {
        for (name, th, v) in [("plus", 1.0, -s), ("minus", -1.0, s)] {
            let (d, u) = (domain.clone(), u.clone());
            e.expected.push(Expected::new(&format!("trace_{name}_at_{s}"), v, Relation::Equal, Source::Stated, 1e-9, move || {
                Ok(trace_at_boundary(u.as_ref(), &d, &dir(&[th, 0.0]), &[0.5, s])?.value)
            }));
        }
    }
    {
        let d = domain.clone();
        e.expected.push(Expected::new("slit_face_mass", 0.5, Relation::Equal, Source::ClosedForm, 1e-12, move || {
            mu_exact(&d, &dir(&[1.0, 0.0]))?.measure_of(|z| (z[0] - 0.5).abs() < 1e-12 && z[1] > 0.0)
        }));
    }
    e.expected.push(mass_check("mu_total", &domain, 37.0, 2.0, Source::ClosedForm));
    Ok(e)
}

// ---- cantor disc --------------------------------------------------------

/// Depth at which the remaining slit length `(2/3)^{K+1}` drops below
/// `(2/3)·ε`, i.e. `K = ⌈ln ε / ln(2/3)⌉`.
pub fn cantor_depth_for(eps: f64) -> u32 {
    (eps.ln() / (2.0f64 / 3.0).ln()).ceil().max(0.0) as u32
}

pub const DISC_SIDES: usize = 720;
pub const DISC_RADIUS: f64 = 2.0;

fn disc_vertices() -> Vec<[f64; 2]> {
    (0..DISC_SIDES)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / DISC_SIDES as f64;
            [DISC_RADIUS * a.cos(), DISC_RADIUS * a.sin()]
        })
        .collect()
}

/// Area of the inscribed polygon standing in for the disc.
pub fn disc_polygon_area() -> f64 {
    0.5 * DISC_SIDES as f64 * DISC_RADIUS * DISC_RADIUS * (2.0 * PI / DISC_SIDES as f64).sin()
}

/// The disc of radius 2 (as a 720-gon) minus the middle-third Cantor set
/// placed on `[−1/2, 1/2] × {0}`, truncated at `depth`.
pub fn cantor_disc_domain(depth: u32) -> Result<Domain> {
    let slit = CantorSlit { origin: [-0.5, 0.0], length: 1.0, rho: 1.0 / 3.0, depth };
    Domain::polygon(disc_vertices(), vec![], vec![slit])
}

/// Lower edge of the 720-gon above `x` (|x| < 2).
fn disc_bottom(x: f64) -> f64 {
    let step = 2.0 * PI / DISC_SIDES as f64;
    let phi = 2.0 * PI - (x / DISC_RADIUS).clamp(-1.0, 1.0).acos();
    let k = ((phi / step).floor() as usize).min(DISC_SIDES - 1);
    let (a0, a1) = (k as f64 * step, (k + 1) as f64 * step);
    let (x0, y0, x1, y1) = (DISC_RADIUS * a0.cos(), DISC_RADIUS * a0.sin(), DISC_RADIUS * a1.cos(), DISC_RADIUS * a1.sin());
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// `μ_{(0,1)}` of the truncated slit: the length of the vertical chords
/// below it, integrated over the remaining intervals (two-point Gauss).
pub fn slit_mass_exact(depth: u32) -> Result<f64> {
    let g = 0.5 / 3f64.sqrt();
    Ok(cantor::remainder(1.0 / 3.0, depth)?
        .iter()
        .map(|&(a, b)| {
            let (m, h) = (-0.5 + 0.5 * (a + b), b - a);
            0.5 * h * (-disc_bottom(m - g * h) - disc_bottom(m + g * h))
        })
        .sum())
}

/// Monte Carlo mass of exits within `eps` of the slit for `θ = (0,1)`,
/// on the disc truncated at [`cantor_depth_for`]`(eps)`.
pub fn slit_tube_mass_mc(eps: f64, n: usize, seed: u64) -> Result<(f64, f64)> {
    let d = cantor_disc_domain(cantor_depth_for(eps))?;
    let mu = mu_monte_carlo(&d, &dir(&[0.0, 1.0]), n, seed)?;
    let m = mu.measure_of(|z| z[1].abs() <= eps && z[0].abs() <= 0.5 + eps)?;
    // binomial error of the hit fraction
    let vol = d.bbox().volume();
    let p = m / vol;
    Ok((m, vol * (p * (1.0 - p) / n as f64).sqrt()))
}

pub fn cantor_disc(depth: u32) -> Result<GalleryEntry> {
    let domain = cantor_disc_domain(depth)?;
    let mut e = entry("cantor-disc", domain.clone());
    e.fields.push(("radial".into(), expr("4 - x1^2 - x2^2", 2)?));
    e.truncation_deficit = Some(slit_mass_exact(depth)?);
    let disc = PI * DISC_RADIUS * DISC_RADIUS;
    e.expected.push(Expected::new(
        "polygon_area_error",
        0.0,
        Relation::AtMost,
        Source::ClosedForm,
        1e-4,
        move || Ok((disc - disc_polygon_area()).abs() / disc),
    ));
    e.expected.push(mass_check("mu_total", &domain, 90.0, disc_polygon_area(), Source::ClosedForm));
    e.expected.push(Expected::new("tube_mass_mc", 0.0, Relation::AtMost, Source::Study, 0.01, || Ok(slit_tube_mass_mc(1e-3, 1_000_000, 1)?.0)));
    e.expected.push(Expected::new("tube_mass_halving_ratio", 1.0, Relation::AtMost, Source::Study, 0.0, || {
        Ok(slit_mass_exact(cantor_depth_for(5e-4))? / slit_mass_exact(cantor_depth_for(1e-3))?)
    }));
    Ok(e)
}

// ---- bicantor -----------------------------------------------------------

/// `(([0,1] ∖ 𝒞_ρ) × ]−1,1[) ∪ (]0,1[ × ]−1,0[)`, truncated at depth `K`,
/// with the partition into the lower box and the columns above the gaps.
pub fn bicantor(rho: f64, depth: u32) -> Result<GalleryEntry> {
    let gaps = cantor::gaps(rho, depth)?;
    let mut boxes = vec![[0.0, -1.0, 1.0, 0.0]];
    boxes.extend(gaps.iter().map(|g| [g.c, -1.0, g.d, 1.0]));
    let domain = Domain::rectilinear(boxes, vec![], vec![])?;
    let mut e = entry("bicantor", domain.clone());
    e.fields.push(("smooth".into(), expr("x1*x2 + x2^2", 2)?));
    let deficit = cantor::truncation_deficit(rho, depth);
    e.truncation_deficit = Some(deficit);
    let mut subs = vec![Domain::rectilinear(vec![[0.0, -1.0, 1.0, 0.0]], vec![], vec![])?];
    for g in &gaps {
        subs.push(Domain::rectilinear(vec![[g.c, 0.0, g.d, 1.0]], vec![], vec![])?);
    }
    e.subdomains = subs;
    let area = 1.0 + cantor::truncated_mass(rho, depth);
    e.expected.push(mass_check("mu_total", &domain, 30.0, area, Source::ClosedForm));
    e.expected.push(Expected::new("full_area", 1.0 + cantor::full_mass(rho), Relation::Equal, Source::ClosedForm, deficit + 1e-12, move || {
        Ok(mu_exact(&domain, &Direction::from_degrees(90.0)?)?.total_mass)
    }));
    e.expected.push(partition_check(&e.domain, &e.subdomains, 20_000, 1e-3));
    Ok(e)
}

// ---- serpent ------------------------------------------------------------

/// Rise of `u` across the `k`-th riser, `k^{1/4} − (k−1)^{1/4}`.
fn rise(k: u64) -> f64 {
    (k as f64).powf(0.25) - ((k - 1) as f64).powf(0.25)
}

/// `∂₂u` on the `k`-th riser, `(5/3)(k^{1/4} − (k−1)^{1/4})`.
pub fn serpent_riser_slope(k: u64) -> f64 {
    5.0 / 3.0 * rise(k)
}

/// `∫|∇u|²` over the `k`-th riser `]1/(4k+2), 1/(4k+1)[ × ]1/5, 4/5[`.
pub fn serpent_riser_energy(k: u64) -> f64 {
    let kf = k as f64;
    let w = 1.0 / (4.0 * kf + 1.0) - 1.0 / (4.0 * kf + 2.0);
    serpent_riser_slope(k).powi(2) * 0.6 * w
}

/// `Σ_{k > kmax}` of the riser energies; terms decay like `k^{−7/2}`, so
/// summing to 10⁶ leaves under 10⁻²⁰.
pub fn serpent_riser_tail(kmax: u64) -> f64 {
    (kmax + 1..=1_000_000).rev().map(serpent_riser_energy).sum()
}

/// Closed boxes of the serpent truncated after `kmax` turns, overlapping
/// so that no seam lies inside the domain.
pub fn serpent_boxes(kmax: u32) -> Vec<[f64; 4]> {
    let mut b = vec![[0.25, 0.0, 0.3, 1.0]];
    for k in 1..=kmax as u64 {
        let q = |j: u64| 1.0 / (4 * k + j) as f64;
        b.push([q(2), 0.0, q(1), 1.0]); // riser
        b.push([q(4), 0.0, q(3), 1.0]); // flat
        b.push([q(4), 0.8, q(1), 1.0]); // top passage
        let right = if k == 1 { 0.3 } else { 1.0 / (4 * k - 1) as f64 };
        b.push([q(2), 0.0, right, 0.2]); // bottom passage
    }
    b
}

/// `(turn k, position r ∈ [0,4))` with `1/x = 4k + r`; `k = 0` left of 1/4.
fn serpent_cell(x: f64) -> (u64, f64) {
    let q = 1.0 / x;
    let k = (q / 4.0).floor();
    (k as u64, q - 4.0 * k)
}

/// The serpent field: `0` on the start region, climbing from `(k−1)^{1/4}`
/// to `k^{1/4}` on the `k`-th riser between heights 1/5 and 4/5, constant
/// elsewhere.
pub fn serpent_field() -> FnField {
    let value = |x: &[f64]| -> f64 {
        let (k, r) = serpent_cell(x[0]);
        if k == 0 {
            return 0.0;
        }
        let lo = ((k - 1) as f64).powf(0.25);
        if r < 1.0 {
            lo
        } else if r < 2.0 {
            lo + ((x[1] - 0.2) / 0.6).clamp(0.0, 1.0) * rise(k)
        } else {
            (k as f64).powf(0.25)
        }
    };
    let grad = |x: &[f64]| {
        let (k, r) = serpent_cell(x[0]);
        if k > 0 && (1.0..2.0).contains(&r) && x[1] > 0.2 && x[1] < 0.8 {
            point(&[0.0, serpent_riser_slope(k)])
        } else {
            point(&[0.0, 0.0])
        }
    };
    FnField::new(2, "serpent", value, grad).with_interfaces(|o, th, lo, hi| crossings_of_level(o, th, 1, &[0.2, 0.8], lo, hi)).with_components(|x| {
        let (k, r) = serpent_cell(x[0]);
        let band = if x[1] < 0.2 {
            0
        } else if x[1] < 0.8 {
            1
        } else {
            2
        };
        (k as usize * 4 + r as usize) * 3 + band
    })
}

/// `𝓘u(x) = ∫₀¹ u(x,y) dy` by quadrature along the vertical fiber at `x`.
pub fn serpent_mean(domain: &Domain, u: &dyn ScalarField, x: f64) -> Result<f64> {
    let up = dir(&[0.0, 1.0]);
    let y = up.project(&[x, 0.0]);
    let fiber = domain.fiber(&up, &y)?;
    let mut total = 0.0;
    for &(a, b) in &fiber.intervals {
        let o = fiber.point(0.0);
        let breaks = u.interfaces_along(&o, up.comps(), a, b);
        total += integrate(|s| Ok(u.value(&fiber.point(s))), a, b, &breaks, &QuadConfig::default())?.value;
    }
    Ok(total)
}

/// Smallest `𝓘u` over the riser and flat columns of turn `k`.
pub fn serpent_column_mean(domain: &Domain, u: &dyn ScalarField, k: u64) -> Result<f64> {
    let mid = |a: u64, b: u64| 0.5 * (1.0 / (4 * k + a) as f64 + 1.0 / (4 * k + b) as f64);
    Ok(serpent_mean(domain, u, mid(2, 1))?.min(serpent_mean(domain, u, mid(4, 3))?))
}

/// `Ω_k = ]1/(4k+4), 1/(4k)[ × ]0,1[ ∩ Ω` for `k = 1..=kmax`, plus the
/// start region right of 1/4.
pub fn serpent_partition(kmax: u32) -> Result<Vec<Domain>> {
    let boxes = serpent_boxes(kmax);
    let clip = |lo: f64, hi: f64| -> Result<Domain> {
        let part: Vec<[f64; 4]> = boxes
            .iter()
            .filter_map(|b| {
                let (x0, x1) = (b[0].max(lo), b[2].min(hi));
                (x0 < x1).then_some([x0, b[1], x1, b[3]])
            })
            .collect();
        Domain::rectilinear(part, vec![], vec![])
    };
    let mut out = vec![clip(0.25, 0.3)?];
    for k in 1..=kmax as u64 {
        out.push(clip(1.0 / (4 * k + 4) as f64, 1.0 / (4 * k) as f64)?);
    }
    Ok(out)
}

pub fn serpent(kmax: u32) -> Result<GalleryEntry> {
    if kmax < 2 {
        return Err(Error::InvalidDomain("serpent needs at least two turns".into()));
    }
    let domain = Domain::rectilinear(serpent_boxes(kmax), vec![], vec![])?;
    let mut e = entry("serpent", domain.clone());
    let u: SharedField = Arc::new(serpent_field());
    e.fields.push(("u".into(), u.clone()));
    e.fields.push(("one".into(), expr("1", 2)?));
    e.subdomains = serpent_partition(kmax)?;
    {
        let u = u.clone();
        let k2 = 0.5 * (1.0 / 10.0 + 1.0 / 9.0);
        e.expected.push(Expected::new("riser_slope_2", 5.0 / 3.0 * (2f64.powf(0.25) - 1.0), Relation::Equal, Source::ClosedForm, 1e-12, move || {
            Ok(u.gradient(&[k2, 0.5])[1])
        }));
    }
    for k in [16u64, 32, 64] {
        if k > kmax as u64 {
            continue;
        }
        let (d, u) = (domain.clone(), u.clone());
        e.expected.push(Expected::new(&format!("column_mean_{k}"), ((k - 1) as f64).powf(0.25), Relation::AtLeast, Source::Stated, 1e-12, move || {
            serpent_column_mean(&d, u.as_ref(), k)
        }));
    }
    e.expected.push(Expected::new("riser_tail", 0.0, Relation::AtMost, Source::ClosedForm, 1e-3, move || Ok(serpent_riser_tail(kmax as u64))));
    {
        let (d, u) = (domain.clone(), u.clone());
        let partial: f64 = (1..=kmax as u64).map(serpent_riser_energy).sum();
        e.expected.push(Expected::new("gradient_energy", partial, Relation::Equal, Source::ClosedForm, 1e-9 * partial, move || {
            let mu = mu_exact(&d, &dir(&[0.0, 1.0]))?;
            Ok(crate::verify::bound_terms(u.as_ref(), &mu, &CheckConfig::default())?.dtheta_sq.value)
        }));
    }
    {
        let (d, u, one) = (domain.clone(), u.clone(), e.field("one").expect("field one"));
        e.expected.push(Expected::new("green_lhs_horizontal", 0.0, Relation::Equal, Source::ClosedForm, 1e-12, move || {
            let mu = mu_exact(&d, &dir(&[1.0, 0.0]))?;
            Ok(check_green(u.as_ref(), one.as_ref(), &mu, &CheckConfig::default())?.lhs)
        }));
    }
    e.expected.push(partition_check(&domain, &e.subdomains, 20_000, 1e-3));
    Ok(e)
}

// ---- square / L ---------------------------------------------------------

pub fn square() -> Result<GalleryEntry> {
    let domain = Domain::rectilinear(vec![[0.0, 0.0, 1.0, 1.0]], vec![], vec![])?;
    let mut e = entry("square", domain.clone());
    e.fields.push(("bubble".into(), expr("x1*(1 - x1)*x2*(1 - x2)", 2)?));
    e.fields.push(("smooth".into(), expr("x1^2*x2 - x2", 2)?));
    e.fields.push(("x1".into(), expr("x1", 2)?));
    e.expected.push(mass_check("mu_total", &domain, 30.0, 1.0, Source::ClosedForm));
    {
        let (d, u) = (domain.clone(), e.field("x1").expect("x1"));
        e.expected.push(Expected::new("diff_bound_lhs", 1.0, Relation::Equal, Source::ClosedForm, 1e-12, move || {
            let mu = mu_exact(&d, &dir(&[1.0, 0.0]))?;
            Ok(crate::verify::bound_terms(u.as_ref(), &mu, &CheckConfig::smooth())?.diff_sq.value)
        }));
    }
    Ok(e)
}

pub fn lshape() -> Result<GalleryEntry> {
    let domain = Domain::polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]], vec![], vec![])?;
    let mut e = entry("lshape", domain.clone());
    e.fields.push(("bubble".into(), expr("x1*x2*(2 - x1)*(2 - x2)*(1 - x1)*(1 - x2)", 2)?));
    e.fields.push(("smooth".into(), expr("sin(x1) + x2^3", 2)?));
    e.expected.push(mass_check("mu_total", &domain, 30.0, 3.0, Source::ClosedForm));
    e.expected.push(mass_check("mu_total_diagonal", &domain, 225.0, 3.0, Source::ClosedForm));
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_build() {
        for n in NAMES {
            let p = GalleryParams { depth: if *n == "cantor-disc" { Some(4) } else { None }, kmax: Some(4), ..Default::default() };
            let e = build(n, &p).unwrap();
            assert_eq!(e.name, *n);
            assert!(!e.expected.is_empty());
        }
        assert!(matches!(build("koch", &GalleryParams::default()), Err(Error::UnknownName(_))));
    }

    #[test]
    fn cantor_depth_one() {
        let e = cantor_complement(1.0 / 3.0, 0).unwrap();
        let iv = e.domain.interval_list().unwrap();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 - 1.0 / 3.0).abs() < 1e-15 && (iv[0].1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn riser_slope_two() {
        // (5/3)(1.18920711… − 1)
        assert!((serpent_riser_slope(2) - 0.315345).abs() < 1e-6);
    }

    #[test]
    fn serpent_field_levels() {
        let u = serpent_field();
        // flat of turn 3 and the wall column beside it
        assert_eq!(u.value(&[0.5 * (1.0 / 16.0 + 1.0 / 15.0), 0.5]), 3f64.powf(0.25));
        assert_eq!(u.value(&[0.5 * (1.0 / 13.0 + 1.0 / 12.0), 0.1]), 2f64.powf(0.25));
        assert_eq!(u.value(&[0.28, 0.5]), 0.0);
        // riser 1 spans 0 → 1
        let x = 0.5 * (1.0 / 6.0 + 1.0 / 5.0);
        assert_eq!(u.value(&[x, 0.1]), 0.0);
        assert!((u.value(&[x, 0.5]) - 0.5).abs() < 1e-15);
        assert_eq!(u.value(&[x, 0.9]), 1.0);
    }

    #[test]
    fn serpent_walls_block() {
        let d = Domain::rectilinear(serpent_boxes(3), vec![], vec![]).unwrap();
        // top wall of turn 1 and bottom wall of turn 1
        assert!(!d.contains(&[0.22, 0.5]));
        assert!(d.contains(&[0.22, 0.1]));
        assert!(!d.contains(&[0.15, 0.5]));
        assert!(d.contains(&[0.15, 0.9]));
        assert!(d.contains(&[0.18, 0.5]));
    }

    #[test]
    fn tail_is_small() {
        assert!(serpent_riser_tail(64) < 1e-3);
        assert!(serpent_riser_tail(8) > serpent_riser_tail(64));
    }

    #[test]
    fn disc_depth_rule() {
        assert_eq!(cantor_depth_for(1e-3), 18);
        assert!(disc_bottom(0.0) < -1.99 && disc_bottom(0.0) >= -2.0);
        let m = slit_mass_exact(4).unwrap();
        // slit length (2/3)^5 over chords just under 2
        let l = (2.0f64 / 3.0).powi(5);
        assert!(m > 1.9 * l && m < 2.0 * l);
    }

    #[test]
    fn emit_round_trip() {
        let e = build("cantor", &GalleryParams { rho: Some(0.25), depth: Some(3), ..Default::default() }).unwrap();
        let f: GalleryFile = serde_json::from_str(&e.to_json().unwrap()).unwrap();
        let again = f.rebuild().unwrap();
        assert_eq!(again.domain.spec().unwrap(), e.domain.spec().unwrap());
    }
}
