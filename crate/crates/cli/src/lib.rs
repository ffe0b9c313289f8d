//! Command-line front end: argument grammar, run configuration and the
//! subcommand drivers.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dirtrace_core::gallery::{self, GalleryEntry, GalleryFile, GalleryParams, SharedField};
use dirtrace_core::measure::{mu_exact, mu_monte_carlo, read_nodes_csv, BoundaryMeasure};
use dirtrace_core::point::{Direction, Point};
use dirtrace_core::quadrature::QuadConfig;
use dirtrace_core::trace::{trace_points, AnchorRule};
use dirtrace_core::verify::{self, check_consistency, CheckConfig, Verdict, VerificationReport};
use dirtrace_core::{Domain, DomainKind, DomainSpec, Error, ExprField};

const GRAMMAR: &str = "\
Directions (--theta, --thetas):
  30deg            one planar direction given in degrees
  0,30,90deg       several planar directions in degrees
  1,0              one direction by its components (any dimension)
  1,0;0,1          several directions by components, separated by ';'
  +1 / -1          the two directions of the line
Directions are normalized; the zero vector is rejected.

Domains (--domain): a JSON domain description, a file written by
`gallery --emit`, or a gallery name with default parameters.

Fields (--field): an expression in x1, x2 (also x, y) using + - * / ^,
sin cos tan exp ln sqrt abs and pi, or the name of a field of the
gallery entry the domain came from.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 I/O error.";

/// Parsed command line.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "dirtrace", version, about = "Directional boundary measures and traces", after_long_help = GRAMMAR)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Export an example domain, or recompute its expected values.
    Gallery(GalleryArgs),
    /// Build the directional measure of a domain and write its nodes.
    Measure(MeasureArgs),
    /// Evaluate directional traces of a field at boundary nodes.
    Trace(TraceArgs),
    /// Run verification checks and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GalleryArgs {
    /// One of: cantor, cusp, fisund, fisdeuxd, cantor-disc, bicantor, serpent, square, lshape.
    pub name: String,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub kmax: Option<u32>,
    /// Write the entry (domain and field names) as JSON.
    #[arg(long)]
    pub emit: Option<PathBuf>,
    /// Recompute every expected value of the entry.
    #[arg(long)]
    pub check: bool,
    /// Where to write the check outcomes (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Default,
    Green,
    Bounds,
    Consistency,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SamplingArgs {
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MeasureArgs {
    #[arg(long)]
    pub domain: String,
    #[arg(long)]
    pub theta: Thetas,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write JSON (summary, atoms, sheet nodes) instead of CSV.
    #[arg(long)]
    pub json: bool,
    /// Gauss panels per sheet cell when exporting nodes.
    #[arg(long, default_value_t = 2)]
    pub panels: usize,
    #[arg(long, default_value_t = 8)]
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TraceArgs {
    #[arg(long)]
    pub domain: String,
    #[arg(long)]
    pub field: String,
    #[arg(long)]
    pub theta: Thetas,
    /// Node CSV (as written by `measure`); the exact measure's nodes when absent.
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub panels: usize,
    #[arg(long, default_value_t = 8)]
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::Default)]
    pub suite: Suite,
    #[arg(long)]
    pub domain: String,
    /// Repeat for several fields; checks run on every pair.
    #[arg(long, required = true)]
    pub field: Vec<String>,
    #[arg(long)]
    pub thetas: Thetas,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Tolerance override (relative for Green, absolute spread for consistency).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A non-empty list of nonzero directions, kept as given (unnormalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thetas(pub Vec<Vec<f64>>);

impl Thetas {
    pub fn directions(&self) -> Vec<Direction> {
        self.0.iter().map(|c| Direction::new(c).expect("validated at parse time")).collect()
    }
}

impl FromStr for Thetas {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number `{}`: {e}", t.trim()));
        let list: Vec<Vec<f64>> = if let Some(deg) = s.strip_suffix("deg") {
            deg.split(',').map(|t| num(t).map(|d| vec![d.to_radians().cos(), d.to_radians().sin()])).collect::<Result<_, _>>()?
        } else {
            s.split(';').map(|d| d.split(',').map(num).collect::<Result<Vec<_>, _>>()).collect::<Result<_, _>>()?
        };
        if list.is_empty() {
            return Err("no direction given".into());
        }
        let dim = list[0].len();
        for c in &list {
            if c.len() != dim {
                return Err("directions of different dimensions".into());
            }
            Direction::new(c).map_err(|e| e.to_string())?;
        }
        Ok(Thetas(list))
    }
}

impl fmt::Display for Thetas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dirs: Vec<String> = self.0.iter().map(|c| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")).collect();
        write!(f, "{}", dirs.join(";"))
    }
}

impl clap::builder::ValueParserFactory for Thetas {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<Thetas>())
    }
}

impl RunConfig {
    /// The argument vector (program name first) that parses back to `self`.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = vec!["dirtrace".to_string()];
        let opt = |a: &mut Vec<String>, k: &str, v: String| a.push(format!("--{k}={v}"));
        fn sampling(a: &mut Vec<String>, s: &SamplingArgs) {
            a.push(format!("--mode={}", if s.mode == Mode::Exact { "exact" } else { "mc" }));
            a.push(format!("--samples={}", s.samples));
            a.push(format!("--seed={}", s.seed));
        }
        match &self.command {
            Command::Gallery(g) => {
                a.push("gallery".into());
                a.push(g.name.clone());
                if let Some(v) = g.rho {
                    opt(&mut a, "rho", v.to_string());
                }
                if let Some(v) = g.depth {
                    opt(&mut a, "depth", v.to_string());
                }
                if let Some(v) = g.alpha {
                    opt(&mut a, "alpha", v.to_string());
                }
                if let Some(v) = g.kmax {
                    opt(&mut a, "kmax", v.to_string());
                }
                if let Some(p) = &g.emit {
                    opt(&mut a, "emit", p.display().to_string());
                }
                if g.check {
                    a.push("--check".into());
                }
                if let Some(p) = &g.out {
                    opt(&mut a, "out", p.display().to_string());
                }
            }
            Command::Measure(m) => {
                a.push("measure".into());
                opt(&mut a, "domain", m.domain.clone());
                opt(&mut a, "theta", m.theta.to_string());
                sampling(&mut a, &m.sampling);
                if let Some(p) = &m.out {
                    opt(&mut a, "out", p.display().to_string());
                }
                if m.json {
                    a.push("--json".into());
                }
                opt(&mut a, "panels", m.panels.to_string());
                opt(&mut a, "order", m.order.to_string());
            }
            Command::Trace(t) => {
                a.push("trace".into());
                opt(&mut a, "domain", t.domain.clone());
                opt(&mut a, "field", t.field.clone());
                opt(&mut a, "theta", t.theta.to_string());
                if let Some(p) = &t.nodes {
                    opt(&mut a, "nodes", p.display().to_string());
                }
                if let Some(p) = &t.out {
                    opt(&mut a, "out", p.display().to_string());
                }
                opt(&mut a, "panels", t.panels.to_string());
                opt(&mut a, "order", t.order.to_string());
            }
            Command::Verify(v) => {
                a.push("verify".into());
                let suite = match v.suite {
                    Suite::Default => "default",
                    Suite::Green => "green",
                    Suite::Bounds => "bounds",
                    Suite::Consistency => "consistency",
                };
                opt(&mut a, "suite", suite.into());
                opt(&mut a, "domain", v.domain.clone());
                for f in &v.field {
                    opt(&mut a, "field", f.clone());
                }
                opt(&mut a, "thetas", v.thetas.to_string());
                sampling(&mut a, &v.sampling);
                if let Some(t) = v.tol {
                    opt(&mut a, "tol", t.to_string());
                }
                if let Some(p) = &v.out {
                    opt(&mut a, "out", p.display().to_string());
                }
            }
        }
        a
    }
}

/// Exit status classes.
#[derive(Debug)]
pub enum Failure {
    Check(String),
    Usage(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Check(m) | Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Csv(_) => Failure::Io(e.to_string()),
            Error::Expression(_)
            | Error::UnknownName(_)
            | Error::InvalidDomain(_)
            | Error::InvalidDirection(_)
            | Error::DimensionMismatch { .. }
            | Error::BadRho(_)
            | Error::Json(_)
            | Error::UnsupportedKind(_) => Failure::Usage(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Parses `argv` and runs the subcommand; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cfg) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("dirtrace: {f}");
            f.code()
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<(), Failure> {
    match &cfg.command {
        Command::Gallery(g) => run_gallery(g),
        Command::Measure(m) => run_measure(m),
        Command::Trace(t) => run_trace(t),
        Command::Verify(v) => run_verify(v),
    }
}

/// A domain together with the gallery entry it was built from, if any.
pub struct Loaded {
    pub domain: Domain,
    pub entry: Option<GalleryEntry>,
    pub label: String,
}

impl Loaded {
    pub fn field(&self, src: &str) -> Result<SharedField, Failure> {
        if let Some(f) = self.entry.as_ref().and_then(|e| e.field(src)) {
            return Ok(f);
        }
        Ok(Arc::new(ExprField::parse(src, self.domain.dim())?))
    }

    fn measure(&self, theta: &Direction, s: &SamplingArgs, seed: u64) -> Result<BoundaryMeasure, Failure> {
        let mu = match s.mode {
            Mode::Exact => {
                if !self.domain.is_structured() {
                    return Err(Failure::Usage("exact measures need a structured domain; use --mode mc".into()));
                }
                mu_exact(&self.domain, theta)?
            }
            Mode::Mc => mu_monte_carlo(&self.domain, theta, s.samples, seed)?,
        };
        Ok(match self.entry.as_ref().and_then(|e| e.truncation_deficit) {
            Some(d) if self.domain.dim() == 1 => mu.with_truncation_deficit(d),
            _ => mu,
        })
    }
}

pub fn load_domain(src: &str) -> Result<Loaded, Failure> {
    let path = Path::new(src);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        if let Ok(file) = serde_json::from_str::<GalleryFile>(&text) {
            let entry = file.rebuild()?;
            return Ok(Loaded { domain: entry.domain.clone(), label: entry.name.clone(), entry: Some(entry) });
        }
        let spec: DomainSpec = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: not a domain description: {e}", path.display())))?;
        let domain = Domain::from_spec(&spec)?;
        return Ok(Loaded { label: path.file_stem().map_or_else(|| src.to_string(), |s| s.to_string_lossy().into_owned()), domain, entry: None });
    }
    if gallery::NAMES.contains(&src) {
        let entry = gallery::build(src, &GalleryParams::default())?;
        return Ok(Loaded { domain: entry.domain.clone(), label: entry.name.clone(), entry: Some(entry) });
    }
    if src.ends_with(".json") || src.contains(std::path::MAIN_SEPARATOR) {
        return Err(Failure::Io(format!("{src}: no such file")));
    }
    Err(Failure::Usage(format!("unknown domain `{src}` (not a file or gallery name)")))
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn finish(mut w: Box<dyn Write>, out: Option<&Path>) -> Result<(), Failure> {
    w.flush().map_err(|e| match out {
        Some(p) => io_err(p, e),
        None => Failure::Io(e.to_string()),
    })
}

/// Summary lines go to stdout when the payload goes to a file.
fn say(to_file: bool, line: &str) {
    if to_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn single(t: &Thetas, dim: usize) -> Result<Direction, Failure> {
    let d = t.directions();
    if d.len() != 1 {
        return Err(Failure::Usage("expected a single direction".into()));
    }
    if d[0].dim() != dim {
        return Err(Failure::Usage(format!("direction has {} components, domain has dimension {dim}", d[0].dim())));
    }
    Ok(d.into_iter().next().expect("one direction"))
}

/// Seed of job `id`: FNV-1a of the id mixed into the run seed, so streams
/// do not depend on job order or thread count.
pub fn job_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn run_gallery(g: &GalleryArgs) -> Result<(), Failure> {
    let params = GalleryParams { rho: g.rho, depth: g.depth, alpha: g.alpha, kmax: g.kmax };
    let entry = gallery::build(&g.name, &params)?;
    let json = entry.to_json()?;
    if let Some(p) = &g.emit {
        std::fs::write(p, json.as_bytes()).map_err(|e| io_err(p, e))?;
        println!("wrote {} ({}, {} fields)", p.display(), entry.domain.kind().name(), entry.fields.len());
    }
    if g.check {
        let outcomes = entry.evaluate()?;
        let mut failed = 0;
        for o in &outcomes {
            failed += usize::from(!o.pass);
            println!(
                "{} {}/{} computed={:.12e} expected={:.12e} tol={:.1e}",
                if o.pass { "PASS" } else { "FAIL" },
                entry.name,
                o.id,
                o.computed,
                o.expected,
                o.tol
            );
        }
        if let Some(p) = &g.out {
            let text = serde_json::to_string_pretty(&outcomes).map_err(|e| Failure::Io(e.to_string()))?;
            std::fs::write(p, text).map_err(|e| io_err(p, e))?;
        }
        if failed > 0 {
            return Err(Failure::Check(format!("{failed} expected value(s) not reproduced")));
        }
    } else if g.emit.is_none() {
        println!("{json}");
    }
    Ok(())
}

fn run_measure(m: &MeasureArgs) -> Result<(), Failure> {
    let loaded = load_domain(&m.domain)?;
    let theta = single(&m.theta, loaded.domain.dim())?;
    let mu = loaded.measure(&theta, &m.sampling, m.sampling.seed)?;
    let out = m.out.as_deref();
    let mut w = writer(out)?;
    if m.json {
        let text = mu.to_json(m.panels, m.order)?;
        writeln!(w, "{text}").map_err(|e| Failure::Io(e.to_string()))?;
    } else {
        mu.write_csv(&mut w, m.panels, m.order)?;
    }
    finish(w, out)?;
    let se = mu.standard_error.map(|s| format!(" se={s:.3e}")).unwrap_or_default();
    say(
        out.is_some(),
        &format!("measure [{}] theta={} total_mass={:.15e}{se} atoms={} cells={}", loaded.label, m.theta, mu.total_mass, mu.atoms.len(), mu.cells.len()),
    );
    Ok(())
}

fn run_trace(t: &TraceArgs) -> Result<(), Failure> {
    let loaded = load_domain(&t.domain)?;
    let theta = single(&t.theta, loaded.domain.dim())?;
    let u = loaded.field(&t.field)?;
    let points: Vec<(Point, Option<f64>)> = match &t.nodes {
        Some(p) => {
            let f = File::open(p).map_err(|e| io_err(p, e))?;
            read_nodes_csv(f)?.into_iter().map(|n| (n.z, None)).collect()
        }
        None => {
            if !loaded.domain.is_structured() {
                return Err(Failure::Usage("give --nodes for an oracle domain".into()));
            }
            let mu = mu_exact(&loaded.domain, &theta)?;
            mu.nodes(t.panels, t.order).into_iter().map(|n| (n.span.z.clone(), Some(n.span.chord()))).collect()
        }
    };
    for (z, _) in &points {
        if z.len() != loaded.domain.dim() {
            return Err(Failure::Usage(format!("node {z:?} does not match the domain dimension")));
        }
    }
    let (samples, failed) = trace_points(u.as_ref(), &loaded.domain, &theta, &points, &AnchorRule::default(), &QuadConfig::default());
    let out = t.out.as_deref();
    let mut w = csv::Writer::from_writer(writer(out)?);
    w.write_record(["x", "y", "value", "quadrature_error", "chord", "partner_x", "partner_y", "partner_value"]).map_err(|e| Failure::Io(e.to_string()))?;
    let cell = |p: &Point, i: usize| p.get(i).map(|v| v.to_string()).unwrap_or_default();
    for s in samples.iter().flatten() {
        w.write_record([
            cell(&s.z, 0),
            cell(&s.z, 1),
            s.value.to_string(),
            s.quadrature_error.to_string(),
            s.chord.to_string(),
            cell(&s.partner, 0),
            cell(&s.partner, 1),
            s.partner_value.to_string(),
        ])
        .map_err(|e| Failure::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Failure::Io(e.to_string()))?;
    say(
        out.is_some(),
        &format!(
            "trace [{} / {}] theta={} nodes={} traced={} unanchored={}",
            loaded.label,
            u.label(),
            t.theta,
            points.len(),
            points.len() - failed.len(),
            failed.len()
        ),
    );
    Ok(())
}

fn run_verify(v: &VerifyArgs) -> Result<(), Failure> {
    let loaded = load_domain(&v.domain)?;
    let dim = loaded.domain.dim();
    let thetas = v.thetas.directions();
    if thetas.iter().any(|t| t.dim() != dim) {
        return Err(Failure::Usage(format!("directions must have {dim} components")));
    }
    let fields: Vec<SharedField> = v.field.iter().map(|f| loaded.field(f)).collect::<Result<_, _>>()?;
    let mut cfg = if loaded.domain.kind() == DomainKind::Cusp || !loaded.domain.is_structured() { CheckConfig::default() } else { CheckConfig::smooth() };
    if let Some(t) = v.tol {
        cfg.rel_tol = t;
    }
    let green = matches!(v.suite, Suite::Default | Suite::Green);
    let bounds = matches!(v.suite, Suite::Default | Suite::Bounds);
    let consistency = v.suite == Suite::Consistency || (v.suite == Suite::Default && thetas.len() >= 2);
    let mut reports: Vec<VerificationReport> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let mut measures = Vec::with_capacity(thetas.len());
    for (i, th) in thetas.iter().enumerate() {
        let mu = loaded.measure(th, &v.sampling, job_seed(v.sampling.seed, &format!("theta{i}")))?;
        if green {
            for a in 0..fields.len() {
                for b in a..fields.len() {
                    let r = verify::check_green(fields[a].as_ref(), fields[b].as_ref(), &mu, &cfg)?;
                    reports.push(r.with_domain(&loaded.label));
                }
            }
        }
        if bounds {
            for u in &fields {
                for r in verify::check_trace_bounds(u.as_ref(), &mu, &cfg)? {
                    reports.push(r.with_domain(&loaded.label));
                }
                match verify::check_poincare(u.as_ref(), &mu, &cfg) {
                    Ok(r) => reports.push(r.with_domain(&loaded.label)),
                    Err(Error::HypothesisViolated(m)) => notes.push(format!("poincare skipped for {} (trace up to {m:.3e})", u.label())),
                    Err(e) => return Err(e.into()),
                }
            }
        }
        measures.push(mu);
    }
    if consistency {
        let tol = v.tol.unwrap_or(1e-8);
        for u in &fields {
            let c = check_consistency(&loaded.domain, u.as_ref(), &thetas, &measures, &[], tol)?;
            let witnesses: Vec<String> = c.witnesses.iter().take(3).map(|w| format!("{:?}: spread {:.3e}", w.z.to_vec(), w.spread)).collect();
            let r = VerificationReport::new("consistency", &loaded.label, &u.label(), None, c.max_spread, 0.0, c.max_spread, tol, 0.0).with_detail(format!(
                "{} over {} clusters of {} candidates{}{}",
                match c.verdict {
                    Verdict::Consistent => "consistent",
                    Verdict::Inconsistent => "inconsistent",
                    Verdict::NoSharedSupport => "no shared support",
                },
                c.clusters.len(),
                c.candidates,
                if witnesses.is_empty() { "" } else { "; witnesses " },
                witnesses.join(", ")
            ));
            reports.push(r);
        }
    }
    let out = v.out.as_deref();
    let text = serde_json::to_string_pretty(&reports).map_err(|e| Failure::Io(e.to_string()))?;
    let mut w = writer(out)?;
    writeln!(w, "{text}").map_err(|e| Failure::Io(e.to_string()))?;
    finish(w, out)?;
    for r in &reports {
        say(out.is_some(), &r.summary());
    }
    for n in &notes {
        say(out.is_some(), n);
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} of {} checks failed", reports.len())));
    }
    Ok(())
}
