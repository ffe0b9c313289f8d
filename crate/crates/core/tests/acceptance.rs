//! Acceptance suite: one PASS/FAIL line per criterion, with timing.

use std::time::{Duration, Instant};

use dirtrace_core::error::Error;
use dirtrace_core::field::{ExprField, Polynomial};
use dirtrace_core::gallery::{self, GalleryEntry};
use dirtrace_core::geometry::{cantor, Domain};
use dirtrace_core::measure::{cusp_arclength_table, mu_exact, mu_monte_carlo};
use dirtrace_core::point::{point, Direction};
use dirtrace_core::quadrature::QuadConfig;
use dirtrace_core::trace::trace_on_span;
use dirtrace_core::verify::{
    bound_terms, check_1d_lemma, check_consistency, check_green, check_poincare, check_trace_bounds, green_rhs_via_g, CheckConfig, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), Error>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn entry(name: &str) -> GalleryEntry {
    gallery::build(name, &Default::default()).unwrap()
}

fn random_dirs(n: usize, seed: u64) -> Vec<Direction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Direction::from_degrees(rng.random_range(0.0..360.0)).unwrap()).collect()
}

fn even_dirs(n: usize, offset: f64) -> Vec<Direction> {
    (0..n).map(|k| Direction::from_degrees(offset + 360.0 * k as f64 / n as f64).unwrap()).collect()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(a) + f(b) + inner)
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    0.5 * (0..v.len())
        .map(|i| {
            let (p, q) = (v[i], v[(i + 1) % v.len()]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        .abs()
}

/// Gaps of the symmetric Cantor construction: at level `k` a gap of length
/// `ρ^{k+1}` sits in the middle of every remaining interval.
fn cantor_gaps(rho: f64, depth: u32) -> Vec<(u32, f64, f64)> {
    let mut live = vec![(0.0, 1.0)];
    let mut out = Vec::new();
    for k in 0..=depth {
        let g = rho.powi(k as i32 + 1);
        let mut next = Vec::new();
        for (a, b) in live {
            let m = 0.5 * (a + b);
            out.push((k, m - 0.5 * g, m + 0.5 * g));
            next.push((a, m - 0.5 * g));
            next.push((m + 0.5 * g, b));
        }
        live = next;
    }
    out
}

fn c1_mass() -> Outcome {
    let (rho, depth) = (0.25, 4);
    let bi = gallery::bicantor(rho, depth)?;
    let bicantor_area = 1.0 + cantor_gaps(rho, depth).iter().map(|g| g.2 - g.1).sum::<f64>();
    let cases = [
        (entry("square").domain, 1.0),
        (entry("lshape").domain, shoelace(&[[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])),
        (entry("cusp").domain, simpson(|y| 2.0 * y.powi(3), 0.0, 1.0, 64)),
        (bi.domain, bicantor_area),
    ];
    let mut worst: f64 = 0.0;
    let mut sigmas: f64 = 0.0;
    for (i, (d, area)) in cases.iter().enumerate() {
        for th in random_dirs(20, 100 + i as u64) {
            let m = mu_exact(d, &th)?.total_mass;
            worst = worst.max((m - area).abs() / area);
        }
        for (seed, th) in random_dirs(20, 200 + i as u64).iter().enumerate() {
            let mu = mu_monte_carlo(d, th, 20_000, seed as u64)?;
            sigmas = sigmas.max((mu.total_mass - area).abs() / mu.standard_error.unwrap());
        }
    }
    Ok((worst <= 1e-9 && sigmas <= 3.0, format!("max rel err {worst:.2e}, max MC deviation {sigmas:.2}σ")))
}

fn c2_cantor() -> Outcome {
    let mut worst_w: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    for rho in [0.25, 1.0 / 3.0] {
        let d = Domain::intervals(cantor::gaps(rho, 12)?.iter().map(|g| (g.c, g.d)).collect())?;
        let mu = mu_exact(&d, &Direction::new(&[1.0])?)?;
        let gaps = cantor_gaps(rho, 12);
        if mu.atoms.len() != gaps.len() {
            return Ok((false, format!("{} atoms for {} gaps", mu.atoms.len(), gaps.len())));
        }
        let mut atoms: Vec<(f64, f64)> = mu.atoms.iter().map(|a| (a.span.z[0], a.weight)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (k, _, d) in &gaps {
            let i = atoms.partition_point(|a| a.0 < d - 1e-12);
            match atoms.get(i) {
                Some(a) if (a.0 - d).abs() <= 1e-12 => worst_w = worst_w.max((a.1 - rho.powi(*k as i32 + 1)).abs()),
                _ => return Ok((false, format!("no atom at {d}"))),
            }
        }
        let closed = (rho - rho * (2.0 * rho).powi(13)) / (1.0 - 2.0 * rho);
        worst_t = worst_t.max((mu.total_mass - closed).abs());
    }
    Ok((worst_w <= 1e-15 && worst_t <= 1e-12, format!("max atom error {worst_w:.1e}, max total error {worst_t:.1e}")))
}

fn c3_cusp() -> Outcome {
    let d = Domain::cusp();
    let th = Direction::new(&[1.0, 0.0])?;
    let mu = mu_exact(&d, &th)?;
    let cfg = QuadConfig::default();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut ratios = Vec::new();
    for alpha in [0.6, 0.75, 0.9] {
        let u = gallery::cusp(alpha)?.field("u").unwrap();
        let v = mu.integrate_boundary(|span| Ok(trace_on_span(u.as_ref(), &th, span, &cfg)?.at_beta.value.powi(2)))?.value;
        worst = worst.max((v - 1.0 / (2.0 - alpha)).abs());
        let t = cusp_arclength_table(alpha, 0.5, 6)?;
        ok &= t.windows(2).all(|w| w[1].1 > w[0].1);
        let r = t[6].1 / t[0].1;
        ok &= r >= 10.0;
        ratios.push(format!("{r:.1}"));
    }
    Ok((ok && worst <= 1e-4, format!("max |∫γ²dμ − 1/(2−α)| {worst:.1e}, arclength growth ratios {}", ratios.join("/"))))
}

fn c4_green() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pairs: Vec<(Polynomial, Polynomial)> = (0..50).map(|_| (Polynomial::random(2, 3, &mut rng), Polynomial::random(2, 3, &mut rng))).collect();
    let cfg = CheckConfig::smooth();
    let mut worst: f64 = 0.0;
    for (i, name) in ["square", "lshape"].iter().enumerate() {
        let d = entry(name).domain;
        for th in even_dirs(8, 10.0 + 7.0 * i as f64) {
            let mu = mu_exact(&d, &th)?;
            for (u, v) in &pairs {
                worst = worst.max(check_green(u, v, &mu, &cfg)?.residual);
            }
        }
    }
    // cusp: the fibers shrink like x₂³ towards the tip
    let cusp = Domain::cusp();
    let fields = [ExprField::parse("x1 + x2^2", 2)?, ExprField::parse("exp(x2)*cos(x1)", 2)?, ExprField::parse("x1*x2 - 3*x2^3", 2)?];
    let gcfg = CheckConfig { rel_tol: 1e-3, ..CheckConfig::default() };
    let mut cusp_worst: f64 = 0.0;
    for th in [Direction::new(&[1.0, 0.0])?, Direction::new(&[-1.0, 0.0])?, Direction::new(&[0.0, 1.0])?, Direction::from_degrees(70.0)?] {
        let mu = mu_exact(&cusp, &th)?;
        for u in &fields {
            for v in &fields {
                cusp_worst = cusp_worst.max(check_green(u, v, &mu, &gcfg)?.residual);
            }
        }
    }
    // convergence on the cusp: a fixed low-order graded rule (the loose
    // tolerance switches adaptivity off), so the residual is quadrature error
    let coarse = QuadConfig { order: 2, grading_levels: 1, max_levels: 0, ..QuadConfig::default() }.with_tol(1.0);
    let base = CheckConfig { outer: coarse, inner: coarse, ..CheckConfig::default() };
    let (u, v) = (ExprField::parse("exp(x2)*cos(x1) + x2^-0.3", 2)?, ExprField::parse("cos(3*x1*x2)", 2)?);
    let mu = mu_exact(&cusp, &Direction::from_degrees(70.0)?)?;
    let r0 = check_green(&u, &v, &mu, &base)?.residual;
    let r1 = check_green(&u, &v, &mu, &base.refined())?.residual;
    Ok((worst <= 1e-6 && cusp_worst <= 1e-3 && r1 <= 0.5 * r0, format!("polygons {worst:.1e}, cusp {cusp_worst:.1e}, refinement {r0:.2e} → {r1:.2e}")))
}

fn c5_bounds() -> Outcome {
    // products of the lines carrying each boundary, so the trace vanishes
    let x1 = |a: f64, b: f64| Polynomial::affine(&[a, 0.0], b);
    let x2 = |a: f64, b: f64| Polynomial::affine(&[0.0, a], b);
    let domains = [
        (entry("square").domain, vec![x1(1.0, 0.0), x1(-1.0, 1.0), x2(1.0, 0.0), x2(-1.0, 1.0)]),
        (entry("lshape").domain, vec![x1(1.0, 0.0), x2(1.0, 0.0), x1(-1.0, 2.0), x2(-1.0, 2.0), x1(-1.0, 1.0), x2(-1.0, 1.0)]),
        (entry("fisdeuxd").domain, vec![x1(1.0, 0.0), x1(-1.0, 1.0), x2(1.0, 1.0), x2(-1.0, 1.0), x1(1.0, -0.5)]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = CheckConfig::smooth();
    let (mut worst, mut checks, mut poincare, mut skipped) = (f64::NEG_INFINITY, 0usize, 0usize, 0usize);
    for (d, lines) in &domains {
        let bubble = lines.iter().fold(Polynomial::constant(2, 1.0), |p, l| p.mul(l));
        let fields: Vec<Polynomial> = (0..100)
            .map(|i| {
                let p = Polynomial::random(2, 3, &mut rng);
                if i % 2 == 0 {
                    p
                } else {
                    p.mul(&bubble)
                }
            })
            .collect();
        for th in random_dirs(10, rng.random()) {
            let mu = mu_exact(d, &th)?;
            for u in &fields {
                for r in check_trace_bounds(u, &mu, &cfg)? {
                    worst = worst.max(r.lhs - r.rhs);
                    checks += 1;
                }
                match check_poincare(u, &mu, &cfg) {
                    Ok(r) => {
                        worst = worst.max(r.lhs - r.rhs);
                        poincare += 1;
                    }
                    Err(Error::HypothesisViolated(_)) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok((
        worst <= 1e-9 && poincare > 0,
        format!("{checks} trace bounds and {poincare} Poincaré checks ({skipped} skipped, nonzero trace), worst lhs − rhs {worst:.2e}"),
    ))
}

fn c6_consistency() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let fisund = entry("fisund");
    let plus = Direction::new(&[1.0])?;
    let dirs = [plus.clone(), plus.negate()];
    let mus: Vec<_> = dirs.iter().map(|t| mu_exact(&fisund.domain, t)).collect::<Result<_, _>>()?;
    let r = check_consistency(&fisund.domain, fisund.field("u").unwrap().as_ref(), &dirs, &mus, &[], 1e-8)?;
    let c = r.cluster_at(&[1.0]).unwrap();
    let mut vals: Vec<f64> = c.values.iter().map(|v| v.1).collect();
    vals.sort_by(f64::total_cmp);
    ok &= r.verdict == Verdict::Inconsistent && c.z[0] == 1.0 && vals.len() == 2 && vals[0].abs() <= 1e-9 && (vals[1] - 1.0).abs() <= 1e-9;
    notes.push(format!("fisund {vals:?} at z=1"));

    let fis2 = entry("fisdeuxd");
    let h = Direction::new(&[1.0, 0.0])?;
    let dirs = [h.clone(), h.negate()];
    let mus: Vec<_> = dirs.iter().map(|t| mu_exact(&fis2.domain, t)).collect::<Result<_, _>>()?;
    let probes: Vec<_> = [0.2, 0.5, 0.8].iter().map(|s| point(&[0.5, *s])).collect();
    let r = check_consistency(&fis2.domain, fis2.field("u").unwrap().as_ref(), &dirs, &mus, &probes, 1e-8)?;
    let mut worst: f64 = 0.0;
    for s in [0.2, 0.5, 0.8] {
        let c = r.cluster_at(&[0.5, s]).unwrap();
        if (c.z[0] - 0.5).abs() > 1e-12 || (c.z[1] - s).abs() > 1e-12 {
            ok = false;
        }
        worst = worst.max((c.spread - 2.0 * s).abs());
    }
    ok &= r.verdict == Verdict::Inconsistent && worst <= 1e-8;
    notes.push(format!("fisdeuxd spread error {worst:.1e}"));

    let sq = entry("square");
    let dirs: Vec<_> = [0.0, 30.0, 90.0, 150.0, 210.0, 330.0].iter().map(|a| Direction::from_degrees(*a)).collect::<Result<_, _>>()?;
    let mus: Vec<_> = dirs.iter().map(|t| mu_exact(&sq.domain, t)).collect::<Result<_, _>>()?;
    for name in ["smooth", "bubble"] {
        let r = check_consistency(&sq.domain, sq.field(name).unwrap().as_ref(), &dirs, &mus, &[], 1e-8)?;
        ok &= r.verdict == Verdict::Consistent;
        notes.push(format!("square/{name} {:?} over {} clusters, spread {:.1e}", r.verdict, r.clusters.len(), r.max_spread));
    }
    Ok((ok, notes.join("; ")))
}

fn c7_lemma() -> Outcome {
    let reports = check_1d_lemma(200, 7)?;
    let ident = reports.iter().find(|r| r.check == "kernel_identity").unwrap();
    let ok = reports.iter().all(|r| r.pass) && ident.lhs <= 1e-10;
    let min_gap = reports[1..].iter().map(|r| r.rhs - r.lhs).fold(f64::INFINITY, f64::min);
    Ok((ok, format!("identity error {:.1e}, smallest inequality margin {min_gap:.2e}", ident.lhs)))
}

fn c8_serpent() -> Outcome {
    let e = gallery::serpent(64)?;
    let tail = gallery::serpent_riser_tail(64);
    let u = e.field("u").unwrap();
    let mut ok = tail < 1e-3;
    let mut means = Vec::new();
    for k in [16u64, 32, 64] {
        let m = gallery::serpent_column_mean(&e.domain, u.as_ref(), k)?;
        ok &= m >= ((k - 1) as f64).powf(0.25);
        means.push(format!("k={k}: {m:.4} ≥ {:.4}", ((k - 1) as f64).powf(0.25)));
    }
    let mu = mu_exact(&e.domain, &Direction::new(&[0.0, 1.0])?)?;
    let energy = bound_terms(u.as_ref(), &mu, &CheckConfig::default())?.dtheta_sq.value;
    let partial: f64 = (1..=64).map(gallery::serpent_riser_energy).sum();
    ok &= (energy - partial).abs() <= 1e-9 * partial;
    Ok((ok, format!("tail {tail:.2e}, ∫|∂₂u|² {energy:.6} (series {partial:.6}), {}", means.join(", "))))
}

fn c9_g_pair() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sq = entry("square").domain;
    let cfg = CheckConfig::smooth();
    let mut worst: f64 = 0.0;
    for th in random_dirs(20, 90) {
        let (u, v) = (Polynomial::random(2, 3, &mut rng), Polynomial::random(2, 3, &mut rng));
        let mu = mu_exact(&sq, &th)?;
        let g = green_rhs_via_g(&u, &v, &mu, &cfg)?.value;
        worst = worst.max((g - check_green(&u, &v, &mu, &cfg)?.rhs).abs());
    }
    Ok((worst <= 1e-9, format!("max |G± form − Green rhs| {worst:.1e}")))
}

fn c10_negligible() -> Outcome {
    let fis2 = entry("fisdeuxd").domain;
    let face = mu_exact(&fis2, &Direction::new(&[1.0, 0.0])?)?.measure_of(|z| (z[0] - 0.5).abs() < 1e-12 && z[1] > 0.0)?;
    let (m1, s1) = gallery::slit_tube_mass_mc(1e-3, 1_000_000, 1)?;
    let (m2, s2) = gallery::slit_tube_mass_mc(5e-4, 1_000_000, 2)?;
    let ok = (face - 0.5).abs() <= 1e-12 && m1 <= 0.01 && m2 < m1;
    Ok((ok, format!("slit face {face}, tube mass {m1:.2e}±{s1:.0e} at ε=1e-3, {m2:.2e}±{s2:.0e} at ε=5e-4")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("mass conservation", 60, c1_mass),
        ("cantor golden values", 1, c2_cantor),
        ("cusp example", 30, c3_cusp),
        ("green identity", 300, c4_green),
        ("inequality suite", 300, c5_bounds),
        ("counterexample detection", 30, c6_consistency),
        ("one-dimensional lemma", 5, c7_lemma),
        ("serpent example", 30, c8_serpent),
        ("G± bilinear form", 60, c9_g_pair),
        ("negligibility probes", 60, c10_negligible),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*limit);
        let (pass, detail) = match out {
            Ok((p, d)) => (p && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.2}s, limit {limit}s{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            if in_time { "" } else { ", over time" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
