use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lcnorm::extend::{find_cmin, gram, hermitian_defect, loewner_gap, GramPair};
use lcnorm::fixtures;
use lcnorm::model::{ProjectiveModel, Section};
use lcnorm::quad::{integrate_with, mc_estimate, Integrand, QuadOptions};
use lcnorm::report::{csv_table, Chart, Series};
use lcnorm::residue::{rising, sym_coeff, xlogx_bound, ResidueEngine, ResidueProfile, SymTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Command, Common, Example};

const DEFAULT_GRID: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 1.5, 2.0];
const IDENTITY_REL: f64 = 1e-8;

struct Config {
    model: ProjectiveModel,
    sigma: usize,
    grid: Vec<f64>,
    opts: QuadOptions,
    out: PathBuf,
    seed: u64,
}

fn load_model(spec: &str) -> Result<ProjectiveModel> {
    let path = Path::new(spec);
    if path.exists() {
        return ProjectiveModel::from_path(path).with_context(|| format!("model: reading {spec}"));
    }
    fixtures::model(spec)
        .with_context(|| format!("model: no file or shipped example named {spec:?}"))
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let grid: Vec<f64> = if let [a, b, n] = s.split(':').collect::<Vec<_>>()[..] {
        let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
        let n: usize = n.trim().parse()?;
        match n {
            0 => vec![],
            1 => vec![a],
            _ => (0..n)
                .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    } else {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .with_context(|| format!("eps grid: bad value {t:?}"))
            })
            .collect::<Result<_>>()?
    };
    if grid.is_empty() {
        bail!("eps grid is empty");
    }
    if grid.iter().any(|e| !e.is_finite()) {
        bail!("eps grid has a non-finite value");
    }
    Ok(grid)
}

fn resolve(c: &Common, default_model: Option<&str>) -> Result<Config> {
    let spec = c
        .model
        .as_deref()
        .or(default_model)
        .context("--model is required")?;
    let mut model = load_model(spec)?;
    if let Some(b) = c.b {
        model = model.with_log_scale(b).context("model: --b")?;
    }
    if !(c.tol > 0.0 && c.tol <= 1e-2) {
        bail!("--tol must lie in (0, 1e-2], got {}", c.tol);
    }
    let grid = match &c.eps_grid {
        Some(s) => parse_grid(s)?,
        None => DEFAULT_GRID.to_vec(),
    };
    let sigma = c.sigma.unwrap_or_else(|| model.sigma_mlc());
    fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
    Ok(Config {
        model,
        sigma,
        grid,
        opts: QuadOptions::with_tol(c.tol),
        out: c.out.clone(),
        seed: c.seed,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
    println!("wrote {}", p.display());
    Ok(())
}

#[derive(Default)]
struct Checks {
    failed: Vec<String>,
}

impl Checks {
    fn add(&mut self, name: impl Into<String>, ok: bool, detail: impl AsRef<str>) {
        let name = name.into();
        println!(
            "{} {name}: {}",
            if ok { "PASS" } else { "FAIL" },
            detail.as_ref()
        );
        if !ok {
            self.failed.push(name);
        }
    }

    fn finish(self) -> bool {
        for f in &self.failed {
            eprintln!("failed check: {f}");
        }
        self.failed.is_empty()
    }
}

pub fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Example { name, common } => cmd_example(name, &common),
        Command::Sweep {
            common,
            section,
            log_x,
        } => cmd_sweep(&common, section.as_deref(), log_x),
        Command::Gram { common } => cmd_gram(&common),
        Command::Cmin { common, b_range } => cmd_cmin(&common, &b_range),
        Command::Check { common } => cmd_check(&common),
    }
}

fn pick_section<'a>(model: &'a ProjectiveModel, name: Option<&str>) -> Result<&'a Section> {
    match name {
        Some(n) => model
            .section(n)
            .with_context(|| format!("model: no section named {n:?}")),
        None => model.sections.first().context("model: no sections"),
    }
}

fn profile_chart(p: &ResidueProfile, title: &str, lc: Option<f64>, log_x: bool) -> String {
    let mut series = vec![Series {
        label: format!("R({})", p.section),
        points: p.points.iter().map(|q| (q.eps, q.value)).collect(),
    }];
    if let Some(v) = lc {
        let (lo, hi) = p
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| {
                (a.min(q.eps), b.max(q.eps))
            });
        series.push(Series {
            label: "R(0)".into(),
            points: vec![(lo, v), (hi, v)],
        });
    }
    Chart {
        title: title.into(),
        x_label: "eps".into(),
        y_label: format!("R(eps)[{}]", p.sigma),
        log_x,
        series,
    }
    .to_svg()
}

/// Identity rows `eps, lhs, rhs, defect, tolerance`; only `eps > 0`.
fn identity_rows(
    e: &ResidueEngine,
    f: &Section,
    sigma: usize,
    grid: &[f64],
) -> Result<Vec<(f64, f64, f64, f64, f64)>> {
    let sym = SymTable::new(sigma)?.as_f64();
    let mut rows = Vec::new();
    for &eps in grid.iter().filter(|&&x| x > 0.0) {
        let mut lhs = e.rtf(f, sigma, eps)?;
        for (s, c) in sym.iter().enumerate().skip(1) {
            lhs = lhs
                + e.rtf(f, sigma, s as f64 + eps)?
                    .scale(eps * rising(eps, s) * c);
        }
        let rhs = e.recursion_rhs(f, sigma, eps)?;
        let tol = 4.0 * (lhs.error + rhs.error) + IDENTITY_REL * rhs.value.abs();
        rows.push((
            eps,
            lhs.value,
            rhs.value,
            (lhs.value - rhs.value).abs(),
            tol,
        ));
    }
    Ok(rows)
}

fn identity_csv(rows: &[(f64, f64, f64, f64, f64)]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.0.to_string(),
                r.1.to_string(),
                r.2.to_string(),
                r.3.to_string(),
                r.4.to_string(),
            ]
        })
        .collect();
    csv_table(&["epsilon", "lhs", "rhs", "defect", "tolerance"], &body)
}

/// Identity, continuation and monotonicity checks for one section.
fn section_checks(
    checks: &mut Checks,
    e: &ResidueEngine,
    f: &Section,
    sigma: usize,
    grid: &[f64],
) -> Result<f64> {
    let tag = &f.name;
    for (eps, lhs, rhs, defect, tol) in identity_rows(e, f, sigma, grid)? {
        checks.add(
            format!("{tag}: recursion identity at eps={eps}"),
            defect <= tol,
            format!("lhs {lhs:.10e}, rhs {rhs:.10e}, defect {defect:.2e}"),
        );
    }
    let lc = e.lc_measure_norm(f, sigma)?;
    let mut last = f64::INFINITY;
    let mut worst = f64::INFINITY;
    let mut ordered = true;
    for &eps in grid.iter().filter(|&&x| x > 0.0) {
        let r = e.rtf(f, sigma, eps)?;
        ordered &= r.value <= last + 4.0 * r.error;
        last = r.value;
        worst = worst.min(lc.value + lc.error - r.value);
    }
    if lc.value > 0.0 {
        checks.add(
            format!("{tag}: R(eps) <= R(0) and nonincreasing"),
            ordered && worst >= 0.0,
            format!("R(0) = {:.10e}, smallest slack {worst:.3e}", lc.value),
        );
    } else {
        // in H[sigma]: R rises from R(0) = 0, so there is nothing to compare
        println!(
            "NOTE {tag}: vanishes on the lc centres; R({}) = {last:.10e}",
            grid.last().copied().unwrap_or(0.0)
        );
    }
    let d = e.rtf(f, sigma, 0.5)?;
    let c = e.rtf_continued(f, sigma, 0.5)?;
    checks.add(
        format!("{tag}: continuation matches direct at eps=0.5"),
        (d.value - c.value).abs() <= 4.0 * (d.error + c.error) + 1e-12 * d.value.abs(),
        format!("{:.12e} vs {:.12e}", d.value, c.value),
    );
    let mut finite = true;
    for k in 0..=6 {
        finite &= e
            .rtf_continued(f, sigma, -0.25 * k as f64)?
            .value
            .is_finite();
    }
    let at0 = e.rtf_continued(f, sigma, 0.0)?;
    checks.add(
        format!("{tag}: continuation finite on [-1.5, 0], R(0) matches lc norm"),
        finite && (at0.value - lc.value).abs() <= 4.0 * (at0.error + lc.error) + 1e-9 * lc.value,
        format!("R(0) = {:.12e}, lc norm {:.12e}", at0.value, lc.value),
    );
    Ok(lc.value)
}

fn orthogonality_checks(
    checks: &mut Checks,
    model: &ProjectiveModel,
    sigma: usize,
    opts: QuadOptions,
) -> Result<()> {
    let basis = &model.sections;
    for eps in [0.5, 1.0] {
        let (g, _) = gram(model, basis, sigma, eps, opts)?;
        let n = g.nrows();
        let min_diag = (0..n).map(|i| g[(i, i)].re).fold(f64::INFINITY, f64::min);
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| g[(i, j)].norm())
            .fold(0.0, f64::max);
        checks.add(
            format!("Gram orthogonality at eps={eps}"),
            off <= 1e-6 * min_diag,
            format!("max off-diagonal {off:.3e}, min diagonal {min_diag:.6e}"),
        );
    }
    let (g0, _) = gram(model, basis, sigma, 0.0, opts)?;
    let diag: Vec<f64> = (0..g0.nrows()).map(|i| g0[(i, i)].re).collect();
    let big = diag.iter().cloned().fold(0.0, f64::max);
    let vanishing: Vec<&str> = basis
        .iter()
        .zip(&diag)
        .filter(|(_, &d)| d <= 1e-8 * big)
        .map(|(f, _)| f.name.as_str())
        .collect();
    checks.add(
        "lc-norm Gram diagonal",
        big > 0.0,
        format!("diagonal {diag:?}; vanishing on the lc centres: {vanishing:?}"),
    );
    Ok(())
}

fn cmd_example(ex: Example, common: &Common) -> Result<bool> {
    let cfg = resolve(common, Some(ex.name()))?;
    let name = ex.name();
    let (model, sigma) = (&cfg.model, cfg.sigma);
    let b = model.log_scale;
    let e = ResidueEngine::new(model, cfg.opts)?;
    let f = match ex {
        Example::O1 => model.section("f3").context("model: p3-o1 needs f3")?,
        _ => pick_section(model, None)?,
    };
    println!("{name}: section {}, sigma {sigma}, b {b}", f.name);

    let profile = e.profile(f, sigma, &cfg.grid)?;
    let rows = identity_rows(&e, f, sigma, &cfg.grid)?;
    let lc = e.lc_measure_norm(f, sigma)?;
    write(&cfg.out, &format!("{name}-profile.csv"), &profile.to_csv())?;
    write(
        &cfg.out,
        &format!("{name}-identity.csv"),
        &identity_csv(&rows),
    )?;
    write(
        &cfg.out,
        &format!("{name}-profile.svg"),
        &profile_chart(
            &profile,
            &format!("{name}: R(eps)[{sigma}]"),
            Some(lc.value),
            false,
        ),
    )?;

    let mut checks = Checks::default();
    section_checks(&mut checks, &e, f, sigma, &cfg.grid)?;
    let pi3 = PI.powi(3);
    let closed = |checks: &mut Checks, want: f64, label: &str| {
        checks.add(
            format!("R(0) = {label}"),
            (lc.value - want).abs() <= 1e-4 * want,
            format!("{:.10} vs {want:.10}", lc.value),
        );
    };
    match ex {
        Example::TrivialS1 => closed(&mut checks, pi3 / 2.0, "pi^3/2"),
        Example::TrivialS2 => {
            closed(&mut checks, pi3, "pi^3");
            let b_eff = b + fixtures::trivial_s2_face_limit().ln();
            for &eps in cfg.grid.iter().filter(|&&x| x > 0.0) {
                let r = e.rtf(f, sigma, eps)?;
                let r1 = e.rtf(f, sigma, 1.0 + eps)?;
                let i = fixtures::trivial_s2_remainder(eps, b, cfg.opts)?;
                let lhs = r.value + eps * r1.value + i.value;
                let want = pi3 / b_eff.powf(eps);
                checks.add(
                    format!("R(eps) + eps R(1+eps) + I(eps) = pi^3/(b + log(1 + 2 log 2))^eps at eps={eps}"),
                    (lhs - want).abs() <= 1e-4 * pi3,
                    format!("{lhs:.10} vs {want:.10} (pi^3/b^eps = {:.10})", pi3 / b.powf(eps)),
                );
            }
        }
        Example::O1 => orthogonality_checks(&mut checks, model, sigma, cfg.opts)?,
        Example::Points => {
            closed(&mut checks, 2.0 * pi3, "2 pi^3");
            for &eps in cfg.grid.iter().filter(|&&x| x > 0.0) {
                let r = e.rtf(f, sigma, eps)?;
                let big_f = fixtures::points_comparison(eps, b, cfg.opts)?;
                let slack = 4.0 * (r.error + big_f.error_estimate);
                checks.add(
                    format!("R(eps) <= F(eps) <= F(0) at eps={eps}"),
                    r.value <= big_f.value + slack && big_f.value <= 2.0 * pi3 + slack,
                    format!(
                        "{:.10} <= {:.10} <= {:.10}",
                        r.value,
                        big_f.value,
                        2.0 * pi3
                    ),
                );
            }
        }
    }
    Ok(checks.finish())
}

fn cmd_sweep(common: &Common, section: Option<&str>, log_x: bool) -> Result<bool> {
    let cfg = resolve(common, None)?;
    let f = pick_section(&cfg.model, section)?;
    let e = ResidueEngine::new(&cfg.model, cfg.opts)?;
    let profile = e.profile(f, cfg.sigma, &cfg.grid)?;
    let stem = format!("sweep-{}", f.name);
    write(&cfg.out, &format!("{stem}.csv"), &profile.to_csv())?;
    let title = format!("{}: R(eps)[{}] of {}", cfg.model.name, cfg.sigma, f.name);
    write(
        &cfg.out,
        &format!("{stem}.svg"),
        &profile_chart(&profile, &title, None, log_x),
    )?;
    for p in &profile.points {
        println!("eps {:>8}  R = {:.10e} +- {:.1e}", p.eps, p.value, p.error);
    }
    Ok(true)
}

fn cmd_gram(common: &Common) -> Result<bool> {
    let cfg = resolve(common, None)?;
    let pair = GramPair::compute(&cfg.model, &cfg.model.sections, cfg.sigma, cfg.opts)?;
    write(&cfg.out, "gram.csv", &pair.to_csv())?;
    let d = pair.decompose()?;
    println!(
        "hermitian defect G0 {:.1e}, G1 {:.1e}; dim H[{}] = {}, dim E = {}",
        hermitian_defect(&pair.g0),
        hermitian_defect(&pair.g1),
        cfg.sigma,
        d.kernel.ncols(),
        d.complement.ncols()
    );
    Ok(true)
}

fn cmd_cmin(common: &Common, range: &str) -> Result<bool> {
    let cfg = resolve(common, None)?;
    let parts: Vec<f64> = range
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("--b-range: bad value {t:?}"))
        })
        .collect::<Result<_>>()?;
    let [lo, hi] = parts[..] else {
        bail!("--b-range takes LO,HI");
    };
    let r = find_cmin(
        &cfg.model,
        &cfg.model.sections,
        cfg.sigma,
        (lo, hi),
        cfg.opts,
    )?;
    write(&cfg.out, "cmin.csv", &r.to_csv())?;
    println!(
        "b* = {} (gap {:.3e}, {} evaluations, {})",
        r.b_star,
        r.gap,
        r.iterations,
        if r.monotone { "bisection" } else { "grid scan" }
    );
    Ok(true)
}

/// Monte-Carlo against quadrature for the shipped examples' auxiliary
/// integrands.
fn mc_integrand(name: &str, b: f64) -> Result<Option<Integrand>> {
    Ok(match name {
        "p3-trivial-s1" => Some(fixtures::trivial_s1_integrand(0.5, b)?),
        "p3-trivial-s2" => Some(fixtures::trivial_s2_remainder_integrand(0.5, b)?),
        "p3-points" => Some(fixtures::points_comparison_integrand(3.0, b)?),
        _ => None,
    })
}

fn cmd_check(common: &Common) -> Result<bool> {
    let cfg = resolve(common, None)?;
    let (model, sigma) = (&cfg.model, cfg.sigma);
    let e = ResidueEngine::new(model, cfg.opts)?;
    let mut checks = Checks::default();

    for f in &model.sections {
        if e.lc_measure_norm(f, sigma).is_err() {
            checks.add(
                format!("{}: defined at sigma={sigma}", f.name),
                false,
                "not integrable",
            );
            continue;
        }
        section_checks(&mut checks, &e, f, sigma, &cfg.grid)?;
        if sigma == 1 {
            for eps in [0.5, 1.0, 2.0] {
                let w = e.smooth_weight_bound_check(f, sigma, eps)?;
                checks.add(
                    format!("{}: smooth-weight bound at eps={eps}", f.name),
                    w.holds,
                    format!("{:.6e} <= {:.6e}", w.lhs, w.rhs),
                );
            }
        }
    }

    let (g0, _) = gram(model, &model.sections, sigma, 0.0, cfg.opts)?;
    let (g1, _) = gram(model, &model.sections, sigma, 1.0, cfg.opts)?;
    checks.add(
        "Gram matrices hermitian",
        hermitian_defect(&g0) <= 1e-12 && hermitian_defect(&g1) <= 1e-12,
        format!(
            "defects {:.1e}, {:.1e}",
            hermitian_defect(&g0),
            hermitian_defect(&g1)
        ),
    );
    let mut worst = 0.0f64;
    for b in [1.0, 2.0, 5.0] {
        let (gb, _) = gram(&model.normalize(b)?, &model.sections, sigma, 0.0, cfg.opts)?;
        for (x, y) in g0.iter().zip(gb.iter()) {
            if x.norm() > 0.0 || y.norm() > 0.0 {
                worst = worst.max((x - y).norm() / x.norm().max(y.norm()));
            }
        }
    }
    checks.add(
        "G0 invariant under b in {1, 2, 5}",
        worst <= 1e-10,
        format!("largest relative change {worst:.1e}"),
    );
    let gap = loewner_gap(
        model,
        &model.sections,
        sigma,
        model.log_scale.max(1.0),
        cfg.opts,
    )?;
    checks.add(
        "extension inequality at b = max(1, b_model)",
        gap >= -1e-8,
        format!("eigenvalue gap {gap:.6e}"),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ok = true;
    let mut worst_eq = 0.0f64;
    for _ in 0..10_000 {
        let eps = rng.gen_range(0.01..5.0);
        let s = rng.gen_range(0.0..5.0);
        let x = rng.gen_range(f64::MIN_POSITIVE..=1.0);
        let (l, r) = xlogx_bound(x, eps, s)?;
        ok &= l <= r * (1.0 + 1e-12);
        let (l, r) = xlogx_bound((-s / eps).exp(), eps, s)?;
        worst_eq = worst_eq.max((l - r).abs() / r.max(1.0));
    }
    checks.add(
        "x^eps |log x|^s bound on 10^4 samples",
        ok && worst_eq <= 1e-12,
        format!("equality defect at the maximiser {worst_eq:.1e}"),
    );
    let mut pascal = true;
    for s_max in 2..=8usize {
        for s in 1..s_max - 1 {
            let lhs = sym_coeff(s_max, s)?;
            let rhs = sym_coeff(s_max - 1, s)?
                + sym_coeff(s_max - 1, s - 1)?
                    / num_rational::BigRational::from_integer((s_max as i64 - 1).into());
            pascal &= lhs == rhs;
        }
    }
    checks.add(
        "sym coefficients satisfy the Pascal rule for sigma <= 8",
        pascal,
        "exact rationals",
    );

    if let Some(g) = mc_integrand(&model.name, model.log_scale)? {
        let q = integrate_with(&g, cfg.opts)?;
        let m = mc_estimate(&g, 200_000, cfg.seed);
        checks.add(
            "quadrature agrees with Monte Carlo",
            (q.value - m.value).abs() <= 4.0 * (q.error_estimate + m.error_estimate),
            format!(
                "{:.8e} vs {:.8e} +- {:.1e}",
                q.value, m.value, m.error_estimate
            ),
        );
    }
    Ok(checks.finish())
}
