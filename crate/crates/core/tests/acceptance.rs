//! One line per acceptance criterion. Runs without the test harness so the
//! lines are always printed.

use std::f64::consts::{E, PI};
use std::process::ExitCode;

use lcnorm::extend::{find_cmin, gram, loewner_gap, CMatrix};
use lcnorm::fixtures;
use lcnorm::model::{ProjectiveModel, Section};
use lcnorm::quad::{integrate_with, mc_estimate, QuadOptions};
use lcnorm::residue::{extrapolate_to_zero, sym_coeff, xlogx_bound, ResidueEngine};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

const EPS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

fn opts() -> QuadOptions {
    QuadOptions::with_tol(1e-8)
}

fn pi3() -> f64 {
    PI.powi(3)
}

fn fixture(name: &str) -> ProjectiveModel {
    fixtures::model(name).expect("shipped fixture")
}

/// The section each example is about.
fn subject(name: &str) -> Section {
    let m = fixture(name);
    match name {
        "p3-o1" => m.section("f3").unwrap().clone(),
        _ => m.sections[0].clone(),
    }
}

fn criterion_1() -> Outcome {
    let face = fixtures::trivial_s2_face_limit().ln();
    let f = subject("p3-trivial-s2");
    let (mut ok, mut worst, mut worst_naive) = (true, 0.0f64, 0.0f64);
    for b in [1.0, E] {
        let m = fixture("p3-trivial-s2").with_log_scale(b)?;
        let e = ResidueEngine::new(&m, opts())?;
        for eps in EPS {
            let lhs = e.rtf(&f, 2, eps)?.value
                + eps * e.rtf(&f, 2, 1.0 + eps)?.value
                + fixtures::trivial_s2_remainder(eps, b, opts())?.value;
            let d = (lhs - pi3() / (b + face).powf(eps)).abs();
            ok &= d <= 1e-4 * pi3();
            worst = worst.max(d);
            worst_naive = worst_naive.max((lhs - pi3() / b.powf(eps)).abs());
        }
    }
    Ok((
        ok,
        format!(
            "max |defect| {worst:.2e} against pi^3/(b + log(1 + 2 log 2))^eps (limit {:.2e}); \
             against pi^3/b^eps: {worst_naive:.3e}",
            1e-4 * pi3()
        ),
    ))
}

fn lc_and_extrapolation(
    name: &str,
    sigma: usize,
    want: f64,
) -> Result<(bool, String), Box<dyn std::error::Error>> {
    let e = ResidueEngine::new(&fixture(name), opts())?;
    let f = subject(name);
    let lc = e.lc_measure_norm(&f, sigma)?.value;
    let pts: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05]
        .iter()
        .map(|&eps| e.rtf(&f, sigma, eps).map(|r| (eps, r.value)))
        .collect::<Result<_, _>>()?;
    let lim = extrapolate_to_zero(&pts);
    let ok = (lc - want).abs() <= 1e-4 * want && (lim - lc).abs() <= 1e-3 * lc;
    Ok((
        ok,
        format!("{name}: closed form {lc:.10}, extrapolated {lim:.6}, expected {want:.10}"),
    ))
}

fn criterion_2() -> Outcome {
    let (a, da) = lc_and_extrapolation("p3-trivial-s2", 2, pi3())?;
    let (b, db) = lc_and_extrapolation("p3-points", 3, 2.0 * pi3())?;
    Ok((a && b, format!("{da}; {db}")))
}

fn criterion_3() -> Outcome {
    let oracle = integrate_with(&fixtures::trivial_s1_integrand(0.0, 1.0)?, opts())?.value;
    let e = ResidueEngine::new(&fixture("p3-trivial-s1"), opts())?;
    let f = subject("p3-trivial-s1");
    let lc = e.lc_measure_norm(&f, 1)?.value;
    let grid = [0.1, 0.25, 0.5, 1.0, 1.5, 2.0];
    let vals: Vec<f64> = grid
        .iter()
        .map(|&x| e.rtf(&f, 1, x).map(|r| r.value))
        .collect::<Result<_, _>>()?;
    let want = pi3() / 2.0;
    let ok = (lc - want).abs() <= 1e-4 * want
        && (oracle - want).abs() <= 1e-4 * want
        && vals.windows(2).all(|w| w[1] <= w[0]);
    Ok((ok, format!("R(0) = {lc:.10}, iterated-integral oracle {oracle:.10}, pi^3/2 = {want:.10}; R on {grid:?} nonincreasing")))
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, sigma) in [("p3-trivial-s2", 2), ("p3-o1", 2), ("p3-points", 3)] {
        let e = ResidueEngine::new(&fixture(name).with_log_scale(1.0)?, opts())?;
        let f = subject(name);
        let r0 = e.lc_measure_norm(&f, sigma)?.value;
        let mut slack = f64::INFINITY;
        for eps in EPS {
            slack = slack.min(r0 - e.rtf(&f, sigma, eps)?.value);
        }
        ok &= slack >= 0.0;
        detail.push(format!("{name} slack {slack:.4}"));
    }
    Ok((ok, detail.join(", ")))
}

fn off_diagonal(g: &CMatrix) -> f64 {
    let n = g.nrows();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| g[(i, j)].norm())
        .fold(0.0, f64::max)
}

fn criterion_5() -> Outcome {
    let m = fixture("p3-o1");
    let mut ok = true;
    let mut detail = Vec::new();
    for eps in [0.5, 1.0] {
        let (g, _) = gram(&m, &m.sections, 2, eps, opts())?;
        let min_diag = (0..4).map(|i| g[(i, i)].re).fold(f64::INFINITY, f64::min);
        let off = off_diagonal(&g);
        ok &= off <= 1e-6 * min_diag;
        detail.push(format!(
            "eps {eps}: off-diagonal {off:.1e} / min diagonal {min_diag:.4}"
        ));
    }
    let (g0, _) = gram(&m, &m.sections, 2, 0.0, opts())?;
    let d: Vec<f64> = (0..4).map(|i| g0[(i, i)].re).collect();
    let floor = d[0].min(d[3]);
    ok &= d[1] <= 1e-8 * floor && d[2] <= 1e-8 * floor;
    detail.push(format!("eps 0 diagonal {d:?}"));
    Ok((ok, detail.join("; ")))
}

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let expected = [
        ("p3-trivial-s1", 1, pi3() / 2.0),
        ("p3-trivial-s2", 2, pi3()),
        ("p3-o1", 2, pi3() / 2.0),
        ("p3-points", 3, 2.0 * pi3()),
    ];
    for (name, sigma, want) in expected {
        let e = ResidueEngine::new(&fixture(name), opts())?;
        let f = subject(name);
        let d = e.rtf(&f, sigma, 0.5)?;
        let c = e.rtf_continued(&f, sigma, 0.5)?;
        ok &= (d.value - c.value).abs() <= 4.0 * (d.error + c.error);
        for k in 0..=6 {
            ok &= e
                .rtf_continued(&f, sigma, -0.25 * k as f64)?
                .value
                .is_finite();
        }
        let at0 = e.rtf_continued(&f, sigma, 0.0)?.value;
        ok &= (at0 - want).abs() <= 1e-4 * want;
        detail.push(format!(
            "{name}: |direct - continued| {:.1e}, R(0) {at0:.8}",
            (d.value - c.value).abs()
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in fixtures::NAMES {
        let m = fixture(name);
        let sigma = m.sigma_mlc();
        let r = find_cmin(&m, &m.sections, sigma, (0.5, 20.0), opts())?;
        let at = r.b_star.max(1.0);
        let gap = loewner_gap(&m, &m.sections, sigma, at, opts())?;
        let gap1 = loewner_gap(&m, &m.sections, sigma, 1.0, opts())?;
        ok &= (0.5..=20.0).contains(&r.b_star) && gap >= -1e-8 && gap1 >= -1e-8;
        detail.push(format!(
            "{name}: b* {}, gap at {at} {gap:.4}, at 1 {gap1:.4}",
            r.b_star
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut xlogx, mut eq) = (true, 0.0f64);
    for _ in 0..10_000 {
        let (eps, s) = (rng.gen_range(0.01..5.0), rng.gen_range(0.0..5.0));
        let (l, r) = xlogx_bound(rng.gen_range(f64::MIN_POSITIVE..=1.0), eps, s)?;
        xlogx &= l <= r * (1.0 + 1e-12);
        let (l, r) = xlogx_bound((-s / eps).exp(), eps, s)?;
        eq = eq.max((l - r).abs() / r.max(1.0));
    }
    xlogx &= eq <= 1e-12;

    let mut pascal = true;
    for sigma in 2..=8usize {
        for s in 1..sigma - 1 {
            let step = BigRational::new(BigInt::from(1), BigInt::from(sigma - 1));
            pascal &= sym_coeff(sigma, s)?
                == sym_coeff(sigma - 1, s)? + sym_coeff(sigma - 1, s - 1)? * step;
        }
    }

    let s1 = fixture("p3-trivial-s1");
    let e = ResidueEngine::new(&s1, opts())?;
    let mut smooth = true;
    for eps in [0.5, 1.0, 2.0] {
        smooth &= e.smooth_weight_bound_check(&s1.sections[0], 1, eps)?.holds;
    }

    let o1 = fixture("p3-o1");
    let (g, _) = gram(&o1, &o1.sections, 2, 0.0, opts())?;
    let mut invariant = true;
    for b in [1.0, 2.0, 5.0] {
        let (gb, _) = gram(&o1.normalize(b)?, &o1.sections, 2, 0.0, opts())?;
        invariant &= g
            .iter()
            .zip(gb.iter())
            .all(|(x, y)| (x - y).norm() <= 1e-10 * x.norm());
    }

    let mut mc = true;
    let mut worst = 0.0f64;
    for g in [
        fixtures::trivial_s1_integrand(0.5, 1.0)?,
        fixtures::trivial_s2_remainder_integrand(0.5, 1.0)?,
        fixtures::points_comparison_integrand(3.0, 1.0)?,
    ] {
        let q = integrate_with(&g, opts())?;
        let m = mc_estimate(&g, 400_000, 8);
        let z = (q.value - m.value).abs() / (q.error_estimate + m.error_estimate);
        mc &= z <= 4.0;
        worst = worst.max(z);
    }
    Ok((
        xlogx && pascal && smooth && invariant && mc,
        format!(
            "x log x {xlogx} (equality defect {eq:.1e}), Pascal {pascal}, smooth weight {smooth}, \
             G0 b-invariance {invariant}, Monte Carlo {mc} (worst {worst:.2} combined errors)"
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("p3-trivial-s2 recursion identity", criterion_1),
        ("lc-measure values", criterion_2),
        ("p3-trivial-s1 limit and decrease", criterion_3),
        ("R(eps) <= R(0) at b = 1", criterion_4),
        ("p3-o1 orthogonality", criterion_5),
        ("analytic continuation", criterion_6),
        ("minimal normalisation", criterion_7),
        ("property suites", criterion_8),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        all &= ok;
        println!(
            "criterion {} {}: {name} -- {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
