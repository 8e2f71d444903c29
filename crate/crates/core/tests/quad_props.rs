use lcnorm::quad::{integrate, mc_estimate, Integrand, VarSpec};

fn cube_example() -> Integrand {
    // int_{(0,inf)^3} 2 da db dc / ((1+b+c)(1+a+b+c)^3) = 1/2
    Integrand::new(vec![VarSpec::unbounded(0.0, 2.0); 3], |u| {
        2.0 / ((1.0 + u[1] + u[2]) * (1.0 + u[0] + u[1] + u[2]).powi(3))
    })
    .unwrap()
}

#[test]
fn spec_examples() {
    let g = Integrand::new(vec![VarSpec::unbounded(0.0, 2.0)], |u| {
        (1.0 + u[0]).powi(-2)
    })
    .unwrap();
    let r = integrate(&g, 1e-8).unwrap();
    assert!((r.value - 1.0).abs() <= 1e-8, "{r:?}");

    let r = integrate(&cube_example(), 1e-6).unwrap();
    assert!((r.value - 0.5).abs() <= 5e-7, "{r:?}");

    let g = Integrand::new(vec![VarSpec::bounded(1.0, -0.5)], |u| u[0].powf(-0.5)).unwrap();
    let r = integrate(&g, 1e-8).unwrap();
    assert!((r.value - 2.0).abs() <= 2e-8, "{r:?}");
}

#[test]
fn monte_carlo_agrees() {
    let g = cube_example();
    let mc = mc_estimate(&g, 1_000_000, 2024);
    assert!((mc.value - 0.5).abs() <= 3.0 * mc.error_estimate, "{mc:?}");
    let q = integrate(&g, 1e-7).unwrap();
    assert!((q.value - mc.value).abs() <= 4.0 * (q.error_estimate + mc.error_estimate));
}

#[test]
fn linearity() {
    let g1 = Integrand::new(vec![VarSpec::bounded(1.0, -0.5); 2], |u| {
        u[0].powf(-0.5) * u[1].powf(-0.5) / (1.0 + u[0] + u[1])
    })
    .unwrap();
    let g2 = Integrand::new(vec![VarSpec::bounded(1.0, -0.5); 2], |u| {
        (u[0] + u[1]).exp()
    })
    .unwrap();
    let a = -2.5;
    let tol = 1e-8;
    let combo = g1.combine(a, &g2).unwrap();
    let lhs = integrate(&combo, tol).unwrap().value;
    let rhs = a * integrate(&g1, tol).unwrap().value + integrate(&g2, tol).unwrap().value;
    assert!((lhs - rhs).abs() <= 2.0 * tol * lhs.abs().max(rhs.abs()));
}

#[test]
fn tightening_tolerance_does_not_hurt() {
    let cases: Vec<(Integrand, f64)> = vec![
        (
            Integrand::new(vec![VarSpec::unbounded(0.0, 2.0)], |u| {
                (1.0 + u[0]).powi(-2)
            })
            .unwrap(),
            1.0,
        ),
        (
            Integrand::new(vec![VarSpec::bounded(1.0, -0.5)], |u| u[0].powf(-0.5)).unwrap(),
            2.0,
        ),
        (cube_example(), 0.5),
    ];
    for (g, exact) in cases {
        let mut last = f64::INFINITY;
        for tol in [1e-4, 1e-6, 1e-8] {
            let err = (integrate(&g, tol).unwrap().value - exact).abs();
            // Differences at the rounding level are not meaningful.
            assert!(err <= last + 1e-12 * exact, "tol {tol}: {err} > {last}");
            last = err;
        }
    }
}
