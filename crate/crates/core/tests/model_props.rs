use lcnorm::model::{lc_centres, LogTerm, ProjectiveModel, PsiSpec};
use proptest::prelude::*;

fn points_model() -> ProjectiveModel {
    ProjectiveModel {
        name: "points".into(),
        n: 3,
        degree: 4,
        phi_offset: 1.0,
        log_scale: 1.0,
        sigma: Some(3),
        psi: PsiSpec {
            log_terms: (1..=3).map(|index| LogTerm { index, coeff: 1.0 }).collect(),
            fs_coeff: 4.0,
            constant: 1.0,
        },
        sections: vec![],
    }
}

fn mixed_model() -> ProjectiveModel {
    ProjectiveModel {
        psi: PsiSpec {
            log_terms: vec![
                LogTerm {
                    index: 1,
                    coeff: 1.0,
                },
                LogTerm {
                    index: 3,
                    coeff: 0.5,
                },
            ],
            fs_coeff: 2.25,
            constant: 0.7,
        },
        ..points_model()
    }
}

fn chart_coords(x: &[f64], j: usize) -> Vec<f64> {
    (0..x.len())
        .filter(|&i| i != j)
        .map(|i| x[i] / x[j])
        .collect()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn psi_is_chart_independent(x in proptest::array::uniform4(0.2f64..3.0), j in 0usize..4, k in 0usize..4) {
        for m in [points_model(), mixed_model()] {
            let a = m.psi_eval(j, &chart_coords(&x, j)).unwrap();
            let b = m.psi_eval(k, &chart_coords(&x, k)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn normalize_keeps_total_weight(
        y in proptest::array::uniform3(0.05f64..1.0),
        j in 0usize..4,
        b in 1.0f64..6.0,
        k in 0.05f64..3.0,
    ) {
        let mut m = mixed_model();
        m.psi.constant = k;
        m.log_scale = 5.0;
        prop_assume!(m.validate().is_ok());
        let n = m.normalize(b).unwrap();
        prop_assert!(n.log_scale + n.min_abs_psi().ln() >= b - 1e-12);
        let w0 = -(m.phi_l_eval(j, &y).unwrap() + m.psi_eval(j, &y).unwrap());
        let w1 = -(n.phi_l_eval(j, &y).unwrap() + n.psi_eval(j, &y).unwrap());
        prop_assert!((w0.exp() - w1.exp()).abs() <= 1e-12 * w0.exp());
    }
}

#[test]
fn lc_centre_counts_are_binomial() {
    let (mut chart, _) = points_model().localize(0).unwrap();
    for js in 1..=6 {
        chart.lc_count = js;
        for s in 1..=js {
            assert_eq!(lc_centres(&chart, s).len(), binomial(js, s));
        }
        assert!(lc_centres(&chart, js + 1).is_empty());
    }
}

#[test]
fn localize_reproduces_psi_at_random_points() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for m in [points_model(), mixed_model()] {
        for chart in 0..=3 {
            let (c, _) = m.localize(chart).unwrap();
            for _ in 0..50 {
                let y: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..1.0)).collect();
                let local: Vec<f64> = c.coords.iter().map(|&i| y[i]).collect();
                let direct = m.psi_eval(chart, &y).unwrap();
                assert!((c.psi_eval(&local) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            }
        }
    }
}
