//! The worked examples on `P^3`, shipped as model files, and the auxiliary
//! integrals that appear in their analysis.

use std::f64::consts::PI;

use crate::model::ProjectiveModel;
use crate::quad::{
    integrate_1d, integrate_with, Integrand, QuadError, QuadOptions, QuadResult, Range, VarSpec,
};

pub const NAMES: [&str; 4] = ["p3-trivial-s1", "p3-trivial-s2", "p3-o1", "p3-points"];

fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "p3-trivial-s1" => include_str!("../../../fixtures/p3-trivial-s1.toml"),
        "p3-trivial-s2" => include_str!("../../../fixtures/p3-trivial-s2.toml"),
        "p3-o1" => include_str!("../../../fixtures/p3-o1.toml"),
        "p3-points" => include_str!("../../../fixtures/p3-points.toml"),
        _ => return None,
    })
}

/// A shipped example by name.
pub fn model(name: &str) -> Option<ProjectiveModel> {
    source(name).map(|s| ProjectiveModel::from_toml_str(s).expect("shipped fixture parses"))
}

/// `|psi|` at the far end of the face `r_1 = r_2` in `p3-trivial-s2`:
/// `psi -> log(r^4 / (2 r^2)^2) - 1 = -1 - 2 log 2` as `r -> inf`.
pub fn trivial_s2_face_limit() -> f64 {
    1.0 + 2.0 * std::f64::consts::LN_2
}

/// For `p3-trivial-s1`, after one integration by parts:
/// `R(eps) = int_{(0,inf)^3} 2 pi^3 du / (L^eps (1 + u2 + u3) (1 + |u|)^3)`
/// with `L = b + log|psi|`, `u_j = r_j^2`.
pub fn trivial_s1_integrand(eps: f64, b: f64) -> Result<Integrand, QuadError> {
    Integrand::new(vec![VarSpec::unbounded(0.0, 2.0); 3], move |u| {
        let s = u[0] + u[1] + u[2];
        let abs_psi = 1.0 + s.ln_1p() - u[0].ln();
        let l = b + abs_psi.ln();
        2.0 * PI.powi(3) * (-eps * l.ln()).exp() / ((1.0 + u[1] + u[2]) * (1.0 + s).powi(3))
    })
}

/// The remainder `I(eps)` of `p3-trivial-s2`, with `u_1 = v u_2`:
///
/// ```text
/// I = 4 pi^3 eps int_0^1 dv int du2 du3
///       v u2 / ((1 + u2(1-v) + u3)^2 (1 + u2(1+v) + u3)^2 |psi| L^{1+eps})
/// ```
///
/// where `psi = log(v u2^2) - 2 log(1 + u2(1+v) + u3) - 1`. Finite for every
/// real `eps`, so this also gives its continuation.
pub fn trivial_s2_remainder_integrand(eps: f64, b: f64) -> Result<Integrand, QuadError> {
    Integrand::new(
        vec![
            VarSpec::bounded(1.0, 0.0),
            VarSpec::unbounded(0.0, 2.0),
            VarSpec::unbounded(0.0, 2.0),
        ],
        move |u| {
            let (v, a, c) = (u[0], u[1], u[2]);
            let plus = 1.0 + a * (1.0 + v) + c;
            let minus = 1.0 + a * (1.0 - v) + c;
            let abs_psi = 1.0 + 2.0 * plus.ln() - v.ln() - 2.0 * a.ln();
            let l = b + abs_psi.ln();
            4.0 * PI.powi(3) * eps * v * a
                / (minus * minus * plus * plus * abs_psi * l.powf(1.0 + eps))
        },
    )
}

pub fn trivial_s2_remainder(eps: f64, b: f64, opts: QuadOptions) -> Result<QuadResult, QuadError> {
    if eps == 0.0 {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    integrate_with(&trivial_s2_remainder_integrand(eps, b)?, opts)
}

/// The comparison function of `p3-points`,
/// `F(eps) = 4 pi^3 eps int_{[0,1]^3} du / (u1 u2 u3 |psi_0|^3 L_0^{1+eps})`
/// with `|psi_0| = 1 - log(u1 u2 u3)`, `L_0 = b + log|psi_0|`; `eps > 0`.
///
/// With `z = log(1 + t1 + t2 + t3)` and `w = (1 + z/b)^-eps` this is
/// `2 pi^3 b^-eps int_0^1 (1 - e^-z)^2 dw`.
pub fn points_comparison(eps: f64, b: f64, opts: QuadOptions) -> Result<QuadResult, QuadError> {
    if eps == 0.0 {
        return Ok(QuadResult {
            value: 2.0 * PI.powi(3),
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    if !(eps > 0.0) {
        return Err(QuadError::InvalidIntegrand(format!(
            "comparison function needs eps >= 0, got {eps}"
        )));
    }
    let scale = 2.0 * PI.powi(3) * b.powf(-eps);
    let mut r = integrate_1d(Range::Finite(0.0, 1.0), opts, |p| {
        let ln_w = if p.x > 0.5 {
            (-p.to_hi).ln_1p()
        } else {
            p.x.ln()
        };
        let z = b * (-ln_w / eps).exp_m1();
        let g = -(-z).exp_m1();
        g * g
    })?;
    r.value *= scale;
    r.error_estimate *= scale;
    Ok(r)
}

/// The comparison function as a one-dimensional integrand in
/// `rho = t1 + t2 + t3`. Its tail decays only like `rho^-1 log(rho)^{-1-eps}`,
/// so it suits large `eps`.
pub fn points_comparison_integrand(eps: f64, b: f64) -> Result<Integrand, QuadError> {
    Integrand::new(
        vec![VarSpec::unbounded(2.0, 1.0 + eps.max(0.5))],
        move |u| {
            let rho = u[0];
            let frac = rho / (1.0 + rho);
            2.0 * PI.powi(3) * eps * frac * frac / ((1.0 + rho) * (b + rho.ln_1p()).powf(1.0 + eps))
        },
    )
}
