//! One monomial density on one chart: splitting into pieces, direct
//! quadrature, and the integration-by-parts chain.
//!
//! Local variables are ordered lc first. A piece assigns each variable a role
//! and carries a smooth factor `G(r)`; the rest of the integrand
//! (`|psi|`, `log|ell psi|`, the pole weights) is rebuilt from the roles.

use crate::expr::{Expr, Interval, RadialBox};
use crate::model::MonomialDensity;
use crate::quad::{integrate_box, Pt, QuadOptions, Range};

use super::sym::{identity_coeffs, rising};
use super::{Estimate, ResidueError};

const MAX_HALVINGS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Role {
    /// lc direction on `0 < u <= upper`, measure `du / u`.
    Lc { upper: f64 },
    /// `lo <= u <= hi` with weight `u^exp du`.
    Power { lo: f64, hi: f64, exp: f64 },
    /// Held at `u`; not integrated.
    Fixed { u: f64 },
    /// `0 <= r <= hi_r` with measure `dr` (left by an integration by parts).
    Deriv { hi_r: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct Piece {
    pub roles: Vec<Role>,
    pub g: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// `eps * int X / (|psi|^m L^{1+eps})`.
    Phi,
    /// `int X L^{-eps}`; only without lc directions.
    Psi,
}

/// Model constants shared by all terms.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Consts {
    pub fs_coeff: f64,
    pub constant: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Term {
    pub chart: usize,
    pub nu: Vec<f64>,
    pub e: Vec<f64>,
    /// Number of lc directions; they are local variables `0..p`.
    pub p: usize,
    pub q: f64,
    pub prefactor: f64,
    pub k: Consts,
    pub delta: f64,
    alpha: Expr,
}

impl Term {
    pub fn new(d: &MonomialDensity, k: Consts) -> Result<Term, ResidueError> {
        let n = d.nu.len();
        let is_lc = |i: usize| d.nu[i] == 1.0 && d.exponents[i] == -1.0;
        for i in (0..n).filter(|&i| !is_lc(i)) {
            if !(d.exponents[i] > -1.0) {
                return Err(ResidueError::NonIntegrable {
                    chart: d.chart,
                    var: i,
                    exponent: d.exponents[i],
                });
            }
        }
        let mut order: Vec<usize> = (0..n).filter(|&i| is_lc(i)).collect();
        let p = order.len();
        order.extend((0..n).filter(|&i| !is_lc(i)));
        let log1p_r2 = Expr::log(&Expr::add(&Expr::constant(1.0), &Expr::r2sum()));
        let alpha = Expr::sub(
            &Expr::neg(&Expr::scale(k.fs_coeff, &log1p_r2)),
            &Expr::constant(k.constant),
        );
        let mut t = Term {
            chart: d.chart,
            nu: order.iter().map(|&i| d.nu[i]).collect(),
            e: order.iter().map(|&i| d.exponents[i]).collect(),
            p,
            q: d.q,
            prefactor: d.prefactor,
            k,
            delta: 1.0,
            alpha,
        };
        t.delta = t.find_delta()?;
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    /// Cache key: the term is symmetric under permuting its non-lc variables.
    pub fn key(&self) -> Vec<u64> {
        let mut rest: Vec<(u64, u64)> = (self.p..self.dim())
            .map(|i| (self.nu[i].to_bits(), self.e[i].to_bits()))
            .collect();
        rest.sort_unstable();
        let mut key = vec![self.p as u64, self.q.to_bits(), self.prefactor.to_bits()];
        key.extend(rest.into_iter().flat_map(|(a, b)| [a, b]));
        key
    }

    /// `d psi / d log u_j` for an lc variable, as an expression in `r`.
    fn ibp_factor(&self, j: usize) -> Expr {
        Expr::add(
            &Expr::constant(self.nu[j]),
            &Expr::mul(&Expr::scale(0.5, &Expr::var(j)), &self.alpha.diff(j)),
        )
    }

    fn core_box(&self, delta: f64) -> RadialBox {
        RadialBox::new(
            (0..self.dim())
                .map(|v| {
                    if v < self.p {
                        Interval::new(0.0, delta.sqrt())
                    } else {
                        Interval::new(0.0, 1.0)
                    }
                })
                .collect(),
        )
    }

    fn find_delta(&self) -> Result<f64, ResidueError> {
        let factors: Vec<Expr> = (0..self.p).map(|j| self.ibp_factor(j)).collect();
        let mut delta = 1.0;
        for _ in 0..=MAX_HALVINGS {
            let dom = self.core_box(delta);
            if factors
                .iter()
                .all(|f| matches!(f.enclose(&dom), Ok(iv) if iv.lo > 0.0))
            {
                return Ok(delta);
            }
            delta *= 0.5;
        }
        Err(ResidueError::Subdivision {
            chart: self.chart,
            delta,
        })
    }

    fn smooth_factor(&self) -> Expr {
        let base = Expr::add(&Expr::constant(1.0), &Expr::r2sum());
        Expr::scale(self.prefactor, &Expr::powf(&base, self.q))
    }

    fn plain_role(&self, i: usize) -> Role {
        Role::Power {
            lo: 0.0,
            hi: 1.0,
            exp: self.e[i],
        }
    }

    /// The piece near the lc centre.
    fn core(&self) -> Piece {
        let roles = (0..self.dim())
            .map(|i| {
                if i < self.p {
                    Role::Lc { upper: self.delta }
                } else {
                    self.plain_role(i)
                }
            })
            .collect();
        Piece {
            roles,
            g: self.smooth_factor(),
        }
    }

    /// Pieces away from the lc centre: some lc variables in `[delta, 1]`.
    /// Without lc directions this is the whole polydisc.
    fn noncritical(&self) -> Vec<Piece> {
        if self.p == 0 {
            return vec![Piece {
                roles: (0..self.dim()).map(|i| self.plain_role(i)).collect(),
                g: self.smooth_factor(),
            }];
        }
        (1u32..1 << self.p)
            .map(|mask| {
                let roles = (0..self.dim())
                    .map(|i| {
                        if i >= self.p {
                            self.plain_role(i)
                        } else if mask & (1 << i) != 0 {
                            Role::Power {
                                lo: self.delta,
                                hi: 1.0,
                                exp: -1.0,
                            }
                        } else {
                            Role::Lc { upper: self.delta }
                        }
                    })
                    .collect();
                Piece {
                    roles,
                    g: self.smooth_factor(),
                }
            })
            .collect()
    }

    fn check_sigma(&self, sigma: usize) -> Result<(), ResidueError> {
        if self.p > sigma {
            return Err(ResidueError::Divergent {
                chart: self.chart,
                lc: self.p,
                sigma,
            });
        }
        Ok(())
    }

    /// Direct quadrature of the term; needs `eps > 0` when the term has
    /// exactly `sigma` lc directions.
    pub fn direct(
        &self,
        sigma: usize,
        eps: f64,
        opts: QuadOptions,
    ) -> Result<Estimate, ResidueError> {
        self.check_sigma(sigma)?;
        let mut acc = Estimate::ZERO;
        for piece in self.noncritical() {
            acc = acc + self.integrate(&piece, sigma, eps, Mode::Phi, opts)?;
        }
        if self.p > 0 {
            acc = acc + self.integrate(&self.core(), sigma, eps, Mode::Phi, opts)?;
        }
        Ok(acc)
    }

    /// Core piece at `x`: directly when that converges, otherwise by solving
    /// the recursion identity for it.
    fn core_at(&self, sigma: usize, x: f64, opts: QuadOptions) -> Result<Estimate, ResidueError> {
        if x > 0.0 || self.p < sigma {
            self.integrate(&self.core(), sigma, x, Mode::Phi, opts)
        } else {
            self.core_continued(sigma, x, opts)
        }
    }

    fn core_continued(
        &self,
        sigma: usize,
        eps: f64,
        opts: QuadOptions,
    ) -> Result<Estimate, ResidueError> {
        let mut acc = self.t_chain(self.core(), sigma, eps, opts)?;
        for (s, c) in identity_coeffs(sigma, self.p).into_iter().enumerate() {
            let s = s + 1;
            let w = eps * rising(eps, s) * c;
            if w != 0.0 {
                acc = acc - self.core_at(sigma, s as f64 + eps, opts)?.scale(w);
            }
        }
        Ok(acc)
    }

    /// Value at any real `eps`, using direct quadrature where it converges and
    /// the recursion identity for the critical core piece.
    pub fn continued(
        &self,
        sigma: usize,
        eps: f64,
        opts: QuadOptions,
    ) -> Result<Estimate, ResidueError> {
        self.check_sigma(sigma)?;
        let mut acc = Estimate::ZERO;
        for piece in self.noncritical() {
            acc = acc + self.integrate(&piece, sigma, eps, Mode::Phi, opts)?;
        }
        if self.p == sigma {
            acc = acc + self.core_continued(sigma, eps, opts)?;
        } else if self.p > 0 {
            acc = acc + self.integrate(&self.core(), sigma, eps, Mode::Phi, opts)?;
        }
        Ok(acc)
    }

    /// `X(eps) + eps sum_s (1+eps)..(s-1+eps) sym^s X(s+eps)` for this term,
    /// with the coefficients of codimension `sigma`. The core piece's
    /// combination comes from the integration-by-parts chain.
    pub fn rhs(
        &self,
        sigma: usize,
        eps: f64,
        sym: &[f64],
        opts: QuadOptions,
    ) -> Result<Estimate, ResidueError> {
        self.check_sigma(sigma)?;
        let weight = |s: usize| eps * rising(eps, s) * sym[s];
        let mut acc = Estimate::ZERO;
        for piece in self.noncritical() {
            acc = acc + self.integrate(&piece, sigma, eps, Mode::Phi, opts)?;
            for s in 1..sigma {
                let w = weight(s);
                if w != 0.0 {
                    let v = self.integrate(&piece, sigma, s as f64 + eps, Mode::Phi, opts)?;
                    acc = acc + v.scale(w);
                }
            }
        }
        if self.p > 0 {
            acc = acc + self.t_chain(self.core(), sigma, eps, opts)?;
            let own = identity_coeffs(sigma, self.p);
            for s in 1..sigma {
                let w = weight(s) - eps * rising(eps, s) * own.get(s - 1).copied().unwrap_or(0.0);
                if w.abs() > 1e-15 * weight(s).abs() {
                    acc = acc + self.core_at(sigma, s as f64 + eps, opts)?.scale(w);
                }
            }
        }
        Ok(acc)
    }

    /// Limit at `eps -> 0+` in closed form: the lc centre integral of the
    /// restricted density.
    pub fn lc_norm(&self, sigma: usize, opts: QuadOptions) -> Result<Estimate, ResidueError> {
        self.check_sigma(sigma)?;
        if self.p < sigma {
            return Ok(Estimate::ZERO);
        }
        let fact: f64 = (1..sigma).map(|j| j as f64).product();
        let nu_prod: f64 = self.nu[..self.p].iter().product();
        let roles: Vec<Role> = (0..self.dim())
            .map(|i| {
                if i < self.p {
                    Role::Fixed { u: 0.0 }
                } else {
                    self.plain_role(i)
                }
            })
            .collect();
        let piece = Piece {
            roles,
            g: self.smooth_factor(),
        };
        let tape = piece.g.compile();
        let (ranges, layout) = self.layout(&piece, 0);
        let mut r = vec![0.0; self.dim()];
        let mut scratch = Vec::new();
        let res = integrate_box(&ranges, opts, |pts| {
            let mut w = 1.0;
            for (slot, &(i, role)) in layout.iter().enumerate() {
                let (u, wt) = role_point(role, pts[slot]);
                r[i] = u.sqrt();
                w *= wt;
            }
            w * tape.eval_with(&r, &mut scratch)
        })?;
        Ok(Estimate::from(res).scale(1.0 / (fact * nu_prod)))
    }

    /// Integration-by-parts chain for a piece whose lc variables all sit in
    /// the core box: returns `X(eps) + eps sum_s c_s X(s+eps)` with the
    /// coefficients of [`identity_coeffs`], computed from faces and
    /// derivatives only.
    pub fn t_chain(
        &self,
        piece: Piece,
        m: usize,
        eps: f64,
        opts: QuadOptions,
    ) -> Result<Estimate, ResidueError> {
        let Some(i) = piece
            .roles
            .iter()
            .position(|r| matches!(r, Role::Lc { .. }))
        else {
            return self.integrate(&piece, m, eps, Mode::Phi, opts);
        };
        let h = Expr::checked_div(&piece.g, &self.ibp_factor(i), &self.core_box(self.delta))?;
        let mut face = piece.clone();
        face.roles[i] = Role::Fixed { u: self.delta };
        face.g = h.clone();
        let mut reg = piece;
        reg.roles[i] = Role::Deriv {
            hi_r: self.delta.sqrt(),
        };
        reg.g = h.diff(i);
        if m > 1 {
            let a = self.t_chain(face, m - 1, eps, opts)?;
            let b = self.t_chain(reg, m - 1, eps, opts)?;
            Ok((a - b).scale(1.0 / (m - 1) as f64))
        } else {
            debug_assert!(face.roles.iter().all(|r| !matches!(r, Role::Lc { .. })));
            let a = self.integrate(&face, 0, eps, Mode::Psi, opts)?;
            let b = self.integrate(&reg, 0, eps, Mode::Psi, opts)?;
            Ok(a - b)
        }
    }

    // Integration variables: non-lc integrated roles first, in order.
    fn layout(&self, piece: &Piece, p: usize) -> (Vec<Range>, Vec<(usize, Role)>) {
        let mut ranges = Vec::new();
        let mut layout = Vec::new();
        for (i, role) in piece.roles.iter().enumerate() {
            match *role {
                Role::Power { lo, hi, .. } => {
                    ranges.push(Range::Finite(lo, hi));
                    layout.push((i, *role));
                }
                Role::Deriv { hi_r } => {
                    ranges.push(Range::Finite(0.0, hi_r));
                    layout.push((i, *role));
                }
                _ => {}
            }
        }
        ranges.extend(std::iter::repeat_n(
            Range::Finite(0.0, 1.0),
            p.saturating_sub(1),
        ));
        (ranges, layout)
    }

    /// Direct quadrature of one piece with `|psi|^m` (mode `Phi`) or
    /// `L^{-eps}` (mode `Psi`).
    pub fn integrate(
        &self,
        piece: &Piece,
        m: usize,
        eps: f64,
        mode: Mode,
        opts: QuadOptions,
    ) -> Result<Estimate, ResidueError> {
        let n = self.dim();
        let lc: Vec<(usize, f64)> = piece
            .roles
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match r {
                Role::Lc { upper } => Some((i, *upper)),
                _ => None,
            })
            .collect();
        let p = lc.len();
        if mode == Mode::Psi && p > 0 {
            return Err(ResidueError::Contract(
                "L^-eps piece with lc directions".into(),
            ));
        }
        let critical = p > 0 && p == m;
        if critical && !(eps > 0.0) {
            return Err(ResidueError::EpsilonDomain {
                eps,
                what: "direct quadrature of a critical piece",
            });
        }
        if mode == Mode::Phi && eps == 0.0 {
            return Ok(Estimate::ZERO);
        }
        let tape = piece.g.compile();
        let (mut ranges, layout) = self.layout(piece, p);
        let fixed: Vec<(usize, f64)> = piece
            .roles
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match r {
                Role::Fixed { u } => Some((i, *u)),
                _ => None,
            })
            .collect();
        let Consts {
            fs_coeff: c,
            constant: k,
            lambda,
        } = self.k;
        let nu = &self.nu;
        let ln_upper: f64 = lc.iter().map(|&(i, up)| nu[i] * up.ln()).sum();
        let n_outer = layout.len();

        let mut r = vec![0.0; n];
        let mut omega = vec![0.0; p];
        let mut scratch = Vec::new();
        // Fills r for the non-lc variables; returns (weight, sum nu ln u).
        let outer = |pts: &[Pt], r: &mut [f64]| -> (f64, f64) {
            let mut w = 1.0;
            let mut s = 0.0;
            for (slot, &(i, role)) in layout.iter().enumerate() {
                let (u, wt) = role_point(role, pts[slot]);
                r[i] = u.sqrt();
                w *= wt;
                if nu[i] > 0.0 {
                    s += nu[i] * u.max(f64::MIN_POSITIVE).ln();
                }
            }
            for &(i, u) in &fixed {
                r[i] = u.sqrt();
                if nu[i] > 0.0 {
                    s += nu[i] * u.ln();
                }
            }
            (w, s)
        };
        let alpha = |r: &[f64]| -> f64 {
            let big_r: f64 = r.iter().map(|x| x * x).sum();
            -c * big_r.ln_1p() - k
        };

        if p == 0 {
            let res = integrate_box(&ranges, opts, |pts| {
                let (w, s) = outer(pts, &mut r);
                if w == 0.0 {
                    return 0.0;
                }
                let abs_psi = -(s + alpha(&r));
                let l = lambda + abs_psi.ln();
                let g = tape.eval_with(&r, &mut scratch);
                match mode {
                    Mode::Psi => g * w * (-eps * l.ln()).exp(),
                    Mode::Phi => eps * g * w / (abs_psi.powi(m as i32) * l.powf(1.0 + eps)),
                }
            })?;
            return Ok(res.into());
        }

        // Radial-simplex coordinates for the lc variables: t_i = -ln(u_i /
        // upper_i) = rho * omega_i.
        let n_simplex = p - 1;
        let simplex = move |pts: &[Pt], omega: &mut [f64]| -> f64 {
            let mut rest = 1.0;
            let mut jac = 1.0;
            for j in 0..n_simplex {
                let v = pts[j];
                omega[j] = rest * v.x;
                rest *= v.to_hi;
                jac *= v.to_hi.powi((n_simplex - 1 - j) as i32);
            }
            omega[n_simplex] = rest;
            jac
        };
        let mut total = Estimate::ZERO;
        for region in 0..2 {
            ranges.truncate(n_outer + n_simplex);
            ranges.push(match (region, critical) {
                (0, _) => Range::Finite(0.0, 1.0),
                (_, true) => Range::Finite(0.0, 1.0),
                (_, false) => Range::ToInfinity(0.0),
            });
            let res = integrate_box(&ranges, opts, |pts| {
                let (w, s) = outer(pts, &mut r);
                if w == 0.0 {
                    return 0.0;
                }
                let jac = simplex(&pts[n_outer..], &mut omega);
                let rp = pts[n_outer + n_simplex];
                // rho, and ln(rho) where it is cheaper than rho itself.
                let (rho, z, ratio_w) = match (region, critical) {
                    (0, _) => (rp.x, rp.x.ln(), None),
                    (_, true) => {
                        // w = (1 + ln rho)^-eps on the tail
                        let ln_w = if rp.x > 0.5 {
                            (-rp.to_hi).ln_1p()
                        } else {
                            rp.x.ln()
                        };
                        let z = (-ln_w / eps).exp_m1();
                        (z.exp(), z, Some(()))
                    }
                    (_, false) => (rp.x.exp(), rp.x, None),
                };
                let mut cw = 0.0;
                for (j, &(i, up)) in lc.iter().enumerate() {
                    let t = if omega[j] == 0.0 { 0.0 } else { rho * omega[j] };
                    r[i] = up.sqrt() * (-0.5 * t).exp();
                    cw += nu[i] * omega[j];
                }
                let beta = -(ln_upper + s + alpha(&r));
                let g = tape.eval_with(&r, &mut scratch);
                let x = g * w * jac;
                if x == 0.0 {
                    return 0.0;
                }
                // |psi| = rho * (cw + beta / rho)
                let per_rho = cw + if rho.is_infinite() { 0.0 } else { beta / rho };
                let ln_abs_psi = z + per_rho.ln();
                let l = lambda + ln_abs_psi;
                match (region, ratio_w) {
                    (0, _) => {
                        let abs_psi = rho * cw + beta;
                        eps * x * rho.powi(p as i32 - 1)
                            / (abs_psi.powi(m as i32) * (lambda + abs_psi.ln()).powf(1.0 + eps))
                    }
                    (_, Some(())) => {
                        let ratio = if z.is_infinite() {
                            1.0
                        } else {
                            1.0 / (1.0 + (lambda - 1.0 + per_rho.ln()) / (1.0 + z))
                        };
                        x * per_rho.powi(-(p as i32)) * ratio.powf(1.0 + eps)
                    }
                    _ => {
                        let tail =
                            ((p as f64 - m as f64) * ln_abs_psi - (1.0 + eps) * l.ln()).exp();
                        eps * x * per_rho.powi(-(p as i32)) * tail
                    }
                }
            })?;
            total = total + res.into();
        }
        Ok(total)
    }
}

// Value of `u` and the measure weight at a node for a non-lc role.
fn role_point(role: Role, pt: Pt) -> (f64, f64) {
    match role {
        Role::Power { lo, exp, .. } => {
            let u = if lo == 0.0 { pt.from_lo } else { pt.x };
            let w = if exp == 0.0 { 1.0 } else { u.powf(exp) };
            (u, w)
        }
        Role::Deriv { .. } => {
            let r = pt.from_lo;
            (r * r, 1.0)
        }
        Role::Fixed { u } => (u, 1.0),
        Role::Lc { .. } => unreachable!("lc variables use simplex coordinates"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn term(name: &str, chart: usize, monomial: &[u32]) -> Term {
        let m = fixtures::model(name).unwrap();
        let k = Consts {
            fs_coeff: m.psi.fs_coeff,
            constant: m.psi.constant,
            lambda: m.log_scale,
        };
        Term::new(&m.monomial_density(chart, monomial), k).unwrap()
    }

    // X(eps) + eps sum_s rising * c_s X(s+eps) from direct quadrature.
    fn combination(t: &Term, sigma: usize, eps: f64, opts: QuadOptions) -> Estimate {
        let core = t.core();
        let mut acc = t.integrate(&core, sigma, eps, Mode::Phi, opts).unwrap();
        for (s, c) in identity_coeffs(sigma, t.p).into_iter().enumerate() {
            let s = s + 1;
            let v = t
                .integrate(&core, sigma, s as f64 + eps, Mode::Phi, opts)
                .unwrap();
            acc = acc + v.scale(eps * rising(eps, s) * c);
        }
        acc
    }

    #[test]
    fn chain_matches_direct_at_full_codimension() {
        let opts = QuadOptions::with_tol(1e-8);
        let t = term("p3-trivial-s2", 0, &[0, 0, 0, 0]);
        assert_eq!(t.p, 2);
        for eps in [0.25, 1.0] {
            let lhs = combination(&t, 2, eps, opts);
            let rhs = t.t_chain(t.core(), 2, eps, opts).unwrap();
            assert!(
                (lhs.value - rhs.value).abs() <= 4.0 * (lhs.error + rhs.error) + 1e-9 * rhs.value,
                "eps {eps}: {lhs:?} vs {rhs:?}"
            );
        }
    }

    #[test]
    fn chain_matches_direct_below_full_codimension() {
        // x1 dx on P^3 with lc hyperplanes X1, X2: on U0 only u2 stays lc.
        let opts = QuadOptions::with_tol(1e-8);
        let t = term("p3-o1", 0, &[0, 1, 0, 0]);
        assert_eq!(t.p, 1);
        assert_eq!(identity_coeffs(2, 1), vec![1.0]);
        for eps in [0.25, 1.0, -0.5] {
            let lhs = combination(&t, 2, eps, opts);
            let rhs = t.t_chain(t.core(), 2, eps, opts).unwrap();
            assert!(
                (lhs.value - rhs.value).abs()
                    <= 4.0 * (lhs.error + rhs.error) + 1e-9 * rhs.value.abs(),
                "eps {eps}: {lhs:?} vs {rhs:?}"
            );
        }
        // it carries no mass at eps = 0
        assert_eq!(t.lc_norm(2, opts).unwrap(), Estimate::ZERO);
    }

    #[test]
    fn too_many_lc_directions_diverge() {
        let t = term("p3-points", 0, &[0, 0, 0, 0]);
        let opts = QuadOptions::with_tol(1e-6);
        assert!(matches!(
            t.direct(2, 0.5, opts),
            Err(ResidueError::Divergent {
                lc: 3,
                sigma: 2,
                ..
            })
        ));
    }

    #[test]
    fn critical_piece_needs_positive_eps() {
        let t = term("p3-trivial-s1", 0, &[0, 0, 0, 0]);
        let opts = QuadOptions::with_tol(1e-6);
        assert!(t.integrate(&t.core(), 1, -0.5, Mode::Phi, opts).is_err());
        assert!(t.continued(1, -0.5, opts).unwrap().value.is_finite());
    }
}
