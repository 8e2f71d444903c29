//! Residue functions `R|f|(eps)[sigma]` of sections.
//!
//! For `eps > 0`,
//!
//! ```text
//! R|f|(eps)[sigma] = eps * int |f|^2 e^{-phi_L - psi} / (|psi|^sigma (log|ell psi|)^{1+eps})
//! ```
//!
//! Monomials are orthogonal after integrating out the angles, so everything
//! is computed per monomial and per chart, then summed with `|coef|^2`
//! weights. On a chart the integrand is split into a core box around the lc
//! centre, where integration by parts is certified to be legitimate, and
//! boxes away from it, which contribute entire functions of `eps`.

mod sym;
mod term;

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::{Add, Sub};

use num_complex::Complex64;

use crate::expr::ExprError;
use crate::model::{ModelError, ProjectiveModel, Section};
use crate::quad::{integrate_box, Pt, QuadError, QuadOptions, QuadResult, Range};

pub use sym::{elementary, identity_coeffs, rising, sym_coeff, SymTable};
use term::{Consts, Term};

#[derive(Debug, thiserror::Error)]
pub enum ResidueError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("sigma must be at least 1")]
    ZeroSigma,
    #[error("chart U{chart}: {lc} lc directions meet but sigma = {sigma}; the integral diverges")]
    Divergent {
        chart: usize,
        lc: usize,
        sigma: usize,
    },
    #[error("chart U{chart}: variable {var} has exponent {exponent} <= -1 without being lc")]
    NonIntegrable {
        chart: usize,
        var: usize,
        exponent: f64,
    },
    #[error(
        "chart U{chart}: no subdivision down to u <= {delta} certifies the integration by parts"
    )]
    Subdivision { chart: usize, delta: f64 },
    #[error("eps = {eps} is outside the domain of {what}")]
    EpsilonDomain { eps: f64, what: &'static str },
    #[error(
        "section `{name}` has degree {degree} but sections of this model have degree <= {bound}"
    )]
    SectionDegree {
        name: String,
        degree: u32,
        bound: i64,
    },
    #[error("{0}")]
    Contract(String),
}

/// A value with an error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: 0.0,
        error: 0.0,
    };

    pub fn scale(self, c: f64) -> Estimate {
        Estimate {
            value: c * self.value,
            error: c.abs() * self.error,
        }
    }
}

impl From<QuadResult> for Estimate {
    fn from(r: QuadResult) -> Self {
        Estimate {
            value: r.value,
            error: r.error_estimate,
        }
    }
}

impl Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

impl Sub for Estimate {
    type Output = Estimate;
    fn sub(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value - o.value,
            error: self.error + o.error,
        }
    }
}

/// `x^eps |log x|^s <= (s / (e eps))^s` on `(0, 1]`. Returns both sides.
pub fn xlogx_bound(x: f64, eps: f64, s: f64) -> Result<(f64, f64), ResidueError> {
    if !(x > 0.0 && x <= 1.0) || !(eps > 0.0) || !(s >= 0.0) {
        return Err(ResidueError::Contract(format!(
            "xlogx_bound needs 0 < x <= 1, eps > 0, s >= 0; got x = {x}, eps = {eps}, s = {s}"
        )));
    }
    let lhs = x.powf(eps) * x.ln().abs().powf(s);
    let rhs = (s / (std::f64::consts::E * eps)).powf(s);
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Quantity {
    Direct(f64),
    Rhs(f64),
    Continued(f64),
    LcNorm,
}

impl Quantity {
    fn key(self) -> (u8, u64) {
        match self {
            Quantity::Direct(e) => (0, e.to_bits()),
            Quantity::Rhs(e) => (1, e.to_bits()),
            Quantity::Continued(e) => (2, e.to_bits()),
            Quantity::LcNorm => (3, 0),
        }
    }
}

type CacheKey = (Vec<u64>, usize, (u8, u64));

/// Evaluates residue functions of one model, caching per monomial term.
///
/// Not thread-safe; clone the model into one engine per thread.
#[derive(Debug)]
pub struct ResidueEngine {
    model: ProjectiveModel,
    opts: QuadOptions,
    cache: RefCell<HashMap<CacheKey, Estimate>>,
}

impl ResidueEngine {
    pub fn new(model: &ProjectiveModel, opts: QuadOptions) -> Result<Self, ResidueError> {
        model.validate()?;
        Ok(ResidueEngine {
            model: model.clone(),
            opts,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn model(&self) -> &ProjectiveModel {
        &self.model
    }

    pub fn options(&self) -> QuadOptions {
        self.opts
    }

    fn consts(&self) -> Consts {
        Consts {
            fs_coeff: self.model.psi.fs_coeff,
            constant: self.model.psi.constant,
            lambda: self.model.log_scale,
        }
    }

    fn check_sigma(sigma: usize) -> Result<(), ResidueError> {
        if sigma == 0 {
            Err(ResidueError::ZeroSigma)
        } else {
            Ok(())
        }
    }

    /// Homogeneous monomials of `f` with their coefficients.
    pub fn monomials(&self, f: &Section) -> Result<Vec<(Vec<u32>, Complex64)>, ResidueError> {
        let bound = self.model.section_degree();
        if f.degree() as i64 > bound || f.terms.iter().any(|t| t.exponents.len() != self.model.n) {
            return Err(ResidueError::SectionDegree {
                name: f.name.clone(),
                degree: f.degree(),
                bound,
            });
        }
        Ok(f.homogeneous(bound as u32).into_iter().collect())
    }

    fn terms(&self, monomial: &[u32]) -> Result<Vec<Term>, ResidueError> {
        (0..=self.model.n)
            .map(|j| Term::new(&self.model.monomial_density(j, monomial), self.consts()))
            .collect()
    }

    fn monomial_quantity(
        &self,
        monomial: &[u32],
        sigma: usize,
        q: Quantity,
    ) -> Result<Estimate, ResidueError> {
        Self::check_sigma(sigma)?;
        let sym = SymTable::new(sigma)?.as_f64();
        let mut acc = Estimate::ZERO;
        for t in self.terms(monomial)? {
            let key = (t.key(), sigma, q.key());
            if let Some(v) = self.cache.borrow().get(&key) {
                acc = acc + *v;
                continue;
            }
            let v = match q {
                Quantity::Direct(eps) => t.direct(sigma, eps, self.opts)?,
                Quantity::Rhs(eps) => t.rhs(sigma, eps, &sym, self.opts)?,
                Quantity::Continued(eps) => t.continued(sigma, eps, self.opts)?,
                Quantity::LcNorm => t.lc_norm(sigma, self.opts)?,
            };
            self.cache.borrow_mut().insert(key, v);
            acc = acc + v;
        }
        Ok(acc)
    }

    fn section_quantity(
        &self,
        f: &Section,
        sigma: usize,
        q: Quantity,
    ) -> Result<Estimate, ResidueError> {
        let mut acc = Estimate::ZERO;
        for (a, c) in self.monomials(f)? {
            acc = acc + self.monomial_quantity(&a, sigma, q)?.scale(c.norm_sqr());
        }
        Ok(acc)
    }

    /// One monomial's value: the lc-measure norm at `eps = 0`, direct
    /// quadrature for `eps > 0`. This is the diagonal datum from which Gram
    /// matrices are assembled.
    pub fn monomial_value(
        &self,
        monomial: &[u32],
        sigma: usize,
        eps: f64,
    ) -> Result<Estimate, ResidueError> {
        if eps == 0.0 {
            self.monomial_quantity(monomial, sigma, Quantity::LcNorm)
        } else if eps > 0.0 {
            self.monomial_quantity(monomial, sigma, Quantity::Direct(eps))
        } else {
            Err(ResidueError::EpsilonDomain {
                eps,
                what: "Gram matrices",
            })
        }
    }

    /// `R|f|(eps)[sigma]` by direct quadrature; `eps > 0`.
    pub fn rtf(&self, f: &Section, sigma: usize, eps: f64) -> Result<Estimate, ResidueError> {
        if !(eps > 0.0) {
            return Err(ResidueError::EpsilonDomain {
                eps,
                what: "the defining integral",
            });
        }
        self.section_quantity(f, sigma, Quantity::Direct(eps))
    }

    /// The right-hand side of
    /// `R(eps) + eps sum_{s=1}^{sigma-1} (1+eps)..(s-1+eps) sym^s R(s+eps) = rhs(eps)`,
    /// computed without evaluating `R` on the lc centres' neighbourhoods.
    pub fn recursion_rhs(
        &self,
        f: &Section,
        sigma: usize,
        eps: f64,
    ) -> Result<Estimate, ResidueError> {
        self.section_quantity(f, sigma, Quantity::Rhs(eps))
    }

    /// `R|f|(eps)[sigma]` for any real `eps`, via the recursion identity
    /// strip by strip.
    pub fn rtf_continued(
        &self,
        f: &Section,
        sigma: usize,
        eps: f64,
    ) -> Result<Estimate, ResidueError> {
        self.section_quantity(f, sigma, Quantity::Continued(eps))
    }

    /// The limit `R|f|(0)[sigma]`: the weighted integral of `|f|^2` over the
    /// lc centres of codimension `sigma`.
    pub fn lc_measure_norm(&self, f: &Section, sigma: usize) -> Result<Estimate, ResidueError> {
        self.section_quantity(f, sigma, Quantity::LcNorm)
    }

    /// Values over a grid of `eps`: direct quadrature for `eps > 0`, the
    /// continuation otherwise. Grid points are evaluated on separate threads,
    /// each with its own engine.
    pub fn profile(
        &self,
        f: &Section,
        sigma: usize,
        grid: &[f64],
    ) -> Result<ResidueProfile, ResidueError> {
        Self::check_sigma(sigma)?;
        let (model, opts) = (&self.model, self.opts);
        let points = std::thread::scope(|scope| {
            let handles: Vec<_> = grid
                .iter()
                .map(|&eps| {
                    scope.spawn(move || -> Result<ProfilePoint, ResidueError> {
                        let engine = ResidueEngine::new(model, opts)?;
                        let v = if eps > 0.0 {
                            engine.rtf(f, sigma, eps)?
                        } else {
                            engine.rtf_continued(f, sigma, eps)?
                        };
                        Ok(ProfilePoint {
                            eps,
                            value: v.value,
                            error: v.error,
                        })
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("profile worker panicked"))
                .collect::<Result<Vec<_>, _>>()
        })?;
        Ok(ResidueProfile {
            section: f.name.clone(),
            sigma,
            b: self.model.log_scale,
            points,
        })
    }

    /// Checks `int |f|^2 e^{-phi} <= (C / eps) R|f|(eps)[sigma]` with the
    /// smooth weight `phi = phi_L` and
    /// `C = ((sigma+1)/e)^{sigma+1} ell ((1+eps)/e)^{1+eps}`.
    pub fn smooth_weight_bound_check(
        &self,
        f: &Section,
        sigma: usize,
        eps: f64,
    ) -> Result<SmoothWeightCheck, ResidueError> {
        let e = std::f64::consts::E;
        let s1 = sigma as f64 + 1.0;
        let constant = (s1 / e).powf(s1) * self.model.ell() * ((1.0 + eps) / e).powf(1.0 + eps);
        let r = self.rtf(f, sigma, eps)?;
        let mut lhs = Estimate::ZERO;
        for (a, c) in self.monomials(f)? {
            lhs = lhs + self.smooth_norm(&a)?.scale(c.norm_sqr());
        }
        let rhs = r.scale(constant / eps);
        Ok(SmoothWeightCheck {
            lhs: lhs.value,
            rhs: rhs.value,
            constant,
            holds: lhs.value - lhs.error <= rhs.value + rhs.error,
        })
    }

    // int |y^A|^2 e^{-phi_L} over P^n for one homogeneous monomial.
    fn smooth_norm(&self, a: &[u32]) -> Result<Estimate, ResidueError> {
        let m = &self.model;
        let n = m.n;
        let pre = std::f64::consts::PI.powi(n as i32) * (-m.phi_offset).exp();
        let mut acc = Estimate::ZERO;
        for j in 0..=n {
            let exps: Vec<f64> = (0..=n).filter(|&i| i != j).map(|i| a[i] as f64).collect();
            let ranges = vec![Range::Finite(0.0, 1.0); n];
            let d = m.degree as f64;
            let res = integrate_box(&ranges, self.opts, |pts: &[Pt]| {
                let mut w = 1.0;
                let mut s = 0.0;
                for (p, e) in pts.iter().zip(&exps) {
                    w *= p.from_lo.powf(*e);
                    s += p.from_lo;
                }
                w * (1.0 + s).powf(-d)
            })?;
            acc = acc + Estimate::from(res).scale(pre);
        }
        Ok(acc)
    }
}

/// Value at `eps = 0` of the polynomial through the given points (Neville's
/// scheme). With `k` points this removes the first `k - 1` powers of `eps`.
pub fn extrapolate_to_zero(points: &[(f64, f64)]) -> f64 {
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut p: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = p.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (x[i + k] * p[i] - x[i] * p[i + 1]) / (x[i + k] - x[i]);
        }
    }
    p.first().copied().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothWeightCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub eps: f64,
    pub value: f64,
    pub error: f64,
}

/// `R|f|(eps)[sigma]` sampled over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueProfile {
    pub section: String,
    pub sigma: usize,
    pub b: f64,
    pub points: Vec<ProfilePoint>,
}

impl ResidueProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,value,error,sigma,b,section\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.eps, p.value, p.error, self.sigma, self.b, self.section
            );
        }
        out
    }
}
