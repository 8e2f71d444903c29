//! Projective models on `P^n` and their local chart presentation.
//!
//! A model fixes a line bundle `L = O(d)` with the Fubini-Study type potential
//! `phi_L = d log(1 + |y|^2) + kappa` on every standard chart, and a weight
//! written on `U_0` as
//!
//! ```text
//! psi = sum_j a_j log|x_j|^2 - c log(1 + |x|^2) - k
//! ```
//!
//! In homogeneous coordinates this is `sum_i a_i log|X_i|^2 - c log|X|^2 - k`
//! with `a_0 = c - sum_j a_j`, so on chart `U_j` it has the same shape with
//! the coefficients `a_i`, `i != j`. Hyperplanes `{X_i = 0}` with `a_i = 1`
//! form the lc divisor `S`; those with `0 < a_i < 1` are klt poles.
//!
//! Sections of `K + L = O(d - n - 1)` are polynomials in the `U_0`
//! coordinates of degree at most `m = d - n - 1`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use itertools::Itertools;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::expr::{Expr, Interval, RadialBox};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("cannot read model file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("chart index {chart} out of range for P^{n}")]
    ChartOutOfRange { chart: usize, n: usize },
    #[error("normalisation target b = {0} must be at least 1")]
    BadTarget(f64),
    #[error("section `{name}` has degree {degree}, above the bound {bound}")]
    SectionDegree {
        name: String,
        degree: u32,
        bound: i64,
    },
    #[error(
        "chart {chart}: 1 + (r_j / 2 nu_j) d alpha / d r_j cannot be certified positive \
         near the lc centre; subdivide below u = {delta}"
    )]
    SubdivisionRequired { chart: usize, delta: f64 },
}

const COEFF_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogTerm {
    /// Coordinate index `j` in `1..=n`.
    pub index: usize,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSpec {
    #[serde(default)]
    pub log_terms: Vec<LogTerm>,
    /// Coefficient `c` of `-log(1 + |x|^2)`.
    pub fs_coeff: f64,
    /// The constant `k` in `psi = ... - k`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionTerm {
    /// Exponents of `x_1, ..., x_n` on `U_0`.
    pub exponents: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// A section of `K + L`, written as a polynomial in the `U_0` coordinates
/// (the frame `dx_1 ^ ... ^ dx_n` is implicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub terms: Vec<SectionTerm>,
}

impl Section {
    pub fn new(name: impl Into<String>, terms: Vec<(Vec<u32>, Complex64)>) -> Self {
        Self {
            name: name.into(),
            terms: terms
                .into_iter()
                .map(|(exponents, c)| SectionTerm {
                    exponents,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }

    pub fn monomial(name: impl Into<String>, exponents: Vec<u32>) -> Self {
        Self::new(name, vec![(exponents, Complex64::new(1.0, 0.0))])
    }

    /// `x_j dx` for `j` in `0..=n`, with `x_0 = 1`.
    pub fn coordinate(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        if j > 0 {
            e[j - 1] = 1;
        }
        Self::monomial(format!("f{j}"), e)
    }

    pub fn zero(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            terms: vec![],
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|t| t.re != 0.0 || t.im != 0.0)
            .map(|t| t.exponents.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Coefficients keyed by homogeneous exponent `(m - |a|, a)`, with
    /// repeated monomials merged and zero coefficients dropped.
    pub fn homogeneous(&self, m: u32) -> BTreeMap<Vec<u32>, Complex64> {
        let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for t in &self.terms {
            let deg: u32 = t.exponents.iter().sum();
            let mut key = Vec::with_capacity(t.exponents.len() + 1);
            key.push(m.saturating_sub(deg));
            key.extend_from_slice(&t.exponents);
            *out.entry(key).or_default() += Complex64::new(t.re, t.im);
        }
        out.retain(|_, c| c.norm_sqr() > 0.0);
        out
    }

    /// Linear combination `sum_k w_k s_k`.
    pub fn combine(name: impl Into<String>, parts: &[(Complex64, &Section)]) -> Section {
        let mut acc: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (w, s) in parts {
            for t in &s.terms {
                *acc.entry(t.exponents.clone()).or_default() += w * Complex64::new(t.re, t.im);
            }
        }
        Section::new(
            name,
            acc.into_iter()
                .filter(|(_, c)| c.norm_sqr() > 0.0)
                .collect(),
        )
    }
}

/// All monomials of degree at most `m` in `n` variables, graded-lex order.
pub fn monomial_basis(n: usize, m: u32) -> Vec<Section> {
    let mut out = Vec::new();
    for deg in 0..=m {
        let mut exps: Vec<Vec<u32>> = (0..n)
            .map(|_| 0..=deg)
            .multi_cartesian_product()
            .filter(|e| e.iter().sum::<u32>() == deg)
            .collect();
        if n == 0 && deg == 0 {
            exps.push(vec![]);
        }
        exps.sort_by(|a, b| b.cmp(a));
        for e in exps {
            let name = if deg == 0 {
                "1".to_string()
            } else {
                e.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0)
                    .map(|(i, &p)| {
                        if p == 1 {
                            format!("x{}", i + 1)
                        } else {
                            format!("x{}^{p}", i + 1)
                        }
                    })
                    .join("*")
            };
            out.push(Section::monomial(name, e));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveModel {
    #[serde(default)]
    pub name: String,
    pub n: usize,
    /// Degree `d` of `L = O(d)`.
    pub degree: i64,
    /// The constant `kappa` in `phi_L`.
    pub phi_offset: f64,
    /// `b`, with `ell = e^b`.
    pub log_scale: f64,
    /// Default codimension for reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<usize>,
    pub psi: PsiSpec,
    #[serde(default)]
    pub sections: Vec<Section>,
}

/// Local data of a model on one standard chart, reduced by torus symmetry.
///
/// Variables are reordered so that the lc directions come first; `coords[v]`
/// is the chart coordinate index of local variable `v`.
#[derive(Debug, Clone)]
pub struct SncChart {
    pub chart: usize,
    pub dim: usize,
    pub lc_count: usize,
    pub coords: Vec<usize>,
    /// Log coefficients of `psi`.
    pub nu: Vec<f64>,
    /// Log coefficients of `phi_L + psi - psi_S`.
    pub c: Vec<f64>,
    /// Pole orders of the klt directions (`lc_count..dim`), each `< 1`.
    pub klt: Vec<f64>,
    /// `psi = sum nu_j log r_j^2 + alpha`.
    pub alpha: Expr,
    /// `phi_L + psi - psi_S = sum c_j log r_j^2 + beta`.
    pub beta: Expr,
}

/// Subdivision needed for integration by parts on a chart: in the box where
/// every lc variable has `u = r^2 <= delta`, the factors
/// `1 + (r_j / 2 nu_j) d alpha / d r_j` are certified positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subdivision {
    pub delta: f64,
    pub halvings: u32,
}

/// An lc centre on a chart: the common zero set of the listed lc variables
/// (zero-based local indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcCentre {
    pub chart: usize,
    pub vars: Vec<usize>,
}

impl std::fmt::Display for LcCentre {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "U{}:{{{}}}",
            self.chart,
            self.vars.iter().map(|v| v + 1).join(",")
        )
    }
}

/// All choices of `sigma` of the chart's lc directions.
pub fn lc_centres(chart: &SncChart, sigma: usize) -> Vec<LcCentre> {
    if sigma == 0 || sigma > chart.lc_count {
        return vec![];
    }
    (0..chart.lc_count)
        .combinations(sigma)
        .map(|vars| LcCentre {
            chart: chart.chart,
            vars,
        })
        .collect()
}

/// One monomial `prod_{i != j} y_i^{A_i}` of a section, seen on chart `j`.
/// Its density against `du` on the chart polydisc, after integrating out the
/// angles, is `prefactor * prod u_i^{exponents_i} * (1 + sum u)^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialDensity {
    pub chart: usize,
    /// Exponents `A_i - a_i` per chart coordinate.
    pub exponents: Vec<f64>,
    /// `a_i` per chart coordinate.
    pub nu: Vec<f64>,
    pub q: f64,
    /// `pi^n e^{k - kappa}`; multiply by `|coefficient|^2`.
    pub prefactor: f64,
}

const MAX_HALVINGS: u32 = 40;

impl ProjectiveModel {
    pub fn from_toml_str(s: &str) -> Result<Self, ModelError> {
        let m: ProjectiveModel = toml::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let p = path.as_ref();
        let s = std::fs::read_to_string(p).map_err(|source| ModelError::Io {
            path: p.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("model serialises")
    }

    /// Degree bound `m = d - n - 1` of sections.
    pub fn section_degree(&self) -> i64 {
        self.degree - self.n as i64 - 1
    }

    /// Homogeneous coefficients `a_0, ..., a_n`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n + 1];
        for t in &self.psi.log_terms {
            if (1..=self.n).contains(&t.index) {
                a[t.index] += t.coeff;
            }
        }
        a[0] = self.psi.fs_coeff - a[1..].iter().sum::<f64>();
        a.iter_mut().for_each(|x| *x = snap(*x));
        a
    }

    /// `a_i` for `i != j`, in chart coordinate order.
    pub fn chart_coefficients(&self, chart: usize) -> Vec<f64> {
        let a = self.coefficients();
        (0..=self.n).filter(|&i| i != chart).map(|i| a[i]).collect()
    }

    /// Homogeneous indices of the lc hyperplanes (`a_i = 1`).
    pub fn lc_hyperplanes(&self) -> Vec<usize> {
        self.coefficients()
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == 1.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest codimension of an lc centre.
    pub fn sigma_mlc(&self) -> usize {
        self.lc_hyperplanes().len().min(self.n)
    }

    /// `inf |psi| = k - sum a_i log(a_i / c)`.
    pub fn min_abs_psi(&self) -> f64 {
        let c = self.psi.fs_coeff;
        let s: f64 = self
            .coefficients()
            .iter()
            .filter(|&&a| a > 0.0)
            .map(|&a| a * (a / c).ln())
            .sum();
        self.psi.constant - s
    }

    pub fn ell(&self) -> f64 {
        self.log_scale.exp()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Invalid(m));
        if self.n == 0 {
            return bad("dimension n must be at least 1".into());
        }
        if self.section_degree() < 0 {
            return bad(format!(
                "degree {} is below n + 1 = {}; K + L has no sections",
                self.degree,
                self.n + 1
            ));
        }
        let mut seen = vec![false; self.n + 1];
        for t in &self.psi.log_terms {
            if !(1..=self.n).contains(&t.index) {
                return bad(format!("log term index {} outside 1..={}", t.index, self.n));
            }
            if std::mem::replace(&mut seen[t.index], true) {
                return bad(format!("log term index {} repeated", t.index));
            }
        }
        if !(self.psi.fs_coeff > 0.0) {
            return bad("fs_coeff must be positive".into());
        }
        for (i, a) in self.coefficients().into_iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!(
                    "coefficient a_{i} = {a} is outside [0, 1]; the multiplier ideal must \
                     jump exactly at m = 1"
                ));
            }
        }
        let m0 = self.min_abs_psi();
        if !(m0 > 0.0) {
            return bad(format!(
                "psi is not negative everywhere (sup psi = {})",
                -m0
            ));
        }
        if !(self.log_scale + m0.ln() > 0.0) {
            return bad(format!(
                "|ell psi| > 1 fails: b = {} but inf |psi| = {m0}",
                self.log_scale
            ));
        }
        let bound = self.section_degree();
        for s in &self.sections {
            if s.terms.iter().any(|t| t.exponents.len() != self.n) {
                return bad(format!(
                    "section `{}` needs {} exponents per term",
                    s.name, self.n
                ));
            }
            if s.degree() as i64 > bound {
                return Err(ModelError::SectionDegree {
                    name: s.name.clone(),
                    degree: s.degree(),
                    bound,
                });
            }
        }
        Ok(())
    }

    /// Checks that every pole of `e^{-phi_L - m psi}` is integrable for
    /// `m < 1` and that some direction becomes critical at `m = 1`.
    pub fn check_jumping_number(&self) -> Result<(), ModelError> {
        let a = self.coefficients();
        if a.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(ModelError::Invalid(
                "some pole is non-integrable below m = 1".into(),
            ));
        }
        if !a.contains(&1.0) {
            return Err(ModelError::Invalid(
                "no pole becomes critical at m = 1; the lc divisor is empty".into(),
            ));
        }
        Ok(())
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    fn check_chart(&self, chart: usize) -> Result<(), ModelError> {
        if chart > self.n {
            Err(ModelError::ChartOutOfRange { chart, n: self.n })
        } else {
            Ok(())
        }
    }

    /// `psi` on chart `j` at a point given by the moduli `|y_i|` of its
    /// coordinates. Returns `-inf` on a pole.
    pub fn psi_eval(&self, chart: usize, point: &[f64]) -> Result<f64, ModelError> {
        self.check_chart(chart)?;
        let a = self.chart_coefficients(chart);
        let r2: f64 = point.iter().map(|r| r * r).sum();
        let mut v = -self.psi.fs_coeff * r2.ln_1p() - self.psi.constant;
        for (ai, r) in a.iter().zip(point) {
            if *ai > 0.0 {
                if *r == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                v += ai * (r * r).ln();
            }
        }
        Ok(v)
    }

    /// `phi_L` on chart `j`.
    pub fn phi_l_eval(&self, chart: usize, point: &[f64]) -> Result<f64, ModelError> {
        self.check_chart(chart)?;
        let r2: f64 = point.iter().map(|r| r * r).sum();
        Ok(self.degree as f64 * r2.ln_1p() + self.phi_offset)
    }

    /// Returns a copy with `ell = e^b` and, when `inf |psi| < 1`, a constant
    /// moved from `phi_L` into `psi` so that `inf log|ell psi| >= b`. The sum
    /// `phi_L + psi` is unchanged.
    pub fn normalize(&self, b: f64) -> Result<ProjectiveModel, ModelError> {
        if !(b >= 1.0) {
            return Err(ModelError::BadTarget(b));
        }
        let mut m = self.clone();
        let shift = (1.0 - self.min_abs_psi()).max(0.0);
        m.psi.constant += shift;
        m.phi_offset += shift;
        m.log_scale = b;
        Ok(m)
    }

    /// Returns a copy with `ell = e^b` and nothing else changed.
    pub fn with_log_scale(&self, b: f64) -> Result<ProjectiveModel, ModelError> {
        let mut m = self.clone();
        m.log_scale = b;
        m.validate()?;
        Ok(m)
    }

    /// Density data of the homogeneous monomial `A` on chart `j`.
    pub fn monomial_density(&self, chart: usize, monomial: &[u32]) -> MonomialDensity {
        let a = self.coefficients();
        let (mut exponents, mut nu) = (Vec::new(), Vec::new());
        for i in (0..=self.n).filter(|&i| i != chart) {
            exponents.push(monomial[i] as f64 - a[i]);
            nu.push(a[i]);
        }
        MonomialDensity {
            chart,
            exponents,
            nu,
            q: self.psi.fs_coeff - self.degree as f64,
            prefactor: PI.powi(self.n as i32) * (self.psi.constant - self.phi_offset).exp(),
        }
    }

    /// The torus-reduced local presentation on chart `j`, together with the
    /// subdivision needed near its lc centres.
    pub fn localize(&self, chart: usize) -> Result<(SncChart, Subdivision), ModelError> {
        self.check_chart(chart)?;
        let a = self.chart_coefficients(chart);
        let n = self.n;
        let mut coords: Vec<usize> = (0..n).filter(|&i| a[i] == 1.0).collect();
        let lc_count = coords.len();
        coords.extend((0..n).filter(|&i| a[i] != 1.0));
        let nu: Vec<f64> = coords.iter().map(|&i| a[i]).collect();
        let c: Vec<f64> = nu
            .iter()
            .enumerate()
            .map(|(v, &x)| if v < lc_count { 0.0 } else { x })
            .collect();
        let klt = nu[lc_count..].to_vec();
        let log1p_r2 = Expr::log(&Expr::add(&Expr::constant(1.0), &Expr::r2sum()));
        let alpha = Expr::sub(
            &Expr::neg(&Expr::scale(self.psi.fs_coeff, &log1p_r2)),
            &Expr::constant(self.psi.constant),
        );
        let beta = Expr::add(
            &Expr::scale(self.degree as f64 - self.psi.fs_coeff, &log1p_r2),
            &Expr::constant(self.phi_offset - self.psi.constant),
        );
        let chart_data = SncChart {
            chart,
            dim: n,
            lc_count,
            coords,
            nu,
            c,
            klt,
            alpha,
            beta,
        };
        let sub = chart_data.subdivision()?;
        Ok((chart_data, sub))
    }
}

fn snap(x: f64) -> f64 {
    if (x - 1.0).abs() < COEFF_EPS {
        1.0
    } else if x.abs() < COEFF_EPS {
        0.0
    } else {
        x
    }
}

impl SncChart {
    /// `1 + (r_j / 2 nu_j) d alpha / d r_j` for lc variable `j`.
    pub fn ibp_factor(&self, j: usize) -> Expr {
        Expr::add(
            &Expr::constant(1.0),
            &Expr::mul(
                &Expr::scale(0.5 / self.nu[j], &Expr::var(j)),
                &self.alpha.diff(j),
            ),
        )
    }

    /// `psi` reassembled from the local data at radial point `r` (local
    /// variable order).
    pub fn psi_eval(&self, r: &[f64]) -> f64 {
        let mut v = self.alpha.eval(r).unwrap_or(f64::NAN);
        for (nu, x) in self.nu.iter().zip(r) {
            if *nu > 0.0 {
                v += nu * (x * x).ln();
            }
        }
        v
    }

    /// The radial box where lc variables satisfy `u <= delta`.
    pub fn core_box(&self, delta: f64) -> RadialBox {
        RadialBox::new(
            (0..self.dim)
                .map(|v| {
                    if v < self.lc_count {
                        Interval::new(0.0, delta.sqrt())
                    } else {
                        Interval::new(0.0, 1.0)
                    }
                })
                .collect(),
        )
    }

    fn subdivision(&self) -> Result<Subdivision, ModelError> {
        let factors: Vec<Expr> = (0..self.lc_count).map(|j| self.ibp_factor(j)).collect();
        let mut delta = 1.0;
        for halvings in 0..=MAX_HALVINGS {
            let dom = self.core_box(delta);
            let ok = factors
                .iter()
                .all(|f| matches!(f.enclose(&dom), Ok(iv) if iv.lo > 0.0));
            if ok {
                return Ok(Subdivision { delta, halvings });
            }
            delta *= 0.5;
        }
        Err(ModelError::SubdivisionRequired {
            chart: self.chart,
            delta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1(sigma: usize) -> ProjectiveModel {
        ProjectiveModel {
            name: format!("ex1-s{sigma}"),
            n: 3,
            degree: 4,
            phi_offset: 1.0,
            log_scale: 1.0,
            sigma: Some(sigma),
            psi: PsiSpec {
                log_terms: (1..=sigma)
                    .map(|index| LogTerm { index, coeff: 1.0 })
                    .collect(),
                fs_coeff: sigma as f64,
                constant: 1.0,
            },
            sections: vec![Section::monomial("f", vec![0, 0, 0])],
        }
    }

    fn example3() -> ProjectiveModel {
        ProjectiveModel {
            name: "ex3".into(),
            psi: PsiSpec {
                log_terms: (1..=3).map(|index| LogTerm { index, coeff: 1.0 }).collect(),
                fs_coeff: 4.0,
                constant: 1.0,
            },
            sigma: Some(3),
            ..example1(1)
        }
    }

    #[test]
    fn psi_examples() {
        let m = example1(2);
        m.validate().unwrap();
        let v = m.psi_eval(0, &[1.0, 1.0, 0.0]).unwrap();
        assert!((v - (-2.0 * 3f64.ln() - 1.0)).abs() < 1e-14);
        let m3 = example3();
        let v = m3.psi_eval(1, &[1.0, 1.0, 1.0]).unwrap();
        assert!((v - (-8.0 * 2f64.ln() - 1.0)).abs() < 1e-14);
        assert_eq!(m.psi_eval(0, &[0.0, 0.5, 0.5]).unwrap(), f64::NEG_INFINITY);
        assert!(m.psi_eval(4, &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn coefficients_and_lc_structure() {
        assert_eq!(example1(1).coefficients(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(example1(2).sigma_mlc(), 2);
        assert_eq!(example3().coefficients(), vec![1.0; 4]);
        assert_eq!(example3().sigma_mlc(), 3);
        assert!((example1(1).min_abs_psi() - 1.0).abs() < 1e-15);
        assert!((example1(2).min_abs_psi() - (1.0 + 2.0 * 2f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn localize_examples() {
        let (c, sub) = example1(1).localize(0).unwrap();
        assert_eq!(c.lc_count, 1);
        assert_eq!(c.nu, vec![1.0, 0.0, 0.0]);
        assert!(c.c.iter().all(|&x| x == 0.0));
        assert_eq!(c.alpha.to_string(), "(sub (neg (log (add 1 (r2sum)))) 1)");
        // 1 - r^2/(1+|r|^2) > 0 on the unit box, but the plain interval
        // enclosure only certifies it after one halving.
        assert!(sub.delta >= 0.5);

        let (c, sub) = example3().localize(0).unwrap();
        assert_eq!(c.lc_count, 3);
        assert_eq!(c.nu, vec![1.0; 3]);
        assert!(sub.delta < 0.25);

        let (_, sub) = example1(2).localize(0).unwrap();
        assert!(sub.delta <= 0.25);
    }

    #[test]
    fn localize_reassembles_psi() {
        let m = example1(2);
        for chart in 0..=3 {
            let (c, _) = m.localize(chart).unwrap();
            for k in 0..20 {
                let y: Vec<f64> = (0..3)
                    .map(|i| 0.1 + 0.37 * ((k * 3 + i) as f64).sin().abs())
                    .collect();
                let local: Vec<f64> = c.coords.iter().map(|&i| y[i]).collect();
                let direct = m.psi_eval(chart, &y).unwrap();
                assert!((c.psi_eval(&local) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lc_centre_enumeration() {
        let (mut c, _) = example3().localize(0).unwrap();
        assert_eq!(lc_centres(&c, 2).len(), 3);
        c.lc_count = 2;
        let got: Vec<Vec<usize>> = lc_centres(&c, 2).into_iter().map(|l| l.vars).collect();
        assert_eq!(got, vec![vec![0, 1]]);
        c.lc_count = 1;
        assert!(lc_centres(&c, 2).is_empty());
        assert_eq!(lc_centres(&c, 1)[0].to_string(), "U0:{1}");
    }

    #[test]
    fn normalize_contract() {
        let m = example1(1);
        assert!(matches!(m.normalize(0.0), Err(ModelError::BadTarget(_))));
        let n1 = m.normalize(2.0).unwrap();
        assert_eq!(n1, n1.normalize(2.0).unwrap());
        assert!(n1.log_scale + n1.min_abs_psi().ln() >= 2.0);
        // A model with inf |psi| < 1 gets a constant shift.
        let mut small = example1(1);
        small.psi.constant = 0.5;
        let ns = small.normalize(1.0).unwrap();
        assert!((ns.min_abs_psi() - 1.0).abs() < 1e-15);
        let y = [0.3, 0.4, 0.5];
        let before = small.phi_l_eval(0, &y).unwrap() + small.psi_eval(0, &y).unwrap();
        let after = ns.phi_l_eval(0, &y).unwrap() + ns.psi_eval(0, &y).unwrap();
        assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_models() {
        let mut m = example1(1);
        m.psi.log_terms[0].coeff = 1.5;
        assert!(m.validate().is_err());
        let mut m = example1(1);
        m.psi.constant = -0.5;
        assert!(m.validate().is_err());
        let mut m = example1(1);
        m.sections = vec![Section::monomial("x1", vec![1, 0, 0])];
        assert!(matches!(
            m.validate(),
            Err(ModelError::SectionDegree { .. })
        ));
    }

    #[test]
    fn toml_roundtrip() {
        let m = example3();
        let s = m.to_toml_string();
        assert_eq!(ProjectiveModel::from_toml_str(&s).unwrap(), m);
    }

    #[test]
    fn homogeneous_terms() {
        let s = Section::new(
            "g",
            vec![
                (vec![1, 0, 0], Complex64::new(1.0, 0.0)),
                (vec![0, 0, 0], Complex64::new(0.0, 2.0)),
                (vec![1, 0, 0], Complex64::new(1.0, 0.0)),
            ],
        );
        let h = s.homogeneous(1);
        assert_eq!(h[&vec![0, 1, 0, 0]], Complex64::new(2.0, 0.0));
        assert_eq!(h[&vec![1, 0, 0, 0]], Complex64::new(0.0, 2.0));
        assert_eq!(monomial_basis(3, 1).len(), 4);
        assert_eq!(monomial_basis(2, 2).len(), 6);
    }
}
