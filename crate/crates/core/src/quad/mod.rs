//! Numerical integration.
//!
//! The workhorse is tanh-sinh (double exponential) quadrature, which absorbs
//! integrable power and log singularities at the endpoints without further
//! substitution. Multi-dimensional integrals are iterated one variable at a
//! time, each level adaptive on its own. Semi-infinite ranges use the exp-sinh
//! variant `x = a + exp(pi/2 sinh t)`.
//!
//! Every node is handed to the integrand together with its distances to both
//! endpoints, computed without cancellation, so that integrands may evaluate
//! `log(x - a)` or `(b - x)^p` accurately right up to the boundary.

mod mc;
mod sum;

use std::cell::Cell;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

pub use mc::mc_estimate;
pub use sum::Neumaier;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("evaluation budget of {budget} exhausted; best estimate {} ± {}", best.value, best.error_estimate)]
    BudgetExceeded { budget: u64, best: QuadResult },
    #[error("no convergence after {levels} refinement levels; best estimate {} ± {}", best.value, best.error_estimate)]
    NotConverged { levels: usize, best: QuadResult },
    #[error("integrand returned {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },
    #[error("invalid integrand: {0}")]
    InvalidIntegrand(String),
}

impl QuadError {
    /// The best available estimate, if the failure produced one.
    pub fn best(&self) -> Option<&QuadResult> {
        match self {
            QuadError::BudgetExceeded { best, .. } | QuadError::NotConverged { best, .. } => {
                Some(best)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Relative tolerance.
    pub tol: f64,
    /// Absolute error floor.
    pub abs_floor: f64,
    /// Maximum number of integrand evaluations per integral.
    pub max_evals: u64,
    /// Deepest refinement level; the step at level `k` is `2^-k`.
    pub max_level: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            abs_floor: 1e-12,
            max_evals: 100_000_000,
            max_level: 12,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// A quadrature node: the abscissa and its distances to the two endpoints of
/// the current range. `to_hi` is infinite on semi-infinite ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pt {
    pub x: f64,
    pub from_lo: f64,
    pub to_hi: f64,
}

impl Pt {
    pub fn at(x: f64) -> Self {
        Pt {
            x,
            from_lo: x,
            to_hi: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Range {
    Finite(f64, f64),
    ToInfinity(f64),
}

const T_MAX: f64 = 6.5;
const MIN_LEVEL: usize = 2;

struct Node {
    pt: Pt,
    weight: f64,
}

// Node at parameter t (both signs handled) for the range.
fn node(range: Range, t: f64) -> Option<Node> {
    let s = FRAC_PI_2 * t.sinh();
    let e = (-2.0 * s.abs()).exp();
    // Distance from the near endpoint of (-1, 1) and the weight dx/dt there.
    let near = 2.0 * e / (1.0 + e);
    let w = FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
    if near == 0.0 || w == 0.0 {
        return None;
    }
    let far = 2.0 - near;
    let (lo_unit, hi_unit) = if t >= 0.0 { (far, near) } else { (near, far) };
    match range {
        Range::Finite(a, b) => {
            let hw = 0.5 * (b - a);
            let from_lo = hw * lo_unit;
            let to_hi = hw * hi_unit;
            if from_lo == 0.0 || to_hi == 0.0 {
                return None;
            }
            let x = if t >= 0.0 { b - to_hi } else { a + from_lo };
            Some(Node {
                pt: Pt { x, from_lo, to_hi },
                weight: hw * w,
            })
        }
        Range::ToInfinity(a) => {
            // exp-sinh: x = a + exp(s), which resolves every length scale.
            let from_lo = s.exp();
            let weight = FRAC_PI_2 * t.cosh() * from_lo;
            if !weight.is_finite() || from_lo == 0.0 || !(a + from_lo).is_finite() {
                return None;
            }
            Some(Node {
                pt: Pt {
                    x: a + from_lo,
                    from_lo,
                    to_hi: f64::INFINITY,
                },
                weight,
            })
        }
    }
}

/// Parameters visited at a level: all multiples of 1 at level 0, the odd
/// multiples of `2^-k` afterwards.
fn level_params(k: usize) -> impl Iterator<Item = f64> {
    let h = 0.5f64.powi(k as i32);
    let (start, step) = if k == 0 { (0u64, 1u64) } else { (1, 2) };
    let count = (T_MAX / h) as u64;
    (0..)
        .map(move |i| start + i * step)
        .take_while(move |&j| j <= count)
        .map(move |j| j as f64 * h)
}

/// Shared state for one (possibly nested) integral.
pub(crate) struct Ctx {
    pub opts: QuadOptions,
    pub evals: Cell<u64>,
}

impl Ctx {
    pub fn new(opts: QuadOptions) -> Self {
        Self {
            opts,
            evals: Cell::new(0),
        }
    }

    pub fn count(&self, n: u64) {
        self.evals.set(self.evals.get() + n);
    }

    pub fn over_budget(&self) -> bool {
        self.evals.get() > self.opts.max_evals
    }
}

/// One adaptive tanh-sinh pass over `range`. The integrand returns a value
/// and an error bound of its own (zero for plain functions).
///
/// `abs_floor` is the absolute error target. Inner integrals of a nested
/// rule receive it divided by the product of the enclosing node weights, since
/// their errors are amplified by those weights. The integrand also receives
/// the weight of the node it is evaluated at.
pub(crate) fn ts_core(
    ctx: &Ctx,
    range: Range,
    abs_floor: f64,
    f: &mut dyn FnMut(Pt, f64) -> Result<(f64, f64), QuadError>,
) -> Result<QuadResult, QuadError> {
    if let Range::Finite(a, b) = range {
        if a == b {
            return Ok(QuadResult {
                value: 0.0,
                error_estimate: 0.0,
                evaluations: 0,
            });
        }
        assert!(a < b, "reversed range {a}..{b}");
    }
    let opts = ctx.opts;
    let start_evals = ctx.evals.get();
    let mut sum = Neumaier::default();
    // Inner errors are weighted like values; kept per level to rescale.
    let mut err_sum = 0.0;
    let mut prev: Option<f64> = None;
    let mut best = QuadResult {
        value: 0.0,
        error_estimate: f64::INFINITY,
        evaluations: 0,
    };
    for k in 0..=opts.max_level {
        let h = 0.5f64.powi(k as i32);
        for t in level_params(k) {
            let signs: &[f64] = if t == 0.0 { &[1.0] } else { &[1.0, -1.0] };
            for &sgn in signs {
                let Some(nd) = node(range, sgn * t) else {
                    continue;
                };
                let (v, e) = f(nd.pt, nd.weight)?;
                if !v.is_finite() {
                    return Err(QuadError::NonFinite {
                        x: nd.pt.x,
                        value: v,
                    });
                }
                sum.add(nd.weight * v);
                err_sum += nd.weight * e;
            }
        }
        let value = h * sum.total();
        let inner_err = h * err_sum;
        let evaluations = ctx.evals.get() - start_evals;
        if let Some(p) = prev {
            let diff = (value - p).abs();
            best = QuadResult {
                value,
                error_estimate: diff + inner_err,
                evaluations,
            };
            let target = (opts.tol * value.abs()).max(abs_floor);
            if k >= MIN_LEVEL && diff <= target {
                return Ok(best);
            }
        }
        if ctx.over_budget() {
            return Err(QuadError::BudgetExceeded {
                budget: opts.max_evals,
                best,
            });
        }
        prev = Some(value);
    }
    Err(QuadError::NotConverged {
        levels: opts.max_level,
        best,
    })
}

/// Integrates a scalar function over a one-dimensional range.
pub fn integrate_1d(
    range: Range,
    opts: QuadOptions,
    mut f: impl FnMut(Pt) -> f64,
) -> Result<QuadResult, QuadError> {
    let ctx = Ctx::new(opts);
    let mut g = |p: Pt, _w: f64| {
        ctx.count(1);
        Ok((f(p), 0.0))
    };
    let mut r = ts_core(&ctx, range, opts.abs_floor, &mut g)?;
    r.evaluations = ctx.evals.get();
    Ok(r)
}

/// Iterated integration over a product of ranges; `ranges[0]` is outermost.
pub fn integrate_box(
    ranges: &[Range],
    opts: QuadOptions,
    mut f: impl FnMut(&[Pt]) -> f64,
) -> Result<QuadResult, QuadError> {
    let ctx = Ctx::new(opts);
    let mut buf = vec![Pt::at(0.0); ranges.len()];
    let r = if ranges.is_empty() {
        ctx.count(1);
        let v = f(&buf);
        if !v.is_finite() {
            return Err(QuadError::NonFinite { x: 0.0, value: v });
        }
        QuadResult {
            value: v,
            error_estimate: 0.0,
            evaluations: 1,
        }
    } else {
        nested(&ctx, ranges, 0, opts.abs_floor, &mut buf, &mut f)?
    };
    Ok(QuadResult {
        evaluations: ctx.evals.get(),
        ..r
    })
}

fn nested(
    ctx: &Ctx,
    ranges: &[Range],
    depth: usize,
    floor: f64,
    buf: &mut Vec<Pt>,
    f: &mut dyn FnMut(&[Pt]) -> f64,
) -> Result<QuadResult, QuadError> {
    let last = depth + 1 == ranges.len();
    let mut g = |p: Pt, w: f64| -> Result<(f64, f64), QuadError> {
        buf[depth] = p;
        if last {
            ctx.count(1);
            Ok((f(buf), 0.0))
        } else {
            let inner_floor = (floor / w.abs()).max(f64::MIN_POSITIVE);
            let r = nested(ctx, ranges, depth + 1, inner_floor, buf, f)?;
            Ok((r.value, r.error_estimate))
        }
    };
    ts_core(ctx, ranges[depth], floor, &mut g)
}

/// Behaviour of one variable of an [`Integrand`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarSpec {
    /// Power `p > -1` of the leading singularity at `u = 0`.
    pub exponent: f64,
    /// Upper end of the range, or `None` for `(0, inf)`.
    pub upper: Option<f64>,
    /// The integrand decays at least like `u^-decay` as `u -> inf`; needs
    /// `decay > 1` on unbounded variables.
    pub decay: f64,
}

impl VarSpec {
    pub fn bounded(upper: f64, exponent: f64) -> Self {
        Self {
            exponent,
            upper: Some(upper),
            decay: 0.0,
        }
    }

    pub fn unbounded(exponent: f64, decay: f64) -> Self {
        Self {
            exponent,
            upper: None,
            decay,
        }
    }
}

type Func = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A function on a product of intervals `(0, U_j]` or `(0, inf)` in squared
/// radius variables, with declared endpoint behaviour.
#[derive(Clone)]
pub struct Integrand {
    vars: Vec<VarSpec>,
    f: Func,
}

impl std::fmt::Debug for Integrand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Integrand")
            .field("vars", &self.vars)
            .finish()
    }
}

pub const MAX_DIM: usize = 6;

impl Integrand {
    pub fn new(
        vars: Vec<VarSpec>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, QuadError> {
        if vars.len() > MAX_DIM {
            return Err(QuadError::InvalidIntegrand(format!(
                "dimension {} exceeds {MAX_DIM}",
                vars.len()
            )));
        }
        for (j, v) in vars.iter().enumerate() {
            if !(v.exponent > -1.0) {
                return Err(QuadError::InvalidIntegrand(format!(
                    "variable {j}: exponent {} is not > -1",
                    v.exponent
                )));
            }
            match v.upper {
                Some(u) if !(u > 0.0 && u.is_finite()) => {
                    return Err(QuadError::InvalidIntegrand(format!(
                        "variable {j}: upper bound {u} must be positive and finite"
                    )))
                }
                None if !(v.decay > 1.0) => {
                    return Err(QuadError::InvalidIntegrand(format!(
                        "variable {j}: decay {} must exceed 1 on an unbounded range",
                        v.decay
                    )))
                }
                _ => {}
            }
        }
        Ok(Self {
            vars,
            f: Arc::new(f),
        })
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[VarSpec] {
        &self.vars
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        (self.f)(u)
    }

    /// `a * self + other` on the same variables.
    pub fn combine(&self, a: f64, other: &Integrand) -> Result<Integrand, QuadError> {
        if self.vars != other.vars {
            return Err(QuadError::InvalidIntegrand(
                "cannot combine integrands over different variables".into(),
            ));
        }
        let (f, g) = (self.f.clone(), other.f.clone());
        Integrand::new(self.vars.clone(), move |u| a * f(u) + g(u))
    }
}

/// Integrates `g` to relative tolerance `tol`. Unbounded variables are split
/// at `u = 1`.
pub fn integrate(g: &Integrand, tol: f64) -> Result<QuadResult, QuadError> {
    integrate_with(g, QuadOptions::with_tol(tol))
}

pub fn integrate_with(g: &Integrand, opts: QuadOptions) -> Result<QuadResult, QuadError> {
    let pieces: Vec<Vec<Range>> = g
        .vars
        .iter()
        .map(|v| match v.upper {
            Some(u) => vec![Range::Finite(0.0, u)],
            None => vec![Range::Finite(0.0, 1.0), Range::ToInfinity(1.0)],
        })
        .collect();
    let mut total = Neumaier::default();
    let mut err = 0.0;
    let mut evals = 0;
    if pieces.is_empty() {
        return integrate_box(&[], opts, |_| g.eval(&[]));
    }
    for combo in itertools::Itertools::multi_cartesian_product(pieces.iter().map(|p| p.iter())) {
        let ranges: Vec<Range> = combo.into_iter().copied().collect();
        let mut u = vec![0.0; ranges.len()];
        let r = integrate_box(&ranges, opts, |pts| {
            for (slot, p) in u.iter_mut().zip(pts) {
                *slot = p.x;
            }
            g.eval(&u)
        });
        let r = r?;
        total.add(r.value);
        err += r.error_estimate;
        evals += r.evaluations;
    }
    Ok(QuadResult {
        value: total.total(),
        error_estimate: err,
        evaluations: evals,
    })
}
