//! The smallest `b` for which the extension inequality holds, and the
//! descending chain of minimal extensions.

use nalgebra::DVector;
use num_complex::Complex64;

use super::{
    combine, decompose, eigen, gram, min_eigenvalue, minimal_extension, CMatrix, ExtendError,
    GramPair,
};
use crate::model::{ProjectiveModel, Section};
use crate::quad::QuadOptions;

/// Width at which bisection stops.
pub const B_RESOLUTION: f64 = 1e-3;
const GRID: usize = 5;
const FALLBACK_GRID: usize = 41;
const LOEWNER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CminReport {
    pub b_star: f64,
    /// Smallest eigenvalue of `I - G1(b*)` on the `G0`-orthonormalised `E`.
    pub gap: f64,
    /// Number of `G1` evaluations.
    pub iterations: usize,
    /// Whether `G1` decreased entrywise on the sample grid (otherwise the
    /// search fell back to a grid scan).
    pub monotone: bool,
}

impl CminReport {
    pub fn to_csv(&self) -> String {
        format!(
            "b_star,gap_eigenvalue,iterations\n{},{},{}\n",
            self.b_star, self.gap, self.iterations
        )
    }
}

struct Probe<'a> {
    model: &'a ProjectiveModel,
    basis: &'a [Section],
    sigma: usize,
    opts: QuadOptions,
    g0: CMatrix,
    calls: usize,
}

impl Probe<'_> {
    /// `G1(b)` and the gap of `I - Phi* G1 Phi`.
    fn at(&mut self, b: f64) -> Result<(CMatrix, f64, f64), ExtendError> {
        self.calls += 1;
        let m = self
            .model
            .with_log_scale(b)
            .map_err(crate::residue::ResidueError::from)?;
        let (g1, err) = gram(&m, self.basis, self.sigma, 1.0, self.opts)?;
        let dec = decompose(&self.g0, &g1)?;
        let e = &dec.complement;
        if e.ncols() == 0 {
            return Ok((g1, 1.0, err));
        }
        // orthonormalise E against G0: Phi = E (E* G0 E)^{-1/2}
        let eig = eigen(&(e.adjoint() * &self.g0 * e));
        let d = eig
            .eigenvalues
            .map(|l| Complex64::new(l.sqrt().recip(), 0.0));
        let half = &eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint();
        let phi = e * half;
        let b_mat = phi.adjoint() * &g1 * &phi;
        let b_mat = (&b_mat + b_mat.adjoint()).scale(0.5);
        let n = b_mat.nrows();
        let gap = min_eigenvalue(&(CMatrix::identity(n, n) - b_mat))?;
        Ok((g1, gap, err))
    }
}

fn passes(gap: f64) -> bool {
    gap >= -LOEWNER_TOL
}

/// Smallest `b` in `range` (to [`B_RESOLUTION`]) for which the `eps = 1` Gram
/// matrix of a `G0`-orthonormal basis of `E` is at most the identity.
///
/// `G0` does not depend on `b` and is computed once. `G1` is checked for
/// entrywise decrease on a five-point grid; bisection is used when it holds
/// and a finer grid scan otherwise.
pub fn find_cmin(
    model: &ProjectiveModel,
    basis: &[Section],
    sigma: usize,
    range: (f64, f64),
    opts: QuadOptions,
) -> Result<CminReport, ExtendError> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(ExtendError::BadRange { lo, hi });
    }
    let (g0, _) = gram(model, basis, sigma, 0.0, opts)?;
    let mut probe = Probe {
        model,
        basis,
        sigma,
        opts,
        g0,
        calls: 0,
    };

    if is_e_trivial(&probe.g0) {
        return Ok(CminReport {
            b_star: lo,
            gap: 1.0,
            iterations: 0,
            monotone: true,
        });
    }

    let grid: Vec<f64> = (0..GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID - 1) as f64)
        .collect();
    let mut samples = Vec::with_capacity(GRID);
    for &b in &grid {
        let (g1, gap, err) = probe.at(b)?;
        samples.push((b, g1, gap, err));
    }
    let monotone = samples.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        let slack = 4.0 * (a.3 + b.3);
        a.1.iter()
            .zip(b.1.iter())
            .all(|(x, y)| y.norm() <= x.norm() + slack)
    });

    let (bracket, gap_hi) = if monotone {
        let last_gap = samples[GRID - 1].2;
        if !passes(last_gap) {
            return Err(ExtendError::RangeExhausted {
                lo,
                hi,
                gap: last_gap,
            });
        }
        if passes(samples[0].2) {
            return Ok(CminReport {
                b_star: lo,
                gap: samples[0].2,
                iterations: probe.calls,
                monotone,
            });
        }
        let i = samples.iter().position(|s| passes(s.2)).unwrap_or(GRID - 1);
        ((samples[i - 1].0, samples[i].0), samples[i].2)
    } else {
        let mut prev = lo;
        let mut found = None;
        for i in 0..FALLBACK_GRID {
            let b = lo + (hi - lo) * i as f64 / (FALLBACK_GRID - 1) as f64;
            let (_, gap, _) = probe.at(b)?;
            if passes(gap) {
                found = Some((b, gap));
                break;
            }
            prev = b;
            if i == FALLBACK_GRID - 1 {
                return Err(ExtendError::RangeExhausted { lo, hi, gap });
            }
        }
        let (b, gap) = found.expect("scan ends in a pass or an error");
        if b == lo {
            return Ok(CminReport {
                b_star: lo,
                gap,
                iterations: probe.calls,
                monotone,
            });
        }
        ((prev, b), gap)
    };

    let (mut fail, mut pass) = bracket;
    let mut gap = gap_hi;
    while pass - fail > B_RESOLUTION {
        let mid = 0.5 * (fail + pass);
        let (_, g, _) = probe.at(mid)?;
        if passes(g) {
            pass = mid;
            gap = g;
        } else {
            fail = mid;
        }
    }
    Ok(CminReport {
        b_star: pass,
        gap,
        iterations: probe.calls,
        monotone,
    })
}

/// Smallest eigenvalue of `I - Phi* G1(b) Phi` for a `G0`-orthonormal basis
/// `Phi` of `E` (`1` when `E = {0}`). The inequality holds at `b` when this is
/// at least `-1e-8`.
pub fn loewner_gap(
    model: &ProjectiveModel,
    basis: &[Section],
    sigma: usize,
    b: f64,
    opts: QuadOptions,
) -> Result<f64, ExtendError> {
    let (g0, _) = gram(model, basis, sigma, 0.0, opts)?;
    if is_e_trivial(&g0) {
        return Ok(1.0);
    }
    let mut probe = Probe {
        model,
        basis,
        sigma,
        opts,
        g0,
        calls: 0,
    };
    Ok(probe.at(b)?.1)
}

// E = {0} exactly when G0 vanishes.
fn is_e_trivial(g0: &CMatrix) -> bool {
    g0.iter().all(|z| z.norm() == 0.0)
}

/// One level of the descending chain.
#[derive(Debug, Clone)]
pub struct ChainStep {
    pub sigma: usize,
    pub section: Section,
    /// `R|F|(1)[sigma]`.
    pub r1: f64,
    /// `R|F|(0)[sigma]`.
    pub r0: f64,
}

/// Minimal extensions `F_sigma` for `sigma = sigma_mlc, ..., 1`.
///
/// At each level the target is split as `F_sigma` plus a remainder in
/// `H[sigma]`; the remainder becomes the next target, and the kernel basis
/// of `H[sigma]` the next basis. Stops early when the remainder space is
/// trivial.
pub fn extension_chain(
    model: &ProjectiveModel,
    basis: &[Section],
    target: &[Complex64],
    opts: QuadOptions,
) -> Result<Vec<ChainStep>, ExtendError> {
    let mut basis = basis.to_vec();
    let mut t = target.to_vec();
    let mut steps = Vec::new();
    for sigma in (1..=model.sigma_mlc()).rev() {
        let pair = GramPair::compute(model, &basis, sigma, opts)?;
        let dec = pair.decompose()?;
        let f = minimal_extension(&dec, &t)?;
        let quad = |g: &CMatrix| (f.adjoint() * g * &f)[(0, 0)].re;
        steps.push(ChainStep {
            sigma,
            section: combine(&format!("F{sigma}"), &basis, &f),
            r1: quad(&pair.g1),
            r0: quad(&pair.g0),
        });
        if dec.kernel.ncols() == 0 {
            break;
        }
        let coords: DVector<Complex64> = &dec.projector * DVector::from_column_slice(&t);
        basis = dec
            .kernel
            .column_iter()
            .enumerate()
            .map(|(j, col)| combine(&format!("h{}_{j}", sigma), &basis, &col.into_owned()))
            .collect();
        t = coords.iter().copied().collect();
    }
    Ok(steps)
}
