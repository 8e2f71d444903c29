//! Gram matrices of section bases, the decomposition `H = H[sigma] + E`,
//! minimal extensions and the search for the smallest admissible `b`.

mod cmin;

pub use cmin::{extension_chain, find_cmin, loewner_gap, ChainStep, CminReport, B_RESOLUTION};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{ProjectiveModel, Section};
use crate::quad::QuadOptions;
use crate::residue::{ResidueEngine, ResidueError};

pub type CMatrix = DMatrix<Complex64>;

/// Relative singular-value threshold below which a direction of `G0` counts
/// as part of the kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-8;
/// Largest condition number of `G1` restricted to the kernel we accept.
pub const MAX_CONDITION: f64 = 1e12;
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ExtendError {
    #[error(transparent)]
    Residue(#[from] ResidueError),
    #[error("Gram entry ({row}, {col}): {source}")]
    Entry {
        row: usize,
        col: usize,
        #[source]
        source: ResidueError,
    },
    #[error("matrix is not hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("G1 is ill-conditioned on the kernel (condition number {cond:e})")]
    IllConditioned { cond: f64 },
    #[error("target is not in the image of E (residual {residual:e})")]
    Inconsistent { residual: f64 },
    #[error("no b in [{lo}, {hi}] satisfies the inequality; gap at {hi} is {gap:e}")]
    RangeExhausted { lo: f64, hi: f64, gap: f64 },
    #[error("bad b-range [{lo}, {hi}]")]
    BadRange { lo: f64, hi: f64 },
}

/// `[<f_j, f_k>(eps)[sigma]]` for a basis. `eps = 0` uses the lc measure,
/// `eps > 0` the defining integral. Returns the matrix and the largest entry
/// error.
///
/// Only per-monomial values are integrated (distinct monomials are
/// orthogonal, by rotation invariance in each coordinate); they are evaluated
/// on separate threads.
pub fn gram(
    model: &ProjectiveModel,
    basis: &[Section],
    sigma: usize,
    eps: f64,
    opts: QuadOptions,
) -> Result<(CMatrix, f64), ExtendError> {
    let engine = ResidueEngine::new(model, opts)?;
    let coeffs: Vec<BTreeMap<Vec<u32>, Complex64>> = basis
        .iter()
        .map(|f| engine.monomials(f).map(|v| v.into_iter().collect()))
        .collect::<Result<_, _>>()?;
    // first basis element containing each monomial, for error reporting
    let mut owner: BTreeMap<&[u32], usize> = BTreeMap::new();
    for (i, c) in coeffs.iter().enumerate() {
        for a in c.keys() {
            owner.entry(a.as_slice()).or_insert(i);
        }
    }
    let results: Vec<(&[u32], usize, Result<(f64, f64), ResidueError>)> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = owner
                .iter()
                .map(|(&a, &i)| {
                    let h = scope.spawn(move || {
                        let e = ResidueEngine::new(model, opts)?;
                        e.monomial_value(a, sigma, eps).map(|v| (v.value, v.error))
                    });
                    (a, i, h)
                })
                .collect();
            handles
                .into_iter()
                .map(|(a, i, h)| (a, i, h.join().expect("gram worker panicked")))
                .collect()
        });
    let mut values: BTreeMap<&[u32], (f64, f64)> = BTreeMap::new();
    for (a, i, r) in results {
        let v = r.map_err(|source| ExtendError::Entry {
            row: i,
            col: i,
            source,
        })?;
        values.insert(a, v);
    }

    let k = basis.len();
    let mut g = CMatrix::zeros(k, k);
    let mut err = 0.0f64;
    for j in 0..k {
        for l in 0..k {
            let mut s = Complex64::new(0.0, 0.0);
            let mut e = 0.0;
            for (a, fa) in &coeffs[j] {
                if let Some(gb) = coeffs[l].get(a) {
                    let (v, ve) = values[a.as_slice()];
                    s += fa * gb.conj() * v;
                    e += (fa * gb.conj()).norm() * ve;
                }
            }
            g[(j, l)] = s;
            err = err.max(e);
        }
    }
    Ok((g, err))
}

/// `max |A - A*|`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let mut d = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            d = d.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    d
}

fn check_hermitian(a: &CMatrix) -> Result<(), ExtendError> {
    if a.nrows() != a.ncols() {
        return Err(ExtendError::Dimension {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = hermitian_defect(a);
    if defect > HERMITIAN_TOL * scale {
        return Err(ExtendError::NotHermitian { defect });
    }
    Ok(())
}

fn eigen(a: &CMatrix) -> SymmetricEigen<Complex64, nalgebra::Dyn> {
    // symmetrise away rounding before handing to the solver
    SymmetricEigen::new((a + a.adjoint()).scale(0.5))
}

/// Smallest eigenvalue of a hermitian matrix (`+inf` when empty).
pub fn min_eigenvalue(a: &CMatrix) -> Result<f64, ExtendError> {
    check_hermitian(a)?;
    if a.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(eigen(a).eigenvalues.min())
}

/// Whether `A <= B` in the Loewner order: the smallest eigenvalue of `B - A`
/// is at least `-tol`.
pub fn loewner_leq(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool, ExtendError> {
    check_hermitian(a)?;
    check_hermitian(b)?;
    if a.shape() != b.shape() {
        return Err(ExtendError::Dimension {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    Ok(min_eigenvalue(&(b - a))? >= -tol)
}

/// Gram matrices at `eps = 0` and `eps = 1` for one basis.
#[derive(Debug, Clone)]
pub struct GramPair {
    pub labels: Vec<String>,
    pub g0: CMatrix,
    pub g1: CMatrix,
    pub sigma: usize,
    pub b: f64,
    /// Largest quadrature error over both matrices.
    pub error: f64,
}

impl GramPair {
    pub fn compute(
        model: &ProjectiveModel,
        basis: &[Section],
        sigma: usize,
        opts: QuadOptions,
    ) -> Result<Self, ExtendError> {
        let (g0, e0) = gram(model, basis, sigma, 0.0, opts)?;
        let (g1, e1) = gram(model, basis, sigma, 1.0, opts)?;
        Ok(GramPair {
            labels: basis.iter().map(|f| f.name.clone()).collect(),
            g0,
            g1,
            sigma,
            b: model.log_scale,
            error: e0.max(e1),
        })
    }

    pub fn decompose(&self) -> Result<Decomposition, ExtendError> {
        decompose(&self.g0, &self.g1)
    }

    /// Both matrices as labelled CSV blocks.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (name, m) in [("G0", &self.g0), ("G1", &self.g1)] {
            let _ = writeln!(out, "{name},{}", self.labels.join(","));
            for (i, label) in self.labels.iter().enumerate() {
                let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
                let _ = writeln!(out, "{label},{}", row.join(","));
            }
        }
        out
    }
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Coefficient vectors (columns, in the input basis) spanning `H[sigma]` and
/// its `G1`-orthogonal complement `E`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub kernel: CMatrix,
    pub complement: CMatrix,
    /// `(K* G1 K)^-1 K* G1`: the kernel coordinates of the `G1`-orthogonal
    /// projection onto `H[sigma]`.
    pub(crate) projector: CMatrix,
}

impl Decomposition {
    pub fn dim(&self) -> usize {
        self.kernel.nrows()
    }

    /// The component of `v` in `E` along `H[sigma]`.
    pub fn e_part(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        if self.kernel.ncols() == 0 {
            return v.clone();
        }
        v - &self.kernel * (&self.projector * v)
    }
}

/// Splits the span of a basis as `H[sigma] + E`: the numerical kernel of `G0`
/// and its `G1`-orthogonal complement.
pub fn decompose(g0: &CMatrix, g1: &CMatrix) -> Result<Decomposition, ExtendError> {
    check_hermitian(g0)?;
    check_hermitian(g1)?;
    let k = g0.nrows();
    if g1.nrows() != k {
        return Err(ExtendError::Dimension {
            expected: k,
            got: g1.nrows(),
        });
    }
    let eig = eigen(g0);
    let largest = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut ker, mut rest) = (Vec::new(), Vec::new());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let col = eig.eigenvectors.column(i).into_owned();
        if l.abs() <= KERNEL_THRESHOLD * largest {
            ker.push(col);
        } else {
            rest.push(col);
        }
    }
    let empty = || CMatrix::zeros(k, 0);
    if ker.is_empty() {
        return Ok(Decomposition {
            kernel: empty(),
            complement: CMatrix::identity(k, k),
            projector: CMatrix::zeros(0, k),
        });
    }
    let kernel = tidy(CMatrix::from_columns(&ker));
    let a = kernel.adjoint() * g1 * &kernel;
    let ae = eigen(&a).eigenvalues;
    let (lo, hi) = (ae.min(), ae.max());
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(ExtendError::IllConditioned { cond });
    }
    let inv = ((a.clone() + a.adjoint()).scale(0.5))
        .try_inverse()
        .ok_or(ExtendError::IllConditioned { cond })?;
    let projector = inv * kernel.adjoint() * g1;
    let complement = if rest.is_empty() {
        empty()
    } else {
        let w = tidy(CMatrix::from_columns(&rest));
        &w - &kernel * (&projector * &w)
    };
    Ok(Decomposition {
        kernel,
        complement,
        projector,
    })
}

// Rounds eigenvector noise to exact zeros and fixes each column's phase so
// that its largest entry is real and positive.
fn tidy(mut m: CMatrix) -> CMatrix {
    for mut col in m.column_iter_mut() {
        let big = col.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        for z in col.iter_mut() {
            if z.norm() <= 1e-14 * big {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        if let Some(p) = col
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        {
            if p.norm() > 0.0 {
                let phase = p.conj() / p.norm();
                for z in col.iter_mut() {
                    *z *= phase;
                }
            }
        }
    }
    m
}

/// The extension of minimal `<., .>(1)[sigma]`-norm in the class of
/// `target + H[sigma]`: the `E`-component of `target`.
///
/// `target` holds coefficients in the basis the decomposition was computed
/// for.
pub fn minimal_extension(
    dec: &Decomposition,
    target: &[Complex64],
) -> Result<DVector<Complex64>, ExtendError> {
    if target.len() != dec.dim() {
        return Err(ExtendError::Dimension {
            expected: dec.dim(),
            got: target.len(),
        });
    }
    let v = DVector::from_column_slice(target);
    let f = dec.e_part(&v);
    // f must lie in the column span of E
    let residual = residual_outside(&dec.complement, &f);
    let scale = v.norm().max(1.0);
    if residual > 1e-8 * scale {
        return Err(ExtendError::Inconsistent { residual });
    }
    Ok(f)
}

fn residual_outside(span: &CMatrix, v: &DVector<Complex64>) -> f64 {
    if span.ncols() == 0 {
        return v.norm();
    }
    let svd = span.clone().svd(true, true);
    match svd.solve(v, 1e-12) {
        Ok(x) => (span * x - v).norm(),
        Err(_) => v.norm(),
    }
}

/// Builds the section `sum_k c_k f_k`.
pub fn combine(name: &str, basis: &[Section], coeffs: &DVector<Complex64>) -> Section {
    let parts: Vec<(Complex64, &Section)> = coeffs.iter().copied().zip(basis.iter()).collect();
    Section::combine(name, &parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| c(x))))
    }

    #[test]
    fn loewner_examples() {
        let i = diag(&[1.0, 1.0]);
        let z = diag(&[0.0, 0.0]);
        assert!(loewner_leq(&z, &i, 0.0).unwrap());
        assert!(!loewner_leq(&i, &z, 1e-8).unwrap());
        assert!(loewner_leq(&diag(&[0.5, 0.9]), &i, 0.0).unwrap());
        let mut bad = i.clone();
        bad[(0, 1)] = c(1.0);
        assert!(matches!(
            loewner_leq(&bad, &i, 0.0),
            Err(ExtendError::NotHermitian { .. })
        ));
    }

    #[test]
    fn decomposition_of_a_diagonal_pair() {
        let g0 = diag(&[2.0, 0.0, 0.0, 3.0]);
        let mut g1 = diag(&[1.0, 0.5, 0.5, 1.0]);
        g1[(0, 1)] = c(0.2);
        g1[(1, 0)] = c(0.2);
        let d = decompose(&g0, &g1).unwrap();
        assert_eq!((d.kernel.ncols(), d.complement.ncols()), (2, 2));
        for col in d.kernel.column_iter() {
            assert_eq!(col[0], c(0.0));
            assert_eq!(col[3], c(0.0));
        }
        let cross = d.kernel.adjoint() * &g1 * &d.complement;
        assert!(cross.iter().all(|z| z.norm() < 1e-12));

        // target differing by a kernel element gives the same extension
        let t = [c(0.0), c(0.0), c(0.0), c(1.0)];
        let t2 = [c(0.0), c(1.0), c(0.0), c(1.0)];
        let f = minimal_extension(&d, &t).unwrap();
        let f2 = minimal_extension(&d, &t2).unwrap();
        assert!((&f - &f2).norm() < 1e-12);
        assert!((f - DVector::from_column_slice(&t)).norm() < 1e-12);
        let zero = minimal_extension(&d, &[c(0.0); 4]).unwrap();
        assert_eq!(zero.norm(), 0.0);
        assert!(matches!(
            minimal_extension(&d, &[c(1.0)]),
            Err(ExtendError::Dimension { .. })
        ));
    }

    #[test]
    fn degenerate_decompositions() {
        let d = decompose(&diag(&[1.0]), &diag(&[0.5])).unwrap();
        assert_eq!((d.kernel.ncols(), d.complement.ncols()), (0, 1));
        let d = decompose(&diag(&[0.0, 0.0]), &diag(&[1.0, 2.0])).unwrap();
        assert_eq!((d.kernel.ncols(), d.complement.ncols()), (2, 0));
        assert!(matches!(
            decompose(&diag(&[0.0, 1.0]), &diag(&[0.0, 1.0])),
            Err(ExtendError::IllConditioned { .. })
        ));
    }

    #[test]
    fn csv_blocks() {
        let p = GramPair {
            labels: vec!["a".into(), "b".into()],
            g0: diag(&[1.0, 0.0]),
            g1: CMatrix::from_row_slice(
                2,
                2,
                &[
                    c(0.5),
                    Complex64::new(0.0, 0.25),
                    Complex64::new(0.0, -0.25),
                    c(0.5),
                ],
            ),
            sigma: 1,
            b: 1.0,
            error: 0.0,
        };
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "G0,a,b");
        assert_eq!(lines[3], "G1,a,b");
        assert_eq!(lines[4], "a,0.5,0+0.25i");
        assert_eq!(lines[5], "b,0-0.25i,0.5");
    }
}
