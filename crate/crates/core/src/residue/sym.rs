//! Elementary symmetric polynomials of reciprocals, exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::ResidueError;

/// `e_s(x_1, ..., x_k)`, computed by the usual one-pass recurrence.
pub fn elementary(values: &[BigRational], s: usize) -> BigRational {
    let mut e = vec![BigRational::zero(); s + 1];
    e[0] = BigRational::one();
    for x in values {
        for k in (1..=s).rev() {
            let add = &e[k - 1] * x;
            e[k] += add;
        }
    }
    e.swap_remove(s)
}

fn recip(k: i64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(k))
}

/// `sym^s(1, 1/2, ..., 1/(sigma-1))`.
///
/// Defined for `sigma >= 1` and `0 <= s <= sigma - 1`.
pub fn sym_coeff(sigma: usize, s: usize) -> Result<BigRational, ResidueError> {
    if sigma == 0 || s >= sigma {
        return Err(ResidueError::Contract(format!(
            "sym coefficient needs 0 <= s < sigma, got s = {s}, sigma = {sigma}"
        )));
    }
    let values: Vec<BigRational> = (1..sigma as i64).map(recip).collect();
    Ok(elementary(&values, s))
}

/// The row `sym^0 .. sym^{sigma-1}` for one `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTable {
    pub sigma: usize,
    pub coeffs: Vec<BigRational>,
}

impl SymTable {
    pub fn new(sigma: usize) -> Result<Self, ResidueError> {
        let coeffs = (0..sigma)
            .map(|s| sym_coeff(sigma, s))
            .collect::<Result<_, _>>()?;
        Ok(SymTable { sigma, coeffs })
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }
}

/// Coefficients `c_1 .. c_K` of the recursion identity for an integrand with
/// `|psi|^m` in the denominator and `p` lc directions:
/// `c_s = sym^s(1/(m-1), ..., 1/(m-K))` with `K = min(p, m - 1)`.
pub fn identity_coeffs(m: usize, p: usize) -> Vec<f64> {
    let k = p.min(m.saturating_sub(1));
    let values: Vec<BigRational> = (1..=k).map(|j| recip((m - j) as i64)).collect();
    (1..=k)
        .map(|s| elementary(&values, s).to_f64().unwrap_or(f64::NAN))
        .collect()
}

/// `prod_{k=1}^{s-1} (k + eps)`; equals 1 for `s <= 1`.
pub fn rising(eps: f64, s: usize) -> f64 {
    (1..s).map(|k| k as f64 + eps).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    // Sum over all s-subsets of products, straight from the definition.
    fn brute(sigma: usize, s: usize) -> BigRational {
        (1..sigma as i64)
            .combinations(s)
            .map(|c| c.into_iter().map(recip).product::<BigRational>())
            .sum()
    }

    #[test]
    fn small_rows() {
        assert_eq!(sym_coeff(3, 1).unwrap(), rat(3, 2));
        assert_eq!(sym_coeff(3, 2).unwrap(), rat(1, 2));
        assert_eq!(sym_coeff(4, 3).unwrap(), rat(1, 6));
        assert_eq!(sym_coeff(4, 1).unwrap(), rat(11, 6));
        assert_eq!(sym_coeff(1, 0).unwrap(), rat(1, 1));
    }

    #[test]
    fn matches_subset_enumeration() {
        for sigma in 1..=8 {
            for s in 0..sigma {
                assert_eq!(sym_coeff(sigma, s).unwrap(), brute(sigma, s), "{sigma} {s}");
            }
        }
    }

    #[test]
    fn pascal_rule() {
        // sym^s_sigma = sym^s_{sigma-1} + sym^{s-1}_{sigma-1} / (sigma - 1)
        for sigma in 2..=8 {
            for s in 1..sigma - 1 {
                let lhs = sym_coeff(sigma, s).unwrap();
                let rhs = sym_coeff(sigma - 1, s).unwrap()
                    + sym_coeff(sigma - 1, s - 1).unwrap() * recip(sigma as i64 - 1);
                assert_eq!(lhs, rhs);
            }
            // top coefficient is 1/(sigma-1)!
            let fact: i64 = (1..sigma as i64).product();
            assert_eq!(sym_coeff(sigma, sigma - 1).unwrap(), rat(1, fact));
        }
    }

    #[test]
    fn out_of_range() {
        assert!(sym_coeff(0, 0).is_err());
        assert!(sym_coeff(3, 3).is_err());
    }

    #[test]
    fn identity_coefficients() {
        assert_eq!(identity_coeffs(2, 2), vec![1.0]);
        assert_eq!(identity_coeffs(3, 3), vec![1.5, 0.5]);
        // fewer lc directions than the power of |psi|
        assert_eq!(identity_coeffs(3, 1), vec![0.5]);
        assert!(identity_coeffs(1, 1).is_empty());
        assert_eq!(rising(0.5, 3), 1.5 * 2.5);
    }
}
