//! Tridiagonal elimination for the Crank-Nicolson systems.
//!
//! The matrices here are `I + iβH` with `H` real symmetric, so every leading
//! principal minor is nonsingular and elimination without pivoting is safe.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solves `A x = rhs` in place, `A = tridiag(off, diag, off)` with a
/// constant off-diagonal. `scratch` must have the same length as `diag`.
pub fn solve_symmetric_offdiag(
    diag: &[Complex64],
    off: Complex64,
    rhs: &mut [Complex64],
    scratch: &mut [Complex64],
) -> Result<()> {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    debug_assert_eq!(scratch.len(), n);
    if n == 0 {
        return Ok(());
    }
    // scratch holds the modified super-diagonal c'_i.
    let mut pivot = diag[0];
    check_pivot(pivot, 0)?;
    scratch[0] = off / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - off * scratch[i - 1];
        check_pivot(pivot, i)?;
        scratch[i] = off / pivot;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i] * next;
    }
    Ok(())
}

/// Solves `A x = rhs` in place for a general tridiagonal `A` with
/// sub-diagonal `lower[i] = A[i][i−1]` and super-diagonal
/// `upper[i] = A[i][i+1]` (entries outside the matrix are ignored).
pub fn solve_general(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &mut [Complex64],
    scratch: &mut [Complex64],
) -> Result<()> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n && scratch.len() == n);
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag[0];
    check_pivot(pivot, 0)?;
    scratch[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * scratch[i - 1];
        check_pivot(pivot, i)?;
        scratch[i] = upper[i] / pivot;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i] * next;
    }
    Ok(())
}

fn check_pivot(pivot: Complex64, row: usize) -> Result<()> {
    if pivot.norm_sqr() < 1e-300 || !pivot.is_finite() {
        return Err(Error::Internal(format!(
            "tridiagonal elimination broke down at row {row}"
        )));
    }
    Ok(())
}

/// Precomputed LU factors of a constant-coefficient tridiagonal matrix
/// `tridiag(off, diag, off)` of size `n`.
#[derive(Debug, Clone)]
pub struct ConstantTridiagonal {
    off: Complex64,
    /// `l_i` multipliers (index 0 unused).
    lower: Vec<Complex64>,
    /// Reciprocal pivots `1/u_i`.
    inv_pivot: Vec<Complex64>,
}

impl ConstantTridiagonal {
    pub fn new(n: usize, diag: Complex64, off: Complex64) -> Result<Self> {
        let mut lower = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        let mut u = diag;
        for i in 0..n {
            if i > 0 {
                lower[i] = off / u;
                u = diag - lower[i] * off;
            }
            check_pivot(u, i)?;
            inv_pivot[i] = u.inv();
        }
        Ok(Self {
            off,
            lower,
            inv_pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn off(&self) -> Complex64 {
        self.off
    }

    /// Elimination multiplier of row `i` (zero for row 0).
    pub fn lower(&self, i: usize) -> Complex64 {
        self.lower[i]
    }

    pub fn inv_pivot(&self, i: usize) -> Complex64 {
        self.inv_pivot[i]
    }

    /// Solves in place.
    pub fn solve(&self, rhs: &mut [Complex64]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        for i in 1..n {
            let prev = rhs[i - 1];
            rhs[i] -= self.lower[i] * prev;
        }
        rhs[n - 1] *= self.inv_pivot[n - 1];
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] = (rhs[i] - self.off * next) * self.inv_pivot[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn apply(diag: &[Complex64], off: Complex64, x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut y = diag[i] * x[i];
                if i > 0 {
                    y += off * x[i - 1];
                }
                if i + 1 < n {
                    y += off * x[i + 1];
                }
                y
            })
            .collect()
    }

    #[test]
    fn general_solve_recovers_solution() {
        let n = 37;
        let diag: Vec<_> = (0..n).map(|i| c(1.0, 0.3 * (i as f64).sin() - 0.9)).collect();
        let off = c(0.0, 0.45);
        let x: Vec<_> = (0..n).map(|i| c((i as f64).cos(), 0.1 * i as f64)).collect();
        let mut b = apply(&diag, off, &x);
        let mut scratch = vec![c(0.0, 0.0); n];
        solve_symmetric_offdiag(&diag, off, &mut b, &mut scratch).unwrap();
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn unsymmetric_solve_recovers_solution() {
        let n = 29;
        let lower: Vec<_> = (0..n).map(|i| c(0.08, -0.4 + 0.01 * i as f64)).collect();
        let upper: Vec<_> = (0..n).map(|i| c(0.08, -0.4 - 0.02 * (i as f64).cos())).collect();
        let diag: Vec<_> = (0..n).map(|i| c(0.83, 0.9 + 0.1 * (i as f64).sin())).collect();
        let x: Vec<_> = (0..n).map(|i| c((0.3 * i as f64).sin(), 1.0)).collect();
        let mut b: Vec<_> = (0..n)
            .map(|i| {
                let mut y = diag[i] * x[i];
                if i > 0 {
                    y += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += upper[i] * x[i + 1];
                }
                y
            })
            .collect();
        let mut scratch = vec![c(0.0, 0.0); n];
        solve_general(&lower, &diag, &upper, &mut b, &mut scratch).unwrap();
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_factorization_matches_general_solve() {
        let n = 64;
        let d = c(1.0, 2.7);
        let off = c(0.0, -1.35);
        let fac = ConstantTridiagonal::new(n, d, off).unwrap();
        let x: Vec<_> = (0..n).map(|i| c(1.0 / (1.0 + i as f64), (i as f64).sin())).collect();
        let mut b = apply(&vec![d; n], off, &x);
        fac.solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let diag = vec![c(0.0, 0.0); 4];
        let mut b = vec![c(1.0, 0.0); 4];
        let mut s = vec![c(0.0, 0.0); 4];
        assert!(solve_symmetric_offdiag(&diag, c(1.0, 0.0), &mut b, &mut s).is_err());
    }
}
