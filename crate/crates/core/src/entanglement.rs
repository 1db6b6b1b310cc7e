//! One-particle reduced density matrix and von Neumann entropy.

use faer::{Accum, Mat, MatRef};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::solver2d::WaveFunction2D;
use crate::units::Grid1D;

/// Eigenvalues below this are treated as exact zeros before the logarithm.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Pair-degeneracy tolerance for fermionic spectra.
pub const PAIRING_TOLERANCE: f64 = 1e-6;

/// Eigenvalues above this take part in the pairing check.
pub const PAIRING_MIN_EIGENVALUE: f64 = 1e-8;

/// Which coordinate is traced out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Traced {
    A,
    B,
}

/// `ρ_r(x, x')` with the `dx` measure folded in, so `trace(ρ) = 1` as a
/// plain matrix trace.
#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    grid: Grid1D,
    rho: Mat<Complex64>,
}

fn amplitude_view(psi: &WaveFunction2D) -> MatRef<'_, Complex64> {
    let n = psi.grid().n();
    MatRef::from_row_major_slice(psi.amplitudes(), n, n)
}

/// Partial trace over particle b: `ρ[i][j] = Σ_b Ψ(x_i, x_b) Ψ*(x_j, x_b) dx²`.
pub fn reduce(psi: &WaveFunction2D, exec: Execution) -> ReducedDensityMatrix {
    reduce_over(psi, Traced::B, exec)
}

pub fn reduce_over(psi: &WaveFunction2D, traced: Traced, exec: Execution) -> ReducedDensityMatrix {
    let n = psi.grid().n();
    let dx = psi.grid().dx();
    let amp = amplitude_view(psi);
    // Tracing over a amounts to transposing Ψ first.
    let m = match traced {
        Traced::B => amp,
        Traced::A => amp.transpose(),
    };
    let mut rho = Mat::<Complex64>::zeros(n, n);
    faer::linalg::matmul::matmul(
        rho.as_mut(),
        Accum::Replace,
        m,
        m.adjoint(),
        Complex64::new(dx * dx, 0.0),
        exec.faer_par(),
    );
    ReducedDensityMatrix { grid: *psi.grid().axis(), rho }
}

impl ReducedDensityMatrix {
    /// Builds from a dense row-major matrix (mostly useful in tests).
    pub fn from_row_major(grid: Grid1D, data: &[Complex64]) -> Result<Self> {
        let n = grid.n();
        if data.len() != n * n {
            return Err(Error::Internal("density matrix size does not match grid".into()));
        }
        Ok(Self {
            grid,
            rho: MatRef::from_row_major_slice(data, n, n).to_owned(),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.rho.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rho[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.rho[(i, i)].re).sum()
    }

    /// `max |ρ − ρ†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in non-increasing order.
    pub fn eigenvalues(&self, exec: Execution) -> Result<Vec<f64>> {
        use faer::linalg::evd;
        use faer::dyn_stack::{MemBuffer, MemStack};
        let n = self.n();
        let par = exec.faer_par();
        let mut s = faer::diag::Diag::<Complex64>::zeros(n);
        let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<Complex64>(
            n,
            evd::ComputeEigenvectors::No,
            par,
            Default::default(),
        ));
        evd::self_adjoint_evd(
            self.rho.as_ref(),
            s.as_mut(),
            None,
            par,
            MemStack::new(&mut buf),
            Default::default(),
        )
        .map_err(|e| Error::Internal(format!("Hermitian eigensolve failed: {e:?}")))?;
        let mut ev: Vec<f64> = s.column_vector().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        Ok(ev)
    }
}

/// `−Σ λ ln λ` with `0·ln 0 = 0`; eigenvalues under [`EIGENVALUE_FLOOR`] count as zero.
pub fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    -eigenvalues
        .iter()
        .filter(|&&l| l >= EIGENVALUE_FLOOR)
        .map(|&l| l * l.ln())
        .sum::<f64>()
}

pub fn von_neumann_entropy(rdm: &ReducedDensityMatrix, exec: Execution) -> Result<f64> {
    Ok(entropy_from_eigenvalues(&rdm.eigenvalues(exec)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingReport {
    /// `(λ_{2k}, λ_{2k+1})` for every pair whose leading member exceeds the cutoff.
    pub pairs: Vec<(f64, f64)>,
    pub worst_gap: f64,
    pub worst_pair: usize,
}

/// Checks that the retained eigenvalues come in degenerate pairs, as they
/// must for the reduced state of any antisymmetric two-fermion state.
/// `eigenvalues` must be sorted non-increasing.
pub fn eigen_pairing_check(eigenvalues: &[f64]) -> Result<PairingReport> {
    let mut report = PairingReport { pairs: Vec::new(), worst_gap: 0.0, worst_pair: 0 };
    for (k, pair) in eigenvalues.chunks(2).enumerate() {
        if pair[0] <= PAIRING_MIN_EIGENVALUE {
            break;
        }
        let second = pair.get(1).copied().unwrap_or(0.0);
        let gap = (pair[0] - second).abs();
        if gap > report.worst_gap {
            report.worst_gap = gap;
            report.worst_pair = k;
        }
        report.pairs.push((pair[0], second));
    }
    if report.worst_gap >= PAIRING_TOLERANCE {
        let (a, b) = report.pairs[report.worst_pair];
        return Err(Error::Tolerance(format!(
            "eigenvalue pair {} = ({a:.9}, {b:.9}) split by {:.3e}; antisymmetry broken or grid under-resolved",
            report.worst_pair, report.worst_gap
        )));
    }
    Ok(report)
}

/// Singular values of a dense row-major `rows × cols` complex matrix by
/// one-sided (Hestenes) Jacobi rotations, in non-increasing order.
pub fn jacobi_singular_values(data: &[Complex64], rows: usize, cols: usize) -> Vec<f64> {
    // Work on columns stored contiguously.
    let mut c: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| (0..rows).map(|i| data[i * cols + j]).collect())
        .collect();
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (left, right) = c.split_at_mut(q);
                let (ap, aq) = (&mut left[p], &mut right[0]);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for (x, y) in ap.iter().zip(aq.iter()) {
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for (x, y) in ap.iter_mut().zip(aq.iter_mut()) {
                    let yq = *y * phase.conj();
                    let xp = *x;
                    *x = cs * xp - sn * yq;
                    *y = sn * xp + cs * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Entropy from the Schmidt coefficients of `Ψ·dx`, bypassing the density
/// matrix entirely.
pub fn entropy_schmidt(psi: &WaveFunction2D) -> f64 {
    let n = psi.grid().n();
    let dx = psi.grid().dx();
    let scaled: Vec<Complex64> = psi.amplitudes().iter().map(|a| a * dx).collect();
    let lambdas: Vec<f64> = jacobi_singular_values(&scaled, n, n).iter().map(|s| s * s).collect();
    entropy_from_eigenvalues(&lambdas)
}
