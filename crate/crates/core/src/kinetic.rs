//! Three-point discretizations of the kinetic operator `−κ ∂²` with hard walls.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::tridiag::ConstantTridiagonal;

/// `Central` is the second-order difference `K = κ/dx² · tridiag(−1, 2, −1)`.
/// `Compact` is the fourth-order Numerov form `M⁻¹K` with
/// `M = tridiag(1, 10, 1)/12`. Both matrices are symmetric Toeplitz and
/// commute, so Crank-Nicolson with either operator is exactly unitary and
/// every linear system stays tridiagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    Central,
    Compact,
}

impl Stencil {
    pub fn name(self) -> &'static str {
        match self {
            Stencil::Central => "central",
            Stencil::Compact => "compact",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "central" => Some(Stencil::Central),
            "compact" => Some(Stencil::Compact),
            _ => None,
        }
    }

    /// Diagonal and off-diagonal of the mass matrix `M`.
    pub fn mass(self) -> (f64, f64) {
        match self {
            Stencil::Central => (1.0, 0.0),
            Stencil::Compact => (10.0 / 12.0, 1.0 / 12.0),
        }
    }

    /// Eigenvalue of the discrete `−∂²` on a mode of wavenumber `k`; the
    /// exact operator gives `k²`.
    pub fn symbol(self, k: f64, dx: f64) -> f64 {
        let s = (2.0 - 2.0 * (k * dx).cos()) / (dx * dx);
        match self {
            Stencil::Central => s,
            Stencil::Compact => s / (1.0 - dx * dx * s / 12.0),
        }
    }
}

/// Applies the kinetic operator to lines of a fixed length.
#[derive(Debug, Clone)]
pub struct KineticOperator {
    hop: f64,
    mass: Option<ConstantTridiagonal>,
}

impl KineticOperator {
    /// `hop = κ/dx²`.
    pub fn new(n: usize, hop: f64, stencil: Stencil) -> Result<Self> {
        let mass = match stencil {
            Stencil::Central => None,
            Stencil::Compact => {
                let (m0, m1) = stencil.mass();
                Some(ConstantTridiagonal::new(n, Complex64::new(m0, 0.0), Complex64::new(m1, 0.0))?)
            }
        };
        Ok(Self { hop, mass })
    }

    /// `out = T · line`.
    pub fn apply(&self, line: &[Complex64], out: &mut [Complex64]) {
        let n = line.len();
        let zero = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let left = if i > 0 { line[i - 1] } else { zero };
            let right = if i + 1 < n { line[i + 1] } else { zero };
            out[i] = self.hop * (2.0 * line[i] - left - right);
        }
        if let Some(m) = &self.mass {
            m.solve(out);
        }
    }

    /// `Σ conj(line)·(T line)`, the unnormalized expectation along one line.
    pub fn expectation(&self, line: &[Complex64], scratch: &mut [Complex64]) -> f64 {
        self.apply(line, scratch);
        line.iter().zip(scratch.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }
}
