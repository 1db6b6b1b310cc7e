//! Momentum-space analysis: continuum-normalized Fourier transform, band
//! weights and peak detection.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver1d::WaveFunction1D;
use crate::units::Grid1D;

/// `|φ(k)|²` on an ascending wavenumber axis with uniform spacing `dk`,
/// normalized so that `Σ density·dk = 1` for a normalized state.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSpectrum {
    pub k: Vec<f64>,
    pub density: Vec<f64>,
    pub dk: f64,
}

impl MomentumSpectrum {
    pub fn total(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.dk
    }

    pub fn mean_k(&self) -> f64 {
        self.k
            .iter()
            .zip(&self.density)
            .map(|(k, d)| k * d)
            .sum::<f64>()
            * self.dk
            / self.total()
    }

    pub fn std_k(&self) -> f64 {
        let mean = self.mean_k();
        let var = self
            .k
            .iter()
            .zip(&self.density)
            .map(|(k, d)| (k - mean).powi(2) * d)
            .sum::<f64>()
            * self.dk
            / self.total();
        var.sqrt()
    }

    pub fn k_min(&self) -> f64 {
        self.k[0]
    }

    pub fn k_max(&self) -> f64 {
        self.k[self.k.len() - 1]
    }
}

/// `φ(k_j) = Σ_i ψ(x_i) e^{−i k_j x_i} dx / √(2π)` in FFT index order.
pub fn momentum_amplitudes(grid: &Grid1D, amplitudes: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let mut buf = amplitudes.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = grid.dx() / (2.0 * PI).sqrt();
    let x0 = grid.x0_edge();
    for (j, v) in buf.iter_mut().enumerate() {
        let k = grid.k_of_index(j);
        *v *= Complex64::from_polar(scale, -k * x0);
    }
    buf
}

/// Inverse of [`momentum_amplitudes`].
pub fn position_amplitudes(grid: &Grid1D, phi: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let scale = (2.0 * PI).sqrt() / (grid.dx() * n as f64);
    let x0 = grid.x0_edge();
    let mut buf: Vec<Complex64> = phi
        .iter()
        .enumerate()
        .map(|(j, v)| v * Complex64::from_polar(scale, grid.k_of_index(j) * x0))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf
}

pub fn to_momentum(psi: &WaveFunction1D) -> MomentumSpectrum {
    spectrum_of(psi.grid(), psi.amplitudes())
}

pub fn spectrum_of(grid: &Grid1D, amplitudes: &[Complex64]) -> MomentumSpectrum {
    let phi = momentum_amplitudes(grid, amplitudes);
    let n = grid.n();
    let half = n / 2;
    // FFT order → ascending k: indices n/2..n are the negative wavenumbers.
    let order = (half..n).chain(0..half);
    let mut k = Vec::with_capacity(n);
    let mut density = Vec::with_capacity(n);
    for j in order {
        k.push(grid.k_of_index(j));
        density.push(phi[j].norm_sqr());
    }
    MomentumSpectrum {
        k,
        density,
        dk: grid.dk(),
    }
}

/// Integrated weight of momentum bands of width `k0` centered on
/// `k_center + m·k0`, `m ∈ [−n_bands, n_bands]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandWeights {
    pub k_center: f64,
    pub k0: f64,
    pub n_bands: i32,
    /// `weights[m + n_bands]` is the weight of band `m`.
    pub weights: Vec<f64>,
    /// Weight outside all bands.
    pub residual: f64,
}

impl BandWeights {
    pub fn get(&self, m: i32) -> f64 {
        assert!(m.abs() <= self.n_bands, "band {m} outside ±{}", self.n_bands);
        self.weights[(m + self.n_bands) as usize]
    }

    pub fn bands(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, w)| (i as i32 - self.n_bands, *w))
    }
}

pub fn band_weights(
    spec: &MomentumSpectrum,
    k_center: f64,
    k0: f64,
    n_bands: i32,
) -> Result<BandWeights> {
    if !(k0 > 0.0) || n_bands < 0 {
        return Err(Error::config("pulse.k0_invnm", "band width must be positive"));
    }
    let reach = (n_bands as f64 + 0.5) * k0;
    let slack = 0.5 * spec.dk;
    if k_center - reach < spec.k_min() - slack || k_center + reach > spec.k_max() + slack {
        return Err(Error::config(
            "grid.n",
            format!(
                "bands k_center ± {reach:.4} nm⁻¹ exceed the spectral range [{:.4}, {:.4}] nm⁻¹",
                spec.k_min(),
                spec.k_max()
            ),
        ));
    }
    let mut weights = vec![0.0; (2 * n_bands + 1) as usize];
    let mut residual = 0.0;
    let mut deposit = |m: i64, w: f64| {
        if m.abs() <= n_bands as i64 {
            weights[(m + n_bands as i64) as usize] += w;
        } else {
            residual += w;
        }
    };
    for (k, d) in spec.k.iter().zip(&spec.density) {
        let w = d * spec.dk;
        let u = (k - k_center) / k0 + 0.5;
        let m = u.floor();
        // A point sitting on a band edge is shared between its neighbours.
        if (u - m).abs() < 1e-9 {
            deposit(m as i64 - 1, 0.5 * w);
            deposit(m as i64, 0.5 * w);
        } else if (u - m - 1.0).abs() < 1e-9 {
            deposit(m as i64, 0.5 * w);
            deposit(m as i64 + 1, 0.5 * w);
        } else {
            deposit(m as i64, w);
        }
    }
    Ok(BandWeights {
        k_center,
        k0,
        n_bands,
        weights,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub k: f64,
    pub height: f64,
    /// Integrated density between the flanking minima.
    pub weight: f64,
}

/// Default peak threshold as a fraction of the global maximum.
pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.01;

/// Local maxima of the density above `threshold · max(density)`.
pub fn find_peaks(spec: &MomentumSpectrum, threshold: f64) -> Vec<Peak> {
    let d = &spec.density;
    let n = d.len();
    let max = d.iter().cloned().fold(0.0, f64::max);
    if n < 3 || max <= 0.0 {
        return Vec::new();
    }
    let floor = threshold * max;
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(d[i] > d[i - 1] && d[i] >= d[i + 1] && d[i] > floor) {
            continue;
        }
        let (ym, y0, yp) = (d[i - 1], d[i], d[i + 1]);
        let curv = ym - 2.0 * y0 + yp;
        let delta = if curv < 0.0 { 0.5 * (ym - yp) / curv } else { 0.0 };
        let mut lo = i;
        while lo > 0 && d[lo - 1] < d[lo] {
            lo -= 1;
        }
        let mut hi = i;
        while hi + 1 < n && d[hi + 1] <= d[hi] {
            hi += 1;
        }
        let inner: f64 = d[lo..=hi].iter().sum();
        let weight = (inner - 0.5 * (d[lo] + d[hi])) * spec.dk;
        peaks.push(Peak {
            k: spec.k[i] + delta * spec.dk,
            height: y0 - 0.25 * (ym - yp) * delta,
            weight,
        });
    }
    peaks
}
