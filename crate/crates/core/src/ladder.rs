//! Interaction-picture momentum ladder.
//!
//! While the sine pulse is on, a plane wave `k` couples only to `k ± k0`.
//! Writing `φ(k,t) = exp(−iħk²t/2m) φ̃(k,t)` leaves
//!
//! ```text
//! ∂φ̃(k)/∂t = −(A/2ħ) exp[ i(ħkk0/m − ħk0²/2m) t] φ̃(k − k0)
//!            + (A/2ħ) exp[−i(ħkk0/m + ħk0²/2m) t] φ̃(k + k0)
//! ```
//!
//! which is integrated here with classical RK4 on a wavenumber grid whose
//! spacing divides `k0`. This path never touches real space and serves as
//! an oracle for the Crank-Nicolson solver.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::solver1d::GaussianSpec;
use crate::spectral::MomentumSpectrum;
use crate::units::UnitSystem;

/// Default RK4 step inside the pulse window (0.1 fs).
pub const DEFAULT_LADDER_DT: f64 = 1e-4;

/// Norm drift across the pulse beyond which the integration is rejected.
pub const LADDER_NORM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct LadderState {
    k: Vec<f64>,
    phi: Vec<Complex64>,
    dk: f64,
    t: f64,
}

impl LadderState {
    /// State on the ascending uniform grid `k`; `phi` holds interaction-picture amplitudes.
    pub fn new(k: Vec<f64>, phi: Vec<Complex64>, t: f64) -> Result<Self> {
        if k.len() != phi.len() || k.len() < 2 {
            return Err(Error::Internal("ladder grid and amplitudes differ in length".into()));
        }
        let dk = (k[k.len() - 1] - k[0]) / (k.len() - 1) as f64;
        if !(dk > 0.0) || k.windows(2).any(|w| ((w[1] - w[0]) / dk - 1.0).abs() > 1e-9) {
            return Err(Error::Internal("ladder grid must be ascending and uniform".into()));
        }
        Ok(Self { k, phi, dk, t })
    }

    /// Analytic momentum amplitude of the Gaussian packet sampled on
    /// `k_in + j·dk` for `|j·dk| ≤ half_span`, renormalized on that grid.
    pub fn gaussian(spec: &GaussianSpec, dk: f64, half_span: f64) -> Result<Self> {
        if !(dk > 0.0) || !(half_span > dk) {
            return Err(Error::config("validate.ladder_dk", "need 0 < dk < half_span"));
        }
        let j_max = (half_span / dk).ceil() as i64;
        let s = spec.sigma;
        let prefactor = ((2.0 * std::f64::consts::PI).sqrt() * s).powf(-0.5) * 2f64.sqrt() * s;
        let mut k = Vec::with_capacity((2 * j_max + 1) as usize);
        let mut phi = Vec::with_capacity(k.capacity());
        for j in -j_max..=j_max {
            let q = j as f64 * dk;
            k.push(spec.k_in + q);
            phi.push(Complex64::from_polar(prefactor * (-s * s * q * q).exp(), -q * spec.x0));
        }
        let mut state = Self::new(k, phi, 0.0)?;
        let norm = state.norm_sqr().sqrt();
        state.phi.iter_mut().for_each(|p| *p /= norm);
        Ok(state)
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn phi(&self) -> &[Complex64] {
        &self.phi
    }

    pub fn dk(&self) -> f64 {
        self.dk
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn norm_sqr(&self) -> f64 {
        self.phi.iter().map(|p| p.norm_sqr()).sum::<f64>() * self.dk
    }

    /// Schrödinger-picture amplitudes `φ(k,t)`.
    pub fn physical_amplitudes(&self, units: &UnitSystem) -> Vec<Complex64> {
        self.k
            .iter()
            .zip(&self.phi)
            .map(|(k, p)| p * Complex64::from_polar(1.0, -units.kinetic_energy(*k) * self.t / units.hbar))
            .collect()
    }

    /// `|φ|²`, identical in both pictures.
    pub fn spectrum(&self) -> MomentumSpectrum {
        MomentumSpectrum {
            k: self.k.clone(),
            density: self.phi.iter().map(|p| p.norm_sqr()).collect(),
            dk: self.dk,
        }
    }

    /// Grid offset of one momentum quantum `k0`.
    pub fn ladder_offset(&self, k0: f64) -> Result<usize> {
        let ratio = k0 / self.dk;
        let m = ratio.round();
        if m < 1.0 || (ratio - m).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::config(
                "pulse.k0_invnm",
                format!(
                    "k0 = {k0} nm⁻¹ is not an integer multiple of dk = {} nm⁻¹ (ratio {ratio:.6}); adjust grid.n or grid.extent_nm",
                    self.dk
                ),
            ));
        }
        Ok(m as usize)
    }
}

/// Coupling constants of the ladder for one pulse.
#[derive(Debug, Clone, Copy)]
struct Coupling {
    half_rate: f64,
    hbar_over_mass: f64,
    k0: f64,
    offset: usize,
}

impl Coupling {
    fn new(state: &LadderState, amplitude: f64, k0: f64, units: &UnitSystem) -> Result<Self> {
        Ok(Self {
            half_rate: amplitude / (2.0 * units.hbar),
            hbar_over_mass: units.hbar_over_mass(),
            k0,
            offset: state.ladder_offset(k0)?,
        })
    }

    fn rhs_into(&self, k: &[f64], phi: &[Complex64], t: f64, out: &mut [Complex64]) {
        let n = phi.len();
        let m = self.offset;
        let recoil = 0.5 * self.hbar_over_mass * self.k0 * self.k0;
        for i in 0..n {
            let drift = self.hbar_over_mass * k[i] * self.k0;
            let mut acc = Complex64::new(0.0, 0.0);
            if i >= m {
                acc -= Complex64::from_polar(self.half_rate, (drift - recoil) * t) * phi[i - m];
            }
            if i + m < n {
                acc += Complex64::from_polar(self.half_rate, -(drift + recoil) * t) * phi[i + m];
            }
            out[i] = acc;
        }
    }
}

/// Right-hand side of the ladder equation; couplings leaving the grid are dropped.
pub fn ladder_rhs(
    state: &LadderState,
    amplitude: f64,
    k0: f64,
    units: &UnitSystem,
) -> Result<Vec<Complex64>> {
    let c = Coupling::new(state, amplitude, k0, units)?;
    let mut out = vec![Complex64::new(0.0, 0.0); state.phi.len()];
    c.rhs_into(&state.k, &state.phi, state.t, &mut out);
    Ok(out)
}

/// Integrates the ladder across `[t_on, t_off]` with RK4. The state is
/// constant in the interaction picture outside the window, so an initial
/// state at any `t ≤ t_on` is carried to `t_on` unchanged.
pub fn evolve_ladder(
    initial: &LadderState,
    amplitude: f64,
    k0: f64,
    t_on: f64,
    t_off: f64,
    dt: f64,
    units: &UnitSystem,
) -> Result<LadderState> {
    if initial.t > t_on + 1e-12 {
        return Err(Error::config("pulse.t_on_ps", "ladder state starts after the pulse"));
    }
    if !(t_off >= t_on) {
        return Err(Error::config("pulse.duration_ps", "must be non-negative"));
    }
    if !(dt > 0.0) {
        return Err(Error::config("validate.ladder_dt_ps", "must be positive"));
    }
    let c = Coupling::new(initial, amplitude, k0, units)?;
    let mut state = initial.clone();
    let steps = ((t_off - t_on) / dt).ceil() as usize;
    if steps == 0 {
        state.t = t_off;
        return Ok(state);
    }
    let h = (t_off - t_on) / steps as f64;
    let n = state.phi.len();
    let zero = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut tmp = vec![zero; n];
    let norm0 = state.norm_sqr();
    for s in 0..steps {
        let t = t_on + s as f64 * h;
        let phi = &state.phi;
        c.rhs_into(&state.k, phi, t, &mut k1);
        for i in 0..n {
            tmp[i] = phi[i] + 0.5 * h * k1[i];
        }
        c.rhs_into(&state.k, &tmp, t + 0.5 * h, &mut k2);
        for i in 0..n {
            tmp[i] = phi[i] + 0.5 * h * k2[i];
        }
        c.rhs_into(&state.k, &tmp, t + 0.5 * h, &mut k3);
        for i in 0..n {
            tmp[i] = phi[i] + h * k3[i];
        }
        c.rhs_into(&state.k, &tmp, t + h, &mut k4);
        for i in 0..n {
            state.phi[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    state.t = t_off;
    let drift = (state.norm_sqr() - norm0).abs() / norm0;
    if drift > LADDER_NORM_TOLERANCE {
        return Err(Error::Tolerance(format!(
            "ladder norm drifted by {drift:.3e} across the pulse; reduce validate.ladder_dt_ps"
        )));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::band_weights;

    const K0: f64 = 0.46;

    fn packet() -> GaussianSpec {
        GaussianSpec { x0: -100.0, sigma: 10.0, k_in: 0.205 }
    }

    fn state() -> LadderState {
        LadderState::gaussian(&packet(), K0 / 64.0, 4.0 * K0).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero_rhs() {
        let r = ladder_rhs(&state(), 0.0, K0, &UnitSystem::default()).unwrap();
        assert!(r.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn point_source_couples_to_neighbours_only() {
        let s0 = state();
        let n = s0.k().len();
        let centre = n / 2;
        let mut phi = vec![Complex64::new(0.0, 0.0); n];
        phi[centre] = Complex64::new(0.3, -0.4);
        let s = LadderState::new(s0.k().to_vec(), phi, 1.03).unwrap();
        let u = UnitSystem::default();
        let r = ladder_rhs(&s, 6.11, K0, &u).unwrap();
        for (i, v) in r.iter().enumerate() {
            if i == centre - 64 || i == centre + 64 {
                assert!((v.norm() - 6.11 / (2.0 * u.hbar) * 0.5).abs() < 1e-12);
            } else {
                assert_eq!(v.norm(), 0.0);
            }
        }
    }

    #[test]
    fn incommensurate_k0_is_rejected() {
        let s = LadderState::gaussian(&packet(), 0.005236, 2.0).unwrap();
        let err = ladder_rhs(&s, 6.11, K0, &UnitSystem::default()).unwrap_err();
        assert!(err.to_string().contains("not an integer multiple"));
    }

    #[test]
    fn empty_window_is_identity() {
        let s = state();
        let out = evolve_ladder(&s, 6.11, K0, 1.0, 1.0, DEFAULT_LADDER_DT, &UnitSystem::default()).unwrap();
        assert_eq!(out.phi(), s.phi());
    }

    #[test]
    fn gaussian_initial_width() {
        let sp = state().spectrum();
        assert!((sp.total() - 1.0).abs() < 1e-12);
        assert!((sp.std_k() - 0.05).abs() < 1e-6);
    }

    #[test]
    fn pulse_splits_into_three_bands() {
        let u = UnitSystem::default();
        let out = evolve_ladder(&state(), 6.11, K0, 1.0, 1.1, DEFAULT_LADDER_DT, &u).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-6);
        let bw = band_weights(&out.spectrum(), 0.205, K0, 2).unwrap();
        assert!(bw.get(-1) > bw.get(1));
        assert!(bw.get(-2) < 0.02 && bw.get(2) < 0.02);
        assert!(bw.get(0) > 0.01 && bw.get(0) < 0.98);
        assert!(bw.get(-1) > 0.01 && bw.get(-1) < 0.98);
    }

    #[test]
    fn step_halving_agrees() {
        let u = UnitSystem::default();
        let a = evolve_ladder(&state(), 6.11, K0, 1.0, 1.2, DEFAULT_LADDER_DT, &u).unwrap();
        let b = evolve_ladder(&state(), 6.11, K0, 1.0, 1.2, DEFAULT_LADDER_DT / 2.0, &u).unwrap();
        let diff: f64 = a.phi().iter().zip(b.phi()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * a.dk();
        assert!(diff.sqrt() < 1e-8);
    }

    /// First-order amplitude: `(A/2ħ) |∫ e^{iΩt} dt|` over the window,
    /// with `|∫| = 2|sin(ΩΔτ/2)/Ω|`.
    fn born_band_weight(init: &LadderState, amplitude: f64, dtau: f64, sign: f64, u: &UnitSystem) -> f64 {
        let rate = amplitude / (2.0 * u.hbar);
        let hm = u.hbar_over_mass();
        init.k()
            .iter()
            .zip(init.phi())
            .map(|(k, p)| {
                // Target momentum k' = k ± k0; Ω = ħ(k'² − k²)/2m.
                let kp = k + sign * K0;
                let omega = 0.5 * hm * (kp * kp - k * k);
                let integral = if omega.abs() < 1e-12 { dtau } else { 2.0 * (0.5 * omega * dtau).sin().abs() / omega.abs() };
                (rate * integral).powi(2) * p.norm_sqr()
            })
            .sum::<f64>()
            * init.dk()
    }

    #[test]
    fn weak_pulse_matches_first_order() {
        let u = UnitSystem::default();
        // A wide packet keeps the initial band-0 tail out of the side bands.
        let wide = GaussianSpec { sigma: 30.0, ..packet() };
        let init = LadderState::gaussian(&wide, K0 / 64.0, 4.0 * K0).unwrap();
        let out = evolve_ladder(&init, 0.1, K0, 1.0, 1.1, DEFAULT_LADDER_DT, &u).unwrap();
        let bw = band_weights(&out.spectrum(), 0.205, K0, 2).unwrap();
        for sign in [-1.0, 1.0] {
            let m = sign as i32;
            let oracle = born_band_weight(&init, 0.1, 0.1, sign, &u);
            let ratio = bw.get(m) / bw.get(0);
            assert!((ratio / oracle - 1.0).abs() < 0.05, "band {m}: {ratio} vs {oracle}");
        }
    }
}
