//! Single-particle Crank-Nicolson propagation with hard walls.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetic::{KineticOperator, Stencil};
use crate::potentials::PulsedSinePotential;
use crate::spectral;
use crate::tridiag;
use crate::units::{Grid1D, UnitSystem};

/// Norm drift allowed before a run is aborted.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Minimum-uncertainty packet parameters: center, position spread and
/// carrier wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianSpec {
    pub x0: f64,
    pub sigma: f64,
    pub k_in: f64,
}

impl GaussianSpec {
    /// The packet must sit more than 6σ away from both walls.
    pub fn validate(&self, grid: &Grid1D, field: &str) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config(
                format!("{field}.sigma_nm"),
                format!("must be positive, got {}", self.sigma),
            ));
        }
        let left = self.x0 - grid.x0_edge();
        let right = grid.x_max() - self.x0;
        let margin = 6.0 * self.sigma;
        if left <= margin || right <= margin {
            return Err(Error::config(
                format!("{field}.x0_nm"),
                format!(
                    "packet at {} nm is within 6σ = {margin} nm of a wall of [{}, {}] nm",
                    self.x0,
                    grid.x0_edge(),
                    grid.x_max()
                ),
            ));
        }
        Ok(())
    }

    /// Unnormalized continuum amplitude at `x`.
    pub fn amplitude(&self, x: f64) -> Complex64 {
        let s = self.sigma;
        let prefactor = ((2.0 * std::f64::consts::PI).sqrt() * s).powf(-0.5);
        let u = x - self.x0;
        Complex64::from_polar(prefactor * (-u * u / (4.0 * s * s)).exp(), self.k_in * x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction1D {
    grid: Grid1D,
    amplitudes: Vec<Complex64>,
    t: f64,
}

impl WaveFunction1D {
    pub fn from_parts(grid: Grid1D, amplitudes: Vec<Complex64>, t: f64) -> Result<Self> {
        if amplitudes.len() != grid.n() {
            return Err(Error::Internal(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, amplitudes, t })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    /// `Σ |ψ_i|² dx`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn mean_x(&self) -> f64 {
        let g = &self.grid;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| g.x(i) * a.norm_sqr())
            .sum::<f64>()
            * g.dx()
            / self.norm_sqr()
    }

    pub fn std_x(&self) -> f64 {
        let g = &self.grid;
        let mean = self.mean_x();
        let var = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| (g.x(i) - mean).powi(2) * a.norm_sqr())
            .sum::<f64>()
            * g.dx()
            / self.norm_sqr();
        var.sqrt()
    }

    /// Probability within `cells` grid points of either wall.
    pub fn boundary_probability(&self, cells: usize) -> f64 {
        let n = self.amplitudes.len();
        let cells = cells.min(n / 2);
        let edge = |r: std::ops::Range<usize>| -> f64 {
            self.amplitudes[r].iter().map(|a| a.norm_sqr()).sum::<f64>()
        };
        (edge(0..cells) + edge(n - cells..n)) * self.grid.dx()
    }

    /// L² distance `sqrt(Σ |ψ − φ|² dx)` between two states on the same grid.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            * self.grid.dx().sqrt()
    }
}

/// Samples the Gaussian packet on `grid` and renormalizes on the grid.
pub fn init_gaussian(grid: &Grid1D, spec: &GaussianSpec) -> Result<WaveFunction1D> {
    spec.validate(grid, "packet")?;
    let mut amplitudes: Vec<Complex64> = grid.xs().map(|x| spec.amplitude(x)).collect();
    let norm = (amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dx()).sqrt();
    amplitudes.iter_mut().for_each(|a| *a /= norm);
    WaveFunction1D::from_parts(*grid, amplitudes, 0.0)
}

/// Work buffers for repeated Crank-Nicolson steps on one grid.
#[derive(Debug, Clone)]
pub struct Propagator1D {
    units: UnitSystem,
    stencil: Stencil,
    potential: Vec<f64>,
    lower: Vec<Complex64>,
    diag: Vec<Complex64>,
    upper: Vec<Complex64>,
    rhs: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Propagator1D {
    /// Second-order central differences.
    pub fn new(grid: &Grid1D, units: UnitSystem) -> Self {
        Self::with_stencil(grid, units, Stencil::Central)
    }

    pub fn with_stencil(grid: &Grid1D, units: UnitSystem, stencil: Stencil) -> Self {
        let n = grid.n();
        let zero = Complex64::new(0.0, 0.0);
        Self {
            units,
            stencil,
            potential: vec![0.0; n],
            lower: vec![zero; n],
            diag: vec![zero; n],
            upper: vec![zero; n],
            rhs: vec![zero; n],
            scratch: vec![zero; n],
        }
    }

    /// One step `(1 + iβH) ψ' = (1 − iβH) ψ`, `β = dt/2ħ`, with the
    /// potential sampled at `t + dt/2`. A negative `dt` steps backwards.
    ///
    /// With `H = M⁻¹K + V` both sides are multiplied by `M`, which keeps the
    /// system tridiagonal: `M + iβ(K + MV)`.
    pub fn step<V>(&mut self, psi: &mut WaveFunction1D, dt: f64, potential_at: V) -> Result<()>
    where
        V: Fn(f64, f64) -> f64,
    {
        let grid = psi.grid;
        let n = grid.n();
        let t_mid = psi.t + 0.5 * dt;
        for (i, v) in self.potential.iter_mut().enumerate() {
            *v = potential_at(grid.x(i), t_mid);
        }
        let beta = dt / (2.0 * self.units.hbar);
        let hop = self.units.kinetic_coeff / (grid.dx() * grid.dx());
        let (m0, m1) = self.stencil.mass();
        let v = &self.potential;
        let psi_amp = &psi.amplitudes;
        let zero = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let h_diag = 2.0 * hop + m0 * v[i];
            let h_lo = if i > 0 { -hop + m1 * v[i - 1] } else { 0.0 };
            let h_up = if i + 1 < n { -hop + m1 * v[i + 1] } else { 0.0 };
            self.diag[i] = Complex64::new(m0, beta * h_diag);
            self.lower[i] = Complex64::new(m1, beta * h_lo);
            self.upper[i] = Complex64::new(m1, beta * h_up);
            let left = if i > 0 { psi_amp[i - 1] } else { zero };
            let right = if i + 1 < n { psi_amp[i + 1] } else { zero };
            self.rhs[i] = Complex64::new(m0, -beta * h_diag) * psi_amp[i]
                + Complex64::new(m1, -beta * h_lo) * left
                + Complex64::new(m1, -beta * h_up) * right;
        }
        tridiag::solve_general(&self.lower, &self.diag, &self.upper, &mut self.rhs, &mut self.scratch)?;
        psi.amplitudes.copy_from_slice(&self.rhs);
        psi.t += dt;
        Ok(())
    }
}

/// Convenience single step with fresh work buffers.
pub fn cn_step<V>(psi: &WaveFunction1D, dt: f64, units: UnitSystem, potential_at: V) -> Result<WaveFunction1D>
where
    V: Fn(f64, f64) -> f64,
{
    let mut out = psi.clone();
    Propagator1D::new(psi.grid(), units).step(&mut out, dt, potential_at)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables1D {
    pub t: f64,
    pub norm: f64,
    pub mean_x: f64,
    pub mean_k: f64,
    pub energy: f64,
}

/// `⟨H⟩` with the same discrete Hamiltonian the propagator uses.
pub fn energy_1d(
    psi: &WaveFunction1D,
    units: &UnitSystem,
    stencil: Stencil,
    potential: impl Fn(f64) -> f64,
) -> f64 {
    let g = psi.grid();
    let a = psi.amplitudes();
    let hop = units.kinetic_coeff / (g.dx() * g.dx());
    let op = KineticOperator::new(a.len(), hop, stencil).expect("mass matrix is diagonally dominant");
    let mut scratch = vec![Complex64::new(0.0, 0.0); a.len()];
    let kinetic = op.expectation(a, &mut scratch);
    let pot: f64 = a.iter().enumerate().map(|(i, c)| c.norm_sqr() * potential(g.x(i))).sum();
    (kinetic + pot) * g.dx() / psi.norm_sqr()
}

pub fn observables_1d(
    psi: &WaveFunction1D,
    units: &UnitSystem,
    stencil: Stencil,
    potential: impl Fn(f64) -> f64,
) -> Observables1D {
    Observables1D {
        t: psi.t(),
        norm: psi.norm_sqr(),
        mean_x: psi.mean_x(),
        mean_k: spectral::to_momentum(psi).mean_k(),
        energy: energy_1d(psi, units, stencil, potential),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Run1DSettings {
    pub packet: GaussianSpec,
    pub pulse: PulsedSinePotential,
    pub t_final: f64,
    pub dt: f64,
    pub snapshot_times: Vec<f64>,
    /// Spacing of the observable series.
    pub record_interval: f64,
    pub stencil: Stencil,
}

#[derive(Debug, Clone)]
pub struct Run1DRecord {
    /// Pulse with its switching times aligned to the time grid.
    pub pulse: PulsedSinePotential,
    pub series: Vec<Observables1D>,
    pub snapshots: Vec<WaveFunction1D>,
    pub final_state: WaveFunction1D,
    /// Largest wall-adjacent probability (5 cells) seen at recorded times.
    pub max_boundary_probability: f64,
}

pub(crate) fn step_count(duration: f64, dt: f64, field: &str) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config("time.dt_ps", format!("must be positive, got {dt}")));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::config(field, format!("must be non-negative, got {duration}")));
    }
    Ok((duration / dt).round() as usize)
}

pub(crate) fn snapshot_steps(times: &[f64], dt: f64, n_steps: usize) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let s = step_count(t, dt, "time.snapshot_times_ps")?;
            if s > n_steps {
                return Err(Error::config(
                    "time.snapshot_times_ps",
                    format!("snapshot at {t} ps lies beyond t_final"),
                ));
            }
            Ok(s)
        })
        .collect()
}

pub(crate) fn check_norm(norm: f64, t: f64) -> Result<()> {
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Tolerance(format!(
            "norm drifted to {norm:.12} at t = {t:.6} ps"
        )));
    }
    Ok(())
}

/// Propagates a Gaussian packet from t = 0 to `t_final` through the pulse.
pub fn evolve_1d(grid: &Grid1D, units: UnitSystem, settings: &Run1DSettings) -> Result<Run1DRecord> {
    if !(settings.t_final > 0.0) {
        return Err(Error::config("time.t_final_ps", "must be positive"));
    }
    let dt = settings.dt;
    let n_steps = step_count(settings.t_final, dt, "time.t_final_ps")?;
    let record_every = step_count(settings.record_interval, dt, "time.analysis_interval_ps")?.max(1);
    let snaps = snapshot_steps(&settings.snapshot_times, dt, n_steps)?;
    let pulse = settings.pulse.aligned_to(dt);

    let mut psi = init_gaussian(grid, &settings.packet)?;
    let mut prop = Propagator1D::with_stencil(grid, units, settings.stencil);
    let mut series = Vec::new();
    let mut snapshots = Vec::new();
    let mut max_boundary: f64 = 0.0;
    let potential = |x: f64, t: f64| pulse.value(x, t);

    let mut record = |psi: &WaveFunction1D, step: usize, series: &mut Vec<Observables1D>| {
        if step % record_every == 0 || step == n_steps {
            let t = psi.t();
            series.push(observables_1d(psi, &units, settings.stencil, |x| potential(x, t)));
            max_boundary = max_boundary.max(psi.boundary_probability(5));
        }
    };

    for step in 0..=n_steps {
        if step > 0 {
            prop.step(&mut psi, dt, potential)?;
            psi.set_t(step as f64 * dt);
            if cfg!(debug_assertions) || step % 100 == 0 {
                check_norm(psi.norm_sqr(), psi.t())?;
            }
        }
        record(&psi, step, &mut series);
        for _ in snaps.iter().filter(|&&s| s == step) {
            snapshots.push(psi.clone());
        }
    }
    check_norm(psi.norm_sqr(), psi.t())?;
    Ok(Run1DRecord {
        pulse,
        series,
        snapshots,
        final_state: psi,
        max_boundary_probability: max_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::make_grid;

    fn grid() -> Grid1D {
        make_grid(2048, 1200.0 / 2048.0, 0.0).unwrap()
    }

    fn free(_: f64, _: f64) -> f64 {
        0.0
    }

    #[test]
    fn initial_state_moments() {
        let spec = GaussianSpec { x0: -100.0, sigma: 10.0, k_in: 0.205 };
        let psi = init_gaussian(&grid(), &spec).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((psi.mean_x() + 100.0).abs() < 0.01);
        let s = spectral::to_momentum(&psi);
        assert!((s.mean_k() - 0.205).abs() < 0.001);
        assert!((s.std_k() - 0.05).abs() < 0.001);
    }

    #[test]
    fn packet_near_wall_is_rejected() {
        let spec = GaussianSpec { x0: 560.0, sigma: 10.0, k_in: 0.0 };
        let err = init_gaussian(&grid(), &spec).unwrap_err();
        assert!(err.to_string().contains("packet.x0_nm"));
    }

    #[test]
    fn centered_packet_stays_centered() {
        let g = grid();
        // Grid center is at index n/2 (x = 0); the mirror of index i is n − i.
        let spec = GaussianSpec { x0: 0.0, sigma: 10.0, k_in: 0.0 };
        let psi = init_gaussian(&g, &spec).unwrap();
        let next = cn_step(&psi, 2.5e-4, UnitSystem::default(), free).unwrap();
        assert!((next.mean_x() - psi.mean_x()).abs() < 1e-9);
        assert!((next.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_potential_is_a_global_phase() {
        let g = grid();
        let u = UnitSystem::default();
        let spec = GaussianSpec { x0: -50.0, sigma: 10.0, k_in: 0.205 };
        let mut a = init_gaussian(&g, &spec).unwrap();
        let mut b = a.clone();
        let mut pa = Propagator1D::new(&g, u);
        let mut pb = Propagator1D::new(&g, u);
        for _ in 0..400 {
            pa.step(&mut a, 2.5e-4, free).unwrap();
            pb.step(&mut b, 2.5e-4, |_, _| 3.7).unwrap();
        }
        // CN maps E to a Cayley phase that is not exactly linear in E, so
        // the shift is a global phase only up to O(dt³) per step.
        let peak = a.density().iter().cloned().fold(0.0, f64::max);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-6 * peak);
        }
    }

    #[test]
    fn energy_of_moving_gaussian() {
        let u = UnitSystem::default();
        let spec = GaussianSpec { x0: -100.0, sigma: 10.0, k_in: 0.290 };
        let psi = init_gaussian(&grid(), &spec).unwrap();
        let obs = observables_1d(&psi, &u, Stencil::Central, |_| 0.0);
        // κk² + κ/(4σ²)
        let expected = u.kinetic_coeff * (0.290f64.powi(2) + 1.0 / 400.0);
        assert!((obs.energy - 10.3).abs() < 0.1, "{}", obs.energy);
        assert!((obs.energy - expected).abs() < 0.1);
        assert!((obs.norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_packet_negates_mean_k() {
        let g = grid();
        let a = init_gaussian(&g, &GaussianSpec { x0: -100.0, sigma: 10.0, k_in: 0.205 }).unwrap();
        let mut mirrored = vec![Complex64::new(0.0, 0.0); g.n()];
        for i in 0..g.n() {
            mirrored[g.mirror_index(i)] = a.amplitudes()[i];
        }
        let b = WaveFunction1D::from_parts(g, mirrored, 0.0).unwrap();
        let ka = spectral::to_momentum(&a).mean_k();
        let kb = spectral::to_momentum(&b).mean_k();
        assert!((ka + kb).abs() < 1e-9, "{ka} {kb}");
    }

    #[test]
    fn null_pulse_equals_free_run() {
        let g = grid();
        let u = UnitSystem::default();
        let packet = GaussianSpec { x0: -100.0, sigma: 10.0, k_in: 0.205 };
        let settings = Run1DSettings {
            packet,
            pulse: PulsedSinePotential::new(0.0, 0.46, 0.1, 0.2).unwrap(),
            t_final: 0.3,
            dt: 2.5e-4,
            snapshot_times: vec![],
            record_interval: 0.1,
            stencil: Stencil::Central,
        };
        let rec = evolve_1d(&g, u, &settings).unwrap();
        let mut free_psi = init_gaussian(&g, &packet).unwrap();
        let mut prop = Propagator1D::new(&g, u);
        for _ in 0..1200 {
            prop.step(&mut free_psi, 2.5e-4, free).unwrap();
        }
        assert!(rec.final_state.l2_distance(&free_psi) < 1e-10);
        assert_eq!(rec.series.len(), 4);
    }

    #[test]
    fn snapshot_beyond_end_is_rejected() {
        let settings = Run1DSettings {
            packet: GaussianSpec { x0: -100.0, sigma: 10.0, k_in: 0.205 },
            pulse: PulsedSinePotential::off(0.46),
            t_final: 0.1,
            dt: 2.5e-4,
            snapshot_times: vec![0.2],
            record_interval: 0.1,
            stencil: Stencil::Central,
        };
        assert!(evolve_1d(&grid(), UnitSystem::default(), &settings).is_err());
    }

    #[test]
    fn free_spreading_matches_closed_form() {
        let g = grid();
        let u = UnitSystem::default();
        // At rest, so the finite-difference dispersion matches k² near the
        // packet's momentum.
        let spec = GaussianSpec { x0: 0.0, sigma: 10.0, k_in: 0.0 };
        let mut psi = init_gaussian(&g, &spec).unwrap();
        let mut p = Propagator1D::new(&g, u);
        for _ in 0..4000 {
            p.step(&mut psi, 2.5e-4, free).unwrap();
        }
        let tau = u.hbar_over_mass() * psi.t() / (2.0 * spec.sigma * spec.sigma);
        let expected = spec.sigma * (1.0 + tau * tau).sqrt();
        assert!((expected - 20.7).abs() < 0.1, "{expected}");
        assert!((psi.std_x() / expected - 1.0).abs() < 5e-3, "{} vs {expected}", psi.std_x());
    }

    #[test]
    fn compact_stencil_spreads_a_moving_packet_exactly() {
        // The central stencil misses this by about 0.6% at k·dx = 0.12.
        let g = grid();
        let u = UnitSystem::default();
        let spec = GaussianSpec { x0: -100.0, sigma: 10.0, k_in: 0.205 };
        let mut psi = init_gaussian(&g, &spec).unwrap();
        let mut p = Propagator1D::with_stencil(&g, u, Stencil::Compact);
        for _ in 0..4000 {
            p.step(&mut psi, 2.5e-4, free).unwrap();
        }
        let tau = u.hbar_over_mass() * psi.t() / (2.0 * spec.sigma * spec.sigma);
        let expected = spec.sigma * (1.0 + tau * tau).sqrt();
        assert!((psi.std_x() / expected - 1.0).abs() < 1e-3, "{} vs {expected}", psi.std_x());
        let x_expected = spec.x0 + u.hbar_over_mass() * spec.k_in * psi.t();
        assert!((psi.mean_x() - x_expected).abs() < 0.05, "{} vs {x_expected}", psi.mean_x());
    }

    #[test]
    fn compact_stencil_conserves_norm_and_energy_in_a_static_potential() {
        let g = grid();
        let u = UnitSystem::default();
        let pulse = PulsedSinePotential::new(6.11, 0.46, 0.0, 10.0).unwrap();
        let mut psi = init_gaussian(&g, &GaussianSpec { x0: -100.0, sigma: 10.0, k_in: 0.205 }).unwrap();
        let e0 = energy_1d(&psi, &u, Stencil::Compact, |x| pulse.value(x, 0.0));
        let mut p = Propagator1D::with_stencil(&g, u, Stencil::Compact);
        for _ in 0..2000 {
            p.step(&mut psi, 2.5e-4, |x, t| pulse.value(x, t)).unwrap();
        }
        let e1 = energy_1d(&psi, &u, Stencil::Compact, |x| pulse.value(x, 0.0));
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        assert!((e1 - e0).abs() < 1e-9 * e0.abs(), "{e0} {e1}");
    }

    #[test]
    fn norm_drift_over_ten_thousand_steps() {
        let g = grid();
        let u = UnitSystem::default();
        let pulse = PulsedSinePotential::new(6.11, 0.46, 0.5, 2.0).unwrap();
        let mut psi = init_gaussian(&g, &GaussianSpec { x0: -100.0, sigma: 10.0, k_in: 0.205 }).unwrap();
        let n0 = psi.norm_sqr();
        let mut p = Propagator1D::new(&g, u);
        for _ in 0..10_000 {
            p.step(&mut psi, 2.5e-4, |x, t| pulse.value(x, t)).unwrap();
        }
        assert!((psi.norm_sqr() / n0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn backward_steps_undo_forward_steps() {
        let g = grid();
        let u = UnitSystem::default();
        let pulse = PulsedSinePotential::new(6.11, 0.46, -1.0, 10.0).unwrap();
        let psi0 = init_gaussian(&g, &GaussianSpec { x0: -30.0, sigma: 10.0, k_in: 0.205 }).unwrap();
        let mut psi = psi0.clone();
        let mut p = Propagator1D::new(&g, u);
        for _ in 0..100 {
            p.step(&mut psi, 2.5e-4, |x, t| pulse.value(x, t)).unwrap();
        }
        for _ in 0..100 {
            p.step(&mut psi, -2.5e-4, |x, t| pulse.value(x, t)).unwrap();
        }
        assert!(psi.l2_distance(&psi0) < 1e-8);
        assert!(psi.t().abs() < 1e-12);
    }

    fn pulsed_run(g: &Grid1D, dt: f64) -> WaveFunction1D {
        let pulse = PulsedSinePotential::new(6.11, 0.46, 0.1, 0.2).unwrap();
        let mut psi = init_gaussian(g, &GaussianSpec { x0: -50.0, sigma: 10.0, k_in: 0.205 }).unwrap();
        let mut p = Propagator1D::new(g, UnitSystem::default());
        for _ in 0..(0.3 / dt).round() as usize {
            p.step(&mut psi, dt, |x, t| pulse.value(x, t)).unwrap();
        }
        psi
    }

    #[test]
    fn second_order_in_time() {
        let g = grid();
        let dt = 2e-3;
        let reference = pulsed_run(&g, dt / 8.0);
        let e1 = pulsed_run(&g, dt).l2_distance(&reference);
        let e2 = pulsed_run(&g, dt / 2.0).l2_distance(&reference);
        let ratio = e1 / e2;
        assert!((ratio / 4.0 - 1.0).abs() < 0.2, "error ratio {ratio}");
    }

    #[test]
    fn second_order_in_space() {
        let run = |n: usize| {
            let g = make_grid(n, 600.0 / n as f64, 0.0).unwrap();
            let mut psi = init_gaussian(&g, &GaussianSpec { x0: -50.0, sigma: 10.0, k_in: 0.3 }).unwrap();
            let mut p = Propagator1D::new(&g, UnitSystem::default());
            for _ in 0..1000 {
                p.step(&mut psi, 2e-4, free).unwrap();
            }
            psi
        };
        let (coarse, fine, reference) = (run(512), run(1024), run(4096));
        // Compare on the coarse points, which all three grids share.
        let err = |psi: &WaveFunction1D| {
            let stride = psi.grid().n() / 512;
            let r = reference.grid().n() / 512;
            (0..512)
                .map(|i| (psi.amplitudes()[i * stride] - reference.amplitudes()[i * r]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let ratio = err(&coarse) / err(&fine);
        assert!((ratio / 4.0 - 1.0).abs() < 0.2, "error ratio {ratio}");
    }
}
