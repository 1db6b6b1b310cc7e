//! Two-particle propagation: antisymmetric initial state, Strang-split
//! Crank-Nicolson steps and the analysis schedule.

use num_complex::Complex64;
use serde::Serialize;

use crate::entanglement::{self, PAIRING_TOLERANCE};
use crate::error::{Error, Result};
use crate::kinetic::{KineticOperator, Stencil};
use crate::parallel::Execution;
use crate::potentials::{CoulombParams, PulsedSinePotential};
use crate::solver1d::{check_norm, snapshot_steps, step_count, GaussianSpec};
use crate::spectral;
use crate::tridiag::ConstantTridiagonal;
use crate::units::{Grid2D, UnitSystem};

/// Overlap `|⟨ψ|φ⟩|` above which two packets are not considered distinct.
pub const MAX_PACKET_OVERLAP: f64 = 1e-6;

/// `Ψ(x_a, x_b)` stored row-major: index `a·n + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction2D {
    grid: Grid2D,
    amplitudes: Vec<Complex64>,
    t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Particle {
    A,
    B,
}

impl WaveFunction2D {
    pub fn from_parts(grid: Grid2D, amplitudes: Vec<Complex64>, t: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::Internal(format!(
                "{} amplitudes for a {}×{} grid",
                amplitudes.len(),
                grid.n(),
                grid.n()
            )));
        }
        Ok(Self { grid, amplitudes, t })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn at(&self, a: usize, b: usize) -> Complex64 {
        self.amplitudes[a * self.grid.n() + b]
    }

    pub fn norm_sqr(&self) -> f64 {
        let dx = self.grid.dx();
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx * dx
    }

    pub fn normalize(&mut self) {
        let s = self.norm_sqr().sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a /= s);
    }

    /// `max |Ψ(a,b) + Ψ(b,a)| / max |Ψ|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                worst = worst.max((self.at(a, b) + self.at(b, a)).norm());
                peak = peak.max(self.at(a, b).norm());
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            worst / peak
        }
    }

    /// Coordinates exchanged: `Ψ'(a, b) = Ψ(b, a)`.
    pub fn swapped(&self) -> Self {
        let n = self.grid.n();
        let mut out = self.clone();
        for a in 0..n {
            for b in 0..n {
                out.amplitudes[a * n + b] = self.amplitudes[b * n + a];
            }
        }
        out
    }

    /// Density of one particle, `∫|Ψ|² d(other)`, as a function of its
    /// coordinate. Normalized so `Σ density·dx = 1`.
    pub fn marginal_density(&self, which: Particle) -> Vec<f64> {
        let n = self.grid.n();
        let dx = self.grid.dx();
        let mut out = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                let w = self.amplitudes[a * n + b].norm_sqr() * dx;
                match which {
                    Particle::A => out[a] += w,
                    Particle::B => out[b] += w,
                }
            }
        }
        out
    }

    /// Densities of the left-most and right-most particle. For identical
    /// particles these replace the per-label marginals, which coincide.
    /// Each integrates to 1; diagonal points are split evenly.
    pub fn ordered_densities(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n();
        let dx = self.grid.dx();
        let norm = self.norm_sqr();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                let w = self.amplitudes[a * n + b].norm_sqr() * dx / norm;
                // Configuration (x_a, x_b) places one particle at each coordinate;
                // the pair (a,b) and (b,a) together carry weight 2w for ordered pairs.
                match a.cmp(&b) {
                    std::cmp::Ordering::Less => {
                        left[a] += 2.0 * w;
                    }
                    std::cmp::Ordering::Greater => {
                        right[a] += 2.0 * w;
                    }
                    std::cmp::Ordering::Equal => {
                        left[a] += w;
                        right[a] += w;
                    }
                }
            }
        }
        (left, right)
    }

    /// `⟨min(x_a, x_b)⟩` and `⟨max(x_a, x_b)⟩`.
    pub fn ordered_means(&self) -> (f64, f64) {
        let n = self.grid.n();
        let axis = self.grid.axis();
        let dx = self.grid.dx();
        let mut lo = 0.0;
        let mut hi = 0.0;
        for a in 0..n {
            for b in 0..n {
                let w = self.amplitudes[a * n + b].norm_sqr();
                let (xa, xb) = (axis.x(a), axis.x(b));
                lo += w * xa.min(xb);
                hi += w * xa.max(xb);
            }
        }
        let norm = self.norm_sqr() / (dx * dx);
        (lo / norm, hi / norm)
    }

    /// Probability that either particle is within `cells` grid points of a wall.
    pub fn boundary_probability(&self, cells: usize) -> f64 {
        let n = self.grid.n();
        let cells = cells.min(n / 2);
        let near = |i: usize| i < cells || i >= n - cells;
        let dx = self.grid.dx();
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                if near(a) || near(b) {
                    acc += self.amplitudes[a * n + b].norm_sqr();
                }
            }
        }
        acc * dx * dx
    }

    /// One-body `⟨x⟩`, the mean of the particle-a marginal.
    pub fn mean_x(&self) -> f64 {
        let axis = self.grid.axis();
        self.marginal_density(Particle::A)
            .iter()
            .enumerate()
            .map(|(i, d)| axis.x(i) * d)
            .sum::<f64>()
            * axis.dx()
            / self.norm_sqr()
    }

    /// One-body `⟨k⟩` of particle a, from row-wise Fourier transforms over b
    /// followed by the transform over a.
    pub fn mean_k(&self) -> f64 {
        let n = self.grid.n();
        let axis = *self.grid.axis();
        // ⟨k_a⟩ = Σ_b ∫ k |φ̂_b(k)|² dk where φ̂_b is the transform of column b.
        let mut acc = 0.0;
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for b in 0..n {
            for a in 0..n {
                column[a] = self.amplitudes[a * n + b];
            }
            let s = spectral::spectrum_of(&axis, &column);
            acc += s.k.iter().zip(&s.density).map(|(k, d)| k * d).sum::<f64>() * s.dk;
        }
        acc * axis.dx() / self.norm_sqr()
    }
}

fn normalized_orbital(grid: &Grid2D, spec: &GaussianSpec) -> Vec<Complex64> {
    let axis = grid.axis();
    let mut v: Vec<Complex64> = axis.xs().map(|x| spec.amplitude(x)).collect();
    let norm = (v.iter().map(|a| a.norm_sqr()).sum::<f64>() * axis.dx()).sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    v
}

/// `⟨V_c⟩` for a two-particle state.
pub fn coulomb_energy(psi: &WaveFunction2D, coulomb: &CoulombParams) -> f64 {
    let n = psi.grid().n();
    let axis = psi.grid().axis();
    let dx = axis.dx();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += psi.amplitudes()[a * n + b].norm_sqr() * coulomb.value(axis.x(a), axis.x(b));
        }
    }
    acc * dx * dx / psi.norm_sqr()
}

/// Antisymmetrized product `(ψ(x_a)φ(x_b) − φ(x_a)ψ(x_b))/√2` of two
/// Gaussian packets, renormalized on the grid.
///
/// Rejects packets that overlap by more than [`MAX_PACKET_OVERLAP`] and
/// configurations whose initial Coulomb energy exceeds
/// `max_coulomb_fraction` times the mean packet kinetic energy.
pub fn init_slater(
    grid: &Grid2D,
    left: &GaussianSpec,
    right: &GaussianSpec,
    coulomb: &CoulombParams,
    units: &UnitSystem,
    max_coulomb_fraction: f64,
) -> Result<WaveFunction2D> {
    left.validate(grid.axis(), "pair.left")?;
    right.validate(grid.axis(), "pair.right")?;
    let u = normalized_orbital(grid, left);
    let v = normalized_orbital(grid, right);
    let overlap = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<Complex64>() * grid.dx();
    if overlap.norm() >= MAX_PACKET_OVERLAP {
        return Err(Error::config(
            "pair.separation_nm",
            format!("packets overlap: |⟨ψ|φ⟩| = {:.3e}", overlap.norm()),
        ));
    }
    let n = grid.n();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n * n];
    for a in 0..n {
        for b in 0..n {
            amplitudes[a * n + b] = (u[a] * v[b] - v[a] * u[b]) * s;
        }
    }
    let mut psi = WaveFunction2D::from_parts(*grid, amplitudes, 0.0)?;
    psi.normalize();
    let kinetic = 0.5 * (units.kinetic_energy(left.k_in) + units.kinetic_energy(right.k_in));
    let vc = coulomb_energy(&psi, coulomb);
    if vc >= max_coulomb_fraction * kinetic {
        return Err(Error::config(
            "pair.separation_nm",
            format!(
                "initial Coulomb energy {vc:.4} meV is not below {max_coulomb_fraction} × E_k = {:.4} meV",
                max_coulomb_fraction * kinetic
            ),
        ));
    }
    Ok(psi)
}

/// Strang-split propagator for a fixed grid, time step and interaction.
///
/// One step is `P(dt/2) · K_a · K_b · P(dt/2)` where `P` is the exact
/// pointwise phase of the total potential at the step midpoint and `K_*`
/// are Crank-Nicolson kinetic steps along one axis.
pub struct Propagator2D {
    n: usize,
    dt: f64,
    exec: Execution,
    kinetic: ConstantTridiagonal,
    rhs_diag: Complex64,
    rhs_off: Complex64,
    phase_off: Vec<Complex64>,
    phase_on: Vec<Complex64>,
    pulse: PulsedSinePotential,
}

impl Propagator2D {
    pub fn new(
        grid: &Grid2D,
        units: UnitSystem,
        stencil: Stencil,
        dt: f64,
        pulse: PulsedSinePotential,
        coulomb: CoulombParams,
        exec: Execution,
    ) -> Result<Self> {
        let n = grid.n();
        let axis = *grid.axis();
        let beta = dt / (2.0 * units.hbar);
        let hop = units.kinetic_coeff / (axis.dx() * axis.dx());
        // (M + iβK) on the left, (M − iβK) on the right.
        let (m0, m1) = stencil.mass();
        let kinetic = ConstantTridiagonal::new(
            n,
            Complex64::new(m0, 2.0 * beta * hop),
            Complex64::new(m1, -beta * hop),
        )?;
        let half = dt / (2.0 * units.hbar);
        let xs: Vec<f64> = axis.xs().collect();
        let profile: Vec<f64> = xs.iter().map(|&x| pulse.profile(x)).collect();
        let mut phase_off = vec![Complex64::new(0.0, 0.0); n * n];
        let mut phase_on = vec![Complex64::new(0.0, 0.0); n * n];
        exec.for_each_row(&mut phase_off, n, |a, row| {
            for (b, p) in row.iter_mut().enumerate() {
                *p = Complex64::from_polar(1.0, -coulomb.value(xs[a], xs[b]) * half);
            }
        });
        exec.for_each_row(&mut phase_on, n, |a, row| {
            for (b, p) in row.iter_mut().enumerate() {
                let v = coulomb.value(xs[a], xs[b]) + profile[a] + profile[b];
                *p = Complex64::from_polar(1.0, -v * half);
            }
        });
        Ok(Self {
            n,
            dt,
            exec,
            kinetic,
            rhs_diag: Complex64::new(m0, -2.0 * beta * hop),
            rhs_off: Complex64::new(m1, beta * hop),
            phase_off,
            phase_on,
            pulse,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances by one step; the pulse state is evaluated at `t + dt/2`.
    pub fn step(&mut self, psi: &mut WaveFunction2D) {
        debug_assert_eq!(psi.grid.n(), self.n);
        let n = self.n;
        let phase = if self.pulse.is_on(psi.t + 0.5 * self.dt) {
            &self.phase_on
        } else {
            &self.phase_off
        };
        let kinetic = &self.kinetic;
        let (d, o) = (self.rhs_diag, self.rhs_off);

        // Half potential, then kinetic along b (contiguous rows).
        self.exec.for_each_row(&mut psi.amplitudes, n, |a, row| {
            let ph = &phase[a * n..(a + 1) * n];
            row.iter_mut().zip(ph).for_each(|(v, p)| *v *= p);
            cn_line(row, kinetic, d, o);
        });

        // Kinetic along a on column blocks, finishing each row with the
        // second half potential.
        let width = COLUMN_BLOCK.min(n);
        let mut blocks: Vec<Vec<&mut [Complex64]>> = (0..n.div_ceil(width)).map(|_| Vec::with_capacity(n)).collect();
        for row in psi.amplitudes.chunks_mut(n) {
            for (j, part) in row.chunks_mut(width).enumerate() {
                blocks[j].push(part);
            }
        }
        self.exec.for_each_owned(blocks, |j, mut rows| {
            cn_columns(&mut rows, kinetic, d, o, |a, b, v| *v *= phase[a * n + j * width + b]);
        });
        psi.t += self.dt;
    }
}

/// Columns per work item in the cross-row sweep.
const COLUMN_BLOCK: usize = 64;

/// In-place `(M + iβK)⁻¹ (M − iβK)` along one contiguous line.
fn cn_line(row: &mut [Complex64], k: &ConstantTridiagonal, d: Complex64, o: Complex64) {
    let n = row.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut prev = zero;
    for i in 0..n {
        let cur = row[i];
        let next = if i + 1 < n { row[i + 1] } else { zero };
        let mut r = d * cur + o * (prev + next);
        if i > 0 {
            r -= k.lower(i) * row[i - 1];
        }
        row[i] = r;
        prev = cur;
    }
    row[n - 1] *= k.inv_pivot(n - 1);
    for i in (0..n - 1).rev() {
        row[i] = (row[i] - k.off() * row[i + 1]) * k.inv_pivot(i);
    }
}

/// The same operator applied down the columns of `rows`, vectorized across
/// the row width. `finish(a, b, v)` is applied to each row once it is final.
fn cn_columns<F>(rows: &mut [&mut [Complex64]], k: &ConstantTridiagonal, d: Complex64, o: Complex64, finish: F)
where
    F: Fn(usize, usize, &mut Complex64),
{
    let n = rows.len();
    let w = rows[0].len();
    let zero = Complex64::new(0.0, 0.0);
    let mut prev = vec![zero; w];
    let mut cur = vec![zero; w];
    for a in 0..n {
        let (done, rest) = rows.split_at_mut(a);
        let (row, below) = rest.split_first_mut().unwrap();
        cur.copy_from_slice(row);
        let next = below.first().map(|r| &**r);
        let l = k.lower(a);
        for b in 0..w {
            let nb = next.map_or(zero, |r| r[b]);
            let mut r = d * cur[b] + o * (prev[b] + nb);
            if a > 0 {
                r -= l * done[a - 1][b];
            }
            row[b] = r;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let ip = k.inv_pivot(n - 1);
    rows[n - 1].iter_mut().for_each(|v| *v *= ip);
    // Row a+1 is finished only after row a has used it.
    for a in (0..n - 1).rev() {
        let (head, tail) = rows.split_at_mut(a + 1);
        let (row, below) = (&mut head[a], &mut tail[0]);
        let ip = k.inv_pivot(a);
        for b in 0..w {
            row[b] = (row[b] - k.off() * below[b]) * ip;
            finish(a + 1, b, &mut below[b]);
        }
    }
    for (b, v) in rows[0].iter_mut().enumerate() {
        finish(0, b, v);
    }
}

/// Convenience single step with a freshly built propagator.
pub fn strang_step(
    psi: &WaveFunction2D,
    dt: f64,
    units: UnitSystem,
    stencil: Stencil,
    pulse: &PulsedSinePotential,
    coulomb: &CoulombParams,
    exec: Execution,
) -> Result<WaveFunction2D> {
    let mut out = psi.clone();
    Propagator2D::new(psi.grid(), units, stencil, dt, *pulse, *coulomb, exec)?.step(&mut out);
    Ok(out)
}

/// `⟨H⟩` with the propagator's kinetic operator on both axes.
pub fn energy_2d(
    psi: &WaveFunction2D,
    units: &UnitSystem,
    stencil: Stencil,
    pulse: &PulsedSinePotential,
    coulomb: &CoulombParams,
) -> f64 {
    let n = psi.grid().n();
    let axis = psi.grid().axis();
    let hop = units.kinetic_coeff / (axis.dx() * axis.dx());
    let op = KineticOperator::new(n, hop, stencil).expect("mass matrix is diagonally dominant");
    let amp = psi.amplitudes();
    let t = psi.t();
    let xs: Vec<f64> = axis.xs().collect();
    let sine: Vec<f64> = xs.iter().map(|&x| pulse.value(x, t)).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut scratch = vec![zero; n];
    let mut column = vec![zero; n];
    let mut acc = 0.0;
    for (a, row) in amp.chunks(n).enumerate() {
        acc += op.expectation(row, &mut scratch);
        for (b, c) in row.iter().enumerate() {
            acc += c.norm_sqr() * (sine[a] + sine[b] + coulomb.value(xs[a], xs[b]));
        }
    }
    for b in 0..n {
        for (a, c) in column.iter_mut().enumerate() {
            *c = amp[a * n + b];
        }
        acc += op.expectation(&column, &mut scratch);
    }
    let dx = axis.dx();
    acc * dx * dx / psi.norm_sqr()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSettings {
    pub left: GaussianSpec,
    pub right: GaussianSpec,
    pub pulse: PulsedSinePotential,
    pub coulomb: CoulombParams,
    pub dt: f64,
    pub t_final: f64,
    pub analysis_interval: f64,
    pub snapshot_times: Vec<f64>,
    pub max_coulomb_fraction: f64,
    pub stencil: Stencil,
    /// Keep a full copy of Ψ at each snapshot time.
    pub keep_wavefunctions: bool,
}

/// Diagnostics at one analysis time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSample {
    pub t: f64,
    pub entropy: f64,
    pub norm: f64,
    /// `⟨min(x_a, x_b)⟩`
    pub mean_left: f64,
    /// `⟨max(x_a, x_b)⟩`
    pub mean_right: f64,
    pub mean_x: f64,
    pub mean_k: f64,
    pub energy: f64,
    pub trace: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    /// Largest splitting among retained eigenvalue pairs.
    pub pairing_gap: f64,
    pub antisymmetry: f64,
    /// Probability within 5 cells of a wall.
    pub boundary_probability: f64,
}

#[derive(Debug, Clone)]
pub struct DensitySnapshot {
    pub t: f64,
    pub marginal: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub wavefunction: Option<WaveFunction2D>,
}

#[derive(Debug, Clone)]
pub struct PairRunRecord {
    pub pulse: PulsedSinePotential,
    pub samples: Vec<PairSample>,
    pub snapshots: Vec<DensitySnapshot>,
    pub final_state: WaveFunction2D,
    pub initial_coulomb_energy: f64,
}

impl PairRunRecord {
    pub fn final_entropy(&self) -> f64 {
        self.samples.last().map(|s| s.entropy).unwrap_or(f64::NAN)
    }

    /// Mean entropy over samples with `t ≥ t_final − window`.
    pub fn stationary_entropy(&self, window: f64) -> f64 {
        let t_end = self.samples.last().map(|s| s.t).unwrap_or(0.0);
        let tail: Vec<f64> = self
            .samples
            .iter()
            .filter(|s| s.t >= t_end - window - 1e-9)
            .map(|s| s.entropy)
            .collect();
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

pub fn analyze(
    psi: &WaveFunction2D,
    units: &UnitSystem,
    stencil: Stencil,
    pulse: &PulsedSinePotential,
    coulomb: &CoulombParams,
    exec: Execution,
) -> Result<PairSample> {
    let rdm = entanglement::reduce(psi, exec);
    let ev = rdm.eigenvalues(exec)?;
    let pairing_gap = match entanglement::eigen_pairing_check(&ev) {
        Ok(r) => r.worst_gap,
        Err(_) => ev
            .chunks(2)
            .take_while(|p| p[0] > entanglement::PAIRING_MIN_EIGENVALUE)
            .map(|p| (p[0] - p.get(1).copied().unwrap_or(0.0)).abs())
            .fold(PAIRING_TOLERANCE, f64::max),
    };
    let (mean_left, mean_right) = psi.ordered_means();
    Ok(PairSample {
        t: psi.t(),
        entropy: entanglement::entropy_from_eigenvalues(&ev),
        norm: psi.norm_sqr(),
        mean_left,
        mean_right,
        mean_x: psi.mean_x(),
        mean_k: psi.mean_k(),
        energy: energy_2d(psi, units, stencil, pulse, coulomb),
        trace: rdm.trace(),
        hermiticity: rdm.hermiticity_residual(),
        min_eigenvalue: ev.last().copied().unwrap_or(0.0),
        pairing_gap,
        antisymmetry: psi.antisymmetry_residual(),
        boundary_probability: psi.boundary_probability(5),
    })
}

/// Runs the two-particle scattering from t = 0 to `t_final`.
pub fn evolve_pair(
    grid: &Grid2D,
    units: UnitSystem,
    settings: &PairSettings,
    exec: Execution,
) -> Result<PairRunRecord> {
    if !(settings.t_final > 0.0) {
        return Err(Error::config("time.t_final_ps", "must be positive"));
    }
    let dt = settings.dt;
    let n_steps = step_count(settings.t_final, dt, "time.t_final_ps")?;
    let every = step_count(settings.analysis_interval, dt, "time.analysis_interval_ps")?.max(1);
    let snaps = snapshot_steps(&settings.snapshot_times, dt, n_steps)?;
    let pulse = settings.pulse.aligned_to(dt);
    let coulomb = settings.coulomb;

    let mut psi = init_slater(
        grid,
        &settings.left,
        &settings.right,
        &coulomb,
        &units,
        settings.max_coulomb_fraction,
    )?;
    let initial_coulomb_energy = coulomb_energy(&psi, &coulomb);
    let mut prop = Propagator2D::new(grid, units, settings.stencil, dt, pulse, coulomb, exec)?;
    let mut samples = Vec::new();
    let mut snapshots = Vec::new();

    for step in 0..=n_steps {
        if step > 0 {
            prop.step(&mut psi);
            psi.t = step as f64 * dt;
            if cfg!(debug_assertions) || step % 100 == 0 {
                check_norm(psi.norm_sqr(), psi.t)?;
            }
        }
        if step % every == 0 || step == n_steps {
            samples.push(analyze(&psi, &units, settings.stencil, &pulse, &coulomb, exec)?);
        }
        if snaps.contains(&step) {
            let (left, right) = psi.ordered_densities();
            snapshots.push(DensitySnapshot {
                t: psi.t,
                marginal: psi.marginal_density(Particle::A),
                left,
                right,
                wavefunction: settings.keep_wavefunctions.then(|| psi.clone()),
            });
        }
    }
    check_norm(psi.norm_sqr(), psi.t)?;
    Ok(PairRunRecord {
        pulse,
        samples,
        snapshots,
        final_state: psi,
        initial_coulomb_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver1d::{init_gaussian, Propagator1D};
    use crate::units::make_grid;

    fn grid(n: usize, extent: f64) -> Grid2D {
        Grid2D::new(make_grid(n, extent / n as f64, 0.0).unwrap())
    }

    fn packets() -> (GaussianSpec, GaussianSpec) {
        (
            GaussianSpec { x0: -60.0, sigma: 10.0, k_in: 0.29 },
            GaussianSpec { x0: 60.0, sigma: 10.0, k_in: -0.29 },
        )
    }

    fn no_coulomb() -> CoulombParams {
        CoulombParams::new(0.0, 5.0).unwrap()
    }

    fn state(g: &Grid2D, c: &CoulombParams) -> WaveFunction2D {
        let (l, r) = packets();
        init_slater(g, &l, &r, c, &UnitSystem::default(), 1.0).unwrap()
    }

    #[test]
    fn slater_construction_is_exactly_antisymmetric() {
        let g = grid(128, 300.0);
        let psi = state(&g, &no_coulomb());
        assert!(psi.antisymmetry_residual() < 1e-12);
        for i in 0..g.n() {
            assert_eq!(psi.at(i, i), Complex64::new(0.0, 0.0));
        }
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_packets_are_rejected() {
        let g = grid(128, 300.0);
        let l = GaussianSpec { x0: -5.0, sigma: 10.0, k_in: 0.29 };
        let r = GaussianSpec { x0: 5.0, sigma: 10.0, k_in: 0.29 };
        let err = init_slater(&g, &l, &r, &no_coulomb(), &UnitSystem::default(), 1.0).unwrap_err();
        assert!(err.to_string().contains("overlap"));
    }

    #[test]
    fn strong_initial_coulomb_is_rejected() {
        let g = grid(128, 300.0);
        let (l, r) = packets();
        let c = CoulombParams::new(123.1, 5.0).unwrap();
        let err = init_slater(&g, &l, &r, &c, &UnitSystem::default(), 0.01).unwrap_err();
        assert!(err.to_string().contains("Coulomb"));
    }

    #[test]
    fn marginals_at_start() {
        let g = grid(128, 300.0);
        let psi = state(&g, &no_coulomb());
        let ma = psi.marginal_density(Particle::A);
        let mb = psi.marginal_density(Particle::B);
        let dx = g.dx();
        assert!((ma.iter().sum::<f64>() * dx - 1.0).abs() < 1e-9);
        let axis = g.axis();
        for i in 1..g.n() {
            assert!((ma[i] - mb[i]).abs() < 1e-12);
            // Packets are mirror images through x = 0.
            assert!((ma[i] - ma[axis.mirror_index(i)]).abs() < 1e-12);
        }
        let peak_near = |x0: f64| ma[((x0 - axis.x0_edge()) / dx).round() as usize];
        assert!(peak_near(-60.0) > 100.0 * peak_near(0.0));
        assert!(peak_near(60.0) > 100.0 * peak_near(0.0));
        let (left, right) = psi.ordered_densities();
        assert!((left.iter().sum::<f64>() * dx - 1.0).abs() < 1e-9);
        assert!((right.iter().sum::<f64>() * dx - 1.0).abs() < 1e-9);
        let (lo, hi) = psi.ordered_means();
        assert!((lo + 60.0).abs() < 0.1 && (hi - 60.0).abs() < 0.1);
    }

    #[test]
    fn step_preserves_norm_and_antisymmetry() {
        let g = grid(128, 300.0);
        let c = CoulombParams::new(123.1, 5.0).unwrap();
        let psi = state(&g, &c);
        let pulse = PulsedSinePotential::new(6.11, 0.46, 0.0, 1.0).unwrap();
        let next = strang_step(&psi, 2.5e-4, UnitSystem::default(), Stencil::Compact, &pulse, &c, Execution::default()).unwrap();
        assert!((next.norm_sqr() - psi.norm_sqr()).abs() < 1e-12);
        assert!(next.antisymmetry_residual() < 1e-10);
    }

    #[test]
    fn sequential_and_parallel_steps_agree() {
        let g = grid(64, 300.0);
        let c = CoulombParams::new(123.1, 5.0).unwrap();
        let psi = state(&g, &c);
        let pulse = PulsedSinePotential::new(6.11, 0.46, 0.0, 1.0).unwrap();
        let u = UnitSystem::default();
        let a = strang_step(&psi, 2.5e-4, u, Stencil::Compact, &pulse, &c, Execution::Sequential).unwrap();
        let b = strang_step(&psi, 2.5e-4, u, Stencil::Compact, &pulse, &c, Execution::Parallel).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn separable_dynamics_match_single_particle_runs() {
        let g = grid(256, 400.0);
        let u = UnitSystem::default();
        let (l, r) = packets();
        let psi0 = init_slater(&g, &l, &r, &no_coulomb(), &u, 1.0).unwrap();
        let dt = 2.5e-4;
        let axis = *g.axis();
        for stencil in [Stencil::Central, Stencil::Compact] {
            let mut psi = psi0.clone();
            let off = PulsedSinePotential::off(0.46);
            let mut prop = Propagator2D::new(&g, u, stencil, dt, off, no_coulomb(), Execution::default()).unwrap();
            let mut pl = init_gaussian(&axis, &l).unwrap();
            let mut pr = init_gaussian(&axis, &r).unwrap();
            let mut p1 = Propagator1D::with_stencil(&axis, u, stencil);
            for _ in 0..800 {
                prop.step(&mut psi);
                p1.step(&mut pl, dt, |_, _| 0.0).unwrap();
                p1.step(&mut pr, dt, |_, _| 0.0).unwrap();
            }
            // One-body density of the Slater state is the mean of the orbital densities.
            let m = psi.marginal_density(Particle::A);
            let expected: Vec<f64> = pl
                .density()
                .iter()
                .zip(pr.density())
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let l2: f64 = m.iter().zip(&expected).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * axis.dx();
            assert!(l2.sqrt() < 1e-8, "{stencil:?}: {}", l2.sqrt());
        }
    }

    #[test]
    fn exchange_symmetry_of_dynamics() {
        let g = grid(64, 300.0);
        let c = CoulombParams::new(123.1, 5.0).unwrap();
        let u = UnitSystem::default();
        let (l, r) = packets();
        // A non-antisymmetric product state makes the check non-trivial.
        let axis = *g.axis();
        let n = g.n();
        let ul: Vec<_> = axis.xs().map(|x| l.amplitude(x)).collect();
        let ur: Vec<_> = axis.xs().map(|x| r.amplitude(x)).collect();
        let data: Vec<_> = (0..n * n).map(|i| ul[i / n] * ur[i % n]).collect();
        let mut psi = WaveFunction2D::from_parts(g, data, 0.0).unwrap();
        psi.normalize();
        let mut swapped = psi.swapped();
        let pulse = PulsedSinePotential::new(6.11, 0.46, 0.0, 1.0).unwrap();
        let mut p = Propagator2D::new(&g, u, Stencil::Compact, 2.5e-4, pulse, c, Execution::default()).unwrap();
        for _ in 0..50 {
            p.step(&mut psi);
            p.step(&mut swapped);
        }
        let back = swapped.swapped();
        let err = psi
            .amplitudes()
            .iter()
            .zip(back.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn energy_is_conserved_without_switching() {
        let g = grid(128, 300.0);
        let c = CoulombParams::new(123.1, 5.0).unwrap();
        let u = UnitSystem::default();
        let pulse = PulsedSinePotential::off(0.46);
        let ek = u.kinetic_energy(0.29);
        for stencil in [Stencil::Central, Stencil::Compact] {
            let mut psi = state(&g, &c);
            let e0 = energy_2d(&psi, &u, stencil, &pulse, &c);
            let mut p = Propagator2D::new(&g, u, stencil, 2.5e-4, pulse, c, Execution::default()).unwrap();
            for _ in 0..1200 {
                p.step(&mut psi);
            }
            let e1 = energy_2d(&psi, &u, stencil, &pulse, &c);
            assert!((e1 - e0).abs() < 1e-3 * ek, "{stencil:?}: {e0} → {e1}");
        }
    }
}
