//! Run orchestration for the four CLI modes. Each run writes its manifest
//! before computing and its tables afterwards.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use crate::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::io::{self, ENTROPY_HEADER, OBSERVABLES_HEADER, STATIONARY_HEADER};
use crate::ladder::{evolve_ladder, LadderState};
use crate::parallel;
use crate::potentials::PulsedSinePotential;
use crate::solver1d::{evolve_1d, Run1DRecord, Run1DSettings};
use crate::solver2d::{evolve_pair, PairRunRecord, PairSample, PairSettings};
use crate::spectral::{band_weights, find_peaks, to_momentum, BandWeights, Peak, DEFAULT_PEAK_THRESHOLD};
use crate::units::Grid2D;

/// Environment variable capping the number of concurrent sweep runs.
pub const THREADS_ENV: &str = "QSCATTER_THREADS";

#[derive(Debug, Serialize)]
struct Manifest {
    artifact: &'static str,
    version: &'static str,
    mode: &'static str,
    config: std::collections::BTreeMap<String, toml::Value>,
    pulse_aligned: AlignedPulse,
    derived: serde_json::Value,
    started_unix_s: u64,
}

#[derive(Debug, Serialize)]
struct AlignedPulse {
    t_on_ps: f64,
    t_off_ps: f64,
}

fn write_manifest(dir: &Path, cfg: &RunConfig, extra: serde_json::Value) -> Result<()> {
    let p = cfg.aligned_pulse();
    let mut derived = json!({
        "hbar_meV_ps": cfg.units.hbar,
        "kinetic_coeff_meV_nm2": cfg.units.kinetic_coeff,
        "dx_nm": cfg.grid.dx(),
        "dk_invnm": cfg.grid.dk(),
        "k_nyquist_invnm": cfg.grid.k_nyquist(),
        "execution": format!("{:?}", cfg.execution.effective()),
        "parallel_feature": cfg!(feature = "parallel"),
    });
    if let (Some(d), Some(e)) = (derived.as_object_mut(), extra.as_object()) {
        d.extend(e.clone());
    }
    let manifest = Manifest {
        artifact: "qscatter",
        version: env!("CARGO_PKG_VERSION"),
        mode: cfg.mode.name(),
        config: cfg.to_flat(),
        pulse_aligned: AlignedPulse { t_on_ps: p.t_on, t_off_ps: p.t_off },
        derived,
        started_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    io::ensure_dir(dir)?;
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    io::write_text(&dir.join("config.resolved.toml"), &cfg.to_toml())
}

fn require_mode(cfg: &RunConfig, modes: &[Mode]) -> Result<()> {
    if modes.contains(&cfg.mode) {
        Ok(())
    } else {
        Err(Error::Internal(format!("configuration resolved for mode {}", cfg.mode.name())))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleSummary {
    pub pulse: PulsedSinePotential,
    pub final_norm: f64,
    pub bands: BandWeights,
    pub peaks: Vec<Peak>,
    pub max_boundary_probability: f64,
}

pub struct SingleOutcome {
    pub record: Run1DRecord,
    pub summary: SingleSummary,
}

/// 1D run: observables, density and spectrum snapshots, final band weights.
pub fn run_single(cfg: &RunConfig, out: &Path) -> Result<SingleOutcome> {
    require_mode(cfg, &[Mode::Single1d, Mode::Validate])?;
    write_manifest(out, cfg, json!({ "packet_x0_nm": cfg.packet.x0 }))?;
    let settings = Run1DSettings {
        packet: cfg.packet,
        pulse: cfg.pulse,
        t_final: cfg.t_final,
        dt: cfg.dt,
        snapshot_times: cfg.snapshot_times.clone(),
        record_interval: cfg.record_interval,
        stencil: cfg.stencil,
    };
    let record = evolve_1d(&cfg.grid, cfg.units, &settings)?;

    io::write_csv(
        &out.join("observables.csv"),
        &OBSERVABLES_HEADER,
        record.series.iter().map(|o| [o.t, o.norm, o.mean_x, o.mean_k, o.energy]),
    )?;
    for snap in &record.snapshots {
        let tag = io::time_tag(snap.t());
        let g = snap.grid();
        if cfg.wavefunction_snapshots {
            io::write_snapshot(&out.join(format!("psi_{tag}.qs1")), &[g.n()], g.dx(), snap.t(), snap.amplitudes())?;
        }
        let density = snap.density();
        io::write_csv(
            &out.join(format!("density_{tag}.csv")),
            &["x_nm", "density_invnm"],
            density.iter().enumerate().map(|(i, d)| [g.x(i), *d]),
        )?;
        let spec = to_momentum(snap);
        io::write_csv(
            &out.join(format!("spectrum_{tag}.csv")),
            &["k_invnm", "density_nm"],
            spec.k.iter().zip(&spec.density).map(|(k, d)| [*k, *d]),
        )?;
    }
    let spec = to_momentum(&record.final_state);
    let bands = band_weights(&spec, cfg.packet.k_in, cfg.pulse.k0, 2)?;
    let peaks = find_peaks(&spec, DEFAULT_PEAK_THRESHOLD);
    io::write_csv(
        &out.join("bands.csv"),
        &["band", "k_center_invnm", "weight"],
        bands.bands().map(|(m, w)| [m as f64, cfg.packet.k_in + m as f64 * cfg.pulse.k0, w]),
    )?;
    io::write_csv(
        &out.join("peaks.csv"),
        &["k_invnm", "height_nm", "weight"],
        peaks.iter().map(|p| [p.k, p.height, p.weight]),
    )?;
    let summary = SingleSummary {
        pulse: record.pulse,
        final_norm: record.final_state.norm_sqr(),
        bands,
        peaks,
        max_boundary_probability: record.max_boundary_probability,
    };
    io::write_json(&out.join("summary.json"), &summary)?;
    Ok(SingleOutcome { record, summary })
}

#[derive(Debug, Clone, Serialize)]
pub struct PairSummary {
    pub pulse: PulsedSinePotential,
    #[serde(rename = "initial_coulomb_energy_meV")]
    pub initial_coulomb_energy: f64,
    pub final_entropy: f64,
    pub stationary_entropy: f64,
    pub max_entropy: f64,
    pub t_max_entropy: f64,
    pub min_entropy: f64,
    pub worst_pairing_gap: f64,
    pub worst_trace_error: f64,
    pub worst_hermiticity: f64,
    pub worst_antisymmetry: f64,
    pub max_norm_drift: f64,
    pub max_boundary_probability: f64,
}

impl PairSummary {
    fn from_record(r: &PairRunRecord, window: f64) -> Self {
        let s = &r.samples;
        let fold = |f: fn(&PairSample) -> f64| s.iter().map(f).fold(0.0, f64::max);
        let (t_max, max) = s
            .iter()
            .map(|x| (x.t, x.entropy))
            .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        Self {
            pulse: r.pulse,
            initial_coulomb_energy: r.initial_coulomb_energy,
            final_entropy: r.final_entropy(),
            stationary_entropy: r.stationary_entropy(window),
            max_entropy: max,
            t_max_entropy: t_max,
            min_entropy: s.iter().map(|x| x.entropy).fold(f64::INFINITY, f64::min),
            worst_pairing_gap: fold(|x| x.pairing_gap),
            worst_trace_error: fold(|x| (x.trace - 1.0).abs()),
            worst_hermiticity: fold(|x| x.hermiticity),
            worst_antisymmetry: fold(|x| x.antisymmetry),
            max_norm_drift: fold(|x| (x.norm - 1.0).abs()),
            max_boundary_probability: fold(|x| x.boundary_probability),
        }
    }
}

pub struct PairOutcome {
    pub record: PairRunRecord,
    pub summary: PairSummary,
}

pub fn pair_settings(cfg: &RunConfig) -> PairSettings {
    PairSettings {
        left: cfg.pair.left(),
        right: cfg.pair.right(),
        pulse: cfg.pulse,
        coulomb: cfg.coulomb,
        dt: cfg.dt,
        t_final: cfg.t_final,
        analysis_interval: cfg.analysis_interval,
        snapshot_times: cfg.snapshot_times.clone(),
        max_coulomb_fraction: cfg.pair.max_coulomb_fraction,
        stencil: cfg.stencil,
        keep_wavefunctions: cfg.wavefunction_snapshots,
    }
}

/// Two-particle run: entropy, observables, diagnostics and marginal densities.
pub fn run_pair(cfg: &RunConfig, out: &Path) -> Result<PairOutcome> {
    require_mode(cfg, &[Mode::Pair2d, Mode::Sweep])?;
    write_manifest(
        out,
        cfg,
        json!({
            "packet_x0_nm": [cfg.pair.left().x0, cfg.pair.right().x0],
            "packet_separation_nm": cfg.pair.separation,
        }),
    )?;
    let grid = Grid2D::new(cfg.grid);
    let record = evolve_pair(&grid, cfg.units, &pair_settings(cfg), cfg.execution)?;
    write_pair_outputs(out, &grid, &record)?;
    let summary = PairSummary::from_record(&record, cfg.sweep.stationary_window);
    io::write_json(&out.join("summary.json"), &summary)?;
    Ok(PairOutcome { record, summary })
}

fn write_pair_outputs(out: &Path, grid: &Grid2D, record: &PairRunRecord) -> Result<()> {
    let s = &record.samples;
    io::write_csv(
        &out.join("entropy.csv"),
        &ENTROPY_HEADER,
        s.iter().map(|x| [x.t, x.entropy, x.norm, x.mean_left, x.mean_right]),
    )?;
    io::write_csv(
        &out.join("observables.csv"),
        &OBSERVABLES_HEADER,
        s.iter().map(|x| [x.t, x.norm, x.mean_x, x.mean_k, x.energy]),
    )?;
    io::write_csv(
        &out.join("diagnostics.csv"),
        &[
            "t_ps",
            "trace",
            "hermiticity_residual",
            "min_eigenvalue",
            "pairing_gap",
            "antisymmetry_residual",
            "boundary_probability",
        ],
        s.iter().map(|x| {
            [x.t, x.trace, x.hermiticity, x.min_eigenvalue, x.pairing_gap, x.antisymmetry, x.boundary_probability]
        }),
    )?;
    let axis = grid.axis();
    for snap in &record.snapshots {
        let tag = io::time_tag(snap.t);
        io::write_csv(
            &out.join(format!("marginal_{tag}.csv")),
            &["x_nm", "density_a_invnm", "density_left_invnm", "density_right_invnm"],
            (0..axis.n()).map(|i| [axis.x(i), snap.marginal[i], snap.left[i], snap.right[i]]),
        )?;
        if let Some(psi) = &snap.wavefunction {
            io::write_snapshot(
                &out.join(format!("psi_{tag}.qs2")),
                &[axis.n(), axis.n()],
                axis.dx(),
                snap.t,
                psi.amplitudes(),
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub t_on: f64,
    pub entropy: f64,
}

pub struct SweepOutcome {
    pub points: Vec<StationaryPoint>,
    pub runs: Vec<(PathBuf, PairSummary)>,
}

/// Subdirectory for one sweep member.
pub fn sweep_dir(out: &Path, t_on: f64) -> PathBuf {
    out.join(format!("t_on_{t_on:.4}"))
}

/// Concurrency for sweeps: `QSCATTER_THREADS` if set, else all cores.
pub fn sweep_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(THREADS_ENV, format!("expected a positive integer, got {s:?}"))),
        },
    }
}

/// Runs one pair simulation per `t_on` concurrently and tabulates the
/// stationary entropy of each.
pub fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<SweepOutcome> {
    require_mode(cfg, &[Mode::Sweep])?;
    let threads = sweep_threads()?;
    write_manifest(
        out,
        cfg,
        json!({
            "t_on_list_ps": cfg.sweep.t_on_list,
            "concurrency": threads,
        }),
    )?;
    let members: Vec<RunConfig> = cfg
        .sweep
        .t_on_list
        .iter()
        .map(|&t| cfg.with_t_on(t))
        .collect::<Result<_>>()?;
    let results = parallel::map_with_threads(threads, &members, |member| {
        let dir = sweep_dir(out, member.pulse.t_on);
        run_pair(member, &dir).map(|o| (dir, o.summary)).map_err(|e| in_sweep(e, member.pulse.t_on))
    });
    let runs: Vec<(PathBuf, PairSummary)> = results.into_iter().collect::<Result<_>>()?;
    let points: Vec<StationaryPoint> = cfg
        .sweep
        .t_on_list
        .iter()
        .zip(&runs)
        .map(|(&t_on, (_, s))| StationaryPoint { t_on, entropy: s.stationary_entropy })
        .collect();
    io::write_csv(&out.join("stationary.csv"), &STATIONARY_HEADER, points.iter().map(|p| [p.t_on, p.entropy]))?;
    Ok(SweepOutcome { points, runs })
}

fn in_sweep(e: Error, t_on: f64) -> Error {
    let prefix = format!("sweep run t_on = {t_on} ps");
    match e {
        Error::Config { field, message } => Error::config(field, format!("{prefix}: {message}")),
        Error::Tolerance(m) => Error::Tolerance(format!("{prefix}: {m}")),
        Error::Internal(m) => Error::Internal(format!("{prefix}: {m}")),
        io @ Error::Io { .. } => io,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandComparison {
    pub duration: f64,
    pub band: i32,
    pub ladder: f64,
    pub solver: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub rows: Vec<BandComparison>,
    pub tolerance: f64,
    pub worst: f64,
    pub pass: bool,
}

impl ValidationReport {
    pub fn table(&self) -> String {
        let mut s = String::from("duration_ps  band  ladder        solver        |diff|\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:<11.4}  {:>+4}  {:<12.6}  {:<12.6}  {:.6}\n",
                r.duration, r.band, r.ladder, r.solver, r.abs_diff
            ));
        }
        s.push_str(&format!(
            "{}: worst |diff| = {:.6} (tolerance {})\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.worst,
            self.tolerance
        ));
        s
    }

    /// `Err(Tolerance)` carrying the table when any band disagrees.
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::Tolerance(format!("ladder and solver band weights disagree\n{}", self.table())))
        }
    }
}

/// Ladder and real-space band weights after the pulse, for one duration.
pub fn compare_bands(cfg: &RunConfig, duration: f64) -> Result<Vec<BandComparison>> {
    let t_on = cfg.pulse.t_on;
    let pulse = PulsedSinePotential::new(cfg.pulse.amplitude, cfg.pulse.k0, t_on, t_on + duration)?.aligned_to(cfg.dt);
    let v = &cfg.validate;

    // Real space, stopped once the pulse is over.
    let settings = Run1DSettings {
        packet: cfg.packet,
        pulse,
        t_final: pulse.t_off.max(cfg.dt),
        dt: cfg.dt,
        snapshot_times: vec![],
        record_interval: pulse.t_off.max(cfg.dt),
        stencil: cfg.stencil,
    };
    let record = evolve_1d(&cfg.grid, cfg.units, &settings)?;
    let solver = band_weights(&to_momentum(&record.final_state), cfg.packet.k_in, cfg.pulse.k0, v.n_bands)?;

    // Interaction-picture amplitudes stay at their t = 0 values until t_on.
    let dk = v.ladder_k0 / v.ladder_subdivisions as f64;
    let half_span = (v.n_bands as f64 + 1.5) * cfg.pulse.k0.max(v.ladder_k0);
    let initial = LadderState::gaussian(&cfg.packet, dk, half_span)?;
    let fin = evolve_ladder(&initial, pulse.amplitude, v.ladder_k0, pulse.t_on, pulse.t_off, v.ladder_dt, &cfg.units)?;
    let ladder = band_weights(&fin.spectrum(), cfg.packet.k_in, cfg.pulse.k0, v.n_bands)?;

    Ok((-v.n_bands..=v.n_bands)
        .map(|m| {
            let (l, s) = (ladder.get(m), solver.get(m));
            BandComparison { duration, band: m, ladder: l, solver: s, abs_diff: (l - s).abs() }
        })
        .collect())
}

/// Cross-checks the ladder oracle against the real-space solver for every
/// configured duration. The report is written even when the check fails.
pub fn run_validate(cfg: &RunConfig, out: &Path) -> Result<ValidationReport> {
    require_mode(cfg, &[Mode::Validate])?;
    write_manifest(out, cfg, json!({ "durations_ps": cfg.validate.durations }))?;
    let per_duration = cfg
        .execution
        .map(&cfg.validate.durations, |&d| compare_bands(cfg, d));
    let rows: Vec<BandComparison> = per_duration
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let report = ValidationReport { rows, tolerance: cfg.validate.tolerance, worst, pass: worst < cfg.validate.tolerance };
    io::write_csv(
        &out.join("validate.csv"),
        &["duration_ps", "band", "weight_ladder", "weight_solver", "abs_diff"],
        report.rows.iter().map(|r| [r.duration, r.band as f64, r.ladder, r.solver, r.abs_diff]),
    )?;
    io::write_json(&out.join("summary.json"), &report)?;
    Ok(report)
}
