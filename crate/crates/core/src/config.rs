//! Run configuration: flat dotted keys with units in the key name,
//! mode-dependent defaults and `key=value` overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use toml::Value;

use crate::error::{Error, Result};
use crate::kinetic::Stencil;
use crate::ladder::DEFAULT_LADDER_DT;
use crate::parallel::Execution;
use crate::potentials::{CoulombParams, PulsedSinePotential, DEFAULT_COULOMB_STRENGTH};
use crate::solver1d::GaussianSpec;
use crate::units::{make_grid, Grid1D, UnitSystem, DEFAULT_MASS_KG};

/// Cutoff giving complete reflection at E_k = 10 meV for the default strength.
pub const DEFAULT_COULOMB_CUTOFF_NM: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single1d,
    Pair2d,
    Sweep,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Single1d => "single1d",
            Mode::Pair2d => "pair2d",
            Mode::Sweep => "sweep",
            Mode::Validate => "validate",
        }
    }

    fn is_pair(self) -> bool {
        matches!(self, Mode::Pair2d | Mode::Sweep)
    }
}

/// Two packets placed symmetrically about `center` moving towards each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSpec {
    pub sigma: f64,
    /// Magnitude of the carrier wavenumber; the left packet moves right.
    pub k_in: f64,
    pub separation: f64,
    pub center: f64,
    pub max_coulomb_fraction: f64,
}

impl PairSpec {
    pub fn left(&self) -> GaussianSpec {
        GaussianSpec { x0: self.center - 0.5 * self.separation, sigma: self.sigma, k_in: self.k_in }
    }

    pub fn right(&self) -> GaussianSpec {
        GaussianSpec { x0: self.center + 0.5 * self.separation, sigma: self.sigma, k_in: -self.k_in }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub t_on_list: Vec<f64>,
    pub stationary_window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateSpec {
    pub durations: Vec<f64>,
    /// Pulse wavenumber used on the ladder side; differs from `pulse.k0` only
    /// for negative controls.
    pub ladder_k0: f64,
    /// The ladder spacing is `ladder_k0 / ladder_subdivisions`.
    pub ladder_subdivisions: u32,
    pub ladder_dt: f64,
    pub n_bands: i32,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub mass_kg: f64,
    pub units: UnitSystem,
    pub grid: Grid1D,
    /// Kinetic discretization, shared by both axes in two-particle runs.
    pub stencil: Stencil,
    pub packet: GaussianSpec,
    pub pair: PairSpec,
    /// As configured; runs align the switching times to `dt`.
    pub pulse: PulsedSinePotential,
    pub coulomb: CoulombParams,
    pub dt: f64,
    pub t_final: f64,
    pub analysis_interval: f64,
    pub record_interval: f64,
    pub snapshot_times: Vec<f64>,
    pub wavefunction_snapshots: bool,
    pub sweep: SweepSpec,
    pub validate: ValidateSpec,
    pub execution: Execution,
}

/// Parses a TOML document into flat dotted keys. Nested tables and dotted
/// keys are equivalent.
pub fn parse_flat(text: &str, origin: &str) -> Result<BTreeMap<String, Value>> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("config", format!("{origin}: {}", e.message())))?;
    let mut out = BTreeMap::new();
    flatten("", table, &mut out);
    Ok(out)
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            v => {
                out.insert(key, v);
            }
        }
    }
}

/// Parses `key=value`; the value is read as a TOML scalar or array, and as a
/// bare string if that fails.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::config("override", format!("expected key=value, got {s:?}")))?;
    let key = k.trim().to_string();
    let raw = v.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key, value))
}

struct Keys {
    map: BTreeMap<String, Value>,
}

impl Keys {
    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(Value::Float(x)) => Ok(x),
            Some(Value::Integer(i)) => Ok(i as f64),
            Some(other) => Err(type_error(key, "a number", &other)),
        }
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        if self.map.contains_key(key) {
            self.f64(key, 0.0).map(Some)
        } else {
            Ok(None)
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if i >= 0 => Ok(i as usize),
            Some(other) => Err(type_error(key, "a non-negative integer", &other)),
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(b),
            Some(other) => Err(type_error(key, "true or false", &other)),
        }
    }

    fn string(&mut self, key: &str, default: &str) -> Result<String> {
        match self.map.remove(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s),
            Some(other) => Err(type_error(key, "a string", &other)),
        }
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.map.remove(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(x),
                    Value::Integer(i) => Ok(i as f64),
                    other => Err(type_error(key, "an array of numbers", &other)),
                })
                .collect(),
            // A single number is accepted as a one-element list.
            Some(Value::Float(x)) => Ok(vec![x]),
            Some(Value::Integer(i)) => Ok(vec![i as f64]),
            Some(other) => Err(type_error(key, "an array of numbers", &other)),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.into_keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::config(k, "unknown configuration key")),
        }
    }
}

fn type_error(key: &str, expected: &str, got: &Value) -> Error {
    Error::config(key, format!("expected {expected}, got {got}"))
}

/// Reattributes a configuration error to `field`, keeping its message.
fn refield(e: Error, field: &str) -> Error {
    match e {
        Error::Config { message, .. } => Error::config(field, message),
        other => other,
    }
}

fn positive(field: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::config(field, format!("must be positive, got {x}")))
    }
}

impl RunConfig {
    /// Defaults for `mode` with no keys set.
    pub fn defaults(mode: Mode) -> Result<Self> {
        Self::from_map(mode, BTreeMap::new())
    }

    /// Reads `path` (if given) and applies the overrides on top.
    pub fn load(mode: Mode, path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut map = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                parse_flat(&text, &p.display().to_string())?
            }
            None => BTreeMap::new(),
        };
        for o in overrides {
            let (k, v) = parse_override(o)?;
            map.insert(k, v);
        }
        Self::from_map(mode, map)
    }

    pub fn from_map(mode: Mode, map: BTreeMap<String, Value>) -> Result<Self> {
        let mut keys = Keys { map };
        let pair_mode = mode.is_pair();

        let mass_kg = keys.f64("units.mass_kg", DEFAULT_MASS_KG)?;
        let units = match keys.opt_f64("units.kinetic_coeff_meV_nm2")? {
            Some(c) => UnitSystem::with_kinetic_coeff(c).map_err(|e| refield(e, "units.kinetic_coeff_meV_nm2"))?,
            None => UnitSystem::from_mass(mass_kg).map_err(|e| refield(e, "units.mass_kg"))?,
        };

        // Sweeps compare late-time plateaus, so they run longer and need room
        // for the pulse-kicked fragments to stay clear of the walls.
        let (n_default, extent_default) = match mode {
            Mode::Pair2d => (512, 700.0),
            Mode::Sweep => (1024, 1400.0),
            Mode::Single1d | Mode::Validate => (4096, 2400.0),
        };
        let (t_final_default, analysis_default) = if mode == Mode::Sweep { (4.0, 0.05) } else { (3.0, 0.005) };
        let n = keys.usize("grid.n", n_default)?;
        let extent = positive("grid.extent_nm", keys.f64("grid.extent_nm", extent_default)?)?;
        let center = keys.f64("grid.center_nm", 0.0)?;
        let grid = make_grid(n, extent / n as f64, center)?;
        let stencil_default = if pair_mode { "compact" } else { "central" };
        let stencil_name = keys.string("grid.stencil", stencil_default)?;
        let stencil = Stencil::parse(&stencil_name).ok_or_else(|| {
            Error::config("grid.stencil", format!("expected \"central\" or \"compact\", got {stencil_name:?}"))
        })?;

        let packet = GaussianSpec {
            x0: keys.f64("packet.x0_nm", center - 100.0)?,
            sigma: positive("packet.sigma_nm", keys.f64("packet.sigma_nm", 10.0)?)?,
            k_in: keys.f64("packet.k_in_invnm", 0.205)?,
        };
        let pair = PairSpec {
            sigma: positive("pair.sigma_nm", keys.f64("pair.sigma_nm", 10.0)?)?,
            k_in: keys.f64("pair.k_in_invnm", 0.290)?,
            separation: positive("pair.separation_nm", keys.f64("pair.separation_nm", 180.0)?)?,
            center: keys.f64("pair.center_nm", center)?,
            max_coulomb_fraction: positive(
                "pair.max_coulomb_energy_fraction",
                keys.f64("pair.max_coulomb_energy_fraction", 0.1)?,
            )?,
        };

        let amplitude = keys.f64("pulse.amplitude_meV", 6.11)?;
        let k0 = keys.f64("pulse.k0_invnm", 0.46)?;
        let t_on = keys.f64("pulse.t_on_ps", 1.0)?;
        let duration = keys.f64("pulse.duration_ps", if pair_mode { 0.2 } else { 0.1 })?;
        if duration < 0.0 {
            return Err(Error::config("pulse.duration_ps", "must be non-negative"));
        }
        let pulse = PulsedSinePotential::new(amplitude, k0, t_on, t_on + duration)?;
        let coulomb = CoulombParams::new(
            keys.f64("coulomb.strength_meV_nm", DEFAULT_COULOMB_STRENGTH)?,
            keys.f64("coulomb.cutoff_nm", DEFAULT_COULOMB_CUTOFF_NM)?,
        )?;

        let dt = positive("time.dt_ps", keys.f64("time.dt_ps", 2.5e-4)?)?;
        let t_final = positive("time.t_final_ps", keys.f64("time.t_final_ps", t_final_default)?)?;
        let analysis_interval = positive(
            "time.analysis_interval_ps",
            keys.f64("time.analysis_interval_ps", analysis_default)?,
        )?;
        let record_interval = positive("time.record_interval_ps", keys.f64("time.record_interval_ps", 0.005)?)?;
        let snapshot_times = keys.list("time.snapshot_times_ps", &[0.0, 0.6, 1.3, 2.3, 2.8])?;
        let wavefunction_snapshots = keys.bool("output.wavefunction_snapshots", true)?;

        let sweep = SweepSpec {
            t_on_list: keys.list("sweep.t_on_list_ps", &[0.0, 0.4, 0.7, 0.9])?,
            stationary_window: positive(
                "sweep.stationary_window_ps",
                keys.f64("sweep.stationary_window_ps", 0.2)?,
            )?,
        };
        let validate = ValidateSpec {
            durations: keys.list("validate.durations_ps", &[0.1, 0.2])?,
            ladder_k0: keys.f64("validate.ladder_k0_invnm", k0)?,
            ladder_subdivisions: keys.usize("validate.ladder_subdivisions", 64)? as u32,
            ladder_dt: positive("validate.ladder_dt_ps", keys.f64("validate.ladder_dt_ps", DEFAULT_LADDER_DT)?)?,
            n_bands: keys.usize("validate.n_bands", 2)? as i32,
            tolerance: positive("validate.tolerance", keys.f64("validate.tolerance", 0.02)?)?,
        };
        let execution = match keys.string("compute.execution", "parallel")?.as_str() {
            "parallel" => Execution::Parallel,
            "sequential" => Execution::Sequential,
            other => {
                return Err(Error::config(
                    "compute.execution",
                    format!("expected \"parallel\" or \"sequential\", got {other:?}"),
                ))
            }
        };
        keys.finish()?;

        let cfg = Self {
            mode,
            mass_kg,
            units,
            grid,
            stencil,
            packet,
            pair,
            pulse,
            coulomb,
            dt,
            t_final,
            analysis_interval,
            record_interval,
            snapshot_times,
            wavefunction_snapshots,
            sweep,
            validate,
            execution,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let k_max = if self.mode.is_pair() { self.pair.k_in } else { self.packet.k_in };
        self.grid.require_nyquist("grid.n", k_max, self.pulse.k0)?;
        for &t in &self.snapshot_times {
            if !(0.0..=self.t_final + 0.5 * self.dt).contains(&t) {
                return Err(Error::config(
                    "time.snapshot_times_ps",
                    format!("snapshot time {t} ps outside [0, {}] ps", self.t_final),
                ));
            }
        }
        match self.mode {
            Mode::Single1d | Mode::Validate => self.packet.validate(&self.grid, "packet")?,
            Mode::Pair2d | Mode::Sweep => {
                for packet in [self.pair.left(), self.pair.right()] {
                    packet
                        .validate(&self.grid, "pair")
                        .map_err(|e| refield(e, "pair.separation_nm"))?;
                }
            }
        }
        if self.mode == Mode::Sweep {
            if self.sweep.t_on_list.is_empty() {
                return Err(Error::config("sweep.t_on_list_ps", "empty sweep"));
            }
            let d = self.pulse.duration();
            for &t_on in &self.sweep.t_on_list {
                PulsedSinePotential::new(self.pulse.amplitude, self.pulse.k0, t_on, t_on + d)
                    .map_err(|e| refield(e, "sweep.t_on_list_ps"))?;
            }
            if self.sweep.stationary_window > self.t_final {
                return Err(Error::config("sweep.stationary_window_ps", "longer than the run"));
            }
        }
        if self.mode == Mode::Validate {
            if self.validate.durations.is_empty() || self.validate.durations.iter().any(|&d| d < 0.0) {
                return Err(Error::config("validate.durations_ps", "need one or more non-negative durations"));
            }
            if self.validate.ladder_subdivisions == 0 {
                return Err(Error::config("validate.ladder_subdivisions", "must be at least 1"));
            }
            if !(self.validate.ladder_k0 > 0.0) {
                return Err(Error::config("validate.ladder_k0_invnm", "must be positive"));
            }
            let t_end = self.pulse.t_on + self.validate.durations.iter().cloned().fold(0.0, f64::max);
            if t_end > self.t_final {
                return Err(Error::config("time.t_final_ps", "run ends before the longest pulse"));
            }
        }
        Ok(())
    }

    /// Copy with the pulse switched on at `t_on` for the configured duration.
    pub fn with_t_on(&self, t_on: f64) -> Result<Self> {
        let mut c = self.clone();
        c.pulse = PulsedSinePotential::new(self.pulse.amplitude, self.pulse.k0, t_on, t_on + self.pulse.duration())?;
        Ok(c)
    }

    /// The pulse as applied on the time grid.
    pub fn aligned_pulse(&self) -> PulsedSinePotential {
        self.pulse.aligned_to(self.dt)
    }

    /// Every key with its resolved value. Feeding the result back through
    /// [`RunConfig::from_map`] reproduces this configuration.
    pub fn to_flat(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        let f = |x: f64| Value::Float(x);
        let list = |xs: &[f64]| Value::Array(xs.iter().map(|&x| Value::Float(x)).collect());
        m.insert("units.mass_kg".into(), f(self.mass_kg));
        m.insert("units.kinetic_coeff_meV_nm2".into(), f(self.units.kinetic_coeff));
        m.insert("grid.n".into(), Value::Integer(self.grid.n() as i64));
        m.insert("grid.extent_nm".into(), f(self.grid.extent()));
        m.insert("grid.stencil".into(), Value::String(self.stencil.name().into()));
        m.insert("grid.center_nm".into(), f(self.grid.x0_edge() + 0.5 * self.grid.extent()));
        m.insert("packet.x0_nm".into(), f(self.packet.x0));
        m.insert("packet.sigma_nm".into(), f(self.packet.sigma));
        m.insert("packet.k_in_invnm".into(), f(self.packet.k_in));
        m.insert("pair.sigma_nm".into(), f(self.pair.sigma));
        m.insert("pair.k_in_invnm".into(), f(self.pair.k_in));
        m.insert("pair.separation_nm".into(), f(self.pair.separation));
        m.insert("pair.center_nm".into(), f(self.pair.center));
        m.insert("pair.max_coulomb_energy_fraction".into(), f(self.pair.max_coulomb_fraction));
        m.insert("pulse.amplitude_meV".into(), f(self.pulse.amplitude));
        m.insert("pulse.k0_invnm".into(), f(self.pulse.k0));
        m.insert("pulse.t_on_ps".into(), f(self.pulse.t_on));
        m.insert("pulse.duration_ps".into(), f(self.pulse.duration()));
        m.insert("coulomb.strength_meV_nm".into(), f(self.coulomb.strength));
        m.insert("coulomb.cutoff_nm".into(), f(self.coulomb.cutoff));
        m.insert("time.dt_ps".into(), f(self.dt));
        m.insert("time.t_final_ps".into(), f(self.t_final));
        m.insert("time.analysis_interval_ps".into(), f(self.analysis_interval));
        m.insert("time.record_interval_ps".into(), f(self.record_interval));
        m.insert("time.snapshot_times_ps".into(), list(&self.snapshot_times));
        m.insert("output.wavefunction_snapshots".into(), Value::Boolean(self.wavefunction_snapshots));
        m.insert("sweep.t_on_list_ps".into(), list(&self.sweep.t_on_list));
        m.insert("sweep.stationary_window_ps".into(), f(self.sweep.stationary_window));
        m.insert("validate.durations_ps".into(), list(&self.validate.durations));
        m.insert("validate.ladder_k0_invnm".into(), f(self.validate.ladder_k0));
        m.insert("validate.ladder_subdivisions".into(), Value::Integer(self.validate.ladder_subdivisions as i64));
        m.insert("validate.ladder_dt_ps".into(), f(self.validate.ladder_dt));
        m.insert("validate.n_bands".into(), Value::Integer(self.validate.n_bands as i64));
        m.insert("validate.tolerance".into(), f(self.validate.tolerance));
        let exec = match self.execution {
            Execution::Parallel => "parallel",
            Execution::Sequential => "sequential",
        };
        m.insert("compute.execution".into(), Value::String(exec.into()));
        m
    }

    /// `key = value` lines, one per resolved key.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.to_flat() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
