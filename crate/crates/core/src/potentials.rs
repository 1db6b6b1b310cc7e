//! External sine pulse and the cutoff Coulomb interaction.

use serde::Serialize;

use crate::error::{Error, Result};

/// `A·sin(k0·x)` switched on over the closed window `[t_on, t_off]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulsedSinePotential {
    pub amplitude: f64,
    pub k0: f64,
    pub t_on: f64,
    pub t_off: f64,
}

impl PulsedSinePotential {
    pub fn new(amplitude: f64, k0: f64, t_on: f64, t_off: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::config(
                "pulse.amplitude_meV",
                format!("must be non-negative, got {amplitude}"),
            ));
        }
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::config(
                "pulse.k0_invnm",
                format!("must be positive, got {k0}"),
            ));
        }
        if !(t_off >= t_on) || !t_on.is_finite() || !t_off.is_finite() {
            return Err(Error::config(
                "pulse.duration_ps",
                format!("t_off ({t_off}) must not precede t_on ({t_on})"),
            ));
        }
        Ok(Self {
            amplitude,
            k0,
            t_on,
            t_off,
        })
    }

    /// A pulse that never switches on.
    pub fn off(k0: f64) -> Self {
        Self {
            amplitude: 0.0,
            k0,
            t_on: 0.0,
            t_off: 0.0,
        }
    }

    pub fn duration(&self) -> f64 {
        self.t_off - self.t_on
    }

    pub fn is_on(&self, t: f64) -> bool {
        self.amplitude != 0.0 && t >= self.t_on && t <= self.t_off
    }

    /// Copy with `t_on` and `t_off` rounded to the nearest multiple of `dt`.
    pub fn aligned_to(&self, dt: f64) -> Self {
        let snap = |t: f64| (t / dt).round() * dt;
        Self {
            t_on: snap(self.t_on),
            t_off: snap(self.t_off),
            ..*self
        }
    }

    /// Spatial profile `A·sin(k0·x)`, ignoring the time window.
    pub fn profile(&self, x: f64) -> f64 {
        self.amplitude * (self.k0 * x).sin()
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        sine_value(x, t, self)
    }
}

pub fn sine_value(x: f64, t: f64, p: &PulsedSinePotential) -> f64 {
    if p.is_on(t) {
        p.profile(x)
    } else {
        0.0
    }
}

/// Cutoff Coulomb repulsion `C / sqrt((xa − xb)² + d²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoulombParams {
    /// Interaction strength in meV·nm.
    pub strength: f64,
    /// Cutoff length in nm.
    pub cutoff: f64,
}

impl CoulombParams {
    pub fn new(strength: f64, cutoff: f64) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::config(
                "coulomb.strength_meV_nm",
                format!("must be non-negative, got {strength}"),
            ));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::config(
                "coulomb.cutoff_nm",
                format!("must be positive, got {cutoff}"),
            ));
        }
        Ok(Self { strength, cutoff })
    }

    pub fn value(&self, xa: f64, xb: f64) -> f64 {
        coulomb_value(xa, xb, self)
    }
}

/// e²/(4πε₀·ε_r) for silicon (ε_r = 11.7), in meV·nm.
pub const DEFAULT_COULOMB_STRENGTH: f64 = 123.1;

pub fn coulomb_value(xa: f64, xb: f64, c: &CoulombParams) -> f64 {
    let r = xa - xb;
    c.strength / (r * r + c.cutoff * c.cutoff).sqrt()
}
