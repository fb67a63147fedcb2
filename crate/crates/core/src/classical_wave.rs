//! d'Alembert reference solution of `u_tt = c²u_xx`, and the cone-leak
//! contrast between it and the nonlocal model.

use serde::Serialize;

use crate::data::{GaussianPulse, InitialDataSpec};
use crate::dispersion::DispersionProfile;
use crate::error::{Error, Result};
use crate::evolution::{evolve_point, PointOptions};

/// Value level below which a pulse is cut off to give compact support.
pub const CUTOFF_LEVEL: f64 = 1e-300;

fn cutoff_radius(p: &GaussianPulse) -> f64 {
    p.radius(CUTOFF_LEVEL)
}

fn truncated(p: &GaussianPulse, x: f64) -> f64 {
    if (x - p.center).abs() > cutoff_radius(p) {
        0.0
    } else {
        p.eval(x)
    }
}

fn truncated_derivative(p: &GaussianPulse, x: f64) -> f64 {
    if (x - p.center).abs() > cutoff_radius(p) {
        0.0
    } else {
        p.derivative(x, 1)
    }
}

fn truncated_antiderivative(p: &GaussianPulse, x: f64) -> f64 {
    let r = cutoff_radius(p);
    p.antiderivative(x.clamp(p.center - r, p.center + r))
}

/// Exact solution of the classical wave equation for pulse data, with every
/// pulse cut off where it drops below [`CUTOFF_LEVEL`] of its amplitude.
#[derive(Debug, Clone)]
pub struct DalembertSolution {
    pub c: f64,
    pub data: InitialDataSpec,
}

impl DalembertSolution {
    pub fn new(c: f64, data: InitialDataSpec) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidInput(format!("wave speed must be positive, got {c}")));
        }
        Ok(Self { c, data })
    }

    fn u0(&self, x: f64) -> f64 {
        self.data.u_terms.iter().map(|p| truncated(p, x)).sum()
    }

    fn u0_x(&self, x: f64) -> f64 {
        self.data.u_terms.iter().map(|p| truncated_derivative(p, x)).sum()
    }

    fn v0(&self, x: f64) -> f64 {
        self.data.ut_terms.iter().map(|p| truncated(p, x)).sum()
    }

    fn v0_integral(&self, x: f64) -> f64 {
        self.data.ut_terms.iter().map(|p| truncated_antiderivative(p, x)).sum()
    }

    /// `(u, ∂ₜu)` at `(t, x)`.
    pub fn eval(&self, t: f64, x: f64) -> (f64, f64) {
        let (a, b) = (x + self.c * t, x - self.c * t);
        let u = 0.5 * (self.u0(a) + self.u0(b)) + (self.v0_integral(a) - self.v0_integral(b)) / (2.0 * self.c);
        let ut = 0.5 * self.c * (self.u0_x(a) - self.u0_x(b)) + 0.5 * (self.v0(a) + self.v0(b));
        (u, ut)
    }

    pub fn u_x(&self, t: f64, x: f64) -> f64 {
        let (a, b) = (x + self.c * t, x - self.c * t);
        0.5 * (self.u0_x(a) + self.u0_x(b)) + (self.v0(a) - self.v0(b)) / (2.0 * self.c)
    }

    /// `|∂ₜu|² + c²|∂ₓu|²`.
    pub fn energy_density(&self, t: f64, x: f64) -> f64 {
        let (_, ut) = self.eval(t, x);
        let ux = self.u_x(t, x);
        ut * ut + self.c * self.c * ux * ux
    }

    /// Interval outside which the (cut-off) data vanish identically.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.data
            .u_terms
            .iter()
            .chain(&self.data.ut_terms)
            .filter(|p| p.amplitude != 0.0)
            .map(|p| (p.center - cutoff_radius(p), p.center + cutoff_radius(p)))
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    /// A time after which the energy density along `x₀ + vt` (`|v| ≠ c`)
    /// stays below `level` times the peak of the initial energy density.
    pub fn quiet_time(&self, v: f64, x0: f64, level: f64) -> Result<f64> {
        let gaps = [(v - self.c).abs(), (v + self.c).abs()];
        if gaps.contains(&0.0) {
            return Err(Error::InvalidInput("ray speed equals the wave speed".into()));
        }
        let reach = (-level.ln()).max(0.0).sqrt() + 2.0;
        let gap = gaps[0].min(gaps[1]);
        Ok(self
            .data
            .u_terms
            .iter()
            .chain(&self.data.ut_terms)
            .filter(|p| p.amplitude != 0.0)
            .map(|p| ((x0 - p.center).abs() + reach * p.width) / gap)
            .fold(0.0, f64::max))
    }
}

/// Field magnitudes outside the acoustic cone.
#[derive(Debug, Clone, Serialize)]
pub struct ConeLeak {
    pub t: f64,
    /// `max |u|` of the classical solution over the sampled exterior.
    pub classical: f64,
    /// `|u|` of the nonlocal solution at the probe.
    pub nonlocal: f64,
    /// Quadrature error estimate of the nonlocal value.
    pub nonlocal_error: f64,
    pub probe: f64,
    /// `max |u(0, ·)|`.
    pub peak: f64,
}

/// Compares both models outside `[support − ct, support + ct]`: the
/// classical field is sampled on `samples` points per side across `width`,
/// the nonlocal one is evaluated at `offset` beyond the right edge.
pub fn cone_leak(
    profile: &DispersionProfile,
    data: &InitialDataSpec,
    t: f64,
    offset: f64,
    width: f64,
    samples: usize,
    opts: &PointOptions,
) -> Result<ConeLeak> {
    let sol = DalembertSolution::new(profile.c, data.clone())?;
    let (lo, hi) = sol
        .support()
        .ok_or_else(|| Error::InvalidInput("cone leak needs non-zero data".into()))?;
    let reach = profile.c * t.abs();
    let (left, right) = (lo - reach, hi + reach);
    let n = samples.max(2);
    let mut classical: f64 = 0.0;
    for i in 0..n {
        let d = 1e-12 + width * i as f64 / (n - 1) as f64;
        classical = classical
            .max(sol.eval(t, right + d).0.abs())
            .max(sol.eval(t, left - d).0.abs());
    }
    let probe = right + offset;
    let point = evolve_point(profile, data, t, probe, opts)?;
    let peak = {
        let m = 4001;
        (0..m)
            .map(|i| sol.eval(0.0, lo + (hi - lo) * i as f64 / (m - 1) as f64).0.abs())
            .fold(0.0, f64::max)
    };
    Ok(ConeLeak {
        t,
        classical,
        nonlocal: point.u.abs(),
        nonlocal_error: point.errors[0],
        probe,
        peak,
    })
}
