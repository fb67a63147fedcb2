//! Regularised fundamental-solution kernels
//! `b_j(t,z) = ∫ α(ξ)⁻¹ cos(2πξz) ω(ξ)^j θ_j(ω(ξ)t) dξ`, `α = 1 + 4π²Aξ²`,
//! `ω = 2πcψ`, and the convolution representation of the solution
//! `∂ₜʲ∂ₓᵏu(t) = b_j(t)⋆L∂ᵏu(0) + b_{j−1}(t)⋆L∂ᵏ∂ₜu(0)` with `L = 1 − A∂²`.
//!
//! Because `ω → ω_∞ = √μ₀`, the integrand tends to `g_∞α⁻¹cos(2πξz)`, whose
//! transform is the Lorentzian `g_∞ e^{−|z|/√A}/(2√A)`. That part (with its
//! kink at `z = 0`) is taken in closed form and only the decaying remainder
//! is integrated numerically.

use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{GaussianPulse, InitialDataSpec};
use crate::dispersion::DispersionProfile;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_cosine_tail, integrate_with_breaks, QuadOptions};
use crate::ray_probe::{fit_power_law, PowerFit};

/// `θ_j(ζ) = cos(ζ + jπ/2)`, so that `θ_{j−1}′ = θ_j`.
pub fn theta(j: i32, zeta: f64) -> f64 {
    match j.rem_euclid(4) {
        0 => zeta.cos(),
        1 => -zeta.sin(),
        2 => -zeta.cos(),
        _ => zeta.sin(),
    }
}

/// A kernel value with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BValue {
    pub value: f64,
    pub error: f64,
}

/// Evaluator for `b_j` at a fixed regularisation strength `A`.
#[derive(Debug, Clone)]
pub struct KernelB<'a> {
    profile: &'a DispersionProfile,
    a: f64,
    cut: f64,
    atol: f64,
}

impl<'a> KernelB<'a> {
    pub fn new(profile: &'a DispersionProfile, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidInput(format!(
                "regularisation A must be positive, got {a}"
            )));
        }
        let kernel = profile.kernel();
        let cut = kernel
            .riemann_lebesgue_frequency()
            .map_or(8.0 * profile.xi_star, |x| 3.0 * x)
            .min(kernel.band_limit());
        Ok(Self {
            profile,
            a,
            cut,
            atol: 1e-13,
        })
    }

    /// Absolute tolerance for each kernel value (default `1e-13`).
    pub fn with_tolerance(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    pub fn regularisation(&self) -> f64 {
        self.a
    }

    pub fn profile(&self) -> &DispersionProfile {
        self.profile
    }

    pub fn alpha(&self, xi: f64) -> f64 {
        1.0 + 4.0 * PI * PI * self.a * xi * xi
    }

    /// `e^{−|z|/√A}/(2√A)`, the Green's function of `L`.
    pub fn green(&self, z: f64) -> f64 {
        let r = self.a.sqrt();
        (-z.abs() / r).exp() / (2.0 * r)
    }

    fn omega(&self, xi: f64) -> f64 {
        2.0 * PI * self.profile.c * self.profile.psi(xi).abs()
    }

    fn omega_inf(&self) -> f64 {
        self.profile.mu0.sqrt()
    }

    /// High-frequency limit of the `ξ`-integrand without `α⁻¹cos(2πξz)`.
    pub fn asymptotic_weight(&self, j: i32, t: f64) -> f64 {
        let w = self.omega_inf();
        if j == -1 {
            (w * t).sin() / w
        } else {
            w.powi(j) * theta(j, w * t)
        }
    }

    fn check_index(j: i32) -> Result<()> {
        if (-1..=2).contains(&j) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("kernel index must be in -1..=2, got {j}")))
        }
    }

    /// `b_j(t, z)`. For `j = −1` the remainder is the time integral of the
    /// `b₀` remainder, using `∂ₜb₋₁ = b₀` and `b₋₁(0, ·) = 0`.
    pub fn eval(&self, j: i32, t: f64, z: f64) -> Result<BValue> {
        Self::check_index(j)?;
        if !(t.is_finite() && z.is_finite()) {
            return Err(Error::InvalidInput(format!("kernel argument ({t}, {z}) is not finite")));
        }
        let rest = if j == -1 {
            self.time_integrated_remainder(t, z)?
        } else {
            self.remainder(
                |xi| {
                    let w = self.omega(xi);
                    w.powi(j) * theta(j, w * t)
                },
                self.asymptotic_weight(j, t),
                t,
                z,
            )?
        };
        Ok(BValue {
            value: self.asymptotic_weight(j, t) * self.green(z) + rest.value,
            error: rest.error,
        })
    }

    /// `2∫₀^∞ α⁻¹cos(2πξz)(m(ξ) − m_∞)dξ`.
    fn remainder<M: Fn(f64) -> f64>(&self, m: M, m_inf: f64, t: f64, z: f64) -> Result<BValue> {
        let h = |xi: f64| (m(xi) - m_inf) / self.alpha(xi);
        let rate = z.abs() + self.profile.c * t.abs() + 1.0;
        let segments = ((self.cut * rate).ceil() as usize).clamp(1, 4096);
        let points: Vec<f64> = (0..=segments).map(|i| self.cut * i as f64 / segments as f64).collect();
        let opts = QuadOptions {
            atol: 0.25 * self.atol,
            rtol: 0.0,
            limit: 20_000,
        };
        let head = integrate_with_breaks(|xi| h(xi) * (2.0 * PI * xi * z).cos(), &points, &opts)?;
        let tail = integrate_cosine_tail(h, self.cut, z, &opts)?;
        Ok(BValue {
            value: 2.0 * (head.value + tail.value),
            error: 2.0 * (head.error + tail.error),
        })
    }

    fn time_integrated_remainder(&self, t: f64, z: f64) -> Result<BValue> {
        if t == 0.0 {
            return Ok(BValue { value: 0.0, error: 0.0 });
        }
        let inner = self.clone().with_tolerance(self.atol / (1.0 + t.abs()) * 0.1);
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let worst = RefCell::new(0.0f64);
        let opts = QuadOptions {
            atol: 0.5 * self.atol,
            rtol: 0.0,
            limit: 2000,
        };
        let q = integrate(
            |s| {
                let w_inf = inner.omega_inf();
                match inner.remainder(|xi| (inner.omega(xi) * s).cos(), (w_inf * s).cos(), s, z) {
                    Ok(v) => {
                        let mut w = worst.borrow_mut();
                        *w = w.max(v.error);
                        v.value
                    }
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            },
            0.0,
            t,
            &opts,
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(BValue {
            value: q.value,
            error: q.error + t.abs() * worst.into_inner(),
        })
    }

    /// `C_j ≥ sup_z |b_j(t, z)|`: `ω ≤ √(2μ₀)` and `∫α⁻¹ = 1/(2√A)`;
    /// for `j = −1`, `|sin(ωt)/ω| ≤ |t|`.
    pub fn trivial_bound(&self, j: i32, t: f64) -> f64 {
        let base = 1.0 / (2.0 * self.a.sqrt());
        if j == -1 {
            t.abs() * base
        } else {
            (2.0 * self.profile.mu0).sqrt().powi(j) * base
        }
    }
}

/// `b_j(t, z)` with the default tolerance.
pub fn eval_b(profile: &DispersionProfile, j: i32, a: f64, t: f64, z: f64) -> Result<f64> {
    KernelB::new(profile, a)?.eval(j, t, z).map(|b| b.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailStatus {
    Pass,
    Fail,
    /// Too few samples above the noise floor to fit.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailSample {
    pub z: f64,
    /// `|z| − c|t|`.
    pub distance: f64,
    pub b: f64,
    pub floor: f64,
    pub valid: bool,
    /// `d ln|b| / d ln(distance)` from neighbouring samples.
    pub local_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub declared_order: f64,
    pub samples: Vec<TailSample>,
    pub fit: Option<PowerFit>,
    pub status: TailStatus,
}

/// Minimum valid samples for a tail fit.
pub const MIN_TAIL_SAMPLES: usize = 3;

/// Fits `ln|b|` against `ln(distance)` over samples above their noise floor
/// and passes when the slope is at most `−order`.
pub fn classify_tail(mut samples: Vec<TailSample>, order: f64) -> TailReport {
    for i in 0..samples.len() {
        let neighbours = [i.checked_sub(1), Some(i + 1).filter(|&k| k < samples.len())];
        let (lo, hi) = match neighbours {
            [Some(a), Some(b)] => (a, b),
            [None, Some(b)] => (i, b),
            [Some(a), None] => (a, i),
            [None, None] => continue,
        };
        let (s0, s1) = (&samples[lo], &samples[hi]);
        samples[i].local_slope = (s0.valid && s1.valid && s1.distance != s0.distance)
            .then(|| (s1.b.abs().ln() - s0.b.abs().ln()) / (s1.distance.ln() - s0.distance.ln()));
    }
    let (ds, bs): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|s| s.valid)
        .map(|s| (s.distance, s.b.abs()))
        .unzip();
    let fit = (ds.len() >= MIN_TAIL_SAMPLES)
        .then(|| fit_power_law(&ds, &bs).ok())
        .flatten();
    let status = match &fit {
        None => TailStatus::Inconclusive,
        Some(f) if f.slope <= -order => TailStatus::Pass,
        Some(_) => TailStatus::Fail,
    };
    TailReport {
        declared_order: order,
        samples,
        fit,
        status,
    }
}

/// Off-cone decay of `b_j(t, ·)` over `zs`; each must satisfy `|z| − c|t| ≥ 1`.
pub fn tail_check(kb: &KernelB, j: i32, t: f64, zs: &[f64], order: f64) -> Result<TailReport> {
    let c = kb.profile().c;
    if let Some(z) = zs.iter().find(|z| z.abs() - c * t.abs() < 1.0) {
        return Err(Error::Precondition(format!(
            "z = {z} lies within one unit of the cone |z| = c|t| = {}",
            c * t.abs()
        )));
    }
    let samples = zs
        .par_iter()
        .map(|&z| {
            let b = kb.eval(j, t, z)?;
            let floor = 10.0 * b.error.max(kb.atol);
            Ok(TailSample {
                z,
                distance: z.abs() - c * t.abs(),
                b: b.value,
                floor,
                valid: b.value.abs() > floor,
                local_slope: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(classify_tail(samples, order))
}

/// `L∂ᵏg = ∂ᵏg − A∂^{k+2}g` for one pulse.
fn l_derivative(p: &GaussianPulse, a: f64, k: u32, y: f64) -> f64 {
    p.derivative(y, k) - a * p.derivative(y, k + 2)
}

/// `∂ₜʲ∂ₓᵏu(t, x)` from the convolution representation, `j ∈ {0, 1}`, `k ≤ 2`.
pub fn solve_via_kernels(kb: &KernelB, data: &InitialDataSpec, t: f64, x: f64, j: i32, k: u32) -> Result<BValue> {
    if !(0..=1).contains(&j) || k > 2 {
        return Err(Error::InvalidInput(format!(
            "need j in 0..=1 and k <= 2, got j={j}, k={k}"
        )));
    }
    let mut value = 0.0;
    let mut error = 0.0;
    let groups = [(&data.u_terms, j), (&data.ut_terms, j - 1)];
    for (terms, index) in groups {
        for p in terms.iter().filter(|p| p.amplitude != 0.0) {
            let r = 10.0 * p.width;
            let mut points = vec![p.center - r];
            if (x - p.center).abs() < r {
                points.push(x);
            }
            points.push(p.center + r);
            let failure: RefCell<Option<Error>> = RefCell::new(None);
            let worst = RefCell::new(0.0f64);
            let opts = QuadOptions {
                atol: 1e-10 * p.amplitude.abs(),
                rtol: 0.0,
                limit: 4000,
            };
            let q = integrate_with_breaks(
                |y| match kb.eval(index, t, x - y) {
                    Ok(b) => {
                        let mut w = worst.borrow_mut();
                        *w = w.max(b.error);
                        b.value * l_derivative(p, kb.a, k, y)
                    }
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                },
                &points,
                &opts,
            )?;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            value += q.value;
            error += q.error + worst.into_inner() * q.l1.max(1.0);
        }
    }
    Ok(BValue { value, error })
}
