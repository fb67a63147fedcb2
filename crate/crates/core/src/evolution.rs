//! Exact-in-time evolution of `u_tt = J⋆u − μ₀u`.
//!
//! Each Fourier mode evolves by `M(ω, t) = [[cos ωt, sin(ωt)/ω], [−ω sin ωt, cos ωt]]`
//! with `ω = 2πc|ψ(ξ)| = √φ(ξ)`. Equivalently the characteristic variables
//! `w± = ∂ₜu ± cDu` pick up the unimodular factors `e(±cψ(ξ)t)`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::data::InitialDataSpec;
use crate::dispersion::DispersionProfile;
use crate::error::{Error, Result};
use crate::nonlocal_operator::apply_d;
use crate::quadrature::{integrate_complex_many, QuadOptions};
use crate::spectral::{self, FieldState, Grid};

/// Relative level that delimits the data support on a grid.
pub const SUPPORT_LEVEL: f64 = 1e-10;
/// Periodization margin, in data widths.
pub const MARGIN_WIDTHS: f64 = 10.0;

/// `sin(y)/y`, continuous at 0.
pub fn sinc(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        let y2 = y * y;
        1.0 - y2 / 6.0 * (1.0 - y2 / 20.0)
    } else {
        y.sin() / y
    }
}

/// Half-width of the smallest interval holding every sample of `u` or `∂ₜu`
/// above [`SUPPORT_LEVEL`] of its own peak.
pub fn data_width(state: &FieldState) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for values in [&state.u, &state.ut] {
        let peak = spectral::max_abs(values);
        if peak == 0.0 {
            continue;
        }
        for (j, v) in values.iter().enumerate() {
            if v.abs() > SUPPORT_LEVEL * peak {
                lo = lo.min(state.grid.x(j));
                hi = hi.max(state.grid.x(j));
            }
        }
    }
    if lo > hi {
        0.0
    } else {
        0.5 * (hi - lo + state.grid.dx)
    }
}

/// Smallest admissible period for evolving `state` to time `t`.
pub fn required_period(profile: &DispersionProfile, state: &FieldState, t: f64) -> f64 {
    let w = data_width(state);
    2.0 * (profile.c * t.abs() + w + MARGIN_WIDTHS * w)
}

fn audit(profile: &DispersionProfile, state: &FieldState, t: f64) -> Result<()> {
    let required = required_period(profile, state, t);
    let actual = state.grid.period();
    if actual < required {
        return Err(Error::DomainTooSmall { required, actual });
    }
    Ok(())
}

fn real_parts(values: Vec<Complex64>) -> Vec<f64> {
    values.into_iter().map(|z| z.re).collect()
}

/// Evolves a gridded state to time `t` with the matrix form.
pub fn evolve_grid(profile: &DispersionProfile, state0: &FieldState, t: f64) -> Result<FieldState> {
    audit(profile, state0, t)?;
    if t == 0.0 {
        return Ok(state0.clone());
    }
    let grid = state0.grid;
    let fu = spectral::forward(&state0.u);
    let fut = spectral::forward(&state0.ut);
    let mut gu = vec![Complex64::new(0.0, 0.0); grid.n];
    let mut gut = gu.clone();
    for k in 0..grid.n {
        let omega = 2.0 * PI * profile.c * profile.psi(grid.frequency(k)).abs();
        let theta = omega * t;
        let (s, c) = theta.sin_cos();
        gu[k] = fu[k] * c + fut[k] * (t * sinc(theta));
        gut[k] = fu[k] * (-omega * s) + fut[k] * c;
    }
    Ok(FieldState {
        grid,
        u: real_parts(spectral::inverse(gu)),
        ut: real_parts(spectral::inverse(gut)),
    })
}

/// Output of the characteristic evolution.
#[derive(Debug, Clone)]
pub struct Characteristic {
    /// `u` (from the matrix row) and `∂ₜu = p`.
    pub state: FieldState,
    /// `q = cDu`.
    pub q: Vec<f64>,
    /// DFT coefficients of `w±` at the final time.
    pub w_plus: Vec<Complex64>,
    pub w_minus: Vec<Complex64>,
}

/// Spectral coefficients of `w± = p ± q` for a state.
pub fn characteristic_spectra(profile: &DispersionProfile, state: &FieldState) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = state.grid;
    let fu = spectral::forward(&state.u);
    let fp = spectral::forward(&state.ut);
    let nyq = grid.n / 2;
    let mut plus = Vec::with_capacity(grid.n);
    let mut minus = Vec::with_capacity(grid.n);
    for k in 0..grid.n {
        // D's symbol is odd, so its symmetrised Nyquist value is 0.
        let s = if k == nyq {
            0.0
        } else {
            2.0 * PI * profile.c * profile.psi(grid.frequency(k))
        };
        let fq = fu[k] * Complex64::new(0.0, s);
        plus.push(fp[k] + fq);
        minus.push(fp[k] - fq);
    }
    (plus, minus)
}

/// Evolves `(p, q) = (∂ₜu, cDu)` through `w±`; `u` uses the matrix row,
/// which stays regular at `ξ = 0`.
pub fn evolve_characteristic(profile: &DispersionProfile, state0: &FieldState, t: f64) -> Result<Characteristic> {
    audit(profile, state0, t)?;
    let grid = state0.grid;
    let (mut wp, mut wm) = characteristic_spectra(profile, state0);
    let fu = spectral::forward(&state0.u);
    let fut = spectral::forward(&state0.ut);
    let mut gu = vec![Complex64::new(0.0, 0.0); grid.n];
    let mut fpt = gu.clone();
    let mut fqt = gu.clone();
    for k in 0..grid.n {
        let s = profile.psi(grid.frequency(k));
        let theta = 2.0 * PI * profile.c * s * t;
        let rot = Complex64::from_polar(1.0, theta);
        wp[k] *= rot;
        wm[k] *= rot.conj();
        fpt[k] = 0.5 * (wp[k] + wm[k]);
        fqt[k] = 0.5 * (wp[k] - wm[k]);
        let omega_t = theta.abs();
        gu[k] = fu[k] * omega_t.cos() + fut[k] * (t * sinc(omega_t));
    }
    let state = FieldState {
        grid,
        u: real_parts(spectral::inverse(gu)),
        ut: real_parts(spectral::inverse(fpt)),
    };
    Ok(Characteristic {
        state,
        q: real_parts(spectral::inverse(fqt)),
        w_plus: wp,
        w_minus: wm,
    })
}

/// `Σ(p² + q²)·dx` with `p = ∂ₜu`, `q = cDu` (plain ℓ² grid sum).
pub fn total_energy(profile: &DispersionProfile, state: &FieldState) -> Result<f64> {
    let du = apply_d(profile, &state.grid, &state.u)?.values;
    let c2 = profile.c * profile.c;
    let sum: f64 = state.ut.iter().zip(&du).map(|(p, d)| p * p + c2 * d * d).sum();
    Ok(sum * state.grid.dx)
}

/// Pointwise values from [`evolve_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub u: f64,
    pub p: f64,
    pub q: f64,
    /// Error estimates for `u`, `p`, `q`.
    pub errors: [f64; 3],
}

impl PointValue {
    /// `|∂ₜu|² + c²|Du|²`.
    pub fn energy_density(&self) -> f64 {
        self.p * self.p + self.q * self.q
    }

    /// Energy density attributable to quadrature error alone.
    pub fn energy_noise(&self) -> f64 {
        let [_, ep, eq] = self.errors;
        ep * ep + eq * eq + 2.0 * (self.p.abs() * ep + self.q.abs() * eq)
    }
}

/// Tolerances for grid-free evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointOptions {
    /// Absolute tolerance relative to the spectral L¹ size of the data.
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for PointOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            max_panels: 1 << 16,
        }
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Frequencies in `(0, top)` where a phase `ξ(x − x_k) ± cψ(ξ)t` is stationary.
fn stationary_points(profile: &DispersionProfile, data: &InitialDataSpec, t: f64, x: f64, top: f64) -> Vec<f64> {
    if t == 0.0 {
        return Vec::new();
    }
    let mut ratios: Vec<f64> = data
        .u_terms
        .iter()
        .chain(&data.ut_terms)
        .flat_map(|p| {
            let r = (x - p.center) / (profile.c * t);
            [r, -r]
        })
        .filter(|r| r.abs() <= 1.0)
        .collect();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    if ratios.is_empty() {
        return Vec::new();
    }
    const SCAN: usize = 512;
    let xs: Vec<f64> = (0..=SCAN).map(|i| top * i as f64 / SCAN as f64).collect();
    let dpsi: Vec<f64> = xs.iter().map(|&xi| profile.psi_prime(xi)).collect();
    let mut out = Vec::new();
    for r in ratios {
        for i in 0..SCAN {
            let (a, b) = (dpsi[i] - r, dpsi[i + 1] - r);
            if a == 0.0 && i > 0 {
                out.push(xs[i]);
            } else if a * b < 0.0 {
                out.push(bisect(|xi| profile.psi_prime(xi) - r, xs[i], xs[i + 1]));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// `(u, ∂ₜu, cDu)` at one space-time point, grid-free:
/// `2 Re ∫₀^∞ e(ξx)(...) dξ` over the closed-form data transforms, split at
/// stationary points and refined by panel doubling.
pub fn evolve_point(
    profile: &DispersionProfile,
    data: &InitialDataSpec,
    t: f64,
    x: f64,
    opts: &PointOptions,
) -> Result<PointValue> {
    if !(t.is_finite() && x.is_finite()) {
        return Err(Error::InvalidInput(format!("point ({t}, {x}) is not finite")));
    }
    if data.is_zero() {
        return Ok(PointValue {
            u: 0.0,
            p: 0.0,
            q: 0.0,
            errors: [0.0; 3],
        });
    }
    let top = data.frequency_extent(1e-20);
    let (su, sut) = data.spectral_l1();
    let scale = su * (1.0 + profile.mu0.sqrt()) + sut * (1.0 + t.abs());
    let quad = QuadOptions {
        atol: opts.rel_tol * scale,
        rtol: 0.0,
        limit: opts.max_panels,
    };
    let reach = data
        .u_terms
        .iter()
        .chain(&data.ut_terms)
        .map(|p| (x - p.center).abs())
        .fold(0.0, f64::max)
        + profile.c * t.abs();

    let mut points = vec![0.0];
    points.extend(stationary_points(profile, data, t, x, top));
    points.push(top);

    let integrand = |xi: f64| -> [Complex64; 3] {
        let fu = data.fourier_u(xi);
        let fut = data.fourier_ut(xi);
        let e = Complex64::from_polar(1.0, 2.0 * PI * xi * x);
        let omega = 2.0 * PI * profile.c * profile.psi(xi);
        let theta = omega * t;
        let (s, c) = theta.sin_cos();
        let i = Complex64::new(0.0, 1.0);
        [
            e * (fu * c + fut * (t * sinc(theta))),
            e * (fut * c - fu * (omega * s)),
            e * i * (fut * s + fu * (omega * c)),
        ]
    };

    let mut values = [0.0; 3];
    let mut errors = [0.0; 3];
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let panels = ((b - a) * reach * 0.5).ceil() as usize + 1;
        let qs = integrate_complex_many(integrand, a, b, panels, &quad)?;
        for k in 0..3 {
            values[k] += 2.0 * qs[k].value.re;
            errors[k] += 2.0 * qs[k].error;
        }
    }
    Ok(PointValue {
        u: values[0],
        p: values[1],
        q: values[2],
        errors,
    })
}

/// Samples a point evaluation on every node of `grid` (used for cross-checks).
pub fn evolve_point_on_grid(
    profile: &DispersionProfile,
    data: &InitialDataSpec,
    t: f64,
    grid: &Grid,
    indices: &[usize],
    opts: &PointOptions,
) -> Result<Vec<PointValue>> {
    indices
        .iter()
        .map(|&j| evolve_point(profile, data, t, grid.x(j), opts))
        .collect()
}
