//! The nonlocal derivative `D`, realised as the Fourier multiplier `2πiψ(ξ)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::data::GaussianPulse;
use crate::dispersion::DispersionProfile;
use crate::error::Result;
use crate::micromodulus::MicromodulusKernel;
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions};
use crate::spectral::{self, Grid};

/// Spectral tail level above which a field counts as under-resolved.
pub const RESOLUTION_LEVEL: f64 = 1e-10;

/// Result of applying a real-symbol multiplier on a grid.
#[derive(Debug, Clone)]
pub struct Applied {
    pub values: Vec<f64>,
    /// Upper-band spectral magnitude relative to the peak of the input.
    pub spectral_tail: f64,
    /// Largest discarded imaginary part relative to the output peak.
    pub imaginary_residue: f64,
    pub resolved: bool,
}

fn apply<M: Fn(f64) -> Complex64>(grid: &Grid, f: &[f64], m: M) -> Result<Applied> {
    if f.len() != grid.n {
        return Err(crate::Error::InvalidInput(format!(
            "field has {} samples, grid has {}",
            f.len(),
            grid.n
        )));
    }
    spectral::check_finite(f, "field")?;
    let mut spectrum = spectral::forward(f);
    let spectral_tail = spectral::spectral_tail(&spectrum);
    spectral::apply_multiplier(grid, &mut spectrum, m);
    let out = spectral::inverse(spectrum);
    let values: Vec<f64> = out.iter().map(|z| z.re).collect();
    let peak = spectral::max_abs(&values);
    let imag = out.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(Applied {
        values,
        spectral_tail,
        imaginary_residue: if peak > 0.0 { imag / peak } else { imag },
        resolved: spectral_tail <= RESOLUTION_LEVEL,
    })
}

/// `Df` for gridded `f`.
pub fn apply_d(profile: &DispersionProfile, grid: &Grid, f: &[f64]) -> Result<Applied> {
    apply(grid, f, |xi| Complex64::new(0.0, 2.0 * PI * profile.psi(xi)))
}

/// `D²f`, whose symbol `−4π²ψ²` equals `−φ/c²`.
pub fn apply_d2(profile: &DispersionProfile, grid: &Grid, f: &[f64]) -> Result<Applied> {
    apply(grid, f, |xi| {
        let s = 2.0 * PI * profile.psi(xi);
        Complex64::new(-s * s, 0.0)
    })
}

/// `(Dv)(x)` for a sum of Gaussian pulses, by quadrature of
/// `2 Re ∫₀^∞ 2πiψ(ξ)(Fv)(ξ)e(ξx) dξ` without any grid.
pub fn apply_d_at(profile: &DispersionProfile, pulses: &[GaussianPulse], x: f64, atol: f64) -> Result<f64> {
    let top = pulses.iter().map(|p| p.frequency_radius(1e-20)).fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0.0);
    }
    let opts = QuadOptions {
        atol: 0.5 * atol,
        rtol: 0.0,
        limit: 4000,
    };
    let q = integrate(
        |xi| {
            let fv: Complex64 = pulses.iter().map(|p| p.fourier(xi)).sum();
            let e = Complex64::from_polar(1.0, 2.0 * PI * xi * x);
            -2.0 * PI * profile.psi(xi) * (fv * e).im
        },
        0.0,
        top,
        &opts,
    )?;
    Ok(2.0 * q.value)
}

/// `(J⋆f)(x) − μ₀f(x) = ∫J(y)(f(x−y) − f(x))dy` by direct quadrature.
pub fn direct_convolution<F: Fn(f64) -> f64>(kernel: &MicromodulusKernel, f: F, x: f64, atol: f64) -> Result<f64> {
    let r = kernel.support_radius();
    let mut points = vec![-r];
    points.extend(kernel.kinks().into_iter().filter(|&k| k > -r && k < r));
    points.push(r);
    let opts = QuadOptions {
        atol,
        rtol: 0.0,
        limit: 4000,
    };
    let fx = f(x);
    Ok(integrate_with_breaks(|y| kernel.eval(y) * (f(x - y) - fx), &points, &opts)?.value)
}

/// Field for the weak scaling-limit pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestField {
    Gaussian(GaussianPulse),
    Constant(f64),
}

impl TestField {
    /// `‖v‖₂` (infinite for non-zero constants).
    pub fn l2_norm(&self) -> f64 {
        match self {
            TestField::Gaussian(p) => (p.amplitude * p.amplitude * p.width * (0.5 * PI).sqrt()).sqrt(),
            TestField::Constant(c) if *c == 0.0 => 0.0,
            TestField::Constant(_) => f64::INFINITY,
        }
    }

    /// `‖v′‖₂`.
    pub fn derivative_l2_norm(&self) -> f64 {
        match self {
            TestField::Gaussian(p) => (p.amplitude * p.amplitude * (0.5 * PI).sqrt() / p.width).sqrt(),
            TestField::Constant(_) => 0.0,
        }
    }
}

/// `|⟨h⁻¹S_h D S_{h⁻¹}v − v′, w⟩|`, through the symbol `2πi(h⁻¹ψ(hξ) − ξ)`.
pub fn scaling_residual(profile: &DispersionProfile, h: f64, v: &TestField, w: &TestField) -> Result<f64> {
    let (TestField::Gaussian(v), TestField::Gaussian(w)) = (v, w) else {
        // A constant has its transform at ξ = 0, where the symbol vanishes.
        return Ok(0.0);
    };
    let k = v.amplitude * v.width * w.amplitude * w.width * PI;
    let s2 = v.width * v.width + w.width * w.width;
    let shift = v.center - w.center;
    if k == 0.0 || shift == 0.0 {
        return Ok(0.0);
    }
    let top = (18.0 * 10f64.ln()).sqrt() / (PI * s2.sqrt());
    let opts = QuadOptions {
        atol: 1e-17 * k.abs(),
        rtol: 1e-10,
        limit: 4000,
    };
    let q = integrate(
        |xi| {
            let g = profile.psi(h * xi) / h - xi;
            2.0 * PI * g * (-PI * PI * s2 * xi * xi).exp() * (2.0 * PI * xi * shift).sin()
        },
        0.0,
        top,
        &opts,
    )?;
    Ok((2.0 * k * q.value).abs())
}

/// `min π·sign(ξ)·ψ(ξ)` over the given frequencies (the symbol of `−iHD`).
pub fn hd_positivity(profile: &DispersionProfile, frequencies: &[f64]) -> f64 {
    frequencies
        .par_iter()
        .map(|&xi| {
            let sign = if xi > 0.0 {
                1.0
            } else if xi < 0.0 {
                -1.0
            } else {
                0.0
            };
            PI * sign * profile.psi(xi)
        })
        .reduce(|| f64::INFINITY, f64::min)
}
