//! Initial data built from Gaussian pulses, with closed-form derivatives,
//! antiderivatives and Fourier transforms.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `a·exp(−((x − x₀)/s)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianPulse {
    pub fn new(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidInput(format!(
                "pulse width must be positive, got {width}"
            )));
        }
        if !amplitude.is_finite() || !center.is_finite() {
            return Err(Error::InvalidInput("pulse amplitude and center must be finite".into()));
        }
        Ok(Self {
            amplitude,
            center,
            width,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = (x - self.center) / self.width;
        self.amplitude * (-y * y).exp()
    }

    /// `k`-th spatial derivative, `(−1)ᵏ a Hₖ(y) e^{−y²} / sᵏ` with physicists' Hermite `Hₖ`.
    pub fn derivative(&self, x: f64, k: u32) -> f64 {
        let y = (x - self.center) / self.width;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * self.amplitude * hermite(k, y) * (-y * y).exp() / self.width.powi(k as i32)
    }

    /// Antiderivative vanishing at the pulse center.
    pub fn antiderivative(&self, x: f64) -> f64 {
        0.5 * self.amplitude * self.width * PI.sqrt() * libm::erf((x - self.center) / self.width)
    }

    /// `∫ g(x) e(−ξx) dx = a s √π e^{−π²s²ξ²} e(−ξx₀)`.
    pub fn fourier(&self, xi: f64) -> Complex64 {
        let s = self.width;
        let mag = self.amplitude * s * PI.sqrt() * (-(PI * s * xi).powi(2)).exp();
        Complex64::from_polar(mag, -2.0 * PI * xi * self.center)
    }

    /// Distance from the center beyond which `|g| < level·|a|`.
    pub fn radius(&self, level: f64) -> f64 {
        self.width * (-level.ln()).max(0.0).sqrt()
    }

    /// Frequency beyond which `|Fg| < level·|Fg(0)|`.
    pub fn frequency_radius(&self, level: f64) -> f64 {
        (-level.ln()).max(0.0).sqrt() / (PI * self.width)
    }
}

/// Physicists' Hermite polynomial by the three-term recurrence.
pub fn hermite(k: u32, y: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * y);
    if k == 0 {
        return h0;
    }
    for n in 1..k {
        let h2 = 2.0 * y * h1 - 2.0 * n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Initial displacement `u(0)` and velocity `∂ₜu(0)` as sums of pulses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub u_terms: Vec<GaussianPulse>,
    pub ut_terms: Vec<GaussianPulse>,
}

impl InitialDataSpec {
    pub fn new(u_terms: Vec<GaussianPulse>, ut_terms: Vec<GaussianPulse>) -> Self {
        Self { u_terms, ut_terms }
    }

    pub fn displacement(pulse: GaussianPulse) -> Self {
        Self::new(vec![pulse], Vec::new())
    }

    pub fn velocity(pulse: GaussianPulse) -> Self {
        Self::new(Vec::new(), vec![pulse])
    }

    pub fn is_zero(&self) -> bool {
        self.terms().all(|p| p.amplitude == 0.0)
    }

    fn terms(&self) -> impl Iterator<Item = &GaussianPulse> {
        self.u_terms.iter().chain(&self.ut_terms)
    }

    pub fn u(&self, x: f64) -> f64 {
        self.u_terms.iter().map(|p| p.eval(x)).sum()
    }

    pub fn ut(&self, x: f64) -> f64 {
        self.ut_terms.iter().map(|p| p.eval(x)).sum()
    }

    pub fn u_derivative(&self, x: f64, k: u32) -> f64 {
        self.u_terms.iter().map(|p| p.derivative(x, k)).sum()
    }

    pub fn ut_derivative(&self, x: f64, k: u32) -> f64 {
        self.ut_terms.iter().map(|p| p.derivative(x, k)).sum()
    }

    pub fn ut_antiderivative(&self, x: f64) -> f64 {
        self.ut_terms.iter().map(|p| p.antiderivative(x)).sum()
    }

    pub fn fourier_u(&self, xi: f64) -> Complex64 {
        self.u_terms.iter().map(|p| p.fourier(xi)).sum()
    }

    pub fn fourier_ut(&self, xi: f64) -> Complex64 {
        self.ut_terms.iter().map(|p| p.fourier(xi)).sum()
    }

    /// Interval outside which every pulse is below `level` of its amplitude.
    pub fn extent(&self, level: f64) -> Option<(f64, f64)> {
        self.terms()
            .filter(|p| p.amplitude != 0.0)
            .map(|p| (p.center - p.radius(level), p.center + p.radius(level)))
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    /// Frequency beyond which every transform is below `level` of its peak.
    pub fn frequency_extent(&self, level: f64) -> f64 {
        self.terms()
            .filter(|p| p.amplitude != 0.0)
            .map(|p| p.frequency_radius(level))
            .fold(0.0, f64::max)
    }

    /// Largest pulse width (the natural length scale of the data).
    pub fn max_width(&self) -> f64 {
        self.terms().map(|p| p.width).fold(0.0, f64::max)
    }

    /// `∫|Fu|` and `∫|F∂ₜu|` bounds, used to scale absolute tolerances.
    pub fn spectral_l1(&self) -> (f64, f64) {
        // ∫|a s√π e^{−π²s²ξ²}| dξ = |a|
        let sum = |ts: &[GaussianPulse]| ts.iter().map(|p| p.amplitude.abs()).sum::<f64>();
        (sum(&self.u_terms), sum(&self.ut_terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 0.7), 1.0);
        assert_eq!(hermite(1, 0.7), 1.4);
        assert!((hermite(2, 0.7) - (4.0 * 0.49 - 2.0)).abs() < 1e-15);
        assert!((hermite(4, 0.5) - (16.0 * 0.0625 - 48.0 * 0.25 + 12.0)).abs() < 1e-13);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = GaussianPulse::new(1.3, 0.4, 0.8).unwrap();
        let h = 1e-5;
        for &x in &[-1.0, 0.1, 0.4, 1.7] {
            for k in 0..4 {
                let fd = (p.derivative(x + h, k) - p.derivative(x - h, k)) / (2.0 * h);
                assert!((fd - p.derivative(x, k + 1)).abs() < 1e-6, "k={k} x={x}");
            }
            let fd = (p.antiderivative(x + h) - p.antiderivative(x - h)) / (2.0 * h);
            assert!((fd - p.eval(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn fourier_matches_quadrature() {
        let p = GaussianPulse::new(0.9, 1.5, 0.6).unwrap();
        let opts = QuadOptions::abs(1e-13);
        for &xi in &[0.0, 0.3, 1.1] {
            let re = integrate(|x| p.eval(x) * (2.0 * PI * xi * x).cos(), -10.0, 13.0, &opts).unwrap();
            let im = integrate(|x| -p.eval(x) * (2.0 * PI * xi * x).sin(), -10.0, 13.0, &opts).unwrap();
            let f = p.fourier(xi);
            assert!((f.re - re.value).abs() < 1e-12 && (f.im - im.value).abs() < 1e-12);
        }
    }

    #[test]
    fn radii() {
        let p = GaussianPulse::new(2.0, 1.0, 0.5).unwrap();
        let r = p.radius(1e-10);
        assert!((p.eval(1.0 + r) / 2.0 - 1e-10).abs() < 1e-22);
        let k = p.frequency_radius(1e-8);
        assert!((p.fourier(k).norm() / p.fourier(0.0).norm() - 1e-8).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_width() {
        assert!(GaussianPulse::new(1.0, 0.0, 0.0).is_err());
        assert!(GaussianPulse::new(1.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn spec_sums_terms() {
        let d = InitialDataSpec::new(
            vec![
                GaussianPulse::new(1.0, -1.0, 1.0).unwrap(),
                GaussianPulse::new(0.5, 2.0, 0.5).unwrap(),
            ],
            vec![GaussianPulse::new(-2.0, 0.0, 2.0).unwrap()],
        );
        assert!((d.u(-1.0) - (1.0 + 0.5 * (-36.0f64).exp())).abs() < 1e-15);
        assert_eq!(d.ut(0.0), -2.0);
        let (lo, hi) = d.extent(1e-10).unwrap();
        assert!(lo < -9.0 && hi > 9.0);
        assert_eq!(d.spectral_l1(), (1.5, 2.0));
        assert!(InitialDataSpec::default().is_zero());
        assert!(InitialDataSpec::default().extent(1e-10).is_none());
    }
}
