//! Micromodulus kernels `J`: non-negative, even, integrable interaction
//! weights together with their moments and cosine transforms.
//!
//! Fourier transforms use the `e(z) = exp(2πiz)` convention,
//! `(FJ)(ξ) = ∫ J(x) e(−ξx) dx`, which for even `J` is the cosine transform
//! `∫ J(x) cos(2πξx) dx`.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

/// Moment order certified for the closed-form families.
const BUILTIN_MAX_MOMENT: u32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `a · exp(−(x/σ)²)`
    Gaussian {
        width: f64,
        amplitude: f64,
    },
    /// `a · exp(−|x|/σ)`
    Exponential {
        width: f64,
        amplitude: f64,
    },
    /// `a · 1[|x| ≤ δ]`
    TopHat {
        half_width: f64,
        amplitude: f64,
    },
    Tabulated(KernelTable),
}

/// Samples `(x, J(x))` on a symmetric, strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    weights: Vec<f64>,
    max_moment_order: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicromodulusKernel {
    family: KernelFamily,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl MicromodulusKernel {
    pub fn gaussian(width: f64, amplitude: f64) -> Result<Self> {
        Ok(Self {
            family: KernelFamily::Gaussian {
                width: positive("kernel width", width)?,
                amplitude: positive("kernel amplitude", amplitude)?,
            },
        })
    }

    pub fn exponential(width: f64, amplitude: f64) -> Result<Self> {
        Ok(Self {
            family: KernelFamily::Exponential {
                width: positive("kernel width", width)?,
                amplitude: positive("kernel amplitude", amplitude)?,
            },
        })
    }

    pub fn top_hat(half_width: f64, amplitude: f64) -> Result<Self> {
        Ok(Self {
            family: KernelFamily::TopHat {
                half_width: positive("kernel half-width", half_width)?,
                amplitude: positive("kernel amplitude", amplitude)?,
            },
        })
    }

    /// Builds a tabulated kernel. Moments above order 2 are only certified
    /// when the caller declares a higher `max_moment_order`.
    ///
    /// Sign and evenness of the values are not enforced here; they are
    /// reported by [`MicromodulusKernel::validate`].
    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>, max_moment_order: Option<u32>) -> Result<Self> {
        let bad = |m: &str| Error::Table {
            path: "<memory>".into(),
            message: m.to_string(),
        };
        if xs.len() != values.len() {
            return Err(bad("x and J columns differ in length"));
        }
        if xs.len() < 3 {
            return Err(bad("need at least three samples"));
        }
        if xs.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(bad("non-finite sample"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("x must be strictly increasing"));
        }
        let scale = xs[xs.len() - 1].abs().max(xs[0].abs());
        let n = xs.len();
        for i in 0..n {
            if (xs[i] + xs[n - 1 - i]).abs() > 1e-9 * scale {
                return Err(bad("x grid must be symmetric about 0"));
            }
        }
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (xs[i + 1] - xs[i]);
            weights[i] += h;
            weights[i + 1] += h;
        }
        let order = max_moment_order.unwrap_or(2);
        if order < 2 {
            return Err(bad("max_moment_order must be at least 2"));
        }
        Ok(Self {
            family: KernelFamily::Tabulated(KernelTable {
                xs,
                values,
                weights,
                max_moment_order: order,
            }),
        })
    }

    /// Reads a two-column CSV `(x, J)` with a header row.
    pub fn from_csv(path: &Path, max_moment_order: Option<u32>) -> Result<Self> {
        let table_err = |message: String| Error::Table {
            path: path.display().to_string(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| table_err(e.to_string()))?;
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| table_err(e.to_string()))?;
            if record.len() != 2 {
                return Err(table_err(format!("row {}: expected 2 columns", line + 2)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| table_err(format!("row {}: cannot parse '{s}'", line + 2)))
            };
            xs.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        Self::tabulated(xs, values, max_moment_order).map_err(|e| match e {
            Error::Table { message, .. } => table_err(message),
            other => other,
        })
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            KernelFamily::Gaussian { .. } => "gaussian",
            KernelFamily::Exponential { .. } => "exponential",
            KernelFamily::TopHat { .. } => "tophat",
            KernelFamily::Tabulated(_) => "tabulated",
        }
    }

    pub fn has_analytic_transform(&self) -> bool {
        !matches!(self.family, KernelFamily::Tabulated(_))
    }

    pub fn max_moment_order(&self) -> u32 {
        match &self.family {
            KernelFamily::Tabulated(t) => t.max_moment_order,
            _ => BUILTIN_MAX_MOMENT,
        }
    }

    /// Characteristic length of the kernel.
    pub fn length_scale(&self) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { width, .. } | KernelFamily::Exponential { width, .. } => *width,
            KernelFamily::TopHat { half_width, .. } => *half_width,
            KernelFamily::Tabulated(t) => {
                let r = t.xs[t.xs.len() - 1];
                let m0 = t.trapezoid(|_| 1.0);
                let m2 = t.trapezoid(|x| x * x);
                if m0 > 0.0 && m2 > 0.0 {
                    (m2 / m0).sqrt()
                } else {
                    r
                }
            }
        }
    }

    /// Radius beyond which the kernel (weighted by `|x|^k` up to the
    /// certified order) is negligible at the 1e-14 level.
    pub fn support_radius(&self) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { width, .. } => 12.0 * width,
            KernelFamily::Exponential { width, .. } => 90.0 * width,
            KernelFamily::TopHat { half_width, .. } => *half_width,
            KernelFamily::Tabulated(t) => t.xs[t.xs.len() - 1],
        }
    }

    /// Points where the kernel is not smooth; used as quadrature breakpoints.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.family {
            KernelFamily::Gaussian { .. } => vec![],
            KernelFamily::Exponential { .. } => vec![0.0],
            KernelFamily::TopHat { half_width, .. } => vec![-half_width, *half_width],
            KernelFamily::Tabulated(t) => t.xs.clone(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { width, amplitude } => {
                let r = x / width;
                amplitude * (-r * r).exp()
            }
            KernelFamily::Exponential { width, amplitude } => amplitude * (-x.abs() / width).exp(),
            KernelFamily::TopHat { half_width, amplitude } => {
                if x.abs() <= *half_width {
                    *amplitude
                } else {
                    0.0
                }
            }
            KernelFamily::Tabulated(t) => t.interpolate(x),
        }
    }

    /// `μ_k = ∫ x^k J(x) dx`, or `ν_k = ∫ |x|^k J(x) dx` when `absolute`.
    ///
    /// Odd ordinary moments are returned as exactly zero. Closed forms are used
    /// for the built-in families, the trapezoid rule for tables.
    pub fn moment(&self, k: u32, absolute: bool) -> Result<f64> {
        self.check_order(k)?;
        if k % 2 == 1 && !absolute {
            return Ok(0.0);
        }
        let kf = k as f64;
        Ok(match &self.family {
            KernelFamily::Gaussian { width, amplitude } => {
                amplitude * width.powi(k as i32 + 1) * libm::tgamma(0.5 * (kf + 1.0))
            }
            KernelFamily::Exponential { width, amplitude } => {
                2.0 * amplitude * width.powi(k as i32 + 1) * libm::tgamma(kf + 1.0)
            }
            KernelFamily::TopHat { half_width, amplitude } => {
                2.0 * amplitude * half_width.powi(k as i32 + 1) / (kf + 1.0)
            }
            KernelFamily::Tabulated(t) => t.trapezoid(|x| x.abs().powi(k as i32)),
        })
    }

    /// The same moment by adaptive quadrature of the kernel itself.
    pub fn moment_by_quadrature(&self, k: u32, absolute: bool) -> Result<f64> {
        self.check_order(k)?;
        if k % 2 == 1 && !absolute {
            return Ok(0.0);
        }
        if let KernelFamily::Tabulated(t) = &self.family {
            return Ok(t.trapezoid(|x| x.abs().powi(k as i32)));
        }
        let opts = QuadOptions {
            atol: 1e-12,
            rtol: 1e-13,
            limit: 4000,
        };
        let half = integrate_with_breaks(|x| x.powi(k as i32) * self.eval(x), &self.half_line_breaks(), &opts)?;
        Ok(2.0 * half.value)
    }

    fn half_line_breaks(&self) -> Vec<f64> {
        let r = self.support_radius();
        let mut pts = vec![0.0];
        pts.extend(self.kinks().into_iter().filter(|&k| k > 0.0 && k < r));
        pts.push(r);
        pts
    }

    fn check_order(&self, k: u32) -> Result<()> {
        let max = self.max_moment_order();
        if k > max {
            Err(Error::MomentUnavailable { order: k, max })
        } else {
            Ok(())
        }
    }

    /// `(FJ)(ξ)`.
    pub fn fourier(&self, xi: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { width, amplitude } => {
                let b = PI * width * xi;
                amplitude * width * PI.sqrt() * (-b * b).exp()
            }
            KernelFamily::Exponential { width, amplitude } => {
                let q = (2.0 * PI * width * xi).powi(2);
                2.0 * amplitude * width / (1.0 + q)
            }
            KernelFamily::TopHat { half_width, amplitude } => {
                let y = 2.0 * PI * xi * half_width;
                2.0 * amplitude * half_width * sinc(y)
            }
            KernelFamily::Tabulated(t) => {
                if xi.abs() > t.band_limit() {
                    0.0
                } else {
                    t.trapezoid(|x| (2.0 * PI * xi * x).cos())
                }
            }
        }
    }

    /// `(FJ)(ξ)` by adaptive quadrature of the cosine transform, independent
    /// of the closed forms.
    pub fn fourier_by_quadrature(&self, xi: f64) -> Result<f64> {
        if let KernelFamily::Tabulated(_) = self.family {
            return Ok(self.fourier(xi));
        }
        let opts = QuadOptions {
            atol: 1e-13,
            rtol: 1e-13,
            limit: 20000,
        };
        let mut pts = self.half_line_breaks();
        // Resolve the oscillation with a few panels per period.
        let r = self.support_radius();
        let cycles = (2.0 * xi.abs() * r).ceil() as usize;
        if cycles > 1 {
            let mut extra: Vec<f64> = (1..cycles).map(|i| r * i as f64 / cycles as f64).collect();
            pts.append(&mut extra);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
        }
        let half = integrate_with_breaks(|x| self.eval(x) * (2.0 * PI * xi * x).cos(), &pts, &opts)?;
        Ok(2.0 * half.value)
    }

    /// `μ₀ − (FJ)(ξ) = ∫ J(x)·2 sin²(πξx) dx`, evaluated without cancellation
    /// near `ξ = 0`.
    pub fn fourier_deficit(&self, xi: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { width, amplitude } => {
                let b = PI * width * xi;
                -amplitude * width * PI.sqrt() * (-b * b).exp_m1()
            }
            KernelFamily::Exponential { width, amplitude } => {
                let q = (2.0 * PI * width * xi).powi(2);
                2.0 * amplitude * width * q / (1.0 + q)
            }
            KernelFamily::TopHat { half_width, amplitude } => {
                let y = 2.0 * PI * xi * half_width;
                2.0 * amplitude * half_width * one_minus_sinc(y)
            }
            KernelFamily::Tabulated(t) => {
                if xi.abs() > t.band_limit() {
                    t.trapezoid(|_| 1.0)
                } else {
                    t.trapezoid(|x| 2.0 * (PI * xi * x).sin().powi(2))
                }
            }
        }
    }

    /// First derivative of the deficit: `2π ∫ x J(x) sin(2πξx) dx`.
    pub fn fourier_deficit_d1(&self, xi: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { width, amplitude } => {
                let b = (PI * width).powi(2);
                amplitude * width * PI.sqrt() * 2.0 * b * xi * (-b * xi * xi).exp()
            }
            KernelFamily::Exponential { width, amplitude } => {
                let a = (2.0 * PI * width).powi(2);
                let q = a * xi * xi;
                2.0 * amplitude * width * 2.0 * a * xi / (1.0 + q).powi(2)
            }
            KernelFamily::TopHat { .. } => self.trig_moment_quadrature(1, xi),
            KernelFamily::Tabulated(t) => {
                if xi.abs() > t.band_limit() {
                    0.0
                } else {
                    2.0 * PI * t.trapezoid(|x| x * (2.0 * PI * xi * x).sin())
                }
            }
        }
    }

    /// Second derivative of the deficit: `4π² ∫ x² J(x) cos(2πξx) dx`.
    pub fn fourier_deficit_d2(&self, xi: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { width, amplitude } => {
                let b = (PI * width).powi(2);
                amplitude * width * PI.sqrt() * (-b * xi * xi).exp() * (2.0 * b - 4.0 * b * b * xi * xi)
            }
            KernelFamily::Exponential { width, amplitude } => {
                let a = (2.0 * PI * width).powi(2);
                let q = a * xi * xi;
                2.0 * amplitude * width * 2.0 * a * (1.0 - 3.0 * q) / (1.0 + q).powi(3)
            }
            KernelFamily::TopHat { .. } => self.trig_moment_quadrature(2, xi),
            KernelFamily::Tabulated(t) => {
                if xi.abs() > t.band_limit() {
                    0.0
                } else {
                    4.0 * PI * PI * t.trapezoid(|x| x * x * (2.0 * PI * xi * x).cos())
                }
            }
        }
    }

    // Top-hat derivatives: (2π)^k ∫ x^k J(x) {sin, cos}(2πξx) dx over the support.
    fn trig_moment_quadrature(&self, k: i32, xi: f64) -> f64 {
        let r = self.support_radius();
        let opts = QuadOptions {
            atol: 1e-15,
            rtol: 1e-14,
            limit: 4000,
        };
        let w = 2.0 * PI * xi;
        let f = |x: f64| {
            let trig = if k == 1 { (w * x).sin() } else { (w * x).cos() };
            x.powi(k) * self.eval(x) * trig
        };
        let cycles = ((xi.abs() * r).ceil() as usize).max(1);
        let pts: Vec<f64> = (0..=cycles).map(|i| r * i as f64 / cycles as f64).collect();
        // Integrand is even in x, so integrate the half line and double.
        let half = integrate_with_breaks(f, &pts, &opts)
            .map(|q| q.value)
            .unwrap_or(f64::NAN);
        (2.0 * PI).powi(k) * 2.0 * half
    }

    /// Frequency beyond which `|FJ(ξ)| < 0.01·μ₀`, for the closed-form
    /// families.
    pub fn riemann_lebesgue_frequency(&self) -> Option<f64> {
        match &self.family {
            KernelFamily::Gaussian { width, .. } => Some(100f64.ln().sqrt() / (PI * width)),
            KernelFamily::Exponential { width, .. } => Some(99f64.sqrt() / (2.0 * PI * width)),
            KernelFamily::TopHat { half_width, .. } => Some(50.0 / (PI * half_width)),
            KernelFamily::Tabulated(_) => None,
        }
    }

    /// Highest frequency at which the kernel transform is resolved.
    pub fn band_limit(&self) -> f64 {
        match &self.family {
            KernelFamily::Tabulated(t) => t.band_limit(),
            _ => f64::INFINITY,
        }
    }

    /// Checks the structural hypotheses on `J`: evenness, non-negativity,
    /// integrability, and finiteness of the certified moments.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let (xs, js): (Vec<f64>, Vec<f64>) = match &self.family {
            KernelFamily::Tabulated(t) => (t.xs.clone(), t.values.clone()),
            _ => {
                let r = self.support_radius();
                let n = 4001;
                let xs: Vec<f64> = (0..n).map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64).collect();
                let js = xs.iter().map(|&x| self.eval(x)).collect();
                (xs, js)
            }
        };
        let n = xs.len();
        let peak = js.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let asym = (0..n).map(|i| (js[i] - js[n - 1 - i]).abs()).fold(0.0f64, f64::max);
        let rel_asym = if peak > 0.0 { asym / peak } else { asym };
        checks.push(Check {
            name: "evenness",
            passed: rel_asym <= 1e-12,
            residual: rel_asym,
            detail: format!("max |J(x) - J(-x)| / max|J| = {rel_asym:e}"),
        });
        let min = js.iter().cloned().fold(f64::INFINITY, f64::min);
        checks.push(Check {
            name: "non-negativity",
            passed: min >= 0.0,
            residual: min,
            detail: format!("min J = {min:e}"),
        });
        let mu0 = self.moment(0, false).unwrap_or(f64::NAN);
        checks.push(Check {
            name: "integrability",
            passed: mu0.is_finite() && mu0 > 0.0,
            residual: mu0,
            detail: format!("mu0 = {mu0:e}"),
        });
        let mut worst = 0.0f64;
        let mut finite = true;
        let mut detail = String::new();
        for k in 0..=self.max_moment_order() {
            let closed = self.moment(k, true);
            let quad = self.moment_by_quadrature(k, true);
            match (closed, quad) {
                (Ok(c), Ok(q)) if c.is_finite() && q.is_finite() => {
                    let rel = if c != 0.0 { ((c - q) / c).abs() } else { q.abs() };
                    worst = worst.max(rel);
                }
                _ => {
                    finite = false;
                    detail = format!("moment {k} not finite");
                }
            }
        }
        let mu2 = self.moment(2, false).unwrap_or(f64::NAN);
        let moments_ok = finite && mu2 > 0.0 && worst <= 1e-10;
        if detail.is_empty() {
            detail = format!(
                "moments 0..={} finite; max relative closed-form/quadrature gap {worst:e}",
                self.max_moment_order()
            );
        }
        checks.push(Check {
            name: "moments",
            passed: moments_ok,
            residual: worst,
            detail,
        });
        ValidationReport {
            kernel: self.name().to_string(),
            checks,
        }
    }
}

impl KernelTable {
    fn trapezoid<F: Fn(f64) -> f64>(&self, weight: F) -> f64 {
        self.xs
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
            .map(|((&x, &j), &w)| w * j * weight(x))
            .sum()
    }

    fn band_limit(&self) -> f64 {
        let h = self.xs.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
        0.5 / h
    }

    fn interpolate(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let i = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let s = (x - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - s) + self.values[i] * s
    }
}

fn sinc(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

/// `1 − sin(y)/y`, accurate for small `y`.
pub(crate) fn one_minus_sinc(y: f64) -> f64 {
    let y = y.abs();
    if y < 1.5 {
        // (y − sin y) / y as a power series in y².
        let y2 = y * y;
        let mut term = y2 / 6.0;
        let mut sum = term;
        let mut n = 1.0;
        loop {
            term *= -y2 / ((2.0 * n + 2.0) * (2.0 * n + 3.0));
            sum += term;
            n += 1.0;
            if term.abs() <= 1e-18 * sum.abs() || n > 40.0 {
                break;
            }
        }
        sum
    } else {
        1.0 - y.sin() / y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub kernel: String,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtins() -> Vec<MicromodulusKernel> {
        vec![
            MicromodulusKernel::gaussian(1.0, 1.0).unwrap(),
            MicromodulusKernel::exponential(1.0, 1.0).unwrap(),
            MicromodulusKernel::top_hat(1.0, 1.0).unwrap(),
            MicromodulusKernel::gaussian(0.7, 2.5).unwrap(),
            MicromodulusKernel::exponential(1.3, 0.4).unwrap(),
        ]
    }

    #[test]
    fn gaussian_mass_is_sqrt_pi() {
        let k = MicromodulusKernel::gaussian(1.0, 1.0).unwrap();
        assert!((k.moment(0, false).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert!((k.moment_by_quadrature(0, false).unwrap() - 1.772_453_850_905_516).abs() < 1e-12);
    }

    #[test]
    fn odd_moments_vanish() {
        for k in builtins() {
            assert_eq!(k.moment(1, false).unwrap(), 0.0);
            assert_eq!(k.moment(3, false).unwrap(), 0.0);
            assert!(k.moment(1, true).unwrap() > 0.0);
        }
    }

    #[test]
    fn exponential_second_moment() {
        let k = MicromodulusKernel::exponential(1.0, 1.0).unwrap();
        assert!((k.moment(2, false).unwrap() - 4.0).abs() < 1e-13);
        assert!((k.moment_by_quadrature(2, false).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn closed_form_moments_match_quadrature() {
        for k in builtins() {
            for order in (0..=k.max_moment_order()).step_by(2) {
                let c = k.moment(order, false).unwrap();
                let q = k.moment_by_quadrature(order, false).unwrap();
                assert!(((c - q) / c).abs() < 1e-10, "{} k={order}: {c} vs {q}", k.name());
            }
        }
    }

    #[test]
    fn moment_above_certified_order_errors() {
        let k = MicromodulusKernel::gaussian(1.0, 1.0).unwrap();
        assert!(matches!(
            k.moment(13, false),
            Err(Error::MomentUnavailable { order: 13, max: 12 })
        ));
        let xs: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.1).collect();
        let js = xs.iter().map(|x| (-x * x).exp()).collect();
        let t = MicromodulusKernel::tabulated(xs, js, None).unwrap();
        assert!(t.moment(2, false).is_ok());
        assert!(matches!(t.moment(4, false), Err(Error::MomentUnavailable { .. })));
    }

    #[test]
    fn fourier_values() {
        let g = MicromodulusKernel::gaussian(1.0, 1.0).unwrap();
        assert!((g.fourier(0.0) - PI.sqrt()).abs() < 1e-15);
        let expected = PI.sqrt() * (-PI * PI).exp();
        assert!((g.fourier(1.0) - expected).abs() < 1e-18);
        assert!((g.fourier(1.0) - 9.17e-5).abs() < 1e-7);
        assert!((g.fourier_by_quadrature(1.0).unwrap() - expected).abs() < 1e-12);

        let e = MicromodulusKernel::exponential(1.0, 1.0).unwrap();
        let lorentz = 2.0 / (1.0 + 4.0 * PI * PI);
        assert!((e.fourier(1.0) - lorentz).abs() < 1e-15);
        assert!((e.fourier(1.0) - 0.049410).abs() < 1e-6);
        assert!((e.fourier_by_quadrature(1.0).unwrap() - lorentz).abs() < 1e-11);
    }

    #[test]
    fn fourier_is_even_bounded_and_decays() {
        for k in builtins() {
            let mu0 = k.moment(0, false).unwrap();
            for i in 0..400 {
                let xi = i as f64 * 0.05;
                assert_eq!(k.fourier(xi), k.fourier(-xi));
                assert!(k.fourier(xi).abs() <= mu0 * (1.0 + 1e-15));
            }
            let big = k.riemann_lebesgue_frequency().unwrap();
            for i in 0..200 {
                let xi = big * (1.0001 + 0.37 * i as f64);
                assert!(k.fourier(xi).abs() < 0.01 * mu0, "{} at {xi}", k.name());
            }
        }
    }

    #[test]
    fn deficit_and_derivatives_are_consistent() {
        for k in builtins() {
            let mu0 = k.moment(0, false).unwrap();
            let mu2 = k.moment(2, false).unwrap();
            assert!((k.fourier_deficit_d2(0.0) - 4.0 * PI * PI * mu2).abs() < 1e-9 * mu2);
            for &xi in &[0.03, 0.2, 0.77, 1.9] {
                let direct = mu0 - k.fourier(xi);
                assert!((k.fourier_deficit(xi) - direct).abs() < 1e-13 * mu0);
                let h = 1e-4;
                let fd1 = (k.fourier_deficit(xi + h) - k.fourier_deficit(xi - h)) / (2.0 * h);
                let pp0 = 4.0 * PI * PI * mu2;
                assert!((k.fourier_deficit_d1(xi) - fd1).abs() < 1e-7 * pp0, "{} {xi}", k.name());
                let fd2 = (k.fourier_deficit_d1(xi + h) - k.fourier_deficit_d1(xi - h)) / (2.0 * h);
                assert!(
                    (k.fourier_deficit_d2(xi) - fd2).abs() < 1e-6 * pp0,
                    "{} {xi}: {} vs {fd2}",
                    k.name(),
                    k.fourier_deficit_d2(xi)
                );
            }
        }
    }

    #[test]
    fn one_minus_sinc_branches_agree() {
        for &y in &[1e-8f64, 1e-3, 0.3, 1.49, 1.51, 4.0] {
            let direct = 1.0 - y.sin() / y;
            let series = one_minus_sinc(y);
            let tol = if y < 1e-3 { 1e-6 * series } else { 1e-14 };
            assert!((direct - series).abs() <= tol.max(1e-16), "y={y}");
        }
        assert!((one_minus_sinc(1e-8) - 1e-16 / 6.0).abs() < 1e-30);
    }

    #[test]
    fn builtins_validate() {
        for k in builtins() {
            let report = k.validate();
            assert!(report.all_passed(), "{report:?}");
        }
    }

    fn table(f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.05).collect();
        let js = xs.iter().map(|&x| f(x)).collect();
        (xs, js)
    }

    #[test]
    fn tabulated_evenness_violation_is_reported() {
        let (xs, mut js) = table(|x| (-x * x).exp());
        js[150] += 0.25;
        let report = MicromodulusKernel::tabulated(xs, js, None).unwrap().validate();
        let even = report.check("evenness").unwrap();
        assert!(!even.passed);
        assert!((even.residual - 0.25).abs() < 1e-12);
        assert!(report.check("non-negativity").unwrap().passed);
    }

    #[test]
    fn tabulated_negative_sample_is_reported() {
        let (xs, mut js) = table(|x| (-x * x).exp());
        js[10] = -1e-3;
        js[390] = -1e-3;
        let report = MicromodulusKernel::tabulated(xs, js, None).unwrap().validate();
        assert!(!report.check("non-negativity").unwrap().passed);
        assert!(report.check("evenness").unwrap().passed);
    }

    #[test]
    fn tabulated_matches_gaussian() {
        let (xs, js) = table(|x| (-x * x).exp());
        let t = MicromodulusKernel::tabulated(xs, js, Some(4)).unwrap();
        assert!(t.validate().all_passed());
        assert!((t.moment(0, false).unwrap() - PI.sqrt()).abs() < 1e-12);
        assert!((t.moment(2, false).unwrap() - 0.5 * PI.sqrt()).abs() < 1e-12);
        assert!((t.fourier(0.5) - PI.sqrt() * (-PI * PI / 4.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn table_shape_errors() {
        assert!(MicromodulusKernel::tabulated(vec![-1.0, 0.0, 2.0], vec![1.0; 3], None).is_err());
        assert!(MicromodulusKernel::tabulated(vec![-1.0, 1.0, 0.0], vec![1.0; 3], None).is_err());
        assert!(MicromodulusKernel::tabulated(vec![-1.0, 0.0, 1.0], vec![1.0; 2], None).is_err());
        assert!(MicromodulusKernel::gaussian(-1.0, 1.0).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.csv");
        let mut text = String::from("x,J\n");
        for i in -40..=40 {
            let x = i as f64 * 0.1;
            text.push_str(&format!("{x},{}\n", (-x.abs()).exp()));
        }
        std::fs::write(&path, text).unwrap();
        let k = MicromodulusKernel::from_csv(&path, None).unwrap();
        assert_eq!(k.name(), "tabulated");
        assert!(k.validate().all_passed());

        std::fs::write(&path, "x,J\n-1,1\n0,oops\n1,1\n").unwrap();
        let err = MicromodulusKernel::from_csv(&path, None).unwrap_err();
        assert!(err.to_string().contains("oops"));
    }
}
