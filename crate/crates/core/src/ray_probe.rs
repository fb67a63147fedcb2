//! Energy density along rays `x = x₀ + vt` and power-law fits of its decay.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::InitialDataSpec;
use crate::dispersion::DispersionProfile;
use crate::error::{Error, Result};
use crate::evolution::{evolve_point, PointOptions};

/// Samples must exceed this multiple of their own quadrature noise.
pub const NOISE_FACTOR: f64 = 10.0;
/// Minimum number of valid samples for a fit.
pub const MIN_FIT_SAMPLES: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct RaySample {
    pub t: f64,
    pub x: f64,
    /// `|∂ₜu|² + c²|Du|²`.
    pub e: f64,
    /// Energy density explainable by quadrature error.
    pub noise: f64,
    pub valid: bool,
    /// Evaluation failure, if any (the sample is then invalid).
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RaySeries {
    pub v: f64,
    pub x0: f64,
    /// `|v|/c`; above 1 the ray is supersonic.
    pub speed_ratio: f64,
    pub samples: Vec<RaySample>,
}

impl RaySeries {
    pub fn supersonic(&self) -> bool {
        self.speed_ratio > 1.0
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.e).collect()
    }
}

/// `t₀, t₀r, t₀r², …` up to and including `t₁` (within rounding).
pub fn geometric_times(t0: f64, t1: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(t0 > 0.0 && t1 >= t0 && ratio > 1.0 && t1.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "geometric times need 0 < t0 <= t1 and ratio > 1 (t0={t0}, t1={t1}, ratio={ratio})"
        )));
    }
    let steps = ((t1 / t0).ln() / ratio.ln() + 1e-9).floor() as i32;
    Ok((0..=steps).map(|k| t0 * ratio.powi(k)).collect())
}

/// Energy density along `x₀ + vt` at each of `times`, evaluated grid-free.
pub fn sample_ray(
    profile: &DispersionProfile,
    data: &InitialDataSpec,
    v: f64,
    x0: f64,
    times: &[f64],
    opts: &PointOptions,
) -> Result<RaySeries> {
    if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidInput("ray times must be positive and finite".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("ray times must be strictly increasing".into()));
    }
    let samples = times
        .par_iter()
        .map(|&t| {
            let x = x0 + v * t;
            match evolve_point(profile, data, t, x, opts) {
                Ok(pv) => {
                    let e = pv.energy_density();
                    let noise = pv.energy_noise();
                    RaySample {
                        t,
                        x,
                        e,
                        noise,
                        valid: e > NOISE_FACTOR * noise && e > 1e-300,
                        failure: None,
                    }
                }
                Err(err) => RaySample {
                    t,
                    x,
                    e: f64::NAN,
                    noise: f64::NAN,
                    valid: false,
                    failure: Some(err.to_string()),
                },
            }
        })
        .collect();
    Ok(RaySeries {
        v,
        x0,
        speed_ratio: v.abs() / profile.c,
        samples,
    })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `ln y`.
    pub residual: f64,
    pub samples: usize,
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && y.is_finite() && **y > 1e-300)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return Err(Error::InsufficientData { valid: n, needed: 2 });
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { valid: 1, needed: 2 });
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(PowerFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
        samples: n,
    })
}

/// Slope of `ln e` against `ln t` over valid samples inside `window`.
pub fn fit_exponent(series: &RaySeries, window: (f64, f64)) -> Result<PowerFit> {
    let (ts, es): (Vec<f64>, Vec<f64>) = series
        .samples
        .iter()
        .filter(|s| s.valid && s.t >= window.0 && s.t <= window.1)
        .map(|s| (s.t, s.e))
        .unzip();
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            valid: ts.len(),
            needed: MIN_FIT_SAMPLES,
        });
    }
    fit_power_law(&ts, &es)
}

/// `min (v ± cψ′(ξ))` over `frequencies` for `v ≥ 0`: the slowest phase
/// drift along the ray, bounded below by `v − c` since `|ψ′| ≤ 1`.
pub fn phase_slope_margin(profile: &DispersionProfile, v: f64, frequencies: &[f64]) -> f64 {
    frequencies
        .par_iter()
        .map(|&xi| {
            let d = profile.c * profile.psi_prime(xi);
            (v.abs() + d).min(v.abs() - d)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GaussianPulse;
    use crate::micromodulus::MicromodulusKernel;

    fn gaussian() -> DispersionProfile {
        DispersionProfile::build(&MicromodulusKernel::gaussian(1.0, 1.0).unwrap()).unwrap()
    }

    fn synthetic(times: &[f64], f: impl Fn(f64) -> f64) -> RaySeries {
        RaySeries {
            v: 1.0,
            x0: 0.0,
            speed_ratio: 2.0,
            samples: times
                .iter()
                .map(|&t| RaySample {
                    t,
                    x: t,
                    e: f(t),
                    noise: 0.0,
                    valid: true,
                    failure: None,
                })
                .collect(),
        }
    }

    #[test]
    fn geometric_grid() {
        let ts = geometric_times(10.0, 100.0, 10f64.powf(0.1)).unwrap();
        assert_eq!(ts.len(), 11);
        assert!((ts[10] - 100.0).abs() < 1e-9);
        assert!(geometric_times(0.0, 1.0, 2.0).is_err());
        assert!(geometric_times(1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn exact_power_law() {
        let ts = geometric_times(10.0, 100.0, 1.2).unwrap();
        let fit = fit_exponent(&synthetic(&ts, |t| 3.0 * t.powi(-6)), (10.0, 100.0)).unwrap();
        assert!((fit.slope + 6.0).abs() < 1e-9);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let s = synthetic(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], |t| 1.0 / t);
        assert!(matches!(
            fit_exponent(&s, (2.0, 5.0)),
            Err(Error::InsufficientData { valid: 4, needed: 5 })
        ));
        let zero = synthetic(&[1.0, 2.0, 3.0, 4.0, 5.0], |_| 0.0);
        assert!(fit_exponent(&zero, (0.0, 10.0)).is_err());
    }

    #[test]
    fn zero_data_gives_zero_energy() {
        let s = sample_ray(
            &gaussian(),
            &InitialDataSpec::default(),
            1.0,
            0.0,
            &[1.0, 2.0],
            &PointOptions::default(),
        )
        .unwrap();
        assert!(s.samples.iter().all(|x| x.e == 0.0 && !x.valid));
    }

    #[test]
    fn no_finite_speed() {
        let p = gaussian();
        let d = InitialDataSpec::displacement(GaussianPulse::new(1.0, 0.0, 1.0).unwrap());
        let s = sample_ray(&p, &d, 0.0, 9.0, &[0.5, 1.0], &PointOptions::default()).unwrap();
        for smp in &s.samples {
            assert!(smp.valid && smp.e > 0.0 && smp.e < 1e-6, "{smp:?}");
        }
    }

    #[test]
    fn reflection_symmetry() {
        let p = gaussian();
        let d = InitialDataSpec::displacement(GaussianPulse::new(1.0, 0.0, 1.0).unwrap());
        let ts = [1.0, 3.0, 7.0];
        let a = sample_ray(&p, &d, 1.2 * p.c, 0.0, &ts, &PointOptions::default()).unwrap();
        let b = sample_ray(&p, &d, -1.2 * p.c, 0.0, &ts, &PointOptions::default()).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x.e - y.e).abs() <= 1e-10 * x.e.max(1e-30));
        }
    }

    #[test]
    fn supersonic_phase_drift_is_bounded_below() {
        let p = gaussian();
        let grid: Vec<f64> = (0..=10_000).map(|i| -20.0 + 40.0 * i as f64 / 10_000.0).collect();
        let v = 1.5 * p.c;
        assert!(phase_slope_margin(&p, v, &grid) >= v - p.c - 1e-9);
    }

    #[test]
    fn supersonic_exponent_steepens_with_later_windows() {
        let p = gaussian();
        let d = InitialDataSpec::displacement(GaussianPulse::new(1.0, 0.0, 1.0).unwrap());
        let ts = geometric_times(10.0, 100.0, 1.05).unwrap();
        let s = sample_ray(&p, &d, 1.5 * p.c, 0.0, &ts, &PointOptions::default()).unwrap();
        let early = fit_exponent(&s, (10.0, 30.0)).unwrap().slope;
        let late = fit_exponent(&s, (30.0, 100.0)).unwrap().slope;
        assert!(late < early, "{early} then {late}");
    }

    #[test]
    fn bad_times_rejected() {
        let p = gaussian();
        let d = InitialDataSpec::default();
        assert!(sample_ray(&p, &d, 1.0, 0.0, &[2.0, 1.0], &PointOptions::default()).is_err());
        assert!(sample_ray(&p, &d, 1.0, 0.0, &[0.0, 1.0], &PointOptions::default()).is_err());
    }
}
