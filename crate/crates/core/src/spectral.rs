//! Periodic grids, gridded field states and Fourier-multiplier plumbing.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::data::InitialDataSpec;
use crate::error::{Error, Result};

/// Uniform periodic grid `x_j = x0 + j·dx`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) || !x0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid needs finite x0 and dx > 0 (x0={x0}, dx={dx})"
            )));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "grid size must be a power of two >= 2, got {n}"
            )));
        }
        Ok(Self { x0, dx, n })
    }

    /// Grid of `n` points centred on `center` with period `period`.
    pub fn centered(center: f64, period: f64, n: usize) -> Result<Self> {
        Self::new(center - 0.5 * period, period / n as f64, n)
    }

    pub fn period(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Frequency of FFT bin `k`; the Nyquist bin is reported as `−n/(2P)`.
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.n as i64;
        let k = k as i64;
        let m = if k < n / 2 { k } else { k - n };
        m as f64 / self.period()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.frequency(k)).collect()
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.dx
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n).map(|j| f(self.x(j))).collect()
    }
}

/// Displacement and velocity samples on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
}

impl FieldState {
    pub fn new(grid: Grid, u: Vec<f64>, ut: Vec<f64>) -> Result<Self> {
        if u.len() != grid.n || ut.len() != grid.n {
            return Err(Error::InvalidInput(format!(
                "field length mismatch: grid has {} points, u has {}, ut has {}",
                grid.n,
                u.len(),
                ut.len()
            )));
        }
        check_finite(&u, "u")?;
        check_finite(&ut, "ut")?;
        Ok(Self { grid, u, ut })
    }

    pub fn from_data(grid: Grid, data: &InitialDataSpec) -> Self {
        Self {
            grid,
            u: grid.sample(|x| data.u(x)),
            ut: grid.sample(|x| data.ut(x)),
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            u: vec![0.0; grid.n],
            ut: vec![0.0; grid.n],
        }
    }
}

pub(crate) fn check_finite(values: &[f64], name: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!("{name}[{i}] is not finite"))),
        None => Ok(()),
    }
}

pub(crate) fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Normalised inverse transform.
pub(crate) fn inverse(mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
    let n = spectrum.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    spectrum.iter_mut().for_each(|z| *z *= scale);
    spectrum
}

/// Multiplies each bin by `m(ξ_k)`. At the Nyquist bin, where `±ξ` alias,
/// the symmetrised value `Re m(ξ_N)` is used so real input stays real.
pub(crate) fn apply_multiplier<M: Fn(f64) -> Complex64>(grid: &Grid, spectrum: &mut [Complex64], m: M) {
    let nyq = grid.n / 2;
    for (k, z) in spectrum.iter_mut().enumerate() {
        let mk = m(grid.frequency(k));
        *z *= if k == nyq { Complex64::new(mk.re, 0.0) } else { mk };
    }
}

/// Ratio of the largest coefficient in the upper quarter of the frequency
/// band to the overall peak; small values mean the grid resolves the field.
pub(crate) fn spectral_tail(spectrum: &[Complex64]) -> f64 {
    let n = spectrum.len();
    let peak = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let tail = (n / 4..=3 * n / 4)
        .filter(|&k| k < n)
        .map(|k| spectrum[k].norm())
        .fold(0.0, f64::max);
    tail / peak
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_frequencies() {
        let g = Grid::new(-4.0, 0.5, 16).unwrap();
        assert_eq!(g.period(), 8.0);
        assert_eq!(g.frequency(0), 0.0);
        assert_eq!(g.frequency(1), 0.125);
        assert_eq!(g.frequency(8), -1.0);
        assert_eq!(g.frequency(15), -0.125);
        assert_eq!(g.nyquist(), 1.0);
        assert!(Grid::new(0.0, 1.0, 12).is_err());
        assert!(Grid::new(0.0, -1.0, 16).is_err());
    }

    #[test]
    fn roundtrip() {
        let g = Grid::new(0.0, 0.1, 64).unwrap();
        let f = g.sample(|x| (x * 1.3).sin() + 0.2);
        let back = inverse(forward(&f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-14 && b.im.abs() < 1e-14);
        }
    }

    #[test]
    fn field_state_checks() {
        let g = Grid::new(0.0, 1.0, 4).unwrap();
        assert!(FieldState::new(g, vec![0.0; 3], vec![0.0; 4]).is_err());
        assert!(FieldState::new(g, vec![0.0, f64::NAN, 0.0, 0.0], vec![0.0; 4]).is_err());
        assert!(FieldState::new(g, vec![0.0; 4], vec![1.0; 4]).is_ok());
    }
}
