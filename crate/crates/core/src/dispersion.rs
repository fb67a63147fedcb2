//! Dispersion function `φ = μ₀ − FJ`, effective wave speed `c = √(μ₂/2)`
//! and the odd multiplier `ψ` with `ψ² = 2φ/φ″(0)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::micromodulus::MicromodulusKernel;
use crate::quadrature::{integrate, QuadOptions};

/// Relative level of `φ/μ₀` below which `ψ` switches to the integral form.
const SWITCH_LEVEL: f64 = 1e-6;
const AUDIT_POINTS: usize = 4000;

#[derive(Debug, Clone)]
pub struct DispersionProfile {
    kernel: MicromodulusKernel,
    pub mu0: f64,
    pub mu2: f64,
    /// Effective wave speed.
    pub c: f64,
    /// `φ″(0) = 4π²μ₂`.
    pub phi_pp0: f64,
    /// Frequency beyond which `|φ − μ₀| ≤ μ₀/2`.
    pub xi_star: f64,
    /// Below this frequency `ψ` is evaluated through the integral form.
    pub eps_switch: f64,
}

impl DispersionProfile {
    pub fn build(kernel: &MicromodulusKernel) -> Result<Self> {
        let report = kernel.validate();
        if !report.all_passed() {
            let failed: Vec<String> = report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| format!("{} ({})", c.name, c.detail))
                .collect();
            return Err(Error::DegenerateKernel(format!(
                "kernel validation failed: {}",
                failed.join("; ")
            )));
        }
        let mu0 = kernel.moment(0, false)?;
        let mu2 = kernel.moment(2, false)?;
        if !(mu2.is_finite() && mu2 > 0.0) {
            return Err(Error::DegenerateKernel(format!("second moment {mu2} is not positive")));
        }
        let mut profile = Self {
            kernel: kernel.clone(),
            mu0,
            mu2,
            c: (0.5 * mu2).sqrt(),
            phi_pp0: 4.0 * PI * PI * mu2,
            xi_star: f64::NAN,
            eps_switch: 0.0,
        };
        profile.xi_star = profile.scan_xi_star()?;
        profile.eps_switch = profile.find_switch();
        profile.audit_positivity()?;
        Ok(profile)
    }

    pub fn kernel(&self) -> &MicromodulusKernel {
        &self.kernel
    }

    pub fn phi(&self, xi: f64) -> f64 {
        self.kernel.fourier_deficit(xi)
    }

    pub fn phi_d1(&self, xi: f64) -> f64 {
        self.kernel.fourier_deficit_d1(xi)
    }

    pub fn phi_d2(&self, xi: f64) -> f64 {
        self.kernel.fourier_deficit_d2(xi)
    }

    /// Temporal frequency `ω = √φ(ξ)` of mode `ξ` (equal to `2πc|ψ(ξ)|`).
    pub fn omega(&self, xi: f64) -> f64 {
        self.phi(xi).max(0.0).sqrt()
    }

    /// `lim ψ(ξ)` as `ξ → +∞`, i.e. `√(2μ₀/φ″(0))`.
    pub fn psi_limit(&self) -> f64 {
        (2.0 * self.mu0 / self.phi_pp0).sqrt()
    }

    pub fn psi(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            return 0.0;
        }
        let a = xi.abs();
        let v = if a < self.eps_switch {
            self.psi_near_zero(a)
        } else {
            self.psi_direct(a)
        };
        v.copysign(xi)
    }

    /// `sign(ξ)·√(2φ(|ξ|)/φ″(0))`.
    pub fn psi_direct(&self, xi: f64) -> f64 {
        (2.0 * self.phi(xi.abs()).max(0.0) / self.phi_pp0).sqrt().copysign(xi)
    }

    /// `ξ·√(2∫₀¹(1−τ)φ″(τξ)/φ″(0) dτ)`, free of the cancellation in `μ₀ − FJ`.
    pub fn psi_near_zero(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            return 0.0;
        }
        let opts = QuadOptions {
            atol: 1e-17,
            rtol: 1e-15,
            limit: 200,
        };
        let inner = integrate(|tau| (1.0 - tau) * self.phi_d2(tau * xi), 0.0, 1.0, &opts)
            .map(|q| q.value)
            .unwrap_or_else(|_| self.phi(xi) / (xi * xi));
        xi * (2.0 * inner / self.phi_pp0).max(0.0).sqrt()
    }

    /// `ψ′(ξ) = φ′(ξ)/(φ″(0)ψ(ξ))`, from differentiating `ψ² = 2φ/φ″(0)`.
    /// Cheaper than [`Self::psi_derivative`] and used for phase bookkeeping.
    pub fn psi_prime(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            return 1.0;
        }
        let a = xi.abs();
        let psi = self.psi(a);
        if psi <= 0.0 {
            return 1.0;
        }
        self.phi_d1(a) / (self.phi_pp0 * psi)
    }

    /// `ψ′(ξ)` or `ψ″(ξ)` by central differences with Ridders extrapolation.
    pub fn psi_derivative(&self, xi: f64, order: u8) -> Result<f64> {
        if order != 1 && order != 2 {
            return Err(Error::InvalidInput(format!(
                "psi derivative order must be 1 or 2, got {order}"
            )));
        }
        let h0 = 0.25 * self.xi_star.min(1.0 / self.kernel.length_scale());
        ridders(|x| self.psi(x), xi, h0, order).map(|(v, _)| v)
    }

    // Geometric scan ξ = 2^k/σ for the first point after which
    // |φ − μ₀| ≤ μ₀/2 on a whole decade.
    fn scan_xi_star(&self) -> Result<f64> {
        let scale = 1.0 / self.kernel.length_scale();
        let limit = self.kernel.band_limit();
        for k in -20..60 {
            let xi = 2f64.powi(k) * scale;
            if 10.0 * xi > limit {
                break;
            }
            let holds = (0..=64).all(|i| {
                let x = xi * 10f64.powf(i as f64 / 64.0);
                (self.phi(x) - self.mu0).abs() <= 0.5 * self.mu0
            });
            if holds {
                return Ok(xi);
            }
        }
        Err(Error::DegenerateKernel(
            "no frequency found beyond which |phi - mu0| <= mu0/2".into(),
        ))
    }

    fn find_switch(&self) -> f64 {
        let threshold = SWITCH_LEVEL * self.mu0;
        let mut lo = 0.0;
        let mut hi = (2.0 * threshold / self.phi_pp0).sqrt();
        while self.phi(hi) < threshold && hi < self.xi_star {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.phi(mid) < threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Frequencies at which structural properties of `φ` and `ψ` are audited.
    pub fn audit_grid(&self, points: usize) -> Vec<f64> {
        let top = (50.0 * self.xi_star).min(self.kernel.band_limit());
        (1..=points).map(|i| top * i as f64 / points as f64).collect()
    }

    fn audit_positivity(&self) -> Result<()> {
        for xi in self.audit_grid(AUDIT_POINTS) {
            let phi = self.phi(xi);
            if phi < -1e-9 {
                return Err(Error::PositivityViolation { xi, phi });
            }
            if xi > self.eps_switch && phi <= 1e-14 * self.mu0 {
                return Err(Error::DegenerateKernel(format!(
                    "phi vanishes away from the origin (phi({xi}) = {phi:e})"
                )));
            }
        }
        Ok(())
    }
}

/// Ridders' extrapolated central difference. Returns `(estimate, error)`.
fn ridders<F: Fn(f64) -> f64>(f: F, x: f64, h0: f64, order: u8) -> Result<(f64, f64)> {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 12;
    const SAFE: f64 = 2.0;

    let diff = |h: f64| -> Result<f64> {
        let (xp, xm) = (x + h, x - h);
        if !(h.is_normal()) || xp == x || xm == x {
            return Err(Error::Accuracy {
                stage: "finite-difference step",
                requested: h,
                achieved: (xp - x).abs(),
            });
        }
        // Use the representable step so the stencil is exact in x.
        let hp = xp - x;
        Ok(match order {
            1 => (f(xp) - f(x - hp)) / (2.0 * hp),
            _ => (f(xp) - 2.0 * f(x) + f(x - hp)) / (hp * hp),
        })
    };

    let mut table = [[0.0f64; NTAB]; NTAB];
    let mut h = h0;
    table[0][0] = diff(h)?;
    let mut best = table[0][0];
    let mut err = f64::INFINITY;
    for i in 1..NTAB {
        h /= CON;
        table[0][i] = diff(h)?;
        let mut fac = CON2;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let errt = (table[j][i] - table[j - 1][i])
                .abs()
                .max((table[j][i] - table[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                best = table[j][i];
            }
        }
        if (table[i][i] - table[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    Ok((best, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian() -> DispersionProfile {
        DispersionProfile::build(&MicromodulusKernel::gaussian(1.0, 1.0).unwrap()).unwrap()
    }
    fn exponential() -> DispersionProfile {
        DispersionProfile::build(&MicromodulusKernel::exponential(1.0, 1.0).unwrap()).unwrap()
    }
    fn top_hat() -> DispersionProfile {
        DispersionProfile::build(&MicromodulusKernel::top_hat(1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn wave_speeds() {
        assert!((gaussian().c - PI.powf(0.25) / 2.0).abs() < 1e-14);
        assert!((gaussian().c - 0.665_667_681_900_195).abs() < 1e-14);
        assert!((exponential().c - 2f64.sqrt()).abs() < 1e-14);
        assert!((top_hat().c - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn psi_closed_forms() {
        let e = exponential();
        assert_eq!(e.psi(0.0), 0.0);
        assert!((e.psi(1.0) - 1.0 / (1.0 + 4.0 * PI * PI).sqrt()).abs() < 1e-14);
        assert!((e.psi(1.0) - 0.157_176_725_477_590).abs() < 1e-14);
        let g = gaussian();
        let expected = (1.0 - (-PI * PI).exp()).sqrt() / PI;
        assert!((g.psi(1.0) - expected).abs() < 1e-14);
        assert!((g.psi(1.0) - 0.318_301_654_076_585).abs() < 1e-14);
    }

    #[test]
    fn psi_is_odd() {
        for p in [gaussian(), exponential(), top_hat()] {
            for i in 0..300 {
                let xi = 1e-6 * 1.07f64.powi(i);
                assert_eq!(p.psi(-xi), -p.psi(xi));
            }
        }
    }

    #[test]
    fn branches_agree_on_overlap() {
        for p in [gaussian(), exponential(), top_hat()] {
            assert!(p.eps_switch > 0.0);
            for i in 0..=40 {
                let xi = p.eps_switch * (0.5 + 1.5 * i as f64 / 40.0);
                let a = p.psi_direct(xi);
                let b = p.psi_near_zero(xi);
                assert!((a - b).abs() <= 1e-9 * b.abs(), "{}: {a} vs {b}", p.kernel().name());
            }
        }
    }

    #[test]
    fn derivative_examples() {
        for p in [gaussian(), exponential(), top_hat()] {
            let d0 = p.psi_derivative(0.0, 1).unwrap();
            assert!((d0 - 1.0).abs() <= 1e-6, "{}: {d0}", p.kernel().name());
            let far = p.psi_derivative(10.0 * p.xi_star, 1).unwrap();
            assert!(far.abs() <= 0.1);
        }
        let e = exponential();
        let d = e.psi_derivative(1.0, 1).unwrap();
        assert!((d - (1.0 + 4.0 * PI * PI).powf(-1.5)).abs() < 1e-10);
        assert!((d - 0.003_882_976_034_633).abs() < 1e-10);
        // ψ(ξ) = ξ(1+aξ²)^{-1/2}  ⇒  ψ″ = −3aξ(1+aξ²)^{-5/2}
        let a = 4.0 * PI * PI;
        let d2 = e.psi_derivative(0.3, 2).unwrap();
        assert!((d2 + 3.0 * a * 0.3 * (1.0 + a * 0.09f64).powf(-2.5)).abs() < 1e-7);
    }

    #[test]
    fn analytic_psi_prime_matches_ridders() {
        for p in [gaussian(), exponential(), top_hat()] {
            for &xi in &[-2.3, 1e-5, 0.01, 0.2, 0.7, 3.1] {
                let r = p.psi_derivative(xi, 1).unwrap();
                assert!((p.psi_prime(xi) - r).abs() < 1e-8, "{} at {xi}", p.kernel().name());
            }
        }
    }

    #[test]
    fn derivative_step_underflow() {
        let e = exponential();
        assert!(matches!(e.psi_derivative(1e30, 1), Err(Error::Accuracy { .. })));
        assert!(e.psi_derivative(1.0, 3).is_err());
    }

    #[test]
    fn psi_approaches_asymptote() {
        let g = gaussian();
        assert!((g.psi_limit() - 1.0 / PI).abs() < 1e-15);
        let e = exponential();
        assert!((e.psi_limit() - 0.5 / PI).abs() < 1e-15);
        for p in [g, e, top_hat()] {
            let v = p.psi(50.0 * p.xi_star);
            assert!((v - p.psi_limit()).abs() <= 0.01 * p.psi_limit());
        }
    }

    #[test]
    fn phi_is_nonnegative_and_psi_bounded() {
        for p in [gaussian(), exponential(), top_hat()] {
            assert_eq!(p.phi(0.0), 0.0);
            let bound = p.psi_limit() * 2f64.sqrt() + 1e-9;
            for xi in p.audit_grid(2000) {
                assert!(p.phi(xi) >= -1e-12);
                let s = p.psi(xi);
                assert!(s >= 0.0 && s <= bound);
            }
        }
    }

    #[test]
    fn omega_matches_psi() {
        let p = top_hat();
        for &xi in &[1e-3, 0.1, 0.9, 3.0] {
            let w = 2.0 * PI * p.c * p.psi(xi);
            assert!((w - p.omega(xi)).abs() < 1e-13 * w.max(1e-300));
        }
    }

    #[test]
    fn negative_kernel_rejected() {
        let xs: Vec<f64> = (-100..=100).map(|i| i as f64 * 0.05).collect();
        let js: Vec<f64> = xs
            .iter()
            .map(|&x| (-x * x).exp() - 1.5 * (-4.0 * x * x).exp())
            .collect();
        let k = MicromodulusKernel::tabulated(xs, js, None).unwrap();
        assert!(matches!(DispersionProfile::build(&k), Err(Error::DegenerateKernel(_))));
    }

    #[test]
    fn tabulated_profile_tracks_gaussian() {
        let xs: Vec<f64> = (-240..=240).map(|i| i as f64 * 0.025).collect();
        let js: Vec<f64> = xs.iter().map(|&x| (-x * x).exp()).collect();
        let t = DispersionProfile::build(&MicromodulusKernel::tabulated(xs, js, None).unwrap()).unwrap();
        let g = gaussian();
        assert!((t.c - g.c).abs() < 1e-12);
        for &xi in &[0.05, 0.4, 1.5] {
            assert!((t.psi(xi) - g.psi(xi)).abs() < 1e-10);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn second_order_upper_bound(kind in 0usize..3, xi in -4.0f64..4.0, eta in -4.0f64..4.0) {
                let p = match kind { 0 => gaussian(), 1 => exponential(), _ => top_hat() };
                let d = eta - xi;
                let rhs = p.phi(xi) + p.phi_d1(xi) * d + 0.5 * p.phi_pp0 * d * d;
                prop_assert!(p.phi(eta) <= rhs + 1e-10 * p.mu0);
            }

            #[test]
            fn psi_prime_at_most_one(kind in 0usize..3, xi in -6.0f64..6.0) {
                let p = match kind { 0 => gaussian(), 1 => exponential(), _ => top_hat() };
                let d = p.psi_derivative(xi, 1).unwrap();
                prop_assert!(d.abs() <= 1.0 + 1e-6);
            }
        }
    }
}
