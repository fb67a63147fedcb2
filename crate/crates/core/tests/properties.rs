use peridyn::classical_wave::DalembertSolution;
use peridyn::config::{parse_config, KernelSpec, RunConfig, Speed};
use peridyn::evolution::{characteristic_spectra, evolve_characteristic, evolve_grid};
use peridyn::kernel_b::KernelB;
use peridyn::ray_probe::phase_slope_margin;
use peridyn::{DispersionProfile, FieldState, GaussianPulse, Grid, InitialDataSpec, MicromodulusKernel};
use proptest::prelude::*;

fn kernel(kind: usize, width: f64, amplitude: f64) -> MicromodulusKernel {
    match kind {
        0 => MicromodulusKernel::gaussian(width, amplitude),
        1 => MicromodulusKernel::exponential(width, amplitude),
        _ => MicromodulusKernel::top_hat(width, amplitude),
    }
    .unwrap()
}

fn profile(kind: usize) -> DispersionProfile {
    DispersionProfile::build(&kernel(kind, 1.0, 1.0)).unwrap()
}

fn pulse() -> impl Strategy<Value = GaussianPulse> {
    (-2.0f64..2.0, -3.0f64..3.0, 0.5f64..2.0).prop_map(|(a, c, s)| GaussianPulse::new(a, c, s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn moments_match_closed_form(kind in 0usize..3, width in 0.3f64..3.0, amplitude in 0.2f64..5.0, k in 0u32..3) {
        let j = kernel(kind, width, amplitude);
        let exact = j.moment(2 * k, false).unwrap();
        let quad = j.moment_by_quadrature(2 * k, false).unwrap();
        prop_assert!((exact - quad).abs() <= 1e-10 * exact, "{exact} vs {quad}");
    }

    #[test]
    fn transform_even_and_bounded(kind in 0usize..3, width in 0.3f64..3.0, xi in -30.0f64..30.0) {
        let j = kernel(kind, width, 1.0);
        let mu0 = j.moment(0, false).unwrap();
        prop_assert_eq!(j.fourier(xi), j.fourier(-xi));
        prop_assert!(j.fourier(xi).abs() <= mu0 * (1.0 + 1e-15));
    }

    #[test]
    fn psi_odd_with_bounded_slope(kind in 0usize..3, xi in -50.0f64..50.0) {
        let p = profile(kind);
        prop_assert_eq!(p.psi(-xi), -p.psi(xi));
        prop_assert!(p.psi_prime(xi).abs() <= 1.0 + 1e-6);
        prop_assert!(p.psi(xi).abs() <= p.psi_limit() * (1.0 + 1e-12) || kind == 2);
    }

    #[test]
    fn psi_branches_agree(kind in 0usize..3, s in 0.5f64..2.0) {
        let p = profile(kind);
        let xi = s * p.eps_switch;
        let (a, b) = (p.psi_direct(xi), p.psi_near_zero(xi));
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn supersonic_phase_slope(kind in 0usize..3, ratio in 1.01f64..4.0) {
        let p = profile(kind);
        let v = ratio * p.c;
        let grid: Vec<f64> = (0..=2000).map(|i| -25.0 + 0.025 * i as f64).collect();
        prop_assert!(phase_slope_margin(&p, v, &grid) >= v - p.c - 1e-9);
    }

    #[test]
    fn evolution_is_unimodular_and_reversible(u in pulse(), ut in pulse(), t in -8.0f64..8.0) {
        let p = profile(0);
        // Evolved states carry nonlocal tails, so the reverse step needs room.
        let grid = Grid::centered(0.0, 1024.0, 8192).unwrap();
        let s0 = FieldState::from_data(grid, &InitialDataSpec::new(vec![u], vec![ut]));
        let ch = evolve_characteristic(&p, &s0, t).unwrap();
        let (wp, wm) = characteristic_spectra(&p, &s0);
        let peak = wp.iter().chain(&wm).map(|z| z.norm()).fold(0.0, f64::max);
        for k in 0..grid.n {
            prop_assert!((ch.w_plus[k].norm() - wp[k].norm()).abs() <= 1e-12 * peak);
            prop_assert!((ch.w_minus[k].norm() - wm[k].norm()).abs() <= 1e-12 * peak);
        }
        let back = evolve_grid(&p, &evolve_grid(&p, &s0, t).unwrap(), -t).unwrap();
        let scale = s0.u.iter().chain(&s0.ut).map(|x| x.abs()).fold(0.0, f64::max);
        for j in 0..grid.n {
            prop_assert!((back.u[j] - s0.u[j]).abs() <= 1e-10 * scale);
            prop_assert!((back.ut[j] - s0.ut[j]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn zero_mode_grows_affinely(u in pulse(), ut in pulse(), t in 0.0f64..10.0) {
        let p = profile(1);
        let grid = Grid::centered(0.0, 512.0, 4096).unwrap();
        let s0 = FieldState::from_data(grid, &InitialDataSpec::new(vec![u], vec![ut]));
        let s = evolve_grid(&p, &s0, t).unwrap();
        let mass = |f: &[f64]| f.iter().sum::<f64>() * grid.dx;
        let expect = mass(&s0.u) + t * mass(&s0.ut);
        prop_assert!((mass(&s.u) - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
    }

    #[test]
    fn b_kernels_are_even(j in -1i32..=2, t in 0.5f64..4.0, z in 0.0f64..8.0) {
        let p = profile(0);
        let kb = KernelB::new(&p, 1.0).unwrap();
        let (a, b) = (kb.eval(j, t, z).unwrap(), kb.eval(j, t, -z).unwrap());
        prop_assert_eq!(a.value, b.value);
        prop_assert!(a.value.abs() <= kb.trivial_bound(j, t) + a.error);
    }

    #[test]
    fn dalembert_solves_wave_equation(u in pulse(), ut in pulse(), t in 0.1f64..5.0, x in -6.0f64..6.0) {
        let s = DalembertSolution::new(0.9, InitialDataSpec::new(vec![u], vec![ut])).unwrap();
        let h = 3e-3;
        let f = |t: f64, x: f64| s.eval(t, x).0;
        let d2 = |g: &dyn Fn(f64) -> f64, y: f64| {
            (-g(y + 2.0 * h) + 16.0 * g(y + h) - 30.0 * g(y) + 16.0 * g(y - h) - g(y - 2.0 * h)) / (12.0 * h * h)
        };
        let residual = d2(&|tt| f(tt, x), t) - 0.81 * d2(&|xx| f(t, xx), x);
        prop_assert!(residual.abs() < 1e-6, "{residual}");
    }

    #[test]
    fn config_round_trips(
        family in 0usize..3,
        width in 0.01f64..10.0,
        pulses in proptest::collection::vec(pulse(), 0..3),
        times in proptest::collection::vec(-100.0f64..100.0, 1..5),
        log_n in 1u32..16,
        ratio in 1.001f64..3.0,
        speeds in proptest::collection::vec((any::<bool>(), -5.0f64..5.0), 0..4),
        scale in 1e-6f64..1e6,
    ) {
        let kernel = match family {
            0 => KernelSpec::Gaussian { width, amplitude: 1.0 / width },
            1 => KernelSpec::Exponential { width, amplitude: 2.0 },
            _ => KernelSpec::Tophat { width, amplitude: 0.5 },
        };
        let data = InitialDataSpec::new(pulses.clone(), pulses.into_iter().rev().collect());
        let mut cfg = RunConfig { kernel, data, tolerance_scale: scale, ..RunConfig::default() };
        cfg.evolve.times = times;
        cfg.evolve.n = 1 << log_n;
        cfg.ray_scan.ratio = ratio;
        cfg.ray_scan.velocities = speeds
            .into_iter()
            .map(|(rel, v)| if rel { Speed::TimesC(v) } else { Speed::Absolute(v) })
            .collect();
        let text = cfg.to_toml_string();
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
