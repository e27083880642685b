use layerlab::analysis::{fit_rate, measure_thickness};
use layerlab::config::RunConfig;
use layerlab::grids::{make_interval_grid, Grading};
use layerlab::interval::{solve_full, TimeStepper};
use layerlab::io::format_real;
use layerlab::model::{build_initial_data, InitialPreset, ModelParams, Poly};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fit_recovers_power_laws(c in 1e-3f64..1e3, p in 0.1f64..2.0, k0 in 4i32..8, len in 3usize..9) {
        let eps: Vec<f64> = (0..len as i32).map(|k| 2f64.powi(-(k0 + k))).collect();
        let err: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
        let fit = fit_rate(&eps, &err).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-8);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }

    // |v - v_outer| = A exp(-x/sqrt(eps)) near each wall: the 10% crossing
    // sits at sqrt(eps) ln 10 whatever the grid
    #[test]
    fn thickness_of_exponential_layers(k in 6i32..13, amp in 1e-6f64..1.0, n_pow in 7u32..11) {
        let eps = 2f64.powi(-k);
        let grid = make_interval_grid(1 << n_pow, Grading::Uniform).unwrap();
        let d = eps.sqrt();
        let outer: Vec<f64> = grid.nodes().iter().map(|x| 1.0 + x).collect();
        let full: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(&outer)
            .map(|(x, o)| o + amp * (-x / d).exp() - 0.5 * amp * (-(1.0 - x) / d).exp())
            .collect();
        let [l, r] = measure_thickness(&grid, &full, &outer, 0.1).unwrap();
        let want = d * 10f64.ln();
        // the opposite layer's tail at the crossing, relative to the 10%
        // target, shifts it by about d times that ratio
        let leak = 2.0 * (-(1.0 - want) / d).exp() / 0.05;
        let tol = 1e-9 * want + 2.0 * d * leak;
        prop_assert!((l.unwrap() - want).abs() < tol, "{:?} vs {want}", l);
        prop_assert!((r.unwrap() - want).abs() < tol, "{:?} vs {want}", r);
    }

    #[test]
    fn reals_survive_csv_formatting(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn rendered_configs_parse_back(
        v_star in 0.0f64..4.0,
        horizon in 1e-3f64..2.0,
        k in proptest::collection::btree_set(2i32..16, 1..6),
        steps in (0usize..625).prop_map(|s| 8 * s),
        cpl in 1.0f64..32.0,
        tanh in any::<bool>(),
    ) {
        // ascending k: epsilons from the largest down
        let eps: Vec<f64> = k.iter().map(|k| 2f64.powi(-k)).collect();
        let mut shuffled = eps.clone();
        shuffled.rotate_left(1);
        let text = format!(
            "model.v_star = {v_star:?}\nmodel.T = {horizon:?}\nmodel.epsilon_list = {}\ntime.steps = {steps}\ngrid.cells_per_layer = {cpl:?}\ngrid.grading = {}\n",
            shuffled.iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(","),
            if tanh { "tanh" } else { "uniform" },
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let again = RunConfig::parse(&cfg.render()).unwrap();
        prop_assert_eq!(cfg.render(), again.render());
        prop_assert_eq!(again.model.v_star, v_star);
        prop_assert_eq!(again.model.horizon, horizon);
        prop_assert_eq!(again.time.steps, steps);
        prop_assert_eq!(again.epsilons(), eps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // Zero-flux BDF2 in flux form conserves mass to rounding and keeps u >= 0.
    #[test]
    fn full_solve_conserves_mass(
        a in 2usize..6,
        b in 2usize..6,
        scale in 0.1f64..20.0,
        bump in 0.0f64..2.0,
        v_star in 0.0f64..2.0,
        k in 4i32..9,
    ) {
        let preset = InitialPreset::Polynomial {
            u0: Poly::beta_bump(a, b, scale),
            v0: Poly::beta_bump(3, 3, bump).add(&Poly::constant(v_star)),
        };
        let params = ModelParams::new(2f64.powi(-k), v_star, 0.05, preset.clone()).unwrap();
        let grid = make_interval_grid(32, Grading::Uniform).unwrap();
        let data = build_initial_data(&preset, &params, &grid).unwrap();
        let stepper = TimeStepper::new(0.05, 40, 4).unwrap();
        let traj = solve_full(&params, &data, &stepper).unwrap();
        prop_assert!(traj.max_mass_drift < 1e-12, "drift {}", traj.max_mass_drift);
        prop_assert!(traj.u_min > -1e-12 * scale);
        prop_assert!(traj.v_min >= -1e-12 && traj.v_max <= data.max_v0() + 1e-12);
    }
}
