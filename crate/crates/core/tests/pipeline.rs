//! End-to-end sweeps on reduced epsilon sets.

use layerlab::analysis::{cells_for, run_sweep, run_sweep_with_artifacts, SweepPlan};
use layerlab::grids::make_interval_grid;
use layerlab::grids::Grading;
use layerlab::model::{build_initial_data, check_compatibility, InitialPreset, ModelParams, Poly};

fn eps_range(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

// The bundled data scaled to unit mass: same compatibility, but a wall gap
// of order 0.2, so the layers stand out of the O(eps) interior drift.
fn unit_mass_preset() -> InitialPreset {
    let b = Poly::beta_bump(8, 8, 1.0);
    let m = b.integral_unit();
    InitialPreset::Polynomial {
        u0: b.scale(1.0 / m),
        v0: Poly::beta_bump(6, 6, 1.0).add(&Poly::constant(1.0)),
    }
}

#[test]
fn unit_mass_data_show_square_root_layers() {
    let plan = SweepPlan {
        epsilons: eps_range(6, 10),
        preset: unit_mass_preset(),
        steps: Some(800),
        ..SweepPlan::paper_default()
    };
    let r = run_sweep(&plan).unwrap();
    assert!(r.incomplete.is_none());
    assert!(r.invariants_pass(), "{:#?}", r.invariants);
    assert!(r.wall_gap > 0.1, "gap {}", r.wall_gap);

    for fit in [&r.slopes.thickness_left, &r.slopes.thickness_right] {
        let fit = fit.as_ref().expect("thickness measured at every eps");
        assert!((fit.slope - 0.5).abs() < 0.05, "thickness exponent {}", fit.slope);
        assert!(fit.r_squared > 0.99);
    }
    // symmetric data: both walls see the same layer
    for e in &r.entries {
        let [l, rt] = e.thickness;
        assert!((l.unwrap() - rt.unwrap()).abs() < 1e-6 * l.unwrap(), "{e:?}");
    }
    // the layer dominates the remainder and the interior converges
    let last = r.entries.last().unwrap();
    assert!(last.interior.v_interior < 0.1 * last.interior.v_full);
    assert!(last.interior.v_full > 0.25 * r.wall_gap);
    assert!(r.slopes.eu.unwrap().slope > 0.2);
    assert!(r.slopes.boundary.unwrap().slope > 0.2);
}

#[test]
fn composite_beats_outer_alone_near_the_walls() {
    let plan = SweepPlan {
        epsilons: eps_range(6, 8),
        preset: unit_mass_preset(),
        steps: Some(400),
        ..SweepPlan::paper_default()
    };
    let art = run_sweep_with_artifacts(&plan).unwrap();
    for run in &art.runs {
        let set = art.profiles_for(run.trajectory.grid.n());
        let step = set.cells / run.trajectory.grid.n();
        let vf = &run.trajectory.last().v;
        let vo: Vec<f64> = set.outer.v_hist.last().unwrap().iter().step_by(step).copied().collect();
        let va = &run.assembly.frames.last().unwrap().v;
        let outer_err = vf.iter().zip(&vo).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let comp_err = vf.iter().zip(va).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(comp_err < 0.5 * outer_err, "eps {}: composite {comp_err}, outer {outer_err}", run.epsilon);
    }
}

#[test]
fn bundled_data_are_compatible_and_carry_the_beta_mass() {
    let params = ModelParams::paper_default(0.0);
    let grid = make_interval_grid(256, Grading::Uniform).unwrap();
    let data = build_initial_data(&params.preset, &params, &grid).unwrap();
    // M = B(9, 9) = (8!)^2 / 17!
    let fact = |n: u64| (1..=n).map(|k| k as f64).product::<f64>();
    let beta = fact(8).powi(2) / fact(17);
    assert!((data.mass - beta).abs() < 1e-12 * beta, "{} vs {beta}", data.mass);
    assert!((beta - 4.5706e-6).abs() < 1e-9);

    let report = check_compatibility(&data, params.v_star).unwrap();
    assert!(report.symbolic && report.pass);
    assert_eq!(report.max_residual(), 0.0);
}

#[test]
fn default_sweep_grids() {
    let plan = SweepPlan::paper_default();
    let n: Vec<usize> = plan.resolved().iter().map(|p| p.1).collect();
    assert_eq!(n, vec![64, 128, 128, 256, 256, 512, 512, 1024, 1024]);
    assert_eq!(cells_for(2f64.powi(-14), 8.0), 1024);
    assert_eq!(plan.horizon, 0.25);
    assert_eq!(plan.v_star, 1.0);
}
