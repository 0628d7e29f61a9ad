//! Scenario-level integration tests: export determinism, sweep symmetry,
//! warm-start behaviour, compatibility diagnostics and the RPE coupling
//! modes.

use softrod::bdf::{BdfScheme, SchemeKind};
use softrod::config::{
    InitialState, RpeModeConfig, ScenarioConfig, SignalConfig,
};
use softrod::dynamics::{static_solve, PressureSignal, SpatialMethod};
use softrod::rod::compatibility_residual;
use softrod::scenario::{
    run_dynamic, run_dynamic_raw, run_static_sweep, trajectory_csv, ActuationCase, SweepSpec,
};
use nalgebra::Vector6;

fn small_dynamic_config() -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.discretization.nodes = 25;
    c.discretization.scheme = softrod::config::SchemeConfig::Bdf1;
    c.discretization.timeframe_s = 0.2;
    c
}

#[test]
fn trajectory_export_is_deterministic_up_to_timing() {
    let config = small_dynamic_config();
    let a = run_dynamic(&config).unwrap();
    let b = run_dynamic(&config).unwrap();
    let strip_wall = |csv: &str| -> String {
        csv.lines()
            .map(|line| {
                let mut cols: Vec<&str> = line.split(',').collect();
                cols.pop();
                cols.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let csv_a = trajectory_csv(&a.record);
    let csv_b = trajectory_csv(&b.record);
    assert_eq!(strip_wall(&csv_a), strip_wall(&csv_b));
    // Exact column layout.
    let mut lines = csv_a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,node_index,s,x,y,z,h1,h2,h3,h4,P1,P2,P3,iters,step_wall_ms"
    );
    let first = lines.next().unwrap();
    assert_eq!(first.split(',').count(), 15);
}

#[test]
fn equal_pressure_sweep_is_pure_extension() {
    let config = ScenarioConfig::default();
    let sweep = run_static_sweep(
        &config,
        &SweepSpec { start_bar: 0.0, end_bar: 0.6, step_bar: 0.2, case: ActuationCase::All },
    )
    .unwrap();
    let mut last_z = 0.0;
    for level in &sweep.levels {
        let frame = level.outcome.as_ref().expect("level converged");
        let tip = frame.tip();
        assert!(tip.position.x.abs() < 1e-9 && tip.position.y.abs() < 1e-9);
        assert!(tip.position.z > last_z, "z must grow with pressure");
        last_z = tip.position.z;
    }
    // Zero pressure: rest pose up to gravity sag (upright rod compresses).
    let rest = sweep.levels[0].outcome.as_ref().unwrap().tip();
    let length = config.geometry.rod_length_m;
    assert!(rest.position.z < length);
    assert!(length - rest.position.z < 2e-3, "sag {}", length - rest.position.z);
}

#[test]
fn warm_start_reduces_iterations_on_smooth_drive() {
    let mut config = ScenarioConfig::default();
    config.discretization.nodes = 25;
    config.discretization.initial_state = InitialState::Static;
    for s in &mut config.actuation.signals {
        if let SignalConfig::Sinusoid { phase0_rad, .. } = s {
            *phase0_rad = 0.0;
        }
    }
    let total_iters = |warm: bool| -> usize {
        let mut c = config.clone();
        c.solver.warm_start = warm;
        run_dynamic(&c)
            .unwrap()
            .record
            .frames
            .iter()
            .map(|f| f.iterations)
            .sum()
    };
    let warm = total_iters(true);
    let cold = total_iters(false);
    assert!(warm < cold, "warm {warm} iterations vs cold {cold}");
}

#[test]
fn compatibility_residual_decreases_with_dt() {
    // Smooth drive from the static state; the diagnostic is evaluated at
    // the same physical time for both step sizes, after the mild start
    // transient has been damped away.
    let mut config = ScenarioConfig::default();
    config.discretization.nodes = 50;
    for s in &mut config.actuation.signals {
        if let SignalConfig::Sinusoid { phase0_rad, .. } = s {
            *phase0_rad = 0.0;
        }
    }
    for s in &mut config.actuation.signals {
        if let SignalConfig::Sinusoid { omega_rad_per_s, .. } = s {
            *omega_rad_per_s = 6.0;
        }
    }
    let model = config.rod_model().unwrap();
    let actuation = config.actuation().unwrap();
    let solver = config.solver();
    let grid = model.uniform_grid(50);

    // The diagnostic builds its time derivatives from backward differences,
    // which BDF1 enforces identically; the one-parameter scheme leaves an
    // O(dt) gap the residual can see above the spatial floor.
    let residual_for = |dt: f64| -> f64 {
        let scheme = BdfScheme::new(SchemeKind::BdfAlpha, -0.2, dt).unwrap();
        let run = run_dynamic_raw(
            &model,
            &actuation,
            &scheme,
            &solver,
            SpatialMethod::Rk4,
            &grid,
            0.4,
            InitialState::Static,
        )
        .unwrap();
        assert!(run.instability.is_none());
        let newest = run.final_buffer.state(0).unwrap();
        let previous = run.final_buffer.state(1).unwrap();
        let (rq, rw) = compatibility_residual(previous, newest, dt).unwrap();
        rq.amax().max(rw.amax())
    };
    let coarse = residual_for(1.0 / 30.0);
    let fine = residual_for(1.0 / 60.0);
    assert!(
        fine < coarse,
        "compatibility residual did not decrease: {coarse:.3e} -> {fine:.3e}"
    );
}

#[test]
fn strain_transfer_mode_adds_extension_like_the_force_mode() {
    let base = ScenarioConfig::default();
    let model = base.rod_model().unwrap();
    let grid = model.uniform_grid(50);
    let solver = base.solver();
    let tip_for = |mode: RpeModeConfig, bar: f64| {
        let mut c = base.clone();
        c.rpe.mode = mode;
        let mut act = c.actuation().unwrap();
        act.signals = [
            PressureSignal::Constant { bar },
            PressureSignal::zero(),
            PressureSignal::zero(),
        ];
        static_solve(&model, &act, 0.0, &grid, SpatialMethod::Rk4, &solver, &Vector6::zeros())
            .unwrap()
            .state
            .tip()
            .p
    };
    // At rest all modes coincide.
    let rest_off = tip_for(RpeModeConfig::Off, 0.0);
    let rest_force = tip_for(RpeModeConfig::EquivalentForce, 0.0);
    let rest_transfer = tip_for(RpeModeConfig::StrainTransfer, 0.0);
    assert!((rest_off - rest_force).norm() < 1e-9);
    assert!((rest_off - rest_transfer).norm() < 1e-9);
    // Under pressure both couplings displace the tip beyond the plain
    // pressure force, in the same direction.
    let off = tip_for(RpeModeConfig::Off, 0.65);
    let force = tip_for(RpeModeConfig::EquivalentForce, 0.65);
    let transfer = tip_for(RpeModeConfig::StrainTransfer, 0.65);
    assert!((force - off).norm() > 1e-4);
    assert!((transfer - off).norm() > 1e-4);
    assert!(
        (force - transfer).norm() < (force - off).norm(),
        "the two RPE couplings should roughly agree"
    );
}

#[test]
fn unstable_run_reports_step_index_and_partial_record() {
    let mut config = ScenarioConfig::default();
    config.discretization.scheme = softrod::config::SchemeConfig::Trapezoidal;
    let run = run_dynamic(&config).unwrap();
    let inst = run.instability.expect("trapezoidal default run must diverge");
    assert!(inst.step >= 1 && inst.step <= 30);
    assert_eq!(run.record.frames.len(), inst.step);
    assert!(run.record.frames.iter().all(|f| f.t < inst.step as f64 / 30.0 + 1e-12));
}

#[test]
fn static_and_dynamic_paths_reach_the_same_equilibrium() {
    // The settling invariant on a coarse grid, kept cheap; the acceptance
    // suite runs the full-size version.
    let mut config = ScenarioConfig::default();
    config.discretization.nodes = 25;
    config.discretization.scheme = softrod::config::SchemeConfig::Bdf1;
    config.discretization.timeframe_s = 2.0;
    config.actuation.signals = vec![
        SignalConfig::Constant { bar: 0.3 },
        SignalConfig::zero(),
        SignalConfig::zero(),
    ];
    let run = run_dynamic(&config).unwrap();
    assert!(run.instability.is_none());
    let first = run.record.frames[run.record.frames.len() - 2].tip().position;
    let last = run.record.frames.last().unwrap().tip().position;
    assert!((first - last).norm() < 1e-8, "not settled");
}
