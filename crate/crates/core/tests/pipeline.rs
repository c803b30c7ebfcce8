use std::sync::Arc;

use approx::assert_relative_eq;
use hmfdamp::damping::{extract_modes, fit_damping, scattering_limit, weighted_norm_series, DampingModel};
use hmfdamp::dynamics::{run, Perturbation, RunConfig, SchemeSpec, SplittingVariant, StationaryState};
use hmfdamp::penrose::landau_root;
use hmfdamp::spectral::{MixedField, PhaseGrid, WeightedNormSpec};

fn grid() -> PhaseGrid {
    PhaseGrid::new(16, 128, 8.0).unwrap()
}

fn config(eps: f64, t: f64) -> RunConfig {
    let scheme = SchemeSpec::new(SplittingVariant::Strang, 0.05).unwrap();
    let mut cfg = RunConfig::new(grid(), scheme, eps, t);
    cfg.norms = vec![WeightedNormSpec::new(1, 1.0).unwrap(), WeightedNormSpec::new(5, 1.0).unwrap()];
    cfg
}

#[test]
fn damping_fit_tracks_landau_root() {
    let traj = run(&config(0.01, 25.0)).unwrap();
    let modes = extract_modes(&traj).unwrap();
    let fit = fit_damping(&modes.times, &modes.zeta_p1, (1.0, 24.0), DampingModel::Exponential).unwrap();
    let root = landau_root(&traj.eta).unwrap();
    assert_relative_eq!(fit.rate, root.decay_rate(), max_relative = 0.05);
    assert_relative_eq!(fit.frequency, root.frequency(), max_relative = 0.05);
}

#[test]
fn stationary_run_is_quiet() {
    let mut cfg = config(0.0, 5.0);
    cfg.snapshot_times = vec![1.0, 2.0, 5.0];
    let traj = run(&cfg).unwrap();
    let modes = extract_modes(&traj).unwrap();
    assert!(modes.zeta_p1.iter().all(|z| z.norm() == 0.0));
    let ns = weighted_norm_series(&traj, 5, 1.0).unwrap();
    assert!(ns.q.iter().all(|&q| q == ns.q[0]));
    let sc = scattering_limit(&traj, 1, 1.0).unwrap();
    assert!(sc.cauchy_errors.iter().all(|e| e.1 == 0.0));
}

#[test]
fn conservation_over_a_long_lie_run() {
    let mut cfg = config(0.05, 20.0);
    cfg.scheme = SchemeSpec::new(SplittingVariant::LiePT, 0.1).unwrap();
    cfg.perturbation = Perturbation::MultiMode { seed: 9 };
    let traj = run(&cfg).unwrap();
    let r0 = &traj.records[0];
    for r in &traj.records {
        assert_relative_eq!(r.mass, r0.mass, max_relative = 1e-12);
        assert_relative_eq!(r.l2, r0.l2, max_relative = 1e-12);
    }
}

#[test]
fn snapshot_files_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(0.01, 2.0);
    cfg.snapshot_times = vec![2.0];
    let traj = run(&cfg).unwrap();
    let g = &traj.snapshot_at(2.0).unwrap().g;
    let a = dir.path().join("a.hmf");
    let b = dir.path().join("b.hmf");
    g.save(&a).unwrap();
    let back = MixedField::load(&a).unwrap();
    back.save(&b).unwrap();
    assert_eq!(&back, g);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn mirrored_state_has_mirrored_root() {
    let eta = Arc::new(StationaryState::two_bump(grid(), 1.0, 1.0).unwrap());
    let mirrored = Arc::new(eta.reflected());
    let a = landau_root(&eta).unwrap();
    let b = landau_root(&mirrored).unwrap();
    assert_relative_eq!(a.decay_rate(), b.decay_rate(), max_relative = 1e-8);
    assert_relative_eq!(a.frequency(), b.frequency(), max_relative = 1e-8);
}

#[test]
fn identical_configs_give_identical_trajectories() {
    let mut cfg = config(0.02, 3.0);
    cfg.perturbation = Perturbation::MultiMode { seed: 4 };
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.records, b.records);
}
