//! Frozen reference values for small hand-checkable problems.

use fronttrack::engine::{advance, EngineOptions};
use fronttrack::fractional::{run, StepConfig};
use fronttrack::functionals::{build_measures, glimm_functionals, DEFAULT_C1};
use fronttrack::profile::Profile;
use fronttrack::riemann::{self, RiemannOptions, WaveKind};
use fronttrack::{SourceTerm, SystemModel};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn burgers_shock_travels_at_rankine_hugoniot_speed() {
    let m = SystemModel::burgers();
    let sol = advance(
        &m,
        &Profile::riemann(0.0, vec![1.0], vec![0.0]),
        0.0,
        1.0,
        0.05,
        &EngineOptions::default(),
    )
    .unwrap();
    assert_eq!(sol.fronts.len(), 1);
    assert_eq!(sol.fronts[0].kind, WaveKind::Shock);
    assert_eq!(sol.fronts[0].speed, 0.5);
    assert_eq!(sol.fronts[0].position(1.0), 0.5);
}

#[test]
fn burgers_fan_has_eps_spaced_fronts() {
    let m = SystemModel::burgers();
    let fan = riemann::solve_riemann(&m, &[0.0], &[1.0], 0.25, &RiemannOptions::default()).unwrap();
    assert_eq!(fan.waves.len(), 4);
    assert!(fan.waves.iter().all(|w| w.kind == WaveKind::Rarefaction));
    for w in &fan.waves {
        assert!(close(w.size, 0.25, 1e-12));
        // speed at the right end of each piece
        assert!(close(w.speed, w.right[0], 1e-12));
    }
}

#[test]
fn merging_burgers_shocks_interaction_amount() {
    // shocks 1 -> 0.5 (speed 0.75) and 0.5 -> 0 (speed 0.25)
    let m = SystemModel::burgers();
    let p = Profile::new(vec![0.0, 0.1], vec![vec![1.0], vec![0.5], vec![0.0]]);
    let sol = advance(&m, &p, 0.0, 1.0, 0.05, &EngineOptions::default()).unwrap();
    let ev: Vec<_> = sol.interactions().collect();
    assert_eq!(ev.len(), 1);
    assert!(close(ev[0].t, 0.2, 1e-12));
    assert!(close(ev[0].x, 0.15, 1e-12));
    assert!(close(ev[0].interaction_amount, 0.0625, 1e-12));
    let ledger = build_measures(&sol, DEFAULT_C1);
    assert_eq!(ledger.atoms.len(), 1);
    // same sign: no cancellation term
    assert!(close(ledger.atoms[0].mu_ic, 0.0625, 1e-12));
    let merged = sol.front(ev[0].outgoing[0]);
    assert!(close(merged.size, -1.0, 1e-12));
    assert!(close(merged.speed, 0.5, 1e-12));
}

#[test]
fn crossing_contacts_give_product_atom() {
    let m = SystemModel::linear_diag(vec![1.0, 2.0]).unwrap();
    let p = Profile::new(vec![0.0, 0.5], vec![vec![0.0, 0.0], vec![0.0, 0.2], vec![0.1, 0.2]]);
    let sol = advance(&m, &p, 0.0, 1.0, 0.05, &EngineOptions::default()).unwrap();
    let ledger = build_measures(&sol, DEFAULT_C1);
    assert_eq!(ledger.atoms.len(), 1);
    assert!(close(ledger.atoms[0].mu_i, 0.02, 1e-12));
    assert!(close(ledger.atoms[0].mu_ic, 0.02, 1e-12));
}

#[test]
fn approaching_pair_potential() {
    // family-2 front left of a family-1 front: Q = |s'| |s''|
    let m = SystemModel::linear_diag(vec![1.0, 2.0]).unwrap();
    let p = Profile::new(vec![0.0, 0.5], vec![vec![0.0, 0.0], vec![0.0, 0.2], vec![0.1, 0.2]]);
    let sol = advance(&m, &p, 0.0, 1.0, 0.05, &EngineOptions::default()).unwrap();
    let before = glimm_functionals(&sol.fronts_at(0.0), DEFAULT_C1);
    let after = glimm_functionals(&sol.fronts_at(1.0), DEFAULT_C1);
    assert!(close(before.v, 0.3, 1e-12));
    assert!(close(before.q, 0.02, 1e-12));
    assert!(close(after.q, 0.0, 1e-12));
    assert!(close(before.upsilon, 0.3 + DEFAULT_C1 * 0.02, 1e-12));
}

#[test]
fn elasticity_speeds_at_unit_strain() {
    let m = SystemModel::elasticity(1.0);
    let es = m.eigen_decompose(&[1.0, 0.0]).unwrap();
    assert!(close(es.lambda[0], -2f64.sqrt(), 1e-12));
    assert!(close(es.lambda[1], 2f64.sqrt(), 1e-12));
}

#[test]
fn relaxation_decays_constant_state() {
    let m = SystemModel::burgers().with_source(SourceTerm::Relaxation { rate: 1.0 });
    let cfg = StepConfig::new(0.1, 0.1, 1.0).unwrap();
    let r = run(&m, &Profile::constant(vec![0.5]), &cfg).unwrap();
    let u = r.snapshot(1.0).unwrap().left_state()[0];
    // nine explicit Euler updates at t = 0.1, ..., 0.9
    assert!(close(u, 0.5 * 0.9f64.powi(9), 1e-14));
}
