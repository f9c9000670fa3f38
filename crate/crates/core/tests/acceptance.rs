//! Acceptance criteria 1-10, one PASS/FAIL line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the report.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fronttrack::diagnostics::{self, Entropy};
use fronttrack::engine::{advance, EngineOptions, EventKind, TrackedSolution};
use fronttrack::fractional::{self, RunReport, StepConfig};
use fronttrack::functionals::{self, Rect, DEFAULT_C1};
use fronttrack::model::CattaneoParams;
use fronttrack::profile::Profile;
use fronttrack::riemann::{self, RiemannOptions, WaveKind};
use fronttrack::structure::{self, ParityRule};
use fronttrack::{SourceTerm, State, SystemModel};

// pinned tolerances
const C1_ERR_PER_EPS: f64 = 5.0;
const C1_RATIO: (f64, f64) = (0.4, 0.7);
const C1_SECONDS: f64 = 1.0;
const C2_GRID_TOL: f64 = 1e-6;
const C2_CROSSING_TOL: f64 = 1e-9;
const C3_SLACK: f64 = 1e-12;
const C3_TV: f64 = 0.1;
const C4_SECONDS: f64 = 10.0;
const C5_ORDER_RATIO: (f64, f64) = (0.35, 0.65);
const C6_STABILITY: f64 = 0.2;
const C6_RECTS: usize = 100;
const C7_REFINE_GROWTH: f64 = 2.0;
const C8_RHO: f64 = 0.01;
const C8_DELTA_H: f64 = 0.5;
const C9_SK_TARGET: f64 = 1.0;
const C9_SK_TOL: f64 = 1e-6;
const C9_DD_TOL: f64 = 1e-9;
const C9_RADIUS: f64 = 0.05;

/// Criteria that cannot hold as stated: a damping update re-solves every jump,
/// which creates waves of the other family inside rectangles that have no
/// incoming waves of that family and no interactions, so no finite `C` exists
/// there. They are still run and reported as FAIL.
const UNATTAINABLE: &[usize] = &[6];

type Criterion = dyn Fn(&mut Audit) -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Nonphysical and event-shape audit over every tracked run.
#[derive(Default)]
struct Audit {
    runs: usize,
    worst_np_ratio: f64,
    bad_events: usize,
}

impl Audit {
    fn record(&mut self, sol: &TrackedSolution) {
        self.runs += 1;
        self.worst_np_ratio = self.worst_np_ratio.max(sol.max_np_strength() / sol.eps);
        self.bad_events += sol.interactions().filter(|e| e.incoming.len() != 2).count();
    }
}

fn track(audit: &mut Audit, model: &SystemModel, p: &Profile, t1: f64, eps: f64) -> TrackedSolution {
    let sol = advance(model, p, 0.0, t1, eps, &EngineOptions::default()).expect("homogeneous run");
    audit.record(&sol);
    sol
}

fn solve(audit: &mut Audit, model: &SystemModel, p: &Profile, cfg: &StepConfig) -> RunReport {
    let r = fractional::run(model, p, cfg).expect("fractional run");
    audit.record(&r.solution);
    r
}

fn staircase(rng: &mut ChaCha8Rng, base: &[f64], jumps: usize, tv: f64, width: f64) -> Profile {
    let mut positions: Vec<f64> = (0..jumps).map(|_| rng.gen_range(0.0..width)).collect();
    positions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let per = tv / jumps as f64;
    let mut states = vec![base.to_vec()];
    for _ in 0..jumps {
        let last = states.last().unwrap().clone();
        let dir: Vec<f64> = (0..base.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-12);
        let len = per * rng.gen_range(0.3..1.0);
        states.push(last.iter().zip(&dir).map(|(u, d)| u + len * d / n).collect());
    }
    Profile::new(positions, states)
}

fn c1_scalar_exactness(audit: &mut Audit) -> Outcome {
    let m = SystemModel::burgers();
    let shock = |x: f64| vec![if x < 0.5 { 1.0 } else { 0.0 }];
    let fan = |x: f64| vec![x.clamp(0.0, 1.0)];
    let clock = Instant::now();
    let mut errors = Vec::new();
    for (l, r, exact) in [(1.0, 0.0, &shock as &dyn Fn(f64) -> State), (0.0, 1.0, &fan)] {
        let mut per_eps = Vec::new();
        for eps in [0.05, 0.025] {
            let cfg = StepConfig::new(eps, eps, 1.0).unwrap();
            let rep = solve(audit, &m, &Profile::riemann(0.0, vec![l], vec![r]), &cfg);
            let snap = rep.snapshot(1.0).unwrap();
            per_eps.push(snap.l1_distance_to(exact, -2.0, 3.0, 64));
        }
        errors.push(per_eps);
    }
    let secs = clock.elapsed().as_secs_f64();
    let within = errors.iter().all(|e| e[0] <= C1_ERR_PER_EPS * 0.05);
    // the shock is reproduced exactly, so the halving ratio is read on the fan
    let ratio = errors[1][1] / errors[1][0];
    let pass = within && ratio >= C1_RATIO.0 && ratio <= C1_RATIO.1 && secs < C1_SECONDS;
    Outcome::new(
        pass,
        format!(
            "shock err {:.2e}, fan err {:.2e} (bound {:.2e}), fan halving ratio {ratio:.3}, {secs:.2}s",
            errors[0][0],
            errors[1][0],
            C1_ERR_PER_EPS * 0.05
        ),
    )
}

/// Upper concave (or lower convex) envelope by exhaustive chords.
fn brute_envelope(tau: &[f64], f: &[f64], concave: bool) -> Vec<f64> {
    let n = tau.len();
    (0..n)
        .map(|m| {
            let mut best = f[m];
            for a in 0..=m {
                for b in m..n {
                    if a == b {
                        continue;
                    }
                    let w = (tau[m] - tau[a]) / (tau[b] - tau[a]);
                    let chord = f[a] + w * (f[b] - f[a]);
                    best = if concave { best.max(chord) } else { best.min(chord) };
                }
            }
            best
        })
        .collect()
}

fn c2_nonconvex_fan() -> Outcome {
    let m = SystemModel::quintic();
    let eps = 0.05;
    let opts = RiemannOptions::default();
    let gnl = structure::gnl_scan(&m, 0, &[0.0], 3.0).unwrap();
    let r2 = 2f64.sqrt();
    let crossings_ok = gnl.crossing_states.len() == 3
        && [-r2, 0.0, r2]
            .iter()
            .zip(&gnl.crossing_states)
            .all(|(w, c)| (c[0] - w).abs() < C2_CROSSING_TOL);
    let mut notes = vec![format!("crossings {}", if crossings_ok { "ok" } else { "off" })];
    let mut pass = crossings_ok;
    for (name, ul, ur, want) in [("fig1", 2.582, -2.0, [3usize, 1]), ("fig2", -2.582, 2.0, [0, 2])] {
        let curve = riemann::elementary_curve(&m, 0, &[ul], ur - ul, eps, &opts).unwrap();
        let env = curve.envelope.as_ref().unwrap();
        let brute = brute_envelope(&env.tau, &env.function, env.concave);
        let gap = env
            .values
            .iter()
            .zip(&brute)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let fan = riemann::solve_riemann(&m, &[ul], &[ur], eps, &opts).unwrap();
        let kinds: Vec<WaveKind> = fan.waves.iter().map(|w| w.kind).collect();
        // the fan is one shock attached to a rarefaction ending at u^R
        let shape = kinds.first() == Some(&WaveKind::Shock)
            && kinds[1..].iter().all(|k| *k == WaveKind::Rarefaction)
            && kinds.len() >= 2;
        // the shock ends where the brute envelope touches the flux again
        let h = (env.tau[1] - env.tau[0]).abs();
        let tangent = fan.waves[0].right[0];
        let contact: Vec<usize> = (0..brute.len())
            .filter(|&i| (brute[i] - env.function[i]).abs() <= C2_GRID_TOL)
            .collect();
        let fan_side: Vec<f64> = contact.iter().map(|&i| ul + env.tau[i]).collect();
        let nearest = fan_side
            .iter()
            .map(|u| (u - tangent).abs())
            .fold(f64::INFINITY, f64::min);
        let subs = structure::split_subdiscontinuities(&m, &curve, &gnl).unwrap();
        let js: Vec<usize> = subs.iter().map(|s| s.j).collect();
        let ok = gap <= C2_GRID_TOL && shape && nearest <= 2.0 * h && js == want;
        pass &= ok;
        notes.push(format!(
            "{name}: envelope gap {gap:.1e}, split {js:?}, tangency off {nearest:.1e}"
        ));
    }
    Outcome::new(pass, notes.join("; "))
}

fn c3_functional_monotonicity(audit: &mut Audit) -> Outcome {
    let m = SystemModel::elasticity(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_rise: f64 = f64::NEG_INFINITY;
    let mut c_fit = f64::INFINITY;
    let mut events = 0;
    for _ in 0..20 {
        let p = staircase(&mut rng, &[0.5, 0.0], 5, C3_TV, 1.0);
        let sol = track(audit, &m, &p, 2.0, 0.05);
        let ledger = functionals::build_measures(&sol, DEFAULT_C1);
        for e in ledger.per_event.iter().filter(|e| e.kind == EventKind::Interaction) {
            events += 1;
            worst_rise = worst_rise.max(e.after.upsilon - e.before.upsilon);
            if e.amount > 0.0 {
                c_fit = c_fit.min((e.before.q - e.after.q) / e.amount);
            }
        }
    }
    let pass = events > 0 && worst_rise <= C3_SLACK && c_fit > 0.0;
    Outcome::new(
        pass,
        format!("{events} interactions, max Upsilon rise {worst_rise:.2e}, fitted c {c_fit:.3}"),
    )
}

fn c4_source_bounds(audit: &mut Audit) -> Outcome {
    let m = SystemModel::elasticity(1.0);
    let lip = m.source().lipschitz();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let clock = Instant::now();
    let (mut k, mut cg) = (0.0f64, 0.0f64);
    let mut updates = 0;
    for _ in 0..20 {
        let p = staircase(&mut rng, &[0.5, 0.05], 3, 0.1, 0.5);
        let cfg = StepConfig::new(0.1, 0.1, 0.6).unwrap();
        let r = solve(audit, &m, &p, &cfg);
        updates += r.updates.len();
        k = k.max(r.k_tv).max(r.k_upsilon);
        cg = cg.max(r.c_g);
    }
    let secs = clock.elapsed().as_secs_f64();
    // one K and one C_G for all runs, of the order of the source's Lipschitz constant
    let pass = updates > 0 && k <= 10.0 * lip && cg <= 10.0 * lip && secs < C4_SECONDS;
    Outcome::new(
        pass,
        format!("{updates} updates, fitted K {k:.3e}, fitted C_G {cg:.3e} (Lipschitz {lip}), {secs:.2}s"),
    )
}

fn c5_linear_closed_form(audit: &mut Audit) -> Outcome {
    let m = SystemModel::linear_diag(vec![1.0, 2.0])
        .unwrap()
        .with_source(SourceTerm::Relaxation { rate: 1.0 });
    // amplitude kept below the single-jump limit
    let a = 0.2;
    let p = Profile::new(vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![a, a], vec![0.0, 0.0]]);
    let decay = a * (-1.0f64).exp();
    let exact = |x: f64| -> State {
        [1.0, 2.0]
            .iter()
            .map(|c| if (0.0..1.0).contains(&(x - c)) { decay } else { 0.0 })
            .collect()
    };
    let mut errs = Vec::new();
    let mut eps = 0.1;
    for _ in 0..5 {
        let mut cfg = StepConfig::new(eps, eps, 1.0).unwrap();
        cfg.delta_h = 10.0;
        let r = solve(audit, &m, &p, &cfg);
        errs.push(r.snapshot(1.0).unwrap().l1_distance_to(&exact, -1.0, 4.0, 16));
        eps *= 0.5;
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[1] / w[0]).collect();
    let c = errs
        .iter()
        .enumerate()
        .map(|(i, e)| e / (0.2 * 0.5f64.powi(i as i32)))
        .fold(0.0, f64::max);
    let pass = ratios.iter().all(|q| *q >= C5_ORDER_RATIO.0 && *q <= C5_ORDER_RATIO.1);
    let shown: Vec<String> = ratios.iter().map(|q| format!("{q:.3}")).collect();
    Outcome::new(pass, format!("fitted C {c:.3}, error ratios [{}]", shown.join(", ")))
}

/// Largest per-rectangle `c_min` over the feasible rectangles, and the number
/// of rectangles where no finite `C` works.
fn balance_fit(sol: &TrackedSolution, ledger: &functionals::InteractionLedger, seed: u64, tau: f64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (sol.t1 / tau).round() as usize;
    let mut c: f64 = 0.0;
    let mut infeasible = 0;
    for _ in 0..C6_RECTS {
        let h = rng.gen_range(0..steps);
        let k = rng.gen_range(h + 1..=steps);
        let xa = rng.gen_range(-1.5..1.0);
        let xb = xa + rng.gen_range(0.1..1.5);
        let rect = Rect {
            ta: h as f64 * tau,
            tb: k as f64 * tau,
            xa,
            xb,
        };
        let mut worst: f64 = 0.0;
        for family in 0..2 {
            if let Ok(b) = functionals::region_balance(sol, ledger, rect, family) {
                worst = worst.max(b.c_min);
            }
        }
        if worst.is_finite() {
            c = c.max(worst);
        } else {
            infeasible += 1;
        }
    }
    (c, infeasible)
}

fn c6_region_balances(audit: &mut Audit) -> Outcome {
    let m = SystemModel::elasticity(1.0);
    let p = Profile::new(
        vec![0.0, 0.2, 0.4],
        vec![vec![0.5, 0.0], vec![0.53, 0.02], vec![0.49, -0.01], vec![0.5, 0.0]],
    );
    let tau = 0.1;
    let cfg = StepConfig::new(0.1, tau, 1.0).unwrap();
    let r = solve(audit, &m, &p, &cfg);
    let (ca, ia) = balance_fit(&r.solution, &r.ledger, 61, tau);
    let (cb, ib) = balance_fit(&r.solution, &r.ledger, 62, tau);
    let spread = (ca - cb).abs() / ca.max(cb).max(f64::MIN_POSITIVE);
    let pass = ia == 0 && ib == 0 && spread <= C6_STABILITY;
    Outcome::new(
        pass,
        format!(
            "fitted C {ca:.4} vs {cb:.4} over feasible rectangles, spread {:.1}%; rectangles with no finite C: {ia}/{C6_RECTS} and {ib}/{C6_RECTS}",
            100.0 * spread
        ),
    )
}

fn c7_subdisc_counts(audit: &mut Audit) -> Outcome {
    let m = SystemModel::quintic();
    let p = Profile::new(vec![0.0, 0.5], vec![vec![2.582], vec![-2.0], vec![-1.6]]);
    let gnl = structure::gnl_scan_clipped(&m, 0, &[2.582], 3.0).unwrap();
    let regions = gnl.crossings.len() + 1 + gnl.offset;
    let betas = [0.2, 0.1, 0.05];
    let mut table = Vec::new();
    for eps in [0.08, 0.04, 0.02, 0.01] {
        let sol = track(audit, &m, &p, 1.0, eps);
        let windows = structure::front_windows(&m, &sol, 0, gnl.offset).unwrap();
        let row: Vec<usize> = betas
            .iter()
            .map(|&beta| {
                (0..regions)
                    .map(|j| {
                        let st = structure::strengths_in(&sol, &windows, j, ParityRule::Either);
                        structure::chains_from_strengths(&sol, &st, beta, 0, j, 1e-12).len()
                    })
                    .sum()
            })
            .collect();
        table.push(row);
    }
    let k_of = |row: &[usize]| {
        row.iter()
            .zip(&betas)
            .map(|(n, b)| *n as f64 * b * b)
            .fold(0.0, f64::max)
    };
    let k_coarse = k_of(&table[0]);
    let k_all = table.iter().map(|r| k_of(r)).fold(0.0, f64::max);
    let pass = k_all > 0.0 && k_all <= C7_REFINE_GROWTH * k_coarse;
    Outcome::new(
        pass,
        format!("counts {table:?}, fitted K {k_all:.3} (coarsest {k_coarse:.3})"),
    )
}

fn chain(rng: &mut ChaCha8Rng, m: &SystemModel, start: &[f64], jumps: usize) -> Vec<State> {
    let n = m.dim();
    let big = rng.gen_range(0..jumps);
    let mut out = vec![start.to_vec()];
    for k in 0..jumps {
        let u = out.last().unwrap().clone();
        let s = if k == big {
            rng.gen_range(-0.05..0.05)
        } else {
            rng.gen_range(-C8_RHO..C8_RHO)
        };
        let mut v = riemann::terminal_state(m, 0, &u, s, 0.05).unwrap();
        for other in 1..n {
            let c = rng.gen_range(-0.5 * C8_RHO..0.5 * C8_RHO) / (n - 1) as f64;
            v = riemann::terminal_state(m, other, &v, c, 0.05).unwrap();
        }
        out.push(v);
    }
    out
}

fn c8_chain_merge() -> Outcome {
    let opts = RiemannOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, m, start) in [
        ("burgers", SystemModel::burgers(), vec![0.3]),
        ("elasticity", SystemModel::elasticity(0.0), vec![0.5, 0.0]),
    ] {
        let chains: Vec<Vec<State>> = (0..50)
            .map(|_| {
                let jumps = rng.gen_range(2..8);
                chain(&mut rng, &m, &start, jumps)
            })
            .collect();
        let reports: Vec<_> = chains
            .iter()
            .map(|c| structure::verify_chain_merge(&m, 0, c, C8_RHO, 0.05, &opts).unwrap())
            .collect();
        let c = reports.iter().map(|r| r.c_fit).fold(0.0, f64::max);
        // one C per model that keeps every chain inside the lemma's smallness regime
        let regime = reports
            .iter()
            .all(|r| c * (c * r.tv).exp() * r.tv < C8_DELTA_H && r.residual <= structure::chain_bound(c, r.tv, C8_RHO));
        pass &= c.is_finite() && regime;
        notes.push(format!("{name}: fitted C {c:.3}"));
    }
    Outcome::new(pass, notes.join("; "))
}

fn c9_diagnostics() -> Outcome {
    let cat = SystemModel::cattaneo(CattaneoParams::default()).unwrap();
    let u0 = vec![1.0, 0.0];
    let sk = diagnostics::check_shizuta_kawashima(&cat, &u0).unwrap();
    let coeff = sk.reduced_coefficient.unwrap_or(f64::NAN);
    let dd = diagnostics::check_diagonal_dominance(&cat, &u0).unwrap();
    let ent =
        diagnostics::check_entropy_dissipation(&cat, &Entropy::cattaneo(CattaneoParams::default()), &u0, C9_RADIUS);
    let cat_ok =
        (coeff - C9_SK_TARGET).abs() <= C9_SK_TOL && dd.weak && dd.margin.abs() <= C9_DD_TOL && ent.margin >= 0.0;
    let el = SystemModel::elasticity(1.0);
    let e0 = vec![0.5, 0.0];
    let esk = diagnostics::check_shizuta_kawashima(&el, &e0).unwrap();
    let eent = diagnostics::check_entropy_dissipation(&el, &Entropy::elasticity(1.0), &e0, C9_RADIUS);
    let el_ok = esk.passes && esk.residuals.iter().all(|r| *r > 0.0) && eent.margin > 0.0;
    Outcome::new(
        cat_ok && el_ok,
        format!(
            "cattaneo SK {coeff:.6}, dd margin {:.1e}, entropy margin {:.3e}; elasticity SK min {:.3e}, entropy margin {:.3e}",
            dd.margin,
            ent.margin,
            esk.residuals.iter().copied().fold(f64::INFINITY, f64::min),
            eent.margin
        ),
    )
}

fn c10_nonphysical(audit: &Audit) -> Outcome {
    Outcome::new(
        audit.worst_np_ratio <= 1.0 && audit.bad_events == 0,
        format!(
            "{} runs, max NP strength / eps {:.3e}, events without two incoming fronts {}",
            audit.runs, audit.worst_np_ratio, audit.bad_events
        ),
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        }
    }
}

#[test]
fn acceptance_criteria() {
    let mut audit = Audit::default();
    let mut failed = Vec::new();
    let mut report = |i: usize, name: &str, o: Outcome, secs: f64| {
        println!(
            "criterion {i:>2} {name:<26} {}  {} [{secs:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(i);
        }
    };
    let criteria: [(&str, &Criterion); 9] = [
        ("scalar exactness", &c1_scalar_exactness),
        ("nonconvex fan oracle", &|_| c2_nonconvex_fan()),
        ("functional monotonicity", &c3_functional_monotonicity),
        ("source-step bounds", &c4_source_bounds),
        ("linear closed form", &c5_linear_closed_form),
        ("region balances", &c6_region_balances),
        ("sub-discontinuity counts", &c7_subdisc_counts),
        ("chain merge", &|_| c8_chain_merge()),
        ("model diagnostics", &|_| c9_diagnostics()),
    ];
    for (i, (name, f)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let o = guarded(|| f(&mut audit));
        report(i + 1, name, o, clock.elapsed().as_secs_f64());
    }
    report(10, "nonphysical control", c10_nonphysical(&audit), 0.0);
    let unexpected: Vec<usize> = failed.iter().copied().filter(|i| !UNATTAINABLE.contains(i)).collect();
    let recovered: Vec<usize> = UNATTAINABLE.iter().copied().filter(|i| !failed.contains(i)).collect();
    println!("failing: {failed:?}; documented as unattainable: {UNATTAINABLE:?}");
    assert!(unexpected.is_empty(), "failing criteria: {unexpected:?}");
    assert!(
        recovered.is_empty(),
        "criteria now passing, update UNATTAINABLE: {recovered:?}"
    );
}
