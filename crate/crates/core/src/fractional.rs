//! Fractional-step solver for balance laws: homogeneous front tracking over
//! windows of length `tau`, followed by explicit source updates.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::engine::{Engine, EngineOptions, EventKind, TrackedSolution};
use crate::error::{Error, Result};
use crate::functionals::{self, FunctionalSample, InteractionLedger};
use crate::model::{gauss_legendre, SourceTerm, State, SystemModel};
use crate::profile::{init_from_datum, Datum, Profile};
use crate::vecops::axpy;

/// Default size below which jumps left by an update are dropped.
pub const MIN_UPDATE_JUMP: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepConfig {
    pub eps: f64,
    pub tau: f64,
    pub t_end: f64,
    /// Weight of `Q` in `Upsilon`.
    pub c1: f64,
    /// Smallness threshold on the initial total variation (advisory).
    pub delta_bar: f64,
    /// Fence on `Upsilon` checked after every update.
    pub delta_h: f64,
    /// Jumps smaller than this after an update are merged away.
    pub min_update_jump: f64,
    pub engine: EngineOptions,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            eps: 0.05,
            tau: 0.05,
            t_end: 1.0,
            c1: functionals::DEFAULT_C1,
            delta_bar: 0.1,
            delta_h: 0.5,
            min_update_jump: MIN_UPDATE_JUMP,
            engine: EngineOptions::default(),
        }
    }
}

impl StepConfig {
    pub fn new(eps: f64, tau: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            eps,
            tau,
            t_end,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Constraint(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.tau > 0.0 && self.tau <= self.eps) {
            return Err(Error::Constraint(format!(
                "tau must satisfy 0 < tau <= eps, got tau = {} with eps = {}",
                self.tau, self.eps
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Constraint(format!("T must be positive, got {}", self.t_end)));
        }
        if self.min_update_jump.is_nan() || self.min_update_jump < 0.0 {
            return Err(Error::Constraint("min_update_jump must be non-negative".into()));
        }
        Ok(())
    }
}

/// Source averaged over the cells `[j eps, (j+1) eps)`.
#[derive(Clone, Debug)]
pub struct CellSource {
    source: SourceTerm,
    eps: f64,
}

impl CellSource {
    pub fn cell_width(&self) -> f64 {
        self.eps
    }

    pub fn varies_in_x(&self) -> bool {
        self.source.depends_on_x()
    }

    pub fn is_zero(&self) -> bool {
        self.source.is_zero()
    }

    pub fn eval(&self, t: f64, x: f64, u: &[f64]) -> State {
        if !self.source.depends_on_x() {
            return self.source.eval(t, x, u);
        }
        let a = (x / self.eps).floor() * self.eps;
        let b = a + self.eps;
        (0..u.len())
            .map(|i| gauss_legendre(|y| self.source.eval(t, y, u)[i], a, b, 1) / self.eps)
            .collect()
    }
}

pub fn discretize_source(model: &SystemModel, eps: f64) -> CellSource {
    CellSource {
        source: model.source().clone(),
        eps,
    }
}

/// `u -> u + tau g_nu(t, x, u)` on every constancy interval.
pub fn apply_source_step(
    model: &SystemModel,
    profile: &Profile,
    g: &CellSource,
    t: f64,
    tau: f64,
    min_jump: f64,
) -> Result<Profile> {
    if g.is_zero() {
        return Ok(profile.clone());
    }
    let mut positions = profile.positions.clone();
    if g.varies_in_x() && !positions.is_empty() {
        let h = g.cell_width();
        let lo = (positions[0] / h).floor() as i64;
        let hi = (positions.last().unwrap() / h).ceil() as i64;
        positions.extend((lo..=hi).map(|j| j as f64 * h));
        positions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        positions.dedup();
    }
    let mut states = Vec::with_capacity(positions.len() + 1);
    for j in 0..=positions.len() {
        // representative point of the interval (cells are half-open on the right)
        let x = match (j.checked_sub(1).map(|i| positions[i]), positions.get(j)) {
            (None, None) => 0.0,
            (None, Some(b)) => b - 0.5 * g.cell_width(),
            (Some(a), None) => a + 0.5 * g.cell_width(),
            (Some(a), Some(b)) => 0.5 * (a + b),
        };
        let u = profile.evaluate(x);
        let v = axpy(tau, &g.eval(t, x, u), u);
        if !model.contains(&v) {
            return Err(Error::DomainEscape { state: v });
        }
        states.push(v);
    }
    Ok(Profile::new(positions, states).simplified(min_jump))
}

/// Functionals around one source update.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpdateRecord {
    pub t: f64,
    pub tv_before: f64,
    pub tv_after: f64,
    pub upsilon_before: f64,
    pub upsilon_after: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: StepConfig,
    pub solution: TrackedSolution,
    pub ledger: InteractionLedger,
    pub updates: Vec<UpdateRecord>,
    /// `max |dTV| / tau` over updates.
    pub k_tv: f64,
    /// `max |dUpsilon| / tau` over updates.
    pub k_upsilon: f64,
    /// Smallest `C_G` with `Upsilon(t) <= Upsilon(0) + C_G t` along the series.
    pub c_g: f64,
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn series(&self) -> &[FunctionalSample] {
        &self.ledger.series
    }

    pub fn snapshot(&self, t: f64) -> Result<Profile> {
        self.solution.snapshot(t)
    }
}

/// Fractional-step run from `initial` over `[0, T]`. Updates happen at every
/// multiple of `tau` strictly inside the horizon.
pub fn run(model: &SystemModel, initial: &Profile, cfg: &StepConfig) -> Result<RunReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let tv0 = initial.total_variation();
    if tv0 > cfg.delta_bar {
        log::info!(
            "initial total variation {tv0} exceeds the smallness threshold {}",
            cfg.delta_bar
        );
    }
    let g = discretize_source(model, cfg.eps);
    let mut eng = Engine::new(model, initial, 0.0, cfg.eps, cfg.engine.clone())?;
    if g.is_zero() {
        eng.advance_to(cfg.t_end)?;
    } else {
        let steps = (cfg.t_end / cfg.tau).ceil() as usize;
        for n in 1..=steps {
            let t = (n as f64 * cfg.tau).min(cfg.t_end);
            eng.advance_to(t)?;
            if n == steps || t >= cfg.t_end {
                break;
            }
            let before = eng.current_profile();
            let after = apply_source_step(model, &before, &g, t, cfg.tau, cfg.min_update_jump)?;
            eng.restart(&after)?;
            let active = eng.active_fronts();
            let ups = functionals::glimm_functionals(&active, cfg.c1).upsilon;
            log::debug!("update at t = {t}: {} fronts, Upsilon = {ups}", active.len());
            if ups > cfg.delta_h {
                return Err(Error::TvBlowup {
                    value: ups,
                    fence: cfg.delta_h,
                    t,
                });
            }
        }
    }
    let solution = eng.finish();
    log::debug!(
        "tracking done: {} fronts, {} events",
        solution.fronts.len(),
        solution.events.len()
    );
    let ledger = functionals::build_measures(&solution, cfg.c1);
    log::debug!("ledger built: {} atoms", ledger.atoms.len());
    let updates: Vec<UpdateRecord> = ledger
        .per_event
        .iter()
        .filter(|e| e.kind == EventKind::SourceStep)
        .map(|e| UpdateRecord {
            t: e.t,
            tv_before: e.tv_before,
            tv_after: e.tv_after,
            upsilon_before: e.before.upsilon,
            upsilon_after: e.after.upsilon,
        })
        .collect();
    let k_tv = updates
        .iter()
        .map(|u| (u.tv_after - u.tv_before).abs() / cfg.tau)
        .fold(0.0, f64::max);
    let k_upsilon = updates
        .iter()
        .map(|u| (u.upsilon_after - u.upsilon_before).abs() / cfg.tau)
        .fold(0.0, f64::max);
    let ups0 = ledger.series[0].upsilon;
    let c_g = ledger
        .series
        .iter()
        .filter(|s| s.t > 0.0)
        .map(|s| (s.upsilon - ups0) / s.t)
        .fold(0.0, f64::max);
    Ok(RunReport {
        config: cfg.clone(),
        solution,
        ledger,
        updates,
        k_tv,
        k_upsilon,
        c_g,
        wall_seconds: clock.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub tau: f64,
    pub events: usize,
    /// `|w_nu(t) - w_{nu+1}(t)|_L1` per requested time; absent on the last row.
    pub distances: Vec<f64>,
    /// Ratio of consecutive distances per time.
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub times: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
}

/// Support of the datum widened by the nonphysical speed times the horizon.
fn comparison_window(model: &SystemModel, datum: &Datum, t_end: f64) -> (f64, f64) {
    let (a, b) = match datum {
        Datum::Function { support, .. } => *support,
        Datum::PiecewiseConstant(p) if p.jump_count() > 0 => (p.positions[0], *p.positions.last().unwrap()),
        Datum::PiecewiseConstant(_) => (0.0, 0.0),
    };
    let reach = model.nonphysical_speed().abs() * t_end + 1.0;
    (a - reach, b + reach)
}

/// Distances are taken over the datum's support widened by the largest
/// front speed times `t_end`.
///
/// Runs every `(eps, tau)` pair concurrently and tabulates the L1 distances
/// between consecutive refinements.
pub fn convergence_study(
    model: &SystemModel,
    datum: &Datum,
    sequence: &[(f64, f64)],
    t_end: f64,
    times: &[f64],
    base: &StepConfig,
) -> Result<ConvergenceTable> {
    let reports: Vec<Result<RunReport>> = std::thread::scope(|s| {
        let handles: Vec<_> = sequence
            .iter()
            .map(|&(eps, tau)| {
                s.spawn(move || {
                    let cfg = StepConfig {
                        eps,
                        tau,
                        t_end,
                        ..base.clone()
                    };
                    let p = init_from_datum(datum, eps)?;
                    run(model, &p, &cfg)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let (a, b) = comparison_window(model, datum, t_end);
    let mut snaps = Vec::with_capacity(reports.len());
    for r in &reports {
        snaps.push(times.iter().map(|t| r.snapshot(*t)).collect::<Result<Vec<_>>>()?);
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (k, r) in reports.iter().enumerate() {
        let distances: Vec<f64> = match snaps.get(k + 1) {
            Some(next) => snaps[k]
                .iter()
                .zip(next)
                .map(|(p, q)| p.l1_distance_on(q, a, b))
                .collect(),
            None => Vec::new(),
        };
        let ratios = match rows.last() {
            Some(prev) if !distances.is_empty() => prev
                .distances
                .iter()
                .zip(&distances)
                .map(|(p, d)| if *p > 0.0 { d / p } else { f64::NAN })
                .collect(),
            _ => Vec::new(),
        };
        rows.push(ConvergenceRow {
            eps: r.config.eps,
            tau: r.config.tau,
            events: r.solution.events.len(),
            distances,
            ratios,
        });
    }
    Ok(ConvergenceTable {
        times: times.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn cell_average_of_x_dependent_source() {
        let m = SystemModel::burgers().with_source(SourceTerm::Custom {
            eval: Arc::new(|_, x, u| vec![x * u[0]]),
            lipschitz: 5.0,
            x_dependent: true,
        });
        let g = discretize_source(&m, 1.0);
        assert!((g.eval(0.0, 0.3, &[2.0])[0] - 1.0).abs() < 1e-14);
        let s = SystemModel::burgers().with_source(SourceTerm::Custom {
            eval: Arc::new(|_, x, u| vec![x.signum() * u[0]]),
            lipschitz: 1.0,
            x_dependent: true,
        });
        assert!((discretize_source(&s, 1.0).eval(0.0, 0.7, &[3.0])[0] - 3.0).abs() < 1e-14);
        let r = SystemModel::burgers().with_source(SourceTerm::Relaxation { rate: 1.0 });
        assert_eq!(discretize_source(&r, 0.1).eval(0.0, 0.35, &[2.0]), vec![-2.0]);
    }

    #[test]
    fn euler_recursion_on_constant_profile() {
        let m = SystemModel::burgers().with_source(SourceTerm::Relaxation { rate: 1.0 });
        let g = discretize_source(&m, 0.1);
        let mut p = Profile::constant(vec![1.0]);
        for k in 0..10 {
            p = apply_source_step(&m, &p, &g, 0.1 * k as f64, 0.1, MIN_UPDATE_JUMP).unwrap();
        }
        assert!((p.states[0][0] - 0.9f64.powi(10)).abs() < 1e-15);
        assert!((p.states[0][0] - 0.34868).abs() < 1e-5);
    }

    #[test]
    fn zero_source_is_identity_and_matches_pure_tracking() {
        let m = SystemModel::burgers();
        let p = Profile::new(vec![0.0, 0.1], vec![vec![1.0], vec![0.5], vec![0.0]]);
        let g = discretize_source(&m, 0.05);
        assert_eq!(apply_source_step(&m, &p, &g, 0.0, 0.05, MIN_UPDATE_JUMP).unwrap(), p);
        let cfg = StepConfig::new(0.05, 0.05, 1.0).unwrap();
        let r = run(&m, &p, &cfg).unwrap();
        let pure = crate::engine::advance(&m, &p, 0.0, 1.0, 0.05, &cfg.engine).unwrap();
        assert_eq!(r.solution.events, pure.events);
        assert!(r.updates.is_empty());
    }

    #[test]
    fn tau_above_eps_is_rejected() {
        assert!(matches!(StepConfig::new(0.05, 0.1, 1.0), Err(Error::Constraint(_))));
    }

    #[test]
    fn damped_jump_keeps_its_sign() {
        let m = SystemModel::burgers().with_source(SourceTerm::Relaxation { rate: 1.0 });
        let p = Profile::riemann(0.0, vec![0.1], vec![0.0]);
        let cfg = StepConfig::new(0.05, 0.05, 1.0).unwrap();
        let r = run(&m, &p, &cfg).unwrap();
        assert_eq!(r.updates.len(), 19);
        let end = r.snapshot(1.0).unwrap();
        assert!((end.left_state()[0] - 0.1 * 0.95f64.powi(19)).abs() < 1e-15);
        for u in &r.updates {
            assert!(u.tv_after <= u.tv_before);
        }
        assert!(r.k_tv <= 0.1 + 1e-12);
    }

    #[test]
    fn constant_datum_has_zero_distances() {
        let m = SystemModel::burgers();
        let d = Datum::PiecewiseConstant(Profile::constant(vec![0.2]));
        let t = convergence_study(&m, &d, &[(0.1, 0.1), (0.05, 0.05)], 0.5, &[0.5], &StepConfig::default()).unwrap();
        assert_eq!(t.rows[0].distances, vec![0.0]);
    }
}
