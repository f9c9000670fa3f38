//! Command implementations behind the `fronttrack` binary.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::{self, DatumSpec, RunConfig};
use crate::diagnostics::{self, Entropy};
use crate::engine::TrackedSolution;
use crate::error::{Error, Result};
use crate::fractional::{self, RunReport};
use crate::model::{State, SystemModel};
use crate::output::{self, Manifest};
use crate::profile::Datum;
use crate::riemann;
use crate::structure::{self, FieldClass, SubDiscCurve};

/// Sub-discontinuity curves for every configured family, beta and index.
pub fn analyze_solution(
    model: &SystemModel,
    sol: &TrackedSolution,
    cfg: &RunConfig,
    base: &[f64],
) -> Result<(Vec<SubDiscCurve>, serde_json::Value)> {
    let mut curves: Vec<SubDiscCurve> = Vec::new();
    let mut families = Vec::new();
    for &k in &cfg.analyzer.families {
        if k >= model.dim() {
            return Err(Error::Constraint(format!("analyzer family {k} out of range")));
        }
        let gnl = structure::gnl_scan_clipped(model, k, base, cfg.analyzer.gnl_span)?;
        let mut counts = Vec::new();
        if gnl.class == FieldClass::PiecewiseGnl {
            let regions = gnl.crossings.len() + 1 + gnl.offset;
            let windows = structure::front_windows(model, sol, k, gnl.offset)?;
            let strengths: Vec<Vec<f64>> = (0..regions)
                .map(|j| structure::strengths_in(sol, &windows, j, cfg.analyzer.parity))
                .collect();
            for &beta in &cfg.analyzer.betas {
                let mut per_j = Vec::new();
                for (j, st) in strengths.iter().enumerate() {
                    let found = structure::chains_from_strengths(sol, st, beta, k, j, cfg.engine.tol_event);
                    per_j.push(found.len());
                    for mut c in found {
                        c.id = curves.len();
                        curves.push(c);
                    }
                }
                counts.push(json!({"beta": beta, "sane": gnl.beta_is_sane(beta), "curves_per_j": per_j}));
            }
        }
        families.push(json!({
            "family": k,
            "class": gnl.class,
            "crossings": gnl.crossings,
            "index_offset": gnl.offset,
            "counts": counts,
        }));
    }
    let split_clause = curves.iter().filter(|c| c.satisfies_split_clause).count();
    let curve_clause = curves.iter().filter(|c| c.satisfies_curve_clause).count();
    Ok((
        curves,
        json!({
            "parity_rule": cfg.analyzer.parity,
            "families": families,
            "curves_satisfying_split_clause": split_clause,
            "curves_satisfying_curve_clause": curve_clause,
        }),
    ))
}

fn snapshot_times(cfg: &RunConfig) -> Vec<f64> {
    if cfg.snapshots.is_empty() {
        vec![0.0, cfg.t_end]
    } else {
        cfg.snapshots.clone()
    }
}

fn run_summary(report: &RunReport, analysis: &serde_json::Value) -> serde_json::Value {
    let sol = &report.solution;
    json!({
        "fronts": sol.fronts.len(),
        "events": sol.events.len(),
        "interactions": sol.interactions().count(),
        "source_steps": report.updates.len(),
        "max_nonphysical_strength": sol.max_np_strength(),
        "k_tv": report.k_tv,
        "k_upsilon": report.k_upsilon,
        "c_g": report.c_g,
        "atoms": report.ledger.atoms.len(),
        "analysis": analysis,
        "wall_seconds": report.wall_seconds,
    })
}

/// `run`: solve, analyze and write every output.
pub fn cmd_run(cfg: &RunConfig, config_dir: &Path, out: &Path) -> Result<Manifest> {
    let model = cfg.build_model()?;
    let initial = cfg.build_datum(&model, config_dir)?;
    log::info!(
        "running {} with {} jumps, eps = {}, tau = {}, T = {}",
        model.name(),
        initial.jump_count(),
        cfg.eps,
        cfg.tau,
        cfg.t_end
    );
    let report = fractional::run(&model, &initial, &cfg.step_config())?;
    let (curves, analysis) = analyze_solution(&model, &report.solution, cfg, initial.left_state())?;
    log::debug!("analysis done: {} curves", curves.len());
    let summary = run_summary(&report, &analysis);
    let m = output::emit_outputs(out, cfg, &report, &curves, &snapshot_times(cfg), &summary)?;
    log::info!("wrote {} files to {}", m.files.len() + 1, out.display());
    Ok(m)
}

/// `riemann`: the wave fan of the configured Riemann datum, as JSON.
pub fn cmd_riemann(cfg: &RunConfig) -> Result<serde_json::Value> {
    let model = cfg.build_model()?;
    let (l, r) = match &cfg.datum {
        DatumSpec::Riemann { u_l, u_r, .. } => (u_l.to_state(), u_r.to_state()),
        _ => return Err(Error::Constraint("the riemann command needs a riemann datum".into())),
    };
    let fan = riemann::solve_riemann(&model, &l, &r, cfg.eps, &cfg.engine.riemann)?;
    let waves: Vec<serde_json::Value> = fan
        .waves
        .iter()
        .map(|w| {
            json!({
                "family": w.family,
                "kind": w.kind.as_str(),
                "size": w.size,
                "left": w.left,
                "right": w.right,
                "speed": w.speed,
            })
        })
        .collect();
    Ok(json!({"sizes": fan.sizes, "states": fan.states, "residual": fan.residual, "waves": waves}))
}

/// `analyze`: curves from the logs of a previous `run` directory.
pub fn cmd_analyze(run_dir: &Path, out: &Path) -> Result<Manifest> {
    let cfg = config::load_config(&run_dir.join("config.json"), &[])?;
    let model = cfg.build_model()?;
    let sol = output::read_solution(
        &run_dir.join("fronts.csv"),
        &run_dir.join("events.csv"),
        cfg.eps,
        0.0,
        cfg.t_end,
    )?;
    let base = output::read_profile(&run_dir.join("snapshots.csv"))?
        .left_state()
        .clone();
    let (curves, analysis) = analyze_solution(&model, &sol, &cfg, &base)?;
    std::fs::create_dir_all(out)?;
    let mut m = Manifest::default();
    let rows = output::write_curves(&out.join("curves.csv"), &curves)?;
    m.files.push(output::ManifestEntry {
        file: "curves.csv".into(),
        rows,
    });
    output::write_json(&out.join("analysis.json"), &analysis)?;
    m.files.push(output::ManifestEntry {
        file: "analysis.json".into(),
        rows: 1,
    });
    Ok(m)
}

#[derive(Serialize)]
struct ModelCheck {
    model: String,
    state: State,
    hyperbolicity: Option<diagnostics::HyperbolicityReport>,
    hyperbolicity_error: Option<String>,
    diagonal_dominance: Option<diagnostics::DiagonalDominance>,
    shizuta_kawashima: Option<diagnostics::ShizutaKawashima>,
    shizuta_kawashima_error: Option<String>,
    entropy_dissipation: Option<diagnostics::EntropyDissipation>,
}

/// `check-model`: structural diagnostics at `state` (default: far-left datum state).
pub fn cmd_check_model(cfg: &RunConfig, config_dir: &Path, state: Option<State>) -> Result<serde_json::Value> {
    let model = cfg.build_model()?;
    let u0 = match state {
        Some(u) => u,
        None => cfg.build_datum(&model, config_dir)?.left_state().clone(),
    };
    model.check_state(&u0)?;
    let (hyperbolicity, hyperbolicity_error) = match diagnostics::check_hyperbolicity(&model, 21) {
        Ok(h) => (Some(h), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (shizuta_kawashima, shizuta_kawashima_error) = match diagnostics::check_shizuta_kawashima(&model, &u0) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = ModelCheck {
        model: model.name().to_string(),
        state: u0.clone(),
        hyperbolicity,
        hyperbolicity_error,
        diagonal_dominance: Some(diagnostics::check_diagonal_dominance(&model, &u0)?),
        shizuta_kawashima,
        shizuta_kawashima_error,
        entropy_dissipation: Entropy::for_model(&model)
            .map(|e| diagnostics::check_entropy_dissipation(&model, &e, &u0, 0.05)),
    };
    serde_json::to_value(report).map_err(|e| Error::Io(e.to_string()))
}

/// `sweep`: convergence study over the configured `(eps, tau)` sequence.
pub fn cmd_sweep(cfg: &RunConfig, config_dir: &Path, out: &Path) -> Result<Manifest> {
    if cfg.sweep.len() < 2 {
        return Err(Error::Constraint("sweep needs at least two (eps, tau) pairs".into()));
    }
    let model = cfg.build_model()?;
    let initial = cfg.build_datum(&model, config_dir)?;
    let times = if cfg.snapshots.is_empty() {
        vec![cfg.t_end]
    } else {
        cfg.snapshots.clone()
    };
    let table = fractional::convergence_study(
        &model,
        &Datum::PiecewiseConstant(initial),
        &cfg.sweep,
        cfg.t_end,
        &times,
        &cfg.step_config(),
    )?;
    std::fs::create_dir_all(out)?;
    output::write_json(&out.join("config.json"), cfg)?;
    let path: PathBuf = out.join("sweep.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)?;
    w.write_record(["eps", "tau", "events", "t", "distance_to_next", "ratio"])?;
    let mut rows = 0;
    for r in &table.rows {
        for (i, t) in table.times.iter().enumerate() {
            let d = r.distances.get(i).copied().unwrap_or(f64::NAN);
            let q = r.ratios.get(i).copied().unwrap_or(f64::NAN);
            w.write_record([
                output::fmt(r.eps),
                output::fmt(r.tau),
                r.events.to_string(),
                output::fmt(*t),
                output::fmt(d),
                output::fmt(q),
            ])?;
            rows += 1;
        }
    }
    w.flush()?;
    output::write_json(&out.join("sweep.json"), &table)?;
    let m = Manifest {
        files: vec![
            output::ManifestEntry {
                file: "config.json".into(),
                rows: 1,
            },
            output::ManifestEntry {
                file: "sweep.csv".into(),
                rows,
            },
            output::ManifestEntry {
                file: "sweep.json".into(),
                rows: 1,
            },
        ],
    };
    output::write_json(&out.join("manifest.json"), &m)?;
    Ok(m)
}
