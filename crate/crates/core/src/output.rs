//! CSV and JSON emitters. Floats are written with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{Event, EventKind, Front, FrontEnd, Segment, SolverKind, TrackedSolution};
use crate::error::{Error, Result};
use crate::fractional::RunReport;
use crate::functionals::InteractionLedger;
use crate::profile::Profile;
use crate::riemann::WaveKind;
use crate::structure::SubDiscCurve;

pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_num(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t.parse().map_err(|_| Error::Io(format!("not a number: `{t}`"))),
    }
}

fn state_headers(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Writes rows to `path`; returns the number of data rows.
fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<usize> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(rows.len())
}

fn profile_rows(t: Option<f64>, p: &Profile) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(p.states.len());
    for (j, u) in p.states.iter().enumerate() {
        let x = if j == 0 { f64::NEG_INFINITY } else { p.positions[j - 1] };
        let mut r: Vec<String> = t.map(fmt).into_iter().collect();
        r.push(fmt(x));
        r.extend(u.iter().map(|v| fmt(*v)));
        rows.push(r);
    }
    rows
}

/// One row per constancy interval: its left end `x` (`-inf` first) and the state.
pub fn write_profile(path: &Path, p: &Profile) -> Result<usize> {
    let mut header = vec!["x".to_string()];
    header.extend(state_headers("u_", p.dim()));
    write_csv(path, &header, &profile_rows(None, p))
}

/// Reads a profile written by [`write_profile`], or the first snapshot of
/// a snapshots file (leading `t` column).
pub fn read_profile(path: &Path) -> Result<Profile> {
    let mut r = csv::Reader::from_path(path)?;
    let timed = r.headers()?.get(0) == Some("t");
    let mut positions = Vec::new();
    let mut states = Vec::new();
    let mut first_t = None;
    for rec in r.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec.iter().map(parse_num).collect::<Result<_>>()?;
        let vals = if timed {
            let t = vals[0];
            if *first_t.get_or_insert(t) != t {
                break;
            }
            &vals[1..]
        } else {
            &vals[..]
        };
        if !states.is_empty() {
            positions.push(vals[0]);
        }
        states.push(vals[1..].to_vec());
    }
    if states.is_empty() {
        return Err(Error::Io(format!("{}: no profile rows", path.display())));
    }
    if positions.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Io(format!("{}: positions not ordered", path.display())));
    }
    Ok(Profile::new(positions, states))
}

pub fn write_snapshots(path: &Path, sol: &TrackedSolution, times: &[f64]) -> Result<usize> {
    let mut header = vec!["t".to_string(), "x".to_string()];
    header.extend(state_headers("u_", sol.dim));
    let mut rows = Vec::new();
    for t in times {
        rows.extend(profile_rows(Some(*t), &sol.snapshot(*t)?));
    }
    write_csv(path, &header, &rows)
}

/// One row per straight segment of every front.
pub fn write_front_log(path: &Path, sol: &TrackedSolution) -> Result<usize> {
    let mut header: Vec<String> = [
        "front_id", "family", "kind", "size", "speed", "t0", "x0", "t1", "x1", "end",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(state_headers("uL_", sol.dim));
    header.extend(state_headers("uR_", sol.dim));
    let mut rows = Vec::new();
    for f in &sol.fronts {
        for s in &f.segments {
            let x1 = if s.x1.is_finite() { s.x1 } else { f.position(s.t1) };
            let mut r = vec![
                f.id.to_string(),
                f.family.to_string(),
                f.kind.as_str().to_string(),
                fmt(f.size),
                fmt(f.speed),
                fmt(s.t0),
                fmt(s.x0),
                fmt(s.t1),
                fmt(x1),
                format!("{:?}", f.end).to_lowercase(),
            ];
            r.extend(f.left.iter().map(|v| fmt(*v)));
            r.extend(f.right.iter().map(|v| fmt(*v)));
            rows.push(r);
        }
    }
    write_csv(path, &header, &rows)
}

fn ids(v: &[usize]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_event_log(path: &Path, sol: &TrackedSolution) -> Result<usize> {
    let header: Vec<String> = ["event_id", "t", "x", "kind", "incoming", "outgoing", "amount", "solver"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = sol
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            vec![
                i.to_string(),
                fmt(e.t),
                fmt(e.x),
                format!("{:?}", e.kind).to_lowercase(),
                ids(&e.incoming),
                ids(&e.outgoing),
                fmt(e.interaction_amount),
                format!("{:?}", e.solver).to_lowercase(),
            ]
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// Functional series at the start, after every event and at the horizon.
/// A run without events writes no data rows.
pub fn write_functionals(path: &Path, ledger: &InteractionLedger) -> Result<usize> {
    let header: Vec<String> = ["t", "TV", "V", "Q", "Upsilon"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = if ledger.per_event.is_empty() {
        Vec::new()
    } else {
        ledger
            .series
            .iter()
            .map(|s| vec![fmt(s.t), fmt(s.tv), fmt(s.v), fmt(s.q), fmt(s.upsilon)])
            .collect()
    };
    write_csv(path, &header, &rows)
}

pub fn write_atoms(path: &Path, ledger: &InteractionLedger) -> Result<usize> {
    let header: Vec<String> = ["event_id", "t", "x", "family_left", "family_right", "mu_I", "mu_IC"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = ledger
        .atoms
        .iter()
        .map(|a| {
            vec![
                a.event.to_string(),
                fmt(a.t),
                fmt(a.x),
                a.families.0.to_string(),
                a.families.1.to_string(),
                fmt(a.mu_i),
                fmt(a.mu_ic),
            ]
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// One row per curve node; `strength` is that of the segment ending at the node
/// (the first node repeats the first segment's strength).
pub fn write_curves(path: &Path, curves: &[SubDiscCurve]) -> Result<usize> {
    let header: Vec<String> = ["curve_id", "beta", "family", "j", "t", "x", "strength"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for c in curves {
        for (k, (t, x)) in c.nodes.iter().enumerate() {
            let s = c.strengths.get(k.saturating_sub(1)).copied().unwrap_or(0.0);
            rows.push(vec![
                c.id.to_string(),
                fmt(c.beta),
                c.family.to_string(),
                c.j.to_string(),
                fmt(*t),
                fmt(*x),
                fmt(s),
            ]);
        }
    }
    write_csv(path, &header, &rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub rows: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn rows(&self, file: &str) -> Option<usize> {
        self.files.iter().find(|e| e.file == file).map(|e| e.rows)
    }

    fn add(&mut self, file: &str, rows: usize) {
        self.files.push(ManifestEntry {
            file: file.into(),
            rows,
        });
    }
}

/// Writes every output of a run into `dir`, plus `manifest.json`.
pub fn emit_outputs<C: Serialize, S: Serialize>(
    dir: &Path,
    config: &C,
    report: &RunReport,
    curves: &[SubDiscCurve],
    snapshot_times: &[f64],
    summary: &S,
) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let p = |name: &str| -> PathBuf { dir.join(name) };
    let mut m = Manifest::default();
    write_json(&p("config.json"), config)?;
    m.add("config.json", 1);
    m.add(
        "snapshots.csv",
        write_snapshots(&p("snapshots.csv"), &report.solution, snapshot_times)?,
    );
    m.add("fronts.csv", write_front_log(&p("fronts.csv"), &report.solution)?);
    m.add("events.csv", write_event_log(&p("events.csv"), &report.solution)?);
    m.add(
        "functionals.csv",
        write_functionals(&p("functionals.csv"), &report.ledger)?,
    );
    m.add("atoms.csv", write_atoms(&p("atoms.csv"), &report.ledger)?);
    m.add("curves.csv", write_curves(&p("curves.csv"), curves)?);
    write_json(&p("summary.json"), summary)?;
    m.add("summary.json", 1);
    write_json(&p("manifest.json"), &m)?;
    Ok(m)
}

fn parse_end(s: &str) -> Result<FrontEnd> {
    Ok(match s {
        "alive" => FrontEnd::Alive,
        "interaction" => FrontEnd::Interaction,
        "sourcestep" => FrontEnd::SourceStep,
        "horizon" => FrontEnd::Horizon,
        o => return Err(Error::Io(format!("unknown front end `{o}`"))),
    })
}

fn parse_kind(s: &str) -> Result<WaveKind> {
    Ok(match s {
        "SHOCK" => WaveKind::Shock,
        "RAREFACTION" => WaveKind::Rarefaction,
        "CONTACT" => WaveKind::Contact,
        "NONPHYSICAL" => WaveKind::Nonphysical,
        o => return Err(Error::Io(format!("unknown wave kind `{o}`"))),
    })
}

fn parse_ids(s: &str) -> Result<Vec<usize>> {
    s.split(';')
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| Error::Io(format!("bad id list `{s}`"))))
        .collect()
}

/// Rebuilds a solution from a front log and an event log. Speed profiles
/// across fronts are not logged and come back constant.
pub fn read_solution(fronts: &Path, events: &Path, eps: f64, t0: f64, t1: f64) -> Result<TrackedSolution> {
    let mut r = csv::Reader::from_path(fronts)?;
    let dim = (r.headers()?.len() - 10) / 2;
    let mut list: Vec<Front> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| parse_num(&rec[i]);
        let id: usize = rec[0].parse().map_err(|_| Error::Io("bad front id".into()))?;
        let seg = Segment {
            t0: num(5)?,
            x0: num(6)?,
            t1: num(7)?,
            x1: num(8)?,
        };
        if let Some(f) = list.last_mut().filter(|f| f.id == id) {
            f.segments.push(seg);
            continue;
        }
        if id != list.len() {
            return Err(Error::Io(format!("front ids must be consecutive, found {id}")));
        }
        let size = num(3)?;
        let speed = num(4)?;
        list.push(Front {
            id,
            family: rec[1].parse().map_err(|_| Error::Io("bad family".into()))?,
            kind: parse_kind(&rec[2])?,
            size,
            left: (0..dim).map(|d| num(10 + d)).collect::<Result<_>>()?,
            right: (0..dim).map(|d| num(10 + dim + d)).collect::<Result<_>>()?,
            speed,
            speed_left: speed,
            speed_right: speed,
            sigma_profile: vec![(0.0, speed), (size.abs(), speed)],
            segments: vec![seg],
            end: parse_end(&rec[9])?,
        });
    }
    let mut r = csv::Reader::from_path(events)?;
    let mut evs = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        evs.push(Event {
            t: parse_num(&rec[1])?,
            x: parse_num(&rec[2])?,
            kind: match &rec[3] {
                "interaction" => EventKind::Interaction,
                "sourcestep" => EventKind::SourceStep,
                o => return Err(Error::Io(format!("unknown event kind `{o}`"))),
            },
            incoming: parse_ids(&rec[4])?,
            outgoing: parse_ids(&rec[5])?,
            interaction_amount: parse_num(&rec[6])?,
            solver: match &rec[7] {
                "accurate" => SolverKind::Accurate,
                "simplified" => SolverKind::Simplified,
                _ => SolverKind::None,
            },
        });
    }
    let background = list
        .iter()
        .filter(|f| f.t_start() == t0)
        .min_by(|a, b| a.segments[0].x0.partial_cmp(&b.segments[0].x0).unwrap())
        .map(|f| f.left.clone())
        .unwrap_or_else(|| vec![0.0; dim]);
    Ok(TrackedSolution {
        dim,
        eps,
        t0,
        t1,
        fronts: list,
        events: evs,
        background: vec![(t0, background)],
        np_strength: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn profile_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = Profile::new(
            vec![-0.5, 0.25],
            vec![vec![1.0, 2.0], vec![0.1, -0.3], vec![0.0, 1.0 / 3.0]],
        );
        let path = dir.path().join("p.csv");
        assert_eq!(write_profile(&path, &p).unwrap(), 3);
        assert_eq!(read_profile(&path).unwrap(), p);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,u_1,u_2\n-inf,"));
        assert!(!text.contains('\r'));
    }
}
