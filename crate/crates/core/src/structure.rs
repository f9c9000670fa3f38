//! Piecewise genuinely nonlinear geometry: inflection manifolds along
//! rarefaction curves, sub-discontinuities of fronts, and
//! `(beta, i, j)`-approximate sub-discontinuity curves of a run.
//!
//! Region `j` of a family is the part of state space between the manifolds
//! `Z^j` and `Z^{j+1}`, counted along the rarefaction curve through the state.
//! Indices follow the convention in which `grad lambda . r < 0` on even
//! regions; a family with the opposite pattern gets an index offset of one.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::engine::{EventKind, Front, TrackedSolution};
use crate::error::{Error, Result};
use crate::model::{State, SystemModel};
use crate::riemann::{self, ElementaryCurveSolution, RiemannOptions};
use crate::vecops::dist;

/// Bisection tolerance on curve parameters.
pub const CROSSING_TOL: f64 = 1e-10;
/// Below this `|grad lambda . r|` a sample counts as degenerate.
pub const LD_TOL: f64 = 1e-10;
const SCAN_STEP: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FieldClass {
    GenuinelyNonlinear,
    LinearlyDegenerate,
    PiecewiseGnl,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GnlProfile {
    pub family: usize,
    pub base: State,
    pub span: f64,
    pub class: FieldClass,
    /// Parameters `omega^1 < ... < omega^J` of the crossings.
    pub crossings: Vec<f64>,
    pub crossing_states: Vec<State>,
    /// Sign of `grad lambda . r` on each of the `J + 1` regions.
    pub signs: Vec<i8>,
    /// Index offset making `grad lambda . r < 0` on even regions.
    pub offset: usize,
}

impl GnlProfile {
    /// Region index of the base state (offset applied).
    pub fn base_region(&self) -> usize {
        self.crossings.iter().filter(|w| **w < 0.0).count() + self.offset
    }

    /// Smallest gap between consecutive crossings.
    pub fn min_gap(&self) -> f64 {
        self.crossings
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// `beta < dist(Z^j, Z^{j+1}) / 4` for all consecutive manifolds.
    pub fn beta_is_sane(&self, beta: f64) -> bool {
        beta < self.min_gap() / 4.0
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Locates a sign change of `grad lambda . r` between `u` (parameter 0) and
/// parameter `h` along the rarefaction curve.
fn bisect_crossing(model: &SystemModel, k: usize, u: &[f64], h: f64, g0: f64) -> Result<(f64, State)> {
    let (mut lo, mut hi) = (0.0_f64, h);
    let at = |t: f64| -> Result<State> {
        if t == 0.0 {
            return Ok(u.to_vec());
        }
        Ok(riemann::integral_curve(model, k, u, t, 4)?.pop().unwrap())
    };
    while (hi - lo).abs() > CROSSING_TOL {
        let mid = 0.5 * (lo + hi);
        let g = model.nonlinearity(&at(mid)?, k)?;
        if g == 0.0 {
            return Ok((mid, at(mid)?));
        }
        if sign(g) == sign(g0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok((t, at(t)?))
}

struct Scan {
    crossings: Vec<(f64, State)>,
    /// Nonlinearity samples with their parameters.
    samples: Vec<(f64, f64)>,
}

/// Walks the rarefaction curve from `u0` over `[0, span]` (`span` signed).
/// With `strict`, leaving the domain is an error; otherwise the walk stops.
fn scan_direction(model: &SystemModel, k: usize, u0: &[f64], span: f64, strict: bool) -> Result<Scan> {
    let steps = ((span.abs() / SCAN_STEP).ceil() as usize).max(1);
    let h = span / steps as f64;
    let mut u = u0.to_vec();
    let mut g = model.nonlinearity(&u, k)?;
    let mut out = Scan {
        crossings: Vec::new(),
        samples: vec![(0.0, g)],
    };
    if g == 0.0 {
        out.crossings.push((0.0, u.clone()));
    }
    for n in 0..steps {
        let t0 = n as f64 * h;
        let next = match riemann::integral_curve(model, k, &u, h, 4) {
            Ok(mut v) => v.pop().unwrap(),
            Err(Error::DomainEscape { .. } | Error::OutOfDomain { .. }) if !strict => break,
            Err(e) => return Err(e),
        };
        let gn = model.nonlinearity(&next, k)?;
        if sign(g) != 0 && sign(gn) != 0 && sign(g) != sign(gn) {
            let (dt, w) = bisect_crossing(model, k, &u, h, g)?;
            out.crossings.push((t0 + dt, w));
        } else if sign(gn) == 0 && gn == 0.0 && n + 1 < steps {
            // exact zero on a node: record it once, from the side it is reached
            out.crossings.push((t0 + h, next.clone()));
        }
        out.samples.push((t0 + h, gn));
        u = next;
        g = gn;
    }
    Ok(out)
}

/// Crossings of the rarefaction curve through `base` with `grad lambda . r = 0`
/// over parameters `[-span, span]`.
pub fn gnl_scan(model: &SystemModel, family: usize, base: &[f64], span: f64) -> Result<GnlProfile> {
    gnl_scan_with(model, family, base, span, true)
}

/// As [`gnl_scan`], but the walk stops quietly at the edge of the box.
pub fn gnl_scan_clipped(model: &SystemModel, family: usize, base: &[f64], span: f64) -> Result<GnlProfile> {
    gnl_scan_with(model, family, base, span, false)
}

fn gnl_scan_with(model: &SystemModel, family: usize, base: &[f64], span: f64, strict: bool) -> Result<GnlProfile> {
    let fwd = scan_direction(model, family, base, span, strict)?;
    let bwd = scan_direction(model, family, base, -span, strict)?;
    let mut pts: Vec<(f64, State)> = bwd.crossings.into_iter().chain(fwd.crossings).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pts.dedup_by(|a, b| (a.0 - b.0).abs() <= CROSSING_TOL);
    let samples: Vec<(f64, f64)> = bwd.samples.iter().chain(&fwd.samples).copied().collect();
    let degenerate = samples.iter().all(|(_, g)| g.abs() <= LD_TOL);
    let class = if degenerate {
        FieldClass::LinearlyDegenerate
    } else if pts.is_empty() {
        FieldClass::GenuinelyNonlinear
    } else {
        FieldClass::PiecewiseGnl
    };
    if degenerate {
        pts.clear();
    }
    let crossings: Vec<f64> = pts.iter().map(|p| p.0).collect();
    // sign on each region from a sample strictly inside it
    let mut signs = Vec::with_capacity(crossings.len() + 1);
    for r in 0..=crossings.len() {
        let lo = if r == 0 { f64::NEG_INFINITY } else { crossings[r - 1] };
        let hi = crossings.get(r).copied().unwrap_or(f64::INFINITY);
        let s = samples
            .iter()
            .filter(|(t, g)| *t > lo && *t < hi && g.abs() > LD_TOL)
            .map(|(_, g)| sign(*g))
            .next()
            .unwrap_or(0);
        signs.push(s);
    }
    let offset = match signs.iter().enumerate().find(|(_, s)| **s != 0) {
        Some((r, s)) if (r % 2 == 0) == (*s < 0) => 0,
        Some(_) => 1,
        None => 0,
    };
    Ok(GnlProfile {
        family,
        base: base.to_vec(),
        span,
        class,
        crossings,
        crossing_states: pts.into_iter().map(|p| p.1).collect(),
        signs,
        offset,
    })
}

/// One piece of a front between consecutive manifold crossings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Window {
    /// Region index `j` (offset applied).
    pub j: usize,
    /// Parameters of the window ends in traversal order.
    pub tau_from: f64,
    pub tau_to: f64,
    pub from: State,
    pub to: State,
}

impl Window {
    /// Signed length, with the sign of the front.
    pub fn strength(&self) -> f64 {
        self.tau_to - self.tau_from
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubDiscontinuity {
    pub front: Option<usize>,
    pub family: usize,
    pub j: usize,
    pub tau_from: f64,
    pub tau_to: f64,
    pub strength: f64,
    pub from: State,
    pub to: State,
}

/// Which parity clause selects sub-discontinuity windows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityRule {
    /// `s > 0` with `j` even, or `s < 0` with `j` odd (splitting rule).
    Split,
    /// `s > 0` with `j` odd, or `s < 0` with `j` even (curve clause).
    Curve,
    /// Either clause.
    #[default]
    Either,
}

/// Splitting-rule parity check.
pub fn split_parity(s: f64, j: usize) -> bool {
    (s > 0.0 && j.is_multiple_of(2)) || (s < 0.0 && !j.is_multiple_of(2))
}

impl ParityRule {
    pub fn accepts(&self, s: f64, j: usize) -> bool {
        match self {
            ParityRule::Split => split_parity(s, j),
            ParityRule::Curve => s != 0.0 && !split_parity(s, j),
            ParityRule::Either => s != 0.0,
        }
    }
}

/// All windows of a curve, covering `[0, s]` in traversal order.
pub fn split_windows(model: &SystemModel, curve: &ElementaryCurveSolution, offset: usize) -> Result<Vec<Window>> {
    split_windows_cached(model, curve, offset, &mut RegionCache::default())
}

const CACHE_CELL: f64 = 1e-2;

/// Crossing counts of rarefaction curves, reused between nearby states that
/// are joined by a segment free of inflection points.
#[derive(Default)]
pub struct RegionCache {
    entries: HashMap<(usize, Vec<i64>), (State, i8, usize)>,
}

impl RegionCache {
    fn key(k: usize, u: &[f64]) -> (usize, Vec<i64>) {
        (k, u.iter().map(|x| (x / CACHE_CELL).floor() as i64).collect())
    }

    /// Crossings of `R_k[u]` strictly behind `u`, over parameters down to `-span`.
    fn crossings_behind(&mut self, model: &SystemModel, k: usize, u: &[f64], span: f64) -> Result<usize> {
        let g = sign(model.nonlinearity(u, k)?);
        let key = Self::key(k, u);
        let cacheable = g != 0 && span == 4.0;
        if cacheable {
            if let Some((w, gw, n)) = self.entries.get(&key) {
                if *gw == g && same_sign_segment(model, k, u, w, g)? {
                    return Ok(*n);
                }
            }
        }
        let n = scan_direction(model, k, u, -span, false)?
            .crossings
            .iter()
            .filter(|c| c.0.abs() > CROSSING_TOL)
            .count();
        if cacheable {
            self.entries.insert(key, (u.to_vec(), g, n));
        }
        Ok(n)
    }
}

fn same_sign_segment(model: &SystemModel, k: usize, a: &[f64], b: &[f64], g: i8) -> Result<bool> {
    for th in [0.25, 0.5, 0.75] {
        let m: State = a.iter().zip(b).map(|(x, y)| x + th * (y - x)).collect();
        if model.check_state(&m).is_err() || sign(model.nonlinearity(&m, k)?) != g {
            return Ok(false);
        }
    }
    Ok(true)
}

/// As [`split_windows`], sharing crossing counts across calls.
pub fn split_windows_cached(
    model: &SystemModel,
    curve: &ElementaryCurveSolution,
    offset: usize,
    cache: &mut RegionCache,
) -> Result<Vec<Window>> {
    let k = curve.family;
    let s = curve.size;
    if s == 0.0 {
        return Ok(Vec::new());
    }
    let left = &curve.left;
    // region right after leaving u^L in the direction of s, from the
    // rarefaction curve through u^L on the opposite side
    let span = 4.0 * s.abs().max(1.0);
    let at_left = model.nonlinearity(left, k)?.abs() <= LD_TOL;
    // for s < 0 the crossings behind u^L lie along the curve itself
    let behind = cache.crossings_behind(model, k, left, span)?;
    let mut region = behind + usize::from(s > 0.0 && at_left) + offset;
    // walk along the stored curve in traversal order
    let order: Vec<usize> = if s > 0.0 {
        (0..curve.tau.len()).collect()
    } else {
        (0..curve.tau.len()).rev().collect()
    };
    let mut windows = Vec::new();
    let mut start_tau = 0.0;
    let mut start_state = left.clone();
    let mut g = model.nonlinearity(left, k)?;
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        let gb = model.nonlinearity(&curve.states[b], k)?;
        if sign(g) != 0 && sign(gb) != 0 && sign(g) != sign(gb) {
            let h = curve.tau[b] - curve.tau[a];
            let (dt, u) = bisect_crossing(model, k, &curve.states[a], h, g)?;
            let t = curve.tau[a] + dt;
            if (t - start_tau).abs() > CROSSING_TOL {
                windows.push(Window {
                    j: region,
                    tau_from: start_tau,
                    tau_to: t,
                    from: start_state,
                    to: u.clone(),
                });
            }
            start_tau = t;
            start_state = u;
            region = if s > 0.0 { region + 1 } else { region.saturating_sub(1) };
        }
        if sign(gb) != 0 {
            g = gb;
        }
    }
    if (s - start_tau).abs() > CROSSING_TOL || windows.is_empty() {
        windows.push(Window {
            j: region,
            tau_from: start_tau,
            tau_to: s,
            from: start_state,
            to: curve.terminal().clone(),
        });
    } else if let Some(last) = windows.last_mut() {
        last.tau_to = s;
        last.to = curve.terminal().clone();
    }
    Ok(windows)
}

/// Sub-discontinuities of a front given by its elementary curve, under the
/// splitting parity rule.
pub fn split_subdiscontinuities(
    model: &SystemModel,
    curve: &ElementaryCurveSolution,
    gnl: &GnlProfile,
) -> Result<Vec<SubDiscontinuity>> {
    Ok(split_windows(model, curve, gnl.offset)?
        .into_iter()
        .filter(|w| split_parity(curve.size, w.j))
        .map(|w| SubDiscontinuity {
            front: None,
            family: curve.family,
            j: w.j,
            tau_from: w.tau_from,
            tau_to: w.tau_to,
            strength: w.strength(),
            from: w.from,
            to: w.to,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubDiscCurve {
    pub id: usize,
    pub beta: f64,
    pub family: usize,
    pub j: usize,
    /// `(t, x)` nodes, strictly ordered in time.
    pub nodes: Vec<(f64, f64)>,
    /// `|s^j|` on each segment.
    pub strengths: Vec<f64>,
    /// Front id carrying each segment.
    pub fronts: Vec<usize>,
    pub max_strength: f64,
    pub satisfies_split_clause: bool,
    pub satisfies_curve_clause: bool,
}

/// `(i, j)` strength of every physical front of the family (0 when absent).
pub fn front_strengths(
    model: &SystemModel,
    sol: &TrackedSolution,
    family: usize,
    j: usize,
    offset: usize,
    rule: ParityRule,
) -> Result<Vec<f64>> {
    Ok(strengths_in(sol, &front_windows(model, sol, family, offset)?, j, rule))
}

/// Windows of every family-`family` front, indexed by front id.
pub fn front_windows(
    model: &SystemModel,
    sol: &TrackedSolution,
    family: usize,
    offset: usize,
) -> Result<Vec<Vec<Window>>> {
    let mut out = vec![Vec::new(); sol.fronts.len()];
    let mut cache = RegionCache::default();
    let opts = RiemannOptions {
        jump_max: f64::INFINITY,
        ..RiemannOptions::default()
    };
    for f in sol.fronts.iter().filter(|f| f.family == family && !f.is_nonphysical()) {
        if f.size == 0.0 {
            continue;
        }
        let curve = riemann::elementary_curve(model, family, &f.left, f.size, sol.eps, &opts)?;
        out[f.id] = split_windows_cached(model, &curve, offset, &mut cache)?;
    }
    Ok(out)
}

/// Per-front strengths on region `j` from precomputed windows.
pub fn strengths_in(sol: &TrackedSolution, windows: &[Vec<Window>], j: usize, rule: ParityRule) -> Vec<f64> {
    let mut out = vec![0.0; sol.fronts.len()];
    for f in &sol.fronts {
        for w in &windows[f.id] {
            if w.j == j && rule.accepts(f.size, j) {
                out[f.id] = w.strength().abs();
            }
        }
    }
    out
}

/// Event ending each front, if any.
fn ending_events(sol: &TrackedSolution) -> Vec<Option<usize>> {
    let mut out = vec![None; sol.fronts.len()];
    for (k, e) in sol.events.iter().enumerate() {
        for &id in &e.incoming {
            out[id] = Some(k);
        }
    }
    out
}

/// Fronts continuing `f` past its end: outgoing fronts of the interaction
/// ending it, or fronts restarted at the same position after an update.
fn successors(sol: &TrackedSolution, f: &Front, ending: Option<usize>, tol: f64) -> Vec<usize> {
    let t = f.t_end();
    let x = f.position(t);
    let mut out = Vec::new();
    if let Some(e) = ending.map(|k| &sol.events[k]) {
        match e.kind {
            EventKind::Interaction => out.extend(e.outgoing.iter().copied()),
            EventKind::SourceStep => out.extend(
                e.outgoing
                    .iter()
                    .copied()
                    .filter(|&id| (sol.fronts[id].position(t) - x).abs() <= tol * (1.0 + x.abs())),
            ),
        }
    }
    // leftmost first: ascending speed within a fan
    out.sort_by(|a, b| {
        let (fa, fb) = (&sol.fronts[*a], &sol.fronts[*b]);
        (fa.position(t), fa.speed)
            .partial_cmp(&(fb.position(t), fb.speed))
            .unwrap()
    });
    out
}

/// Maximal leftmost `(beta, family, j)` curves of a run, from per-front
/// strengths (see [`front_strengths`]).
pub fn chains_from_strengths(
    sol: &TrackedSolution,
    strengths: &[f64],
    beta: f64,
    family: usize,
    j: usize,
    tol_event: f64,
) -> Vec<SubDiscCurve> {
    let ok = |id: usize| strengths[id] >= beta / 4.0;
    let ending = ending_events(sol);
    let succ: Vec<Vec<usize>> = sol
        .fronts
        .iter()
        .map(|f| {
            if f.end == crate::engine::FrontEnd::Horizon || !ok(f.id) {
                Vec::new()
            } else {
                successors(sol, f, ending[f.id], tol_event)
                    .into_iter()
                    .filter(|&s| ok(s))
                    .collect()
            }
        })
        .collect();
    let mut has_pred = vec![false; sol.fronts.len()];
    for (id, list) in succ.iter().enumerate() {
        if ok(id) {
            for &s in list {
                has_pred[s] = true;
            }
        }
    }
    let mut starts: Vec<usize> = (0..sol.fronts.len()).filter(|&id| ok(id) && !has_pred[id]).collect();
    starts.sort_by(|a, b| {
        let (fa, fb) = (&sol.fronts[*a], &sol.fronts[*b]);
        let (ta, tb) = (fa.t_start(), fb.t_start());
        (ta, fa.position(ta)).partial_cmp(&(tb, fb.position(tb))).unwrap()
    });
    let mut used: HashSet<usize> = HashSet::new();
    let mut curves = Vec::new();
    // fronts reachable only through used fronts start their own chains later
    let mut queue = starts;
    let mut qi = 0;
    while qi < queue.len() {
        let start = queue[qi];
        qi += 1;
        if used.contains(&start) {
            continue;
        }
        let mut chain = vec![start];
        used.insert(start);
        let mut cur = start;
        loop {
            let next = succ[cur].iter().copied().find(|s| !used.contains(s));
            for s in succ[cur].iter().copied().filter(|s| !used.contains(s)) {
                if Some(s) != next {
                    queue.push(s);
                }
            }
            match next {
                Some(n) => {
                    used.insert(n);
                    chain.push(n);
                    cur = n;
                }
                None => break,
            }
        }
        let max_strength = chain.iter().map(|&id| strengths[id]).fold(0.0, f64::max);
        if max_strength < beta {
            continue;
        }
        let mut nodes = Vec::new();
        let mut seg_strengths = Vec::new();
        let mut fronts = Vec::new();
        for &id in &chain {
            let f = &sol.fronts[id];
            for seg in &f.segments {
                let x1 = if seg.x1.is_finite() { seg.x1 } else { f.position(seg.t1) };
                if nodes.last() != Some(&(seg.t0, seg.x0)) {
                    if let Some(last) = nodes.last() {
                        // updates restart fronts at the same point; keep times strictly ordered
                        if last.0 == seg.t0 {
                            nodes.pop();
                        }
                    }
                    nodes.push((seg.t0, seg.x0));
                }
                if seg.t1 > seg.t0 {
                    nodes.push((seg.t1, x1));
                    seg_strengths.push(strengths[id]);
                    fronts.push(id);
                }
            }
        }
        let signs: Vec<f64> = chain.iter().map(|&id| sol.fronts[id].size).collect();
        curves.push(SubDiscCurve {
            id: curves.len(),
            beta,
            family,
            j,
            nodes,
            strengths: seg_strengths,
            fronts,
            max_strength,
            satisfies_split_clause: signs.iter().all(|s| ParityRule::Split.accepts(*s, j)),
            satisfies_curve_clause: signs.iter().all(|s| ParityRule::Curve.accepts(*s, j)),
        });
    }
    curves
}

/// Tracks `(beta, family, j)`-approximate sub-discontinuity curves.
pub fn track_beta_curves(
    model: &SystemModel,
    sol: &TrackedSolution,
    gnl: &GnlProfile,
    beta: f64,
    j: usize,
    rule: ParityRule,
    tol_event: f64,
) -> Result<Vec<SubDiscCurve>> {
    let strengths = front_strengths(model, sol, gnl.family, j, gnl.offset, rule)?;
    Ok(chains_from_strengths(sol, &strengths, beta, gnl.family, j, tol_event))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainMergeReport {
    pub family: usize,
    pub jumps: usize,
    pub tv: f64,
    pub rho: f64,
    /// Family sizes of the single Riemann problem `v(0) -> v(1)`.
    pub merged: Vec<f64>,
    /// Sum of the family sizes of the individual jumps.
    pub summed: f64,
    /// Cross-family content of the individual jumps.
    pub cross_content: f64,
    pub residual: f64,
    /// Smallest `C` with `residual <= C e^{C TV} (1 + TV) rho`.
    pub c_fit: f64,
}

/// `C e^{C tv} (1 + tv) rho`.
pub fn chain_bound(c: f64, tv: f64, rho: f64) -> f64 {
    c * (c * tv).exp() * (1.0 + tv) * rho
}

/// Compares the single Riemann problem across a chain of jumps with the
/// sum of the chain's family-`family` sizes.
pub fn verify_chain_merge(
    model: &SystemModel,
    family: usize,
    states: &[State],
    rho: f64,
    eps: f64,
    opts: &RiemannOptions,
) -> Result<ChainMergeReport> {
    assert!(states.len() >= 2, "a chain needs at least one jump");
    let n = model.dim();
    let first = &states[0];
    let last = states.last().unwrap();
    let merged = riemann::solve_riemann(model, first, last, eps, opts)?.sizes;
    let mut summed = 0.0;
    let mut cross = 0.0;
    let mut tv = 0.0;
    for w in states.windows(2) {
        tv += dist(&w[0], &w[1]);
        let sizes = riemann::solve_riemann(model, &w[0], &w[1], eps, opts)?.sizes;
        for (k, s) in sizes.iter().enumerate() {
            if k == family {
                summed += s;
            } else {
                cross += s.abs();
            }
        }
    }
    let residual =
        (merged[family] - summed).abs() + (0..n).filter(|k| *k != family).map(|k| merged[k].abs()).sum::<f64>();
    let c_fit = if residual <= 0.0 {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        while chain_bound(hi, tv, rho) < residual && hi < 1e12 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if chain_bound(mid, tv, rho) >= residual {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    Ok(ChainMergeReport {
        family,
        jumps: states.len() - 1,
        tv,
        rho,
        merged,
        summed,
        cross_content: cross,
        residual,
        c_fit,
    })
}
