//! Event-driven front tracking.
//!
//! Fronts travel along straight segments; the earliest collision between
//! adjacent fronts is processed, two incoming fronts at a time. The local
//! Riemann problem is solved accurately, or by the simplified solver (which
//! emits a nonphysical front carrying the residual) when the amount of
//! interaction is below `rho_np` or a nonphysical front takes part.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::interaction_amount;
use crate::model::{State, SystemModel};
use crate::profile::Profile;
use crate::riemann::{self, ElementaryWave, RiemannOptions, WaveKind};
use crate::vecops::{dist, sub};

/// Jumps below this size are not resolved into fronts.
pub const MIN_JUMP: f64 = 1e-14;

const COINCIDENT: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineOptions {
    /// Simplified-solver threshold; `None` means `eps^2`.
    pub rho_np: Option<f64>,
    /// Waves below this size in a fan solved at an update time are carried by
    /// a nonphysical front; `None` means `eps^3`.
    pub rho_restart: Option<f64>,
    pub max_events: usize,
    pub tol_event: f64,
    /// Collision times are rounded up to multiples of `2^-quantize_bits` times the window.
    pub quantize_bits: i32,
    pub riemann: RiemannOptions,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            rho_np: None,
            rho_restart: None,
            max_events: 10_000_000,
            tol_event: 1e-12,
            quantize_bits: 40,
            riemann: RiemannOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontEnd {
    Alive,
    Interaction,
    SourceStep,
    Horizon,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub t0: f64,
    pub x0: f64,
    pub t1: f64,
    pub x1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Front {
    pub id: usize,
    /// 0-based family; `N` marks a nonphysical front.
    pub family: usize,
    pub kind: WaveKind,
    pub size: f64,
    pub left: State,
    pub right: State,
    pub speed: f64,
    pub speed_left: f64,
    pub speed_right: f64,
    pub sigma_profile: Vec<(f64, f64)>,
    pub segments: Vec<Segment>,
    pub end: FrontEnd,
}

impl Front {
    pub fn is_nonphysical(&self) -> bool {
        self.kind == WaveKind::Nonphysical
    }

    pub fn t_start(&self) -> f64 {
        self.segments[0].t0
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().unwrap().t1
    }

    /// Position at `t`, on the segment covering `t` (extrapolating the last one).
    pub fn position(&self, t: f64) -> f64 {
        let seg = self
            .segments
            .iter()
            .find(|s| t <= s.t1)
            .unwrap_or_else(|| self.segments.last().unwrap());
        if seg.t1.is_finite() && seg.t1 > seg.t0 {
            seg.x0 + (seg.x1 - seg.x0) * (t - seg.t0) / (seg.t1 - seg.t0)
        } else {
            seg.x0 + self.speed * (t - seg.t0)
        }
    }

    /// Strength used by the functionals: `|s|` for physical fronts, `|du|` otherwise.
    pub fn strength(&self) -> f64 {
        if self.is_nonphysical() {
            dist(&self.left, &self.right)
        } else {
            self.size.abs()
        }
    }

    /// Present at time `t` (post-update convention at source steps).
    pub fn alive_at(&self, t: f64) -> bool {
        let (a, b) = (self.t_start(), self.t_end());
        a <= t && (t < b || (t == b && matches!(self.end, FrontEnd::Horizon | FrontEnd::Alive)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Interaction,
    SourceStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Accurate,
    Simplified,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub x: f64,
    pub kind: EventKind,
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
    /// `I(s', s'')` for interactions, 0 at source steps.
    pub interaction_amount: f64,
    pub solver: SolverKind,
}

/// The space-time record of a front-tracking run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackedSolution {
    pub dim: usize,
    pub eps: f64,
    pub t0: f64,
    pub t1: f64,
    pub fronts: Vec<Front>,
    pub events: Vec<Event>,
    /// Far-left state, updated at every (re)start.
    pub background: Vec<(f64, State)>,
    /// Total nonphysical strength after every event.
    pub np_strength: Vec<(f64, f64)>,
}

impl TrackedSolution {
    /// Fronts present at `t`, ordered left to right.
    pub fn fronts_at(&self, t: f64) -> Vec<&Front> {
        let mut alive: Vec<&Front> = self.fronts.iter().filter(|f| f.alive_at(t)).collect();
        alive.sort_by(|a, b| {
            (a.position(t), a.speed, a.id)
                .partial_cmp(&(b.position(t), b.speed, b.id))
                .unwrap()
        });
        // fronts meeting exactly at t: order each cluster so the states chain
        let mut i = 0;
        while i < alive.len() {
            let x = alive[i].position(t);
            let mut j = i + 1;
            while j < alive.len() && alive[j].position(t) - x <= COINCIDENT * (1.0 + x.abs()) {
                j += 1;
            }
            if j - i > 1 {
                let mut state = if i == 0 { None } else { Some(alive[i - 1].right.clone()) };
                for k in i..j {
                    let pick = match &state {
                        Some(u) => (k..j)
                            .min_by(|&a, &b| dist(&alive[a].left, u).total_cmp(&dist(&alive[b].left, u)))
                            .unwrap(),
                        // leftmost cluster: the front whose left state no other front produces
                        None => (k..j)
                            .max_by(|&a, &b| {
                                let lone = |a: usize| {
                                    (i..j)
                                        .filter(|&b| b != a)
                                        .map(|b| dist(&alive[b].right, &alive[a].left))
                                        .fold(f64::INFINITY, f64::min)
                                };
                                lone(a).total_cmp(&lone(b))
                            })
                            .unwrap(),
                    };
                    alive.swap(k, pick);
                    state = Some(alive[k].right.clone());
                }
            }
            i = j;
        }
        alive
    }

    /// Exact piecewise-constant profile `u_nu(t, .)`.
    pub fn snapshot(&self, t: f64) -> Result<Profile> {
        if t < self.t0 || t > self.t1 {
            return Err(Error::OutOfWindow {
                t,
                t0: self.t0,
                t1: self.t1,
            });
        }
        let fronts = self.fronts_at(t);
        let back = self
            .background
            .iter()
            .rev()
            .find(|(s, _)| *s <= t)
            .map(|(_, u)| u.clone())
            .unwrap_or_else(|| self.background[0].1.clone());
        if fronts.is_empty() {
            return Ok(Profile::constant(back));
        }
        let mut states = vec![fronts[0].left.clone()];
        let mut positions = Vec::with_capacity(fronts.len());
        for f in &fronts {
            let x = f.position(t);
            positions.push(positions.last().map_or(x, |p: &f64| p.max(x)));
            states.push(f.right.clone());
        }
        Ok(Profile::new(positions, states))
    }

    pub fn interactions(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Interaction)
    }

    pub fn max_np_strength(&self) -> f64 {
        self.np_strength.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    pub fn front(&self, id: usize) -> &Front {
        &self.fronts[id]
    }
}

/// Merges consecutive waves of one family travelling at the same speed.
fn coalesce(waves: Vec<ElementaryWave>) -> Vec<ElementaryWave> {
    let mut out: Vec<ElementaryWave> = Vec::with_capacity(waves.len());
    for w in waves {
        if let Some(last) = out.last_mut() {
            if last.family == w.family && last.speed == w.speed && last.kind != WaveKind::Nonphysical {
                let off = last.size.abs();
                last.sigma_profile
                    .extend(w.sigma_profile.iter().skip(1).map(|(t, s)| (t + off, *s)));
                last.size += w.size;
                last.right = w.right;
                last.speed_right = w.speed_right.max(last.speed_right);
                last.speed_left = last.speed_left.min(w.speed_left);
                if w.kind == WaveKind::Shock {
                    last.kind = WaveKind::Shock;
                }
                continue;
            }
        }
        out.push(w);
    }
    out
}

/// Front-tracking driver. Owns the growing [`TrackedSolution`].
pub struct Engine<'m> {
    model: &'m SystemModel,
    eps: f64,
    opts: EngineOptions,
    sol: TrackedSolution,
    active: Vec<usize>,
    now: f64,
}

impl<'m> Engine<'m> {
    /// Starts a run at `t0` by solving every jump of `profile`.
    pub fn new(model: &'m SystemModel, profile: &Profile, t0: f64, eps: f64, opts: EngineOptions) -> Result<Self> {
        let mut eng = Self {
            model,
            eps,
            opts,
            sol: TrackedSolution {
                dim: model.dim(),
                eps,
                t0,
                t1: t0,
                fronts: Vec::new(),
                events: Vec::new(),
                background: Vec::new(),
                np_strength: Vec::new(),
            },
            active: Vec::new(),
            now: t0,
        };
        eng.start(profile, t0, None)?;
        Ok(eng)
    }

    pub fn rho_np(&self) -> f64 {
        self.opts.rho_np.unwrap_or(self.eps * self.eps)
    }

    pub fn rho_restart(&self) -> f64 {
        self.opts.rho_restart.unwrap_or(self.eps.powi(3))
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn solution(&self) -> &TrackedSolution {
        &self.sol
    }

    pub fn active_fronts(&self) -> Vec<&Front> {
        self.active.iter().map(|&i| &self.sol.fronts[i]).collect()
    }

    fn start(&mut self, profile: &Profile, t: f64, event: Option<usize>) -> Result<()> {
        self.sol.background.push((t, profile.left_state().clone()));
        let mut np_budget = 0.5 * self.eps;
        for (j, x) in profile.positions.iter().enumerate() {
            let (l, r) = (&profile.states[j], &profile.states[j + 1]);
            if dist(l, r) < MIN_JUMP {
                continue;
            }
            let waves = if event.is_some() {
                self.solve_update_jump(l, r, &mut np_budget)?
            } else {
                self.solve_jump(l, r)?
            };
            let ids = self.spawn(waves, t, *x);
            self.active.extend(&ids);
            if let Some(e) = event {
                self.sol.events[e].outgoing.extend(ids);
            }
        }
        self.record_np(t);
        Ok(())
    }

    fn solve_jump(&self, l: &[f64], r: &[f64]) -> Result<Vec<ElementaryWave>> {
        let fan = riemann::solve_riemann(self.model, l, r, self.eps, &self.opts.riemann)?;
        let mut waves = coalesce(fan.waves);
        if let Some(last) = waves.last_mut() {
            last.right = r.to_vec();
        }
        Ok(waves)
    }

    /// Jump left by a source update: waves below `rho_restart` are folded
    /// into one nonphysical front while the budget lasts.
    fn solve_update_jump(&self, l: &[f64], r: &[f64], np_budget: &mut f64) -> Result<Vec<ElementaryWave>> {
        let sizes = riemann::solve_riemann(self.model, l, r, self.eps, &self.opts.riemann)?.sizes;
        let cut = self.rho_restart();
        if sizes.iter().all(|s| *s == 0.0 || s.abs() >= cut) {
            return self.solve_jump(l, r);
        }
        let mut waves = Vec::new();
        let mut state = l.to_vec();
        for (k, s) in sizes.iter().enumerate() {
            if s.abs() >= cut {
                let (w, end) = self.family_waves(k, &state, *s)?;
                waves.extend(coalesce(w));
                state = end;
            }
        }
        let residual = dist(&state, r);
        if residual > *np_budget {
            return self.solve_jump(l, r);
        }
        *np_budget -= residual;
        if residual >= MIN_JUMP {
            waves.push(ElementaryWave::nonphysical(
                self.model.dim(),
                state,
                r.to_vec(),
                self.model.nonphysical_speed(),
            ));
        } else if let Some(last) = waves.last_mut() {
            last.right = r.to_vec();
        }
        Ok(waves)
    }

    fn spawn(&mut self, waves: Vec<ElementaryWave>, t: f64, x: f64) -> Vec<usize> {
        let mut ids = Vec::with_capacity(waves.len());
        for w in waves {
            let id = self.sol.fronts.len();
            self.sol.fronts.push(Front {
                id,
                family: w.family,
                kind: w.kind,
                size: w.size,
                left: w.left,
                right: w.right,
                speed: w.speed,
                speed_left: w.speed_left,
                speed_right: w.speed_right,
                sigma_profile: w.sigma_profile,
                segments: vec![Segment {
                    t0: t,
                    x0: x,
                    t1: f64::INFINITY,
                    x1: f64::NAN,
                }],
                end: FrontEnd::Alive,
            });
            ids.push(id);
        }
        ids
    }

    fn close(&mut self, id: usize, t: f64, x: f64, end: FrontEnd) {
        let f = &mut self.sol.fronts[id];
        let seg = f.segments.last_mut().unwrap();
        seg.t1 = t;
        seg.x1 = x;
        f.end = end;
    }

    fn position(&self, id: usize, t: f64) -> f64 {
        let f = &self.sol.fronts[id];
        let seg = f.segments.last().unwrap();
        seg.x0 + f.speed * (t - seg.t0)
    }

    fn record_np(&mut self, t: f64) {
        let total: f64 = self
            .active
            .iter()
            .map(|&i| &self.sol.fronts[i])
            .filter(|f| f.is_nonphysical())
            .map(|f| f.strength())
            .sum();
        self.sol.np_strength.push((t, total));
    }

    /// Earliest collision `(t, x, i)` between `active[i]` and `active[i+1]`, quantized.
    fn next_collision(&self, t0: f64, t1: f64) -> Option<(f64, f64, usize)> {
        let q = (t1 - t0) * 2f64.powi(-self.opts.quantize_bits);
        let mut best: Option<(f64, f64, usize)> = None;
        for i in 0..self.active.len().saturating_sub(1) {
            let (a, b) = (self.active[i], self.active[i + 1]);
            let (sa, sb) = (self.sol.fronts[a].speed, self.sol.fronts[b].speed);
            if sa <= sb {
                continue;
            }
            let gap = (self.position(b, self.now) - self.position(a, self.now)).max(0.0);
            let raw = self.now + gap / (sa - sb);
            let mut t = t0 + ((raw - t0) / q).ceil() * q;
            if t < self.now {
                t = self.now;
            }
            let x = 0.5 * (self.position(a, t) + self.position(b, t));
            let better = match best {
                None => true,
                Some((bt, bx, _)) => t < bt || (t == bt && x < bx),
            };
            if better {
                best = Some((t, x, i));
            }
        }
        best
    }

    /// Indices of other active fronts meeting the pair at `(t, x)`.
    fn crowd(&self, t: f64, x: f64, i: usize) -> Vec<usize> {
        let tol = self.opts.tol_event * (1.0 + x.abs());
        (0..self.active.len())
            .filter(|&j| j != i && j != i + 1)
            .filter(|&j| (self.position(self.active[j], t) - x).abs() <= tol)
            .collect()
    }

    /// Bends a front: closes its current segment at `now` and continues at `speed + dv`.
    fn perturb(&mut self, id: usize, dv: f64) {
        let t = self.now;
        let x = self.position(id, t);
        let f = &mut self.sol.fronts[id];
        let seg = f.segments.last_mut().unwrap();
        if seg.t0 == t {
            f.speed += dv;
            return;
        }
        seg.t1 = t;
        seg.x1 = x;
        f.speed += dv;
        f.segments.push(Segment {
            t0: t,
            x0: x,
            t1: f64::INFINITY,
            x1: f64::NAN,
        });
    }

    /// Processes every interaction in `[now, t1)` and moves the clock to `t1`.
    pub fn advance_to(&mut self, t1: f64) -> Result<()> {
        let t0 = self.now;
        let mut count = 0usize;
        while let Some((t, x, i)) = self.next_collision(t0, t1) {
            if t >= t1 {
                break;
            }
            let crowd = self.crowd(t, x, i);
            // three or more fronts meet: push the rightmost one ahead, far enough
            // to clear the event tolerance; if that needs a visible kick, resolve
            // the meeting as a sequence of binary interactions instead
            let lead = t - self.now;
            let dv = (self.eps * 2f64.powi(-20)).max(4.0 * self.opts.tol_event * (1.0 + x.abs()) / lead);
            if !crowd.is_empty() && lead > 0.0 && dv <= self.eps * 2f64.powi(-10) {
                let right = crowd.iter().copied().chain([i + 1]).max().unwrap();
                let id = self.active[right];
                self.perturb(id, dv);
                count += 1;
                if count > self.opts.max_events {
                    return Err(Error::EventOverflow {
                        cap: self.opts.max_events,
                    });
                }
                continue;
            }
            self.now = t;
            self.interact(i, t, x)?;
            count += 1;
            if count > self.opts.max_events {
                return Err(Error::EventOverflow {
                    cap: self.opts.max_events,
                });
            }
        }
        self.now = t1;
        self.sol.t1 = self.sol.t1.max(t1);
        Ok(())
    }

    fn interact(&mut self, i: usize, t: f64, x: f64) -> Result<()> {
        let (ia, ib) = (self.active[i], self.active[i + 1]);
        let a = self.sol.fronts[ia].clone();
        let b = self.sol.fronts[ib].clone();
        let amount = interaction_amount(self.model, &a, &b, self.eps, &self.opts.riemann)?;
        let np_involved = a.is_nonphysical() || b.is_nonphysical();
        let (waves, solver) = if np_involved || amount < self.rho_np() {
            (self.simplified(&a, &b)?, SolverKind::Simplified)
        } else {
            match self.solve_jump(&a.left, &b.right) {
                Ok(w) => (w, SolverKind::Accurate),
                Err(e) => {
                    log::debug!("accurate solver failed at t = {t}: {e}; using simplified solver");
                    (self.simplified(&a, &b)?, SolverKind::Simplified)
                }
            }
        };
        self.close(ia, t, x, FrontEnd::Interaction);
        self.close(ib, t, x, FrontEnd::Interaction);
        let ids = self.spawn(waves, t, x);
        self.active.splice(i..i + 2, ids.iter().copied());
        self.sol.events.push(Event {
            t,
            x,
            kind: EventKind::Interaction,
            incoming: vec![ia, ib],
            outgoing: ids,
            interaction_amount: amount,
            solver,
        });
        self.record_np(t);
        Ok(())
    }

    fn family_waves(&self, k: usize, from: &[f64], s: f64) -> Result<(Vec<ElementaryWave>, State)> {
        if s == 0.0 {
            return Ok((Vec::new(), from.to_vec()));
        }
        let curve = riemann::elementary_curve(self.model, k, from, s, self.eps, &self.opts.riemann)?;
        let end = curve.terminal().clone();
        Ok((riemann::wave_partition(&curve, self.eps, &self.opts.riemann), end))
    }

    /// Outgoing physical waves keep the incoming sizes; the residual is
    /// carried by a nonphysical front.
    fn simplified(&self, a: &Front, b: &Front) -> Result<Vec<ElementaryWave>> {
        let n = self.model.dim();
        let mut waves = Vec::new();
        let mut state = a.left.clone();
        let push = |k: usize, s: f64, state: &mut State, waves: &mut Vec<ElementaryWave>| -> Result<()> {
            let (w, end) = self.family_waves(k, state, s)?;
            waves.extend(coalesce(w));
            *state = end;
            Ok(())
        };
        match (a.is_nonphysical(), b.is_nonphysical()) {
            (true, false) => push(b.family, b.size, &mut state, &mut waves)?,
            (false, false) if a.family == b.family => push(a.family, a.size + b.size, &mut state, &mut waves)?,
            (false, false) => {
                push(b.family, b.size, &mut state, &mut waves)?;
                push(a.family, a.size, &mut state, &mut waves)?;
            }
            _ => {}
        }
        if dist(&state, &b.right) >= MIN_JUMP {
            waves.push(ElementaryWave::nonphysical(
                n,
                state,
                b.right.clone(),
                self.model.nonphysical_speed(),
            ));
        } else if let Some(last) = waves.last_mut() {
            last.right = b.right.clone();
        }
        Ok(waves)
    }

    /// Profile `u(now-, .)` from the active fronts.
    pub fn current_profile(&self) -> Profile {
        let t = self.now;
        if self.active.is_empty() {
            return Profile::constant(self.sol.background.last().unwrap().1.clone());
        }
        let first = &self.sol.fronts[self.active[0]];
        let mut states = vec![first.left.clone()];
        let mut positions = Vec::with_capacity(self.active.len());
        for &id in &self.active {
            let f = &self.sol.fronts[id];
            let x = self.position(id, t);
            // keep order if rounding made neighbours cross
            let x = positions.last().map_or(x, |p: &f64| x.max(*p));
            positions.push(x);
            states.push(f.right.clone());
        }
        Profile::new(positions, states)
    }

    /// Ends every active front at `now` and restarts from `profile`.
    pub fn restart(&mut self, profile: &Profile) -> Result<()> {
        let t = self.now;
        let incoming = self.active.clone();
        for &id in &incoming {
            let x = self.position(id, t);
            self.close(id, t, x, FrontEnd::SourceStep);
        }
        self.active.clear();
        self.sol.events.push(Event {
            t,
            x: f64::NAN,
            kind: EventKind::SourceStep,
            incoming,
            outgoing: Vec::new(),
            interaction_amount: 0.0,
            solver: SolverKind::None,
        });
        let e = self.sol.events.len() - 1;
        self.start(profile, t, Some(e))
    }

    /// Closes the run at `now`.
    pub fn finish(mut self) -> TrackedSolution {
        let t = self.now;
        for id in std::mem::take(&mut self.active) {
            let x = self.position(id, t);
            self.close(id, t, x, FrontEnd::Horizon);
        }
        self.sol.t1 = t;
        self.sol
    }
}

/// Homogeneous front tracking of `profile` over `[t0, t1]`.
pub fn advance(
    model: &SystemModel,
    profile: &Profile,
    t0: f64,
    t1: f64,
    eps: f64,
    opts: &EngineOptions,
) -> Result<TrackedSolution> {
    let mut eng = Engine::new(model, profile, t0, eps, opts.clone())?;
    eng.advance_to(t1)?;
    Ok(eng.finish())
}

/// Residual `|u^R - T_k[u^L](s)|` of a physical front.
pub fn front_residual(model: &SystemModel, f: &Front, eps: f64) -> Result<f64> {
    let end = riemann::terminal_state(model, f.family, &f.left, f.size, eps)?;
    Ok(crate::vecops::norm(&sub(&end, &f.right)))
}
