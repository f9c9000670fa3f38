//! Wave-strength and interaction functionals, interaction measures and
//! region wave balances.

use std::collections::HashSet;

use serde::Serialize;

use crate::engine::{Event, EventKind, Front, TrackedSolution};
use crate::envelope;
use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::riemann::{self, RiemannOptions};

/// Default weight of `Q` in `Upsilon = V + C1 Q`.
pub const DEFAULT_C1: f64 = 10.0;

/// A piecewise-linear function on an increasing grid.
#[derive(Clone, Debug, PartialEq)]
struct Pwl {
    tau: Vec<f64>,
    val: Vec<f64>,
}

impl Pwl {
    fn eval(&self, t: f64) -> f64 {
        let n = self.tau.len();
        let j = self.tau.partition_point(|x| *x <= t).clamp(1, n - 1);
        let (a, b) = (self.tau[j - 1], self.tau[j]);
        let w = if b > a {
            ((t - a) / (b - a)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.val[j - 1] + w * (self.val[j] - self.val[j - 1])
    }

    /// Nodes strictly inside `(a, b)` plus both ends.
    fn grid(&self, a: f64, b: f64) -> Vec<f64> {
        let slack = 1e-13 * (1.0 + a.abs().max(b.abs()));
        let mut g = vec![a];
        g.extend(self.tau.iter().copied().filter(|t| *t > a + slack && *t < b - slack));
        g.push(b);
        g
    }

    fn envelope(&self, a: f64, b: f64, concave: bool) -> Pwl {
        let tau = self.grid(a, b);
        let val: Vec<f64> = tau.iter().map(|t| self.eval(*t)).collect();
        let env = if concave {
            let neg: Vec<f64> = val.iter().map(|v| -v).collect();
            envelope::convex_envelope_samples(&tau, &neg)
                .0
                .into_iter()
                .map(|v| -v)
                .collect()
        } else {
            envelope::convex_envelope_samples(&tau, &val).0
        };
        Pwl { tau, val: env }
    }

    fn shifted(&self, dx: f64, dy: f64) -> Pwl {
        Pwl {
            tau: self.tau.iter().map(|t| t + dx).collect(),
            val: self.val.iter().map(|v| v + dy).collect(),
        }
    }

    /// `xi -> -f(-xi)`.
    fn mirrored(&self) -> Pwl {
        Pwl {
            tau: self.tau.iter().rev().map(|t| -t).collect(),
            val: self.val.iter().rev().map(|v| -v).collect(),
        }
    }
}

/// `int_a^b |f - g|` by the trapezoid rule on the union of both grids.
fn abs_diff_integral(f: &Pwl, g: &Pwl, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut nodes = f.grid(a, b);
    nodes.extend(g.grid(a, b));
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    nodes.dedup();
    let vals: Vec<f64> = nodes.iter().map(|t| (f.eval(*t) - g.eval(*t)).abs()).collect();
    envelope::trapezoid(&nodes, &vals)
}

/// Same-family amount of interaction for reduced fluxes given on their own
/// parameter intervals (`[0, s]` or `[s, 0]`).
fn same_family_amount(fp: &Pwl, sp: f64, fpp: &Pwl, spp: f64) -> f64 {
    if sp == 0.0 || spp == 0.0 {
        return 0.0;
    }
    // s' < 0 swaps conv and conc, i.e. mirrors both reduced fluxes
    let (fp, sp, fpp, spp) = if sp < 0.0 {
        (fp.mirrored(), -sp, fpp.mirrored(), -spp)
    } else {
        (fp.clone(), sp, fpp.clone(), spp)
    };
    if spp >= 0.0 {
        let end = fp.eval(sp);
        let mut tau = fp.grid(0.0, sp);
        let mut val: Vec<f64> = tau.iter().map(|t| fp.eval(*t)).collect();
        for t in fpp.grid(0.0, spp).into_iter().skip(1) {
            tau.push(sp + t);
            val.push(end + fpp.eval(t));
        }
        let merged = Pwl { tau, val };
        let conv_u = merged.envelope(0.0, sp + spp, false);
        let conv1 = fp.envelope(0.0, sp, false);
        let conv2 = fpp.envelope(0.0, spp, false).shifted(sp, end);
        abs_diff_integral(&conv1, &conv_u, 0.0, sp) + abs_diff_integral(&conv2, &conv_u, sp, sp + spp)
    } else if spp >= -sp {
        let m = sp + spp;
        let conv1 = fp.envelope(0.0, sp, false);
        let part = if m > 0.0 {
            abs_diff_integral(&conv1, &fp.envelope(0.0, m, false), 0.0, m)
        } else {
            0.0
        };
        part + abs_diff_integral(&conv1, &fp.envelope(m, sp, true), m, sp)
    } else {
        // F'' lives on [s'', 0]; xi = eta + s'
        let c_full = fpp.envelope(spp, 0.0, true).shifted(sp, 0.0);
        let c_part = fpp.envelope(spp, -sp, true).shifted(sp, 0.0);
        let v_part = fpp.envelope(-sp, 0.0, false).shifted(sp, 0.0);
        abs_diff_integral(&c_full, &c_part, sp + spp, 0.0) + abs_diff_integral(&c_full, &v_part, 0.0, sp)
    }
}

fn reduced_flux(model: &SystemModel, k: usize, from: &[f64], s: f64, eps: f64, opts: &RiemannOptions) -> Result<Pwl> {
    let c = riemann::elementary_curve(model, k, from, s, eps, opts)?;
    Ok(Pwl {
        tau: c.tau,
        val: c.reduced_flux,
    })
}

/// `I(s', s'')` for a front `a` immediately left of a front `b`.
pub fn interaction_amount(model: &SystemModel, a: &Front, b: &Front, eps: f64, opts: &RiemannOptions) -> Result<f64> {
    if a.is_nonphysical() || b.is_nonphysical() || a.family != b.family {
        return Ok((a.strength() * b.strength()).abs());
    }
    if a.size == 0.0 || b.size == 0.0 {
        return Ok(0.0);
    }
    let fp = reduced_flux(model, a.family, &a.left, a.size, eps, opts)?;
    let fpp = reduced_flux(model, b.family, &b.left, b.size, eps, opts)?;
    let amount = same_family_amount(&fp, a.size, &fpp, b.size);
    if amount.is_finite() {
        Ok(amount)
    } else {
        Err(Error::GridMismatch)
    }
}

/// Amount of interaction for same-family sampled reduced fluxes, exposed for
/// direct checks: `(tau', F')` on the parameter interval of `s'`, likewise `''`.
pub fn same_family_interaction(tau_p: &[f64], f_p: &[f64], s_p: f64, tau_pp: &[f64], f_pp: &[f64], s_pp: f64) -> f64 {
    same_family_amount(
        &Pwl {
            tau: tau_p.to_vec(),
            val: f_p.to_vec(),
        },
        s_p,
        &Pwl {
            tau: tau_pp.to_vec(),
            val: f_pp.to_vec(),
        },
        s_pp,
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Functionals {
    pub v: f64,
    pub q: f64,
    pub q_cross: f64,
    pub q_same: f64,
    pub upsilon: f64,
}

fn trapezoid_weights(tau: &[f64]) -> Vec<f64> {
    let n = tau.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (tau[i + 1] - tau[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// `int int |sigma'(t') - sigma''(t'')|` by the tensor trapezoid rule.
pub fn speed_gap_integral(p: &[(f64, f64)], q: &[(f64, f64)]) -> f64 {
    let tp: Vec<f64> = p.iter().map(|x| x.0).collect();
    let tq: Vec<f64> = q.iter().map(|x| x.0).collect();
    let wp = trapezoid_weights(&tp);
    let wq = trapezoid_weights(&tq);
    let mut total = 0.0;
    for (i, (_, si)) in p.iter().enumerate() {
        for (j, (_, sj)) in q.iter().enumerate() {
            total += wp[i] * wq[j] * (si - sj).abs();
        }
    }
    total
}

/// `V`, `Q` and `Upsilon` of fronts ordered left to right. Nonphysical
/// fronts count as family `N` in cross terms only.
pub fn glimm_functionals(fronts: &[&Front], c1: f64) -> Functionals {
    let v: f64 = fronts.iter().map(|f| f.strength()).sum();
    let (q_cross, q_same) = pair_sums(fronts, None);
    assemble(v, q_cross, q_same, c1)
}

fn assemble(v: f64, q_cross: f64, q_same: f64, c1: f64) -> Functionals {
    let q = q_cross + q_same;
    Functionals {
        v,
        q,
        q_cross,
        q_same,
        upsilon: v + c1 * q,
    }
}

/// `(cross, same)` contribution of the ordered pair `left < right`.
fn pair_term(left: &Front, right: &Front) -> (f64, f64) {
    let cross = if right.family < left.family {
        left.strength() * right.strength()
    } else {
        0.0
    };
    let same = if left.family == right.family && !left.is_nonphysical() && !right.is_nonphysical() {
        0.25 * speed_gap_integral(&left.sigma_profile, &right.sigma_profile)
    } else {
        0.0
    };
    (cross, same)
}

/// Pair sums over all pairs, or only over pairs touching `members`.
fn pair_sums(fronts: &[&Front], members: Option<&[bool]>) -> (f64, f64) {
    let mut cross = 0.0;
    let mut same = 0.0;
    let mut add = |p: usize, r: usize| {
        let (c, s) = pair_term(fronts[p], fronts[r]);
        cross += c;
        same += s;
    };
    match members {
        None => {
            for p in 0..fronts.len() {
                for r in p + 1..fronts.len() {
                    add(p, r);
                }
            }
        }
        Some(m) => {
            for p in (0..fronts.len()).filter(|&p| m[p]) {
                for (r, &mr) in m.iter().enumerate() {
                    // pairs inside `members` once, from their left end
                    if r == p || (mr && r < p) {
                        continue;
                    }
                    if r < p {
                        add(r, p);
                    } else {
                        add(p, r);
                    }
                }
            }
        }
    }
    (cross, same)
}

fn touching(fronts: &[&Front], ids: &[usize]) -> Vec<bool> {
    fronts.iter().map(|f| ids.contains(&f.id)).collect()
}

/// Functionals after one event, from those before it: only pairs touching the
/// incoming or outgoing fronts change.
fn functionals_after(before: &Functionals, pre: &[&Front], post: &[&Front], e: &Event, c1: f64) -> Functionals {
    let (ci, si) = pair_sums(pre, Some(&touching(pre, &e.incoming)));
    let (co, so) = pair_sums(post, Some(&touching(post, &e.outgoing)));
    let v: f64 = post.iter().map(|f| f.strength()).sum();
    assemble(v, before.q_cross - ci + co, before.q_same - si + so, c1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub event: usize,
    pub t: f64,
    pub x: f64,
    pub families: (usize, usize),
    pub sizes: (f64, f64),
    pub mu_i: f64,
    pub mu_ic: f64,
}

/// Functionals just before and after one event.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventFunctionals {
    pub event: usize,
    pub t: f64,
    pub kind: EventKind,
    pub amount: f64,
    pub before: Functionals,
    pub after: Functionals,
    pub tv_before: f64,
    pub tv_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalSample {
    pub t: f64,
    pub tv: f64,
    pub v: f64,
    pub q: f64,
    pub upsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionLedger {
    pub c1: f64,
    pub atoms: Vec<Atom>,
    pub per_event: Vec<EventFunctionals>,
    pub series: Vec<FunctionalSample>,
}

impl InteractionLedger {
    pub fn mu_ic_in(&self, ta: f64, tb: f64, xa: f64, xb: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.t >= ta && a.t <= tb && a.x >= xa && a.x <= xb)
            .map(|a| a.mu_ic)
            .sum()
    }
}

fn profile_tv(fronts: &[&Front]) -> f64 {
    fronts.iter().map(|f| crate::vecops::dist(&f.left, &f.right)).sum()
}

/// Orders a front set at an event time: fronts ending there by their
/// position just before, all others by their position just after.
fn ordered<'a>(set: &[&'a Front], t: f64) -> Vec<&'a Front> {
    let mut v: Vec<&Front> = set.to_vec();
    let key = |f: &Front| {
        let ending = f.t_end() == t && f.t_start() < t;
        (f.position(t), if ending { -f.speed } else { f.speed }, f.id)
    };
    v.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    v
}

/// Atoms of `mu^I`, `mu^IC` and the functional series of a run.
pub fn build_measures(sol: &TrackedSolution, c1: f64) -> InteractionLedger {
    let mut atoms = Vec::new();
    let mut per_event = Vec::new();
    let mut series = Vec::new();
    // initial fronts: started at t0 and not created by an event
    let spawned: HashSet<usize> = sol.events.iter().flat_map(|e| e.outgoing.iter().copied()).collect();
    let mut current: Vec<usize> = sol
        .fronts
        .iter()
        .filter(|f| f.t_start() == sol.t0 && !spawned.contains(&f.id))
        .map(|f| f.id)
        .collect();
    let first: Vec<&Front> = current.iter().map(|&id| &sol.fronts[id]).collect();
    let first = ordered(&first, sol.t0);
    let f0 = glimm_functionals(&first, c1);
    let mut running = f0;
    series.push(FunctionalSample {
        t: sol.t0,
        tv: profile_tv(&first),
        v: f0.v,
        q: f0.q,
        upsilon: f0.upsilon,
    });
    let mut i = 0;
    while i < sol.events.len() {
        let t = sol.events[i].t;
        let mut j = i;
        while j < sol.events.len() && sol.events[j].t == t {
            j += 1;
        }
        for (idx, e) in sol.events[i..j].iter().enumerate() {
            let before_set: Vec<&Front> = current.iter().map(|&id| &sol.fronts[id]).collect();
            let before_set = ordered(&before_set, t);
            current.retain(|id| !e.incoming.contains(id));
            current.extend(e.outgoing.iter().copied());
            let after_set: Vec<&Front> = current.iter().map(|&id| &sol.fronts[id]).collect();
            let after_set = ordered(&after_set, t);
            let before = running;
            let after = if e.kind == EventKind::Interaction {
                functionals_after(&before, &before_set, &after_set, e, c1)
            } else {
                glimm_functionals(&after_set, c1)
            };
            running = after;
            let tv_before = profile_tv(&before_set);
            let tv_after = profile_tv(&after_set);
            per_event.push(EventFunctionals {
                event: i + idx,
                t,
                kind: e.kind,
                amount: e.interaction_amount,
                before,
                after,
                tv_before,
                tv_after,
            });
            series.push(FunctionalSample {
                t,
                tv: tv_after,
                v: after.v,
                q: after.q,
                upsilon: after.upsilon,
            });
            if e.kind == EventKind::Interaction {
                let a = &sol.fronts[e.incoming[0]];
                let b = &sol.fronts[e.incoming[1]];
                let mu_i = e.interaction_amount;
                let same = a.family == b.family && !a.is_nonphysical() && !b.is_nonphysical();
                let cancel = if same {
                    a.size.abs() + b.size.abs() - (a.size + b.size).abs()
                } else {
                    0.0
                };
                atoms.push(Atom {
                    event: i + idx,
                    t,
                    x: e.x,
                    families: (a.family, b.family),
                    sizes: (a.size, b.size),
                    mu_i,
                    mu_ic: mu_i + cancel,
                });
            }
        }
        i = j;
    }
    if sol.t1 > series.last().map_or(sol.t0, |s| s.t) {
        let last = sol.fronts_at(sol.t1);
        let f = glimm_functionals(&last, c1);
        series.push(FunctionalSample {
            t: sol.t1,
            tv: profile_tv(&last),
            v: f.v,
            q: f.q,
            upsilon: f.upsilon,
        });
    }
    InteractionLedger {
        c1,
        atoms,
        per_event,
        series,
    }
}

/// Axis-aligned space-time rectangle `[ta, tb] x [xa, xb]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub ta: f64,
    pub tb: f64,
    pub xa: f64,
    pub xb: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionBalance {
    pub rect: Rect,
    pub family: usize,
    pub w_in_pos: f64,
    pub w_in_neg: f64,
    pub w_out_pos: f64,
    pub w_out_neg: f64,
    pub mu_ic: f64,
    /// `(k - h) tau`, the time span of the region.
    pub span: f64,
    /// Smallest `C` for which both balance inequalities hold; infinite if none.
    pub c_min: f64,
}

fn balance_holds(w_in: f64, w_out: f64, mu: f64, span: f64, c: f64) -> bool {
    let slack = 1e-12 * (1.0 + w_in + w_out);
    let lo = (-span * c).exp() * (w_in - c * mu);
    let base = w_in + c * mu;
    // avoid inf * 0 when the exponential overflows
    let hi = if base > 0.0 { (span * c).exp() * base } else { 0.0 };
    lo <= w_out + slack && w_out <= hi + slack
}

/// Wave balance of family `family` across the edges of `rect`.
pub fn region_balance(
    sol: &TrackedSolution,
    ledger: &InteractionLedger,
    rect: Rect,
    family: usize,
) -> Result<RegionBalance> {
    let Rect { ta, tb, xa, xb } = rect;
    let (mut in_pos, mut in_neg, mut out_pos, mut out_neg) = (0.0, 0.0, 0.0, 0.0);
    let mut add = |entering: bool, s: f64| match (entering, s > 0.0) {
        (true, true) => in_pos += s,
        (true, false) => in_neg -= s,
        (false, true) => out_pos += s,
        (false, false) => out_neg -= s,
    };
    for f in sol.fronts.iter().filter(|f| f.family == family && !f.is_nonphysical()) {
        for seg in &f.segments {
            let speed = if seg.t1 > seg.t0 {
                (seg.x1 - seg.x0) / (seg.t1 - seg.t0)
            } else {
                f.speed
            };
            let at = |t: f64| seg.x0 + speed * (t - seg.t0);
            if seg.t0 <= ta && ta < seg.t1 && at(ta) > xa && at(ta) < xb {
                add(true, f.size);
            }
            if seg.t0 < tb && tb <= seg.t1 && at(tb) > xa && at(tb) < xb {
                add(false, f.size);
            }
            for (edge, sign) in [(xa, 1.0), (xb, -1.0)] {
                let lo = seg.t0.max(ta);
                let hi = seg.t1.min(tb);
                if lo >= hi {
                    continue;
                }
                if speed == 0.0 {
                    if seg.x0 == edge {
                        return Err(Error::NonTransversalEdge { front: f.id });
                    }
                    continue;
                }
                let tc = seg.t0 + (edge - seg.x0) / speed;
                if tc > lo && tc < hi {
                    add(sign * speed > 0.0, f.size);
                }
            }
        }
    }
    let mu = ledger.mu_ic_in(ta, tb, xa, xb);
    let span = tb - ta;
    let ok = |c: f64| balance_holds(in_pos, out_pos, mu, span, c) && balance_holds(in_neg, out_neg, mu, span, c);
    let c_min = if ok(0.0) {
        0.0
    } else if !ok(1e6) {
        f64::INFINITY
    } else {
        let (mut lo, mut hi) = (0.0, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        hi
    };
    Ok(RegionBalance {
        rect,
        family,
        w_in_pos: in_pos,
        w_in_neg: in_neg,
        w_out_pos: out_pos,
        w_out_neg: out_neg,
        mu_ic: mu,
        span,
        c_min,
    })
}
