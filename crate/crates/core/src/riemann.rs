//! Elementary curves, wave fans and Hugoniot classification.
//!
//! The elementary curve of family `k` from `uL` solves the integral system
//! `u' = r~_k`, `v = F~ - env F~`, `sigma = (env F~)'` on `[0, s]` (or `[s, 0]`),
//! where `F~(tau) = int_0^tau lambda~_k` is the reduced flux and `env` is the
//! lower convex envelope for `s > 0` and the upper concave one for `s < 0`.
//! The center-manifold vector field is closed at zeroth order,
//! `r~_k(u, v, sigma) = r_k(u)`, so `lambda~_k = lambda_k(u)`. With this
//! closure the `u` component is the integral curve of `r_k`, integrated
//! with RK4 on the parameter grid; the Picard sweep then updates `(v, sigma)`.
//!
//! Arrays in [`ElementaryCurveSolution`] are stored in increasing `tau`
//! order for both signs of `s`; for `s < 0` the left state sits at the end.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::envelope::{self, EnvelopeResult, IntervalKind, SampledFunction};
use crate::error::{Error, Result};
use crate::model::{FluxKind, State, SystemModel};
use crate::vecops::{axpy, dist, dot, norm, sub};

/// Tolerances of the Riemann solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiemannOptions {
    /// Largest `|uR - uL|` accepted for systems.
    pub jump_max: f64,
    pub tol_rp: f64,
    pub tol_fp: f64,
    pub max_iter: usize,
    pub newton_max_iter: usize,
    /// Relative spread of `sigma` below which a contact run is a contact discontinuity.
    pub contact_speed_tol: f64,
}

impl Default for RiemannOptions {
    fn default() -> Self {
        Self {
            jump_max: 0.3,
            tol_rp: 1e-10,
            tol_fp: 1e-11,
            max_iter: 200,
            newton_max_iter: 50,
            contact_speed_tol: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WaveKind {
    Shock,
    Rarefaction,
    Contact,
    Nonphysical,
}

impl WaveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            WaveKind::Shock => "SHOCK",
            WaveKind::Rarefaction => "RAREFACTION",
            WaveKind::Contact => "CONTACT",
            WaveKind::Nonphysical => "NONPHYSICAL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementaryCurveSolution {
    pub family: usize,
    pub left: State,
    pub size: f64,
    /// Increasing grid covering `[min(0,s), max(0,s)]`.
    pub tau: Vec<f64>,
    pub states: Vec<State>,
    /// Shock-layer intensity `F~ - env F~`.
    pub v: Vec<f64>,
    pub sigma: Vec<f64>,
    pub reduced_flux: Vec<f64>,
    pub lambda: Vec<f64>,
    #[serde(skip)]
    pub envelope: Option<EnvelopeResult>,
    pub iterations: usize,
}

impl ElementaryCurveSolution {
    /// Index of the node at `tau = 0`.
    pub fn origin(&self) -> usize {
        if self.size >= 0.0 {
            0
        } else {
            self.tau.len() - 1
        }
    }

    /// Index of the node at `tau = s`.
    pub fn terminal_index(&self) -> usize {
        if self.size >= 0.0 {
            self.tau.len() - 1
        } else {
            0
        }
    }

    pub fn terminal(&self) -> &State {
        &self.states[self.terminal_index()]
    }

    /// State on the curve at an arbitrary parameter, by linear interpolation.
    pub fn state_at(&self, t: f64) -> State {
        let n = self.tau.len();
        let j = self.tau.partition_point(|x| *x <= t).clamp(1, n - 1);
        let (a, b) = (self.tau[j - 1], self.tau[j]);
        let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
        self.states[j - 1]
            .iter()
            .zip(&self.states[j])
            .map(|(p, q)| p + w * (q - p))
            .collect()
    }
}

/// One wave of a fan: a front of a single family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementaryWave {
    /// 0-based family; `N` for nonphysical waves.
    pub family: usize,
    pub kind: WaveKind,
    pub size: f64,
    pub left: State,
    pub right: State,
    pub speed_left: f64,
    pub speed_right: f64,
    /// Travel speed of the front.
    pub speed: f64,
    /// `(|tau| offset from the wave's left end, sigma)` samples across the wave.
    pub sigma_profile: Vec<(f64, f64)>,
}

impl ElementaryWave {
    pub fn nonphysical(family: usize, left: State, right: State, speed: f64) -> Self {
        let size = dist(&left, &right);
        Self {
            family,
            kind: WaveKind::Nonphysical,
            size,
            left,
            right,
            speed_left: speed,
            speed_right: speed,
            speed,
            sigma_profile: vec![(0.0, speed), (size, speed)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveFan {
    pub waves: Vec<ElementaryWave>,
    /// `omega_0 = uL, ..., omega_N = uR`.
    pub states: Vec<State>,
    pub sizes: Vec<f64>,
    pub residual: f64,
}

/// RK4 step count for a curve of size `s` at accuracy `eps`:
/// spacing `h_curve = min(eps/8, |s|/64)`.
pub fn curve_steps(s: f64, eps: f64) -> usize {
    let by_eps = (8.0 * s.abs() / eps).ceil();
    (by_eps as usize).max(64)
}

fn rhs(model: &SystemModel, k: usize, u: &[f64]) -> Result<State> {
    model.right_vector(u, k).map_err(|e| match e {
        Error::OutOfDomain { state } => Error::DomainEscape { state },
        other => other,
    })
}

/// Nodes of the integral curve of `r_k` from `u0` over `tau in [0, s]`, in traversal order.
pub fn integral_curve(model: &SystemModel, k: usize, u0: &[f64], s: f64, steps: usize) -> Result<Vec<State>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(u0.to_vec());
    if model.dim() == 1 {
        for i in 1..=steps {
            let u = vec![u0[0] + s * i as f64 / steps as f64];
            if !model.contains(&u) {
                return Err(Error::DomainEscape { state: u });
            }
            out.push(u);
        }
        return Ok(out);
    }
    let h = s / steps as f64;
    let mut u = u0.to_vec();
    for _ in 0..steps {
        let k1 = rhs(model, k, &u)?;
        let k2 = rhs(model, k, &axpy(0.5 * h, &k1, &u))?;
        let k3 = rhs(model, k, &axpy(0.5 * h, &k2, &u))?;
        let k4 = rhs(model, k, &axpy(h, &k3, &u))?;
        u = u
            .iter()
            .enumerate()
            .map(|(d, x)| x + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]))
            .collect();
        if !model.contains(&u) {
            return Err(Error::DomainEscape { state: u });
        }
        out.push(u.clone());
    }
    Ok(out)
}

/// `T_k[u](s)`.
pub fn terminal_state(model: &SystemModel, k: usize, u: &[f64], s: f64, eps: f64) -> Result<State> {
    if s == 0.0 {
        return Ok(u.to_vec());
    }
    let nodes = integral_curve(model, k, u, s, curve_steps(s, eps))?;
    Ok(nodes.last().unwrap().clone())
}

fn scalar_flux(model: &SystemModel) -> bool {
    model.dim() == 1 && !matches!(model.flux_kind(), FluxKind::Matrix(_))
}

/// Solves the elementary-curve integral system by Picard sweeps.
pub fn elementary_curve(
    model: &SystemModel,
    k: usize,
    left: &[f64],
    s: f64,
    eps: f64,
    opts: &RiemannOptions,
) -> Result<ElementaryCurveSolution> {
    model.check_state(left)?;
    let steps = curve_steps(s, eps);
    let mut traversal = integral_curve(model, k, left, s, steps)?;
    let mut tau: Vec<f64> = (0..=steps).map(|i| s * i as f64 / steps as f64).collect();
    if s < 0.0 {
        traversal.reverse();
        tau.reverse();
    }
    let states = traversal;
    let lambda = states.iter().map(|u| model.lambda(u, k)).collect::<Result<Vec<_>>>()?;
    let origin = if s < 0.0 { steps } else { 0 };

    // reduced flux, exact for scalar conservative fluxes
    let reduced_flux: Vec<f64> = if scalar_flux(model) {
        let f0 = model.flux(left).unwrap()[0];
        states.iter().map(|u| model.flux(u).unwrap()[0] - f0).collect()
    } else {
        let mut acc = vec![0.0; states.len()];
        for i in origin + 1..states.len() {
            acc[i] = acc[i - 1] + 0.5 * (tau[i] - tau[i - 1]) * (lambda[i] + lambda[i - 1]);
        }
        for i in (0..origin).rev() {
            acc[i] = acc[i + 1] - 0.5 * (tau[i + 1] - tau[i]) * (lambda[i] + lambda[i + 1]);
        }
        acc
    };

    if s == 0.0 {
        let n = states.len();
        return Ok(ElementaryCurveSolution {
            family: k,
            left: left.to_vec(),
            size: 0.0,
            tau: vec![0.0; n],
            v: vec![0.0; n],
            sigma: lambda.clone(),
            reduced_flux,
            lambda,
            states,
            envelope: None,
            iterations: 0,
        });
    }

    let sampled = SampledFunction::new(tau.clone(), reduced_flux.clone())?;
    let (a, b) = (tau[0], tau[tau.len() - 1]);
    let mut sigma = vec![f64::NAN; tau.len()];
    let mut v = vec![0.0; tau.len()];
    let mut env = None;
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        let e = if s > 0.0 {
            envelope::convex_envelope(&sampled, a, b)?
        } else {
            envelope::concave_envelope(&sampled, a, b)?
        };
        let new_sigma = node_speeds(&e, &lambda);
        let new_v: Vec<f64> = reduced_flux.iter().zip(&e.values).map(|(f, g)| f - g).collect();
        change = sigma
            .iter()
            .zip(&new_sigma)
            .map(|(p, q)| (p - q).abs())
            .chain(v.iter().zip(&new_v).map(|(p, q)| (p - q).abs()))
            .fold(0.0, |m, d| if d.is_nan() { f64::INFINITY } else { m.max(d) });
        sigma = new_sigma;
        v = new_v;
        env = Some(e);
        if change < opts.tol_fp {
            break;
        }
    }
    if change >= opts.tol_fp {
        return Err(Error::NoConvergence { iterations, change });
    }
    Ok(ElementaryCurveSolution {
        family: k,
        left: left.to_vec(),
        size: s,
        tau,
        states,
        v,
        sigma,
        reduced_flux,
        lambda,
        envelope: env,
        iterations,
    })
}

/// Envelope derivative at the nodes: chord slopes on gaps, `lambda` clamped
/// between the one-sided envelope slopes on contacts.
fn node_speeds(e: &EnvelopeResult, lambda: &[f64]) -> Vec<f64> {
    let slopes = e.slopes();
    let n = e.tau.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { Some(slopes[i - 1]) } else { None };
            let right = if i + 1 < n { Some(slopes[i]) } else { None };
            if !e.contact[i] {
                return left.or(right).unwrap();
            }
            // convex: left <= sigma <= right; concave: reversed
            let (lo, hi) = match (left, right, e.concave) {
                (Some(l), Some(r), false) => (l, r),
                (Some(l), Some(r), true) => (r, l),
                (Some(l), None, false) => (l, f64::INFINITY),
                (Some(l), None, true) => (f64::NEG_INFINITY, l),
                (None, Some(r), false) => (f64::NEG_INFINITY, r),
                (None, Some(r), true) => (r, f64::INFINITY),
                (None, None, _) => (f64::NEG_INFINITY, f64::INFINITY),
            };
            if lo > hi {
                0.5 * (lo + hi)
            } else {
                lambda[i].clamp(lo, hi)
            }
        })
        .collect()
}

struct Piece {
    kind: IntervalKind,
    lo: usize,
    hi: usize,
}

/// Splits an elementary curve into fronts ordered by speed.
pub fn wave_partition(curve: &ElementaryCurveSolution, eps: f64, opts: &RiemannOptions) -> Vec<ElementaryWave> {
    let Some(env) = &curve.envelope else {
        return Vec::new();
    };
    let mut pieces: Vec<Piece> = env
        .partition
        .iter()
        .filter(|p| p.hi > p.lo)
        .map(|p| Piece {
            kind: p.kind,
            lo: p.lo,
            hi: p.hi,
        })
        .collect();
    let forward = curve.size > 0.0;
    if !forward {
        pieces.reverse();
    }
    let slopes = env.slopes();
    let mut waves = Vec::new();
    for p in pieces {
        // traversal endpoints
        let (start, end) = if forward { (p.lo, p.hi) } else { (p.hi, p.lo) };
        match p.kind {
            IntervalKind::Gap => {
                let speed = slopes[p.lo];
                waves.push(make_wave(curve, start, end, WaveKind::Shock, speed, speed, speed));
            }
            IntervalKind::Contact => {
                let sig = &curve.sigma[p.lo..=p.hi];
                let smax = sig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let smin = sig.iter().copied().fold(f64::INFINITY, f64::min);
                if smax - smin <= opts.contact_speed_tol * (1.0 + smax.abs().max(smin.abs())) {
                    let speed = curve.lambda[end];
                    waves.push(make_wave(curve, start, end, WaveKind::Contact, speed, speed, speed));
                    continue;
                }
                let step = |i: usize| if forward { i + 1 } else { i - 1 };
                let mut a = start;
                while a != end {
                    let mut b = step(a);
                    while b != end && (curve.tau[step(b)] - curve.tau[a]).abs() <= eps * (1.0 + 1e-12) {
                        b = step(b);
                    }
                    let (sl, sr) = (curve.sigma[a], curve.sigma[b]);
                    waves.push(make_wave(curve, a, b, WaveKind::Rarefaction, sl, sr, sr));
                    a = b;
                }
            }
        }
    }
    for i in 1..waves.len() {
        if waves[i].speed < waves[i - 1].speed {
            waves[i].speed = waves[i - 1].speed;
        }
    }
    waves
}

fn make_wave(
    curve: &ElementaryCurveSolution,
    a: usize,
    b: usize,
    kind: WaveKind,
    speed_left: f64,
    speed_right: f64,
    speed: f64,
) -> ElementaryWave {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let t0 = curve.tau[a];
    let sigma_profile = if kind == WaveKind::Rarefaction {
        let mut prof: Vec<(f64, f64)> = (lo..=hi).map(|i| ((curve.tau[i] - t0).abs(), curve.sigma[i])).collect();
        prof.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        prof
    } else {
        let len = (curve.tau[b] - t0).abs();
        vec![(0.0, speed), (len, speed)]
    };
    ElementaryWave {
        family: curve.family,
        kind,
        size: curve.tau[b] - t0,
        left: curve.states[a].clone(),
        right: curve.states[b].clone(),
        speed_left,
        speed_right,
        speed,
        sigma_profile,
    }
}

/// `Phi(s)[uL]` and the intermediate states.
pub fn composite_map(model: &SystemModel, left: &[f64], sizes: &[f64], eps: f64) -> Result<Vec<State>> {
    let mut states = vec![left.to_vec()];
    for (k, s) in sizes.iter().enumerate() {
        let next = terminal_state(model, k, states.last().unwrap(), *s, eps)?;
        states.push(next);
    }
    Ok(states)
}

/// Wave sizes with `Phi(s)[uL] = uR`, by damped Newton.
pub fn solve_sizes(
    model: &SystemModel,
    left: &[f64],
    right: &[f64],
    eps: f64,
    opts: &RiemannOptions,
) -> Result<(Vec<f64>, Vec<State>, f64)> {
    let n = model.dim();
    if n == 1 {
        let s = right[0] - left[0];
        return Ok((vec![s], vec![left.to_vec(), right.to_vec()], 0.0));
    }
    let jump = dist(left, right);
    if jump > opts.jump_max {
        return Err(Error::JumpTooLarge {
            jump,
            max: opts.jump_max,
        });
    }
    let mid: Vec<f64> = left.iter().zip(right).map(|(a, b)| 0.5 * (a + b)).collect();
    let es = model.eigen_decompose(&mid)?;
    let mut s = es.coordinates(&sub(right, left));
    let eval = |s: &[f64]| -> Result<(Vec<State>, State)> {
        let states = composite_map(model, left, s, eps)?;
        let r = sub(states.last().unwrap(), right);
        Ok((states, r))
    };
    let (mut states, mut r) = eval(&s)?;
    let mut res = norm(&r);
    let mut iter = 0;
    while res > opts.tol_rp {
        iter += 1;
        if iter > opts.newton_max_iter {
            return Err(Error::NewtonDivergence { residual: res });
        }
        let h = 1e-7;
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut sp = s.clone();
            sp[j] += h;
            let (_, rp) = eval(&sp)?;
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_vec(r.clone()))
            .ok_or(Error::NewtonDivergence { residual: res })?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let trial: Vec<f64> = s.iter().zip(step.iter()).map(|(a, d)| a - lambda * d).collect();
            if let Ok((st, rt)) = eval(&trial) {
                let nt = norm(&rt);
                if nt < res {
                    s = trial;
                    states = st;
                    r = rt;
                    res = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDivergence { residual: res });
        }
    }
    Ok((s, states, res))
}

/// Full Riemann solution: sizes by Newton, fan by wave partition per family.
pub fn solve_riemann(
    model: &SystemModel,
    left: &[f64],
    right: &[f64],
    eps: f64,
    opts: &RiemannOptions,
) -> Result<WaveFan> {
    model.check_state(left)?;
    model.check_state(right)?;
    let (sizes, mut states, residual) = solve_sizes(model, left, right, eps, opts)?;
    let mut waves = Vec::new();
    for (k, s) in sizes.iter().enumerate() {
        if *s == 0.0 {
            continue;
        }
        let curve = elementary_curve(model, k, &states[k], *s, eps, opts)?;
        let mut fam = wave_partition(&curve, eps, opts);
        if let Some(last) = fam.last_mut() {
            // the terminal state of the fan is the Newton state
            last.right = states[k + 1].clone();
        }
        waves.extend(fam);
    }
    for i in 1..waves.len() {
        if waves[i].speed < waves[i - 1].speed {
            waves[i].speed = waves[i - 1].speed;
        }
    }
    if model.dim() == 1 {
        states[1] = right.to_vec();
    }
    Ok(WaveFan {
        waves,
        states,
        sizes,
        residual,
    })
}

/// A sampled Hugoniot curve with its Liu classification.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HugoniotRecord {
    pub family: usize,
    pub base: State,
    pub size: f64,
    /// Parameters in traversal order from 0 to `size`.
    pub tau: Vec<f64>,
    pub points: Vec<State>,
    pub speeds: Vec<f64>,
    pub terminal: State,
    pub speed: f64,
    pub admissible: bool,
    pub simple: bool,
    /// `s_0 = 0, s_1, ..., s_{l+1} = size` when composite; empty otherwise.
    pub breakpoints: Vec<f64>,
    pub rh_residual: f64,
}

const HUGONIOT_POINTS: usize = 256;
const LIU_TOL: f64 = 1e-9;

/// Solves `(A_avg(tau) - sigma) w = 0`, `<l, w> = 1` near `guess`.
fn hugoniot_point(
    model: &SystemModel,
    base: &[f64],
    f0: &[f64],
    l: &[f64],
    t: f64,
    guess: (&[f64], f64),
) -> Result<(State, f64)> {
    let n = model.dim();
    let resid = |w: &[f64], sig: f64| -> Result<Vec<f64>> {
        let u = axpy(t, w, base);
        let f = model.flux(&u).ok_or(Error::ContinuationFailure { at: t })?;
        if !model.contains(&u) {
            return Err(Error::ContinuationFailure { at: t });
        }
        let mut out: Vec<f64> = (0..n).map(|i| (f[i] - f0[i]) / t - sig * w[i]).collect();
        out.push(dot(l, w) - 1.0);
        Ok(out)
    };
    let mut w = guess.0.to_vec();
    let mut sig = guess.1;
    for _ in 0..50 {
        let r = resid(&w, sig)?;
        let nr = norm(&r);
        if nr <= 1e-13 * (1.0 + sig.abs()) {
            return Ok((w, sig));
        }
        let h = 1e-7;
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for j in 0..=n {
            let (mut wp, mut sp) = (w.clone(), sig);
            if j < n {
                wp[j] += h;
            } else {
                sp += h;
            }
            let rp = resid(&wp, sp)?;
            for i in 0..=n {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let d = jac
            .lu()
            .solve(&DVector::from_vec(r.clone()))
            .ok_or(Error::ContinuationFailure { at: t })?;
        for i in 0..n {
            w[i] -= d[i];
        }
        sig -= d[n];
        if d.norm() <= 1e-15 * (1.0 + norm(&w)) {
            return Ok((w, sig));
        }
    }
    let r = resid(&w, sig)?;
    if norm(&r) <= 1e-10 {
        Ok((w, sig))
    } else {
        Err(Error::ContinuationFailure { at: t })
    }
}

/// Hugoniot curve `S_i[u-](tau)`, `tau` between 0 and `s`, with Liu admissibility.
pub fn hugoniot_classify(model: &SystemModel, family: usize, base: &[f64], s: f64) -> Result<HugoniotRecord> {
    let f0 = model.flux(base).ok_or(Error::ContinuationFailure { at: 0.0 })?;
    let es = model.eigen_decompose(base)?;
    let l = es.left[family].clone();
    let r = es.right[family].clone();
    let lam = es.lambda[family];
    let m = HUGONIOT_POINTS;
    let mut tau = vec![0.0];
    let mut ws = vec![r.clone()];
    let mut speeds = vec![lam];
    let mut points = vec![base.to_vec()];
    for j in 1..=m {
        let t = s * j as f64 / m as f64;
        let (w, sig) = hugoniot_point(model, base, &f0, &l, t, (ws.last().unwrap(), *speeds.last().unwrap()))?;
        points.push(axpy(t, &w, base));
        tau.push(t);
        ws.push(w);
        speeds.push(sig);
    }
    let speed = speeds[m];
    let terminal = points[m].clone();
    let mut rh = 0.0_f64;
    for (p, sig) in points.iter().zip(&speeds) {
        let f = model.flux(p).unwrap();
        let val: Vec<f64> = (0..p.len()).map(|i| sig * (p[i] - base[i]) - (f[i] - f0[i])).collect();
        rh = rh.max(norm(&val));
    }
    let diff: Vec<f64> = speeds.iter().map(|x| x - speed).collect();
    let admissible = diff[1..m].iter().all(|d| *d >= -LIU_TOL) && m > 1;
    let scale = 1.0 + speed.abs();

    // interior touching points: local minima of sigma(tau) - sigma(s) near zero
    let mut breakpoints = Vec::new();
    if admissible {
        let at = |t: f64, j: usize| -> Result<f64> {
            let (_, sig) = hugoniot_point(model, base, &f0, &l, t, (&ws[j], speeds[j]))?;
            Ok(sig - speed)
        };
        for j in 1..m - 1 {
            if diff[j] <= diff[j - 1] && diff[j] <= diff[j + 1] {
                let (mut a, mut b) = (tau[j - 1], tau[j + 1]);
                for _ in 0..200 {
                    if (b - a).abs() <= 1e-12 * (1.0 + s.abs()) {
                        break;
                    }
                    let m1 = a + (b - a) / 3.0;
                    let m2 = b - (b - a) / 3.0;
                    if at(m1, j)? <= at(m2, j)? {
                        b = m2;
                    } else {
                        a = m1;
                    }
                }
                let t = 0.5 * (a + b);
                if at(t, j)? <= 1e-8 * scale
                    && breakpoints
                        .last()
                        .is_none_or(|p: &f64| (t - p).abs() > 2.0 * (s / m as f64).abs())
                {
                    breakpoints.push(t);
                }
            }
        }
    }
    let simple = admissible && breakpoints.is_empty() && diff[1..m].iter().all(|d| *d > LIU_TOL);
    let breakpoints = if breakpoints.is_empty() {
        breakpoints
    } else {
        let mut b = vec![0.0];
        b.extend(breakpoints);
        b.push(s);
        b
    };
    Ok(HugoniotRecord {
        family,
        base: base.to_vec(),
        size: s,
        tau,
        points,
        speeds,
        terminal,
        speed,
        admissible,
        simple,
        breakpoints,
        rh_residual: rh,
    })
}
