//! Lower convex and upper concave envelopes of sampled functions.
//!
//! The envelope is the discrete greatest convex minorant of the point set
//! `{(tau_i, f_i)}`, computed with Andrew's monotone chain. Grid nodes where
//! the envelope touches the function (within `1e-10 (1 + |f|_inf)`) form
//! CONTACT intervals; the chords between them are GAP intervals.

use serde::Serialize;

use crate::error::{Error, Result};

/// Samples of a scalar function on a strictly increasing grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    pub tau: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(tau: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if tau.len() != values.len() || tau.len() < 2 {
            return Err(Error::EmptyWindow {
                a: tau.first().copied().unwrap_or(f64::NAN),
                b: tau.last().copied().unwrap_or(f64::NAN),
            });
        }
        if values.iter().chain(tau.iter()).any(|v| !v.is_finite()) {
            return Err(Error::GridMismatch);
        }
        assert!(tau.windows(2).all(|w| w[0] < w[1]), "grid must be strictly increasing");
        Ok(Self { tau, values })
    }

    pub fn from_fn(tau: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = tau.iter().map(|t| f(*t)).collect();
        Self::new(tau, values)
    }

    pub fn uniform(a: f64, b: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let tau = (0..points)
            .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
            .collect();
        Self::from_fn(tau, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IntervalKind {
    Contact,
    Gap,
}

/// A maximal interval of the contact partition, as inclusive node indices
/// into the window. GAP intervals are bounded by the contact nodes at their
/// ends; isolated contact nodes appear only as shared gap endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub kind: IntervalKind,
    pub lo: usize,
    pub hi: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeResult {
    /// Window grid (the grid nodes inside `[a, b]`).
    pub tau: Vec<f64>,
    /// Function samples on the window.
    pub function: Vec<f64>,
    /// Envelope samples on the window.
    pub values: Vec<f64>,
    pub contact: Vec<bool>,
    pub partition: Vec<Interval>,
    pub concave: bool,
}

impl EnvelopeResult {
    /// Slope of the envelope on each grid segment.
    pub fn slopes(&self) -> Vec<f64> {
        self.tau
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
            .collect()
    }

    pub fn as_sampled(&self) -> SampledFunction {
        SampledFunction {
            tau: self.tau.clone(),
            values: self.values.clone(),
        }
    }
}

/// Contact tolerance for a set of samples.
pub fn contact_tolerance(values: &[f64]) -> f64 {
    1e-10 * (1.0 + values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

fn window(f: &SampledFunction, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let mut tau = Vec::new();
    let mut vals = Vec::new();
    for (t, v) in f.tau.iter().zip(&f.values) {
        if *t >= lo - slack && *t <= hi + slack {
            tau.push(*t);
            vals.push(*v);
        }
    }
    if tau.len() < 2 {
        return Err(Error::EmptyWindow { a, b });
    }
    Ok((tau, vals))
}

/// Lower hull vertex indices of the points `(tau_i, f_i)`.
fn lower_hull(tau: &[f64], f: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(tau.len());
    for i in 0..tau.len() {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (tau[a] - tau[o]) * (f[i] - f[o]) - (f[a] - f[o]) * (tau[i] - tau[o]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Convex envelope of already-windowed samples.
pub fn convex_envelope_samples(tau: &[f64], f: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let hull = lower_hull(tau, f);
    let tol = contact_tolerance(f);
    let mut env = vec![0.0; tau.len()];
    let mut contact = vec![false; tau.len()];
    for w in hull.windows(2) {
        let (i, j) = (w[0], w[1]);
        let slope = (f[j] - f[i]) / (tau[j] - tau[i]);
        for m in i..=j {
            let chord = if m == i {
                f[i]
            } else if m == j {
                f[j]
            } else {
                f[i] + slope * (tau[m] - tau[i])
            };
            if (f[m] - chord).abs() <= tol {
                env[m] = f[m];
                contact[m] = true;
            } else {
                env[m] = chord;
            }
        }
    }
    if hull.len() == 1 {
        env[0] = f[0];
        contact[0] = true;
    }
    (env, contact)
}

fn partition_of(contact: &[bool]) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut i = 0;
    let n = contact.len();
    while i < n {
        if contact[i] {
            let lo = i;
            while i + 1 < n && contact[i + 1] {
                i += 1;
            }
            // isolated touching points only separate two gaps
            if i > lo || n == 1 {
                out.push(Interval {
                    kind: IntervalKind::Contact,
                    lo,
                    hi: i,
                });
            }
            i += 1;
        } else {
            let lo = i - 1;
            while i < n && !contact[i] {
                i += 1;
            }
            out.push(Interval {
                kind: IntervalKind::Gap,
                lo,
                hi: i,
            });
        }
    }
    out
}

fn envelope(f: &SampledFunction, a: f64, b: f64, concave: bool) -> Result<EnvelopeResult> {
    let (tau, vals) = window(f, a, b)?;
    let (values, contact) = if concave {
        let neg: Vec<f64> = vals.iter().map(|v| -v).collect();
        let (e, c) = convex_envelope_samples(&tau, &neg);
        (e.into_iter().map(|v| -v).collect(), c)
    } else {
        convex_envelope_samples(&tau, &vals)
    };
    let partition = partition_of(&contact);
    Ok(EnvelopeResult {
        tau,
        function: vals,
        values,
        contact,
        partition,
        concave,
    })
}

/// Lower convex envelope of `f` on the grid nodes in `[a, b]`.
pub fn convex_envelope(f: &SampledFunction, a: f64, b: f64) -> Result<EnvelopeResult> {
    envelope(f, a, b, false)
}

/// Upper concave envelope of `f` on the grid nodes in `[a, b]`.
pub fn concave_envelope(f: &SampledFunction, a: f64, b: f64) -> Result<EnvelopeResult> {
    envelope(f, a, b, true)
}

/// Trapezoid rule for samples on a (possibly nonuniform) grid.
pub fn trapezoid(tau: &[f64], values: &[f64]) -> f64 {
    tau.windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force lower envelope at `x`: minimum over all chords through
    /// pairs of samples bracketing `x`.
    fn brute_force_convex(tau: &[f64], f: &[f64], x: f64) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..tau.len() {
            for j in i..tau.len() {
                if tau[i] <= x && x <= tau[j] {
                    let v = if i == j {
                        f[i]
                    } else {
                        f[i] + (f[j] - f[i]) * (x - tau[i]) / (tau[j] - tau[i])
                    };
                    best = best.min(v);
                }
            }
        }
        best
    }

    #[test]
    fn convex_input_is_its_own_envelope() {
        let f = SampledFunction::uniform(-1.0, 1.0, 201, |t| t * t).unwrap();
        let e = convex_envelope(&f, -1.0, 1.0).unwrap();
        assert_eq!(e.values, f.values);
        assert_eq!(
            e.partition,
            vec![Interval {
                kind: IntervalKind::Contact,
                lo: 0,
                hi: 200
            }]
        );
    }

    #[test]
    fn cubic_envelope_is_tangent_chord() {
        let f = SampledFunction::uniform(-1.0, 1.0, 201, |t| t * t * t).unwrap();
        let e = convex_envelope(&f, -1.0, 1.0).unwrap();
        // value at 0 against the brute-force chord oracle, and against the
        // continuous tangent chord from (-1,-1) touching at 1/2
        let oracle = brute_force_convex(&f.tau, &f.values, 0.0);
        assert!((e.values[100] - oracle).abs() < 1e-12);
        assert!((e.values[100] + 0.25).abs() < 1e-12);
        assert_eq!(e.partition.len(), 2);
        assert_eq!(e.partition[0].kind, IntervalKind::Gap);
        assert_eq!((e.partition[0].lo, e.partition[0].hi), (0, 150));
        assert_eq!(e.partition[1].kind, IntervalKind::Contact);
    }

    #[test]
    fn abs_concave_envelope_is_flat() {
        let f = SampledFunction::uniform(-1.0, 1.0, 101, f64::abs).unwrap();
        let e = concave_envelope(&f, -1.0, 1.0).unwrap();
        for v in &e.values {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let g = SampledFunction::uniform(-1.0, 1.0, 101, |t| -t * t).unwrap();
        assert_eq!(concave_envelope(&g, -1.0, 1.0).unwrap().values, g.values);
    }

    #[test]
    fn window_selects_subrange() {
        let f = SampledFunction::uniform(0.0, 1.0, 11, |t| t).unwrap();
        let e = convex_envelope(&f, 0.25, 0.75).unwrap();
        assert_eq!(e.tau.len(), 5);
        assert!(matches!(
            convex_envelope(&f, 0.31, 0.38),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn brute_force_agreement_on_quintic() {
        let f = SampledFunction::uniform(-2.0, 2.582, 120, |u| u.powi(5) / 20.0 - u.powi(3) / 3.0).unwrap();
        let e = concave_envelope(&f, -2.0, 2.582).unwrap();
        let neg: Vec<f64> = f.values.iter().map(|v| -v).collect();
        for (i, t) in f.tau.iter().enumerate() {
            let oracle = -brute_force_convex(&f.tau, &neg, *t);
            assert!((e.values[i] - oracle).abs() < 1e-12);
        }
    }
}
