//! Piecewise-constant profiles and BV initial data.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::State;
use crate::vecops::{dist, norm, sub};

/// `u(x) = states[j]` for `positions[j-1] < x < positions[j]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    pub positions: Vec<f64>,
    pub states: Vec<State>,
}

impl Profile {
    pub fn new(positions: Vec<f64>, states: Vec<State>) -> Self {
        assert_eq!(states.len(), positions.len() + 1, "one more state than jumps");
        assert!(
            positions.windows(2).all(|w| w[0] <= w[1]),
            "jump positions must be ordered"
        );
        Self { positions, states }
    }

    pub fn constant(u: State) -> Self {
        Self {
            positions: Vec::new(),
            states: vec![u],
        }
    }

    pub fn riemann(x0: f64, left: State, right: State) -> Self {
        Self::new(vec![x0], vec![left, right])
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn jump_count(&self) -> usize {
        self.positions.len()
    }

    pub fn left_state(&self) -> &State {
        &self.states[0]
    }

    pub fn right_state(&self) -> &State {
        self.states.last().expect("nonempty")
    }

    /// Value at `x`; at a jump position the right state is returned.
    pub fn evaluate(&self, x: f64) -> &State {
        let j = self.positions.partition_point(|p| *p <= x);
        &self.states[j]
    }

    /// Total variation with the Euclidean norm on jumps.
    pub fn total_variation(&self) -> f64 {
        self.states.windows(2).map(|w| dist(&w[0], &w[1])).sum()
    }

    /// Drops jumps with `|u+ - u-| <= tol` and merges coincident positions.
    pub fn simplified(&self, tol: f64) -> Self {
        let mut positions = Vec::new();
        let mut states = vec![self.states[0].clone()];
        for (j, x) in self.positions.iter().enumerate() {
            let next = &self.states[j + 1];
            if dist(states.last().unwrap(), next) <= tol {
                continue;
            }
            if positions.last() == Some(x) {
                *states.last_mut().unwrap() = next.clone();
                continue;
            }
            positions.push(*x);
            states.push(next.clone());
        }
        // coincident merges can leave equal neighbours behind
        let mut out = Self { positions, states };
        let mut j = 0;
        while j < out.positions.len() {
            if dist(&out.states[j], &out.states[j + 1]) <= tol {
                out.positions.remove(j);
                out.states.remove(j + 1);
            } else {
                j += 1;
            }
        }
        out
    }

    /// `int |u - v| dx` with the Euclidean norm; infinite when the far fields differ.
    pub fn l1_distance(&self, other: &Profile) -> f64 {
        if dist(self.left_state(), other.left_state()) > 0.0 || dist(self.right_state(), other.right_state()) > 0.0 {
            return f64::INFINITY;
        }
        let mut xs: Vec<f64> = self.positions.iter().chain(&other.positions).copied().collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let mut total = 0.0;
        for w in xs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            total += (w[1] - w[0]) * norm(&sub(self.evaluate(mid), other.evaluate(mid)));
        }
        total
    }

    /// `int_a^b |u - v| dx`.
    pub fn l1_distance_on(&self, other: &Profile, a: f64, b: f64) -> f64 {
        let mut xs: Vec<f64> = vec![a, b];
        xs.extend(
            self.positions
                .iter()
                .chain(&other.positions)
                .copied()
                .filter(|x| *x > a && *x < b),
        );
        xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
        xs.dedup();
        xs.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                (w[1] - w[0]) * norm(&sub(self.evaluate(mid), other.evaluate(mid)))
            })
            .sum()
    }

    /// L1 distance to a function over `[a, b]`, by composite midpoint rule
    /// refined inside every constancy interval.
    pub fn l1_distance_to(&self, f: &dyn Fn(f64) -> State, a: f64, b: f64, cells: usize) -> f64 {
        let mut breaks = vec![a];
        breaks.extend(self.positions.iter().copied().filter(|x| *x > a && *x < b));
        breaks.push(b);
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let h = (w[1] - w[0]) / cells as f64;
            if h <= 0.0 {
                continue;
            }
            let u = self.evaluate(0.5 * (w[0] + w[1])).clone();
            for i in 0..cells {
                let x = w[0] + (i as f64 + 0.5) * h;
                total += h * norm(&sub(&u, &f(x)));
            }
        }
        total
    }

    pub fn translated(&self, dx: f64) -> Self {
        Self {
            positions: self.positions.iter().map(|x| x + dx).collect(),
            states: self.states.clone(),
        }
    }
}

/// Initial data of bounded variation.
#[derive(Clone)]
pub enum Datum {
    PiecewiseConstant(Profile),
    /// A function constant outside `support`.
    Function {
        eval: Arc<dyn Fn(f64) -> State + Send + Sync>,
        support: (f64, f64),
    },
}

impl std::fmt::Debug for Datum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Datum::PiecewiseConstant(p) => write!(f, "PiecewiseConstant({p:?})"),
            Datum::Function { support, .. } => write!(f, "Function {{ support: {support:?} }}"),
        }
    }
}

/// Piecewise-constant approximation with `TV <= TV(datum)`.
///
/// Functions are sampled at cell midpoints of a grid of spacing `<= eps`
/// spanning the support; the end values are held constant outside.
pub fn init_from_datum(datum: &Datum, eps: f64) -> Result<Profile> {
    match datum {
        Datum::PiecewiseConstant(p) => {
            if p.jump_count() as f64 <= 1.0 / eps {
                Ok(p.clone())
            } else {
                Ok(coarsen(p, eps))
            }
        }
        Datum::Function { eval, support } => {
            let (a, b) = *support;
            if !(a.is_finite() && b.is_finite()) || b < a {
                return Err(Error::UnboundedSupport);
            }
            let cells = (((b - a) / eps).ceil() as usize).max(1);
            let h = (b - a) / cells as f64;
            let mut positions = Vec::with_capacity(cells + 1);
            let mut states = vec![eval(a)];
            for i in 0..cells {
                positions.push(a + i as f64 * h);
                states.push(eval(a + (i as f64 + 0.5) * h));
            }
            positions.push(b);
            states.push(eval(b));
            Ok(Profile::new(positions, states).simplified(0.0))
        }
    }
}

/// Resamples a staircase with too many jumps onto cells of width `eps`,
/// keeping, per cell, the state at the cell's right end.
fn coarsen(p: &Profile, eps: f64) -> Profile {
    let a = p.positions[0];
    let b = *p.positions.last().unwrap();
    let cells = (((b - a) / eps).ceil() as usize).max(1);
    let h = (b - a) / cells as f64;
    let mut positions = Vec::with_capacity(cells);
    let mut states = vec![p.left_state().clone()];
    for i in 0..cells {
        let right = if i + 1 == cells { b } else { a + (i + 1) as f64 * h };
        positions.push(a + i as f64 * h);
        states.push(p.evaluate(right).clone());
    }
    Profile::new(positions, states).simplified(0.0)
}
