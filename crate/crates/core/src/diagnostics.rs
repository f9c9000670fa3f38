//! Checks of the structural conditions used for global continuation:
//! diagonal dominance of the linearized source, the Shizuta-Kawashima
//! coupling condition and entropy dissipation.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CattaneoParams, FluxKind, State, SystemModel};
use crate::vecops::{dot, norm, sub};

const WEAK_TOLERANCE: f64 = 1e-9;
const SK_THRESHOLD: f64 = 1e-8;
const EQUILIBRIUM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct DiagonalDominance {
    pub state: State,
    /// `G = R^{-1} D_u g R` at the state.
    pub g_matrix: Vec<Vec<f64>>,
    /// `c = -max_i (G_ii + sum_{j != i} |G_ij|)`.
    pub margin: f64,
    pub strict: bool,
    pub weak: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShizutaKawashima {
    pub state: State,
    /// `|D_u g(u0) r_i(u0)|` with unit right eigenvectors.
    pub residuals: Vec<f64>,
    pub passes: bool,
    /// Scalar the condition reduces to for models with a closed reduction
    /// (Cattaneo: `nu'(theta) / (alpha(theta) k(theta))`).
    pub reduced_coefficient: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyDissipation {
    pub state: State,
    pub radius: f64,
    /// Largest `a` with `D eta(u) [g(u) - g(u0)] <= -a |g(u) - g(u0)|^2` on the samples;
    /// `f64::MAX` when the inequality is vacuous.
    pub margin: f64,
    pub samples: usize,
    pub per_axis: usize,
}

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// An entropy with its gradient.
#[derive(Clone)]
pub struct Entropy {
    pub value: ScalarField,
    pub gradient: VectorField,
}

impl Entropy {
    /// `eta(v, u) = int_0^v sigma + u^2/2` for `sigma(v) = v + c v^3/3`.
    pub fn elasticity(cubic: f64) -> Self {
        Self {
            value: Arc::new(move |w: &[f64]| 0.5 * w[0] * w[0] + cubic * w[0].powi(4) / 12.0 + 0.5 * w[1] * w[1]),
            gradient: Arc::new(move |w: &[f64]| vec![w[0] + cubic * w[0].powi(3) / 3.0, w[1]]),
        }
    }

    /// `eta(e, Q) = -(4/3) rho e^{3/4} + Q^2 / (2 gamma)`.
    pub fn cattaneo(p: CattaneoParams) -> Self {
        Self {
            value: Arc::new(move |w: &[f64]| -4.0 / 3.0 * p.rho * w[0].powf(0.75) + w[1] * w[1] / (2.0 * p.gamma)),
            gradient: Arc::new(move |w: &[f64]| vec![-p.rho * w[0].powf(-0.25), w[1] / p.gamma]),
        }
    }

    /// The gallery entropy for a model, when one is known.
    pub fn for_model(model: &SystemModel) -> Option<Self> {
        match model.flux_kind() {
            FluxKind::Elasticity { cubic } => Some(Self::elasticity(*cubic)),
            FluxKind::Cattaneo(p) => Some(Self::cattaneo(*p)),
            _ => None,
        }
    }
}

fn as_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Diagonal dominance of `G = R^{-1}(u0) D_u g(u0) R(u0)`.
pub fn check_diagonal_dominance(model: &SystemModel, u0: &[f64]) -> Result<DiagonalDominance> {
    let es = model.eigen_decompose(u0)?;
    let n = model.dim();
    let dg = model.source_jacobian(0.0, 0.0, u0);
    let r = DMatrix::from_fn(n, n, |i, j| es.right[j][i]);
    let l = DMatrix::from_fn(n, n, |i, j| es.left[i][j]);
    let g = &l * dg * &r;
    let worst = (0..n)
        .map(|i| g[(i, i)] + (0..n).filter(|&j| j != i).map(|j| g[(i, j)].abs()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut margin = -worst;
    if margin.abs() <= WEAK_TOLERANCE {
        margin = 0.0;
    }
    Ok(DiagonalDominance {
        state: u0.to_vec(),
        g_matrix: as_rows(&g),
        margin,
        strict: margin > WEAK_TOLERANCE,
        weak: margin == 0.0,
    })
}

/// Residuals `|D_u g(u0) r_i(u0)|` at an equilibrium.
pub fn check_shizuta_kawashima(model: &SystemModel, u0: &[f64]) -> Result<ShizutaKawashima> {
    let g0 = model.source().eval(0.0, 0.0, u0);
    let residual = norm(&g0);
    if residual > EQUILIBRIUM_TOLERANCE {
        return Err(Error::NotEquilibrium { residual });
    }
    let es = model.eigen_decompose(u0)?;
    let dg = model.source_jacobian(0.0, 0.0, u0);
    let residuals: Vec<f64> = es
        .right
        .iter()
        .map(|r| {
            let v = &dg * nalgebra::DVector::from_vec(r.clone());
            v.norm()
        })
        .collect();
    let passes = residuals.iter().all(|r| *r > SK_THRESHOLD);
    let reduced_coefficient = match model.flux_kind() {
        FluxKind::Cattaneo(p) => Some(p.relaxation(p.theta(u0[0]))),
        _ => None,
    };
    Ok(ShizutaKawashima {
        state: u0.to_vec(),
        residuals,
        passes,
        reduced_coefficient,
    })
}

/// Largest dissipation margin on a sampled ball of the given radius around `u0`.
pub fn check_entropy_dissipation(
    model: &SystemModel,
    entropy: &Entropy,
    u0: &[f64],
    radius: f64,
) -> EntropyDissipation {
    let per_axis = 41;
    let n = model.dim();
    let g0 = model.source().eval(0.0, 0.0, u0);
    let mut pts: Vec<State> = vec![Vec::new()];
    for c in u0.iter().take(n) {
        let mut next = Vec::new();
        for p in &pts {
            for i in 0..per_axis {
                let w = -1.0 + 2.0 * i as f64 / (per_axis - 1) as f64;
                let mut q = p.clone();
                q.push(c + radius * w);
                next.push(q);
            }
        }
        pts = next;
    }
    let mut margin = f64::MAX;
    let mut samples = 0;
    for u in pts {
        if norm(&sub(&u, u0)) > radius * (1.0 + 1e-12) || !model.contains(&u) {
            continue;
        }
        samples += 1;
        let dg = sub(&model.source().eval(0.0, 0.0, &u), &g0);
        let mag2 = dot(&dg, &dg);
        if mag2 < 1e-24 {
            continue;
        }
        let lhs = dot(&(entropy.gradient)(&u), &dg);
        margin = margin.min(-lhs / mag2);
    }
    if margin < 0.0 {
        margin = 0.0;
    }
    EntropyDissipation {
        state: u0.to_vec(),
        radius,
        margin,
        samples,
        per_axis,
    }
}

/// Report of the hyperbolicity and fence invariants over a tensor grid of the box.
#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicityReport {
    pub samples: usize,
    pub min_gap: f64,
    pub fences: Vec<f64>,
    pub fences_hold: bool,
}

pub fn check_hyperbolicity(model: &SystemModel, per_axis: usize) -> Result<HyperbolicityReport> {
    let fences = model.fences().to_vec();
    let mut min_gap = f64::INFINITY;
    let mut fences_hold = true;
    let grid = model.domain().grid(per_axis);
    for u in &grid {
        let es = model.eigen_decompose(u)?;
        for k in 0..model.dim() {
            if k > 0 {
                min_gap = min_gap.min(es.lambda[k] - es.lambda[k - 1]);
            }
            if !(fences[k] < es.lambda[k] && es.lambda[k] < fences[k + 1]) {
                fences_hold = false;
            }
        }
    }
    Ok(HyperbolicityReport {
        samples: grid.len(),
        min_gap,
        fences,
        fences_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SourceTerm;

    #[test]
    fn relaxation_gives_minus_identity() {
        let m = SystemModel::elasticity(0.0).with_source(SourceTerm::Relaxation { rate: 1.0 });
        let d = check_diagonal_dominance(&m, &[0.5, 0.0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { -1.0 } else { 0.0 };
                assert!((d.g_matrix[i][j] - want).abs() < 1e-8);
            }
        }
        assert!((d.margin - 1.0).abs() < 1e-8);
        assert!(d.strict);
    }

    #[test]
    fn zero_source_is_weak() {
        let m = SystemModel::elasticity(0.0);
        let d = check_diagonal_dominance(&m, &[0.5, 0.0]).unwrap();
        assert_eq!(d.margin, 0.0);
        assert!(d.weak && !d.strict);
        let sk = check_shizuta_kawashima(&m, &[0.5, 0.0]).unwrap();
        assert!(sk.residuals.iter().all(|r| *r == 0.0));
        assert!(!sk.passes);
        let e = Entropy::elasticity(1.0);
        assert_eq!(check_entropy_dissipation(&m, &e, &[0.5, 0.0], 0.1).margin, f64::MAX);
    }

    #[test]
    fn relaxation_passes_sk_with_unit_residuals() {
        let m = SystemModel::elasticity(0.0).with_source(SourceTerm::Relaxation { rate: 1.0 });
        let sk = check_shizuta_kawashima(&m, &[0.0, 0.0]).unwrap();
        for r in &sk.residuals {
            assert!((r - 1.0).abs() < 1e-8);
        }
        assert!(sk.passes);
    }

    #[test]
    fn non_equilibrium_is_rejected() {
        let m = SystemModel::elasticity(1.0);
        assert!(matches!(
            check_shizuta_kawashima(&m, &[1.0, 0.5]),
            Err(Error::NotEquilibrium { .. })
        ));
    }

    #[test]
    fn elasticity_entropy_dissipates() {
        let m = SystemModel::elasticity(1.0);
        let e = Entropy::elasticity(1.0);
        let d = check_entropy_dissipation(&m, &e, &[1.0, 0.0], 0.1);
        assert!(d.margin > 0.0);
        // D eta . g = -u^2, |g|^2 = u^2 for alpha = 1
        assert!((d.margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cattaneo_is_weakly_dominant() {
        let m = SystemModel::cattaneo(CattaneoParams::default()).unwrap();
        let d = check_diagonal_dominance(&m, &[1.0, 0.0]).unwrap();
        assert!(d.weak);
        for i in 0..2 {
            assert!(d.g_matrix[i][i] < 0.0);
        }
    }
}
