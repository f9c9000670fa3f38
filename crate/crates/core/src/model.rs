//! Systems of balance laws `u_t + A(u) u_x = g(t, x, u)` and their eigen-structure.
//!
//! A [`SystemModel`] bundles the flux (or the quasilinear matrix), the source,
//! the admissible state box and the speed fences that bracket each
//! characteristic family. Gallery constructors cover the scalar test fluxes,
//! a decoupled linear system, the damped elasticity system and the
//! generalized Cattaneo heat-conduction model in conserved variables.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::vecops::{dot, norm};

pub type State = Vec<f64>;

pub type FluxFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type SourceFn = Arc<dyn Fn(f64, f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Gap below which two eigenvalues are treated as coalescing.
pub const DEFAULT_HYPERBOLICITY_GAP: f64 = 1e-6;
const IMAG_TOLERANCE: f64 = 1e-9;

/// Parameters of the generalized Cattaneo model with `U(theta) = 1/sqrt(A + B theta^n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CattaneoParams {
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    pub n: f64,
    /// Entropy weight in `eta = -(4/3) rho e^{3/4} + Q^2 / (2 gamma)`.
    pub gamma: f64,
}

impl Default for CattaneoParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            a: 1.0,
            b: 1.0,
            n: 2.0,
            gamma: 1.0,
        }
    }
}

impl CattaneoParams {
    pub fn theta(&self, e: f64) -> f64 {
        e.powf(0.25)
    }

    /// Second sound velocity.
    pub fn second_sound(&self, theta: f64) -> f64 {
        1.0 / (self.a + self.b * theta.powf(self.n)).sqrt()
    }

    fn second_sound_deriv(&self, theta: f64) -> f64 {
        let q = self.a + self.b * theta.powf(self.n);
        -0.5 * q.powf(-1.5) * self.b * self.n * theta.powf(self.n - 1.0)
    }

    pub fn energy_deriv(&self, theta: f64) -> f64 {
        4.0 * theta.powi(3)
    }

    pub fn alpha(&self, theta: f64) -> f64 {
        1.0 / (self.rho * theta * self.second_sound(theta) * self.energy_deriv(theta).sqrt())
    }

    pub fn nu_prime(&self, theta: f64) -> f64 {
        self.second_sound(theta) * self.energy_deriv(theta).sqrt() / theta
    }

    pub fn conductivity(&self, theta: f64) -> f64 {
        (self.energy_deriv(theta) * self.nu_prime(theta) / self.alpha(theta)).sqrt() * self.second_sound(theta)
    }

    /// `nu(theta) = int_1^theta nu'(s) ds`, composite 8-point Gauss-Legendre.
    pub fn nu(&self, theta: f64) -> f64 {
        gauss_legendre(|s| self.nu_prime(s), 1.0, theta, 32)
    }

    /// Relaxation coefficient `nu' / (alpha k)` in the heat-flux equation.
    pub fn relaxation(&self, theta: f64) -> f64 {
        self.nu_prime(theta) / (self.alpha(theta) * self.conductivity(theta))
    }

    fn flux(&self, u: &[f64]) -> Vec<f64> {
        let th = self.theta(u[0]);
        vec![u[1] / (self.rho * self.alpha(th)), self.nu(th)]
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let th = self.theta(u[0]);
        let dth_de = 0.25 * u[0].powf(-0.75);
        // 1/(rho alpha) = 2 theta^{5/2} U(theta)
        let c = 2.0 * th.powf(2.5) * self.second_sound(th);
        let dc = 5.0 * th.powf(1.5) * self.second_sound(th) + 2.0 * th.powf(2.5) * self.second_sound_deriv(th);
        DMatrix::from_row_slice(2, 2, &[u[1] * dc * dth_de, c, self.nu_prime(th) * dth_de, 0.0])
    }
}

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_48,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_48,
    0.101_228_536_290_376_26,
];

/// Composite 8-point Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * total
}

/// Flux or matrix description of the homogeneous part.
#[derive(Clone)]
pub enum FluxKind {
    /// `f(u) = u^2 / 2`.
    Burgers,
    /// `f(u) = u^5 / 20 - u^3 / 3`.
    Quintic,
    /// `f(u) = sum_i c_i u^i`.
    Polynomial(Vec<f64>),
    /// `F(u) = diag(speeds) u`.
    LinearDiag(Vec<f64>),
    /// State `(v, u)`, `F = (-u, -sigma(v))` with `sigma(v) = v + c v^3 / 3`.
    Elasticity {
        cubic: f64,
    },
    /// State `(e, Q)`, `F = (Q / (rho alpha), nu)`.
    Cattaneo(CattaneoParams),
    Conservative(FluxFn),
    /// Nonconservative quasilinear matrix `A(u)`.
    Matrix(MatrixFn),
}

impl fmt::Debug for FluxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxKind::Burgers => write!(f, "Burgers"),
            FluxKind::Quintic => write!(f, "Quintic"),
            FluxKind::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            FluxKind::LinearDiag(s) => write!(f, "LinearDiag({s:?})"),
            FluxKind::Elasticity { cubic } => write!(f, "Elasticity {{ cubic: {cubic} }}"),
            FluxKind::Cattaneo(p) => write!(f, "Cattaneo({p:?})"),
            FluxKind::Conservative(_) => write!(f, "Conservative(..)"),
            FluxKind::Matrix(_) => write!(f, "Matrix(..)"),
        }
    }
}

fn poly_eval(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ci| acc * u + ci)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, ci)| i as f64 * ci).collect()
}

/// Source term `g(t, x, u)`.
#[derive(Clone)]
pub enum SourceTerm {
    None,
    /// `g(u) = -rate * u`.
    Relaxation {
        rate: f64,
    },
    /// `g(u) = M u`, row-major.
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    /// `g(v, u) = (0, -alpha u)` for the elasticity system.
    ElasticDamping {
        alpha: f64,
    },
    /// `g(e, Q) = (0, -nu'/(alpha k) Q)` for the Cattaneo model.
    CattaneoRelaxation(CattaneoParams),
    Custom {
        eval: SourceFn,
        lipschitz: f64,
        x_dependent: bool,
    },
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::None => write!(f, "None"),
            SourceTerm::Relaxation { rate } => write!(f, "Relaxation {{ rate: {rate} }}"),
            SourceTerm::Linear { matrix } => write!(f, "Linear({matrix:?})"),
            SourceTerm::ElasticDamping { alpha } => write!(f, "ElasticDamping {{ alpha: {alpha} }}"),
            SourceTerm::CattaneoRelaxation(p) => write!(f, "CattaneoRelaxation({p:?})"),
            SourceTerm::Custom { lipschitz, .. } => write!(f, "Custom {{ lipschitz: {lipschitz} }}"),
        }
    }
}

impl SourceTerm {
    pub fn eval(&self, t: f64, x: f64, u: &[f64]) -> Vec<f64> {
        match self {
            SourceTerm::None => vec![0.0; u.len()],
            SourceTerm::Relaxation { rate } => u.iter().map(|v| -rate * v).collect(),
            SourceTerm::Linear { matrix } => matrix.iter().map(|row| dot(row, u)).collect(),
            SourceTerm::ElasticDamping { alpha } => vec![0.0, -alpha * u[1]],
            SourceTerm::CattaneoRelaxation(p) => {
                let th = p.theta(u[0]);
                vec![0.0, -p.relaxation(th) * u[1]]
            }
            SourceTerm::Custom { eval, .. } => eval(t, x, u),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SourceTerm::None => true,
            SourceTerm::Relaxation { rate } => *rate == 0.0,
            SourceTerm::Linear { matrix } => matrix.iter().flatten().all(|m| *m == 0.0),
            SourceTerm::ElasticDamping { alpha } => *alpha == 0.0,
            _ => false,
        }
    }

    pub fn depends_on_x(&self) -> bool {
        matches!(self, SourceTerm::Custom { x_dependent: true, .. })
    }

    /// Declared Lipschitz constant in `u`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            SourceTerm::None => 0.0,
            SourceTerm::Relaxation { rate } => rate.abs(),
            SourceTerm::Linear { matrix } => DMatrix::from_fn(matrix.len(), matrix.len(), |i, j| matrix[i][j]).norm(),
            SourceTerm::ElasticDamping { alpha } => alpha.abs(),
            SourceTerm::CattaneoRelaxation(p) => p.relaxation(1.0).abs() * 2.0,
            SourceTerm::Custom { lipschitz, .. } => *lipschitz,
        }
    }
}

/// Axis-aligned admissible box `Omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBox {
    pub lo: State,
    pub hi: State,
}

impl StateBox {
    pub fn new(lo: State, hi: State) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| v.is_finite() && *v >= *l && *v <= *h)
    }

    pub fn center(&self) -> State {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Tensor grid with `per_axis` points per coordinate, endpoints included.
    pub fn grid(&self, per_axis: usize) -> Vec<State> {
        let n = self.lo.len();
        let mut out = vec![Vec::with_capacity(n)];
        for d in 0..n {
            let mut next = Vec::with_capacity(out.len() * per_axis);
            for p in &out {
                for i in 0..per_axis {
                    let w = i as f64 / (per_axis - 1) as f64;
                    let mut q = p.clone();
                    q.push(self.lo[d] + w * (self.hi[d] - self.lo[d]));
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }
}

/// Eigenvalues and dual eigenbases at one state, families ordered by increasing speed.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenStructure {
    pub lambda: Vec<f64>,
    /// Unit right eigenvectors.
    pub right: Vec<State>,
    /// Left eigenvectors with `<l_h, r_k> = delta_hk`.
    pub left: Vec<State>,
}

impl EigenStructure {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Coordinates of `v` in the right eigenbasis.
    pub fn coordinates(&self, v: &[f64]) -> Vec<f64> {
        self.left.iter().map(|l| dot(l, v)).collect()
    }
}

/// A strictly hyperbolic system of balance laws on a box.
#[derive(Clone, Debug)]
pub struct SystemModel {
    name: String,
    dim: usize,
    flux: FluxKind,
    source: SourceTerm,
    domain: StateBox,
    min_gap: f64,
    reference: State,
    reference_vectors: Vec<State>,
    fences: Vec<f64>,
}

impl SystemModel {
    /// Builds a model and computes its orientation reference and speed fences.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        flux: FluxKind,
        source: SourceTerm,
        domain: StateBox,
    ) -> Result<Self> {
        assert_eq!(domain.lo.len(), dim);
        let mut model = Self {
            name: name.into(),
            dim,
            flux,
            source,
            domain,
            min_gap: DEFAULT_HYPERBOLICITY_GAP,
            reference: Vec::new(),
            reference_vectors: Vec::new(),
            fences: Vec::new(),
        };
        model.reference = model.domain.center();
        let (_, right) = model.raw_eigen(&model.reference)?;
        dual_basis(&right)?;
        model.reference_vectors = right
            .iter()
            .map(|r| {
                let big = r
                    .iter()
                    .copied()
                    .fold(0.0_f64, |m, c| if c.abs() > m.abs() { c } else { m });
                if big < 0.0 {
                    r.iter().map(|c| -c).collect()
                } else {
                    r.clone()
                }
            })
            .collect();
        model.fences = model.compute_fences()?;
        Ok(model)
    }

    pub fn burgers() -> Self {
        Self::new(
            "burgers",
            1,
            FluxKind::Burgers,
            SourceTerm::None,
            StateBox::new(vec![-5.0], vec![5.0]),
        )
        .expect("burgers is hyperbolic")
    }

    pub fn quintic() -> Self {
        Self::new(
            "quintic",
            1,
            FluxKind::Quintic,
            SourceTerm::None,
            StateBox::new(vec![-4.0], vec![4.0]),
        )
        .expect("quintic is hyperbolic")
    }

    pub fn scalar_poly(coeffs: Vec<f64>) -> Self {
        Self::new(
            "scalar-poly",
            1,
            FluxKind::Polynomial(coeffs),
            SourceTerm::None,
            StateBox::new(vec![-5.0], vec![5.0]),
        )
        .expect("scalar equations are hyperbolic")
    }

    pub fn linear_diag(speeds: Vec<f64>) -> Result<Self> {
        let n = speeds.len();
        Self::new(
            "linear-diag",
            n,
            FluxKind::LinearDiag(speeds),
            SourceTerm::None,
            StateBox::new(vec![-10.0; n], vec![10.0; n]),
        )
    }

    /// Damped elasticity `v_t - u_x = 0, u_t - sigma(v)_x = -alpha u`.
    pub fn elasticity(alpha: f64) -> Self {
        let source = if alpha == 0.0 {
            SourceTerm::None
        } else {
            SourceTerm::ElasticDamping { alpha }
        };
        Self::new(
            "elasticity",
            2,
            FluxKind::Elasticity { cubic: 1.0 },
            source,
            StateBox::new(vec![-2.0, -3.0], vec![3.0, 3.0]),
        )
        .expect("elasticity is strictly hyperbolic")
    }

    pub fn cattaneo(params: CattaneoParams) -> Result<Self> {
        Self::new(
            "cattaneo",
            2,
            FluxKind::Cattaneo(params),
            SourceTerm::CattaneoRelaxation(params),
            StateBox::new(vec![0.3, -0.5], vec![3.0, 0.5]),
        )
    }

    pub fn with_source(mut self, source: SourceTerm) -> Self {
        self.source = source;
        self
    }

    pub fn with_domain(self, domain: StateBox) -> Result<Self> {
        Self::new(self.name, self.dim, self.flux, self.source, domain)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flux_kind(&self) -> &FluxKind {
        &self.flux
    }

    pub fn source(&self) -> &SourceTerm {
        &self.source
    }

    pub fn domain(&self) -> &StateBox {
        &self.domain
    }

    /// Speed fences `lambda_hat_0 < ... < lambda_hat_N`.
    pub fn fences(&self) -> &[f64] {
        &self.fences
    }

    /// Speed of nonphysical fronts, strictly above every characteristic speed on the box.
    pub fn nonphysical_speed(&self) -> f64 {
        self.fences[self.dim] + 0.5
    }

    pub fn is_conservative(&self) -> bool {
        !matches!(self.flux, FluxKind::Matrix(_))
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        self.domain.contains(u)
    }

    pub fn check_state(&self, u: &[f64]) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { state: u.to_vec() })
        }
    }

    /// Conservative flux, `None` in matrix mode.
    pub fn flux(&self, u: &[f64]) -> Option<Vec<f64>> {
        Some(match &self.flux {
            FluxKind::Burgers => vec![0.5 * u[0] * u[0]],
            FluxKind::Quintic => vec![u[0].powi(5) / 20.0 - u[0].powi(3) / 3.0],
            FluxKind::Polynomial(c) => vec![poly_eval(c, u[0])],
            FluxKind::LinearDiag(s) => s.iter().zip(u).map(|(a, b)| a * b).collect(),
            FluxKind::Elasticity { cubic } => {
                vec![-u[1], -(u[0] + cubic * u[0].powi(3) / 3.0)]
            }
            FluxKind::Cattaneo(p) => p.flux(u),
            FluxKind::Conservative(f) => f(u),
            FluxKind::Matrix(_) => return None,
        })
    }

    /// `A(u)`, closed form where available, else central differences of the flux.
    pub fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        match &self.flux {
            FluxKind::Burgers => DMatrix::from_element(1, 1, u[0]),
            FluxKind::Quintic => DMatrix::from_element(1, 1, u[0].powi(4) / 4.0 - u[0] * u[0]),
            FluxKind::Polynomial(c) => DMatrix::from_element(1, 1, poly_eval(&poly_deriv(c), u[0])),
            FluxKind::LinearDiag(s) => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.clone())),
            FluxKind::Elasticity { cubic } => {
                DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -(1.0 + cubic * u[0] * u[0]), 0.0])
            }
            FluxKind::Cattaneo(p) => p.jacobian(u),
            FluxKind::Conservative(_) => self.fd_jacobian(u).expect("conservative flux"),
            FluxKind::Matrix(a) => a(u),
        }
    }

    /// Central-difference Jacobian of the flux, step `1e-6 (1 + |u|)`.
    pub fn fd_jacobian(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        self.flux(u)?;
        let n = self.dim;
        let h = 1e-6 * (1.0 + norm(u));
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[j] += h;
            dn[j] -= h;
            let fp = self.flux(&up)?;
            let fm = self.flux(&dn)?;
            for i in 0..n {
                m[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Some(m)
    }

    /// Central-difference Jacobian of the source in `u`.
    pub fn source_jacobian(&self, t: f64, x: f64, u: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let h = 1e-6 * (1.0 + norm(u));
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[j] += h;
            dn[j] -= h;
            let gp = self.source.eval(t, x, &up);
            let gm = self.source.eval(t, x, &dn);
            for i in 0..n {
                m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        m
    }

    /// Eigen-decomposition at `u`, oriented against the reference state.
    pub fn eigen_decompose(&self, u: &[f64]) -> Result<EigenStructure> {
        let (lambda, right) = self.oriented_spectrum(u)?;
        let left = dual_basis(&right)?;
        Ok(EigenStructure { lambda, right, left })
    }

    /// `k`-th eigenvalue (0-based family index).
    pub fn lambda(&self, u: &[f64], k: usize) -> Result<f64> {
        if self.dim == 1 {
            self.check_state(u)?;
            return Ok(self.jacobian(u)[(0, 0)]);
        }
        Ok(self.oriented_spectrum(u)?.0[k])
    }

    /// Unit `k`-th right eigenvector.
    pub fn right_vector(&self, u: &[f64], k: usize) -> Result<State> {
        if self.dim == 1 {
            self.check_state(u)?;
            return Ok(vec![1.0]);
        }
        Ok(self.oriented_spectrum(u)?.1.swap_remove(k))
    }

    /// Directional derivative `grad lambda_k . r_k` by central differences along `r_k`.
    pub fn nonlinearity(&self, u: &[f64], k: usize) -> Result<f64> {
        match (&self.flux, self.dim) {
            (FluxKind::Burgers, _) => return Ok(1.0),
            (FluxKind::Quintic, _) => return Ok(u[0].powi(3) - 2.0 * u[0]),
            (FluxKind::Polynomial(c), _) => {
                return Ok(poly_eval(&poly_deriv(&poly_deriv(c)), u[0]));
            }
            (FluxKind::LinearDiag(_), _) => return Ok(0.0),
            _ => {}
        }
        let r = self.right_vector(u, k)?;
        let h = 1e-5;
        let up: Vec<f64> = u.iter().zip(&r).map(|(a, b)| a + h * b).collect();
        let dn: Vec<f64> = u.iter().zip(&r).map(|(a, b)| a - h * b).collect();
        Ok((self.lambda(&up, k)? - self.lambda(&dn, k)?) / (2.0 * h))
    }

    fn raw_eigen(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<State>)> {
        let a = self.jacobian(u);
        let n = self.dim;
        let (lambda, right) = match n {
            1 => (vec![a[(0, 0)]], vec![vec![1.0]]),
            2 => eigen_2x2(&a, u)?,
            _ => eigen_general(&a, u)?,
        };
        for k in 1..n {
            let gap = lambda[k] - lambda[k - 1];
            if gap < self.min_gap {
                return Err(Error::HyperbolicityLoss { state: u.to_vec(), gap });
            }
        }
        Ok((lambda, right))
    }

    /// Eigenvalues and oriented right eigenvectors, without the dual basis.
    fn oriented_spectrum(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<State>)> {
        self.check_state(u)?;
        let (lambda, mut right) = self.raw_eigen(u)?;
        for (k, r) in right.iter_mut().enumerate() {
            if dot(r, &self.reference_vectors[k]) < 0.0 {
                r.iter_mut().for_each(|c| *c = -*c);
            }
        }
        Ok((lambda, right))
    }

    fn compute_fences(&self) -> Result<Vec<f64>> {
        let n = self.dim;
        let per_axis = match n {
            1 => 64,
            2 | 3 => 32,
            _ => 12,
        };
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for u in self.domain.grid(per_axis) {
            let (lambda, _) = self.raw_eigen(&u)?;
            for k in 0..n {
                lo[k] = lo[k].min(lambda[k]);
                hi[k] = hi[k].max(lambda[k]);
            }
        }
        let mut fences = Vec::with_capacity(n + 1);
        fences.push(lo[0] - 0.5);
        for k in 1..n {
            if hi[k - 1] >= lo[k] {
                return Err(Error::HyperbolicityLoss {
                    state: self.domain.center(),
                    gap: lo[k] - hi[k - 1],
                });
            }
            fences.push(0.5 * (hi[k - 1] + lo[k]));
        }
        fences.push(hi[n - 1] + 0.5);
        Ok(fences)
    }
}

fn eigen_2x2(a: &DMatrix<f64>, u: &[f64]) -> Result<(Vec<f64>, Vec<State>)> {
    let (p, q, r, s) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let tr = p + s;
    let disc = (p - s) * (p - s) + 4.0 * q * r;
    if disc < 0.0 {
        let imag = 0.5 * (-disc).sqrt();
        if imag > IMAG_TOLERANCE {
            return Err(Error::ComplexEigenvalue {
                state: u.to_vec(),
                imag,
            });
        }
        return Err(Error::HyperbolicityLoss {
            state: u.to_vec(),
            gap: 0.0,
        });
    }
    let sq = disc.sqrt();
    let lambda = vec![0.5 * (tr - sq), 0.5 * (tr + sq)];
    let right = lambda
        .iter()
        .map(|&l| {
            // null vector of [[p-l, q], [r, s-l]]
            let c1 = [q, l - p];
            let c2 = [l - s, r];
            let v = if norm(&c1) >= norm(&c2) { c1 } else { c2 };
            let nv = norm(&v);
            if nv == 0.0 {
                vec![1.0, 0.0]
            } else {
                vec![v[0] / nv, v[1] / nv]
            }
        })
        .collect::<Vec<_>>();
    // diagonal matrices with the larger entry first need the basis swapped
    let right = if norm(&[q, r]) == 0.0 {
        let mut idx = vec![(p, vec![1.0, 0.0]), (s, vec![0.0, 1.0])];
        idx.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        idx.into_iter().map(|(_, v)| v).collect()
    } else {
        right
    };
    Ok((lambda, right))
}

fn eigen_general(a: &DMatrix<f64>, u: &[f64]) -> Result<(Vec<f64>, Vec<State>)> {
    let n = a.nrows();
    let ev = a.clone().complex_eigenvalues();
    let mut lambda = Vec::with_capacity(n);
    for z in ev.iter() {
        if z.im.abs() > IMAG_TOLERANCE {
            return Err(Error::ComplexEigenvalue {
                state: u.to_vec(),
                imag: z.im.abs(),
            });
        }
        lambda.push(z.re);
    }
    lambda.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut right = Vec::with_capacity(n);
    for &l in &lambda {
        let shifted = a - DMatrix::identity(n, n) * l;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.expect("requested v_t");
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
        let v: Vec<f64> = vt.row(imin).iter().copied().collect();
        let nv = norm(&v);
        right.push(v.iter().map(|c| c / nv).collect());
    }
    Ok((lambda, right))
}

/// Rows of `R^{-1}` for the column basis `right`.
pub fn dual_basis(right: &[State]) -> Result<Vec<State>> {
    let n = right.len();
    if n == 1 {
        return Ok(vec![vec![1.0 / right[0][0]]]);
    }
    let r = DMatrix::from_fn(n, n, |i, j| right[j][i]);
    let sv = r.singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > 1e8 {
        return Err(Error::SingularEigenbasis { condition });
    }
    let inv = r.try_inverse().ok_or(Error::SingularEigenbasis { condition })?;
    Ok((0..n).map(|i| inv.row(i).iter().copied().collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_linear_system_has_identity_basis() {
        let m = SystemModel::linear_diag(vec![1.0, 2.0]).unwrap();
        let es = m.eigen_decompose(&[0.3, -0.2]).unwrap();
        assert_eq!(es.lambda, vec![1.0, 2.0]);
        assert_eq!(es.right, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(es.left, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn reversed_diagonal_is_reordered() {
        let m = SystemModel::linear_diag(vec![2.0, 1.0]).unwrap();
        let es = m.eigen_decompose(&[0.0, 0.0]).unwrap();
        assert_eq!(es.lambda, vec![1.0, 2.0]);
        assert_eq!(es.right[0], vec![0.0, 1.0]);
    }

    #[test]
    fn burgers_scalar_eigen() {
        let es = SystemModel::burgers().eigen_decompose(&[0.3]).unwrap();
        assert_eq!(es.lambda, vec![0.3]);
        assert_eq!(es.right, vec![vec![1.0]]);
        assert_eq!(es.left, vec![vec![1.0]]);
    }

    #[test]
    fn elasticity_speeds_at_unit_strain() {
        let m = SystemModel::elasticity(1.0);
        let es = m.eigen_decompose(&[1.0, 0.0]).unwrap();
        let s2 = 2f64.sqrt();
        assert!((es.lambda[0] + s2).abs() < 1e-14);
        assert!((es.lambda[1] - s2).abs() < 1e-14);
        // cross-check through a finite-difference Jacobian
        let fd = m.fd_jacobian(&[1.0, 0.0]).unwrap();
        let ev = fd.complex_eigenvalues();
        let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((re[0] + s2).abs() < 1e-8 && (re[1] - s2).abs() < 1e-8);
    }

    #[test]
    fn out_of_box_state_is_rejected() {
        let m = SystemModel::burgers();
        assert!(matches!(m.eigen_decompose(&[7.0]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn complex_spectrum_is_reported() {
        let rot: MatrixFn = Arc::new(|_u: &[f64]| DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let err = SystemModel::new(
            "rot",
            2,
            FluxKind::Matrix(rot),
            SourceTerm::None,
            StateBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ComplexEigenvalue { .. }));
    }

    #[test]
    fn coalescing_spectrum_is_reported() {
        let jordan: MatrixFn = Arc::new(|_u: &[f64]| DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
        let err = SystemModel::new(
            "jordan",
            2,
            FluxKind::Matrix(jordan),
            SourceTerm::None,
            StateBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::HyperbolicityLoss { .. }));
    }

    #[test]
    fn general_solver_matches_closed_form_on_3x3() {
        let m3: MatrixFn =
            Arc::new(|u: &[f64]| DMatrix::from_row_slice(3, 3, &[1.0 + u[0], 0.2, 0.0, 0.1, 2.0, 0.3, 0.0, 0.1, 3.0]));
        let m = SystemModel::new(
            "three",
            3,
            FluxKind::Matrix(m3),
            SourceTerm::None,
            StateBox::new(vec![-0.2; 3], vec![0.2; 3]),
        )
        .unwrap();
        let u = [0.1, 0.0, -0.1];
        let es = m.eigen_decompose(&u).unwrap();
        let a = m.jacobian(&u);
        for k in 0..3 {
            let r = nalgebra::DVector::from_vec(es.right[k].clone());
            let res = &a * &r - &r * es.lambda[k];
            assert!(res.norm() < 1e-10);
            for h in 0..3 {
                let d = dot(&es.left[h], &es.right[k]);
                let want = if h == k { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cattaneo_relaxation_is_sqrt_rho() {
        let p = CattaneoParams::default();
        assert!((p.relaxation(1.0) - 1.0).abs() < 1e-12);
        let p4 = CattaneoParams { rho: 4.0, ..p };
        assert!((p4.relaxation(1.3) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cattaneo_jacobian_matches_differences() {
        let m = SystemModel::cattaneo(CattaneoParams::default()).unwrap();
        for u in [[1.0, 0.0], [1.2, 0.1], [0.8, -0.2]] {
            let a = m.jacobian(&u);
            let fd = m.fd_jacobian(&u).unwrap();
            assert!((a - fd).norm() < 1e-6, "at {u:?}");
        }
        // small perturbations travel at the second sound speed
        let es = m.eigen_decompose(&[1.0, 0.0]).unwrap();
        assert!((es.lambda[1] - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
