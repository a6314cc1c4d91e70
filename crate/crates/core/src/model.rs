//! The (n+1)-element model: `n` peripheral elements of unit circulation and a
//! central element of circulation `mu`, written in a frame rotating with
//! angular speed `omega = s1 + mu`.
//!
//! Positions are stored as real planar pairs. The flat layout used by the
//! gradient, the Hessian and the vector fields is
//! `(x0, y0, x1, y1, ..., xn, yn)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairwise distance below which two elements are treated as collided.
pub const COLLISION_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Vortex,
    Filament,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProblemKind::Vortex => write!(f, "vortex"),
            ProblemKind::Filament => write!(f, "filament"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: usize,
    pub mu: f64,
    /// Traveling-wave velocity; ignored by the vortex problem.
    pub gamma: f64,
    pub kind: ProblemKind,
}

impl ProblemParams {
    pub fn new(n: usize, mu: f64, gamma: f64, kind: ProblemKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n = {n}, need n >= 2")));
        }
        if !mu.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidParameter("mu and gamma must be finite".into()));
        }
        Ok(Self { n, mu, gamma, kind })
    }

    pub fn vortex(n: usize, mu: f64) -> Result<Self> {
        Self::new(n, mu, 0.0, ProblemKind::Vortex)
    }

    pub fn filament(n: usize, mu: f64, gamma: f64) -> Result<Self> {
        Self::new(n, mu, gamma, ProblemKind::Filament)
    }

    pub fn s1(&self) -> f64 {
        (self.n as f64 - 1.0) / 2.0
    }

    /// Angular speed of the rotating frame in which the ring is stationary.
    pub fn omega(&self) -> f64 {
        self.s1() + self.mu
    }

    pub fn zeta(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn s_k(&self, k: usize) -> f64 {
        s_k(self.n, k)
    }

    pub fn omega_k(&self, k: usize) -> f64 {
        self.s_k(k) / 2.0
    }

    pub fn circulations(&self) -> CirculationStructure {
        CirculationStructure::new(self.n, self.mu)
    }

    pub fn dim(&self) -> usize {
        2 * (self.n + 1)
    }
}

/// `s_k = k (n - k) / 2`.
pub fn s_k(n: usize, k: usize) -> f64 {
    (k as f64) * (n as f64 - k as f64) / 2.0
}

/// Circulations `kappa_0 = mu`, `kappa_j = 1` for `j >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculationStructure {
    pub kappa: Vec<f64>,
}

impl CirculationStructure {
    pub fn new(n: usize, mu: f64) -> Self {
        let mut kappa = vec![1.0; n + 1];
        kappa[0] = mu;
        Self { kappa }
    }

    /// Diagonal of the circulation matrix in the flat layout.
    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(
            2 * self.kappa.len(),
            self.kappa.iter().flat_map(|&k| [k, k]),
        )
    }
}

/// Counterclockwise generator `J = [[0, -1], [1, 0]]`.
pub fn j_matrix() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Applies `J` to every planar pair of a flat vector.
pub fn apply_j(v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for j in 0..v.len() / 2 {
        out[2 * j] = -v[2 * j + 1];
        out[2 * j + 1] = v[2 * j];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub positions: Vec<[f64; 2]>,
}

impl Configuration {
    pub fn new(positions: Vec<[f64; 2]>) -> Self {
        Self { positions }
    }

    /// Regular n-gon with vertex `j` at `e^{i j zeta}` and the central element at the origin.
    pub fn ring(n: usize) -> Self {
        let zeta = 2.0 * PI / n as f64;
        let mut positions = vec![[0.0, 0.0]];
        positions.extend((1..=n).map(|j| {
            let (s, c) = (j as f64 * zeta).sin_cos();
            [c, s]
        }));
        Self { positions }
    }

    pub fn from_flat(v: &DVector<f64>) -> Self {
        Self { positions: v.as_slice().chunks(2).map(|p| [p[0], p[1]]).collect() }
    }

    pub fn to_flat(&self) -> DVector<f64> {
        DVector::from_iterator(2 * self.positions.len(), self.positions.iter().flatten().copied())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn point(&self, j: usize) -> Vector2<f64> {
        Vector2::new(self.positions[j][0], self.positions[j][1])
    }

    /// Smallest pairwise distance together with the pair realising it.
    pub fn min_distance(&self) -> (f64, usize, usize) {
        min_pair_distance(self.to_flat().as_slice())
    }

    pub fn check_collision_free(&self) -> Result<()> {
        check_collisions(self.to_flat().as_slice())
    }
}

pub fn ring_equilibrium(params: &ProblemParams) -> Configuration {
    Configuration::ring(params.n)
}

pub(crate) fn min_pair_distance(flat: &[f64]) -> (f64, usize, usize) {
    let m = flat.len() / 2;
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..m {
        for j in i + 1..m {
            let dx = flat[2 * j] - flat[2 * i];
            let dy = flat[2 * j + 1] - flat[2 * i + 1];
            let d = dx.hypot(dy);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    best
}

pub(crate) fn check_collisions(flat: &[f64]) -> Result<()> {
    let (d, i, j) = min_pair_distance(flat);
    if !(d >= COLLISION_THRESHOLD) {
        return Err(Error::Collision { i, j, distance: d });
    }
    Ok(())
}

fn check_len(flat: &[f64], params: &ProblemParams) -> Result<()> {
    if flat.len() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), got: flat.len() });
    }
    Ok(())
}

/// `V(u) = omega/2 * sum kappa_j |u_j|^2 - sum_{i<j} kappa_i kappa_j ln |u_j - u_i|`.
pub fn potential(cfg: &Configuration, params: &ProblemParams) -> Result<f64> {
    potential_flat(cfg.to_flat().as_slice(), params)
}

pub fn potential_flat(u: &[f64], params: &ProblemParams) -> Result<f64> {
    check_len(u, params)?;
    check_collisions(u)?;
    let kappa = params.circulations().kappa;
    let omega = params.omega();
    let m = kappa.len();
    let mut v = 0.0;
    for j in 0..m {
        v += 0.5 * omega * kappa[j] * (u[2 * j] * u[2 * j] + u[2 * j + 1] * u[2 * j + 1]);
    }
    for i in 0..m {
        for j in i + 1..m {
            let r = (u[2 * j] - u[2 * i]).hypot(u[2 * j + 1] - u[2 * i + 1]);
            v -= kappa[i] * kappa[j] * r.ln();
        }
    }
    Ok(v)
}

pub fn grad_potential(cfg: &Configuration, params: &ProblemParams) -> Result<DVector<f64>> {
    grad_potential_flat(cfg.to_flat().as_slice(), params)
}

pub fn grad_potential_flat(u: &[f64], params: &ProblemParams) -> Result<DVector<f64>> {
    check_len(u, params)?;
    check_collisions(u)?;
    Ok(grad_unchecked(u, params))
}

pub(crate) fn grad_unchecked(u: &[f64], params: &ProblemParams) -> DVector<f64> {
    let kappa = params.circulations().kappa;
    let omega = params.omega();
    let m = kappa.len();
    let mut g = DVector::zeros(2 * m);
    for j in 0..m {
        g[2 * j] = omega * kappa[j] * u[2 * j];
        g[2 * j + 1] = omega * kappa[j] * u[2 * j + 1];
    }
    for i in 0..m {
        for j in i + 1..m {
            let dx = u[2 * j] - u[2 * i];
            let dy = u[2 * j + 1] - u[2 * i + 1];
            let c = kappa[i] * kappa[j] / (dx * dx + dy * dy);
            g[2 * j] -= c * dx;
            g[2 * j + 1] -= c * dy;
            g[2 * i] += c * dx;
            g[2 * i + 1] += c * dy;
        }
    }
    g
}

pub fn hess_potential(cfg: &Configuration, params: &ProblemParams) -> Result<DMatrix<f64>> {
    hess_potential_flat(cfg.to_flat().as_slice(), params)
}

pub fn hess_potential_flat(u: &[f64], params: &ProblemParams) -> Result<DMatrix<f64>> {
    check_len(u, params)?;
    check_collisions(u)?;
    Ok(hess_unchecked(u, params))
}

pub(crate) fn hess_unchecked(u: &[f64], params: &ProblemParams) -> DMatrix<f64> {
    let kappa = params.circulations().kappa;
    let omega = params.omega();
    let m = kappa.len();
    let mut h = DMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        h[(2 * j, 2 * j)] = omega * kappa[j];
        h[(2 * j + 1, 2 * j + 1)] = omega * kappa[j];
    }
    for i in 0..m {
        for j in i + 1..m {
            let dx = u[2 * j] - u[2 * i];
            let dy = u[2 * j + 1] - u[2 * i + 1];
            let r2 = dx * dx + dy * dy;
            let c = kappa[i] * kappa[j] / (r2 * r2);
            // Hessian of ln|d| is (|d|^2 I - 2 d d^T) / |d|^4
            let hxx = c * (r2 - 2.0 * dx * dx);
            let hyy = c * (r2 - 2.0 * dy * dy);
            let hxy = -c * 2.0 * dx * dy;
            let block = [[hxx, hxy], [hxy, hyy]];
            for a in 0..2 {
                for b in 0..2 {
                    h[(2 * i + a, 2 * i + b)] -= block[a][b];
                    h[(2 * j + a, 2 * j + b)] -= block[a][b];
                    h[(2 * i + a, 2 * j + b)] += block[a][b];
                    h[(2 * j + a, 2 * i + b)] += block[a][b];
                }
            }
        }
    }
    h
}

fn require_nonzero_mu(params: &ProblemParams) -> Result<()> {
    if params.mu == 0.0 {
        return Err(Error::UnsupportedParameter(
            "mu = 0: the central element carries no circulation and its equation degenerates".into(),
        ));
    }
    Ok(())
}

/// Rotating-frame vortex field `u' = -J K^{-1} grad V(u)`.
pub fn vortex_field(cfg: &Configuration, params: &ProblemParams) -> Result<DVector<f64>> {
    vortex_field_flat(cfg.to_flat().as_slice(), params)
}

pub fn vortex_field_flat(u: &[f64], params: &ProblemParams) -> Result<DVector<f64>> {
    require_nonzero_mu(params)?;
    let g = grad_potential_flat(u, params)?;
    let kd = params.circulations().diagonal();
    let scaled = g.component_div(&kd);
    Ok(-apply_j(&scaled))
}

/// First-order form of the traveling-wave equation
/// `K^2 u'' + 2 gamma K J u' = grad V(u)` on the state `(u, u')`.
///
/// The velocity enters with the factor `2 gamma` so that the linearization at
/// the ring reproduces the filament blocks of [`crate::spectral::block_m`].
pub fn filament_tw_field(state: &DVector<f64>, params: &ProblemParams) -> Result<DVector<f64>> {
    require_nonzero_mu(params)?;
    let d = params.dim();
    if state.len() != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, got: state.len() });
    }
    let u = state.rows(0, d).into_owned();
    let v = state.rows(d, d).into_owned();
    let g = grad_potential_flat(u.as_slice(), params)?;
    let kd = params.circulations().diagonal();
    let gyro = apply_j(&v.component_mul(&kd)) * (2.0 * params.gamma);
    let acc = (g - gyro).component_div(&kd.component_mul(&kd));
    let mut out = DVector::zeros(2 * d);
    out.rows_mut(0, d).copy_from(&v);
    out.rows_mut(d, d).copy_from(&acc);
    Ok(out)
}

/// An element of the group generated by the cyclic shift of the peripheral
/// elements, planar rotations and (for loops) time translations.
///
/// Acting on a configuration, element `j` of the image is `R(-theta) x_{sigma(j)}`
/// where `sigma` shifts the peripheral labels by `shift` modulo `n`; on loops the
/// time argument is moved to `t + phase`. The ring is fixed by `(shift 1, theta zeta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    pub shift: usize,
    pub theta: f64,
    pub phase: f64,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self { shift: 0, theta: 0.0, phase: 0.0 }
    }

    pub fn new(shift: usize, theta: f64, phase: f64) -> Self {
        Self { shift, theta, phase }
    }

    /// The generator `(zeta, zeta)` of the isotropy group of the ring.
    pub fn ring_generator(n: usize) -> Self {
        Self::new(1, 2.0 * PI / n as f64, 0.0)
    }

    /// `(zeta, zeta, -k zeta)`, the generator of the isotropy of the k-th mode.
    pub fn mode_generator(n: usize, k: usize) -> Self {
        let zeta = 2.0 * PI / n as f64;
        Self::new(1, zeta, -(k as f64) * zeta)
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self::new(self.shift + other.shift, self.theta + other.theta, self.phase + other.phase)
    }

    pub fn pow(&self, m: usize) -> Self {
        Self::new(self.shift * m, self.theta * m as f64, self.phase * m as f64)
    }

    /// Source index of element `j` under the peripheral permutation.
    pub fn source_index(&self, j: usize, n: usize) -> usize {
        if j == 0 {
            0
        } else {
            (j - 1 + self.shift) % n + 1
        }
    }

    /// Spatial part of the action on a flat vector of planar pairs
    /// (positions or tangent vectors alike).
    pub fn act_flat(&self, v: &DVector<f64>) -> DVector<f64> {
        let m = v.len() / 2;
        let n = m - 1;
        let r = rotation(-self.theta);
        let mut out = DVector::zeros(v.len());
        for j in 0..m {
            let s = self.source_index(j, n);
            let p = r * Vector2::new(v[2 * s], v[2 * s + 1]);
            out[2 * j] = p[0];
            out[2 * j + 1] = p[1];
        }
        out
    }
}

/// Anything the symmetry group acts on.
pub trait GroupAction {
    fn act(&self, g: &GroupElement) -> Self;
}

impl GroupAction for Configuration {
    fn act(&self, g: &GroupElement) -> Self {
        Configuration::from_flat(&g.act_flat(&self.to_flat()))
    }
}

pub fn act_group<T: GroupAction>(x: &T, g: &GroupElement) -> T {
    x.act(g)
}
