//! Fourier-Galerkin computation of the bifurcating periodic orbits.
//!
//! A loop is `x(t) = a_0 + sum_{l=1}^p (a_l cos lt + b_l sin lt)` with period
//! `2 pi` in rescaled time; the physical frequency is `nu`. The complex modes
//! are `x_0 = a_0` and `x_l = (a_l - i b_l)/2`, with `x_{-l} = conj(x_l)`.
//! The residual is
//!
//! * vortex: `f(x) = -nu K J x' + grad V(x)`
//! * filament: `f(x) = -nu^2 K^2 x'' - 2 gamma nu K J x' + grad V(x)`
//!
//! projected on the same trigonometric basis by trapezoidal quadrature on
//! `4p + 2` nodes.

mod branch;
mod newton;

pub use branch::{continue_branch, Branch, BranchRecord, ContinuationOptions, Termination};
pub use newton::{
    newton_correct, AmplitudePin, BranchState, Constraints, NewtonOptions, SymmetryReduction,
};

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::model::{
    apply_j, grad_potential_flat, hess_potential_flat, min_pair_distance, Configuration,
    GroupAction, GroupElement, ProblemKind, ProblemParams,
};
use crate::spectral::{block_m, BifurcationPoint};
use crate::symmetry::irrep_basis;
use crate::C64;

pub const DEFAULT_MODES: usize = 16;

/// Truncated Fourier representation of a `2 pi`-periodic loop.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierLoop {
    pub n: usize,
    pub nu: f64,
    p: usize,
    /// `[a_0, a_1, b_1, ..., a_p, b_p]`, each of length `2(n+1)`.
    coefficients: DVector<f64>,
}

impl FourierLoop {
    pub fn constant(cfg: &Configuration, nu: f64, p: usize) -> Self {
        let d = 2 * cfg.len();
        let mut coefficients = DVector::zeros(d * (2 * p + 1));
        coefficients.rows_mut(0, d).copy_from(&cfg.to_flat());
        Self { n: cfg.len() - 1, nu, p, coefficients }
    }

    pub fn from_coefficients(n: usize, nu: f64, p: usize, coefficients: DVector<f64>) -> Result<Self> {
        let expected = 2 * (n + 1) * (2 * p + 1);
        if coefficients.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: coefficients.len() });
        }
        Ok(Self { n, nu, p, coefficients })
    }

    /// Builds a loop from complex modes `x_0..=x_p`; `x_0` must be real.
    pub fn from_modes(n: usize, nu: f64, modes: &[DVector<C64>]) -> Result<Self> {
        let d = 2 * (n + 1);
        let p = modes.len().saturating_sub(1);
        let mut c = DVector::zeros(d * (2 * p + 1));
        for (l, x) in modes.iter().enumerate() {
            if x.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: x.len() });
            }
            if l == 0 {
                c.rows_mut(0, d).copy_from(&x.map(|z| z.re));
            } else {
                c.rows_mut(a_index(l, d), d).copy_from(&x.map(|z| 2.0 * z.re));
                c.rows_mut(b_index(l, d), d).copy_from(&x.map(|z| -2.0 * z.im));
            }
        }
        Ok(Self { n, nu, p, coefficients: c })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Dimension of one coefficient, `2(n+1)`.
    pub fn dim(&self) -> usize {
        2 * (self.n + 1)
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn set_coefficients(&mut self, c: DVector<f64>) {
        assert_eq!(c.len(), self.coefficients.len());
        self.coefficients = c;
    }

    pub fn a(&self, l: usize) -> DVector<f64> {
        let d = self.dim();
        let start = if l == 0 { 0 } else { a_index(l, d) };
        self.coefficients.rows(start, d).into_owned()
    }

    pub fn b(&self, l: usize) -> DVector<f64> {
        let d = self.dim();
        if l == 0 {
            return DVector::zeros(d);
        }
        self.coefficients.rows(b_index(l, d), d).into_owned()
    }

    /// Complex mode `x_l` for `0 <= l <= p`.
    pub fn mode(&self, l: usize) -> DVector<C64> {
        let a = self.a(l);
        if l == 0 {
            return a.map(|x| C64::new(x, 0.0));
        }
        let b = self.b(l);
        DVector::from_fn(a.len(), |i, _| C64::new(0.5 * a[i], -0.5 * b[i]))
    }

    pub fn modes(&self) -> Vec<DVector<C64>> {
        (0..=self.p).map(|l| self.mode(l)).collect()
    }

    /// `2 |x_1|`, the size of the first harmonic.
    pub fn amplitude(&self) -> f64 {
        if self.p == 0 {
            return 0.0;
        }
        (self.a(1).norm_squared() + self.b(1).norm_squared()).sqrt()
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let d = self.dim();
        let mut x = self.a(0);
        for l in 1..=self.p {
            let (s, c) = (l as f64 * t).sin_cos();
            x.axpy(c, &self.coefficients.rows(a_index(l, d), d), 1.0);
            x.axpy(s, &self.coefficients.rows(b_index(l, d), d), 1.0);
        }
        x
    }

    /// Derivative with respect to the rescaled time.
    pub fn eval_derivative(&self, t: f64) -> DVector<f64> {
        let d = self.dim();
        let mut x = DVector::zeros(d);
        for l in 1..=self.p {
            let lf = l as f64;
            let (s, c) = (lf * t).sin_cos();
            x.axpy(-lf * s, &self.coefficients.rows(a_index(l, d), d), 1.0);
            x.axpy(lf * c, &self.coefficients.rows(b_index(l, d), d), 1.0);
        }
        x
    }

    /// Coefficients of `x'`.
    pub fn derivative_coefficients(&self) -> DVector<f64> {
        derivative_coefficients(&self.coefficients, self.dim(), self.p)
    }

    /// Copy with `q` harmonics, padding with zeros or dropping the tail.
    pub fn with_modes(&self, q: usize) -> Self {
        let d = self.dim();
        let mut c = DVector::zeros(d * (2 * q + 1));
        let keep = d * (2 * q.min(self.p) + 1);
        c.rows_mut(0, keep).copy_from(&self.coefficients.rows(0, keep));
        Self { n: self.n, nu: self.nu, p: q, coefficients: c }
    }

    pub fn node_count(&self) -> usize {
        4 * self.p + 2
    }

    pub fn nodes(&self) -> Vec<f64> {
        let m = self.node_count();
        (0..m).map(|i| 2.0 * PI * i as f64 / m as f64).collect()
    }

    /// Smallest pairwise distance over `samples` equispaced times.
    pub fn min_distance(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|i| min_pair_distance(self.eval(2.0 * PI * i as f64 / samples as f64).as_slice()).0)
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_t |x(t) - x_0|`.
    pub fn max_deviation(&self, samples: usize) -> f64 {
        let a0 = self.a(0);
        (0..samples)
            .map(|i| (self.eval(2.0 * PI * i as f64 / samples as f64) - &a0).norm())
            .fold(0.0, f64::max)
    }

    /// CSV of the complex modes: `l, coordinate, re, im`.
    pub fn write_modes_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(out, "l,coordinate,re,im")?;
        for (l, m) in self.modes().iter().enumerate() {
            for (i, z) in m.iter().enumerate() {
                writeln!(out, "{l},{i},{:.17e},{:.17e}", z.re, z.im)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// CSV of `samples` points over one period: `t, x0, y0, ..., xn, yn`
    /// with `t` in physical time.
    pub fn write_samples_csv(&self, path: &Path, samples: usize) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        let mut header = vec!["t".to_string()];
        for j in 0..=self.n {
            header.push(format!("x{j}"));
            header.push(format!("y{j}"));
        }
        writeln!(out, "{}", header.join(","))?;
        for i in 0..=samples {
            let s = 2.0 * PI * i as f64 / samples as f64;
            let mut row = vec![format!("{:.17e}", s / self.nu)];
            row.extend(self.eval(s).iter().map(|x| format!("{x:.17e}")));
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn a_index(l: usize, d: usize) -> usize {
    (2 * l - 1) * d
}

fn b_index(l: usize, d: usize) -> usize {
    2 * l * d
}

fn derivative_coefficients(c: &DVector<f64>, d: usize, p: usize) -> DVector<f64> {
    let mut out = DVector::zeros(c.len());
    for l in 1..=p {
        let lf = l as f64;
        let (ia, ib) = (a_index(l, d), b_index(l, d));
        for i in 0..d {
            out[ia + i] = lf * c[ib + i];
            out[ib + i] = -lf * c[ia + i];
        }
    }
    out
}

/// Matrix of the loop action `x(t) -> R(-theta) x_sigma(t + phase)` on coefficients.
pub fn group_matrix(g: &GroupElement, n: usize, p: usize) -> DMatrix<f64> {
    let d = 2 * (n + 1);
    let mut spatial = DMatrix::zeros(d, d);
    for c in 0..d {
        let mut e = DVector::zeros(d);
        e[c] = 1.0;
        spatial.set_column(c, &g.act_flat(&e));
    }
    let size = d * (2 * p + 1);
    let mut m = DMatrix::zeros(size, size);
    m.view_mut((0, 0), (d, d)).copy_from(&spatial);
    for l in 1..=p {
        let (s, c) = (l as f64 * g.phase).sin_cos();
        let (ia, ib) = (a_index(l, d), b_index(l, d));
        m.view_mut((ia, ia), (d, d)).copy_from(&(&spatial * c));
        m.view_mut((ia, ib), (d, d)).copy_from(&(&spatial * s));
        m.view_mut((ib, ia), (d, d)).copy_from(&(&spatial * (-s)));
        m.view_mut((ib, ib), (d, d)).copy_from(&(&spatial * c));
    }
    m
}

impl GroupAction for FourierLoop {
    fn act(&self, g: &GroupElement) -> Self {
        let m = group_matrix(g, self.n, self.p);
        Self { coefficients: m * &self.coefficients, ..self.clone() }
    }
}

/// Galerkin residual in the coefficient layout of [`FourierLoop`].
#[derive(Debug, Clone)]
pub struct Residual {
    pub n: usize,
    pub p: usize,
    pub values: DVector<f64>,
}

impl Residual {
    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    /// Complex residual mode `r_l`, with the same convention as [`FourierLoop::mode`].
    pub fn mode(&self, l: usize) -> DVector<C64> {
        let d = 2 * (self.n + 1);
        if l == 0 {
            return self.values.rows(0, d).map(|x| C64::new(x, 0.0));
        }
        let (ia, ib) = (a_index(l, d), b_index(l, d));
        DVector::from_fn(d, |i, _| C64::new(0.5 * self.values[ia + i], -0.5 * self.values[ib + i]))
    }
}

fn node_error(node: usize, e: Error) -> Error {
    match e {
        Error::Collision { i, j, .. } => Error::NodeCollision { node, i, j },
        other => other,
    }
}

fn kj(v: &DVector<f64>, kd: &DVector<f64>) -> DVector<f64> {
    apply_j(v).component_mul(kd)
}

/// Adds the `x'`/`x''` terms of the residual for coefficients `c` at frequency `nu`.
fn add_linear(r: &mut DVector<f64>, c: &DVector<f64>, nu: f64, params: &ProblemParams, p: usize) {
    let d = params.dim();
    let kd = params.circulations().diagonal();
    let k2 = kd.component_mul(&kd);
    let g = params.gamma;
    for l in 1..=p {
        let lf = l as f64;
        let (ia, ib) = (a_index(l, d), b_index(l, d));
        let a = c.rows(ia, d).into_owned();
        let b = c.rows(ib, d).into_owned();
        let (ra, rb) = match params.kind {
            ProblemKind::Vortex => (kj(&b, &kd) * (-nu * lf), kj(&a, &kd) * (nu * lf)),
            ProblemKind::Filament => {
                let q = nu * nu * lf * lf;
                (
                    a.component_mul(&k2) * q - kj(&b, &kd) * (2.0 * g * nu * lf),
                    b.component_mul(&k2) * q + kj(&a, &kd) * (2.0 * g * nu * lf),
                )
            }
        };
        let mut va = r.rows_mut(ia, d);
        va += ra;
        let mut vb = r.rows_mut(ib, d);
        vb += rb;
    }
}

fn check_loop(lp: &FourierLoop, params: &ProblemParams) -> Result<()> {
    if lp.n != params.n {
        return Err(Error::DimensionMismatch { expected: params.n, got: lp.n });
    }
    Ok(())
}

pub fn galerkin_residual(lp: &FourierLoop, params: &ProblemParams) -> Result<Residual> {
    check_loop(lp, params)?;
    let (d, p) = (lp.dim(), lp.p);
    let nodes = lp.nodes();
    let m = nodes.len() as f64;
    let mut r = DVector::zeros(lp.coefficients.len());
    for (i, &t) in nodes.iter().enumerate() {
        let g = grad_potential_flat(lp.eval(t).as_slice(), params).map_err(|e| node_error(i, e))?;
        r.rows_mut(0, d).axpy(1.0 / m, &g, 1.0);
        for l in 1..=p {
            let (s, c) = (l as f64 * t).sin_cos();
            r.rows_mut(a_index(l, d), d).axpy(2.0 * c / m, &g, 1.0);
            r.rows_mut(b_index(l, d), d).axpy(2.0 * s / m, &g, 1.0);
        }
    }
    add_linear(&mut r, &lp.coefficients, lp.nu, params, p);
    Ok(Residual { n: lp.n, p, values: r })
}

/// Derivatives of the residual with respect to the coefficients and to `nu`.
pub fn galerkin_jacobian(lp: &FourierLoop, params: &ProblemParams) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_loop(lp, params)?;
    let (d, p) = (lp.dim(), lp.p);
    let nodes = lp.nodes();
    let m = nodes.len() as f64;
    // cos/sin sums of the node Hessians, q = 0..=2p
    let mut cq = vec![DMatrix::<f64>::zeros(d, d); 2 * p + 1];
    let mut sq = vec![DMatrix::<f64>::zeros(d, d); 2 * p + 1];
    for (i, &t) in nodes.iter().enumerate() {
        let h = hess_potential_flat(lp.eval(t).as_slice(), params).map_err(|e| node_error(i, e))?;
        for q in 0..=2 * p {
            let (s, c) = (q as f64 * t).sin_cos();
            cq[q] += &h * (c / m);
            sq[q] += &h * (s / m);
        }
    }
    let cm = |q: i64| cq[q.unsigned_abs() as usize].clone();
    let sm = |q: i64| {
        if q >= 0 {
            sq[q as usize].clone()
        } else {
            -&sq[(-q) as usize]
        }
    };
    let size = lp.coefficients.len();
    let mut jac = DMatrix::zeros(size, size);
    // basis functions: 0 -> 1, (l, 0) -> cos lt, (l, 1) -> sin lt
    let offset = |l: usize, sin: bool| if l == 0 { 0 } else if sin { b_index(l, d) } else { a_index(l, d) };
    let funcs: Vec<(usize, bool)> =
        std::iter::once((0, false)).chain((1..=p).flat_map(|l| [(l, false), (l, true)])).collect();
    for &(la, sa) in &funcs {
        let w = if la == 0 { 1.0 } else { 2.0 };
        for &(lb, sb) in &funcs {
            let (a, b) = (la as i64, lb as i64);
            let block = match (la == 0, sa, lb == 0, sb) {
                (true, _, true, _) => cm(0),
                (true, _, false, false) => cm(b),
                (true, _, false, true) => sm(b),
                (false, false, true, _) => cm(a),
                (false, true, true, _) => sm(a),
                (false, false, false, false) => (cm(a - b) + cm(a + b)) * 0.5,
                (false, true, false, true) => (cm(a - b) - cm(a + b)) * 0.5,
                (false, false, false, true) => (sm(b + a) + sm(b - a)) * 0.5,
                (false, true, false, false) => (sm(a + b) + sm(a - b)) * 0.5,
            };
            jac.view_mut((offset(la, sa), offset(lb, sb)), (d, d)).copy_from(&(block * w));
        }
    }
    // linear part: apply to unit vectors of each harmonic
    let mut dnu = DVector::zeros(size);
    add_linear_jacobian(&mut jac, &mut dnu, &lp.coefficients, lp.nu, params, p);
    Ok((jac, dnu))
}

fn add_linear_jacobian(
    jac: &mut DMatrix<f64>,
    dnu: &mut DVector<f64>,
    c: &DVector<f64>,
    nu: f64,
    params: &ProblemParams,
    p: usize,
) {
    let d = params.dim();
    let kd = params.circulations().diagonal();
    let mut kjm = DMatrix::zeros(d, d);
    for i in 0..d {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        kjm.set_column(i, &kj(&e, &kd));
    }
    let k2 = DMatrix::from_diagonal(&kd.component_mul(&kd));
    let g = params.gamma;
    for l in 1..=p {
        let lf = l as f64;
        let (ia, ib) = (a_index(l, d), b_index(l, d));
        let a = c.rows(ia, d).into_owned();
        let b = c.rows(ib, d).into_owned();
        match params.kind {
            ProblemKind::Vortex => {
                let mut v = jac.view_mut((ia, ib), (d, d));
                v += &kjm * (-nu * lf);
                let mut v = jac.view_mut((ib, ia), (d, d));
                v += &kjm * (nu * lf);
                dnu.rows_mut(ia, d).copy_from(&(&kjm * &b * (-lf)));
                dnu.rows_mut(ib, d).copy_from(&(&kjm * &a * lf));
            }
            ProblemKind::Filament => {
                let q = nu * nu * lf * lf;
                let gy = 2.0 * g * nu * lf;
                let mut v = jac.view_mut((ia, ia), (d, d));
                v += &k2 * q;
                let mut v = jac.view_mut((ib, ib), (d, d));
                v += &k2 * q;
                let mut v = jac.view_mut((ia, ib), (d, d));
                v += &kjm * (-gy);
                let mut v = jac.view_mut((ib, ia), (d, d));
                v += &kjm * gy;
                let dq = 2.0 * nu * lf * lf;
                let dg = 2.0 * g * lf;
                dnu.rows_mut(ia, d).copy_from(&(&k2 * &a * dq - &kjm * &b * dg));
                dnu.rows_mut(ib, d).copy_from(&(&k2 * &b * dq + &kjm * &a * dg));
            }
        }
    }
}

/// Unit kernel vector of `m_k(nu0)`; errors unless the kernel is one-dimensional.
pub fn kernel_vector(k: usize, nu0: f64, params: &ProblemParams) -> Result<DVector<C64>> {
    let m = block_m(k, nu0, params)?.matrix;
    let scale = m.norm().max(1.0);
    let (vals, vecs) = hermitian_eigen(&m);
    let small: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() < 1e-8 * scale).collect();
    if small.len() != 1 {
        return Err(Error::DegenerateBifurcation { nu: nu0, kernel_dim: small.len() });
    }
    let mut w = vecs.column(small[0]).into_owned();
    // fix the phase: largest entry real and positive
    let big = (0..w.len()).max_by(|&a, &b| w[a].norm().total_cmp(&w[b].norm())).unwrap();
    let ph = w[big] / C64::new(w[big].norm(), 0.0);
    w /= ph;
    Ok(w)
}

/// Full-space kernel mode `T_k(w)`, padded with zero central coordinates when the
/// block was reduced at `mu = 0`.
fn kernel_mode(k: usize, nu0: f64, params: &ProblemParams) -> Result<DVector<C64>> {
    let w = kernel_vector(k, nu0, params)?;
    let basis = irrep_basis(params.n, k)?;
    let full = if w.len() < basis.dim() {
        let mut v = DVector::from_element(basis.dim(), C64::new(0.0, 0.0));
        let off = basis.dim() - w.len();
        v.rows_mut(off, w.len()).copy_from(&w);
        v
    } else {
        w
    };
    let x = basis.apply(&full);
    let norm = x.norm();
    Ok(x / C64::new(norm, 0.0))
}

/// `a + amplitude Re(T_k(w) e^{it})` with `w` the unit kernel vector of `m_k(nu0)`.
pub fn predictor(
    k: usize,
    point: &BifurcationPoint,
    amplitude: f64,
    params: &ProblemParams,
    p: usize,
) -> Result<FourierLoop> {
    if point.k != k {
        return Err(Error::InvalidParameter(format!("point belongs to block {}, not {k}", point.k)));
    }
    if p == 0 {
        return Err(Error::InvalidParameter("need at least one harmonic".into()));
    }
    let x = kernel_mode(k, point.nu0, params)?;
    let ring = crate::model::ring_equilibrium(params);
    let mut lp = FourierLoop::constant(&ring, point.nu0, p);
    let d = lp.dim();
    let mut c = lp.coefficients.clone();
    c.rows_mut(a_index(1, d), d).copy_from(&x.map(|z| amplitude * z.re));
    c.rows_mut(b_index(1, d), d).copy_from(&x.map(|z| -amplitude * z.im));
    lp.coefficients = c;
    Ok(lp)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Largest defect of the relations `u_{j+1}(t) = R(zeta) u_j(t + k zeta)` and of the
/// central-element rule: `u_0 = 0` when `gcd(k, n) > 1`, otherwise
/// `u_0(t) = R(k' zeta) u_0(t + zeta)` with `k k' = 1 mod n`.
pub fn symmetry_residual(lp: &FourierLoop, k: usize, n: usize) -> f64 {
    let zeta = 2.0 * PI / n as f64;
    let samples = lp.node_count().max(64);
    let rot = |th: f64, v: &[f64]| {
        let (s, c) = th.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    };
    let dist = |a: [f64; 2], b: &[f64]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let kinv = (1..n).find(|&q| (q * k) % n == 1);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let t = 2.0 * PI * i as f64 / samples as f64;
        let x = lp.eval(t);
        let xs = lp.eval(t + k as f64 * zeta);
        for j in 1..=n {
            let next = if j == n { 1 } else { j + 1 };
            let pred = rot(zeta, &xs.as_slice()[2 * j..2 * j + 2]);
            worst = worst.max(dist(pred, &x.as_slice()[2 * next..2 * next + 2]));
        }
        let c0 = &x.as_slice()[0..2];
        worst = worst.max(dist(rot(zeta, &xs.as_slice()[0..2]), c0));
        if gcd(k % n, n) > 1 || k % n == 0 {
            worst = worst.max((c0[0] * c0[0] + c0[1] * c0[1]).sqrt());
        } else if let Some(kp) = kinv {
            let x1 = lp.eval(t + zeta);
            worst = worst.max(dist(rot(kp as f64 * zeta, &x1.as_slice()[0..2]), c0));
        }
    }
    worst
}

/// Orthonormal basis of the coefficients fixed by the isotropy group of block `k`.
pub fn fixed_subspace(n: usize, k: usize, p: usize) -> DMatrix<f64> {
    let g = group_matrix(&GroupElement::mode_generator(n, k), n, p);
    let size = g.nrows();
    let mut proj = DMatrix::<f64>::zeros(size, size);
    let mut pow = DMatrix::<f64>::identity(size, size);
    for _ in 0..n {
        proj += &pow;
        pow = &g * pow;
    }
    proj /= n as f64;
    let sym = (&proj + proj.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let cols: Vec<DVector<f64>> = (0..size)
        .filter(|&i| eig.eigenvalues[i] > 0.5)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}
