use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{block_pencil, block_roots, eta, BlockPencil};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::model::{ProblemKind, ProblemParams};
use crate::symmetry::{degenerate_mus, BlockShape};
use crate::C64;

const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Scan,
}

/// Name of a closed-form frequency, used to select points from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointLabel {
    NuK,
    Nu0,
    Nu1,
    NuPlus,
    NuMinus,
    NuBarPlus,
    NuBarMinus,
}

impl PointLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointLabel::NuK => "nu_k",
            PointLabel::Nu0 => "nu0",
            PointLabel::Nu1 => "nu1",
            PointLabel::NuPlus => "nu_plus",
            PointLabel::NuMinus => "nu_minus",
            PointLabel::NuBarPlus => "nu_bar_plus",
            PointLabel::NuBarMinus => "nu_bar_minus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            PointLabel::NuK,
            PointLabel::Nu0,
            PointLabel::Nu1,
            PointLabel::NuPlus,
            PointLabel::NuMinus,
            PointLabel::NuBarPlus,
            PointLabel::NuBarMinus,
        ]
        .into_iter()
        .find(|l| l.as_str() == s)
    }
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Isotropy group of the bifurcating orbits: a shift by one element equals a
/// rotation by `zeta` composed with a time shift by `k zeta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryLabel {
    pub n: usize,
    pub k: usize,
}

impl fmt::Display for SymmetryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z_{}({})", self.n, self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub k: usize,
    pub nu0: f64,
    pub eta: i32,
    pub symmetry: SymmetryLabel,
    pub provenance: Provenance,
    pub label: Option<PointLabel>,
    /// `|det m_k(nu0)|` divided by `max(1, |m_k(nu0)|_F)^dim`.
    pub det_residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanOutcome {
    pub points: Vec<BifurcationPoint>,
    /// Index changes located within `1e-9` of the window edges.
    pub boundary_roots: Vec<f64>,
}

/// Rejects parameters for which block `k` has a degenerate spectrum:
/// `omega = 0`, a singular `B_k` (`mu = mu_k`), or the special values of `n = 2`.
pub fn check_degeneracy(k: usize, params: &ProblemParams) -> Result<()> {
    let n = params.n;
    BlockShape::of(n, k)?;
    let mu = params.mu;
    if params.omega().abs() < DEGENERACY_TOL {
        return Err(Error::DegenerateParameter(format!("omega = 0 at mu = {mu}")));
    }
    if n == 2 {
        for bad in [-0.5, -1.25, -2.0] {
            if k == 1 && (mu - bad).abs() < DEGENERACY_TOL {
                return Err(Error::DegenerateParameter(format!("n = 2 block is degenerate at mu = {bad}")));
            }
        }
        return Ok(());
    }
    let kk = k.min(n - k);
    if kk == 0 {
        return Ok(());
    }
    for (j, muj) in degenerate_mus(n) {
        if j == kk && (mu - muj).abs() < DEGENERACY_TOL {
            return Err(Error::DegenerateParameter(format!("B_{k} is singular at mu = mu_{j} = {muj}")));
        }
    }
    Ok(())
}

fn sqrt_pos(x: f64) -> Option<f64> {
    (x > 0.0).then(|| x.sqrt())
}

/// Turns candidate frequencies into points: keeps positive ones, rejects
/// coincident roots and drops those with zero jump.
fn finish(
    k: usize,
    params: &ProblemParams,
    pencil: &BlockPencil,
    mut candidates: Vec<(f64, PointLabel)>,
    provenance: Provenance,
) -> Result<Vec<BifurcationPoint>> {
    candidates.retain(|(nu, _)| *nu > DEGENERACY_TOL);
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in candidates.windows(2) {
        if (w[1].0 - w[0].0).abs() < 1e-8 * (1.0 + w[0].0) {
            return Err(Error::DegenerateParameter(format!(
                "coincident roots of det m_{k} at nu = {}",
                w[0].0
            )));
        }
    }
    let mut out = Vec::new();
    for (nu, label) in candidates {
        let e = eta(k, nu, params, None)?;
        if e == 0 {
            continue;
        }
        out.push(BifurcationPoint {
            k,
            nu0: nu,
            eta: e,
            symmetry: SymmetryLabel { n: params.n, k },
            provenance,
            label: Some(label),
            det_residual: relative_det(&pencil, nu),
        });
    }
    Ok(out)
}

pub fn vortex_bif_points(k: usize, params: &ProblemParams) -> Result<Vec<BifurcationPoint>> {
    if params.kind != ProblemKind::Vortex {
        return Err(Error::InvalidParameter("vortex_bif_points needs a vortex problem".into()));
    }
    check_degeneracy(k, params)?;
    let pencil = block_pencil(k, params)?;
    let (n, mu) = (params.n, params.mu);
    let omega = params.omega();
    let s1 = params.s1();
    let mut cand = Vec::new();
    match BlockShape::of(n, k)? {
        BlockShape::Peripheral => {
            let wk = params.omega_k(k);
            if wk > 0.0 {
                if let Some(nu) = sqrt_pos(4.0 * wk * (omega - wk)) {
                    cand.push((nu, PointLabel::NuK));
                }
            }
        }
        BlockShape::Coupled { conjugate } => {
            if pencil.reduced {
                cand.push((s1, PointLabel::Nu0));
            } else {
                let sign = if conjugate { -1.0 } else { 1.0 };
                cand.push((sign * (mu + s1), PointLabel::Nu0));
                if let Some(p) = sqrt_pos(s1 * s1 - mu) {
                    cand.push((sign * p, PointLabel::NuPlus));
                    cand.push((-sign * p, PointLabel::NuMinus));
                }
            }
        }
        BlockShape::PairCoupled => {
            cand.push(((mu + 0.5).abs(), PointLabel::Nu0));
            if !pencil.reduced {
                if let Some(p) = sqrt_pos(-mu - 1.25) {
                    cand.push((3f64.sqrt() * p, PointLabel::Nu1));
                }
            }
        }
    }
    finish(k, params, &pencil, cand, Provenance::ClosedForm)
}

/// Positive roots of `nu^4 - 2 b nu^2 + c` (with labels for `+` and `-`).
fn biquadratic(b: f64, c: f64, k: usize) -> Result<Vec<(f64, PointLabel)>> {
    let disc = b * b - c;
    let mut out = Vec::new();
    if disc < 0.0 {
        return Ok(out);
    }
    if disc.abs() < DEGENERACY_TOL * (1.0 + b * b) && b > 0.0 {
        return Err(Error::DegenerateParameter(format!("double root of det m_{k} at nu^2 = {b}")));
    }
    let r = disc.sqrt();
    if let Some(nu) = sqrt_pos(b + r) {
        out.push((nu, PointLabel::NuPlus));
    }
    if let Some(nu) = sqrt_pos(b - r) {
        out.push((nu, PointLabel::NuMinus));
    }
    Ok(out)
}

pub fn filament_bif_points(k: usize, params: &ProblemParams) -> Result<Vec<BifurcationPoint>> {
    if params.kind != ProblemKind::Filament {
        return Err(Error::InvalidParameter("filament_bif_points needs a filament problem".into()));
    }
    check_degeneracy(k, params)?;
    let pencil = block_pencil(k, params)?;
    let (n, mu, g) = (params.n, params.mu, params.gamma);
    let omega = params.omega();
    let shape = BlockShape::of(n, k)?;
    let cand = match shape {
        BlockShape::Peripheral => {
            let wk = params.omega_k(k);
            biquadratic(2.0 * g * g - omega, 4.0 * wk * (omega - wk), k)?
        }
        _ if pencil.reduced => {
            let s1 = params.s1();
            biquadratic(2.0 * g * g - s1, s1 * s1, k)?
        }
        BlockShape::Coupled { conjugate } if mu == 1.0 => {
            let sign = if conjugate { -1.0 } else { 1.0 };
            let mut c = Vec::new();
            let d = g * g - omega;
            if d.abs() < DEGENERACY_TOL {
                return Err(Error::DegenerateParameter("gamma^2 = omega at mu = 1".into()));
            }
            if d > 0.0 {
                c.push((sign * (g + d.sqrt()), PointLabel::NuBarPlus));
                c.push((sign * (g - d.sqrt()), PointLabel::NuBarMinus));
            }
            let b = omega - 2.0 * g * g;
            c.extend(biquadratic(-b, omega * omega - 2.0 * omega, k)?);
            c
        }
        _ => {
            let (lo, hi) = default_scan_window(k, params)?;
            return Ok(scan_bif_points(k, params, lo, hi, DEFAULT_GRID)?.points);
        }
    };
    finish(k, params, &pencil, cand, Provenance::ClosedForm)
}

pub const DEFAULT_GRID: usize = 2000;

/// A window `[1e-6, R]` containing every positive root of `det m_k`.
pub fn default_scan_window(k: usize, params: &ProblemParams) -> Result<(f64, f64)> {
    let roots = block_roots(k, params)?;
    let r = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok((1e-6, 1.25 * r + 1.0))
}

fn relative_det(pencil: &BlockPencil, nu: f64) -> f64 {
    let m = pencil.eval(C64::new(nu, 0.0));
    let scale = m.norm().max(1.0).powi(m.nrows() as i32);
    m.determinant().norm() / scale
}

/// Strict negative count, used for locating index changes.
fn negatives(pencil: &BlockPencil, nu: f64) -> usize {
    hermitian_eigenvalues(&pencil.eval(C64::new(nu, 0.0)))
        .iter()
        .filter(|&&l| l < 0.0)
        .count()
}

/// Locates every change of the Morse index of `m_k(nu)` on `[nu_min, nu_max]`
/// by sampling and bisection, and attaches the jump.
pub fn scan_bif_points(
    k: usize,
    params: &ProblemParams,
    nu_min: f64,
    nu_max: f64,
    grid: usize,
) -> Result<ScanOutcome> {
    if !(nu_min < nu_max) {
        return Err(Error::InvalidParameter(format!("empty scan window [{nu_min}, {nu_max}]")));
    }
    if grid < 100 {
        return Err(Error::InvalidParameter(format!("grid = {grid}, need at least 100")));
    }
    let pencil = block_pencil(k, params)?;
    let h = (nu_max - nu_min) / grid as f64;
    let nodes: Vec<f64> = (0..=grid).map(|i| nu_min + i as f64 * h).collect();
    let counts: Vec<usize> = nodes.iter().map(|&nu| negatives(&pencil, nu)).collect();

    let mut roots = Vec::new();
    for i in 0..grid {
        let target = counts[i + 1];
        let (mut start, mut start_count) = (nodes[i], counts[i]);
        // several roots may share a cell; peel them off left to right
        for _ in 0..8 {
            if start_count == target {
                break;
            }
            let (mut lo, mut hi) = (start, nodes[i + 1]);
            while hi - lo > 1e-13 * (1.0 + hi.abs()) {
                let mid = 0.5 * (lo + hi);
                if negatives(&pencil, mid) == start_count {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
            start = hi;
            start_count = negatives(&pencil, hi);
        }
    }

    let mut out = ScanOutcome::default();
    let edge = 1e-9 * (1.0 + nu_max.abs());
    let mut last: Option<f64> = None;
    for nu in roots {
        if last.is_some_and(|l| nu - l < 1e-10 * (1.0 + nu)) {
            continue;
        }
        last = Some(nu);
        if nu - nu_min < edge || nu_max - nu < edge {
            warn!("index change at nu = {nu} lies on the edge of the scan window");
            out.boundary_roots.push(nu);
            continue;
        }
        let e = eta(k, nu, params, None)?;
        if e == 0 {
            continue;
        }
        out.points.push(BifurcationPoint {
            k,
            nu0: nu,
            eta: e,
            symmetry: SymmetryLabel { n: params.n, k },
            provenance: Provenance::Scan,
            label: None,
            det_residual: relative_det(&pencil, nu),
        });
    }
    Ok(out)
}

/// Closed-form (or fallback) points of either problem.
pub fn bif_points(k: usize, params: &ProblemParams) -> Result<Vec<BifurcationPoint>> {
    match params.kind {
        ProblemKind::Vortex => vortex_bif_points(k, params),
        ProblemKind::Filament => filament_bif_points(k, params),
    }
}
