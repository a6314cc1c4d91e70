use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::block_roots;
use crate::error::{Error, Result};
use crate::linalg::{orthogonal_complement, real_eigenvalues};
use crate::model::{apply_j, hess_potential, ring_equilibrium, ProblemParams};
use crate::symmetry::degenerate_mus;

#[derive(Debug, Clone, Serialize)]
pub struct StabilityCheck {
    pub mu: f64,
    pub inside_window: bool,
    /// Real roots of `det M(nu)` over all blocks, with multiplicity.
    pub real_roots: usize,
    pub expected_real_roots: usize,
    /// Largest `|Re lambda|` of the linearization once the generalized kernel of
    /// the rotation orbit is removed.
    pub max_real_part: f64,
    pub spectral_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub n: usize,
    /// Lower end `mu_{n/2}`; `None` for `n = 3`, which has no such block.
    pub mu_lower: Option<f64>,
    pub mu_upper: f64,
    pub check: Option<StabilityCheck>,
}

impl StabilityReport {
    pub fn contains(&self, mu: f64) -> bool {
        self.mu_lower.is_none_or(|lo| mu > lo) && mu < self.mu_upper
    }
}

const REAL_TOL: f64 = 1e-6;
const IMAG_AXIS_TOL: f64 = 1e-8;

/// Window of `mu` where the ring can be spectrally stable, optionally with a
/// numerical verdict at `check_mu`.
pub fn stability_window(n: usize, check_mu: Option<f64>) -> Result<StabilityReport> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("stability window needs n >= 3, got {n}")));
    }
    let mus = degenerate_mus(n);
    let mu_upper = mus[0].1;
    let mu_lower = (n / 2 >= 2).then(|| mus[n / 2 - 1].1);
    let mut report = StabilityReport { n, mu_lower, mu_upper, check: None };
    if let Some(mu) = check_mu {
        report.check = Some(check(n, mu, report.contains(mu))?);
    }
    Ok(report)
}

fn check(n: usize, mu: f64, inside_window: bool) -> Result<StabilityCheck> {
    let params = ProblemParams::vortex(n, mu)?;
    if mu == 0.0 {
        return Err(Error::UnsupportedParameter(
            "the vortex linearization needs a nonzero central circulation".into(),
        ));
    }
    let mut real_roots = 0;
    for k in 1..=n {
        real_roots += block_roots(k, &params)?
            .iter()
            .filter(|z| z.im.abs() < REAL_TOL * (1.0 + z.re.abs()))
            .count();
    }
    let max_real_part = deflated_max_real_part(&params)?;
    let expected_real_roots = 2 * (n + 1);
    Ok(StabilityCheck {
        mu,
        inside_window,
        real_roots,
        expected_real_roots,
        max_real_part,
        spectral_ok: real_roots == expected_real_roots && max_real_part < IMAG_AXIS_TOL,
    })
}

/// Linearization `L = -J K^{-1} H` at the ring.
pub fn vortex_linearization(params: &ProblemParams) -> Result<DMatrix<f64>> {
    let cfg = ring_equilibrium(params);
    let h = hess_potential(&cfg, params)?;
    let kappa = params.circulations().diagonal();
    let dim = params.dim();
    let mut l = DMatrix::zeros(dim, dim);
    for c in 0..dim {
        let col = DVector::from_fn(dim, |r, _| h[(r, c)] / kappa[r]);
        l.set_column(c, &(-apply_j(&col)));
    }
    Ok(l)
}

/// The orbit direction `J a` and `w` with `H w = K a` span a 2x2 Jordan block
/// at zero; its eigenvalues are ill-conditioned, so they are removed before
/// measuring the distance to the imaginary axis.
fn deflated_max_real_part(params: &ProblemParams) -> Result<f64> {
    let cfg = ring_equilibrium(params);
    let a = cfg.to_flat();
    let h = hess_potential(&cfg, params)?;
    let kappa = params.circulations().diagonal();
    let dim = params.dim();
    let ka = DVector::from_fn(dim, |r, _| kappa[r] * a[r]);
    let w = h
        .clone()
        .svd(true, true)
        .solve(&ka, 1e-10)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let ja = apply_j(&a);
    let z1 = ja.normalize();
    let w2 = &w - &z1 * z1.dot(&w);
    let z = DMatrix::from_columns(&[z1, w2.normalize()]);
    let q = orthogonal_complement(&z);
    let l = vortex_linearization(params)?;
    let c = q.transpose() * &l * &q;
    Ok(real_eigenvalues(&c).iter().map(|z| z.re.abs()).fold(0.0, f64::max))
}
