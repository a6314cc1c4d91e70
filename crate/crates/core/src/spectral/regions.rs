use serde::Serialize;

use super::{block_m, morse_index};
use crate::error::{Error, Result};
use crate::model::ProblemParams;

/// Region of the `(mu, nu)` plane for the first vortex block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionReport {
    pub label: &'static str,
    /// Morse index implied by the region (its leading digit).
    pub expected_morse: usize,
    /// `n_1(nu)` computed from the eigenvalues of `m_1(nu)`.
    pub numeric_morse: usize,
}

const MARGIN: f64 = 1e-6;

fn on_curve(what: &str, mu: f64, nu: f64) -> Error {
    Error::InvalidParameter(format!("({mu}, {nu}) lies on the {what} boundary curve"))
}

fn region_ring(mu: f64, nu: f64, s1: f64) -> Result<&'static str> {
    if mu.abs() <= MARGIN {
        return Err(on_curve("mu = 0", mu, nu));
    }
    let nu0 = mu + s1;
    if (nu - nu0).abs() <= MARGIN {
        return Err(on_curve("nu0", mu, nu));
    }
    let par = s1 * s1 - mu;
    let p = if par > 0.0 { par.sqrt() } else { f64::NAN };
    if par > 0.0 && (nu.abs() - p).abs() <= MARGIN {
        return Err(on_curve("nu_plus/nu_minus", mu, nu));
    }
    let inside = par > 0.0 && nu.abs() < p;
    Ok(if mu > 0.0 {
        if nu > nu0 {
            "2b"
        } else if inside {
            "0a"
        } else {
            "1a"
        }
    } else if inside {
        if nu > nu0 {
            "2c"
        } else {
            "1c"
        }
    } else if nu > 0.0 {
        "1b"
    } else if nu < nu0 {
        "2a"
    } else {
        "1d"
    })
}

fn region_pair(mu: f64, nu: f64) -> Result<&'static str> {
    if mu.abs() <= MARGIN {
        return Err(on_curve("mu = 0", mu, nu));
    }
    let a = nu.abs();
    let nu0 = (mu + 0.5).abs();
    if (a - nu0).abs() <= MARGIN {
        return Err(on_curve("nu0", mu, nu));
    }
    let nu1 = if mu < -1.25 { 3f64.sqrt() * (-mu - 1.25).sqrt() } else { f64::NAN };
    if mu < -1.25 && (a - nu1).abs() <= MARGIN {
        return Err(on_curve("nu1", mu, nu));
    }
    let below_nu1 = mu < -1.25 && a < nu1;
    Ok(if mu > 0.0 {
        if a < nu0 {
            "1a"
        } else {
            "2a"
        }
    } else if a > nu0 {
        "2b"
    } else if mu > -0.5 {
        "1b"
    } else if below_nu1 {
        "2c"
    } else if mu > -2.0 {
        "3a"
    } else {
        "1c"
    })
}

/// Classifies `(mu, nu)` for the vortex block `m_1` by the curve inequalities.
pub fn morse_region_classify(mu: f64, nu: f64, n: usize) -> Result<RegionReport> {
    let params = ProblemParams::vortex(n, mu)?;
    let label = if n == 2 {
        region_pair(mu, nu)?
    } else {
        region_ring(mu, nu, params.s1())?
    };
    let expected_morse = (label.as_bytes()[0] - b'0') as usize;
    let numeric_morse = morse_index(&block_m(1, nu, &params)?).negative;
    Ok(RegionReport { label, expected_morse, numeric_morse })
}
