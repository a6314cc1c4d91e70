use nalgebra::{DMatrix, DVector};

use super::{a_index, b_index, fixed_subspace, galerkin_jacobian, galerkin_residual, FourierLoop};
use crate::error::{Error, Result};
use crate::model::{apply_j, ring_equilibrium, ProblemParams};

/// Third scalar condition closing the Newton system.
#[derive(Debug, Clone)]
pub enum AmplitudePin {
    /// `2|x_1| = value`.
    Amplitude(f64),
    /// `<(y, nu) - base, tangent> = ds` on the stacked coefficients and frequency.
    Arclength { base: DVector<f64>, tangent: DVector<f64>, ds: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryReduction {
    Full,
    /// Unknowns restricted to the loops fixed by the isotropy group of block `k`.
    Reduced { k: usize },
}

#[derive(Debug, Clone)]
pub struct Constraints {
    /// Coefficients of the constant equilibrium loop.
    pub center: DVector<f64>,
    /// Time derivative of the reference loop; fixes the time phase.
    pub phase_ref: DVector<f64>,
    pub pin: AmplitudePin,
    pub reduction: SymmetryReduction,
    basis: Option<DMatrix<f64>>,
}

impl Constraints {
    /// Constraints around the ring, with the phase taken from `reference`.
    pub fn new(
        reference: &FourierLoop,
        params: &ProblemParams,
        pin: AmplitudePin,
        reduction: SymmetryReduction,
    ) -> Self {
        let center = FourierLoop::constant(&ring_equilibrium(params), reference.nu, reference.p())
            .coefficients()
            .clone();
        let basis = match reduction {
            SymmetryReduction::Full => None,
            SymmetryReduction::Reduced { k } => Some(fixed_subspace(params.n, k, reference.p())),
        };
        Self { center, phase_ref: reference.derivative_coefficients(), pin, reduction, basis }
    }

    pub fn with_pin(&self, pin: AmplitudePin) -> Self {
        Self { pin, ..self.clone() }
    }

    pub fn with_phase(&self, reference: &FourierLoop) -> Self {
        Self { phase_ref: reference.derivative_coefficients(), ..self.clone() }
    }

    fn unknowns(&self) -> usize {
        self.basis.as_ref().map_or(self.center.len(), |s| s.ncols())
    }

    fn restrict(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(s) => s.tr_mul(v),
            None => v.clone(),
        }
    }

    fn extend(&self, z: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(s) => s * z,
            None => z.clone(),
        }
    }

    fn rotation_dir(&self, d: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.center.len());
        e.rows_mut(0, d).copy_from(&apply_j(&self.center.rows(0, d).into_owned()));
        let nrm = e.norm();
        if nrm > 0.0 {
            e /= nrm;
        }
        e
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest accepted ratio between LU pivots.
    pub max_condition: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 20, max_condition: 1e12 }
    }
}

/// A corrected loop on a branch.
#[derive(Debug, Clone)]
pub struct BranchState {
    pub orbit: FourierLoop,
    pub amplitude: f64,
    pub arclength: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Multipliers of the phase and rotation directions; zero on an exact solution.
    pub unfolding: [f64; 2],
}

fn amplitude_gradient(y: &DVector<f64>, d: usize) -> DVector<f64> {
    let mut g = DVector::zeros(y.len());
    let ia = a_index(1, d);
    debug_assert_eq!(b_index(1, d), ia + d);
    let amp = (y.rows(ia, 2 * d).norm_squared()).sqrt();
    if amp > 0.0 {
        g.rows_mut(ia, 2 * d).copy_from(&(y.rows(ia, 2 * d) / amp));
    }
    g
}

/// Nonlinear system in reduced unknowns `(z, nu, l1, l2)`.
pub(crate) struct System {
    pub values: DVector<f64>,
    pub residual_norm: f64,
    /// Jacobian without the pin row.
    pub jacobian: Option<DMatrix<f64>>,
}

pub(crate) fn evaluate(
    lp: &FourierLoop,
    lambda: [f64; 2],
    params: &ProblemParams,
    c: &Constraints,
    with_jacobian: bool,
) -> Result<System> {
    let d = lp.dim();
    let y = lp.coefficients();
    let m = c.unknowns();
    let r = galerkin_residual(lp, params)?.values;
    let e1 = {
        let nrm = c.phase_ref.norm();
        if nrm > 0.0 { &c.phase_ref / nrm } else { c.phase_ref.clone() }
    };
    let e2 = c.rotation_dir(d);
    let mut f = DVector::zeros(m + 3);
    let shifted = y - &c.center;
    f.rows_mut(0, m).copy_from(&c.restrict(&(&r + &e1 * lambda[0] + &e2 * lambda[1])));
    f[m] = shifted.dot(&c.phase_ref);
    f[m + 1] = shifted.dot(&e2);
    f[m + 2] = match &c.pin {
        AmplitudePin::Amplitude(a) => lp.amplitude() - a,
        AmplitudePin::Arclength { base, tangent, ds } => {
            let n = y.len();
            (y - base.rows(0, n)).dot(&tangent.rows(0, n)) + (lp.nu - base[n]) * tangent[n] - ds
        }
    };
    let jacobian = if with_jacobian {
        let (jac, dnu) = galerkin_jacobian(lp, params)?;
        let mut a = DMatrix::zeros(m + 2, m + 3);
        let (js, ph, rot) = match &c.basis {
            Some(s) => (s.tr_mul(&(jac * s)), s.tr_mul(&c.phase_ref), s.tr_mul(&e2)),
            None => (jac, c.phase_ref.clone(), e2.clone()),
        };
        a.view_mut((0, 0), (m, m)).copy_from(&js);
        a.view_mut((0, m), (m, 1)).copy_from(&c.restrict(&dnu));
        a.view_mut((0, m + 1), (m, 1)).copy_from(&c.restrict(&e1));
        a.view_mut((0, m + 2), (m, 1)).copy_from(&c.restrict(&e2));
        a.view_mut((m, 0), (1, m)).copy_from(&ph.transpose());
        a.view_mut((m + 1, 0), (1, m)).copy_from(&rot.transpose());
        Some(a)
    } else {
        None
    };
    Ok(System { values: f, residual_norm: r.norm(), jacobian })
}

/// Row of the pin in reduced unknowns.
pub(crate) fn pin_row(lp: &FourierLoop, c: &Constraints) -> DVector<f64> {
    let m = c.unknowns();
    let mut row = DVector::zeros(m + 3);
    match &c.pin {
        AmplitudePin::Amplitude(_) => {
            let g = amplitude_gradient(lp.coefficients(), lp.dim());
            row.rows_mut(0, m).copy_from(&c.restrict(&g));
        }
        AmplitudePin::Arclength { tangent, .. } => {
            let n = lp.coefficients().len();
            row.rows_mut(0, m).copy_from(&c.restrict(&tangent.rows(0, n).into_owned()));
            row[m] = tangent[n];
        }
    }
    row
}

/// Solves the square system `[a; row] x = rhs`, checking the LU pivots.
pub(crate) fn solve_bordered(
    a: &DMatrix<f64>,
    row: &DVector<f64>,
    rhs: &DVector<f64>,
    max_condition: f64,
) -> Result<DVector<f64>> {
    let k = a.nrows();
    let mut full = a.clone().insert_row(k, 0.0);
    full.set_row(k, &row.transpose());
    let lu = full.lu();
    let diag = lu.u().diagonal().map(f64::abs);
    let (lo, hi) = (diag.min(), diag.max());
    let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if ratio > max_condition {
        return Err(Error::NearDegeneracy { ratio });
    }
    lu.solve(rhs).ok_or(Error::NearDegeneracy { ratio: f64::INFINITY })
}

/// Newton iteration on the Galerkin system with unfolding parameters for the
/// phase and rotation directions.
pub fn newton_correct(
    lp: &FourierLoop,
    params: &ProblemParams,
    constraints: &Constraints,
    opts: &NewtonOptions,
) -> Result<BranchState> {
    if constraints.center.len() != lp.coefficients().len() {
        return Err(Error::DimensionMismatch {
            expected: constraints.center.len(),
            got: lp.coefficients().len(),
        });
    }
    let m = constraints.unknowns();
    let mut cur = lp.clone();
    // project onto the fixed subspace so that the iteration stays inside it
    cur.set_coefficients(constraints.extend(&constraints.restrict(lp.coefficients())));
    let mut lambda = [0.0; 2];
    let mut last = f64::INFINITY;
    for it in 0..=opts.max_iter {
        let sys = evaluate(&cur, lambda, params, constraints, it < opts.max_iter)?;
        let fnorm = sys.values.norm();
        last = fnorm.max(sys.residual_norm);
        log::trace!("newton {it}: |F| = {fnorm:.3e}, |r| = {:.3e}", sys.residual_norm);
        if fnorm < opts.tol && sys.residual_norm < opts.tol {
            return Ok(BranchState {
                amplitude: cur.amplitude(),
                arclength: 0.0,
                residual_norm: sys.residual_norm,
                iterations: it,
                unfolding: lambda,
                orbit: cur,
            });
        }
        let Some(a) = sys.jacobian else { break };
        let row = pin_row(&cur, constraints);
        let dx = solve_bordered(&a, &row, &(-sys.values), opts.max_condition)?;
        let z = constraints.restrict(cur.coefficients()) + dx.rows(0, m);
        cur.set_coefficients(constraints.extend(&z));
        cur.nu += dx[m];
        lambda[0] += dx[m + 1];
        lambda[1] += dx[m + 2];
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, residual: last })
}

/// Unit tangent `(t_y, t_nu)` of the solution curve at `lp`. The extra row fixes
/// the orientation: `<t, previous> > 0`, or increasing amplitude without one.
pub(crate) fn tangent(
    lp: &FourierLoop,
    params: &ProblemParams,
    constraints: &Constraints,
    previous: Option<&DVector<f64>>,
    opts: &NewtonOptions,
) -> Result<DVector<f64>> {
    let sys = evaluate(lp, [0.0; 2], params, constraints, true)?;
    let a = sys.jacobian.expect("requested");
    let c = match previous {
        Some(t) => constraints.with_pin(AmplitudePin::Arclength {
            base: t.clone(),
            tangent: t.clone(),
            ds: 0.0,
        }),
        None => constraints.with_pin(AmplitudePin::Amplitude(0.0)),
    };
    let row = pin_row(lp, &c);
    let m = constraints.unknowns();
    let mut rhs = DVector::zeros(m + 3);
    rhs[m + 2] = 1.0;
    let x = solve_bordered(&a, &row, &rhs, opts.max_condition)?;
    let mut t = DVector::zeros(lp.coefficients().len() + 1);
    let n = lp.coefficients().len();
    t.rows_mut(0, n).copy_from(&constraints.extend(&x.rows(0, m).into_owned()));
    t[n] = x[m];
    let nrm = t.norm();
    Ok(t / nrm)
}
