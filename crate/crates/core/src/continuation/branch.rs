use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::newton::tangent;
use super::{
    newton_correct, symmetry_residual, AmplitudePin, BranchState, Constraints, NewtonOptions,
    SymmetryReduction,
};
use crate::error::Result;
use crate::model::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxSteps,
    NormCap,
    PeriodCap,
    NearCollision,
    ReturnedToEquilibrium,
    NewtonFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::MaxSteps => "max_steps",
            Self::NormCap => "norm_cap",
            Self::PeriodCap => "period_cap",
            Self::NearCollision => "near_collision",
            Self::ReturnedToEquilibrium => "returned_to_equilibrium",
            Self::NewtonFailure => "newton_failure",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    /// Block whose isotropy group the branch carries.
    pub k: usize,
    pub reduce: bool,
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Bound on `max_t |x(t) - a|`.
    pub norm_cap: f64,
    /// Bound on the physical period `2 pi / nu`.
    pub period_cap: f64,
    pub collision_eps: f64,
    pub newton: NewtonOptions,
}

impl ContinuationOptions {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            reduce: true,
            ds: 0.01,
            ds_min: 1e-6,
            ds_max: 0.05,
            norm_cap: 10.0,
            period_cap: 1e3,
            collision_eps: 1e-3,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub k: usize,
    pub states: Vec<BranchState>,
    pub termination: Termination,
    /// Set when the branch stopped on a failed correction.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchRecord {
    pub k: usize,
    pub nu: f64,
    pub amplitude: f64,
    pub arclength: f64,
    pub residual_norm: f64,
    pub symmetry_residual: f64,
    pub termination: Termination,
}

impl Branch {
    pub fn records(&self) -> Vec<BranchRecord> {
        self.states
            .iter()
            .map(|s| BranchRecord {
                k: self.k,
                nu: s.orbit.nu,
                amplitude: s.amplitude,
                arclength: s.arclength,
                residual_norm: s.residual_norm,
                symmetry_residual: symmetry_residual(&s.orbit, self.k, s.orbit.n),
                termination: self.termination,
            })
            .collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Out<'a> {
            k: usize,
            termination: Termination,
            failure: &'a Option<String>,
            states: Vec<BranchRecord>,
        }
        let out = Out { k: self.k, termination: self.termination, failure: &self.failure, states: self.records() };
        fs::write(path, serde_json::to_string_pretty(&out)?)?;
        Ok(())
    }

    pub fn last(&self) -> &BranchState {
        self.states.last().expect("a branch holds its start")
    }
}

fn stacked(s: &BranchState) -> DVector<f64> {
    let c = s.orbit.coefficients();
    let mut x = DVector::zeros(c.len() + 1);
    x.rows_mut(0, c.len()).copy_from(c);
    x[c.len()] = s.orbit.nu;
    x
}

/// Pseudo-arclength continuation from a corrected loop, in the direction of
/// increasing amplitude.
pub fn continue_branch(
    start: &BranchState,
    step_count: usize,
    params: &ProblemParams,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let reduction =
        if opts.reduce { SymmetryReduction::Reduced { k: opts.k } } else { SymmetryReduction::Full };
    let base = Constraints::new(&start.orbit, params, AmplitudePin::Amplitude(start.amplitude), reduction);
    let mut branch =
        Branch { k: opts.k, states: vec![start.clone()], termination: Termination::MaxSteps, failure: None };
    let mut tan = tangent(&start.orbit, params, &base, None, &opts.newton)?;
    let mut ds = opts.ds;
    let n_coef = start.orbit.coefficients().len();
    for step in 0..step_count {
        let cur = branch.last().clone();
        let x0 = stacked(&cur);
        let corrected = loop {
            let pred = &x0 + &tan * ds;
            let mut guess = cur.orbit.clone();
            guess.set_coefficients(pred.rows(0, n_coef).into_owned());
            guess.nu = pred[n_coef];
            let c = base.with_phase(&cur.orbit).with_pin(AmplitudePin::Arclength {
                base: x0.clone(),
                tangent: tan.clone(),
                ds,
            });
            match newton_correct(&guess, params, &c, &opts.newton) {
                Ok(s) => break Ok((s, c)),
                Err(e) => {
                    log::debug!("step {step}: correction failed at ds = {ds:.3e}: {e}");
                    ds *= 0.5;
                    if ds < opts.ds_min {
                        break Err(e);
                    }
                }
            }
        };
        let (mut state, c) = match corrected {
            Ok(v) => v,
            Err(e) => {
                branch.termination = Termination::NewtonFailure;
                branch.failure = Some(e.to_string());
                return Ok(branch);
            }
        };
        state.arclength = cur.arclength + ds;
        match tangent(&state.orbit, params, &c, Some(&tan), &opts.newton) {
            Ok(t) => tan = t,
            Err(e) => {
                branch.states.push(state);
                branch.termination = Termination::NewtonFailure;
                branch.failure = Some(e.to_string());
                return Ok(branch);
            }
        }
        let fast = state.iterations <= 3;
        let orbit = state.orbit.clone();
        let amplitude = state.amplitude;
        branch.states.push(state);
        let samples = 4 * orbit.node_count();
        let class = if orbit.min_distance(samples) < 10.0 * opts.collision_eps {
            Some(Termination::NearCollision)
        } else if orbit.max_deviation(samples) > opts.norm_cap {
            Some(Termination::NormCap)
        } else if orbit.nu <= 0.0 || 2.0 * PI / orbit.nu > opts.period_cap {
            Some(Termination::PeriodCap)
        } else if amplitude < start.amplitude / 10.0 && (orbit.nu - start.orbit.nu).abs() > 1e-6 {
            Some(Termination::ReturnedToEquilibrium)
        } else {
            None
        };
        if let Some(t) = class {
            branch.termination = t;
            return Ok(branch);
        }
        if fast {
            ds = (ds * 1.5).min(opts.ds_max);
        }
    }
    Ok(branch)
}
