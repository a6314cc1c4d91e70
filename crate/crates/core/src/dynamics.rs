//! Time integration of the rotating-frame vortex flow and of the filament
//! traveling-wave equation.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    filament_tw_field, min_pair_distance, potential_flat, vortex_field_flat, Configuration,
    ProblemParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Rk4Fixed,
    Dp54Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Step of `Rk4Fixed`.
    pub dt: f64,
    /// Local error tolerance of `Dp54Adaptive` (absolute and relative).
    pub tol: f64,
    pub t_end: f64,
    pub collision_eps: f64,
    pub max_steps: usize,
    /// Upper bound on the adaptive step. Near a fixed point the error estimate
    /// vanishes and unbounded growth would leave the stability region.
    pub max_dt: f64,
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_end: f64) -> Self {
        Self { method: Method::Rk4Fixed, dt, tol: 1e-10, t_end, collision_eps: 1e-6, max_steps: 50_000_000, max_dt: f64::INFINITY }
    }

    pub fn dp54(tol: f64, t_end: f64) -> Self {
        Self { method: Method::Dp54Adaptive, dt: 1e-2, tol, t_end, collision_eps: 1e-6, max_steps: 10_000_000, max_dt: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end = {} must be positive", self.t_end)));
        }
        if !(self.max_dt > 0.0) {
            return Err(Error::InvalidParameter("max_dt must be positive".into()));
        }
        if !(self.collision_eps > 0.0) {
            return Err(Error::InvalidParameter("collision_eps must be positive".into()));
        }
        match self.method {
            Method::Rk4Fixed if !(self.dt > 0.0 && self.dt.is_finite()) => {
                Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)))
            }
            Method::Dp54Adaptive if !(self.tol > 1e-14 && self.tol < 1e-3) => {
                Err(Error::InvalidParameter(format!("tol = {} outside (1e-14, 1e-3)", self.tol)))
            }
            _ => Ok(()),
        }
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::dp54(1e-10, 100.0)
    }
}

/// First accepted sample at which two elements came closer than `collision_eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub t: f64,
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

/// Raw output of [`solve_ode`].
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub accepted: usize,
    pub rejected: usize,
    /// True when the field could not be evaluated or `stop` fired.
    pub stopped: bool,
}

const RK4_B: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

// Dormand-Prince 5(4); the systems are autonomous so the nodes c_i are not needed
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrates the autonomous system `y' = f(y)` from `t = 0` to `cfg.t_end`.
///
/// `stop` is called after every accepted step and ends the run when it returns
/// true. A field evaluation error shrinks the step (adaptive) or ends the run
/// (fixed step); the last good state is always kept.
pub fn solve_ode<F, S>(mut f: F, y0: &DVector<f64>, cfg: &IntegratorConfig, mut stop: S) -> Result<OdeSolution>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    S: FnMut(f64, &DVector<f64>) -> bool,
{
    cfg.validate()?;
    let mut sol = OdeSolution { times: vec![0.0], states: vec![y0.clone()], accepted: 0, rejected: 0, stopped: false };
    let mut t = 0.0;
    let mut y = y0.clone();
    let t_end = cfg.t_end;
    match cfg.method {
        Method::Rk4Fixed => {
            let steps = (t_end / cfg.dt).round().max(1.0) as usize;
            if steps > cfg.max_steps {
                return Err(Error::InvalidParameter(format!("{steps} steps exceed max_steps")));
            }
            let h = t_end / steps as f64;
            for s in 0..steps {
                let step = (|| -> Result<DVector<f64>> {
                    let k1 = f(&y)?;
                    let k2 = f(&(&y + &k1 * (0.5 * h)))?;
                    let k3 = f(&(&y + &k2 * (0.5 * h)))?;
                    let k4 = f(&(&y + &k3 * h))?;
                    Ok(&y + (k1 * RK4_B[0] + k2 * RK4_B[1] + k3 * RK4_B[2] + k4 * RK4_B[3]) * h)
                })();
                match step {
                    Ok(next) if finite(&next) => {
                        y = next;
                        t = (s + 1) as f64 * h;
                        sol.accepted += 1;
                        sol.times.push(t);
                        sol.states.push(y.clone());
                        if stop(t, &y) {
                            sol.stopped = true;
                            break;
                        }
                    }
                    _ => {
                        sol.stopped = true;
                        break;
                    }
                }
            }
        }
        Method::Dp54Adaptive => {
            let tol = cfg.tol;
            let mut h = cfg.dt.min(t_end).min(cfg.max_dt);
            let mut k_first: Option<DVector<f64>> = None;
            while t < t_end {
                if sol.accepted + sol.rejected >= cfg.max_steps {
                    return Err(Error::NonConvergence { iterations: cfg.max_steps, residual: t_end - t });
                }
                if h < 1e-14 * (1.0 + t.abs()) {
                    sol.stopped = true;
                    break;
                }
                let h_try = h.min(t_end - t);
                let attempt = (|| -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
                    let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
                    k.push(match &k_first {
                        Some(v) => v.clone(),
                        None => f(&y)?,
                    });
                    for s in 1..7 {
                        let mut ys = y.clone();
                        for (j, kj) in k.iter().enumerate() {
                            if DP_A[s][j] != 0.0 {
                                ys.axpy(h_try * DP_A[s][j], kj, 1.0);
                            }
                        }
                        k.push(f(&ys)?);
                    }
                    let mut ynew = y.clone();
                    let mut err = DVector::zeros(y.len());
                    for s in 0..7 {
                        if DP_B[s] != 0.0 {
                            ynew.axpy(h_try * DP_B[s], &k[s], 1.0);
                        }
                        if DP_E[s] != 0.0 {
                            err.axpy(h_try * DP_E[s], &k[s], 1.0);
                        }
                    }
                    Ok((ynew, err, k.pop().unwrap()))
                })();
                let (ynew, err, k_last) = match attempt {
                    Ok(v) if finite(&v.0) => v,
                    _ => {
                        sol.rejected += 1;
                        h = h_try * 0.25;
                        continue;
                    }
                };
                let norm = (err
                    .iter()
                    .zip(y.iter().zip(ynew.iter()))
                    .map(|(e, (a, b))| {
                        let sc = tol + tol * a.abs().max(b.abs());
                        (e / sc).powi(2)
                    })
                    .sum::<f64>()
                    / y.len() as f64)
                    .sqrt();
                if norm <= 1.0 {
                    t = if h_try == t_end - t { t_end } else { t + h_try };
                    y = ynew;
                    k_first = Some(k_last);
                    sol.accepted += 1;
                    sol.times.push(t);
                    sol.states.push(y.clone());
                    if stop(t, &y) {
                        sol.stopped = true;
                        break;
                    }
                    let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                    h = (h_try * factor).min(cfg.max_dt);
                } else {
                    sol.rejected += 1;
                    h = h_try * (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9);
                }
            }
        }
    }
    Ok(sol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub config: Configuration,
    pub velocity: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoredQuantity {
    pub name: String,
    pub initial: f64,
    pub max_drift: f64,
    /// Whether the model guarantees conservation (otherwise only recorded).
    pub conserved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub quantities: Vec<MonitoredQuantity>,
}

impl DriftSummary {
    pub fn get(&self, name: &str) -> Option<&MonitoredQuantity> {
        self.quantities.iter().find(|q| q.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ProblemParams,
    pub samples: Vec<Sample>,
    pub drift: DriftSummary,
    pub collision: Option<CollisionEvent>,
    /// True when the run ended before `t_end` for another reason (step-size collapse).
    pub truncated: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn collided(&self) -> bool {
        self.collision.is_some()
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    /// CSV with columns `t, x0, y0, ..., xn, yn` and, for the filament, `vx0, vy0, ...`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n1 = self.params.n + 1;
        let mut header = vec!["t".to_string()];
        for j in 0..n1 {
            header.push(format!("x{j}"));
            header.push(format!("y{j}"));
        }
        let has_vel = self.samples.first().is_some_and(|s| s.velocity.is_some());
        if has_vel {
            for j in 0..n1 {
                header.push(format!("vx{j}"));
                header.push(format!("vy{j}"));
            }
        }
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![format!("{:.17e}", s.t)];
            for p in &s.config.positions {
                row.push(format!("{:.17e}", p[0]));
                row.push(format!("{:.17e}", p[1]));
            }
            if let Some(v) = &s.velocity {
                for p in v {
                    row.push(format!("{:.17e}", p[0]));
                    row.push(format!("{:.17e}", p[1]));
                }
            }
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    /// JSON sidecar with the drift statistics and the stop reason.
    pub fn write_drift_json(&self, path: &Path) -> Result<()> {
        let doc = serde_json::json!({
            "params": self.params,
            "t_final": self.final_time(),
            "samples": self.samples.len(),
            "accepted_steps": self.accepted_steps,
            "rejected_steps": self.rejected_steps,
            "collision": self.collision,
            "truncated": self.truncated,
            "drift": self.drift,
        });
        fs::write(path, serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }
}

fn pairs(flat: &[f64]) -> Vec<[f64; 2]> {
    flat.chunks(2).map(|c| [c[0], c[1]]).collect()
}

/// `sum_j kappa_j |u_j|^2`.
pub fn angular_impulse(u: &[f64], params: &ProblemParams) -> f64 {
    let kappa = &params.circulations().kappa;
    u.chunks(2).zip(kappa).map(|(p, k)| k * (p[0] * p[0] + p[1] * p[1])).sum()
}

/// `1/2 v^T K^2 v - V(u)`, the energy of the traveling-wave equation.
pub fn filament_energy(u: &[f64], v: &[f64], params: &ProblemParams) -> Result<f64> {
    let kappa = &params.circulations().kappa;
    let kin: f64 = v.chunks(2).zip(kappa).map(|(p, k)| 0.5 * k * k * (p[0] * p[0] + p[1] * p[1])).sum();
    Ok(kin - potential_flat(u, params)?)
}

struct Monitor {
    name: &'static str,
    conserved: bool,
    initial: f64,
    max_drift: f64,
}

impl Monitor {
    fn new(name: &'static str, conserved: bool, initial: f64) -> Self {
        Self { name, conserved, initial, max_drift: 0.0 }
    }

    fn update(&mut self, value: f64) {
        self.max_drift = self.max_drift.max((value - self.initial).abs());
    }

    fn finish(self) -> MonitoredQuantity {
        MonitoredQuantity {
            name: self.name.to_string(),
            initial: self.initial,
            max_drift: self.max_drift,
            conserved: self.conserved,
        }
    }
}

fn require_mu(params: &ProblemParams) -> Result<()> {
    if params.mu == 0.0 {
        return Err(Error::UnsupportedParameter(
            "time integration needs a nonzero central circulation".into(),
        ));
    }
    Ok(())
}

fn collision_event(t: f64, u: &[f64], eps: f64) -> Option<CollisionEvent> {
    let (distance, i, j) = min_pair_distance(u);
    (distance < eps).then_some(CollisionEvent { t, i, j, distance })
}

/// Integrates `u' = -J K^{-1} grad V(u)` from `cfg0`.
pub fn integrate_vortex(cfg0: &Configuration, params: &ProblemParams, icfg: &IntegratorConfig) -> Result<Trajectory> {
    require_mu(params)?;
    let y0 = cfg0.to_flat();
    if y0.len() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), got: y0.len() });
    }
    icfg.validate()?;
    if let Some(c) = collision_event(0.0, y0.as_slice(), icfg.collision_eps) {
        return Err(Error::Collision { i: c.i, j: c.j, distance: c.distance });
    }
    let mut collision = None;
    let sol = solve_ode(
        |u| vortex_field_flat(u.as_slice(), params),
        &y0,
        icfg,
        |t, u| {
            collision = collision_event(t, u.as_slice(), icfg.collision_eps);
            collision.is_some()
        },
    )?;
    let mut v_mon = Monitor::new("potential", true, potential_flat(y0.as_slice(), params)?);
    let mut i_mon = Monitor::new("angular_impulse", true, angular_impulse(y0.as_slice(), params));
    let mut samples = Vec::with_capacity(sol.times.len());
    for (t, u) in sol.times.iter().zip(&sol.states) {
        if let Ok(v) = potential_flat(u.as_slice(), params) {
            v_mon.update(v);
        }
        i_mon.update(angular_impulse(u.as_slice(), params));
        samples.push(Sample { t: *t, config: Configuration::new(pairs(u.as_slice())), velocity: None });
    }
    if collision.is_none() && sol.stopped {
        // the step size collapsed: the field blew up between accepted steps
        let last = sol.states.last().unwrap();
        let (distance, i, j) = min_pair_distance(last.as_slice());
        collision = Some(CollisionEvent { t: *sol.times.last().unwrap(), i, j, distance });
    }
    Ok(Trajectory {
        params: *params,
        samples,
        drift: DriftSummary { quantities: vec![v_mon.finish(), i_mon.finish()] },
        truncated: sol.stopped,
        collision,
        accepted_steps: sol.accepted,
        rejected_steps: sol.rejected,
    })
}

/// Integrates `K^2 u'' + 2 gamma K J u' = grad V(u)` from `(cfg0, vel0)`.
pub fn integrate_filament_tw(
    cfg0: &Configuration,
    vel0: &[[f64; 2]],
    params: &ProblemParams,
    icfg: &IntegratorConfig,
) -> Result<Trajectory> {
    require_mu(params)?;
    let d = params.dim();
    let u0 = cfg0.to_flat();
    if u0.len() != d || 2 * vel0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: u0.len().max(2 * vel0.len()) });
    }
    icfg.validate()?;
    if let Some(c) = collision_event(0.0, u0.as_slice(), icfg.collision_eps) {
        return Err(Error::Collision { i: c.i, j: c.j, distance: c.distance });
    }
    let mut y0 = DVector::zeros(2 * d);
    y0.rows_mut(0, d).copy_from(&u0);
    for (j, v) in vel0.iter().enumerate() {
        y0[d + 2 * j] = v[0];
        y0[d + 2 * j + 1] = v[1];
    }
    let mut collision = None;
    let sol = solve_ode(
        |y| filament_tw_field(y, params),
        &y0,
        icfg,
        |t, y| {
            collision = collision_event(t, &y.as_slice()[..d], icfg.collision_eps);
            collision.is_some()
        },
    )?;
    let mut e_mon = Monitor::new("energy", false, filament_energy(&y0.as_slice()[..d], &y0.as_slice()[d..], params)?);
    let mut samples = Vec::with_capacity(sol.times.len());
    for (t, y) in sol.times.iter().zip(&sol.states) {
        let (u, v) = y.as_slice().split_at(d);
        if let Ok(e) = filament_energy(u, v, params) {
            e_mon.update(e);
        }
        samples.push(Sample { t: *t, config: Configuration::new(pairs(u)), velocity: Some(pairs(v)) });
    }
    if collision.is_none() && sol.stopped {
        let last = sol.states.last().unwrap();
        let (distance, i, j) = min_pair_distance(&last.as_slice()[..d]);
        collision = Some(CollisionEvent { t: *sol.times.last().unwrap(), i, j, distance });
    }
    Ok(Trajectory {
        params: *params,
        samples,
        drift: DriftSummary { quantities: vec![e_mon.finish()] },
        truncated: sol.stopped,
        collision,
        accepted_steps: sol.accepted,
        rejected_steps: sol.rejected,
    })
}

/// Distance from `u` to the rotation orbit `{R(theta) a}` of `a`.
pub fn orbit_distance(u: &[f64], a: &[f64]) -> f64 {
    // maximize Re(e^{i theta} sum conj(a_j) u_j)
    let (mut re, mut im) = (0.0, 0.0);
    for (p, q) in u.chunks(2).zip(a.chunks(2)) {
        re += q[0] * p[0] + q[1] * p[1];
        im += q[0] * p[1] - q[1] * p[0];
    }
    let theta = -im.atan2(re);
    let (s, c) = theta.sin_cos();
    u.chunks(2)
        .zip(a.chunks(2))
        .map(|(p, q)| {
            let x = c * p[0] - s * p[1] - q[0];
            let y = s * p[0] + c * p[1] - q[1];
            x * x + y * y
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ring_equilibrium;

    #[test]
    fn exponential_decay_order() {
        // y' = -y, y(1) = e^{-1}
        let y0 = DVector::from_vec(vec![1.0]);
        let exact = (-1.0f64).exp();
        let err = |dt: f64| {
            let s = solve_ode(|y| Ok(-y), &y0, &IntegratorConfig::rk4(dt, 1.0), |_, _| false).unwrap();
            (s.states.last().unwrap()[0] - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
        let s = solve_ode(|y| Ok(-y), &y0, &IntegratorConfig::dp54(1e-12, 1.0), |_, _| false).unwrap();
        assert!((s.states.last().unwrap()[0] - exact).abs() < 1e-11);
        assert_eq!(*s.times.last().unwrap(), 1.0);
    }

    #[test]
    fn harmonic_oscillator_dp54() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let f = |y: &DVector<f64>| Ok(DVector::from_vec(vec![y[1], -y[0]]));
        let s = solve_ode(f, &y0, &IntegratorConfig::dp54(1e-10, 20.0), |_, _| false).unwrap();
        let y = s.states.last().unwrap();
        assert!((y[0] - 20f64.cos()).abs() < 1e-8);
        assert!((y[1] + 20f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::rk4(0.0, 1.0).validate().is_err());
        assert!(IntegratorConfig::dp54(1e-16, 1.0).validate().is_err());
        assert!(IntegratorConfig::dp54(1e-8, -1.0).validate().is_err());
        assert!(IntegratorConfig::dp54(1e-8, 1.0).validate().is_ok());
    }

    #[test]
    fn ring_is_fixed() {
        let p = ProblemParams::vortex(5, 0.7).unwrap();
        let a = ring_equilibrium(&p);
        let tr = integrate_vortex(&a, &p, &IntegratorConfig::dp54(1e-10, 100.0)).unwrap();
        assert!(!tr.collided());
        let dev = (tr.last().config.to_flat() - a.to_flat()).amax();
        assert!(dev < 1e-9, "{dev}");

        let f = ProblemParams::filament(4, 1.0, 3.0).unwrap();
        let a = ring_equilibrium(&f);
        let vel = vec![[0.0, 0.0]; 5];
        let tr = integrate_filament_tw(&a, &vel, &f, &IntegratorConfig::dp54(1e-10, 20.0)).unwrap();
        let dev = (tr.last().config.to_flat() - a.to_flat()).amax();
        assert!(dev < 1e-9, "{dev}");
    }

    #[test]
    fn unsupported_and_colliding_inputs() {
        let p = ProblemParams::vortex(3, 0.0).unwrap();
        let a = Configuration::ring(3);
        assert!(matches!(
            integrate_vortex(&a, &p, &IntegratorConfig::default()),
            Err(Error::UnsupportedParameter(_))
        ));
        let p = ProblemParams::vortex(3, 1.0).unwrap();
        let mut c = Configuration::ring(3);
        c.positions[2] = c.positions[1];
        assert!(matches!(integrate_vortex(&c, &p, &IntegratorConfig::default()), Err(Error::Collision { .. })));
    }

    #[test]
    fn orbit_distance_ignores_rotation() {
        let a = Configuration::ring(4).to_flat();
        let r = crate::model::GroupElement::new(0, 0.83, 0.0).act_flat(&a);
        assert!(orbit_distance(r.as_slice(), a.as_slice()) < 1e-14);
        let mut b = a.clone();
        b[2] += 1e-3;
        assert!(orbit_distance(b.as_slice(), a.as_slice()) <= 1e-3 + 1e-15);
    }
}
