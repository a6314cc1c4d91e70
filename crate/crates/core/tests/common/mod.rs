#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use ringbif::model::{grad_potential_flat, potential_flat, ProblemParams};

/// Uniform points in `[-2, 2]^2` with pairwise distance at least 0.2.
pub fn random_config<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let u: DVector<f64> = DVector::from_fn(2 * (n + 1), |_, _| rng.gen_range(-2.0..2.0));
        let ok = (0..=n).all(|i| {
            (i + 1..=n).all(|j| (u[2 * i] - u[2 * j]).hypot(u[2 * i + 1] - u[2 * j + 1]) > 0.2)
        });
        if ok {
            return u;
        }
    }
}

pub fn fd_gradient(u: &DVector<f64>, params: &ProblemParams, h: f64) -> DVector<f64> {
    DVector::from_fn(u.len(), |i, _| {
        let (mut p, mut m) = (u.clone(), u.clone());
        p[i] += h;
        m[i] -= h;
        (potential_flat(p.as_slice(), params).unwrap() - potential_flat(m.as_slice(), params).unwrap())
            / (2.0 * h)
    })
}

pub fn fd_hessian(u: &DVector<f64>, params: &ProblemParams, h: f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(u.len(), u.len());
    for i in 0..u.len() {
        let (mut p, mut m) = (u.clone(), u.clone());
        p[i] += h;
        m[i] -= h;
        let col = (grad_potential_flat(p.as_slice(), params).unwrap()
            - grad_potential_flat(m.as_slice(), params).unwrap())
            / (2.0 * h);
        out.set_column(i, &col);
    }
    out
}

/// `|a - b|_max / |a|_max`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
    num / den.max(f64::MIN_POSITIVE)
}
