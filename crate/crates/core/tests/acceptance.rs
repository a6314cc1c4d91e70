mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{fd_gradient, fd_hessian, random_config, rel_err};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringbif::continuation::{
    continue_branch, newton_correct, predictor, AmplitudePin, Constraints,
    ContinuationOptions, NewtonOptions, SymmetryReduction,
};
use ringbif::dynamics::{integrate_vortex, IntegratorConfig};
use ringbif::model::{grad_potential_flat, hess_potential_flat, hess_potential, ring_equilibrium};
use ringbif::spectral::{
    bif_points, block_m, default_scan_window, morse_region_classify, scan_bif_points,
    stability_window, PointLabel, Provenance, DEFAULT_GRID,
};
use ringbif::symmetry::{analytic_bk, decompose_hessian};
use ringbif::{Configuration, ProblemKind, ProblemParams};

type Check = std::result::Result<String, String>;

const MUS: [f64; 6] = [-3.0, -1.0, 0.0, 0.5, 1.0, 3.0];
const GAMMAS: [f64; 3] = [0.0, 1.0, 3.0];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn block_diagonalization() -> Check {
    let (mut off, mut blk) = (0.0f64, 0.0f64);
    for n in 2..=8 {
        for &mu in &MUS {
            let p = ProblemParams::vortex(n, mu).map_err(|e| e.to_string())?;
            let h = hess_potential(&ring_equilibrium(&p), &p).map_err(|e| e.to_string())?;
            let dec = decompose_hessian(&h, n).map_err(|e| e.to_string())?;
            off = off.max(dec.residual);
            for k in 1..=n {
                let b = analytic_bk(&p, k).map_err(|e| e.to_string())?;
                let err = (dec.block(k) - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
                blk = blk.max(err);
                ensure(err < 1e-10, || format!("n={n} mu={mu} k={k}: B_k error {err:e}"))?;
            }
            ensure(dec.residual < 1e-10, || format!("n={n} mu={mu}: off-block {:e}", dec.residual))?;
        }
    }
    Ok(format!("off-block {off:.1e}, block error {blk:.1e}"))
}

fn oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut eg, mut eh) = (0.0f64, 0.0f64);
    for n in 3..=6 {
        for _ in 0..20 {
            let p = ProblemParams::vortex(n, rng.gen_range(-3.0..3.0)).unwrap();
            let u = random_config(&mut rng, n);
            let g = grad_potential_flat(u.as_slice(), &p).map_err(|e| e.to_string())?;
            let h = hess_potential_flat(u.as_slice(), &p).map_err(|e| e.to_string())?;
            eg = eg.max(rel_err(g.as_slice(), fd_gradient(&u, &p, 1e-6).as_slice()));
            eh = eh.max(rel_err(h.as_slice(), fd_hessian(&u, &p, 1e-5).as_slice()));
        }
    }
    ensure(eg < 1e-6 && eh < 1e-5, || format!("gradient {eg:e}, hessian {eh:e}"))?;
    Ok(format!("80 configurations, gradient {eg:.1e}, hessian {eh:.1e}"))
}

fn grid() -> Vec<ProblemParams> {
    let mut out = Vec::new();
    for n in 2..=8 {
        for &mu in &MUS {
            out.push(ProblemParams::vortex(n, mu).unwrap());
            for &g in &GAMMAS {
                out.push(ProblemParams::filament(n, mu, g).unwrap());
            }
        }
    }
    out
}

fn closed_form_vs_scan() -> Check {
    let (mut compared, mut worst) = (0, 0.0f64);
    for p in grid() {
        for k in 1..=p.n {
            // errors mark the degeneracy curves
            let Ok(points) = bif_points(k, &p) else { continue };
            if points.iter().any(|b| b.provenance == Provenance::Scan) {
                continue;
            }
            let (lo, hi) = default_scan_window(k, &p).map_err(|e| e.to_string())?;
            let scanned = scan_bif_points(k, &p, lo, hi, DEFAULT_GRID).map_err(|e| e.to_string())?.points;
            ensure(points.len() == scanned.len(), || {
                format!("{p:?} k={k}: {} closed-form points, {} scanned", points.len(), scanned.len())
            })?;
            for (a, b) in points.iter().zip(&scanned) {
                let d = (a.nu0 - b.nu0).abs();
                worst = worst.max(d);
                ensure(d < 1e-8 && a.eta == b.eta, || {
                    format!("{p:?} k={k}: nu {} vs {}, eta {} vs {}", a.nu0, b.nu0, a.eta, b.eta)
                })?;
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} points, max |dnu| {worst:.1e}"))
}

fn sign_tables() -> Check {
    let mut counts = [0usize; 4];
    for p in grid() {
        for k in 1..=p.n {
            let Ok(points) = bif_points(k, &p) else { continue };
            let omega = p.omega();
            for b in points.iter().filter(|b| b.provenance == Provenance::ClosedForm) {
                let Some(label) = b.label else { continue };
                let generic = (2..=p.n.saturating_sub(2)).contains(&k);
                let expected = match (p.kind, label) {
                    (ProblemKind::Vortex, PointLabel::NuK) => Some((0, -1)),
                    (ProblemKind::Vortex, PointLabel::Nu0) if p.mu == 0.0 && p.n > 2 => Some((0, -1)),
                    (ProblemKind::Filament, PointLabel::NuPlus) if generic && omega < p.omega_k(k) => {
                        Some((2, omega.signum() as i32))
                    }
                    (ProblemKind::Filament, PointLabel::NuPlus) if generic => Some((1, 1)),
                    (ProblemKind::Filament, PointLabel::NuMinus) if generic => Some((1, -1)),
                    _ => None,
                };
                if let Some((slot, eta)) = expected {
                    ensure(b.eta == eta, || format!("{p:?} k={k} {label:?}: eta {} expected {eta}", b.eta))?;
                    counts[slot] += 1;
                }
            }
        }
    }
    for n in 3..=8 {
        for &g in &[1.0, 3.0] {
            let p = ProblemParams::filament(n, 1.0, g).unwrap();
            if g * g <= p.omega() {
                continue;
            }
            // n=3 sits on the degeneracy mu_1 = 1
            let Ok(points) = bif_points(1, &p) else { continue };
            let etas: Vec<i32> = points.iter().map(|b| b.eta).collect();
            ensure(etas == [-1, -1, 1, 1], || format!("n={n} gamma={g}: {etas:?}"))?;
            counts[3] += 1;
        }
    }
    ensure(counts.iter().all(|&c| c > 0), || format!("empty case: {counts:?}"))?;
    Ok(format!(
        "vortex -1: {}, filament +-1: {}, sgn(omega): {}, mu=1 pattern: {}",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

fn morse_regions() -> Check {
    let ring = [
        ((2.0, 0.0), "0a", 0),
        ((1.0, -10.0), "1a", 1),
        ((5.0, 0.5), "1a", 1),
        ((1.0, 10.0), "2b", 2),
        ((-0.5, 10.0), "1b", 1),
        ((-0.5, -10.0), "2a", 2),
        ((-10.0, 0.0), "2c", 2),
        ((-0.5, 0.0), "1c", 1),
        ((-10.0, -5.0), "1d", 1),
    ];
    let pair = [
        ((1.0, 0.5), "1a", 1),
        ((1.0, 3.0), "2a", 2),
        ((-1.0, 3.0), "2b", 2),
        ((-0.25, 0.1), "1b", 1),
        ((-1.0, 0.1), "3a", 3),
        ((-3.0, 0.5), "2c", 2),
        ((-3.0, 2.4), "1c", 1),
    ];
    for (n, table) in [(5, &ring[..]), (2, &pair[..])] {
        for &((mu, nu), label, morse) in table {
            let r = morse_region_classify(mu, nu, n).map_err(|e| e.to_string())?;
            ensure(r.label == label && r.expected_morse == morse && r.numeric_morse == morse, || {
                format!("n={n} ({mu}, {nu}): {r:?}, expected {label} with index {morse}")
            })?;
        }
    }
    Ok(format!("{} ring samples, {} pair samples", ring.len(), pair.len()))
}

fn determinant_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = 3 + i % 6;
        let mu = loop {
            let m: f64 = rng.gen_range(-3.0..3.0);
            if m.abs() > 0.05 {
                break m;
            }
        };
        let nu: f64 = rng.gen_range(-4.0..4.0);
        // vortex ring, block k = 1
        let p = ProblemParams::vortex(n, mu).unwrap();
        let s1 = p.s1();
        let det = block_m(1, nu, &p).map_err(|e| e.to_string())?.det();
        let want = mu * (nu - (mu + s1)) * (nu * nu - (s1 * s1 - mu));
        let scale = mu.abs() * (nu.abs() + (mu + s1).abs()) * (nu * nu + (s1 * s1 - mu).abs());
        let e = (det - want).abs() / scale;
        worst = worst.max(e);
        ensure(e < 1e-9, || format!("n={n} mu={mu} nu={nu}: {det} vs {want}"))?;
        // n = 2
        let p = ProblemParams::vortex(2, mu).unwrap();
        let det = block_m(1, nu, &p).map_err(|e| e.to_string())?.det();
        let a = (mu + 0.5) * (mu + 0.5);
        let b = 3.0 * (mu + 1.25);
        let want = mu * mu * (nu * nu - a) * (nu * nu + b);
        let scale = mu * mu * (nu * nu + a) * (nu * nu + b.abs());
        let e = (det - want).abs() / scale;
        worst = worst.max(e);
        ensure(e < 1e-9, || format!("n=2 mu={mu} nu={nu}: {det} vs {want}"))?;
    }
    Ok(format!("50 samples, max relative error {worst:.1e}"))
}

fn stability() -> Check {
    let r = stability_window(7, Some(4.0)).map_err(|e| e.to_string())?;
    let lower = r.mu_lower.ok_or("no lower end")?;
    ensure(lower.abs() < 1e-12 && (r.mu_upper - 9.0).abs() < 1e-12, || {
        format!("window ({lower}, {})", r.mu_upper)
    })?;
    let inside = r.check.ok_or("no check")?;
    ensure(inside.max_real_part < 1e-8, || format!("mu=4: max |Re| {:e}", inside.max_real_part))?;
    let outside = stability_window(7, Some(12.0)).map_err(|e| e.to_string())?.check.ok_or("no check")?;
    ensure(outside.max_real_part > 1e-3, || format!("mu=12: max |Re| {:e}", outside.max_real_part))?;
    Ok(format!(
        "window (0, 9), max |Re| {:.1e} at mu=4, {:.3} at mu=12",
        inside.max_real_part, outside.max_real_part
    ))
}

fn branch(n: usize, mu: f64, k: usize, nu0: f64) -> Check {
    let p = ProblemParams::vortex(n, mu).unwrap();
    let pt = bif_points(k, &p)
        .map_err(|e| e.to_string())?
        .into_iter()
        .find(|b| (b.nu0 - nu0).abs() < 1e-12)
        .ok_or_else(|| format!("no point at {nu0}"))?;
    let amp = 1e-3;
    let guess = predictor(k, &pt, amp, &p, 16).map_err(|e| e.to_string())?;
    let c = Constraints::new(&guess, &p, AmplitudePin::Amplitude(amp), SymmetryReduction::Reduced { k });
    let start = newton_correct(&guess, &p, &c, &NewtonOptions::default()).map_err(|e| e.to_string())?;
    let shift = (start.orbit.nu - nu0).abs();
    ensure(shift < 1e-4, || format!("nu shift {shift:e}"))?;
    let mut opts = ContinuationOptions::new(k);
    opts.ds = 2e-3;
    let br = continue_branch(&start, 20, &p, &opts).map_err(|e| e.to_string())?;
    let recs = br.records();
    let res = recs.iter().map(|r| r.residual_norm).fold(0.0, f64::max);
    let sym = recs.iter().map(|r| r.symmetry_residual).fold(0.0, f64::max);
    ensure(recs.len() > 1, || format!("branch stopped at once: {} {:?}", br.termination, br.failure))?;
    ensure(res < 1e-10, || format!("residual {res:e}"))?;
    ensure(sym < 1e-8, || format!("symmetry residual {sym:e}"))?;
    // central element: at the origin when gcd(k, n) > 1, otherwise u0(t) = R(k' zeta) u0(t + zeta)
    let zeta = 2.0 * PI / n as f64;
    let mut central = 0.0f64;
    let mut size = 0.0f64;
    for s in &br.states {
        for i in 0..64 {
            let t = 2.0 * PI * i as f64 / 64.0;
            let x = s.orbit.eval(t);
            size = size.max(x[0].hypot(x[1]));
            if gcd(k, n) > 1 {
                central = central.max(x[0].hypot(x[1]));
            } else {
                let kp = (1..n).find(|q| (q * k) % n == 1).unwrap();
                let y = s.orbit.eval(t + zeta);
                let (sn, cs) = (kp as f64 * zeta).sin_cos();
                let rx = cs * y[0] - sn * y[1];
                let ry = sn * y[0] + cs * y[1];
                central = central.max((rx - x[0]).hypot(ry - x[1]));
            }
        }
    }
    ensure(central < 1e-9, || format!("central-element defect {central:e}"))?;
    let last = br.last();
    Ok(format!(
        "nu shift {shift:.1e}, {} states to amplitude {:.3} ({}), residual {res:.1e}, symmetry {sym:.1e}, \
         central defect {central:.1e} (max |u0| {size:.1e})",
        recs.len(),
        last.amplitude,
        br.termination
    ))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn branches_n4() -> Check {
    branch(4, 0.0, 2, 2f64.sqrt())
}

fn branches_n5() -> Check {
    branch(5, 1.0, 2, 3.0)
}

fn conservation() -> Check {
    let p = ProblemParams::vortex(7, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut u = ring_equilibrium(&p).to_flat();
    for x in u.iter_mut() {
        *x += 1e-3 * rng.gen_range(-1.0..1.0);
    }
    let tr = integrate_vortex(&Configuration::from_flat(&u), &p, &IntegratorConfig::dp54(1e-10, 200.0))
        .map_err(|e| e.to_string())?;
    ensure(!tr.collided() && tr.final_time() == 200.0, || "run stopped early".into())?;
    let dv = tr.drift.get("potential").ok_or("no potential")?.max_drift;
    let di = tr.drift.get("angular_impulse").ok_or("no impulse")?.max_drift;
    ensure(dv < 1e-8 && di < 1e-8, || format!("drift V {dv:e}, impulse {di:e}"))?;
    Ok(format!("drift V {dv:.1e}, sum kappa |u|^2 {di:.1e}"))
}

fn n2_filament() -> Check {
    let mut found = Vec::new();
    for &mu in &[-1.0, 0.5, 1.0] {
        for &g in &[0.0, 1.0] {
            let p = ProblemParams::filament(2, mu, g).unwrap();
            let det0 = block_m(1, 0.0, &p).map_err(|e| e.to_string())?.det();
            ensure(det0 < 0.0, || format!("mu={mu}: det m_1(0) = {det0}"))?;
            let (lo, hi) = default_scan_window(1, &p).map_err(|e| e.to_string())?;
            let pts = scan_bif_points(1, &p, lo, hi, DEFAULT_GRID).map_err(|e| e.to_string())?.points;
            ensure(!pts.is_empty() && pts.iter().all(|b| b.eta != 0), || {
                format!("mu={mu} gamma={g}: {pts:?}")
            })?;
            found.push(pts.len());
        }
    }
    Ok(format!("points per case {found:?}"))
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Option<f64>,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "block diagonalization", budget: Some(1.0), run: block_diagonalization },
        Criterion { id: 2, name: "gradient and Hessian oracles", budget: None, run: oracles },
        Criterion { id: 3, name: "closed form vs scan", budget: Some(30.0), run: closed_form_vs_scan },
        Criterion { id: 4, name: "sign tables", budget: None, run: sign_tables },
        Criterion { id: 5, name: "Morse region tables", budget: None, run: morse_regions },
        Criterion { id: 6, name: "determinant identities", budget: None, run: determinant_identities },
        Criterion { id: 7, name: "stability window", budget: Some(5.0), run: stability },
        Criterion { id: 8, name: "branch n=4 mu=0 k=2", budget: Some(60.0), run: branches_n4 },
        Criterion { id: 8, name: "branch n=5 mu=1 k=2", budget: Some(60.0), run: branches_n5 },
        Criterion { id: 9, name: "conservation", budget: None, run: conservation },
        Criterion { id: 10, name: "n=2 filament sign", budget: None, run: n2_filament },
    ];
    let mut failed = 0;
    for c in &criteria {
        let t0 = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        let out = match (out, c.budget) {
            (Ok(msg), Some(b)) if secs > b => Err(format!("{msg}; took {secs:.2} s, budget {b} s")),
            (o, _) => o,
        };
        match out {
            Ok(msg) => println!("PASS {:>2} {}: {msg} [{secs:.2} s]", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {}: {msg} [{secs:.2} s]", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
