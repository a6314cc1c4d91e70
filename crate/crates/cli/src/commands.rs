use std::path::{Path, PathBuf};

use rayon::prelude::*;
use ringbif::continuation::{
    continue_branch, newton_correct, predictor, AmplitudePin, Constraints, ContinuationOptions,
    NewtonOptions, SymmetryReduction,
};
use ringbif::dynamics::{integrate_filament_tw, integrate_vortex, IntegratorConfig};
use ringbif::model::{grad_potential, hess_potential, ring_equilibrium};
use ringbif::spectral::{
    bif_points, block_m, default_scan_window, morse_index, scan_bif_points, stability_window,
    BifurcationPoint, PointLabel, DEFAULT_GRID,
};
use ringbif::symmetry::{analytic_bk, decompose_hessian, irrep_basis};
use ringbif::{Configuration, Error, ProblemKind, ProblemParams, C64};
use serde::Serialize;

use crate::output::{complex, io_err, num, write_json, write_text};
use crate::{Failure, Problem};

fn check_k(k: usize, n: usize) -> Result<(), Failure> {
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { k, n }.into());
    }
    Ok(())
}

#[derive(Serialize)]
struct EquilibriumReport {
    n: usize,
    mu: f64,
    s1: f64,
    omega: f64,
    grad_norm: f64,
    kernel_dim: usize,
    positions: Vec<[f64; 2]>,
}

pub fn equilibrium(p: &Problem) -> Result<(), Failure> {
    let params = p.params()?;
    let ring = ring_equilibrium(&params);
    let grad_norm = grad_potential(&ring, &params)?.norm();
    let h = hess_potential(&ring, &params)?;
    let scale = h.norm().max(1.0);
    let ev = h.symmetric_eigen().eigenvalues;
    let kernel_dim = ev.iter().filter(|l| l.abs() < 1e-8 * scale).count();
    let report = EquilibriumReport {
        n: params.n,
        mu: params.mu,
        s1: params.s1(),
        omega: params.omega(),
        grad_norm,
        kernel_dim,
        positions: ring.positions.clone(),
    };
    println!("n = {}, mu = {}", report.n, num(report.mu));
    println!("s1 = {}, omega = {}", num(report.s1), num(report.omega));
    for (j, q) in ring.positions.iter().enumerate() {
        println!("  u{j} = ({}, {})", num(q[0]), num(q[1]));
    }
    println!("|grad V(a)| = {}", num(grad_norm));
    println!("Hessian kernel dimension = {kernel_dim}");
    if let Some(path) = &p.json {
        write_json(path, &report)?;
    }
    if grad_norm >= 1e-10 {
        return Err(Failure::Analysis(format!("ring is not critical: |grad V| = {grad_norm:e}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct BlockRow {
    k: usize,
    analytic: Vec<Vec<[f64; 2]>>,
    numeric: Vec<Vec<[f64; 2]>>,
    deviation: f64,
    /// `|B_{n-k} - conj(B_k)|`, absent for self-conjugate indices.
    conjugate_deviation: Option<f64>,
}

fn matrix_rows(m: &nalgebra::DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn max_abs(m: &nalgebra::DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn blocks(p: &Problem) -> Result<(), Failure> {
    let params = p.params()?;
    let n = params.n;
    let h = hess_potential(&ring_equilibrium(&params), &params)?;
    let dec = decompose_hessian(&h, n)?;
    let mut rows = Vec::new();
    let mut worst = dec.residual;
    println!("off-block residual = {}", num(dec.residual));
    for k in 1..=n {
        let a = analytic_bk(&params, k)?;
        let b = dec.block(k);
        let deviation = max_abs(&(&a - b));
        let partner = n - k;
        let conjugate_deviation = (partner != 0 && partner != k && partner != n)
            .then(|| max_abs(&(dec.block(partner) - b.map(|z| z.conj()))));
        worst = worst.max(deviation).max(conjugate_deviation.unwrap_or(0.0));
        println!("B_{k}:");
        for i in 0..a.nrows() {
            let left: Vec<String> = a.row(i).iter().map(|&z| format!("{:>26}", complex(z))).collect();
            let right: Vec<String> = b.row(i).iter().map(|&z| format!("{:>26}", complex(z))).collect();
            println!("  {}  |  {}", left.join(" "), right.join(" "));
        }
        print!("  deviation = {}", num(deviation));
        if let Some(c) = conjugate_deviation {
            print!(", B_{partner} = conj(B_{k}): {}", if c < 1e-8 { "OK" } else { "MISMATCH" });
        }
        println!();
        rows.push(BlockRow { k, analytic: matrix_rows(&a), numeric: matrix_rows(b), deviation, conjugate_deviation });
    }
    if let Some(path) = &p.json {
        write_json(path, &rows)?;
    }
    if worst > 1e-8 {
        return Err(Failure::Analysis(format!("block deviation {worst:e} exceeds 1e-8")));
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumRow {
    k: usize,
    nu: f64,
    morse: usize,
    eigenvalues: Vec<f64>,
}

pub fn spectrum(
    p: &Problem,
    k: Option<usize>,
    nu_max: Option<f64>,
    grid: usize,
    csv: Option<PathBuf>,
) -> Result<(), Failure> {
    let params = p.params()?;
    if grid < 2 {
        return Err(Failure::Usage("--grid needs at least 2 points".into()));
    }
    let ks: Vec<usize> = match k {
        Some(k) => {
            check_k(k, params.n)?;
            vec![k]
        }
        None => (1..=params.n).collect(),
    };
    let mut rows = Vec::new();
    for &k in &ks {
        let hi = match nu_max {
            Some(v) if v > 0.0 => v,
            Some(v) => return Err(Failure::Usage(format!("--nu-max must be positive, got {v}"))),
            None => default_scan_window(k, &params)?.1,
        };
        let block: Vec<SpectrumRow> = (0..grid)
            .into_par_iter()
            .map(|i| {
                let nu = hi * i as f64 / (grid - 1) as f64;
                let m = block_m(k, nu, &params)?;
                Ok(SpectrumRow { k, nu, morse: morse_index(&m).negative, eigenvalues: m.eigenvalues() })
            })
            .collect::<Result<_, Error>>()?;
        println!("k = {k}: Morse index on [0, {}]", num(hi));
        let mut start = 0;
        for i in 1..=block.len() {
            if i == block.len() || block[i].morse != block[start].morse {
                println!("  [{}, {}]  n_k = {}", num(block[start].nu), num(block[i - 1].nu), block[start].morse);
                start = i;
            }
        }
        rows.extend(block);
    }
    if let Some(path) = &csv {
        let width = rows.iter().map(|r| r.eigenvalues.len()).max().unwrap_or(0);
        let mut text = String::from("k,nu,morse");
        for i in 0..width {
            text.push_str(&format!(",eig{i}"));
        }
        text.push('\n');
        for r in &rows {
            text.push_str(&format!("{},{:.17e},{}", r.k, r.nu, r.morse));
            for i in 0..width {
                match r.eigenvalues.get(i) {
                    Some(v) => text.push_str(&format!(",{v:.17e}")),
                    None => text.push(','),
                }
            }
            text.push('\n');
        }
        write_text(path, &text)?;
        let script = gnuplot_script(path, &ks, width);
        write_text(&path.with_extension("gp"), &script)?;
    }
    if let Some(path) = &p.json {
        write_json(path, &rows)?;
    }
    Ok(())
}

fn gnuplot_script(csv: &Path, ks: &[usize], width: usize) -> String {
    let name = csv.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut s = format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'nu'\nset ylabel 'eigenvalues of m_k(nu)'\nset yzeroaxis\n"
    );
    let mut plots = Vec::new();
    for &k in ks {
        for i in 0..width {
            plots.push(format!(
                "'{name}' using ($1=={k} ? $2 : 1/0):{} with lines title 'k={k} eig{i}'",
                i + 4
            ));
        }
    }
    s.push_str(&format!("plot {}\npause -1\n", plots.join(", \\\n     ")));
    s
}

fn sort_points(points: &mut [BifurcationPoint]) {
    points.sort_by(|a, b| a.k.cmp(&b.k).then(a.nu0.total_cmp(&b.nu0)));
}

pub fn bifurcations(
    p: &Problem,
    k: Option<usize>,
    nu_max: Option<f64>,
    grid: Option<usize>,
    csv: Option<PathBuf>,
) -> Result<(), Failure> {
    let params = p.params()?;
    let ks: Vec<usize> = match k {
        Some(k) => {
            check_k(k, params.n)?;
            vec![k]
        }
        None => (1..=params.n).collect(),
    };
    let scan = nu_max.is_some() || grid.is_some();
    if let Some(g) = grid {
        if g == 0 {
            return Err(Failure::Usage("--grid must be positive".into()));
        }
    }
    let results: Vec<(usize, Result<Vec<BifurcationPoint>, Error>)> = ks
        .par_iter()
        .map(|&k| {
            let r = if scan {
                default_scan_window(k, &params).and_then(|(lo, hi)| {
                    let hi = nu_max.unwrap_or(hi);
                    scan_bif_points(k, &params, lo, hi, grid.unwrap_or(DEFAULT_GRID)).map(|s| s.points)
                })
            } else {
                bif_points(k, &params)
            };
            (k, r)
        })
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results {
        match r {
            Ok(v) => points.extend(v),
            Err(e @ (Error::InvalidParameter(_) | Error::UnsupportedParameter(_))) => return Err(e.into()),
            Err(e) => failures.push(format!("k = {k}: {e}")),
        }
    }
    sort_points(&mut points);
    println!("{:>3} {:>16} {:>4} {:>9} {:>12} {:>12} {:>14}", "k", "nu", "eta", "symmetry", "label", "provenance", "det_residual");
    for b in &points {
        println!(
            "{:>3} {:>16} {:>4} {:>9} {:>12} {:>12} {:>14}",
            b.k,
            num(b.nu0),
            b.eta,
            b.symmetry.to_string(),
            b.label.map_or("-", |l| l.as_str()),
            format!("{:?}", b.provenance).to_lowercase(),
            num(b.det_residual)
        );
    }
    for f in &failures {
        println!("degenerate: {f}");
    }
    if let Some(path) = &csv {
        let mut text = String::from("k,nu,eta,symmetry,provenance,det_residual,label\n");
        for b in &points {
            text.push_str(&format!(
                "{},{:.17e},{},{},{},{:.17e},{}\n",
                b.k,
                b.nu0,
                b.eta,
                b.symmetry,
                format!("{:?}", b.provenance).to_lowercase(),
                b.det_residual,
                b.label.map_or("", |l| l.as_str())
            ));
        }
        write_text(path, &text)?;
    }
    if let Some(path) = &p.json {
        #[derive(Serialize)]
        struct Out<'a> {
            params: &'a ProblemParams,
            points: &'a [BifurcationPoint],
            degenerate: &'a [String],
        }
        write_json(path, &Out { params: &params, points: &points, degenerate: &failures })?;
    }
    if !failures.is_empty() {
        return Err(Failure::Analysis(failures.join("; ")));
    }
    Ok(())
}

pub fn stability(n: usize, check_mu: Option<f64>, json: Option<PathBuf>) -> Result<(), Failure> {
    let r = stability_window(n, check_mu)?;
    let lower = r.mu_lower.map_or("-inf".to_string(), num);
    println!("stability window for n = {n}: ({lower}, {})", num(r.mu_upper));
    if let Some(c) = &r.check {
        println!(
            "mu = {}: inside window {}, real roots {} (expected {}), max |Re lambda| = {}, spectral_ok {}",
            num(c.mu),
            c.inside_window,
            c.real_roots,
            c.expected_real_roots,
            num(c.max_real_part),
            c.spectral_ok
        );
    }
    if let Some(path) = &json {
        write_json(path, &r)?;
    }
    if let Some(c) = &r.check {
        if c.spectral_ok != c.inside_window {
            return Err(Failure::Analysis(format!(
                "numeric verdict {} disagrees with the window at mu = {}",
                c.spectral_ok, c.mu
            )));
        }
    }
    Ok(())
}

fn select_point(params: &ProblemParams, k: usize, point: Option<&str>) -> Result<BifurcationPoint, Failure> {
    match point {
        Some(s) if s.starts_with("scan:") => {
            let idx: usize = s[5..].parse().map_err(|_| Failure::Usage(format!("bad point index in {s}")))?;
            let (lo, hi) = default_scan_window(k, params)?;
            let pts = scan_bif_points(k, params, lo, hi, DEFAULT_GRID)?.points;
            let n = pts.len();
            pts.into_iter()
                .nth(idx)
                .ok_or_else(|| Failure::Usage(format!("scan found {n} points, index {idx} out of range")))
        }
        Some(s) => {
            let label = PointLabel::parse(s).ok_or_else(|| Failure::Usage(format!("unknown point label {s}")))?;
            bif_points(k, params)?
                .into_iter()
                .find(|b| b.label == Some(label))
                .ok_or_else(|| Failure::Usage(format!("block {k} has no point labelled {s}")))
        }
        None => bif_points(k, params)?
            .into_iter()
            .find(|b| b.eta != 0)
            .ok_or_else(|| Failure::Analysis(format!("block {k} has no bifurcation point"))),
    }
}

pub fn branch(
    p: &Problem,
    k: usize,
    point: Option<&str>,
    amplitude: f64,
    steps: usize,
    csv: Option<PathBuf>,
) -> Result<(), Failure> {
    let params = p.params()?;
    check_k(k, params.n)?;
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Failure::Usage(format!("amplitude must be positive, got {amplitude}")));
    }
    let pt = select_point(&params, k, point)?;
    println!(
        "start: k = {k}, nu0 = {}, eta = {}, {}{}",
        num(pt.nu0),
        pt.eta,
        pt.symmetry,
        pt.label.map_or(String::new(), |l| format!(" ({})", l.as_str()))
    );
    let guess = predictor(k, &pt, amplitude, &params, ringbif::continuation::DEFAULT_MODES)?;
    let c = Constraints::new(&guess, &params, AmplitudePin::Amplitude(amplitude), SymmetryReduction::Reduced { k });
    let start = newton_correct(&guess, &params, &c, &NewtonOptions::default())
        .map_err(|e| Failure::Analysis(format!("initial correction failed: {e}")))?;
    let br = continue_branch(&start, steps, &params, &ContinuationOptions::new(k))?;
    println!("{:>5} {:>16} {:>16} {:>16} {:>16}", "step", "nu", "amplitude", "residual", "symmetry");
    let records = br.records();
    for (i, r) in records.iter().enumerate() {
        println!(
            "{i:>5} {:>16} {:>16} {:>16} {:>16}",
            num(r.nu),
            num(r.amplitude),
            num(r.residual_norm),
            num(r.symmetry_residual)
        );
    }
    println!("termination: {}", br.termination);
    if let Some(f) = &br.failure {
        println!("failure: {f}");
    }
    let json = p.json.clone().unwrap_or_else(|| PathBuf::from("branch.json"));
    br.write_json(&json).map_err(io_err(&json))?;
    let samples = csv.unwrap_or_else(|| PathBuf::from("branch_loop.csv"));
    let last = &br.last().orbit;
    last.write_samples_csv(&samples, 200).map_err(io_err(&samples))?;
    let stem = samples.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let modes = samples.with_file_name(format!("{stem}_modes.csv"));
    last.write_modes_csv(&modes).map_err(io_err(&modes))?;
    println!("wrote {}, {}, {}", json.display(), samples.display(), modes.display());
    Ok(())
}

fn perturbation(params: &ProblemParams, k: Option<usize>, size: f64) -> Result<Vec<f64>, Failure> {
    let d = params.dim();
    let dir: Vec<f64> = match k {
        Some(k) => {
            check_k(k, params.n)?;
            let basis = irrep_basis(params.n, k)?;
            let col = basis.columns.column(0);
            col.iter().map(|z| z.re + z.im).collect()
        }
        None => (0..d).map(|i| (1.3 * i as f64 + 0.7).sin()).collect(),
    };
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(dir.iter().map(|x| size * x / norm).collect())
}

pub fn simulate(
    p: &Problem,
    k: Option<usize>,
    perturb: f64,
    t_end: f64,
    tol: f64,
    csv: Option<PathBuf>,
) -> Result<(), Failure> {
    let params = p.params()?;
    let mut u = ring_equilibrium(&params).to_flat();
    for (x, dx) in u.iter_mut().zip(perturbation(&params, k, perturb)?) {
        *x += dx;
    }
    let cfg0 = Configuration::from_flat(&u);
    let icfg = IntegratorConfig::dp54(tol, t_end);
    let tr = match params.kind {
        ProblemKind::Vortex => integrate_vortex(&cfg0, &params, &icfg)?,
        ProblemKind::Filament => {
            let vel0 = vec![[0.0, 0.0]; params.n + 1];
            integrate_filament_tw(&cfg0, &vel0, &params, &icfg)?
        }
    };
    println!(
        "t = {} after {} accepted and {} rejected steps",
        num(tr.final_time()),
        tr.accepted_steps,
        tr.rejected_steps
    );
    for q in &tr.drift.quantities {
        println!(
            "  {:<16} initial {:>16}  max drift {:>16}{}",
            q.name,
            num(q.initial),
            num(q.max_drift),
            if q.conserved { "" } else { "  (monitored)" }
        );
    }
    let path = csv.unwrap_or_else(|| PathBuf::from("trajectory.csv"));
    tr.write_csv(&path).map_err(io_err(&path))?;
    let drift = p.json.clone().unwrap_or_else(|| PathBuf::from("drift.json"));
    tr.write_drift_json(&drift).map_err(io_err(&drift))?;
    println!("wrote {}, {}", path.display(), drift.display());
    if let Some(c) = &tr.collision {
        return Err(Failure::Analysis(format!(
            "collision of elements {} and {} at t = {} (distance {:e})",
            c.i, c.j, c.t, c.distance
        )));
    }
    if tr.truncated {
        return Err(Failure::Analysis(format!("integration stopped early at t = {}", tr.final_time())));
    }
    Ok(())
}
