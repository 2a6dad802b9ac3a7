use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::json;
use spectra4::asymptotics::{match_spectrum, AsymGrid, Family};
use spectra4::basis::{eigenfunction, eigenfunction_csv, null_direction};
use spectra4::charfn::char_fn_at;
use spectra4::oracle::{augmentation_residuals, discretize, eigenvector, matrix_csv, solve_discrete};
use spectra4::problem::{axis_lambda, ProblemConfig};
use spectra4::spectrum::{find_eigenvalues, EigRecord, Method, ScanConfig};
use spectra4::verify::{run_verify, VerifyOptions};
use spectra4::{parse_config, Problem, C64};

use crate::manifest::{csv_header, RunManifest};
use crate::{AsymArgs, CharfunArgs, FamilyArg, OracleArgs, Outcome, SolveArgs, UsageError, VerifyArgs};

const EIGENFUNCTION_SAMPLES: usize = 201;

fn load(path: &Path, manifest: &mut RunManifest) -> Result<Problem> {
    let text =
        std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let problem = parse_config(&text).with_context(|| format!("config {}", path.display()))?;
    manifest.config_path = Some(path.display().to_string());
    manifest.problem = Some(problem.to_config());
    Ok(problem)
}

/// Writes `text` to `out`, or to standard output.
fn emit(out: Option<&Path>, text: &str, manifest: &mut RunManifest) -> Result<()> {
    match out {
        Some(p) => {
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            manifest.outputs.push(p.display().to_string());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn finish(out: Option<&Path>, manifest: &mut RunManifest) -> Result<()> {
    if let Some(p) = out {
        manifest.write(p)?;
    }
    Ok(())
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn summary_csv(records: &[EigRecord], header: &str) -> String {
    let mut s = String::from(header);
    s.push_str("n,lambda_re,lambda_im,s_re,s_im,residual,asym_family,asym_error\n");
    for r in records {
        let (fam, err) = match &r.asym {
            Some(m) => (m.family.tag().to_string(), m.rel_error.to_string()),
            None => (String::new(), String::new()),
        };
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n, r.lambda.re, r.lambda.im, r.s.re, r.s.im, r.residual, fam, err
        ));
    }
    s
}

pub fn solve(a: SolveArgs, jobs: usize) -> Result<Outcome> {
    let mut manifest = RunManifest::new("solve", jobs);
    let problem = load(&a.common.config, &mut manifest)?;
    let cfg = ScanConfig {
        s_min: a.s_min,
        s_max: a.s_max,
        neg_t_max: a.neg_t_max,
        samples_per_half_wave: a.samples_per_half_wave,
        refine_tol: a.refine_tol,
        cluster_tol: a.cluster_tol,
        accuracy: a.common.accuracy,
        x_eval: a.x_eval,
        magnitude_ratio: ScanConfig::default().magnitude_ratio,
    };
    manifest.tolerances = serde_json::to_value(cfg)?;
    if a.eigenfunctions > 0 && a.common.out.is_none() {
        return Err(UsageError("--eigenfunctions needs --out".into()).into());
    }

    manifest.begin("scan");
    let records = find_eigenvalues(&problem, &cfg)?;
    manifest.begin("match");
    let grids = AsymGrid::covering(&problem, cfg.s_max);
    let records = match_spectrum(&records, &grids, (5, 15)).records;
    manifest.begin("write");

    let out = a.common.out.as_deref();
    emit(out, &pretty(&records)?, &mut manifest)?;
    if let Some(p) = out {
        let csv = sibling(p, ".csv");
        emit(Some(&csv), &summary_csv(&records, &csv_header(Some(p))), &mut manifest)?;
        let xs: Vec<f64> = (0..EIGENFUNCTION_SAMPLES)
            .map(|i| -1.0 + 2.0 * i as f64 / (EIGENFUNCTION_SAMPLES - 1) as f64)
            .collect();
        for r in records.iter().take(a.eigenfunctions) {
            let (k3, k4) = null_direction(&problem, r.lambda, cfg.accuracy)?;
            let ef = eigenfunction(&problem, r.lambda, k3, k4, &xs, cfg.accuracy)?;
            let text = csv_header(Some(p)) + &eigenfunction_csv(&ef.samples);
            emit(Some(&sibling(p, &format!(".eigfn{}.csv", r.n))), &text, &mut manifest)?;
        }
    }
    finish(out, &mut manifest)?;
    Ok(Outcome::Success)
}

/// `start:stop:step`, stop included when it falls on the grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, UsageError> {
    let bad = || UsageError(format!("--s-grid {spec:?} is not start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

pub fn charfun(a: CharfunArgs, jobs: usize) -> Result<Outcome> {
    let mut manifest = RunManifest::new("charfun", jobs);
    let problem = load(&a.common.config, &mut manifest)?;
    let grid = parse_grid(&a.s_grid)?;
    manifest.tolerances = json!({"accuracy": a.common.accuracy, "x_eval": a.x_eval, "s_grid": a.s_grid});
    manifest.begin("evaluate");
    let rows: Vec<String> = grid
        .par_iter()
        .map(|&s| {
            let lambda = C64::new(axis_lambda(s), 0.0);
            let w = char_fn_at(&problem, lambda, a.x_eval, a.common.accuracy)?;
            Ok(format!(
                "{},{},{},{},{},{},{}\n",
                w.lambda.re, w.lambda.im, w.s.re, w.s.im, w.w_scaled.re, w.w_scaled.im, w.log_scale
            ))
        })
        .collect::<Result<_, spectra4::Error>>()?;
    manifest.begin("write");
    let out = a.common.out.as_deref();
    let mut text = csv_header(out);
    text.push_str("lambda_re,lambda_im,s_re,s_im,w_scaled_re,w_scaled_im,log_scale\n");
    text.extend(rows);
    emit(out, &text, &mut manifest)?;
    finish(out, &mut manifest)?;
    Ok(Outcome::Success)
}

pub fn asym(a: AsymArgs, jobs: usize) -> Result<Outcome> {
    let mut manifest = RunManifest::new("asym", jobs);
    let problem = load(&a.config, &mut manifest)?;
    if a.n_max == 0 {
        return Err(UsageError("--n-max must be >= 1".into()).into());
    }
    let families: Vec<Family> = match a.family {
        FamilyArg::Prime => vec![Family::Prime],
        FamilyArg::DoublePrime => vec![Family::DoublePrime],
        FamilyArg::Both => vec![Family::Prime, Family::DoublePrime],
    };
    let grids: Vec<AsymGrid> = families.iter().map(|&f| AsymGrid::new(&problem, f, a.n_max)).collect();
    manifest.tolerances = json!({"n_max": a.n_max});
    let out = a.out.as_deref();
    let mut text = csv_header(out);
    text.push_str("n,family,s_pred,lambda_pred\n");
    for g in &grids {
        for (i, s) in g.entries.iter().enumerate() {
            text.push_str(&format!("{},{},{},{}\n", i + 1, g.family.tag(), s, s.powi(4)));
        }
    }
    emit(out, &text, &mut manifest)?;
    if let (Some(spec), Some(p)) = (a.match_spectrum.as_deref(), out) {
        let raw = std::fs::read_to_string(spec)
            .map_err(|e| UsageError(format!("cannot read spectrum {}: {e}", spec.display())))?;
        let records: Vec<EigRecord> = serde_json::from_str(&raw)
            .map_err(|e| UsageError(format!("spectrum {} is not an EigRecord list: {e}", spec.display())))?;
        let report = match_spectrum(&records, &grids, (5, 15));
        emit(Some(&sibling(p, ".matched.json")), &pretty(&report)?, &mut manifest)?;
    }
    finish(out, &mut manifest)?;
    Ok(Outcome::Success)
}

pub fn oracle(a: OracleArgs, jobs: usize) -> Result<Outcome> {
    let mut manifest = RunManifest::new("oracle", jobs);
    let problem = load(&a.config, &mut manifest)?;
    manifest.tolerances = json!({"n": a.n, "k": a.k});
    manifest.begin("assemble");
    let op = discretize(&problem, a.n)?;
    manifest.begin("eigen");
    let values = solve_discrete(&op, a.k)?;
    let mut records: Vec<EigRecord> = values
        .par_iter()
        .map(|&l| {
            let v = eigenvector(&op, l)?;
            let res = augmentation_residuals(&op, l, &v).into_iter().fold(0.0, f64::max);
            Ok(EigRecord::new(l, res, 0.0, Method::Oracle))
        })
        .collect::<Result<_, spectra4::Error>>()?;
    for (i, r) in records.iter_mut().enumerate() {
        r.n = i;
    }
    manifest.begin("write");
    let out = a.out.as_deref();
    emit(out, &pretty(&records)?, &mut manifest)?;
    if let Some(prefix) = &a.dump_matrix {
        let header = csv_header(out);
        for (tag, m) in [("A", &op.a), ("B", &op.b)] {
            let mut name = prefix.as_os_str().to_owned();
            name.push(format!(".{tag}.csv"));
            emit(
                Some(Path::new(&name)),
                &(header.clone() + &matrix_csv(m)),
                &mut manifest,
            )?;
        }
    }
    finish(out, &mut manifest)?;
    Ok(Outcome::Success)
}

pub fn verify(a: VerifyArgs, jobs: usize) -> Result<Outcome> {
    let mut manifest = RunManifest::new("verify", jobs);
    let problem = load(&a.common.config, &mut manifest)?;
    let opts = VerifyOptions {
        accuracy: a.common.accuracy,
        oracle_n: a.oracle_n,
        s_max: a.s_max,
        volterra: a.volterra,
        ..VerifyOptions::default()
    };
    manifest.tolerances = serde_json::to_value(opts)?;
    manifest.begin("checks");
    let report = run_verify(&problem, &opts)?;
    manifest.begin("write");
    for c in &report.checks {
        eprintln!(
            "{} {} measured={:e} threshold={:e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.threshold
        );
    }
    let out = a.common.out.as_deref();
    emit(out, &pretty(&report)?, &mut manifest)?;
    finish(out, &mut manifest)?;
    Ok(if report.passed() {
        Outcome::Success
    } else {
        Outcome::VerificationFailed
    })
}

/// Echo of the reference configuration, for documentation and tests.
#[allow(dead_code)]
pub fn reference_config() -> ProblemConfig {
    Problem::reference().to_config()
}
