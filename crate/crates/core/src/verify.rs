//! Cross-module consistency checks with pass/fail verdicts.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{counting_deviation, growth_ratio, match_spectrum, AsymGrid, GrowthCheck};
use crate::basis::{eigenfunction, null_direction, Direction, TransmissionMap};
use crate::charfn::{system_check, wronskian_left, wronskian_right, wronskian_spread, WronskianMethod};
use crate::error::Result;
use crate::expr::PotentialExpr;
use crate::ode::C64;
use crate::oracle::{discretize, solve_discrete};
use crate::problem::Problem;
use crate::spectrum::{count_complex, find_eigenvalues, verify_bounded_below, EigRecord, Rect, ScanConfig};
use crate::volterra::{cross_check, picard_solve, ConventionReport, CrossCheck, VolterraSpec, Which};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: Value,
}

impl CheckResult {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64, detail: Value) -> Self {
        Self {
            name: name.to_string(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolterraDiagnostic {
    pub s: f64,
    pub q: String,
    pub grid_n: usize,
    pub checks: Vec<CrossCheck>,
    /// Largest `|u - F|` of the zero-potential fixed point, relative to `sup |F|`.
    pub zero_potential_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub volterra: Option<VolterraDiagnostic>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub accuracy: f64,
    pub oracle_n: usize,
    pub compare_k: usize,
    pub s_max: f64,
    pub grid_n: usize,
    pub volterra: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            accuracy: 1e-10,
            oracle_n: 400,
            compare_k: 5,
            s_max: 50.0,
            grid_n: 1024,
            volterra: false,
        }
    }
}

/// Deterministic, well-spread points in the disc `|lambda| <= radius`.
pub fn sample_lambdas(count: usize, radius: f64) -> Vec<C64> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    (0..count)
        .map(|k| {
            let r = radius * ((k as f64 + 0.5) / count as f64).sqrt();
            C64::from_polar(r, 2.0 * PI * ((k as f64 * golden).fract() + 0.05))
        })
        .collect()
}

const X_SPREAD: [f64; 6] = [-0.9, -0.5, -0.1, 0.1, 0.5, 0.9];

fn structural_checks(problem: &Problem, opts: &VerifyOptions, out: &mut Vec<CheckResult>) -> Result<()> {
    let lambdas = sample_lambdas(20, 100.0);
    let mut w12 = 0.0f64;
    let mut spread = 0.0f64;
    let mut det_t = 0.0f64;
    for &l in &lambdas {
        let wl = wronskian_left(problem, l, -0.5, opts.accuracy, WronskianMethod::Exterior)?;
        let wr = wronskian_right(problem, l, 0.5, opts.accuracy, WronskianMethod::Exterior)?;
        w12 = w12.max(wl.relative_difference(&wr));
        spread = spread.max(wronskian_spread(
            problem,
            l,
            &X_SPREAD,
            opts.accuracy,
            WronskianMethod::Exterior,
        )?);
        let d = TransmissionMap::new(problem, l, Direction::Forward).determinant();
        det_t = det_t.max((d - 1.0).norm());
    }
    out.push(CheckResult::at_most(
        "w1_equals_w2",
        w12,
        1e-8,
        json!({"samples": lambdas.len()}),
    ));
    out.push(CheckResult::at_most(
        "x_independence",
        spread,
        1e-6,
        json!({"x": X_SPREAD}),
    ));
    out.push(CheckResult::at_most(
        "transmission_determinant",
        det_t,
        1e-14,
        json!({}),
    ));

    let mut worst = 0.0f64;
    let mut ratios = Vec::new();
    for l in [C64::new(3.0, 1.0), C64::new(-20.0, 5.0), C64::new(50.0, -10.0)] {
        let c = system_check(problem, l, opts.accuracy)?;
        worst = worst.max((c.ratio + 1.0).norm());
        ratios.push(json!({"lambda": [l.re, l.im], "det_over_w3": [c.ratio.re, c.ratio.im]}));
    }
    out.push(CheckResult::at_most(
        "system_determinant_is_minus_w_cubed",
        worst,
        1e-6,
        json!({"ratios": ratios}),
    ));
    Ok(())
}

fn eigen_checks(
    problem: &Problem,
    records: &[EigRecord],
    opts: &VerifyOptions,
    out: &mut Vec<CheckResult>,
) -> Result<()> {
    let xs: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
    let mut worst = 0.0f64;
    for r in records.iter().take(6) {
        let (k3, k4) = null_direction(problem, r.lambda, opts.accuracy)?;
        let ef = eigenfunction(problem, r.lambda, k3, k4, &xs, opts.accuracy)?;
        worst = worst.max(ef.conditions.max_relative());
    }
    out.push(CheckResult::at_most(
        "eigenfunction_conditions",
        worst,
        1e-6,
        json!({"eigenvalues_checked": records.len().min(6)}),
    ));

    let op = discretize(problem, opts.oracle_n)?;
    let oracle = solve_discrete(&op, opts.compare_k)?;
    let mut err = 0.0f64;
    for (o, s) in oracle.iter().zip(records) {
        err = err.max((o - s.lambda).norm() / s.lambda.norm().max(1.0));
    }
    let compared = oracle.len().min(records.len());
    let mut check = CheckResult::at_most(
        "shooting_oracle_agreement",
        err,
        1e-2,
        json!({
            "n": opts.oracle_n,
            "oracle": oracle.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "compared": compared,
        }),
    );
    check.passed &= compared == opts.compare_k;
    out.push(check);
    Ok(())
}

fn asymptotic_checks(problem: &Problem, records: &[EigRecord], out: &mut Vec<CheckResult>) {
    let grids = AsymGrid::covering(problem, records.iter().map(|r| r.s.norm()).fold(0.0, f64::max));
    let rep = match_spectrum(records, &grids, (5, 15));
    let median = rep.median_error.unwrap_or(f64::INFINITY);
    let tau = rep.kendall_tau.unwrap_or(f64::NAN);
    let mut check = CheckResult::at_most(
        "asymptotic_matching",
        median,
        0.10,
        json!({"kendall_tau": tau, "window_errors": rep.window_errors.len(), "unmatched": rep.unmatched.len()}),
    );
    check.passed &= tau < 0.0;
    out.push(check);
    let counting = counting_deviation(records, problem, 10.0, 20.0);
    out.push(CheckResult::at_most(
        "counting_function",
        counting.max_deviation,
        3.0,
        json!({"density": counting.density, "worst_s": counting.worst_s}),
    ));
}

fn growth_checks(
    problem: &Problem,
    records: &[EigRecord],
    opts: &VerifyOptions,
    out: &mut Vec<CheckResult>,
) -> Result<()> {
    let s: Vec<f64> = (0..=140).map(|i| 5.0 + 0.25 * i as f64).collect();
    let series = growth_ratio(problem, GrowthCheck::charfn(problem), &s, opts.accuracy)?;
    out.push(CheckResult::at_most(
        "growth_ratio_drift",
        series.drift,
        0.5,
        json!({"tail_max": series.tail_max, "window": series.window}),
    ));

    let t: Vec<f64> = (0..=40).map(|i| 5.0 + 0.25 * i as f64).collect();
    let bb = verify_bounded_below(problem, &t, opts.accuracy)?;
    let below = records.iter().filter(|r| r.lambda.re < bb.no_zero_below).count();
    let mut check = CheckResult::at_most(
        "bounded_below",
        below as f64,
        0.0,
        json!({"monotone_tail": bb.monotone_tail, "no_zero_below": bb.no_zero_below, "scanned_from": bb.scanned_from}),
    );
    check.passed &= bb.monotone_tail;
    out.push(check);

    if problem.delta1 > 0.0 && problem.delta2 > 0.0 {
        let rect = Rect::new(0.0, 1e4, 0.1, 10.0)?;
        let k = count_complex(problem, rect, 64, opts.accuracy)?;
        out.push(CheckResult::at_most(
            "off_axis_winding",
            k.unsigned_abs() as f64,
            0.0,
            json!({"rect": rect, "winding": k}),
        ));
    }
    Ok(())
}

/// Picard solutions of the printed integral equations for `q` at `lambda = s^4`.
pub fn volterra_diagnostic(
    problem: &Problem,
    q: &PotentialExpr,
    s: f64,
    grid_n: usize,
    accuracy: f64,
) -> Result<VolterraDiagnostic> {
    let p = Problem {
        q_left: q.clone(),
        q_right: q.clone(),
        ..problem.clone()
    };
    let lambda = C64::new(s.powi(4), 0.0);
    let checks = Which::ALL
        .iter()
        .map(|&w| cross_check(&p, lambda, w, grid_n, 200, accuracy))
        .collect::<Result<Vec<_>>>()?;
    let zero = Problem {
        q_left: PotentialExpr::constant(0.0),
        q_right: PotentialExpr::constant(0.0),
        ..problem.clone()
    };
    let mut dev = 0.0f64;
    for w in Which::ALL {
        let spec = VolterraSpec::new(&zero, lambda, w, accuracy)?;
        let sol = picard_solve(&spec, grid_n, 200)?;
        let scale = sol.u.iter().fold(0.0f64, |m, u| m.max(u.norm()));
        for (x, u) in sol.x.iter().zip(&sol.u) {
            dev = dev.max((u - spec.free_term.value(*x)).norm() / scale);
        }
    }
    Ok(VolterraDiagnostic {
        s,
        q: q.source().to_string(),
        grid_n,
        checks,
        zero_potential_deviation: dev,
    })
}

fn volterra_checks(d: &VolterraDiagnostic, out: &mut Vec<CheckResult>) {
    let winners: Vec<Option<_>> = d.checks.iter().map(|c| c.convention.winner).collect();
    let decided = winners.iter().filter(|w| w.is_some()).count();
    let reports: Vec<&ConventionReport> = d.checks.iter().map(|c| &c.convention).collect();
    out.push(CheckResult {
        name: "volterra_single_convention".into(),
        passed: decided == d.checks.len(),
        measured: decided as f64,
        threshold: d.checks.len() as f64,
        detail: json!({"reports": reports}),
    });
    let mismatch = d.checks.iter().map(|c| c.ode_match_error).fold(0.0, f64::max);
    out.push(CheckResult::at_most("volterra_cross_check", mismatch, 1e-6, json!({})));
    let contraction = d.checks.iter().all(|c| c.contraction_ratio <= c.kernel_bound);
    out.push(CheckResult {
        name: "volterra_contraction".into(),
        passed: contraction,
        measured: d.checks.iter().map(|c| c.contraction_ratio).fold(0.0, f64::max),
        threshold: d.checks.iter().map(|c| c.kernel_bound).fold(f64::INFINITY, f64::min),
        detail: json!({}),
    });
    out.push(CheckResult::at_most(
        "volterra_zero_potential",
        d.zero_potential_deviation,
        1e-12,
        json!({}),
    ));
}

/// Runs every check on `problem`. Numerical failures propagate; failed
/// verdicts are recorded in the report.
pub fn run_verify(problem: &Problem, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    structural_checks(problem, opts, &mut checks)?;
    let cfg = ScanConfig {
        s_max: opts.s_max,
        accuracy: opts.accuracy,
        ..ScanConfig::default()
    };
    let records = find_eigenvalues(problem, &cfg)?;
    eigen_checks(problem, &records, opts, &mut checks)?;
    asymptotic_checks(problem, &records, &mut checks);
    growth_checks(problem, &records, opts, &mut checks)?;

    let own = volterra_diagnostic(problem, &problem.q_left, 3.0, opts.grid_n, opts.accuracy)?;
    let own_mismatch = own
        .checks
        .iter()
        .filter(|c| c.which.is_left())
        .map(|c| c.ode_match_error)
        .fold(0.0, f64::max);
    checks.push(CheckResult::at_most(
        "picard_cross_check",
        own_mismatch,
        1e-6,
        json!({"q": own.q, "s": own.s}),
    ));
    let volterra = if opts.volterra {
        let d = volterra_diagnostic(problem, &PotentialExpr::constant(1.0), 3.0, opts.grid_n, opts.accuracy)?;
        volterra_checks(&d, &mut checks);
        Some(d)
    } else {
        None
    };
    Ok(VerifyReport { checks, volterra })
}
