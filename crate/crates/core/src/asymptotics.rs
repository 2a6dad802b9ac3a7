//! Asymptotic eigenvalue grids and growth-rate checks.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{launch_chi, launch_phi, Side};
use crate::charfn::char_fn;
use crate::error::{Error, Result};
use crate::ode::C64;
use crate::problem::Problem;
use crate::spectrum::EigRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "prime")]
    Prime,
    #[serde(rename = "double-prime")]
    DoublePrime,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::Prime => "prime",
            Family::DoublePrime => "double-prime",
        }
    }

    pub fn coefficient(self, problem: &Problem) -> f64 {
        match self {
            Family::Prime => problem.a1,
            Family::DoublePrime => problem.a2,
        }
    }
}

/// `a1 pi (2n-1)/2` for the prime family, `a2 pi (2n+1)/2` for the double-prime one.
pub fn predicted_s(n: usize, family: Family, problem: &Problem) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid index starts at 1".into()));
    }
    let a = family.coefficient(problem);
    let n = n as f64;
    Ok(match family {
        Family::Prime => a * PI * (2.0 * n - 1.0) / 2.0,
        Family::DoublePrime => a * PI * (2.0 * n + 1.0) / 2.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymGrid {
    pub family: Family,
    pub a: f64,
    /// `entries[i]` is the prediction for `n = i + 1`.
    pub entries: Vec<f64>,
}

impl AsymGrid {
    pub fn new(problem: &Problem, family: Family, n_max: usize) -> Self {
        let entries = (1..=n_max)
            .map(|n| predicted_s(n, family, problem).unwrap_or(f64::NAN))
            .collect();
        Self {
            family,
            a: family.coefficient(problem),
            entries,
        }
    }

    /// Both families, each long enough to pass `s_max`.
    pub fn covering(problem: &Problem, s_max: f64) -> [AsymGrid; 2] {
        [Family::Prime, Family::DoublePrime].map(|f| {
            let a = f.coefficient(problem);
            let n_max = (s_max / (a * PI)).ceil() as usize + 2;
            AsymGrid::new(problem, f, n_max)
        })
    }

    fn spacing(&self) -> f64 {
        self.a * PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymMatch {
    pub family: Family,
    pub grid_n: usize,
    pub predicted_s: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub records: Vec<EigRecord>,
    /// Indices of records left without a grid point.
    pub unmatched: Vec<usize>,
    pub window: (usize, usize),
    /// `(grid_n, family, rel_error)` for matches with `grid_n` in the window.
    pub window_errors: Vec<(usize, Family, f64)>,
    pub median_error: Option<f64>,
    pub kendall_tau: Option<f64>,
}

/// Greedy nearest matching of records to the union of the grids, one record
/// per grid point. Only records with positive real `lambda` take part, and a
/// record further than half a grid spacing from every free point stays
/// unmatched.
pub fn match_spectrum(records: &[EigRecord], grids: &[AsymGrid], window: (usize, usize)) -> MatchReport {
    let mut candidates: Vec<(f64, usize, usize, usize)> = Vec::new();
    for (ri, r) in records.iter().enumerate() {
        if r.lambda.re <= 0.0 {
            continue;
        }
        let s = r.s.norm();
        for (gi, g) in grids.iter().enumerate() {
            let reach = 0.5 * g.spacing();
            for (k, &p) in g.entries.iter().enumerate() {
                let d = (s - p).abs();
                if d <= reach {
                    candidates.push((d, ri, gi, k));
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });

    let mut out: Vec<EigRecord> = records.to_vec();
    for r in &mut out {
        r.asym = None;
    }
    let mut taken: Vec<Vec<bool>> = grids.iter().map(|g| vec![false; g.entries.len()]).collect();
    let mut done = vec![false; records.len()];
    for (_, ri, gi, k) in candidates {
        if done[ri] || taken[gi][k] {
            continue;
        }
        done[ri] = true;
        taken[gi][k] = true;
        let p = grids[gi].entries[k];
        out[ri].asym = Some(AsymMatch {
            family: grids[gi].family,
            grid_n: k + 1,
            predicted_s: p,
            rel_error: (out[ri].s.norm() - p).abs() / p,
        });
    }

    let unmatched = (0..out.len()).filter(|&i| out[i].asym.is_none()).collect();
    let mut window_errors: Vec<(usize, Family, f64)> = out
        .iter()
        .filter_map(|r| r.asym)
        .filter(|m| m.grid_n >= window.0 && m.grid_n <= window.1)
        .map(|m| (m.grid_n, m.family, m.rel_error))
        .collect();
    window_errors.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let errs: Vec<f64> = window_errors.iter().map(|e| e.2).collect();
    let ns: Vec<f64> = window_errors.iter().map(|e| e.0 as f64).collect();
    MatchReport {
        records: out,
        unmatched,
        window,
        median_error: median(&errs),
        kendall_tau: kendall_tau(&ns, &errs),
        window_errors,
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Kendall's tau-b.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    let (mut conc, mut disc, mut tx, mut ty) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = (x[i] - x[j]).signum() * f64::from(x[i] != x[j]);
            let dy = (y[i] - y[j]).signum() * f64::from(y[i] != y[j]);
            if dx == 0.0 && dy == 0.0 {
                continue;
            }
            if dx == 0.0 {
                tx += 1.0;
            } else if dy == 0.0 {
                ty += 1.0;
            } else if dx == dy {
                conc += 1.0;
            } else {
                disc += 1.0;
            }
        }
    }
    let den = ((conc + disc + tx) * (conc + disc + ty)).sqrt();
    if den == 0.0 {
        None
    } else {
        Some((conc - disc) / den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    pub s_lo: f64,
    pub s_hi: f64,
    /// Predicted slope of `N(S)`.
    pub density: f64,
    pub max_deviation: f64,
    pub worst_s: f64,
}

/// `N(S) = #{records with real s <= S}`. Negative eigenvalues have no real
/// fourth root and are not counted.
pub fn counting_function(records: &[EigRecord], big_s: f64) -> usize {
    records.iter().filter(|r| has_real_root(r) && r.s.re <= big_s).count()
}

fn has_real_root(r: &EigRecord) -> bool {
    r.lambda.re >= 0.0 && r.lambda.im.abs() <= 1e-12 * (1.0 + r.lambda.re)
}

/// Largest `|N(S) - S (1/(pi a1) + 1/(pi a2))|` over `S` in `[s_lo, s_hi]`.
/// The step function is checked on both sides of every jump.
pub fn counting_deviation(records: &[EigRecord], problem: &Problem, s_lo: f64, s_hi: f64) -> CountingReport {
    let density = 1.0 / (PI * problem.a1) + 1.0 / (PI * problem.a2);
    let mut probes = vec![
        (s_lo, counting_function(records, s_lo)),
        (s_hi, counting_function(records, s_hi)),
    ];
    for r in records.iter().filter(|r| has_real_root(r)) {
        let s = r.s.re;
        if s > s_lo && s <= s_hi {
            let at = counting_function(records, s);
            let below = records.iter().filter(|o| has_real_root(o) && o.s.re < s).count();
            probes.push((s, at));
            probes.push((s, below));
        }
    }
    let mut report = CountingReport {
        s_lo,
        s_hi,
        density,
        max_deviation: 0.0,
        worst_s: s_lo,
    };
    for (s, n) in probes {
        let dev = (n as f64 - density * s).abs();
        if dev > report.max_deviation {
            report.max_deviation = dev;
            report.worst_s = s;
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    /// k-th derivative of phi11 at x in [-1, 0].
    Phi11 {
        k: usize,
        x: f64,
    },
    /// k-th derivative of phi21 at x in [-1, 0].
    Phi21 {
        k: usize,
        x: f64,
    },
    /// k-th derivative of chi12 at x in [0, 1].
    Chi12 {
        k: usize,
        x: f64,
    },
    /// k-th derivative of chi22 at x in [0, 1].
    Chi22 {
        k: usize,
        x: f64,
    },
    CharFn,
}

/// Bound `|s|^p e^(g |s|)` for a quantity along the positive real s-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub quantity: Quantity,
    pub p: f64,
    pub g: f64,
}

impl GrowthCheck {
    pub fn charfn(problem: &Problem) -> Self {
        Self {
            quantity: Quantity::CharFn,
            p: 11.0,
            g: 2.0 * (problem.a1 + problem.a2) / (problem.a1 * problem.a2),
        }
    }

    pub fn phi11(problem: &Problem, k: usize, x: f64) -> Self {
        Self {
            quantity: Quantity::Phi11 { k, x },
            p: k as f64 - 1.0,
            g: (x + 1.0) / problem.a1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub check: GrowthCheck,
    pub s: Vec<f64>,
    pub log_quantity: Vec<f64>,
    /// `log|Q| - p ln s - g s`.
    pub log_ratio: Vec<f64>,
    /// Running maximum of `log_ratio` over the trailing window.
    pub envelope: Vec<f64>,
    pub window: f64,
    /// Largest rise of the envelope between two full-window points.
    pub drift: f64,
    pub tail_max: f64,
}

impl GrowthSeries {
    pub fn ratios(&self) -> Vec<f64> {
        self.log_ratio.iter().map(|v| v.exp()).collect()
    }
}

fn log_quantity(problem: &Problem, q: &Quantity, s: f64, accuracy: f64) -> Result<f64> {
    let lambda = C64::new(s.powi(4), 0.0);
    let pick = |k: usize, st: crate::ode::StateVec| st.to_array()[k.min(3)].norm().ln();
    match *q {
        Quantity::CharFn => Ok(char_fn(problem, lambda, accuracy)?.ln_abs()),
        Quantity::Phi11 { k, x } | Quantity::Phi21 { k, x } => {
            let (p1, p2) = launch_phi(problem, lambda, accuracy)?;
            let sol = if matches!(q, Quantity::Phi11 { .. }) { p1 } else { p2 };
            Ok(pick(k, sol.state_at(problem, Side::Left, x)?))
        }
        Quantity::Chi12 { k, x } | Quantity::Chi22 { k, x } => {
            let (c1, c2) = launch_chi(problem, lambda, accuracy)?;
            let sol = if matches!(q, Quantity::Chi12 { .. }) { c1 } else { c2 };
            Ok(pick(k, sol.state_at(problem, Side::Right, x)?))
        }
    }
}

pub fn growth_ratio(problem: &Problem, check: GrowthCheck, s_values: &[f64], accuracy: f64) -> Result<GrowthSeries> {
    if s_values.windows(2).any(|w| w[1] <= w[0]) || s_values.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument(
            "s values must be positive and increasing".into(),
        ));
    }
    let logs: Vec<f64> = s_values
        .par_iter()
        .map(|&s| log_quantity(problem, &check.quantity, s, accuracy))
        .collect::<Result<_>>()?;
    let log_ratio: Vec<f64> = s_values
        .iter()
        .zip(&logs)
        .map(|(&s, &l)| l - check.p * s.ln() - check.g * s)
        .collect();
    let window = PI * problem.a_max();
    let envelope: Vec<f64> = (0..s_values.len())
        .map(|i| {
            (0..=i)
                .filter(|&j| s_values[j] >= s_values[i] - window)
                .map(|j| log_ratio[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let first_full = s_values.iter().position(|&s| s >= s_values[0] + window);
    let mut drift = 0.0_f64;
    if let Some(start) = first_full {
        let mut low = f64::INFINITY;
        for &e in &envelope[start..] {
            low = low.min(e);
            drift = drift.max(e - low);
        }
    }
    let tail_max = log_ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthSeries {
        check,
        s: s_values.to_vec(),
        log_quantity: logs,
        log_ratio,
        envelope,
        window,
        drift,
        tail_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Method;

    fn rec(s: f64) -> EigRecord {
        EigRecord::new(C64::new(s.powi(4), 0.0), 0.0, 0.0, Method::Shooting)
    }

    #[test]
    fn predictions() {
        let p = Problem::reference();
        assert!((predicted_s(1, Family::Prime, &p).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((predicted_s(1, Family::DoublePrime, &p).unwrap() - 4.712389).abs() < 1e-6);
        let p2 = Problem { a1: 2.0, ..p.clone() };
        assert!((predicted_s(3, Family::Prime, &p2).unwrap() - 5.0 * PI).abs() < 1e-12);
        assert!(predicted_s(0, Family::Prime, &p).is_err());
    }

    #[test]
    fn exact_grid_values_match_with_zero_error() {
        let p = Problem::reference();
        let grids = AsymGrid::covering(&p, 30.0);
        let mut records: Vec<EigRecord> = grids
            .iter()
            .flat_map(|g| g.entries[..5].iter().map(|&s| rec(s)))
            .collect();
        records.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re));
        let rep = match_spectrum(&records, &grids, (1, 5));
        assert!(rep.unmatched.is_empty());
        for r in &rep.records {
            assert!(r.asym.unwrap().rel_error < 1e-12);
        }
        assert!(rep.median_error.unwrap() < 1e-12);
    }

    #[test]
    fn far_record_unmatched() {
        let p = Problem::reference();
        let grids = [
            AsymGrid::new(&p, Family::Prime, 3),
            AsymGrid::new(&p, Family::DoublePrime, 3),
        ];
        let rep = match_spectrum(&[rec(1.6), rec(500.0)], &grids, (1, 3));
        assert_eq!(rep.unmatched, vec![1]);
        assert!(rep.records[0].asym.is_some());
    }

    #[test]
    fn matching_is_one_to_one() {
        let p = Problem::reference();
        let grids = [AsymGrid::new(&p, Family::Prime, 2)];
        let rep = match_spectrum(&[rec(1.5), rec(1.6), rec(1.7)], &grids, (1, 2));
        let claimed: Vec<usize> = rep.records.iter().filter_map(|r| r.asym.map(|m| m.grid_n)).collect();
        assert_eq!(claimed, vec![1]);
        assert_eq!(rep.unmatched, vec![0, 2]);
    }

    #[test]
    fn tau_and_median() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Some(1.0));
        assert_eq!(kendall_tau(&[1.0], &[1.0]), None);
    }

    #[test]
    fn counting_on_exact_grid() {
        let p = Problem::reference();
        let records: Vec<EigRecord> = (0..20).map(|k| rec(PI / 2.0 + PI * k as f64 / 2.0)).collect();
        let rep = counting_deviation(&records, &p, 10.0, 20.0);
        assert!((rep.density - 2.0 / PI).abs() < 1e-15);
        assert!(rep.max_deviation <= 1.5, "{rep:?}");
    }
}
