//! Eigenvalue location along the real axis and zero counting in the plane.
//!
//! Real scans use a signed parameter `r` with `lambda = sign(r) r^4`, so the
//! positive axis is scanned in `s = r` and the negative axis in `t = -r`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::AsymMatch;
use crate::charfn::{char_fn_at, CharSample, DEFAULT_X_LEFT};
use crate::error::{Error, Result};
use crate::ode::{C64, DEFAULT_ACCURACY};
use crate::problem::{axis_lambda, principal_fourth_root, Problem};

const MAX_BISECTIONS: usize = 200;
/// Local minima of |w| above this fraction of the neighborhood median are not refined.
const CANDIDATE_SCREEN: f64 = 0.1;
const MEDIAN_HALF_WIDTH: usize = 8;
const MIN_PARAM_STEP: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Shooting,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigRecord {
    pub n: usize,
    pub lambda: C64,
    pub s: C64,
    /// `|w_scaled|` at the accepted point.
    pub residual: f64,
    /// Width in `s` of the final bracket.
    pub s_error: f64,
    pub multiplicity: usize,
    pub method: Method,
    pub asym: Option<AsymMatch>,
}

impl EigRecord {
    pub fn new(lambda: C64, residual: f64, s_error: f64, method: Method) -> Self {
        Self {
            n: 0,
            lambda,
            s: principal_fourth_root(lambda),
            residual,
            s_error,
            multiplicity: 1,
            method,
            asym: None,
        }
    }
}

/// Sorts by real then imaginary part and numbers from 0.
pub fn renumber(records: &mut [EigRecord]) {
    records.sort_by(|a, b| {
        a.lambda
            .re
            .total_cmp(&b.lambda.re)
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    for (i, r) in records.iter_mut().enumerate() {
        r.n = i;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub s_min: f64,
    pub s_max: f64,
    /// The negative axis is scanned down to `lambda = -neg_t_max^4`; 0 disables it.
    pub neg_t_max: f64,
    pub samples_per_half_wave: usize,
    pub refine_tol: f64,
    pub cluster_tol: f64,
    pub accuracy: f64,
    pub x_eval: f64,
    pub magnitude_ratio: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            s_min: 0.0,
            s_max: 20.0,
            neg_t_max: 4.0,
            samples_per_half_wave: 8,
            refine_tol: 1e-10,
            cluster_tol: 1e-8,
            accuracy: DEFAULT_ACCURACY,
            x_eval: DEFAULT_X_LEFT,
            magnitude_ratio: 1e-6,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.s_min >= 0.0 && self.s_min < self.s_max && self.s_max.is_finite()) {
            return bad("need 0 <= s_min < s_max");
        }
        if !(self.neg_t_max >= 0.0 && self.neg_t_max.is_finite()) {
            return bad("neg_t_max must be >= 0");
        }
        if self.samples_per_half_wave < 8 {
            return bad("samples_per_half_wave must be >= 8");
        }
        for (name, v) in [
            ("refine_tol", self.refine_tol),
            ("cluster_tol", self.cluster_tol),
            ("accuracy", self.accuracy),
            ("magnitude_ratio", self.magnitude_ratio),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0")));
            }
        }
        if !(-1.0..=1.0).contains(&self.x_eval) {
            return bad("x_eval must lie in [-1, 1]");
        }
        Ok(())
    }

    /// `pi min(a1, a2) / (2 samples_per_half_wave)`.
    pub fn step(&self, problem: &Problem) -> f64 {
        PI * problem.a_min() / (2.0 * self.samples_per_half_wave as f64)
    }
}

/// Interval of the axis parameter `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Bracket {
    pub fn lambda_lo(&self) -> f64 {
        axis_lambda(self.r_lo)
    }

    pub fn lambda_hi(&self) -> f64 {
        axis_lambda(self.r_hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOutcome {
    /// Sign changes of `Re w`.
    pub brackets: Vec<Bracket>,
    /// Samples where `w` vanished exactly.
    pub exact_zeros: Vec<f64>,
    /// Neighborhoods of `|w|` minima without a sign change.
    pub candidates: Vec<Bracket>,
    /// Samples skipped because integration overflowed.
    pub gaps: Vec<f64>,
    pub evaluations: usize,
}

fn eval_axis(problem: &Problem, r: f64, cfg: &ScanConfig) -> Result<CharSample> {
    char_fn_at(problem, C64::new(axis_lambda(r), 0.0), cfg.x_eval, cfg.accuracy)
}

fn signed_value(w: &CharSample) -> f64 {
    w.w_scaled.re
}

/// Points from `lo` to `hi` spaced by `h`, the last one clamped to `hi`.
fn points(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h).ceil().max(1.0) as usize;
    (0..=n).map(|k| if k == n { hi } else { lo + k as f64 * h }).collect()
}

fn scan_ranges(problem: &Problem, cfg: &ScanConfig) -> Vec<Vec<f64>> {
    let h = cfg.step(problem);
    let mut ranges = Vec::new();
    if cfg.neg_t_max > 0.0 && cfg.s_min == 0.0 {
        // One range through r = 0, with 0 on the grid.
        let mut r: Vec<f64> = points(0.0, cfg.neg_t_max, h).into_iter().rev().map(|t| -t).collect();
        r.pop();
        r.extend(points(0.0, cfg.s_max, h));
        ranges.push(r);
    } else {
        if cfg.neg_t_max > cfg.s_min {
            let r = points(cfg.s_min, cfg.neg_t_max, h)
                .into_iter()
                .rev()
                .map(|t| -t)
                .collect();
            ranges.push(r);
        }
        ranges.push(points(cfg.s_min, cfg.s_max, h));
    }
    ranges
}

pub fn scan_real(problem: &Problem, cfg: &ScanConfig) -> Result<ScanOutcome> {
    cfg.validate()?;
    let mut out = ScanOutcome {
        brackets: Vec::new(),
        exact_zeros: Vec::new(),
        candidates: Vec::new(),
        gaps: Vec::new(),
        evaluations: 0,
    };
    for range in scan_ranges(problem, cfg) {
        let evaluated: Vec<Option<CharSample>> = range
            .par_iter()
            .map(|&r| match eval_axis(problem, r, cfg) {
                Ok(w) => Ok(Some(w)),
                Err(Error::IntegrationOverflow { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        out.evaluations += range.len();
        let mut valid: Vec<(f64, f64, f64)> = Vec::with_capacity(range.len());
        for (r, w) in range.iter().zip(evaluated) {
            match w {
                Some(w) => valid.push((*r, signed_value(&w), w.w_scaled.norm())),
                None => out.gaps.push(*r),
            }
        }
        classify(&valid, &mut out);
    }
    Ok(out)
}

fn classify(valid: &[(f64, f64, f64)], out: &mut ScanOutcome) {
    let n = valid.len();
    let changes = |i: usize| -> bool { i + 1 < n && valid[i].1 * valid[i + 1].1 < 0.0 };
    for i in 0..n {
        let (r, v, m) = valid[i];
        if v == 0.0 && m == 0.0 {
            out.exact_zeros.push(r);
            continue;
        }
        if changes(i) {
            out.brackets.push(Bracket {
                r_lo: r,
                r_hi: valid[i + 1].0,
            });
        }
        let left_change = i > 0 && changes(i - 1);
        if left_change || changes(i) {
            continue;
        }
        let lo_ok = i == 0 || valid[i - 1].2 >= m;
        let hi_ok = i + 1 == n || valid[i + 1].2 >= m;
        if !(lo_ok && hi_ok) || n < 2 {
            continue;
        }
        let a = i.saturating_sub(MEDIAN_HALF_WIDTH);
        let b = (i + MEDIAN_HALF_WIDTH + 1).min(n);
        let mut mags: Vec<f64> = valid[a..b].iter().map(|t| t.2).collect();
        mags.sort_by(f64::total_cmp);
        let med = mags[mags.len() / 2];
        if m < CANDIDATE_SCREEN * med {
            out.candidates.push(Bracket {
                r_lo: valid[i.saturating_sub(1)].0,
                r_hi: valid[(i + 1).min(n - 1)].0,
            });
        }
    }
}

/// Bisection on a sign-change bracket, finished by one secant step.
pub fn refine(problem: &Problem, bracket: Bracket, cfg: &ScanConfig) -> Result<EigRecord> {
    let (mut lo, mut hi) = (bracket.r_lo.min(bracket.r_hi), bracket.r_lo.max(bracket.r_hi));
    let mut w_lo = eval_axis(problem, lo, cfg)?;
    let mut w_hi = eval_axis(problem, hi, cfg)?;
    for (r, w) in [(lo, &w_lo), (hi, &w_hi)] {
        if w.w_scaled.norm() == 0.0 {
            return Ok(axis_record(r, 0.0, 0.0));
        }
    }
    if signed_value(&w_lo) * signed_value(&w_hi) > 0.0 {
        return Err(Error::SignAnomaly { lo, hi });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= cfg.refine_tol * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            break;
        }
        let w = eval_axis(problem, mid, cfg)?;
        let v = signed_value(&w);
        if v == 0.0 {
            return Ok(axis_record(mid, 0.0, hi - lo));
        }
        if v * signed_value(&w_lo) < 0.0 {
            hi = mid;
            w_hi = w;
        } else {
            lo = mid;
            w_lo = w;
        }
    }
    let (vl, vh) = (signed_value(&w_lo), signed_value(&w_hi));
    let mut best = if w_lo.w_scaled.norm() <= w_hi.w_scaled.norm() {
        (lo, w_lo.w_scaled.norm())
    } else {
        (hi, w_hi.w_scaled.norm())
    };
    let secant = lo - vl * (hi - lo) / (vh - vl);
    if secant > lo && secant < hi {
        let w = eval_axis(problem, secant, cfg)?;
        if w.w_scaled.norm() < best.1 {
            best = (secant, w.w_scaled.norm());
        }
    }
    Ok(axis_record(best.0, best.1, hi - lo))
}

fn axis_record(r: f64, residual: f64, r_width: f64) -> EigRecord {
    EigRecord::new(C64::new(axis_lambda(r), 0.0), residual, r_width, Method::Shooting)
}

/// Golden-section minimum of `|w|` on `[lo, hi]`: `(r, |w|)`.
fn minimize_magnitude(problem: &Problem, bracket: Bracket, cfg: &ScanConfig) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mag = |r: f64| eval_axis(problem, r, cfg).map(|w| w.w_scaled.norm());
    let (mut a, mut b) = (bracket.r_lo, bracket.r_hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (mag(c)?, mag(d)?);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for (r, f) in [(a, mag(a)?), (b, mag(b)?)] {
        if f < best.1 {
            best = (r, f);
        }
    }
    while (b - a) > cfg.refine_tol * c.abs().max(1.0) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = mag(c)?;
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = mag(d)?;
            if fd < best.1 {
                best = (d, fd);
            }
        }
        if best.1 == 0.0 {
            break;
        }
    }
    Ok(best)
}

/// Disc radius around `lambda(r)`: half the distance to the neighboring samples.
fn disc_radius(problem: &Problem, r: f64, cfg: &ScanConfig) -> f64 {
    let h = cfg.step(problem);
    let l = axis_lambda(r);
    let down = (l - axis_lambda(r - h)).abs();
    let up = (axis_lambda(r + h) - l).abs();
    0.5 * down.min(up)
}

struct Root {
    r: f64,
    residual: f64,
    s_error: f64,
    multiplicity: Option<usize>,
}

fn confirm_candidate(problem: &Problem, bracket: Bracket, cfg: &ScanConfig, median: f64) -> Result<Option<Root>> {
    let (r, m) = minimize_magnitude(problem, bracket, cfg)?;
    if m >= cfg.magnitude_ratio * median {
        return Ok(None);
    }
    let center = C64::new(axis_lambda(r), 0.0);
    let k = count_in_disc(problem, center, disc_radius(problem, r, cfg), cfg.accuracy, cfg.x_eval)?;
    if k <= 0 {
        return Ok(None);
    }
    Ok(Some(Root {
        r,
        residual: m,
        s_error: cfg.refine_tol * r.abs().max(1.0),
        multiplicity: Some(k as usize),
    }))
}

fn neighborhood_median(problem: &Problem, bracket: Bracket, cfg: &ScanConfig) -> Result<f64> {
    let h = cfg.step(problem);
    let mid = 0.5 * (bracket.r_lo + bracket.r_hi);
    let mut mags = Vec::new();
    for k in 1..=MEDIAN_HALF_WIDTH {
        for r in [mid - k as f64 * h, mid + k as f64 * h] {
            if let Ok(w) = eval_axis(problem, r, cfg) {
                mags.push(w.w_scaled.norm());
            }
        }
    }
    mags.sort_by(f64::total_cmp);
    Ok(mags.get(mags.len() / 2).copied().unwrap_or(1.0))
}

pub fn find_eigenvalues(problem: &Problem, cfg: &ScanConfig) -> Result<Vec<EigRecord>> {
    let scan = scan_real(problem, cfg)?;
    let refined: Vec<Option<Root>> = scan
        .brackets
        .par_iter()
        .map(|b| match refine(problem, *b, cfg) {
            Ok(rec) => Ok(Some(Root {
                r: rec.s.norm().copysign(rec.lambda.re),
                residual: rec.residual,
                s_error: rec.s_error,
                multiplicity: None,
            })),
            Err(Error::SignAnomaly { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let confirmed: Vec<Option<Root>> = scan
        .candidates
        .par_iter()
        .map(|b| {
            let med = neighborhood_median(problem, *b, cfg)?;
            confirm_candidate(problem, *b, cfg, med)
        })
        .collect::<Result<_>>()?;
    let mut roots: Vec<Root> = refined.into_iter().chain(confirmed).flatten().collect();
    for &r in &scan.exact_zeros {
        let center = C64::new(axis_lambda(r), 0.0);
        let k = count_in_disc(problem, center, disc_radius(problem, r, cfg), cfg.accuracy, cfg.x_eval).ok();
        roots.push(Root {
            r,
            residual: 0.0,
            s_error: 0.0,
            multiplicity: k.filter(|&k| k > 0).map(|k| k as usize),
        });
    }
    roots.sort_by(|a, b| a.r.total_cmp(&b.r));

    let mut records = Vec::new();
    let mut i = 0;
    while i < roots.len() {
        let mut j = i + 1;
        while j < roots.len() && roots[j].r - roots[j - 1].r <= cfg.cluster_tol * roots[j].r.abs().max(1.0) {
            j += 1;
        }
        let group = &roots[i..j];
        let best = group
            .iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
            .expect("non-empty group");
        let mut multiplicity = if group.len() == 1 {
            best.multiplicity.unwrap_or(1)
        } else {
            group.iter().map(|g| g.multiplicity.unwrap_or(1)).sum()
        };
        if group.len() > 1 {
            let center = C64::new(axis_lambda(best.r), 0.0);
            let spread = (axis_lambda(group[group.len() - 1].r) - axis_lambda(group[0].r)).abs();
            let radius = (4.0 * spread).max(disc_radius(problem, best.r, cfg) * 1e-3);
            if let Ok(k) = count_in_disc(problem, center, radius, cfg.accuracy, cfg.x_eval) {
                if k > 0 {
                    multiplicity = k as usize;
                }
            }
        }
        let s_err = group.iter().map(|g| g.s_error).fold(0.0, f64::max);
        for _ in 0..multiplicity {
            let mut rec = axis_record(best.r, best.residual, s_err);
            rec.multiplicity = multiplicity;
            records.push(rec);
        }
        i = j;
    }
    renumber(&mut records);
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::InvalidArgument("degenerate rectangle".into()));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// Corners in counterclockwise order.
    pub fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }
}

/// Total change of `arg W` along `path(t)`, `t` in `[0, 1]`, refining until
/// each step turns by less than pi/2.
fn phase_change<P>(problem: &Problem, path: &P, n_init: usize, accuracy: f64, x_eval: f64) -> Result<f64>
where
    P: Fn(f64) -> C64 + Sync,
{
    let eval = |t: f64| -> Result<C64> {
        let z = path(t);
        let w = char_fn_at(problem, z, x_eval, accuracy)?.w_scaled;
        if w.norm() == 0.0 || !w.norm().is_finite() {
            return Err(Error::BoundaryProximity { lambda: z.to_string() });
        }
        Ok(w)
    };
    let n = n_init.max(4);
    let ts: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let ws: Vec<C64> = ts.par_iter().map(|&t| eval(t)).collect::<Result<_>>()?;
    let mut total = 0.0;
    for k in 0..n {
        let mut stack = vec![(ts[k], ws[k], ts[k + 1], ws[k + 1])];
        while let Some((ta, wa, tb, wb)) = stack.pop() {
            let d = (wb / wa).arg();
            if d.abs() < PI / 2.0 {
                total += d;
                continue;
            }
            if tb - ta < MIN_PARAM_STEP {
                return Err(Error::BoundaryProximity {
                    lambda: path(ta).to_string(),
                });
            }
            let tm = 0.5 * (ta + tb);
            let wm = eval(tm)?;
            // Process the first half first.
            stack.push((tm, wm, tb, wb));
            stack.push((ta, wa, tm, wm));
        }
    }
    Ok(total)
}

/// Rough length in `s` of the segment from `a` to `b`.
fn s_length(a: C64, b: C64) -> f64 {
    let k = 64;
    let mut len = 0.0;
    let mut prev = principal_fourth_root(a);
    for i in 1..=k {
        let z = a + (b - a) * (i as f64 / k as f64);
        let s = principal_fourth_root(z);
        len += (s - prev).norm();
        prev = s;
    }
    len
}

/// Number of zeros of `W` inside `rect`, from the winding number along its boundary.
pub fn count_complex(problem: &Problem, rect: Rect, quadrature_points: usize, accuracy: f64) -> Result<i64> {
    let corners = rect.corners();
    let ds = PI * problem.a_min() / 16.0;
    let mut total = 0.0;
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let n = (quadrature_points / 4)
            .max((s_length(a, b) / ds).ceil() as usize)
            .max(4);
        let path = move |t: f64| a + (b - a) * t;
        total += phase_change(problem, &path, n, accuracy, DEFAULT_X_LEFT)?;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

pub fn count_in_disc(problem: &Problem, center: C64, radius: f64, accuracy: f64, x_eval: f64) -> Result<i64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("disc radius must be > 0".into()));
    }
    let path = move |t: f64| center + C64::from_polar(radius, 2.0 * PI * t);
    let total = phase_change(problem, &path, 16, accuracy, x_eval)?;
    Ok((total / (2.0 * PI)).round() as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedBelowReport {
    pub t: Vec<f64>,
    /// `ln |W(-t^4)|`.
    pub log_abs_w: Vec<f64>,
    pub monotone_tail: bool,
    /// Lower end of the lowest sign change on `[-t_max^4, 0)`, or 0 when there is none.
    pub no_zero_below: f64,
    pub scanned_from: f64,
    pub sign_changes: Vec<Bracket>,
}

pub fn verify_bounded_below(problem: &Problem, t_grid: &[f64], accuracy: f64) -> Result<BoundedBelowReport> {
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("t grid must be positive and increasing".into()));
    }
    let cfg = ScanConfig {
        accuracy,
        ..ScanConfig::default()
    };
    let log_abs_w: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| eval_axis(problem, -t, &cfg).map(|w| w.ln_abs()))
        .collect::<Result<_>>()?;
    let monotone_tail = log_abs_w.windows(2).all(|w| w[1] > w[0]);

    let t_max = t_grid.last().copied().unwrap_or(0.0);
    let mut sign_changes = Vec::new();
    if t_max > 0.0 {
        let h = cfg.step(problem);
        let rs: Vec<f64> = points(0.0, t_max, h)
            .into_iter()
            .rev()
            .map(|t| -t)
            .filter(|&r| r < 0.0)
            .collect();
        let vals: Vec<f64> = rs
            .par_iter()
            .map(|&r| eval_axis(problem, r, &cfg).map(|w| signed_value(&w)))
            .collect::<Result<_>>()?;
        for i in 0..rs.len().saturating_sub(1) {
            if vals[i] * vals[i + 1] <= 0.0 {
                sign_changes.push(Bracket {
                    r_lo: rs[i],
                    r_hi: rs[i + 1],
                });
            }
        }
    }
    let no_zero_below = sign_changes.first().map(|b| b.lambda_lo()).unwrap_or(0.0);
    Ok(BoundedBelowReport {
        t: t_grid.to_vec(),
        log_abs_w,
        monotone_tail,
        no_zero_below,
        scanned_from: -t_max.powi(4),
        sign_changes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relaxed(beta: (f64, f64)) -> Problem {
        Problem {
            beta1: beta.0,
            beta2: beta.1,
            delta1: 0.0,
            delta2: 0.0,
            strict_validation: false,
            ..Problem::reference()
        }
    }

    #[test]
    fn grid_through_zero() {
        let p = Problem::reference();
        let cfg = ScanConfig {
            s_max: 1.0,
            neg_t_max: 0.5,
            ..ScanConfig::default()
        };
        let ranges = scan_ranges(&p, &cfg);
        assert_eq!(ranges.len(), 1);
        let r = &ranges[0];
        assert_eq!(r[0], -0.5);
        assert_eq!(*r.last().unwrap(), 1.0);
        assert!(r.contains(&0.0));
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn short_interval_has_no_brackets() {
        let cfg = ScanConfig {
            s_min: 0.1,
            s_max: 0.2,
            neg_t_max: 0.0,
            ..ScanConfig::default()
        };
        let out = scan_real(&Problem::reference(), &cfg).unwrap();
        assert!(out.brackets.is_empty());
    }

    #[test]
    fn hand_case_root_at_zero() {
        let cfg = ScanConfig {
            s_max: 3.0,
            neg_t_max: 0.0,
            ..ScanConfig::default()
        };
        let recs = find_eigenvalues(&relaxed((0.0, 1.0)), &cfg).unwrap();
        assert!(recs[0].lambda.norm() < 1e-8, "{recs:?}");
    }

    #[test]
    fn monotone_bracket_rejected() {
        let p = Problem::reference();
        let cfg = ScanConfig::default();
        let r = refine(&p, Bracket { r_lo: 0.1, r_hi: 0.2 }, &cfg);
        assert!(matches!(r, Err(Error::SignAnomaly { .. })), "{r:?}");
    }

    #[test]
    fn winding_around_hand_zero() {
        let p = relaxed((0.0, 1.0));
        let rect = Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        assert_eq!(count_complex(&p, rect, 32, 1e-10).unwrap(), 1);
        let rect = Rect::new(0.5, 2.0, -1.0, 1.0).unwrap();
        assert_eq!(count_complex(&p, rect, 32, 1e-10).unwrap(), 0);
    }

    #[test]
    fn renumber_sorts() {
        let mut v = vec![
            EigRecord::new(C64::new(3.0, 0.0), 0.0, 0.0, Method::Oracle),
            EigRecord::new(C64::new(-1.0, 0.0), 0.0, 0.0, Method::Oracle),
            EigRecord::new(C64::new(3.0, -1.0), 0.0, 0.0, Method::Oracle),
        ];
        renumber(&mut v);
        let order: Vec<(f64, f64, usize)> = v.iter().map(|r| (r.lambda.re, r.lambda.im, r.n)).collect();
        assert_eq!(order, vec![(-1.0, 0.0, 0), (3.0, -1.0, 1), (3.0, 0.0, 2)]);
    }

    #[test]
    fn single_point_grid_is_monotone() {
        let rep = verify_bounded_below(&Problem::reference(), &[2.0], 1e-10).unwrap();
        assert!(rep.monotone_tail);
        assert_eq!(rep.log_abs_w.len(), 1);
    }

    #[test]
    fn config_validation() {
        let mut c = ScanConfig::default();
        assert!(c.validate().is_ok());
        c.samples_per_half_wave = 4;
        assert!(c.validate().is_err());
        let c = ScanConfig {
            s_min: 5.0,
            s_max: 5.0,
            ..ScanConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
