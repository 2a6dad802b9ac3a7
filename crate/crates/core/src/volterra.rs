//! Integral-equation representations of the left-launched solutions, solved
//! by successive substitution and compared against the ODE.
//!
//! Every representation has the form
//! `u(x) = F(x) + int_{x0}^{x} K(x - y) q(y) u(y) dy` with
//! `K(z) = c (sin kz - e^(kz) + e^(-kz))`, `c = a^3 / (2 s^3)`, `k = s / a`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::launch_phi;
use crate::error::{Error, Result};
use crate::expr::PotentialExpr;
use crate::ode::{integrate_dense, Segment, StateVec, C64};
use crate::problem::{principal_fourth_root, Problem};

pub const MIN_GRID: usize = 64;
pub const CONVENTION_THRESHOLD: f64 = 1e-3;
const PICARD_TOL: f64 = 1e-12;
/// Fourth differences lose to roundoff on finer grids.
pub const RESIDUAL_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Phi11,
    Phi12,
    Phi21,
    Phi22,
}

impl Which {
    pub const ALL: [Which; 4] = [Which::Phi11, Which::Phi12, Which::Phi21, Which::Phi22];

    pub fn is_left(self) -> bool {
        matches!(self, Which::Phi11 | Which::Phi21)
    }

    /// `(launch endpoint, far endpoint)`.
    pub fn segment(self) -> (f64, f64) {
        if self.is_left() {
            (-1.0, 0.0)
        } else {
            (0.0, 1.0)
        }
    }
}

/// `A_cos cos z + A_sin sin z + A_plus e^z + A_minus e^(-z)` with `z = k (x - x0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeTerm {
    pub a_cos: C64,
    pub a_sin: C64,
    pub a_plus: C64,
    pub a_minus: C64,
    pub k: C64,
    pub x0: f64,
}

impl FreeTerm {
    /// Derivative of order `order` at `x`.
    pub fn derivative(&self, x: f64, order: u32) -> C64 {
        let z = self.k * (x - self.x0);
        let kp = self.k.powu(order);
        let (trig_c, trig_s) = match order % 4 {
            0 => (z.cos(), z.sin()),
            1 => (-z.sin(), z.cos()),
            2 => (-z.cos(), -z.sin()),
            _ => (z.sin(), -z.cos()),
        };
        let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
        kp * (self.a_cos * trig_c + self.a_sin * trig_s + self.a_plus * z.exp() + self.a_minus * sign * (-z).exp())
    }

    pub fn value(&self, x: f64) -> C64 {
        self.derivative(x, 0)
    }

    /// Cauchy data `(F, F', F'', F''')` at `x`.
    pub fn state(&self, x: f64) -> StateVec {
        StateVec::new(
            self.derivative(x, 0),
            self.derivative(x, 1),
            self.derivative(x, 2),
            self.derivative(x, 3),
        )
    }

    /// Free term built from Cauchy-type data `d` at the launch point.
    pub fn from_data(d: StateVec, a: f64, s: C64, x0: f64) -> Self {
        let r = C64::new(a, 0.0) / s;
        let (r2, r3) = (r * r, r * r * r);
        Self {
            a_cos: d.u / 2.0 - r2 * d.upp / 2.0,
            a_sin: r * d.up / 2.0 - r3 * d.uppp / 2.0,
            a_plus: d.u / 4.0 + r * d.up / 4.0 + r2 * d.upp / 4.0 + r3 * d.uppp / 4.0,
            a_minus: d.u / 4.0 - r * d.up / 4.0 + r2 * d.upp / 4.0 - r3 * d.uppp / 4.0,
            k: s / a,
            x0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSpec {
    pub which: Which,
    pub lambda: C64,
    pub s: C64,
    pub a: f64,
    pub q: PotentialExpr,
    pub free_term: FreeTerm,
    /// `a^3 / (2 s^3)`.
    pub kernel_scale: C64,
    pub segment: (f64, f64),
}

impl VolterraSpec {
    /// The representation of `which` for `problem` at `lambda`. The right-segment
    /// free terms use the ODE values of the solution at `0+`.
    pub fn new(problem: &Problem, lambda: C64, which: Which, accuracy: f64) -> Result<Self> {
        let s = principal_fourth_root(lambda);
        if s.norm() == 0.0 {
            return Err(Error::InvalidArgument("s = 0 is not admissible".into()));
        }
        let segment = which.segment();
        let (a, q) = if which.is_left() {
            (problem.a1, problem.q_left.clone())
        } else {
            (problem.a2, problem.q_right.clone())
        };
        let r = C64::new(a, 0.0) / s;
        let free_term = match which {
            Which::Phi11 => {
                let c = r * r * r;
                FreeTerm {
                    a_cos: C64::new(0.0, 0.0),
                    a_sin: c / 2.0,
                    a_plus: c / 4.0,
                    a_minus: c / 4.0,
                    k: s / a,
                    x0: -1.0,
                }
            }
            Which::Phi21 => {
                let (b1, b2) = (problem.beta1, problem.beta2);
                FreeTerm {
                    a_cos: b1 * r * r / 2.0,
                    a_sin: b2 * r / 2.0,
                    a_plus: b2 * r / 4.0 - b1 * r * r / 4.0,
                    a_minus: -(b2 * r / 4.0 + b1 * r * r / 4.0),
                    k: s / a,
                    x0: -1.0,
                }
            }
            Which::Phi12 | Which::Phi22 => {
                let (p1, p2) = launch_phi(problem, lambda, accuracy)?;
                let d = if which == Which::Phi12 {
                    p1.at_zero_plus
                } else {
                    p2.at_zero_plus
                };
                FreeTerm::from_data(d, a, s, 0.0)
            }
        };
        Ok(Self {
            which,
            lambda,
            s,
            a,
            q,
            free_term,
            kernel_scale: r * r * r / 2.0,
            segment,
        })
    }

    /// `K(z)` and its first two derivatives in `z`.
    pub fn kernel(&self, z: f64) -> [C64; 3] {
        let k = self.s / self.a;
        let kz = k * z;
        let (ep, em) = (kz.exp(), (-kz).exp());
        let c = self.kernel_scale;
        [
            c * (kz.sin() - ep + em),
            c * k * (kz.cos() - ep - em),
            c * k * k * (-kz.sin() - ep + em),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardSolution {
    pub x: Vec<f64>,
    pub u: Vec<C64>,
    pub iterations: usize,
    /// Sup-norm of successive differences, one per iteration.
    pub differences: Vec<f64>,
    /// Largest ratio of successive differences.
    pub contraction_ratio: f64,
    /// `sup |K q|` times the segment length.
    pub kernel_bound: f64,
}

/// Integral of samples `g` over `[0, (g.len() - 1) h]`: Simpson, with a 3/8 panel
/// for an odd interval count.
fn prefix_integral(g: &[C64], h: f64) -> C64 {
    let m = g.len().saturating_sub(1);
    let simpson = |g: &[C64]| -> C64 {
        let n = g.len() - 1;
        let mut acc = g[0] + g[n];
        for (j, v) in g.iter().enumerate().take(n).skip(1) {
            acc += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        acc * h / 3.0
    };
    match m {
        0 => C64::new(0.0, 0.0),
        1 => (g[0] + g[1]) * h / 2.0,
        _ if m.is_multiple_of(2) => simpson(g),
        3 => (g[0] + 3.0 * g[1] + 3.0 * g[2] + g[3]) * 3.0 * h / 8.0,
        _ => {
            let t = &g[m - 3..];
            simpson(&g[..=m - 3]) + (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3]) * 3.0 * h / 8.0
        }
    }
}

pub fn picard_solve(spec: &VolterraSpec, grid_n: usize, max_iter: usize) -> Result<PicardSolution> {
    if spec.s.norm() == 0.0 {
        return Err(Error::InvalidArgument("s = 0 is not admissible".into()));
    }
    if grid_n < MIN_GRID || !grid_n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "grid_n must be a power of two >= {MIN_GRID}, got {grid_n}"
        )));
    }
    let (x0, x1) = spec.segment;
    let h = (x1 - x0) / grid_n as f64;
    let x: Vec<f64> = (0..=grid_n).map(|j| x0 + j as f64 * h).collect();
    let q: Vec<f64> = x.iter().map(|&x| spec.q.eval(x)).collect::<Result<_, _>>()?;
    let kern: Vec<C64> = (0..=grid_n).map(|m| spec.kernel(m as f64 * h)[0]).collect();
    let free: Vec<C64> = x.iter().map(|&x| spec.free_term.value(x)).collect();
    let q_sup = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let k_sup = kern.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let kernel_bound = k_sup * q_sup * (x1 - x0).abs();

    let sup = |v: &[C64]| v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut u = free.clone();
    let mut differences = Vec::new();
    for it in 1..=max_iter {
        let qu: Vec<C64> = q.iter().zip(&u).map(|(q, u)| q * u).collect();
        let next: Vec<C64> = (0..=grid_n)
            .into_par_iter()
            .map(|i| {
                let g: Vec<C64> = (0..=i).map(|j| kern[i - j] * qu[j]).collect();
                free[i] + prefix_integral(&g, h.abs())
            })
            .collect();
        let diff = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        if !diff.is_finite() {
            return Err(Error::IntegrationOverflow { x: x1 });
        }
        differences.push(diff);
        u = next;
        if diff < PICARD_TOL * sup(&u) {
            let contraction_ratio = ratios(&differences).into_iter().fold(0.0, f64::max);
            return Ok(PicardSolution {
                x,
                u,
                iterations: it,
                differences,
                contraction_ratio,
                kernel_bound,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        ratio: ratios(&differences).last().copied().unwrap_or(f64::NAN),
    })
}

fn ratios(d: &[f64]) -> Vec<f64> {
    d.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
}

/// Sign convention of the fourth-order equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `a^4 u'''' + q u = lambda u`.
    Standard,
    /// `-a^4 u'''' - s^4 u = q u`.
    Flipped,
}

/// Sup-norm ODE residual on a uniform grid, normalized by `sup |u|`.
pub fn ode_residual(
    x: &[f64],
    u: &[C64],
    lambda: C64,
    a: f64,
    q: &PotentialExpr,
    convention: Convention,
) -> Result<f64> {
    if x.len() != u.len() || x.len() < 9 {
        return Err(Error::InvalidArgument(
            "need at least 5 interior points for the fourth difference".into(),
        ));
    }
    let h = x[1] - x[0];
    let a4 = a.powi(4);
    let scale = u.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut worst = 0.0f64;
    for i in 2..u.len() - 2 {
        let d4 = (u[i - 2] - 4.0 * u[i - 1] + 6.0 * u[i] - 4.0 * u[i + 1] + u[i + 2]) / h.powi(4);
        let qv = q.eval(x[i])?;
        let r = match convention {
            Convention::Standard => a4 * d4 + qv * u[i] - lambda * u[i],
            Convention::Flipped => -a4 * d4 - lambda * u[i] - qv * u[i],
        };
        worst = worst.max(r.norm());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConventionReport {
    pub standard: f64,
    pub flipped: f64,
    /// The single convention with residual below the threshold, if exactly one is.
    pub winner: Option<Convention>,
}

impl ConventionReport {
    /// Residuals are taken on every `stride`-th sample so that at most
    /// `RESIDUAL_GRID` intervals remain.
    pub fn determine(sol: &PicardSolution, spec: &VolterraSpec) -> Result<Self> {
        let stride = ((sol.x.len() - 1) / RESIDUAL_GRID).max(1);
        let x: Vec<f64> = sol.x.iter().step_by(stride).copied().collect();
        let u: Vec<C64> = sol.u.iter().step_by(stride).copied().collect();
        let standard = ode_residual(&x, &u, spec.lambda, spec.a, &spec.q, Convention::Standard)?;
        let flipped = ode_residual(&x, &u, spec.lambda, spec.a, &spec.q, Convention::Flipped)?;
        let winner = match (standard < CONVENTION_THRESHOLD, flipped < CONVENTION_THRESHOLD) {
            (true, false) => Some(Convention::Standard),
            (false, true) => Some(Convention::Flipped),
            _ => None,
        };
        Ok(Self {
            standard,
            flipped,
            winner,
        })
    }

    /// The winner, or the convention with the smaller residual.
    pub fn preferred(&self) -> Convention {
        self.winner.unwrap_or(if self.standard <= self.flipped {
            Convention::Standard
        } else {
            Convention::Flipped
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub which: Which,
    pub lambda: C64,
    pub implied_initial_data: StateVec,
    pub convention: ConventionReport,
    pub used: Convention,
    /// `sup |u_ode - u_picard| / sup |u_picard|`.
    pub ode_match_error: f64,
    pub iterations: usize,
    pub contraction_ratio: f64,
    pub kernel_bound: f64,
}

pub fn cross_check(
    problem: &Problem,
    lambda: C64,
    which: Which,
    grid_n: usize,
    max_iter: usize,
    accuracy: f64,
) -> Result<CrossCheck> {
    let spec = VolterraSpec::new(problem, lambda, which, accuracy)?;
    let sol = picard_solve(&spec, grid_n, max_iter)?;
    let convention = ConventionReport::determine(&sol, &spec)?;
    let used = convention.preferred();
    let (x0, x1) = spec.segment;
    let y0 = spec.free_term.state(x0);
    let flipped_q;
    let (q, lam) = match used {
        Convention::Standard => (&spec.q, lambda),
        Convention::Flipped => {
            flipped_q = spec.q.negated();
            (&flipped_q, -lambda)
        }
    };
    let seg = Segment::new(x0, x1, spec.a, q)?;
    let states = integrate_dense(&seg, y0, lam, accuracy, &sol.x)?;
    let scale = sol.u.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mismatch = states
        .iter()
        .zip(&sol.u)
        .fold(0.0f64, |m, (y, u)| m.max((y.u - u).norm()));
    Ok(CrossCheck {
        which,
        lambda,
        implied_initial_data: y0,
        convention,
        used,
        ode_match_error: mismatch / scale.max(f64::MIN_POSITIVE),
        iterations: sol.iterations,
        contraction_ratio: sol.contraction_ratio,
        kernel_bound: sol.kernel_bound,
    })
}
