//! The characteristic function `W(lambda)`.
//!
//! `W` is the Wronskian of phi11, phi21, chi11, chi21. The default route
//! propagates the bivectors `phi11 ^ phi21` and `chi11 ^ chi21` and pairs
//! them. The column determinant route is kept for comparison.

use serde::{Deserialize, Serialize};

use crate::basis::{self, wronskian_of, Direction, TransmissionMap};
use crate::error::{Error, Result};
use crate::ode::{self, integrate, max_norm, Segment, StateVec, C64};
use crate::problem::{principal_fourth_root, Problem};

pub const DEFAULT_X_LEFT: f64 = -0.5;
pub const DEFAULT_X_RIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WronskianMethod {
    #[default]
    Exterior,
    Determinant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharSample {
    pub lambda: C64,
    pub s: C64,
    /// `W / exp(log_scale)`.
    pub w_scaled: C64,
    pub log_scale: f64,
    pub x_eval: f64,
}

impl CharSample {
    fn new(lambda: C64, w_scaled: C64, log_scale: f64, x_eval: f64) -> Self {
        Self {
            lambda,
            s: principal_fourth_root(lambda),
            w_scaled,
            log_scale,
            x_eval,
        }
    }

    /// `ln |W|`, `-inf` for an exact zero.
    pub fn ln_abs(&self) -> f64 {
        self.log_scale + self.w_scaled.norm().ln()
    }

    /// `W` itself; may overflow to infinity for large `|lambda|`.
    pub fn value(&self) -> C64 {
        self.w_scaled * self.log_scale.exp()
    }

    /// `|W_self - W_other| / max(|W_self|, |W_other|)` computed in the log domain.
    pub fn relative_difference(&self, other: &CharSample) -> f64 {
        let top = self.log_scale.max(other.log_scale);
        let a = self.w_scaled * (self.log_scale - top).exp();
        let b = other.w_scaled * (other.log_scale - top).exp();
        let den = a.norm().max(b.norm());
        if den == 0.0 {
            0.0
        } else {
            (a - b).norm() / den
        }
    }
}

pub(crate) type Bivector = [C64; 6];

/// Index pairs of the bivector components.
pub(crate) const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub(crate) fn wedge(u: &StateVec, v: &StateVec) -> Bivector {
    let (a, b) = (u.to_array(), v.to_array());
    PAIRS.map(|(i, j)| a[i] * b[j] - a[j] * b[i])
}

/// `det[p1, p2, q1, q2]` for `P = p1 ^ p2`, `Q = q1 ^ q2`.
pub(crate) fn pair(p: &Bivector, q: &Bivector) -> C64 {
    p[0] * q[5] - p[1] * q[4] + p[2] * q[3] + p[3] * q[2] - p[4] * q[1] + p[5] * q[0]
}

/// Second compound of a 4x4 matrix.
pub(crate) fn compound(t: &[[C64; 4]; 4]) -> [[C64; 6]; 6] {
    std::array::from_fn(|r| {
        let (i, j) = PAIRS[r];
        std::array::from_fn(|c| {
            let (k, l) = PAIRS[c];
            t[i][k] * t[j][l] - t[i][l] * t[j][k]
        })
    })
}

fn apply6(m: &[[C64; 6]; 6], p: &Bivector) -> Bivector {
    std::array::from_fn(|r| (0..6).map(|c| m[r][c] * p[c]).sum())
}

fn biv_rhs(c: C64, p: &Bivector) -> Bivector {
    [p[1], p[3] + p[2], p[4], p[4], p[5] - c * p[0], -c * p[1]]
}

/// Scales to unit max-norm; returns the natural log of the removed factor.
fn normalize<const N: usize>(y: [C64; N]) -> ([C64; N], f64) {
    let m = max_norm(&y);
    if m > 0.0 && m.is_finite() {
        (y.map(|z| z / m), m.ln())
    } else {
        (y, 0.0)
    }
}

fn propagate_biv(seg: &Segment, p0: Bivector, lambda: C64, accuracy: f64) -> Result<(Bivector, f64)> {
    let f = |x: f64, p: &Bivector| Ok(biv_rhs(seg.coupling(x, lambda)?, p));
    let n0 = seg.initial_steps(lambda);
    let out = ode::adaptive(&f, seg.x_from, seg.x_to, p0, accuracy, n0, true)?;
    let (y, l) = normalize(out.y);
    Ok((y, out.log_scale + l))
}

fn check_point(x: f64, lo: f64, hi: f64) -> Result<()> {
    if (lo..=hi).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "evaluation point {x} outside [{lo}, {hi}]"
        )))
    }
}

pub fn wronskian_left(
    problem: &Problem,
    lambda: C64,
    x: f64,
    accuracy: f64,
    method: WronskianMethod,
) -> Result<CharSample> {
    check_point(x, -1.0, 0.0)?;
    match method {
        WronskianMethod::Exterior => exterior(problem, lambda, x, true, accuracy),
        WronskianMethod::Determinant => determinant(problem, lambda, x, true, accuracy),
    }
}

pub fn wronskian_right(
    problem: &Problem,
    lambda: C64,
    x: f64,
    accuracy: f64,
    method: WronskianMethod,
) -> Result<CharSample> {
    check_point(x, 0.0, 1.0)?;
    match method {
        WronskianMethod::Exterior => exterior(problem, lambda, x, false, accuracy),
        WronskianMethod::Determinant => determinant(problem, lambda, x, false, accuracy),
    }
}

pub fn char_fn(problem: &Problem, lambda: C64, accuracy: f64) -> Result<CharSample> {
    char_fn_at(problem, lambda, DEFAULT_X_LEFT, accuracy)
}

pub fn char_fn_at(problem: &Problem, lambda: C64, x_eval: f64, accuracy: f64) -> Result<CharSample> {
    if x_eval <= 0.0 {
        wronskian_left(problem, lambda, x_eval, accuracy, WronskianMethod::Exterior)
    } else {
        wronskian_right(problem, lambda, x_eval, accuracy, WronskianMethod::Exterior)
    }
}

/// `left` selects the left pieces (`W1`), otherwise the right ones (`W2`).
fn exterior(problem: &Problem, lambda: C64, x: f64, left: bool, accuracy: f64) -> Result<CharSample> {
    let [p1, p2] = basis::phi_initial(problem);
    let [c1, c2] = basis::chi_terminal(lambda);
    let to = if left { -x.abs() } else { x.abs() };
    let (p, lp) = carry_side(problem, lambda, -1.0, to, wedge(&p1, &p2), accuracy)?;
    let (q, lq) = carry_side(problem, lambda, 1.0, to, wedge(&c1, &c2), accuracy)?;
    Ok(CharSample::new(lambda, pair(&p, &q), lp + lq, x))
}

/// Carries a bivector from the endpoint `from` to `to`, transmitting across
/// x = 0 when the sides differ. `to = -0.0` denotes the left limit at 0.
fn carry_side(
    problem: &Problem,
    lambda: C64,
    from: f64,
    to: f64,
    p0: Bivector,
    accuracy: f64,
) -> Result<(Bivector, f64)> {
    let to_left = to < 0.0 || (to == 0.0 && to.is_sign_negative());
    let (mut p, mut log) = normalize(p0);
    let mut at = from;
    if (from < 0.0) != to_left {
        let seg = Segment::of(problem, from, 0.0)?;
        let (q, l) = propagate_biv(&seg, p, lambda, accuracy)?;
        let dir = if to_left {
            Direction::Backward
        } else {
            Direction::Forward
        };
        let t = TransmissionMap::new(problem, lambda, dir).matrix();
        let (q, l2) = normalize(apply6(&compound(&t), &q));
        p = q;
        log += l + l2;
        at = 0.0;
    }
    if at != to {
        let seg = Segment::of(problem, at, to)?;
        let (q, l) = propagate_biv(&seg, p, lambda, accuracy)?;
        p = q;
        log += l;
    }
    Ok((p, log))
}

fn determinant(problem: &Problem, lambda: C64, x: f64, left: bool, accuracy: f64) -> Result<CharSample> {
    let [p1, p2] = basis::phi_initial(problem);
    let [c1, c2] = basis::chi_terminal(lambda);
    let mut cols = [StateVec::default(); 4];
    let mut log = 0.0;
    for (i, y0) in [p1, p2].into_iter().enumerate() {
        let (y, l) = state_column(problem, lambda, -1.0, x, left, y0, accuracy)?;
        cols[i] = y;
        log += l;
    }
    for (i, y0) in [c1, c2].into_iter().enumerate() {
        let (y, l) = state_column(problem, lambda, 1.0, x, left, y0, accuracy)?;
        cols[2 + i] = y;
        log += l;
    }
    Ok(CharSample::new(lambda, wronskian_of(&cols), log, x))
}

/// Carries a state from an endpoint to `x` on the requested side, rescaling
/// to unit max-norm at 0 and at `x`.
fn state_column(
    problem: &Problem,
    lambda: C64,
    from: f64,
    x: f64,
    left: bool,
    y0: StateVec,
    accuracy: f64,
) -> Result<(StateVec, f64)> {
    let unit = |y: StateVec| {
        let (a, l) = normalize(y.to_array());
        (StateVec::from_array(a), l)
    };
    let starts_left = from < 0.0;
    let mut log = 0.0;
    let mut y = y0;
    let mut at = from;
    if starts_left != left {
        y = integrate(&Segment::of(problem, from, 0.0)?, y, lambda, accuracy)?;
        let dir = if left { Direction::Backward } else { Direction::Forward };
        y = TransmissionMap::new(problem, lambda, dir).apply(y);
        let (z, l) = unit(y);
        y = z;
        log += l;
        at = 0.0;
    }
    if at != x {
        let seg = if left {
            Segment::new(at, x, problem.a1, &problem.q_left)?
        } else {
            Segment::new(at, x, problem.a2, &problem.q_right)?
        };
        y = integrate(&seg, y, lambda, accuracy)?;
    }
    let (z, l) = unit(y);
    Ok((z, log + l))
}

/// Largest pairwise relative difference of `W` over the given points.
pub fn wronskian_spread(
    problem: &Problem,
    lambda: C64,
    xs: &[f64],
    accuracy: f64,
    method: WronskianMethod,
) -> Result<f64> {
    let mut samples = Vec::with_capacity(xs.len());
    for &x in xs {
        samples.push(if x <= 0.0 {
            wronskian_left(problem, lambda, x, accuracy, method)?
        } else {
            wronskian_right(problem, lambda, x, accuracy, method)?
        });
    }
    let mut worst = 0.0_f64;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            worst = worst.max(samples[i].relative_difference(&samples[j]));
        }
    }
    Ok(worst)
}

/// The 8x8 matrix of the conditions `L1..L8` applied to
/// `c1 phi11 + c2 phi21 + c3 chi11 + c4 chi21` on the left and
/// `c5 phi12 + c6 phi22 + c7 chi12 + c8 chi22` on the right.
pub fn system_matrix(problem: &Problem, lambda: C64, accuracy: f64) -> Result<[[C64; 8]; 8]> {
    let (p1, p2) = basis::launch_phi(problem, lambda, accuracy)?;
    let (c1, c2) = basis::launch_chi(problem, lambda, accuracy)?;
    let sols = [p1, p2, c1, c2];
    let z = C64::new(0.0, 0.0);
    let mut m = [[z; 8]; 8];
    let (b1, b2, d1, d2) = (problem.beta1, problem.beta2, problem.delta1, problem.delta2);
    for (j, s) in sols.iter().enumerate() {
        let (m1, zm, zp, p) = (s.at_minus1, s.at_zero_minus, s.at_zero_plus, s.at_plus1);
        // Left-piece column j, right-piece column j + 4.
        m[0][j] = m1.u;
        m[1][j] = m1.up * b1 + m1.upp * b2;
        m[2][j] = -zm.u;
        m[3][j] = -zm.up;
        m[4][j] = -zm.upp + lambda * d1 * zm.up;
        m[5][j] = -zm.uppp + lambda * d2 * zm.u;
        m[2][j + 4] = zp.u;
        m[3][j + 4] = zp.up;
        m[4][j + 4] = zp.upp;
        m[5][j + 4] = zp.uppp;
        m[6][j + 4] = lambda * p.u + p.uppp;
        m[7][j + 4] = lambda * p.up + p.upp;
    }
    Ok(m)
}

/// Determinant by LU with partial pivoting.
pub fn det_lu<const N: usize>(mut m: [[C64; N]; N]) -> C64 {
    let mut det = C64::new(1.0, 0.0);
    for k in 0..N {
        let piv = (k..N)
            .max_by(|&a, &b| m[a][k].norm().total_cmp(&m[b][k].norm()))
            .unwrap_or(k);
        if m[piv][k].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if piv != k {
            m.swap(piv, k);
            det = -det;
        }
        det *= m[k][k];
        for r in k + 1..N {
            let f = m[r][k] / m[k][k];
            for c in k..N {
                let v = m[k][c];
                m[r][c] -= f * v;
            }
        }
    }
    det
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemCheck {
    pub lambda: C64,
    pub det: C64,
    pub w: C64,
    /// `det / W^3`.
    pub ratio: C64,
}

pub fn system_check(problem: &Problem, lambda: C64, accuracy: f64) -> Result<SystemCheck> {
    let det = det_lu(system_matrix(problem, lambda, accuracy)?);
    let w = char_fn(problem, lambda, accuracy)?.value();
    Ok(SystemCheck {
        lambda,
        det,
        w,
        ratio: det / (w * w * w),
    })
}
