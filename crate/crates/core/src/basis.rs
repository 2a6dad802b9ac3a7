//! Fundamental solutions launched from either end and carried across x = 0.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate, integrate_dense, Segment, StateVec, C64};
use crate::problem::Problem;

/// Relative 2x2 determinant above which a lambda is not treated as an eigenvalue.
pub const NULL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// 0- to 0+
    Forward,
    /// 0+ to 0-
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Side {
    pub fn tag(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionMap {
    pub lambda: C64,
    pub delta1: f64,
    pub delta2: f64,
    pub direction: Direction,
}

impl TransmissionMap {
    pub fn new(problem: &Problem, lambda: C64, direction: Direction) -> Self {
        Self {
            lambda,
            delta1: problem.delta1,
            delta2: problem.delta2,
            direction,
        }
    }

    fn sign(&self) -> f64 {
        match self.direction {
            Direction::Forward => -1.0,
            Direction::Backward => 1.0,
        }
    }

    pub fn matrix(&self) -> [[C64; 4]; 4] {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let mut m = [[zero; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = one;
        }
        m[2][1] = self.lambda * (self.sign() * self.delta1);
        m[3][0] = self.lambda * (self.sign() * self.delta2);
        m
    }

    pub fn inverse(&self) -> Self {
        let direction = match self.direction {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        };
        Self { direction, ..*self }
    }

    pub fn apply(&self, y: StateVec) -> StateVec {
        let s = self.sign();
        StateVec::new(
            y.u,
            y.up,
            y.upp + self.lambda * (s * self.delta1) * y.up,
            y.uppp + self.lambda * (s * self.delta2) * y.u,
        )
    }

    pub fn determinant(&self) -> C64 {
        det4(&self.matrix())
    }
}

pub fn apply_transmission(map: &TransmissionMap, y: StateVec) -> StateVec {
    map.apply(y)
}

/// Leibniz expansion; exact on triangular-pattern matrices.
pub fn det4(m: &[[C64; 4]; 4]) -> C64 {
    let minor = |r: usize, c: usize| -> C64 {
        // 2x2 determinant of rows {2,3} and columns {r,c}.
        m[2][r] * m[3][c] - m[2][c] * m[3][r]
    };
    let mut total = C64::new(0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            if a == b {
                continue;
            }
            let rest: Vec<usize> = (0..4).filter(|&k| k != a && k != b).collect();
            let sign = perm_sign(&[a, b, rest[0], rest[1]]);
            let p = m[0][a] * m[1][b];
            if p != C64::new(0.0, 0.0) {
                total += p * minor(rest[0], rest[1]) * sign;
            }
        }
    }
    total
}

fn perm_sign(p: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Determinant of the 4x4 matrix whose columns are the given states.
pub fn wronskian_of(cols: &[StateVec; 4]) -> C64 {
    let a = cols.map(|c| c.to_array());
    let m: [[C64; 4]; 4] = std::array::from_fn(|r| std::array::from_fn(|c| a[c][r]));
    det4(&m)
}

/// One solution on both segments, stored by its states at -1, 0-, 0+ and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseSolution {
    pub lambda: C64,
    pub at_minus1: StateVec,
    pub at_zero_minus: StateVec,
    pub at_zero_plus: StateVec,
    pub at_plus1: StateVec,
    /// Launched from x = -1 (phi) or x = 1 (chi).
    pub launched_from: Side,
    pub accuracy: f64,
}

impl PiecewiseSolution {
    fn from_left(problem: &Problem, lambda: C64, y0: StateVec, accuracy: f64) -> Result<Self> {
        let left = Segment::new(-1.0, 0.0, problem.a1, &problem.q_left)?;
        let zm = integrate(&left, y0, lambda, accuracy)?;
        let zp = TransmissionMap::new(problem, lambda, Direction::Forward).apply(zm);
        let right = Segment::new(0.0, 1.0, problem.a2, &problem.q_right)?;
        let p1 = integrate(&right, zp, lambda, accuracy)?;
        Ok(Self {
            lambda,
            at_minus1: y0,
            at_zero_minus: zm,
            at_zero_plus: zp,
            at_plus1: p1,
            launched_from: Side::Left,
            accuracy,
        })
    }

    fn from_right(problem: &Problem, lambda: C64, y1: StateVec, accuracy: f64) -> Result<Self> {
        let right = Segment::new(1.0, 0.0, problem.a2, &problem.q_right)?;
        let zp = integrate(&right, y1, lambda, accuracy)?;
        let zm = TransmissionMap::new(problem, lambda, Direction::Backward).apply(zp);
        let left = Segment::new(0.0, -1.0, problem.a1, &problem.q_left)?;
        let m1 = integrate(&left, zm, lambda, accuracy)?;
        Ok(Self {
            lambda,
            at_minus1: m1,
            at_zero_minus: zm,
            at_zero_plus: zp,
            at_plus1: y1,
            launched_from: Side::Right,
            accuracy,
        })
    }

    /// Segment and starting state used to evaluate the piece on `side`.
    fn anchor<'a>(&self, problem: &'a Problem, side: Side, x: f64) -> Result<(Segment<'a>, StateVec)> {
        let (from, y0) = match (self.launched_from, side) {
            (Side::Left, Side::Left) => (-1.0, self.at_minus1),
            (Side::Left, Side::Right) => (0.0, self.at_zero_plus),
            (Side::Right, Side::Left) => (0.0, self.at_zero_minus),
            (Side::Right, Side::Right) => (1.0, self.at_plus1),
        };
        let to = match side {
            Side::Left => {
                if from == -1.0 {
                    0.0
                } else {
                    -1.0
                }
            }
            Side::Right => {
                if from == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        let ok = match side {
            Side::Left => (-1.0..=0.0).contains(&x),
            Side::Right => (0.0..=1.0).contains(&x),
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("x = {x} not on the {side:?} segment")));
        }
        let seg = match side {
            Side::Left => Segment::new(from, to, problem.a1, &problem.q_left)?,
            Side::Right => Segment::new(from, to, problem.a2, &problem.q_right)?,
        };
        Ok((seg, y0))
    }

    pub fn state_at(&self, problem: &Problem, side: Side, x: f64) -> Result<StateVec> {
        let (seg, y0) = self.anchor(problem, side, x)?;
        if x == seg.x_from {
            return Ok(y0);
        }
        let part = Segment::new(seg.x_from, x, seg.a, seg.q)?;
        integrate(&part, y0, self.lambda, self.accuracy)
    }

    pub fn states_at(&self, problem: &Problem, side: Side, xs: &[f64]) -> Result<Vec<StateVec>> {
        if xs.is_empty() {
            return Ok(Vec::new());
        }
        let (seg, y0) = self.anchor(problem, side, xs[0])?;
        integrate_dense(&seg, y0, self.lambda, self.accuracy, xs)
    }

    /// Values of the eight conditions for this solution.
    pub fn conditions(&self, problem: &Problem) -> Conditions {
        Conditions::evaluate(
            problem,
            self.lambda,
            [self.at_minus1, self.at_zero_minus, self.at_zero_plus, self.at_plus1],
        )
    }

    fn combine(&self, other: &Self, k: C64, l: C64) -> Self {
        let mix = |a: StateVec, b: StateVec| a.scale(k).add(b.scale(l));
        Self {
            at_minus1: mix(self.at_minus1, other.at_minus1),
            at_zero_minus: mix(self.at_zero_minus, other.at_zero_minus),
            at_zero_plus: mix(self.at_zero_plus, other.at_zero_plus),
            at_plus1: mix(self.at_plus1, other.at_plus1),
            ..*self
        }
    }
}

/// `(phi_1, phi_2)`: (phi11 | phi12) and (phi21 | phi22).
pub fn launch_phi(problem: &Problem, lambda: C64, accuracy: f64) -> Result<(PiecewiseSolution, PiecewiseSolution)> {
    let [p1, p2] = phi_initial(problem);
    Ok((
        PiecewiseSolution::from_left(problem, lambda, p1, accuracy)?,
        PiecewiseSolution::from_left(problem, lambda, p2, accuracy)?,
    ))
}

/// `(chi_1, chi_2)`: (chi11 | chi12) and (chi21 | chi22).
pub fn launch_chi(problem: &Problem, lambda: C64, accuracy: f64) -> Result<(PiecewiseSolution, PiecewiseSolution)> {
    let [c1, c2] = chi_terminal(lambda);
    Ok((
        PiecewiseSolution::from_right(problem, lambda, c1, accuracy)?,
        PiecewiseSolution::from_right(problem, lambda, c2, accuracy)?,
    ))
}

pub fn phi_initial(problem: &Problem) -> [StateVec; 2] {
    [
        StateVec::real(0.0, 0.0, 0.0, -1.0),
        StateVec::real(0.0, problem.beta2, -problem.beta1, 0.0),
    ]
}

pub fn chi_terminal(lambda: C64) -> [StateVec; 2] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    [StateVec::new(-one, z, z, lambda), StateVec::new(z, -one, lambda, z)]
}

/// States of the eight fundamental solutions at one point per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalBasis {
    pub lambda: C64,
    pub x_left: f64,
    pub x_right: f64,
    /// phi11, phi21, chi11, chi21 at `x_left`.
    pub left: [StateVec; 4],
    /// phi12, phi22, chi12, chi22 at `x_right`.
    pub right: [StateVec; 4],
}

impl FundamentalBasis {
    pub fn new(problem: &Problem, lambda: C64, x_left: f64, x_right: f64, accuracy: f64) -> Result<Self> {
        let (p1, p2) = launch_phi(problem, lambda, accuracy)?;
        let (c1, c2) = launch_chi(problem, lambda, accuracy)?;
        let sols = [p1, p2, c1, c2];
        let mut left = [StateVec::default(); 4];
        let mut right = [StateVec::default(); 4];
        for (i, s) in sols.iter().enumerate() {
            left[i] = s.state_at(problem, Side::Left, x_left)?;
            right[i] = s.state_at(problem, Side::Right, x_right)?;
        }
        Ok(Self {
            lambda,
            x_left,
            x_right,
            left,
            right,
        })
    }
}

/// The eight condition values `L1..L8` and their size-relative residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditions {
    pub values: [C64; 8],
    pub relative: [f64; 8],
}

impl Conditions {
    /// `states` are at -1, 0-, 0+ and 1. Each residual is `|L(y)|` over the
    /// coefficient sum of `L` times the state norm at its point.
    pub fn evaluate(problem: &Problem, lambda: C64, states: [StateVec; 4]) -> Self {
        let [m1, zm, zp, p1] = states;
        let lam = lambda.norm();
        let iface = zm.max_norm().max(zp.max_norm());
        let values = [
            m1.u,
            m1.up * problem.beta1 + m1.upp * problem.beta2,
            zp.u - zm.u,
            zp.up - zm.up,
            zp.upp - zm.upp + lambda * problem.delta1 * zm.up,
            zp.uppp - zm.uppp + lambda * problem.delta2 * zm.u,
            lambda * p1.u + p1.uppp,
            lambda * p1.up + p1.upp,
        ];
        let scales = [
            m1.max_norm(),
            (problem.beta1.abs() + problem.beta2.abs()) * m1.max_norm(),
            2.0 * iface,
            2.0 * iface,
            (2.0 + lam * problem.delta1.abs()) * iface,
            (2.0 + lam * problem.delta2.abs()) * iface,
            (1.0 + lam) * p1.max_norm(),
            (1.0 + lam) * p1.max_norm(),
        ];
        let mut relative = [0.0; 8];
        for i in 0..8 {
            relative[i] = values[i].norm() / scales[i].max(f64::MIN_POSITIVE);
        }
        Self { values, relative }
    }

    pub fn max_relative(&self) -> f64 {
        self.relative.iter().fold(0.0, |m, &v| m.max(v))
    }
}

/// `[[L1 chi11, L1 chi21], [L2 chi11, L2 chi21]]`.
pub fn left_system(problem: &Problem, lambda: C64, accuracy: f64) -> Result<[[C64; 2]; 2]> {
    let (c1, c2) = launch_chi(problem, lambda, accuracy)?;
    Ok(left_system_of(problem, &c1, &c2))
}

fn left_system_of(problem: &Problem, c1: &PiecewiseSolution, c2: &PiecewiseSolution) -> [[C64; 2]; 2] {
    let l2 = |y: &StateVec| y.up * problem.beta1 + y.upp * problem.beta2;
    [[c1.at_minus1.u, c2.at_minus1.u], [l2(&c1.at_minus1), l2(&c2.at_minus1)]]
}

/// `|det S| / (|S00 S11| + |S01 S10|)`, 0 for the zero matrix.
pub fn singularity_measure(s: &[[C64; 2]; 2]) -> f64 {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let scale = (s[0][0] * s[1][1]).norm() + (s[0][1] * s[1][0]).norm();
    if scale == 0.0 {
        0.0
    } else {
        det.norm() / scale
    }
}

/// Null direction from the larger-magnitude row, normalized to unit length.
pub fn null_direction_of(s: &[[C64; 2]; 2]) -> (C64, C64) {
    let row_norm = |r: &[C64; 2]| r[0].norm_sqr() + r[1].norm_sqr();
    let row = if row_norm(&s[0]) >= row_norm(&s[1]) { s[0] } else { s[1] };
    let n = row_norm(&row).sqrt();
    if n == 0.0 {
        return (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    }
    (row[1] / n, -row[0] / n)
}

pub fn null_direction(problem: &Problem, lambda: C64, accuracy: f64) -> Result<(C64, C64)> {
    let s = left_system(problem, lambda, accuracy)?;
    check_singular(lambda, &s)?;
    Ok(null_direction_of(&s))
}

fn check_singular(lambda: C64, s: &[[C64; 2]; 2]) -> Result<f64> {
    let measure = singularity_measure(s);
    if measure > NULL_TOLERANCE {
        return Err(Error::NotAnEigenvalue {
            lambda: lambda.to_string(),
            measure,
        });
    }
    Ok(measure)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSample {
    pub x: f64,
    pub u: C64,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenfunction {
    pub lambda: C64,
    pub k3: C64,
    pub k4: C64,
    pub samples: Vec<EigenSample>,
    /// L1..L8 of the normalized eigenfunction.
    pub conditions: Conditions,
    pub singularity: f64,
}

/// Samples `k3 chi_1 + k4 chi_2`, scaled so the largest sample equals 1.
/// A point at x = 0 yields one sample per side.
pub fn eigenfunction(
    problem: &Problem,
    lambda: C64,
    k3: C64,
    k4: C64,
    xs: &[f64],
    accuracy: f64,
) -> Result<Eigenfunction> {
    if k3 == C64::new(0.0, 0.0) && k4 == C64::new(0.0, 0.0) {
        return Err(Error::InvalidArgument("null direction (k3, k4) is zero".into()));
    }
    if let Some(x) = xs.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
        return Err(Error::InvalidArgument(format!("sample point {x} outside [-1, 1]")));
    }
    let (c1, c2) = launch_chi(problem, lambda, accuracy)?;
    let singularity = check_singular(lambda, &left_system_of(problem, &c1, &c2))?;
    let u = c1.combine(&c2, k3, k4);

    let left_xs: Vec<f64> = xs.iter().copied().filter(|&x| x <= 0.0).collect();
    let right_xs: Vec<f64> = xs.iter().copied().filter(|&x| x >= 0.0).collect();
    let mut samples = Vec::with_capacity(xs.len() + 1);
    for (side, pts) in [(Side::Left, &left_xs), (Side::Right, &right_xs)] {
        for (x, y) in pts.iter().zip(u.states_at(problem, side, pts)?) {
            samples.push(EigenSample { x: *x, u: y.u, side });
        }
    }
    samples.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.side.cmp(&b.side)));

    let peak = samples
        .iter()
        .map(|p| p.u)
        .fold(C64::new(0.0, 0.0), |m, v| if v.norm() > m.norm() { v } else { m });
    let norm = if peak.norm() > 0.0 { peak } else { C64::new(1.0, 0.0) };
    for p in &mut samples {
        p.u /= norm;
    }
    let scaled = u.combine(&u, 1.0 / norm, C64::new(0.0, 0.0));
    Ok(Eigenfunction {
        lambda,
        k3,
        k4,
        samples,
        conditions: scaled.conditions(problem),
        singularity,
    })
}

pub fn eigenfunction_csv(samples: &[EigenSample]) -> String {
    let mut out = String::from("x,re_u,im_u,side\n");
    for p in samples {
        let _ = writeln!(out, "{},{},{},{}", p.x, p.u.re, p.u.im, p.side.tag());
    }
    out
}
