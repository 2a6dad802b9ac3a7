//! Classical RK4 for `a^4 u'''' + q u = lambda u` written as a first-order system.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::PotentialExpr;
use crate::problem::Problem;

pub type C64 = Complex64;

pub const DEFAULT_ACCURACY: f64 = 1e-10;
pub const MAX_STEPS: usize = 1 << 20;

const RESCALE_ABOVE: f64 = 1e100;

/// `(u, u', u'', u''')` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVec {
    pub u: C64,
    pub up: C64,
    pub upp: C64,
    pub uppp: C64,
}

impl StateVec {
    pub fn new(u: C64, up: C64, upp: C64, uppp: C64) -> Self {
        Self { u, up, upp, uppp }
    }

    pub fn real(u: f64, up: f64, upp: f64, uppp: f64) -> Self {
        Self::new(u.into(), up.into(), upp.into(), uppp.into())
    }

    pub fn from_array(v: [C64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(self) -> [C64; 4] {
        [self.u, self.up, self.upp, self.uppp]
    }

    pub fn max_norm(&self) -> f64 {
        max_norm(&self.to_array())
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(self, c: C64) -> Self {
        Self::from_array(self.to_array().map(|z| z * c))
    }

    pub fn add(self, other: Self) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        Self::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(other.scale(C64::new(-1.0, 0.0)))
    }
}

/// Part of one side of the interval, traversed from `x_from` to `x_to`.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    pub x_from: f64,
    pub x_to: f64,
    pub a: f64,
    pub q: &'a PotentialExpr,
}

impl<'a> Segment<'a> {
    pub fn new(x_from: f64, x_to: f64, a: f64, q: &'a PotentialExpr) -> Result<Self> {
        if !(x_from.is_finite() && x_to.is_finite()) || x_from == x_to {
            return Err(Error::Segment(format!(
                "endpoints must be finite and distinct, got [{x_from}, {x_to}]"
            )));
        }
        let (lo, hi) = (x_from.min(x_to), x_from.max(x_to));
        let inside = (-1.0..=0.0).contains(&lo) && (-1.0..=0.0).contains(&hi)
            || (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi);
        if !inside {
            return Err(Error::Segment(format!(
                "[{x_from}, {x_to}] must lie within [-1, 0] or [0, 1]"
            )));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Segment(format!("coefficient a = {a} must be > 0")));
        }
        Ok(Self { x_from, x_to, a, q })
    }

    /// Segment on the side of `problem` that contains both endpoints.
    /// The left side wins when both endpoints are 0.
    pub fn of(problem: &'a Problem, x_from: f64, x_to: f64) -> Result<Self> {
        if x_from <= 0.0 && x_to <= 0.0 {
            Self::new(x_from, x_to, problem.a1, &problem.q_left)
        } else {
            Self::new(x_from, x_to, problem.a2, &problem.q_right)
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            x_from: self.x_to,
            x_to: self.x_from,
            ..*self
        }
    }

    pub fn length(&self) -> f64 {
        (self.x_to - self.x_from).abs()
    }

    fn contains(&self, x: f64) -> bool {
        let (lo, hi) = (self.x_from.min(self.x_to), self.x_from.max(self.x_to));
        x >= lo && x <= hi
    }

    /// `(lambda - q(x)) / a^4`.
    pub(crate) fn coupling(&self, x: f64, lambda: C64) -> Result<C64> {
        let q = self.q.eval(x)?;
        Ok((lambda - q) / self.a.powi(4))
    }

    /// Step count to start the halving sequence from.
    pub(crate) fn initial_steps(&self, lambda: C64) -> usize {
        let mid = 0.5 * (self.x_from + self.x_to);
        let q = [self.x_from, mid, self.x_to]
            .iter()
            .filter_map(|&x| self.q.eval(x).ok())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let k = (lambda.norm() + q).sqrt().sqrt() / self.a;
        let n = (2.0 * k * self.length()).ceil().max(8.0) as usize;
        n.next_power_of_two()
    }
}

pub fn derivative(x: f64, y: &StateVec, lambda: C64, seg: &Segment) -> Result<StateVec> {
    let c = seg.coupling(x, lambda)?;
    Ok(StateVec::new(y.up, y.upp, y.uppp, c * y.u))
}

pub fn integrate(seg: &Segment, y0: StateVec, lambda: C64, accuracy: f64) -> Result<StateVec> {
    check_accuracy(accuracy)?;
    let f = |x: f64, y: &[C64; 4]| state_rhs(seg, lambda, x, y);
    let n0 = seg.initial_steps(lambda);
    let out = adaptive(&f, seg.x_from, seg.x_to, y0.to_array(), accuracy, n0, false)?;
    Ok(StateVec::from_array(out.y))
}

/// RK4 with exactly `steps` equal steps.
pub fn integrate_fixed(seg: &Segment, y0: StateVec, lambda: C64, steps: usize) -> Result<StateVec> {
    if steps == 0 || steps > MAX_STEPS {
        return Err(Error::InvalidArgument(format!("step count {steps} out of range")));
    }
    let f = |x: f64, y: &[C64; 4]| state_rhs(seg, lambda, x, y);
    let (y, _) = march(&f, seg.x_from, seg.x_to, y0.to_array(), steps, false)?;
    Ok(StateVec::from_array(y))
}

/// States at every point of `xs`, in the order given.
pub fn integrate_dense(seg: &Segment, y0: StateVec, lambda: C64, accuracy: f64, xs: &[f64]) -> Result<Vec<StateVec>> {
    check_accuracy(accuracy)?;
    if let Some(&x) = xs.iter().find(|&&x| !seg.contains(x)) {
        return Err(Error::Segment(format!(
            "sample point {x} outside [{}, {}]",
            seg.x_from, seg.x_to
        )));
    }
    let f = |x: f64, y: &[C64; 4]| state_rhs(seg, lambda, x, y);
    let n0 = seg.initial_steps(lambda);
    let steps = adaptive(&f, seg.x_from, seg.x_to, y0.to_array(), accuracy, n0, false)?.steps;
    let ts: Vec<f64> = xs.iter().map(|&x| (x - seg.x_from) / (seg.x_to - seg.x_from)).collect();
    let ys = dense(&f, seg.x_from, seg.x_to, y0.to_array(), steps, &ts)?;
    Ok(ys.into_iter().map(StateVec::from_array).collect())
}

fn check_accuracy(accuracy: f64) -> Result<()> {
    if accuracy > 0.0 && accuracy.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("accuracy {accuracy} must be > 0")))
    }
}

fn state_rhs(seg: &Segment, lambda: C64, x: f64, y: &[C64; 4]) -> Result<[C64; 4]> {
    let c = seg.coupling(x, lambda)?;
    Ok([y[1], y[2], y[3], c * y[0]])
}

pub(crate) fn max_norm<const N: usize>(y: &[C64; N]) -> f64 {
    y.iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn combo<const N: usize>(y: &[C64; N], h: f64, k: &[C64; N]) -> [C64; N] {
    std::array::from_fn(|i| y[i] + k[i] * h)
}

fn rk4_step<const N: usize, F>(f: &F, x: f64, y: &[C64; N], h: f64) -> Result<[C64; N]>
where
    F: Fn(f64, &[C64; N]) -> Result<[C64; N]>,
{
    let k1 = f(x, y)?;
    let k2 = f(x + 0.5 * h, &combo(y, 0.5 * h, &k1))?;
    let k3 = f(x + 0.5 * h, &combo(y, 0.5 * h, &k2))?;
    let k4 = f(x + h, &combo(y, h, &k3))?;
    Ok(std::array::from_fn(|i| {
        y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0)
    }))
}

fn node(x0: f64, x1: f64, i: usize, n: usize) -> f64 {
    if i == n {
        x1
    } else {
        x0 + (x1 - x0) * (i as f64 / n as f64)
    }
}

/// `n` equal RK4 steps. With `rescale`, the state is kept near unit size and
/// the natural log of the removed factor is returned alongside it.
pub(crate) fn march<const N: usize, F>(
    f: &F,
    x0: f64,
    x1: f64,
    y0: [C64; N],
    n: usize,
    rescale: bool,
) -> Result<([C64; N], f64)>
where
    F: Fn(f64, &[C64; N]) -> Result<[C64; N]>,
{
    let mut y = y0;
    let mut log_scale = 0.0;
    for i in 0..n {
        let xa = node(x0, x1, i, n);
        let xb = node(x0, x1, i + 1, n);
        y = rk4_step(f, xa, &y, xb - xa)?;
        let m = max_norm(&y);
        if !m.is_finite() {
            return Err(Error::IntegrationOverflow { x: xb });
        }
        if rescale && m > RESCALE_ABOVE {
            y = y.map(|z| z / m);
            log_scale += m.ln();
        }
    }
    Ok((y, log_scale))
}

fn dense<const N: usize, F>(f: &F, x0: f64, x1: f64, y0: [C64; N], n: usize, ts: &[f64]) -> Result<Vec<[C64; N]>>
where
    F: Fn(f64, &[C64; N]) -> Result<[C64; N]>,
{
    let mut order: Vec<usize> = (0..ts.len()).collect();
    order.sort_by(|&a, &b| ts[a].total_cmp(&ts[b]));
    let mut out = vec![[C64::new(0.0, 0.0); N]; ts.len()];
    let mut y = y0;
    let mut i = 0;
    for idx in order {
        let t = ts[idx];
        let target = ((t * n as f64).floor() as usize).min(n);
        while i < target {
            let xa = node(x0, x1, i, n);
            let xb = node(x0, x1, i + 1, n);
            y = rk4_step(f, xa, &y, xb - xa)?;
            if !max_norm(&y).is_finite() {
                return Err(Error::IntegrationOverflow { x: xb });
            }
            i += 1;
        }
        let xa = node(x0, x1, i, n);
        let x = if t >= 1.0 { x1 } else { x0 + (x1 - x0) * t };
        out[idx] = if x == xa {
            y
        } else {
            let z = rk4_step(f, xa, &y, x - xa)?;
            if !max_norm(&z).is_finite() {
                return Err(Error::IntegrationOverflow { x });
            }
            z
        };
    }
    Ok(out)
}

pub(crate) struct Adaptive<const N: usize> {
    pub y: [C64; N],
    pub log_scale: f64,
    pub steps: usize,
}

/// Doubles the step count from `n0` until two successive results agree to
/// `tol` relative to the max-norm of the finer one.
pub(crate) fn adaptive<const N: usize, F>(
    f: &F,
    x0: f64,
    x1: f64,
    y0: [C64; N],
    tol: f64,
    n0: usize,
    rescale: bool,
) -> Result<Adaptive<N>>
where
    F: Fn(f64, &[C64; N]) -> Result<[C64; N]>,
{
    let mut n = n0.clamp(1, MAX_STEPS);
    let (mut y, mut ls) = march(f, x0, x1, y0, n, rescale)?;
    loop {
        let n2 = 2 * n;
        if n2 > MAX_STEPS {
            return Err(Error::StepBudget {
                steps: n2,
                x_from: x0,
                x_to: x1,
                tolerance: tol,
            });
        }
        let (y2, ls2) = march(f, x0, x1, y0, n2, rescale)?;
        let ratio = (ls - ls2).exp();
        let diff = (0..N).fold(0.0_f64, |m, i| m.max((y2[i] - y[i] * ratio).norm()));
        let size = max_norm(&y2);
        let err = if size > 0.0 { diff / size } else { diff };
        if err <= tol {
            return Ok(Adaptive {
                y: y2,
                log_scale: ls2,
                steps: n2,
            });
        }
        n = n2;
        y = y2;
        ls = ls2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero() -> PotentialExpr {
        PotentialExpr::constant(0.0)
    }

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn derivative_examples() {
        let q0 = zero();
        let seg = Segment::new(-1.0, 0.0, 1.0, &q0).unwrap();
        let y = StateVec::real(1.0, 2.0, 3.0, 4.0);
        let d = derivative(-0.5, &y, c(0.0), &seg).unwrap();
        assert_eq!(d, StateVec::real(2.0, 3.0, 4.0, 0.0));

        let seg2 = Segment::new(-1.0, 0.0, 2.0, &q0).unwrap();
        let d = derivative(-0.5, &StateVec::real(1.0, 0.0, 0.0, 0.0), c(16.0), &seg2).unwrap();
        assert_eq!(d, StateVec::real(0.0, 0.0, 0.0, 1.0));

        let q1 = PotentialExpr::parse("1").unwrap();
        let seg3 = Segment::new(-1.0, 0.0, 1.0, &q1).unwrap();
        let d = derivative(-0.5, &StateVec::real(3.0, 0.0, 0.0, 0.0), c(1.0), &seg3).unwrap();
        assert_eq!(d, StateVec::default());
    }

    #[test]
    fn cubic_is_exact() {
        let q0 = zero();
        let seg = Segment::new(-1.0, 0.0, 1.0, &q0).unwrap();
        let y0 = StateVec::real(0.0, 0.0, 0.0, -1.0);
        let y = integrate(&seg, y0, c(0.0), DEFAULT_ACCURACY).unwrap();
        let want = StateVec::real(-1.0 / 6.0, -0.5, -1.0, -1.0);
        assert!(y.sub(want).max_norm() < 1e-14);
        let mid = integrate_dense(&seg, y0, c(0.0), DEFAULT_ACCURACY, &[-0.5]).unwrap();
        let want = StateVec::real(-1.0 / 48.0, -1.0 / 8.0, -0.5, -1.0);
        assert!(mid[0].sub(want).max_norm() < 1e-14);
    }

    #[test]
    fn dense_endpoints_consistent() {
        let q = PotentialExpr::parse("cos(3*x)").unwrap();
        let seg = Segment::new(0.0, 1.0, 1.3, &q).unwrap();
        let y0 = StateVec::new(c(1.0), C64::new(0.0, 1.0), c(-2.0), c(0.5));
        let lam = C64::new(40.0, -7.0);
        let ys = integrate_dense(&seg, y0, lam, 1e-10, &[1.0, 0.0, 0.3]).unwrap();
        assert_eq!(ys[1], y0);
        let end = integrate(&seg, y0, lam, 1e-10).unwrap();
        assert!(ys[0].sub(end).max_norm() <= 1e-14 * end.max_norm());
    }

    #[test]
    fn round_trip() {
        let q = PotentialExpr::parse("x^2").unwrap();
        let fwd = Segment::new(0.0, -1.0, 1.0, &q).unwrap();
        let y0 = StateVec::real(0.3, -1.0, 2.0, 0.7);
        let lam = C64::new(25.0, 3.0);
        let y1 = integrate(&fwd, y0, lam, 1e-12).unwrap();
        let back = integrate(&fwd.reversed(), y1, lam, 1e-12).unwrap();
        assert!(back.sub(y0).max_norm() < 1e-10);
    }

    #[test]
    fn segment_validation() {
        let q = zero();
        assert!(Segment::new(-0.5, 0.5, 1.0, &q).is_err());
        assert!(Segment::new(0.2, 0.2, 1.0, &q).is_err());
        assert!(Segment::new(0.0, 1.0, 0.0, &q).is_err());
        assert!(Segment::new(0.0, 1.5, 1.0, &q).is_err());
        assert!(Segment::new(0.0, -1.0, 1.0, &q).is_ok());
    }

    #[test]
    fn overflow_reports_position() {
        let q = zero();
        let seg = Segment::new(-1.0, 0.0, 1.0, &q).unwrap();
        let y0 = StateVec::real(1.0, 0.0, 0.0, 0.0);
        match integrate_fixed(&seg, y0, c(3000.0f64.powi(4)), 4096) {
            Err(Error::IntegrationOverflow { x }) => assert!((-1.0..=0.0).contains(&x)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn step_budget_is_an_error() {
        let q = zero();
        let seg = Segment::new(-1.0, 0.0, 1.0, &q).unwrap();
        let y0 = StateVec::real(1.0, 0.0, 0.0, 0.0);
        let r = integrate(&seg, y0, c(1.0), 1e-30);
        assert!(matches!(r, Err(Error::StepBudget { .. })), "{r:?}");
    }

    #[test]
    fn rescaled_march_tracks_log_scale() {
        let f = |_x: f64, y: &[C64; 1]| Ok([y[0] * 300.0]);
        let (y, ls) = march(&f, 0.0, 2.0, [c(1.0)], 20000, true).unwrap();
        let log_value = ls + y[0].norm().ln();
        assert!((log_value - 600.0).abs() < 1e-3, "{log_value}");
    }
}
