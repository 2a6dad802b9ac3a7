//! Finite-difference discretization of the augmented operator, solved as a
//! dense eigenproblem.
//!
//! Unknowns: `f` at the `N` interior points of each half-grid, then
//! `f(0)`, `f'(0)`, `f(1)`, `f'(1)`. The operator is stored as a pencil
//! `A v = lambda B v`, where `B v` is the augmented vector
//! `(f, h4, h3, h1, h2)` with `h1 = f(1)`, `h2 = f'(1)`, `h3 = -delta1 f'(0)`,
//! `h4 = -delta2 f(0)`.

use nalgebra::{DMatrix, DVector, Schur, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::C64;
use crate::problem::Problem;

pub const MIN_N: usize = 8;
/// Monomials in the one-sided fits: two boundary functionals plus four values.
const FIT_SIZE: usize = 6;
const SHIFTS: [f64; 3] = [-0.3712, 0.6180, -2.2361];
const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub n: usize,
    pub h: f64,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        2 * self.n + 4
    }

    /// Index of `f(0)`.
    pub fn g0(&self) -> usize {
        2 * self.n
    }

    /// Index of `f'(0)`.
    pub fn g1(&self) -> usize {
        2 * self.n + 1
    }

    /// Index of `f(1)`.
    pub fn p0(&self) -> usize {
        2 * self.n + 2
    }

    /// Index of `f'(1)`.
    pub fn p1(&self) -> usize {
        2 * self.n + 3
    }

    /// Grid abscissae of the first `2N` unknowns.
    pub fn grid(&self) -> Vec<f64> {
        let left = (1..=self.n).map(|i| -1.0 + i as f64 * self.h);
        let right = (1..=self.n).map(|i| i as f64 * self.h);
        left.chain(right).collect()
    }

    /// `A B^-1`, the standard form; `None` when `B` is singular.
    pub fn standard_matrix(&self) -> Option<DMatrix<f64>> {
        let b_inv = self.b.clone().try_inverse()?;
        Some(&self.a * b_inv)
    }
}

/// `d^k/dx^k x^p` at `x` for `p = 0..FIT_SIZE`.
fn monomial_derivative(x: f64, k: usize) -> [f64; FIT_SIZE] {
    let mut row = [0.0; FIT_SIZE];
    for (p, r) in row.iter_mut().enumerate() {
        if p >= k {
            let falling: f64 = ((p - k + 1)..=p).map(|v| v as f64).product();
            *r = falling * x.powi((p - k) as i32);
        }
    }
    row
}

/// One-sided approximation of the `d`-th derivative at `x_eval`: the unique
/// combination of the given functionals that is exact on polynomials of
/// degree below `FIT_SIZE`. Returns a row over the unknowns.
fn fit_row(functionals: &[([f64; FIT_SIZE], DVector<f64>)], x_eval: f64, d: usize, dim: usize) -> Result<DVector<f64>> {
    let v = DMatrix::from_fn(FIT_SIZE, FIT_SIZE, |r, c| functionals[c].0[r]);
    let target = DVector::from_row_slice(&monomial_derivative(x_eval, d));
    let w = LU::new(v)
        .solve(&target)
        .ok_or_else(|| Error::Eigen("singular one-sided fit".into()))?;
    let mut row = DVector::zeros(dim);
    for (wi, (_, vec)) in w.iter().zip(functionals) {
        row.axpy(*wi, vec, 1.0);
    }
    Ok(row)
}

pub fn discretize(problem: &Problem, n: usize) -> Result<DiscreteOperator> {
    if n < MIN_N {
        return Err(Error::InvalidArgument(format!(
            "N = {n} is below the stencil minimum {MIN_N}"
        )));
    }
    let dim = 2 * n + 4;
    let h = 1.0 / (n as f64 + 1.0);
    let (g0, g1, p0, p1) = (2 * n, 2 * n + 1, 2 * n + 2, 2 * n + 3);
    let e = |i: usize| {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        v
    };
    let zero = DVector::<f64>::zeros(dim);
    // f on the left half-grid, k = 0..=N+1 with x = -1 + k h.
    let f_left = |k: usize| match k {
        0 => zero.clone(),
        k if k <= n => e(k - 1),
        _ => e(g0),
    };
    // f on the right half-grid, k = 0..=N+1 with x = k h.
    let f_right = |k: usize| match k {
        0 => e(g0),
        k if k <= n => e(n + k - 1),
        _ => e(p0),
    };
    let m = FIT_SIZE - 2;
    let value = |x: f64| monomial_derivative(x, 0);
    let combine = |a: [f64; FIT_SIZE], ca: f64, b: [f64; FIT_SIZE], cb: f64| {
        let mut r = [0.0; FIT_SIZE];
        for i in 0..FIT_SIZE {
            r[i] = ca * a[i] + cb * b[i];
        }
        r
    };

    // Origins: x = -1 for the left boundary, 0 for the interface, 1 for the right end.
    let mut left_bc = vec![
        (value(0.0), zero.clone()),
        (
            combine(
                monomial_derivative(0.0, 1),
                problem.beta1,
                monomial_derivative(0.0, 2),
                problem.beta2,
            ),
            zero.clone(),
        ),
    ];
    left_bc.extend((1..=m).map(|k| (value(k as f64 * h), f_left(k))));
    let iface = [(value(0.0), e(g0)), (monomial_derivative(0.0, 1), e(g1))];
    let mut iface_left = iface.to_vec();
    iface_left.extend((1..=m).map(|k| (value(-(k as f64) * h), f_left(n + 1 - k))));
    let mut iface_right = iface.to_vec();
    iface_right.extend((1..=m).map(|k| (value(k as f64 * h), f_right(k))));
    let mut right_bc = vec![(value(0.0), e(p0)), (monomial_derivative(0.0, 1), e(p1))];
    right_bc.extend((1..=m).map(|k| (value(-(k as f64) * h), f_right(n + 1 - k))));

    let stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
    let central = |f: &dyn Fn(usize) -> DVector<f64>, i: usize| {
        let mut row = DVector::zeros(dim);
        for (j, c) in stencil.iter().enumerate() {
            row.axpy(*c / h.powi(4), &f(i + j - 2), 1.0);
        }
        row
    };

    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DMatrix::<f64>::identity(dim, dim);
    let (a1_4, a2_4) = (problem.a1.powi(4), problem.a2.powi(4));
    for i in 1..=n {
        let row_l = if i == 1 {
            fit_row(&left_bc, h, 4, dim)?
        } else if i == n {
            fit_row(&iface_left, -h, 4, dim)?
        } else {
            central(&f_left, i)
        };
        let row_r = if i == 1 {
            fit_row(&iface_right, h, 4, dim)?
        } else if i == n {
            fit_row(&right_bc, -h, 4, dim)?
        } else {
            central(&f_right, i)
        };
        a.set_row(i - 1, &(row_l * a1_4).transpose());
        a.set_row(n + i - 1, &(row_r * a2_4).transpose());
        let (xl, xr) = (-1.0 + i as f64 * h, i as f64 * h);
        a[(i - 1, i - 1)] += problem.q_left.eval(xl)?;
        a[(n + i - 1, n + i - 1)] += problem.q_right.eval(xr)?;
    }
    let jump = |d: usize| -> Result<DVector<f64>> {
        Ok(fit_row(&iface_right, 0.0, d, dim)? - fit_row(&iface_left, 0.0, d, dim)?)
    };
    a.set_row(g1, &jump(2)?.transpose());
    a.set_row(g0, &jump(3)?.transpose());
    a.set_row(p0, &(-fit_row(&right_bc, 0.0, 3, dim)?).transpose());
    a.set_row(p1, &(-fit_row(&right_bc, 0.0, 2, dim)?).transpose());
    b[(g1, g1)] = -problem.delta1;
    b[(g0, g0)] = -problem.delta2;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite matrix entry".into()));
    }
    Ok(DiscreteOperator { n, h, a, b })
}

/// All finite eigenvalues, by shift-invert around a fixed real shift.
pub fn all_eigenvalues(op: &DiscreteOperator) -> Result<Vec<C64>> {
    for sigma in SHIFTS {
        let shifted = &op.a - &op.b * sigma;
        let Some(c) = LU::new(shifted).solve(&op.b) else {
            continue;
        };
        if c.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let schur = Schur::try_new(c, SCHUR_EPS, SCHUR_MAX_ITER).ok_or_else(|| {
            Error::Eigen(format!(
                "Schur iteration did not converge within {SCHUR_MAX_ITER} sweeps (dimension {})",
                op.dim()
            ))
        })?;
        let mu = schur.complex_eigenvalues();
        let mu_max = mu.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        return Ok(mu
            .iter()
            .filter(|z| z.norm() > 1e-12 * mu_max)
            .map(|z| C64::new(sigma, 0.0) + z.inv())
            .collect());
    }
    Err(Error::Eigen("every trial shift is singular".into()))
}

/// The `k` eigenvalues of smallest modulus, sorted by real then imaginary part.
pub fn solve_discrete(op: &DiscreteOperator, k: usize) -> Result<Vec<C64>> {
    if k > op.dim() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds dimension {}",
            op.dim()
        )));
    }
    let mut all = all_eigenvalues(op)?;
    all.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
    all.truncate(k);
    all.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(all)
}

/// Eigenvector for an (approximate) eigenvalue by inverse iteration, scaled so
/// its largest component is 1.
pub fn eigenvector(op: &DiscreteOperator, lambda: C64) -> Result<DVector<C64>> {
    let to_c = |m: &DMatrix<f64>| m.map(|v| C64::new(v, 0.0));
    let (a, b) = (to_c(&op.a), to_c(&op.b));
    let shift = lambda + C64::new(1e-10 * (1.0 + lambda.norm()), 0.0);
    let lu = LU::new(&a - &b * shift);
    let mut v = DVector::from_element(op.dim(), C64::new(1.0, 0.0));
    for _ in 0..4 {
        v = lu
            .solve(&(&b * &v))
            .ok_or_else(|| Error::Eigen("inverse iteration hit a singular shift".into()))?;
        let peak = v
            .iter()
            .copied()
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap_or_default();
        if peak.norm() == 0.0 || !peak.norm().is_finite() {
            return Err(Error::Eigen("inverse iteration collapsed".into()));
        }
        v /= peak;
    }
    Ok(v)
}

/// Relative residuals of the four augmentation rows `(f(0) row, f'(0) row,
/// f(1) row, f'(1) row)` for an eigenpair.
pub fn augmentation_residuals(op: &DiscreteOperator, lambda: C64, v: &DVector<C64>) -> [f64; 4] {
    let rows = [op.g0(), op.g1(), op.p0(), op.p1()];
    rows.map(|r| {
        let mut av = C64::new(0.0, 0.0);
        let mut size = 0.0;
        for j in 0..op.dim() {
            let t = v[j] * op.a[(r, j)];
            av += t;
            size += t.norm();
        }
        let bv = lambda * v[r] * op.b[(r, r)];
        (av - bv).norm() / (size + bv.norm()).max(f64::MIN_POSITIVE)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    /// `(1/a1^4, 1/a2^4)` on the grid and `(1, -1, 1/delta1, -1/delta2)` on `(h1, h2, h3, h4)`,
    /// the weights under which Green's identity cancels every boundary term.
    Derived,
    /// `(1/a1^4, 1/a2^4)` on the grid and `(1, 1, 1/delta1, 1/delta2)`.
    Literal,
}

/// Diagonal weights on the augmented vector `B v`, grid entries times `h`.
pub fn symmetry_weights(op: &DiscreteOperator, problem: &Problem, kind: WeightKind) -> Result<DVector<f64>> {
    if problem.delta1 == 0.0 || problem.delta2 == 0.0 {
        return Err(Error::InvalidArgument(
            "symmetry weights need delta1, delta2 != 0".into(),
        ));
    }
    let n = op.n;
    let mut w = DVector::zeros(op.dim());
    for i in 0..n {
        w[i] = op.h / problem.a1.powi(4);
        w[n + i] = op.h / problem.a2.powi(4);
    }
    let (s2, s4) = match kind {
        WeightKind::Derived => (-1.0, -1.0),
        WeightKind::Literal => (1.0, 1.0),
    };
    w[op.p0()] = 1.0;
    w[op.p1()] = s2;
    w[op.g1()] = 1.0 / problem.delta1;
    w[op.g0()] = s4 / problem.delta2;
    Ok(w)
}

/// `|<A u, B v> - <B u, A v>|` relative to `|A u||B v| + |B u||A v|`, all in
/// the weighted inner product (norms use `|w|`).
pub fn weighted_asymmetry(op: &DiscreteOperator, w: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let (au, av) = (&op.a * u, &op.a * v);
    let (bu, bv) = (&op.b * u, &op.b * v);
    let inner = |x: &DVector<f64>, y: &DVector<f64>| -> f64 {
        x.iter().zip(y.iter()).zip(w.iter()).map(|((x, y), w)| w * x * y).sum()
    };
    let norm = |x: &DVector<f64>| -> f64 { x.iter().zip(w.iter()).map(|(x, w)| w.abs() * x * x).sum::<f64>().sqrt() };
    let diff = (inner(&au, &bv) - inner(&bu, &av)).abs();
    diff / (norm(&au) * norm(&bv) + norm(&bu) * norm(&av)).max(f64::MIN_POSITIVE)
}

/// `log2(e_i / e_{i+1})` for errors measured on successively doubled grids.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect()
}

/// Dense row-major CSV.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:e}", m[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
