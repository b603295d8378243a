//! Dense convex quadratic programming.
//!
//! ```text
//!     minimize     1/2 x' Q x + c' x + constant
//!     subject to   E x  = f
//!                  G x <= h
//! ```
//!
//! Solved with a primal-dual interior point method using Mehrotra's
//! predictor-corrector steps. The cost matrix is dense; constraint rows are
//! stored sparsely since every row used by the planners touches at most a few
//! variables. Each iteration factors the reduced `d x d` KKT matrix with a
//! dense Cholesky decomposition and eliminates the equality multipliers
//! through a small Schur complement.

use thiserror::Error;

/// Default solver tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Interior point iteration cap.
pub const MAX_ITERATIONS: usize = 200;

const PSD_FLOOR: f64 = 1e-9;
const REGULARIZATION: f64 = 1e-10;
const STEP_FRACTION: f64 = 0.99;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("cost matrix is not positive semidefinite")]
    NotPsd,
    #[error("non-finite problem data")]
    NonFinite,
    #[error("tolerance must be positive")]
    InvalidTolerance,
}

/// Sparse linear form `sum coeffs[k].1 * x[coeffs[k].0]` compared with `rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        LinearConstraint { coeffs, rhs }
    }

    /// Row from a dense coefficient slice; zeros are skipped.
    pub fn dense(row: &[f64], rhs: f64) -> Self {
        let coeffs = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        LinearConstraint { coeffs, rhs }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, v)| v * x[i]).sum()
    }
}

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// `x' M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(&self.mul_vec(x), x)
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn symmetrized(&self) -> DenseMatrix {
        let n = self.n;
        let mut s = self.clone();
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self[(i, i)] += v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Lower Cholesky factor stored row-major.
struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    fn factor(mut a: DenseMatrix) -> Option<Cholesky> {
        let n = a.n;
        for i in 0..n {
            for j in 0..=i {
                let (ri, rj) = (i * n, j * n);
                let s = a.data[ri + j] - dot(&a.data[ri..ri + j], &a.data[rj..rj + j]);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    a.data[ri + i] = s.sqrt();
                } else {
                    a.data[ri + j] = s / a.data[rj + j];
                }
            }
            for j in i + 1..n {
                a.data[i * n + j] = 0.0;
            }
        }
        Some(Cholesky { l: a })
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.l.n;
        let l = &self.l.data;
        for i in 0..n {
            let s = b[i] - dot(&l[i * n..i * n + i], &b[..i]);
            b[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            b[i] /= l[i * n + i];
            let bi = b[i];
            let row = &l[i * n..i * n + i];
            for (bk, lk) in b[..i].iter_mut().zip(row) {
                *bk -= lk * bi;
            }
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Check `Q + floor * I` is positive definite, i.e. the smallest eigenvalue
/// of `Q` exceeds `-floor`.
fn eigen_floor_at_least(q: &DenseMatrix, floor: f64) -> bool {
    let mut m = q.clone();
    m.add_diagonal(-floor);
    Cholesky::factor(m).is_some()
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticProgram {
    pub q: DenseMatrix,
    pub c: Vec<f64>,
    pub constant: f64,
    pub equalities: Vec<LinearConstraint>,
    pub inequalities: Vec<LinearConstraint>,
}

impl QuadraticProgram {
    pub fn new(q: DenseMatrix, c: Vec<f64>) -> Self {
        QuadraticProgram {
            q,
            c,
            constant: 0.0,
            equalities: Vec::new(),
            inequalities: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn add_equality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(LinearConstraint::new(coeffs, rhs));
    }

    pub fn add_inequality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.inequalities.push(LinearConstraint::new(coeffs, rhs));
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * self.q.quad_form(x) + dot(&self.c, x) + self.constant
    }

    /// Largest violation over all constraints (equalities in absolute value).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .equalities
            .iter()
            .map(|r| (r.eval(x) - r.rhs).abs())
            .fold(0.0, f64::max);
        let ineq = self
            .inequalities
            .iter()
            .map(|r| r.eval(x) - r.rhs)
            .fold(0.0, f64::max);
        eq.max(ineq)
    }

    fn validate(&self) -> Result<(), QpError> {
        let d = self.dim();
        if self.q.dim() != d {
            return Err(QpError::DimensionMismatch(format!(
                "Q is {0}x{0} but c has length {1}",
                self.q.dim(),
                d
            )));
        }
        let rows = self.equalities.iter().chain(&self.inequalities);
        for r in rows {
            if let Some(&(i, _)) = r.coeffs.iter().find(|(i, _)| *i >= d) {
                return Err(QpError::DimensionMismatch(format!(
                    "constraint references variable {i} of {d}"
                )));
            }
            if !r.rhs.is_finite() || r.coeffs.iter().any(|(_, v)| !v.is_finite()) {
                return Err(QpError::NonFinite);
            }
        }
        if self.q.data.iter().chain(&self.c).any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub iterations: usize,
}

/// Reduced KKT system for one interior point iteration.
struct NewtonSystem<'a> {
    chol: Cholesky,
    /// `K^{-1} E'` columns, one per equality.
    kinv_et: Vec<Vec<f64>>,
    schur: Option<Cholesky>,
    eq: &'a [LinearConstraint],
    rho: f64,
}

impl NewtonSystem<'_> {
    /// Solve `(K) dx + E' dy = b1`, `E dx = -r_e` for `(dx, dy)`; `b1` must
    /// not yet include the `-rho E' r_e` augmentation.
    fn solve(&self, mut b1: Vec<f64>, r_e: &[f64]) -> (Vec<f64>, Vec<f64>) {
        for (row, &re) in self.eq.iter().zip(r_e) {
            for &(i, v) in &row.coeffs {
                b1[i] -= self.rho * v * re;
            }
        }
        let mut dx = self.chol.solve(&b1);
        let p = self.eq.len();
        if p == 0 {
            return (dx, Vec::new());
        }
        let rhs: Vec<f64> = self
            .eq
            .iter()
            .zip(r_e)
            .map(|(row, &re)| row.eval(&dx) + re)
            .collect();
        let dy = self.schur.as_ref().expect("schur factor").solve(&rhs);
        for (col, &yk) in self.kinv_et.iter().zip(&dy) {
            for (d, c) in dx.iter_mut().zip(col) {
                *d -= c * yk;
            }
        }
        (dx, dy)
    }
}

/// Factor `K = Q + G' W G + rho E'E` and the Schur complement of `E`.
fn build_newton_system<'a>(
    q: &DenseMatrix,
    ineq: &[LinearConstraint],
    w: &[f64],
    eq: &'a [LinearConstraint],
) -> Option<NewtonSystem<'a>> {
    let d = q.dim();
    let p = eq.len();
    let rho = 1.0;
    let mut k = q.clone();
    for (r, &wk) in ineq.iter().zip(w) {
        for &(i, a) in &r.coeffs {
            for &(j, b) in &r.coeffs {
                k[(i, j)] += wk * a * b;
            }
        }
    }
    for r in eq {
        for &(i, a) in &r.coeffs {
            for &(j, b) in &r.coeffs {
                k[(i, j)] += rho * a * b;
            }
        }
    }
    let mut reg = 0.0;
    let chol = loop {
        let mut kk = k.clone();
        kk.add_diagonal(reg);
        if let Some(ch) = Cholesky::factor(kk) {
            break ch;
        }
        reg = if reg == 0.0 { 1e-12 } else { reg * 100.0 };
        if reg > 1e-4 {
            return None;
        }
    };
    let kinv_et: Vec<Vec<f64>> = eq
        .iter()
        .map(|r| {
            let mut col = vec![0.0; d];
            for &(i, a) in &r.coeffs {
                col[i] = a;
            }
            chol.solve(&col)
        })
        .collect();
    let schur = if p > 0 {
        let mut s = DenseMatrix::zeros(p);
        for (a, row) in eq.iter().enumerate() {
            for (b, col) in kinv_et.iter().enumerate() {
                s[(a, b)] = row.eval(col);
            }
        }
        let s = s.symmetrized();
        let mut reg = 0.0;
        loop {
            let mut ss = s.clone();
            ss.add_diagonal(reg);
            if let Some(ch) = Cholesky::factor(ss) {
                break Some(ch);
            }
            reg = if reg == 0.0 { 1e-14 } else { reg * 100.0 };
            if reg > 1e-4 {
                return None;
            }
        }
    } else {
        None
    };
    Some(NewtonSystem {
        chol,
        kinv_et,
        schur,
        eq,
        rho,
    })
}

/// Solve a convex QP to tolerance `tol`.
pub fn solve_qp(qp: &QuadraticProgram, tol: f64) -> Result<QpSolution, QpError> {
    if !(tol > 0.0) {
        return Err(QpError::InvalidTolerance);
    }
    qp.validate()?;
    let d = qp.dim();
    let q_sym = qp.q.symmetrized();
    let scale = q_sym.max_abs().max(norm_inf(&qp.c));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut q = q_sym;
    q.scale(1.0 / scale);
    let c: Vec<f64> = qp.c.iter().map(|v| v / scale).collect();

    if !eigen_floor_at_least(&q, -PSD_FLOOR) {
        return Err(QpError::NotPsd);
    }
    if !eigen_floor_at_least(&q, REGULARIZATION) {
        q.add_diagonal(REGULARIZATION);
    }

    let eq = &qp.equalities;
    let ineq = &qp.inequalities;
    let (p, m) = (eq.len(), ineq.len());
    let f: Vec<f64> = eq.iter().map(|r| r.rhs).collect();
    let h: Vec<f64> = ineq.iter().map(|r| r.rhs).collect();
    let c_norm = norm_inf(&qp.c);

    let g_mul = |x: &[f64]| -> Vec<f64> { ineq.iter().map(|r| r.eval(x)).collect() };
    let e_mul = |x: &[f64]| -> Vec<f64> { eq.iter().map(|r| r.eval(x)).collect() };
    let add_at = |rows: &[LinearConstraint], v: &[f64], out: &mut [f64]| {
        for (r, &vk) in rows.iter().zip(v) {
            for &(i, a) in &r.coeffs {
                out[i] += a * vk;
            }
        }
    };

    let build_system = |w: &[f64]| build_newton_system(&q, ineq, w, eq);

    // Initial point: solve the KKT system with unit scaling, then shift the
    // slack and multiplier estimates into the positive orthant.
    let mut x;
    let mut y;
    let mut s;
    let mut z;
    {
        let sys = match build_system(&vec![1.0; m]) {
            Some(sys) => sys,
            None => return Ok(failed(qp, vec![0.0; d], QpStatus::MaxIterations, 0)),
        };
        let mut b1: Vec<f64> = c.iter().map(|v| -v).collect();
        add_at(ineq, &h, &mut b1);
        let r_e: Vec<f64> = f.iter().map(|v| -v).collect();
        let (x0, y0) = sys.solve(b1, &r_e);
        let gx = g_mul(&x0);
        let resid: Vec<f64> = h.iter().zip(&gx).map(|(hi, gi)| hi - gi).collect();
        let shift = |v: &[f64]| -> Vec<f64> {
            let lo = v.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            if lo > 1e-8 {
                v.to_vec()
            } else {
                v.iter().map(|t| t + 1.0 - lo.min(0.0)).collect()
            }
        };
        s = shift(&resid);
        z = shift(&resid.iter().map(|v| -v).collect::<Vec<_>>());
        x = x0;
        y = y0;
    }

    let mut status = QpStatus::MaxIterations;
    let mut iterations = 0;
    for it in 0..=MAX_ITERATIONS {
        iterations = it;
        // Residuals of the scaled problem.
        let mut r_d = q.mul_vec(&x);
        for (rd, ci) in r_d.iter_mut().zip(&c) {
            *rd += ci;
        }
        add_at(eq, &y, &mut r_d);
        add_at(ineq, &z, &mut r_d);
        let r_e: Vec<f64> = e_mul(&x).iter().zip(&f).map(|(a, b)| a - b).collect();
        let gx = g_mul(&x);
        let r_i: Vec<f64> = (0..m).map(|k| gx[k] + s[k] - h[k]).collect();
        let mu = if m > 0 { dot(&s, &z) / m as f64 } else { 0.0 };

        let primal_eq = norm_inf(&r_e);
        let primal_ineq = (0..m).map(|k| gx[k] - h[k]).fold(0.0, f64::max);
        let stationarity = scale * norm_inf(&r_d);
        let gap = dot(&s, &z);
        let obj_scaled = 0.5 * dot(&x, &q.mul_vec(&x)) + dot(&c, &x);
        if primal_eq <= tol
            && primal_ineq <= tol
            && stationarity <= tol * (1.0 + c_norm)
            && mu <= tol
            && gap <= tol * (1.0 + obj_scaled.abs())
        {
            status = QpStatus::Optimal;
            break;
        }
        if it == MAX_ITERATIONS {
            break;
        }
        // Farkas certificate: z >= 0, G'z + E'y ~ 0, h'z + f'y < 0.
        let certificate = -(dot(&h, &z) + dot(&f, &y));
        if certificate > 0.0 && (primal_eq > tol || primal_ineq > tol) {
            let mut gz = vec![0.0; d];
            add_at(eq, &y, &mut gz);
            add_at(ineq, &z, &mut gz);
            if norm_inf(&gz) <= tol * certificate {
                status = QpStatus::Infeasible;
                break;
            }
        }

        let w: Vec<f64> = (0..m).map(|k| z[k] / s[k]).collect();
        let sys = match build_system(&w) {
            Some(sys) => sys,
            None => break,
        };
        let direction = |r_c: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
            let mut b1: Vec<f64> = r_d.iter().map(|v| -v).collect();
            let t: Vec<f64> = (0..m).map(|k| w[k] * r_i[k] - r_c[k] / s[k]).collect();
            let mut gt = vec![0.0; d];
            add_at(ineq, &t, &mut gt);
            for (b, g) in b1.iter_mut().zip(&gt) {
                *b -= g;
            }
            let (dx, dy) = sys.solve(b1, &r_e);
            let gdx = g_mul(&dx);
            let ds: Vec<f64> = (0..m).map(|k| -r_i[k] - gdx[k]).collect();
            let dz: Vec<f64> = (0..m)
                .map(|k| w[k] * (gdx[k] + r_i[k]) - r_c[k] / s[k])
                .collect();
            (dx, dy, ds, dz)
        };
        let max_step = |ds: &[f64], dz: &[f64]| -> f64 {
            let mut a = 1.0f64;
            for k in 0..m {
                if ds[k] < 0.0 {
                    a = a.min(-s[k] / ds[k]);
                }
                if dz[k] < 0.0 {
                    a = a.min(-z[k] / dz[k]);
                }
            }
            a
        };

        let (dx, dy, ds, dz) = if m == 0 {
            direction(&[])
        } else {
            let r_aff: Vec<f64> = (0..m).map(|k| s[k] * z[k]).collect();
            let (_, _, ds_a, dz_a) = direction(&r_aff);
            let a_aff = max_step(&ds_a, &dz_a);
            let mu_aff = (0..m)
                .map(|k| (s[k] + a_aff * ds_a[k]) * (z[k] + a_aff * dz_a[k]))
                .sum::<f64>()
                / m as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
            let r_c: Vec<f64> = (0..m)
                .map(|k| s[k] * z[k] + ds_a[k] * dz_a[k] - sigma * mu)
                .collect();
            direction(&r_c)
        };
        let alpha = if m == 0 {
            1.0
        } else {
            (STEP_FRACTION * max_step(&ds, &dz)).min(1.0)
        };
        for i in 0..d {
            x[i] += alpha * dx[i];
        }
        for k in 0..p {
            y[k] += alpha * dy[k];
        }
        for k in 0..m {
            s[k] += alpha * ds[k];
            z[k] += alpha * dz[k];
        }
    }
    if status == QpStatus::Optimal && m > 0 {
        // Active-set polish: the interior point iterate is accurate in
        // objective but can sit well off weakly curved optima.
        let mut rows: Vec<LinearConstraint> = eq.to_vec();
        let active: Vec<usize> = (0..m).filter(|&k| z[k] > s[k]).collect();
        rows.extend(active.iter().map(|&k| ineq[k].clone()));
        let polished = build_newton_system(&q, &[], &[], &rows).and_then(|sys| {
            let r: Vec<f64> = rows.iter().map(|r| -r.rhs).collect();
            let (xp, lam) = sys.solve(c.iter().map(|v| -v).collect(), &r);
            let feasible = ineq.iter().all(|row| row.eval(&xp) <= row.rhs + tol)
                && rows.iter().take(p).all(|row| (row.eval(&xp) - row.rhs).abs() <= tol)
                && lam[p..].iter().all(|&l| l >= -tol)
                && xp.iter().all(|v| v.is_finite());
            feasible.then_some(xp)
        });
        if let Some(xp) = polished {
            let slack = tol * (1.0 + qp.objective(&x).abs());
            if qp.objective(&xp) <= qp.objective(&x) + slack {
                x = xp;
            }
        }
    }
    let objective = qp.objective(&x);
    Ok(QpSolution {
        x,
        objective,
        status,
        iterations,
    })
}

fn failed(qp: &QuadraticProgram, x: Vec<f64>, status: QpStatus, iterations: usize) -> QpSolution {
    QpSolution {
        objective: qp.objective(&x),
        x,
        status,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn projection_onto_line() {
        let mut qp = QuadraticProgram::new(DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]), vec![0.0; 2]);
        qp.add_equality(vec![(0, 1.0)], 1.0);
        let sol = solve_qp(&qp, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.x[1], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn active_bound() {
        // (x - 2)^2 = x^2 - 4x + 4
        let mut qp = QuadraticProgram::new(DenseMatrix::from_rows(&[vec![2.0]]), vec![-4.0]).with_constant(4.0);
        qp.add_inequality(vec![(0, 1.0)], 1.0);
        let sol = solve_qp(&qp, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn unconstrained() {
        let qp = QuadraticProgram::new(DenseMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]), vec![1.0, 2.0]);
        let sol = solve_qp(&qp, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        // Q x = -c  =>  x = -(1/11) [3 -1; -1 4] [1; 2]
        assert_abs_diff_eq!(sol.x[0], -1.0 / 11.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[1], -7.0 / 11.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut qp = QuadraticProgram::new(DenseMatrix::identity(2), vec![0.0; 2]);
        qp.add_inequality(vec![(0, 1.0)], 0.0);
        qp.add_inequality(vec![(0, -1.0)], -1.0);
        let sol = solve_qp(&qp, DEFAULT_TOL).unwrap();
        assert_ne!(sol.status, QpStatus::Optimal);
        assert_eq!(sol.status, QpStatus::Infeasible);

        let mut qp = QuadraticProgram::new(DenseMatrix::identity(2), vec![0.0; 2]);
        qp.add_equality(vec![(0, 1.0), (1, 1.0)], 3.0);
        qp.add_inequality(vec![(0, 1.0)], 1.0);
        qp.add_inequality(vec![(1, 1.0)], 1.0);
        let sol = solve_qp(&qp, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
    }

    #[test]
    fn rejects_non_psd_and_bad_dims() {
        let qp = QuadraticProgram::new(DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]), vec![0.0; 2]);
        assert_eq!(solve_qp(&qp, DEFAULT_TOL).unwrap_err(), QpError::NotPsd);
        let qp = QuadraticProgram::new(DenseMatrix::identity(2), vec![0.0; 3]);
        assert!(matches!(solve_qp(&qp, DEFAULT_TOL), Err(QpError::DimensionMismatch(_))));
        let mut qp = QuadraticProgram::new(DenseMatrix::identity(2), vec![0.0; 2]);
        qp.add_inequality(vec![(5, 1.0)], 0.0);
        assert!(matches!(solve_qp(&qp, DEFAULT_TOL), Err(QpError::DimensionMismatch(_))));
    }

    #[test]
    fn semidefinite_cost_is_regularized() {
        // Q = 0: a linear program over a box.
        let mut qp = QuadraticProgram::new(DenseMatrix::zeros(2), vec![1.0, -1.0]);
        for (i, lo, hi) in [(0, -1.0, 2.0), (1, -3.0, 4.0)] {
            qp.add_inequality(vec![(i, 1.0)], hi);
            qp.add_inequality(vec![(i, -1.0)], -lo);
        }
        let sol = solve_qp(&qp, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert_abs_diff_eq!(sol.x[0], -1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.x[1], 4.0, epsilon = 1e-6);
    }

    #[test]
    fn cholesky_solves() {
        let a = DenseMatrix::from_rows(&[
            vec![4.0, 2.0, 0.4],
            vec![2.0, 5.0, 1.0],
            vec![0.4, 1.0, 3.0],
        ]);
        let ch = Cholesky::factor(a.clone()).unwrap();
        let b = vec![1.0, -2.0, 0.5];
        let x = ch.solve(&b);
        let back = a.mul_vec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }
}
