//! Primal-dual interior-point solver for convex quadratic programs.
//!
//! ```text
//!     minimize    ½ pᵀ P p + qᵀ p + d
//!     subject to  E p  = f
//!                 G p <= h
//!                 lo <= p <= hi
//!                 ½ pᵀ H_k p + l_kᵀ p + c_k <= 0      (H_k ⪰ 0)
//! ```
//!
//! The method is an infeasible-start Mehrotra predictor-corrector on the
//! slack formulation. Linear programs are the `P = 0` case. Infeasibility and
//! unboundedness are detected from diverging dual (resp. primal) iterates that
//! approximately satisfy a Farkas-type certificate.

use nalgebra::{DMatrix, DVector};

use crate::linalg::eigen_sym;
use crate::NumericsError;

/// Sparse linear row `Σ coef_j p_j` with a right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearRow {
    pub fn new(coefs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self { coefs, rhs }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * p[j]).sum()
    }
}

/// Convex quadratic inequality `½ pᵀ H p + lᵀ p + c <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticConstraint {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl QuadraticConstraint {
    pub fn eval(&self, p: &DVector<f64>) -> f64 {
        0.5 * p.dot(&(&self.hessian * p)) + self.linear.dot(p) + self.constant
    }

    fn gradient(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.hessian * p + &self.linear
    }
}

/// A convex QP with linear (and optionally convex quadratic) constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct QpModel {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
    pub equalities: Vec<LinearRow>,
    pub inequalities: Vec<LinearRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub quadratic: Vec<QuadraticConstraint>,
}

impl QpModel {
    /// Model over `n` free variables with a zero objective.
    pub fn new(n: usize) -> Self {
        Self {
            hessian: DMatrix::zeros(n, n),
            linear: DVector::zeros(n),
            constant: 0.0,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            quadratic: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
    }

    pub fn add_equality(&mut self, coefs: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(LinearRow::new(coefs, rhs));
    }

    pub fn add_inequality(&mut self, coefs: Vec<(usize, f64)>, rhs: f64) {
        self.inequalities.push(LinearRow::new(coefs, rhs));
    }

    pub fn objective_value(&self, p: &DVector<f64>) -> f64 {
        0.5 * p.dot(&(&self.hessian * p)) + self.linear.dot(p) + self.constant
    }

    fn validate(&self) -> Result<(), NumericsError> {
        let n = self.dim();
        let dim_err = |what: &str| Err(NumericsError::Dimension(what.to_string()));
        if self.hessian.nrows() != n || self.hessian.ncols() != n {
            return dim_err("objective hessian does not match the linear term");
        }
        if self.lower.len() != n || self.upper.len() != n {
            return dim_err("bound vectors do not match the variable count");
        }
        for row in self.equalities.iter().chain(&self.inequalities) {
            if row.coefs.iter().any(|&(j, _)| j >= n) {
                return dim_err("constraint references a variable out of range");
            }
            if !row.rhs.is_finite() || row.coefs.iter().any(|(_, a)| !a.is_finite()) {
                return Err(NumericsError::NonFinite);
            }
        }
        for qc in &self.quadratic {
            if qc.hessian.nrows() != n || qc.hessian.ncols() != n || qc.linear.len() != n {
                return dim_err("quadratic constraint does not match the variable count");
            }
            check_psd(&qc.hessian, "quadratic constraint")?;
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] == f64::INFINITY {
                return Err(NumericsError::InvalidArgument(format!(
                    "bad bounds on variable {j}"
                )));
            }
        }
        if self.linear.iter().any(|v| !v.is_finite()) || !self.constant.is_finite() {
            return Err(NumericsError::NonFinite);
        }
        check_psd(&self.hessian, "objective")
    }
}

fn check_psd(a: &DMatrix<f64>, what: &str) -> Result<(), NumericsError> {
    if a.nrows() == 0 || a.iter().all(|v| *v == 0.0) {
        return if a.iter().any(|v| !v.is_finite()) {
            Err(NumericsError::NonFinite)
        } else {
            Ok(())
        };
    }
    let eig = eigen_sym(a)?;
    let norm = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if eig.min() < -1e-8 * (1.0 + norm) {
        return Err(NumericsError::InvalidArgument(format!(
            "{what} hessian is not positive semidefinite (min eigenvalue {:.3e})",
            eig.min()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    pub max_iter: usize,
    /// Relative primal/dual residual target.
    pub tol_feas: f64,
    /// Relative complementarity target.
    pub tol_gap: f64,
    /// Looser thresholds accepted when the iteration limit is hit.
    pub accept_feas: f64,
    pub accept_gap: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol_feas: 1e-9,
            tol_gap: 1e-9,
            accept_feas: 1e-7,
            accept_gap: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub status: QpStatus,
    pub point: DVector<f64>,
    pub value: f64,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    pub lower_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
    pub quad_duals: Vec<f64>,
    pub iterations: usize,
    /// max |violation| of constraints at `point`, unscaled.
    pub primal_residual: f64,
    /// ‖∇L‖∞ at the returned primal-dual pair, unscaled.
    pub dual_residual: f64,
    /// primal value minus Lagrangian dual value, unscaled.
    pub gap: f64,
}

/// Where each internal row came from.
#[derive(Debug, Clone, Copy)]
enum RowOrigin {
    Equality(usize),
    Inequality(usize),
    Lower(usize),
    Upper(usize),
    Fixed(usize),
}

/// Scaled, densified problem.
struct Assembled {
    n: usize,
    p: DMatrix<f64>,
    q: DVector<f64>,
    e: DMatrix<f64>,
    f: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    quad: Vec<QuadraticConstraint>,
    obj_scale: f64,
    eq_scale: Vec<f64>,
    in_scale: Vec<f64>,
    quad_scale: Vec<f64>,
    eq_origin: Vec<RowOrigin>,
    in_origin: Vec<RowOrigin>,
}

fn row_scale(coefs: &[(usize, f64)]) -> f64 {
    let m = coefs.iter().fold(0.0_f64, |m, (_, a)| m.max(a.abs()));
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn assemble(model: &QpModel) -> Assembled {
    let n = model.dim();
    let mut eq_rows: Vec<(Vec<(usize, f64)>, f64, RowOrigin)> = Vec::new();
    let mut in_rows: Vec<(Vec<(usize, f64)>, f64, RowOrigin)> = Vec::new();
    for (k, r) in model.equalities.iter().enumerate() {
        eq_rows.push((r.coefs.clone(), r.rhs, RowOrigin::Equality(k)));
    }
    for (k, r) in model.inequalities.iter().enumerate() {
        in_rows.push((r.coefs.clone(), r.rhs, RowOrigin::Inequality(k)));
    }
    for j in 0..n {
        let (lo, hi) = (model.lower[j], model.upper[j]);
        if lo == hi {
            eq_rows.push((vec![(j, 1.0)], lo, RowOrigin::Fixed(j)));
            continue;
        }
        if hi.is_finite() {
            in_rows.push((vec![(j, 1.0)], hi, RowOrigin::Upper(j)));
        }
        if lo.is_finite() {
            in_rows.push((vec![(j, -1.0)], -lo, RowOrigin::Lower(j)));
        }
    }

    let obj_scale = model
        .hessian
        .iter()
        .chain(model.linear.iter())
        .fold(1.0_f64, |m, v| m.max(v.abs()));

    let mut e = DMatrix::zeros(eq_rows.len(), n);
    let mut f = DVector::zeros(eq_rows.len());
    let mut eq_scale = Vec::with_capacity(eq_rows.len());
    let mut eq_origin = Vec::with_capacity(eq_rows.len());
    for (r, (coefs, rhs, origin)) in eq_rows.iter().enumerate() {
        let s = row_scale(coefs);
        for &(j, a) in coefs {
            e[(r, j)] += a / s;
        }
        f[r] = rhs / s;
        eq_scale.push(s);
        eq_origin.push(*origin);
    }
    let mut g = DMatrix::zeros(in_rows.len(), n);
    let mut h = DVector::zeros(in_rows.len());
    let mut in_scale = Vec::with_capacity(in_rows.len());
    let mut in_origin = Vec::with_capacity(in_rows.len());
    for (r, (coefs, rhs, origin)) in in_rows.iter().enumerate() {
        let s = row_scale(coefs);
        for &(j, a) in coefs {
            g[(r, j)] += a / s;
        }
        h[r] = rhs / s;
        in_scale.push(s);
        in_origin.push(*origin);
    }
    let mut quad = Vec::with_capacity(model.quadratic.len());
    let mut quad_scale = Vec::with_capacity(model.quadratic.len());
    for qc in &model.quadratic {
        let s = qc
            .hessian
            .iter()
            .chain(qc.linear.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let s = if s > 0.0 { s } else { 1.0 };
        quad.push(QuadraticConstraint {
            hessian: &qc.hessian / s,
            linear: &qc.linear / s,
            constant: qc.constant / s,
        });
        quad_scale.push(s);
    }

    Assembled {
        n,
        p: &model.hessian / obj_scale,
        q: &model.linear / obj_scale,
        e,
        f,
        g,
        h,
        quad,
        obj_scale,
        eq_scale,
        in_scale,
        quad_scale,
        eq_origin,
        in_origin,
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn inf_norm_mat(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut alpha = f64::INFINITY;
    for (x, dx) in v.iter().zip(dv.iter()) {
        if *dx < 0.0 {
            alpha = alpha.min(-x / dx);
        }
    }
    alpha
}

/// Dense factorization of the regularized KKT matrix with refinement
/// against the unregularized one.
struct Kkt {
    exact: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Kkt {
    fn new(k: &DMatrix<f64>, e: &DMatrix<f64>, scale: f64) -> Self {
        let n = k.nrows();
        let me = e.nrows();
        let mut exact = DMatrix::zeros(n + me, n + me);
        exact.view_mut((0, 0), (n, n)).copy_from(k);
        exact.view_mut((n, 0), (me, n)).copy_from(e);
        exact.view_mut((0, n), (n, me)).copy_from(&e.transpose());
        let delta = 1e-11 * scale;
        let mut reg = exact.clone();
        for i in 0..n {
            reg[(i, i)] += delta;
        }
        for i in n..n + me {
            reg[(i, i)] -= delta;
        }
        Self {
            exact,
            lu: reg.lu(),
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut x = self.lu.solve(rhs)?;
        for _ in 0..3 {
            let r = rhs - &self.exact * &x;
            if inf_norm(&r) <= 1e-15 * (1.0 + inf_norm(rhs)) {
                break;
            }
            let dx = self.lu.solve(&r)?;
            x += dx;
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }
}

/// Solve a convex QP. Dimension problems and non-convex objectives are input
/// errors; solver outcomes are reported through [`QpSolution::status`].
pub fn solve_qp(model: &QpModel, settings: &QpSettings) -> Result<QpSolution, NumericsError> {
    model.validate()?;
    let a = assemble(model);
    Ok(interior_point(model, &a, settings))
}

fn interior_point(model: &QpModel, a: &Assembled, settings: &QpSettings) -> QpSolution {
    let n = a.n;
    let me = a.e.nrows();
    let ml = a.g.nrows();
    let mq = a.quad.len();
    let mi = ml + mq;

    // Start from the box midpoint where finite, zero otherwise.
    let mut p = DVector::from_iterator(
        n,
        (0..n).map(|j| {
            let (lo, hi) = (model.lower[j], model.upper[j]);
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0,
                (false, true) => hi - 1.0,
                (false, false) => 0.0,
            }
        }),
    );
    let mut y = DVector::<f64>::zeros(me);
    let mut z = DVector::<f64>::from_element(mi, 1.0);
    let mut s = DVector::<f64>::zeros(mi);
    {
        let g0 = constraint_values(a, &p);
        for i in 0..mi {
            s[i] = (-g0[i]).max(1.0);
        }
    }

    let f_norm = inf_norm(&a.f);
    let h_norm = inf_norm(&a.h);
    let q_norm = inf_norm(&a.q);

    let mut best: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> = None;
    let mut status = QpStatus::NumericalFailure;
    let mut iterations = 0;
    let mut best_at = 0;

    for it in 0..settings.max_iter {
        iterations = it;
        let jac = jacobian(a, &p);
        let gvals = constraint_values(a, &p);
        let rd = &a.p * &p + &a.q + a.e.transpose() * &y + jac.transpose() * &z;
        let re = &a.e * &p - &a.f;
        let ri = &gvals + &s;
        let mu = if mi > 0 { s.dot(&z) / mi as f64 } else { 0.0 };
        let pobj = 0.5 * p.dot(&(&a.p * &p)) + a.q.dot(&p);

        let pres = (inf_norm(&re) / (1.0 + f_norm)).max(inf_norm(&ri) / (1.0 + h_norm));
        let dres = inf_norm(&rd) / (1.0 + q_norm);
        let gap = if mi > 0 {
            s.dot(&z) / (1.0 + pobj.abs())
        } else {
            0.0
        };

        if pres <= settings.tol_feas && dres <= settings.tol_feas && gap <= settings.tol_gap {
            status = QpStatus::Optimal;
            best = Some((0.0, p.clone(), y.clone(), z.clone(), s.clone()));
            break;
        }
        let merit = pres.max(dres).max(gap);
        if pres <= settings.accept_feas
            && dres <= settings.accept_feas
            && gap <= settings.accept_gap
            && best.as_ref().is_none_or(|b| merit < b.0)
        {
            best = Some((merit, p.clone(), y.clone(), z.clone(), s.clone()));
            best_at = it;
        }
        // stalled near an acceptable point: further steps only lose accuracy
        if best.is_some() && (it >= best_at + 8 || mu <= 1e-14 * (1.0 + pobj.abs())) {
            break;
        }

        if let Some(st) = detect_certificate(a, &p, &y, &z) {
            status = st;
            break;
        }

        // Newton system
        let w = DVector::from_iterator(mi, (0..mi).map(|i| z[i] / s[i]));
        let mut hess = a.p.clone();
        for (k, qc) in a.quad.iter().enumerate() {
            hess += &qc.hessian * z[ml + k];
        }
        let mut jw = jac.clone();
        for i in 0..mi {
            let sw = w[i].sqrt();
            jw.row_mut(i).scale_mut(sw);
        }
        let k = hess + jw.transpose() * &jw;
        let kkt = Kkt::new(&k, &a.e, 1.0 + inf_norm_mat(&a.p));

        let solve_dir = |rc: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
            let mut tmp = DVector::zeros(mi);
            for i in 0..mi {
                tmp[i] = w[i] * ri[i] + rc[i] / s[i];
            }
            let rhs_p = -&rd - jac.transpose() * &tmp;
            let mut rhs = DVector::zeros(n + me);
            rhs.rows_mut(0, n).copy_from(&rhs_p);
            rhs.rows_mut(n, me).copy_from(&(-&re));
            let sol = kkt.solve(&rhs)?;
            let dp = sol.rows(0, n).into_owned();
            let dy = sol.rows(n, me).into_owned();
            let jdp = &jac * &dp;
            let mut dz = DVector::zeros(mi);
            let mut ds = DVector::zeros(mi);
            for i in 0..mi {
                dz[i] = w[i] * (jdp[i] + ri[i]) + rc[i] / s[i];
                ds[i] = (rc[i] - s[i] * dz[i]) / z[i];
            }
            Some((dp, dy, dz, ds))
        };

        // predictor
        let rc_aff = DVector::from_iterator(mi, (0..mi).map(|i| -s[i] * z[i]));
        let Some((dp_a, _dy_a, dz_a, ds_a)) = solve_dir(&rc_aff) else {
            break;
        };
        let _ = dp_a;
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a)).min(1.0);
        let sigma = if mi > 0 {
            let mu_aff = (&s + &ds_a * alpha_aff).dot(&(&z + &dz_a * alpha_aff)) / mi as f64;
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        // corrector
        let rc = DVector::from_iterator(
            mi,
            (0..mi).map(|i| sigma * mu - s[i] * z[i] - ds_a[i] * dz_a[i]),
        );
        let Some((dp, dy, dz, ds)) = solve_dir(&rc) else {
            break;
        };
        let alpha_max = max_step(&s, &ds).min(max_step(&z, &dz));
        let alpha = (0.99 * alpha_max).min(1.0);
        if !(alpha > 0.0) || !alpha.is_finite() {
            break;
        }
        p += &dp * alpha;
        y += &dy * alpha;
        z += &dz * alpha;
        s += &ds * alpha;
        // keep strictly interior
        for i in 0..mi {
            s[i] = s[i].max(1e-300);
            z[i] = z[i].max(1e-300);
        }
        if p.iter()
            .chain(y.iter())
            .chain(z.iter())
            .any(|v| !v.is_finite())
        {
            break;
        }
    }

    match status {
        QpStatus::Infeasible | QpStatus::Unbounded => failed(model, status, iterations, &p),
        _ => match best {
            Some((_, p, y, z, _s)) => finish(model, a, QpStatus::Optimal, iterations, p, y, z),
            None => failed(model, QpStatus::NumericalFailure, iterations, &p),
        },
    }
}

fn constraint_values(a: &Assembled, p: &DVector<f64>) -> DVector<f64> {
    let ml = a.g.nrows();
    let mut out = DVector::zeros(ml + a.quad.len());
    let lin = &a.g * p - &a.h;
    out.rows_mut(0, ml).copy_from(&lin);
    for (k, qc) in a.quad.iter().enumerate() {
        out[ml + k] = qc.eval(p);
    }
    out
}

fn jacobian(a: &Assembled, p: &DVector<f64>) -> DMatrix<f64> {
    let ml = a.g.nrows();
    let mut j = DMatrix::zeros(ml + a.quad.len(), a.n);
    j.view_mut((0, 0), (ml, a.n)).copy_from(&a.g);
    for (k, qc) in a.quad.iter().enumerate() {
        let grad = qc.gradient(p);
        j.row_mut(ml + k).copy_from(&grad.transpose());
    }
    j
}

/// Farkas-type checks on diverging iterates.
fn detect_certificate(
    a: &Assembled,
    p: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> Option<QpStatus> {
    let ml = a.g.nrows();
    let dual_norm = inf_norm(y).max(inf_norm(z));
    if dual_norm > 1e8 {
        // primal infeasible: Eᵀy + Jᵀz ≈ 0 with fᵀy + hᵀz < 0 (linear rows);
        // quadratic rows contribute through their value at p.
        let jac = jacobian(a, p);
        let lhs = (a.e.transpose() * y + jac.transpose() * z) / dual_norm;
        let mut rhs = a.f.dot(y) + a.h.dot(&z.rows(0, ml).into_owned());
        for (k, qc) in a.quad.iter().enumerate() {
            let grad = qc.gradient(p);
            // linearization of g_k at p: g_k(p) + ∇g_kᵀ(x - p) <= 0
            rhs += z[ml + k] * (grad.dot(p) - qc.eval(p));
        }
        if inf_norm(&lhs) <= 1e-7 && rhs / dual_norm < -1e-7 {
            return Some(QpStatus::Infeasible);
        }
    }
    let pn = inf_norm(p);
    if pn > 1e9 {
        let d = p / pn;
        let pd = inf_norm(&(&a.p * &d));
        let ed = inf_norm(&(&a.e * &d));
        let gd = (&a.g * &d).iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        if pd <= 1e-7 && ed <= 1e-7 && gd <= 1e-7 && a.q.dot(&d) < -1e-9 {
            return Some(QpStatus::Unbounded);
        }
    }
    None
}

fn failed(model: &QpModel, status: QpStatus, iterations: usize, p: &DVector<f64>) -> QpSolution {
    QpSolution {
        status,
        point: p.clone(),
        value: match status {
            QpStatus::Infeasible => f64::INFINITY,
            QpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        },
        eq_duals: vec![0.0; model.equalities.len()],
        ineq_duals: vec![0.0; model.inequalities.len()],
        lower_duals: vec![0.0; model.dim()],
        upper_duals: vec![0.0; model.dim()],
        quad_duals: vec![0.0; model.quadratic.len()],
        iterations,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        gap: f64::NAN,
    }
}

/// Unscale duals, then measure residuals against the original model.
fn finish(
    model: &QpModel,
    a: &Assembled,
    status: QpStatus,
    iterations: usize,
    p: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
) -> QpSolution {
    let n = model.dim();
    let ml = a.g.nrows();
    let mut eq_duals = vec![0.0; model.equalities.len()];
    let mut ineq_duals = vec![0.0; model.inequalities.len()];
    let mut lower_duals = vec![0.0; n];
    let mut upper_duals = vec![0.0; n];
    let mut quad_duals = vec![0.0; model.quadratic.len()];
    for (r, origin) in a.eq_origin.iter().enumerate() {
        let v = y[r] * a.obj_scale / a.eq_scale[r];
        match *origin {
            RowOrigin::Equality(k) => eq_duals[k] = v,
            // a fixed variable's equality multiplier splits by sign
            RowOrigin::Fixed(j) => {
                if v >= 0.0 {
                    upper_duals[j] = v
                } else {
                    lower_duals[j] = -v
                }
            }
            _ => unreachable!(),
        }
    }
    for (r, origin) in a.in_origin.iter().enumerate() {
        let v = z[r] * a.obj_scale / a.in_scale[r];
        match *origin {
            RowOrigin::Inequality(k) => ineq_duals[k] = v,
            RowOrigin::Upper(j) => upper_duals[j] = v,
            RowOrigin::Lower(j) => lower_duals[j] = v,
            _ => unreachable!(),
        }
    }
    for k in 0..model.quadratic.len() {
        quad_duals[k] = z[ml + k] * a.obj_scale / a.quad_scale[k];
    }

    let value = model.objective_value(&p);
    let pv: Vec<f64> = p.iter().copied().collect();

    // residuals in original units
    let mut primal_residual = 0.0_f64;
    for r in &model.equalities {
        primal_residual = primal_residual.max((r.eval(&pv) - r.rhs).abs());
    }
    for r in &model.inequalities {
        primal_residual = primal_residual.max(r.eval(&pv) - r.rhs);
    }
    for j in 0..n {
        primal_residual = primal_residual
            .max(model.lower[j] - p[j])
            .max(p[j] - model.upper[j]);
    }
    for qc in &model.quadratic {
        primal_residual = primal_residual.max(qc.eval(&p));
    }

    let mut grad = &model.hessian * &p + &model.linear;
    let mut lagrangian = value;
    for (r, row) in model.equalities.iter().enumerate() {
        for &(j, c) in &row.coefs {
            grad[j] += eq_duals[r] * c;
        }
        lagrangian += eq_duals[r] * (row.eval(&pv) - row.rhs);
    }
    for (r, row) in model.inequalities.iter().enumerate() {
        for &(j, c) in &row.coefs {
            grad[j] += ineq_duals[r] * c;
        }
        lagrangian += ineq_duals[r] * (row.eval(&pv) - row.rhs);
    }
    for j in 0..n {
        grad[j] += upper_duals[j] - lower_duals[j];
        if model.upper[j].is_finite() {
            lagrangian += upper_duals[j] * (p[j] - model.upper[j]);
        }
        if model.lower[j].is_finite() {
            lagrangian += lower_duals[j] * (model.lower[j] - p[j]);
        }
    }
    for (k, qc) in model.quadratic.iter().enumerate() {
        grad += qc.gradient(&p) * quad_duals[k];
        lagrangian += quad_duals[k] * qc.eval(&p);
    }

    QpSolution {
        status,
        point: p,
        value,
        eq_duals,
        ineq_duals,
        lower_duals,
        upper_duals,
        quad_duals,
        iterations,
        primal_residual: primal_residual.max(0.0),
        dual_residual: inf_norm(&grad),
        gap: value - lagrangian,
    }
}
