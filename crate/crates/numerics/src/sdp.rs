//! Primal-dual interior-point solver for small semidefinite programs with
//! linear equality and inequality rows.
//!
//! ```text
//!     minimize    ⟨C, Y⟩
//!     subject to  ⟨A_r, Y⟩  = b_r     (equality rows)
//!                 ⟨A_r, Y⟩ <= b_r     (inequality rows)
//!                 Y ⪰ 0
//! ```
//!
//! Matrices are given sparsely by their upper triangle: an entry `(a, b, w)`
//! with `a <= b` contributes `w * Y[a][b]` to the inner product, i.e. the
//! symmetric matrix has `w/2` at both `(a, b)` and `(b, a)` off the diagonal.
//!
//! The dual is `max bᵀy` subject to `S = C - Σ y_r A_r ⪰ 0` and `y_r <= 0` on
//! inequality rows. Search directions use the HKM scaling with a Mehrotra
//! predictor-corrector.

use nalgebra::{DMatrix, DVector};

use crate::linalg::max_psd_step;
use crate::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Eq,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpConstraint {
    pub entries: Vec<(usize, usize, f64)>,
    pub kind: ConstraintKind,
    pub rhs: f64,
}

impl SdpConstraint {
    pub fn eq(entries: Vec<(usize, usize, f64)>, rhs: f64) -> Self {
        Self {
            entries,
            kind: ConstraintKind::Eq,
            rhs,
        }
    }

    pub fn le(entries: Vec<(usize, usize, f64)>, rhs: f64) -> Self {
        Self {
            entries,
            kind: ConstraintKind::Le,
            rhs,
        }
    }

    /// `⟨A, Y⟩` for a symmetric `Y`.
    pub fn apply(&self, y: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(a, b, w)| w * y[(a, b)]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub dim: usize,
    pub objective: Vec<(usize, usize, f64)>,
    pub constraints: Vec<SdpConstraint>,
}

impl SdpProblem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn objective_value(&self, y: &DMatrix<f64>) -> f64 {
        self.objective.iter().map(|&(a, b, w)| w * y[(a, b)]).sum()
    }

    fn validate(&self) -> Result<(), NumericsError> {
        let check = |entries: &[(usize, usize, f64)]| -> Result<(), NumericsError> {
            for &(a, b, w) in entries {
                if a > b || b >= self.dim {
                    return Err(NumericsError::Dimension(format!(
                        "entry ({a}, {b}) is not in the upper triangle of a {0}x{0} matrix",
                        self.dim
                    )));
                }
                if !w.is_finite() {
                    return Err(NumericsError::NonFinite);
                }
            }
            Ok(())
        };
        if self.dim == 0 {
            return Err(NumericsError::Dimension("empty matrix variable".into()));
        }
        check(&self.objective)?;
        for c in &self.constraints {
            check(&c.entries)?;
            if !c.rhs.is_finite() {
                return Err(NumericsError::NonFinite);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    pub max_iter: usize,
    pub tol_gap: f64,
    pub tol_feas: f64,
    /// Looser thresholds accepted when progress stalls.
    pub accept_gap: f64,
    pub accept_feas: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            max_iter: 120,
            tol_gap: 1e-9,
            tol_feas: 1e-9,
            accept_gap: 1e-7,
            accept_feas: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Primal matrix `Y`.
    pub primal: DMatrix<f64>,
    /// Dual multipliers, one per row; non-positive on inequality rows.
    pub dual: Vec<f64>,
    /// Dual slack `S = C - Σ y_r A_r`.
    pub slack: DMatrix<f64>,
    /// `b_r - ⟨A_r, Y⟩` on inequality rows, zero on equality rows.
    pub row_slack: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

/// Row stored with both triangle halves of its symmetric matrix.
struct Row {
    full: Vec<(usize, usize, f64)>,
    rhs: f64,
    ineq: Option<usize>,
}

fn expand(entries: &[(usize, usize, f64)], scale: f64) -> Vec<(usize, usize, f64)> {
    let mut full = Vec::with_capacity(2 * entries.len());
    for &(a, b, w) in entries {
        let w = w / scale;
        if a == b {
            full.push((a, a, w));
        } else {
            full.push((a, b, 0.5 * w));
            full.push((b, a, 0.5 * w));
        }
    }
    full
}

fn dense(full: &[(usize, usize, f64)], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for &(a, b, w) in full {
        m[(a, b)] += w;
    }
    m
}

fn inner(full: &[(usize, usize, f64)], t: &DMatrix<f64>) -> f64 {
    full.iter().map(|&(a, b, w)| w * t[(a, b)]).sum()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn fro(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

fn lp_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .fold(f64::INFINITY, |a, (x, d)| a.min(-x / d))
}

pub fn solve_sdp(
    problem: &SdpProblem,
    settings: &SdpSettings,
) -> Result<SdpSolution, NumericsError> {
    problem.validate()?;
    let n = problem.dim;

    let c_scale = problem
        .objective
        .iter()
        .fold(0.0_f64, |m, &(_, _, w)| m.max(w.abs()));
    let c_scale = if c_scale > 0.0 { c_scale } else { 1.0 };
    let c = dense(&expand(&problem.objective, c_scale), n);

    let mut rows = Vec::with_capacity(problem.constraints.len());
    let mut row_scale = Vec::with_capacity(problem.constraints.len());
    let mut n_ineq = 0;
    for con in &problem.constraints {
        let s = con.entries.iter().fold(0.0_f64, |m, e| m.max(e.2.abs()));
        let s = if s > 0.0 { s } else { 1.0 };
        let ineq = match con.kind {
            ConstraintKind::Le => {
                n_ineq += 1;
                Some(n_ineq - 1)
            }
            ConstraintKind::Eq => None,
        };
        rows.push(Row {
            full: expand(&con.entries, s),
            rhs: con.rhs / s,
            ineq,
        });
        row_scale.push(s);
    }
    let m = rows.len();
    let b = DVector::from_iterator(m, rows.iter().map(|r| r.rhs));
    let b_norm = b.amax();
    let c_norm = fro(&c);

    let adjoint = |y: &DVector<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, n);
        for (r, row) in rows.iter().enumerate() {
            for &(a, bb, w) in &row.full {
                out[(a, bb)] += y[r] * w;
            }
        }
        out
    };
    let op = |t: &DMatrix<f64>| -> DVector<f64> {
        DVector::from_iterator(m, rows.iter().map(|r| inner(&r.full, t)))
    };

    let xi = 10.0_f64.max((n as f64).sqrt());
    let mut yy = DMatrix::<f64>::identity(n, n) * xi;
    let mut ss = DMatrix::<f64>::identity(n, n) * xi;
    let mut u = vec![xi; n_ineq];
    let mut v = vec![xi; n_ineq];
    let mut y = DVector::<f64>::zeros(m);

    let mut best: Option<(f64, DMatrix<f64>, DVector<f64>, DMatrix<f64>, Vec<f64>)> = None;
    let mut status = SdpStatus::NumericalFailure;
    let mut iterations = 0;
    let mut best_at = 0;
    let denom = (n + n_ineq) as f64;

    for it in 0..settings.max_iter {
        iterations = it;
        // residuals
        let ay = op(&yy);
        let mut r_p = &b - &ay;
        for (r, row) in rows.iter().enumerate() {
            if let Some(k) = row.ineq {
                r_p[r] -= u[k];
            }
        }
        let r_d = &c - adjoint(&y) - &ss;
        let mut r_v = vec![0.0; n_ineq];
        for (r, row) in rows.iter().enumerate() {
            if let Some(k) = row.ineq {
                r_v[k] = -y[r] - v[k];
            }
        }
        let pobj = inner(&expand(&problem.objective, c_scale), &yy);
        let dobj = b.dot(&y);
        let comp = yy.dot(&ss) + u.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let mu = comp / denom;

        let pinf = r_p.amax() / (1.0 + b_norm);
        let dinf = (fro(&r_d) + r_v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let gap = gap.max(comp / (1.0 + pobj.abs() + dobj.abs()));

        if gap <= settings.tol_gap && pinf <= settings.tol_feas && dinf <= settings.tol_feas {
            best = Some((0.0, yy.clone(), y.clone(), ss.clone(), u.clone()));
            status = SdpStatus::Optimal;
            break;
        }
        let merit = gap.max(pinf).max(dinf);
        if gap <= settings.accept_gap
            && pinf <= settings.accept_feas
            && dinf <= settings.accept_feas
            && best.as_ref().is_none_or(|bst| merit < bst.0)
        {
            best = Some((merit, yy.clone(), y.clone(), ss.clone(), u.clone()));
            best_at = it;
        }
        // accepted and no longer improving
        if best.is_some() && it >= best_at + 6 {
            break;
        }
        // divergence heuristics
        if y.amax() > 1e12 && dobj > 1e10 * (1.0 + pobj.abs()).min(1e12) && pinf > 1e-6 {
            status = SdpStatus::Infeasible;
            break;
        }
        if yy.amax() > 1e12 && pobj < -1e10 && dinf > 1e-6 {
            status = SdpStatus::Unbounded;
            break;
        }

        let Some(chol_s) = ss.clone().cholesky() else {
            break;
        };
        let Some(chol_y) = yy.clone().cholesky() else {
            break;
        };
        let s_inv = chol_s.inverse();

        // Schur complement ⟨A_r, Y A_s S⁻¹⟩ + diag(u/v)
        let mut schur = DMatrix::<f64>::zeros(m, m);
        let mut bs = DMatrix::<f64>::zeros(n, n);
        for (s_idx, row_s) in rows.iter().enumerate() {
            bs.fill(0.0);
            for &(p, q, w) in &row_s.full {
                // rank-one update w * Y[:,p] * Sinv[q,:]
                for j in 0..n {
                    let sq = w * s_inv[(q, j)];
                    if sq == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        bs[(i, j)] += yy[(i, p)] * sq;
                    }
                }
            }
            for (r_idx, row_r) in rows.iter().enumerate().skip(s_idx) {
                schur[(r_idx, s_idx)] = inner(&row_r.full, &bs);
            }
        }
        for r in 0..m {
            for s_idx in (r + 1)..m {
                schur[(r, s_idx)] = schur[(s_idx, r)];
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if let Some(k) = row.ineq {
                schur[(r, r)] += u[k] / v[k];
            }
        }
        let solver = SchurSolver::new(schur);

        let y_rd_sinv = &yy * &r_d * &s_inv;
        let a_y_rd = op(&y_rd_sinv);

        let direction = |kc: &DMatrix<f64>, rc_lp: &[f64]| -> Option<Direction> {
            let mut rhs = &r_p - op(kc) + &a_y_rd;
            for (r, row) in rows.iter().enumerate() {
                if let Some(k) = row.ineq {
                    rhs[r] -= (rc_lp[k] - u[k] * r_v[k]) / v[k];
                }
            }
            let recover = |dy: DVector<f64>| -> Direction {
                let ds = &r_d - adjoint(&dy);
                let mut dv = r_v.clone();
                for (r, row) in rows.iter().enumerate() {
                    if let Some(k) = row.ineq {
                        dv[k] -= dy[r];
                    }
                }
                let dyy = kc - sym(&(&yy * &ds * &s_inv));
                let du: Vec<f64> = (0..n_ineq)
                    .map(|k| (rc_lp[k] - u[k] * dv[k]) / v[k])
                    .collect();
                Direction {
                    dyy,
                    dy,
                    ds,
                    du,
                    dv,
                }
            };
            // The Schur matrix is badly conditioned near the optimum; refine
            // against the primal rows the direction has to satisfy.
            let residual = |d: &Direction| -> DVector<f64> {
                let mut e = op(&d.dyy) - &r_p;
                for (r, row) in rows.iter().enumerate() {
                    if let Some(k) = row.ineq {
                        e[r] += d.du[k];
                    }
                }
                e
            };
            let target = 1e-14 * (1.0 + r_p.amax() + b_norm);
            let mut d = recover(solver.solve(&rhs)?);
            let mut e = residual(&d);
            for _ in 0..12 {
                if e.amax() <= target {
                    break;
                }
                let next = recover(&d.dy - solver.solve(&e)?);
                let e_next = residual(&next);
                if e_next.amax() >= 0.9 * e.amax() {
                    break;
                }
                d = next;
                e = e_next;
            }
            Some(d)
        };

        let ly = chol_y.l();
        let ls = chol_s.l();
        let steps = |d: &Direction| -> (f64, f64) {
            let ap = max_psd_step(&ly, &d.dyy).min(lp_step(&u, &d.du));
            let ad = max_psd_step(&ls, &d.ds).min(lp_step(&v, &d.dv));
            (ap, ad)
        };

        // predictor
        let kc_aff = -&yy;
        let rc_aff: Vec<f64> = (0..n_ineq).map(|k| -u[k] * v[k]).collect();
        let Some(aff) = direction(&kc_aff, &rc_aff) else {
            break;
        };
        let (ap, ad) = steps(&aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let y_next = &yy + &aff.dyy * ap;
        let s_next = &ss + &aff.ds * ad;
        let mut comp_aff = y_next.dot(&s_next);
        for k in 0..n_ineq {
            comp_aff += (u[k] + ap * aff.du[k]) * (v[k] + ad * aff.dv[k]);
        }
        let sigma = (comp_aff / denom / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let kc = &s_inv * (sigma * mu) - &yy - sym(&(&aff.dyy * &aff.ds * &s_inv));
        let rc: Vec<f64> = (0..n_ineq)
            .map(|k| sigma * mu - u[k] * v[k] - aff.du[k] * aff.dv[k])
            .collect();
        let Some(d) = direction(&kc, &rc) else { break };
        let (ap, ad) = steps(&d);
        // back off further from the boundary when the steps are short
        let frac = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let ap = (frac * ap).min(1.0);
        let ad = (frac * ad).min(1.0);
        if !(ap > 0.0 && ad > 0.0) {
            break;
        }
        yy += &d.dyy * ap;
        yy = sym(&yy);
        for k in 0..n_ineq {
            u[k] += ap * d.du[k];
            v[k] += ad * d.dv[k];
        }
        y += &d.dy * ad;
        ss += &d.ds * ad;
        ss = sym(&ss);
        if yy
            .iter()
            .chain(ss.iter())
            .chain(y.iter())
            .any(|x| !x.is_finite())
        {
            break;
        }
    }

    let Some((_, yy, y, ss, u)) = best else {
        return Ok(SdpSolution {
            status: if status == SdpStatus::Optimal {
                SdpStatus::NumericalFailure
            } else {
                status
            },
            primal: yy,
            dual: vec![0.0; m],
            slack: ss * c_scale,
            row_slack: vec![0.0; m],
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            iterations,
            primal_infeasibility: f64::NAN,
            dual_infeasibility: f64::NAN,
        });
    };

    // unscale and measure in original units
    let dual: Vec<f64> = (0..m).map(|r| y[r] * c_scale / row_scale[r]).collect();
    let slack = ss * c_scale;
    let mut row_slack = vec![0.0; m];
    let mut pinf = 0.0_f64;
    for (r, con) in problem.constraints.iter().enumerate() {
        let val = con.apply(&yy);
        match con.kind {
            ConstraintKind::Eq => pinf = pinf.max((val - con.rhs).abs()),
            ConstraintKind::Le => {
                row_slack[r] = con.rhs - val;
                let _ = &u;
                pinf = pinf.max(val - con.rhs);
            }
        }
    }
    let mut resid = dense(&expand(&problem.objective, 1.0), n) - &slack;
    for (r, con) in problem.constraints.iter().enumerate() {
        resid -= dense(&expand(&con.entries, 1.0), n) * dual[r];
    }
    let mut dinf = resid.amax();
    for (r, con) in problem.constraints.iter().enumerate() {
        if con.kind == ConstraintKind::Le {
            dinf = dinf.max(dual[r]);
        }
    }
    let dual_objective = problem
        .constraints
        .iter()
        .zip(&dual)
        .map(|(c, y)| c.rhs * y)
        .sum();
    Ok(SdpSolution {
        status: SdpStatus::Optimal,
        primal_objective: problem.objective_value(&yy),
        primal: yy,
        dual,
        slack,
        row_slack,
        dual_objective,
        iterations,
        primal_infeasibility: pinf.max(0.0),
        dual_infeasibility: dinf.max(0.0),
    })
}

struct Direction {
    dyy: DMatrix<f64>,
    dy: DVector<f64>,
    ds: DMatrix<f64>,
    du: Vec<f64>,
    dv: Vec<f64>,
}

enum SchurSolver {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(
        DMatrix<f64>,
        nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    ),
}

impl SchurSolver {
    fn new(schur: DMatrix<f64>) -> Self {
        if let Some(ch) = schur.clone().cholesky() {
            return SchurSolver::Chol(ch);
        }
        let scale = schur.diagonal().amax().max(1e-300);
        let mut reg = schur.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += 1e-12 * scale;
        }
        if let Some(ch) = reg.clone().cholesky() {
            return SchurSolver::Chol(ch);
        }
        SchurSolver::Lu(schur, reg.lu())
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let x = match self {
            SchurSolver::Chol(ch) => ch.solve(rhs),
            SchurSolver::Lu(exact, lu) => {
                let mut x = lu.solve(rhs)?;
                for _ in 0..3 {
                    let r = rhs - exact * &x;
                    x += lu.solve(&r)?;
                }
                x
            }
        };
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_lp_like() {
        // min Y00 + 2 Y11 s.t. Y00 + Y11 = 1  -> 1
        let mut p = SdpProblem::new(2);
        p.objective = vec![(0, 0, 1.0), (1, 1, 2.0)];
        p.constraints
            .push(SdpConstraint::eq(vec![(0, 0, 1.0), (1, 1, 1.0)], 1.0));
        let sol = solve_sdp(&p, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_abs_diff_eq!(sol.primal_objective, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.dual_objective, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn off_diagonal_minimum() {
        // min 2 Y01 s.t. Y00 = 1, Y11 = 1  -> -2 (Y01 = -1)
        let mut p = SdpProblem::new(2);
        p.objective = vec![(0, 1, 2.0)];
        p.constraints
            .push(SdpConstraint::eq(vec![(0, 0, 1.0)], 1.0));
        p.constraints
            .push(SdpConstraint::eq(vec![(1, 1, 1.0)], 1.0));
        let sol = solve_sdp(&p, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_abs_diff_eq!(sol.primal_objective, -2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.primal[(0, 1)], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn inequality_row_has_nonpositive_dual() {
        // same as above plus Y01 >= -0.5, written as -Y01 <= 0.5
        let mut p = SdpProblem::new(2);
        p.objective = vec![(0, 1, 2.0)];
        p.constraints
            .push(SdpConstraint::eq(vec![(0, 0, 1.0)], 1.0));
        p.constraints
            .push(SdpConstraint::eq(vec![(1, 1, 1.0)], 1.0));
        p.constraints
            .push(SdpConstraint::le(vec![(0, 1, -1.0)], 0.5));
        let sol = solve_sdp(&p, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_abs_diff_eq!(sol.primal_objective, -1.0, epsilon = 1e-7);
        assert!(sol.dual[2] <= 1e-9);
        assert_abs_diff_eq!(sol.dual[2], -2.0, epsilon = 1e-6);
        assert!(sol.row_slack[2].abs() < 1e-7);
    }

    #[test]
    fn dual_slack_matches_definition() {
        let mut p = SdpProblem::new(3);
        p.objective = vec![(0, 1, 1.0), (1, 2, -3.0), (0, 2, 0.5), (1, 1, 1.0)];
        for i in 0..3 {
            p.constraints
                .push(SdpConstraint::eq(vec![(i, i, 1.0)], 1.0));
        }
        let sol = solve_sdp(&p, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!(sol.dual_infeasibility < 1e-7);
        assert!((sol.primal_objective - sol.dual_objective).abs() < 1e-7);
        let min_eig = crate::linalg::eigen_sym(&sol.slack).unwrap().min();
        assert!(min_eig > -1e-7);
    }

    #[test]
    fn rejects_lower_triangle_entries() {
        let mut p = SdpProblem::new(2);
        p.objective = vec![(1, 0, 1.0)];
        assert!(solve_sdp(&p, &SdpSettings::default()).is_err());
    }
}
