//! Solver-style lower bounds for reformulated problems: fix, box-relax,
//! linearize nonconvex quadratics through `X_ij`, and envelope each product.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use bqp_numerics::{solve_qp, QpModel, QpSettings, QpStatus, QuadraticConstraint};

use crate::cuts::mccormick_family;
use crate::error::{Error, Result};
use crate::quadform::{QuadForm, Var};
use crate::reformulate::{classify_convexity, ConstraintSense, Convexity, ReformulatedProblem};

/// Partial assignment of binaries, produced by branching.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixings(BTreeMap<usize, u8>);

impl Fixings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(usize, u8)]) -> Result<Self> {
        let mut f = Self::new();
        for &(i, v) in pairs {
            f.fix(i, v)?;
        }
        Ok(f)
    }

    pub fn fix(&mut self, i: usize, v: u8) -> Result<()> {
        if v > 1 {
            return Err(Error::Input(format!("fixing value {v} is not binary")));
        }
        match self.0.get(&i) {
            Some(&old) if old != v => Err(Error::Input(format!(
                "variable {i} is already fixed to {old}"
            ))),
            _ => {
                self.0.insert(i, v);
                Ok(())
            }
        }
    }

    pub fn with(&self, i: usize, v: u8) -> Result<Self> {
        let mut f = self.clone();
        f.fix(i, v)?;
        Ok(f)
    }

    pub fn get(&self, i: usize) -> Option<u8> {
        self.0.get(&i).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.0.iter().map(|(&i, &v)| (i, v))
    }

    fn check(&self, n: usize) -> Result<()> {
        match self.0.keys().next_back() {
            Some(&i) if i >= n => Err(Error::Input(format!("fixing index {i} out of range"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCormickOptions {
    /// Keep only the binding pair of envelope inequalities when every
    /// coefficient on `X_ij` has the same sign.
    pub same_sign_reduction: bool,
    /// Substitute fixed binaries away; otherwise keep them as variables with
    /// equal bounds.
    pub eliminate_fixed: bool,
    pub qp: QpSettings,
}

impl Default for McCormickOptions {
    fn default() -> Self {
        Self {
            same_sign_reduction: true,
            eliminate_fixed: true,
            qp: QpSettings::default(),
        }
    }
}

/// A convex QP whose optimal value bounds the reformulated problem.
#[derive(Debug, Clone)]
pub struct RelaxedModel {
    pub qp: QpModel,
    pub columns: Vec<Var>,
    /// Products linearized by the relaxation.
    pub linearized: Vec<(usize, usize)>,
    /// Envelope inequalities added for the linearized products.
    pub envelope_rows: usize,
    n: usize,
    fixings: Fixings,
}

/// Affine image of a variable after fixing.
#[derive(Clone, Copy)]
enum Image {
    Const(f64),
    Scaled(Var, f64),
}

fn image(v: Var, fix: &Fixings) -> Image {
    match v {
        Var::X(i) => match fix.get(i) {
            Some(b) => Image::Const(f64::from(b)),
            None => Image::Scaled(v, 1.0),
        },
        Var::Lifted(i, j) => match (fix.get(i), fix.get(j)) {
            (Some(a), Some(b)) => Image::Const(f64::from(a * b)),
            (Some(a), None) => scaled_or_zero(Var::X(j), a),
            (None, Some(b)) => scaled_or_zero(Var::X(i), b),
            (None, None) => Image::Scaled(v, 1.0),
        },
        other => Image::Scaled(other, 1.0),
    }
}

fn scaled_or_zero(v: Var, a: u8) -> Image {
    if a == 0 {
        Image::Const(0.0)
    } else {
        Image::Scaled(v, 1.0)
    }
}

fn substitute(f: &QuadForm, fix: &Fixings) -> QuadForm {
    let mut out = QuadForm::constant(f.constant_term());
    for (a, b, entry) in f.quad_terms() {
        let coef = if a == b { 0.5 * entry } else { entry };
        match (image(a, fix), image(b, fix)) {
            (Image::Const(p), Image::Const(q)) => out.add_constant(coef * p * q),
            (Image::Const(p), Image::Scaled(v, s)) | (Image::Scaled(v, s), Image::Const(p)) => {
                out.add_linear(v, coef * p * s)
            }
            (Image::Scaled(u, s), Image::Scaled(v, t)) => {
                // x_i·x_i on binaries stays a square
                out.add_product(u, v, coef * s * t)
            }
        }
    }
    for (a, coef) in f.linear_terms() {
        match image(a, fix) {
            Image::Const(p) => out.add_constant(coef * p),
            Image::Scaled(v, s) => out.add_linear(v, coef * s),
        }
    }
    out
}

/// Replaces every binary product by its lifted variable.
fn linearize(f: &QuadForm, introduced: &mut BTreeSet<(usize, usize)>) -> Result<QuadForm> {
    let mut out = QuadForm::constant(f.constant_term());
    for (a, coef) in f.linear_terms() {
        out.add_linear(a, coef);
    }
    for (a, b, entry) in f.quad_terms() {
        let (Var::X(i), Var::X(j)) = (a, b) else {
            return Err(Error::Input(format!(
                "cannot linearize the product of {a} and {b}"
            )));
        };
        let coef = if i == j { 0.5 * entry } else { entry };
        let key = (i.min(j), i.max(j));
        introduced.insert(key);
        out.add_linear(Var::Lifted(key.0, key.1), coef);
    }
    Ok(out)
}

pub fn build_relaxation(
    reform: &ReformulatedProblem,
    fix: &Fixings,
    opts: &McCormickOptions,
) -> Result<RelaxedModel> {
    let n = reform.n;
    fix.check(n)?;
    let empty = Fixings::new();
    let sub_fix = if opts.eliminate_fixed { fix } else { &empty };

    let objective = substitute(&reform.objective, sub_fix);
    if classify_convexity(&objective) == Convexity::Nonconvex {
        return Err(Error::Input("objective is not convex after fixing".into()));
    }

    let mut introduced = BTreeSet::new();
    let mut linear_rows: Vec<(QuadForm, ConstraintSense, bool)> = Vec::new();
    let mut convex_rows: Vec<QuadForm> = Vec::new();
    for con in &reform.constraints {
        let f = substitute(&con.form, sub_fix);
        match (con.sense, classify_convexity(&f)) {
            (_, Convexity::Linear) => linear_rows.push((f, con.sense, false)),
            (ConstraintSense::Le, Convexity::Convex) => convex_rows.push(f),
            (sense, _) => linear_rows.push((linearize(&f, &mut introduced)?, sense, true)),
        }
    }

    // sign of every coefficient on each linearized product, in <= 0 form
    let mut signs: BTreeMap<(usize, usize), (bool, bool)> = BTreeMap::new();
    let mut note = |v: Var, coef: f64, eq: bool| {
        if let Var::Lifted(i, j) = v {
            if introduced.contains(&(i, j)) && coef != 0.0 {
                let e = signs.entry((i, j)).or_insert((false, false));
                if eq || coef > 0.0 {
                    e.0 = true;
                }
                if eq || coef < 0.0 {
                    e.1 = true;
                }
            }
        }
    };
    for (a, coef) in objective.linear_terms() {
        note(a, coef, false);
    }
    for (f, sense, _) in &linear_rows {
        for (a, coef) in f.linear_terms() {
            note(a, coef, *sense == ConstraintSense::Eq);
        }
    }
    for f in &convex_rows {
        for (a, coef) in f.linear_terms() {
            note(a, coef, false);
        }
    }

    // envelopes
    let mut envelope: Vec<QuadForm> = Vec::new();
    for &(i, j) in &introduced {
        if i == j {
            let mut lower = QuadForm::new();
            lower.add_product(Var::X(i), Var::X(i), 1.0);
            lower.add_linear(Var::Lifted(i, i), -1.0);
            convex_rows.push(lower);
            let mut upper = QuadForm::new();
            upper.add_linear(Var::Lifted(i, i), 1.0);
            upper.add_linear(Var::X(i), -1.0);
            envelope.push(upper);
            continue;
        }
        let (pos, neg) = signs.get(&(i, j)).copied().unwrap_or((true, true));
        let keep: &[usize] = match (opts.same_sign_reduction, pos, neg) {
            (true, true, false) => &[0, 1],
            (true, false, true) => &[2, 3],
            _ => &[0, 1, 2, 3],
        };
        let fam = mccormick_family(i, j)?;
        for &k in keep {
            envelope.push(fam[k].lifted_form());
        }
    }

    // columns: every binary (free or kept), then everything else referenced
    let mut cols: BTreeSet<Var> = (0..n)
        .filter(|&i| !opts.eliminate_fixed || fix.get(i).is_none())
        .map(Var::X)
        .collect();
    let mut collect = |f: &QuadForm| cols.extend(f.vars());
    collect(&objective);
    linear_rows.iter().for_each(|(f, _, _)| collect(f));
    convex_rows.iter().for_each(|f| collect(f));
    envelope.iter().for_each(|f| collect(f));
    let columns: Vec<Var> = cols.into_iter().collect();
    let index: BTreeMap<Var, usize> = columns.iter().enumerate().map(|(k, &v)| (v, k)).collect();

    let dim = columns.len();
    let mut qp = QpModel::new(dim);
    qp.hessian = objective.matrix(&columns);
    qp.linear = linear_vector(&objective, &index, dim);
    qp.constant = objective.constant_term();
    for (k, v) in columns.iter().enumerate() {
        if let Var::X(i) = v {
            match fix.get(*i) {
                Some(b) => qp.set_bounds(k, f64::from(b), f64::from(b)),
                None => qp.set_bounds(k, 0.0, 1.0),
            }
        }
    }
    let row = |f: &QuadForm| -> Vec<(usize, f64)> {
        f.linear_terms().map(|(v, a)| (index[&v], a)).collect()
    };
    for (f, sense, _) in &linear_rows {
        match sense {
            ConstraintSense::Le => qp.add_inequality(row(f), -f.constant_term()),
            ConstraintSense::Eq => qp.add_equality(row(f), -f.constant_term()),
        }
    }
    for f in &envelope {
        qp.add_inequality(row(f), -f.constant_term());
    }
    for f in &convex_rows {
        qp.quadratic.push(QuadraticConstraint {
            hessian: f.matrix(&columns),
            linear: linear_vector(f, &index, dim),
            constant: f.constant_term(),
        });
    }

    Ok(RelaxedModel {
        qp,
        columns,
        linearized: introduced.into_iter().collect(),
        envelope_rows: envelope.len(),
        n,
        fixings: fix.clone(),
    })
}

fn linear_vector(f: &QuadForm, index: &BTreeMap<Var, usize>, dim: usize) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    for (a, coef) in f.linear_terms() {
        v[index[&a]] += coef;
    }
    v
}

#[derive(Debug, Clone)]
pub struct BoundOutcome {
    /// `+∞` when the fixed subproblem is infeasible.
    pub value: f64,
    /// Relaxed binaries, fixed entries filled in.
    pub x: Vec<f64>,
    pub qp_iterations: usize,
}

impl RelaxedModel {
    pub fn solve(&self, settings: &QpSettings) -> Result<BoundOutcome> {
        let mut x: Vec<f64> = (0..self.n)
            .map(|i| self.fixings.get(i).map_or(0.0, f64::from))
            .collect();
        if self.columns.is_empty() {
            return Ok(BoundOutcome {
                value: self.qp.constant,
                x,
                qp_iterations: 0,
            });
        }
        let sol = solve_qp(&self.qp, settings)?;
        match sol.status {
            QpStatus::Optimal => {
                for (k, v) in self.columns.iter().enumerate() {
                    if let Var::X(i) = v {
                        x[*i] = sol.point[k].clamp(0.0, 1.0);
                    }
                }
                Ok(BoundOutcome {
                    value: sol.value,
                    x,
                    qp_iterations: sol.iterations,
                })
            }
            QpStatus::Infeasible => Ok(BoundOutcome {
                value: f64::INFINITY,
                x,
                qp_iterations: sol.iterations,
            }),
            other => Err(Error::Numerical(format!(
                "relaxation QP ended with status {other:?}"
            ))),
        }
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.qp.hessian
    }
}

/// Optimal value of the relaxation for the given fixings.
pub fn bound(reform: &ReformulatedProblem, fix: &Fixings) -> Result<f64> {
    bound_with(reform, fix, &McCormickOptions::default()).map(|b| b.value)
}

pub fn bound_with(
    reform: &ReformulatedProblem,
    fix: &Fixings,
    opts: &McCormickOptions,
) -> Result<BoundOutcome> {
    build_relaxation(reform, fix, opts)?.solve(&opts.qp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::BqpInstance;
    use crate::reformulate::{build_qcr, build_qnr, ReformParams};
    use approx::assert_abs_diff_eq;

    fn e1() -> BqpInstance {
        BqpInstance::from_upper(2, &[(0, 1, 4.0)], &[-3.0, -3.0]).unwrap()
    }

    fn e1_qnr() -> ReformulatedProblem {
        let z = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        build_qnr(&e1(), &ReformParams::manual(vec![2.0, 2.0], z, Vec::new())).unwrap()
    }

    #[test]
    fn qnr_root_structure_and_bound() {
        let r = e1_qnr();
        let m = build_relaxation(&r, &Fixings::new(), &McCormickOptions::default()).unwrap();
        assert_eq!(
            m.columns,
            vec![Var::X(0), Var::X(1), Var::Lifted(0, 1), Var::W]
        );
        assert_eq!(m.envelope_rows, 2);
        assert_abs_diff_eq!(bound(&r, &Fixings::new()).unwrap(), -4.0, epsilon = 1e-7);
    }

    #[test]
    fn fixing_eliminates_product() {
        let r = e1_qnr();
        let fix = Fixings::from_pairs(&[(1, 1)]).unwrap();
        let m = build_relaxation(&r, &fix, &McCormickOptions::default()).unwrap();
        assert_eq!(m.columns, vec![Var::X(0), Var::W]);
    }

    #[test]
    fn qcr_relaxation_is_box_qp() {
        let r = build_qcr(&e1(), &ReformParams::diagonal(vec![2.0, 2.0])).unwrap();
        let m = build_relaxation(&r, &Fixings::new(), &McCormickOptions::default()).unwrap();
        assert!(m.linearized.is_empty());
        assert_abs_diff_eq!(bound(&r, &Fixings::new()).unwrap(), -3.125, epsilon = 1e-7);
    }

    #[test]
    fn fully_fixed_matches_objective() {
        let inst = e1();
        let r = e1_qnr();
        for x in crate::instance::binary_points(2) {
            let fix = Fixings::from_pairs(&[(0, x[0]), (1, x[1])]).unwrap();
            let b = bound(&r, &fix).unwrap();
            assert_abs_diff_eq!(b, inst.objective_binary(&x), epsilon = 1e-7);
        }
    }

    #[test]
    fn conflicting_fixings() {
        let mut f = Fixings::new();
        f.fix(0, 1).unwrap();
        assert!(f.fix(0, 0).is_err());
        assert!(f.fix(1, 2).is_err());
    }
}
