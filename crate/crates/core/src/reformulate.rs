//! QCR, QCRE, QNR, QNRE and QNRE-AGG reformulations.
//!
//! All five share the convex part
//!
//! ```text
//!     ½ xᵀ(Q + 2 diag(λ) - 2Z)x + (c - λ)ᵀx
//! ```
//!
//! and differ in how the remainder `Z·X` (and, for the valid-inequality
//! variants, `Σ γ_t g_t`) is carried: explicitly through lifted variables, or
//! through an epigraph scalar `w >= xᵀZx` that a solver must linearize.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use bqp_numerics::{eigen_sym, psd_status};

use crate::cuts::{mccormick_family, Cut, CutFamily};
use crate::error::{Error, Result};
use crate::instance::{binary_points, BqpInstance};
use crate::quadform::{QuadForm, Var};
use crate::relax::DualCertificate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Qcr,
    Qcre,
    Qnr,
    Qnre,
    QnreAgg,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Qcr => "qcr",
            Method::Qcre => "qcre",
            Method::Qnr => "qnr",
            Method::Qnre => "qnre",
            Method::QnreAgg => "qnre-agg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSource {
    BaseSdp,
    McCormickPool,
    TrianglePool,
    Manual,
}

/// Perturbation weights `(λ, Z, γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReformParams {
    pub lambda: Vec<f64>,
    /// Symmetric with zero diagonal.
    pub z: DMatrix<f64>,
    pub gamma: Vec<(Cut, f64)>,
    pub source: ParamSource,
    /// Uniform shift added to every `λ_i` to restore positive semidefiniteness.
    pub ridge: f64,
}

/// Entries of `Z` at or below this magnitude are treated as zero.
pub const Z_ZERO_TOL: f64 = 1e-9;

impl ReformParams {
    pub fn manual(lambda: Vec<f64>, z: DMatrix<f64>, gamma: Vec<(Cut, f64)>) -> Self {
        Self {
            lambda,
            z,
            gamma,
            source: ParamSource::Manual,
            ridge: 0.0,
        }
    }

    pub fn diagonal(lambda: Vec<f64>) -> Self {
        let n = lambda.len();
        Self::manual(lambda, DMatrix::zeros(n, n), Vec::new())
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn z_is_zero(&self) -> bool {
        self.z.iter().all(|v| *v == 0.0)
    }

    /// `Q + 2 diag(λ) - 2Z + Σ γ_t A_t`.
    pub fn perturbed_hessian(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n();
        let mut h = q - &self.z * 2.0;
        for i in 0..n {
            h[(i, i)] += 2.0 * self.lambda[i];
        }
        for (cut, g) in &self.gamma {
            for &((i, j), a) in &cut.lifted {
                h[(i, j)] += g * a;
                h[(j, i)] += g * a;
            }
        }
        h
    }
}

fn psd_tol() -> f64 {
    1e-8
}

/// Enforces the PSD invariant by a uniform shift of `λ`.
fn repair(q: &DMatrix<f64>, mut params: ReformParams) -> Result<ReformParams> {
    let qnorm = bqp_numerics::spectral_norm(q)?;
    let h = params.perturbed_hessian(q);
    let mu = eigen_sym(&h)?.min();
    if mu < 0.0 {
        let shift = -mu + 1e-8 * (1.0 + qnorm);
        if shift > 1e-4 * (1.0 + qnorm) {
            return Err(Error::Numerical(format!(
                "perturbed Hessian has min eigenvalue {mu:.3e}; repair exceeds the ridge cap"
            )));
        }
        for l in params.lambda.iter_mut() {
            *l += shift;
        }
        params.ridge += shift;
    }
    Ok(params)
}

fn grouped_z(cert: &DualCertificate) -> DMatrix<f64> {
    let mut z = cert.z();
    let n = z.nrows();
    for i in 0..n {
        z[(i, i)] = 0.0;
        for j in 0..n {
            if z[(i, j)].abs() <= Z_ZERO_TOL {
                z[(i, j)] = 0.0;
            }
        }
    }
    z
}

/// `λ` from a certificate with an empty pool.
pub fn qcr_params(cert: &DualCertificate) -> Result<ReformParams> {
    if !cert.multipliers.is_empty() {
        return Err(Error::Input(
            "QCR parameters come from the base relaxation (no cuts)".into(),
        ));
    }
    let n = cert.lambda.len();
    repair(
        &cert.q,
        ReformParams {
            lambda: cert.lambda.clone(),
            z: DMatrix::zeros(n, n),
            gamma: Vec::new(),
            source: ParamSource::BaseSdp,
            ridge: 0.0,
        },
    )
}

/// `λ` and `Z = M + N - R - S` from a McCormick-only certificate.
pub fn qcre_params(cert: &DualCertificate) -> Result<ReformParams> {
    if cert
        .multipliers
        .iter()
        .any(|(c, _)| c.family() != CutFamily::McCormick)
    {
        return Err(Error::Input(
            "QCRE parameters need a McCormick-only certificate".into(),
        ));
    }
    repair(
        &cert.q,
        ReformParams {
            lambda: cert.lambda.clone(),
            z: grouped_z(cert),
            gamma: Vec::new(),
            source: ParamSource::McCormickPool,
            ridge: 0.0,
        },
    )
}

/// `λ`, `Z` and the triangle multipliers `γ`.
pub fn qnre_params(cert: &DualCertificate) -> Result<ReformParams> {
    let source = if cert.gamma.is_empty() {
        ParamSource::McCormickPool
    } else {
        ParamSource::TrianglePool
    };
    repair(
        &cert.q,
        ReformParams {
            lambda: cert.lambda.clone(),
            z: grouped_z(cert),
            gamma: cert.gamma.clone(),
            source,
            ridge: 0.0,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintSense {
    /// `form <= 0`
    Le,
    /// `form = 0`
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convexity {
    Linear,
    Convex,
    Nonconvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintRole {
    McCormick,
    Epigraph,
    CutDefinition,
    CutSign,
    Aggregate,
    ValidInequality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReformConstraint {
    pub form: QuadForm,
    pub sense: ConstraintSense,
    pub convexity: Convexity,
    pub role: ConstraintRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReformulatedProblem {
    pub method: Method,
    pub n: usize,
    pub objective: QuadForm,
    pub constraints: Vec<ReformConstraint>,
    pub aux: Vec<Var>,
    pub params: ReformParams,
}

/// Classifies the `<= 0` form of a quadratic.
pub fn classify_convexity(q: &QuadForm) -> Convexity {
    if q.is_linear() {
        return Convexity::Linear;
    }
    let vars = q.quad_vars();
    match psd_status(&q.matrix(&vars), 1e-9) {
        Ok(st) if st.psd => Convexity::Convex,
        _ => Convexity::Nonconvex,
    }
}

fn constraint(form: QuadForm, sense: ConstraintSense, role: ConstraintRole) -> ReformConstraint {
    let convexity = match (sense, classify_convexity(&form)) {
        (_, Convexity::Linear) => Convexity::Linear,
        (ConstraintSense::Eq, _) => Convexity::Nonconvex,
        (_, c) => c,
    };
    ReformConstraint {
        form,
        sense,
        convexity,
        role,
    }
}

fn check_dims(inst: &BqpInstance, params: &ReformParams) -> Result<()> {
    let n = inst.n();
    if params.lambda.len() != n || params.z.nrows() != n || params.z.ncols() != n {
        return Err(Error::Input(
            "parameter dimensions do not match the instance".into(),
        ));
    }
    for i in 0..n {
        if params.z[(i, i)] != 0.0 {
            return Err(Error::Input("Z must have a zero diagonal".into()));
        }
        for j in 0..n {
            if params.z[(i, j)] != params.z[(j, i)] {
                return Err(Error::Input("Z must be symmetric".into()));
            }
        }
    }
    for (cut, g) in &params.gamma {
        if *g < 0.0 {
            return Err(Error::Input(format!("negative weight on {cut}")));
        }
        // the quadratic part of g_t must have a zero diagonal
        if cut.lifted.iter().any(|&((i, j), _)| i == j) {
            return Err(Error::Input(format!("{cut} has a diagonal product term")));
        }
    }
    Ok(())
}

/// `½ xᵀ(Q + 2 diag(λ) - 2Z + Σ γ_t A_t)x + (c - λ + Σ γ_t a_t)ᵀx + Σ γ_t a0_t`,
/// certified convex.
fn convex_part(inst: &BqpInstance, params: &ReformParams, with_gamma: bool) -> Result<QuadForm> {
    check_dims(inst, params)?;
    let n = inst.n();
    let q = inst.q();
    let c = inst.c();
    let mut f = QuadForm::new();
    for i in 0..n {
        f.add_product(Var::X(i), Var::X(i), 0.5 * q[(i, i)] + params.lambda[i]);
        f.add_linear(Var::X(i), c[i] - params.lambda[i]);
        for j in (i + 1)..n {
            f.add_product(Var::X(i), Var::X(j), q[(i, j)] - 2.0 * params.z[(i, j)]);
        }
    }
    if with_gamma {
        for (cut, g) in &params.gamma {
            f.add_scaled(&cut.binary_form(), *g);
        }
    }
    let vars: Vec<Var> = (0..n).map(Var::X).collect();
    let h = f.matrix(&vars);
    let norm = bqp_numerics::spectral_norm(&h)?;
    let st = psd_status(&h, 0.0)?;
    if st.min_eig < -psd_tol() * (1.0 + norm) {
        return Err(Error::Input(format!(
            "perturbed Hessian is not positive semidefinite (min eigenvalue {:.3e})",
            st.min_eig
        )));
    }
    Ok(f)
}

/// `xᵀZx - w`.
fn epigraph(params: &ReformParams) -> ReformConstraint {
    let n = params.n();
    let mut f = QuadForm::new();
    for i in 0..n {
        for j in (i + 1)..n {
            f.add_product(Var::X(i), Var::X(j), 2.0 * params.z[(i, j)]);
        }
    }
    f.add_linear(Var::W, -1.0);
    constraint(f, ConstraintSense::Le, ConstraintRole::Epigraph)
}

fn z_pairs(params: &ReformParams) -> Vec<(usize, usize)> {
    let n = params.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if params.z[(i, j)].abs() > Z_ZERO_TOL {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn build_qcr(inst: &BqpInstance, params: &ReformParams) -> Result<ReformulatedProblem> {
    if !params.z_is_zero() || !params.gamma.is_empty() {
        return Err(Error::Input("QCR takes diagonal perturbations only".into()));
    }
    Ok(ReformulatedProblem {
        method: Method::Qcr,
        n: inst.n(),
        objective: convex_part(inst, params, false)?,
        constraints: Vec::new(),
        aux: Vec::new(),
        params: params.clone(),
    })
}

pub fn build_qcre(inst: &BqpInstance, params: &ReformParams) -> Result<ReformulatedProblem> {
    if !params.gamma.is_empty() {
        return Err(Error::Input(
            "QCRE takes no valid-inequality weights".into(),
        ));
    }
    let mut objective = convex_part(inst, params, false)?;
    let mut constraints = Vec::new();
    let mut aux = Vec::new();
    for (i, j) in z_pairs(params) {
        objective.add_linear(Var::Lifted(i, j), 2.0 * params.z[(i, j)]);
        aux.push(Var::Lifted(i, j));
        for cut in mccormick_family(i, j)? {
            constraints.push(constraint(
                cut.lifted_form(),
                ConstraintSense::Le,
                ConstraintRole::McCormick,
            ));
        }
    }
    Ok(ReformulatedProblem {
        method: Method::Qcre,
        n: inst.n(),
        objective,
        constraints,
        aux,
        params: params.clone(),
    })
}

pub fn build_qnr(inst: &BqpInstance, params: &ReformParams) -> Result<ReformulatedProblem> {
    if !params.gamma.is_empty() {
        return Err(Error::Input("QNR takes no valid-inequality weights".into()));
    }
    let mut objective = convex_part(inst, params, false)?;
    objective.add_linear(Var::W, 1.0);
    Ok(ReformulatedProblem {
        method: Method::Qnr,
        n: inst.n(),
        objective,
        constraints: vec![epigraph(params)],
        aux: vec![Var::W],
        params: params.clone(),
    })
}

/// One scalar `v_t = g_t(x)` per valid inequality, each kept `<= 0`.
pub fn build_qnre(inst: &BqpInstance, params: &ReformParams) -> Result<ReformulatedProblem> {
    let mut objective = convex_part(inst, params, true)?;
    objective.add_linear(Var::W, 1.0);
    let mut constraints = vec![epigraph(params)];
    let mut aux = vec![Var::W];
    for (t, (cut, g)) in params.gamma.iter().enumerate() {
        let v = Var::CutValue(t);
        objective.add_linear(v, -g);
        let mut def = cut.binary_form();
        def.add_linear(v, -1.0);
        constraints.push(constraint(
            def,
            ConstraintSense::Eq,
            ConstraintRole::CutDefinition,
        ));
        let mut sign = QuadForm::new();
        sign.add_linear(v, 1.0);
        constraints.push(constraint(
            sign,
            ConstraintSense::Le,
            ConstraintRole::CutSign,
        ));
        aux.push(v);
    }
    Ok(ReformulatedProblem {
        method: Method::Qnre,
        n: inst.n(),
        objective,
        constraints,
        aux,
        params: params.clone(),
    })
}

/// Which valid inequalities a QNRE-AGG build keeps as explicit `g_t <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaFilter {
    /// Keep `t` when `γ_t > tol`.
    Positive(f64),
    All,
}

impl GammaFilter {
    /// Numerical zero for multipliers: `1e-7 (1 + max|Q_ij|)`.
    pub fn default_for(inst: &BqpInstance) -> Self {
        let qmax = inst.q().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        GammaFilter::Positive(1e-7 * (1.0 + qmax))
    }

    fn keeps(&self, g: f64) -> bool {
        match *self {
            GammaFilter::Positive(tol) => g > tol,
            GammaFilter::All => true,
        }
    }
}

/// A single scalar `v <= Σ γ_t g_t(x)`, plus `g_t(x) <= 0` for the kept `t`.
pub fn build_qnre_agg(
    inst: &BqpInstance,
    params: &ReformParams,
    filter: GammaFilter,
) -> Result<ReformulatedProblem> {
    let mut objective = convex_part(inst, params, true)?;
    objective.add_linear(Var::W, 1.0);
    objective.add_linear(Var::V, -1.0);
    let mut agg = QuadForm::new();
    agg.add_linear(Var::V, 1.0);
    for (cut, g) in &params.gamma {
        agg.add_scaled(&cut.binary_form(), -g);
    }
    let mut constraints = vec![
        epigraph(params),
        constraint(agg, ConstraintSense::Le, ConstraintRole::Aggregate),
    ];
    for (cut, g) in &params.gamma {
        if filter.keeps(*g) {
            constraints.push(constraint(
                cut.binary_form(),
                ConstraintSense::Le,
                ConstraintRole::ValidInequality,
            ));
        }
    }
    Ok(ReformulatedProblem {
        method: Method::QnreAgg,
        n: inst.n(),
        objective,
        constraints,
        aux: vec![Var::W, Var::V],
        params: params.clone(),
    })
}

impl ReformulatedProblem {
    /// Binary point with every auxiliary variable at its defining value.
    pub fn defining_point(&self, x: &[u8]) -> BTreeMap<Var, f64> {
        let xf: Vec<f64> = x.iter().map(|&b| f64::from(b)).collect();
        let mut p: BTreeMap<Var, f64> = (0..self.n).map(|i| (Var::X(i), xf[i])).collect();
        for &a in &self.aux {
            let val = match a {
                Var::Lifted(i, j) => xf[i] * xf[j],
                Var::W => {
                    let mut w = 0.0;
                    for i in 0..self.n {
                        for j in 0..self.n {
                            w += self.params.z[(i, j)] * xf[i] * xf[j];
                        }
                    }
                    w
                }
                Var::V => self
                    .params
                    .gamma
                    .iter()
                    .map(|(cut, g)| g * cut.eval_binary(x))
                    .sum(),
                Var::CutValue(t) => self.params.gamma[t].0.eval_binary(x),
                Var::X(_) => unreachable!("binaries are not auxiliary"),
            };
            p.insert(a, val);
        }
        p
    }

    pub fn objective_at(&self, x: &[u8]) -> f64 {
        self.objective
            .eval(&self.defining_point(x))
            .expect("defining point covers every variable")
    }

    /// Largest constraint violation at the defining point.
    pub fn constraint_violation_at(&self, x: &[u8]) -> f64 {
        let p = self.defining_point(x);
        self.constraints
            .iter()
            .map(|c| {
                let v = c
                    .form
                    .eval(&p)
                    .expect("defining point covers every variable");
                match c.sense {
                    ConstraintSense::Le => v.max(0.0),
                    ConstraintSense::Eq => v.abs(),
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reformulations serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("bad reformulation dump: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckMode {
    Exhaustive,
    /// `count` distinct pseudo-random points from a fixed seed.
    Sampled {
        count: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Default)]
pub struct EquivalenceReport {
    pub points: usize,
    pub max_deviation: f64,
    pub max_constraint_violation: f64,
    /// `(x, reformulated, original)` where the relative tolerance failed.
    pub failures: Vec<(Vec<u8>, f64, f64)>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares reformulated and original objectives on binary points with the
/// auxiliaries at their defining values (tolerance `1e-9 (1 + |original|)`).
pub fn check_equivalence(
    reform: &ReformulatedProblem,
    inst: &BqpInstance,
    mode: CheckMode,
) -> Result<EquivalenceReport> {
    let n = inst.n();
    let points: Vec<Vec<u8>> = match mode {
        CheckMode::Exhaustive => {
            if n > 15 {
                return Err(Error::Refused(format!(
                    "exhaustive equivalence check needs n <= 15, got {n}"
                )));
            }
            binary_points(n).collect()
        }
        CheckMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect())
                .collect()
        }
    };
    let mut report = EquivalenceReport::default();
    for x in points {
        let lhs = reform.objective_at(&x);
        let rhs = inst.objective_binary(&x);
        let dev = (lhs - rhs).abs();
        report.points += 1;
        report.max_deviation = report.max_deviation.max(dev);
        report.max_constraint_violation = report
            .max_constraint_violation
            .max(reform.constraint_violation_at(&x));
        if dev > 1e-9 * (1.0 + rhs.abs()) {
            report.failures.push((x, lhs, rhs));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> BqpInstance {
        BqpInstance::from_upper(2, &[(0, 1, 4.0)], &[-3.0, -3.0]).unwrap()
    }

    fn e1_params() -> ReformParams {
        let z = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        ReformParams::manual(vec![2.0, 2.0], z, Vec::new())
    }

    #[test]
    fn qcr_objective_expands() {
        let r = build_qcr(&e1(), &ReformParams::diagonal(vec![2.0, 2.0])).unwrap();
        // 2(x1+x2)^2 - 5x1 - 5x2
        assert_eq!(r.objective.product_coef(Var::X(0), Var::X(0)), 2.0);
        assert_eq!(r.objective.product_coef(Var::X(0), Var::X(1)), 4.0);
        assert_eq!(r.objective.linear_coef(Var::X(0)), -5.0);
        assert_eq!(r.objective_at(&[1, 1]), -2.0);
    }

    #[test]
    fn qcre_objective_expands() {
        let r = build_qcre(&e1(), &e1_params()).unwrap();
        assert_eq!(r.aux, vec![Var::Lifted(0, 1)]);
        assert_eq!(r.objective.product_coef(Var::X(0), Var::X(1)), 0.0);
        assert_eq!(r.objective.product_coef(Var::X(1), Var::X(1)), 2.0);
        assert_eq!(r.objective.linear_coef(Var::Lifted(0, 1)), 4.0);
        assert_eq!(r.constraints.len(), 4);
        assert_eq!(r.objective_at(&[1, 1]), -2.0);
    }

    #[test]
    fn qnr_epigraph_is_nonconvex() {
        let r = build_qnr(&e1(), &e1_params()).unwrap();
        assert_eq!(r.constraints[0].convexity, Convexity::Nonconvex);
        let p = r.defining_point(&[1, 1]);
        assert_eq!(p[&Var::W], 4.0);
        assert_eq!(r.objective_at(&[1, 1]), -2.0);
    }

    #[test]
    fn rejects_indefinite_parameters() {
        assert!(build_qcr(&e1(), &ReformParams::diagonal(vec![0.0, 0.0])).is_err());
        let mut p = e1_params();
        p.lambda = vec![-0.5, -0.5];
        assert!(build_qnr(&e1(), &p).is_err());
    }

    #[test]
    fn corrupted_lambda_is_detected() {
        let inst = e1();
        let good = build_qcr(&inst, &ReformParams::diagonal(vec![2.0, 2.0])).unwrap();
        let mut bad = good.clone();
        bad.objective.add_product(Var::X(0), Var::X(0), 1.0);
        let rep = check_equivalence(&good, &inst, CheckMode::Exhaustive).unwrap();
        assert!(rep.passed() && rep.max_deviation == 0.0);
        let rep = check_equivalence(&bad, &inst, CheckMode::Exhaustive).unwrap();
        assert!(!rep.passed() && rep.max_deviation >= 1.0);
    }
}
