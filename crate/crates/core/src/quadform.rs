//! Sparse quadratic expressions `½ pᵀAp + bᵀp + d` over named variables.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variable identifiers shared by reformulations and relaxations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Var {
    /// Binary decision variable `x_i`.
    X(usize),
    /// Lifted product `X_ij`, `i <= j`.
    Lifted(usize, usize),
    /// Epigraph scalar bounding `xᵀZx`.
    W,
    /// Aggregated valid-inequality scalar.
    V,
    /// Per-inequality scalar `v_t`.
    CutValue(usize),
}

impl Var {
    pub fn lifted(i: usize, j: usize) -> Var {
        if i <= j {
            Var::Lifted(i, j)
        } else {
            Var::Lifted(j, i)
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Var::X(_))
    }
}

impl std::fmt::Display for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::Lifted(i, j) => write!(f, "X{}_{}", i + 1, j + 1),
            Var::W => write!(f, "w"),
            Var::V => write!(f, "v"),
            Var::CutValue(t) => write!(f, "v{}", t + 1),
        }
    }
}

/// `½ pᵀAp + bᵀp + d` with `A` stored by its upper triangle.
///
/// For `a < b` the stored value is `A_ab`, the coefficient of the monomial
/// `p_a p_b`; on the diagonal it is `A_aa`, contributing `½ A_aa p_a²`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "QuadFormRepr", from = "QuadFormRepr")]
pub struct QuadForm {
    quad: BTreeMap<(Var, Var), f64>,
    linear: BTreeMap<Var, f64>,
    constant: f64,
}

#[derive(Serialize, Deserialize)]
struct QuadFormRepr {
    quadratic: Vec<(Var, Var, f64)>,
    linear: Vec<(Var, f64)>,
    constant: f64,
}

impl From<QuadForm> for QuadFormRepr {
    fn from(f: QuadForm) -> Self {
        QuadFormRepr {
            quadratic: f.quad.into_iter().map(|((a, b), v)| (a, b, v)).collect(),
            linear: f.linear.into_iter().collect(),
            constant: f.constant,
        }
    }
}

impl From<QuadFormRepr> for QuadForm {
    fn from(r: QuadFormRepr) -> Self {
        QuadForm {
            quad: r
                .quadratic
                .into_iter()
                .map(|(a, b, v)| ((a, b), v))
                .collect(),
            linear: r.linear.into_iter().collect(),
            constant: r.constant,
        }
    }
}

fn ordered(a: Var, b: Var) -> (Var, Var) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl QuadForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(d: f64) -> Self {
        Self {
            constant: d,
            ..Self::default()
        }
    }

    /// Adds `coef · p_a · p_b` (so `a == b` adds `coef · p_a²`).
    pub fn add_product(&mut self, a: Var, b: Var, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let key = ordered(a, b);
        // a square p_a² carries ½A_aa, so A_aa = 2·coef
        let stored = if a == b { 2.0 * coef } else { coef };
        let e = self.quad.entry(key).or_insert(0.0);
        *e += stored;
        if *e == 0.0 {
            self.quad.remove(&key);
        }
    }

    pub fn add_linear(&mut self, a: Var, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let e = self.linear.entry(a).or_insert(0.0);
        *e += coef;
        if *e == 0.0 {
            self.linear.remove(&a);
        }
    }

    pub fn add_constant(&mut self, d: f64) {
        self.constant += d;
    }

    /// Adds `scale · other`.
    pub fn add_scaled(&mut self, other: &QuadForm, scale: f64) {
        for (&(a, b), &v) in &other.quad {
            let coef = if a == b { 0.5 * v } else { v };
            self.add_product(a, b, scale * coef);
        }
        for (&a, &v) in &other.linear {
            self.add_linear(a, scale * v);
        }
        self.constant += scale * other.constant;
    }

    pub fn scaled(&self, scale: f64) -> QuadForm {
        let mut out = QuadForm::new();
        out.add_scaled(self, scale);
        out
    }

    /// Stored matrix entry `A_ab` (upper-triangle convention).
    pub fn quad_entry(&self, a: Var, b: Var) -> f64 {
        self.quad.get(&ordered(a, b)).copied().unwrap_or(0.0)
    }

    /// Coefficient of the monomial `p_a p_b` (or `p_a²`).
    pub fn product_coef(&self, a: Var, b: Var) -> f64 {
        let v = self.quad_entry(a, b);
        if a == b {
            0.5 * v
        } else {
            v
        }
    }

    pub fn linear_coef(&self, a: Var) -> f64 {
        self.linear.get(&a).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    /// Upper-triangle entries `((a, b), A_ab)`.
    pub fn quad_terms(&self) -> impl Iterator<Item = (Var, Var, f64)> + '_ {
        self.quad.iter().map(|(&(a, b), &v)| (a, b, v))
    }

    pub fn linear_terms(&self) -> impl Iterator<Item = (Var, f64)> + '_ {
        self.linear.iter().map(|(&a, &v)| (a, v))
    }

    pub fn is_linear(&self) -> bool {
        self.quad.is_empty()
    }

    /// Ordered list of every variable the form touches.
    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self
            .quad
            .keys()
            .flat_map(|&(a, b)| [a, b])
            .chain(self.linear.keys().copied())
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Variables appearing in quadratic terms.
    pub fn quad_vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.quad.keys().flat_map(|&(a, b)| [a, b]).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Dense symmetric `A` over `vars`.
    pub fn matrix(&self, vars: &[Var]) -> DMatrix<f64> {
        let index: BTreeMap<Var, usize> = vars.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut a = DMatrix::zeros(vars.len(), vars.len());
        for (&(p, q), &v) in &self.quad {
            if let (Some(&i), Some(&j)) = (index.get(&p), index.get(&q)) {
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    pub fn eval(&self, point: &BTreeMap<Var, f64>) -> Result<f64> {
        let get = |v: &Var| {
            point
                .get(v)
                .copied()
                .ok_or_else(|| Error::Input(format!("assignment is missing variable {v}")))
        };
        let mut total = self.constant;
        for (&(a, b), &coef) in &self.quad {
            let pa = get(&a)?;
            let pb = get(&b)?;
            total += if a == b {
                0.5 * coef * pa * pa
            } else {
                coef * pa * pb
            };
        }
        for (a, &coef) in &self.linear {
            total += coef * get(a)?;
        }
        Ok(total)
    }
}

/// Evaluates `f` at `point`; every variable of `f` must be assigned.
pub fn eval_quadform(f: &QuadForm, point: &BTreeMap<Var, f64>) -> Result<f64> {
    f.eval(point)
}
