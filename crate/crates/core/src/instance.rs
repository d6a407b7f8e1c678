//! Binary quadratic program instances: `min ½ xᵀQx + cᵀx` over `x ∈ {0,1}ⁿ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

impl std::str::FromStr for Sense {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Sense::Min),
            "max" => Ok(Sense::Max),
            other => Err(Error::Input(format!("unknown sense '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub name: String,
    pub sense_original: Sense,
    pub density: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for InstanceMeta {
    fn default() -> Self {
        Self {
            name: String::from("unnamed"),
            sense_original: Sense::Min,
            density: None,
            seed: None,
        }
    }
}

/// A minimization instance. `q` is exactly symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BqpInstance {
    q: DMatrix<f64>,
    c: DVector<f64>,
    pub meta: InstanceMeta,
}

impl BqpInstance {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        Self::with_meta(q, c, InstanceMeta::default())
    }

    pub fn with_meta(q: DMatrix<f64>, c: DVector<f64>, meta: InstanceMeta) -> Result<Self> {
        let n = c.len();
        if n == 0 {
            return Err(Error::Input("instance needs at least one variable".into()));
        }
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::Input(format!(
                "Q is {}x{} but c has length {n}",
                q.nrows(),
                q.ncols()
            )));
        }
        if q.iter().chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("instance has non-finite coefficients".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if q[(i, j)] != q[(j, i)] {
                    return Err(Error::Input(format!("Q is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { q, c, meta })
    }

    /// Builds an instance from upper-triangle entries `(i, j, Q_ij)`, `i <= j`.
    pub fn from_upper(n: usize, entries: &[(usize, usize, f64)], c: &[f64]) -> Result<Self> {
        let mut q = DMatrix::zeros(n, n);
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::Input(format!("entry ({i}, {j}) out of range")));
            }
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
        Self::new(q, DVector::from_column_slice(c))
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn is_normalized(&self) -> bool {
        (0..self.n()).all(|i| self.q[(i, i)] == 0.0)
    }

    /// `½ xᵀQx + cᵀx` at any real point.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let mut total = 0.0;
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            total += x[i] * (self.c[i] + 0.5 * self.q[(i, i)] * x[i]);
            for j in (i + 1)..n {
                total += self.q[(i, j)] * x[i] * x[j];
            }
        }
        total
    }

    pub fn objective_binary(&self, x: &[u8]) -> f64 {
        let xf: Vec<f64> = x.iter().map(|&b| f64::from(b)).collect();
        self.objective(&xf)
    }

    /// Moves `½ Q_ii` into `c_i`; values agree on every binary point.
    pub fn normalize_diagonal(&self) -> BqpInstance {
        let mut q = self.q.clone();
        let mut c = self.c.clone();
        for i in 0..self.n() {
            c[i] += 0.5 * q[(i, i)];
            q[(i, i)] = 0.0;
        }
        BqpInstance {
            q,
            c,
            meta: self.meta.clone(),
        }
    }

    pub fn spectral_norm(&self) -> f64 {
        bqp_numerics::spectral_norm(&self.q).unwrap_or(f64::INFINITY)
    }
}

/// Default refusal threshold for exhaustive enumeration.
pub const BRUTE_FORCE_LIMIT: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct Enumerated {
    pub value: f64,
    pub x: Vec<u8>,
}

pub fn brute_force(inst: &BqpInstance) -> Result<Enumerated> {
    brute_force_with_limit(inst, BRUTE_FORCE_LIMIT)
}

/// Gray-code enumeration of all `2ⁿ` points. Values within `1e-9` of each
/// other are treated as ties and resolved to the lexicographically smallest x.
pub fn brute_force_with_limit(inst: &BqpInstance, limit: usize) -> Result<Enumerated> {
    let n = inst.n();
    if n > limit {
        return Err(Error::Refused(format!(
            "exhaustive enumeration of n = {n} exceeds the limit {limit}"
        )));
    }
    let q = inst.q();
    let c = inst.c();
    // flip gain pieces: c_k + ½Q_kk + Σ_{j≠k} Q_kj x_j
    let base: Vec<f64> = (0..n).map(|k| c[k] + 0.5 * q[(k, k)]).collect();
    let mut field = vec![0.0; n];
    let mut x = vec![0u8; n];
    let mut value = 0.0;
    let mut best = x.clone();
    let mut best_value = 0.0;
    let total: u64 = 1u64 << n;
    for step in 1..total {
        let k = step.trailing_zeros() as usize;
        let delta = base[k] + field[k];
        let sign = if x[k] == 0 { 1.0 } else { -1.0 };
        value += sign * delta;
        x[k] ^= 1;
        for j in 0..n {
            if j != k {
                field[j] += sign * q[(j, k)];
            }
        }
        if value < best_value - 1e-9 || (value <= best_value + 1e-9 && x < best) {
            best_value = value;
            best.copy_from_slice(&x);
        }
    }
    Ok(Enumerated {
        value: inst.objective_binary(&best),
        x: best,
    })
}

/// `(v* − lower) / |v*|`.
pub fn relative_gap(v_star: f64, lower: f64) -> Result<f64> {
    if v_star == 0.0 {
        return Err(Error::UndefinedGap);
    }
    Ok((v_star - lower) / v_star.abs())
}

/// Every binary point of dimension `n`, in lexicographic order.
pub fn binary_points(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0u64..(1u64 << n)).map(move |k| (0..n).map(|i| ((k >> (n - 1 - i)) & 1) as u8).collect())
}
