//! McCormick and triangle inequalities over the lifted pair `(x, X)`.
//!
//! Indices are 0-based. Every cut is a linear form `a₀ + Σ aᵢxᵢ + Σ a_ij X_ij`
//! required to be `<= 0`, with `X` addressed by its strict upper triangle.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadform::{QuadForm, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutFamily {
    McCormick,
    Triangle,
}

/// Identity of a cut: ordering is the canonical (family, indices, variant).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CutKey {
    pub family: CutFamily,
    pub indices: Vec<usize>,
    pub variant: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub key: CutKey,
    pub constant: f64,
    pub linear: Vec<(usize, f64)>,
    /// `((i, j), a_ij)` with `i < j`.
    pub lifted: Vec<((usize, usize), f64)>,
}

impl Cut {
    pub fn family(&self) -> CutFamily {
        self.key.family
    }

    pub fn variant(&self) -> u8 {
        self.key.variant
    }

    pub fn indices(&self) -> &[usize] {
        &self.key.indices
    }

    /// Left-hand side at `(x, X)`; positive means violated by that amount.
    pub fn violation(&self, x: &[f64], xx: &DMatrix<f64>) -> f64 {
        let mut v = self.constant;
        for &(i, a) in &self.linear {
            v += a * x[i];
        }
        for &((i, j), a) in &self.lifted {
            v += a * xx[(i, j)];
        }
        v
    }

    /// Value at a binary point with `X_ij = x_i x_j`.
    pub fn eval_binary(&self, x: &[u8]) -> f64 {
        let mut v = self.constant;
        for &(i, a) in &self.linear {
            v += a * f64::from(x[i]);
        }
        for &((i, j), a) in &self.lifted {
            v += a * f64::from(x[i] * x[j]);
        }
        v
    }

    /// The cut with `X_ij` replaced by `x_i x_j`, as a quadratic in `x`.
    pub fn binary_form(&self) -> QuadForm {
        let mut f = QuadForm::constant(self.constant);
        for &(i, a) in &self.linear {
            f.add_linear(Var::X(i), a);
        }
        for &((i, j), a) in &self.lifted {
            f.add_product(Var::X(i), Var::X(j), a);
        }
        f
    }

    /// The cut as a linear form over `x` and lifted variables.
    pub fn lifted_form(&self) -> QuadForm {
        let mut f = QuadForm::constant(self.constant);
        for &(i, a) in &self.linear {
            f.add_linear(Var::X(i), a);
        }
        for &((i, j), a) in &self.lifted {
            f.add_linear(Var::lifted(i, j), a);
        }
        f
    }

    /// Index pairs whose products the cut touches.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.lifted.iter().map(|&(p, _)| p).collect()
    }
}

impl std::fmt::Display for Cut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let fam = match self.key.family {
            CutFamily::McCormick => "mccormick",
            CutFamily::Triangle => "triangle",
        };
        let idx: Vec<String> = self
            .key
            .indices
            .iter()
            .map(|i| (i + 1).to_string())
            .collect();
        write!(f, "{fam}({})#{}", idx.join(","), self.key.variant)
    }
}

fn key(family: CutFamily, indices: &[usize], variant: u8) -> CutKey {
    CutKey {
        family,
        indices: indices.to_vec(),
        variant,
    }
}

/// The four McCormick inequalities of pair `i < j`:
///
/// 1. `-X_ij <= 0`
/// 2. `-X_ij + x_i + x_j - 1 <= 0`
/// 3. `X_ij - x_i <= 0`
/// 4. `X_ij - x_j <= 0`
pub fn mccormick_family(i: usize, j: usize) -> Result<[Cut; 4]> {
    if i >= j {
        return Err(Error::Input(format!(
            "McCormick pair needs i < j, got ({i}, {j})"
        )));
    }
    let fam = CutFamily::McCormick;
    let ix = [i, j];
    Ok([
        Cut {
            key: key(fam, &ix, 1),
            constant: 0.0,
            linear: vec![],
            lifted: vec![((i, j), -1.0)],
        },
        Cut {
            key: key(fam, &ix, 2),
            constant: -1.0,
            linear: vec![(i, 1.0), (j, 1.0)],
            lifted: vec![((i, j), -1.0)],
        },
        Cut {
            key: key(fam, &ix, 3),
            constant: 0.0,
            linear: vec![(i, -1.0)],
            lifted: vec![((i, j), 1.0)],
        },
        Cut {
            key: key(fam, &ix, 4),
            constant: 0.0,
            linear: vec![(j, -1.0)],
            lifted: vec![((i, j), 1.0)],
        },
    ])
}

/// The four triangle inequalities of triple `i < j < k`:
///
/// 1. `X_ij + X_ik - X_jk - x_i <= 0`
/// 2. `X_ij + X_jk - X_ik - x_j <= 0`
/// 3. `X_ik + X_jk - X_ij - x_k <= 0`
/// 4. `x_i + x_j + x_k - X_ij - X_ik - X_jk - 1 <= 0`
pub fn triangle_family(i: usize, j: usize, k: usize) -> Result<[Cut; 4]> {
    if !(i < j && j < k) {
        return Err(Error::Input(format!(
            "triangle needs i < j < k, got ({i}, {j}, {k})"
        )));
    }
    let fam = CutFamily::Triangle;
    let ix = [i, j, k];
    let (ij, ik, jk) = ((i, j), (i, k), (j, k));
    Ok([
        Cut {
            key: key(fam, &ix, 1),
            constant: 0.0,
            linear: vec![(i, -1.0)],
            lifted: vec![(ij, 1.0), (ik, 1.0), (jk, -1.0)],
        },
        Cut {
            key: key(fam, &ix, 2),
            constant: 0.0,
            linear: vec![(j, -1.0)],
            lifted: vec![(ij, 1.0), (ik, -1.0), (jk, 1.0)],
        },
        Cut {
            key: key(fam, &ix, 3),
            constant: 0.0,
            linear: vec![(k, -1.0)],
            lifted: vec![(ij, -1.0), (ik, 1.0), (jk, 1.0)],
        },
        Cut {
            key: key(fam, &ix, 4),
            constant: -1.0,
            linear: vec![(i, 1.0), (j, 1.0), (k, 1.0)],
            lifted: vec![(ij, -1.0), (ik, -1.0), (jk, -1.0)],
        },
    ])
}

pub fn violation(cut: &Cut, x: &[f64], xx: &DMatrix<f64>) -> f64 {
    cut.violation(x, xx)
}

/// Every cut of `family` for dimension `n`, in canonical order.
pub fn all_cuts(family: CutFamily, n: usize) -> Vec<Cut> {
    let mut out = Vec::new();
    match family {
        CutFamily::McCormick => {
            for i in 0..n {
                for j in (i + 1)..n {
                    out.extend(mccormick_family(i, j).expect("ordered pair"));
                }
            }
        }
        CutFamily::Triangle => {
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in (j + 1)..n {
                        out.extend(triangle_family(i, j, k).expect("ordered triple"));
                    }
                }
            }
        }
    }
    out
}

/// Up to `max_cuts` cuts violated by more than `viol_tol`, most violated
/// first; equal violations keep canonical order.
pub fn separate(
    families: &[CutFamily],
    x: &[f64],
    xx: &DMatrix<f64>,
    viol_tol: f64,
    max_cuts: usize,
) -> Vec<Cut> {
    separate_scored(families, x, xx, viol_tol, max_cuts)
        .into_iter()
        .map(|(c, _)| c)
        .collect()
}

pub fn separate_scored(
    families: &[CutFamily],
    x: &[f64],
    xx: &DMatrix<f64>,
    viol_tol: f64,
    max_cuts: usize,
) -> Vec<(Cut, f64)> {
    let n = x.len();
    let mut fams: Vec<CutFamily> = families.to_vec();
    fams.sort();
    fams.dedup();
    let mut found: Vec<(Cut, f64)> = Vec::new();
    for fam in fams {
        for cut in all_cuts(fam, n) {
            let v = cut.violation(x, xx);
            if v > viol_tol {
                found.push((cut, v));
            }
        }
    }
    // stable sort keeps canonical order among equal violations
    found.sort_by(|a, b| b.1.total_cmp(&a.1));
    found.truncate(max_cuts);
    found
}

/// Insertion-ordered, duplicate-free set of cuts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Cut>", into = "Vec<Cut>")]
pub struct CutPool {
    cuts: Vec<Cut>,
    keys: BTreeSet<CutKey>,
}

impl From<Vec<Cut>> for CutPool {
    fn from(cuts: Vec<Cut>) -> Self {
        let mut pool = CutPool::new();
        for c in cuts {
            pool.insert(c);
        }
        pool
    }
}

impl From<CutPool> for Vec<Cut> {
    fn from(pool: CutPool) -> Self {
        pool.cuts
    }
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `false` if a cut with the same key is already present.
    pub fn insert(&mut self, cut: Cut) -> bool {
        if self.keys.contains(&cut.key) {
            return false;
        }
        self.keys.insert(cut.key.clone());
        self.cuts.push(cut);
        true
    }

    pub fn contains(&self, key: &CutKey) -> bool {
        self.keys.contains(key)
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cut> {
        self.cuts.iter()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn count(&self, family: CutFamily) -> usize {
        self.cuts.iter().filter(|c| c.family() == family).count()
    }
}

impl<'a> IntoIterator for &'a CutPool {
    type Item = &'a Cut;
    type IntoIter = std::slice::Iter<'a, Cut>;

    fn into_iter(self) -> Self::IntoIter {
        self.cuts.iter()
    }
}
