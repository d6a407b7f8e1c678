//! Lifted semidefinite relaxations and the cutting-plane loop.
//!
//! The relaxation works on the moment matrix `Y = [[1, xᵀ], [x, X]] ⪰ 0`:
//!
//! ```text
//!     min  Σ_{i<j} Q_ij X_ij + cᵀx
//!     s.t. X_ii = x_i,  pooled cuts <= 0,  Y ⪰ 0
//! ```
//!
//! Its dual yields the certificate `(σ, λ, M, N, R, S, γ)` from which
//! reformulation parameters are read.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use bqp_numerics::{solve_sdp, SdpConstraint, SdpProblem, SdpSettings, SdpStatus};

use crate::cuts::{mccormick_family, separate, Cut, CutFamily, CutPool};
use crate::error::{Error, Result};
use crate::instance::BqpInstance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    pub viol_tol: f64,
    /// Cuts added per family and round; `None` means `5n`.
    pub max_cuts: Option<usize>,
    /// Whenever a cut touching pair `(i, j)` enters the pool, also add all
    /// four McCormick inequalities of that pair.
    pub close_pairs: bool,
    pub sdp: SdpSettings,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            viol_tol: 1e-6,
            max_cuts: None,
            close_pairs: true,
            sdp: SdpSettings::default(),
        }
    }
}

/// Instance plus the cuts accumulated so far.
#[derive(Debug, Clone)]
pub struct SdpRelaxation {
    inst: BqpInstance,
    pool: CutPool,
}

/// Primal side of a solved relaxation.
#[derive(Debug, Clone)]
pub struct RelaxSolution {
    pub x: Vec<f64>,
    /// Full symmetric `X`, diagonal included.
    pub xx: DMatrix<f64>,
    pub value: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub moment: DMatrix<f64>,
}

/// Dual side, grouped by cut family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualCertificate {
    pub sigma: f64,
    pub lambda: Vec<f64>,
    /// One multiplier per pooled cut, in pool order, clamped at zero.
    pub multipliers: Vec<(Cut, f64)>,
    pub m: DMatrix<f64>,
    pub n: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    /// Triangle-cut multipliers.
    pub gamma: Vec<(Cut, f64)>,
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub q_hat: DMatrix<f64>,
    pub c_hat: DVector<f64>,
    pub b_hat: f64,
}

impl DualCertificate {
    /// `M + N - R - S`.
    pub fn z(&self) -> DMatrix<f64> {
        &self.m + &self.n - &self.r - &self.s
    }

    /// `[[2b̂ - 2σ, ĉᵀ], [ĉ, Q̂]]`, which must be positive semidefinite.
    pub fn bordered(&self) -> DMatrix<f64> {
        let n = self.lambda.len();
        let mut b = DMatrix::zeros(n + 1, n + 1);
        b[(0, 0)] = 2.0 * self.b_hat - 2.0 * self.sigma;
        for i in 0..n {
            b[(0, i + 1)] = self.c_hat[i];
            b[(i + 1, 0)] = self.c_hat[i];
            for j in 0..n {
                b[(i + 1, j + 1)] = self.q_hat[(i, j)];
            }
        }
        b
    }

    pub fn bordered_min_eig(&self) -> f64 {
        bqp_numerics::eigen_sym(&self.bordered())
            .map(|e| e.min())
            .unwrap_or(f64::NEG_INFINITY)
    }
}

impl SdpRelaxation {
    pub fn base(inst: &BqpInstance) -> Result<Self> {
        if !inst.is_normalized() {
            return Err(Error::Input(
                "relaxations need a diagonal-normalized instance".into(),
            ));
        }
        Ok(Self {
            inst: inst.clone(),
            pool: CutPool::new(),
        })
    }

    pub fn with_pool(inst: &BqpInstance, pool: CutPool) -> Result<Self> {
        let mut r = Self::base(inst)?;
        r.pool = pool;
        Ok(r)
    }

    pub fn instance(&self) -> &BqpInstance {
        &self.inst
    }

    pub fn pool(&self) -> &CutPool {
        &self.pool
    }

    pub fn into_pool(self) -> CutPool {
        self.pool
    }

    /// Adds `cut`; returns how many new cuts entered the pool.
    pub fn add_cut(&mut self, cut: Cut, close_pairs: bool) -> usize {
        let pairs = cut.pairs();
        let mut added = usize::from(self.pool.insert(cut));
        if close_pairs {
            for (i, j) in pairs {
                for c in mccormick_family(i, j).expect("cut pairs are ordered") {
                    added += usize::from(self.pool.insert(c));
                }
            }
        }
        added
    }

    /// Number of equality rows (`Y00 = 1` and `X_ii = x_i`).
    pub fn equality_rows(&self) -> usize {
        self.inst.n() + 1
    }

    pub fn to_problem(&self) -> SdpProblem {
        let n = self.inst.n();
        let q = self.inst.q();
        let c = self.inst.c();
        let mut p = SdpProblem::new(n + 1);
        for i in 0..n {
            if c[i] != 0.0 {
                p.objective.push((0, i + 1, c[i]));
            }
            for j in (i + 1)..n {
                if q[(i, j)] != 0.0 {
                    p.objective.push((i + 1, j + 1, q[(i, j)]));
                }
            }
        }
        p.constraints
            .push(SdpConstraint::eq(vec![(0, 0, 1.0)], 1.0));
        for i in 0..n {
            p.constraints.push(SdpConstraint::eq(
                vec![(0, i + 1, -1.0), (i + 1, i + 1, 1.0)],
                0.0,
            ));
        }
        for cut in &self.pool {
            let mut entries: Vec<(usize, usize, f64)> =
                cut.linear.iter().map(|&(i, a)| (0, i + 1, a)).collect();
            entries.extend(cut.lifted.iter().map(|&((i, j), a)| (i + 1, j + 1, a)));
            p.constraints
                .push(SdpConstraint::le(entries, -cut.constant));
        }
        p
    }

    pub fn solve(&self, settings: &SdpSettings) -> Result<(RelaxSolution, DualCertificate)> {
        let n = self.inst.n();
        let problem = self.to_problem();
        let sol = solve_sdp(&problem, settings)?;
        if sol.status != SdpStatus::Optimal {
            return Err(Error::Numerical(format!(
                "SDP solve with {} cuts ended with status {:?} after {} iterations",
                self.pool.len(),
                sol.status,
                sol.iterations
            )));
        }
        let y = &sol.primal;
        let x: Vec<f64> = (0..n).map(|i| y[(0, i + 1)]).collect();
        let xx = y.view((1, 1), (n, n)).into_owned();
        let relax = RelaxSolution {
            x,
            xx,
            value: sol.primal_objective,
            status: sol.status,
            iterations: sol.iterations,
            moment: y.clone(),
        };
        let cert = self.certificate(&sol.dual);
        Ok((relax, cert))
    }

    fn certificate(&self, dual: &[f64]) -> DualCertificate {
        let n = self.inst.n();
        let q = self.inst.q().clone();
        let c = self.inst.c().clone();
        let lambda: Vec<f64> = (0..n).map(|i| -dual[i + 1]).collect();
        let mut m = DMatrix::zeros(n, n);
        let mut nn = DMatrix::zeros(n, n);
        let mut r = DMatrix::zeros(n, n);
        let mut s = DMatrix::zeros(n, n);
        let mut q_hat = q.clone();
        let mut c_hat = c.clone();
        let mut b_hat = 0.0;
        let mut multipliers = Vec::with_capacity(self.pool.len());
        let mut gamma = Vec::new();
        for i in 0..n {
            q_hat[(i, i)] += 2.0 * lambda[i];
            c_hat[i] -= lambda[i];
        }
        for (l, cut) in self.pool.iter().enumerate() {
            let mu = (-dual[n + 1 + l]).max(0.0);
            multipliers.push((cut.clone(), mu));
            b_hat += mu * cut.constant;
            for &(i, a) in &cut.linear {
                c_hat[i] += mu * a;
            }
            for &((i, j), a) in &cut.lifted {
                q_hat[(i, j)] += mu * a;
                q_hat[(j, i)] += mu * a;
            }
            match cut.family() {
                CutFamily::McCormick => {
                    let (i, j) = (cut.indices()[0], cut.indices()[1]);
                    let target = match cut.variant() {
                        1 => &mut m,
                        2 => &mut nn,
                        3 => &mut r,
                        _ => &mut s,
                    };
                    target[(i, j)] += 0.5 * mu;
                    target[(j, i)] += 0.5 * mu;
                }
                CutFamily::Triangle => gamma.push((cut.clone(), mu)),
            }
        }
        let sigma = dual[0] + b_hat;
        DualCertificate {
            sigma,
            lambda,
            multipliers,
            m,
            n: nn,
            r,
            s,
            gamma,
            q,
            c,
            q_hat,
            c_hat,
            b_hat,
        }
    }
}

pub fn build_base_sdp(inst: &BqpInstance) -> Result<SdpRelaxation> {
    SdpRelaxation::base(inst)
}

/// Outcome of a cutting-plane run.
#[derive(Debug, Clone)]
pub struct CuttingPlaneRun {
    pub solution: RelaxSolution,
    pub certificate: DualCertificate,
    pub pool: CutPool,
    /// Relaxation value after each solve, starting with the initial one.
    pub history: Vec<f64>,
}

pub fn cutting_plane(
    inst: &BqpInstance,
    families: &[CutFamily],
    iters: usize,
    opts: &RelaxOptions,
) -> Result<CuttingPlaneRun> {
    cutting_plane_from(SdpRelaxation::base(inst)?, families, iters, opts)
}

/// Solve, separate at the primal point, add violated cuts, re-solve; `iters`
/// rounds. Stops early when a round finds nothing new.
pub fn cutting_plane_from(
    mut relax: SdpRelaxation,
    families: &[CutFamily],
    iters: usize,
    opts: &RelaxOptions,
) -> Result<CuttingPlaneRun> {
    let n = relax.instance().n();
    let per_family = opts.max_cuts.unwrap_or(5 * n).max(1);
    let (mut sol, mut cert) = relax.solve(&opts.sdp)?;
    let mut history = vec![sol.value];
    for round in 0..iters {
        let mut added = 0;
        for &fam in families {
            for cut in separate(&[fam], &sol.x, &sol.xx, opts.viol_tol, per_family) {
                added += relax.add_cut(cut, opts.close_pairs);
            }
        }
        if added == 0 {
            break;
        }
        (sol, cert) = relax.solve(&opts.sdp).map_err(|e| {
            Error::Numerical(format!(
                "round {} of {iters} failed (last value {:.9}): {e}",
                round + 1,
                history.last().copied().unwrap_or(f64::NAN)
            ))
        })?;
        history.push(sol.value);
    }
    Ok(CuttingPlaneRun {
        solution: sol,
        certificate: cert,
        pool: relax.into_pool(),
        history,
    })
}
