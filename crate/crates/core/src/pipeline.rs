//! Method recipes: which cuts feed the relaxation, how parameters are read
//! off the certificate, and which reformulation is handed to the search.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cuts::CutFamily;
use crate::error::{Error, Result};
use crate::instance::BqpInstance;
use crate::reformulate::{
    build_qcr, build_qcre, build_qnr, build_qnre_agg, qcr_params, qcre_params, qnre_params,
    GammaFilter, ReformulatedProblem,
};
use crate::relax::{cutting_plane, RelaxOptions};

/// The four reformulations compared by the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BnbMethod {
    #[serde(rename = "qcr")]
    Qcr,
    #[serde(rename = "qcre")]
    Qcre,
    #[serde(rename = "qnr")]
    Qnr,
    #[serde(rename = "qnr-tri")]
    QnrTri,
}

impl BnbMethod {
    pub const ALL: [BnbMethod; 4] = [
        BnbMethod::Qcr,
        BnbMethod::Qcre,
        BnbMethod::Qnr,
        BnbMethod::QnrTri,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BnbMethod::Qcr => "qcr",
            BnbMethod::Qcre => "qcre",
            BnbMethod::Qnr => "qnr",
            BnbMethod::QnrTri => "qnr-tri",
        }
    }

    pub fn families(&self) -> &'static [CutFamily] {
        match self {
            BnbMethod::Qcr => &[],
            BnbMethod::Qcre | BnbMethod::Qnr => &[CutFamily::McCormick],
            BnbMethod::QnrTri => &[CutFamily::McCormick, CutFamily::Triangle],
        }
    }
}

impl fmt::Display for BnbMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BnbMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BnbMethod::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (expected qcr, qcre, qnr or qnr-tri)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub relax: RelaxOptions,
    /// Cutting-plane rounds with McCormick cuts only.
    pub rlt_iters: usize,
    /// Cutting-plane rounds with McCormick and triangle cuts.
    pub tri_iters: usize,
    /// `None` uses [`GammaFilter::default_for`].
    pub gamma_filter: Option<GammaFilter>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            relax: RelaxOptions::default(),
            rlt_iters: 2,
            tri_iters: 9,
            gamma_filter: None,
        }
    }
}

/// Output of the preprocessing phase.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub method: BnbMethod,
    /// Diagonal-normalized copy of the input.
    pub instance: BqpInstance,
    pub reform: ReformulatedProblem,
    /// Relaxation value after each cutting-plane solve.
    pub sdp_history: Vec<f64>,
    pub cuts: usize,
    pub seconds: f64,
}

impl Prepared {
    pub fn sdp_value(&self) -> f64 {
        self.sdp_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Runs the method's cutting-plane phase and builds its reformulation.
pub fn prepare(inst: &BqpInstance, method: BnbMethod, opts: &PipelineOptions) -> Result<Prepared> {
    let start = Instant::now();
    let instance = inst.normalize_diagonal();
    let iters = match method {
        BnbMethod::Qcr => 0,
        BnbMethod::Qcre | BnbMethod::Qnr => opts.rlt_iters,
        BnbMethod::QnrTri => opts.tri_iters,
    };
    let run = cutting_plane(&instance, method.families(), iters, &opts.relax)?;
    let cert = &run.certificate;
    let reform = match method {
        BnbMethod::Qcr => build_qcr(&instance, &qcr_params(cert)?)?,
        BnbMethod::Qcre => build_qcre(&instance, &qcre_params(cert)?)?,
        BnbMethod::Qnr => build_qnr(&instance, &qcre_params(cert)?)?,
        BnbMethod::QnrTri => {
            let filter = opts
                .gamma_filter
                .unwrap_or_else(|| GammaFilter::default_for(&instance));
            build_qnre_agg(&instance, &qnre_params(cert)?, filter)?
        }
    };
    Ok(Prepared {
        method,
        instance,
        reform,
        sdp_history: run.history,
        cuts: run.pool.len(),
        seconds: start.elapsed().as_secs_f64(),
    })
}
