//! Best-first branch-and-bound over the binaries, bounded by the McCormick
//! engine.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::BqpInstance;
use crate::mccormick::{build_relaxation, Fixings, McCormickOptions};
use crate::pipeline::{prepare, BnbMethod, PipelineOptions, Prepared};
use crate::reformulate::ReformulatedProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbOptions {
    pub rel_tol: f64,
    /// Floor on the pruning margin, for optima near zero.
    pub abs_tol: f64,
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
    /// Stop early once the relative gap drops to this value.
    pub gap_limit: Option<f64>,
    pub mccormick: McCormickOptions,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-4,
            abs_tol: 1e-6,
            node_limit: None,
            time_limit: None,
            gap_limit: None,
            mccormick: McCormickOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BnbStatus {
    Optimal,
    GapLimit,
    NodeLimit,
    TimeLimit,
}

impl BnbStatus {
    pub fn name(&self) -> &'static str {
        match self {
            BnbStatus::Optimal => "optimal",
            BnbStatus::GapLimit => "gap-limit",
            BnbStatus::NodeLimit => "node-limit",
            BnbStatus::TimeLimit => "time-limit",
        }
    }

    pub fn hit_limit(&self) -> bool {
        matches!(self, BnbStatus::NodeLimit | BnbStatus::TimeLimit)
    }
}

impl fmt::Display for BnbStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnbResult {
    pub value: f64,
    pub solution: Vec<u8>,
    /// Number of relaxations evaluated, the root included.
    pub node_count: usize,
    pub root_bound: f64,
    /// Smallest bound among nodes still open at termination.
    pub lower_bound: f64,
    pub status: BnbStatus,
    pub final_rel_gap: f64,
}

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    depth: usize,
    fixings: Fixings,
    x: Vec<f64>,
}

impl Node {
    fn key(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then_with(|| self.fixings.cmp(&other.fixings))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // reversed: BinaryHeap pops the largest
    fn cmp(&self, other: &Self) -> Ordering {
        other.key(self)
    }
}

/// Rounds at one half (ties up), then takes best-improving single flips
/// until none improves.
pub fn incumbent_heuristic(x_frac: &[f64], inst: &BqpInstance) -> (Vec<u8>, f64) {
    let n = inst.n();
    let q = inst.q();
    let c = inst.c();
    let mut x: Vec<u8> = x_frac.iter().map(|&v| u8::from(v >= 0.5)).collect();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            let mut slope = c[i] + 0.5 * q[(i, i)];
            for j in 0..n {
                if j != i && x[j] == 1 {
                    slope += q[(i, j)];
                }
            }
            let delta = if x[i] == 1 { -slope } else { slope };
            if delta < -1e-12 && best.is_none_or(|(_, d)| delta < d) {
                best = Some((i, delta));
            }
        }
        match best {
            Some((i, _)) => x[i] ^= 1,
            None => break,
        }
    }
    let value = inst.objective_binary(&x);
    (x, value)
}

/// Most fractional entry, smallest index on ties.
pub fn branch_select(x_frac: &[f64]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in x_frac.iter().enumerate() {
        if v.min(1.0 - v) <= 1e-6 {
            continue;
        }
        let d = (v - 0.5).abs();
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::Input("no fractional entry to branch on".into()))
}

fn pruned(bound: f64, incumbent: f64, opts: &BnbOptions) -> bool {
    incumbent - bound <= (opts.rel_tol * incumbent.abs()).max(opts.abs_tol)
}

fn rel_gap(incumbent: f64, lower: f64) -> f64 {
    if lower >= incumbent {
        return 0.0;
    }
    (incumbent - lower) / incumbent.abs().max(1e-10)
}

struct Search<'a> {
    inst: &'a BqpInstance,
    reform: &'a ReformulatedProblem,
    opts: &'a BnbOptions,
    evaluations: usize,
    best: (Vec<u8>, f64),
}

impl Search<'_> {
    /// Bound and relaxed point for a node; `-∞` when the relaxation fails.
    fn evaluate(&mut self, fixings: Fixings, depth: usize) -> Node {
        self.evaluations += 1;
        let n = self.inst.n();
        let fallback: Vec<f64> = (0..n)
            .map(|i| fixings.get(i).map_or(0.5, f64::from))
            .collect();
        let (bound, x) = match build_relaxation(self.reform, &fixings, &self.opts.mccormick)
            .and_then(|m| m.solve(&self.opts.mccormick.qp))
        {
            Ok(out) => (out.value, out.x),
            Err(_) => (f64::NEG_INFINITY, fallback),
        };
        if bound.is_finite() {
            let (point, value) = incumbent_heuristic(&x, self.inst);
            if value < self.best.1 {
                self.best = (point, value);
            }
        }
        Node {
            bound,
            depth,
            fixings,
            x,
        }
    }
}

/// Searches `reform`, whose binary restriction must agree with `inst`.
pub fn branch_and_bound(
    inst: &BqpInstance,
    reform: &ReformulatedProblem,
    opts: &BnbOptions,
) -> Result<BnbResult> {
    let n = inst.n();
    if reform.n != n {
        return Err(Error::Input(format!(
            "reformulation has {} variables, instance has {n}",
            reform.n
        )));
    }
    let start = Instant::now();
    let mut search = Search {
        inst,
        reform,
        opts,
        evaluations: 0,
        best: (vec![0; n], inst.objective_binary(&vec![0; n])),
    };
    let root = search.evaluate(Fixings::new(), 0);
    let root_bound = root.bound;
    let mut open = BinaryHeap::new();
    open.push(root);
    let mut status = BnbStatus::Optimal;

    while let Some(node) = open.peek() {
        let incumbent = search.best.1;
        if pruned(node.bound, incumbent, opts) {
            open.clear();
            break;
        }
        if let Some(g) = opts.gap_limit {
            if rel_gap(incumbent, node.bound) <= g {
                status = BnbStatus::GapLimit;
                break;
            }
        }
        if opts.node_limit.is_some_and(|l| search.evaluations >= l) {
            status = BnbStatus::NodeLimit;
            break;
        }
        if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            status = BnbStatus::TimeLimit;
            break;
        }
        let node = open.pop().expect("peeked");
        let free: Vec<usize> = (0..n).filter(|&i| node.fixings.get(i).is_none()).collect();
        if free.is_empty() {
            // leaf: its value was offered to the incumbent on evaluation
            continue;
        }
        let free_x: Vec<f64> = free.iter().map(|&i| node.x[i]).collect();
        let var = branch_select(&free_x).map_or(free[0], |k| free[k]);
        for v in [0u8, 1] {
            let child = search.evaluate(node.fixings.with(var, v)?, node.depth + 1);
            if child.bound < f64::INFINITY && !pruned(child.bound, search.best.1, opts) {
                open.push(child);
            }
        }
    }

    let (solution, value) = search.best;
    let lower_bound = open.iter().map(|node| node.bound).fold(value, f64::min);
    Ok(BnbResult {
        value,
        final_rel_gap: rel_gap(value, lower_bound),
        solution,
        node_count: search.evaluations,
        root_bound,
        lower_bound,
        status,
    })
}

/// Preprocessing plus search, with wall-clock split.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub prepared: Prepared,
    pub result: BnbResult,
    pub time_pre_s: f64,
    pub time_bnb_s: f64,
    pub time_total_s: f64,
}

pub fn solve_bnb(inst: &BqpInstance, method: BnbMethod, opts: &BnbOptions) -> Result<BnbResult> {
    solve_with(inst, method, &PipelineOptions::default(), opts).map(|r| r.result)
}

pub fn solve_with(
    inst: &BqpInstance,
    method: BnbMethod,
    pipeline: &PipelineOptions,
    opts: &BnbOptions,
) -> Result<SolveReport> {
    let start = Instant::now();
    let prepared = prepare(inst, method, pipeline)?;
    let time_pre_s = start.elapsed().as_secs_f64();
    let mid = Instant::now();
    let result = branch_and_bound(&prepared.instance, &prepared.reform, opts)?;
    let time_bnb_s = mid.elapsed().as_secs_f64();
    Ok(SolveReport {
        prepared,
        result,
        time_pre_s,
        time_bnb_s,
        time_total_s: start.elapsed().as_secs_f64(),
    })
}
