//! Experiment driver: TOML config in, one CSV row per (instance, method) out.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bnb::{solve_with, BnbOptions};
use crate::cuts::CutFamily;
use crate::error::{Error, Result};
use crate::generate::generate_pardalos;
use crate::instance::{brute_force_with_limit, relative_gap, BqpInstance, Sense};
use crate::io::read_instance;
use crate::pipeline::{BnbMethod, PipelineOptions};
use crate::relax::{cutting_plane, cutting_plane_from, RelaxOptions, SdpRelaxation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "default_rlt")]
    pub rlt: usize,
    #[serde(default = "default_tri")]
    pub tri: usize,
}

fn default_rlt() -> usize {
    2
}

fn default_tri() -> usize {
    9
}

impl Default for Budgets {
    fn default() -> Self {
        Self { rlt: 2, tri: 9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_viol_tol")]
    pub viol_tol: f64,
}

fn default_rel_tol() -> f64 {
    1e-4
}

fn default_viol_tol() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-4,
            viol_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    pub node_limit: Option<usize>,
    pub time_limit_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    pub density: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    File { file: PathBuf, sense: Option<Sense> },
    Generate { generate: GeneratorSpec },
}

impl InstanceSource {
    pub fn load(&self, base: &Path) -> Result<BqpInstance> {
        match self {
            InstanceSource::File { file, sense } => read_instance(&base.join(file), *sense),
            InstanceSource::Generate { generate: g } => generate_pardalos(g.n, g.density, g.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub methods: Vec<BnbMethod>,
    pub instances: Vec<InstanceSource>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub limits: Limits,
    /// Write measured times; when off the time columns are zero, making
    /// reports byte-for-byte reproducible.
    #[serde(default = "default_timing")]
    pub timing: bool,
    /// Largest `n` for which the optimum is enumerated to compute gaps.
    #[serde(default = "default_bf_limit")]
    pub brute_force_limit: usize,
    pub output: Option<PathBuf>,
    /// Directory that relative instance paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_timing() -> bool {
    true
}

fn default_bf_limit() -> usize {
    20
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        if self.instances.is_empty() {
            return Err(Error::Config("instance list is empty".into()));
        }
        let t = &self.tolerances;
        if !(t.rel_tol >= 0.0 && t.viol_tol >= 0.0) {
            return Err(Error::Config("tolerances must be nonnegative".into()));
        }
        if self.limits.time_limit_s.is_some_and(|s| !(s >= 0.0)) {
            return Err(Error::Config("time limit must be nonnegative".into()));
        }
        Ok(())
    }

    fn pipeline(&self) -> PipelineOptions {
        PipelineOptions {
            relax: RelaxOptions {
                viol_tol: self.tolerances.viol_tol,
                ..RelaxOptions::default()
            },
            rlt_iters: self.budgets.rlt,
            tri_iters: self.budgets.tri,
            gamma_filter: None,
        }
    }

    fn bnb(&self) -> BnbOptions {
        BnbOptions {
            rel_tol: self.tolerances.rel_tol,
            node_limit: self.limits.node_limit,
            time_limit: self.limits.time_limit_s.map(Duration::from_secs_f64),
            ..BnbOptions::default()
        }
    }
}

/// One line of the report. Values are in the minimization sense used
/// internally; `rg` and `final_gap` are fractions (`rg` is absolute when the
/// optimum is zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub method: String,
    pub root_bound: Option<f64>,
    pub rg: Option<f64>,
    pub nodes: Option<usize>,
    pub time_total_s: f64,
    pub time_pre_s: f64,
    pub time_bnb_s: f64,
    pub status: String,
    pub final_gap: Option<f64>,
    pub value: Option<f64>,
}

impl BenchRow {
    fn failed(instance: &str, method: BnbMethod, err: &Error) -> Self {
        BenchRow {
            instance: instance.to_string(),
            method: method.name().to_string(),
            root_bound: None,
            rg: None,
            nodes: None,
            time_total_s: 0.0,
            time_pre_s: 0.0,
            time_bnb_s: 0.0,
            status: format!("error: {err}"),
            final_gap: None,
            value: None,
        }
    }
}

/// Relative gap, or the absolute gap when the optimum is zero.
pub fn gap_or_absolute(v_star: f64, lower: f64) -> f64 {
    relative_gap(v_star, lower).unwrap_or(v_star - lower)
}

fn millis(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// Rows in config order: instances outer, methods inner. Failures are
/// recorded in `status` and the run continues.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let pipeline = cfg.pipeline();
    let bnb = cfg.bnb();
    let mut rows = Vec::new();
    for (k, source) in cfg.instances.iter().enumerate() {
        let inst = match source.load(&cfg.base_dir) {
            Ok(inst) => inst,
            Err(e) => {
                let name = format!("instance-{k}");
                rows.extend(cfg.methods.iter().map(|&m| BenchRow::failed(&name, m, &e)));
                continue;
            }
        };
        let name = inst.meta.name.clone();
        let v_star = brute_force_with_limit(&inst, cfg.brute_force_limit)
            .ok()
            .map(|e| e.value);
        for &method in &cfg.methods {
            let row = match solve_with(&inst, method, &pipeline, &bnb) {
                Ok(rep) => {
                    let r = &rep.result;
                    let (total, pre, search) = if cfg.timing {
                        (
                            millis(rep.time_total_s),
                            millis(rep.time_pre_s),
                            millis(rep.time_bnb_s),
                        )
                    } else {
                        (0.0, 0.0, 0.0)
                    };
                    BenchRow {
                        instance: name.clone(),
                        method: method.name().to_string(),
                        root_bound: Some(r.root_bound),
                        rg: v_star.map(|v| gap_or_absolute(v, r.root_bound)),
                        nodes: Some(r.node_count),
                        time_total_s: total,
                        time_pre_s: pre,
                        time_bnb_s: search,
                        status: r.status.name().to_string(),
                        final_gap: Some(r.final_rel_gap),
                        value: Some(r.value),
                    }
                }
                Err(e) => BenchRow::failed(&name, method, &e),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn write_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
}

pub fn read_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .enumerate()
        .map(|(k, row)| {
            row.map_err(|e| Error::Parse {
                line: k + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

fn opt<T: std::fmt::Display>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or_else(|| "-".to_string(), f)
}

/// Two decimals; roundoff-level negatives print as zero.
fn percent(v: f64) -> String {
    let text = format!("{:.2}", 100.0 * v);
    if text == "-0.00" {
        "0.00".to_string()
    } else {
        text
    }
}

/// Plain-text tables: one line per row, then node counts and root gaps
/// pivoted by method.
pub fn render_tables(rows: &[BenchRow]) -> String {
    let header = [
        "instance",
        "method",
        "root bound",
        "RG %",
        "nodes",
        "pre s",
        "bnb s",
        "total s",
        "status",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.instance.clone(),
                r.method.clone(),
                opt(r.root_bound, |v| format!("{v:.4}")),
                opt(r.rg, percent),
                opt(r.nodes, |v| v.to_string()),
                format!("{:.3}", r.time_pre_s),
                format!("{:.3}", r.time_bnb_s),
                format!("{:.3}", r.time_total_s),
                r.status.clone(),
            ]
        })
        .collect();
    let mut out = align(&header.map(String::from), &body);

    let mut methods: Vec<&str> = Vec::new();
    let mut instances: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        if !instances.contains(&r.instance.as_str()) {
            instances.push(&r.instance);
        }
    }
    for (title, cell) in [
        (
            "Nodes",
            &(|r: &BenchRow| opt(r.nodes, |v| v.to_string())) as &dyn Fn(&BenchRow) -> String,
        ),
        ("Root RG %", &|r: &BenchRow| opt(r.rg, percent)),
    ] {
        let mut head = vec![title.to_string()];
        head.extend(methods.iter().map(|m| m.to_string()));
        let body: Vec<Vec<String>> = instances
            .iter()
            .map(|&i| {
                let mut line = vec![i.to_string()];
                for &m in &methods {
                    let found = rows.iter().find(|r| r.instance == i && r.method == m);
                    line.push(found.map_or_else(|| "-".to_string(), cell));
                }
                line
            })
            .collect();
        out.push('\n');
        out.push_str(&align(&head, &body));
    }
    out
}

fn align(head: &[String], body: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = head.iter().map(|h| h.chars().count()).collect();
    for line in body {
        for (w, cell) in width.iter_mut().zip(line) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut emit = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(k, (c, &w))| {
                if k == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    emit(head);
    emit(&width.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>());
    for line in body {
        emit(line);
    }
    out
}

/// Cutting-plane budgets for the three relaxation levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapBudgets {
    pub rlt: usize,
    pub tri: usize,
}

impl Default for GapBudgets {
    fn default() -> Self {
        Self { rlt: 2, tri: 9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub v_star: f64,
    pub sdp: f64,
    pub rlt: f64,
    pub tri: f64,
    pub rg_sdp: f64,
    pub rg_rlt: f64,
    pub rg_tri: f64,
}

/// Largest `n` enumerated when the optimum is not supplied.
pub const GAP_ENUMERATION_LIMIT: usize = 24;

/// Root gaps of the base, McCormick-tightened and triangle-tightened
/// relaxations. The triangle run continues from the McCormick pool, so the
/// three bounds are nested.
pub fn report_gaps(
    inst: &BqpInstance,
    v_star: Option<f64>,
    budgets: GapBudgets,
    opts: &RelaxOptions,
) -> Result<GapReport> {
    let v_star = match v_star {
        Some(v) => v,
        None => brute_force_with_limit(inst, GAP_ENUMERATION_LIMIT)?.value,
    };
    let inst = inst.normalize_diagonal();
    let rlt = cutting_plane(&inst, &[CutFamily::McCormick], budgets.rlt, opts)?;
    let sdp = rlt.history[0];
    let rlt_value = rlt.solution.value;
    let tri = cutting_plane_from(
        SdpRelaxation::with_pool(&inst, rlt.pool)?,
        &[CutFamily::McCormick, CutFamily::Triangle],
        budgets.tri,
        opts,
    )?;
    let tri_value = tri.solution.value;
    Ok(GapReport {
        v_star,
        sdp,
        rlt: rlt_value,
        tri: tri_value,
        rg_sdp: gap_or_absolute(v_star, sdp),
        rg_rlt: gap_or_absolute(v_star, rlt_value),
        rg_tri: gap_or_absolute(v_star, tri_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1_CONFIG: &str = r#"
methods = ["qcr", "qcre", "qnr", "qnr-tri"]
timing = false

[[instances]]
generate = { n = 5, density = 0.5, seed = 1 }
"#;

    #[test]
    fn empty_methods_rejected() {
        let text = "methods = []\n[[instances]]\ngenerate = { n = 3, density = 0.5, seed = 0 }\n";
        assert!(matches!(
            BenchConfig::from_toml(text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_method_rejected() {
        let text =
            "methods = [\"qp\"]\n[[instances]]\ngenerate = { n = 3, density = 0.5, seed = 0 }\n";
        assert!(BenchConfig::from_toml(text).is_err());
    }

    #[test]
    fn csv_round_trip_and_tables() {
        let cfg = BenchConfig::from_toml(E1_CONFIG).unwrap();
        let rows = run_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        let text = write_csv(&rows).unwrap();
        assert!(text.starts_with(
            "instance,method,root_bound,rg,nodes,time_total_s,time_pre_s,time_bnb_s,status,final_gap,value"
        ));
        assert_eq!(read_csv(&text).unwrap(), rows);
        let tables = render_tables(&rows);
        assert!(tables.contains("qnr-tri"));
    }

    #[test]
    fn missing_file_is_a_row_failure() {
        let text = "methods = [\"qcr\"]\n[[instances]]\nfile = \"/nonexistent/x.txt\"\n";
        let rows = run_bench(&BenchConfig::from_toml(text).unwrap()).unwrap();
        assert!(rows[0].status.starts_with("error"));
    }
}
