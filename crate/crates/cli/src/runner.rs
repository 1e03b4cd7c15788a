//! Sweep execution and result serialization.
//!
//! A sweep is the cartesian product of its axes (first axis slowest) times
//! the replication count; replication `i` runs with seed `base + i`, so any
//! row can be replayed exactly and replications are paired across sweep
//! points. Runs may execute in parallel; rows are written in run-index order
//! regardless of completion order, so outputs are byte-deterministic.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use tanglesim_core::metrics::{mean_and_se, MetricsReport};
use tanglesim_core::resolve_conflicts;
use tanglesim_core::sim::{run, SimConfig, SimError, SimTrace};

use crate::config::{tsa_name, ExperimentSpec};
use crate::dot::export_dot;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub const CSV_COLUMNS: &[&str] = &[
    "run_index",
    "rate",
    "latency",
    "duration",
    "tsa",
    "alpha",
    "seed",
    "nodes",
    "attack",
    "adversary_rate",
    "accept_weight",
    "eval_horizon",
    "avg_tip_count",
    "mean_approval_time",
    "mean_weight_confirmation_time",
    "left_behind_count",
    "parasite_attachment_fraction",
    "attack_success",
    "site_count",
    "reveal_time",
];

/// One fully resolved run of a sweep.
#[derive(Clone, Debug)]
pub struct PlannedRun {
    pub index: usize,
    pub config: SimConfig,
    /// `(axis key, value)` pairs identifying the sweep point.
    pub point: Vec<(String, f64)>,
}

/// Expand the sweep into concrete runs.
pub fn plan_runs(spec: &ExperimentSpec) -> Vec<PlannedRun> {
    let mut points: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
    for (axis_pos, axis) in spec.sweep.iter().enumerate() {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for prefix in &points {
            for &v in &axis.values {
                let mut p = prefix.clone();
                p.push((axis_pos, v));
                next.push(p);
            }
        }
        points = next;
    }
    let mut runs = Vec::new();
    for point in &points {
        for rep in 0..spec.replications {
            let mut config = spec.base.clone();
            let mut labels = Vec::new();
            for &(axis_pos, value) in point {
                let field = spec.sweep[axis_pos].field;
                field.apply(&mut config, value);
                labels.push((field.key().to_string(), value));
            }
            config.seed = spec.base.seed + rep as u64;
            runs.push(PlannedRun {
                index: runs.len(),
                config,
                point: labels,
            });
        }
    }
    runs
}

pub struct CompletedRun {
    pub plan: PlannedRun,
    pub report: MetricsReport,
    pub trace: Option<SimTrace>,
}

/// Execute every planned run, optionally in parallel.
pub fn execute_runs(
    spec: &ExperimentSpec,
    jobs: Option<usize>,
) -> Result<Vec<CompletedRun>, RunError> {
    let plans = plan_runs(spec);
    let keep_trace = spec.output.trace || spec.output.dot;
    let work = |plan: PlannedRun| -> Result<CompletedRun, RunError> {
        let trace = run(&plan.config)?;
        let report = MetricsReport::compute(&trace, &spec.metrics);
        Ok(CompletedRun {
            plan,
            report,
            trace: keep_trace.then_some(trace),
        })
    };
    let mut runs = match jobs {
        Some(1) => plans.into_iter().map(work).collect::<Result<Vec<_>, _>>()?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(|| {
                plans
                    .into_par_iter()
                    .map(work)
                    .collect::<Result<Vec<_>, _>>()
            })?,
        None => plans
            .into_par_iter()
            .map(work)
            .collect::<Result<Vec<_>, _>>()?,
    };
    runs.sort_by_key(|r| r.plan.index);
    Ok(runs)
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_row(run: &CompletedRun) -> String {
    let c = run.config();
    let r = &run.report;
    let attack = c.attack.as_ref();
    [
        run.plan.index.to_string(),
        c.honest_rate.to_string(),
        c.latency.to_string(),
        c.duration.to_string(),
        tsa_name(&c.tsa).to_string(),
        fmt_opt(c.tsa.alpha()),
        c.seed.to_string(),
        c.node_count.to_string(),
        attack.is_some().to_string(),
        fmt_opt(attack.map(|a| a.adversary_rate)),
        fmt_opt(attack.map(|a| a.accept_weight)),
        fmt_opt(attack.map(|a| a.eval_horizon)),
        r.avg_tip_count.to_string(),
        fmt_opt(r.mean_approval_time),
        fmt_opt(r.mean_weight_confirmation_time),
        r.left_behind_count.to_string(),
        fmt_opt(r.parasite_attachment_fraction),
        fmt_opt(r.attack_success),
        r.site_count.to_string(),
        fmt_opt(r.reveal_time),
    ]
    .join(",")
}

impl CompletedRun {
    pub fn config(&self) -> &SimConfig {
        &self.plan.config
    }
}

#[derive(Serialize)]
struct PointSummary {
    point: BTreeMap<String, f64>,
    replications: usize,
    aggregates: BTreeMap<String, Aggregate>,
}

#[derive(Serialize)]
struct Aggregate {
    mean: f64,
    standard_error: f64,
    samples: usize,
}

fn aggregate(values: Vec<f64>) -> Aggregate {
    let (mean, standard_error) = mean_and_se(&values);
    Aggregate {
        mean,
        standard_error,
        samples: values.len(),
    }
}

type SweepPoint = Vec<(String, f64)>;

/// Per-sweep-point aggregates (mean and standard error of each scalar).
fn summarize(runs: &[CompletedRun]) -> Vec<PointSummary> {
    let mut grouped: Vec<(SweepPoint, Vec<&CompletedRun>)> = Vec::new();
    for run in runs {
        match grouped.iter_mut().find(|(p, _)| *p == run.plan.point) {
            Some((_, members)) => members.push(run),
            None => grouped.push((run.plan.point.clone(), vec![run])),
        }
    }
    grouped
        .into_iter()
        .map(|(point, members)| {
            type Metric = dyn Fn(&MetricsReport) -> Option<f64>;
            let collect =
                |f: &Metric| -> Vec<f64> { members.iter().filter_map(|m| f(&m.report)).collect() };
            let mut aggregates = BTreeMap::new();
            aggregates.insert(
                "avg_tip_count".into(),
                aggregate(collect(&|r| Some(r.avg_tip_count))),
            );
            aggregates.insert(
                "mean_approval_time".into(),
                aggregate(collect(&|r| r.mean_approval_time)),
            );
            aggregates.insert(
                "mean_weight_confirmation_time".into(),
                aggregate(collect(&|r| r.mean_weight_confirmation_time)),
            );
            aggregates.insert(
                "left_behind_count".into(),
                aggregate(collect(&|r| Some(r.left_behind_count as f64))),
            );
            aggregates.insert(
                "parasite_attachment_fraction".into(),
                aggregate(collect(&|r| r.parasite_attachment_fraction)),
            );
            aggregates.insert(
                "attack_success_rate".into(),
                aggregate(collect(&|r| r.attack_success.map(|s| s as u8 as f64))),
            );
            aggregates.insert(
                "site_count".into(),
                aggregate(collect(&|r| Some(r.site_count as f64))),
            );
            PointSummary {
                point: point.into_iter().collect(),
                replications: members.len(),
                aggregates,
            }
        })
        .collect()
}

pub struct ExperimentOutput {
    pub runs: usize,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Run the whole experiment and write the requested outputs.
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_override: Option<&Path>,
    jobs: Option<usize>,
    quiet: bool,
) -> Result<ExperimentOutput, RunError> {
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&spec.output.dir));
    fs::create_dir_all(&out_dir).map_err(|e| RunError::Io {
        path: out_dir.clone(),
        source: e,
    })?;
    let runs = execute_runs(spec, jobs)?;
    let mut files = Vec::new();

    if spec.output.csv {
        let path = out_dir.join("results.csv");
        let mut body = String::new();
        body.push_str(&CSV_COLUMNS.join(","));
        body.push('\n');
        for run in &runs {
            body.push_str(&csv_row(run));
            body.push('\n');
        }
        write_file(&path, body.as_bytes())?;
        files.push(path);
    }

    if spec.output.json {
        let path = out_dir.join("summary.json");
        let summary = summarize(&runs);
        let mut body = serde_json::to_vec_pretty(&summary).expect("serializable summary");
        body.push(b'\n');
        write_file(&path, &body)?;
        files.push(path);
    }

    for run in &runs {
        let Some(trace) = &run.trace else { continue };
        if spec.output.trace {
            let path = out_dir.join(format!("trace_{:04}.json", run.plan.index));
            let body = serde_json::to_vec(trace).expect("serializable trace");
            write_file(&path, &body)?;
            files.push(path);
        }
        if spec.output.dot {
            let path = out_dir.join(format!("tangle_{:04}.dot", run.plan.index));
            let state = resolve_conflicts(&trace.tangle.full_view());
            write_file(&path, export_dot(&trace.tangle, Some(&state)).as_bytes())?;
            files.push(path);
        }
    }

    if !quiet {
        println!(
            "{} runs -> {} ({} files)",
            runs.len(),
            out_dir.display(),
            files.len()
        );
        for run in runs
            .iter()
            .take(if runs.len() > 12 { 6 } else { runs.len() })
        {
            print_run_line(run);
        }
        if runs.len() > 12 {
            println!("  ... {} more", runs.len() - 6);
        }
    }

    Ok(ExperimentOutput {
        runs: runs.len(),
        out_dir,
        files,
    })
}

pub fn print_run_line(run: &CompletedRun) {
    let r = &run.report;
    let mut line = format!(
        "  run {:3} seed {:3} [{}] tips {:.1} approval {}",
        run.plan.index,
        run.config().seed,
        tsa_name(&run.config().tsa),
        r.avg_tip_count,
        fmt_opt(r.mean_approval_time.map(|v| format!("{v:.2}s"))),
    );
    if let Some(success) = r.attack_success {
        line.push_str(&format!(
            " attack {}",
            if success { "succeeded" } else { "failed" }
        ));
    }
    println!("{line}");
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let mut f = fs::File::create(path).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    f.write_all(bytes).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
