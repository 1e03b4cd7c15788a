//! Stability and security measurements over simulation traces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{self, SimConfig, SimError, SimTrace};
use crate::tangle::Issuer;
use crate::tsa::resolve_conflicts;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trace has no attack configured")]
    NoAttackConfigured,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Measurement parameters that are reported alongside the results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsParams {
    /// Sampling interval for the tip-count series.
    pub sample_interval: f64,
    /// A raw tip older than this at trace end counts as left behind.
    pub cooldown: f64,
    /// Weight threshold for the weight-based confirmation time.
    pub weight_threshold: u64,
}

impl Default for MetricsParams {
    fn default() -> Self {
        MetricsParams {
            sample_interval: 1.0,
            cooldown: 20.0,
            weight_threshold: 8,
        }
    }
}

/// Scalar measurements of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Raw-tip count averaged over the second half of the run.
    pub avg_tip_count: f64,
    pub tip_count_series: Vec<(f64, u32)>,
    /// Mean issuance-to-first-child time over approved sites.
    pub mean_approval_time: Option<f64>,
    pub approved_sites: usize,
    /// Mean time for a site to reach the weight threshold, over sites that
    /// reached it.
    pub mean_weight_confirmation_time: Option<f64>,
    pub left_behind_count: usize,
    pub parasite_attachment_fraction: Option<f64>,
    pub attack_success: Option<bool>,
    pub site_count: usize,
    pub reveal_time: Option<f64>,
}

impl MetricsReport {
    pub fn compute(trace: &SimTrace, params: &MetricsParams) -> MetricsReport {
        let tips = tip_stats(trace, params.sample_interval);
        let approvals = approval_times(trace);
        MetricsReport {
            avg_tip_count: tips.average,
            tip_count_series: tips.series,
            mean_approval_time: approvals.mean,
            approved_sites: approvals.times.len(),
            mean_weight_confirmation_time: weight_confirmation_times(
                trace,
                params.weight_threshold,
            )
            .mean,
            left_behind_count: left_behind(trace, params.cooldown),
            parasite_attachment_fraction: parasite_attachment(trace).ok(),
            attack_success: trace.outcome.map(|o| o.success),
            site_count: trace.tangle.len(),
            reveal_time: trace.reveal_time,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TipStats {
    /// `(time, raw tip count)` sampled at fixed intervals.
    pub series: Vec<(f64, u32)>,
    /// Average over the second half of the run (warm-up excluded).
    pub average: f64,
}

/// Raw-tip count of the global tangle sampled every `sample_interval`
/// seconds, stepping through the event log.
pub fn tip_stats(trace: &SimTrace, sample_interval: f64) -> TipStats {
    assert!(sample_interval > 0.0);
    let duration = trace.config.duration;
    let mut series = Vec::new();
    let mut entry_pos = 0;
    let mut current = 1u32; // genesis-only tangle has one raw tip
    let mut t = 0.0;
    while t <= duration {
        while entry_pos < trace.entries.len() && trace.entries[entry_pos].time <= t {
            current = trace.entries[entry_pos].raw_tip_count;
            entry_pos += 1;
        }
        series.push((t, current));
        t += sample_interval;
    }
    let half = duration / 2.0;
    let tail: Vec<u32> = series
        .iter()
        .filter(|(time, _)| *time >= half)
        .map(|&(_, c)| c)
        .collect();
    let average = tail.iter().map(|&c| c as f64).sum::<f64>() / tail.len() as f64;
    TipStats { series, average }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApprovalStats {
    /// Issuance-to-first-child times for approved sites, in issue order.
    pub times: Vec<f64>,
    pub mean: Option<f64>,
    /// Sites that never gained a child.
    pub unapproved: usize,
}

/// Time from a site's issuance to its first child's issuance, over the
/// global tangle. Never-approved sites are excluded from the mean.
pub fn approval_times(trace: &SimTrace) -> ApprovalStats {
    let tangle = &trace.tangle;
    let n = tangle.len();
    let mut first_child: Vec<Option<f64>> = vec![None; n];
    let site_times: Vec<f64> = tangle.sites().map(|s| s.issue_time).collect();
    for (child, &t) in site_times.iter().enumerate() {
        if let Some((p, q)) = tangle.parents_at(child as u32) {
            for parent in if p == q { vec![p] } else { vec![p, q] } {
                let slot = &mut first_child[parent as usize];
                if slot.is_none_or(|cur| t < cur) {
                    *slot = Some(t);
                }
            }
        }
    }
    let mut times = Vec::new();
    let mut unapproved = 0;
    for i in 0..n {
        match first_child[i] {
            Some(t) => times.push(t - site_times[i]),
            None => unapproved += 1,
        }
    }
    let mean = if times.is_empty() {
        None
    } else {
        Some(times.iter().sum::<f64>() / times.len() as f64)
    };
    ApprovalStats {
        times,
        mean,
        unapproved,
    }
}

pub struct WeightConfirmationStats {
    pub times: Vec<f64>,
    pub mean: Option<f64>,
}

/// Time for each site to reach cumulative weight `threshold` (its
/// `threshold - 1`-th distinct confirmer), over sites that got there.
pub fn weight_confirmation_times(trace: &SimTrace, threshold: u64) -> WeightConfirmationStats {
    let tangle = &trace.tangle;
    let site_times: Vec<f64> = tangle.sites().map(|s| s.issue_time).collect();
    let mut times = Vec::new();
    for (i, site) in tangle.sites().enumerate() {
        if threshold <= 1 {
            times.push(0.0);
            continue;
        }
        let needed = (threshold - 1) as usize;
        // descendants are indexed in insertion order, which is issue order
        let reached = tangle
            .descendants_at(i as u32)
            .iter_ones()
            .nth(needed - 1)
            .map(|d| site_times[d]);
        if let Some(t) = reached {
            times.push(t - site.issue_time);
        }
    }
    let mean = if times.is_empty() {
        None
    } else {
        Some(times.iter().sum::<f64>() / times.len() as f64)
    };
    WeightConfirmationStats { times, mean }
}

/// Raw tips at trace end older than `cooldown`, excluding deliberately
/// discarded sites (rejected conflict branches are not "left behind") and
/// the genesis (the bootstrap site is not an issued transaction).
pub fn left_behind(trace: &SimTrace, cooldown: f64) -> usize {
    let tangle = &trace.tangle;
    if tangle.is_empty() {
        return 0;
    }
    let end = trace.config.duration;
    let resolution = resolve_conflicts(&tangle.full_view());
    tangle
        .raw_tips()
        .iter()
        .filter(|id| {
            let site = tangle.site(id).unwrap();
            !site.is_genesis()
                && end - site.issue_time > cooldown
                && !resolution.is_discarded(tangle, id)
        })
        .count()
}

/// Fraction of honest sites issued after the reveal whose past cone contains
/// the double-spend transaction. Zero when nothing was revealed or no honest
/// site followed.
pub fn parasite_attachment(trace: &SimTrace) -> Result<f64, MetricsError> {
    let attack = trace
        .attack
        .as_ref()
        .ok_or(MetricsError::NoAttackConfigured)?;
    let Some(reveal) = trace.reveal_time else {
        return Ok(0.0);
    };
    let tangle = &trace.tangle;
    let mut honest = 0usize;
    let mut attached = 0usize;
    for site in tangle.sites() {
        if !matches!(site.issuer, Issuer::Node(_)) || site.issue_time <= reveal {
            continue;
        }
        honest += 1;
        if tangle.confirms(&site.id, &attack.double_spend).unwrap() {
            attached += 1;
        }
    }
    if honest == 0 {
        return Ok(0.0);
    }
    Ok(attached as f64 / honest as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessPoint {
    pub accept_weight: u64,
    pub success_rate: f64,
    pub standard_error: f64,
    pub replications: u32,
}

/// Attack success rate per merchant acceptance threshold, over independent
/// seeded replications (seed = base seed + replication index).
pub fn success_curve(
    base: &SimConfig,
    accept_weights: &[u64],
    replications: u32,
) -> Result<Vec<SuccessPoint>, MetricsError> {
    let attack = base
        .attack
        .clone()
        .ok_or(MetricsError::NoAttackConfigured)?;
    accept_weights
        .iter()
        .map(|&w| {
            let mut config = base.clone();
            config.attack = Some(crate::sim::AttackConfig {
                accept_weight: w,
                ..attack.clone()
            });
            let successes: u32 = (0..replications)
                .into_par_iter()
                .map(|i| {
                    let run = sim::run(&config.clone().with_seed(base.seed + i as u64))
                        .expect("valid config");
                    run.outcome.is_some_and(|o| o.success) as u32
                })
                .sum();
            let p = successes as f64 / replications as f64;
            Ok(SuccessPoint {
                accept_weight: w,
                success_rate: p,
                standard_error: (p * (1.0 - p) / replications as f64).sqrt(),
                replications,
            })
        })
        .collect()
}

/// Mean and standard error of a sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
