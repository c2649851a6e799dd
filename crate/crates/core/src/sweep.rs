//! Monte Carlo sweeps over random ensembles: draw instances, evaluate a set
//! of schemes on each, and emit per-trial rows plus per-(K, scheme) means.
//!
//! Output is deterministic down to the byte for a fixed request: instances
//! are drawn by counter-based keying, trials are collected in a fixed order
//! regardless of how many workers run them, and means are accumulated
//! sequentially in that same order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{self, BaselineKind, STAGE_DEPTH_DEFAULT_C};
use crate::channel::{draw_instance, EnsembleSpec};
use crate::engine::{Decoder, FormulaVariant};
use crate::error::Error;
use crate::optimizer::{self, ModeSearch, SearchSpec, ThetaSearch};
use crate::Result;

/// Everything a sweep can evaluate per instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exhaustive QMF-set search with optimized power splits.
    Mixed,
    OptimizedQmf,
    NoiseLevelQmf,
    StageDepthQmf,
    PureDf,
    HopBound,
}

/// Seed used when a caller does not pick one.
pub const DEFAULT_SEED: u64 = 7;

/// All schemes in their canonical output order.
pub const ALL_SCHEMES: [Scheme; 6] = [
    Scheme::Mixed,
    Scheme::OptimizedQmf,
    Scheme::NoiseLevelQmf,
    Scheme::StageDepthQmf,
    Scheme::PureDf,
    Scheme::HopBound,
];

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Mixed => "mixed",
            Scheme::OptimizedQmf => "optimized_qmf",
            Scheme::NoiseLevelQmf => "noise_level_qmf",
            Scheme::StageDepthQmf => "stage_depth_qmf",
            Scheme::PureDf => "pure_df",
            Scheme::HopBound => "hop_bound",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(Scheme::Mixed),
            "optimized_qmf" => Ok(Scheme::OptimizedQmf),
            "noise_level_qmf" => Ok(Scheme::NoiseLevelQmf),
            "stage_depth_qmf" => Ok(Scheme::StageDepthQmf),
            "pure_df" => Ok(Scheme::PureDf),
            "hop_bound" => Ok(Scheme::HopBound),
            other => Err(Error::Domain(format!(
                "unknown scheme {other:?}; expected one of mixed, optimized_qmf, \
                 noise_level_qmf, stage_depth_qmf, pure_df, hop_bound"
            ))),
        }
    }
}

/// A full sweep request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRequest {
    pub ensemble: EnsembleSpec,
    pub k_list: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub decoder: Decoder,
    pub variant: FormulaVariant,
}

/// One evaluated instance: its identity and each scheme's rate, in the
/// request's scheme order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub num_relays: usize,
    pub trial: u64,
    pub instance_digest: String,
    pub rates: Vec<(Scheme, f64)>,
}

/// Mean and standard error of one scheme at one stage count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub num_relays: usize,
    pub scheme: Scheme,
    pub mean_rate: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// The sweep output: every per-trial record, the per-(K, scheme) summaries,
/// and the settings needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub request: SweepRequest,
    pub stage_depth_c: f64,
    pub version: String,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<SchemeSummary>,
}

fn scheme_rate(
    inst: &crate::channel::ChannelInstance,
    scheme: Scheme,
    decoder: Decoder,
    variant: FormulaVariant,
) -> Result<f64> {
    let kind = match scheme {
        Scheme::Mixed => {
            let spec = SearchSpec {
                mode_search: ModeSearch::Exhaustive,
                theta_search: ThetaSearch::default_coordinate(),
                decoder,
                variant,
            };
            return Ok(optimizer::optimize(inst, &spec)?.best_breakdown.symmetric_rate.bits());
        }
        Scheme::OptimizedQmf => BaselineKind::OptimizedQmf,
        Scheme::NoiseLevelQmf => BaselineKind::NoiseLevelQmf,
        Scheme::StageDepthQmf => BaselineKind::StageDepthQmf,
        Scheme::PureDf => BaselineKind::PureDf,
        Scheme::HopBound => BaselineKind::HopCapacityBound,
    };
    Ok(baselines::baseline_rate(inst, kind, decoder, variant)?.symmetric_rate.bits())
}

fn validate(req: &SweepRequest) -> Result<()> {
    req.ensemble.validate()?;
    if req.k_list.is_empty() {
        return Err(Error::Domain("k_list must name at least one stage count".into()));
    }
    for &k in &req.k_list {
        if k == 0 {
            return Err(Error::Domain("stage counts must be >= 1".into()));
        }
    }
    if req.schemes.is_empty() {
        return Err(Error::Domain("schemes must name at least one scheme".into()));
    }
    for (i, s) in req.schemes.iter().enumerate() {
        if req.schemes[..i].contains(s) {
            return Err(Error::Domain(format!("scheme {s} listed twice")));
        }
    }
    Ok(())
}

/// Runs the sweep. Trials may execute on any number of workers; the result
/// is identical either way.
pub fn run_sweep(req: &SweepRequest) -> Result<SweepResult> {
    validate(req)?;
    let tasks: Vec<(usize, u64)> = req
        .k_list
        .iter()
        .flat_map(|&k| (0..req.ensemble.trials).map(move |t| (k, t)))
        .collect();
    let records: Vec<TrialRecord> = tasks
        .par_iter()
        .map(|&(num_relays, trial)| {
            let inst = draw_instance(&req.ensemble, num_relays, trial)?;
            let rates = req
                .schemes
                .iter()
                .map(|&s| Ok((s, scheme_rate(&inst, s, req.decoder, req.variant)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(TrialRecord { num_relays, trial, instance_digest: inst.digest(), rates })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summaries = Vec::with_capacity(req.k_list.len() * req.schemes.len());
    for &num_relays in &req.k_list {
        for (si, &scheme) in req.schemes.iter().enumerate() {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.num_relays == num_relays)
                .map(|r| r.rates[si].1)
                .collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std_error = if values.len() > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            summaries.push(SchemeSummary {
                num_relays,
                scheme,
                mean_rate: mean,
                std_error,
                trials: values.len() as u64,
            });
        }
    }
    Ok(SweepResult {
        request: req.clone(),
        stage_depth_c: STAGE_DEPTH_DEFAULT_C,
        version: crate::VERSION.to_string(),
        records,
        summaries,
    })
}

/// Per-trial rows as CSV text, one row per (K, trial, scheme).
pub fn rows_csv(result: &SweepResult) -> String {
    let mut out = String::from("K,trial,scheme,decoder,variant,rate_bits\n");
    for rec in &result.records {
        for (scheme, rate) in &rec.rates {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                rec.num_relays,
                rec.trial,
                scheme,
                result.request.decoder,
                result.request.variant,
                rate
            ));
        }
    }
    out
}

/// Per-(K, scheme) means as CSV text.
pub fn summary_csv(result: &SweepResult) -> String {
    let mut out = String::from("K,scheme,decoder,variant,mean_rate_bits,std_error,trials\n");
    for s in &result.summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.num_relays,
            s.scheme,
            result.request.decoder,
            result.request.variant,
            s.mean_rate,
            s.std_error,
            s.trials
        ));
    }
    out
}
