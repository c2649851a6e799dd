//! Reference schemes the mixed configuration is measured against.
//!
//! Three all-QMF chains (optimal, noise-level, and stage-depth quantization),
//! a pure DF chain with optimized power splits, and an interference-free
//! per-hop capacity benchmark. The fixed-distortion chains clamp each
//! quantizer's noise from below by a floor while still respecting index
//! forwarding: a quantizer may never emit indices faster than the downstream
//! chain can carry them, so the effective noise is the maximum of the floor
//! and the noise forced by the downstream rate.

use std::collections::BTreeMap;

use crate::channel::ChannelInstance;
use crate::engine::{
    self, Binding, BindingKind, Decoder, FormulaVariant, ModeConfig, RateBreakdown,
};
use crate::info::{self, RateValue};
use crate::optimizer::{self, ModeSearch, SearchSpec, ThetaSearch};
use crate::Result;

const LN_2: f64 = std::f64::consts::LN_2;

/// The reference schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    /// All stages QMF with Wyner-Ziv-optimal quantization.
    OptimizedQmf,
    /// All stages QMF, quantizing at the background noise level (floor 1).
    NoiseLevelQmf,
    /// All stages QMF, noise floor growing with the stage count (`c * K`).
    StageDepthQmf,
    /// No QMF stages; power splits optimized by coordinate ascent.
    PureDf,
    /// `min` over hops of the interference-free capacity `log2(1 + snr)`.
    /// An upper benchmark for gap reporting, not a converse bound.
    HopCapacityBound,
}

/// Default scale for the stage-depth noise floor `c * K`.
pub const STAGE_DEPTH_DEFAULT_C: f64 = 1.0;

/// Rate of a reference scheme, as a full breakdown.
///
/// The all-QMF chains have no DF stage, so `decoder` and `variant` do not
/// change their value; they matter for `PureDf` and are recorded for every
/// kind so outputs stay comparable.
pub fn baseline_rate(
    inst: &ChannelInstance,
    kind: BaselineKind,
    decoder: Decoder,
    variant: FormulaVariant,
) -> Result<RateBreakdown> {
    baseline_rate_with_depth_scale(inst, kind, decoder, variant, STAGE_DEPTH_DEFAULT_C)
}

/// Same as [`baseline_rate`] with an explicit stage-depth scale `c` (the
/// stage-depth chain quantizes at noise floor `c * K`).
pub fn baseline_rate_with_depth_scale(
    inst: &ChannelInstance,
    kind: BaselineKind,
    decoder: Decoder,
    variant: FormulaVariant,
    stage_depth_c: f64,
) -> Result<RateBreakdown> {
    match kind {
        BaselineKind::OptimizedQmf => {
            let cfg = ModeConfig::all_qmf(inst.num_relays(), decoder, variant);
            engine::evaluate(inst, &cfg)
        }
        BaselineKind::NoiseLevelQmf => Ok(clamped_all_qmf(inst, 1.0)),
        BaselineKind::StageDepthQmf => {
            if !stage_depth_c.is_finite() || stage_depth_c <= 0.0 {
                return Err(crate::error::Error::Domain(format!(
                    "stage-depth scale must be positive, got {stage_depth_c}"
                )));
            }
            Ok(clamped_all_qmf(inst, stage_depth_c * inst.num_relays() as f64))
        }
        BaselineKind::PureDf => {
            let spec = SearchSpec {
                mode_search: ModeSearch::Given(Default::default()),
                theta_search: ThetaSearch::default_coordinate(),
                decoder,
                variant,
            };
            Ok(optimizer::optimize(inst, &spec)?.best_breakdown)
        }
        BaselineKind::HopCapacityBound => Ok(hop_capacity_bound(inst)),
    }
}

/// Backward pass over an all-QMF chain whose quantization noise at each stage
/// is `max(floor, wyner_ziv_noise(snr[k], r_k))`.
///
/// With every stage QMF each segment is a single stage, so the segment rate
/// is just that stage's link rate. A zero link rate anywhere makes every
/// upstream quantizer infeasible, exactly as in the unclamped recursion.
fn clamped_all_qmf(inst: &ChannelInstance, floor: f64) -> RateBreakdown {
    let num_relays = inst.num_relays();
    let mut segment_rates = BTreeMap::new();
    let mut quant_noise = BTreeMap::new();
    let mut binding = BTreeMap::new();
    let mut sigma_down = 0.0;
    let mut dead = false;
    for k in (1..=num_relays).rev() {
        if dead {
            segment_rates.insert(k, 0.0);
            continue;
        }
        let rate = (inst.snr_at(k + 1) / (1.0 + sigma_down)).ln_1p() / LN_2;
        segment_rates.insert(k, rate);
        binding.insert(k, Binding { k, kind: BindingKind::Direct });
        if rate <= 0.0 {
            dead = true;
            continue;
        }
        let forced = info::wyner_ziv_noise(inst.snr_at(k), rate)
            .expect("positive rate yields finite noise");
        sigma_down = forced.max(floor);
        quant_noise.insert(k, sigma_down);
    }
    let rate = if dead {
        segment_rates.insert(0, 0.0);
        0.0
    } else {
        let rate = (inst.snr_at(1) / (1.0 + sigma_down)).ln_1p() / LN_2;
        segment_rates.insert(0, rate);
        binding.insert(0, Binding { k: 0, kind: BindingKind::Direct });
        rate
    };
    RateBreakdown {
        symmetric_rate: RateValue::new_unchecked(rate),
        per_path_throughput: RateValue::new_unchecked(rate / 2.0),
        segment_rates,
        quant_noise,
        binding,
        infeasible_quantization: dead,
    }
}

fn hop_capacity_bound(inst: &ChannelInstance) -> RateBreakdown {
    let mut best = f64::INFINITY;
    let mut best_hop = 1;
    for hop in 1..=inst.num_hops() {
        let cap = inst.snr_at(hop).ln_1p() / LN_2;
        if cap < best {
            best = cap;
            best_hop = hop;
        }
    }
    RateBreakdown {
        symmetric_rate: RateValue::new_unchecked(best),
        per_path_throughput: RateValue::new_unchecked(best / 2.0),
        segment_rates: BTreeMap::from([(0, best)]),
        quant_noise: BTreeMap::new(),
        binding: BTreeMap::from([(0, Binding { k: best_hop - 1, kind: BindingKind::Direct })]),
        infeasible_quantization: false,
    }
}
