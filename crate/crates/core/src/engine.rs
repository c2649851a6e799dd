//! Symmetric-rate evaluation for a fixed relaying configuration.
//!
//! Each relay stage either decodes its incoming message and re-encodes it
//! (DF) or quantizes its observation and forwards the bin index (QMF). The
//! QMF stages cut the chain into segments: a segment starts at a QMF stage
//! (or at the source) and runs up to the stage before the next QMF stage.
//! All DF relays inside a segment carry the segment leader's message, so the
//! segment rate is the minimum of the per-stage constraints inside it.
//!
//! Evaluation runs backward from the destination. Each QMF leader's segment
//! rate caps the index rate of its quantizer, which fixes the quantization
//! noise that the next segment upstream must tolerate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelInstance;
use crate::error::Error;
use crate::info::{self, RateValue};
use crate::Result;

const LN_2: f64 = std::f64::consts::LN_2;

#[inline]
fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// How a relay treats the cross signal arriving from its downstream neighbor.
///
/// `Sd` decodes the neighbor's common message first, strips it, then decodes
/// the desired message against the residue. `Jd` decodes both jointly, which
/// trades the two rates against a sum constraint instead of a hard order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    Sd,
    Jd,
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decoder::Sd => "sd",
            Decoder::Jd => "jd",
        })
    }
}

impl FromStr for Decoder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sd" => Ok(Decoder::Sd),
            "jd" => Ok(Decoder::Jd),
            other => Err(Error::Domain(format!("decoder must be sd or jd, got {other:?}"))),
        }
    }
}

/// Which reading of the cross-signal constraint to evaluate.
///
/// The closed-form constraint at stage `k` can be read two ways that differ
/// in general. `Printed` takes the cross quantities from stage `k + 1` and
/// uses a simplified denominator. `Theorem` takes them from stage `k`, where
/// the decoding actually happens, and counts the residual private part of the
/// cross signal as noise. Both are kept so the gap between the readings can
/// be measured on any instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulaVariant {
    Printed,
    Theorem,
}

impl fmt::Display for FormulaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormulaVariant::Printed => "printed",
            FormulaVariant::Theorem => "theorem",
        })
    }
}

impl FromStr for FormulaVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(FormulaVariant::Printed),
            "theorem" => Ok(FormulaVariant::Theorem),
            other => {
                Err(Error::Domain(format!("variant must be printed or theorem, got {other:?}")))
            }
        }
    }
}

/// A complete relaying configuration for a network with `K` stages.
///
/// `qmf_set` lists the stages whose relays quantize and forward; every other
/// stage decodes and forwards. `theta[k - 1]` is the fraction of stage `k`'s
/// transmit power spent on the common (cross-decodable) part of its signal.
/// QMF stages must use `theta = 1`: their whole signal is common, since the
/// next stage cannot decode any private part of a quantized index stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeConfig {
    qmf_set: BTreeSet<usize>,
    theta: Vec<f64>,
    decoder: Decoder,
    #[serde(rename = "formula_variant")]
    variant: FormulaVariant,
}

impl ModeConfig {
    /// Validates and builds a configuration. `theta.len()` fixes `K`.
    pub fn new(
        qmf_set: BTreeSet<usize>,
        theta: Vec<f64>,
        decoder: Decoder,
        variant: FormulaVariant,
    ) -> Result<Self> {
        let num_relays = theta.len();
        if num_relays == 0 {
            return Err(Error::Domain("theta must have one entry per relay stage".into()));
        }
        for (i, &t) in theta.iter().enumerate() {
            if !t.is_finite() || !(0.0..=1.0).contains(&t) {
                return Err(Error::Domain(format!(
                    "theta[{}] must lie in [0, 1], got {t}",
                    i + 1
                )));
            }
        }
        for &k in &qmf_set {
            if k == 0 || k > num_relays {
                return Err(Error::Domain(format!(
                    "qmf_set entry {k} outside the stage range 1..={num_relays}"
                )));
            }
            if theta[k - 1] != 1.0 {
                return Err(Error::Domain(format!(
                    "theta[{k}] = {} but stage {k} is in the QMF set; QMF stages require theta = 1",
                    theta[k - 1]
                )));
            }
        }
        Ok(ModeConfig { qmf_set, theta, decoder, variant })
    }

    /// Every stage QMF with full common power.
    pub fn all_qmf(num_relays: usize, decoder: Decoder, variant: FormulaVariant) -> Self {
        ModeConfig::new((1..=num_relays).collect(), vec![1.0; num_relays], decoder, variant)
            .expect("all-QMF configuration is always valid")
    }

    /// Every stage DF with the given power splits.
    pub fn all_df(theta: Vec<f64>, decoder: Decoder, variant: FormulaVariant) -> Result<Self> {
        ModeConfig::new(BTreeSet::new(), theta, decoder, variant)
    }

    #[inline]
    pub fn num_relays(&self) -> usize {
        self.theta.len()
    }

    pub fn qmf_set(&self) -> &BTreeSet<usize> {
        &self.qmf_set
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Power split of stage `k`, for `k` in `1..=K`.
    #[inline]
    pub fn theta_at(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.theta.len(), "stage index {k} out of range");
        self.theta[k - 1]
    }

    #[inline]
    pub fn decoder(&self) -> Decoder {
        self.decoder
    }

    #[inline]
    pub fn variant(&self) -> FormulaVariant {
        self.variant
    }
}

#[derive(Deserialize)]
struct ModeConfigWire {
    qmf_set: Vec<usize>,
    theta: Vec<f64>,
    decoder: Decoder,
    formula_variant: FormulaVariant,
}

impl<'de> Deserialize<'de> for ModeConfig {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let wire = ModeConfigWire::deserialize(deserializer)?;
        ModeConfig::new(
            wire.qmf_set.into_iter().collect(),
            wire.theta,
            wire.decoder,
            wire.formula_variant,
        )
        .map_err(serde::de::Error::custom)
    }
}

/// The partition of stages `{0..K}` induced by a QMF set.
///
/// Boundaries are the source `0` followed by the QMF stages in order. Segment
/// `l` spans from `boundaries[l]` through `boundaries[l + 1] - 1` (through
/// `K` for the last segment).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segmentation {
    num_relays: usize,
    boundaries: Vec<usize>,
}

/// Builds the segmentation of `{0..K}` for the given QMF set.
pub fn segment(num_relays: usize, qmf_set: &BTreeSet<usize>) -> Result<Segmentation> {
    if num_relays == 0 {
        return Err(Error::Domain("need at least one relay stage".into()));
    }
    for &k in qmf_set {
        if k == 0 || k > num_relays {
            return Err(Error::Domain(format!(
                "qmf_set entry {k} outside the stage range 1..={num_relays}"
            )));
        }
    }
    let mut boundaries = Vec::with_capacity(qmf_set.len() + 1);
    boundaries.push(0);
    boundaries.extend(qmf_set.iter().copied());
    Ok(Segmentation { num_relays, boundaries })
}

impl Segmentation {
    #[inline]
    pub fn num_relays(&self) -> usize {
        self.num_relays
    }

    #[inline]
    pub fn num_segments(&self) -> usize {
        self.boundaries.len()
    }

    /// Segment leaders in ascending order, starting with the source `0`.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Inclusive `(first, last)` stage indices of segment `l`.
    pub fn bounds(&self, l: usize) -> (usize, usize) {
        assert!(l < self.boundaries.len(), "segment index {l} out of range");
        let first = self.boundaries[l];
        let last = if l + 1 < self.boundaries.len() {
            self.boundaries[l + 1] - 1
        } else {
            self.num_relays
        };
        (first, last)
    }

    /// The leader of the segment containing stage `k`.
    pub fn leader_of(&self, k: usize) -> usize {
        assert!(k <= self.num_relays, "stage index {k} out of range");
        let idx = self.boundaries.partition_point(|&b| b <= k) - 1;
        self.boundaries[idx]
    }
}

/// Which constraint bound a segment's rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BindingKind {
    /// The forward link rate of hop `k -> k + 1`.
    Direct,
    /// The cross-decoding constraint at stage `k`.
    Cross,
}

/// The minimizing constraint of one segment: stage index and constraint kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub k: usize,
    pub kind: BindingKind,
}

/// Full result of evaluating one configuration on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBreakdown {
    /// The end-to-end symmetric rate, equal to the source segment's rate.
    pub symmetric_rate: RateValue,
    /// Long-run throughput per path, half the symmetric rate.
    pub per_path_throughput: RateValue,
    /// Rate of each segment, keyed by its leader stage (source segment at 0).
    pub segment_rates: BTreeMap<usize, f64>,
    /// Quantization noise variance at each QMF leader with a positive rate.
    pub quant_noise: BTreeMap<usize, f64>,
    /// Minimizing constraint per evaluated segment, keyed by leader. Ties go
    /// to the smallest stage, and to the direct link over the cross
    /// constraint at the same stage. Segments skipped after a zero-rate
    /// segment downstream carry no entry.
    pub binding: BTreeMap<usize, Binding>,
    /// True when some QMF segment's rate hit zero, forcing every segment
    /// upstream of it to zero because its quantizer cannot run.
    pub infeasible_quantization: bool,
}

trait RecursionSink {
    fn segment_rate(&mut self, leader: usize, rate: f64);
    fn binding(&mut self, leader: usize, binding: Binding);
    fn quant_noise(&mut self, leader: usize, sigma2: f64);
    fn infeasible(&mut self, leader: usize);
}

struct NoSink;

impl RecursionSink for NoSink {
    #[inline]
    fn segment_rate(&mut self, _: usize, _: f64) {}
    #[inline]
    fn binding(&mut self, _: usize, _: Binding) {}
    #[inline]
    fn quant_noise(&mut self, _: usize, _: f64) {}
    #[inline]
    fn infeasible(&mut self, _: usize) {}
}

#[derive(Default)]
struct Collector {
    segment_rates: BTreeMap<usize, f64>,
    quant_noise: BTreeMap<usize, f64>,
    binding: BTreeMap<usize, Binding>,
    infeasible: bool,
}

impl RecursionSink for Collector {
    fn segment_rate(&mut self, leader: usize, rate: f64) {
        self.segment_rates.insert(leader, rate);
    }
    fn binding(&mut self, leader: usize, binding: Binding) {
        self.binding.insert(leader, binding);
    }
    fn quant_noise(&mut self, leader: usize, sigma2: f64) {
        self.quant_noise.insert(leader, sigma2);
    }
    fn infeasible(&mut self, _: usize) {
        self.infeasible = true;
    }
}

/// First term of the cross constraint at stage `k` (the part that is not the
/// split-rate term). For `Jd` the returned value already carries its half
/// weight; the caller adds the matching fraction of the split rate.
#[inline]
fn cross_first_term(
    inst: &ChannelInstance,
    theta: &[f64],
    k: usize,
    snr_next: f64,
    inr_next: f64,
    theta_next: f64,
    decoder: Decoder,
    variant: FormulaVariant,
) -> f64 {
    match variant {
        FormulaVariant::Printed => match decoder {
            Decoder::Sd => log2_1p(theta_next * inr_next / (1.0 + snr_next)),
            Decoder::Jd => {
                0.5 * log2_1p(
                    (snr_next + theta_next * inr_next) / (1.0 + (1.0 - theta_next) * inr_next),
                )
            }
        },
        FormulaVariant::Theorem => {
            let (snr_here, inr_here, theta_k) = if k == 0 {
                (0.0, 0.0, 0.0)
            } else {
                (inst.snr_at(k), inst.inr_at(k), theta[k - 1])
            };
            match decoder {
                Decoder::Sd => log2_1p(
                    theta_k * inr_here / (1.0 + snr_here + (1.0 - theta_k) * inr_here),
                ),
                Decoder::Jd => {
                    0.5 * log2_1p(
                        (snr_here + theta_k * inr_here) / (1.0 + (1.0 - theta_k) * inr_here),
                    )
                }
            }
        }
    }
}

#[inline]
fn split_weight(decoder: Decoder) -> f64 {
    match decoder {
        Decoder::Sd => 1.0,
        Decoder::Jd => 0.5,
    }
}

/// Minimum constraint over one segment `leader..=seg_end`, given the
/// quantization noise `sigma_down` of the stage just past the segment end.
#[inline]
fn segment_min(
    inst: &ChannelInstance,
    theta: &[f64],
    decoder: Decoder,
    variant: FormulaVariant,
    leader: usize,
    seg_end: usize,
    sigma_down: f64,
) -> (f64, Binding) {
    let num_relays = inst.num_relays();
    let mut best = f64::INFINITY;
    let mut bind = Binding { k: leader, kind: BindingKind::Direct };
    for k in leader..=seg_end {
        let sigma_next = if k == seg_end { sigma_down } else { 0.0 };
        let snr_next = inst.snr_at(k + 1);
        let inr_next = inst.inr_at(k + 1);
        let theta_next = if k == num_relays { 1.0 } else { theta[k] };
        let denom = 1.0 + (1.0 - theta_next) * inr_next + sigma_next;
        let direct = log2_1p(snr_next / denom);
        if direct < best {
            best = direct;
            bind = Binding { k, kind: BindingKind::Direct };
        }
        if k > leader {
            let theta_k = theta[k - 1];
            let split = log2_1p((1.0 - theta_k) * snr_next / denom);
            let cross = cross_first_term(
                inst, theta, k, snr_next, inr_next, theta_next, decoder, variant,
            ) + split_weight(decoder) * split;
            if cross < best {
                best = cross;
                bind = Binding { k, kind: BindingKind::Cross };
            }
        }
    }
    (best, bind)
}

fn recurse<Q: Fn(usize) -> bool, S: RecursionSink>(
    inst: &ChannelInstance,
    is_qmf: Q,
    theta: &[f64],
    decoder: Decoder,
    variant: FormulaVariant,
    sink: &mut S,
) -> f64 {
    let num_relays = inst.num_relays();
    debug_assert_eq!(theta.len(), num_relays);
    let mut seg_end = num_relays;
    let mut sigma_down = 0.0;
    let mut dead = false;
    for leader in (1..=num_relays).rev() {
        if !is_qmf(leader) {
            continue;
        }
        if dead {
            sink.segment_rate(leader, 0.0);
        } else {
            let (rate, bind) =
                segment_min(inst, theta, decoder, variant, leader, seg_end, sigma_down);
            sink.segment_rate(leader, rate);
            sink.binding(leader, bind);
            if rate <= 0.0 {
                dead = true;
                sink.infeasible(leader);
            } else {
                sigma_down = info::wyner_ziv_noise(inst.snr_at(leader), rate)
                    .expect("positive segment rate yields finite noise");
                sink.quant_noise(leader, sigma_down);
            }
        }
        seg_end = leader - 1;
    }
    if dead {
        sink.segment_rate(0, 0.0);
        0.0
    } else {
        let (rate, bind) = segment_min(inst, theta, decoder, variant, 0, seg_end, sigma_down);
        sink.segment_rate(0, rate);
        sink.binding(0, bind);
        rate
    }
}

/// Evaluates the symmetric rate and full per-segment breakdown of one
/// configuration.
pub fn evaluate(inst: &ChannelInstance, cfg: &ModeConfig) -> Result<RateBreakdown> {
    if cfg.num_relays() != inst.num_relays() {
        return Err(Error::Contract(format!(
            "config is for {} stages but the instance has {}",
            cfg.num_relays(),
            inst.num_relays()
        )));
    }
    let mut collector = Collector::default();
    let rate = recurse(
        inst,
        |k| cfg.qmf_set.contains(&k),
        &cfg.theta,
        cfg.decoder,
        cfg.variant,
        &mut collector,
    );
    Ok(RateBreakdown {
        symmetric_rate: RateValue::new_unchecked(rate),
        per_path_throughput: RateValue::new_unchecked(rate / 2.0),
        segment_rates: collector.segment_rates,
        quant_noise: collector.quant_noise,
        binding: collector.binding,
        infeasible_quantization: collector.infeasible,
    })
}

/// Rate-only evaluation with the QMF set packed as a bitmask (bit `k - 1`
/// set means stage `k` is QMF). Shares every numeric step with [`evaluate`].
pub(crate) fn symmetric_rate_masked(
    inst: &ChannelInstance,
    qmf_mask: u64,
    theta: &[f64],
    decoder: Decoder,
    variant: FormulaVariant,
) -> f64 {
    debug_assert!(inst.num_relays() <= 63, "bitmask form supports at most 63 stages");
    recurse(
        inst,
        |k| qmf_mask & (1u64 << (k - 1)) != 0,
        theta,
        decoder,
        variant,
        &mut NoSink,
    )
}

fn resolve_next_stage(
    inst: &ChannelInstance,
    cfg: &ModeConfig,
    quant_noise_next: Option<f64>,
    k: usize,
) -> Result<(f64, f64, f64, f64)> {
    if cfg.num_relays() != inst.num_relays() {
        return Err(Error::Contract(format!(
            "config is for {} stages but the instance has {}",
            cfg.num_relays(),
            inst.num_relays()
        )));
    }
    let num_relays = inst.num_relays();
    if k > num_relays {
        return Err(Error::Contract(format!("stage index {k} exceeds K = {num_relays}")));
    }
    let next_is_qmf = k < num_relays && cfg.qmf_set.contains(&(k + 1));
    let sigma_next = if next_is_qmf {
        match quant_noise_next {
            Some(s) if s.is_finite() && s >= 0.0 => s,
            Some(s) => {
                return Err(Error::Contract(format!(
                    "quantization noise must be finite and >= 0, got {s}"
                )))
            }
            None => {
                return Err(Error::Contract(format!(
                    "stage {} is QMF, so its quantization noise is required",
                    k + 1
                )))
            }
        }
    } else {
        0.0
    };
    let snr_next = inst.snr_at(k + 1);
    let inr_next = inst.inr_at(k + 1);
    let theta_next = if k == num_relays { 1.0 } else { cfg.theta[k] };
    Ok((snr_next, inr_next, theta_next, sigma_next))
}

/// Forward link rate of hop `k -> k + 1`, for `k` in `0..=K`.
///
/// `quant_noise_next` is the quantization noise at stage `k + 1`; it is
/// required when that stage is QMF and ignored otherwise.
pub fn link_rate(
    inst: &ChannelInstance,
    cfg: &ModeConfig,
    quant_noise_next: Option<f64>,
    k: usize,
) -> Result<RateValue> {
    let (snr_next, inr_next, theta_next, sigma_next) =
        resolve_next_stage(inst, cfg, quant_noise_next, k)?;
    let denom = 1.0 + (1.0 - theta_next) * inr_next + sigma_next;
    Ok(RateValue::new_unchecked(log2_1p(snr_next / denom)))
}

/// Rate of the private part of stage `k`'s signal over hop `k -> k + 1`.
///
/// The source never splits, so `k = 0` uses a split of zero and this equals
/// [`link_rate`] there.
pub fn split_rate(
    inst: &ChannelInstance,
    cfg: &ModeConfig,
    quant_noise_next: Option<f64>,
    k: usize,
) -> Result<RateValue> {
    let (snr_next, inr_next, theta_next, sigma_next) =
        resolve_next_stage(inst, cfg, quant_noise_next, k)?;
    let theta_k = if k == 0 { 0.0 } else { cfg.theta[k - 1] };
    let denom = 1.0 + (1.0 - theta_next) * inr_next + sigma_next;
    Ok(RateValue::new_unchecked(log2_1p((1.0 - theta_k) * snr_next / denom)))
}

/// Cross-decoding constraint at stage `k`: the cap on a DF relay's rate that
/// comes from also decoding the common part of the cross signal.
pub fn cross_constraint(
    inst: &ChannelInstance,
    cfg: &ModeConfig,
    quant_noise_next: Option<f64>,
    k: usize,
) -> Result<RateValue> {
    let (snr_next, inr_next, theta_next, sigma_next) =
        resolve_next_stage(inst, cfg, quant_noise_next, k)?;
    let theta_k = if k == 0 { 0.0 } else { cfg.theta[k - 1] };
    let denom = 1.0 + (1.0 - theta_next) * inr_next + sigma_next;
    let split = log2_1p((1.0 - theta_k) * snr_next / denom);
    let first = cross_first_term(
        inst,
        &cfg.theta,
        k,
        snr_next,
        inr_next,
        theta_next,
        cfg.decoder,
        cfg.variant,
    );
    Ok(RateValue::new_unchecked(first + split_weight(cfg.decoder) * split))
}

/// Long-run throughput of a pipelined schedule that sends `blocks` message
/// blocks per burst, spends `num_relays` slots draining the pipeline, and
/// alternates between the two paths: `rate * blocks / (2 (blocks + K))`.
pub fn schedule_throughput(rate: RateValue, num_relays: usize, blocks: usize) -> Result<RateValue> {
    if blocks == 0 {
        return Err(Error::Domain("blocks must be >= 1".into()));
    }
    let n = blocks as f64;
    let k = num_relays as f64;
    Ok(RateValue::new_unchecked(rate.bits() * n / (2.0 * (n + k))))
}
