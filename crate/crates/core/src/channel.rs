//! Channel instances and random ensembles for a line network.
//!
//! A network with `K` relay stages has nodes `0` (source), `1..=K` (relays)
//! and `K + 1` (destination). Hop `k` carries the signal from node `k - 1`
//! into node `k` with signal-to-noise ratio `snr_at(k)`; while node `k`
//! receives, node `k + 1` is transmitting, and that cross signal arrives at
//! node `k` with interference-to-noise ratio `inr_at(k)`. The destination has
//! no downstream neighbor, so `inr_at(K + 1)` is zero by construction.
//!
//! All ratios are stored linearly; dB appears only at the JSON boundary.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::rng;
use crate::Result;

/// Converts a dB value to a linear power ratio.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB. Zero maps to negative infinity.
#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// One realization of the line network's link gains, in linear scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInstance {
    snr: Vec<f64>,
    inr: Vec<f64>,
}

impl ChannelInstance {
    /// Builds an instance from linear gains.
    ///
    /// `snr` must hold one entry per hop (`K + 1` values, hop 1 through hop
    /// `K + 1`); `inr` holds one entry per relay stage (`K` values). Every
    /// value must be finite and nonnegative, and the hop into the destination
    /// must have positive gain.
    pub fn new(snr: Vec<f64>, inr: Vec<f64>) -> Result<Self> {
        if snr.len() != inr.len() + 1 || inr.is_empty() {
            return Err(Error::Domain(format!(
                "need K >= 1 with K + 1 snr entries and K inr entries, got {} and {}",
                snr.len(),
                inr.len()
            )));
        }
        for (i, &v) in snr.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("snr[{i}] must be finite and >= 0, got {v}")));
            }
        }
        for (i, &v) in inr.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("inr[{i}] must be finite and >= 0, got {v}")));
            }
        }
        if *snr.last().unwrap() <= 0.0 {
            return Err(Error::Domain(
                "the hop into the destination must have a positive gain".into(),
            ));
        }
        Ok(ChannelInstance { snr, inr })
    }

    /// Number of relay stages `K`.
    #[inline]
    pub fn num_relays(&self) -> usize {
        self.inr.len()
    }

    /// Number of hops `K + 1`.
    #[inline]
    pub fn num_hops(&self) -> usize {
        self.snr.len()
    }

    /// Linear SNR of hop `k`, for `k` in `1..=K + 1`.
    #[inline]
    pub fn snr_at(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.num_hops(), "hop index {k} out of range");
        self.snr[k - 1]
    }

    /// Linear INR seen at node `k`, for `k` in `1..=K + 1`.
    ///
    /// The destination entry `k = K + 1` is always zero.
    #[inline]
    pub fn inr_at(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.num_hops(), "node index {k} out of range");
        if k == self.num_hops() {
            0.0
        } else {
            self.inr[k - 1]
        }
    }

    /// Hex digest identifying this instance, stable across platforms.
    ///
    /// Hashes the exact bit patterns of the linear gains, so two instances
    /// collide only if they are numerically identical.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.inr.len() as u64).to_le_bytes());
        for &v in self.snr.iter().chain(self.inr.iter()) {
            hasher.update(v.to_bits().to_le_bytes());
        }
        let full = hasher.finalize();
        full[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelInstanceWire {
    #[serde(rename = "K")]
    k: usize,
    snr_db: Vec<f64>,
    inr_db: Vec<Option<f64>>,
}

impl Serialize for ChannelInstance {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let wire = ChannelInstanceWire {
            k: self.num_relays(),
            snr_db: self.snr.iter().map(|&v| linear_to_db(v)).collect(),
            inr_db: self
                .inr
                .iter()
                .map(|&v| if v == 0.0 { None } else { Some(linear_to_db(v)) })
                .collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChannelInstance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = ChannelInstanceWire::deserialize(deserializer)?;
        if wire.snr_db.len() != wire.k + 1 {
            return Err(D::Error::custom(format!(
                "snr_db must have K + 1 = {} entries, got {}",
                wire.k + 1,
                wire.snr_db.len()
            )));
        }
        if wire.inr_db.len() != wire.k {
            return Err(D::Error::custom(format!(
                "inr_db must have K = {} entries, got {}",
                wire.k,
                wire.inr_db.len()
            )));
        }
        let snr = wire.snr_db.iter().map(|&d| db_to_linear(d)).collect();
        let inr = wire.inr_db.iter().map(|d| d.map_or(0.0, db_to_linear)).collect();
        ChannelInstance::new(snr, inr).map_err(D::Error::custom)
    }
}

/// A random ensemble of instances with a common per-hop SNR and random
/// cross-link exponents.
///
/// Every hop gets the same `snr_db`. The cross gain at relay stage `k` is
/// `snr^alpha_k` in linear scale, with `alpha_k` drawn uniformly from
/// `[alpha_lo, alpha_hi]` independently per stage and per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub snr_db: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub trials: u64,
    pub seed: u64,
}

impl EnsembleSpec {
    /// Checks field coherence; call after constructing or deserializing.
    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::Domain(format!("snr_db must be finite, got {}", self.snr_db)));
        }
        if !self.alpha_lo.is_finite() || !self.alpha_hi.is_finite() || self.alpha_lo > self.alpha_hi
        {
            return Err(Error::Domain(format!(
                "need finite alpha_lo <= alpha_hi, got [{}, {}]",
                self.alpha_lo, self.alpha_hi
            )));
        }
        if self.trials == 0 {
            return Err(Error::Domain("trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// Draws one instance of the ensemble, deterministically in `(seed, trial)`.
///
/// The exponent at stage `k` depends only on `(seed, trial, k)`, never on
/// `num_relays`, so instances with different stage counts share their common
/// low-stage cross gains. This keeps rate curves over `K` comparable point by
/// point under one seed.
pub fn draw_instance(spec: &EnsembleSpec, num_relays: usize, trial: u64) -> Result<ChannelInstance> {
    spec.validate()?;
    if num_relays == 0 {
        return Err(Error::Domain("num_relays must be >= 1".into()));
    }
    let snr_linear = db_to_linear(spec.snr_db);
    let snr = vec![snr_linear; num_relays + 1];
    let inr = (1..=num_relays)
        .map(|k| {
            let u = rng::unit(spec.seed, trial, k as u64);
            let alpha = spec.alpha_lo + u * (spec.alpha_hi - spec.alpha_lo);
            snr_linear.powf(alpha)
        })
        .collect();
    ChannelInstance::new(snr, inr)
}
