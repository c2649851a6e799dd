//! Search over relaying configurations: which stages quantize, and how the
//! DF stages split their power.
//!
//! The QMF set is enumerated exhaustively (or fixed by the caller). For each
//! set, the free power splits are the stages outside it; those are maximized
//! either on a full grid or by multi-start coordinate ascent with a
//! golden-section line search per coordinate. All tie-breaking is
//! deterministic: subsets in lexicographic order of their sorted elements,
//! then the lexicographically smallest split vector.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ChannelInstance;
use crate::engine::{self, Decoder, FormulaVariant, ModeConfig, RateBreakdown};
use crate::error::Error;
use crate::rng;
use crate::Result;

/// Rates closer than this are treated as equal when breaking ties.
const RATE_TIE_TOL: f64 = 1e-12;
/// Smallest meaningful change in a power split.
const THETA_FLOOR: f64 = 1e-9;
/// Fixed seed for the random restart points, so searches are reproducible.
const RESTART_SEED: u64 = 0x7f4a_7c15_9e37_79b9;
/// Full `{0, 1/2, 1}` start lattices are used up to this many points.
const LATTICE_CAP: usize = 729;
const COARSE_POINTS: usize = 13;

/// Which QMF sets the search visits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModeSearch {
    /// All `2^K` subsets of `{1..K}`.
    Exhaustive,
    /// A single caller-chosen subset.
    Given(BTreeSet<usize>),
}

/// How the free power splits are maximized for each QMF set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSearch {
    /// Evaluate every point of a uniform grid on `[0, 1]` per free split.
    Grid { points_per_dim: usize },
    /// Multi-start coordinate ascent; each coordinate step does a coarse
    /// scan followed by a golden-section refinement down to `tol`.
    Coordinate { restarts: usize, sweeps: usize, tol: f64 },
}

impl ThetaSearch {
    /// Coordinate ascent settings that balance accuracy and speed.
    pub fn default_coordinate() -> Self {
        ThetaSearch::Coordinate { restarts: 8, sweeps: 4, tol: 1e-7 }
    }
}

/// A complete search request.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub mode_search: ModeSearch,
    pub theta_search: ThetaSearch,
    pub decoder: Decoder,
    pub variant: FormulaVariant,
}

/// The search result: the best configuration found, its full breakdown, and
/// the per-subset maxima in the deterministic enumeration order.
#[derive(Debug, Clone, Serialize)]
pub struct Optimum {
    pub best_config: ModeConfig,
    pub best_breakdown: RateBreakdown,
    pub configs_evaluated: u64,
    pub per_subset_rates: Vec<(BTreeSet<usize>, f64)>,
}

#[inline]
fn stage_bit(k: usize) -> u64 {
    1u64 << (k - 1)
}

fn mask_of(set: &BTreeSet<usize>) -> u64 {
    set.iter().fold(0u64, |m, &k| m | stage_bit(k))
}

fn subset_of(mask: u64, num_relays: usize) -> BTreeSet<usize> {
    (1..=num_relays).filter(|&k| mask & stage_bit(k) != 0).collect()
}

/// Orders subsets by the lexicographic order of their sorted element lists,
/// with the empty set first.
fn lex_subset_cmp(mut a: u64, mut b: u64) -> Ordering {
    loop {
        if a == b {
            return Ordering::Equal;
        }
        if a == 0 {
            return Ordering::Less;
        }
        if b == 0 {
            return Ordering::Greater;
        }
        let (la, lb) = (a.trailing_zeros(), b.trailing_zeros());
        match la.cmp(&lb) {
            Ordering::Equal => {
                a &= a - 1;
                b &= b - 1;
            }
            other => return other,
        }
    }
}

fn lex_theta_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y).expect("splits are never NaN") {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

struct SubsetOutcome {
    mask: u64,
    theta: Vec<f64>,
    rate: f64,
    evals: u64,
}

fn validate(inst: &ChannelInstance, spec: &SearchSpec) -> Result<()> {
    let num_relays = inst.num_relays();
    let max_free = match &spec.mode_search {
        ModeSearch::Exhaustive => {
            if num_relays > 20 {
                return Err(Error::Domain(format!(
                    "exhaustive subset search is limited to 20 stages, got {num_relays}"
                )));
            }
            num_relays
        }
        ModeSearch::Given(v) => {
            for &k in v {
                if k == 0 || k > num_relays {
                    return Err(Error::Domain(format!(
                        "qmf_set entry {k} outside the stage range 1..={num_relays}"
                    )));
                }
            }
            num_relays - v.len()
        }
    };
    match spec.theta_search {
        ThetaSearch::Grid { points_per_dim } => {
            if points_per_dim < 2 {
                return Err(Error::Domain("grid needs at least 2 points per split".into()));
            }
            let total = (points_per_dim as f64).powi(max_free as i32);
            if total > 1e7 {
                return Err(Error::GridTooLarge {
                    points: points_per_dim,
                    free_dims: max_free,
                    total,
                });
            }
        }
        ThetaSearch::Coordinate { sweeps, tol, .. } => {
            if sweeps == 0 {
                return Err(Error::Domain("coordinate search needs at least 1 sweep".into()));
            }
            if !tol.is_finite() || tol <= 0.0 {
                return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
            }
        }
    }
    Ok(())
}

/// Runs the configured search and returns the best configuration with its
/// breakdown and the per-subset rate table.
pub fn optimize(inst: &ChannelInstance, spec: &SearchSpec) -> Result<Optimum> {
    let outcomes = run_search(inst, spec)?;
    let mut best: Option<&SubsetOutcome> = None;
    for out in &outcomes {
        let better = match best {
            None => true,
            Some(b) => {
                out.rate > b.rate + RATE_TIE_TOL
                    || (out.rate >= b.rate - RATE_TIE_TOL
                        && lex_subset_cmp(out.mask, b.mask) == Ordering::Equal
                        && lex_theta_cmp(&out.theta, &b.theta) == Ordering::Less)
            }
        };
        if better {
            best = Some(out);
        }
    }
    let best = best.expect("search space is never empty");
    let num_relays = inst.num_relays();
    let best_config = ModeConfig::new(
        subset_of(best.mask, num_relays),
        best.theta.clone(),
        spec.decoder,
        spec.variant,
    )?;
    let best_breakdown = engine::evaluate(inst, &best_config)?;
    Ok(Optimum {
        best_config,
        best_breakdown,
        configs_evaluated: outcomes.iter().map(|o| o.evals).sum(),
        per_subset_rates: outcomes
            .into_iter()
            .map(|o| (subset_of(o.mask, num_relays), o.rate))
            .collect(),
    })
}

/// The per-subset maxima alone, in the deterministic enumeration order.
pub fn best_per_subset(
    inst: &ChannelInstance,
    spec: &SearchSpec,
) -> Result<Vec<(BTreeSet<usize>, f64)>> {
    let num_relays = inst.num_relays();
    Ok(run_search(inst, spec)?
        .into_iter()
        .map(|o| (subset_of(o.mask, num_relays), o.rate))
        .collect())
}

fn run_search(inst: &ChannelInstance, spec: &SearchSpec) -> Result<Vec<SubsetOutcome>> {
    validate(inst, spec)?;
    let num_relays = inst.num_relays();
    let mut masks: Vec<u64> = match &spec.mode_search {
        ModeSearch::Exhaustive => (0..(1u64 << num_relays)).collect(),
        ModeSearch::Given(v) => vec![mask_of(v)],
    };
    masks.sort_by(|&a, &b| lex_subset_cmp(a, b));
    Ok(masks
        .into_par_iter()
        .map(|mask| optimize_subset(inst, mask, spec))
        .collect())
}

fn optimize_subset(inst: &ChannelInstance, mask: u64, spec: &SearchSpec) -> SubsetOutcome {
    let num_relays = inst.num_relays();
    let free: Vec<usize> = (1..=num_relays).filter(|&k| mask & stage_bit(k) == 0).collect();
    let mut theta = vec![1.0; num_relays];
    let mut evals: u64 = 0;
    let eval = |theta: &[f64], evals: &mut u64| {
        *evals += 1;
        engine::symmetric_rate_masked(inst, mask, theta, spec.decoder, spec.variant)
    };
    if free.is_empty() {
        let rate = eval(&theta, &mut evals);
        return SubsetOutcome { mask, theta, rate, evals };
    }
    let (rate, best_theta) = match spec.theta_search {
        ThetaSearch::Grid { points_per_dim } => {
            grid_search(&free, points_per_dim, &mut theta, |t| eval(t, &mut evals))
        }
        ThetaSearch::Coordinate { restarts, sweeps, tol } => coordinate_search(
            mask,
            &free,
            restarts,
            sweeps,
            tol,
            &mut theta,
            |t| eval(t, &mut evals),
        ),
    };
    SubsetOutcome { mask, theta: best_theta, rate, evals }
}

/// Full grid scan in ascending lexicographic order of the split vector, so
/// keeping the first strict improvement realizes the smallest-vector tie
/// rule.
fn grid_search(
    free: &[usize],
    points: usize,
    theta: &mut [f64],
    mut eval: impl FnMut(&[f64]) -> f64,
) -> (f64, Vec<f64>) {
    let step = 1.0 / (points - 1) as f64;
    let mut idx = vec![0usize; free.len()];
    let mut best_rate = f64::NEG_INFINITY;
    let mut best_theta = theta.to_vec();
    loop {
        for (j, &k) in free.iter().enumerate() {
            theta[k - 1] = if idx[j] == points - 1 { 1.0 } else { idx[j] as f64 * step };
        }
        let rate = eval(theta);
        if rate > best_rate + RATE_TIE_TOL {
            best_rate = rate;
            best_theta.copy_from_slice(theta);
        }
        let mut dim = free.len();
        loop {
            if dim == 0 {
                return (best_rate, best_theta);
            }
            dim -= 1;
            idx[dim] += 1;
            if idx[dim] < points {
                break;
            }
            idx[dim] = 0;
        }
    }
}

fn coordinate_search(
    mask: u64,
    free: &[usize],
    restarts: usize,
    sweeps: usize,
    tol: f64,
    theta: &mut [f64],
    mut eval: impl FnMut(&[f64]) -> f64,
) -> (f64, Vec<f64>) {
    let dims = free.len();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if 3usize.pow(dims.min(12) as u32) <= LATTICE_CAP {
        let mut idx = vec![0u8; dims];
        'lattice: loop {
            starts.push(idx.iter().map(|&i| f64::from(i) * 0.5).collect());
            let mut d = dims;
            loop {
                if d == 0 {
                    break 'lattice;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < 3 {
                    break;
                }
                idx[d] = 0;
            }
        }
    } else {
        starts.push(vec![0.0; dims]);
        starts.push(vec![0.5; dims]);
        starts.push(vec![1.0; dims]);
    }
    let restart_key = rng::mix64(RESTART_SEED ^ mask);
    for i in 0..restarts {
        starts.push(free.iter().map(|&k| rng::unit(restart_key, i as u64, k as u64)).collect());
    }

    // Screen every start with a single evaluation, then refine only the most
    // promising few with full coordinate ascent.
    let mut screened: Vec<(f64, Vec<f64>)> = starts
        .into_iter()
        .map(|s| {
            for (j, &k) in free.iter().enumerate() {
                theta[k - 1] = s[j];
            }
            (eval(theta), s)
        })
        .collect();
    screened.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).expect("rates are never NaN").then_with(|| lex_theta_cmp(&a.1, &b.1))
    });
    let refine_count = (restarts / 2).max(2).min(screened.len());

    let mut best_rate = f64::NEG_INFINITY;
    let mut best_theta = theta.to_vec();
    for (start_rate, start) in screened.into_iter().take(refine_count) {
        for (j, &k) in free.iter().enumerate() {
            theta[k - 1] = start[j];
        }
        let rate = ascend(free, sweeps, tol, start_rate, theta, &mut eval);
        let better = rate > best_rate + RATE_TIE_TOL
            || (rate >= best_rate - RATE_TIE_TOL
                && lex_theta_cmp(theta, &best_theta) == Ordering::Less);
        if better {
            best_rate = rate;
            best_theta.copy_from_slice(theta);
        }
    }
    (best_rate, best_theta)
}

fn ascend(
    free: &[usize],
    sweeps: usize,
    tol: f64,
    start_rate: f64,
    theta: &mut [f64],
    eval: &mut impl FnMut(&[f64]) -> f64,
) -> f64 {
    let mut current = start_rate;
    for _ in 0..sweeps {
        let mut moved = false;
        for &k in free {
            let old = theta[k - 1];
            let (t, rate) = line_max(k, tol, theta, eval);
            if rate > current {
                theta[k - 1] = t;
                if (t - old).abs() > THETA_FLOOR {
                    moved = true;
                }
                current = rate;
            } else {
                theta[k - 1] = old;
            }
        }
        if !moved {
            break;
        }
    }
    current
}

/// Maximizes the rate along one split coordinate: a coarse scan brackets the
/// peak, a golden-section pass narrows it, and the better of the refined
/// point and the best coarse point wins. Coarse points include the exact
/// endpoints 0 and 1, so boundary optima are hit exactly.
fn line_max(
    k: usize,
    tol: f64,
    theta: &mut [f64],
    eval: &mut impl FnMut(&[f64]) -> f64,
) -> (f64, f64) {
    let mut at = |t: f64, theta: &mut [f64]| {
        theta[k - 1] = t;
        eval(theta)
    };
    let mut coarse_best = (0.0, f64::NEG_INFINITY);
    let mut best_j = 0;
    for j in 0..COARSE_POINTS {
        let t = j as f64 / (COARSE_POINTS - 1) as f64;
        let r = at(t, theta);
        if r > coarse_best.1 {
            coarse_best = (t, r);
            best_j = j;
        }
    }
    let mut a = best_j.saturating_sub(1) as f64 / (COARSE_POINTS - 1) as f64;
    let mut b = (best_j + 1).min(COARSE_POINTS - 1) as f64 / (COARSE_POINTS - 1) as f64;
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let span_tol = tol.max(THETA_FLOOR);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = at(c, theta);
    let mut fd = at(d, theta);
    while b - a > span_tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = at(c, theta);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = at(d, theta);
        }
    }
    let mut t = 0.5 * (a + b);
    if t < THETA_FLOOR {
        t = 0.0;
    } else if t > 1.0 - THETA_FLOOR {
        t = 1.0;
    }
    let refined = at(t, theta);
    if refined >= coarse_best.1 {
        (t, refined)
    } else {
        (coarse_best.0, coarse_best.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_instance, EnsembleSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const LN_2: f64 = std::f64::consts::LN_2;

    fn coord_spec(decoder: Decoder) -> SearchSpec {
        SearchSpec {
            mode_search: ModeSearch::Exhaustive,
            theta_search: ThetaSearch::default_coordinate(),
            decoder,
            variant: FormulaVariant::Printed,
        }
    }

    #[test]
    fn subset_order_is_lexicographic_on_elements() {
        let mut masks: Vec<u64> = (0..8).collect();
        masks.sort_by(|&a, &b| lex_subset_cmp(a, b));
        let order: Vec<Vec<usize>> =
            masks.iter().map(|&m| subset_of(m, 3).into_iter().collect()).collect();
        let expect: Vec<Vec<usize>> = vec![
            vec![],
            vec![1],
            vec![1, 2],
            vec![1, 2, 3],
            vec![1, 3],
            vec![2],
            vec![2, 3],
            vec![3],
        ];
        assert_eq!(order, expect);
    }

    #[test]
    fn interference_free_instance_prefers_pure_df() {
        let inst = ChannelInstance::new(vec![100.0, 100.0], vec![0.0]).unwrap();
        let opt = optimize(&inst, &coord_spec(Decoder::Sd)).unwrap();
        assert!(opt.best_config.qmf_set().is_empty());
        assert_relative_eq!(
            opt.best_breakdown.symmetric_rate.bits(),
            100.0f64.ln_1p() / LN_2,
            max_relative = 1e-9
        );
        assert_eq!(opt.per_subset_rates.len(), 2);
        assert!(opt.configs_evaluated > 0);
    }

    #[test]
    fn per_subset_table_is_ordered_and_bounded_by_optimum() {
        let spec = EnsembleSpec { snr_db: 20.0, alpha_lo: 1.0, alpha_hi: 2.0, trials: 1, seed: 11 };
        let inst = draw_instance(&spec, 3, 0).unwrap();
        let search = coord_spec(Decoder::Jd);
        let opt = optimize(&inst, &search).unwrap();
        let table = best_per_subset(&inst, &search).unwrap();
        assert_eq!(table.len(), 8);
        let keys: Vec<Vec<usize>> =
            table.iter().map(|(v, _)| v.iter().copied().collect()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted, "table must come in lexicographic subset order");
        let best = opt.best_breakdown.symmetric_rate.bits();
        for (v, rate) in &table {
            assert!(
                *rate <= best + 1e-12,
                "subset {v:?} rate {rate} exceeds reported optimum {best}"
            );
        }
        assert!(table.iter().any(|(_, r)| (r - best).abs() <= 1e-12));
    }

    #[test]
    fn grid_guard_refuses_oversized_searches() {
        let inst = ChannelInstance::new(vec![100.0; 5], vec![10.0; 4]).unwrap();
        let spec = SearchSpec {
            mode_search: ModeSearch::Exhaustive,
            theta_search: ThetaSearch::Grid { points_per_dim: 101 },
            decoder: Decoder::Sd,
            variant: FormulaVariant::Printed,
        };
        assert!(matches!(optimize(&inst, &spec), Err(Error::GridTooLarge { .. })));
        // Fixing enough stages to QMF shrinks the free dimensions under the cap.
        let given = SearchSpec {
            mode_search: ModeSearch::Given([1, 2, 3].into_iter().collect()),
            theta_search: ThetaSearch::Grid { points_per_dim: 101 },
            decoder: Decoder::Sd,
            variant: FormulaVariant::Printed,
        };
        assert!(optimize(&inst, &given).is_ok());
    }

    #[test]
    fn coordinate_matches_grid_on_a_flat_instance() {
        let inst = ChannelInstance::new(vec![100.0; 3], vec![100.0; 2]).unwrap();
        let grid = SearchSpec {
            mode_search: ModeSearch::Exhaustive,
            theta_search: ThetaSearch::Grid { points_per_dim: 101 },
            decoder: Decoder::Sd,
            variant: FormulaVariant::Printed,
        };
        let coord = SearchSpec {
            mode_search: ModeSearch::Exhaustive,
            theta_search: ThetaSearch::Coordinate { restarts: 8, sweeps: 4, tol: 1e-7 },
            decoder: Decoder::Sd,
            variant: FormulaVariant::Printed,
        };
        let g = optimize(&inst, &grid).unwrap().best_breakdown.symmetric_rate.bits();
        let c = optimize(&inst, &coord).unwrap().best_breakdown.symmetric_rate.bits();
        assert_abs_diff_eq!(g, c, epsilon = 1e-6);
    }

    #[test]
    fn optimum_dominates_random_configurations() {
        let spec = EnsembleSpec { snr_db: 20.0, alpha_lo: 1.0, alpha_hi: 2.0, trials: 1, seed: 3 };
        let inst = draw_instance(&spec, 3, 1).unwrap();
        let search = coord_spec(Decoder::Sd);
        let best = optimize(&inst, &search).unwrap().best_breakdown.symmetric_rate.bits();
        for trial in 0..100u64 {
            let mask = rng::key3(99, trial, 0) & 0b111;
            let mut theta: Vec<f64> =
                (1..=3).map(|k| rng::unit(17, trial, k as u64)).collect();
            let v = subset_of(mask, 3);
            for &k in &v {
                theta[k - 1] = 1.0;
            }
            let cfg =
                ModeConfig::new(v, theta, search.decoder, search.variant).unwrap();
            let rate = engine::evaluate(&inst, &cfg).unwrap().symmetric_rate.bits();
            assert!(
                rate <= best + 1e-9,
                "random config beat the optimizer: {rate} > {best}"
            );
        }
    }

    #[test]
    fn search_is_reproducible() {
        let spec = EnsembleSpec { snr_db: 20.0, alpha_lo: 0.0, alpha_hi: 1.0, trials: 1, seed: 5 };
        let inst = draw_instance(&spec, 4, 2).unwrap();
        let search = coord_spec(Decoder::Jd);
        let a = optimize(&inst, &search).unwrap();
        let b = optimize(&inst, &search).unwrap();
        assert_eq!(a.best_config, b.best_config);
        assert_eq!(
            a.best_breakdown.symmetric_rate.bits().to_bits(),
            b.best_breakdown.symmetric_rate.bits().to_bits()
        );
        assert_eq!(a.configs_evaluated, b.configs_evaluated);
    }

    #[test]
    fn given_subset_restricts_the_search() {
        let inst = ChannelInstance::new(vec![100.0; 3], vec![50.0; 2]).unwrap();
        let search = SearchSpec {
            mode_search: ModeSearch::Given([1].into_iter().collect()),
            theta_search: ThetaSearch::default_coordinate(),
            decoder: Decoder::Sd,
            variant: FormulaVariant::Printed,
        };
        let opt = optimize(&inst, &search).unwrap();
        assert_eq!(opt.best_config.qmf_set().iter().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(opt.per_subset_rates.len(), 1);
    }

    #[test]
    fn fixed_empty_subset_matches_the_exhaustive_row() {
        let spec = EnsembleSpec { snr_db: 20.0, alpha_lo: 1.0, alpha_hi: 2.0, trials: 1, seed: 8 };
        let inst = draw_instance(&spec, 3, 4).unwrap();
        let coord = ThetaSearch::default_coordinate();
        let fixed = SearchSpec {
            mode_search: ModeSearch::Given(BTreeSet::new()),
            theta_search: coord,
            decoder: Decoder::Sd,
            variant: FormulaVariant::Printed,
        };
        let exhaustive = SearchSpec {
            mode_search: ModeSearch::Exhaustive,
            theta_search: coord,
            decoder: Decoder::Sd,
            variant: FormulaVariant::Printed,
        };
        let alone = optimize(&inst, &fixed).unwrap().per_subset_rates[0].1;
        let table = best_per_subset(&inst, &exhaustive).unwrap();
        let row = table.iter().find(|(v, _)| v.is_empty()).unwrap().1;
        assert_eq!(alone.to_bits(), row.to_bits(), "restart draws must not depend on enumeration");
    }

    #[test]
    fn all_zero_rates_tie_to_the_empty_set() {
        let inst = ChannelInstance::new(vec![0.0, 100.0], vec![100.0]).unwrap();
        let opt = optimize(&inst, &coord_spec(Decoder::Sd)).unwrap();
        assert_eq!(opt.best_breakdown.symmetric_rate.bits(), 0.0);
        assert!(opt.best_config.qmf_set().is_empty());
        assert_eq!(opt.best_config.theta(), &[0.0]);
    }
}
