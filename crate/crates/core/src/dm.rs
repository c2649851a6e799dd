//! Finite-alphabet rate region of the two-path relay chain.
//!
//! The Gaussian engine evaluates closed forms; this module evaluates the same
//! constraint structure for arbitrary discrete memoryless stage channels by
//! direct summation over finite alphabets. Each stage has one channel law
//! shared by the two paths, but input distributions, QMF sets, and quantizers
//! are per path, so the result is a full rate pair rather than only the
//! symmetric rate.
//!
//! A QMF relay's quantizer is a one-parameter family of conditional pmfs
//! p(yhat | y) indexed by a distortion knob `d` in `[0, 1]`, with the index
//! rate I(Yhat; Y | X_cross) decreasing in `d`. [`solve_symmetric`] bisects
//! each knob, walking segments from the destination toward the source, until
//! every index rate equals the rate its downstream segment can forward, the
//! same fixed point the Gaussian recursion solves in closed form.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::engine::{self, Decoder};
use crate::error::Error;
use crate::info::RateValue;
use crate::Result;

const LN_2: f64 = std::f64::consts::LN_2;

/// Largest dense probability table this module will build.
pub const MAX_JOINT_CELLS: usize = 1_000_000;

/// Normalization slack accepted when validating a pmf.
pub const PMF_TOL: f64 = 1e-12;

/// Residual accepted for the index-rate equality at a solved knob.
pub const EQUALITY_TOL: f64 = 1e-9;

/// Output symbol appended to the receiver alphabet by the erasure family.
pub const ERASURE_SYMBOL: &str = "erased";

const BISECT_ITERS: usize = 100;
const MONOTONE_GRID: usize = 33;

// ---------------------------------------------------------------------------
// Joint pmfs and mutual information
// ---------------------------------------------------------------------------

/// A dense joint pmf over named finite variables.
///
/// The table is row-major in the order of `labels`: the first label varies
/// slowest. Variables not mentioned in a query are summed out implicitly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmf {
    labels: Vec<String>,
    sizes: Vec<usize>,
    table: Vec<f64>,
}

impl JointPmf {
    /// Validates and builds a joint pmf.
    ///
    /// Requires unique labels, matching dimensions, nonnegative finite
    /// entries summing to 1 within [`PMF_TOL`], and a table of at most
    /// [`MAX_JOINT_CELLS`] cells.
    pub fn new(labels: Vec<String>, sizes: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        if labels.is_empty() || labels.len() != sizes.len() {
            return Err(Error::Domain(format!(
                "joint pmf needs matching nonempty labels and sizes, got {} labels and {} sizes",
                labels.len(),
                sizes.len()
            )));
        }
        let unique: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
        if unique.len() != labels.len() {
            return Err(Error::Domain("joint pmf labels must be unique".into()));
        }
        let mut cells: usize = 1;
        for (label, &n) in labels.iter().zip(&sizes) {
            if n == 0 {
                return Err(Error::Domain(format!("variable {label} has an empty alphabet")));
            }
            cells = cells
                .checked_mul(n)
                .filter(|&c| c <= MAX_JOINT_CELLS)
                .ok_or_else(|| {
                    Error::Domain(format!(
                        "joint table exceeds the {MAX_JOINT_CELLS}-cell cap; \
                         refusing direct summation"
                    ))
                })?;
        }
        if table.len() != cells {
            return Err(Error::Domain(format!(
                "joint table has {} entries but the alphabet product is {cells}",
                table.len()
            )));
        }
        let mut sum = 0.0;
        for &p in &table {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Domain(format!("joint table entry {p} is not a probability")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PMF_TOL {
            return Err(Error::Domain(format!("joint table sums to {sum}, expected 1")));
        }
        Ok(JointPmf { labels, sizes, table })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    fn axis(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Domain(format!("variable {label:?} not present in the joint")))
    }

    /// Row-major strides of the full table.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.sizes.len()];
        for a in (0..self.sizes.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.sizes[a + 1];
        }
        strides
    }

    /// Marginal over the named variables, in the order given.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointPmf> {
        let proj = Projection::new(self, keep)?;
        let mut out = vec![0.0; proj.cells];
        let strides = self.strides();
        for (flat, &p) in self.table.iter().enumerate() {
            out[proj.project(flat, &strides, &self.sizes)] += p;
        }
        JointPmf::new(
            keep.iter().map(|s| s.to_string()).collect(),
            proj.axes.iter().map(|&a| self.sizes[a]).collect(),
            out,
        )
    }
}

/// A flattening of selected axes of a joint table.
struct Projection {
    axes: Vec<usize>,
    cells: usize,
}

impl Projection {
    fn new(p: &JointPmf, labels: &[&str]) -> Result<Self> {
        let mut axes = Vec::with_capacity(labels.len());
        for label in labels {
            let a = p.axis(label)?;
            if axes.contains(&a) {
                return Err(Error::Domain(format!("variable {label:?} listed twice")));
            }
            axes.push(a);
        }
        let cells = axes.iter().map(|&a| p.sizes[a]).product::<usize>().max(1);
        Ok(Projection { axes, cells })
    }

    /// Sub-index of a full flat index under this projection.
    #[inline]
    fn project(&self, flat: usize, strides: &[usize], sizes: &[usize]) -> usize {
        let mut idx = 0;
        for &a in &self.axes {
            idx = idx * sizes[a] + (flat / strides[a]) % sizes[a];
        }
        idx
    }
}

/// Conditional mutual information I(A; B | C) in bits by direct summation.
///
/// The three label groups must be disjoint and present in `p`; `given` may be
/// empty. Variables of `p` outside the groups are summed out. The result is
/// clamped at 0 to absorb rounding in the log terms.
pub fn mutual_information(
    p: &JointPmf,
    group_a: &[&str],
    group_b: &[&str],
    given: &[&str],
) -> Result<RateValue> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Domain("mutual information needs nonempty variable groups".into()));
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for label in group_a.iter().chain(group_b).chain(given) {
        if !seen.insert(label) {
            return Err(Error::Domain(format!(
                "variable {label:?} appears in more than one group"
            )));
        }
    }
    let ac: Vec<&str> = group_a.iter().chain(given).copied().collect();
    let bc: Vec<&str> = group_b.iter().chain(given).copied().collect();
    let abc: Vec<&str> = group_a.iter().chain(group_b).chain(given).copied().collect();
    let p_ac = Projection::new(p, &ac)?;
    let p_bc = Projection::new(p, &bc)?;
    let p_c = Projection::new(p, given)?;
    let p_abc = Projection::new(p, &abc)?;

    let strides = p.strides();
    let mut m_ac = vec![0.0; p_ac.cells];
    let mut m_bc = vec![0.0; p_bc.cells];
    let mut m_c = vec![0.0; p_c.cells];
    let mut m_abc = vec![0.0; p_abc.cells];
    let mut i_ac = vec![0usize; p.table.len()];
    let mut i_bc = vec![0usize; p.table.len()];
    let mut i_c = vec![0usize; p.table.len()];
    let mut i_abc = vec![0usize; p.table.len()];
    for (flat, &prob) in p.table.iter().enumerate() {
        i_ac[flat] = p_ac.project(flat, &strides, &p.sizes);
        i_bc[flat] = p_bc.project(flat, &strides, &p.sizes);
        i_c[flat] = p_c.project(flat, &strides, &p.sizes);
        i_abc[flat] = p_abc.project(flat, &strides, &p.sizes);
        m_ac[i_ac[flat]] += prob;
        m_bc[i_bc[flat]] += prob;
        m_c[i_c[flat]] += prob;
        m_abc[i_abc[flat]] += prob;
    }

    // Each distinct (a, b, c) cell must contribute exactly once, so iterate
    // the full table but weight by the joint marginal only at the first flat
    // index that lands on a given (a, b, c) cell.
    let mut counted = vec![false; p_abc.cells];
    let mut nats = 0.0;
    for flat in 0..p.table.len() {
        let cell = i_abc[flat];
        if counted[cell] {
            continue;
        }
        counted[cell] = true;
        let joint = m_abc[cell];
        if joint <= 0.0 {
            continue;
        }
        let ratio = joint * m_c[i_c[flat]] / (m_ac[i_ac[flat]] * m_bc[i_bc[flat]]);
        nats += joint * ratio.ln();
    }
    RateValue::new((nats / LN_2).max(0.0))
}

// ---------------------------------------------------------------------------
// Quantizer families
// ---------------------------------------------------------------------------

/// A one-parameter family of quantizers p(yhat | y), indexed by `d` in
/// `[0, 1]` with `d = 0` the least distorted member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum QuantizerFamily {
    /// Keeps the observation with probability `1 - d`, otherwise outputs the
    /// reserved [`ERASURE_SYMBOL`] appended to the receiver alphabet.
    Erasure,
    /// Keeps the observation with probability `1 - d`, otherwise resamples it
    /// uniformly over the receiver alphabet.
    Flip,
    /// User-supplied row-stochastic tables at increasing knob knots spanning
    /// `[0, 1]`, linearly interpolated in between.
    Tables {
        y_hat_alphabet: Vec<String>,
        knots: Vec<f64>,
        /// One `|Y| x |Yhat|` table per knot, rows indexed by y.
        tables: Vec<Vec<Vec<f64>>>,
    },
}

impl QuantizerFamily {
    /// The quantizer output alphabet for a given receiver alphabet.
    pub fn output_alphabet(&self, y_alphabet: &[String]) -> Vec<String> {
        match self {
            QuantizerFamily::Erasure => {
                let mut out = y_alphabet.to_vec();
                out.push(ERASURE_SYMBOL.to_string());
                out
            }
            QuantizerFamily::Flip => y_alphabet.to_vec(),
            QuantizerFamily::Tables { y_hat_alphabet, .. } => y_hat_alphabet.clone(),
        }
    }

    /// The conditional pmf rows p(yhat | y) at knob `d`.
    pub fn conditional(&self, num_y: usize, d: f64) -> Result<Vec<Vec<f64>>> {
        if !d.is_finite() || !(0.0..=1.0).contains(&d) {
            return Err(Error::Domain(format!("distortion knob must lie in [0, 1], got {d}")));
        }
        match self {
            QuantizerFamily::Erasure => Ok((0..num_y)
                .map(|y| {
                    let mut row = vec![0.0; num_y + 1];
                    row[y] = 1.0 - d;
                    row[num_y] = d;
                    row
                })
                .collect()),
            QuantizerFamily::Flip => Ok((0..num_y)
                .map(|y| {
                    let mut row = vec![d / num_y as f64; num_y];
                    row[y] += 1.0 - d;
                    row
                })
                .collect()),
            QuantizerFamily::Tables { knots, tables, .. } => {
                // validate() guarantees knots include 0 and 1 and increase.
                let hi = knots.partition_point(|&t| t < d).min(knots.len() - 1);
                if hi == 0 || knots[hi] == d {
                    return Ok(tables[hi].clone());
                }
                let lo = hi - 1;
                let w = (d - knots[lo]) / (knots[hi] - knots[lo]);
                Ok(tables[lo]
                    .iter()
                    .zip(&tables[hi])
                    .map(|(rl, rh)| {
                        rl.iter().zip(rh).map(|(&a, &b)| (1.0 - w) * a + w * b).collect()
                    })
                    .collect())
            }
        }
    }

    fn validate(&self, y_alphabet: &[String], node: &str, violations: &mut Vec<String>) {
        match self {
            QuantizerFamily::Erasure => {
                if y_alphabet.iter().any(|s| s == ERASURE_SYMBOL) {
                    violations.push(format!(
                        "{node}: receiver alphabet already contains the reserved \
                         symbol {ERASURE_SYMBOL:?}"
                    ));
                }
            }
            QuantizerFamily::Flip => {}
            QuantizerFamily::Tables { y_hat_alphabet, knots, tables } => {
                check_alphabet(y_hat_alphabet, &format!("{node} quantizer output"), violations);
                if knots.len() < 2
                    || knots.first() != Some(&0.0)
                    || knots.last() != Some(&1.0)
                    || knots.windows(2).any(|w| !(w[0] < w[1]))
                {
                    violations.push(format!(
                        "{node}: quantizer knots must increase strictly from 0 to 1, got {knots:?}"
                    ));
                }
                if tables.len() != knots.len() {
                    violations.push(format!(
                        "{node}: {} quantizer tables for {} knots",
                        tables.len(),
                        knots.len()
                    ));
                    return;
                }
                for (j, table) in tables.iter().enumerate() {
                    if table.len() != y_alphabet.len() {
                        violations.push(format!(
                            "{node}: quantizer table {j} has {} rows for {} receiver symbols",
                            table.len(),
                            y_alphabet.len()
                        ));
                        continue;
                    }
                    for (y, row) in table.iter().enumerate() {
                        if row.len() != y_hat_alphabet.len() {
                            violations.push(format!(
                                "{node}: quantizer table {j} row {y} has {} entries for {} \
                                 output symbols",
                                row.len(),
                                y_hat_alphabet.len()
                            ));
                        } else {
                            check_pmf_row(row, &format!("{node} quantizer table {j} row {y}"), violations);
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Network spec
// ---------------------------------------------------------------------------

/// One relay's input law: a common layer and the transmit symbol drawn
/// conditionally on it.
///
/// Whether the common layer is actually used depends on the mode of the
/// interfered same-stage relay; when it is not, only the marginal over `x`
/// enters any computation, so a degenerate single-symbol `u` is the natural
/// way to write an unsplit input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayInput {
    /// p(u) over the stage's auxiliary alphabet.
    pub u: Vec<f64>,
    /// p(x | u), rows indexed by u, columns by the stage's transmit alphabet.
    pub x_given_u: Vec<Vec<f64>>,
}

/// Input laws along one path: the source plus one entry per relay stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathInputs {
    /// p(x) of the source over the stage-0 transmit alphabet.
    pub source: Vec<f64>,
    /// Relay stages `1..=K` in order.
    pub relays: Vec<RelayInput>,
}

/// A two-path discrete memoryless relay network.
///
/// Stage `k` in `1..=K` has one channel law p(y | x_prev, x_cross) shared by
/// both paths: a path's receiver at stage `k` hears its own upstream
/// transmitter (stage `k - 1`) plus the other path's same-stage transmitter.
/// The destination hears only the stage-`K` transmitter of each path.
///
/// JSON layout: alphabets are string lists; conditional pmfs are nested
/// arrays in row-major order with the conditioned variables outermost, e.g.
/// `stage_channels[k - 1][x_prev][x_cross][y]` and `dest_channel[x][y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmNetworkSpec {
    /// Transmit alphabets by stage, `x_alphabets[k]` for `k` in `0..=K`,
    /// shared by the two paths.
    pub x_alphabets: Vec<Vec<String>>,
    /// Auxiliary (common-layer) alphabets for relay stages `1..=K`.
    pub u_alphabets: Vec<Vec<String>>,
    /// Receiver alphabets for stages `1..=K`, destination last.
    pub y_alphabets: Vec<Vec<String>>,
    /// `stage_channels[k - 1][x_prev][x_cross][y]` for stages `1..=K`.
    pub stage_channels: Vec<Vec<Vec<Vec<f64>>>>,
    /// `dest_channel[x][y]` for the final hop.
    pub dest_channel: Vec<Vec<f64>>,
    /// Input laws for paths 1 and 2.
    pub paths: [PathInputs; 2],
    /// Quantizer family per (path, relay stage); `None` for stages that are
    /// never quantized on that path.
    pub quantizers: [Vec<Option<QuantizerFamily>>; 2],
}

impl DmNetworkSpec {
    /// Number of relay stages `K`.
    pub fn num_stages(&self) -> usize {
        self.x_alphabets.len().saturating_sub(1)
    }

    /// Parses a spec from JSON and rejects it unless it validates cleanly.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DmNetworkSpec = serde_json::from_str(text)?;
        spec.validated()?;
        Ok(spec)
    }

    /// Errs with the full violation list unless the spec is clean.
    pub fn validated(&self) -> Result<()> {
        let violations = validate_dm_spec(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::DmSpec(violations.join("; ")))
        }
    }
}

fn check_pmf_row(row: &[f64], what: &str, violations: &mut Vec<String>) {
    if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
        violations.push(format!("{what} has a negative or non-finite entry"));
        return;
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PMF_TOL {
        violations.push(format!("{what} sums to {sum}"));
    }
}

fn check_alphabet(alphabet: &[String], what: &str, violations: &mut Vec<String>) {
    if alphabet.is_empty() {
        violations.push(format!("{what} alphabet is empty"));
        return;
    }
    let unique: BTreeSet<&str> = alphabet.iter().map(String::as_str).collect();
    if unique.len() != alphabet.len() {
        violations.push(format!("{what} alphabet repeats a symbol"));
    }
}

/// Checks every pmf and shape invariant of a network spec.
///
/// Returns an empty list iff the spec is usable; each violation names the
/// offending pmf and, for normalization failures, its row sum.
pub fn validate_dm_spec(spec: &DmNetworkSpec) -> Vec<String> {
    let mut v = Vec::new();
    if spec.x_alphabets.len() < 2 {
        v.push(format!(
            "need transmit alphabets for the source and at least one relay stage, got {}",
            spec.x_alphabets.len()
        ));
        return v;
    }
    let k_stages = spec.num_stages();
    for (k, a) in spec.x_alphabets.iter().enumerate() {
        check_alphabet(a, &format!("stage {k} transmit"), &mut v);
    }
    if spec.u_alphabets.len() != k_stages {
        v.push(format!(
            "expected {k_stages} auxiliary alphabets, got {}",
            spec.u_alphabets.len()
        ));
    }
    for (j, a) in spec.u_alphabets.iter().enumerate() {
        check_alphabet(a, &format!("stage {} auxiliary", j + 1), &mut v);
    }
    if spec.y_alphabets.len() != k_stages + 1 {
        v.push(format!(
            "expected {} receiver alphabets (stages 1..={k_stages} plus destination), got {}",
            k_stages + 1,
            spec.y_alphabets.len()
        ));
    }
    for (j, a) in spec.y_alphabets.iter().enumerate() {
        check_alphabet(a, &format!("stage {} receiver", j + 1), &mut v);
    }
    if spec.u_alphabets.len() != k_stages || spec.y_alphabets.len() != k_stages + 1 {
        return v;
    }

    if spec.stage_channels.len() != k_stages {
        v.push(format!(
            "expected {k_stages} stage channels, got {}",
            spec.stage_channels.len()
        ));
        return v;
    }
    for (j, chan) in spec.stage_channels.iter().enumerate() {
        let k = j + 1;
        let (nxp, nxc, ny) = (
            spec.x_alphabets[k - 1].len(),
            spec.x_alphabets[k].len(),
            spec.y_alphabets[k - 1].len(),
        );
        if chan.len() != nxp {
            v.push(format!("stage {k} channel has {} x_prev rows, expected {nxp}", chan.len()));
            continue;
        }
        for (xp, by_cross) in chan.iter().enumerate() {
            if by_cross.len() != nxc {
                v.push(format!(
                    "stage {k} channel row x_prev={:?} has {} x_cross rows, expected {nxc}",
                    spec.x_alphabets[k - 1][xp],
                    by_cross.len()
                ));
                continue;
            }
            for (xc, row) in by_cross.iter().enumerate() {
                if row.len() != ny {
                    v.push(format!(
                        "stage {k} channel row (x_prev={:?}, x_cross={:?}) has {} entries, \
                         expected {ny}",
                        spec.x_alphabets[k - 1][xp],
                        spec.x_alphabets[k][xc],
                        row.len()
                    ));
                } else {
                    check_pmf_row(
                        row,
                        &format!(
                            "stage {k} channel row (x_prev={:?}, x_cross={:?})",
                            spec.x_alphabets[k - 1][xp], spec.x_alphabets[k][xc]
                        ),
                        &mut v,
                    );
                }
            }
        }
    }
    let (nxk, nyd) = (spec.x_alphabets[k_stages].len(), spec.y_alphabets[k_stages].len());
    if spec.dest_channel.len() != nxk {
        v.push(format!(
            "destination channel has {} rows, expected {nxk}",
            spec.dest_channel.len()
        ));
    } else {
        for (x, row) in spec.dest_channel.iter().enumerate() {
            if row.len() != nyd {
                v.push(format!(
                    "destination channel row x={:?} has {} entries, expected {nyd}",
                    spec.x_alphabets[k_stages][x],
                    row.len()
                ));
            } else {
                check_pmf_row(
                    row,
                    &format!("destination channel row x={:?}", spec.x_alphabets[k_stages][x]),
                    &mut v,
                );
            }
        }
    }

    for (i0, path) in spec.paths.iter().enumerate() {
        let p = i0 + 1;
        if path.source.len() != spec.x_alphabets[0].len() {
            v.push(format!(
                "path {p} source pmf has {} entries for {} symbols",
                path.source.len(),
                spec.x_alphabets[0].len()
            ));
        } else {
            check_pmf_row(&path.source, &format!("path {p} source pmf"), &mut v);
        }
        if path.relays.len() != k_stages {
            v.push(format!(
                "path {p} has {} relay inputs, expected {k_stages}",
                path.relays.len()
            ));
            continue;
        }
        for (j, relay) in path.relays.iter().enumerate() {
            let k = j + 1;
            let (nu, nx) = (spec.u_alphabets[j].len(), spec.x_alphabets[k].len());
            if relay.u.len() != nu {
                v.push(format!(
                    "path {p} stage {k} common-layer pmf has {} entries for {nu} symbols",
                    relay.u.len()
                ));
            } else {
                check_pmf_row(&relay.u, &format!("path {p} stage {k} common-layer pmf"), &mut v);
            }
            if relay.x_given_u.len() != nu {
                v.push(format!(
                    "path {p} stage {k} transmit conditional has {} rows for {nu} symbols",
                    relay.x_given_u.len()
                ));
                continue;
            }
            for (u, row) in relay.x_given_u.iter().enumerate() {
                if row.len() != nx {
                    v.push(format!(
                        "path {p} stage {k} transmit conditional row u={:?} has {} entries, \
                         expected {nx}",
                        spec.u_alphabets[j][u],
                        row.len()
                    ));
                } else {
                    check_pmf_row(
                        row,
                        &format!("path {p} stage {k} transmit conditional row u={:?}",
                            spec.u_alphabets[j][u]),
                        &mut v,
                    );
                }
            }
        }
    }

    for (i0, quants) in spec.quantizers.iter().enumerate() {
        let p = i0 + 1;
        if quants.len() != k_stages {
            v.push(format!(
                "path {p} has {} quantizer slots, expected {k_stages}",
                quants.len()
            ));
            continue;
        }
        for (j, family) in quants.iter().enumerate() {
            if let Some(family) = family {
                family.validate(
                    &spec.y_alphabets[j],
                    &format!("path {p} stage {}", j + 1),
                    &mut v,
                );
            }
        }
    }

    if v.is_empty() {
        // Worst-case local joint: upstream (u, x) times cross (u, x) times the
        // receiver and quantizer-output alphabets of one stage.
        for k in 1..=k_stages {
            let prev = if k == 1 {
                spec.x_alphabets[0].len()
            } else {
                spec.u_alphabets[k - 2].len() * spec.x_alphabets[k - 1].len()
            };
            let cross = spec.u_alphabets[k - 1].len() * spec.x_alphabets[k].len();
            let ny = spec.y_alphabets[k - 1].len();
            let nq = spec
                .quantizers
                .iter()
                .filter_map(|q| q[k - 1].as_ref())
                .map(|f| f.output_alphabet(&spec.y_alphabets[k - 1]).len())
                .max()
                .unwrap_or(1);
            let cells = prev
                .checked_mul(cross)
                .and_then(|c| c.checked_mul(ny))
                .and_then(|c| c.checked_mul(nq));
            if !matches!(cells, Some(c) if c <= MAX_JOINT_CELLS) {
                v.push(format!(
                    "stage {k} local joint exceeds the {MAX_JOINT_CELLS}-cell cap; \
                     direct summation refused"
                ));
            }
        }
    }
    v
}

// ---------------------------------------------------------------------------
// Modes and constraints
// ---------------------------------------------------------------------------

/// Per-path QMF stage sets. The two paths may differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmModes {
    pub qmf_sets: [BTreeSet<usize>; 2],
}

impl DmModes {
    pub fn new(path1: BTreeSet<usize>, path2: BTreeSet<usize>) -> Self {
        DmModes { qmf_sets: [path1, path2] }
    }

    /// Both paths using the same QMF set.
    pub fn symmetric(qmf: BTreeSet<usize>) -> Self {
        DmModes { qmf_sets: [qmf.clone(), qmf] }
    }

    fn validate(&self, num_stages: usize) -> Result<()> {
        for (i0, set) in self.qmf_sets.iter().enumerate() {
            for &k in set {
                if k == 0 || k > num_stages {
                    return Err(Error::Domain(format!(
                        "path {} QMF stage {k} outside the range 1..={num_stages}",
                        i0 + 1
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn is_qmf(&self, i0: usize, k: usize) -> bool {
        self.qmf_sets[i0].contains(&k)
    }
}

/// The role a mutual-information term plays in the rate region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmConstraintKind {
    /// Rate of hop `k -> k + 1` with the interfering common layer known.
    Direct,
    /// Rate of hop `k -> k + 1` with the transmitter's own common layer also
    /// known; the private-part budget used by every cross bound at stage `k`.
    Split,
    /// Rate at which the interfered same-stage relay can decode the stage-`k`
    /// common layer on its own.
    CrossCommon,
    /// Rate at which the interfered relay can decode the stage-`k` common
    /// layer jointly with its own incoming signal.
    CrossJoint,
    /// Index rate produced by the stage's quantizer at the given knob.
    WynerZiv,
}

/// One evaluated mutual-information term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmConstraint {
    /// Path whose rate the term constrains (1 or 2).
    pub path: usize,
    /// Stage the term is anchored at: the transmitting stage for `Direct`
    /// and `Split`, the interfering stage for the cross kinds, the quantizing
    /// stage for `WynerZiv`.
    pub stage: usize,
    pub kind: DmConstraintKind,
    /// Value in bits.
    pub value: f64,
}

/// Computes every mutual-information term of the rate region at fixed
/// distortion knobs.
///
/// `distortions` maps `(path, stage)` to the knob of each quantized stage and
/// must cover exactly the stages in the path's QMF set. Terms are emitted
/// kind by kind, paths and stages ascending within a kind:
/// - `Direct` for every stage `k` in `0..=K` of each path;
/// - `Split` and `CrossCommon` for every stage whose interfered relay
///   decodes (stage not in the other path's QMF set);
/// - `CrossJoint` for every stage where both relays decode;
/// - `WynerZiv` for every quantized stage.
pub fn assemble_constraints(
    spec: &DmNetworkSpec,
    modes: &DmModes,
    distortions: &BTreeMap<(usize, usize), f64>,
) -> Result<Vec<DmConstraint>> {
    spec.validated()?;
    let k_stages = spec.num_stages();
    modes.validate(k_stages)?;
    for i0 in 0..2 {
        for &k in &modes.qmf_sets[i0] {
            if !distortions.contains_key(&(i0 + 1, k)) {
                return Err(Error::Domain(format!(
                    "no distortion knob for quantized stage {k} of path {}",
                    i0 + 1
                )));
            }
        }
    }
    let ctx = Ctx { spec, modes, k_stages };
    ctx.require_quantizers()?;
    let mut out = Vec::new();
    for i0 in 0..2 {
        for k in 0..=k_stages {
            out.push(DmConstraint {
                path: i0 + 1,
                stage: k,
                kind: DmConstraintKind::Direct,
                value: ctx.direct(i0, k, distortions)?,
            });
        }
    }
    for kind in [DmConstraintKind::Split, DmConstraintKind::CrossCommon] {
        for i0 in 0..2 {
            for k in 1..=k_stages {
                if modes.is_qmf(1 - i0, k) {
                    continue;
                }
                let value = match kind {
                    DmConstraintKind::Split => ctx.split(i0, k, distortions)?,
                    _ => ctx.cross_common(i0, k)?,
                };
                out.push(DmConstraint { path: i0 + 1, stage: k, kind, value });
            }
        }
    }
    for i0 in 0..2 {
        for k in 1..=k_stages {
            if modes.is_qmf(0, k) || modes.is_qmf(1, k) {
                continue;
            }
            out.push(DmConstraint {
                path: i0 + 1,
                stage: k,
                kind: DmConstraintKind::CrossJoint,
                value: ctx.cross_joint(i0, k)?,
            });
        }
    }
    for i0 in 0..2 {
        for &k in &modes.qmf_sets[i0] {
            out.push(DmConstraint {
                path: i0 + 1,
                stage: k,
                kind: DmConstraintKind::WynerZiv,
                value: ctx.wyner_ziv(i0, k, distortions[&(i0 + 1, k)])?,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Local joint assembly
// ---------------------------------------------------------------------------

/// The joint law of one node's transmit variables.
struct NodeLaw {
    labels: Vec<String>,
    sizes: Vec<usize>,
    table: Vec<f64>,
    /// Axis of the transmit symbol within `labels`.
    x_axis: usize,
}

struct Ctx<'a> {
    spec: &'a DmNetworkSpec,
    modes: &'a DmModes,
    k_stages: usize,
}

fn label_x(i0: usize, k: usize) -> String {
    format!("x{}.{k}", i0 + 1)
}
fn label_u(i0: usize, k: usize) -> String {
    format!("u{}.{k}", i0 + 1)
}
fn label_y(i0: usize, k: usize) -> String {
    format!("y{}.{k}", i0 + 1)
}
fn label_q(i0: usize, k: usize) -> String {
    format!("q{}.{k}", i0 + 1)
}

impl Ctx<'_> {
    fn require_quantizers(&self) -> Result<()> {
        for i0 in 0..2 {
            for &k in &self.modes.qmf_sets[i0] {
                if self.spec.quantizers[i0][k - 1].is_none() {
                    return Err(Error::DmSpec(format!(
                        "path {} stage {k} is quantized but declares no quantizer family",
                        i0 + 1
                    )));
                }
            }
        }
        Ok(())
    }

    fn node_law(&self, i0: usize, k: usize) -> NodeLaw {
        if k == 0 {
            let source = &self.spec.paths[i0].source;
            return NodeLaw {
                labels: vec![label_x(i0, 0)],
                sizes: vec![source.len()],
                table: source.clone(),
                x_axis: 0,
            };
        }
        let relay = &self.spec.paths[i0].relays[k - 1];
        let (nu, nx) = (relay.u.len(), relay.x_given_u[0].len());
        let mut table = Vec::with_capacity(nu * nx);
        for u in 0..nu {
            for x in 0..nx {
                table.push(relay.u[u] * relay.x_given_u[u][x]);
            }
        }
        NodeLaw {
            labels: vec![label_u(i0, k), label_x(i0, k)],
            sizes: vec![nu, nx],
            table,
            x_axis: 1,
        }
    }

    fn quant_cond(
        &self,
        i0: usize,
        k: usize,
        distortions: &BTreeMap<(usize, usize), f64>,
    ) -> Result<(usize, Vec<Vec<f64>>)> {
        let family = self.spec.quantizers[i0][k - 1].as_ref().ok_or_else(|| {
            Error::DmSpec(format!(
                "path {} stage {k} is quantized but declares no quantizer family",
                i0 + 1
            ))
        })?;
        let d = *distortions.get(&(i0 + 1, k)).ok_or_else(|| {
            Error::Domain(format!(
                "no distortion knob for quantized stage {k} of path {}",
                i0 + 1
            ))
        })?;
        let ny = self.spec.y_alphabets[k - 1].len();
        let cond = family.conditional(ny, d)?;
        Ok((family.output_alphabet(&self.spec.y_alphabets[k - 1]).len(), cond))
    }

    /// Joint law of the stage-`krecv` observation on path `i0` together with
    /// the transmit variables feeding it, optionally extended by the path's
    /// quantizer output. Products of normalized pmfs are renormalized once to
    /// absorb accumulated rounding.
    fn hop_joint(
        &self,
        i0: usize,
        krecv: usize,
        quant: Option<&BTreeMap<(usize, usize), f64>>,
    ) -> Result<JointPmf> {
        let prev = self.node_law(i0, krecv - 1);
        let cross = self.node_law(1 - i0, krecv);
        let chan = &self.spec.stage_channels[krecv - 1];
        let ny = self.spec.y_alphabets[krecv - 1].len();
        let quant = match quant {
            Some(distortions) => Some(self.quant_cond(i0, krecv, distortions)?),
            None => None,
        };
        let nq = quant.as_ref().map_or(1, |(nq, _)| *nq);

        let mut labels = prev.labels.clone();
        labels.extend(cross.labels.iter().cloned());
        labels.push(label_y(i0, krecv));
        let mut sizes = prev.sizes.clone();
        sizes.extend(cross.sizes.iter().copied());
        sizes.push(ny);
        if let Some((nq, _)) = &quant {
            labels.push(label_q(i0, krecv));
            sizes.push(*nq);
        }

        let prev_x_stride: usize = prev.sizes[prev.x_axis + 1..].iter().product();
        let cross_x_stride: usize = cross.sizes[cross.x_axis + 1..].iter().product();
        let mut table = Vec::with_capacity(prev.table.len() * cross.table.len() * ny * nq);
        let mut sum = 0.0;
        for (pi, &pp) in prev.table.iter().enumerate() {
            let xp = (pi / prev_x_stride) % prev.sizes[prev.x_axis];
            for (ci, &pc) in cross.table.iter().enumerate() {
                let xc = (ci / cross_x_stride) % cross.sizes[cross.x_axis];
                let base = pp * pc;
                for (y, &py) in chan[xp][xc].iter().enumerate() {
                    let p = base * py;
                    match &quant {
                        Some((_, cond)) => {
                            for &pq in &cond[y] {
                                table.push(p * pq);
                                sum += p * pq;
                            }
                        }
                        None => {
                            table.push(p);
                            sum += p;
                        }
                    }
                }
            }
        }
        for p in &mut table {
            *p /= sum;
        }
        JointPmf::new(labels, sizes, table)
    }

    /// Joint law of the destination observation of path `i0` with the
    /// stage-`K` transmit variables.
    fn dest_joint(&self, i0: usize) -> Result<JointPmf> {
        let prev = self.node_law(i0, self.k_stages);
        let nyd = self.spec.y_alphabets[self.k_stages].len();
        let prev_x_stride: usize = prev.sizes[prev.x_axis + 1..].iter().product();
        let mut labels = prev.labels.clone();
        labels.push(label_y(i0, self.k_stages + 1));
        let mut sizes = prev.sizes.clone();
        sizes.push(nyd);
        let mut table = Vec::with_capacity(prev.table.len() * nyd);
        let mut sum = 0.0;
        for (pi, &pp) in prev.table.iter().enumerate() {
            let x = (pi / prev_x_stride) % prev.sizes[prev.x_axis];
            for &py in &self.spec.dest_channel[x] {
                table.push(pp * py);
                sum += pp * py;
            }
        }
        for p in &mut table {
            *p /= sum;
        }
        JointPmf::new(labels, sizes, table)
    }

    /// Hop rate of stage `k -> k + 1` on path `i0` with the interfering
    /// common layer known: against the quantized observation when the
    /// receiving relay quantizes, against the raw observation given the
    /// interferer's common layer otherwise.
    fn direct(
        &self,
        i0: usize,
        k: usize,
        distortions: &BTreeMap<(usize, usize), f64>,
    ) -> Result<f64> {
        let krecv = k + 1;
        let tx = label_x(i0, k);
        if krecv > self.k_stages {
            let joint = self.dest_joint(i0)?;
            let rx = label_y(i0, krecv);
            return Ok(mutual_information(&joint, &[&tx], &[&rx], &[])?.bits());
        }
        if self.modes.is_qmf(i0, krecv) {
            let joint = self.hop_joint(i0, krecv, Some(distortions))?;
            let rx = label_q(i0, krecv);
            let side = label_x(1 - i0, krecv);
            Ok(mutual_information(&joint, &[&tx], &[&rx], &[&side])?.bits())
        } else {
            let joint = self.hop_joint(i0, krecv, None)?;
            let rx = label_y(i0, krecv);
            let common = label_u(1 - i0, krecv);
            Ok(mutual_information(&joint, &[&tx], &[&rx], &[&common])?.bits())
        }
    }

    /// Same hop rate with the transmitter's own common layer also known.
    fn split(
        &self,
        i0: usize,
        k: usize,
        distortions: &BTreeMap<(usize, usize), f64>,
    ) -> Result<f64> {
        let krecv = k + 1;
        let tx = label_x(i0, k);
        let own = label_u(i0, k);
        if krecv > self.k_stages {
            let joint = self.dest_joint(i0)?;
            let rx = label_y(i0, krecv);
            return Ok(mutual_information(&joint, &[&tx], &[&rx], &[&own])?.bits());
        }
        if self.modes.is_qmf(i0, krecv) {
            let joint = self.hop_joint(i0, krecv, Some(distortions))?;
            let rx = label_q(i0, krecv);
            let side = label_x(1 - i0, krecv);
            Ok(mutual_information(&joint, &[&tx], &[&rx], &[&side, &own])?.bits())
        } else {
            let joint = self.hop_joint(i0, krecv, None)?;
            let rx = label_y(i0, krecv);
            let common = label_u(1 - i0, krecv);
            Ok(mutual_information(&joint, &[&tx], &[&rx], &[&common, &own])?.bits())
        }
    }

    /// Rate at which the interfered relay at stage `k` decodes path `i0`'s
    /// common layer from its own observation alone.
    fn cross_common(&self, i0: usize, k: usize) -> Result<f64> {
        let joint = self.hop_joint(1 - i0, k, None)?;
        let common = label_u(i0, k);
        let rx = label_y(1 - i0, k);
        Ok(mutual_information(&joint, &[&common], &[&rx], &[])?.bits())
    }

    /// Rate of the common layer decoded jointly with the interfered relay's
    /// own incoming signal.
    fn cross_joint(&self, i0: usize, k: usize) -> Result<f64> {
        let joint = self.hop_joint(1 - i0, k, None)?;
        let common = label_u(i0, k);
        let upstream = label_x(1 - i0, k - 1);
        let rx = label_y(1 - i0, k);
        Ok(mutual_information(&joint, &[&common, &upstream], &[&rx], &[])?.bits())
    }

    /// Index rate I(Yhat; Y | X_cross) of the stage-`k` quantizer at knob `d`.
    fn wyner_ziv(&self, i0: usize, k: usize, d: f64) -> Result<f64> {
        let mut knob = BTreeMap::new();
        knob.insert((i0 + 1, k), d);
        let joint = self.hop_joint(i0, k, Some(&knob))?;
        let quantized = label_q(i0, k);
        let raw = label_y(i0, k);
        let side = label_x(1 - i0, k);
        Ok(mutual_information(&joint, &[&quantized], &[&raw], &[&side])?.bits())
    }

    /// The tightest constraint on the rate of the segment `lo..=hi` of path
    /// `i0`, under the given decoder and the distortion knobs fixed so far.
    fn segment_min(
        &self,
        i0: usize,
        lo: usize,
        hi: usize,
        decoder: Decoder,
        distortions: &BTreeMap<(usize, usize), f64>,
    ) -> Result<f64> {
        let mut best = f64::INFINITY;
        for k in lo..=hi {
            best = best.min(self.direct(i0, k, distortions)?);
            if k == 0 {
                continue;
            }
            let own_qmf = self.modes.is_qmf(i0, k);
            let other_qmf = self.modes.is_qmf(1 - i0, k);
            match decoder {
                Decoder::Sd => {
                    if !other_qmf {
                        let bound =
                            self.cross_common(i0, k)? + self.split(i0, k, distortions)?;
                        best = best.min(bound);
                    }
                }
                Decoder::Jd => {
                    if own_qmf && !other_qmf {
                        let bound =
                            self.cross_common(i0, k)? + self.split(i0, k, distortions)?;
                        best = best.min(bound);
                    } else if !own_qmf && !other_qmf {
                        let arm_1 = self.cross_joint(0, k)? + self.split(0, k, distortions)?;
                        let arm_2 = self.cross_joint(1, k)? + self.split(1, k, distortions)?;
                        best = best.min(0.5 * arm_1.min(arm_2));
                    }
                }
            }
        }
        Ok(best)
    }
}

// ---------------------------------------------------------------------------
// Solving the index-rate equalities
// ---------------------------------------------------------------------------

/// The solved state of one quantized stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmQuantizerSolve {
    /// Path (1 or 2) and stage of the quantizer.
    pub path: usize,
    pub stage: usize,
    /// Distortion knob the solve settled on.
    pub knob: f64,
    /// Index rate produced at that knob, in bits.
    pub index_rate: f64,
    /// Rate the downstream segment can forward; the equality target.
    pub target: f64,
    /// `|index_rate - target|`.
    pub residual: f64,
    /// Whether the equality was met within tolerance.
    pub feasible: bool,
    /// Index rates at the family's extremes, `(at d = 1, at d = 0)`.
    pub index_rate_range: (f64, f64),
}

/// The evaluated rate point of a network, modes, and decoder choice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmRateResult {
    /// `min(rate_pair)`, the symmetric rate both paths can sustain.
    pub symmetric_rate: RateValue,
    /// End-to-end rates of paths 1 and 2.
    pub rate_pair: (f64, f64),
    /// Message rate forwarded by each stage, `per_relay_rates[path - 1][k]`
    /// for `k` in `0..=K`; entry 0 is the path's end-to-end rate. Every stage
    /// of a segment carries its segment's rate.
    pub per_relay_rates: [Vec<f64>; 2],
    /// One entry per quantized stage, in the order they were solved
    /// (descending stage).
    pub quantizers: Vec<DmQuantizerSolve>,
    /// Every mutual-information term at the solved knobs.
    pub constraints: Vec<DmConstraint>,
    /// True iff some quantizer could not meet its equality, because the
    /// family's range misses the target on one side or because an upstream
    /// segment was cut by such a failure.
    pub infeasible_quantization: bool,
}

/// Finds the distortion knob of every quantized stage by bisection so that
/// each index rate equals the rate its downstream segment can forward, then
/// evaluates the end-to-end rate of both paths.
///
/// Stages are solved in descending stage order across both paths, so every
/// constraint a solve needs is already fixed. A stage whose family cannot
/// produce an index rate as *large* as its target is left at its best knob
/// `d = 0` and flagged; the configuration stays achievable, only the equality
/// is out of reach. A stage whose family cannot get *down* to its target
/// cannot forward its index at all: it is flagged and the path upstream of it
/// carries nothing, mirroring the Gaussian engine's zero-rate short circuit.
/// Stages skipped behind such a cut keep knob 1 in the reported constraint
/// list.
pub fn solve_symmetric(
    spec: &DmNetworkSpec,
    modes: &DmModes,
    decoder: Decoder,
) -> Result<DmRateResult> {
    spec.validated()?;
    let k_stages = spec.num_stages();
    modes.validate(k_stages)?;
    let ctx = Ctx { spec, modes, k_stages };
    ctx.require_quantizers()?;

    // A quantizer's index rate depends only on its own knob, so monotonicity
    // can be screened up front on a knob grid.
    for i0 in 0..2 {
        for &k in &modes.qmf_sets[i0] {
            let mut prev = f64::INFINITY;
            let mut prev_d = 0.0;
            for j in 0..MONOTONE_GRID {
                let d = j as f64 / (MONOTONE_GRID - 1) as f64;
                let w = ctx.wyner_ziv(i0, k, d)?;
                if w > prev + EQUALITY_TOL {
                    return Err(Error::NonMonotoneQuantizer {
                        node: format!("path {} stage {k}", i0 + 1),
                        detail: format!(
                            "index rate rises from {prev:.12} at d={prev_d} to {w:.12} at d={d}"
                        ),
                    });
                }
                prev = w;
                prev_d = d;
            }
        }
    }

    let segments = [
        engine::segment(k_stages, &modes.qmf_sets[0])?,
        engine::segment(k_stages, &modes.qmf_sets[1])?,
    ];
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    for i0 in 0..2 {
        for &k in &modes.qmf_sets[i0] {
            nodes.push((k, i0));
        }
    }
    nodes.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut knobs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut solves = Vec::with_capacity(nodes.len());
    let mut per_relay = [vec![0.0; k_stages + 1], vec![0.0; k_stages + 1]];
    let mut dead = [false, false];
    let mut infeasible = false;

    for &(k, i0) in &nodes {
        if dead[i0] {
            // Unreachable behind a cut: report at full distortion, carry 0.
            knobs.insert((i0 + 1, k), 1.0);
            infeasible = true;
            continue;
        }
        let seg_index = segments[i0].boundaries().iter().position(|&b| b == k).unwrap();
        let (lo, hi) = segments[i0].bounds(seg_index);
        let target = ctx.segment_min(i0, lo, hi, decoder, &knobs)?;
        let w0 = ctx.wyner_ziv(i0, k, 0.0)?;
        let w1 = ctx.wyner_ziv(i0, k, 1.0)?;

        let (knob, rate, feasible) = if target > w0 + EQUALITY_TOL {
            (0.0, w0, false)
        } else if (w0 - target).abs() <= EQUALITY_TOL {
            (0.0, w0, true)
        } else if target < w1 - EQUALITY_TOL {
            (1.0, w1, false)
        } else if (w1 - target).abs() <= EQUALITY_TOL {
            (1.0, w1, true)
        } else {
            let (mut d_lo, mut d_hi) = (0.0, 1.0);
            for _ in 0..BISECT_ITERS {
                let mid = 0.5 * (d_lo + d_hi);
                if ctx.wyner_ziv(i0, k, mid)? > target {
                    d_lo = mid;
                } else {
                    d_hi = mid;
                }
            }
            let d = 0.5 * (d_lo + d_hi);
            let w = ctx.wyner_ziv(i0, k, d)?;
            if (w - target).abs() >= EQUALITY_TOL {
                return Err(Error::NonMonotoneQuantizer {
                    node: format!("path {} stage {k}", i0 + 1),
                    detail: format!(
                        "bisection stalled at d={d} with index rate {w:.12} \
                         against target {target:.12}"
                    ),
                });
            }
            (d, w, true)
        };

        knobs.insert((i0 + 1, k), knob);
        let carried = if feasible {
            rate
        } else if rate < target {
            // Underfull index: achievable, just short of the equality.
            infeasible = true;
            rate
        } else {
            // Index rate exceeds what the segment can forward: the path is
            // cut here and everything upstream carries nothing.
            infeasible = true;
            dead[i0] = true;
            0.0
        };
        for k_seg in lo..=hi {
            per_relay[i0][k_seg] = carried;
        }
        solves.push(DmQuantizerSolve {
            path: i0 + 1,
            stage: k,
            knob,
            index_rate: rate,
            target,
            residual: (rate - target).abs(),
            feasible,
            index_rate_range: (w1, w0),
        });
    }

    let mut rate_pair = [0.0; 2];
    for i0 in 0..2 {
        let (lo, hi) = segments[i0].bounds(0);
        let rate = if dead[i0] { 0.0 } else { ctx.segment_min(i0, lo, hi, decoder, &knobs)? };
        for k_seg in lo..=hi {
            per_relay[i0][k_seg] = rate;
        }
        rate_pair[i0] = rate;
    }

    let constraints = assemble_constraints(spec, modes, &knobs)?;
    Ok(DmRateResult {
        symmetric_rate: RateValue::new(rate_pair[0].min(rate_pair[1]))?,
        rate_pair: (rate_pair[0], rate_pair[1]),
        per_relay_rates: per_relay,
        quantizers: solves,
        constraints,
        infeasible_quantization: infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    fn bits(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    /// 2x2 symmetric channel with the given flip probability.
    fn bsc(flip: f64) -> Vec<Vec<f64>> {
        vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]]
    }

    /// Binary stage channel y = x_prev + x_cross (mod 2) flipped with
    /// probability `flip`; `gain = false` makes the cross input inert.
    fn xor_stage(flip: f64, cross_acts: bool) -> Vec<Vec<Vec<f64>>> {
        (0..2)
            .map(|xp| {
                (0..2)
                    .map(|xc| {
                        let clean = if cross_acts { xp ^ xc } else { xp };
                        (0..2)
                            .map(|y| if y == clean { 1.0 - flip } else { flip })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// A relay input whose common layer is a degenerate single symbol.
    fn unsplit_relay(x_pmf: Vec<f64>) -> RelayInput {
        RelayInput { u: vec![1.0], x_given_u: vec![x_pmf] }
    }

    /// A relay whose transmit symbol refines a uniform binary common layer
    /// through a BSC(`spread`).
    fn split_relay(spread: f64) -> RelayInput {
        RelayInput { u: uniform(2), x_given_u: bsc(spread) }
    }

    fn h2(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            return 0.0;
        }
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln()) / LN_2
    }

    /// Binary network: XOR interference at every stage, BSC hops, split
    /// relays where the interfered side decodes, erasure quantizers.
    fn noisy_spec(k_stages: usize) -> DmNetworkSpec {
        DmNetworkSpec {
            x_alphabets: vec![bits(2); k_stages + 1],
            u_alphabets: vec![bits(2); k_stages],
            y_alphabets: vec![bits(2); k_stages + 1],
            stage_channels: (0..k_stages).map(|j| xor_stage(0.05 + 0.02 * j as f64, true)).collect(),
            dest_channel: bsc(0.02),
            paths: [
                PathInputs {
                    source: uniform(2),
                    relays: (0..k_stages).map(|_| split_relay(0.25)).collect(),
                },
                PathInputs {
                    source: uniform(2),
                    relays: (0..k_stages).map(|_| split_relay(0.3)).collect(),
                },
            ],
            quantizers: [
                vec![Some(QuantizerFamily::Erasure); k_stages],
                vec![Some(QuantizerFamily::Erasure); k_stages],
            ],
        }
    }

    /// Interference-free chain of BSC hops with unsplit relays (degenerate
    /// single-symbol common layers).
    fn chain_spec(hop_flips: &[f64]) -> DmNetworkSpec {
        let k_stages = hop_flips.len() - 1;
        DmNetworkSpec {
            x_alphabets: vec![bits(2); k_stages + 1],
            u_alphabets: vec![bits(1); k_stages],
            y_alphabets: vec![bits(2); k_stages + 1],
            stage_channels: hop_flips[..k_stages]
                .iter()
                .map(|&f| xor_stage(f, false))
                .collect(),
            dest_channel: bsc(hop_flips[k_stages]),
            paths: [
                PathInputs {
                    source: uniform(2),
                    relays: (0..k_stages).map(|_| unsplit_relay(uniform(2))).collect(),
                },
                PathInputs {
                    source: uniform(2),
                    relays: (0..k_stages).map(|_| unsplit_relay(uniform(2))).collect(),
                },
            ],
            quantizers: [
                vec![Some(QuantizerFamily::Erasure); k_stages],
                vec![Some(QuantizerFamily::Erasure); k_stages],
            ],
        }
    }

    fn set(stages: &[usize]) -> BTreeSet<usize> {
        stages.iter().copied().collect()
    }

    #[test]
    fn joint_pmf_rejects_malformed_tables() {
        let bad_sum = JointPmf::new(vec!["a".into()], vec![2], vec![0.5, 0.45]);
        assert!(matches!(bad_sum, Err(Error::Domain(m)) if m.contains("sums to")));
        let bad_len = JointPmf::new(vec!["a".into()], vec![2], vec![1.0]);
        assert!(bad_len.is_err());
        let dup = JointPmf::new(vec!["a".into(), "a".into()], vec![2, 2], vec![0.25; 4]);
        assert!(matches!(dup, Err(Error::Domain(m)) if m.contains("unique")));
        let negative = JointPmf::new(vec!["a".into()], vec![2], vec![1.5, -0.5]);
        assert!(negative.is_err());
    }

    #[test]
    fn mutual_information_identity_and_independence() {
        let ident = JointPmf::new(
            vec!["x".into(), "y".into()],
            vec![2, 2],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap();
        assert_eq!(mutual_information(&ident, &["x"], &["y"], &[]).unwrap().bits(), 1.0);

        let indep = JointPmf::new(
            vec!["x".into(), "y".into()],
            vec![2, 2],
            vec![0.25; 4],
        )
        .unwrap();
        assert_eq!(mutual_information(&indep, &["x"], &["y"], &[]).unwrap().bits(), 0.0);
    }

    #[test]
    fn mutual_information_matches_binary_symmetric_closed_form() {
        let flip = 0.11;
        let table = vec![0.5 * (1.0 - flip), 0.5 * flip, 0.5 * flip, 0.5 * (1.0 - flip)];
        let p = JointPmf::new(vec!["x".into(), "y".into()], vec![2, 2], table).unwrap();
        let mi = mutual_information(&p, &["x"], &["y"], &[]).unwrap().bits();
        assert_abs_diff_eq!(mi, 1.0 - h2(flip), epsilon = 1e-12);
    }

    #[test]
    fn mutual_information_is_symmetric_and_satisfies_the_chain_rule() {
        // A hand-picked dependent 2x2x2 pmf.
        let table = vec![0.20, 0.05, 0.10, 0.15, 0.02, 0.18, 0.23, 0.07];
        let p = JointPmf::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![2, 2, 2],
            table,
        )
        .unwrap();
        let ab = mutual_information(&p, &["a"], &["b"], &[]).unwrap().bits();
        let ba = mutual_information(&p, &["b"], &["a"], &[]).unwrap().bits();
        assert_abs_diff_eq!(ab, ba, epsilon = 1e-14);

        let a_bc = mutual_information(&p, &["a"], &["b", "c"], &[]).unwrap().bits();
        let a_c_given_b = mutual_information(&p, &["a"], &["c"], &["b"]).unwrap().bits();
        assert_abs_diff_eq!(a_bc, ab + a_c_given_b, epsilon = 1e-12);
    }

    #[test]
    fn mutual_information_sums_out_unmentioned_variables() {
        let table = vec![0.20, 0.05, 0.10, 0.15, 0.02, 0.18, 0.23, 0.07];
        let p = JointPmf::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![2, 2, 2],
            table,
        )
        .unwrap();
        let direct = mutual_information(&p, &["a"], &["b"], &[]).unwrap().bits();
        let marg = p.marginal(&["a", "b"]).unwrap();
        let via_marginal = mutual_information(&marg, &["a"], &["b"], &[]).unwrap().bits();
        assert_abs_diff_eq!(direct, via_marginal, epsilon = 1e-14);
    }

    #[test]
    fn mutual_information_rejects_overlapping_groups() {
        let p = JointPmf::new(vec!["x".into(), "y".into()], vec![2, 2], vec![0.25; 4]).unwrap();
        let err = mutual_information(&p, &["x"], &["x"], &[]).unwrap_err();
        assert!(matches!(err, Error::Domain(m) if m.contains("more than one group")));
        let err = mutual_information(&p, &["x"], &["y"], &["y"]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn erasure_family_scales_information_linearly() {
        let family = QuantizerFamily::Erasure;
        let cond = family.conditional(2, 0.3).unwrap();
        assert_eq!(cond, vec![vec![0.7, 0.0, 0.3], vec![0.0, 0.7, 0.3]]);
        // Uniform binary input through erasure(d) keeps (1 - d) bits.
        for d in [0.0, 0.25, 0.6, 1.0] {
            let cond = family.conditional(2, d).unwrap();
            let mut table = Vec::new();
            for y in 0..2 {
                for q in 0..3 {
                    table.push(0.5 * cond[y][q]);
                }
            }
            let p = JointPmf::new(vec!["y".into(), "q".into()], vec![2, 3], table).unwrap();
            let mi = mutual_information(&p, &["y"], &["q"], &[]).unwrap().bits();
            assert_abs_diff_eq!(mi, 1.0 - d, epsilon = 1e-12);
        }
    }

    #[test]
    fn tables_family_interpolates_between_knots() {
        let family = QuantizerFamily::Tables {
            y_hat_alphabet: bits(2),
            knots: vec![0.0, 1.0],
            tables: vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ],
        };
        assert_eq!(family.conditional(2, 0.0).unwrap()[0], vec![1.0, 0.0]);
        assert_eq!(family.conditional(2, 1.0).unwrap()[0], vec![0.5, 0.5]);
        let mid = family.conditional(2, 0.5).unwrap();
        assert_abs_diff_eq!(mid[0][0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(mid[1][0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn validate_flags_row_sums_and_reports_clean_specs() {
        let spec = noisy_spec(2);
        assert!(validate_dm_spec(&spec).is_empty());

        let mut broken = spec.clone();
        // Row (x_prev=1, x_cross=1) is [0.95, 0.05]; nudge it to sum 0.9.
        broken.stage_channels[0][1][1][0] = 0.85;
        let violations = validate_dm_spec(&broken);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("stage 1 channel row"));
        assert!(violations[0].contains("sums to 0.9"));

        let mut bad_quant = spec.clone();
        bad_quant.quantizers[0][0] = Some(QuantizerFamily::Tables {
            y_hat_alphabet: bits(2),
            knots: vec![0.0, 0.5],
            tables: vec![bsc(0.0), bsc(0.5)],
        });
        let violations = validate_dm_spec(&bad_quant);
        assert!(violations.iter().any(|m| m.contains("knots")));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = noisy_spec(2);
        let text = serde_json::to_string(&spec).unwrap();
        let back = DmNetworkSpec::from_json(&text).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn noiseless_unsplit_network_has_one_bit_everywhere() {
        // All channels are noiseless in x_prev, relays do not split, no QMF.
        let spec = chain_spec(&[0.0, 0.0, 0.0]);
        let modes = DmModes::symmetric(BTreeSet::new());
        let constraints = assemble_constraints(&spec, &modes, &BTreeMap::new()).unwrap();
        for c in &constraints {
            if c.kind == DmConstraintKind::Direct {
                assert_eq!(c.value, 1.0, "direct term at stage {} of path {}", c.stage, c.path);
            }
        }
    }

    #[test]
    fn constraint_count_follows_the_mode_pattern() {
        let spec = noisy_spec(3);
        let k_stages = 3;
        for (v1, v2) in [
            (set(&[]), set(&[])),
            (set(&[2]), set(&[2])),
            (set(&[1, 3]), set(&[2])),
            (set(&[1, 2, 3]), set(&[1, 2, 3])),
        ] {
            let modes = DmModes::new(v1.clone(), v2.clone());
            let mut distortions = BTreeMap::new();
            for &k in &v1 {
                distortions.insert((1, k), 0.4);
            }
            for &k in &v2 {
                distortions.insert((2, k), 0.4);
            }
            let constraints = assemble_constraints(&spec, &modes, &distortions).unwrap();
            let both_df = (1..=k_stages).filter(|k| !v1.contains(k) && !v2.contains(k)).count();
            let split_1 = k_stages - v2.len();
            let split_2 = k_stages - v1.len();
            let expected = 2 * (k_stages + 1)
                + 2 * (split_1 + split_2)
                + 2 * both_df
                + v1.len()
                + v2.len();
            assert_eq!(constraints.len(), expected, "modes {v1:?} / {v2:?}");
            assert!(constraints.iter().all(|c| c.value >= 0.0));
        }
    }

    #[test]
    fn missing_distortion_knob_is_rejected() {
        let spec = noisy_spec(2);
        let modes = DmModes::symmetric(set(&[2]));
        let err = assemble_constraints(&spec, &modes, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::Domain(m) if m.contains("distortion knob")));
    }

    #[test]
    fn noiseless_quantized_hop_solves_to_lossless_and_one_bit() {
        let spec = chain_spec(&[0.0, 0.0]);
        let modes = DmModes::symmetric(set(&[1]));
        let result = solve_symmetric(&spec, &modes, Decoder::Sd).unwrap();
        assert_eq!(result.rate_pair, (1.0, 1.0));
        assert_eq!(result.symmetric_rate.bits(), 1.0);
        assert!(!result.infeasible_quantization);
        let solve = &result.quantizers[0];
        assert!(solve.feasible);
        assert!(solve.knob.abs() < 1e-9);
        assert_abs_diff_eq!(solve.index_rate, 1.0, epsilon = 1e-12);

        // Exhaustive scan oracle: the knob minimizing the equality residual
        // over a fine grid agrees with the bisected knob.
        let ctx = Ctx { spec: &spec, modes: &modes, k_stages: 1 };
        let mut best = (f64::INFINITY, 0.0);
        for j in 0..=10_000 {
            let d = j as f64 / 10_000.0;
            let residual = (ctx.wyner_ziv(0, 1, d).unwrap() - solve.target).abs();
            if residual < best.0 {
                best = (residual, d);
            }
        }
        assert_abs_diff_eq!(best.1, solve.knob, epsilon = 2e-4);
    }

    #[test]
    fn bisected_knob_matches_a_grid_scan_on_a_noisy_network() {
        let spec = noisy_spec(2);
        let modes = DmModes::symmetric(set(&[2]));
        let result = solve_symmetric(&spec, &modes, Decoder::Sd).unwrap();
        let solve = result
            .quantizers
            .iter()
            .find(|s| s.path == 1 && s.stage == 2)
            .unwrap();
        assert!(solve.feasible);
        assert!(solve.residual < EQUALITY_TOL);

        let ctx = Ctx { spec: &spec, modes: &modes, k_stages: 2 };
        let mut best = (f64::INFINITY, 0.0);
        for j in 0..=10_000 {
            let d = j as f64 / 10_000.0;
            let residual = (ctx.wyner_ziv(0, 2, d).unwrap() - solve.target).abs();
            if residual < best.0 {
                best = (residual, d);
            }
        }
        assert_abs_diff_eq!(best.1, solve.knob, epsilon = 2e-4);
        // The index rate equals the segment it feeds, and stage rates follow
        // their segments.
        assert_abs_diff_eq!(result.per_relay_rates[0][2], solve.index_rate, epsilon = 1e-12);
        assert_abs_diff_eq!(result.per_relay_rates[0][0], result.rate_pair.0, epsilon = 1e-15);
        assert_abs_diff_eq!(result.per_relay_rates[0][1], result.rate_pair.0, epsilon = 1e-15);
    }

    #[test]
    fn interference_free_chain_reduces_to_the_weakest_hop() {
        let flips = [0.03, 0.12, 0.07];
        let spec = chain_spec(&flips);
        let modes = DmModes::symmetric(BTreeSet::new());
        for decoder in [Decoder::Sd, Decoder::Jd] {
            let result = solve_symmetric(&spec, &modes, decoder).unwrap();
            let expected: f64 = flips
                .iter()
                .map(|&f| 1.0 - h2(f))
                .fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(result.rate_pair.0, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(result.rate_pair.1, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_output_hop_yields_zero_rate_without_infeasibility() {
        let mut spec = chain_spec(&[0.0, 0.0]);
        spec.dest_channel = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let modes = DmModes::symmetric(set(&[1]));
        let result = solve_symmetric(&spec, &modes, Decoder::Sd).unwrap();
        assert_eq!(result.rate_pair, (0.0, 0.0));
        assert!(!result.infeasible_quantization);
        assert!(result.quantizers.iter().all(|s| s.feasible));
    }

    #[test]
    fn joint_decoding_never_falls_below_successive_decoding() {
        for k_stages in [2usize, 3] {
            let spec = noisy_spec(k_stages);
            for v1 in [set(&[]), set(&[2]), set(&[1]), set(&(1..=k_stages).collect::<Vec<_>>())] {
                for v2 in [v1.clone(), set(&[2])] {
                    let modes = DmModes::new(v1.clone(), v2.clone());
                    let sd = solve_symmetric(&spec, &modes, Decoder::Sd).unwrap();
                    let jd = solve_symmetric(&spec, &modes, Decoder::Jd).unwrap();
                    assert!(
                        jd.symmetric_rate.bits() >= sd.symmetric_rate.bits() - 1e-12,
                        "JD {} < SD {} for modes {v1:?}/{v2:?} at K={k_stages}",
                        jd.symmetric_rate.bits(),
                        sd.symmetric_rate.bits()
                    );
                }
            }
        }
    }

    #[test]
    fn saturated_family_is_flagged_but_stays_achievable() {
        // The quantizer tops out below the downstream capability: a family
        // that erases at least 40% of the time.
        let weak = QuantizerFamily::Tables {
            y_hat_alphabet: vec!["0".into(), "1".into(), ERASURE_SYMBOL.into()],
            knots: vec![0.0, 1.0],
            tables: vec![
                vec![vec![0.6, 0.0, 0.4], vec![0.0, 0.6, 0.4]],
                vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]],
            ],
        };
        let mut spec = chain_spec(&[0.0, 0.0]);
        spec.quantizers[0][0] = Some(weak.clone());
        spec.quantizers[1][0] = Some(weak);
        let modes = DmModes::symmetric(set(&[1]));
        let result = solve_symmetric(&spec, &modes, Decoder::Sd).unwrap();
        assert!(result.infeasible_quantization);
        let solve = &result.quantizers[0];
        assert!(!solve.feasible);
        assert_eq!(solve.knob, 0.0);
        assert_abs_diff_eq!(solve.index_rate, 0.6, epsilon = 1e-12);
        assert!(solve.index_rate_range.1 < solve.target);
        // The path still carries the 0.6 bits the quantizer delivers.
        assert_abs_diff_eq!(result.rate_pair.0, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn overfull_index_cuts_the_path_upstream() {
        // The family cannot get its index rate down to a very noisy
        // downstream hop, so nothing survives past the quantizer.
        let stiff = QuantizerFamily::Tables {
            y_hat_alphabet: bits(2),
            knots: vec![0.0, 1.0],
            tables: vec![bsc(0.0), bsc(0.05)],
        };
        let mut spec = chain_spec(&[0.0, 0.0]);
        spec.dest_channel = bsc(0.4);
        spec.quantizers[0][0] = Some(stiff.clone());
        spec.quantizers[1][0] = Some(stiff);
        let modes = DmModes::symmetric(set(&[1]));
        let result = solve_symmetric(&spec, &modes, Decoder::Sd).unwrap();
        assert!(result.infeasible_quantization);
        assert_eq!(result.rate_pair, (0.0, 0.0));
        let solve = &result.quantizers[0];
        assert!(!solve.feasible);
        assert_eq!(solve.knob, 1.0);
        assert!(solve.index_rate > solve.target);
    }

    #[test]
    fn rising_index_rate_is_diagnosed() {
        let backwards = QuantizerFamily::Tables {
            y_hat_alphabet: bits(2),
            knots: vec![0.0, 1.0],
            tables: vec![bsc(0.5), bsc(0.0)],
        };
        let mut spec = chain_spec(&[0.0, 0.0]);
        spec.quantizers[0][0] = Some(backwards);
        let modes = DmModes::symmetric(set(&[1]));
        let err = solve_symmetric(&spec, &modes, Decoder::Sd).unwrap_err();
        match err {
            Error::NonMonotoneQuantizer { node, detail } => {
                assert_eq!(node, "path 1 stage 1");
                assert!(detail.contains("rises"));
            }
            other => panic!("expected a non-monotone diagnosis, got {other:?}"),
        }
    }

    #[test]
    fn quantized_stage_without_a_family_is_rejected() {
        let mut spec = chain_spec(&[0.0, 0.0]);
        spec.quantizers[0][0] = None;
        let modes = DmModes::symmetric(set(&[1]));
        let err = solve_symmetric(&spec, &modes, Decoder::Sd).unwrap_err();
        assert!(matches!(err, Error::DmSpec(m) if m.contains("no quantizer family")));
    }

    /// Uniform PAM points through a discretized additive-noise channel; the
    /// chain rate grows with the constellation size toward the closed-form
    /// Gaussian hop rate and never exceeds it.
    #[test]
    fn discretized_gaussian_hop_approaches_the_closed_form() {
        let snr = 10.0;
        let rate_for = |points: usize| {
            let spread = 3.0;
            let x: Vec<f64> = (0..points)
                .map(|i| -spread + 2.0 * spread * i as f64 / (points - 1) as f64)
                .collect();
            let power = x.iter().map(|v| v * v).sum::<f64>() / points as f64;
            let scale = (snr / power).sqrt();
            let bins = 64;
            let lo = -spread * scale - 4.0;
            let hi = spread * scale + 4.0;
            let width = (hi - lo) / bins as f64;
            // Unit-variance noise, output binned over [lo, hi].
            let mut rows = Vec::with_capacity(points);
            for &xi in &x {
                let mean = xi * scale;
                let mut row: Vec<f64> = (0..bins)
                    .map(|b| {
                        let center = lo + (b as f64 + 0.5) * width;
                        (-0.5 * (center - mean).powi(2)).exp()
                    })
                    .collect();
                let sum: f64 = row.iter().sum();
                for p in &mut row {
                    *p /= sum;
                }
                rows.push(row);
            }
            let labels: Vec<String> = (0..points).map(|i| format!("p{i}")).collect();
            let y_labels: Vec<String> = (0..bins).map(|b| format!("b{b}")).collect();
            let spec = DmNetworkSpec {
                x_alphabets: vec![labels.clone(), labels.clone()],
                u_alphabets: vec![vec!["0".into()]],
                y_alphabets: vec![y_labels.clone(), y_labels],
                stage_channels: vec![rows
                    .iter()
                    .map(|row| vec![row.clone(); points])
                    .collect()],
                dest_channel: rows,
                paths: [
                    PathInputs {
                        source: uniform(points),
                        relays: vec![unsplit_relay(uniform(points))],
                    },
                    PathInputs {
                        source: uniform(points),
                        relays: vec![unsplit_relay(uniform(points))],
                    },
                ],
                quantizers: [vec![None], vec![None]],
            };
            // The stage channel above copies the same row for every cross
            // symbol, so the cross input is inert.
            let modes = DmModes::symmetric(BTreeSet::new());
            solve_symmetric(&spec, &modes, Decoder::Sd).unwrap().symmetric_rate.bits()
        };
        // Real-valued hop, so the ceiling is half the complex-baseband form.
        let closed_form = 0.5 * (1.0 + snr).ln() / LN_2;
        let coarse = rate_for(4);
        let medium = rate_for(8);
        let fine = rate_for(16);
        assert!(coarse < medium && medium < fine, "{coarse} {medium} {fine}");
        assert!(fine < closed_form, "{fine} vs {closed_form}");
        // A 16-point constellation already lands in the right neighborhood.
        assert!(fine > 0.8 * closed_form, "{fine} vs {closed_form}");
    }
}
