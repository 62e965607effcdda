//! Pool assignment generation.
//!
//! Given a sizes distribution 𝒮 and a universe scale ψ, each node draws a
//! target size from 𝒮 and fills its pool with ids from the uniform universe
//! `{0, .., u - 1}` where `u = ⌈ψ·E[𝒮]⌉`. Larger ψ means a larger universe
//! and therefore less overlap between pools. [`calibrate_psi`] searches for
//! the ψ that reproduces a target mean pairwise difference.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::bits::{xor_count, Bits};
use crate::pool::{Pool, PoolAssignment};
use crate::seed::{derive_seed, rng, Rng};
use crate::topology::Topology;
use crate::{Error, Result};

/// Maxwell scale giving a mean pool size of about 2×10⁴ transactions, the
/// order of magnitude of Bitcoin mempools. A stand-in: no fitted parameters
/// are available.
pub const DEFAULT_MAXWELL_SCALE: f64 = 12_533.141_373_155_003;

/// Distribution of pool sizes. Every sample is at least 1.
#[derive(Clone, Debug, PartialEq)]
pub enum SizesDistribution {
    Constant(u64),
    /// Continuous Maxwell-Boltzmann with the given scale, rounded to the
    /// nearest integer and floored at 1.
    Maxwell { scale: f64 },
    /// Uniform draws from an observed sample.
    Empirical(Vec<u64>),
}

impl Default for SizesDistribution {
    fn default() -> Self {
        SizesDistribution::Maxwell {
            scale: DEFAULT_MAXWELL_SCALE,
        }
    }
}

impl SizesDistribution {
    /// Maxwell distribution whose mean is `mean`.
    pub fn maxwell_with_mean(mean: f64) -> Self {
        SizesDistribution::Maxwell {
            scale: mean / (2.0 * (2.0 / std::f64::consts::PI).sqrt()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SizesDistribution::Constant(0) => Err(Error::param("constant pool size must be >= 1")),
            SizesDistribution::Maxwell { scale } if !(scale.is_finite() && *scale > 0.0) => {
                Err(Error::param(format!("maxwell scale must be positive, got {scale}")))
            }
            SizesDistribution::Empirical(v) if v.is_empty() => {
                Err(Error::param("empirical sizes sample is empty"))
            }
            SizesDistribution::Empirical(v) if v.contains(&0) => {
                Err(Error::param("empirical pool sizes must be >= 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            SizesDistribution::Constant(k) => *k as f64,
            SizesDistribution::Maxwell { scale } => 2.0 * scale * (2.0 / std::f64::consts::PI).sqrt(),
            SizesDistribution::Empirical(v) => v.iter().sum::<u64>() as f64 / v.len() as f64,
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> u64 {
        match self {
            SizesDistribution::Constant(k) => *k,
            SizesDistribution::Maxwell { scale } => {
                let sq: f64 = (0..3)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        z * z
                    })
                    .sum();
                ((scale * sq.sqrt()).round() as u64).max(1)
            }
            SizesDistribution::Empirical(v) => v[rng.random_range(0..v.len())],
        }
    }

    /// Reads an empirical sample: one positive integer per line. Blank lines
    /// and `#` comments are skipped.
    pub fn parse_empirical(text: &str) -> Result<Self> {
        let mut sizes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: u64 = line.parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: format!("bad pool size `{line}`: {e}"),
            })?;
            sizes.push(v);
        }
        let dist = SizesDistribution::Empirical(sizes);
        dist.validate()?;
        Ok(dist)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_empirical(&std::fs::read_to_string(path)?)
    }
}

/// How a node's pool is drawn from the universe once its size is known.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Sampling {
    /// A uniform subset of exactly `min(size, u)` distinct ids.
    #[default]
    Distinct,
    /// `size` independent uniform draws; repeats collapse, so the pool holds
    /// about `u·(1 − e^(−size/u))` ids and may fall short of the universe
    /// even when `size > u`.
    Iid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoolGenParams {
    pub psi: f64,
    pub sizes: SizesDistribution,
    pub sampling: Sampling,
    pub seed: u64,
}

impl PoolGenParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.psi.is_finite() && self.psi > 0.0) {
            return Err(Error::param(format!("psi must be positive, got {}", self.psi)));
        }
        self.sizes.validate()
    }

    /// `u = ⌈ψ·E[𝒮]⌉`
    pub fn universe_size(&self) -> Result<usize> {
        self.validate()?;
        let x = self.psi * self.sizes.mean();
        // Absorb representation error such as 0.35 * 1000 = 350.00000000000006.
        let u = (x * (1.0 - 1e-12)).ceil();
        if u < 1.0 {
            return Err(Error::param(format!(
                "universe size ceil({} * {}) is zero",
                self.psi,
                self.sizes.mean()
            )));
        }
        Ok(u as usize)
    }
}

/// Draws a pool assignment for `g`.
///
/// All sizes are sampled first, then the pools in node order, from a single
/// RNG stream seeded by `params.seed`.
pub fn generate_assignment(g: &Topology, params: &PoolGenParams) -> Result<PoolAssignment> {
    let u = params.universe_size()?;
    let n = g.node_count();
    let mut rng = rng(params.seed);
    let sizes: Vec<u64> = (0..n).map(|_| params.sizes.sample(&mut rng)).collect();
    let ids = Uniform::new(0, u).map_err(|e| Error::param(e.to_string()))?;
    let mut draw = |size: u64, put: &mut dyn FnMut(usize)| match params.sampling {
        Sampling::Distinct => {
            for id in index::sample(&mut rng, u, (size as usize).min(u)) {
                put(id);
            }
        }
        Sampling::Iid => {
            for _ in 0..size {
                put(ids.sample(&mut rng));
            }
        }
    };
    // A universe much wider than the draws would waste memory as dense
    // bitsets; keep only the ids that occur.
    let drawn: u64 = sizes.iter().sum();
    if (u as u64) > 64 * drawn.max(1) {
        let pools: Vec<Pool> = sizes
            .iter()
            .map(|&size| {
                let mut v = Vec::with_capacity(size as usize);
                draw(size, &mut |id| v.push(id as u64));
                v.into_iter().collect()
            })
            .collect();
        return Ok(PoolAssignment::from_pools(&pools));
    }
    let rows = sizes
        .iter()
        .map(|&size| {
            let mut row = Bits::with_capacity(u);
            draw(size, &mut |id| row.insert(id));
            row
        })
        .collect();
    Ok(PoolAssignment::from_dense(u, rows))
}

/// Observed `|Sᵢ ⊕ Sⱼ|` over the edges of a topology.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffDistribution {
    /// `(i, j, diff)` per edge, `i < j`, ascending.
    pub entries: Vec<(usize, usize, u64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: u64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: u64,
}

impl DiffDistribution {
    pub fn values(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.2).collect()
    }

    pub fn mean(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().map(|e| e.2 as f64).sum::<f64>() / self.entries.len() as f64
    }

    pub fn summary(&self) -> Summary {
        let mut v = self.values();
        v.sort_unstable();
        Summary {
            count: v.len(),
            mean: self.mean(),
            min: v.first().copied().unwrap_or(0),
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v.last().copied().unwrap_or(0),
        }
    }

    /// CSV with header `edge_i,edge_j,diff`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge_i,edge_j,diff\n");
        for (i, j, d) in &self.entries {
            let _ = writeln!(out, "{i},{j},{d}");
        }
        out
    }
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[u64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0] as f64,
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            sorted[lo] as f64 * (1.0 - frac) + sorted[hi] as f64 * frac
        }
    }
}

pub fn empirical_diff_distribution(g: &Topology, a: &PoolAssignment) -> Result<DiffDistribution> {
    a.check_matches(g)?;
    let rows = a.rows();
    Ok(DiffDistribution {
        entries: g
            .edges()
            .map(|(i, j)| (i, j, xor_count(&rows[i], &rows[j])))
            .collect(),
    })
}

/// Smallest ψ the calibration search considers.
pub const PSI_MIN: f64 = 1.0 / 1024.0;
/// Largest ψ the calibration search considers.
pub const PSI_MAX: f64 = 64.0;
/// Generation seeds averaged per ψ evaluation.
pub const CALIBRATION_SEEDS: u64 = 5;
/// Accepted relative error on the mean difference.
pub const CALIBRATION_TOLERANCE: f64 = 0.05;
const CALIBRATION_STEPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub psi: f64,
    pub mean_diff: f64,
}

/// Mean edge difference at `psi`, averaged over [`CALIBRATION_SEEDS`]
/// assignments whose seeds depend on `seed` only (not on `psi`).
pub fn mean_diff_at(
    g: &Topology,
    sizes: &SizesDistribution,
    sampling: Sampling,
    psi: f64,
    seed: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..CALIBRATION_SEEDS {
        let params = PoolGenParams {
            psi,
            sizes: sizes.clone(),
            sampling,
            seed: derive_seed(seed, k),
        };
        let a = generate_assignment(g, &params)?;
        total += empirical_diff_distribution(g, &a)?.mean();
    }
    Ok(total / CALIBRATION_SEEDS as f64)
}

/// Finds ψ whose generated mean edge difference is within 5% of
/// `target_mean_diff`, by geometric bisection over `[PSI_MIN, PSI_MAX]`.
pub fn calibrate_psi(
    g: &Topology,
    sizes: &SizesDistribution,
    sampling: Sampling,
    target_mean_diff: f64,
    seed: u64,
) -> Result<Calibration> {
    sizes.validate()?;
    if !(target_mean_diff.is_finite() && target_mean_diff >= 0.0) {
        return Err(Error::param(format!("bad target mean difference {target_mean_diff}")));
    }
    if target_mean_diff >= 2.0 * sizes.mean() {
        return Err(Error::param(format!(
            "target {target_mean_diff} is not below twice the mean pool size {}",
            sizes.mean()
        )));
    }
    let within = |m: f64| (m - target_mean_diff).abs() <= CALIBRATION_TOLERANCE * target_mean_diff;
    let eval = |psi: f64| mean_diff_at(g, sizes, sampling, psi, seed);

    let (mut lo, mut hi) = (PSI_MIN, PSI_MAX);
    let m_lo = eval(lo)?;
    if within(m_lo) {
        return Ok(Calibration { psi: lo, mean_diff: m_lo });
    }
    if m_lo > target_mean_diff {
        return Err(Error::param(format!(
            "target {target_mean_diff} is below the smallest reachable mean difference {m_lo}"
        )));
    }
    let m_hi = eval(hi)?;
    if within(m_hi) {
        return Ok(Calibration { psi: hi, mean_diff: m_hi });
    }
    if m_hi < target_mean_diff {
        return Err(Error::param(format!(
            "target {target_mean_diff} exceeds the mean difference {m_hi} reached at psi = {PSI_MAX}"
        )));
    }
    for _ in 0..CALIBRATION_STEPS {
        let mid = (lo * hi).sqrt();
        let m = eval(mid)?;
        if within(m) {
            return Ok(Calibration { psi: mid, mean_diff: m });
        }
        if m < target_mean_diff {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::param(format!(
        "calibration for target {target_mean_diff} did not converge"
    )))
}
