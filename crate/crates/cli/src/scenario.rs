//! Scenario files: a TOML manifest that fully determines an experiment.
//!
//! ```toml
//! kind = "iter_vs_diameter"
//! output = "results/fig5"
//! seeds = [1, 2, 3]
//!
//! [topology]
//! n = 1000
//! deg = { start = 4, stop = 28, step = 4 }
//! p = 0.24
//!
//! [pools]
//! kind = "generated"
//! psi = 0.5
//! sizes = "maxwell"
//! mean = 20000
//! sampling = "iid"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use srep::baseline::MempoolSyncParams;
use srep::engine::{Mode, StopCondition};
use srep::pools::{Sampling, SizesDistribution};
use srep::reconcile::{Backend, IbltParams};
use srep::seed::derive_seed;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    ValidateBounds,
    RedundancySweep,
    PsiCalibration,
    IterVsDiameter,
    CommAndTime,
    MempoolsyncCompare,
    LargeScale,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::ValidateBounds => "validate_bounds",
            Kind::RedundancySweep => "redundancy_sweep",
            Kind::PsiCalibration => "psi_calibration",
            Kind::IterVsDiameter => "iter_vs_diameter",
            Kind::CommAndTime => "comm_and_time",
            Kind::MempoolsyncCompare => "mempoolsync_compare",
            Kind::LargeScale => "large_scale",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    WattsStrogatz,
    Complete,
    Cycle,
    Path,
    RandomTree,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum IntSweep {
    One(u64),
    Many(Vec<u64>),
    /// Inclusive of `stop`.
    Range { start: u64, stop: u64, step: u64 },
}

impl IntSweep {
    fn values(&self, what: &str) -> Result<Vec<usize>> {
        let v: Vec<u64> = match self {
            IntSweep::One(x) => vec![*x],
            IntSweep::Many(v) => v.clone(),
            IntSweep::Range { start, stop, step } => {
                if *step == 0 || start > stop {
                    return Err(CliError::Invalid(format!("{what}: empty or unbounded range")));
                }
                (*start..=*stop).step_by(*step as usize).collect()
            }
        };
        if v.is_empty() {
            return Err(CliError::Invalid(format!("{what}: sweep is empty")));
        }
        Ok(v.into_iter().map(|x| x as usize).collect())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum FloatSweep {
    One(f64),
    Many(Vec<f64>),
}

impl FloatSweep {
    fn values(&self, what: &str) -> Result<Vec<f64>> {
        let v = match self {
            FloatSweep::One(x) => vec![*x],
            FloatSweep::Many(v) => v.clone(),
        };
        if v.is_empty() {
            return Err(CliError::Invalid(format!("{what}: sweep is empty")));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(CliError::Invalid(format!("{what}: {x} is not finite")));
        }
        Ok(v)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    kind: Kind,
    output: Option<PathBuf>,
    seeds: Vec<u64>,
    topology: RawTopology,
    #[serde(default)]
    pools: RawPools,
    #[serde(default)]
    protocol: RawProtocol,
    mempoolsync: Option<RawMempoolSync>,
    calibration: Option<RawCalibration>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    #[serde(default)]
    family: Family,
    n: IntSweep,
    deg: Option<IntSweep>,
    p: Option<f64>,
}

#[derive(Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum PoolKind {
    #[default]
    Unit,
    Generated,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SizesKind {
    #[default]
    Maxwell,
    Constant,
    Empirical,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SamplingName {
    #[default]
    Distinct,
    Iid,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPools {
    #[serde(default)]
    kind: PoolKind,
    psi: Option<FloatSweep>,
    #[serde(default)]
    sizes: SizesKind,
    mean: Option<f64>,
    scale: Option<f64>,
    size: Option<u64>,
    file: Option<PathBuf>,
    #[serde(default)]
    sampling: SamplingName,
    #[serde(default)]
    write_diffs: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModeName {
    ESrep,
    EpSrep,
    #[default]
    Srep,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BackendName {
    #[default]
    Oracle,
    Iblt,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    #[serde(default)]
    mode: ModeName,
    #[serde(default)]
    backend: BackendName,
    cells_per_diff: Option<f64>,
    hash_count: Option<usize>,
    stop_fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMempoolSync {
    def_tx_to_sync: Option<usize>,
    y: FloatSweep,
    large_pool_multiplier: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    targets: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PoolSpec {
    /// Node `i` holds transaction `i` only.
    Unit,
    Generated {
        psi: Vec<f64>,
        sizes: SizesDistribution,
        sampling: Sampling,
    },
}

/// A validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub output: PathBuf,
    pub seeds: Vec<u64>,
    pub family: Family,
    pub n: Vec<usize>,
    /// Empty for families with a fixed shape.
    pub deg: Vec<usize>,
    pub p: f64,
    pub pools: PoolSpec,
    pub write_diffs: bool,
    pub mode: Mode,
    /// For IBLT the hash seed is replaced per run.
    pub backend: Backend,
    pub stop: StopCondition,
    pub mempoolsync: Option<MempoolSyncParams>,
    pub y: Vec<f64>,
    pub targets: Vec<f64>,
}

/// One combination of sweep values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub n: usize,
    pub deg: Option<usize>,
    pub psi: Option<f64>,
    pub y: Option<f64>,
    pub target: Option<f64>,
}

impl fmt::Display for Point {
    /// Canonical form; also the input to run seed derivation.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={}", self.n)?;
        if let Some(d) = self.deg {
            write!(f, ";deg={d}")?;
        }
        if let Some(x) = self.psi {
            write!(f, ";psi={x}")?;
        }
        if let Some(x) = self.y {
            write!(f, ";y={x}")?;
        }
        if let Some(x) = self.target {
            write!(f, ";target={x}")?;
        }
        Ok(())
    }
}

impl Point {
    /// FNV-1a of the canonical form, so a point's seeds do not depend on
    /// where it sits in the sweep.
    pub fn key(&self) -> u64 {
        self.to_string()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
    }
}

/// Seeds for one run. `seed` is written to every CSV row; the rest are
/// derived from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSeeds {
    pub master: u64,
    pub seed: u64,
}

impl RunSeeds {
    pub fn new(master: u64, point: &Point) -> Self {
        RunSeeds { master, seed: derive_seed(master, point.key()) }
    }
    pub fn topology(&self) -> u64 {
        derive_seed(self.seed, 0)
    }
    pub fn pools(&self) -> u64 {
        derive_seed(self.seed, 1)
    }
    pub fn scores(&self) -> u64 {
        derive_seed(self.seed, 2)
    }
    pub fn sketch(&self) -> u64 {
        derive_seed(self.seed, 3)
    }
    pub fn calibration(&self) -> u64 {
        derive_seed(self.seed, 4)
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Invalid(msg.into()))
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::parse(&text, &stem, path.parent().unwrap_or(Path::new(""))).map_err(|e| match e {
            CliError::Parse { msg, .. } => CliError::Parse { path: path.to_path_buf(), msg },
            other => other,
        })
    }

    /// Parses and validates. Relative file references resolve against
    /// `base_dir`; `default_name` names outputs when the file sets none.
    pub fn parse(text: &str, default_name: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Parse {
            path: PathBuf::new(),
            msg: e.to_string(),
        })?;
        Self::resolve(raw, default_name, base_dir)
    }

    fn resolve(raw: RawScenario, default_name: &str, base_dir: &Path) -> Result<Self> {
        let kind = raw.kind;
        let name = raw.name.unwrap_or_else(|| default_name.to_string());
        if name.is_empty() || name.contains(['/', '\\']) {
            return invalid(format!("name {name:?} is not a plain file stem"));
        }
        if raw.seeds.is_empty() {
            return invalid("seeds list is empty; at least one seed is required");
        }

        let family = raw.topology.family;
        let n = raw.topology.n.values("topology.n")?;
        let min_n = if family == Family::WattsStrogatz { 3 } else { 2 };
        if let Some(&bad) = n.iter().find(|&&x| x < min_n) {
            return invalid(format!("topology.n = {bad} is below {min_n}"));
        }
        let deg = match (family, &raw.topology.deg) {
            (Family::WattsStrogatz, Some(d)) => d.values("topology.deg")?,
            (Family::WattsStrogatz, None) => return invalid("watts_strogatz needs topology.deg"),
            (_, Some(_)) => return invalid("topology.deg only applies to watts_strogatz"),
            (_, None) => Vec::new(),
        };
        for &d in &deg {
            for &nn in &n {
                // A degree of at least n - 1 means the complete graph.
                if d < nn - 1 && (d == 0 || d % 2 == 1) {
                    return invalid(format!("topology.deg = {d} must be even and positive for n = {nn}"));
                }
            }
        }
        let p = match (family, raw.topology.p) {
            (Family::WattsStrogatz, Some(p)) if (0.0..=1.0).contains(&p) => p,
            (Family::WattsStrogatz, Some(p)) => return invalid(format!("topology.p = {p} is outside [0, 1]")),
            (Family::WattsStrogatz, None) => return invalid("watts_strogatz needs topology.p"),
            (_, Some(_)) => return invalid("topology.p only applies to watts_strogatz"),
            (_, None) => 0.0,
        };

        let rp = raw.pools;
        let pools = match rp.kind {
            PoolKind::Unit => {
                if rp.psi.is_some() || rp.size.is_some() || rp.mean.is_some() || rp.file.is_some() {
                    return invalid("unit pools take no psi or sizes settings");
                }
                PoolSpec::Unit
            }
            PoolKind::Generated => {
                let psi = match &rp.psi {
                    Some(s) => s.values("pools.psi")?,
                    None if raw.calibration.is_some() => Vec::new(),
                    None => return invalid("generated pools need pools.psi"),
                };
                if let Some(bad) = psi.iter().find(|&&x| x <= 0.0) {
                    return invalid(format!("pools.psi = {bad} must be positive"));
                }
                let sizes = match rp.sizes {
                    SizesKind::Maxwell => match (rp.mean, rp.scale) {
                        (Some(_), Some(_)) => return invalid("give pools.mean or pools.scale, not both"),
                        (Some(m), None) => SizesDistribution::maxwell_with_mean(m),
                        (None, Some(s)) => SizesDistribution::Maxwell { scale: s },
                        (None, None) => SizesDistribution::default(),
                    },
                    SizesKind::Constant => match rp.size {
                        Some(s) => SizesDistribution::Constant(s),
                        None => return invalid("constant sizes need pools.size"),
                    },
                    SizesKind::Empirical => match &rp.file {
                        Some(f) => SizesDistribution::from_file(base_dir.join(f))?,
                        None => return invalid("empirical sizes need pools.file"),
                    },
                };
                sizes.validate()?;
                let sampling = match rp.sampling {
                    SamplingName::Distinct => Sampling::Distinct,
                    SamplingName::Iid => Sampling::Iid,
                };
                PoolSpec::Generated { psi, sizes, sampling }
            }
        };

        let rpr = raw.protocol;
        let mode = match rpr.mode {
            ModeName::ESrep => Mode::ESrep,
            ModeName::EpSrep => Mode::EpSrep,
            ModeName::Srep => Mode::Srep,
        };
        let backend = match rpr.backend {
            BackendName::Oracle => {
                if rpr.cells_per_diff.is_some() || rpr.hash_count.is_some() {
                    return invalid("sketch settings need backend = \"iblt\"");
                }
                Backend::Oracle
            }
            BackendName::Iblt => {
                let d = IbltParams::default();
                Backend::Iblt(IbltParams {
                    cells_per_diff: rpr.cells_per_diff.unwrap_or(d.cells_per_diff),
                    hash_count: rpr.hash_count.unwrap_or(d.hash_count),
                    seed: 0,
                })
            }
        };
        backend.validate()?;
        let stop = match rpr.stop_fraction {
            None => StopCondition::Full,
            Some(x) if x > 0.0 && x <= 1.0 => {
                if x == 1.0 {
                    StopCondition::Full
                } else {
                    StopCondition::Fraction(x)
                }
            }
            Some(x) => return invalid(format!("protocol.stop_fraction = {x} is outside (0, 1]")),
        };

        let (mempoolsync, y) = match raw.mempoolsync {
            Some(m) => {
                let d = MempoolSyncParams::default();
                let ys = m.y.values("mempoolsync.y")?;
                let params = MempoolSyncParams {
                    def_tx_to_sync: m.def_tx_to_sync.unwrap_or(d.def_tx_to_sync),
                    y: ys[0],
                    large_pool_multiplier: m.large_pool_multiplier.unwrap_or(d.large_pool_multiplier),
                };
                for &y in &ys {
                    MempoolSyncParams { y, ..params }.validate()?;
                }
                (Some(params), ys)
            }
            None => (None, Vec::new()),
        };
        let targets = match raw.calibration {
            Some(c) => {
                if c.targets.is_empty() {
                    return invalid("calibration.targets is empty");
                }
                if let Some(bad) = c.targets.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                    return invalid(format!("calibration target {bad} must be positive"));
                }
                c.targets
            }
            None => Vec::new(),
        };

        let s = Scenario {
            output: raw.output.unwrap_or_else(|| PathBuf::from("results")),
            name,
            kind,
            seeds: raw.seeds,
            family,
            n,
            deg,
            p,
            pools,
            write_diffs: rp.write_diffs,
            mode,
            backend,
            stop,
            mempoolsync,
            y,
            targets,
        };
        s.check_kind()?;
        Ok(s)
    }

    fn check_kind(&self) -> Result<()> {
        let generated = matches!(self.pools, PoolSpec::Generated { .. });
        let psi_given = matches!(&self.pools, PoolSpec::Generated { psi, .. } if !psi.is_empty());
        if self.mempoolsync.is_some() != (self.kind == Kind::MempoolsyncCompare) {
            return invalid("a [mempoolsync] section belongs to mempoolsync_compare and is required there");
        }
        if !self.targets.is_empty() && self.kind != Kind::PsiCalibration {
            return invalid("a [calibration] section belongs to psi_calibration");
        }
        if generated && !self.targets.is_empty() && psi_given {
            return invalid("psi_calibration takes either pools.psi or calibration.targets, not both");
        }
        if self.write_diffs && !generated {
            return invalid("pools.write_diffs needs generated pools");
        }
        match self.kind {
            Kind::ValidateBounds => {
                if generated {
                    return invalid("validate_bounds needs unit pools");
                }
                if self.backend != Backend::Oracle || self.stop != StopCondition::Full {
                    return invalid("validate_bounds needs the oracle backend and full sync");
                }
            }
            Kind::RedundancySweep => {
                if !self.mode.is_parallel() {
                    return invalid("redundancy_sweep needs a parallel mode");
                }
            }
            Kind::PsiCalibration => {
                if !generated {
                    return invalid("psi_calibration needs generated pools");
                }
            }
            Kind::CommAndTime => {
                if self.deg.is_empty() {
                    return invalid("comm_and_time normalizes by the smallest degree and needs watts_strogatz");
                }
            }
            Kind::LargeScale => {
                if !self.mode.is_parallel() || self.backend != Backend::Oracle || self.stop != StopCondition::Full {
                    return invalid("large_scale is analytic: it needs a parallel mode, the oracle backend and full sync");
                }
            }
            Kind::IterVsDiameter | Kind::MempoolsyncCompare => {}
        }
        Ok(())
    }

    /// Sweep points in output order: n, then degree, psi or target, y.
    pub fn points(&self) -> Vec<Point> {
        let degs: Vec<Option<usize>> = if self.deg.is_empty() {
            vec![None]
        } else {
            self.deg.iter().map(|&d| Some(d)).collect()
        };
        let third: Vec<(Option<f64>, Option<f64>)> = match &self.pools {
            _ if !self.targets.is_empty() => self.targets.iter().map(|&t| (None, Some(t))).collect(),
            PoolSpec::Generated { psi, .. } => psi.iter().map(|&x| (Some(x), None)).collect(),
            PoolSpec::Unit => vec![(None, None)],
        };
        let ys: Vec<Option<f64>> = if self.y.is_empty() {
            vec![None]
        } else {
            self.y.iter().map(|&y| Some(y)).collect()
        };
        let mut out = Vec::new();
        for &n in &self.n {
            for &deg in &degs {
                for &(psi, target) in &third {
                    for &y in &ys {
                        out.push(Point { n, deg, psi, y, target });
                    }
                }
            }
        }
        out
    }

    pub fn run_count(&self) -> usize {
        self.points().len() * self.seeds.len()
    }
}
