//! Runs a scenario's sweep × seeds grid and writes its CSVs.
//!
//! Every experiment writes two files into the output directory:
//!
//! - `<name>_runs.csv`: one row per run, keyed by the sweep point and the
//!   seed that produced it.
//! - `<name>.csv`: one row per sweep point with the mean and 95% confidence
//!   half-width of every metric, and the seeds of the runs it aggregates.
//!
//! Rows follow sweep order whatever order the runs finish in.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use srep::analytic::{analytic_run, ep_srep_bounds};
use srep::baseline::{run_mempoolsync, MempoolSyncParams};
use srep::engine::{run, RunMetrics};
use srep::pools::{calibrate_psi, empirical_diff_distribution, generate_assignment, DiffDistribution, PoolGenParams};
use srep::reconcile::{Backend, IbltParams};
use srep::{PoolAssignment, Topology};

use crate::error::{CliError, Result};
use crate::scenario::{Family, Kind, Point, PoolSpec, RunSeeds, Scenario};
use crate::table::{mean_ci, Cell, Table};

struct Metric {
    name: &'static str,
    doc: &'static str,
    integer: bool,
}

const fn int(name: &'static str, doc: &'static str) -> Metric {
    Metric { name, doc, integer: true }
}

const fn real(name: &'static str, doc: &'static str) -> Metric {
    Metric { name, doc, integer: false }
}

const DIAMETER: Metric = int("diameter", "longest shortest path of the topology");
const OK: Metric = int("ok", "1 if every checked property held for this run, else 0");

fn metrics(s: &Scenario) -> Vec<Metric> {
    match s.kind {
        Kind::ValidateBounds => vec![
            DIAMETER,
            int("i100", "iterations to full sync"),
            int("c_elements", "total elements exchanged"),
            int("sigma", "primal syncs invoked"),
            int("t_total", "elapsed time in cost units"),
            int("lower_c", "n(n-1)"),
            int("upper_c", "n(n^2-1)"),
            real("ws_upper_c", "n(n*deg+n-1) on Watts-Strogatz graphs, nan otherwise"),
            OK,
        ],
        Kind::RedundancySweep => vec![
            DIAMETER,
            int("i100", "iterations to full sync"),
            int("c_elements", "total elements exchanged"),
            int("redundant", "deliveries of elements the receiver already had or received twice"),
        ],
        Kind::PsiCalibration if !s.targets.is_empty() => vec![
            real("psi", "psi found by calibration"),
            real("mean_diff", "mean edge difference at that psi, averaged over the calibration assignments"),
        ],
        Kind::PsiCalibration => vec![
            int("universe", "universe size ceil(psi * E[size])"),
            real("mean_diff", "mean |Si xor Sj| over edges"),
            real("median_diff", "median edge difference"),
            real("q1_diff", "first quartile of edge differences"),
            real("q3_diff", "third quartile of edge differences"),
            int("min_diff", "smallest edge difference"),
            int("max_diff", "largest edge difference"),
        ],
        Kind::IterVsDiameter => vec![DIAMETER, int("i100", "iterations to full sync"), OK],
        Kind::CommAndTime => vec![
            int("c_elements", "total elements exchanged"),
            int("c_bytes", "total bytes exchanged"),
            int("t_total", "elapsed time in cost units"),
            int("i100", "iterations to full sync"),
            int("sigma", "primal syncs invoked"),
        ],
        Kind::MempoolsyncCompare => vec![
            int("srep_i100", "iterations SREP needs for full sync"),
            int("rounds", "MempoolSync rounds run: max(srep_i100, 1)"),
            int("srep_c_bytes", "SREP bytes to full sync"),
            int("mempoolsync_c_bytes", "MempoolSync bytes accumulated over the same number of rounds"),
            real("mempoolsync_final_fraction", "fraction of pools equal to the union after the last round"),
        ],
        Kind::LargeScale => vec![
            DIAMETER,
            int("i_total", "iterations to full sync"),
            int("c_elements", "total elements exchanged"),
            int("c_bytes", "total bytes exchanged"),
            real("c_gb", "c_bytes / 1e9"),
        ],
    }
}

struct RunOutput {
    values: Vec<f64>,
    violation: Option<String>,
    diffs: Option<DiffDistribution>,
}

fn topology(s: &Scenario, p: &Point, seeds: &RunSeeds) -> srep::Result<Topology> {
    let n = p.n;
    match s.family {
        Family::WattsStrogatz => {
            let deg = p.deg.expect("degree sweep");
            if deg >= n - 1 {
                Topology::complete(n)
            } else {
                Topology::watts_strogatz(n, deg, s.p, seeds.topology())
            }
        }
        Family::Complete => Topology::complete(n),
        Family::Cycle => Topology::cycle(n),
        Family::Path => Topology::path(n),
        Family::RandomTree => Topology::random_tree(n, seeds.topology()),
    }
}

fn pool_params(s: &Scenario, psi: f64, seeds: &RunSeeds) -> PoolGenParams {
    match &s.pools {
        PoolSpec::Generated { sizes, sampling, .. } => PoolGenParams {
            psi,
            sizes: sizes.clone(),
            sampling: *sampling,
            seed: seeds.pools(),
        },
        PoolSpec::Unit => unreachable!("unit pools have no generation parameters"),
    }
}

fn assignment(s: &Scenario, p: &Point, g: &Topology, seeds: &RunSeeds) -> srep::Result<PoolAssignment> {
    match s.pools {
        PoolSpec::Unit => Ok(PoolAssignment::unit(g.node_count())),
        PoolSpec::Generated { .. } => generate_assignment(g, &pool_params(s, p.psi.expect("psi sweep"), seeds)),
    }
}

fn backend(s: &Scenario, seeds: &RunSeeds) -> Backend {
    match s.backend {
        Backend::Oracle => Backend::Oracle,
        Backend::Iblt(p) => Backend::Iblt(IbltParams { seed: seeds.sketch(), ..p }),
    }
}

fn engine(s: &Scenario, g: &Topology, a: &PoolAssignment, seeds: &RunSeeds) -> srep::Result<RunMetrics> {
    run(g, a, s.mode, &backend(s, seeds), s.stop)
}

fn run_one(s: &Scenario, p: &Point, seeds: &RunSeeds) -> Result<RunOutput> {
    let g = topology(s, p, seeds)?;
    let mut violation = None;
    let mut diffs = None;
    let values = match s.kind {
        Kind::ValidateBounds => {
            let a = PoolAssignment::unit(g.node_count());
            let m = engine(s, &g, &a, seeds)?;
            let d = g.diameter()?;
            let b = ep_srep_bounds(&g)?;
            let c = m.c_total_elements;
            let ws = s.family == Family::WattsStrogatz && !g.is_complete();
            let mut failed = Vec::new();
            if c < b.lower_c {
                failed.push(format!("C = {c} < n(n-1) = {}", b.lower_c));
            }
            if g.is_complete() && c != b.lower_c {
                failed.push(format!("C = {c} != n(n-1) = {} on a complete graph", b.lower_c));
            }
            if s.mode.is_parallel() {
                if c >= b.upper_c {
                    failed.push(format!("C = {c} >= n(n^2-1) = {}", b.upper_c));
                }
                if ws && c as f64 >= b.ws_upper_c {
                    failed.push(format!("C = {c} >= n(n*deg+n-1) = {}", b.ws_upper_c));
                }
                if m.i_max != d {
                    failed.push(format!("I = {} != diameter {d}", m.i_max));
                }
            } else if m.i_max > d {
                failed.push(format!("I = {} > diameter {d}", m.i_max));
            }
            let ok = failed.is_empty();
            if !ok {
                violation = Some(failed.join("; "));
            }
            vec![
                d as f64,
                m.i_max as f64,
                c as f64,
                m.sigma_syncs as f64,
                m.t_total as f64,
                b.lower_c as f64,
                b.upper_c as f64,
                if ws { b.ws_upper_c } else { f64::NAN },
                ok as u8 as f64,
            ]
        }
        Kind::RedundancySweep => {
            let a = assignment(s, p, &g, seeds)?;
            let m = engine(s, &g, &a, seeds)?;
            vec![
                g.diameter()? as f64,
                m.i_max as f64,
                m.c_total_elements as f64,
                m.redundant_transmissions as f64,
            ]
        }
        Kind::PsiCalibration => match (&s.pools, p.target) {
            (PoolSpec::Generated { sizes, sampling, .. }, Some(target)) => {
                let cal = calibrate_psi(&g, sizes, *sampling, target, seeds.calibration())?;
                vec![cal.psi, cal.mean_diff]
            }
            _ => {
                let params = pool_params(s, p.psi.expect("psi sweep"), seeds);
                let a = generate_assignment(&g, &params)?;
                let dist = empirical_diff_distribution(&g, &a)?;
                let sm = dist.summary();
                let out = vec![
                    params.universe_size()? as f64,
                    sm.mean,
                    sm.median,
                    sm.q1,
                    sm.q3,
                    sm.min as f64,
                    sm.max as f64,
                ];
                if s.write_diffs {
                    diffs = Some(dist);
                }
                out
            }
        },
        Kind::IterVsDiameter => {
            let a = assignment(s, p, &g, seeds)?;
            let m = engine(s, &g, &a, seeds)?;
            let d = g.diameter()?;
            let ok = m.i_max <= d;
            if !ok {
                violation = Some(format!("I = {} > diameter {d}", m.i_max));
            }
            vec![d as f64, m.i_max as f64, ok as u8 as f64]
        }
        Kind::CommAndTime => {
            let a = assignment(s, p, &g, seeds)?;
            let m = engine(s, &g, &a, seeds)?;
            vec![
                m.c_total_elements as f64,
                m.c_total_bytes as f64,
                m.t_total as f64,
                m.i_max as f64,
                m.sigma_syncs as f64,
            ]
        }
        Kind::MempoolsyncCompare => {
            let a = assignment(s, p, &g, seeds)?;
            let m = engine(s, &g, &a, seeds)?;
            let rounds = m.i_max.max(1);
            let params = MempoolSyncParams {
                y: p.y.expect("y sweep"),
                ..s.mempoolsync.expect("mempoolsync section")
            };
            let out = run_mempoolsync(&g, &a, &params, rounds, seeds.scores())?;
            vec![
                m.i_max as f64,
                rounds as f64,
                m.c_total_bytes as f64,
                out.c_bytes as f64,
                out.final_sync_fraction,
            ]
        }
        Kind::LargeScale => {
            let a = assignment(s, p, &g, seeds)?;
            let r = analytic_run(&g, &a)?;
            vec![
                g.diameter()? as f64,
                r.i_total as f64,
                r.c_total_elements as f64,
                r.c_total_bytes as f64,
                r.c_total_bytes as f64 / 1e9,
            ]
        }
    };
    Ok(RunOutput { values, violation, diffs })
}

/// Key columns shared by both tables.
fn key_columns(s: &Scenario, t: &mut Table) {
    t.column("n", "node count");
    if !s.deg.is_empty() {
        t.column("deg", "requested mean degree; values >= n-1 use the complete graph");
    }
    if !s.targets.is_empty() {
        t.column("target", "requested mean edge difference");
    } else if matches!(s.pools, PoolSpec::Generated { .. }) {
        t.column("psi", "universe scaling: u = ceil(psi * E[size])");
    }
    if !s.y.is_empty() {
        t.column("y", "MempoolSync large-pool batch fraction");
    }
}

fn key_cells(p: &Point) -> Vec<Cell> {
    let mut v = vec![Cell::from(p.n)];
    if let Some(d) = p.deg {
        v.push(d.into());
    }
    if let Some(x) = p.target.or(p.psi) {
        v.push(Cell::Text(x.to_string()));
    }
    if let Some(y) = p.y {
        v.push(Cell::Text(y.to_string()));
    }
    v
}

fn preamble(s: &Scenario, t: &mut Table, what: &str) {
    t.note(format!("{} {what}: {}", s.kind.name(), s.name));
    t.note(format!("mode = {:?}, backend = {:?}, stop = {:?}", s.mode, s.backend, s.stop));
    match &s.pools {
        PoolSpec::Unit => t.note("pools: node i holds transaction i"),
        PoolSpec::Generated { sizes, sampling, .. } => t.note(format!("pools: sizes {sizes:?}, sampling {sampling:?}")),
    };
    if s.family == Family::WattsStrogatz {
        t.note(format!("topology: watts_strogatz, p = {}", s.p));
    } else {
        t.note(format!("topology: {:?}", s.family));
    }
    t.note("seed = derive_seed(master_seed, fnv1a(point)), point as in describe");
}

fn runs_table(s: &Scenario, ms: &[Metric], points: &[Point], jobs: &[(usize, RunSeeds)], outs: &[RunOutput]) -> Table {
    let mut t = Table::new();
    preamble(s, &mut t, "runs");
    key_columns(s, &mut t);
    t.column("master_seed", "replicate seed from the scenario's seeds list");
    t.column("seed", "seed of this run; topology, pool and sketch seeds derive from it");
    for m in ms {
        t.column(m.name, m.doc);
    }
    for ((pi, rs), out) in jobs.iter().zip(outs) {
        let mut row = key_cells(&points[*pi]);
        row.push(rs.master.into());
        row.push(rs.seed.into());
        for (m, &v) in ms.iter().zip(&out.values) {
            row.push(if m.integer { Cell::Int(v as u64) } else { Cell::Float(v) });
        }
        t.push(row);
    }
    t
}

struct Aggregate {
    mean: Vec<f64>,
    ci: Vec<f64>,
    violations: usize,
    seeds: Vec<u64>,
}

fn aggregate(ms: &[Metric], points: &[Point], jobs: &[(usize, RunSeeds)], outs: &[RunOutput]) -> Vec<Aggregate> {
    (0..points.len())
        .map(|pi| {
            let runs: Vec<(&RunSeeds, &RunOutput)> =
                jobs.iter().zip(outs).filter(|((i, _), _)| *i == pi).map(|((_, r), o)| (r, o)).collect();
            let (mean, ci) = (0..ms.len())
                .map(|k| mean_ci(&runs.iter().map(|(_, o)| o.values[k]).collect::<Vec<_>>()))
                .unzip();
            Aggregate {
                mean,
                ci,
                violations: runs.iter().filter(|(_, o)| o.violation.is_some()).count(),
                seeds: runs.iter().map(|(r, _)| r.seed).collect(),
            }
        })
        .collect()
}

fn metric_index(ms: &[Metric], name: &str) -> usize {
    ms.iter().position(|m| m.name == name).expect("metric")
}

/// Same sweep point apart from the degree.
fn same_but_degree(a: &Point, b: &Point) -> bool {
    a.n == b.n && a.psi == b.psi && a.y == b.y && a.target == b.target
}

/// Same sweep point apart from the node count.
fn same_but_n(a: &Point, b: &Point) -> bool {
    a.deg == b.deg && a.psi == b.psi && a.y == b.y && a.target == b.target
}

fn summary_table(s: &Scenario, ms: &[Metric], points: &[Point], aggs: &[Aggregate]) -> Table {
    let mut t = Table::new();
    preamble(s, &mut t, "summary");
    t.note("*_mean: sample mean over seeds; *_ci: half-width of the two-sided 95% Student-t interval (0 for one seed)");
    let checked = matches!(s.kind, Kind::ValidateBounds | Kind::IterVsDiameter);

    let mut rel = None;
    if s.kind == Kind::CommAndTime {
        t.note("rel_*: mean divided by the mean at the smallest degree with the same n and psi");
        rel = Some((metric_index(ms, "c_bytes"), metric_index(ms, "t_total")));
    }
    if s.kind == Kind::MempoolsyncCompare {
        let (sc, mc) = (metric_index(ms, "srep_c_bytes"), metric_index(ms, "mempoolsync_c_bytes"));
        let mut seen: Vec<usize> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            if seen.iter().any(|&j| same_but_n(&points[j], p)) {
                continue;
            }
            seen.push(i);
            let mut group: Vec<usize> = (0..points.len()).filter(|&j| same_but_n(&points[j], p)).collect();
            group.sort_by_key(|&j| points[j].n);
            // Smallest n from which SREP stays at or below MempoolSync.
            let mut crossover = None;
            for &j in group.iter().rev() {
                if aggs[j].mean[sc] <= aggs[j].mean[mc] {
                    crossover = Some(points[j].n);
                } else {
                    break;
                }
            }
            let full = p.to_string();
            let label = full.split(';').skip(1).collect::<Vec<_>>().join(";");
            let at = crossover.map_or("none".to_string(), |n| n.to_string());
            t.note(format!("crossover_n [{label}] = {at}"));
        }
    }

    key_columns(s, &mut t);
    t.column("runs", "seeds aggregated");
    for m in ms {
        t.column(format!("{}_mean", m.name), m.doc);
        t.column(format!("{}_ci", m.name), format!("95% half-width of {}", m.name));
    }
    if rel.is_some() {
        t.column("rel_c", "c_bytes_mean relative to the smallest degree");
        t.column("rel_t", "t_total_mean relative to the smallest degree");
    }
    if checked {
        t.column("violations", "runs where a checked property failed");
    }
    t.column("seeds", "run seeds, ';'-separated");

    for (i, (p, a)) in points.iter().zip(aggs).enumerate() {
        let mut row = key_cells(p);
        row.push(a.seeds.len().into());
        for k in 0..ms.len() {
            row.push(a.mean[k].into());
            row.push(a.ci[k].into());
        }
        if let Some((c, tt)) = rel {
            let base = (0..points.len())
                .filter(|&j| same_but_degree(&points[j], p))
                .min_by_key(|&j| points[j].deg)
                .unwrap_or(i);
            row.push((a.mean[c] / aggs[base].mean[c]).into());
            row.push((a.mean[tt] / aggs[base].mean[tt]).into());
        }
        if checked {
            row.push(a.violations.into());
        }
        let seeds: Vec<String> = a.seeds.iter().map(u64::to_string).collect();
        row.push(Cell::Text(seeds.join(";")));
        t.push(row);
    }
    t
}

fn diffs_file_name(p: &Point, seed: u64) -> String {
    let stem: String = p.to_string().chars().filter(|c| *c != '=').map(|c| if c == ';' { '_' } else { c }).collect();
    format!("{stem}_seed{seed}.csv")
}

/// Runs `s`, writing into `out_dir`. Returns the files written.
///
/// If any run violates a checked property the CSVs are still written and
/// a [`CliError::CheckFailed`] follows.
pub fn run_scenario(s: &Scenario, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let points = s.points();
    let jobs: Vec<(usize, RunSeeds)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, p)| s.seeds.iter().map(move |&m| (i, RunSeeds::new(m, p))))
        .collect();
    let outs: Vec<RunOutput> = jobs
        .par_iter()
        .map(|(i, rs)| {
            run_one(s, &points[*i], rs).map_err(|e| match e {
                CliError::Invariant(m) => CliError::Invariant(format!("{} seed {}: {m}", points[*i], rs.seed)),
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    let ms = metrics(s);
    let mut files = Vec::new();
    let runs_path = out_dir.join(format!("{}_runs.csv", s.name));
    runs_table(s, &ms, &points, &jobs, &outs).write(&runs_path)?;
    files.push(runs_path);
    let aggs = aggregate(&ms, &points, &jobs, &outs);
    let path = out_dir.join(format!("{}.csv", s.name));
    summary_table(s, &ms, &points, &aggs).write(&path)?;
    files.push(path);

    for ((pi, rs), out) in jobs.iter().zip(&outs) {
        if let Some(d) = &out.diffs {
            let path = out_dir.join(format!("{}_diffs", s.name)).join(diffs_file_name(&points[*pi], rs.seed));
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            std::fs::write(&path, d.to_csv()).map_err(|e| CliError::io(&path, e))?;
            files.push(path);
        }
    }

    let failed: Vec<String> = jobs
        .iter()
        .zip(&outs)
        .filter_map(|((pi, rs), o)| o.violation.as_ref().map(|v| format!("{} seed {}: {v}", points[*pi], rs.seed)))
        .collect();
    if let Some(first) = failed.first() {
        return Err(CliError::CheckFailed(format!("{} of {} runs; first: {first}", failed.len(), jobs.len())));
    }
    Ok(files)
}
