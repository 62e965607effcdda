//! Acceptance criteria, one PASS/FAIL line each. Thresholds are fixed here;
//! the process exits non-zero if any criterion fails.

use std::collections::{BTreeMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng as _;
use sha2::{Digest, Sha256};
use srep::analytic::analytic_run;
use srep::engine::{run, Mode, RunMetrics, StopCondition};
use srep::pools::{generate_assignment, PoolGenParams, Sampling, SizesDistribution};
use srep::reconcile::{iblt_encode, iblt_subtract_decode, sync, Backend, IbltParams};
use srep::seed::{derive_seed, rng};
use srep::{Pool, PoolAssignment, Topology};
use srep_cli::{run_scenario, Scenario};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn oracle(g: &Topology, a: &PoolAssignment, mode: Mode) -> RunMetrics {
    run(g, a, mode, &Backend::Oracle, StopCondition::Full).unwrap()
}

/// Diameter by one breadth-first search per source.
fn bfs_diameter(g: &Topology) -> usize {
    let n = g.node_count();
    let mut best = 0;
    let mut dist = vec![usize::MAX; n];
    let mut q = VecDeque::new();
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        q.push_back(s);
        while let Some(v) = q.pop_front() {
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        let far = *dist.iter().max().unwrap();
        assert!(far != usize::MAX, "disconnected graph");
        best = best.max(far);
    }
    best
}

/// Parsed CSV: header and rows, comment lines skipped.
struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Csv {
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Csv { header, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    fn f64s(&self, name: &str) -> Vec<f64> {
        let k = self.col(name);
        self.rows.iter().map(|r| r[k].parse().unwrap()).collect()
    }
}

fn run_shipped(name: &str, out: &Path) -> PathBuf {
    let s = Scenario::load(scenario_dir().join(format!("{name}.toml"))).unwrap();
    run_scenario(&s, out).unwrap();
    out.join(format!("{}.csv", s.name))
}

fn c1_complete_graphs_sequential() -> Verdict {
    let start = Instant::now();
    let bad: Vec<usize> = (3..=40)
        .filter(|&n| {
            let m = oracle(&Topology::complete(n).unwrap(), &PoolAssignment::unit(n), Mode::ESrep);
            m.c_total_elements != (n * (n - 1)) as u64
        })
        .collect();
    let t = start.elapsed();
    verdict(
        bad.is_empty() && t < Duration::from_secs(1),
        format!("E-SREP on K3..K40: C = n(n-1) for all but {bad:?}; {t:.2?} (limit 1 s)"),
    )
}

fn c2_complete_graphs_parallel() -> Verdict {
    let bad: Vec<usize> = (3..=40)
        .filter(|&n| {
            let m = oracle(&Topology::complete(n).unwrap(), &PoolAssignment::unit(n), Mode::EpSrep);
            m.c_total_elements != (n * (n - 1)) as u64 || m.i_max != 1
        })
        .collect();
    verdict(bad.is_empty(), format!("EP-SREP on K3..K40: I = 1 and C = n(n-1); failures {bad:?}"))
}

/// 200 connected graphs on at most 300 nodes; the flag marks Watts-Strogatz
/// instances.
fn corpus() -> Vec<(Topology, bool)> {
    let mut r = rng(2024);
    let mut out = Vec::new();
    for _ in 0..30 {
        out.push((Topology::path(r.random_range(2..=300)).unwrap(), false));
    }
    for _ in 0..30 {
        out.push((Topology::cycle(r.random_range(3..=300)).unwrap(), false));
    }
    for k in 0..60 {
        out.push((Topology::random_tree(r.random_range(2..=300), derive_seed(1, k)).unwrap(), false));
    }
    let ps = [0.0, 0.1, 0.24, 0.5, 1.0];
    for k in 0..80 {
        let n = r.random_range(12..=300);
        let p = ps[k % ps.len()];
        let deg = if p == 0.0 { 2 * r.random_range(1..=5) } else { 2 * r.random_range(2..=5) };
        out.push((Topology::watts_strogatz(n, deg, p, derive_seed(2, k as u64)).unwrap(), true));
    }
    out
}

fn c3_iterations_equal_diameter(corpus: &[(Topology, bool)]) -> Verdict {
    let start = Instant::now();
    let mut bad = Vec::new();
    for (k, (g, _)) in corpus.iter().enumerate() {
        let m = oracle(g, &PoolAssignment::unit(g.node_count()), Mode::EpSrep);
        let d = bfs_diameter(g);
        if m.i_max != d {
            bad.push(format!("#{k}: I {} vs diameter {d}", m.i_max));
        }
    }
    let t = start.elapsed();
    verdict(
        bad.is_empty() && t < Duration::from_secs(30) && corpus.len() == 200,
        format!("{} graphs, {} mismatches {:?}; {t:.2?} (limit 30 s)", corpus.len(), bad.len(), bad.first()),
    )
}

fn c4_cost_bounds(corpus: &[(Topology, bool)]) -> Verdict {
    let mut violations = Vec::new();
    let mut ws_checked = 0;
    for (k, (g, ws)) in corpus.iter().enumerate() {
        let n = g.node_count() as u64;
        let c = oracle(g, &PoolAssignment::unit(g.node_count()), Mode::EpSrep).c_total_elements;
        if !(n * (n - 1) <= c && c < n * (n * n - 1)) {
            violations.push(format!("#{k}: C {c}, n {n}"));
        }
        if *ws {
            ws_checked += 1;
            let bound = n as f64 * (n as f64 * g.mean_degree() + n as f64 - 1.0);
            if c as f64 >= bound {
                violations.push(format!("#{k}: C {c} >= {bound}"));
            }
        }
    }
    verdict(
        violations.is_empty(),
        format!(
            "n(n-1) <= C < n(n^2-1) on {} graphs, WS bound on {ws_checked}; violations {violations:?}",
            corpus.len()
        ),
    )
}

fn c5_multi_element_within_diameter() -> Verdict {
    let start = Instant::now();
    let psis = [0.355, 0.5, 0.6];
    let degs = [4, 6, 8, 10, 12];
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let g = Topology::watts_strogatz(1000, degs[k as usize % 5], 0.24, derive_seed(5, k)).unwrap();
        let params = PoolGenParams {
            psi: psis[k as usize % 3],
            sizes: SizesDistribution::default(),
            sampling: Sampling::Iid,
            seed: derive_seed(6, k),
        };
        let a = generate_assignment(&g, &params).unwrap();
        let m = oracle(&g, &a, Mode::Srep);
        let d = bfs_diameter(&g);
        worst = worst.max(m.i_max as f64 / d as f64);
        if m.i_max > d {
            bad.push(format!("#{k}: I {} > diameter {d}", m.i_max));
        }
    }
    let t = start.elapsed();
    verdict(
        bad.is_empty() && t < Duration::from_secs(300),
        format!("100 WS graphs (n = 1000): violations {bad:?}; max I/diameter {worst:.3}; {t:.2?} (limit 5 min)"),
    )
}

fn c6_engine_equals_analytic() -> Verdict {
    let mut r = rng(66);
    let mut bad = Vec::new();
    for k in 0..50u64 {
        let n = r.random_range(5..=200);
        let g = match k % 3 {
            0 => Topology::random_tree(n, derive_seed(7, k)).unwrap(),
            1 => Topology::watts_strogatz(n.max(12), 4, 0.24, derive_seed(8, k)).unwrap(),
            _ => Topology::watts_strogatz(n.max(12), 8, 1.0, derive_seed(9, k)).unwrap(),
        };
        let params = PoolGenParams {
            psi: r.random_range(0.2..3.0),
            sizes: SizesDistribution::maxwell_with_mean(r.random_range(5.0..200.0)),
            sampling: if k % 2 == 0 { Sampling::Distinct } else { Sampling::Iid },
            seed: derive_seed(10, k),
        };
        let a = generate_assignment(&g, &params).unwrap();
        let m = oracle(&g, &a, Mode::Srep);
        let an = analytic_run(&g, &a).unwrap();
        if m.c_total_elements != an.c_total_elements || m.i_max != an.i_total {
            bad.push(k);
        }
    }
    verdict(bad.is_empty(), format!("50 random (g, a) pairs, n <= 200: mismatches {bad:?}"))
}

fn c7_redundancy_shape(out: &Path) -> Verdict {
    let csv = Csv::read(&run_shipped("fig3_redundancy", out));
    let deg = csv.f64s("deg");
    let red = csv.f64s("redundant_mean");
    let last = red.len() - 1;
    let argmax = (0..red.len()).max_by(|&a, &b| red[a].total_cmp(&red[b])).unwrap();
    let pass = deg[last] == 99.0 && red[last] == 0.0 && argmax != 0 && argmax != last && red[argmax] > red[0];
    verdict(
        pass,
        format!(
            "redundant at deg 4 = {:.1}, max {:.1} at deg {}, at deg {} = {}",
            red[0], red[argmax], deg[argmax], deg[last], red[last]
        ),
    )
}

fn c8_iterations_below_diameter(out: &Path) -> Verdict {
    let csv = Csv::read(&run_shipped("fig5_iter_vs_diameter", out));
    let (deg, dm, dc) = (csv.f64s("deg"), csv.f64s("diameter_mean"), csv.f64s("diameter_ci"));
    let (im, ic) = (csv.f64s("i100_mean"), csv.f64s("i100_ci"));
    let bad: Vec<f64> = (0..deg.len())
        .filter(|&k| im[k] > dm[k] || im[k] - ic[k] > dm[k] + dc[k])
        .map(|k| deg[k])
        .collect();
    let margin = (0..deg.len()).map(|k| dm[k] - im[k]).fold(f64::INFINITY, f64::min);
    verdict(
        bad.is_empty(),
        format!("{} degrees, i100_mean <= diameter_mean everywhere except {bad:?}; smallest gap {margin:.2}", deg.len()),
    )
}

/// Table II, GB, degree-major over psi = 0.355, 0.5, 0.6.
const TABLE_II_GB: [f64; 21] = [
    1.214397, 3.165879, 4.801665, 2.428649, 6.317304, 9.569259, 3.642738, 9.485572, 14.347242, 4.876714,
    12.649385, 19.135943, 6.065679, 15.804836, 23.886079, 7.294909, 18.966694, 28.672272, 8.465624, 22.156316,
    33.446278,
];

fn c9_large_scale_trends(out: &Path) -> Verdict {
    let start = Instant::now();
    let csv = Csv::read(&run_shipped("table2_large_scale", out));
    let (deg, psi) = (csv.f64s("deg"), csv.f64s("psi"));
    let (gb, iter) = (csv.f64s("c_gb_mean"), csv.f64s("i_total_mean"));
    let mut cell: BTreeMap<(u64, u64), (f64, f64)> = BTreeMap::new();
    for k in 0..deg.len() {
        cell.insert((deg[k] as u64, (psi[k] * 1000.0).round() as u64), (gb[k], iter[k]));
    }
    let degs: Vec<u64> = (4..=28).step_by(4).collect();
    let psis = [355u64, 500, 600];
    let mut fails = Vec::new();
    for &p in &psis {
        for w in degs.windows(2) {
            let (a, b) = (cell[&(w[0], p)], cell[&(w[1], p)]);
            if b.0 <= a.0 {
                fails.push(format!("C not increasing in deg at psi {p}, deg {}", w[1]));
            }
            if b.1 > a.1 {
                fails.push(format!("I increases at psi {p}, deg {}", w[1]));
            }
        }
    }
    for &d in &degs {
        for w in psis.windows(2) {
            if cell[&(d, w[1])].0 <= cell[&(d, w[0])].0 {
                fails.push(format!("C not increasing in psi at deg {d}"));
            }
        }
    }
    let mut worst: f64 = 1.0;
    for (k, &d) in degs.iter().enumerate() {
        for (j, &p) in psis.iter().enumerate() {
            let ratio = cell[&(d, p)].0 / TABLE_II_GB[3 * k + j];
            worst = if (ratio.ln()).abs() > worst.ln().abs() { ratio } else { worst };
            if !(0.1..=10.0).contains(&ratio) {
                fails.push(format!("deg {d} psi {p}: {:.3} GB vs {}", cell[&(d, p)].0, TABLE_II_GB[3 * k + j]));
            }
        }
    }
    verdict(
        fails.is_empty() && cell.len() == 21,
        format!(
            "21 cells; deg 4 psi 0.355 = {:.3} GB (published 1.214); worst ratio to published {worst:.3}; {:.0?}; failures {fails:?}",
            cell[&(4, 355)].0,
            start.elapsed()
        ),
    )
}

fn c10_mempoolsync_trend(out: &Path) -> Verdict {
    let summary = Csv::read(&run_shipped("fig7_mempoolsync", out));
    let (n, y) = (summary.f64s("n"), summary.f64s("y"));
    let (srep, mps) = (summary.f64s("srep_c_bytes_mean"), summary.f64s("mempoolsync_c_bytes_mean"));
    let mut details = Vec::new();
    let mut pass = true;
    let mut ys = y.clone();
    ys.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    for &yv in &ys {
        let idx: Vec<usize> = (0..n.len()).filter(|&k| y[k] == yv).collect();
        let lo = *idx.iter().min_by(|&&a, &&b| n[a].total_cmp(&n[b])).unwrap();
        let hi = *idx.iter().max_by(|&&a, &&b| n[a].total_cmp(&n[b])).unwrap();
        let (gs, gm) = (srep[hi] / srep[lo], mps[hi] / mps[lo]);
        pass &= gs < gm;
        details.push(format!("y {yv}: SREP x{gs:.2} vs MempoolSync x{gm:.2} over n {}..{}", n[lo], n[hi]));
    }
    let runs = Csv::read(&out.join("fig7_mempoolsync_runs.csv"));
    let frac = runs.f64s("mempoolsync_final_fraction");
    let below = frac.iter().filter(|&&f| f < 1.0).count();
    pass &= below as f64 >= 0.95 * frac.len() as f64;
    details.push(format!("MempoolSync below full sync on {below}/{} runs", frac.len()));
    verdict(pass, details.join("; "))
}

fn c11_iblt() -> Verdict {
    let mut successes = 0u64;
    let mut wrong = 0u64;
    let mut per_d = Vec::new();
    for d in 1..=64u64 {
        let cells = IbltParams::default().cells_for(d as usize);
        let mut ok = 0u64;
        for s in 0..1000u64 {
            let seed = derive_seed(d, s);
            let mut r = rng(seed);
            let shared: Vec<u64> = (0..r.random_range(0..100)).map(|_| r.random()).collect();
            let only: Vec<u64> = (0..d).map(|_| r.random()).collect();
            let split = r.random_range(0..=d as usize);
            let a: Pool = shared.iter().chain(&only[..split]).copied().collect();
            let b: Pool = shared.iter().chain(&only[split..]).copied().collect();
            let dec = iblt_subtract_decode(&iblt_encode(&a, cells, 3, seed).unwrap(), &iblt_encode(&b, cells, 3, seed).unwrap())
                .unwrap();
            if dec.success {
                ok += 1;
                let exact = sync(&Backend::Oracle, &a, &b).unwrap();
                if (dec.a_minus_b, dec.b_minus_a) != (exact.d_ab, exact.d_ba) {
                    wrong += 1;
                }
            }
        }
        successes += ok;
        per_d.push(ok);
    }
    let mut empty_ok = 0;
    for s in 0..1000u64 {
        let p: Pool = (0..s % 50).map(|i| derive_seed(s, i)).collect();
        let dec = iblt_subtract_decode(&iblt_encode(&p, 3, 3, s).unwrap(), &iblt_encode(&p, 3, 3, s).unwrap()).unwrap();
        if dec.success && dec.a_minus_b.is_empty() && dec.b_minus_a.is_empty() {
            empty_ok += 1;
        }
    }
    let rate = successes as f64 / 64_000.0;
    let worst = per_d.iter().enumerate().min_by_key(|x| x.1).unwrap();
    let sample: Vec<String> = [1, 2, 3, 4, 8, 16, 32, 64].iter().map(|&d| format!("d{d}:{}", per_d[d - 1])).collect();
    verdict(
        rate >= 0.95 && wrong == 0 && empty_ok == 1000,
        format!(
            "success {:.2}% (need >= 95%) at max(ceil(1.5 d), 3) cells, 3 hashes; worst d = {} ({}/1000); per-d {}; wrong decodes {wrong}; empty {empty_ok}/1000",
            100.0 * rate,
            worst.0 + 1,
            worst.1,
            sample.join(" ")
        ),
    )
}

fn digests(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "csv") {
            let bytes = std::fs::read(&p).unwrap();
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), Sha256::digest(&bytes).to_vec());
        }
    }
    out
}

fn c12_determinism(first: &Path, second: &Path) -> Verdict {
    let mut names = Vec::new();
    for e in std::fs::read_dir(scenario_dir()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            names.push(p.file_stem().unwrap().to_string_lossy().into_owned());
        }
    }
    names.sort();
    for name in &names {
        if !first.join(format!("{name}.csv")).exists() {
            run_shipped(name, first);
        }
        run_shipped(name, second);
    }
    let (a, b) = (digests(first), digests(second));
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    verdict(
        !a.is_empty() && a.len() == b.len() && differing.is_empty(),
        format!("{} scenarios, {} CSVs compared by SHA-256; differing {differing:?}", names.len(), a.len()),
    )
}

fn main() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let (a, b) = (first.path(), second.path());
    let corpus = corpus();

    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("complete graphs, sequential cost", Box::new(c1_complete_graphs_sequential)),
        ("complete graphs, parallel cost and iterations", Box::new(c2_complete_graphs_parallel)),
        ("unit-pool iterations equal the diameter", Box::new(|| c3_iterations_equal_diameter(&corpus))),
        ("unit-pool cost bounds", Box::new(|| c4_cost_bounds(&corpus))),
        ("multi-element iterations within the diameter", Box::new(c5_multi_element_within_diameter)),
        ("engine and analytic model agree", Box::new(c6_engine_equals_analytic)),
        ("redundancy over degree is unimodal to zero", Box::new(|| c7_redundancy_shape(a))),
        ("iterations below diameter, n = 1000 sweep", Box::new(|| c8_iterations_below_diameter(a))),
        ("10,000-node trends and magnitudes", Box::new(|| c9_large_scale_trends(a))),
        ("SREP grows slower than MempoolSync", Box::new(|| c10_mempoolsync_trend(a))),
        ("IBLT decoding at 1.5 cells per difference", Box::new(c11_iblt)),
        ("scenario re-runs are byte-identical", Box::new(|| c12_determinism(a, b))),
    ];

    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!("{} criterion {:>2}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, k + 1, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
