use std::fmt::Write as _;
use std::path::Path;

use crate::scenario::{Kind, PoolSpec, RunSeeds, Scenario};

fn list<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

/// Human-readable plan for `s`, writing into `out_dir`. Pure.
pub fn describe(s: &Scenario, out_dir: &Path) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "scenario: {} ({})", s.name, s.kind.name());
    let _ = writeln!(
        o,
        "outputs: {} and {}",
        out_dir.join(format!("{}.csv", s.name)).display(),
        out_dir.join(format!("{}_runs.csv", s.name)).display()
    );
    let _ = write!(o, "topology: {:?}, n in {{{}}}", s.family, list(&s.n));
    if !s.deg.is_empty() {
        let _ = write!(o, ", deg in {{{}}}, p = {}", list(&s.deg), s.p);
    }
    o.push('\n');
    match &s.pools {
        PoolSpec::Unit => o.push_str("pools: unit (node i holds transaction i)\n"),
        PoolSpec::Generated { psi, sizes, sampling } => {
            let _ = writeln!(o, "pools: sizes {sizes:?}, sampling {sampling:?}");
            if !psi.is_empty() {
                let _ = writeln!(o, "psi in {{{}}}", list(psi));
            }
        }
    }
    if !s.targets.is_empty() {
        let _ = writeln!(o, "calibration targets: {{{}}}", list(&s.targets));
    }
    if let Some(m) = &s.mempoolsync {
        let _ = writeln!(
            o,
            "mempoolsync: def_tx_to_sync = {}, large_pool_multiplier = {}, y in {{{}}}",
            m.def_tx_to_sync,
            m.large_pool_multiplier,
            list(&s.y)
        );
    }
    if s.kind == Kind::LargeScale {
        o.push_str("engine: bypassed; C and I come from the analytic fixed-point model\n");
    } else if s.kind != Kind::PsiCalibration {
        let _ = writeln!(o, "engine: mode {:?}, backend {:?}, stop {:?}", s.mode, s.backend, s.stop);
    }

    let mut dims = vec![format!("{} n", s.n.len())];
    if !s.deg.is_empty() {
        dims.push(format!("{} deg", s.deg.len()));
    }
    match &s.pools {
        _ if !s.targets.is_empty() => dims.push(format!("{} target", s.targets.len())),
        PoolSpec::Generated { psi, .. } => dims.push(format!("{} psi", psi.len())),
        PoolSpec::Unit => {}
    }
    if !s.y.is_empty() {
        dims.push(format!("{} y", s.y.len()));
    }
    let points = s.points();
    let _ = writeln!(o, "grid: {} = {} points", dims.join(" x "), points.len());
    let _ = writeln!(o, "seeds: {} ({})", s.seeds.len(), list(&s.seeds));
    let _ = writeln!(o, "{} runs", s.run_count());
    o.push_str("seed derivation: seed = derive_seed(master, fnv1a(point)); topology, pools, scores, sketch and calibration seeds are derive_seed(seed, 0..=4)\n");
    if let (Some(p), Some(&m)) = (points.first(), s.seeds.first()) {
        let _ = writeln!(o, "first run: point {p}, master {m} -> seed {}", RunSeeds::new(m, p).seed);
    }
    o
}
