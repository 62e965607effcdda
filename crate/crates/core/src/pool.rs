//! Transaction ids, pools, pool assignments and the mutual differences
//! matrix.
//!
//! A [`Pool`] is the public, value-level view of one node's set of
//! transactions. A [`PoolAssignment`] holds the pools of every node in a
//! network; internally it stores them as bitsets over a shared universe of
//! ids, which keeps 10k-node assignments with ~10⁴-element pools within a
//! few tens of megabytes.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::bits::{xor_count, Bits};
use crate::topology::Topology;
use crate::{Error, Result};

/// Globally unique transaction identifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxId(pub u64);

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for TxId {
    fn from(v: u64) -> Self {
        TxId(v)
    }
}

/// One node's transaction pool. Elements are kept sorted and unique.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Pool {
    elems: Vec<TxId>,
}

impl Pool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, tx: TxId) -> bool {
        self.elems.binary_search(&tx).is_ok()
    }

    /// Inserts `tx`, returning whether it was absent.
    pub fn insert(&mut self, tx: TxId) -> bool {
        match self.elems.binary_search(&tx) {
            Ok(_) => false,
            Err(pos) => {
                self.elems.insert(pos, tx);
                true
            }
        }
    }

    /// Elements in ascending order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = TxId> + '_ {
        self.elems.iter().copied()
    }

    pub fn as_slice(&self) -> &[TxId] {
        &self.elems
    }

    /// `self \ other`
    pub fn difference(&self, other: &Pool) -> Pool {
        Pool {
            elems: self.elems.iter().copied().filter(|x| !other.contains(*x)).collect(),
        }
    }

    pub fn union(&self, other: &Pool) -> Pool {
        let mut elems = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.elems.len() && j < other.elems.len() {
            let (a, b) = (self.elems[i], other.elems[j]);
            if a <= b {
                elems.push(a);
                i += 1;
                if a == b {
                    j += 1;
                }
            } else {
                elems.push(b);
                j += 1;
            }
        }
        elems.extend_from_slice(&self.elems[i..]);
        elems.extend_from_slice(&other.elems[j..]);
        Pool { elems }
    }
}

impl FromIterator<TxId> for Pool {
    fn from_iter<I: IntoIterator<Item = TxId>>(iter: I) -> Self {
        let mut elems: Vec<TxId> = iter.into_iter().collect();
        elems.sort_unstable();
        elems.dedup();
        Pool { elems }
    }
}

impl FromIterator<u64> for Pool {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        iter.into_iter().map(TxId).collect()
    }
}

impl<const N: usize> From<[u64; N]> for Pool {
    fn from(ids: [u64; N]) -> Self {
        ids.into_iter().collect()
    }
}

/// Splits `a ⊕ b` into the part held by `a` and the part held by `b`.
///
/// Returns `(a \ b, b \ a)`.
pub fn symmetric_difference(a: &Pool, b: &Pool) -> (Pool, Pool) {
    let (mut ab, mut ba) = (Vec::new(), Vec::new());
    let (x, y) = (a.as_slice(), b.as_slice());
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => {
                ab.push(x[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                ba.push(y[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    ab.extend_from_slice(&x[i..]);
    ba.extend_from_slice(&y[j..]);
    (Pool { elems: ab }, Pool { elems: ba })
}

/// The pools of every node, indexed by node id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolAssignment {
    /// Sorted, unique. Bit `k` of a row stands for `universe[k]`.
    universe: Vec<TxId>,
    rows: Vec<Bits>,
}

impl PoolAssignment {
    pub fn from_pools(pools: &[Pool]) -> Self {
        let universe: Vec<TxId> = pools
            .iter()
            .flat_map(|p| p.iter())
            .collect::<Pool>()
            .elems;
        let rows = pools
            .iter()
            .map(|p| {
                let mut row = Bits::with_capacity(universe.len());
                for tx in p.iter() {
                    let k = universe.binary_search(&tx).expect("id in universe");
                    row.insert(k);
                }
                row
            })
            .collect();
        PoolAssignment { universe, rows }
    }

    /// Pools drawn from the dense universe `{0, .., u - 1}`, given as bitsets.
    pub(crate) fn from_dense(universe_size: usize, rows: Vec<Bits>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == universe_size));
        PoolAssignment {
            universe: (0..universe_size as u64).map(TxId).collect(),
            rows,
        }
    }

    /// Node `i` holds exactly transaction `i`.
    pub fn unit(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut row = Bits::with_capacity(n);
                row.insert(i);
                row
            })
            .collect();
        Self::from_dense(n, rows)
    }

    /// Every node holds the same pool.
    pub fn uniform(n: usize, pool: &Pool) -> Self {
        Self::from_pools(&vec![pool.clone(); n])
    }

    /// Number of pools (nodes).
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn pool(&self, node: usize) -> Pool {
        Pool {
            elems: self.rows[node].ones().map(|k| self.universe[k]).collect(),
        }
    }

    pub fn pools(&self) -> Vec<Pool> {
        (0..self.len()).map(|i| self.pool(i)).collect()
    }

    pub fn pool_len(&self, node: usize) -> usize {
        self.rows[node].count_ones(..)
    }

    pub fn contains(&self, node: usize, tx: TxId) -> bool {
        self.universe
            .binary_search(&tx)
            .map(|k| self.rows[node].contains(k))
            .unwrap_or(false)
    }

    /// All ids any node may hold.
    pub fn universe(&self) -> &[TxId] {
        &self.universe
    }

    /// Size of `∪ᵢ Sᵢ`.
    pub fn union_len(&self) -> usize {
        union_of(&self.rows, self.universe.len()).count_ones(..)
    }

    pub(crate) fn rows(&self) -> &[Bits] {
        &self.rows
    }

    pub(crate) fn with_rows(&self, rows: Vec<Bits>) -> Self {
        PoolAssignment {
            universe: self.universe.clone(),
            rows,
        }
    }

    pub(crate) fn check_matches(&self, g: &Topology) -> Result<()> {
        if self.len() != g.node_count() {
            return Err(Error::LengthMismatch {
                pools: self.len(),
                nodes: g.node_count(),
            });
        }
        Ok(())
    }
}

pub(crate) fn union_of(rows: &[Bits], width: usize) -> Bits {
    let mut all = Bits::with_capacity(width);
    for r in rows {
        all.union_with(r);
    }
    all
}

/// Upper-triangular `|Sᵢ ⊕ Sⱼ|` over the edges `(i, j)`, `i < j`.
///
/// Every edge has an entry, possibly zero. Non-edges have none and read as 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiffMatrix {
    entries: BTreeMap<(usize, usize), u64>,
}

impl DiffMatrix {
    /// Entry for the unordered pair `{i, j}`; zero for non-edges.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.entries.get(&key).copied().unwrap_or(0)
    }

    pub fn is_defined(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.entries.contains_key(&key)
    }

    /// `(i, j, |Sᵢ ⊕ Sⱼ|)` in ascending `(i, j)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum(&self) -> u64 {
        self.entries.values().sum()
    }
}

pub fn diff_matrix(g: &Topology, a: &PoolAssignment) -> Result<DiffMatrix> {
    a.check_matches(g)?;
    let rows = a.rows();
    let entries = g
        .edges()
        .map(|(i, j)| ((i, j), xor_count(&rows[i], &rows[j])))
        .collect();
    Ok(DiffMatrix { entries })
}

/// Sum of the mutual differences matrix.
pub fn f_total(g: &Topology, a: &PoolAssignment) -> Result<u64> {
    a.check_matches(g)?;
    Ok(edge_diff_sum(g, a.rows()))
}

pub(crate) fn edge_diff_sum(g: &Topology, rows: &[Bits]) -> u64 {
    g.edge_list()
        .par_iter()
        .map(|&(i, j)| xor_count(&rows[i], &rows[j]))
        .sum()
}

/// Fraction of nodes whose pool equals the union of all pools.
///
/// On a connected graph this is 1 exactly when [`f_total`] is 0.
pub fn sync_fraction(a: &PoolAssignment) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let target = a.union_len();
    synced_count(a.rows(), target) as f64 / a.len() as f64
}

/// Pools only grow from a fixed union, so equality with the union reduces
/// to a size comparison.
pub(crate) fn synced_count(rows: &[Bits], union_len: usize) -> usize {
    rows.iter().filter(|r| r.count_ones(..) == union_len).count()
}
