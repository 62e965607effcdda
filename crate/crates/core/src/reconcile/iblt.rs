//! Invertible Bloom lookup tables over transaction ids.
//!
//! Each id is added to `hash_count` distinct cells. A cell keeps a signed
//! count, the XOR of the ids it holds and the XOR of a 32-bit check hash of
//! those ids. Subtracting the sketch of `b` from the sketch of `a` leaves a
//! sketch of `a ⊕ b` (elements of `a \ b` with count +1, of `b \ a` with
//! count −1), which is decoded by repeatedly peeling pure cells.

use crate::pool::{Pool, TxId};
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Wire size of one cell: 4-byte count, 8-byte id sum, 4-byte check sum.
pub const CELL_BYTES: u64 = 16;

const CHECK_KEY: u64 = 0x0c4e_c5a1_7e11_b0b5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Cell {
    pub count: i32,
    pub id_sum: u64,
    pub check_sum: u32,
}

impl Cell {
    fn is_zero(&self) -> bool {
        self.count == 0 && self.id_sum == 0 && self.check_sum == 0
    }

    fn toggle(&mut self, id: u64, check: u32, sign: i32) {
        self.count += sign;
        self.id_sum ^= id;
        self.check_sum ^= check;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IbltSketch {
    cells: Vec<Cell>,
    hash_count: usize,
    seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub a_minus_b: Pool,
    pub b_minus_a: Pool,
    /// Whether every cell was drained. On failure the sets hold whatever was
    /// peeled before decoding stalled.
    pub success: bool,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    z = (z ^ (z >> 33)).wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    z ^ (z >> 33)
}

impl IbltSketch {
    pub fn new(cell_count: usize, hash_count: usize, seed: u64) -> Result<Self> {
        if hash_count == 0 {
            return Err(Error::param("hash count must be positive"));
        }
        if cell_count < hash_count {
            return Err(Error::param(format!(
                "{cell_count} cells cannot hold {hash_count} distinct hashes"
            )));
        }
        Ok(IbltSketch {
            cells: vec![Cell::default(); cell_count],
            hash_count,
            seed,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn hash_count(&self) -> usize {
        self.hash_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn byte_size(&self) -> u64 {
        self.cells.len() as u64 * CELL_BYTES
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(Cell::is_zero)
    }

    fn check(&self, id: u64) -> u32 {
        (mix(id ^ derive_seed(self.seed, CHECK_KEY)) >> 32) as u32
    }

    /// The `hash_count` distinct cells `id` maps to.
    fn positions(&self, id: u64) -> impl Iterator<Item = usize> {
        let m = self.cells.len() as u64;
        let k = self.hash_count;
        let base = mix(id ^ self.seed);
        let mut salt = 0u64;
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let h = mix(base.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            salt += 1;
            let pos = (((h as u128) * (m as u128)) >> 64) as usize;
            if !out.contains(&pos) {
                out.push(pos);
            }
        }
        out.into_iter()
    }

    fn apply(&mut self, tx: TxId, sign: i32) {
        let check = self.check(tx.0);
        for pos in self.positions(tx.0) {
            self.cells[pos].toggle(tx.0, check, sign);
        }
    }

    pub fn insert(&mut self, tx: TxId) {
        self.apply(tx, 1);
    }

    pub fn remove(&mut self, tx: TxId) {
        self.apply(tx, -1);
    }

    fn check_compatible(&self, other: &IbltSketch) -> Result<()> {
        if self.cells.len() != other.cells.len() {
            return Err(Error::SketchMismatch(format!(
                "cell counts differ: {} vs {}",
                self.cells.len(),
                other.cells.len()
            )));
        }
        if self.hash_count != other.hash_count {
            return Err(Error::SketchMismatch(format!(
                "hash counts differ: {} vs {}",
                self.hash_count, other.hash_count
            )));
        }
        if self.seed != other.seed {
            return Err(Error::SketchMismatch("hash seeds differ".into()));
        }
        Ok(())
    }

    /// Cell-wise `self − other`.
    pub fn subtract(&self, other: &IbltSketch) -> Result<IbltSketch> {
        self.check_compatible(other)?;
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| Cell {
                count: a.count - b.count,
                id_sum: a.id_sum ^ b.id_sum,
                check_sum: a.check_sum ^ b.check_sum,
            })
            .collect();
        Ok(IbltSketch { cells, ..self.clone() })
    }

    /// Peels a difference sketch. Positive elements belong to the minuend.
    pub fn decode(mut self) -> Decoded {
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        let mut stack: Vec<usize> = (0..self.cells.len()).collect();
        // Each genuine element is peeled once; the bound stops runaway
        // peeling on checksum collisions.
        let mut budget = self.cells.len() * self.hash_count + self.cells.len();
        while let Some(pos) = stack.pop() {
            let cell = self.cells[pos];
            if cell.count.abs() != 1 || self.check(cell.id_sum) != cell.check_sum {
                continue;
            }
            let id = cell.id_sum;
            let positions: Vec<usize> = self.positions(id).collect();
            if !positions.contains(&pos) {
                continue;
            }
            if budget == 0 {
                break;
            }
            budget -= 1;
            let sign = cell.count;
            let check = cell.check_sum;
            for &p in &positions {
                self.cells[p].toggle(id, check, -sign);
                stack.push(p);
            }
            if sign > 0 {
                plus.push(TxId(id));
            } else {
                minus.push(TxId(id));
            }
        }
        let a_minus_b: Pool = plus.iter().copied().collect();
        let b_minus_a: Pool = minus.iter().copied().collect();
        let clean = a_minus_b.len() == plus.len() && b_minus_a.len() == minus.len();
        Decoded {
            a_minus_b,
            b_minus_a,
            success: clean && self.is_empty(),
        }
    }
}

/// Sketch of `s` with `cell_count` cells and `hash_count` hashes per id.
pub fn iblt_encode(s: &Pool, cell_count: usize, hash_count: usize, seed: u64) -> Result<IbltSketch> {
    let mut sketch = IbltSketch::new(cell_count, hash_count, seed)?;
    for tx in s.iter() {
        sketch.insert(tx);
    }
    Ok(sketch)
}

/// Subtracts `sb` from `sa` and peels the result.
pub fn iblt_subtract_decode(sa: &IbltSketch, sb: &IbltSketch) -> Result<Decoded> {
    Ok(sa.subtract(sb)?.decode())
}
