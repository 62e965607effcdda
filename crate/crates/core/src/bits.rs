//! Counting helpers over dense bitsets.

use fixedbitset::FixedBitSet;

pub(crate) type Bits = FixedBitSet;

/// `|a ⊕ b|`
#[inline]
pub(crate) fn xor_count(a: &Bits, b: &Bits) -> u64 {
    a.symmetric_difference_count(b) as u64
}

/// `|a \ b|`
#[inline]
pub(crate) fn minus_count(a: &Bits, b: &Bits) -> u64 {
    a.difference_count(b) as u64
}
