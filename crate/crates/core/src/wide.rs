//! Fixed 192-bit unsigned integer, just enough for exact PH sums at 64-bit
//! word width (results stay below 2^133).

use std::cmp::Ordering;
use std::fmt;

/// Little-endian 64-bit limbs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct U192([u64; 3]);

impl U192 {
    pub const ZERO: Self = Self([0; 3]);

    pub fn from_u128(v: u128) -> Self {
        Self([v as u64, (v >> 64) as u64, 0])
    }

    pub fn limbs(&self) -> [u64; 3] {
        self.0
    }

    pub fn to_u128(self) -> Option<u128> {
        (self.0[2] == 0).then(|| (self.0[1] as u128) << 64 | self.0[0] as u128)
    }

    /// Full product of two operands below 2^96.
    pub fn mul_u128(a: u128, b: u128) -> Self {
        debug_assert!(a >> 96 == 0 && b >> 96 == 0);
        let (a0, a1) = (a as u64 as u128, a >> 64);
        let (b0, b1) = (b as u64 as u128, b >> 64);
        let lo = a0 * b0;
        // a1, b1 < 2^32 so the cross terms and their sum fit comfortably
        let mid = a0 * b1 + a1 * b0 + (lo >> 64);
        let hi = a1 * b1 + (mid >> 64);
        debug_assert!(hi >> 64 == 0);
        Self([lo as u64, mid as u64, hi as u64])
    }

    /// Wrapping addition; callers keep sums below 2^192.
    pub fn add(self, rhs: Self) -> Self {
        let mut out = [0u64; 3];
        let mut carry = false;
        for (i, slot) in out.iter_mut().enumerate() {
            let (s1, c1) = self.0[i].overflowing_add(rhs.0[i]);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            *slot = s2;
            carry = c1 || c2;
        }
        Self(out)
    }

    pub fn bit(&self, i: usize) -> bool {
        i < 192 && (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Position of the highest set bit plus one; zero for zero.
    pub fn bit_len(&self) -> usize {
        (0..3).rev().find(|&i| self.0[i] != 0).map_or(0, |i| 64 * i + 64 - self.0[i].leading_zeros() as usize)
    }

    pub fn pow2(exp: usize) -> Self {
        assert!(exp < 192);
        let mut limbs = [0; 3];
        limbs[exp / 64] = 1 << (exp % 64);
        Self(limbs)
    }
}

impl Ord for U192 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.iter().rev().cmp(other.0.iter().rev())
    }
}

impl PartialOrd for U192 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for U192 {
    /// Decimal rendering via repeated division by 10^19.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const CHUNK: u64 = 10_000_000_000_000_000_000;
        let mut limbs = self.0;
        let mut parts = Vec::new();
        loop {
            let mut rem: u128 = 0;
            for limb in limbs.iter_mut().rev() {
                let cur = (rem << 64) | *limb as u128;
                *limb = (cur / CHUNK as u128) as u64;
                rem = cur % CHUNK as u128;
            }
            parts.push(rem as u64);
            if limbs == [0; 3] {
                break;
            }
        }
        let mut s = parts.pop().unwrap().to_string();
        for p in parts.iter().rev() {
            s.push_str(&format!("{p:019}"));
        }
        f.pad(&s)
    }
}
