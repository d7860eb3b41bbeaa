//! Helpers for plain `bool` bit strings.

/// Uppercase hex rendering of an MSB-first bit string.
///
/// Lengths that are not a multiple of four are left-padded with zero bits,
/// so the hex string reads as the integer the bits spell out.
pub fn to_hex(bits: &[bool]) -> String {
    let pad = (4 - bits.len() % 4) % 4;
    let padded = std::iter::repeat_n(false, pad).chain(bits.iter().copied());
    let mut out = String::with_capacity(bits.len().div_ceil(4));
    let mut nibble = 0u8;
    for (i, b) in padded.enumerate() {
        nibble = (nibble << 1) | b as u8;
        if i % 4 == 3 {
            out.push(char::from_digit(nibble as u32, 16).unwrap().to_ascii_uppercase());
            nibble = 0;
        }
    }
    out
}

/// Big-endian value of an MSB-first bit slice of at most 64 bits.
pub fn to_u64(bits: &[bool]) -> u64 {
    debug_assert!(bits.len() <= 64);
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

/// `width` bits of `value`, MSB first.
pub fn from_u64(value: u64, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| i < 64 && (value >> i) & 1 == 1).collect()
}

pub fn count_ones(bits: &[bool]) -> usize {
    bits.iter().filter(|&&b| b).count()
}

/// Inner product over GF(2).
pub fn dot(a: &[bool], b: &[bool]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(false, |acc, (&x, &y)| acc ^ (x & y))
}
