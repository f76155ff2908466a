//! Stable seed derivation. `std::hash` is not guaranteed stable across
//! releases, so reproducible streams hash with FNV-1a and mix with the
//! splitmix64 finalizer.

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn mix(base: u64, salt: u64) -> u64 {
    splitmix(base ^ salt.rotate_left(17))
}

/// Seed for a named substream.
pub fn derive(base: u64, tag: &str) -> u64 {
    mix(base, fnv1a(tag.as_bytes()))
}

/// Seed for one item of a named substream.
pub fn derive_indexed(base: u64, tag: &str, index: u64) -> u64 {
    mix(derive(base, tag), index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivations_are_stable() {
        // frozen value guards against accidental changes to the mixing scheme
        assert_eq!(fnv1a(b"dog"), 0xcaaf_3b18_f474_78e9);
        assert_eq!(derive(7, "noise"), derive(7, "noise"));
        assert_ne!(derive(7, "noise"), derive(8, "noise"));
        assert_ne!(derive(7, "noise"), derive(7, "split"));
        assert_ne!(derive_indexed(7, "noise", 0), derive_indexed(7, "noise", 1));
    }
}
