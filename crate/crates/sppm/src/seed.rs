//! Deterministic seed derivation.
//!
//! Every randomized stage of the pipeline draws from its own RNG seeded
//! through this module, so sub-results stay stable when unrelated parts of
//! a configuration change. A master seed plus a textual label (and optional
//! index) always maps to the same derived seed, across runs, platforms and
//! thread counts.

/// SplitMix64 finalizer. Good avalanche behaviour, cheap, stable.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the label bytes.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a child seed from `master` for the stage named by `label`.
pub fn derive(master: u64, label: &str) -> u64 {
    splitmix64(master ^ fnv1a(label.as_bytes()))
}

/// Derives an indexed child seed, e.g. one per retry attempt or per tile.
pub fn derive_indexed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive(master, label) ^ splitmix64(index))
}
