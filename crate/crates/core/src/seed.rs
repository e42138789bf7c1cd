//! Derivation of per-component seeds from one master seed.
//!
//! `derive(master, stream)` mixes the master seed with a fixed stream id via
//! SplitMix64, so components draw from unrelated generators while the whole
//! run stays a function of the master seed. Derived seeds fit in 63 bits so
//! they survive TOML's signed integers.

pub const SPLIT: u64 = 1;
pub const FLAT: u64 = 2;
pub const ROOT: u64 = 3;
/// Child `p` of the hierarchy uses stream `CHILD + p`.
pub const CHILD: u64 = 4;
pub const MLP64: u64 = 10;
pub const FOREST: u64 = 11;
pub const BOOTSTRAP: u64 = 12;
pub const GRID: u64 = 13;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream)) >> 1
}
