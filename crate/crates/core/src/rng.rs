//! Seeded random streams.
//!
//! Every stochastic phase draws from a ChaCha8 stream derived from the run
//! seed and a phase label (`"collect"`, `"train-vae"`, `"eval/17"`, ...), so
//! each phase is reproducible on its own regardless of what ran before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// FNV-1a over the label bytes.
fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stream for `(seed, label)`. Distinct labels give independent streams.
pub fn derive_rng(seed: u64, label: &str) -> Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ fnv1a(label)))
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn same_label_same_stream() {
        let a: Vec<u64> = (0..4).map({
            let mut r = derive_rng(7, "collect");
            move |_| r.random()
        }).collect();
        let b: Vec<u64> = (0..4).map({
            let mut r = derive_rng(7, "collect");
            move |_| r.random()
        }).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_separate_streams() {
        let mut a = derive_rng(7, "collect");
        let mut b = derive_rng(7, "eval");
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }
}
