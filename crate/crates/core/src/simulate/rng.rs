use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Root seed with per-replicate stream splitting: replicate `i` always draws
/// from ChaCha stream `i` of the root key, whatever order replicates are
/// generated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    root: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(root: u64) -> Self {
        Seed { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// An unrelated seed for an independent purpose, keyed by `tag`.
    pub fn derive(&self, tag: u64) -> Seed {
        Seed {
            root: splitmix64(self.root ^ splitmix64(tag)),
        }
    }

    pub fn rng(&self, replicate: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.root);
        rng.set_stream(replicate);
        rng
    }
}
