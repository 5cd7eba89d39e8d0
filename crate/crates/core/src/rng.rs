//! Counter-based Gaussian generator (Philox4x32-10).
//!
//! Every draw is a pure function of `(seed, stream, counter)`, so results do
//! not depend on how work is scheduled across threads.

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

/// Philox4x32 with 10 rounds.
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let p0 = (M0 as u64) * (c[0] as u64);
        let p1 = (M1 as u64) * (c[2] as u64);
        let (hi0, lo0) = ((p0 >> 32) as u32, p0 as u32);
        let (hi1, lo1) = ((p1 >> 32) as u32, p1 as u32);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Stateless generator keyed by a seed and a stream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: [u32; 2],
    stream: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng { key: [seed as u32, (seed >> 32) as u32], stream }
    }

    pub fn block(&self, counter: u64) -> [u32; 4] {
        philox4x32(
            [counter as u32, (counter >> 32) as u32, self.stream as u32, (self.stream >> 32) as u32],
            self.key,
        )
    }

    /// Two uniforms in `(0, 1]` with 53-bit resolution.
    pub fn uniforms(&self, counter: u64) -> (f64, f64) {
        let b = self.block(counter);
        let to_unit = |hi: u32, lo: u32| {
            let bits = (((hi as u64) << 32) | lo as u64) >> 11;
            (bits + 1) as f64 * (1.0 / (1u64 << 53) as f64)
        };
        (to_unit(b[0], b[1]), to_unit(b[2], b[3]))
    }

    /// Two independent standard normals (Box–Muller).
    pub fn normals(&self, counter: u64) -> (f64, f64) {
        let (u1, u2) = self.uniforms(counter);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }

    /// The `index`-th standard normal of this stream.
    pub fn normal(&self, index: u64) -> f64 {
        let (a, b) = self.normals(index / 2);
        if index.is_multiple_of(2) {
            a
        } else {
            b
        }
    }
}
