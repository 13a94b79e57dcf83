//! Counter-based deterministic randomness.
//!
//! Every randomized operation in this crate is a pure function of its inputs
//! and a [`Seed`]. A seed is a 64-bit master value plus a derivation path of
//! (tag, index) pairs; `derive` is side-effect free, so independent units of
//! work (sweep cells, Monte Carlo trials) each own a seed subtree and can run
//! in any order, or concurrently, without changing a single output bit.

use std::fmt;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function. Bijective, so distinct states never collide.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hierarchical seed: master value plus a derivation path.
///
/// Identical (master, path) always yield identical streams; distinct paths
/// yield decorrelated streams. The path is kept explicitly so result rows can
/// record exactly which subtree produced them (see [`Seed::path_string`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seed {
    master: u64,
    path: Vec<(&'static str, u64)>,
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Seed {
            master,
            path: Vec::new(),
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn path(&self) -> &[(&'static str, u64)] {
        &self.path
    }

    /// Child seed for the given purpose tag and counter index.
    pub fn derive(&self, tag: &'static str, index: u64) -> Seed {
        let mut path = self.path.clone();
        path.push((tag, index));
        Seed {
            master: self.master,
            path,
        }
    }

    /// Stream key: the master mixed with every path segment in order.
    fn key(&self) -> u64 {
        let mut k = mix64(self.master ^ GOLDEN);
        for &(tag, index) in &self.path {
            k = mix64(k ^ fnv1a(tag.as_bytes()));
            k = mix64(k.wrapping_add(GOLDEN) ^ index);
        }
        k
    }

    /// Generator positioned at the start of this seed's stream.
    pub fn rng(&self) -> Rng {
        Rng {
            state: self.key(),
            spare_normal: None,
        }
    }

    /// Canonical text form, e.g. `"42/rep:3/p:1/fit:0"`.
    pub fn path_string(&self) -> String {
        let mut s = self.master.to_string();
        for (tag, index) in &self.path {
            s.push('/');
            s.push_str(tag);
            s.push(':');
            s.push_str(&index.to_string());
        }
        s
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.path_string())
    }
}

/// SplitMix64 stream with a cached Box-Muller spare.
#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform on [0, 1): 53 random mantissa bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1]; safe as a log argument.
    fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased integer in [0, bound) by Lemire's multiply-shift rejection.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "next_below requires a positive bound");
        let mut x = self.next_u64();
        let mut m = (x as u128) * (bound as u128);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                x = self.next_u64();
                m = (x as u128) * (bound as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// True with probability exactly p at the resolution of `next_f64`:
    /// p = 0 is never true, p = 1 is always true.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Standard normal via Box-Muller; the second value of each pair is
    /// cached so consecutive draws stay cheap and deterministic.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u = self.next_f64_open();
        let v = self.next_f64();
        let r = (-2.0 * u.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * v;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}
