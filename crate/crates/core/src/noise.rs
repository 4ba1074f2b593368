//! Counter-based Gaussian noise: the normals of step `m` in stream `id` are
//! a pure function of `(seed, id, m)`, so samples can be generated in any
//! order and on any number of workers.

use std::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Normals drawn per mode per step: one for the Brownian increment and two
/// for the conditional parts of the kernel integrals.
pub const NORMALS_PER_MODE: usize = 3;

/// A source of per-step standard normals. `fill_step(m, out)` fills `out`
/// with `NORMALS_PER_MODE` normals per mode, laid out mode-major.
pub trait NoiseSource: Send + Sync {
    fn fill_step(&self, step: u64, out: &mut [f64]);

    fn stream_id(&self) -> u64;
}

impl<T: NoiseSource + ?Sized> NoiseSource for Box<T> {
    fn fill_step(&self, step: u64, out: &mut [f64]) {
        (**self).fill_step(step, out)
    }

    fn stream_id(&self) -> u64 {
        (**self).stream_id()
    }
}

#[derive(Clone, Debug)]
pub struct NoiseStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        NoiseStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

fn unit_open(bits: u64) -> f64 {
    // (0, 1]
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl NoiseSource for NoiseStream {
    fn fill_step(&self, step: u64, out: &mut [f64]) {
        let mut rng = self.rng.clone();
        rng.set_word_pos((step as u128) << 32);
        for pair in out.chunks_mut(2) {
            let r = (-2.0 * unit_open(rng.next_u64()).ln()).sqrt();
            let (s, c) = (2.0 * PI * unit_open(rng.next_u64())).sin_cos();
            pair[0] = r * c;
            if let Some(second) = pair.get_mut(1) {
                *second = r * s;
            }
        }
    }

    fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

/// The noise of a coarse stream refined to half the step by Brownian-bridge
/// interpolation: fine steps `2c` and `2c + 1` split the increment of coarse
/// step `c` as `(z_c ± z_b)/√2`. The conditional normals are fresh draws
/// from an independent bridge stream.
#[derive(Clone, Debug)]
pub struct BridgeRefined<S> {
    coarse: S,
    bridge: NoiseStream,
}

impl<S: NoiseSource> BridgeRefined<S> {
    pub fn new(coarse: S, bridge_seed: u64) -> Self {
        let id = coarse.stream_id();
        BridgeRefined {
            coarse,
            bridge: NoiseStream::new(bridge_seed, id),
        }
    }
}

impl<S: NoiseSource> NoiseSource for BridgeRefined<S> {
    fn fill_step(&self, step: u64, out: &mut [f64]) {
        let modes = out.len() / NORMALS_PER_MODE;
        let mut coarse = vec![0.0; out.len()];
        self.coarse.fill_step(step / 2, &mut coarse);
        // bridge normals for the coarse step, then two fresh pairs per fine step
        let mut extra = vec![0.0; modes * 5];
        self.bridge.fill_step(step / 2, &mut extra);
        let sign = if step.is_multiple_of(2) { 1.0 } else { -1.0 };
        let offset = if step.is_multiple_of(2) { modes } else { 3 * modes };
        for k in 0..modes {
            let zc = coarse[NORMALS_PER_MODE * k];
            let zb = extra[k];
            out[NORMALS_PER_MODE * k] = (zc + sign * zb) * std::f64::consts::FRAC_1_SQRT_2;
            out[NORMALS_PER_MODE * k + 1] = extra[offset + 2 * k];
            out[NORMALS_PER_MODE * k + 2] = extra[offset + 2 * k + 1];
        }
    }

    fn stream_id(&self) -> u64 {
        self.coarse.stream_id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_order_independent() {
        let a = NoiseStream::new(42, 3);
        let b = NoiseStream::new(42, 3);
        let mut x = vec![0.0; 9];
        let mut y = vec![0.0; 9];
        b.fill_step(5, &mut y);
        b.fill_step(2, &mut y);
        b.fill_step(5, &mut y);
        a.fill_step(5, &mut x);
        assert_eq!(x, y);
        let mut other = vec![0.0; 9];
        NoiseStream::new(42, 4).fill_step(5, &mut other);
        assert_ne!(x, other);
        NoiseStream::new(43, 3).fill_step(5, &mut other);
        assert_ne!(x, other);
    }

    #[test]
    fn moments_are_standard_normal() {
        let s = NoiseStream::new(1, 0);
        let mut buf = vec![0.0; 30];
        let (mut m1, mut m2, mut m4, mut cross) = (0.0, 0.0, 0.0, 0.0);
        let steps = 20_000;
        for step in 0..steps {
            s.fill_step(step, &mut buf);
            for w in buf.chunks(2) {
                cross += w[0] * w[1];
            }
            for &z in &buf {
                m1 += z;
                m2 += z * z;
                m4 += z.powi(4);
            }
        }
        let n = (steps * 30) as f64;
        assert!((m1 / n).abs() < 4.0 / n.sqrt());
        assert!((m2 / n - 1.0).abs() < 4.0 * 2f64.sqrt() / n.sqrt());
        assert!((m4 / n - 3.0).abs() < 0.05);
        assert!((cross / (n / 2.0)).abs() < 4.0 / (n / 2.0).sqrt());
    }

    #[test]
    fn bridge_refinement_preserves_increments() {
        let coarse = NoiseStream::new(9, 2);
        let fine = BridgeRefined::new(coarse.clone(), 1234);
        let modes = 4;
        let mut zc = vec![0.0; 3 * modes];
        let mut a = vec![0.0; 3 * modes];
        let mut b = vec![0.0; 3 * modes];
        for c in 0..10u64 {
            coarse.fill_step(c, &mut zc);
            fine.fill_step(2 * c, &mut a);
            fine.fill_step(2 * c + 1, &mut b);
            for k in 0..modes {
                // √h·a + √h·b = √(2h)·z_c
                let sum = (a[3 * k] + b[3 * k]) * std::f64::consts::FRAC_1_SQRT_2;
                assert!((sum - zc[3 * k]).abs() < 1e-14);
            }
        }
    }
}
