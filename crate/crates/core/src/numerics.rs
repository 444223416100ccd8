//! Complex-vector primitives shared by the transmitter, channel and receivers.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

/// Planner plus cached plans keyed by `(size, inverse)`.
type PlanCache = (FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>);

thread_local! {
    static PLANS: RefCell<PlanCache> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

fn transform_in_place(buf: &mut [Complex64], inverse: bool) {
    if buf.is_empty() {
        return;
    }
    plan(buf.len(), inverse).process(buf);
    let scale = 1.0 / (buf.len() as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Unitary forward DFT in place: `X_k = L^{-1/2} Σ x_n e^{-j2πkn/L}`.
pub fn dft_in_place(buf: &mut [Complex64]) {
    transform_in_place(buf, false);
}

/// Unitary inverse DFT in place.
pub fn idft_in_place(buf: &mut [Complex64]) {
    transform_in_place(buf, true);
}

/// Unitary forward DFT.
pub fn dft(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    dft_in_place(&mut out);
    out
}

/// Unitary inverse DFT.
pub fn idft(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    idft_in_place(&mut out);
    out
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Zadoff-Chu sequence of the given length and root.
///
/// Even lengths use `exp(-jπ u n² / L)`, odd lengths `exp(-jπ u n(n+1) / L)`.
/// The root must be coprime with the length, otherwise the DFT of the
/// sequence is not constant-envelope.
pub fn zadoff_chu(length: usize, root: u64) -> Result<Vec<Complex64>> {
    if length == 0 {
        return Err(Error::Empty("Zadoff-Chu length"));
    }
    if root == 0 || gcd(root, length as u64) != 1 {
        return Err(Error::NotCoprime { root, length });
    }
    let len = length as u128;
    let u = root as u128;
    let modulus = 2 * len;
    Ok((0..len)
        .map(|n| {
            // Reduce the phase index modulo 2L before converting to float so
            // long sequences keep full precision.
            let k = if length.is_multiple_of(2) {
                (u * n * n) % modulus
            } else {
                (u * n * (n + 1)) % modulus
            };
            Complex64::from_polar(1.0, -PI * k as f64 / length as f64)
        })
        .collect())
}

/// Bits per 4-QAM symbol.
pub const QPSK_BITS: usize = 2;

fn check_order(order: u32) -> Result<usize> {
    match order {
        4 => Ok(QPSK_BITS),
        other => Err(Error::UnsupportedOrder(other)),
    }
}

/// Gray-mapped 4-QAM: bits `(b1, b0)` map to `((1-2b1) + j(1-2b0))/√2`.
pub fn qam_map(bits: &[u8], order: u32) -> Result<Vec<Complex64>> {
    let per_symbol = check_order(order)?;
    if !bits.len().is_multiple_of(per_symbol) {
        return Err(Error::LengthMismatch {
            expected: bits.len().div_ceil(per_symbol) * per_symbol,
            got: bits.len(),
        });
    }
    let a = std::f64::consts::FRAC_1_SQRT_2;
    Ok(bits
        .chunks_exact(2)
        .map(|b| {
            Complex64::new(
                a * (1.0 - 2.0 * f64::from(b[0] & 1)),
                a * (1.0 - 2.0 * f64::from(b[1] & 1)),
            )
        })
        .collect())
}

/// Hard-decision nearest-neighbour demapping, the inverse of [`qam_map`].
pub fn qam_demap(symbols: &[Complex64], order: u32) -> Result<Vec<u8>> {
    check_order(order)?;
    let mut bits = Vec::with_capacity(symbols.len() * QPSK_BITS);
    for s in symbols {
        bits.push(u8::from(s.re < 0.0));
        bits.push(u8::from(s.im < 0.0));
    }
    Ok(bits)
}

/// Reproducible random stream identified by `(seed, stream_id)`.
///
/// Two streams built from the same pair produce the same draws bit-for-bit.
/// Monte Carlo trials should call [`RngStream::fork`] rather than share one
/// stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent child stream; depends only on `(seed, stream_id, index)`.
    pub fn fork(&self, index: u64) -> RngStream {
        let id = splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        RngStream::new(self.seed, id)
    }

    pub fn random_bits(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| (self.rng.next_u32() & 1) as u8).collect()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// `n` i.i.d. real samples from N(0, variance).
pub fn gaussian(rng: &mut RngStream, n: usize, variance: f64) -> Result<Vec<f64>> {
    if !(variance >= 0.0) {
        return Err(Error::NegativeVariance(variance));
    }
    let std = variance.sqrt();
    Ok((0..n)
        .map(|_| std * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// `n` circular complex Gaussian samples with total variance `variance`
/// (each component carries `variance / 2`).
pub fn complex_gaussian(rng: &mut RngStream, n: usize, variance: f64) -> Result<Vec<Complex64>> {
    if !(variance >= 0.0) {
        return Err(Error::NegativeVariance(variance));
    }
    let std = (variance / 2.0).sqrt();
    Ok((0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(std * re, std * im)
        })
        .collect())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn energy(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

pub fn mean_power(v: &[Complex64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        energy(v) / v.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{prop_assert, proptest};

    fn naive_dft(v: &[Complex64]) -> Vec<Complex64> {
        let l = v.len() as f64;
        (0..v.len())
            .map(|k| {
                v.iter()
                    .enumerate()
                    .map(|(n, x)| x * Complex64::from_polar(1.0, -2.0 * PI * (k * n) as f64 / l))
                    .sum::<Complex64>()
                    / l.sqrt()
            })
            .collect()
    }

    fn random_vec(rng: &mut RngStream, n: usize) -> Vec<Complex64> {
        complex_gaussian(rng, n, 1.0).unwrap()
    }

    #[test]
    fn impulse_transforms_to_constant() {
        let v = [1.0, 0.0, 0.0, 0.0].map(|r| Complex64::new(r, 0.0));
        for x in dft(&v) {
            assert_abs_diff_eq!(x.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(x.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_concentrates_at_dc() {
        let c = Complex64::new(0.3, -1.2);
        for len in [1usize, 4, 7, 12, 64] {
            let out = dft(&vec![c; len]);
            assert!((out[0] - c * (len as f64).sqrt()).norm() < 1e-12);
            assert!(out[1..].iter().all(|x| x.norm() < 1e-12));
            let back = idft(&out);
            assert!(back.iter().all(|x| (x - c).norm() < 1e-12));
        }
    }

    #[test]
    fn fast_and_direct_paths_agree() {
        let mut rng = RngStream::new(1, 0);
        for len in [1usize, 2, 3, 8, 15, 32, 100, 128] {
            let v = random_vec(&mut rng, len);
            let fast = dft(&v);
            let slow = naive_dft(&v);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unitary_for_all_lengths_up_to_1024() {
        let mut rng = RngStream::new(2, 0);
        for len in 1..=1024usize {
            let v = random_vec(&mut rng, len);
            let e = energy(&v);
            assert!((energy(&dft(&v)) - e).abs() <= 1e-10 * e.max(1.0), "len {len}");
            assert!((energy(&idft(&v)) - e).abs() <= 1e-10 * e.max(1.0), "len {len}");
        }
    }

    #[test]
    fn zc_length4_matches_formula() {
        let p = zadoff_chu(4, 1).unwrap();
        let expect = [0.0, -PI / 4.0, -PI, -9.0 * PI / 4.0].map(|ph| Complex64::from_polar(1.0, ph));
        for (a, b) in p.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zc_flat_in_time_and_frequency() {
        for (len, root) in [(32usize, 1u64), (128, 1), (512, 1), (31, 3), (64, 5), (139, 7)] {
            let p = zadoff_chu(len, root).unwrap();
            assert!(p.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
            let f = naive_dft(&p);
            assert!(f.iter().all(|x| (x.norm() - 1.0).abs() < 1e-9), "L={len} u={root}");
        }
    }

    #[test]
    fn zc_rejects_non_coprime_root() {
        assert!(matches!(zadoff_chu(32, 2), Err(Error::NotCoprime { .. })));
        assert!(matches!(zadoff_chu(32, 0), Err(Error::NotCoprime { .. })));
    }

    #[test]
    fn qam_labels() {
        let s = qam_map(&[0, 0, 1, 1, 1, 0], 4).unwrap();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(s[0], Complex64::new(a, a));
        assert_eq!(s[1], Complex64::new(-a, -a));
        assert_eq!(s[2], Complex64::new(-a, a));
        assert!(matches!(qam_map(&[0, 1], 16), Err(Error::UnsupportedOrder(16))));
        assert!(qam_map(&[0, 1, 1], 4).is_err());
    }

    #[test]
    fn qam_round_trip_and_energy() {
        let mut rng = RngStream::new(3, 0);
        let bits = rng.random_bits(10_000);
        let syms = qam_map(&bits, 4).unwrap();
        assert_eq!(qam_demap(&syms, 4).unwrap(), bits);

        let bits = rng.random_bits(2 * 100_000);
        let syms = qam_map(&bits, 4).unwrap();
        assert!((mean_power(&syms) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn gaussian_contract() {
        let mut rng = RngStream::new(4, 9);
        assert!(gaussian(&mut rng, 10, 0.0).unwrap().iter().all(|&x| x == 0.0));
        assert!(matches!(gaussian(&mut rng, 1, -1.0), Err(Error::NegativeVariance(_))));
        assert!(complex_gaussian(&mut rng, 1, -0.5).is_err());

        let n = 1_000_000;
        let xs = gaussian(&mut rng, n, 1.0).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());

        let a = gaussian(&mut RngStream::new(11, 5), 64, 2.0).unwrap();
        let b = gaussian(&mut RngStream::new(11, 5), 64, 2.0).unwrap();
        let c = gaussian(&mut RngStream::new(11, 6), 64, 2.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn complex_gaussian_total_variance() {
        let mut rng = RngStream::new(5, 0);
        let z = complex_gaussian(&mut rng, 200_000, 0.5).unwrap();
        assert!((mean_power(&z) - 0.5).abs() < 0.01);
    }

    #[test]
    fn forks_are_deterministic_and_distinct() {
        let root = RngStream::new(7, 0);
        let mut a = root.fork(3);
        let mut b = root.fork(3);
        let mut c = root.fork(4);
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(values in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..300)) {
            let v: Vec<Complex64> = values.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
            let scale = energy(&v).sqrt().max(1e-300);
            let rt = idft(&dft(&v));
            let rt2 = dft(&idft(&v));
            for ((a, b), c) in v.iter().zip(&rt).zip(&rt2) {
                prop_assert!((a - b).norm() <= 1e-12 * scale);
                prop_assert!((a - c).norm() <= 1e-12 * scale);
            }
        }
    }
}
