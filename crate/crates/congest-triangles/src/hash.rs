//! k-wise independent hash functions with a compact wire encoding.
//!
//! A hash function is a uniformly random degree-(k-1) polynomial over a
//! prime field `Z_q`, reduced modulo the range size. Values of the
//! polynomial at up to k distinct points are exactly uniform over `Z_q`;
//! the final reduction adds a bias of at most `1/q` per coordinate because
//! the field does not split evenly into `range` buckets. The modulus is
//! chosen as the smallest prime at or above
//! `2^ceil(log2(max(domain, 4 * range^2)))`, which keeps that bias small
//! relative to the collision probabilities the algorithms rely on and lets
//! the decoder recover `q` from the coefficient width alone.
//!
//! Wire layout, big-endian throughout: a 16-bit header — independence
//! order `k` (4 bits), coefficient width `w = ceil(log2 q)` (6 bits),
//! range size (6 bits, stored directly) — followed by `k` coefficients of
//! `w` bits each. Total length is exactly `16 + k * w` bits.

use crate::bits::BitStr;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HashError {
    #[error("input {x} outside hash domain of size {domain}")]
    OutOfDomain { x: u64, domain: u64 },
    #[error("cannot encode hash function: {0}")]
    Unencodable(String),
    #[error("cannot decode hash function: {0}")]
    Decode(String),
}

/// A member of the k-wise independent family, immutable once sampled.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HashFn {
    k: u32,
    q: u64,
    range: u64,
    domain: u64,
    coeffs: Vec<u64>,
}

impl HashFn {
    /// Builds a hash from explicit parts. Intended for tests and decoding;
    /// `sample_hash` is the normal constructor.
    pub fn from_parts(q: u64, range: u64, domain: u64, coeffs: Vec<u64>) -> Self {
        assert!(is_prime(q), "modulus must be prime");
        assert!(range >= 1 && domain >= 1 && !coeffs.is_empty());
        assert!(coeffs.iter().all(|&c| c < q), "coefficients must be field elements");
        HashFn { k: coeffs.len() as u32, q, range, domain, coeffs }
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn range_size(&self) -> u64 {
        self.range
    }

    pub fn domain_size(&self) -> u64 {
        self.domain
    }

    /// `((sum_i a_i x^i) mod q) mod range`.
    pub fn eval(&self, x: u64) -> Result<u64, HashError> {
        if x >= self.domain {
            return Err(HashError::OutOfDomain { x, domain: self.domain });
        }
        Ok(self.eval_unchecked(x))
    }

    pub fn eval_unchecked(&self, x: u64) -> u64 {
        let q = self.q as u128;
        let x = x as u128;
        let mut acc: u128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = (acc * x + c as u128) % q;
        }
        (acc % self.range as u128) as u64
    }

    /// Encoded length in bits: `16 + k * ceil(log2 q)`.
    pub fn encoded_bits(&self) -> usize {
        16 + self.k as usize * ceil_log2(self.q) as usize
    }

    pub fn encode(&self) -> Result<BitStr, HashError> {
        let w = ceil_log2(self.q);
        if self.k > 15 {
            return Err(HashError::Unencodable(format!("order {} exceeds 15", self.k)));
        }
        if w > 63 {
            return Err(HashError::Unencodable(format!("modulus {} too wide", self.q)));
        }
        if self.range > 63 {
            return Err(HashError::Unencodable(format!("range {} exceeds 63", self.range)));
        }
        let mut out = BitStr::new();
        out.push_bits(self.k as u64, 4);
        out.push_bits(w as u64, 6);
        out.push_bits(self.range, 6);
        for &c in &self.coeffs {
            out.push_bits(c, w as usize);
        }
        Ok(out)
    }

    /// Inverse of [`encode`](Self::encode). The decoded function evaluates
    /// identically; its domain is widened to the full field since the
    /// original domain size is not on the wire.
    pub fn decode(bits: &BitStr) -> Result<HashFn, HashError> {
        if bits.len() < 16 {
            return Err(HashError::Decode(format!("{} bits is shorter than the header", bits.len())));
        }
        let k = bits.get_bits(0, 4) as u32;
        let w = bits.get_bits(4, 6) as u32;
        let range = bits.get_bits(10, 6);
        if k == 0 || w == 0 || range == 0 {
            return Err(HashError::Decode("zero field in header".into()));
        }
        let expect = 16 + k as usize * w as usize;
        if bits.len() != expect {
            return Err(HashError::Decode(format!(
                "expected {expect} bits for k={k} w={w}, got {}",
                bits.len()
            )));
        }
        let q = smallest_prime_geq(1u64 << (w - 1));
        let mut coeffs = Vec::with_capacity(k as usize);
        for i in 0..k as usize {
            let c = bits.get_bits(16 + i * w as usize, w as usize);
            if c >= q {
                return Err(HashError::Decode(format!("coefficient {c} not below modulus {q}")));
            }
            coeffs.push(c);
        }
        Ok(HashFn { k, q, range, domain: q, coeffs })
    }
}

/// Draws a uniformly random member of the k-wise independent family from
/// `{0..domain_size-1}` to `{0..range_size-1}`.
pub fn sample_hash(k: u32, domain_size: u64, range_size: u64, rng: &mut impl Rng) -> HashFn {
    assert!(k >= 1 && domain_size >= 1 && range_size >= 1);
    let q = field_modulus(domain_size, range_size);
    let coeffs = (0..k).map(|_| rng.random_range(0..q)).collect();
    HashFn { k, q, range: range_size, domain: domain_size, coeffs }
}

/// The modulus used for a given domain and range: the smallest prime at or
/// above the next power of two of `max(domain, 4 * range^2)`.
pub fn field_modulus(domain: u64, range: u64) -> u64 {
    let floor = domain.max(4 * range * range).max(1);
    smallest_prime_geq(1u64 << ceil_log2(floor))
}

/// Monte-Carlo estimate of the probability that a freshly sampled 3-wise
/// independent hash maps both `x` and `x2` to `y` while the preimage of `y`
/// stays below four times its conditional expectation. The estimate is
/// expected to stay above `3 / (4 * range^2)` up to sampling noise.
pub fn lemma1_estimate(
    domain_size: u64,
    range_size: u64,
    x: u64,
    x2: u64,
    y: u64,
    trials: u64,
    rng: &mut impl Rng,
) -> f64 {
    assert!(x != x2, "probe points must be distinct");
    assert!(trials >= 1);
    let preimage_cap = 4.0 * (2.0 + (domain_size as f64 - 2.0) / range_size as f64);
    let mut hits = 0u64;
    for _ in 0..trials {
        let h = sample_hash(3, domain_size, range_size, rng);
        if h.eval_unchecked(x) != y || h.eval_unchecked(x2) != y {
            continue;
        }
        let preimage = (0..domain_size).filter(|&z| h.eval_unchecked(z) == y).count();
        if preimage as f64 <= preimage_cap {
            hits += 1;
        }
    }
    hits as f64 / trials as f64
}

/// `ceil(log2 x)` for `x >= 1`.
pub fn ceil_log2(x: u64) -> u32 {
    assert!(x >= 1);
    64 - (x - 1).leading_zeros()
}

/// Deterministic Miller-Rabin, valid for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn smallest_prime_geq(n: u64) -> u64 {
    let mut c = n.max(2);
    while !is_prime(c) {
        c += 1;
    }
    c
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Exact probability that the polynomial value at one point reduces to
    /// `y`: the field splits into buckets of size floor(q/r) or one more.
    fn bucket_prob(q: u64, range: u64, y: u64) -> f64 {
        let base = q / range;
        let extra = (y < q % range) as u64;
        (base + extra) as f64 / q as f64
    }

    #[test]
    fn prime_helpers() {
        assert!(is_prime(2) && is_prime(17) && is_prime(1031));
        assert!(!is_prime(1) && !is_prime(1024) && !is_prime(1029));
        assert_eq!(smallest_prime_geq(1024), 1031);
        assert_eq!(smallest_prime_geq(64), 67);
        assert_eq!(smallest_prime_geq(1), 2);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(1031), 11);
    }

    #[test]
    fn eval_matches_hand_arithmetic() {
        // (3 + 5*2 + 7*4) mod 17 = 41 mod 17 = 7, then 7 mod 4 = 3.
        let h = HashFn::from_parts(17, 4, 16, vec![3, 5, 7]);
        assert_eq!(h.eval(2).unwrap(), 3);

        // Independent route: evaluate term by term.
        let poly: u64 = [3u64, 5, 7]
            .iter()
            .enumerate()
            .map(|(i, c)| c * 2u64.pow(i as u32))
            .sum::<u64>()
            % 17;
        assert_eq!(poly % 4, h.eval(2).unwrap());
    }

    #[test]
    fn constant_polynomial_is_constant() {
        let h = HashFn::from_parts(17, 4, 16, vec![9, 0, 0]);
        for x in 0..16 {
            assert_eq!(h.eval(x).unwrap(), 9 % 4);
        }
    }

    #[test]
    fn single_bucket_range_maps_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = sample_hash(3, 16, 1, &mut rng);
        for x in 0..16 {
            assert_eq!(h.eval(x).unwrap(), 0);
        }
    }

    #[test]
    fn out_of_domain_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = sample_hash(3, 16, 4, &mut rng);
        assert!(matches!(h.eval(16), Err(HashError::OutOfDomain { .. })));
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(sample_hash(3, 16, 4, &mut a), sample_hash(3, 16, 4, &mut b));
    }

    #[test]
    fn modulus_dominates_domain_and_range() {
        for (domain, range) in [(16, 4), (64, 4), (64, 8), (1024, 4), (48, 1)] {
            let q = field_modulus(domain, range);
            assert!(is_prime(q));
            assert!(q >= domain.max(4 * range * range));
        }
    }

    #[test]
    fn encode_length_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = sample_hash(3, 1024, 4, &mut rng);
        assert_eq!(h.modulus(), 1031);
        let bits = h.encode().unwrap();
        assert_eq!(bits.len(), 49);
        assert_eq!(bits.len(), h.encoded_bits());
        assert!(bits.len() <= 3 * 11 + 16);
    }

    #[test]
    fn round_trip_preserves_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let h = sample_hash(3, 64, 4, &mut rng);
            let back = HashFn::decode(&h.encode().unwrap()).unwrap();
            assert_eq!(back.modulus(), h.modulus());
            assert_eq!(back.range_size(), h.range_size());
            for x in 0..64 {
                assert_eq!(back.eval(x).unwrap(), h.eval(x).unwrap());
            }
        }
    }

    #[test]
    fn decode_rejects_malformed_input() {
        assert!(HashFn::decode(&BitStr::new()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let good = sample_hash(3, 64, 4, &mut rng).encode().unwrap();

        let truncated = good.slice(0, good.len() - 3);
        assert!(HashFn::decode(&truncated).is_err());

        let mut oversized = good.clone();
        oversized.push_bits(0, 5);
        assert!(HashFn::decode(&oversized).is_err());

        // Coefficient equal to the modulus: q = 67 fits in 7 bits.
        let mut bad = BitStr::new();
        bad.push_bits(1, 4);
        bad.push_bits(7, 6);
        bad.push_bits(4, 6);
        bad.push_bits(67, 7);
        assert!(HashFn::decode(&bad).is_err());
    }

    #[test]
    fn marginal_frequency_matches_bucket_probability() {
        let trials = 100_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (domain, range) = (64u64, 4u64);
        let q = field_modulus(domain, range);
        for (x, y) in [(0u64, 0u64), (5, 1), (17, 2), (40, 3), (63, 0)] {
            let mut hits = 0u64;
            let mut probe = ChaCha8Rng::seed_from_u64(rng.random());
            for _ in 0..trials {
                let h = sample_hash(3, domain, range, &mut probe);
                if h.eval_unchecked(x) == y {
                    hits += 1;
                }
            }
            let expected = bucket_prob(q, range, y);
            let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
            let observed = hits as f64 / trials as f64;
            assert!(
                (observed - expected).abs() <= 3.0 * sigma,
                "marginal off: observed {observed}, expected {expected}"
            );
            // Documented bias of the uneven split relative to the ideal 1/range.
            assert!((expected - 1.0 / range as f64).abs() <= 1.0 / q as f64);
        }
    }

    #[test]
    fn three_wise_joint_matches_exact_product() {
        let trials = 100_000u64;
        let (domain, range) = (64u64, 4u64);
        let q = field_modulus(domain, range);
        let mut seeder = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let xs = loop {
                let c: Vec<u64> = (0..3).map(|_| seeder.random_range(0..domain)).collect();
                if c[0] != c[1] && c[1] != c[2] && c[0] != c[2] {
                    break c;
                }
            };
            let ys: Vec<u64> = (0..3).map(|_| seeder.random_range(0..range)).collect();
            let mut hits = 0u64;
            let mut probe = ChaCha8Rng::seed_from_u64(seeder.random());
            for _ in 0..trials {
                let h = sample_hash(3, domain, range, &mut probe);
                if (0..3).all(|i| h.eval_unchecked(xs[i]) == ys[i]) {
                    hits += 1;
                }
            }
            let expected: f64 = ys.iter().map(|&y| bucket_prob(q, range, y)).product();
            let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
            let observed = hits as f64 / trials as f64;
            assert!(
                (observed - expected).abs() <= 3.0 * sigma,
                "joint off: observed {observed}, expected {expected}"
            );
            // Total deviation from the ideal 1/range^3 stays within the
            // documented k * range / q envelope.
            let ideal = (range as f64).powi(-3);
            assert!((expected - ideal).abs() <= 3.0 * range as f64 / q as f64);
        }
    }

    #[test]
    fn lemma1_estimate_single_bucket_is_certain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = lemma1_estimate(16, 1, 0, 1, 0, 200, &mut rng);
        assert!(est >= 0.75, "single bucket estimate {est}");
        assert!((est - 1.0).abs() < f64::EPSILON);
    }

    #[test]
    fn lemma1_estimate_small_smoke() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let est = lemma1_estimate(64, 4, 3, 9, 0, 20_000, &mut rng);
        let bound: f64 = 3.0 / (4.0 * 16.0);
        let sigma = (bound * (1.0 - bound) / 20_000.0f64).sqrt();
        assert!(est >= bound - 3.0 * sigma, "estimate {est} below {bound}");
    }
}
