//! Exact binary fixed-point phases in `[0, 1)`.

use num_bigint::BigUint;
use rand::RngCore;

use crate::error::{Error, Result};

/// The phase `numerator / 2^bits`, held as little-endian 64-bit limbs.
///
/// Doubling and tripling are exact modulo 1: carries out of the top bit are
/// dropped, nothing is rounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseFixedPoint {
    limbs: Vec<u64>,
    bits: usize,
}

impl PhaseFixedPoint {
    pub fn zero(bits: usize) -> Result<Self> {
        if bits == 0 {
            return Err(Error::InvalidArgument("phase precision must be positive".into()));
        }
        Ok(PhaseFixedPoint {
            limbs: vec![0; bits.div_ceil(64)],
            bits,
        })
    }

    /// Builds a phase from little-endian limbs; the numerator must be below `2^bits`.
    pub fn from_limbs(limbs: Vec<u64>, bits: usize) -> Result<Self> {
        let mut p = Self::zero(bits)?;
        if limbs.len() > p.limbs.len() && limbs[p.limbs.len()..].iter().any(|&l| l != 0) {
            return Err(Error::InvalidArgument("numerator does not fit in the precision".into()));
        }
        for (dst, src) in p.limbs.iter_mut().zip(&limbs) {
            *dst = *src;
        }
        let top = p.limbs[p.limbs.len() - 1];
        if top & !p.top_mask() != 0 {
            return Err(Error::InvalidArgument("numerator does not fit in the precision".into()));
        }
        Ok(p)
    }

    /// The dyadic rational `numerator / 2^log2_den`.
    pub fn from_dyadic(numerator: u64, log2_den: usize, bits: usize) -> Result<Self> {
        if log2_den > bits || (log2_den < 64 && numerator >> log2_den != 0) {
            return Err(Error::InvalidArgument(format!(
                "{numerator}/2^{log2_den} is not a phase representable with {bits} bits"
            )));
        }
        let mut p = Self::zero(bits)?;
        let shift = bits - log2_den;
        let (limb, off) = (shift / 64, shift % 64);
        p.limbs[limb] |= numerator << off;
        if off > 0 && limb + 1 < p.limbs.len() {
            p.limbs[limb + 1] |= numerator >> (64 - off);
        }
        p.mask_top();
        Ok(p)
    }

    /// Uniform phase on the `2^bits` grid.
    pub fn random<R: RngCore + ?Sized>(rng: &mut R, bits: usize) -> Result<Self> {
        let mut p = Self::zero(bits)?;
        for limb in p.limbs.iter_mut() {
            *limb = rng.next_u64();
        }
        p.mask_top();
        Ok(p)
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    pub fn numerator(&self) -> BigUint {
        let words: Vec<u32> = self.limbs.iter().flat_map(|&l| [l as u32, (l >> 32) as u32]).collect();
        BigUint::new(words)
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    fn top_mask(&self) -> u64 {
        match self.bits % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }

    fn mask_top(&mut self) {
        let mask = self.top_mask();
        if let Some(top) = self.limbs.last_mut() {
            *top &= mask;
        }
    }

    /// `t ↦ 2t mod 1`.
    pub fn double(&mut self) {
        let mut carry = 0u64;
        for limb in self.limbs.iter_mut() {
            let next = *limb >> 63;
            *limb = (*limb << 1) | carry;
            carry = next;
        }
        self.mask_top();
    }

    /// `t ↦ 3t mod 1`.
    pub fn triple(&mut self) {
        self.mul_small(3);
    }

    /// `t ↦ k·t mod 1`.
    pub fn mul_small(&mut self, k: u64) {
        let mut carry = 0u128;
        for limb in self.limbs.iter_mut() {
            let prod = *limb as u128 * k as u128 + carry;
            *limb = prod as u64;
            carry = prod >> 64;
        }
        self.mask_top();
    }

    /// Flips the least significant bit of the numerator.
    pub fn flip_lowest_bit(&mut self) {
        self.limbs[0] ^= 1;
    }

    /// The 64 numerator bits `[top - 64, top)`, zero-filled below bit 0.
    fn word_below(&self, top: usize) -> u64 {
        let bit = |i: isize| -> u64 {
            if i < 0 {
                0
            } else {
                let i = i as usize;
                (self.limbs[i / 64] >> (i % 64)) & 1
            }
        };
        let lo = top as isize - 64;
        if lo >= 0 && lo % 64 == 0 {
            return self.limbs[lo as usize / 64];
        }
        if lo >= 0 {
            let (limb, off) = (lo as usize / 64, lo as usize % 64);
            let low = self.limbs[limb] >> off;
            let high = self.limbs.get(limb + 1).copied().unwrap_or(0) << (64 - off);
            return low | high;
        }
        (0..64).fold(0u64, |acc, j| acc | (bit(lo + j as isize) << j))
    }

    /// `2^k·t mod 1` rounded down to 53 bits, as a float in `[0, 1)`.
    pub fn turns_after_doublings(&self, k: usize) -> f64 {
        if k >= self.bits {
            return 0.0;
        }
        let word = self.word_below(self.bits - k);
        crate::lattice::unit_interval(word)
    }

    pub fn turns(&self) -> f64 {
        self.turns_after_doublings(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn half_doubles_to_zero() {
        let mut h = PhaseFixedPoint::from_dyadic(1, 1, 128).unwrap();
        assert_eq!(h.turns(), 0.5);
        assert_eq!(h.turns_after_doublings(1), 0.0);
        h.double();
        assert!(h.is_zero());
    }

    #[test]
    fn tripling_a_quarter() {
        let mut q = PhaseFixedPoint::from_dyadic(1, 2, 70).unwrap();
        q.triple();
        assert_eq!(q.turns(), 0.75);
        q.triple();
        assert_eq!(q.turns(), 0.25);
    }

    #[test]
    fn rejects_oversized_numerators() {
        assert!(PhaseFixedPoint::from_limbs(vec![0, 1], 64).is_err());
        assert!(PhaseFixedPoint::from_limbs(vec![1 << 10], 10).is_err());
        assert!(PhaseFixedPoint::from_dyadic(3, 1, 64).is_err());
        assert!(PhaseFixedPoint::zero(0).is_err());
    }

    #[test]
    fn word_extraction_spans_limbs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = PhaseFixedPoint::random(&mut rng, 200).unwrap();
        let n = p.numerator();
        for k in [0usize, 1, 7, 63, 64, 100, 150, 199] {
            let shifted = (&n << k) % (BigUint::from(1u8) << 200);
            let top64: BigUint = &shifted >> (200 - 64);
            let expected = top64.iter_u64_digits().next().unwrap_or(0);
            assert_eq!(p.word_below(200 - k), expected, "k = {k}");
        }
    }

    proptest! {
        #[test]
        fn doubling_and_tripling_match_big_integers(
            seed in any::<u64>(),
            bits in 1usize..300,
            ops in prop::collection::vec(any::<bool>(), 0..40),
        ) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut p = PhaseFixedPoint::random(&mut rng, bits).unwrap();
            let modulus = BigUint::from(1u8) << bits;
            let mut n = p.numerator();
            prop_assert!(n < modulus);
            for op in ops {
                if op {
                    p.double();
                    n = (n << 1usize) % &modulus;
                } else {
                    p.triple();
                    n = (n * 3u32) % &modulus;
                }
                prop_assert_eq!(p.numerator(), n.clone());
            }
        }
    }
}
