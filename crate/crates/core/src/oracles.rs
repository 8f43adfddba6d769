//! Exact ensemble values of correlations under each system's invariant measure.
//!
//! * Bernoulli: the query factorises over distinct sites into moments of the
//!   single-site law.
//! * Ledrappier: the product over odd-power sites is a character of the
//!   compact group of admissible configurations. Its Haar integral is 1 when
//!   the character is trivial and 0 otherwise. Every site `(a, b)` of the upper
//!   quadrant is a product of bottom-row sites with exponent pattern
//!   `x^a (1 + x)^b` over GF(2), so the character is trivial exactly when
//!   `Σ x^{aⱼ} (1 + x)^{bⱼ}` is the zero polynomial.
//!   [`ledrappier_bruteforce`] checks this by enumeration.
//! * (×2,×3): all sites are powers of one uniformly distributed coordinate, so
//!   the integral is 1 exactly when `Σ mⱼ 2^{kⱼ} 3^{ℓⱼ}` vanishes.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::correlations::CorrelationQuery;
use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, WeightLaw};
use crate::samplers::System;

/// Largest brute-force box; enumeration costs `2^(2·box + 1)` bottom rows.
pub const MAX_BRUTEFORCE_BOX: usize = 20;

/// Polynomial over GF(2), bit `i` of the bitset holding the coefficient of `x^i`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Gf2Poly {
    limbs: Vec<u64>,
}

impl Gf2Poly {
    pub fn zero() -> Self {
        Gf2Poly { limbs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::monomial(0)
    }

    pub fn monomial(exp: usize) -> Self {
        let mut p = Gf2Poly {
            limbs: vec![0; exp / 64 + 1],
        };
        p.limbs[exp / 64] = 1 << (exp % 64);
        p
    }

    pub fn from_exponents(exps: impl IntoIterator<Item = usize>) -> Self {
        let mut p = Self::zero();
        for e in exps {
            p.toggle(e);
        }
        p
    }

    /// `(1 + x)^n`: by Lucas' theorem the coefficient of `x^i` is odd exactly
    /// when the bits of `i` are a subset of the bits of `n`.
    pub fn one_plus_x_pow(n: usize) -> Self {
        let mut p = Self::zero();
        let mut i = n;
        loop {
            p.toggle(i);
            if i == 0 {
                break;
            }
            i = (i - 1) & n;
        }
        p
    }

    fn normalize(&mut self) {
        while self.limbs.last() == Some(&0) {
            self.limbs.pop();
        }
    }

    pub fn toggle(&mut self, exp: usize) {
        if self.limbs.len() <= exp / 64 {
            self.limbs.resize(exp / 64 + 1, 0);
        }
        self.limbs[exp / 64] ^= 1 << (exp % 64);
        self.normalize();
    }

    pub fn coeff(&self, exp: usize) -> bool {
        self.limbs.get(exp / 64).is_some_and(|l| (l >> (exp % 64)) & 1 == 1)
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        let top = *self.limbs.last()?;
        Some((self.limbs.len() - 1) * 64 + 63 - top.leading_zeros() as usize)
    }

    pub fn add_assign(&mut self, other: &Gf2Poly) {
        if self.limbs.len() < other.limbs.len() {
            self.limbs.resize(other.limbs.len(), 0);
        }
        for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
            *a ^= b;
        }
        self.normalize();
    }

    /// Multiplication by `x^k`.
    pub fn shl(&self, k: usize) -> Gf2Poly {
        if self.is_zero() {
            return Self::zero();
        }
        let (limb, off) = (k / 64, k % 64);
        let mut out = vec![0u64; self.limbs.len() + limb + 1];
        for (i, &l) in self.limbs.iter().enumerate() {
            out[i + limb] |= l << off;
            if off > 0 {
                out[i + limb + 1] |= l >> (64 - off);
            }
        }
        let mut p = Gf2Poly { limbs: out };
        p.normalize();
        p
    }

    /// Schoolbook carry-less product.
    pub fn mul(&self, other: &Gf2Poly) -> Gf2Poly {
        let mut acc = Self::zero();
        if let Some(d) = self.degree() {
            for i in 0..=d {
                if self.coeff(i) {
                    acc.add_assign(&other.shl(i));
                }
            }
        }
        acc
    }
}

impl fmt::Debug for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(d) = self.degree() else {
            return f.write_str("0");
        };
        let terms: Vec<String> = (0..=d)
            .rev()
            .filter(|&i| self.coeff(i))
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: Complex64,
    pub exact: bool,
}

impl OracleResult {
    fn indicator(hit: bool) -> Self {
        OracleResult {
            value: Complex64::new(if hit { 1.0 } else { 0.0 }, 0.0),
            exact: true,
        }
    }

    pub fn is_one(&self) -> bool {
        self.value == Complex64::new(1.0, 0.0)
    }
}

/// `Π_g E_ν[W^{M_g}]` with `M_g` the total power at each distinct site.
pub fn bernoulli_corr_oracle(law: &WeightLaw, query: &CorrelationQuery) -> Complex64 {
    query
        .combined()
        .values()
        .map(|&m| law.moment(m))
        .fold(Complex64::new(1.0, 0.0), |acc, v| acc * v)
}

/// Sites carrying an odd total power, translated into the nonnegative quadrant.
fn odd_sites(query: &CorrelationQuery) -> Vec<LatticeVector> {
    let odd: Vec<LatticeVector> = query
        .combined()
        .into_iter()
        .filter(|(_, m)| m % 2 != 0)
        .map(|(z, _)| z)
        .collect();
    let Some(first) = odd.first() else {
        return odd;
    };
    let lo = odd
        .iter()
        .fold(*first, |lo, z| LatticeVector::new(lo.a.min(z.a), lo.b.min(z.b)));
    odd.into_iter().map(|z| z - lo).collect()
}

pub fn ledrappier_corr_oracle(query: &CorrelationQuery) -> OracleResult {
    let mut poly = Gf2Poly::zero();
    for z in odd_sites(query) {
        poly.add_assign(&Gf2Poly::one_plus_x_pow(z.b as usize).shl(z.a as usize));
    }
    OracleResult::indicator(poly.is_zero())
}

/// Exact Haar average of the query product, by enumerating every bottom row of
/// the `(2·box + 1)`-wide determining strip and propagating it upward.
///
/// The enumeration is bit-sliced: each `u64` carries 64 bottom rows at once,
/// bit `1` standing for the weight `-1`, so the rule `w_{x+e₂} = w_x·w_{x+e₁}`
/// becomes an XOR.
pub fn ledrappier_bruteforce(query: &CorrelationQuery, bx: usize) -> Result<Rational64> {
    if bx > MAX_BRUTEFORCE_BOX {
        return Err(Error::BoxTooLarge(bx));
    }
    for &(z, _) in query.terms() {
        if z.a < 0 || z.b < 0 || z.a as usize > bx || z.b as usize > bx {
            return Err(Error::QueryOutsideBox(z));
        }
    }
    let sites: Vec<(usize, usize)> = query
        .combined()
        .into_iter()
        .filter(|(_, m)| m % 2 != 0)
        .map(|(z, _)| (z.a as usize, z.b as usize))
        .collect();
    let strip = 2 * bx + 1;
    let configs: u64 = 1 << strip;
    if sites.is_empty() {
        return Ok(Rational64::one());
    }
    let top_row = sites.iter().map(|s| s.1).max().unwrap_or(0);

    // lane masks for the low six bits of the configuration index
    const LANES: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    let live_lanes: u64 = if configs >= 64 { u64::MAX } else { (1u64 << configs) - 1 };
    let chunks = (configs / 64).max(1);

    let mut negative: u64 = 0;
    let mut row = vec![0u64; strip];
    for chunk in 0..chunks {
        for (i, cell) in row.iter_mut().enumerate() {
            *cell = if i < 6 {
                LANES[i]
            } else if (chunk >> (i - 6)) & 1 == 1 {
                u64::MAX
            } else {
                0
            };
        }
        let mut parity = 0u64;
        let mut current = row.clone();
        for level in 0..=top_row {
            for &(a, b) in &sites {
                if b == level {
                    parity ^= current[a];
                }
            }
            for i in 0..current.len() - 1 {
                current[i] ^= current[i + 1];
            }
            current.pop();
        }
        negative += (parity & live_lanes).count_ones() as u64;
    }
    let total = configs as i64;
    Ok(Rational64::new(total - 2 * negative as i64, total))
}

/// Indicator of `Σⱼ mⱼ 2^{kⱼ} 3^{ℓⱼ} = 0`, evaluated after translating the
/// support into the nonnegative quadrant (a positive unit factor).
pub fn times23_corr_oracle(query: &CorrelationQuery) -> OracleResult {
    let terms = query.terms();
    let kmin = terms.iter().map(|(z, _)| z.a).min().unwrap_or(0);
    let lmin = terms.iter().map(|(z, _)| z.b).min().unwrap_or(0);
    let two = BigInt::from(2);
    let three = BigInt::from(3);
    let sum: BigInt = terms
        .iter()
        .map(|&(z, m)| BigInt::from(m) * two.pow((z.a - kmin) as u32) * three.pow((z.b - lmin) as u32))
        .sum();
    OracleResult::indicator(sum.is_zero())
}

/// Ensemble autocorrelation coefficient `η(z)`.
pub fn expected_eta(system: &System, z: LatticeVector) -> Complex64 {
    let delta = if z.is_zero() { 1.0 } else { 0.0 };
    match system {
        System::Bernoulli { law } => {
            let m2 = law.mean().norm_sqr();
            Complex64::new(m2 + law.covariance() * delta, 0.0)
        }
        _ => Complex64::new(delta, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(sites: &[(i64, i64)]) -> CorrelationQuery {
        CorrelationQuery::sites(&sites.iter().map(|&s| LatticeVector::from(s)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn gf2_basics() {
        assert!(Gf2Poly::zero().is_zero());
        assert_eq!(Gf2Poly::zero().degree(), None);
        assert_eq!(Gf2Poly::monomial(70).degree(), Some(70));
        let mut p = Gf2Poly::monomial(3);
        p.toggle(3);
        assert!(p.is_zero());
        assert_eq!(format!("{:?}", Gf2Poly::from_exponents([0, 1, 5])), "x^5 + x + 1");
        // (1 + x)^3 = 1 + x + x^2 + x^3
        assert_eq!(Gf2Poly::one_plus_x_pow(3), Gf2Poly::from_exponents([0, 1, 2, 3]));
        assert_eq!(Gf2Poly::one_plus_x_pow(4), Gf2Poly::from_exponents([0, 4]));
    }

    #[test]
    fn lucas_matches_repeated_multiplication() {
        let base = Gf2Poly::from_exponents([0, 1]);
        let mut acc = Gf2Poly::one();
        for n in 0..200 {
            assert_eq!(Gf2Poly::one_plus_x_pow(n), acc, "n = {n}");
            acc = acc.mul(&base);
        }
    }

    #[test]
    fn bernoulli_oracle_examples() {
        let uniform = WeightLaw::UniformCircle;
        assert_eq!(
            bernoulli_corr_oracle(&uniform, &q(&[(0, 0), (1, 0)])),
            Complex64::new(0.0, 0.0)
        );
        let two = CorrelationQuery::new(vec![(LatticeVector::ZERO, 2)]).unwrap();
        assert_eq!(
            bernoulli_corr_oracle(&WeightLaw::fair_coin(), &two),
            Complex64::new(1.0, 0.0)
        );
        let zeros = CorrelationQuery::new(vec![(LatticeVector::ZERO, 0), (LatticeVector::E1, 0)]).unwrap();
        for law in [uniform, WeightLaw::Rademacher { p: 0.2 }] {
            assert_eq!(bernoulli_corr_oracle(&law, &zeros), Complex64::new(1.0, 0.0));
        }
        // conjugate pair at one site cancels
        assert_eq!(
            bernoulli_corr_oracle(&WeightLaw::UniformCircle, &CorrelationQuery::eta(LatticeVector::ZERO)),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn ledrappier_oracle_examples() {
        assert!(ledrappier_corr_oracle(&q(&[(0, 0), (1, 0), (0, 1)])).is_one());
        assert!(ledrappier_corr_oracle(&q(&[(0, 0), (2, 0), (0, 2)])).is_one());
        assert!(!ledrappier_corr_oracle(&q(&[(0, 0), (1, 0)])).is_one());
        // 1 + x^3 + (1 + x)^3 = x + x^2
        assert!(!ledrappier_corr_oracle(&q(&[(0, 0), (3, 0), (0, 3)])).is_one());
        for n in 0..12 {
            let s = 1i64 << n;
            assert!(ledrappier_corr_oracle(&q(&[(0, 0), (s, 0), (0, s)])).is_one());
        }
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(
            ledrappier_bruteforce(&q(&[(0, 0), (1, 0), (0, 1)]), 1).unwrap(),
            Rational64::one()
        );
        assert_eq!(
            ledrappier_bruteforce(&q(&[(0, 0), (1, 0)]), 1).unwrap(),
            Rational64::zero()
        );
        assert_eq!(ledrappier_bruteforce(&q(&[(0, 0)]), 0).unwrap(), Rational64::zero());
        assert_eq!(
            ledrappier_bruteforce(&q(&[(0, 0), (0, 0)]), 0).unwrap(),
            Rational64::one()
        );
        assert!(matches!(
            ledrappier_bruteforce(&q(&[(0, 0)]), 21),
            Err(Error::BoxTooLarge(21))
        ));
        assert!(matches!(
            ledrappier_bruteforce(&q(&[(0, 5)]), 4),
            Err(Error::QueryOutsideBox(_))
        ));
        assert!(ledrappier_bruteforce(&q(&[(-1, 0)]), 4).is_err());
    }

    #[test]
    fn bruteforce_agrees_with_character_test() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let sites: Vec<(i64, i64)> = (0..n).map(|_| (rng.gen_range(0..=6), rng.gen_range(0..=6))).collect();
            let query = q(&sites);
            let brute = ledrappier_bruteforce(&query, 6).unwrap();
            let oracle = ledrappier_corr_oracle(&query);
            assert_eq!(
                oracle.value.re,
                *brute.numer() as f64 / *brute.denom() as f64,
                "{query}"
            );
        }
    }

    #[test]
    fn times23_oracle_examples() {
        let pair: CorrelationQuery = "(0,1):-2,(1,1):1".parse().unwrap();
        assert!(times23_corr_oracle(&pair).is_one());
        assert!(!times23_corr_oracle(&q(&[(0, 0)])).is_one());
        assert!(!times23_corr_oracle(&q(&[(0, 0), (1, 0), (0, 1), (4, 7)])).is_one());
        // translated into negative coordinates
        assert!(times23_corr_oracle(&pair.translated(LatticeVector::new(-9, -4))).is_one());
        // far-out exponents need big integers
        let big: CorrelationQuery = "(200,90):-2,(201,90):1".parse().unwrap();
        assert!(times23_corr_oracle(&big).is_one());
    }

    #[test]
    fn expected_eta_examples() {
        assert_eq!(
            expected_eta(&System::Ledrappier, LatticeVector::new(5, -2)),
            Complex64::new(0.0, 0.0)
        );
        let biased = System::Bernoulli {
            law: WeightLaw::Rademacher { p: 0.75 },
        };
        assert_eq!(expected_eta(&biased, LatticeVector::E1), Complex64::new(0.25, 0.0));
        for system in [
            biased,
            System::Ledrappier,
            System::Times23 { guard_bits: 64 },
            System::RudinShapiro,
            System::Bernoulli {
                law: WeightLaw::UniformCircle,
            },
        ] {
            assert_eq!(expected_eta(&system, LatticeVector::ZERO), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn uniform_bernoulli_and_times23_differ_only_on_vanishing_sums() {
        let pair: CorrelationQuery = "(0,1):-2,(1,1):1".parse().unwrap();
        assert_eq!(
            bernoulli_corr_oracle(&WeightLaw::UniformCircle, &pair),
            Complex64::new(0.0, 0.0)
        );
        assert!(times23_corr_oracle(&pair).is_one());
    }

    fn arb_query() -> impl Strategy<Value = CorrelationQuery> {
        prop::collection::vec(((-6i64..7, -6i64..7), -4i64..5), 1..6).prop_map(|terms| {
            CorrelationQuery::new(terms.into_iter().map(|(z, m)| (LatticeVector::from(z), m)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn ledrappier_oracle_is_translation_invariant(query in arb_query(), t in (-50i64..50, -50i64..50)) {
            prop_assert_eq!(
                ledrappier_corr_oracle(&query),
                ledrappier_corr_oracle(&query.translated(LatticeVector::from(t)))
            );
        }

        #[test]
        fn times23_oracle_ignores_order_and_translation(
            query in arb_query(),
            t in (-50i64..50, -50i64..50),
            rot in 0usize..6,
        ) {
            let base = times23_corr_oracle(&query);
            prop_assert_eq!(base, times23_corr_oracle(&query.translated(LatticeVector::from(t))));
            let mut terms = query.terms().to_vec();
            let r = rot % terms.len();
            terms.rotate_left(r);
            terms.reverse();
            prop_assert_eq!(base, times23_corr_oracle(&CorrelationQuery::new(terms).unwrap()));
        }

        #[test]
        fn uniform_bernoulli_matches_times23_off_vanishing_sums(query in arb_query()) {
            let t23 = times23_corr_oracle(&query);
            let bern = bernoulli_corr_oracle(&WeightLaw::UniformCircle, &query);
            let all_zero = query.combined().values().all(|&m| m == 0);
            if !t23.is_one() {
                prop_assert_eq!(bern, Complex64::new(0.0, 0.0));
            } else if !all_zero {
                // vanishing sum without trivially cancelling powers: the two systems disagree
                prop_assert_eq!(bern, Complex64::new(0.0, 0.0));
            } else {
                prop_assert_eq!(bern, Complex64::new(1.0, 0.0));
            }
        }
    }
}
