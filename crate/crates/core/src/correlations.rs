//! Windowed estimators of autocorrelation coefficients and generalised
//! n-point correlations.
//!
//! Every estimator averages over the sites `x` for which all offsets `x + zⱼ`
//! stay inside the window and divides by the number of such sites. For +1/-1
//! windows the sums are accumulated as integers, so results are exact
//! rationals rounded once. Complex sums use Neumaier compensation in row-major
//! order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::lattice::{Alphabet, LatticeVector, UnitWeight, WeightWindow};
use crate::samplers::SamplerSpec;

/// Compensated (Neumaier) summation of complex numbers.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier(acc: &mut (f64, f64), x: f64) {
    let (sum, comp) = acc;
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// Generalised correlation `⟨(z₁,m₁),…,(zₙ,mₙ)⟩`; `m = -1` is the conjugated coordinate `z*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationQuery {
    terms: Vec<(LatticeVector, i64)>,
}

impl CorrelationQuery {
    pub fn new(terms: Vec<(LatticeVector, i64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyQuery);
        }
        Ok(CorrelationQuery { terms })
    }

    /// All powers equal to one.
    pub fn sites(sites: &[LatticeVector]) -> Result<Self> {
        Self::new(sites.iter().map(|&z| (z, 1)).collect())
    }

    /// `⟨0*, z⟩`, the autocorrelation coefficient `η(z)`.
    pub fn eta(z: LatticeVector) -> Self {
        CorrelationQuery {
            terms: vec![(LatticeVector::ZERO, -1), (z, 1)],
        }
    }

    pub fn terms(&self) -> &[(LatticeVector, i64)] {
        &self.terms
    }

    /// Total power per distinct site, zero totals included.
    pub fn combined(&self) -> BTreeMap<LatticeVector, i64> {
        let mut map = BTreeMap::new();
        for &(z, m) in &self.terms {
            *map.entry(z).or_insert(0) += m;
        }
        map
    }

    /// Same sites, every power replaced by `m mod 2`; valid for +1/-1 weights.
    pub fn reduced_mod2(&self) -> Self {
        CorrelationQuery {
            terms: self.terms.iter().map(|&(z, m)| (z, m.rem_euclid(2))).collect(),
        }
    }

    pub fn translated(&self, t: LatticeVector) -> Self {
        CorrelationQuery {
            terms: self.terms.iter().map(|&(z, m)| (z + t, m)).collect(),
        }
    }

    fn bounding_box(&self) -> (LatticeVector, LatticeVector) {
        let mut lo = self.terms[0].0;
        let mut hi = lo;
        for &(z, _) in &self.terms {
            lo = LatticeVector::new(lo.a.min(z.a), lo.b.min(z.b));
            hi = LatticeVector::new(hi.a.max(z.a), hi.b.max(z.b));
        }
        (lo, hi)
    }
}

impl fmt::Display for CorrelationQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (z, m)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{z}:{m}")?;
        }
        Ok(())
    }
}

/// Parses comma-separated terms `(a,b):m`; a bare `(a,b)` means `m = 1` and
/// `(a,b)*` means `m = -1`.
impl FromStr for CorrelationQuery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |msg: &str| Error::Parse(format!("query {s:?}: {msg}"));
        let mut terms = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            rest = rest.strip_prefix('(').ok_or_else(|| err("expected '('"))?;
            let close = rest.find(')').ok_or_else(|| err("missing ')'"))?;
            let (coords, tail) = rest.split_at(close);
            let (a, b) = coords.split_once(',').ok_or_else(|| err("expected 'a,b'"))?;
            let a: i64 = a.trim().parse().map_err(|_| err("bad coordinate"))?;
            let b: i64 = b.trim().parse().map_err(|_| err("bad coordinate"))?;
            let mut tail = tail[1..].trim_start();
            let m = if let Some(t) = tail.strip_prefix('*') {
                tail = t;
                -1
            } else if let Some(t) = tail.strip_prefix(':') {
                let end = t.find(',').unwrap_or(t.len());
                let m = t[..end].trim().parse().map_err(|_| err("bad power"))?;
                tail = &t[end..];
                m
            } else {
                1
            };
            terms.push((LatticeVector::new(a, b), m));
            tail = tail.trim_start();
            rest = match tail.strip_prefix(',') {
                Some(t) => t.trim_start(),
                None if tail.is_empty() => tail,
                None => return Err(err("expected ',' between terms")),
            };
        }
        CorrelationQuery::new(terms)
    }
}

/// Local column/row range of anchors `x` whose offsets all stay in the window.
fn anchor_range(window: &WeightWindow, query: &CorrelationQuery) -> Option<(i64, i64, i64, i64)> {
    let (lo, hi) = query.bounding_box();
    let (w, h) = (window.width() as i64, window.height() as i64);
    let (a0, a1) = (-lo.a, w - 1 - hi.a);
    let (b0, b1) = (-lo.b, h - 1 - hi.b);
    (a0 <= a1 && b0 <= b1).then_some((a0, a1, b0, b1))
}

fn sign_of(w: UnitWeight) -> i64 {
    if w.re() > 0.0 {
        1
    } else {
        -1
    }
}

/// Spatial average of `Πⱼ w_{x+zⱼ}^{mⱼ}` over all admissible anchors `x`.
pub fn correlation(window: &WeightWindow, query: &CorrelationQuery) -> Result<Complex64> {
    let (a0, a1, b0, b1) = anchor_range(window, query).ok_or(Error::NoValidSites {
        width: window.width(),
        height: window.height(),
    })?;
    let count = ((a1 - a0 + 1) * (b1 - b0 + 1)) as f64;
    if window.alphabet() == Alphabet::PlusMinusOne {
        let odd: Vec<LatticeVector> = query
            .combined()
            .into_iter()
            .filter(|(_, m)| m % 2 != 0)
            .map(|(z, _)| z)
            .collect();
        let mut total: i64 = 0;
        for b in b0..=b1 {
            for a in a0..=a1 {
                let p: i64 = odd
                    .iter()
                    .map(|z| sign_of(window.at((a + z.a) as usize, (b + z.b) as usize)))
                    .product();
                total += p;
            }
        }
        return Ok(Complex64::new(total as f64 / count, 0.0));
    }

    // terms multiplied in query order, so `⟨0*, z⟩` reproduces `conj(w_x)·w_{x+z}` bit for bit
    let terms: Vec<(LatticeVector, i64)> = query.terms().iter().copied().filter(|&(_, m)| m != 0).collect();
    let mut acc = CompensatedSum::default();
    for b in b0..=b1 {
        for a in a0..=a1 {
            let mut p = Complex64::new(1.0, 0.0);
            for &(z, m) in &terms {
                p *= window.at((a + z.a) as usize, (b + z.b) as usize).pow(m);
            }
            acc.add(p);
        }
    }
    Ok(acc.value() / count)
}

/// `η̂(z) = (1/#pairs) Σ conj(w_x)·w_{x+z}` over pairs inside the window.
pub fn autocorr_coefficient(window: &WeightWindow, z: LatticeVector) -> Result<Complex64> {
    let (w, h) = (window.width() as u64, window.height() as u64);
    if z.a.unsigned_abs() >= w || z.b.unsigned_abs() >= h {
        return Err(Error::NoValidSites {
            width: window.width(),
            height: window.height(),
        });
    }
    if window.alphabet() == Alphabet::PlusMinusOne {
        return correlation(window, &CorrelationQuery::eta(z));
    }
    let (a0, a1) = (0i64.max(-z.a), (w as i64 - 1).min(w as i64 - 1 - z.a));
    let (b0, b1) = (0i64.max(-z.b), (h as i64 - 1).min(h as i64 - 1 - z.b));
    let mut acc = CompensatedSum::default();
    for b in b0..=b1 {
        for a in a0..=a1 {
            let x = window.at(a as usize, b as usize).value();
            let y = window.at((a + z.a) as usize, (b + z.b) as usize).value();
            acc.add(x.conj() * y);
        }
    }
    let count = ((a1 - a0 + 1) * (b1 - b0 + 1)) as f64;
    Ok(acc.value() / count)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub z: LatticeVector,
    pub value: Complex64,
    pub pairs: u64,
}

/// Estimated `η̂(z)` for all `|z|_∞ ≤ range`, sorted by `(a, b)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub range: usize,
    pub entries: Vec<TableEntry>,
}

impl CorrelationTable {
    pub fn get(&self, z: LatticeVector) -> Option<&TableEntry> {
        self.entries
            .binary_search_by(|e| e.z.cmp(&z))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn value(&self, z: LatticeVector) -> Option<Complex64> {
        self.get(z).map(|e| e.value)
    }

    /// `max |η̂(z)|` over `0 < |z|_∞ ≤ range`.
    pub fn max_off_origin(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| !e.z.is_zero())
            .map(|e| e.value.norm())
            .fold(0.0, f64::max)
    }

    fn lags(range: usize) -> impl Iterator<Item = LatticeVector> {
        let r = range as i64;
        (-r..=r).flat_map(move |a| (-r..=r).map(move |b| LatticeVector::new(a, b)))
    }
}

fn check_range(window: &WeightWindow, range: usize) -> Result<()> {
    if range >= window.width() || range >= window.height() {
        return Err(Error::RangeTooLarge {
            range,
            width: window.width(),
            height: window.height(),
        });
    }
    Ok(())
}

fn pair_count(window: &WeightWindow, z: LatticeVector) -> u64 {
    (window.width() as u64 - z.a.unsigned_abs()) * (window.height() as u64 - z.b.unsigned_abs())
}

fn mean_square(window: &WeightWindow) -> Complex64 {
    if window.alphabet() == Alphabet::PlusMinusOne {
        return Complex64::new(1.0, 0.0);
    }
    let mut acc = CompensatedSum::default();
    for w in window.data() {
        acc.add(Complex64::new(w.value().norm_sqr(), 0.0));
    }
    acc.value() / window.len() as f64
}

/// Autocorrelation table through a zero-padded FFT.
///
/// The window is padded to `(W + R) x (H + R)`, so cyclic lags up to `R` never
/// wrap, and each lag sum is divided by its interior pair count. For +1/-1
/// windows the lag sums are integers and are rounded to the nearest one.
pub fn autocorr_table(window: &WeightWindow, range: usize) -> Result<CorrelationTable> {
    check_range(window, range)?;
    let (w, h) = (window.width(), window.height());
    let (pw, ph) = (w + range, h + range);
    let mut buf = vec![Complex64::new(0.0, 0.0); pw * ph];
    for b in 0..h {
        for a in 0..w {
            buf[b * pw + a] = window.at(a, b).value();
        }
    }
    fft2(&mut buf, pw, ph, FftDirection::Forward);
    for v in buf.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    fft2(&mut buf, pw, ph, FftDirection::Inverse);
    let scale = 1.0 / (pw * ph) as f64;
    let exact = window.alphabet() == Alphabet::PlusMinusOne;

    let entries = CorrelationTable::lags(range)
        .map(|z| {
            let pairs = pair_count(window, z);
            let value = if z.is_zero() {
                mean_square(window)
            } else {
                let i = z.b.rem_euclid(ph as i64) as usize * pw + z.a.rem_euclid(pw as i64) as usize;
                let mut sum = buf[i] * scale;
                if exact {
                    sum = Complex64::new(sum.re.round(), 0.0);
                }
                sum / pairs as f64
            };
            TableEntry { z, value, pairs }
        })
        .collect();
    Ok(CorrelationTable { range, entries })
}

/// Same table from [`autocorr_coefficient`] at every lag.
pub fn autocorr_table_direct(window: &WeightWindow, range: usize) -> Result<CorrelationTable> {
    check_range(window, range)?;
    let lags: Vec<LatticeVector> = CorrelationTable::lags(range).collect();
    let entries = lags
        .par_iter()
        .map(|&z| {
            let value = if z.is_zero() {
                mean_square(window)
            } else {
                autocorr_coefficient(window, z)?
            };
            Ok(TableEntry {
                z,
                value,
                pairs: pair_count(window, z),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationTable { range, entries })
}

/// One estimate per size, each from an independently seeded `size x size` window.
pub fn correlation_convergence(
    spec: &SamplerSpec,
    query: &CorrelationQuery,
    sizes: &[usize],
) -> Result<Vec<(usize, Complex64)>> {
    if sizes.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidArgument("sizes must be strictly increasing".into()));
    }
    sizes
        .iter()
        .map(|&n| {
            let window = spec.resized(n).sample()?;
            Ok((n, correlation(&window, query)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::WeightLaw;
    use crate::samplers::{sample_bernoulli, sample_ledrappier, sample_times23, System};
    use proptest::prelude::*;

    fn stripes(w: usize, h: usize) -> WeightWindow {
        let signs: Vec<bool> = (0..h).flat_map(|_| (0..w).map(|a| a % 2 == 0)).collect();
        WeightWindow::from_signs(LatticeVector::ZERO, w, h, &signs).unwrap()
    }

    #[test]
    fn constant_window_correlates_to_one() {
        let ones = WeightWindow::constant(8, 8, UnitWeight::PLUS).unwrap();
        assert_eq!(
            autocorr_coefficient(&ones, LatticeVector::new(3, -2)).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let t = autocorr_table(&ones, 2).unwrap();
        assert!(t.entries.iter().all(|e| e.value == Complex64::new(1.0, 0.0)));
        assert_eq!(t.entries.len(), 25);
    }

    #[test]
    fn stripe_window() {
        let w = stripes(6, 5);
        assert_eq!(autocorr_coefficient(&w, LatticeVector::E1).unwrap().re, -1.0);
        assert_eq!(autocorr_coefficient(&w, LatticeVector::E2).unwrap().re, 1.0);
    }

    #[test]
    fn no_pairs_is_an_error() {
        let w = stripes(4, 4);
        assert!(autocorr_coefficient(&w, LatticeVector::new(4, 0)).is_err());
        assert!(matches!(autocorr_table(&w, 4), Err(Error::RangeTooLarge { .. })));
        let far = CorrelationQuery::sites(&[LatticeVector::ZERO, LatticeVector::new(0, 9)]).unwrap();
        assert!(correlation(&w, &far).is_err());
    }

    #[test]
    fn ledrappier_decorrelates_at_distance() {
        let w = sample_ledrappier(512, 512, 41).unwrap();
        let eta = autocorr_coefficient(&w, LatticeVector::new(3, 1)).unwrap();
        assert!(eta.norm() <= 0.02, "{eta}");
    }

    #[test]
    fn ledrappier_dyadic_triples_are_exactly_one() {
        let w = sample_ledrappier(256, 256, 3).unwrap();
        for n in 0..7 {
            let s = 1i64 << n;
            let q = CorrelationQuery::sites(&[LatticeVector::ZERO, LatticeVector::new(s, 0), LatticeVector::new(0, s)])
                .unwrap();
            assert_eq!(correlation(&w, &q).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn bernoulli_triple_vanishes() {
        let w = sample_bernoulli(&WeightLaw::fair_coin(), 512, 512, 12).unwrap();
        let q = CorrelationQuery::sites(&[LatticeVector::ZERO, LatticeVector::E1, LatticeVector::E2]).unwrap();
        assert!(correlation(&w, &q).unwrap().norm() <= 0.02);
    }

    #[test]
    fn times23_vanishing_pair_identity() {
        let w = sample_times23(128, 128, 5, 64).unwrap();
        let q: CorrelationQuery = "(0,1):-2,(1,1):1".parse().unwrap();
        assert!((correlation(&w, &q).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn empty_product_is_one() {
        let spec = SamplerSpec::square(System::Times23 { guard_bits: 64 }, 0, 9);
        let q = CorrelationQuery::new(vec![(LatticeVector::ZERO, 0), (LatticeVector::new(2, 1), 0)]).unwrap();
        for (_, v) in correlation_convergence(&spec, &q, &[8, 16, 32]).unwrap() {
            assert_eq!(v, Complex64::new(1.0, 0.0));
        }
        assert!(correlation_convergence(&spec, &q, &[16, 8]).is_err());
    }

    #[test]
    fn ledrappier_convergence_series_is_constant() {
        let spec = SamplerSpec::square(System::Ledrappier, 0, 1);
        let q = CorrelationQuery::sites(&[LatticeVector::ZERO, LatticeVector::E1, LatticeVector::E2]).unwrap();
        let series = correlation_convergence(&spec, &q, &[16, 32, 64, 128]).unwrap();
        assert!(series.iter().all(|(_, v)| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn bernoulli_mean_shrinks_like_inverse_size() {
        let sizes = [64usize, 128, 256, 512];
        let q = CorrelationQuery::sites(&[LatticeVector::ZERO]).unwrap();
        let mut rms = vec![0.0; sizes.len()];
        for seed in 0..20 {
            let spec = SamplerSpec::square(
                System::Bernoulli {
                    law: WeightLaw::fair_coin(),
                },
                0,
                seed,
            );
            for (i, (_, v)) in correlation_convergence(&spec, &q, &sizes)
                .unwrap()
                .into_iter()
                .enumerate()
            {
                rms[i] += v.norm_sqr() / 20.0;
            }
        }
        let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = rms.iter().map(|m| 0.5 * m.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((-1.3..=-0.7).contains(&slope), "slope {slope}");
    }

    #[test]
    fn query_grammar() {
        let q: CorrelationQuery = "(0,1):-2, (1,1):1".parse().unwrap();
        assert_eq!(
            q.terms(),
            &[(LatticeVector::new(0, 1), -2), (LatticeVector::new(1, 1), 1)]
        );
        let q: CorrelationQuery = "(0,0)*,(3,-4)".parse().unwrap();
        assert_eq!(q.terms(), &[(LatticeVector::ZERO, -1), (LatticeVector::new(3, -4), 1)]);
        assert_eq!(q.to_string().parse::<CorrelationQuery>().unwrap(), q);
        assert!("".parse::<CorrelationQuery>().is_err());
        assert!("(1,2".parse::<CorrelationQuery>().is_err());
        assert!("(1,2):x".parse::<CorrelationQuery>().is_err());
        assert!("(1,2)(3,4)".parse::<CorrelationQuery>().is_err());
    }

    fn circle_window(seed: u64, w: usize, h: usize) -> WeightWindow {
        sample_bernoulli(&WeightLaw::UniformCircle, w, h, seed).unwrap()
    }

    #[test]
    fn fft_matches_direct_on_large_window() {
        let w = circle_window(8, 256, 256);
        let (fast, slow) = (autocorr_table(&w, 6).unwrap(), autocorr_table_direct(&w, 6).unwrap());
        for (f, s) in fast.entries.iter().zip(&slow.entries) {
            assert_eq!(f.z, s.z);
            assert!((f.value - s.value).norm() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hermitian_symmetry_is_exact(seed in any::<u64>(), a in -5i64..6, b in -5i64..6) {
            let w = circle_window(seed, 12, 9);
            let z = LatticeVector::new(a, b);
            prop_assert_eq!(autocorr_coefficient(&w, -z).unwrap(), autocorr_coefficient(&w, z).unwrap().conj());
            let t = autocorr_table(&w, 5).unwrap();
            prop_assert!((t.value(-z).unwrap() - t.value(z).unwrap().conj()).norm() < 1e-10);
        }

        #[test]
        fn eta_is_a_two_point_correlation(seed in any::<u64>(), a in -5i64..6, b in -5i64..6, pm in any::<bool>()) {
            let w = if pm {
                sample_bernoulli(&WeightLaw::fair_coin(), 11, 13, seed).unwrap()
            } else {
                circle_window(seed, 11, 13)
            };
            let z = LatticeVector::new(a, b);
            prop_assert_eq!(correlation(&w, &CorrelationQuery::eta(z)).unwrap(), autocorr_coefficient(&w, z).unwrap());
        }

        #[test]
        fn tables_ignore_translation(seed in any::<u64>(), t in (-100i64..100, -100i64..100)) {
            let w = circle_window(seed, 20, 17);
            let moved = w.translate(LatticeVector::from(t));
            prop_assert_eq!(autocorr_table(&w, 4).unwrap(), autocorr_table(&moved, 4).unwrap());
            prop_assert_eq!(autocorr_table_direct(&w, 4).unwrap(), autocorr_table_direct(&moved, 4).unwrap());
        }

        #[test]
        fn plus_minus_powers_reduce_mod_two(
            seed in any::<u64>(),
            terms in prop::collection::vec(((-3i64..4, -3i64..4), -5i64..6), 1..5),
        ) {
            let w = sample_ledrappier(24, 24, seed).unwrap();
            let q = CorrelationQuery::new(terms.into_iter().map(|(z, m)| (LatticeVector::from(z), m)).collect()).unwrap();
            prop_assert_eq!(correlation(&w, &q).unwrap(), correlation(&w, &q.reduced_mod2()).unwrap());
        }

        #[test]
        fn fft_and_direct_tables_agree(seed in any::<u64>(), w in 6usize..40, h in 6usize..40, pm in any::<bool>()) {
            let win = if pm {
                sample_bernoulli(&WeightLaw::Rademacher { p: 0.3 }, w, h, seed).unwrap()
            } else {
                circle_window(seed, w, h)
            };
            let (fast, slow) = (autocorr_table(&win, 5).unwrap(), autocorr_table_direct(&win, 5).unwrap());
            prop_assert_eq!(fast.entries.len(), slow.entries.len());
            for (f, s) in fast.entries.iter().zip(&slow.entries) {
                prop_assert_eq!(f.pairs, s.pairs);
                prop_assert!((f.value - s.value).norm() < 1e-10);
            }
            prop_assert_eq!(fast.value(LatticeVector::ZERO).unwrap().re, if pm { 1.0 } else { slow.value(LatticeVector::ZERO).unwrap().re });
        }
    }
}
