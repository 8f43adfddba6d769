//! Lattice positions, unit weights and finite configuration windows on Z².
//!
//! A [`WeightWindow`] is a rectangular patch `origin + [0, width) x [0, height)`
//! of a configuration, stored row-major with the bottom row first. It stands in
//! for the restriction of the Dirac comb `Σ w_x δ_x` to a finite box.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest allowed deviation of `|w|²` from 1 for a [`UnitWeight`].
pub const UNIT_MODULUS_TOLERANCE: f64 = 1e-12;

/// A point `a·e₁ + b·e₂` of the square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct LatticeVector {
    pub a: i64,
    pub b: i64,
}

impl LatticeVector {
    pub const ZERO: LatticeVector = LatticeVector { a: 0, b: 0 };
    pub const E1: LatticeVector = LatticeVector { a: 1, b: 0 };
    pub const E2: LatticeVector = LatticeVector { a: 0, b: 1 };

    pub const fn new(a: i64, b: i64) -> Self {
        LatticeVector { a, b }
    }

    /// Sup norm `max(|a|, |b|)`.
    pub fn norm_inf(self) -> u64 {
        self.a.unsigned_abs().max(self.b.unsigned_abs())
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

impl Add for LatticeVector {
    type Output = LatticeVector;
    fn add(self, rhs: Self) -> Self {
        LatticeVector::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl AddAssign for LatticeVector {
    fn add_assign(&mut self, rhs: Self) {
        self.a += rhs.a;
        self.b += rhs.b;
    }
}

impl Sub for LatticeVector {
    type Output = LatticeVector;
    fn sub(self, rhs: Self) -> Self {
        LatticeVector::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl Neg for LatticeVector {
    type Output = LatticeVector;
    fn neg(self) -> Self {
        LatticeVector::new(-self.a, -self.b)
    }
}

impl From<(i64, i64)> for LatticeVector {
    fn from((a, b): (i64, i64)) -> Self {
        LatticeVector::new(a, b)
    }
}

/// A complex number on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[repr(transparent)]
pub struct UnitWeight(Complex64);

impl UnitWeight {
    pub const PLUS: UnitWeight = UnitWeight(Complex64::new(1.0, 0.0));
    pub const MINUS: UnitWeight = UnitWeight(Complex64::new(-1.0, 0.0));

    pub fn new(re: f64, im: f64) -> Result<Self> {
        if ((re * re + im * im) - 1.0).abs() > UNIT_MODULUS_TOLERANCE || !re.is_finite() || !im.is_finite() {
            return Err(Error::NotUnitModulus { re, im });
        }
        Ok(UnitWeight(Complex64::new(re, im)))
    }

    /// `exp(2πi·turns)`.
    pub fn from_turns(turns: f64) -> Self {
        let (s, c) = (std::f64::consts::TAU * turns).sin_cos();
        UnitWeight(Complex64::new(c, s))
    }

    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Self::PLUS
        } else {
            Self::MINUS
        }
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    /// Integer power; negative powers conjugate.
    pub fn pow(self, m: i64) -> Complex64 {
        let base = if m < 0 { self.0.conj() } else { self.0 };
        let mut e = m.unsigned_abs();
        let mut acc = Complex64::new(1.0, 0.0);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc *= sq;
            }
            sq *= sq;
            e >>= 1;
        }
        acc
    }

    fn is_sign(self) -> bool {
        self.0.im == 0.0 && (self.0.re == 1.0 || self.0.re == -1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alphabet {
    PlusMinusOne,
    Circle,
}

/// Finite rectangular patch of a unit-weight configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightWindow {
    origin: LatticeVector,
    width: usize,
    height: usize,
    data: Vec<UnitWeight>,
    alphabet: Alphabet,
}

impl WeightWindow {
    pub fn new(
        origin: LatticeVector,
        width: usize,
        height: usize,
        data: Vec<UnitWeight>,
        alphabet: Alphabet,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidWindow(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidWindow(format!(
                "expected {} weights, got {}",
                width * height,
                data.len()
            )));
        }
        if alphabet == Alphabet::PlusMinusOne && !data.iter().all(|w| w.is_sign()) {
            return Err(Error::InvalidWindow(
                "+1/-1 window contains a weight other than +1 or -1".into(),
            ));
        }
        Ok(WeightWindow {
            origin,
            width,
            height,
            data,
            alphabet,
        })
    }

    /// Builds a +1/-1 window from signs (`true` is +1).
    pub fn from_signs(origin: LatticeVector, width: usize, height: usize, signs: &[bool]) -> Result<Self> {
        let data = signs.iter().map(|&s| UnitWeight::from_sign(s)).collect();
        Self::new(origin, width, height, data, Alphabet::PlusMinusOne)
    }

    pub fn constant(width: usize, height: usize, weight: UnitWeight) -> Result<Self> {
        let alphabet = if weight.is_sign() {
            Alphabet::PlusMinusOne
        } else {
            Alphabet::Circle
        };
        Self::new(
            LatticeVector::ZERO,
            width,
            height,
            vec![weight; width * height],
            alphabet,
        )
    }

    pub fn origin(&self) -> LatticeVector {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn data(&self) -> &[UnitWeight] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn contains(&self, x: LatticeVector) -> bool {
        let rel = x - self.origin;
        rel.a >= 0 && rel.b >= 0 && (rel.a as u64) < self.width as u64 && (rel.b as u64) < self.height as u64
    }

    /// Weight at lattice site `x`.
    pub fn lookup(&self, x: LatticeVector) -> Result<UnitWeight> {
        if !self.contains(x) {
            return Err(Error::OutOfWindow {
                site: x,
                origin: self.origin,
                width: self.width,
                height: self.height,
            });
        }
        let rel = x - self.origin;
        Ok(self.data[rel.b as usize * self.width + rel.a as usize])
    }

    /// Weight at local column `col`, row `row` (both measured from the origin).
    #[inline]
    pub fn at(&self, col: usize, row: usize) -> UnitWeight {
        self.data[row * self.width + col]
    }

    /// Shift action: the result satisfies `lookup(result, x) = lookup(self, x + t)`.
    pub fn translate(&self, t: LatticeVector) -> WeightWindow {
        WeightWindow {
            origin: self.origin - t,
            ..self.clone()
        }
    }

    /// Site values as plain complex numbers, row-major.
    pub fn to_complex(&self) -> Vec<Complex64> {
        self.data.iter().map(|w| w.value()).collect()
    }

    /// Re-weights a +1/-1 window: `+1 ↦ φ₊`, `-1 ↦ φ₋`, i.e.
    /// `w ↦ (φ₊+φ₋)/2 + (φ₊−φ₋)/2 · w`.
    pub fn comb_weights(&self, phi_plus: Complex64, phi_minus: Complex64) -> Result<ComplexWindow> {
        if self.alphabet != Alphabet::PlusMinusOne {
            return Err(Error::AlphabetMismatch);
        }
        let mean = (phi_plus + phi_minus) * 0.5;
        let half_diff = (phi_plus - phi_minus) * 0.5;
        let data = self.data.iter().map(|w| mean + half_diff * w.value()).collect();
        Ok(ComplexWindow {
            origin: self.origin,
            width: self.width,
            height: self.height,
            data,
        })
    }
}

/// Window of arbitrary complex site values, as produced by [`WeightWindow::comb_weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexWindow {
    pub origin: LatticeVector,
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

impl ComplexWindow {
    /// Mean of `|value|²` over the window.
    pub fn mean_square(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }
}

/// Anything the spectral code can treat as a rectangle of complex site values.
pub trait SiteValues {
    fn dims(&self) -> (usize, usize);
    fn complex_values(&self) -> Vec<Complex64>;
}

impl SiteValues for WeightWindow {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
    fn complex_values(&self) -> Vec<Complex64> {
        self.to_complex()
    }
}

impl SiteValues for ComplexWindow {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
    fn complex_values(&self) -> Vec<Complex64> {
        self.data.clone()
    }
}

/// Single-site law of an i.i.d. weight field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightLaw {
    /// `+1` with probability `p`, `-1` otherwise.
    Rademacher {
        p: f64,
    },
    /// `exp(2πi·phase)` with the listed probabilities; phases in `[0, 1)`.
    FiniteCircle {
        atoms: Vec<(f64, f64)>,
    },
    UniformCircle,
}

impl WeightLaw {
    pub fn fair_coin() -> Self {
        WeightLaw::Rademacher { p: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightLaw::Rademacher { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidLaw(format!("p = {p} is not a probability")));
                }
            }
            WeightLaw::FiniteCircle { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidLaw("no atoms".into()));
                }
                let mut total = 0.0;
                for &(phase, prob) in atoms {
                    if !(0.0..1.0).contains(&phase) {
                        return Err(Error::InvalidLaw(format!("phase {phase} outside [0, 1)")));
                    }
                    if prob.is_nan() || prob < 0.0 {
                        return Err(Error::InvalidLaw(format!("negative probability {prob}")));
                    }
                    total += prob;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidLaw(format!("probabilities sum to {total}")));
                }
            }
            WeightLaw::UniformCircle => {}
        }
        Ok(())
    }

    pub fn alphabet(&self) -> Alphabet {
        match self {
            WeightLaw::Rademacher { .. } => Alphabet::PlusMinusOne,
            _ => Alphabet::Circle,
        }
    }

    /// `E[W^m]`.
    pub fn moment(&self, m: i64) -> Complex64 {
        match self {
            WeightLaw::Rademacher { p } => {
                if m % 2 == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(2.0 * p - 1.0, 0.0)
                }
            }
            WeightLaw::FiniteCircle { atoms } => atoms
                .iter()
                .map(|&(phase, prob)| {
                    // reduce m·phase mod 1 before the trig call
                    let turns = (m as f64 * phase).rem_euclid(1.0);
                    UnitWeight::from_turns(turns).value() * prob
                })
                .sum(),
            WeightLaw::UniformCircle => {
                if m == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }

    pub fn mean(&self) -> Complex64 {
        self.moment(1)
    }

    /// `E|W|² − |E W|²`, with `E|W|² = 1` on the circle.
    pub fn covariance(&self) -> f64 {
        1.0 - self.mean().norm_sqr()
    }

    /// Maps one uniform 64-bit draw to a weight.
    pub fn draw(&self, bits: u64) -> UnitWeight {
        let u = unit_interval(bits);
        match self {
            WeightLaw::Rademacher { p } => UnitWeight::from_sign(u < *p),
            WeightLaw::FiniteCircle { atoms } => {
                let mut acc = 0.0;
                for &(phase, prob) in atoms {
                    acc += prob;
                    if u < acc {
                        return UnitWeight::from_turns(phase);
                    }
                }
                // rounding left u above the accumulated total
                let last = atoms
                    .iter()
                    .rev()
                    .find(|a| a.1 > 0.0)
                    .unwrap_or(&atoms[atoms.len() - 1]);
                UnitWeight::from_turns(last.0)
            }
            WeightLaw::UniformCircle => UnitWeight::from_turns(u),
        }
    }
}

/// Top 53 bits of `bits` as a float in `[0, 1)`.
pub(crate) fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `coin`, `rademacher:P` (P = probability of +1), `circle` (uniform), or
/// `roots:K` (uniform on the K-th roots of unity).
impl FromStr for WeightLaw {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let law = match text.trim().split_once(':') {
            None if text.trim() == "coin" => WeightLaw::fair_coin(),
            None if text.trim() == "circle" => WeightLaw::UniformCircle,
            Some(("rademacher", p)) => WeightLaw::Rademacher {
                p: p.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad probability {p:?}")))?,
            },
            Some(("roots", k)) => {
                let k: usize = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad root count {k:?}")))?;
                if k == 0 {
                    return Err(Error::InvalidLaw("roots:0 has no atoms".into()));
                }
                WeightLaw::FiniteCircle {
                    atoms: (0..k).map(|j| (j as f64 / k as f64, 1.0 / k as f64)).collect(),
                }
            }
            _ => return Err(Error::Parse(format!("unknown law {text:?}"))),
        };
        law.validate()?;
        Ok(law)
    }
}
