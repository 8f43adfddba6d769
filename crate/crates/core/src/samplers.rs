//! Finite-window samplers for the four planar systems.
//!
//! Random draws come from ChaCha8 seeded with the 64-bit job seed. Stream
//! discipline:
//!
//! * Bernoulli: local row `b` reads ChaCha stream `b`, one `u64` per site from
//!   left to right. A window's rows are therefore prefixes of the rows of any
//!   wider or taller window drawn with the same seed and law.
//! * Ledrappier: stream [`LEDRAPPIER_STREAM`], one `u64` per site of the
//!   determining bottom row (sign taken from the top bit).
//! * (×2,×3): stream [`TIMES23_STREAM`], one `u64` per limb of the anchor phase.
//! * Rudin–Shapiro: no randomness.

use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Alphabet, LatticeVector, UnitWeight, WeightLaw, WeightWindow};
use crate::phase::PhaseFixedPoint;

pub const LEDRAPPIER_STREAM: u64 = u64::MAX - 1;
pub const TIMES23_STREAM: u64 = u64::MAX - 2;
pub const MIN_GUARD_BITS: u32 = 64;
pub const DEFAULT_GUARD_BITS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "kebab-case")]
pub enum System {
    Bernoulli { law: WeightLaw },
    Ledrappier,
    Times23 { guard_bits: u32 },
    RudinShapiro,
}

impl System {
    pub fn name(&self) -> &'static str {
        match self {
            System::Bernoulli { .. } => "bernoulli",
            System::Ledrappier => "ledrappier",
            System::Times23 { .. } => "times23",
            System::RudinShapiro => "rudin-shapiro",
        }
    }

    /// Looks a system up by its CLI name; `law` only matters for `bernoulli`.
    pub fn named(name: &str, law: WeightLaw, guard_bits: u32) -> Result<System> {
        match name {
            "bernoulli" => Ok(System::Bernoulli { law }),
            "ledrappier" => Ok(System::Ledrappier),
            "times23" => Ok(System::Times23 { guard_bits }),
            "rudin-shapiro" => Ok(System::RudinShapiro),
            other => Err(Error::InvalidArgument(format!("unknown system {other:?}"))),
        }
    }

    /// Sites are independent, so periodogram ordinates are asymptotically
    /// independent exponentials.
    pub fn is_iid(&self) -> bool {
        matches!(self, System::Bernoulli { .. })
    }

    /// Sites have mean zero under the invariant measure.
    pub fn is_balanced(&self) -> bool {
        match self {
            System::Bernoulli { law } => law.mean().norm() < 1e-12,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    #[serde(flatten)]
    pub system: System,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(system: System, width: usize, height: usize, seed: u64) -> Self {
        SamplerSpec {
            system,
            width,
            height,
            seed,
        }
    }

    pub fn square(system: System, size: usize, seed: u64) -> Self {
        Self::new(system, size, size, seed)
    }

    pub fn sample(&self) -> Result<WeightWindow> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidWindow(format!(
                "dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        match &self.system {
            System::Bernoulli { law } => sample_bernoulli(law, self.width, self.height, self.seed),
            System::Ledrappier => sample_ledrappier(self.width, self.height, self.seed),
            System::Times23 { guard_bits } => sample_times23(self.width, self.height, self.seed, *guard_bits),
            System::RudinShapiro => sample_rudin_shapiro_2d(self.width, self.height),
        }
    }

    /// Same system, different size; the seed is mixed with the size so that
    /// series of windows are drawn independently.
    pub fn resized(&self, size: usize) -> SamplerSpec {
        SamplerSpec {
            system: self.system.clone(),
            width: size,
            height: size,
            seed: derive_seed(self.seed, size as u64),
        }
    }
}

/// SplitMix64 finaliser applied to `base ⊕ φ·salt`.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sample_bernoulli(law: &WeightLaw, width: usize, height: usize, seed: u64) -> Result<WeightWindow> {
    law.validate()?;
    let mut data = vec![UnitWeight::PLUS; width * height];
    data.par_chunks_mut(width).enumerate().for_each(|(row, out)| {
        let mut rng = stream_rng(seed, row as u64);
        for w in out.iter_mut() {
            *w = law.draw(rng.next_u64());
        }
    });
    WeightWindow::new(LatticeVector::ZERO, width, height, data, law.alphabet())
}

/// Propagates a determining bottom row upward with `w_{x+e₂} = w_x · w_{x+e₁}`.
///
/// `bottom[i]` is `true` for `+1`; it needs at least `width + height - 1`
/// entries so that the top row is still `width` sites wide.
pub fn ledrappier_from_bottom_row(bottom: &[bool], width: usize, height: usize) -> Result<WeightWindow> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidWindow(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if bottom.len() + 1 < width + height {
        return Err(Error::InvalidArgument(format!(
            "bottom row of length {} cannot fill {width}x{height}",
            bottom.len()
        )));
    }
    let mut row = bottom.to_vec();
    let mut signs = Vec::with_capacity(width * height);
    for _ in 0..height {
        signs.extend_from_slice(&row[..width]);
        for i in 0..row.len() - 1 {
            row[i] = row[i] == row[i + 1];
        }
        row.pop();
    }
    WeightWindow::from_signs(LatticeVector::ZERO, width, height, &signs)
}

pub fn sample_ledrappier(width: usize, height: usize, seed: u64) -> Result<WeightWindow> {
    let mut rng = stream_rng(seed, LEDRAPPIER_STREAM);
    let bottom: Vec<bool> = (0..width + height).map(|_| rng.next_u64() >> 63 == 0).collect();
    ledrappier_from_bottom_row(&bottom, width, height)
}

/// Anchor precision: `width + ⌈height·log₂3⌉ + guard_bits`, rounded up to a whole limb.
pub fn times23_precision(width: usize, height: usize, guard_bits: u32) -> usize {
    let log3 = if height == 0 {
        0
    } else {
        // 3^h is not a power of two, so its bit length is ⌈h·log₂3⌉
        BigUint::from(3u8).pow(height as u32).bits() as usize
    };
    (width + log3 + guard_bits as usize).div_ceil(64) * 64
}

/// Fills the quadrant window from its anchor: site `(k, ℓ)` carries `2^k·3^ℓ·t mod 1`.
pub fn times23_from_anchor(anchor: &PhaseFixedPoint, width: usize, height: usize) -> Result<WeightWindow> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidWindow(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    let mut column_anchors = Vec::with_capacity(height);
    let mut current = anchor.clone();
    for _ in 0..height {
        column_anchors.push(current.clone());
        current.triple();
    }
    let mut data = vec![UnitWeight::PLUS; width * height];
    data.par_chunks_mut(width)
        .zip(column_anchors.par_iter())
        .for_each(|(out, row_anchor)| {
            for (k, w) in out.iter_mut().enumerate() {
                *w = UnitWeight::from_turns(row_anchor.turns_after_doublings(k));
            }
        });
    WeightWindow::new(LatticeVector::ZERO, width, height, data, Alphabet::Circle)
}

pub fn sample_times23(width: usize, height: usize, seed: u64, guard_bits: u32) -> Result<WeightWindow> {
    if guard_bits < MIN_GUARD_BITS {
        return Err(Error::GuardBitsTooSmall {
            min: MIN_GUARD_BITS,
            got: guard_bits,
        });
    }
    let bits = times23_precision(width, height, guard_bits);
    let mut rng = stream_rng(seed, TIMES23_STREAM);
    let anchor = PhaseFixedPoint::random(&mut rng, bits)?;
    times23_from_anchor(&anchor, width, height)
}

/// `(−1)^{number of (possibly overlapping) 11 blocks in the binary expansion of n}`.
pub fn rudin_shapiro_1d(n: u64) -> i8 {
    if (n & (n >> 1)).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Product comb `w_(a,b) = r_a · r_b` on the positive quadrant.
pub fn sample_rudin_shapiro_2d(width: usize, height: usize) -> Result<WeightWindow> {
    let cols: Vec<i8> = (0..width as u64).map(rudin_shapiro_1d).collect();
    let signs: Vec<bool> = (0..height as u64)
        .flat_map(|b| {
            let rb = rudin_shapiro_1d(b);
            cols.iter().map(move |&ra| ra * rb == 1)
        })
        .collect();
    WeightWindow::from_signs(LatticeVector::ZERO, width, height, &signs)
}
