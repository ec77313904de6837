//! Gray-mapped square QAM and PAM alphabets with unit average energy.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
    real: bool,
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Unit-energy Gray-coded PAM amplitudes, indexed by bit label.
fn pam_levels(levels: usize) -> Vec<f64> {
    let scale = ((levels * levels - 1) as f64 / 3.0).sqrt();
    (0..levels)
        .map(|label| {
            let i = gray_to_binary(label);
            (2.0 * i as f64 - (levels as f64 - 1.0)) / scale
        })
        .collect()
}

impl Constellation {
    /// Square M-QAM; `order` must be a power of four.
    pub fn qam(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() || !order.trailing_zeros().is_multiple_of(2) {
            return Err(Error::InvalidConstellation(order));
        }
        let side = 1usize << (order.trailing_zeros() / 2);
        let half_bits = order.trailing_zeros() as usize / 2;
        let pam = pam_levels(side);
        let norm = std::f64::consts::FRAC_1_SQRT_2;
        let points = (0..order)
            .map(|label| {
                let i = label >> half_bits;
                let q = label & (side - 1);
                Complex64::new(pam[i] * norm, pam[q] * norm)
            })
            .collect();
        Ok(Self { points, bits_per_symbol: order.trailing_zeros() as usize, real: false })
    }

    /// Real PAM with `levels` amplitudes (power of two, at least 2).
    pub fn pam(levels: usize) -> Result<Self> {
        if levels < 2 || !levels.is_power_of_two() {
            return Err(Error::InvalidConstellation(levels));
        }
        let points = pam_levels(levels).into_iter().map(|a| Complex64::new(a, 0.0)).collect();
        Ok(Self { points, bits_per_symbol: levels.trailing_zeros() as usize, real: true })
    }

    /// The per-dimension alphabet used by offset-QAM: sqrt(M)-PAM.
    pub fn oqam_pam(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() {
            return Err(Error::InvalidConstellation(order));
        }
        if !order.trailing_zeros().is_multiple_of(2) {
            return Err(Error::NonSquareOqam(order));
        }
        Self::pam(1usize << (order.trailing_zeros() / 2))
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Map an MSB-first bit stream to symbol indices.
    pub fn indices_from_bits(&self, bits: &[u8]) -> Result<Vec<usize>> {
        let m = self.bits_per_symbol;
        if !bits.len().is_multiple_of(m) {
            return Err(Error::BitCount { expected: bits.len().div_ceil(m) * m, actual: bits.len() });
        }
        Ok(bits
            .chunks(m)
            .map(|c| c.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize))
            .collect())
    }

    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        Ok(self.indices_from_bits(bits)?.into_iter().map(|i| self.points[i]).collect())
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}
