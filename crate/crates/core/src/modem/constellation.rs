use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Square M-QAM alphabet with unit average energy and Gray labels.
///
/// Point `i` sits at in-phase level `i / side` and quadrature level
/// `i % side`; its label concatenates the Gray codes of the two levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    labels: Vec<u32>,
    bits: u32,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

impl Constellation {
    pub fn qam(m: usize) -> Result<Self> {
        if !matches!(m, 4 | 16 | 64) {
            return Err(Error::InvalidParameter(format!("QAM order {m} not in {{4, 16, 64}}")));
        }
        let side = (m as f64).sqrt().round() as u32;
        let half_bits = side.trailing_zeros();
        let scale = (1.5 / (m as f64 - 1.0)).sqrt();
        let level = |i: u32| (2.0 * i as f64 - (side as f64 - 1.0)) * scale;
        let mut points = Vec::with_capacity(m);
        let mut labels = Vec::with_capacity(m);
        for ix in 0..side {
            for iy in 0..side {
                points.push(Complex64::new(level(ix), level(iy)));
                labels.push((gray(ix) << half_bits) | gray(iy));
            }
        }
        Ok(Self { points, labels, bits: 2 * half_bits })
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Complex64 {
        self.points[i]
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    /// Index of the closest point; ties go to the lower index.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Index of `z` if it is a constellation point (to 1e-9).
    pub fn index_of(&self, z: Complex64) -> Result<usize> {
        let i = self.nearest(z);
        if (self.points[i] - z).norm() <= 1e-9 {
            Ok(i)
        } else {
            Err(Error::NotInConstellation(format!("{z}")))
        }
    }

    pub fn min_distance(&self) -> f64 {
        2.0 * (1.5 / (self.order() as f64 - 1.0)).sqrt()
    }

    pub fn random_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.order())
    }
}
