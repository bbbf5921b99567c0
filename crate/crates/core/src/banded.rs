//! Symmetric positive definite banded systems.
//!
//! The semi-implicit stepper produces a scalar pentadiagonal matrix that is
//! shared by every coordinate, so one factorization serves all `n` solves.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BandedError {
    #[error("non-positive pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("right-hand side has length {found}, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
}

/// Lower band of a symmetric matrix: `band[i][j]` holds entry `(i, i - j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bw: bandwidth,
            band: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.band[r * (self.bw + 1) + (r - c)]
        }
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)` (once on the diagonal).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(r - c <= self.bw, "entry ({i}, {j}) outside the band");
        self.band[r * (self.bw + 1) + (r - c)] += v;
    }

    pub fn factor(&self) -> Result<BandedCholesky, BandedError> {
        BandedCholesky::new(self)
    }
}

/// `A = L L^T` with `L` lower banded.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    fn new(a: &SymBanded) -> Result<Self, BandedError> {
        let (n, bw) = (a.n, a.bw);
        let w = bw + 1;
        let mut l = a.band.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = l[i * w + (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if j == i {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(BandedError::NotPositiveDefinite { row: i, pivot: sum });
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), BandedError> {
        if b.len() != self.n {
            return Err(BandedError::SizeMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut sum = b[i];
            for k in i.saturating_sub(self.bw)..i {
                sum -= self.l[i * w + (i - k)] * b[k];
            }
            b[i] = sum / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut sum = b[i];
            for k in i + 1..(i + w).min(self.n) {
                sum -= self.l[k * w + (k - i)] * b[k];
            }
            b[i] = sum / self.l[i * w];
        }
        Ok(())
    }
}
