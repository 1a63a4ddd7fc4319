//! Finite sums of exponential wavefunction terms.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};

/// `Σ amplitude_j · exp(phase(spectral_j))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveSum {
    terms: Vec<(Complex64, Complex64)>,
}

impl WaveSum {
    pub fn new(terms: Vec<(Complex64, Complex64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("waves", "need at least one term"));
        }
        for i in 0..terms.len() {
            for j in 0..i {
                if terms[i].1 == terms[j].1 {
                    return Err(invalid("waves", format!("repeated spectral parameter {}", terms[i].1)));
                }
            }
        }
        Ok(WaveSum { terms })
    }

    pub fn single(amplitude: Complex64, spectral: Complex64) -> Self {
        WaveSum {
            terms: vec![(amplitude, spectral)],
        }
    }

    pub fn terms(&self) -> &[(Complex64, Complex64)] {
        &self.terms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_repeated() {
        let a = (Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0));
        assert!(WaveSum::new(vec![]).is_err());
        assert!(WaveSum::new(vec![a, a]).is_err());
        assert_eq!(WaveSum::new(vec![a]).unwrap().terms().len(), 1);
    }
}
