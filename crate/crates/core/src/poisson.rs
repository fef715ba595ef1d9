//! Truncated Poisson weights for uniformization.
//!
//! The probability mass at the mode is evaluated directly (an exact product
//! for small modes, a Stirling expansion around the mode otherwise), and the
//! remaining weights follow from the ratio recurrences
//! `p(k+1) = p(k) * lambda / (k+1)` and `p(k-1) = p(k) * k / lambda`. The
//! window grows outward from the mode until a geometric bound on each omitted
//! tail drops below `epsilon / 2`, so the weights are true pmf values (not
//! renormalized) and their sum lies in `[1 - epsilon, 1]`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWeights {
    pub left: usize,
    pub right: usize,
    /// `weights[i]` is the Poisson mass at `left + i`.
    pub weights: Vec<f64>,
}

impl PoissonWeights {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass at `k`, 0 outside the window.
    pub fn weight(&self, k: usize) -> f64 {
        if k < self.left || k > self.right {
            0.0
        } else {
            self.weights[k - self.left]
        }
    }

    /// Largest index of maximal mass (`lambda - 1` and `lambda` tie for
    /// integer `lambda`).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w >= self.weights[best] {
                best = i;
            }
        }
        self.left + best
    }
}

const EXACT_MODE_LIMIT: usize = 500;

fn mode_mass(lambda: f64, mode: usize) -> f64 {
    if mode <= EXACT_MODE_LIMIT {
        let mut p = libm::exp(-lambda);
        for k in 1..=mode {
            p *= lambda / k as f64;
        }
        p
    } else {
        let m = mode as f64;
        let inv = 1.0 / m;
        let inv2 = inv * inv;
        let stirling = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
        let ln_p = m * libm::log1p((lambda - m) / m)
            - (lambda - m)
            - 0.5 * libm::log(2.0 * core::f64::consts::PI * m)
            - stirling;
        libm::exp(ln_p)
    }
}

/// Poisson(`lambda`) weights on a window `[left, right]` whose omitted mass is
/// at most `epsilon`.
///
/// Fails with [`Error::Resource`] when the right end would exceed
/// `max_index`.
pub fn poisson_truncation(lambda: f64, epsilon: f64, max_index: usize) -> Result<PoissonWeights> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::input(format!("Poisson rate must be finite and >= 0, got {lambda}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::input(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if lambda == 0.0 {
        return Ok(PoissonWeights {
            left: 0,
            right: 0,
            weights: alloc::vec![1.0],
        });
    }
    let mode_f = libm::floor(lambda);
    if mode_f > max_index as f64 {
        return Err(resource(mode_f as u128, max_index));
    }
    let mode = mode_f as usize;
    let half = epsilon / 2.0;
    let p_mode = mode_mass(lambda, mode);

    let mut right = Vec::new();
    right.push(p_mode);
    let mut k = mode;
    loop {
        let w = right[right.len() - 1];
        let r = lambda / (k as f64 + 2.0);
        if w * r / (1.0 - r) <= half {
            break;
        }
        if k + 1 > max_index {
            return Err(resource(k as u128 + 1, max_index));
        }
        right.push(w * lambda / (k as f64 + 1.0));
        k += 1;
    }
    let right_index = k;

    let mut left = Vec::new();
    let mut k = mode;
    let mut w = p_mode;
    while k > 0 {
        let rho = k as f64 / lambda;
        if rho < 1.0 && w * rho / (1.0 - rho) <= half {
            break;
        }
        w *= rho;
        left.push(w);
        k -= 1;
    }
    let left_index = k;

    left.reverse();
    left.extend(right);
    Ok(PoissonWeights {
        left: left_index,
        right: right_index,
        weights: left,
    })
}

fn resource(required: u128, cap: usize) -> Error {
    Error::Resource {
        what: "Poisson truncation right bound".to_string(),
        required: required.to_string(),
        cap: cap.to_string(),
    }
}
