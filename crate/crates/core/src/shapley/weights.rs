//! Coalition weights `w(s) = s! (p - s - 1)! / p!`.

use crate::error::{Error, Result};

/// Hard cap on players in exact enumeration (`2^p` coalitions).
pub const MAX_PLAYERS: usize = 16;

/// Per-coalition-size weight table for `p` players.
///
/// Weights are computed in log-factorial space and exponentiated, which
/// stays well-conditioned up to the enumeration cap. The table satisfies
/// `sum_s C(p-1, s) w(s) = 1`.
#[derive(Debug, Clone)]
pub struct CoalitionWeights {
    p: usize,
    w: Vec<f64>,
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Exact binomial coefficient; exact in f64 for the sizes allowed here.
fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

impl CoalitionWeights {
    pub fn new(p: usize) -> Result<CoalitionWeights> {
        if p == 0 || p > MAX_PLAYERS {
            return Err(Error::CoalitionLimit {
                players: p,
                max: MAX_PLAYERS,
            });
        }
        let ln_p_fact = ln_factorial(p);
        let w = (0..p)
            .map(|s| (ln_factorial(s) + ln_factorial(p - s - 1) - ln_p_fact).exp())
            .collect();
        Ok(CoalitionWeights { p, w })
    }

    pub fn players(&self) -> usize {
        self.p
    }

    /// Weight of a coalition of size `s` (a subset of the other `p - 1`
    /// players).
    #[inline]
    pub fn weight(&self, s: usize) -> f64 {
        self.w[s]
    }

    /// `|sum_s C(p-1, s) w(s) - 1|`; zero for a correct table.
    pub fn normalization_residual(&self) -> f64 {
        let total: f64 = (0..self.p)
            .map(|s| binomial(self.p - 1, s) * self.w[s])
            .sum();
        (total - 1.0).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_normalize_for_all_supported_sizes() {
        for p in 1..=MAX_PLAYERS {
            let w = CoalitionWeights::new(p).unwrap();
            assert!(
                w.normalization_residual() < 1e-12,
                "p={p} residual {}",
                w.normalization_residual()
            );
        }
    }

    #[test]
    fn two_player_weights_are_halves() {
        let w = CoalitionWeights::new(2).unwrap();
        assert!((w.weight(0) - 0.5).abs() < 1e-15);
        assert!((w.weight(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn oversized_tables_are_rejected() {
        assert!(matches!(
            CoalitionWeights::new(MAX_PLAYERS + 1),
            Err(Error::CoalitionLimit { .. })
        ));
        assert!(CoalitionWeights::new(0).is_err());
    }
}
