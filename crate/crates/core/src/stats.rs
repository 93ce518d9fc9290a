use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit of `counts` against `probs`.
///
/// Bins with zero expected probability are dropped from the statistic; a
/// single observation in such a bin makes the p-value 0.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> ChiSquareTest {
    assert_eq!(counts.len(), probs.len(), "counts and probabilities must align");
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let mut statistic = 0.0;
    let mut bins = 0usize;
    let mut impossible = false;
    for (&c, &p) in counts.iter().zip(probs) {
        if p <= 0.0 {
            impossible |= c > 0;
            continue;
        }
        bins += 1;
        let expected = nf * p;
        let d = c as f64 - expected;
        statistic += d * d / expected;
    }
    let dof = bins.saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("dof > 0");
        dist.sf(statistic)
    };
    ChiSquareTest {
        statistic,
        dof,
        p_value,
    }
}
