//! Closed-form counts for the two-hop watchdog and the sample statistics used
//! to compare them against simulation.
//!
//! Counts are returned as base-2 exponents alongside their linear value so that
//! large or tiny quantities keep their ordering.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Result, WatchdogError};
use crate::inference::Verdict;

/// `H(q) = -q log2 q - (1-q) log2 (1-q)`, with `H(0) = H(1) = 0`.
pub fn binary_entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
}

/// Network parameters for the closed-form counts.
///
/// Nodes are numbered `1..=m+1`; node `m+1` is the relay. `d[i-1]` is the
/// minimum distance of node `i`'s code and `p[i-1][j-1]` the crossover
/// probability of the overhearing channel from node `i` to node `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub n: u32,
    pub m: usize,
    pub delta: f64,
    pub d: Vec<f64>,
    pub p: Vec<Vec<f64>>,
}

impl AnalysisParams {
    pub fn new(n: u32, m: usize, delta: f64, d: Vec<f64>, p: Vec<Vec<f64>>) -> Result<Self> {
        let params = Self { n, m, delta, d, p };
        params.validate()?;
        Ok(params)
    }

    /// Every overhearing channel at crossover `p` and every code at distance `d`.
    pub fn uniform(n: u32, m: usize, delta: f64, p: f64, d: f64) -> Result<Self> {
        Self::new(n, m, delta, vec![d; m + 1], vec![vec![p; m + 1]; m + 1])
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(WatchdogError::Analysis(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.m == 0 {
            return bad("at least one source is required".into());
        }
        if self.delta.is_nan() || self.delta < 0.0 {
            return bad(format!("delta={} must be non-negative", self.delta));
        }
        if self.d.len() != self.m + 1 {
            return bad(format!("expected {} minimum distances, got {}", self.m + 1, self.d.len()));
        }
        if self.p.len() != self.m + 1 || self.p.iter().any(|row| row.len() != self.m + 1) {
            return bad(format!("crossover matrix must be {0}x{0}", self.m + 1));
        }
        let n = self.n as f64;
        if let Some(d) = self.d.iter().find(|&&d| !(0.0..0.5).contains(&(d / n))) {
            return bad(format!("d={d} gives d/n outside [0, 0.5)"));
        }
        if let Some(p) = self.p.iter().flatten().find(|&&p| !(0.0..=0.5).contains(&p)) {
            return bad(format!("crossover {p} outside [0, 0.5]"));
        }
        Ok(())
    }

    fn check_observer(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.m {
            return Err(WatchdogError::Analysis(format!("observer {j} must lie in [1, {}]", self.m)));
        }
        Ok(())
    }

    /// `H(p_ij) - H(d_i / n)` for 1-based nodes.
    fn ball_term(&self, i: usize, j: usize) -> f64 {
        binary_entropy(self.p[i - 1][j - 1]) - binary_entropy(self.d[i - 1] / self.n as f64)
    }
}

/// A count given as `2^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Log2Count {
    pub exponent: f64,
    pub value: f64,
}

impl Log2Count {
    pub fn from_exponent(exponent: f64) -> Self {
        Self { exponent, value: exponent.exp2() }
    }
}

/// Expected number of matched codewords at observer `j`:
/// `n [Σ_{i≠j, i∈[1,m+1]} (H(p_ij) - H(d_i/n)) - 1] - mδ`.
pub fn expected_matched_count(params: &AnalysisParams, j: usize) -> Result<Log2Count> {
    params.check_observer(j)?;
    let sum: f64 = (1..=params.m + 1).filter(|&i| i != j).map(|i| params.ball_term(i, j)).sum();
    let n = params.n as f64;
    Ok(Log2Count::from_exponent(n * (sum - 1.0) - params.m as f64 * params.delta))
}

/// The same count with the digest written as `δ = εn`:
/// `n [Σ H(p_ij) - (Σ H(d_i/n) + 1 + mε)]`.
pub fn expected_matched_count_eps(params: &AnalysisParams, j: usize, epsilon: f64) -> Result<Log2Count> {
    params.check_observer(j)?;
    let others = || (1..=params.m + 1).filter(move |&i| i != j);
    let n = params.n as f64;
    let channel: f64 = others().map(|i| binary_entropy(params.p[i - 1][j - 1])).sum();
    let redundancy: f64 = others().map(|i| binary_entropy(params.d[i - 1] / n)).sum();
    Ok(Log2Count::from_exponent(n * (channel - (redundancy + 1.0 + params.m as f64 * epsilon))))
}

/// Upper bound on the number of inferred linear combinations at observer `j`:
/// `n Σ_{k∈[1,m], k≠j} (H(p_kj) - H(d_k/n)) - (m-1)δ`.
pub fn inferred_combination_bound(params: &AnalysisParams, j: usize) -> Result<Log2Count> {
    params.check_observer(j)?;
    let sum: f64 = (1..=params.m).filter(|&k| k != j).map(|k| params.ball_term(k, j)).sum();
    let n = params.n as f64;
    Ok(Log2Count::from_exponent(n * sum - (params.m as f64 - 1.0) * params.delta))
}

/// Probability that a uniformly placed word lands in the relay's digest-restricted
/// Hamming ball: `2^(n(H(p_{m+1,j}) - H(d_{m+1}/n)) - δ) / 2^n`.
pub fn relay_ball_fraction(params: &AnalysisParams, j: usize) -> Result<Log2Count> {
    params.check_observer(j)?;
    let n = params.n as f64;
    Ok(Log2Count::from_exponent(n * params.ball_term(params.m + 1, j) - params.delta - n))
}

/// Mean and variance of a sample. The variance uses the `n - 1` denominator and
/// is zero for a single observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
}

impl SampleStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(WatchdogError::NoTrials);
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let variance =
            if count > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64 } else { 0.0 };
        Ok(Self { count, mean, variance })
    }
}

/// Mean and variance of `matched_count` across trials.
pub fn empirical_matched_count(verdicts: &[Verdict]) -> Result<SampleStats> {
    let counts: Vec<f64> = verdicts.iter().map(|v| v.matched_count as f64).collect();
    SampleStats::from_values(&counts)
}

/// Result of a one-sided Welch t-test of `mean(a) > mean(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

pub fn welch_greater(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    let (sa, sb) = (SampleStats::from_values(a)?, SampleStats::from_values(b)?);
    if sa.count < 2 || sb.count < 2 {
        return Err(WatchdogError::Analysis("Welch test needs two observations per sample".into()));
    }
    let va = sa.variance / sa.count as f64;
    let vb = sb.variance / sb.count as f64;
    let se2 = va + vb;
    if se2 <= 0.0 {
        return Err(WatchdogError::Analysis("both samples are constant".into()));
    }
    let t = (sa.mean - sb.mean) / se2.sqrt();
    let df = se2 * se2 / (va * va / (sa.count - 1) as f64 + vb * vb / (sb.count - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| WatchdogError::Analysis(e.to_string()))?;
    Ok(WelchTest { t, df, p_value: 1.0 - dist.cdf(t) })
}
