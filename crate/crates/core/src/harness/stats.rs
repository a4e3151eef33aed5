//! Counters, intervals and mismatch-episode bookkeeping.

use serde::{Deserialize, Serialize};

use crate::protocol::ExchangeRecord;

/// Normal-approximation interval for `errors / trials`, clamped to `[0, 1]`.
///
/// A zero-error cell would give a zero-width interval, so it reports
/// `(0, 3/trials)` instead (rule of three, ~95%).
pub fn binomial_ci(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials >= 1 && errors <= trials, "need 0 <= errors <= trials, trials >= 1");
    let n = trials as f64;
    if errors == 0 {
        return (0.0, (3.0 / n).min(1.0));
    }
    let p = errors as f64 / n;
    let half = z * (p * (1.0 - p) / n).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// Length distribution of mismatch episodes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub count: u64,
    /// Sum of lengths, in accepted exchanges.
    pub total_length: u64,
    /// `histogram[k]` counts episodes of length `k`.
    pub histogram: Vec<u64>,
}

impl EpisodeStats {
    pub fn mean_length(&self) -> Option<f64> {
        (self.count > 0).then(|| self.total_length as f64 / self.count as f64)
    }

    fn push(&mut self, len: u64) {
        self.count += 1;
        self.total_length += len;
        let idx = len as usize;
        if self.histogram.len() <= idx {
            self.histogram.resize(idx + 1, 0);
        }
        self.histogram[idx] += 1;
    }

    pub fn merge(&mut self, other: &EpisodeStats) {
        self.count += other.count;
        self.total_length += other.total_length;
        if self.histogram.len() < other.histogram.len() {
            self.histogram.resize(other.histogram.len(), 0);
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
    }
}

/// Streaming episode detector.
///
/// An episode opens on the exchange that leaves the states mismatched and
/// closes on the exchange that realigns them. Its length is the number of
/// accepted exchanges made while mismatched, realigning one included.
/// Whatever is still open when the stream ends is dropped.
#[derive(Debug, Clone, Default)]
pub struct EpisodeTracker {
    open: Option<u64>,
    stats: EpisodeStats,
}

impl EpisodeTracker {
    pub fn observe(&mut self, record: &ExchangeRecord) {
        let before = record.states_matched_before();
        let after = record.states_matched_after();
        if let Some(len) = self.open.as_mut() {
            if record.accepted {
                *len += 1;
            }
        }
        if after {
            if let Some(len) = self.open.take() {
                self.stats.push(len);
            }
        } else if before {
            self.open = Some(0);
        }
    }

    pub fn finish(self) -> EpisodeStats {
        self.stats
    }
}

pub fn mismatch_episode_stats(records: &[ExchangeRecord]) -> EpisodeStats {
    let mut t = EpisodeTracker::default();
    for r in records {
        t.observe(r);
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_errors_use_rule_of_three() {
        assert_eq!(binomial_ci(0, 1000, 1.96), (0.0, 0.003));
        assert_eq!(binomial_ci(0, 1, 1.96), (0.0, 1.0));
    }

    #[test]
    fn half_is_symmetric() {
        let (lo, hi) = binomial_ci(500, 1000, 1.96);
        assert!(((0.5 - lo) - (hi - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn clamped() {
        let (lo, hi) = binomial_ci(1, 3, 5.0);
        assert_eq!(lo, 0.0);
        assert!(hi <= 1.0);
        assert_eq!(binomial_ci(3, 3, 1.96).1, 1.0);
    }

    #[test]
    fn close_to_clopper_pearson_width() {
        // exact 95% interval for 3/100 is (0.006230, 0.085176)
        let exact = 0.085176 - 0.006230;
        let (lo, hi) = binomial_ci(3, 100, 1.96);
        assert!(((hi - lo) - exact).abs() / exact < 0.3, "{lo} {hi}");
    }

    #[test]
    fn merge_adds() {
        let mut a = EpisodeStats::default();
        a.push(2);
        let mut b = EpisodeStats::default();
        b.push(5);
        b.push(2);
        a.merge(&b);
        assert_eq!(a.count, 3);
        assert_eq!(a.total_length, 9);
        assert_eq!(a.histogram, vec![0, 0, 2, 0, 0, 1]);
        assert_eq!(a.mean_length(), Some(3.0));
        assert_eq!(EpisodeStats::default().mean_length(), None);
    }
}
