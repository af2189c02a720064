use crate::base::ucb_select;

/// Per-learner play counts and reward sums kept by index-based meta-learners.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayStats {
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl PlayStats {
    pub fn new(learners: usize) -> Self {
        PlayStats {
            counts: vec![0; learners],
            sums: vec![0.0; learners],
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn update(&mut self, i: usize, reward: f64) {
        self.counts[i] += 1;
        self.sums[i] += reward;
    }
}

/// Pure exploitation: unplayed learners first, then the best empirical mean.
pub fn greedy_meta_select(counts: &[u64], sums: &[f64]) -> usize {
    ucb_select(counts, sums, 0.0, 1.0)
}

/// UCB over base learners, the same rule base UCB uses over arms.
pub fn ucb_meta_select(counts: &[u64], sums: &[f64], c: f64, delta: f64) -> usize {
    ucb_select(counts, sums, c, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::ucb_index;
    use approx::assert_abs_diff_eq;

    #[test]
    fn greedy_plays_unplayed_first() {
        assert_eq!(greedy_meta_select(&[3, 0, 0], &[3.0, 0.0, 0.0]), 1);
    }

    #[test]
    fn greedy_argmax_with_low_index_ties() {
        assert_eq!(greedy_meta_select(&[2, 4, 1], &[1.0, 3.0, 0.75]), 1);
        assert_eq!(greedy_meta_select(&[2, 4], &[1.0, 2.0]), 0);
    }

    #[test]
    fn ucb_meta_index_value() {
        // 0.5 + sqrt(ln(4 / 0.1) / 4)
        assert_abs_diff_eq!(ucb_index(0.5, 4, 1.0, 0.1), 1.460_323, epsilon = 1e-6);
    }

    #[test]
    fn ucb_meta_prefers_less_played() {
        assert_eq!(ucb_meta_select(&[100, 4], &[60.0, 2.0], 1.0, 0.1), 1);
        assert_eq!(ucb_meta_select(&[100, 4], &[60.0, 2.0], 0.0, 0.1), 0);
    }

    #[test]
    fn zero_scaling_is_greedy() {
        let counts = [5, 7, 2, 9];
        let sums = [2.0, 4.0, 1.5, 3.0];
        assert_eq!(ucb_meta_select(&counts, &sums, 0.0, 0.1), greedy_meta_select(&counts, &sums));
    }

    #[test]
    fn stats_accumulate() {
        let mut s = PlayStats::new(2);
        s.update(1, 0.5);
        s.update(1, -1.5);
        assert_eq!(s.counts(), &[0, 2]);
        assert_eq!(s.sums(), &[0.0, -1.0]);
    }
}
