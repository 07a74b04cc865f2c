//! Prediction metrics for right-censored outcomes.
//!
//! Predictions are predicted survival times: a larger value means a better
//! prognosis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_label: String,
    /// Mean absolute error over uncensored rows, in time units.
    pub mae: f64,
    pub c_index: f64,
    pub n_comparable_pairs: u64,
    pub n_events_used: usize,
}

fn check_lengths(pred: &[f64], time: &[f64], status: &[u8]) -> Result<()> {
    if pred.len() != time.len() || pred.len() != status.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} predictions, {} times, {} status flags",
            pred.len(),
            time.len(),
            status.len()
        )));
    }
    if pred.iter().chain(time).any(|v| !v.is_finite()) {
        return Err(Error::invalid("predictions and times must be finite"));
    }
    Ok(())
}

fn ratio(twice_concordant: u64, comparable: u64) -> Result<(f64, u64)> {
    if comparable == 0 {
        return Err(Error::UndefinedMetric(
            "c-index has no comparable pairs".into(),
        ));
    }
    Ok((
        twice_concordant as f64 / (2 * comparable) as f64,
        comparable,
    ))
}

/// Harrell's concordance by direct enumeration of all ordered pairs.
///
/// A pair `(i, j)` is comparable when `time[i] < time[j]` and row `i` is an
/// event. It scores 1 when `pred[i] < pred[j]` and 1/2 on a prediction tie.
pub fn c_index_pairwise(pred: &[f64], time: &[f64], status: &[u8]) -> Result<(f64, u64)> {
    check_lengths(pred, time, status)?;
    let n = pred.len();
    let mut comparable = 0u64;
    let mut twice_concordant = 0u64;
    for i in 0..n {
        if status[i] != 1 {
            continue;
        }
        for j in 0..n {
            if time[i] < time[j] {
                comparable += 1;
                if pred[i] < pred[j] {
                    twice_concordant += 2;
                } else if pred[i] == pred[j] {
                    twice_concordant += 1;
                }
            }
        }
    }
    ratio(twice_concordant, comparable)
}

/// Fenwick tree of counts over prediction ranks.
struct Fenwick(Vec<u64>);

impl Fenwick {
    fn add(&mut self, mut i: usize) {
        i += 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted ranks `< i`.
    fn prefix(&self, mut i: usize) -> u64 {
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Harrell's concordance in O(N log N). Gives exactly the same result as
/// [`c_index_pairwise`].
pub fn c_index(pred: &[f64], time: &[f64], status: &[u8]) -> Result<(f64, u64)> {
    check_lengths(pred, time, status)?;
    let n = pred.len();
    let mut levels = pred.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| a == b);
    let ranks: Vec<usize> = pred
        .iter()
        .map(|&p| levels.partition_point(|&l| l < p))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| time[b].total_cmp(&time[a]));

    let mut tree = Fenwick(vec![0; levels.len() + 1]);
    let mut inserted = 0u64;
    let mut comparable = 0u64;
    let mut twice_concordant = 0u64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && time[order[end]] == time[order[start]] {
            end += 1;
        }
        // every inserted row has a strictly larger time than this group
        for &i in &order[start..end] {
            if status[i] != 1 {
                continue;
            }
            let r = ranks[i];
            let below_or_equal = tree.prefix(r + 1);
            let equal = below_or_equal - tree.prefix(r);
            let greater = inserted - below_or_equal;
            comparable += inserted;
            twice_concordant += 2 * greater + equal;
        }
        for &i in &order[start..end] {
            tree.add(ranks[i]);
        }
        inserted += (end - start) as u64;
        start = end;
    }
    ratio(twice_concordant, comparable)
}

/// Mean absolute error over rows with an observed event.
pub fn mae(pred: &[f64], time: &[f64], status: &[u8]) -> Result<(f64, usize)> {
    check_lengths(pred, time, status)?;
    let (sum, n) = pred
        .iter()
        .zip(time)
        .zip(status)
        .filter(|(_, &s)| s == 1)
        .fold((0.0, 0usize), |(s, n), ((p, t), _)| {
            (s + (p - t).abs(), n + 1)
        });
    if n == 0 {
        return Err(Error::UndefinedMetric(
            "MAE needs at least one event".into(),
        ));
    }
    Ok((sum / n as f64, n))
}

pub fn evaluate(label: &str, pred: &[f64], time: &[f64], status: &[u8]) -> Result<EvalReport> {
    let (mae, n_events_used) = mae(pred, time, status)?;
    let (c, pairs) = c_index(pred, time, status)?;
    Ok(EvalReport {
        model_label: label.to_string(),
        mae,
        c_index: c,
        n_comparable_pairs: pairs,
        n_events_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_reversed() {
        let t = [1.0, 2.0, 3.0];
        assert_eq!(c_index(&[1.0, 2.0, 3.0], &t, &[1, 1, 1]).unwrap(), (1.0, 3));
        assert_eq!(c_index(&[3.0, 2.0, 1.0], &t, &[1, 1, 1]).unwrap(), (0.0, 3));
    }

    #[test]
    fn censored_hand_example() {
        let got = c_index(&[1.5, 1.0, 2.5], &[1.0, 2.0, 3.0], &[1, 0, 1]).unwrap();
        assert_eq!(got, (0.5, 2));
        let brute = c_index_pairwise(&[1.5, 1.0, 2.5], &[1.0, 2.0, 3.0], &[1, 0, 1]).unwrap();
        assert_eq!(brute, got);
    }

    #[test]
    fn tied_predictions_count_half() {
        assert_eq!(
            c_index(&[2.0, 2.0], &[1.0, 2.0], &[1, 1]).unwrap(),
            (0.5, 1)
        );
    }

    #[test]
    fn no_comparable_pairs() {
        let err = c_index(&[1.0, 2.0], &[3.0, 3.0], &[1, 1]).unwrap_err();
        assert!(matches!(err, Error::UndefinedMetric(_)));
        assert!(c_index(&[1.0, 2.0], &[1.0, 3.0], &[0, 0]).is_err());
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 5.0], &[1.0, 5.0], &[1, 0]).unwrap(), (0.0, 1));
        assert_eq!(mae(&[2.0, 100.0], &[1.0, 2.0], &[1, 0]).unwrap(), (1.0, 1));
        let (m, n) = mae(&[2.0, 2.0, 1.0], &[1.0, 2.0, 4.0], &[1, 1, 1]).unwrap();
        assert!((m - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(n, 3);
        assert!(matches!(
            mae(&[1.0], &[1.0], &[0]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            c_index(&[1.0], &[1.0, 2.0], &[1, 1]),
            Err(Error::InvalidInput(_))
        ));
    }
}
