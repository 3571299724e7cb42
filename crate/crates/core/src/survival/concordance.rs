//! Harrell's concordance index.

use super::SurvivalError;

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
    fn below(&self, mut i: usize) -> u64 {
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Twice the concordant-pair score and the number of comparable pairs.
///
/// A pair is comparable when the subject with the shorter time had an event,
/// or when both share a time and only one had an event. Higher risk for the
/// earlier failure is concordant; equal risks count one half.
pub fn concordance_counts(risk: &[f64], time: &[f64], event: &[bool]) -> (u64, u64) {
    let n = risk.len();
    let mut levels: Vec<f64> = risk.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let rank = |r: f64| levels.partition_point(|&l| l < r);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| time[b].total_cmp(&time[a]));
    let mut tree = Fenwick(vec![0; levels.len() + 1]);
    let (mut twice_concordant, mut comparable) = (0u64, 0u64);
    let mut inserted = 0u64;
    let mut s = 0;
    while s < n {
        let mut e = s;
        while e < n && time[order[e]] == time[order[s]] {
            e += 1;
        }
        for &i in &order[s..e] {
            if !event[i] {
                tree.add(rank(risk[i]));
                inserted += 1;
            }
        }
        for &i in &order[s..e] {
            if event[i] {
                let r = rank(risk[i]);
                let lower = tree.below(r);
                let tied = tree.below(r + 1) - lower;
                twice_concordant += 2 * lower + tied;
                comparable += inserted;
            }
        }
        for &i in &order[s..e] {
            if event[i] {
                tree.add(rank(risk[i]));
                inserted += 1;
            }
        }
        s = e;
    }
    (twice_concordant, comparable)
}

pub fn concordance_index(risk: &[f64], time: &[f64], event: &[bool]) -> Result<f64, SurvivalError> {
    if risk.len() != time.len() || event.len() != time.len() {
        return Err(SurvivalError::LengthMismatch(format!(
            "{} risks for {} samples",
            risk.len(),
            time.len()
        )));
    }
    let (twice, pairs) = concordance_counts(risk, time, event);
    if pairs == 0 {
        return Err(SurvivalError::NoComparablePairs);
    }
    Ok(twice as f64 / (2 * pairs) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(risk: &[f64], time: &[f64], event: &[bool]) -> (u64, u64) {
        let (mut c, mut p) = (0, 0);
        for i in 0..risk.len() {
            for j in 0..risk.len() {
                let usable = event[i] && (time[i] < time[j] || (time[i] == time[j] && !event[j]));
                if usable {
                    p += 1;
                    c += if risk[i] > risk[j] {
                        2
                    } else if risk[i] == risk[j] {
                        1
                    } else {
                        0
                    };
                }
            }
        }
        (c, p)
    }

    #[test]
    fn ordered_and_constant_risk() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let e = [true; 4];
        assert_eq!(concordance_index(&[4.0, 3.0, 2.0, 1.0], &t, &e), Ok(1.0));
        assert_eq!(concordance_index(&[1.0; 4], &t, &e), Ok(0.5));
        assert_eq!(
            concordance_index(&[1.0; 2], &[1.0, 2.0], &[false; 2]),
            Err(SurvivalError::NoComparablePairs)
        );
    }

    proptest! {
        #[test]
        fn matches_pair_enumeration(rows in proptest::collection::vec((0u8..6, 0u8..8, any::<bool>()), 1..40)) {
            let risk: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
            let time: Vec<f64> = rows.iter().map(|r| r.1 as f64).collect();
            let event: Vec<bool> = rows.iter().map(|r| r.2).collect();
            prop_assert_eq!(concordance_counts(&risk, &time, &event), brute(&risk, &time, &event));
        }
    }
}
