use serde::{Deserialize, Serialize};

use super::{SurvivalError, SurvivalObservation};
use crate::special::chi_square_sf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRankResult {
    pub chi_square: f64,
    /// Rank of the (O - E) covariance matrix; k - 1 unless groups are degenerate.
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
}

const PIVOT_TOLERANCE: f64 = 1e-12;

/// `u' V^- u` for a symmetric positive semidefinite `v`, via an LDL' sweep
/// that skips vanishing pivots. Returns the quadratic form and the rank.
fn quadratic_form_psd(v: &[Vec<f64>], u: &[f64]) -> (f64, usize) {
    let m = u.len();
    let mut a: Vec<Vec<f64>> = v.to_vec();
    let mut z = u.to_vec();
    let scale = (0..m).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(1.0);
    let mut stat = 0.0;
    let mut rank = 0;
    for p in 0..m {
        let pivot = a[p][p];
        if pivot.abs() <= PIVOT_TOLERANCE * scale {
            continue;
        }
        rank += 1;
        stat += z[p] * z[p] / pivot;
        for i in (p + 1)..m {
            let f = a[i][p] / pivot;
            if f == 0.0 {
                continue;
            }
            z[i] -= f * z[p];
            let (upper, lower) = a.split_at_mut(i);
            for (aij, apj) in lower[0][p + 1..].iter_mut().zip(&upper[p][p + 1..]) {
                *aij -= f * apj;
            }
        }
    }
    (stat.max(0.0), rank)
}

/// k-group log-rank test. Group order follows `groups`; the statistic is
/// invariant to that order.
pub fn logrank_test(
    observations: &[SurvivalObservation],
    groups: &[String],
) -> Result<LogRankResult, SurvivalError> {
    if groups.len() < 2 {
        return Err(SurvivalError::SingleGroup);
    }
    let k = groups.len();
    let mut data: Vec<(f64, bool, usize)> = Vec::with_capacity(observations.len());
    for o in observations {
        let g = groups
            .iter()
            .position(|g| *g == o.group)
            .ok_or_else(|| SurvivalError::UnknownGroup(o.group.clone()))?;
        if o.time <= 0.0 || !o.time.is_finite() {
            return Err(SurvivalError::NonPositiveTime(o.time));
        }
        data.push((o.time, o.event, g));
    }
    let mut sizes = vec![0usize; k];
    for d in &data {
        sizes[d.2] += 1;
    }
    if sizes.iter().filter(|&&n| n > 0).count() < 2 {
        return Err(SurvivalError::SingleGroup);
    }
    if !data.iter().any(|d| d.1) {
        return Err(SurvivalError::NoEvents);
    }
    data.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut at_risk = sizes.clone();
    let mut observed = vec![0.0; k];
    let mut expected = vec![0.0; k];
    let mut cov = vec![vec![0.0; k]; k];
    let mut i = 0;
    while i < data.len() {
        let t = data[i].0;
        let mut j = i;
        let mut deaths = vec![0usize; k];
        let mut leaving = vec![0usize; k];
        while j < data.len() && data[j].0 == t {
            if data[j].1 {
                deaths[data[j].2] += 1;
            }
            leaving[data[j].2] += 1;
            j += 1;
        }
        let d: usize = deaths.iter().sum();
        if d > 0 {
            let n: usize = at_risk.iter().sum();
            let nf = n as f64;
            let df = d as f64;
            for g in 0..k {
                observed[g] += deaths[g] as f64;
                expected[g] += df * at_risk[g] as f64 / nf;
            }
            if n > 1 {
                let factor = df * (nf - df) / (nf - 1.0);
                for a in 0..k {
                    let pa = at_risk[a] as f64 / nf;
                    for b in 0..k {
                        let pb = at_risk[b] as f64 / nf;
                        let delta = if a == b { 1.0 } else { 0.0 };
                        cov[a][b] += factor * pa * (delta - pb);
                    }
                }
            }
        }
        for g in 0..k {
            at_risk[g] -= leaving[g];
        }
        i = j;
    }

    // drop the last group: the full covariance matrix is singular
    let u: Vec<f64> = (0..k - 1).map(|g| observed[g] - expected[g]).collect();
    let v: Vec<Vec<f64>> = (0..k - 1).map(|a| cov[a][..k - 1].to_vec()).collect();
    let (chi_square, rank) = quadratic_form_psd(&v, &u);
    let p_value = if rank == 0 {
        1.0
    } else {
        chi_square_sf(chi_square, rank as f64)
    };
    Ok(LogRankResult {
        chi_square,
        degrees_of_freedom: rank,
        p_value,
        observed,
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(data: &[(f64, bool, &str)]) -> Vec<SurvivalObservation> {
        data.iter()
            .map(|&(t, e, g)| SurvivalObservation::new(t, e, g))
            .collect()
    }

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn separated_groups() {
        let o = obs(&[
            (1.0, true, "A"),
            (2.0, true, "A"),
            (3.0, true, "B"),
            (4.0, true, "B"),
        ]);
        let r = logrank_test(&o, &labels(&["A", "B"])).unwrap();
        // O_A = 2, E_A = 5/6, Var = 17/36
        let expected_chi = (2.0 - 5.0 / 6.0_f64).powi(2) / (17.0 / 36.0);
        assert!((r.chi_square - expected_chi).abs() < 1e-12);
        assert!((r.chi_square - 2.882).abs() < 1e-2);
        assert!((r.p_value - 0.090).abs() < 1e-2);
        assert_eq!(r.degrees_of_freedom, 1);
    }

    #[test]
    fn identical_groups() {
        let o = obs(&[
            (1.0, true, "A"),
            (3.0, false, "A"),
            (1.0, true, "B"),
            (3.0, false, "B"),
        ]);
        let r = logrank_test(&o, &labels(&["A", "B"])).unwrap();
        assert!(r.chi_square.abs() < 1e-15);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_group_is_single_group() {
        let o = obs(&[(1.0, true, "A"), (2.0, false, "A")]);
        assert_eq!(
            logrank_test(&o, &labels(&["A", "B"])).unwrap_err(),
            SurvivalError::SingleGroup
        );
        assert_eq!(
            logrank_test(&o, &labels(&["A"])).unwrap_err(),
            SurvivalError::SingleGroup
        );
    }

    #[test]
    fn no_events() {
        let o = obs(&[(1.0, false, "A"), (2.0, false, "B")]);
        assert_eq!(
            logrank_test(&o, &labels(&["A", "B"])).unwrap_err(),
            SurvivalError::NoEvents
        );
    }

    #[test]
    fn three_groups_order_invariant() {
        let o = obs(&[
            (1.0, true, "A"),
            (2.0, true, "A"),
            (2.5, false, "A"),
            (3.0, true, "B"),
            (4.0, true, "B"),
            (1.5, true, "C"),
            (5.0, true, "C"),
            (6.0, false, "C"),
        ]);
        let r1 = logrank_test(&o, &labels(&["A", "B", "C"])).unwrap();
        let r2 = logrank_test(&o, &labels(&["C", "A", "B"])).unwrap();
        assert_eq!(r1.degrees_of_freedom, 2);
        assert!((r1.chi_square - r2.chi_square).abs() < 1e-10);
    }
}
