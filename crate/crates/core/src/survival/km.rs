use serde::{Deserialize, Serialize};

use super::{SurvivalError, SurvivalObservation};

/// Two-sided 95% standard-normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Slack for comparing products of survival fractions against 0.5.
const HALF_TOLERANCE: f64 = 1e-12;

/// Product-limit curve, one entry per distinct event time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub event_times: Vec<f64>,
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
    pub greenwood_se: Vec<f64>,
    /// Pointwise 95% band on the complementary log-log scale.
    pub lower_95: Vec<f64>,
    pub upper_95: Vec<f64>,
    pub n_total: usize,
    pub n_events: usize,
}

impl KmCurve {
    /// S(t) for arbitrary t (right-continuous step function).
    pub fn survival_at(&self, t: f64) -> f64 {
        match self.event_times.iter().rposition(|&e| e <= t) {
            Some(i) => self.survival[i],
            None => 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }
}

fn loglog_band(s: f64, greenwood_sum: f64, z: f64) -> (f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0);
    }
    if s >= 1.0 {
        return (1.0, 1.0);
    }
    let log_s = s.ln();
    let se_theta = greenwood_sum.sqrt() / log_s.abs();
    (s.powf((z * se_theta).exp()), s.powf((-z * se_theta).exp()))
}

pub fn km_estimate(observations: &[SurvivalObservation]) -> Result<KmCurve, SurvivalError> {
    if observations.is_empty() {
        return Err(SurvivalError::EmptyInput);
    }
    if let Some(o) = observations
        .iter()
        .find(|o| o.time <= 0.0 || !o.time.is_finite())
    {
        return Err(SurvivalError::NonPositiveTime(o.time));
    }
    let mut sorted: Vec<(f64, bool)> = observations.iter().map(|o| (o.time, o.event)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut curve = KmCurve {
        event_times: Vec::new(),
        survival: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
        greenwood_se: Vec::new(),
        lower_95: Vec::new(),
        upper_95: Vec::new(),
        n_total: sorted.len(),
        n_events: sorted.iter().filter(|o| o.1).count(),
    };

    let mut remaining = sorted.len();
    let mut s = 1.0;
    let mut greenwood_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        let mut deaths = 0;
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == t {
            if sorted[j].1 {
                deaths += 1;
            }
            j += 1;
        }
        // censorings at t stay in the risk set for deaths at t
        if deaths > 0 {
            let n = remaining as f64;
            let d = deaths as f64;
            s *= 1.0 - d / n;
            if remaining > deaths {
                greenwood_sum += d / (n * (n - d));
            }
            let (lo, hi) = loglog_band(s, greenwood_sum, Z_95);
            curve.event_times.push(t);
            curve.survival.push(s);
            curve.at_risk.push(remaining);
            curve.events.push(deaths);
            curve.greenwood_se.push(s * greenwood_sum.sqrt());
            curve.lower_95.push(lo);
            curve.upper_95.push(hi);
        }
        remaining -= j - i;
        i = j;
    }
    Ok(curve)
}

/// Median survival with 95% limits; absent fields mean the curve (or band) never reaches 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianEstimate {
    pub median: Option<f64>,
    pub std_error: Option<f64>,
    pub lcl_95: Option<f64>,
    pub ucl_95: Option<f64>,
}

fn first_time_at_or_below_half(times: &[f64], values: &[f64]) -> Option<f64> {
    times
        .iter()
        .zip(values)
        .find(|(_, v)| **v <= 0.5 + HALF_TOLERANCE)
        .map(|(t, _)| *t)
}

/// Median = first event time with S(t) <= 0.5. The lower limit is where the
/// lower band first reaches 0.5, the upper limit where the upper band does.
/// The standard error is backed out of the interval width as (ucl - lcl) / (2 * 1.96).
pub fn median_survival(curve: &KmCurve) -> MedianEstimate {
    let median = first_time_at_or_below_half(&curve.event_times, &curve.survival);
    let lcl_95 = first_time_at_or_below_half(&curve.event_times, &curve.lower_95);
    let ucl_95 = first_time_at_or_below_half(&curve.event_times, &curve.upper_95);
    let std_error = match (lcl_95, ucl_95) {
        (Some(lo), Some(hi)) => Some((hi - lo) / (2.0 * 1.96)),
        _ => None,
    };
    MedianEstimate {
        median,
        std_error,
        lcl_95,
        ucl_95,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(data: &[(f64, bool)]) -> Vec<SurvivalObservation> {
        data.iter()
            .map(|&(t, e)| SurvivalObservation::new(t, e, "g"))
            .collect()
    }

    #[test]
    fn three_events() {
        let c = km_estimate(&obs(&[(5.0, true), (10.0, true), (15.0, true)])).unwrap();
        assert_eq!(c.event_times, vec![5.0, 10.0, 15.0]);
        assert_eq!(c.at_risk, vec![3, 2, 1]);
        let expected = [2.0 / 3.0, 1.0 / 3.0, 0.0];
        for (s, e) in c.survival.iter().zip(expected) {
            assert!((s - e).abs() < 1e-12);
        }
        assert!((c.greenwood_se[0] - 0.272_165_526_975_908_7).abs() < 1e-12);
        assert_eq!(median_survival(&c).median, Some(10.0));
    }

    #[test]
    fn censored_then_event() {
        let c = km_estimate(&obs(&[(5.0, false), (10.0, true)])).unwrap();
        assert_eq!(c.event_times, vec![10.0]);
        assert_eq!(c.at_risk, vec![1]);
        assert_eq!(c.survival, vec![0.0]);
    }

    #[test]
    fn all_censored() {
        let c = km_estimate(&obs(&[(1.0, false), (2.0, false)])).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.survival_at(100.0), 1.0);
        let m = median_survival(&c);
        assert_eq!(m.median, None);
        assert_eq!(m.std_error, None);
    }

    #[test]
    fn median_at_exact_half() {
        let c = km_estimate(&obs(&[(2.0, true), (4.0, true)])).unwrap();
        assert_eq!(c.survival[0], 0.5);
        assert_eq!(median_survival(&c).median, Some(2.0));
    }

    #[test]
    fn ties_events_before_censoring() {
        // at t=2 one death and one censoring among 3 at risk
        let c = km_estimate(&obs(&[(2.0, true), (2.0, false), (3.0, true)])).unwrap();
        assert_eq!(c.at_risk, vec![3, 1]);
        assert!((c.survival[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(km_estimate(&[]).unwrap_err(), SurvivalError::EmptyInput);
        assert_eq!(
            km_estimate(&obs(&[(0.0, true)])).unwrap_err(),
            SurvivalError::NonPositiveTime(0.0)
        );
    }

    #[test]
    fn median_interval_brackets_median() {
        let data: Vec<(f64, bool)> = (1..=40).map(|i| (i as f64, i % 3 != 0)).collect();
        let c = km_estimate(&obs(&data)).unwrap();
        let m = median_survival(&c);
        let (lo, med, hi) = (m.lcl_95.unwrap(), m.median.unwrap(), m.ucl_95.unwrap());
        assert!(lo <= med && med <= hi, "{lo} {med} {hi}");
        assert!(m.std_error.unwrap() >= 0.0);
        for i in 0..c.len() {
            assert!(
                c.lower_95[i] <= c.survival[i] + 1e-15 && c.survival[i] <= c.upper_95[i] + 1e-15
            );
        }
    }
}
