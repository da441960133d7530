//! Human-readable number rendering for the tab-separated reports.

use serde::{Deserialize, Serialize};

/// Decimal separator used in rendered reports. Structured outputs are unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locale {
    #[default]
    Dot,
    Comma,
}

impl Locale {
    fn localize(self, s: String) -> String {
        match self {
            Locale::Dot => s,
            Locale::Comma => s.replace('.', ","),
        }
    }
}

pub fn decimal(value: f64, places: usize, locale: Locale) -> String {
    locale.localize(format!("{value:.places$}"))
}

pub fn optional_decimal(value: Option<f64>, places: usize, locale: Locale) -> String {
    value.map_or_else(|| "NA".to_string(), |v| decimal(v, places, locale))
}

/// 0.887 -> "88.7%" (or "88,7%").
pub fn percent(fraction: f64, locale: Locale) -> String {
    locale.localize(format!("{:.1}%", fraction * 100.0))
}

/// p-values below 0.001 render as "<0.001"; the stored value is untouched.
pub fn p_value(p: f64, locale: Locale) -> String {
    if p < 0.001 {
        locale.localize("<0.001".to_string())
    } else {
        decimal(p, 3, locale)
    }
}
