//! Order statistics and discretization rules.

use serde::Serialize;

/// Three-level discretization shared by most Requisites variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level3 {
    High,
    Medium,
    Low,
}

impl Level3 {
    /// Declared order, which is also the tie-break order for modal bins.
    pub const ALL: [Level3; 3] = [Level3::High, Level3::Medium, Level3::Low];

    pub fn as_str(self) -> &'static str {
        match self {
            Level3::High => "high",
            Level3::Medium => "medium",
            Level3::Low => "low",
        }
    }
}

/// Quantile of an ascending sample by linear interpolation between order statistics:
/// position `h = (n - 1) * p`, value `x[⌊h⌋] + (h - ⌊h⌋) * (x[⌊h⌋ + 1] - x[⌊h⌋])`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Arithmetic mean computed over the sorted sample, so input order cannot change the result.
pub fn mean(values: &[f64]) -> f64 {
    sorted(values).iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumberSummary {
    pub fn of(values: &[f64]) -> Self {
        let s = sorted(values);
        FiveNumberSummary {
            min: s[0],
            q1: quantile_sorted(&s, 0.25),
            median: quantile_sorted(&s, 0.5),
            q3: quantile_sorted(&s, 0.75),
            max: s[s.len() - 1],
        }
    }
}

/// Bin of a mean rating on the 0–5 scale: round half up, then {0,1} low, {2,3} medium,
/// {4,5} high.
pub fn rating_bin(mean_rating: f64) -> Level3 {
    match (mean_rating + 0.5).floor() as i64 {
        i64::MIN..=1 => Level3::Low,
        2 | 3 => Level3::Medium,
        _ => Level3::High,
    }
}

/// Bin of a mean salience on the 1–8 scale by equal-width thirds:
/// `[1, 10/3)` low, `[10/3, 17/3)` medium, `[17/3, 8]` high.
pub fn salience_bin(mean_salience: f64) -> Level3 {
    if mean_salience < 10.0 / 3.0 {
        Level3::Low
    } else if mean_salience < 17.0 / 3.0 {
        Level3::Medium
    } else {
        Level3::High
    }
}

/// Most frequent bin and its share in percent. Ties go to the earlier level in
/// [`Level3::ALL`]. `None` for an empty input.
pub fn modal_bin(bins: impl IntoIterator<Item = Level3>) -> Option<(Level3, f64)> {
    let mut counts = [0usize; 3];
    for b in bins {
        counts[Level3::ALL.iter().position(|&l| l == b).expect("known level")] += 1;
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let mut best = 0;
    for i in 1..3 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    Some((Level3::ALL[best], 100.0 * counts[best] as f64 / total as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TercileSplit {
    pub lower: f64,
    pub upper: f64,
    pub mean: f64,
    pub level: Level3,
}

/// Places a project-level measure relative to its own per-requirement distribution.
///
/// The cut points are the 1/3 and 2/3 quantiles of `values`. When they coincide the split
/// is degenerate and the result is medium; otherwise the sample mean below the lower cut is
/// low, above the upper cut is high, and medium in between.
pub fn tercile_level(values: &[f64]) -> TercileSplit {
    let s = sorted(values);
    let lower = quantile_sorted(&s, 1.0 / 3.0);
    let upper = quantile_sorted(&s, 2.0 / 3.0);
    let mean = mean(values);
    let level = if upper - lower <= 1e-12 {
        Level3::Medium
    } else if mean < lower {
        Level3::Low
    } else if mean > upper {
        Level3::High
    } else {
        Level3::Medium
    };
    TercileSplit {
        lower,
        upper,
        mean,
        level,
    }
}
