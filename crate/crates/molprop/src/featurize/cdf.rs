//! Empirical-CDF normalization of molecule-level features.
//!
//! Each feature column of a reference population is stored sorted; a raw
//! value maps to its interpolated rank fraction in [0, 1], i.e. roughly the
//! share of the population observed below it. Empirical CDFs are monotone by
//! construction and meaningful for the discrete, count-like features common
//! here, where parametric fits do poorly.

use super::FeaturizeError;
use serde::{Deserialize, Serialize};

/// Per-feature sorted reference samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCdfTable {
    columns: Vec<Vec<f64>>,
    /// Indices of columns whose reference values were all equal; such a
    /// column maps its constant to 0.5 and everything else to 0 or 1.
    degenerate: Vec<usize>,
}

impl FeatureCdfTable {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn degenerate_columns(&self) -> &[usize] {
        &self.degenerate
    }

    /// Evaluate the empirical CDF of one column.
    ///
    /// Values at an order statistic map to `rank / (n-1)` (midpoint rank for
    /// ties); values between two samples interpolate linearly; values outside
    /// the observed range clamp to 0 or 1.
    pub fn evaluate(&self, column: usize, x: f64) -> f64 {
        let samples = &self.columns[column];
        let n = samples.len();
        let below = samples.partition_point(|&s| s < x);
        let at_or_below = samples.partition_point(|&s| s <= x);
        if at_or_below == 0 {
            return 0.0;
        }
        if below == n {
            return 1.0;
        }
        let denom = (n - 1) as f64;
        if at_or_below > below {
            // x ties one or more samples: midpoint of the tied rank run.
            return (below + at_or_below - 1) as f64 / 2.0 / denom;
        }
        // Strictly between samples[below-1] and samples[below].
        let lo = samples[below - 1];
        let hi = samples[below];
        let frac = (x - lo) / (hi - lo);
        ((below - 1) as f64 + frac) / denom
    }
}

/// Fit per-feature empirical CDFs on reference rows (one row per molecule).
pub fn fit_cdf(reference: &[Vec<f64>]) -> Result<FeatureCdfTable, FeaturizeError> {
    if reference.len() < 2 {
        return Err(FeaturizeError::InsufficientReference(reference.len()));
    }
    let width = reference[0].len();
    for row in reference {
        if row.len() != width {
            return Err(FeaturizeError::DimensionMismatch {
                expected: width,
                got: row.len(),
            });
        }
    }
    let mut columns = Vec::with_capacity(width);
    let mut degenerate = Vec::new();
    for c in 0..width {
        let mut col: Vec<f64> = reference.iter().map(|row| row[c]).collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if col.first() == col.last() {
            degenerate.push(c);
        }
        columns.push(col);
    }
    Ok(FeatureCdfTable {
        columns,
        degenerate,
    })
}

/// Map a raw feature vector through the fitted CDFs.
pub fn normalize(raw: &[f64], table: &FeatureCdfTable) -> Result<Vec<f64>, FeaturizeError> {
    if raw.len() != table.width() {
        return Err(FeaturizeError::DimensionMismatch {
            expected: table.width(),
            got: raw.len(),
        });
    }
    Ok(raw
        .iter()
        .enumerate()
        .map(|(c, &x)| table.evaluate(c, x))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn table_of(col: Vec<f64>) -> FeatureCdfTable {
        let rows: Vec<Vec<f64>> = col.into_iter().map(|x| vec![x]).collect();
        fit_cdf(&rows).unwrap()
    }

    #[test]
    fn median_maps_to_half() {
        let t = table_of(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(t.evaluate(0, 3.0), 0.5);
        assert_eq!(t.evaluate(0, 1.0), 0.0);
        assert_eq!(t.evaluate(0, 5.0), 1.0);
    }

    #[test]
    fn out_of_range_clamps() {
        let t = table_of(vec![1.0, 2.0, 3.0]);
        assert_eq!(t.evaluate(0, 0.0), 0.0);
        assert_eq!(t.evaluate(0, 10.0), 1.0);
    }

    #[test]
    fn interpolates_between_samples() {
        let t = table_of(vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        // Halfway between ranks 1 and 2 → (1 + 0.5) / 4.
        assert!((t.evaluate(0, 1.5) - 0.375).abs() < 1e-12);
    }

    #[test]
    fn interpolation_matches_rank_count_on_random_data() {
        let mut rng = Rng::new(11);
        let col: Vec<f64> = (0..200).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let t = table_of(col.clone());
        let mut sorted = col;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for _ in 0..200 {
            let x = rng.uniform(-3.5, 3.5);
            let y = t.evaluate(0, x);
            assert!((0.0..=1.0).contains(&y));
            // Against a direct rank count: y must sit between the fraction
            // strictly below and the fraction at-or-below.
            let below = sorted.iter().filter(|&&s| s < x).count() as f64;
            let at_or_below = sorted.iter().filter(|&&s| s <= x).count() as f64;
            let denom = (sorted.len() - 1) as f64;
            let lo = (below - 1.0).max(0.0) / denom;
            let hi = at_or_below.min(denom) / denom;
            assert!(y >= lo - 1e-12 && y <= hi + 1e-12, "x={x} y={y} lo={lo} hi={hi}");
        }
    }

    #[test]
    fn monotone_in_raw_coordinate() {
        let mut rng = Rng::new(5);
        let col: Vec<f64> = (0..50).map(|_| rng.uniform(0.0, 1.0)).collect();
        let t = table_of(col);
        let mut prev = -1.0;
        let mut x = -0.2;
        while x < 1.2 {
            let y = t.evaluate(0, x);
            assert!(y >= prev);
            prev = y;
            x += 0.01;
        }
    }

    #[test]
    fn degenerate_column_reports_and_centers() {
        let rows = vec![vec![7.0], vec![7.0], vec![7.0]];
        let t = fit_cdf(&rows).unwrap();
        assert_eq!(t.degenerate_columns(), &[0]);
        assert_eq!(t.evaluate(0, 7.0), 0.5);
        assert_eq!(t.evaluate(0, 6.9), 0.0);
        assert_eq!(t.evaluate(0, 7.1), 1.0);
    }

    #[test]
    fn reference_rows_map_to_rank_fractions() {
        let rows: Vec<Vec<f64>> = vec![3.0, 1.0, 4.0, 1.5, 9.0]
            .into_iter()
            .map(|x| vec![x])
            .collect();
        let t = fit_cdf(&rows).unwrap();
        let normalized = normalize(&[3.0], &t).unwrap();
        assert_eq!(normalized[0], 2.0 / 4.0);
        assert!(matches!(
            normalize(&[1.0, 2.0], &t),
            Err(FeaturizeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn too_small_reference_rejected() {
        assert!(matches!(
            fit_cdf(&[vec![1.0]]),
            Err(FeaturizeError::InsufficientReference(1))
        ));
    }
}
