//! Chronological train/test partitioning.
//!
//! A single date boundary separates train from test: every train row is
//! strictly before it, every test row on or after it. Some sources only
//! carry coarse dates, so boundaries are tried resolution by resolution
//! (year, then month, then day), stopping at the first resolution whose
//! best boundary lands within 0.05 of the target fraction.

use std::fs;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;

/// How close the best boundary must get to the target fraction before a
/// finer resolution is tried.
pub const RESOLUTION_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Year,
    Month,
    Day,
}

impl Resolution {
    pub const COARSE_TO_FINE: [Resolution; 3] =
        [Resolution::Year, Resolution::Month, Resolution::Day];

    /// Truncate a date to the start of its period.
    fn truncate(self, date: NaiveDate) -> NaiveDate {
        match self {
            Resolution::Year => NaiveDate::from_ymd_opt(date.year(), 1, 1).unwrap(),
            Resolution::Month => NaiveDate::from_ymd_opt(date.year(), date.month(), 1).unwrap(),
            Resolution::Day => date,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub boundary_date: NaiveDate,
    pub resolution: Resolution,
    pub target_fraction: f64,
    /// Achieved fraction, exactly train_rows / (train_rows + test_rows).
    pub train_fraction: f64,
    pub train_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("all rows share a single date; no chronological boundary exists")]
    DegenerateDates,
    #[error("matrix has no rows")]
    Empty,
}

/// Pick the boundary whose train fraction is closest to `target`,
/// refining the date resolution until the deviation is within tolerance.
/// Ties break toward the earlier boundary (the larger test set).
///
/// Returns (train row indices, test row indices, plan); index order follows
/// the input matrix.
pub fn time_series_split(
    matrix: &FeatureMatrix,
    target: f64,
    resolutions: &[Resolution],
) -> Result<(Vec<usize>, Vec<usize>, SplitPlan), SplitError> {
    split_dates(&matrix.row_dates, target, resolutions)
}

/// Core of [`time_series_split`], usable on a bare date column.
pub fn split_dates(
    dates: &[NaiveDate],
    target: f64,
    resolutions: &[Resolution],
) -> Result<(Vec<usize>, Vec<usize>, SplitPlan), SplitError> {
    if dates.is_empty() {
        return Err(SplitError::Empty);
    }
    let min = *dates.iter().min().unwrap();
    let max = *dates.iter().max().unwrap();
    if min == max {
        return Err(SplitError::DegenerateDates);
    }

    let n = dates.len() as f64;
    // The first resolution within tolerance wins; otherwise the finest
    // resolution's best boundary is used.
    let mut chosen: Option<(NaiveDate, Resolution)> = None;

    for &resolution in resolutions {
        // Candidate boundaries: period starts of the observed dates,
        // restricted to (min, max] so both sides stay nonempty.
        let mut candidates: Vec<NaiveDate> = dates
            .iter()
            .map(|&d| resolution.truncate(d))
            .filter(|&b| b > min && b <= max)
            .collect();
        candidates.sort();
        candidates.dedup();

        let mut best_here: Option<(f64, NaiveDate)> = None;
        for boundary in candidates {
            let train_rows = dates.iter().filter(|&&d| d < boundary).count();
            if train_rows == 0 || train_rows == dates.len() {
                continue;
            }
            let deviation = (train_rows as f64 / n - target).abs();
            let better = match best_here {
                None => true,
                // Strict improvement only: candidates are scanned in
                // ascending date order, so ties keep the earlier boundary.
                Some((best_dev, _)) => deviation < best_dev - 1e-12,
            };
            if better {
                best_here = Some((deviation, boundary));
            }
        }

        if let Some((deviation, boundary)) = best_here {
            chosen = Some((boundary, resolution));
            // Epsilon so a fraction that is exactly at tolerance (e.g.
            // 0.70 vs 0.75) counts as within it despite rounding.
            if deviation <= RESOLUTION_TOLERANCE + 1e-9 {
                break;
            }
        }
    }

    let (boundary, resolution) = chosen.ok_or(SplitError::DegenerateDates)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &d) in dates.iter().enumerate() {
        if d < boundary {
            train.push(i);
        } else {
            test.push(i);
        }
    }
    let plan = SplitPlan {
        boundary_date: boundary,
        resolution,
        target_fraction: target,
        train_fraction: train.len() as f64 / dates.len() as f64,
        train_rows: train.len(),
        test_rows: test.len(),
    };
    Ok((train, test, plan))
}

pub fn write_split_plan(path: &Path, plan: &SplitPlan) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(plan)?;
    fs::write(path, json + "\n")
}

pub fn read_split_plan(path: &Path) -> std::io::Result<SplitPlan> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(std::io::Error::other)
}

/// Persist train/test membership as row-key CSVs.
pub fn write_row_keys(
    path: &Path,
    matrix: &FeatureMatrix,
    indices: &[usize],
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::other)?;
    w.write_record(["vote_id", "member_id"])
        .map_err(std::io::Error::other)?;
    for &i in indices {
        let (vote_id, member_id) = &matrix.row_keys[i];
        w.write_record([vote_id, member_id])
            .map_err(std::io::Error::other)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a row-key CSV back as (vote_id, member_id) pairs.
pub fn read_row_keys(path: &Path) -> std::io::Result<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(std::io::Error::other)?;
    let mut keys = Vec::new();
    for record in reader.records() {
        let record = record.map_err(std::io::Error::other)?;
        keys.push((
            record.get(0).unwrap_or("").to_string(),
            record.get(1).unwrap_or("").to_string(),
        ));
    }
    Ok(keys)
}
