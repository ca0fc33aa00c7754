//! Search-volume exports: parsing, window stitching and the bundled
//! keyword lists.

use std::collections::HashSet;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{iso_week_end, read_week_value_rows, WeeklySeries, WEEK};

pub const DEFAULT_MIN_OVERLAP: usize = 8;

/// One exported window of search-volume interest, normalized so that the
/// window maximum is 100.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSviWindow {
    keyword: String,
    start: NaiveDate,
    values: Vec<f64>,
    /// False when no value reaches 100, which usually means the file is a
    /// sub-range of a larger export.
    has_full_scale: bool,
}

impl RawSviWindow {
    pub fn new(keyword: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::OutOfRangeSvi {
                    week: start + WEEK * i as i32,
                    value: v,
                });
            }
        }
        let has_full_scale = values.contains(&100.0);
        Ok(Self {
            keyword: keyword.into(),
            start,
            values,
            has_full_scale,
        })
    }

    pub fn keyword(&self) -> &str {
        &self.keyword
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.start + WEEK * (self.values.len() as i32 - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn has_full_scale(&self) -> bool {
        self.has_full_scale
    }

    fn get(&self, week: NaiveDate) -> Option<f64> {
        let days = (week - self.start).num_days();
        if days < 0 || days % 7 != 0 {
            return None;
        }
        self.values.get((days / 7) as usize).copied()
    }
}

/// Parses a `week_end,value` export.
///
/// Each `week_end` is the last day covered by its observation and is moved
/// forward to the Sunday closing its ISO week, so the value only becomes
/// visible once it has been fully observed.
pub fn parse_svi_csv(keyword: &str, bytes: &[u8]) -> Result<RawSviWindow> {
    let rows = read_week_value_rows(bytes)?;
    let Some(&(first, _)) = rows.first() else {
        return Err(Error::EmptySeries);
    };
    for pair in rows.windows(2) {
        if pair[1].0 - pair[0].0 != WEEK {
            return Err(Error::IrregularSpacing {
                prev: pair[0].0,
                next: pair[1].0,
            });
        }
    }
    RawSviWindow::new(
        keyword,
        iso_week_end(first),
        rows.into_iter().map(|r| r.1).collect(),
    )
}

/// A long search-volume series reconstructed from overlapping windows.
/// Defined up to a global positive scale (the first window keeps scale 1).
#[derive(Debug, Clone, PartialEq)]
pub struct StitchedSvi {
    pub keyword: String,
    pub series: WeeklySeries,
    pub windows_used: usize,
    /// Scale applied to each window, in start order.
    pub scales: Vec<f64>,
    /// Root-mean-square relative mismatch between consecutive windows over
    /// their fitted overlap, after scaling.
    pub overlap_fit_error: f64,
}

/// Chains overlapping windows onto a common scale.
///
/// Each window's scale is fitted to its predecessor by least squares over
/// the overlap weeks where both raw values are at least 1. Weeks covered by
/// several windows take the inverse-variance weighted mean of the scaled
/// values, with rounding variance proportional to the squared scale.
pub fn stitch_windows(windows: &[RawSviWindow], min_overlap: usize) -> Result<StitchedSvi> {
    if min_overlap == 0 {
        return Err(Error::InvalidParameter(
            "min_overlap must be at least 1".into(),
        ));
    }
    let Some(first) = windows.first() else {
        return Err(Error::EmptyInput("windows"));
    };
    if let Some(other) = windows.iter().find(|w| w.keyword != first.keyword) {
        return Err(Error::MixedKeywords(
            first.keyword.clone(),
            other.keyword.clone(),
        ));
    }
    let mut sorted: Vec<&RawSviWindow> = windows.iter().collect();
    sorted.sort_by(|a, b| {
        (a.start, a.values.len())
            .cmp(&(b.start, b.values.len()))
            .then_with(|| {
                a.values
                    .iter()
                    .map(|v| v.to_bits())
                    .cmp(b.values.iter().map(|v| v.to_bits()))
            })
    });
    let origin = sorted[0].start;
    for w in &sorted {
        if (w.start - origin).num_days() % 7 != 0 {
            return Err(Error::IrregularSpacing {
                prev: origin,
                next: w.start,
            });
        }
    }

    let mut scales = vec![1.0];
    let mut mismatches = Vec::new();
    for pair in sorted.windows(2) {
        let (prev, next) = (pair[0], pair[1]);
        let overlap_end = prev.end().min(next.end());
        let overlap = if overlap_end < next.start {
            0
        } else {
            ((overlap_end - next.start).num_days() / 7 + 1) as usize
        };
        if overlap < min_overlap {
            return Err(Error::InsufficientOverlap {
                first: prev.start,
                second: next.start,
                overlap,
                required: min_overlap,
            });
        }
        let usable: Vec<(f64, f64)> = (0..overlap)
            .filter_map(|i| {
                let week = next.start + WEEK * i as i32;
                let (x, y) = (prev.get(week)?, next.get(week)?);
                (x >= 1.0 && y >= 1.0).then_some((x, y))
            })
            .collect();
        if usable.is_empty() {
            return Err(Error::DegenerateOverlap {
                first: prev.start,
                second: next.start,
            });
        }
        let prev_scale = *scales.last().unwrap();
        let cross: f64 = usable.iter().map(|(x, y)| x * y).sum();
        let norm: f64 = usable.iter().map(|(_, y)| y * y).sum();
        let scale = prev_scale * cross / norm;
        mismatches.extend(usable.iter().map(|(x, y)| {
            let (a, b) = (prev_scale * x, scale * y);
            (a - b) / (0.5 * (a + b))
        }));
        scales.push(scale);
    }

    let last = sorted.iter().map(|w| w.end()).max().unwrap();
    let n_weeks = ((last - origin).num_days() / 7 + 1) as usize;
    let values = (0..n_weeks)
        .map(|i| {
            let week = origin + WEEK * i as i32;
            let (mut num, mut den) = (0.0, 0.0);
            for (w, &a) in sorted.iter().zip(&scales) {
                if let Some(v) = w.get(week) {
                    let weight = 1.0 / (a * a);
                    num += weight * a * v;
                    den += weight;
                }
            }
            num / den
        })
        .collect();
    let overlap_fit_error = if mismatches.is_empty() {
        0.0
    } else {
        (mismatches.iter().map(|m| m * m).sum::<f64>() / mismatches.len() as f64).sqrt()
    };
    Ok(StitchedSvi {
        keyword: first.keyword.clone(),
        series: WeeklySeries::new(first.keyword.clone(), origin, values)?,
        windows_used: sorted.len(),
        scales,
        overlap_fit_error,
    })
}

/// A named list of keywords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub name: String,
    pub keywords: Vec<String>,
}

const BUNDLED: [(&str, &str); 3] = [
    ("ailments", include_str!("../data/keywords/ailments.txt")),
    (
        "classic_cars",
        include_str!("../data/keywords/classic_cars.txt"),
    ),
    (
        "arcade_games",
        include_str!("../data/keywords/arcade_games.txt"),
    ),
];

/// Names of the keyword lists shipped with the crate.
pub fn bundled_set_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// The bundled list file exactly as shipped, duplicates included.
pub fn bundled_set_text(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn parse_keyword_list(name: &str, text: &str) -> Result<KeywordSet> {
    let mut seen = HashSet::new();
    let keywords: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .filter(|l| seen.insert(*l))
        .map(String::from)
        .collect();
    if keywords.is_empty() {
        return Err(Error::EmptyInput("keyword set"));
    }
    Ok(KeywordSet {
        name: name.to_string(),
        keywords,
    })
}

/// Loads a bundled keyword set by name, or a user list (one keyword per
/// line) from a file path. Repeated keywords keep their first occurrence.
pub fn load_keyword_set(name: &str) -> Result<KeywordSet> {
    if let Some(text) = bundled_set_text(name) {
        return parse_keyword_list(name, text);
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(Error::UnknownKeywordSet(name.to_string()));
    }
    let text = std::fs::read_to_string(path)?;
    let set_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string());
    parse_keyword_list(&set_name, &text)
}

/// File-system friendly name for a keyword: lowercase ASCII alphanumerics
/// separated by single underscores.
pub fn keyword_slug(keyword: &str) -> String {
    let mut slug = String::with_capacity(keyword.len());
    for c in keyword.chars() {
        if c.is_ascii_alphanumeric() {
            slug.push(c.to_ascii_lowercase());
        } else if !slug.ends_with('_') && !slug.is_empty() {
            slug.push('_');
        }
    }
    while slug.ends_with('_') {
        slug.pop();
    }
    slug
}
