//! Yearly unemployment/inflation observations: CSV parsing, the built-in
//! France and Germany series for 1980-2011, and averaging by unemployment
//! level.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 3] = ["year", "unemployment_rate", "inflation_rate"];

/// One year's observation, both rates in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconRecord {
    pub year: i32,
    pub unemployment: f64,
    pub inflation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    pub label: String,
    records: Vec<EconRecord>,
}

impl DataSet {
    /// Validates the records: non-empty, strictly increasing years, finite
    /// values and positive unemployment.
    pub fn new(label: impl Into<String>, records: Vec<EconRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Validation("data set has no records".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if !r.unemployment.is_finite() || !r.inflation.is_finite() {
                return Err(Error::Validation(format!("year {}: non-finite value", r.year)));
            }
            if r.unemployment <= 0.0 {
                return Err(Error::Validation(format!(
                    "year {}: unemployment rate must be positive, got {}",
                    r.year, r.unemployment
                )));
            }
            if i > 0 {
                let prev = records[i - 1].year;
                if r.year == prev {
                    return Err(Error::Validation(format!("duplicate year {}", r.year)));
                }
                if r.year < prev {
                    return Err(Error::Validation(format!(
                        "years must increase: {} follows {prev}",
                        r.year
                    )));
                }
            }
        }
        Ok(Self {
            label: label.into(),
            records,
        })
    }

    pub fn records(&self) -> &[EconRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// (unemployment, inflation) pairs, the "original" data-set.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .map(|r| (r.unemployment, r.inflation))
            .collect()
    }

    pub fn record_for_year(&self, year: i32) -> Option<&EconRecord> {
        self.records.iter().find(|r| r.year == year)
    }
}

/// Parse `year,unemployment_rate,inflation_rate` CSV text.
pub fn parse_dataset(text: &str, label: impl Into<String>) -> Result<DataSet> {
    parse_reader(text.as_bytes(), label)
}

pub fn read_dataset(path: &Path) -> Result<DataSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("cannot open {}: {e}", path.display()),
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    parse_reader(file, label)
}

fn parse_reader<R: Read>(reader: R, label: impl Into<String>) -> Result<DataSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
    let names: Vec<&str> = headers.iter().map(|h| h.trim_start_matches('\u{feff}')).collect();
    if names != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                names.join(",")
            ),
        });
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(&e, 0))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let field = |i: usize| -> Result<&str> {
            Ok(row.get(i).unwrap_or_default())
        };
        let year: i32 = field(0)?.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid year `{}`", &row[0]),
        })?;
        let number = |i: usize, name: &str| -> Result<f64> {
            let raw = field(i)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("invalid {name} `{raw}`"),
                })
        };
        records.push(EconRecord {
            year,
            unemployment: number(1, "unemployment rate")?,
            inflation: number(2, "inflation rate")?,
        });
    }
    DataSet::new(label, records)
}

fn csv_error(e: &csv::Error, fallback_line: usize) -> Error {
    let line = e
        .position()
        .map_or(fallback_line, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

// (year, France unemployment, France inflation, Germany unemployment, Germany inflation)
const TABLE: [(i32, f64, f64, f64, f64); 32] = [
    (1980, 6.349, 13.060, 3.359, 5.447),
    (1981, 7.438, 13.330, 4.831, 6.324),
    (1982, 8.069, 11.980, 6.734, 5.256),
    (1983, 8.421, 9.460, 8.099, 3.284),
    (1984, 9.771, 7.674, 8.058, 2.396),
    (1985, 10.230, 5.831, 8.124, 2.084),
    (1986, 10.360, 2.539, 7.834, -0.125),
    (1987, 10.500, 3.289, 7.843, 0.242),
    (1988, 10.010, 2.701, 7.735, 1.274),
    (1989, 9.396, 3.498, 6.790, 2.778),
    (1990, 8.975, 3.380, 6.155, 2.687),
    (1991, 9.467, 3.217, 5.470, 3.474),
    (1992, 9.850, 2.366, 6.575, 5.046),
    (1993, 11.120, 2.106, 7.833, 4.476),
    (1994, 11.680, 1.661, 8.433, 2.717),
    (1995, 11.150, 1.778, 8.275, 1.729),
    (1996, 11.580, 2.084, 8.950, 1.193),
    (1997, 11.540, 1.283, 9.692, 1.533),
    (1998, 11.070, 0.667, 9.433, 0.602),
    (1999, 10.460, 0.562, 8.625, 0.635),
    (2000, 9.083, 1.827, 8.000, 1.400),
    (2001, 8.392, 1.781, 7.883, 1.904),
    (2002, 8.908, 1.938, 8.700, 1.355),
    (2003, 8.900, 2.169, 9.783, 1.031),
    (2004, 9.233, 2.342, 10.520, 1.790),
    (2005, 9.292, 1.900, 11.210, 1.920),
    (2006, 9.242, 1.912, 10.190, 1.784),
    (2007, 8.367, 1.607, 8.783, 2.276),
    (2008, 7.808, 3.159, 7.600, 2.754),
    (2009, 9.500, 0.103, 7.742, 0.234),
    (2010, 9.802, 1.736, 7.058, 1.150),
    (2011, 9.675, 2.293, 5.983, 2.482),
];

pub const EMBEDDED_LABELS: [&str; 2] = ["france", "germany"];

/// A built-in 1980-2011 series by label (`france` or `germany`).
pub fn embedded_dataset(label: &str) -> Option<DataSet> {
    let pick: fn(&(i32, f64, f64, f64, f64)) -> EconRecord = match label {
        "france" => |r| EconRecord {
            year: r.0,
            unemployment: r.1,
            inflation: r.2,
        },
        "germany" => |r| EconRecord {
            year: r.0,
            unemployment: r.3,
            inflation: r.4,
        },
        _ => return None,
    };
    let records = TABLE.iter().map(pick).collect();
    Some(DataSet::new(label, records).expect("embedded data is valid"))
}

pub fn embedded_datasets() -> BTreeMap<String, DataSet> {
    EMBEDDED_LABELS
        .iter()
        .map(|&l| (l.to_string(), embedded_dataset(l).expect("known label")))
        .collect()
}

/// Mean observation of one unemployment level [level_low, level_high).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedPoint {
    pub level_low: f64,
    pub level_high: f64,
    pub mean_unemployment: f64,
    pub mean_inflation: f64,
    pub count: usize,
}

impl AveragedPoint {
    pub fn point(&self) -> (f64, f64) {
        (self.mean_unemployment, self.mean_inflation)
    }

    /// Both means rounded half away from zero to three decimals. A mean of
    /// decimal inputs that should end in exactly 5 often lands a hair below
    /// it in binary, so near-halves count as halves.
    pub fn rounded(&self) -> Self {
        let r3 = |v: f64| {
            let x = v * 1000.0;
            let f = x.floor();
            let r = if (x - f - 0.5).abs() < 1e-6 {
                if x >= 0.0 { f + 1.0 } else { f }
            } else {
                x.round()
            };
            r / 1000.0
        };
        Self {
            mean_unemployment: r3(self.mean_unemployment),
            mean_inflation: r3(self.mean_inflation),
            ..*self
        }
    }
}

/// Bin index k with k·w <= x < (k+1)·w, corrected for rounding in x / w.
fn bin_index(x: f64, width: f64) -> i64 {
    let mut k = (x / width).floor() as i64;
    if (k as f64) * width > x {
        k -= 1;
    } else if ((k + 1) as f64) * width <= x {
        k += 1;
    }
    k
}

/// Average records within half-open unemployment bins [k·w, (k+1)·w).
/// Empty bins are omitted; the result is ordered by level.
pub fn bin_average(data: &DataSet, bin_width: f64) -> Result<Vec<AveragedPoint>> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::Config(format!("bin width must be positive, got {bin_width}")));
    }
    let mut bins: BTreeMap<i64, Vec<&EconRecord>> = BTreeMap::new();
    for r in data.records() {
        bins.entry(bin_index(r.unemployment, bin_width))
            .or_default()
            .push(r);
    }
    Ok(bins
        .into_iter()
        .map(|(k, members)| {
            let n = members.len() as f64;
            AveragedPoint {
                level_low: k as f64 * bin_width,
                level_high: (k + 1) as f64 * bin_width,
                mean_unemployment: members.iter().map(|r| r.unemployment).sum::<f64>() / n,
                mean_inflation: members.iter().map(|r| r.inflation).sum::<f64>() / n,
                count: members.len(),
            }
        })
        .collect())
}
