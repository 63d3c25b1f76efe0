//! Synthetic 2D datasets for the three benchmark problems.
//!
//! Points are drawn uniformly from `[-1, 1]²` with a ChaCha8 stream seeded by
//! `ChaCha8Rng::seed_from_u64(seed)`; each coordinate is `2u − 1` with `u` the
//! generator's standard `[0, 1)` double (53 random mantissa bits), `x1` first.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Prefix of the metadata comment line written at the top of dataset CSVs.
pub const CSV_META_PREFIX: &str = "# uqc-dataset";
pub const CSV_HEADER: &str = "x1,x2,label";

/// Squared radius of the single-circle margin: `r = √(2/π)`.
pub const CIRCLE_RADIUS_SQ: f64 = 2.0 / std::f64::consts::PI;
pub const SINE_AMPLITUDE: f64 = 0.8;
pub const TWO_CIRCLES_BIG_CENTER: (f64, f64) = (-1.0, -1.0);
pub const TWO_CIRCLES_BIG_RADIUS: f64 = 1.0;
pub const TWO_CIRCLES_SMALL_CENTER: (f64, f64) = (0.3, 0.3);
pub const TWO_CIRCLES_SMALL_RADIUS: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T = f64> {
    pub x1: T,
    pub x2: T,
}

impl<T> Point2<T> {
    pub fn new(x1: T, x2: T) -> Self {
        Self { x1, x2 }
    }
}

impl Point2<f64> {
    /// Converts to another scalar precision.
    pub fn cast<T: Scalar>(&self) -> Point2<T> {
        Point2::new(T::of(self.x1), T::of(self.x2))
    }

    pub fn in_unit_square(&self) -> bool {
        (-1.0..=1.0).contains(&self.x1) && (-1.0..=1.0).contains(&self.x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub point: Point2,
    pub label: usize,
}

/// The three classification problems with their fixed margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    /// Inside / outside a circle of radius √(2/π) at the origin.
    Circle,
    /// Above / below `0.8 sin(π x1)`.
    Sine,
    /// Quarter disk around (−1,−1), small disk around (0.3,0.3), rest.
    TwoCircles,
}

impl Problem {
    pub const ALL: [Problem; 3] = [Problem::Circle, Problem::Sine, Problem::TwoCircles];

    pub fn num_classes(self) -> usize {
        match self {
            Problem::Circle | Problem::Sine => 2,
            Problem::TwoCircles => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Problem::Circle => "circle",
            Problem::Sine => "sine",
            Problem::TwoCircles => "two-circles",
        }
    }

    /// Ground-truth class. Boundary points count as inside (`≤`, `≥`).
    pub fn label_of(self, p: &Point2) -> usize {
        match self {
            Problem::Circle => usize::from(p.x1 * p.x1 + p.x2 * p.x2 <= CIRCLE_RADIUS_SQ),
            Problem::Sine => {
                usize::from(p.x2 >= SINE_AMPLITUDE * (std::f64::consts::PI * p.x1).sin())
            }
            Problem::TwoCircles => {
                let within = |(cx, cy): (f64, f64), r: f64| {
                    let (dx, dy) = (p.x1 - cx, p.x2 - cy);
                    dx * dx + dy * dy <= r * r
                };
                if within(TWO_CIRCLES_BIG_CENTER, TWO_CIRCLES_BIG_RADIUS) {
                    1
                } else if within(TWO_CIRCLES_SMALL_CENTER, TWO_CIRCLES_SMALL_RADIUS) {
                    2
                } else {
                    0
                }
            }
        }
    }
}

pub fn label_of(problem: Problem, p: &Point2) -> usize {
    problem.label_of(p)
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "circle" => Ok(Problem::Circle),
            "sine" => Ok(Problem::Sine),
            "two-circles" | "twocircles" => Ok(Problem::TwoCircles),
            other => Err(DataError::UnknownProblem(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset must contain at least one point")]
    Empty,
    #[error("unknown problem `{0}` (expected circle, sine or two-circles)")]
    UnknownProblem(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: label {label} out of range for {problem} ({num_classes} classes)")]
    LabelOutOfRange {
        line: usize,
        label: usize,
        problem: Problem,
        num_classes: usize,
    },
    #[error("missing `{CSV_META_PREFIX}` metadata line and no problem given")]
    MissingMetadata,
}

/// A labelled point set together with the problem and seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub problem: Problem,
    pub points: Vec<LabeledPoint>,
    pub seed: u64,
}

impl Dataset {
    /// Builds a dataset, validating non-emptiness and label ranges.
    pub fn new(problem: Problem, points: Vec<LabeledPoint>, seed: u64) -> Result<Self, DataError> {
        if points.is_empty() {
            return Err(DataError::Empty);
        }
        let num_classes = problem.num_classes();
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.label >= num_classes) {
            return Err(DataError::LabelOutOfRange {
                line: i + 1,
                label: p.label,
                problem,
                num_classes,
            });
        }
        Ok(Self {
            problem,
            points,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.problem.num_classes()
    }

    pub fn class_fraction(&self, class: usize) -> f64 {
        self.points.iter().filter(|p| p.label == class).count() as f64 / self.len() as f64
    }

    /// Writes the CSV form: metadata comment, header, then one row per point.
    /// Floats use the shortest representation that parses back bit-exactly.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DataError> {
        self.write_csv_tagged(w, &[])
    }

    /// Like [`Dataset::write_csv`], appending `key=value` pairs to the
    /// metadata line. Readers ignore keys they do not know.
    pub fn write_csv_tagged<W: Write>(&self, mut w: W, tags: &[(&str, &str)]) -> Result<(), DataError> {
        write!(
            w,
            "{CSV_META_PREFIX} problem={} seed={} n={}",
            self.problem,
            self.seed,
            self.len()
        )?;
        for (k, v) in tags {
            if k.is_empty() || v.is_empty() || k.contains(['=', ' ', '\n']) || v.contains(char::is_whitespace) {
                return Err(DataError::Malformed {
                    line: 1,
                    message: format!("metadata tag `{k}={v}` must be a non-empty word"),
                });
            }
            write!(w, " {k}={v}")?;
        }
        writeln!(w)?;
        writeln!(w, "{CSV_HEADER}")?;
        for p in &self.points {
            writeln!(w, "{:?},{:?},{}", p.point.x1, p.point.x2, p.label)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, DataError> {
        Self::read_csv(fs::File::open(path)?, None)
    }

    /// Parses the CSV form. `fallback` supplies the problem when the file has
    /// no metadata line; when both are present the metadata wins.
    pub fn read_csv<R: Read>(reader: R, fallback: Option<Problem>) -> Result<Self, DataError> {
        let mut reader = BufReader::new(reader);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let first_trim = first.trim_end_matches(['\n', '\r']);

        let mut seed = 0;
        let mut problem = fallback;
        let mut header_line = 1;
        let mut rest = String::new();
        if let Some(meta) = first_trim.strip_prefix(CSV_META_PREFIX) {
            for kv in meta.split_whitespace() {
                let (k, v) = kv.split_once('=').ok_or_else(|| DataError::Malformed {
                    line: 1,
                    message: format!("bad metadata field `{kv}`"),
                })?;
                match k {
                    "problem" => problem = Some(v.parse()?),
                    "seed" => {
                        seed = v.parse().map_err(|_| DataError::Malformed {
                            line: 1,
                            message: format!("bad seed `{v}`"),
                        })?
                    }
                    _ => {}
                }
            }
            header_line = 2;
        } else {
            rest.push_str(&first);
        }
        let problem = problem.ok_or(DataError::MissingMetadata)?;
        reader.read_to_string(&mut rest)?;

        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(rest.as_bytes());
        let headers = rdr.headers().map_err(|e| DataError::Malformed {
            line: header_line,
            message: e.to_string(),
        })?;
        if headers.iter().collect::<Vec<_>>() != ["x1", "x2", "label"] {
            return Err(DataError::Malformed {
                line: header_line,
                message: format!("expected header `{CSV_HEADER}`"),
            });
        }

        let num_classes = problem.num_classes();
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = header_line + 1 + i;
            let rec = rec.map_err(|e| DataError::Malformed {
                line,
                message: e.to_string(),
            })?;
            if rec.len() != 3 {
                return Err(DataError::Malformed {
                    line,
                    message: format!("expected 3 fields, found {}", rec.len()),
                });
            }
            let float = |s: &str| -> Result<f64, DataError> {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DataError::Malformed {
                        line,
                        message: format!("not a finite number: `{s}`"),
                    })
            };
            let x1 = float(&rec[0])?;
            let x2 = float(&rec[1])?;
            let label: usize = rec[2].trim().parse().map_err(|_| DataError::Malformed {
                line,
                message: format!("not a class index: `{}`", &rec[2]),
            })?;
            if label >= num_classes {
                return Err(DataError::LabelOutOfRange {
                    line,
                    label,
                    problem,
                    num_classes,
                });
            }
            points.push(LabeledPoint {
                point: Point2::new(x1, x2),
                label,
            });
        }
        Dataset::new(problem, points, seed)
    }
}

/// Draws `n` i.i.d. uniform points in `[-1, 1]²` and labels them.
pub fn generate(problem: Problem, n: usize, seed: u64) -> Result<Dataset, DataError> {
    if n == 0 {
        return Err(DataError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let x1 = 2.0 * rng.random::<f64>() - 1.0;
            let x2 = 2.0 * rng.random::<f64>() - 1.0;
            let point = Point2::new(x1, x2);
            LabeledPoint {
                point,
                label: problem.label_of(&point),
            }
        })
        .collect();
    Dataset::new(problem, points, seed)
}
