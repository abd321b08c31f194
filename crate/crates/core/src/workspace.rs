//! Workspace search over a box grid.
//!
//! Each grid point is tested with the inverse solution. Feasible points are
//! labelled with the worst singularity class found over their assembly
//! modes. Parallelogram assemblies of the first loop (`yA1 - yA2 = l3`)
//! have `det(Jp) = 0` identically at every pose. They would paint the whole
//! workspace as singular, so they only count when no other assembly mode
//! exists at the point.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ik::{self, IkSolution};
use crate::jacobian::{self, SingularityKind, Thresholds};
use crate::params::{Pose, ValidatedParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
}

impl AxisRange {
    pub fn new(min: f64, max: f64) -> Self {
        AxisRange { min, max }
    }

    /// Grid coordinate `i` of `n`, with both ends inclusive.
    fn at(&self, i: usize, n: usize) -> f64 {
        if i + 1 == n {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (n - 1) as f64
        }
    }

    fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    fn letter(self) -> char {
        ['x', 'y', 'z'][self.index()]
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(format!("unknown axis `{other}` (expected x, y or z)")),
        }
    }
}

/// Search box, grid density and singularity thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub x: AxisRange,
    pub y: AxisRange,
    pub z: AxisRange,
    /// Grid points per axis.
    pub resolution: usize,
    pub thresholds: Thresholds,
}

impl ScanSpec {
    pub const DEFAULT_RESOLUTION: usize = 41;

    /// The box `-110..90 x -250..250 x 180..480` mm.
    pub fn reference(resolution: usize) -> Self {
        ScanSpec {
            x: AxisRange::new(-110.0, 90.0),
            y: AxisRange::new(-250.0, 250.0),
            z: AxisRange::new(180.0, 480.0),
            resolution,
            thresholds: Thresholds::default(),
        }
    }

    fn ranges(&self) -> [AxisRange; 3] {
        [self.x, self.y, self.z]
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, r) in ['x', 'y', 'z'].into_iter().zip(self.ranges()) {
            if !(r.min.is_finite() && r.max.is_finite()) {
                return Err(Error::InvalidScan(format!("{axis} range must be finite")));
            }
            if r.min >= r.max {
                return Err(Error::InvalidScan(format!(
                    "{axis} range needs min < max, got [{}, {}]",
                    r.min, r.max
                )));
            }
        }
        if self.resolution < 2 {
            return Err(Error::InvalidScan(format!(
                "resolution must be at least 2, got {}",
                self.resolution
            )));
        }
        let t = self.thresholds;
        if !(t.serial > 0.0 && t.parallel > 0.0) {
            return Err(Error::InvalidScan(
                "singularity thresholds must be > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkspaceSample {
    pub pose: Pose,
    pub feasible: bool,
    pub real_solution_count: usize,
    /// Smallest `|det(Jp)| / prod(|row_i|)` over the labelled assembly modes.
    pub min_norm_det_jp: Option<f64>,
    /// Smallest `|prod(u_ii / L_i)|` over the labelled assembly modes.
    pub min_norm_det_jq: Option<f64>,
    /// Worst class over the labelled assembly modes; `None` when infeasible.
    pub class: Option<SingularityKind>,
}

/// Evaluates one pose.
pub fn evaluate(pose: &Pose, params: &ValidatedParams, thresholds: &Thresholds) -> WorkspaceSample {
    let solutions = ik::enumerate(pose, params).unwrap_or_default();
    let mut sample = WorkspaceSample {
        pose: *pose,
        feasible: !solutions.is_empty(),
        real_solution_count: solutions.len(),
        min_norm_det_jp: None,
        min_norm_det_jq: None,
        class: None,
    };
    if solutions.is_empty() {
        return sample;
    }
    let regular_modes: Vec<&IkSolution> = solutions
        .iter()
        .filter(|s| !s.is_parallelogram_assembly(params))
        .collect();
    let labelled: Vec<&IkSolution> = if regular_modes.is_empty() {
        solutions.iter().collect()
    } else {
        regular_modes
    };

    let mut worst = SingularityKind::Regular;
    for s in labelled {
        match jacobian::build(pose, s, params) {
            Ok(pair) => {
                let class = jacobian::classify(&pair, thresholds);
                worst = worst.max(class.kind);
                let jp = pair.norm_det_jp.abs();
                let jq = pair.norm_det_jq.abs();
                sample.min_norm_det_jp = Some(sample.min_norm_det_jp.map_or(jp, |m| m.min(jp)));
                sample.min_norm_det_jq = Some(sample.min_norm_det_jq.map_or(jq, |m| m.min(jq)));
            }
            // alpha or beta at 0 or pi: the chain is folded flat in the XZ
            // plane, a boundary of the x range
            Err(_) => worst = worst.max(SingularityKind::Serial),
        }
    }
    sample.class = Some(worst);
    sample
}

/// One sample per grid point, `x` outermost and `z` innermost.
pub fn scan(spec: &ScanSpec, params: &ValidatedParams) -> Result<Vec<WorkspaceSample>> {
    spec.validate()?;
    let n = spec.resolution;
    let [xr, yr, zr] = spec.ranges();
    let samples = (0..n * n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            let pose = Pose {
                x: xr.at(i, n),
                y: yr.at(j, n),
                z: zr.at(k, n),
            };
            evaluate(&pose, params, &spec.thresholds)
        })
        .collect();
    Ok(samples)
}

/// The plane `axis = value` of the scan grid, with the remaining two axes
/// in the same relative order as in [`scan`].
pub fn cross_section(
    spec: &ScanSpec,
    params: &ValidatedParams,
    axis: Axis,
    value: f64,
) -> Result<Vec<WorkspaceSample>> {
    spec.validate()?;
    let ranges = spec.ranges();
    let fixed = axis.index();
    let r = ranges[fixed];
    if !value.is_finite() || !r.contains(value) {
        return Err(Error::OutOfRange {
            axis: axis.letter(),
            value,
            min: r.min,
            max: r.max,
        });
    }
    let free: Vec<usize> = (0..3).filter(|&a| a != fixed).collect();
    let n = spec.resolution;
    let samples = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let mut c = [0.0; 3];
            c[fixed] = value;
            c[free[0]] = ranges[free[0]].at(idx / n, n);
            c[free[1]] = ranges[free[1]].at(idx % n, n);
            evaluate(&Pose::from_array(c), params, &spec.thresholds)
        })
        .collect();
    Ok(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub feasible: usize,
    pub regular: usize,
    pub serial: usize,
    pub parallel: usize,
    pub comprehensive: usize,
}

pub fn summarize(samples: &[WorkspaceSample]) -> Summary {
    let mut s = Summary {
        total: samples.len(),
        ..Summary::default()
    };
    for sample in samples {
        if sample.feasible {
            s.feasible += 1;
        }
        match sample.class {
            Some(SingularityKind::Regular) => s.regular += 1,
            Some(SingularityKind::Serial) => s.serial += 1,
            Some(SingularityKind::Parallel) => s.parallel += 1,
            Some(SingularityKind::Comprehensive) => s.comprehensive += 1,
            None => {}
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        })
    }
}

/// Flat record shared by the CSV and JSON exports.
#[derive(Serialize)]
struct Row {
    x: f64,
    y: f64,
    z: f64,
    feasible: bool,
    real_solution_count: usize,
    min_norm_det_jp: Option<f64>,
    min_norm_det_jq: Option<f64>,
    class: Option<SingularityKind>,
}

impl From<&WorkspaceSample> for Row {
    fn from(s: &WorkspaceSample) -> Self {
        Row {
            x: s.pose.x,
            y: s.pose.y,
            z: s.pose.z,
            feasible: s.feasible,
            real_solution_count: s.real_solution_count,
            min_norm_det_jp: s.min_norm_det_jp,
            min_norm_det_jq: s.min_norm_det_jq,
            class: s.class,
        }
    }
}

pub const CSV_HEADER: &str =
    "x,y,z,feasible,real_solution_count,min_norm_det_jp,min_norm_det_jq,class";

pub fn write_csv<W: Write>(samples: &[WorkspaceSample], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for s in samples {
        w.serialize(Row::from(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(samples: &[WorkspaceSample], out: W) -> serde_json::Result<()> {
    let rows: Vec<Row> = samples.iter().map(Row::from).collect();
    serde_json::to_writer_pretty(out, &rows)
}

/// Writes `samples` to `path`.
pub fn export(samples: &[WorkspaceSample], format: ExportFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        ExportFormat::Csv => write_csv(samples, &mut out).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?,
        ExportFormat::Json => write_json(samples, &mut out).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?,
    }
    out.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
