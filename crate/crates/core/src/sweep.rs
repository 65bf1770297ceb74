//! Parameter sweeps over the heterogeneity amplitudes of the parametric
//! family.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_csv, fmt_csv_opt, Envelope};
use crate::model::{HeterogeneityParams, ModelSpec, PARAM_NAMES};
use crate::sampling::Numerics;
use crate::spectral::{spectral_report, SpectralOptions, SpectralReport};

/// Lattice points per axis when a sweep does not say.
pub const DEFAULT_SAMPLES: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Output {
    #[serde(rename = "R0")]
    R0,
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "zeta1")]
    Zeta1,
    #[serde(rename = "zeta2")]
    Zeta2,
    #[serde(rename = "R01")]
    R01,
    #[serde(rename = "R02")]
    R02,
}

impl Output {
    pub const ALL: [Output; 6] = [
        Output::R0,
        Output::Lambda,
        Output::Zeta1,
        Output::Zeta2,
        Output::R01,
        Output::R02,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::R0 => "R0",
            Output::Lambda => "lambda",
            Output::Zeta1 => "zeta1",
            Output::Zeta2 => "zeta2",
            Output::R01 => "R01",
            Output::R02 => "R02",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown output {s:?}")))
    }

    fn pick(self, r: &SpectralReport) -> Option<f64> {
        match self {
            Output::R0 => r.r0,
            Output::Lambda => r.lambda,
            Output::Zeta1 => Some(r.zeta1),
            Output::Zeta2 => Some(r.zeta2),
            Output::R01 => Some(r.r01),
            Output::R02 => Some(r.r02),
        }
    }
}

/// One varied parameter: `samples` equispaced values on `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.samples == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.samples - 1) as f64;
        (0..self.samples)
            .map(|i| {
                if i + 1 == self.samples {
                    self.max
                } else {
                    self.min + step * i as f64
                }
            })
            .collect()
    }

    /// Parses `name:min:max:samples` or `name:min:max`, which takes
    /// `DEFAULT_SAMPLES` points.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("axis {s:?} is not name:min:max[:samples]"));
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let samples = match parts.get(3) {
            Some(n) => n.trim().parse().map_err(|_| bad())?,
            None => DEFAULT_SAMPLES,
        };
        Ok(Self {
            name: parts[0].trim().to_string(),
            min: parts[1].trim().parse().map_err(|_| bad())?,
            max: parts[2].trim().parse().map_err(|_| bad())?,
            samples,
        })
    }
}

/// `target = sign * source`, as in sweeps along `p3 = q3` or `p4 = -q4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub target: String,
    pub source: String,
    pub sign: f64,
}

impl Link {
    /// Parses `target=source` or `target=-source`.
    pub fn parse(s: &str) -> Result<Self> {
        let (t, rhs) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("link {s:?} is not target=[-]source")))?;
        let rhs = rhs.trim();
        let (sign, src) = match rhs.strip_prefix('-') {
            Some(r) => (-1.0, r),
            None => (1.0, rhs),
        };
        Ok(Self {
            target: t.trim().to_string(),
            source: src.trim().to_string(),
            sign,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub varied: Vec<Axis>,
    /// Values of every parameter that is neither varied nor linked.
    pub fixed: HeterogeneityParams,
    #[serde(default)]
    pub linked: Vec<Link>,
    pub numerics: Numerics,
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub options: SpectralOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let known = |n: &str| PARAM_NAMES.contains(&n);
        if self.varied.is_empty() {
            return Err(Error::Validation("a sweep needs at least one varied parameter".into()));
        }
        for (i, a) in self.varied.iter().enumerate() {
            if !known(&a.name) {
                return Err(Error::Validation(format!("unknown parameter {:?}", a.name)));
            }
            if self.varied[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Validation(format!("parameter {} varied twice", a.name)));
            }
            if a.samples == 0 {
                return Err(Error::Validation(format!("axis {} has no samples", a.name)));
            }
            if !(a.min >= -1.0 && a.max <= 1.0 && a.min <= a.max) {
                return Err(Error::Validation(format!(
                    "range of {} must satisfy -1 <= min <= max <= 1",
                    a.name
                )));
            }
        }
        for (i, l) in self.linked.iter().enumerate() {
            if !known(&l.target) || !known(&l.source) {
                return Err(Error::Validation(format!(
                    "link {} = {} names an unknown parameter",
                    l.target, l.source
                )));
            }
            if l.sign != 1.0 && l.sign != -1.0 {
                return Err(Error::Validation("link sign must be +1 or -1".into()));
            }
            if self.varied.iter().any(|a| a.name == l.target) {
                return Err(Error::Validation(format!("{} is both varied and linked", l.target)));
            }
            if !self.varied.iter().any(|a| a.name == l.source) {
                return Err(Error::Validation(format!(
                    "link source {} is not a varied parameter",
                    l.source
                )));
            }
            if self.linked[..i].iter().any(|m| m.target == l.target) {
                return Err(Error::Validation(format!("{} linked twice", l.target)));
            }
        }
        if self.outputs.is_empty() {
            return Err(Error::Validation("no outputs requested".into()));
        }
        self.fixed.validate()?;
        self.numerics.validate()?;
        self.options.validate()
    }

    pub fn point_count(&self) -> usize {
        self.varied.iter().map(|a| a.samples).product()
    }

    /// Parameter values of lattice point `index` (row-major, first axis
    /// slowest) and the full parameter set with links applied.
    pub fn point(&self, index: usize) -> Result<(Vec<f64>, HeterogeneityParams)> {
        let mut rem = index;
        let mut coords = vec![0.0; self.varied.len()];
        for (j, a) in self.varied.iter().enumerate().rev() {
            coords[j] = a.values()[rem % a.samples];
            rem /= a.samples;
        }
        let mut params = self.fixed;
        for (a, v) in self.varied.iter().zip(&coords) {
            params.set(&a.name, *v)?;
        }
        for l in &self.linked {
            let v = params.get(&l.source).expect("validated name");
            params.set(&l.target, l.sign * v)?;
        }
        Ok((coords, params))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: Vec<f64>,
    pub values: Vec<Option<f64>>,
    /// `ok`, `subcritical`, or the error kind of a failed evaluation.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub outputs: Vec<Output>,
    pub rows: Vec<SweepRow>,
}

fn evaluate(spec: &SweepSpec, index: usize) -> Result<SweepRow> {
    let (coords, params) = spec.point(index)?;
    let model = ModelSpec::section5(&params);
    let report = model.and_then(|m| spectral_report(&m, spec.numerics, &spec.options));
    Ok(match report {
        Ok(r) => {
            let subcritical = r.r01 <= 1.0 || r.r02 <= 1.0;
            SweepRow {
                params: coords,
                values: spec.outputs.iter().map(|o| o.pick(&r)).collect(),
                status: if subcritical { "subcritical" } else { "ok" }.to_string(),
                message: None,
            }
        }
        Err(e) => SweepRow {
            params: coords,
            values: vec![None; spec.outputs.len()],
            status: e.kind().to_string(),
            message: Some(e.to_string()),
        },
    })
}

/// Evaluates every lattice point on a pool of `workers` threads (all
/// available cores when `None`). Row order is the lattice order.
pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepTable> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
    let rows = pool.install(|| {
        (0..spec.point_count())
            .into_par_iter()
            .map(|i| evaluate(spec, i))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepTable {
        columns: spec.varied.iter().map(|a| a.name.clone()).collect(),
        outputs: spec.outputs.clone(),
        rows,
    })
}

/// CSV with the varied parameters, the outputs and the status column.
pub fn write_table<W: Write>(table: &SweepTable, out: W) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::Validation("empty sweep table".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = table.columns.iter().map(String::as_str).collect();
    header.extend(table.outputs.iter().map(|o| o.name()));
    header.push("status");
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec: Vec<String> = row.params.iter().map(|v| fmt_csv(*v)).collect();
        rec.extend(row.values.iter().map(|v| fmt_csv_opt(*v)));
        rec.push(row.status.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub spec: SweepSpec,
    pub rows: usize,
    pub failed_rows: usize,
    pub workers: usize,
    pub wall_clock_seconds: f64,
}

/// Runs the sweep and returns the table with its metadata record.
pub fn run_sweep_with_metadata(
    spec: &SweepSpec,
    workers: Option<usize>,
) -> Result<(SweepTable, Envelope<SweepMetadata>)> {
    let start = Instant::now();
    let table = run_sweep(spec, workers)?;
    let failed = table
        .rows
        .iter()
        .filter(|r| r.status != "ok" && r.status != "subcritical")
        .count();
    let meta = SweepMetadata {
        spec: spec.clone(),
        rows: table.rows.len(),
        failed_rows: failed,
        workers: workers.unwrap_or_else(rayon::current_num_threads),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((table, Envelope::new("sweep-metadata", meta)))
}
