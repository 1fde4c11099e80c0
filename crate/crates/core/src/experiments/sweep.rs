//! Per-`n` sweeps of exact orbit quantities with a log–log exponent fit.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcz::{f_n_functional, f_n_khat, f_n_return_time, iota_abs_sum, theta_abs_sum};
use crate::error::{Error, Result};
use crate::exact::{parse_rational, rat, to_f64, Rational};
use crate::excursion::{energy, energy_khat, ModuliPoint};
use crate::farey::farey_length;
use crate::functions::{g_lambda, StepFunction};

use super::fit::{fit_power_law, FitReport, DEFAULT_DROP_BELOW};

/// A set of orders `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Grid {
    /// `round(start·ratio^k)` up to `end`, deduplicated, with `end` appended.
    Geometric {
        start: u64,
        end: u64,
        ratio: f64,
    },
    List {
        values: Vec<u64>,
    },
}

impl Default for Grid {
    fn default() -> Self {
        Grid::Geometric {
            start: 32,
            end: 2048,
            ratio: 1.5,
        }
    }
}

impl Grid {
    pub fn values(&self) -> Result<Vec<u64>> {
        let out = match self {
            Grid::List { values } => values.clone(),
            &Grid::Geometric { start, end, ratio } => {
                if start == 0 || end < start || !ratio.is_finite() || ratio <= 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "geometric grid needs 1 <= start <= end and ratio > 1, got {start}:{end}:{ratio}"
                    )));
                }
                let mut out = Vec::new();
                let mut x = start as f64;
                while x.round() <= end as f64 {
                    let v = x.round() as u64;
                    if out.last() != Some(&v) {
                        out.push(v);
                    }
                    x *= ratio;
                }
                if out.last() != Some(&end) {
                    out.push(end);
                }
                out
            }
        };
        check_increasing(&out)?;
        Ok(out)
    }
}

fn check_increasing(values: &[u64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if values[0] == 0 || values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "grid values must be >= 1 and strictly increasing: {values:?}"
        )));
    }
    Ok(())
}

impl FromStr for Grid {
    type Err = Error;

    /// `geom:<start>:<end>:<ratio>`, or a comma-separated list of orders.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad grid spec {s:?}"));
        if let Some(rest) = s.strip_prefix("geom:") {
            let f: Vec<&str> = rest.split(':').collect();
            if f.len() != 3 {
                return Err(bad());
            }
            let grid = Grid::Geometric {
                start: f[0].trim().parse().map_err(|_| bad())?,
                end: f[1].trim().parse().map_err(|_| bad())?,
                ratio: f[2].trim().parse().map_err(|_| bad())?,
            };
            grid.values()?;
            return Ok(grid);
        }
        let rest = s.strip_prefix("list:").unwrap_or(s);
        let values = rest
            .split(',')
            .map(|v| v.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        check_increasing(&values)?;
        Ok(Grid::List { values })
    }
}

/// The function summed along orbits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepFunction {
    R,
    Khat,
    GLambda { lambda: Rational },
    Custom { step: StepFunction },
}

impl FromStr for SweepFunction {
    type Err = Error;

    /// `r`, `khat`, `g-lambda=<λ>` or `step:<x0,x1,y0,y1,v;…>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "r" | "return-time" => return Ok(SweepFunction::R),
            "khat" => return Ok(SweepFunction::Khat),
            _ => {}
        }
        if let Some(l) = s
            .strip_prefix("g-lambda=")
            .or_else(|| s.strip_prefix("g_lambda="))
        {
            return Ok(SweepFunction::GLambda {
                lambda: parse_rational(l)?,
            });
        }
        if let Some(spec) = s.strip_prefix("step:") {
            return Ok(SweepFunction::Custom {
                step: StepFunction::parse(spec)?,
            });
        }
        Err(Error::InvalidArgument(format!("unknown function {s:?}")))
    }
}

impl fmt::Display for SweepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepFunction::R => write!(f, "r"),
            SweepFunction::Khat => write!(f, "khat"),
            SweepFunction::GLambda { lambda } => write!(f, "g-lambda={lambda}"),
            SweepFunction::Custom { step } => write!(f, "step:{step}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// `Σ|θ_i|` over the orbit of `(1/n, 1)`; function `khat` only.
    ThetaSum,
    /// `Σ|ι_i|`; function `r` only.
    IotaSum,
    /// `𝓕ₙ(f)`.
    FN,
    /// `E(f; 1/n, 1/n)`, with `khat` read as `k̂ − 3`; `r` is rejected.
    EnergyDiagonal,
}

impl SweepMode {
    pub fn default_function(self) -> SweepFunction {
        match self {
            SweepMode::IotaSum => SweepFunction::R,
            _ => SweepFunction::Khat,
        }
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "theta" | "theta_sum" => Ok(SweepMode::ThetaSum),
            "iota" | "iota_sum" => Ok(SweepMode::IotaSum),
            "f_n" | "fn" => Ok(SweepMode::FN),
            "energy" | "energy_diagonal" => Ok(SweepMode::EnergyDiagonal),
            _ => Err(Error::InvalidArgument(format!("unknown sweep mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_values: Vec<u64>,
    pub mode: SweepMode,
    /// `None` picks [`SweepMode::default_function`].
    pub function: Option<SweepFunction>,
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
    /// Inferred from the output extension when `None` (`.json`, else CSV).
    #[serde(skip)]
    pub format: Option<OutputFormat>,
    pub parallelism: usize,
    pub drop_below: u64,
}

impl SweepConfig {
    pub fn new(mode: SweepMode, grid: &Grid) -> Result<Self> {
        Ok(SweepConfig {
            n_values: grid.values()?,
            mode,
            function: None,
            output_path: None,
            format: None,
            parallelism: 1,
            drop_below: DEFAULT_DROP_BELOW,
        })
    }

    fn function(&self) -> SweepFunction {
        self.function
            .clone()
            .unwrap_or_else(|| self.mode.default_function())
    }

    fn validate(&self) -> Result<()> {
        check_increasing(&self.n_values)?;
        match (self.mode, self.function()) {
            (SweepMode::ThetaSum, SweepFunction::Khat)
            | (SweepMode::IotaSum, SweepFunction::R)
            | (SweepMode::FN, _) => Ok(()),
            (SweepMode::EnergyDiagonal, SweepFunction::R) => Err(Error::InvalidArgument(
                "energy_diagonal needs a mean-zero function; R is not".into(),
            )),
            (SweepMode::EnergyDiagonal, _) => Ok(()),
            (mode, f) => Err(Error::InvalidArgument(format!(
                "mode {mode:?} is not defined for function {f}"
            ))),
        }
    }
}

/// One CSV row; the exact value is kept as decimal numerator and denominator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    #[serde(rename = "A_n")]
    pub a_n: u64,
    pub value_num: String,
    pub value_den: String,
    pub value_float: f64,
}

impl SweepRow {
    fn new(n: u64, a_n: u64, value: &Rational) -> Self {
        SweepRow {
            n,
            a_n,
            value_num: value.numer().to_string(),
            value_den: value.denom().to_string(),
            value_float: to_f64(value),
        }
    }

    pub fn value(&self) -> Rational {
        parse_rational(&format!("{}/{}", self.value_num, self.value_den))
            .expect("row holds a valid rational")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub mode: SweepMode,
    pub function: SweepFunction,
    pub drop_below: u64,
    pub rows: Vec<SweepRow>,
    /// `None` when fewer than two rows survive the cutoff.
    pub fit: Option<FitReport>,
}

impl SweepReport {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(std::io::Error::from)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.into()))
    }
}

/// Computes the configured quantity exactly for every `n`, in parallel, then
/// fits the exponent on rows with `n >= drop_below`. Writes the output file
/// when one is configured.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let function = cfg.function();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        cfg.n_values
            .par_iter()
            .map(|&n| {
                let a_n = farey_length(n)?.a_n;
                let value = sweep_value(cfg.mode, &function, n)?;
                Ok(SweepRow::new(n, a_n, &value))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let data: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n >= cfg.drop_below && r.value_float > 0.0)
        .map(|r| (r.n as f64, r.value_float))
        .collect();
    let fit = if data.len() >= 2 {
        Some(fit_power_law(&data)?)
    } else {
        None
    };
    let report = SweepReport {
        mode: cfg.mode,
        function,
        drop_below: cfg.drop_below,
        rows,
        fit,
    };

    if let Some(path) = &cfg.output_path {
        let format =
            cfg.format
                .unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
                    Some("json") => OutputFormat::Json,
                    _ => OutputFormat::Csv,
                });
        let text = match format {
            OutputFormat::Csv => report.to_csv_string()?,
            OutputFormat::Json => report.to_json_string()?,
        };
        std::fs::write(path, text)?;
    }
    Ok(report)
}

/// The exact value of one sweep row.
pub fn sweep_value(mode: SweepMode, function: &SweepFunction, n: u64) -> Result<Rational> {
    let diagonal = || ModuliPoint::new(rat(1, n as i64), rat(1, n as i64));
    match (mode, function) {
        (SweepMode::ThetaSum, SweepFunction::Khat) => Ok(theta_abs_sum(n)?.abs_sum.to_rational()),
        (SweepMode::IotaSum, SweepFunction::R) => iota_abs_sum(n),
        (SweepMode::FN, SweepFunction::Khat) => f_n_khat(n),
        (SweepMode::FN, SweepFunction::R) => f_n_return_time(n),
        (SweepMode::FN, SweepFunction::GLambda { lambda }) => {
            f_n_functional(&g_lambda(lambda.clone()), n)
        }
        (SweepMode::FN, SweepFunction::Custom { step }) => f_n_functional(step, n),
        (SweepMode::EnergyDiagonal, SweepFunction::Khat) => {
            Ok(energy_khat(&diagonal()?)?.to_rational())
        }
        (SweepMode::EnergyDiagonal, SweepFunction::GLambda { lambda }) => {
            energy(&g_lambda(lambda.clone()), &diagonal()?)
        }
        (SweepMode::EnergyDiagonal, SweepFunction::Custom { step }) => energy(step, &diagonal()?),
        (mode, f) => Err(Error::InvalidArgument(format!(
            "mode {mode:?} is not defined for function {f}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcz::theta_series;
    use crate::exact::int;

    fn cfg(mode: SweepMode, grid: &str) -> SweepConfig {
        SweepConfig::new(mode, &grid.parse().unwrap()).unwrap()
    }

    #[test]
    fn grid_parsing() {
        let g: Grid = "geom:32:2048:1.5".parse().unwrap();
        assert_eq!(g, Grid::default());
        let v = g.values().unwrap();
        assert_eq!(v.first(), Some(&32));
        assert_eq!(v.last(), Some(&2048));
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(&v[..4], &[32, 48, 72, 108]);
        assert_eq!(
            "3, 5,8".parse::<Grid>().unwrap().values().unwrap(),
            vec![3, 5, 8]
        );
        for bad in [
            "",
            "3,3",
            "5,4",
            "0,1",
            "geom:10:5:2",
            "geom:1:5:1",
            "geom:1:5",
            "x",
        ] {
            assert!(bad.parse::<Grid>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn single_row_examples() {
        let r = run_sweep(&cfg(SweepMode::ThetaSum, "3")).unwrap();
        assert_eq!(r.rows[0].value(), rat(7, 2));
        assert_eq!(r.rows[0].a_n, 4);
        assert!(r.fit.is_none());
        let r = run_sweep(&cfg(SweepMode::IotaSum, "3")).unwrap();
        assert_eq!(r.rows[0].value(), rat(3, 2));
    }

    #[test]
    fn values_match_direct_computation() {
        let r = run_sweep(&cfg(SweepMode::ThetaSum, "1,2,7,20")).unwrap();
        for row in &r.rows {
            assert_eq!(
                row.value(),
                theta_series(row.n).unwrap().abs_sum().to_rational()
            );
        }
        let mut c = cfg(SweepMode::FN, "5,9");
        c.function = Some(SweepFunction::R);
        let r = run_sweep(&c).unwrap();
        for row in &r.rows {
            assert_eq!(row.value(), iota_abs_sum(row.n).unwrap());
        }
        // g_{1/2} = k̂ − 3, whose 𝓕ₙ equals that of k̂.
        c.function = Some("g-lambda=1/2".parse().unwrap());
        let r = run_sweep(&c).unwrap();
        for row in &r.rows {
            assert_eq!(row.value(), f_n_khat(row.n).unwrap());
        }
    }

    #[test]
    fn mode_function_compatibility() {
        let mut c = cfg(SweepMode::ThetaSum, "3");
        c.function = Some(SweepFunction::R);
        assert!(run_sweep(&c).is_err());
        let mut c = cfg(SweepMode::EnergyDiagonal, "3");
        c.function = Some(SweepFunction::R);
        assert!(run_sweep(&c).is_err());
        c.function = Some("step:0,1,0,1,1".parse().unwrap());
        assert!(run_sweep(&c).is_ok());
        assert!("nope".parse::<SweepFunction>().is_err());
        assert!("g-lambda=x".parse::<SweepFunction>().is_err());
    }

    #[test]
    fn energy_diagonal_examples() {
        let r = run_sweep(&cfg(SweepMode::EnergyDiagonal, "2,5")).unwrap();
        assert_eq!(r.rows[0].value(), rat(3, 2));
        assert_eq!(r.rows[1].value(), rat(27, 2));
    }

    #[test]
    fn parallel_output_is_identical() {
        let dir = std::env::temp_dir().join(format!("bcz-sweep-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut outputs = Vec::new();
        for (k, ext) in [(1, "csv"), (4, "csv"), (1, "json"), (3, "json")] {
            let mut c = cfg(SweepMode::ThetaSum, "geom:20:200:1.4");
            c.parallelism = k;
            c.output_path = Some(dir.join(format!("out-{k}.{ext}")));
            run_sweep(&c).unwrap();
            outputs.push(std::fs::read_to_string(c.output_path.unwrap()).unwrap());
        }
        assert_eq!(outputs[0], outputs[1]);
        assert_eq!(outputs[2], outputs[3]);
        assert!(outputs[0].starts_with("n,A_n,value_num,value_den,value_float\n"));
        let json: serde_json::Value = serde_json::from_str(&outputs[2]).unwrap();
        assert!(json["fit"]["exponent"].is_f64());
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn theta_rows_and_fit_match_frozen_values() {
        // Σ|θ_i| and the OLS slope from an independent floating-point script.
        let r = run_sweep(&cfg(SweepMode::ThetaSum, "geom:32:400:1.5")).unwrap();
        let ns: Vec<u64> = r.rows.iter().map(|row| row.n).collect();
        assert_eq!(ns, vec![32, 48, 72, 108, 162, 243, 365, 400]);
        assert_eq!(r.rows[0].value(), rat(3739, 2));
        assert!(r.rows.iter().all(|row| (row.value() * int(2)).is_integer()));
        let fit = r.fit.unwrap();
        assert!(
            (fit.exponent - 2.414715024455305).abs() < 1e-9,
            "{}",
            fit.exponent
        );
        let r = run_sweep(&cfg(SweepMode::ThetaSum, "100,300")).unwrap();
        assert_eq!(r.rows[0].value(), rat(62287, 2));
        assert_eq!(r.rows[1].value(), rat(857589, 2));
    }
}
