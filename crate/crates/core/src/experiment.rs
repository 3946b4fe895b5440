//! Parameter sweeps over paired two-hop trials and their tabular export.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::SampleStats;
use crate::channel::{HashFn, SimRng};
use crate::error::{Result, WatchdogError};
use crate::simnet::{BehaviorKind, TrialRecord, TwoHopConfig, TwoHopRunner};

/// Stream label for the digest function shared by every trial of a sweep point.
const PINNED_HASH: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    PAdv,
    Delta,
    PS,
    M,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::PAdv => "p_adv",
            SweepVar::Delta => "delta",
            SweepVar::PS => "p_s",
            SweepVar::M => "m",
        }
    }

    fn apply(self, base: &TwoHopConfig, value: f64) -> Result<TwoHopConfig> {
        let count = |what: &str| -> Result<u32> {
            if value < 0.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
                return Err(WatchdogError::Config(format!("{what} must be a non-negative integer, got {value}")));
            }
            Ok(value as u32)
        };
        let mut cfg = *base;
        match self {
            SweepVar::PAdv => cfg.p_adv = value,
            SweepVar::PS => cfg.p_s = value,
            SweepVar::Delta => cfg.delta = count("delta")?,
            SweepVar::M => cfg.m = count("m")? as usize,
        }
        Ok(cfg)
    }
}

impl FromStr for SweepVar {
    type Err = WatchdogError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p_adv" | "p-adv" => Ok(SweepVar::PAdv),
            "delta" => Ok(SweepVar::Delta),
            "p_s" | "p-s" => Ok(SweepVar::PS),
            "m" => Ok(SweepVar::M),
            other => Err(WatchdogError::Config(format!("unknown sweep variable {other:?}"))),
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A sweep of one parameter over paired trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    /// Fixed parameters; the swept one is overwritten per row.
    pub base: TwoHopConfig,
    pub trials: u64,
    pub seed: u64,
    /// Draw one digest function per sweep value instead of one per trial.
    pub pin_hash: bool,
}

impl ExperimentSpec {
    /// `n = 10`, `m = 3`, `δ = 2`, `p_s = p_relay = 0.1`, `p_adv = 0.1`, 200 trials.
    pub fn new(sweep: SweepVar, values: Vec<f64>) -> Self {
        Self { sweep, values, base: TwoHopConfig::default(), trials: 200, seed: 1, pin_hash: false }
    }

    pub fn attack_rate_sweep() -> Self {
        Self::new(SweepVar::PAdv, vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.3])
    }

    pub fn digest_width_sweep() -> Self {
        Self::new(SweepVar::Delta, vec![0.0, 1.0, 2.0, 3.0])
    }

    pub fn source_noise_sweep() -> Self {
        Self::new(SweepVar::PS, vec![0.05, 0.1, 0.2, 0.3])
    }

    pub fn source_count_sweep() -> Self {
        Self::new(SweepVar::M, vec![1.0, 2.0, 3.0, 4.0, 5.0])
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(WatchdogError::Config("trials must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(WatchdogError::Config(format!("no values given for sweep over {}", self.sweep)));
        }
        Ok(())
    }
}

/// Per-trial `p*` values from paired honest and adversarial relays.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    pub honest: Vec<f64>,
    pub adversarial: Vec<f64>,
    pub records: Vec<TrialRecord>,
}

/// Runs `trials` paired trials of `cfg`. Trial `t` draws from `SimRng::new(seed).fork(t)`
/// and trials execute in parallel; results are gathered in trial order.
pub fn run_point(cfg: &TwoHopConfig, trials: u64, seed: u64, pin_hash: bool) -> Result<PairedSamples> {
    let root = SimRng::new(seed);
    let mut cfg = *cfg;
    if pin_hash && cfg.hash.is_none() {
        cfg.hash = Some(HashFn::random(cfg.delta, &mut root.fork(PINNED_HASH))?);
    }
    let runner = TwoHopRunner::new(cfg)?;
    let records = (0..trials).into_par_iter().map(|t| runner.run(&root.fork(t), t)).collect::<Result<Vec<_>>>()?;
    let pick = |truth| -> Vec<f64> {
        records.iter().map(|r| r.check_for(truth).expect("paired trial").verdict.p_star).collect()
    };
    Ok(PairedSamples { honest: pick(BehaviorKind::Honest), adversarial: pick(BehaviorKind::Adversarial), records })
}

/// Mean and variance of `p*` for the adversarial and honest relay at one sweep value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub sweep: f64,
    pub p_star_adv_mean: f64,
    pub p_star_adv_var: f64,
    pub p_star_relay_mean: f64,
    pub p_star_relay_var: f64,
}

impl TableRow {
    pub fn from_samples(sweep: f64, samples: &PairedSamples) -> Result<Self> {
        let adv = SampleStats::from_values(&samples.adversarial)?;
        let relay = SampleStats::from_values(&samples.honest)?;
        Ok(Self {
            sweep,
            p_star_adv_mean: adv.mean,
            p_star_adv_var: adv.variance,
            p_star_relay_mean: relay.mean,
            p_star_relay_var: relay.variance,
        })
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TableRow>> {
    spec.validate()?;
    spec.values
        .iter()
        .map(|&value| {
            let cfg = spec.sweep.apply(&spec.base, value)?;
            let samples = run_point(&cfg, spec.trials, spec.seed, spec.pin_hash)?;
            TableRow::from_samples(value, &samples)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = WatchdogError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(WatchdogError::Config(format!("unknown format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: &str = "sweep,p_star_adv_mean,p_star_adv_var,p_star_relay_mean,p_star_relay_var";

/// Formats `x` with `digits` significant digits in the style of C's `%g`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    }
}

pub fn rows_to_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [r.sweep, r.p_star_adv_mean, r.p_star_adv_var, r.p_star_relay_mean, r.p_star_relay_var];
        let line: Vec<String> = fields.iter().map(|&v| format_sig(v, 6)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// JSON keeps full precision so that parsing returns identical rows.
pub fn rows_to_json(rows: &[TableRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

pub fn rows_from_json(text: &str) -> Result<Vec<TableRow>> {
    Ok(serde_json::from_str(text)?)
}

pub fn render(rows: &[TableRow], format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::Csv => Ok(rows_to_csv(rows)),
        ExportFormat::Json => rows_to_json(rows),
    }
}

pub fn export(rows: &[TableRow], format: ExportFormat, path: &Path) -> Result<()> {
    let text = render(rows, format)?;
    fs::write(path, text).map_err(|source| WatchdogError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_digits_match_printf_g() {
        let cases = [
            (0.0262, "0.0262"),
            (2.8933e-4, "0.00028933"),
            (1.0 / 3.0, "0.333333"),
            (123456789.0, "1.23457e+08"),
            (0.00001234567, "1.23457e-05"),
            (3.0, "3"),
            (0.1, "0.1"),
            (-2.5, "-2.5"),
            (999999.7, "1e+06"),
            (0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig(x, 6), want, "{x}");
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(rows_to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_row_gives_two_lines() {
        let row = TableRow {
            sweep: 0.1,
            p_star_adv_mean: 0.0096,
            p_star_adv_var: 2.8933e-4,
            p_star_relay_mean: 0.022,
            p_star_relay_var: 0.0012,
        };
        let csv = rows_to_csv(&[row]);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().nth(1).unwrap(), "0.1,0.0096,0.00028933,0.022,0.0012");
    }

    #[test]
    fn json_round_trips() {
        let rows = vec![
            TableRow {
                sweep: 2.0,
                p_star_adv_mean: 1.0 / 7.0,
                p_star_adv_var: 1e-300,
                p_star_relay_mean: 0.123456789012345,
                p_star_relay_var: 0.0,
            };
            3
        ];
        assert_eq!(rows_from_json(&rows_to_json(&rows).unwrap()).unwrap(), rows);
    }

    #[test]
    fn single_trial_rows_have_zero_variance() {
        let mut spec = ExperimentSpec::new(SweepVar::PAdv, vec![0.0, 0.2]);
        spec.trials = 1;
        for row in run_experiment(&spec).unwrap() {
            assert_eq!(row.p_star_adv_var, 0.0);
            assert_eq!(row.p_star_relay_var, 0.0);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = ExperimentSpec::new(SweepVar::Delta, vec![1.5]);
        assert!(run_experiment(&spec).is_err());
        spec.values = vec![];
        assert!(run_experiment(&spec).is_err());
        spec.values = vec![1.0];
        spec.trials = 0;
        assert!(run_experiment(&spec).is_err());
        let spec = ExperimentSpec::new(SweepVar::M, vec![0.0]);
        assert!(run_experiment(&spec).is_err());
        assert!("color".parse::<SweepVar>().is_err());
        assert_eq!("p-adv".parse::<SweepVar>().unwrap(), SweepVar::PAdv);
    }

    #[test]
    fn pinned_hash_is_shared_by_all_trials() {
        let cfg = TwoHopConfig { p_adv: 0.0, ..Default::default() };
        let a = run_point(&cfg, 5, 3, true).unwrap();
        let b = run_point(&cfg, 5, 3, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn export_reports_path_on_failure() {
        let err = export(&[], ExportFormat::Csv, Path::new("/nonexistent-dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }
}
