//! Run configuration: a line-oriented `key = value` file with optional
//! `[section]` headers and `#` comments, overlaid by command-line flags.
//!
//! Sections only group keys for readability; every key lives in one flat
//! namespace and may appear in any section. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::identities::IbpOperator;
use crate::operators::{RightSign, Rule, Side};
use crate::types::Normalization;
use crate::variational::StepControl;

/// Every key accepted in a config file or as a `--key` flag.
pub const KEYS: &[&str] = &[
    "command",
    "a",
    "b",
    "n",
    "n_list",
    "alpha",
    "beta",
    "normalization",
    "w",
    "f",
    "g",
    "z",
    "side",
    "operator",
    "identity",
    "rule",
    "right_sign",
    "series_tol",
    "max_terms",
    "ml_tol",
    "ml_max_terms",
    "output",
    "format",
    "meta",
    "threshold",
    "rel_threshold",
    "lagrangian",
    "m",
    "v",
    "c2",
    "f2",
    "c3",
    "f3",
    "c4",
    "f4",
    "x_a",
    "x_b",
    "trajectory",
    "max_iters",
    "grad_tol",
    "step_control",
    "step_size",
    "band",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    MlEval,
    FracInt,
    FracDeriv,
    VerifyIbp,
    VerifyInverse,
    VerifyAb,
    ElResidual,
    SolveVariational,
    NewtonLaw,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::MlEval,
        Command::FracInt,
        Command::FracDeriv,
        Command::VerifyIbp,
        Command::VerifyInverse,
        Command::VerifyAb,
        Command::ElResidual,
        Command::SolveVariational,
        Command::NewtonLaw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::MlEval => "ml-eval",
            Command::FracInt => "frac-int",
            Command::FracDeriv => "frac-deriv",
            Command::VerifyIbp => "verify-ibp",
            Command::VerifyInverse => "verify-inverse",
            Command::VerifyAb => "verify-ab",
            Command::ElResidual => "el-residual",
            Command::SolveVariational => "solve-variational",
            Command::NewtonLaw => "newton-law",
        }
    }

    pub fn is_verify(self) -> bool {
        matches!(self, Command::VerifyIbp | Command::VerifyInverse | Command::VerifyAb)
    }

    pub fn is_variational(self) -> bool {
        matches!(self, Command::ElResidual | Command::SolveVariational | Command::NewtonLaw)
    }

    /// Keys that must be present for this command.
    pub fn required_keys(self) -> &'static [&'static str] {
        match self {
            Command::MlEval => &["beta", "z"],
            Command::FracInt | Command::FracDeriv | Command::VerifyInverse => &["alpha", "beta", "f"],
            Command::VerifyIbp => &["beta", "f", "g"],
            Command::VerifyAb => &["alpha", "f", "g"],
            Command::ElResidual | Command::SolveVariational | Command::NewtonLaw => &["alpha", "beta"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Which integration-by-parts identity `verify-ibp` checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IbpIdentity {
    Samko,
    Unweighted,
    Weighted,
    Corollary,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LagrangianConfig {
    Kinetic {
        m: f64,
        v: String,
    },
    General {
        c2: f64,
        f2: String,
        c3: f64,
        f3: String,
        c4: f64,
        f4: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub a: f64,
    pub b: f64,
    pub n: usize,
    /// Refinement ladder for verify-* commands; empty disables it.
    pub n_list: Vec<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub normalization: Normalization,
    pub w: String,
    pub f: Option<String>,
    pub g: Option<String>,
    pub z: Option<f64>,
    /// `None` runs both sides where that makes sense.
    pub side: Option<Side>,
    pub operator: IbpOperator,
    pub identity: IbpIdentity,
    pub rule: Rule,
    pub right_sign: RightSign,
    pub series_tol: f64,
    pub max_terms: usize,
    pub ml_tol: f64,
    pub ml_max_terms: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub meta: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub rel_threshold: Option<f64>,
    pub lagrangian: Option<LagrangianConfig>,
    pub x_a: Option<f64>,
    pub x_b: Option<f64>,
    pub trajectory: Option<String>,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_control: StepControl,
    pub band: f64,
}

/// Raw values with the line they came from; flags use line 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

fn config_error(key: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        line,
        message: message.into(),
    }
}

impl RawConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') || line.len() < 3 {
                    return Err(config_error(line, line_no, "malformed section header"));
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_error(line, line_no, "expected `key = value`"));
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(config_error(key, line_no, "unknown key"));
            }
            if entries.contains_key(key) {
                return Err(config_error(key, line_no, "duplicate key"));
            }
            entries.insert(key.to_string(), (value.trim().to_string(), line_no));
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Sets `key` from a command-line flag, replacing any file value.
    pub fn set_flag(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(config_error(&key, 0, "unknown flag"));
        }
        self.entries.insert(key, (value.trim().to_string(), 0));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(_, l)| *l)
    }

    fn parsed<T>(&self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse(v)
                .map(Some)
                .ok_or_else(|| config_error(key, self.line(key), format!("expected {what}, got `{v}`"))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>> {
        self.parsed(key, "a finite number", |v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        self.parsed(key, "a non-negative integer", |v| v.parse::<usize>().ok())
    }

    fn text(&self, key: &str) -> Option<String> {
        self.get(key).map(str::to_string)
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| config_error(key, 0, "required key is missing"))
    }

    fn check(&self, key: &str, ok: bool, message: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(config_error(key, self.line(key), message))
        }
    }

    pub fn into_run_config(self) -> Result<RunConfig> {
        let command = self.require(
            "command",
            self.parsed("command", "a command name", |v| {
                Command::ALL.into_iter().find(|c| c.name() == v)
            })?,
        )?;
        for key in command.required_keys() {
            if self.get(key).is_none() {
                return Err(config_error(key, 0, format!("required by `{}`", command.name())));
            }
        }

        let a = self.real("a")?.unwrap_or(0.0);
        let b = self.real("b")?.unwrap_or(1.0);
        self.check("b", a < b, "interval needs a < b")?;
        let n = self.count("n")?.unwrap_or(128);
        self.check("n", n >= 2, "n must be at least 2")?;
        let n_list = match self.get("n_list") {
            None if command.is_verify() => vec![64, 128, 256, 512],
            None => Vec::new(),
            Some(v) if v.trim().is_empty() => Vec::new(),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<usize>().ok().filter(|&k| k >= 2))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| {
                    config_error("n_list", self.line("n_list"), "expected comma-separated integers ≥ 2")
                })?,
        };

        let alpha = self.real("alpha")?;
        if let Some(al) = alpha {
            self.check("alpha", (0.0..1.0).contains(&al), "alpha must lie in [0, 1)")?;
        }
        let beta = self.real("beta")?;
        if let Some(be) = beta {
            self.check("beta", be > 0.0, "beta must be positive")?;
        }
        let normalization = self
            .parsed("normalization", "`constant_one` or `atangana_baleanu`", |v| match v {
                "constant_one" => Some(Normalization::ConstantOne),
                "atangana_baleanu" => Some(Normalization::OneMinusAlphaPlusAlphaOverGamma),
                _ => None,
            })?
            .unwrap_or_default();

        let side = self.parsed("side", "`left` or `right`", |v| match v {
            "left" => Some(Side::Left),
            "right" => Some(Side::Right),
            _ => None,
        })?;
        let operator = self
            .parsed("operator", "`integral` or `derivative`", |v| match v {
                "integral" => Some(IbpOperator::Integral),
                "derivative" => Some(IbpOperator::Derivative),
                _ => None,
            })?
            .unwrap_or(IbpOperator::Integral);
        let identity = self
            .parsed(
                "identity",
                "one of `samko`, `unweighted`, `weighted`, `corollary`, `symmetric`",
                |v| match v {
                    "samko" => Some(IbpIdentity::Samko),
                    "unweighted" => Some(IbpIdentity::Unweighted),
                    "weighted" => Some(IbpIdentity::Weighted),
                    "corollary" => Some(IbpIdentity::Corollary),
                    "symmetric" => Some(IbpIdentity::Symmetric),
                    _ => None,
                },
            )?
            .unwrap_or(IbpIdentity::Weighted);
        if command == Command::VerifyIbp && identity != IbpIdentity::Samko && alpha.is_none() {
            return Err(config_error("alpha", 0, "required by `verify-ibp`"));
        }

        let rule = self
            .parsed("rule", "`trapezoid` or `corrected`", |v| match v {
                "trapezoid" => Some(Rule::Trapezoid),
                "corrected" => Some(Rule::Corrected),
                _ => None,
            })?
            .unwrap_or(if command.is_variational() {
                crate::variational::default_operator_options().rule
            } else {
                Rule::default()
            });
        let right_sign = self
            .parsed("right_sign", "`definition` or `printed`", |v| match v {
                "definition" => Some(RightSign::Definition),
                "printed" => Some(RightSign::Printed),
                _ => None,
            })?
            .unwrap_or_default();

        let series_tol = self.real("series_tol")?.unwrap_or(1e-14);
        self.check("series_tol", series_tol > 0.0, "series_tol must be positive")?;
        let max_terms = self.count("max_terms")?.unwrap_or(200);
        self.check("max_terms", max_terms >= 1, "max_terms must be at least 1")?;
        let ml_tol = self.real("ml_tol")?.unwrap_or(1e-15);
        self.check("ml_tol", ml_tol > 0.0, "ml_tol must be positive")?;
        let ml_max_terms = self.count("ml_max_terms")?.unwrap_or(400);
        self.check("ml_max_terms", ml_max_terms >= 1, "ml_max_terms must be at least 1")?;

        let format = self
            .parsed("format", "`csv` or `json`", |v| match v {
                "csv" => Some(Format::Csv),
                "json" => Some(Format::Json),
                _ => None,
            })?
            .unwrap_or(if command.is_verify() { Format::Json } else { Format::Csv });
        let threshold = self.real("threshold")?;
        let rel_threshold = self.real("rel_threshold")?;
        for key in ["threshold", "rel_threshold"] {
            if let Some(t) = self.real(key)? {
                self.check(key, t >= 0.0, "threshold must be non-negative")?;
            }
        }

        let lagrangian = if command.is_variational() {
            match self.get("lagrangian").unwrap_or("kinetic") {
                "kinetic" => {
                    let m = self.real("m")?.unwrap_or(1.0);
                    self.check("m", m > 0.0, "mass m must be positive")?;
                    let v = self.require("v", self.text("v"))?;
                    Some(LagrangianConfig::Kinetic { m, v })
                }
                "general" => Some(LagrangianConfig::General {
                    c2: self.real("c2")?.unwrap_or(0.0),
                    f2: self.text("f2").unwrap_or_else(|| "0".into()),
                    c3: self.real("c3")?.unwrap_or(0.0),
                    f3: self.text("f3").unwrap_or_else(|| "0".into()),
                    c4: self.real("c4")?.unwrap_or(0.0),
                    f4: self.text("f4").unwrap_or_else(|| "0".into()),
                }),
                other => {
                    return Err(config_error(
                        "lagrangian",
                        self.line("lagrangian"),
                        format!("expected `kinetic` or `general`, got `{other}`"),
                    ))
                }
            }
        } else {
            None
        };
        let x_a = self.real("x_a")?;
        let x_b = self.real("x_b")?;
        let trajectory = self.text("trajectory");
        if command.is_variational() && trajectory.is_none() {
            self.require("x_a", x_a)?;
            self.require("x_b", x_b)?;
        }

        let max_iters = self.count("max_iters")?.unwrap_or(5000);
        self.check("max_iters", max_iters >= 1, "max_iters must be at least 1")?;
        let grad_tol = self.real("grad_tol")?.unwrap_or(1e-8);
        self.check("grad_tol", grad_tol > 0.0, "grad_tol must be positive")?;
        let step_control = match self.get("step_control").unwrap_or("backtracking") {
            "backtracking" => StepControl::BacktrackingLineSearch,
            "fixed" => {
                let s = self.require("step_size", self.real("step_size")?)?;
                self.check("step_size", s > 0.0, "step_size must be positive")?;
                StepControl::FixedStep(s)
            }
            other => {
                return Err(config_error(
                    "step_control",
                    self.line("step_control"),
                    format!("expected `backtracking` or `fixed`, got `{other}`"),
                ))
            }
        };
        let band = self.real("band")?.unwrap_or(0.05);
        self.check("band", (0.0..0.5).contains(&band), "band must lie in [0, 0.5)")?;

        Ok(RunConfig {
            command,
            a,
            b,
            n,
            n_list,
            alpha,
            beta,
            normalization,
            w: self.text("w").unwrap_or_else(|| "1".into()),
            f: self.text("f"),
            g: self.text("g"),
            z: self.real("z")?,
            side,
            operator,
            identity,
            rule,
            right_sign,
            series_tol,
            max_terms,
            ml_tol,
            ml_max_terms,
            output: self.text("output").map(PathBuf::from),
            format,
            meta: self.text("meta").map(PathBuf::from),
            threshold,
            rel_threshold,
            lagrangian,
            x_a,
            x_b,
            trajectory,
            max_iters,
            grad_tol,
            step_control,
            band,
        })
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Reads an optional config file and overlays flag values.
pub fn parse_config(path: Option<&Path>, flags: &[(String, String)]) -> Result<RunConfig> {
    let mut raw = match path {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    for (k, v) in flags {
        raw.set_flag(k, v)?;
    }
    raw.into_run_config()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<RunConfig> {
        RawConfig::parse_str(text)?.into_run_config()
    }

    #[test]
    fn minimal_ml_eval() {
        let c = cfg("command = ml-eval\nbeta = 0.5\nz = -1\n").unwrap();
        assert_eq!(c.command, Command::MlEval);
        assert_eq!(c.z, Some(-1.0));
        assert_eq!(c.format, Format::Csv);
    }

    #[test]
    fn missing_beta_is_named() {
        let err = cfg("command = frac-int\nalpha = 0.3\nf = x\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "beta"), "{err}");
    }

    #[test]
    fn flags_override_file() {
        let mut raw = RawConfig::parse_str("[run]\ncommand = frac-deriv\nalpha = 0.3\nbeta = 0.7\nf = x\nn = 128\n").unwrap();
        raw.set_flag("n", "256").unwrap();
        assert_eq!(raw.into_run_config().unwrap().n, 256);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RawConfig::parse_str("# header\ncommand = ml-eval\n\ncolour = red\n").unwrap_err();
        assert_eq!(
            err,
            Error::Config {
                key: "colour".into(),
                line: 4,
                message: "unknown key".into()
            }
        );
    }

    #[test]
    fn comments_sections_and_hyphenated_flags() {
        let mut raw = RawConfig::parse_str("[a]\ncommand = el-residual # trailing\n[b]\nalpha = 0.4\nbeta = 0.8\nv = x^2/2\n").unwrap();
        raw.set_flag("x-a", "0").unwrap();
        raw.set_flag("x-b", "1").unwrap();
        let c = raw.into_run_config().unwrap();
        assert_eq!(c.rule, Rule::Trapezoid);
        assert_eq!(c.x_b, Some(1.0));
    }

    #[test]
    fn verify_defaults() {
        let c = cfg("command = verify-ibp\nalpha = 0.3\nbeta = 0.7\nf = x\ng = sin(x)\n").unwrap();
        assert_eq!(c.n_list, vec![64, 128, 256, 512]);
        assert_eq!(c.format, Format::Json);
        assert_eq!(c.rule, Rule::Corrected);
        let c = cfg("command = verify-ibp\nidentity = samko\nbeta = 0.7\nf = x\ng = x\nn_list =\n").unwrap();
        assert!(c.n_list.is_empty());
    }

    #[test]
    fn bad_values() {
        assert!(cfg("command = frac-int\nalpha = 1.5\nbeta = 1\nf = x\n").is_err());
        assert!(cfg("command = nope\n").is_err());
        assert!(cfg("command = ml-eval\nbeta = 0.5\nz = 1\nz = 2\n").is_err());
        assert!(cfg("command ml-eval\n").is_err());
    }
}
