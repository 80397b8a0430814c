//! Command-line front end.
//!
//! A run is described by a [`RunConfig`]. [`execute`] computes the result
//! without side effects, [`run`] writes it out and maps the outcome to an
//! exit code: 0 on success, 2 when a computed gap or residual exceeds the
//! configured threshold, 1 on any error.
//!
//! With `output` set, data goes to that file and the one-line summary to
//! standard output. Without it, data goes to standard output and the summary
//! to standard error so that the data stream stays parseable.

pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::time::Instant;

use serde::Serialize;

pub use config::{parse_config, Command, Format, IbpIdentity, LagrangianConfig, RawConfig, RunConfig};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::identities::{
    verify_ab_reduction, verify_ibp_corollary_right, verify_ibp_symmetric, verify_ibp_unweighted,
    verify_ibp_weighted, verify_inversion, verify_samko, IdentityReport, VerifyOptions,
};
use crate::mlf::{mittag_leffler_eval, MlEvalOptions};
use crate::operators::{gen_derivative_side, gen_integral_side, OperatorOptions, Side};
use crate::types::{make_params, sample, FracParams, Grid, SampledFunction, WeightFunction};
use crate::variational::{
    el_residual, evaluate_functional, interior_sup, newton_law_residual, solve, LagrangianSpec,
    SolveDiagnostics, SolveOptions, VariationalProblem,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_THRESHOLD: i32 = 2;

/// Result of a command before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Contents of the data file (CSV or JSON), ending in a line feed.
    pub data: String,
    /// Name and value of the headline number.
    pub key: &'static str,
    pub value: f64,
    /// A configured threshold was exceeded.
    pub exceeded: bool,
}

impl Outcome {
    pub fn summary(&self, cfg: &RunConfig) -> String {
        format!(
            "{} n={} {}={:.6e} status={}",
            cfg.command.name(),
            cfg.n,
            self.key,
            self.value,
            if self.exceeded { "threshold-exceeded" } else { "ok" }
        )
    }
}

/// Runs the command, writes its output and returns the exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let start = Instant::now();
    match execute(cfg).and_then(|out| write_outcome(cfg, &out, start).map(|_| out)) {
        Ok(out) if out.exceeded => EXIT_THRESHOLD,
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn write_outcome(cfg: &RunConfig, out: &Outcome, start: Instant) -> Result<()> {
    let summary = out.summary(cfg);
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, &out.data).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            println!("{summary}");
        }
        None => {
            std::io::stdout().write_all(out.data.as_bytes())?;
            eprintln!("{summary}");
        }
    }
    if let Some(meta) = &cfg.meta {
        let sidecar = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": cfg.command.name(),
            "elapsed_seconds": start.elapsed().as_secs_f64(),
            "summary": summary,
        });
        std::fs::write(meta, format!("{sidecar:#}\n")).map_err(|e| Error::Io(format!("{}: {e}", meta.display())))?;
    }
    Ok(())
}

/// Computes the command's result.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::MlEval => ml_eval(cfg),
        Command::FracInt | Command::FracDeriv => frac_operator(cfg),
        Command::VerifyIbp | Command::VerifyInverse | Command::VerifyAb => verify(cfg),
        Command::ElResidual | Command::SolveVariational | Command::NewtonLaw => variational(cfg),
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_expr(key: &str, text: &str) -> Result<Expr> {
    Expr::parse(text).map_err(|e| Error::Config {
        key: key.to_string(),
        line: 0,
        message: format!("`{text}`: {e}"),
    })
}

fn required<'a, T>(key: &str, v: &'a Option<T>) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config {
        key: key.to_string(),
        line: 0,
        message: "required key is missing".into(),
    })
}

fn operator_options(cfg: &RunConfig) -> OperatorOptions {
    OperatorOptions {
        rule: cfg.rule,
        right_sign: cfg.right_sign,
        series_tol: cfg.series_tol,
        max_terms: cfg.max_terms,
    }
}

fn params(cfg: &RunConfig) -> Result<FracParams> {
    make_params(*required("alpha", &cfg.alpha)?, *required("beta", &cfg.beta)?, cfg.normalization)
}

fn weight(cfg: &RunConfig) -> Result<WeightFunction> {
    WeightFunction::from_expr(&parse_expr("w", &cfg.w)?)
}

fn grid(cfg: &RunConfig) -> Result<Grid> {
    Grid::new(cfg.a, cfg.b, cfg.n)
}

fn ml_eval(cfg: &RunConfig) -> Result<Outcome> {
    let beta = *required("beta", &cfg.beta)?;
    let z = *required("z", &cfg.z)?;
    let ev = mittag_leffler_eval(beta, z, MlEvalOptions::new(cfg.ml_tol, cfg.ml_max_terms)?)?;
    if ev.precision_warning {
        log::warn!("E_{beta}({z}): series cancellation, max term {:.3e}", ev.max_term);
    }
    let data = match cfg.format {
        Format::Csv => format!("z,value\n{},{}\n", num(z), num(ev.value)),
        Format::Json => {
            let v = serde_json::json!({
                "beta": beta,
                "z": z,
                "value": ev.value,
                "terms_used": ev.terms_used,
                "precision_warning": ev.precision_warning,
            });
            format!("{v:#}\n")
        }
    };
    Ok(Outcome {
        data,
        key: "value",
        value: ev.value,
        exceeded: false,
    })
}

fn frac_operator(cfg: &RunConfig) -> Result<Outcome> {
    let g = grid(cfg)?;
    let p = params(cfg)?;
    let w = weight(cfg)?;
    let f = sample(&parse_expr("f", required("f", &cfg.f)?)?, g)?;
    let side = cfg.side.unwrap_or(Side::Left);
    let ops = operator_options(cfg);
    let m = match cfg.command {
        Command::FracInt => gen_integral_side(g, &p, &w, &ops, side)?,
        _ => {
            let (m, report) = gen_derivative_side(g, &p, &w, &ops, side)?;
            if !report.warning_flags.is_empty() {
                log::warn!("derivative series: {:?}", report.warning_flags);
            }
            m
        }
    };
    let out = m.apply(&f)?;
    let data = columns(cfg.format, &g, &[("value", out.values())]);
    Ok(Outcome {
        data,
        key: "sup_norm",
        value: out.sup_norm(),
        exceeded: false,
    })
}

/// `t` followed by the named columns, as CSV or a JSON object of arrays.
fn columns(format: Format, g: &Grid, cols: &[(&str, &[f64])]) -> String {
    let t = g.nodes();
    match format {
        Format::Csv => {
            let mut s = String::from("t");
            for (name, _) in cols {
                s.push(',');
                s.push_str(name);
            }
            s.push('\n');
            for (i, ti) in t.iter().enumerate() {
                s.push_str(&num(*ti));
                for (_, c) in cols {
                    s.push(',');
                    s.push_str(&num(c[i]));
                }
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("t".into(), serde_json::json!(t));
            for (name, c) in cols {
                obj.insert((*name).into(), serde_json::json!(c));
            }
            format!("{:#}\n", serde_json::Value::Object(obj))
        }
    }
}

/// Thread-safe closure over a parsed expression. Evaluation failures become
/// NaN, which sampling rejects with a domain error.
fn real_fn(key: &str, text: &str) -> Result<impl Fn(f64) -> f64 + Sync> {
    let e = parse_expr(key, text)?;
    Ok(move |x| e.eval(x).unwrap_or(f64::NAN))
}

fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let g = grid(cfg)?;
    let vo = VerifyOptions {
        ladder: cfg.n_list.clone(),
        ops: operator_options(cfg),
    };
    let f = real_fn("f", required("f", &cfg.f)?)?;
    let reports: Vec<IdentityReport> = match cfg.command {
        Command::VerifyIbp => {
            let gf = real_fn("g", required("g", &cfg.g)?)?;
            let op = cfg.operator;
            let r = match cfg.identity {
                IbpIdentity::Samko => verify_samko(*required("beta", &cfg.beta)?, &f, &gf, g, &vo)?,
                IbpIdentity::Unweighted => verify_ibp_unweighted(&params(cfg)?, &f, &gf, g, op, &vo)?,
                IbpIdentity::Weighted => verify_ibp_weighted(&params(cfg)?, &weight(cfg)?, &f, &gf, g, op, &vo)?,
                IbpIdentity::Corollary => {
                    verify_ibp_corollary_right(&params(cfg)?, &weight(cfg)?, &f, &gf, g, op, &vo)?
                }
                IbpIdentity::Symmetric => verify_ibp_symmetric(&params(cfg)?, &weight(cfg)?, &f, &gf, g, op, &vo)?,
            };
            vec![r]
        }
        Command::VerifyInverse => {
            let p = params(cfg)?;
            let w = weight(cfg)?;
            let sides = match cfg.side {
                Some(s) => vec![s],
                None => vec![Side::Left, Side::Right],
            };
            sides
                .into_iter()
                .map(|s| verify_inversion(&p, &w, &f, g, s, &vo))
                .collect::<Result<_>>()?
        }
        _ => {
            let gf = real_fn("g", required("g", &cfg.g)?)?;
            let r = verify_ab_reduction(*required("alpha", &cfg.alpha)?, &f, &gf, g, &vo)?;
            vec![r.matrix, r.ibp]
        }
    };

    let exceeded = reports.iter().any(|r| {
        cfg.threshold.is_some_and(|t| r.abs_gap > t) || cfg.rel_threshold.is_some_and(|t| r.rel_gap > t)
    });
    let (key, value) = if cfg.rel_threshold.is_some() && cfg.threshold.is_none() {
        ("rel_gap", reports.iter().fold(0.0, |m, r| f64::max(m, r.rel_gap)))
    } else {
        ("abs_gap", reports.iter().fold(0.0, |m, r| f64::max(m, r.abs_gap)))
    };
    let data = match cfg.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&reports).map_err(|e| Error::Io(e.to_string()))?),
        Format::Csv => {
            let mut s = String::from("identity_id,n,abs_gap\n");
            for r in &reports {
                for row in &r.convergence_rows {
                    let _ = writeln!(s, "{:?},{},{}", r.identity_id, row.n, num(row.abs_gap));
                }
            }
            s
        }
    };
    Ok(Outcome {
        data,
        key,
        value,
        exceeded,
    })
}

#[derive(Serialize)]
struct TrajectoryJson<'a> {
    functional: f64,
    residual_band_sup: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<&'a SolveDiagnostics>,
    t: Vec<f64>,
    #[serde(rename = "X")]
    x: &'a [f64],
    #[serde(rename = "DL_X")]
    dl: &'a [f64],
    #[serde(rename = "DR_X")]
    dr: &'a [f64],
    residual: &'a [f64],
}

fn variational(cfg: &RunConfig) -> Result<Outcome> {
    let g = grid(cfg)?;
    let p = params(cfg)?;
    let w = weight(cfg)?;
    let lagrangian = match required("lagrangian", &cfg.lagrangian)? {
        LagrangianConfig::Kinetic { m, v } => LagrangianSpec::quadratic_kinetic(*m, parse_expr("v", v)?)?,
        LagrangianConfig::General {
            c2,
            f2,
            c3,
            f3,
            c4,
            f4,
        } => LagrangianSpec::general_sum(
            *c2,
            parse_expr("f2", f2)?,
            *c3,
            parse_expr("f3", f3)?,
            *c4,
            parse_expr("f4", f4)?,
        )?,
    };
    let given: Option<SampledFunction> = match &cfg.trajectory {
        Some(text) => Some(sample(&parse_expr("trajectory", text)?, g)?),
        None => None,
    };
    let x_a = cfg.x_a.or(given.as_ref().map(|x| x.values()[0]));
    let x_b = cfg.x_b.or(given.as_ref().map(|x| x.values()[g.n]));
    let prob = VariationalProblem::new(
        g,
        p,
        w,
        lagrangian,
        *required("x_a", &x_a)?,
        *required("x_b", &x_b)?,
        operator_options(cfg),
    )?;

    let mut diagnostics = None;
    let x = match (cfg.command, given) {
        (Command::SolveVariational, init) | (_, init @ None) => {
            let init = init.unwrap_or_else(|| prob.straight_line());
            let opts = SolveOptions {
                max_iters: cfg.max_iters,
                grad_tol: cfg.grad_tol,
                step_control: cfg.step_control,
            };
            let (x, d) = solve(&prob, &init, &opts)?;
            if d.max_iters_exceeded {
                log::warn!("solver stopped at max_iters; returning the best iterate");
            }
            diagnostics = Some(d);
            x
        }
        (_, Some(x)) => x,
    };
    let residual = match cfg.command {
        Command::NewtonLaw => newton_law_residual(&prob, &x)?,
        _ => el_residual(&prob, &x)?,
    };
    let (dl, dr) = prob.derivatives(&x)?;
    let band_sup = interior_sup(&residual, cfg.band);
    let functional = evaluate_functional(&prob, &x)?;

    let data = match cfg.format {
        Format::Csv => columns(
            Format::Csv,
            &g,
            &[
                ("X", x.values()),
                ("DL_X", dl.values()),
                ("DR_X", dr.values()),
                ("residual", residual.values()),
            ],
        ),
        Format::Json => {
            let doc = TrajectoryJson {
                functional,
                residual_band_sup: band_sup,
                diagnostics: diagnostics.as_ref(),
                t: g.nodes(),
                x: x.values(),
                dl: dl.values(),
                dr: dr.values(),
                residual: residual.values(),
            };
            format!("{}\n", serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?)
        }
    };
    let exceeded = cfg.threshold.is_some_and(|t| band_sup > t)
        || diagnostics.as_ref().is_some_and(|d| d.max_iters_exceeded);
    Ok(Outcome {
        data,
        key: "residual_band_sup",
        value: band_sup,
        exceeded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RawConfig::parse_str(text).unwrap().into_run_config().unwrap()
    }

    #[test]
    fn frac_deriv_csv_shape() {
        let out = execute(&cfg("command = frac-deriv\nalpha = 0.3\nbeta = 0.7\nf = sin(x)\nn = 16\n")).unwrap();
        let lines: Vec<&str> = out.data.lines().collect();
        assert_eq!(lines[0], "t,value");
        assert_eq!(lines.len(), 18);
        assert!(!out.data.contains('\r'));
    }

    #[test]
    fn inverse_at_alpha_zero() {
        let out = execute(&cfg(
            "command = verify-inverse\nalpha = 0\nbeta = 0.5\nf = exp(x)\nn = 32\nn_list = 16,32\nthreshold = 1e-13\n",
        ))
        .unwrap();
        assert!(!out.exceeded);
        assert!(out.value <= 1e-13);
    }

    #[test]
    fn unattainable_threshold() {
        let out = execute(&cfg(
            "command = verify-ibp\nalpha = 0.3\nbeta = 0.7\nf = sin(x)\ng = x^2\nn = 32\nn_list = 16,32\nthreshold = 1e-20\n",
        ))
        .unwrap();
        assert!(out.exceeded);
    }

    #[test]
    fn missing_boundary_value_without_trajectory() {
        let err = RawConfig::parse_str("command = solve-variational\nalpha = 0.4\nbeta = 0.8\nv = x^2\nx_a = 0\n")
            .unwrap()
            .into_run_config()
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "x_b"));
    }
}
