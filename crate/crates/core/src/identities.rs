//! Numerical checks of the continuum identities on discrete proxies.
//!
//! Each `verify_*` function evaluates both sides of an identity on a ladder
//! of grids and returns an [`IdentityReport`] whose headline numbers are taken
//! on the requested grid. The identities are exact in the continuum, so every
//! gap is discretization error and should shrink under refinement.
//!
//! Derivative identities depend on the sign convention of the right
//! derivative ([`RightSign`]). Integration by parts holds with
//! `RightSign::Definition`; the right inversion `I_b(D_b f) = −f` holds with
//! `RightSign::Printed`. [`verify_inversion`] targets `±f` accordingly.
//!
//! The function-space hypotheses (`f ∈ L_p`, images `I^{α,β}(L_p)`, the
//! `1/p + 1/q ≤ 1 + α` condition) are not checked; the corpus is smooth.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    ab_derivative, ab_integral, gen_derivative_side, gen_integral_side, rl_integral_left,
    rl_integral_right, OperatorMatrix, OperatorOptions, RightSign, Rule, Side,
};
use crate::types::{make_params, FracParams, Grid, Normalization, SampledFunction, WeightFunction};

/// A real function of one variable that can be shared across threads.
pub type RealFn<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdentityId {
    SamkoLemma,
    InversionLeft,
    InversionRight,
    IbpUnweightedIntegral,
    IbpUnweightedDerivative,
    IbpWeightedIntegral,
    IbpWeightedDerivative,
    IbpCorollaryRight,
    IbpSymmetricIntegral,
    IbpSymmetricDerivative,
    AbReduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IbpOperator {
    Integral,
    Derivative,
}

/// Inputs echoed back in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    pub weight: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<IbpOperator>,
    pub rule: Rule,
    pub right_sign: RightSign,
    pub a: f64,
    pub b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub abs_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_id: IdentityId,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub grid_n: usize,
    pub params_echo: ParamsEcho,
    pub convergence_rows: Vec<ConvergenceRow>,
}

impl IdentityReport {
    /// True when `abs_gap` never grows by more than `slack` (relative) from one
    /// ladder level to the next. Levels whose gap is already below
    /// `floor` are treated as converged, since rounding noise at that level
    /// carries no ordering information.
    pub fn is_monotone(&self, slack: f64, floor: f64) -> bool {
        self.convergence_rows
            .windows(2)
            .all(|w| w[1].abs_gap <= (1.0 + slack) * w[0].abs_gap || w[1].abs_gap <= floor)
    }
}

/// Grid levels and operator settings for a verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub ladder: Vec<usize>,
    pub ops: OperatorOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            ladder: vec![64, 128, 256, 512],
            ops: OperatorOptions::default(),
        }
    }
}

impl VerifyOptions {
    pub fn single() -> Self {
        Self {
            ladder: Vec::new(),
            ops: OperatorOptions::default(),
        }
    }

    pub fn with_ops(mut self, ops: OperatorOptions) -> Self {
        self.ops = ops;
        self
    }
}

/// The fixed smooth test corpus on `[0, 1]`.
pub fn corpus() -> Vec<(&'static str, fn(f64) -> f64)> {
    vec![
        ("1", |_| 1.0),
        ("x", |x| x),
        ("x^2", |x| x * x),
        ("sin(x)", f64::sin),
        ("cos(x)", f64::cos),
        ("exp(x)", f64::exp),
        ("1/(1 + x^2)", |x| 1.0 / (1.0 + x * x)),
    ]
}

/// Trapezoidal quadrature of `f·g`.
pub fn inner(f: &SampledFunction, g: &SampledFunction) -> Result<f64> {
    f.check_grid(g)?;
    Ok(f.grid()
        .trapezoid_weights()
        .iter()
        .zip(f.values())
        .zip(g.values())
        .map(|((w, a), b)| w * a * b)
        .sum())
}

/// One evaluation of both sides on a single grid.
struct Sides {
    lhs: f64,
    rhs: f64,
}

impl Sides {
    fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

fn rel(abs_gap: f64, lhs: f64, rhs: f64) -> f64 {
    abs_gap / lhs.abs().max(rhs.abs()).max(1e-300)
}

/// Runs `eval` on `grid` and every ladder level, assembling a report.
fn run(
    id: IdentityId,
    grid: Grid,
    vo: &VerifyOptions,
    echo: ParamsEcho,
    eval: impl Fn(Grid) -> Result<Sides> + Sync,
) -> Result<IdentityReport> {
    let mut levels: Vec<usize> = vo.ladder.clone();
    if !levels.contains(&grid.n) {
        levels.push(grid.n);
    }
    levels.sort_unstable();
    levels.dedup();
    let results = levels
        .par_iter()
        .map(|&n| Grid::new(grid.a, grid.b, n).and_then(&eval).map(|s| (n, s)))
        .collect::<Result<Vec<_>>>()?;
    let (_, head) = results
        .iter()
        .find(|(n, _)| *n == grid.n)
        .expect("requested grid is always evaluated");
    let abs_gap = head.gap();
    let convergence_rows = results
        .iter()
        .filter(|(n, _)| vo.ladder.contains(n) || vo.ladder.is_empty())
        .map(|(n, s)| ConvergenceRow {
            n: *n,
            abs_gap: s.gap(),
        })
        .collect();
    Ok(IdentityReport {
        identity_id: id,
        lhs: head.lhs,
        rhs: head.rhs,
        abs_gap,
        rel_gap: rel(abs_gap, head.lhs, head.rhs),
        grid_n: grid.n,
        params_echo: echo,
        convergence_rows,
    })
}

fn echo(p: Option<&FracParams>, beta: f64, w: &str, grid: Grid, ops: &OperatorOptions) -> ParamsEcho {
    ParamsEcho {
        alpha: p.map(|p| p.alpha),
        beta,
        normalization: p.map(|p| p.normalization),
        weight: w.to_string(),
        side: None,
        operator: None,
        rule: ops.rule,
        right_sign: ops.right_sign,
        a: grid.a,
        b: grid.b,
        detail: None,
    }
}

fn sampled(f: RealFn<'_>, grid: Grid) -> Result<SampledFunction> {
    SampledFunction::from_fn(grid, f)
}

fn weight_values(w: &WeightFunction, grid: Grid) -> Result<Vec<f64>> {
    w.values_on(&grid)
}

/// Pointwise `f · w^k`.
fn times_power(f: &SampledFunction, w: &[f64], k: i32) -> Result<SampledFunction> {
    SampledFunction::new(
        *f.grid(),
        f.values().iter().zip(w).map(|(v, wi)| v * wi.powi(k)).collect(),
    )
}

/// Which builder produced a cached matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Build {
    GenInt,
    GenDer,
    AbInt,
    AbDer,
}

/// Everything an operator matrix depends on. The weight enters only through
/// its node values, so those are the key rather than the description.
#[derive(Debug, Clone, PartialEq)]
struct BuildKey {
    build: Build,
    side: Side,
    grid: Grid,
    params: Option<FracParams>,
    order: f64,
    ops: OperatorOptions,
    weights: Vec<f64>,
}

/// Recently built matrices. Corpus sweeps evaluate many `(f, g)` pairs
/// against the same operators; the derivative series dominates the cost.
const CACHE_SLOTS: usize = 16;
static CACHE: Mutex<VecDeque<(BuildKey, Arc<OperatorMatrix>)>> = Mutex::new(VecDeque::new());

fn cached(key: BuildKey, build: impl FnOnce() -> Result<OperatorMatrix>) -> Result<Arc<OperatorMatrix>> {
    {
        let cache = CACHE.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((_, m)) = cache.iter().find(|(k, _)| *k == key) {
            return Ok(Arc::clone(m));
        }
    }
    let m = Arc::new(build()?);
    let mut cache = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if !cache.iter().any(|(k, _)| *k == key) {
        if cache.len() == CACHE_SLOTS {
            cache.pop_front();
        }
        cache.push_back((key, Arc::clone(&m)));
    }
    Ok(m)
}

fn gen_op(
    build: Build,
    grid: Grid,
    p: &FracParams,
    w: &WeightFunction,
    ops: &OperatorOptions,
    side: Side,
) -> Result<Arc<OperatorMatrix>> {
    let key = BuildKey {
        build,
        side,
        grid,
        params: Some(*p),
        order: p.beta,
        ops: *ops,
        weights: w.values_on(&grid)?,
    };
    cached(key, || match build {
        Build::GenInt => gen_integral_side(grid, p, w, ops, side),
        _ => Ok(gen_derivative_side(grid, p, w, ops, side)?.0),
    })
}

fn ab_op(build: Build, grid: Grid, alpha: f64, ops: &OperatorOptions, side: Side) -> Result<Arc<OperatorMatrix>> {
    let key = BuildKey {
        build,
        side,
        grid,
        params: None,
        order: alpha,
        ops: *ops,
        weights: Vec::new(),
    };
    cached(key, || match build {
        Build::AbInt => ab_integral(grid, alpha, side, ops),
        _ => ab_derivative(grid, alpha, side, ops),
    })
}

fn operator_pair(
    grid: Grid,
    p: &FracParams,
    w: &WeightFunction,
    ops: &OperatorOptions,
    op: IbpOperator,
) -> Result<(Arc<OperatorMatrix>, Arc<OperatorMatrix>)> {
    let build = match op {
        IbpOperator::Integral => Build::GenInt,
        IbpOperator::Derivative => Build::GenDer,
    };
    Ok((
        gen_op(build, grid, p, w, ops, Side::Left)?,
        gen_op(build, grid, p, w, ops, Side::Right)?,
    ))
}

/// `∫ f · I^β_a g = ∫ g · I^β_b f` with unit weight.
pub fn verify_samko(
    beta: f64,
    f: RealFn<'_>,
    g: RealFn<'_>,
    grid: Grid,
    vo: &VerifyOptions,
) -> Result<IdentityReport> {
    let one = WeightFunction::one();
    run(
        IdentityId::SamkoLemma,
        grid,
        vo,
        echo(None, beta, "1", grid, &vo.ops),
        |gr| {
            let (fs, gs) = (sampled(f, gr)?, sampled(g, gr)?);
            let l = rl_integral_left(gr, beta, &one, &vo.ops)?;
            let r = rl_integral_right(gr, beta, &one, &vo.ops)?;
            Ok(Sides {
                lhs: inner(&fs, &l.apply(&gs)?)?,
                rhs: inner(&gs, &r.apply(&fs)?)?,
            })
        },
    )
}

/// Both compositions `I(D f)` and `D(I f)` on one side. The target is `f`
/// on the left; on the right it is `−f` under `RightSign::Printed` and `f`
/// under `RightSign::Definition`. The report's `lhs`/`rhs` are the composite
/// and target values at the node of largest deviation.
pub fn verify_inversion(
    p: &FracParams,
    w: &WeightFunction,
    f: RealFn<'_>,
    grid: Grid,
    side: Side,
    vo: &VerifyOptions,
) -> Result<IdentityReport> {
    let id = match side {
        Side::Left => IdentityId::InversionLeft,
        Side::Right => IdentityId::InversionRight,
    };
    let sign = match side {
        Side::Left => 1.0,
        Side::Right => vo.ops.right_sign.factor(),
    };
    let mut e = echo(Some(p), p.beta, w.description(), grid, &vo.ops);
    e.side = Some(side);
    run(id, grid, vo, e, |gr| {
        let fs = sampled(f, gr)?;
        let int = gen_op(Build::GenInt, gr, p, w, &vo.ops, side)?;
        let der = gen_op(Build::GenDer, gr, p, w, &vo.ops, side)?;
        let mut worst = Sides { lhs: 0.0, rhs: 0.0 };
        for composite in [int.apply(&der.apply(&fs)?)?, der.apply(&int.apply(&fs)?)?] {
            for (c, t) in composite.values().iter().zip(fs.values()) {
                let cand = Sides {
                    lhs: *c,
                    rhs: sign * t,
                };
                if cand.gap() > worst.gap() {
                    worst = cand;
                }
            }
        }
        Ok(worst)
    })
}

/// `∫ f · Op_a g = ∫ g · Op_b f` with `w ≡ 1`.
pub fn verify_ibp_unweighted(
    p: &FracParams,
    f: RealFn<'_>,
    g: RealFn<'_>,
    grid: Grid,
    op: IbpOperator,
    vo: &VerifyOptions,
) -> Result<IdentityReport> {
    let one = WeightFunction::one();
    let id = match op {
        IbpOperator::Integral => IdentityId::IbpUnweightedIntegral,
        IbpOperator::Derivative => IdentityId::IbpUnweightedDerivative,
    };
    let mut e = echo(Some(p), p.beta, "1", grid, &vo.ops);
    e.operator = Some(op);
    run(id, grid, vo, e, |gr| {
        let (fs, gs) = (sampled(f, gr)?, sampled(g, gr)?);
        let (l, r) = operator_pair(gr, p, &one, &vo.ops, op)?;
        Ok(Sides {
            lhs: inner(&fs, &l.apply(&gs)?)?,
            rhs: inner(&gs, &r.apply(&fs)?)?,
        })
    })
}

/// `∫ f · Op_{a,w} g = ∫ w²g · Op_{b,w}(f/w²)`.
pub fn verify_ibp_weighted(
    p: &FracParams,
    w: &WeightFunction,
    f: RealFn<'_>,
    g: RealFn<'_>,
    grid: Grid,
    op: IbpOperator,
    vo: &VerifyOptions,
) -> Result<IdentityReport> {
    let id = match op {
        IbpOperator::Integral => IdentityId::IbpWeightedIntegral,
        IbpOperator::Derivative => IdentityId::IbpWeightedDerivative,
    };
    let mut e = echo(Some(p), p.beta, w.description(), grid, &vo.ops);
    e.operator = Some(op);
    run(id, grid, vo, e, |gr| {
        let (fs, gs) = (sampled(f, gr)?, sampled(g, gr)?);
        let wv = weight_values(w, gr)?;
        let (l, r) = operator_pair(gr, p, w, &vo.ops, op)?;
        Ok(Sides {
            lhs: inner(&fs, &l.apply(&gs)?)?,
            rhs: inner(&times_power(&gs, &wv, 2)?, &r.apply(&times_power(&fs, &wv, -2)?)?)?,
        })
    })
}

/// `∫ f · Op_{b,w} g = ∫ w²g · Op_{a,w}(f/w²)`.
pub fn verify_ibp_corollary_right(
    p: &FracParams,
    w: &WeightFunction,
    f: RealFn<'_>,
    g: RealFn<'_>,
    grid: Grid,
    op: IbpOperator,
    vo: &VerifyOptions,
) -> Result<IdentityReport> {
    let mut e = echo(Some(p), p.beta, w.description(), grid, &vo.ops);
    e.operator = Some(op);
    run(IdentityId::IbpCorollaryRight, grid, vo, e, |gr| {
        let (fs, gs) = (sampled(f, gr)?, sampled(g, gr)?);
        let wv = weight_values(w, gr)?;
        let (l, r) = operator_pair(gr, p, w, &vo.ops, op)?;
        Ok(Sides {
            lhs: inner(&fs, &r.apply(&gs)?)?,
            rhs: inner(&times_power(&gs, &wv, 2)?, &l.apply(&times_power(&fs, &wv, -2)?)?)?,
        })
    })
}

/// `∫ w f · Op_{a,w}(g/w) = ∫ w g · Op_{b,w}(f/w)`.
pub fn verify_ibp_symmetric(
    p: &FracParams,
    w: &WeightFunction,
    f: RealFn<'_>,
    g: RealFn<'_>,
    grid: Grid,
    op: IbpOperator,
    vo: &VerifyOptions,
) -> Result<IdentityReport> {
    let id = match op {
        IbpOperator::Integral => IdentityId::IbpSymmetricIntegral,
        IbpOperator::Derivative => IdentityId::IbpSymmetricDerivative,
    };
    let mut e = echo(Some(p), p.beta, w.description(), grid, &vo.ops);
    e.operator = Some(op);
    run(id, grid, vo, e, |gr| {
        let (fs, gs) = (sampled(f, gr)?, sampled(g, gr)?);
        let wv = weight_values(w, gr)?;
        let (l, r) = operator_pair(gr, p, w, &vo.ops, op)?;
        Ok(Sides {
            lhs: inner(&times_power(&fs, &wv, 1)?, &l.apply(&times_power(&gs, &wv, -1)?)?)?,
            rhs: inner(&times_power(&gs, &wv, 1)?, &r.apply(&times_power(&fs, &wv, -1)?)?)?,
        })
    })
}

/// Result of [`verify_ab_reduction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbReductionReport {
    /// Largest entrywise difference between the generalized operators
    /// (`w ≡ 1`, `β = α`, Atangana–Baleanu normalization) and the
    /// Atangana–Baleanu builders, over both integrals and both derivatives.
    pub matrix: IdentityReport,
    /// `∫ f · D_a g = ∫ g · D_b f` evaluated with the Atangana–Baleanu builders.
    pub ibp: IdentityReport,
}

pub fn verify_ab_reduction(
    alpha: f64,
    f: RealFn<'_>,
    g: RealFn<'_>,
    grid: Grid,
    vo: &VerifyOptions,
) -> Result<AbReductionReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let p = make_params(alpha, alpha, Normalization::OneMinusAlphaPlusAlphaOverGamma)?;
    let one = WeightFunction::one();
    let mut e = echo(Some(&p), alpha, "1", grid, &vo.ops);
    e.detail = Some("max entrywise operator gap".into());
    let matrix = run(IdentityId::AbReduction, grid, vo, e, |gr| {
        let mut worst = Sides { lhs: 0.0, rhs: 0.0 };
        for side in [Side::Left, Side::Right] {
            let pairs = [
                (
                    gen_op(Build::GenInt, gr, &p, &one, &vo.ops, side)?,
                    ab_op(Build::AbInt, gr, alpha, &vo.ops, side)?,
                ),
                (
                    gen_op(Build::GenDer, gr, &p, &one, &vo.ops, side)?,
                    ab_op(Build::AbDer, gr, alpha, &vo.ops, side)?,
                ),
            ];
            for (gen, ab) in pairs {
                for (x, y) in gen.entries.iter().zip(ab.entries.iter()) {
                    if (x - y).abs() > worst.gap() {
                        worst = Sides { lhs: *x, rhs: *y };
                    }
                }
            }
        }
        Ok(worst)
    })?;
    let mut e = echo(Some(&p), alpha, "1", grid, &vo.ops);
    e.operator = Some(IbpOperator::Derivative);
    e.detail = Some("integration by parts with Atangana-Baleanu derivatives".into());
    let ibp = run(IdentityId::AbReduction, grid, vo, e, |gr| {
        let (fs, gs) = (sampled(f, gr)?, sampled(g, gr)?);
        let l = ab_op(Build::AbDer, gr, alpha, &vo.ops, Side::Left)?;
        let r = ab_op(Build::AbDer, gr, alpha, &vo.ops, Side::Right)?;
        Ok(Sides {
            lhs: inner(&fs, &l.apply(&gs)?)?,
            rhs: inner(&gs, &r.apply(&fs)?)?,
        })
    })?;
    Ok(AbReductionReport { matrix, ibp })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn inner_examples() {
        let g = unit(128);
        let one = SampledFunction::from_fn(g, |_| 1.0).unwrap();
        let x = SampledFunction::from_fn(g, |x| x).unwrap();
        assert_eq!(inner(&one, &one).unwrap(), 1.0);
        assert!((inner(&x, &one).unwrap() - 0.5).abs() <= 1e-14);
        let g = unit(256);
        let s = SampledFunction::from_fn(g, |x| (std::f64::consts::PI * x).sin()).unwrap();
        assert!((inner(&s, &s).unwrap() - 0.5).abs() <= 1e-4);
        assert!(inner(&s, &one).is_err());
    }

    #[test]
    fn samko_examples() {
        let vo = VerifyOptions::single();
        let r = verify_samko(0.6, &|_| 0.0, &f64::sin, unit(64), &vo).unwrap();
        assert!(r.abs_gap <= 1e-15);
        let r = verify_samko(1.0, &|_| 1.0, &|_| 1.0, unit(64), &vo).unwrap();
        assert!((r.lhs - 0.5).abs() <= 1e-13 && (r.rhs - 0.5).abs() <= 1e-13);
    }

    #[test]
    fn alpha_zero_inversion_is_exact() {
        let p = make_params(0.0, 0.8, Normalization::ConstantOne).unwrap();
        let w = WeightFunction::one();
        let vo = VerifyOptions::single();
        let r = verify_inversion(&p, &w, &f64::exp, unit(32), Side::Left, &vo).unwrap();
        assert!(r.abs_gap <= 1e-13);
        let vo = vo.with_ops(OperatorOptions::default().with_right_sign(RightSign::Printed));
        let r = verify_inversion(&p, &w, &f64::exp, unit(32), Side::Right, &vo).unwrap();
        assert!(r.abs_gap <= 1e-13, "{r:?}");
    }

    #[test]
    fn report_invariants_and_json_fields() {
        let p = make_params(0.3, 0.7, Normalization::ConstantOne).unwrap();
        let vo = VerifyOptions {
            ladder: vec![16, 32],
            ..Default::default()
        };
        let r = verify_ibp_unweighted(&p, &|x| x * x, &f64::cos, unit(32), IbpOperator::Integral, &vo)
            .unwrap();
        assert_eq!(r.abs_gap, (r.lhs - r.rhs).abs());
        assert_eq!(r.rel_gap, r.abs_gap / r.lhs.abs().max(r.rhs.abs()));
        assert_eq!(r.convergence_rows.len(), 2);
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "identity_id",
            "lhs",
            "rhs",
            "abs_gap",
            "rel_gap",
            "grid_n",
            "params_echo",
            "convergence_rows",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["identity_id"], "IbpUnweightedIntegral");
    }

    #[test]
    fn weighted_with_unit_weight_matches_unweighted() {
        let p = make_params(0.3, 0.7, Normalization::ConstantOne).unwrap();
        let vo = VerifyOptions::single();
        for op in [IbpOperator::Integral, IbpOperator::Derivative] {
            let a = verify_ibp_unweighted(&p, &|x| x * x, &f64::cos, unit(48), op, &vo).unwrap();
            let b = verify_ibp_weighted(&p, &WeightFunction::one(), &|x| x * x, &f64::cos, unit(48), op, &vo)
                .unwrap();
            assert_eq!(a.lhs, b.lhs);
            assert_eq!(a.rhs, b.rhs);
        }
    }

    #[test]
    fn zero_function_gives_zero_gap() {
        let p = make_params(0.5, 0.5, Normalization::ConstantOne).unwrap();
        let w = WeightFunction::new(f64::exp, f64::exp, "exp(x)");
        let vo = VerifyOptions::single();
        let zero = |_: f64| 0.0;
        for op in [IbpOperator::Integral, IbpOperator::Derivative] {
            for r in [
                verify_ibp_weighted(&p, &w, &zero, &f64::sin, unit(32), op, &vo).unwrap(),
                verify_ibp_corollary_right(&p, &w, &f64::sin, &zero, unit(32), op, &vo).unwrap(),
                verify_ibp_symmetric(&p, &w, &zero, &f64::sin, unit(32), op, &vo).unwrap(),
            ] {
                assert!(r.abs_gap <= 1e-15);
            }
        }
        let r = verify_ab_reduction(0.5, &zero, &f64::cos, unit(32), &vo).unwrap();
        assert!(r.ibp.abs_gap <= 1e-15);
    }

    #[test]
    fn symmetric_integral_at_alpha_zero() {
        let p = make_params(0.0, 0.9, Normalization::ConstantOne).unwrap();
        let vo = VerifyOptions::single();
        let r = verify_ibp_symmetric(&p, &WeightFunction::one(), &f64::sin, &f64::sin, unit(64), IbpOperator::Integral, &vo)
            .unwrap();
        assert!(r.abs_gap <= 1e-13);
    }

    #[test]
    fn monotone_check() {
        let mut r = verify_samko(0.6, &f64::exp, &f64::sin, unit(64), &VerifyOptions::single()).unwrap();
        r.convergence_rows = vec![
            ConvergenceRow { n: 1, abs_gap: 1.0 },
            ConvergenceRow { n: 2, abs_gap: 1.05 },
            ConvergenceRow { n: 3, abs_gap: 0.5 },
        ];
        assert!(r.is_monotone(0.1, 0.0));
        assert!(!r.is_monotone(0.01, 0.0));
        assert!(r.is_monotone(0.01, 2.0));
    }

    #[test]
    fn cache_keys_on_weight_values() {
        let p = make_params(0.4, 0.8, Normalization::ConstantOne).unwrap();
        let a = WeightFunction::new(|x| 1.0 + x, |_| 1.0, "w");
        let b = WeightFunction::new(|x| 2.0 + x * x, |x| 2.0 * x, "w");
        let vo = VerifyOptions::single();
        let run = |w: &WeightFunction| {
            verify_ibp_weighted(&p, w, &f64::sin, &f64::cos, unit(64), IbpOperator::Derivative, &vo).unwrap()
        };
        let (ra, rb) = (run(&a), run(&b));
        assert_ne!(ra.lhs, rb.lhs);
        assert_eq!(run(&a), ra);
        let direct = gen_derivative_side(unit(64), &p, &b, &vo.ops, Side::Left).unwrap().0;
        let cached = gen_op(Build::GenDer, unit(64), &p, &b, &vo.ops, Side::Left).unwrap();
        assert_eq!(direct.entries, cached.entries);
    }
}
