//! Dense matrices for the weighted Riemann–Liouville integrals, the weighted
//! generalized integrals and derivatives, and a direct kernel oracle.
//!
//! Every operator is `W⁻¹ · M · W` with `W = diag(w(t_i))` and `M` an
//! unweighted product-quadrature matrix. Right-sided operators use
//! `P · M · P` with `P` the reflection permutation, so the weighted duality
//! `P · L(Qw) · P = R(w)` holds to rounding.
//!
//! Two quadrature rules are available:
//!
//! * [`Rule::Trapezoid`]: product trapezoid. On each cell `w·f` is replaced by
//!   its linear interpolant and kernel moments are integrated in closed form.
//!   Second order for smooth data, but only `O(h^{1+β})` near `a` when the
//!   data behaves like `(t − a)^β`, which is what these operators produce.
//! * [`Rule::Corrected`] (default): product rule with local quadratic
//!   interpolation plus starting weights on the first few columns that make
//!   the rule exact for `(t − a)^σ`, `σ ∈ {βk + m} ∩ (0, 3)` non-integer. This
//!   restores third-order accuracy for compositions such as `I(D f)`.
//!
//! Derivatives use the series `(1/φ) Σ_j (−μ)^j I^{βj}`. For the right side
//! the leading sign is selectable, see [`RightSign`].

use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlf::{ml_kernel, MlEvalOptions};
use crate::types::{FracParams, Grid, SampledFunction, WeightFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    RlIntLeft,
    RlIntRight,
    GenIntLeft,
    GenIntRight,
    GenDerLeft,
    GenDerRight,
    Reflection,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Trapezoid,
    #[default]
    Corrected,
}

/// Leading sign of the right derivative series.
///
/// `Definition` differentiates the right integral definition directly,
/// `−(1/φ)(1/w) d/dx ∫_x^b (wf)(s) E_β[−μ(s−x)^β] ds`, which gives
/// `+(1/φ) Σ (−μ)^j I_b^{βj}` and makes `D_right = P · D_left · P` for `w ≡ 1`.
/// `Printed` uses `−(1/φ) Σ (−μ)^j I_b^{βj}`, under which
/// `I_b(D_b f) = −f` and `D_right = −Id` at `α = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RightSign {
    #[default]
    Definition,
    Printed,
}

impl RightSign {
    pub fn factor(self) -> f64 {
        match self {
            RightSign::Definition => 1.0,
            RightSign::Printed => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorOptions {
    pub rule: Rule,
    pub right_sign: RightSign,
    /// Series truncation: stop at the first term with max-row-sum norm below this.
    pub series_tol: f64,
    pub max_terms: usize,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self {
            rule: Rule::Corrected,
            right_sign: RightSign::Definition,
            series_tol: 1e-14,
            max_terms: 200,
        }
    }
}

impl OperatorOptions {
    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_right_sign(mut self, sign: RightSign) -> Self {
        self.right_sign = sign;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.series_tol > 0.0) {
            return Err(Error::Domain(format!(
                "series_tol must be positive, got {}",
                self.series_tol
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::Domain("max_terms must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OperatorOrder {
    Params(FracParams),
    Beta(f64),
    None,
}

/// An operator on grid samples: `(Op f)(t_i) = Σ_k entries[(i, k)] f_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub grid: Grid,
    pub entries: DMatrix<f64>,
    pub kind: OperatorKind,
    pub order: OperatorOrder,
    pub weight_description: String,
}

impl OperatorMatrix {
    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        apply(self, f)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Largest entrywise difference to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> Result<f64> {
        if self.entries.shape() != other.entries.shape() {
            return Err(Error::GridMismatch("operator sizes differ".into()));
        }
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `P · self · P`.
    pub fn reflected(&self) -> OperatorMatrix {
        let entries = reflect_matrix(&self.entries);
        OperatorMatrix {
            entries,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeriesWarning {
    /// `max_terms` was reached before the term norm fell below `series_tol`.
    NonConvergence,
    /// `μ (b − a)^β > 30`: terms grow before the Gamma decay takes over.
    LargeMu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub terms_used: usize,
    pub last_term_norm: f64,
    pub warning_flags: BTreeSet<SeriesWarning>,
}

/// Threshold on `μ (b − a)^β` above which [`SeriesWarning::LargeMu`] is set.
pub const LARGE_MU_THRESHOLD: f64 = 30.0;

// ---------------------------------------------------------------- public builders

pub fn identity_matrix(grid: Grid) -> OperatorMatrix {
    OperatorMatrix {
        grid,
        entries: DMatrix::identity(grid.len(), grid.len()),
        kind: OperatorKind::Identity,
        order: OperatorOrder::None,
        weight_description: String::new(),
    }
}

/// Anti-diagonal permutation `P`, the discrete reflection `Q`.
pub fn reflection_matrix(grid: Grid) -> OperatorMatrix {
    let n = grid.len();
    OperatorMatrix {
        grid,
        entries: DMatrix::from_fn(n, n, |i, k| if i + k == n - 1 { 1.0 } else { 0.0 }),
        kind: OperatorKind::Reflection,
        order: OperatorOrder::None,
        weight_description: String::new(),
    }
}

/// Weighted left Riemann–Liouville integral of order `beta`.
pub fn rl_integral_left(
    grid: Grid,
    beta: f64,
    w: &WeightFunction,
    opts: &OperatorOptions,
) -> Result<OperatorMatrix> {
    check_beta(beta)?;
    let weights = w.values_on(&grid)?;
    let rule = RuleImpl::new(opts.rule, beta);
    let m = base_left(grid, beta, 0.0, &rule);
    Ok(OperatorMatrix {
        grid,
        entries: conjugate(&m, &weights),
        kind: OperatorKind::RlIntLeft,
        order: OperatorOrder::Beta(beta),
        weight_description: w.description().to_string(),
    })
}

/// Weighted right Riemann–Liouville integral of order `beta`.
pub fn rl_integral_right(
    grid: Grid,
    beta: f64,
    w: &WeightFunction,
    opts: &OperatorOptions,
) -> Result<OperatorMatrix> {
    check_beta(beta)?;
    let weights = w.values_on(&grid)?;
    let rule = RuleImpl::new(opts.rule, beta);
    let m = reflect_matrix(&base_left(grid, beta, 0.0, &rule));
    Ok(OperatorMatrix {
        grid,
        entries: conjugate(&m, &weights),
        kind: OperatorKind::RlIntRight,
        order: OperatorOrder::Beta(beta),
        weight_description: w.description().to_string(),
    })
}

/// `φ·Id + ψ·I^β_{a,w}`.
pub fn gen_integral_left(
    grid: Grid,
    p: &FracParams,
    w: &WeightFunction,
    opts: &OperatorOptions,
) -> Result<OperatorMatrix> {
    gen_integral(grid, p, w, opts, Side::Left)
}

/// `φ·Id + ψ·I^β_{b,w}`.
pub fn gen_integral_right(
    grid: Grid,
    p: &FracParams,
    w: &WeightFunction,
    opts: &OperatorOptions,
) -> Result<OperatorMatrix> {
    gen_integral(grid, p, w, opts, Side::Right)
}

/// `(1/φ) Σ_j (−μ)^j I^{βj}_{a,w}`, truncated by the max-row-sum norm.
pub fn gen_derivative_left(
    grid: Grid,
    p: &FracParams,
    w: &WeightFunction,
    opts: &OperatorOptions,
) -> Result<(OperatorMatrix, SeriesReport)> {
    gen_derivative(grid, p, w, opts, Side::Left)
}

/// `±(1/φ) Σ_j (−μ)^j I^{βj}_{b,w}` with the sign from `opts.right_sign`.
pub fn gen_derivative_right(
    grid: Grid,
    p: &FracParams,
    w: &WeightFunction,
    opts: &OperatorOptions,
) -> Result<(OperatorMatrix, SeriesReport)> {
    gen_derivative(grid, p, w, opts, Side::Right)
}

/// Builds the generalized derivative matrix for either side.
pub fn gen_derivative_side(
    grid: Grid,
    p: &FracParams,
    w: &WeightFunction,
    opts: &OperatorOptions,
    side: Side,
) -> Result<(OperatorMatrix, SeriesReport)> {
    gen_derivative(grid, p, w, opts, side)
}

/// Builds the generalized integral matrix for either side.
pub fn gen_integral_side(
    grid: Grid,
    p: &FracParams,
    w: &WeightFunction,
    opts: &OperatorOptions,
    side: Side,
) -> Result<OperatorMatrix> {
    gen_integral(grid, p, w, opts, side)
}

/// Reference derivative straight from the integral definitions: trapezoid
/// quadrature of `∫ (wf)(s) E_β[−μ|t_i − s|^β] ds` over `[a, t_i]` (left) or
/// `[t_i, b]` (right), then centered differences (second-order one-sided at
/// the ends), scaled by `1/(φ w(t_i))` on the left and `−1/(φ w(t_i))` on the
/// right. Intended for cross-checks; accuracy is limited by the kernel's
/// `d^β` cusp.
pub fn gen_derivative_direct_oracle(
    f: &SampledFunction,
    p: &FracParams,
    w: &WeightFunction,
    side: Side,
    ml: MlEvalOptions,
) -> Result<SampledFunction> {
    let grid = *f.grid();
    let weights = w.values_on(&grid)?;
    let n = grid.n;
    let h = grid.h();
    let kernel = (0..=n)
        .map(|d| ml_kernel(p.beta, p.mu, d as f64 * h, ml))
        .collect::<Result<Vec<f64>>>()?;
    let wf: Vec<f64> = f.values().iter().zip(&weights).map(|(v, w)| v * w).collect();

    let integral = |i: usize| -> f64 {
        let (lo, hi) = match side {
            Side::Left => (0, i),
            Side::Right => (i, n),
        };
        if lo == hi {
            return 0.0;
        }
        let mut acc = 0.5 * (wf[lo] * kernel[i.abs_diff(lo)] + wf[hi] * kernel[i.abs_diff(hi)]);
        for k in lo + 1..hi {
            acc += wf[k] * kernel[i.abs_diff(k)];
        }
        acc * h
    };
    let big_f: Vec<f64> = (0..=n).into_par_iter().map(integral).collect();

    let mut d = vec![0.0; n + 1];
    for i in 0..=n {
        d[i] = if i == 0 {
            (-3.0 * big_f[0] + 4.0 * big_f[1] - big_f[2]) / (2.0 * h)
        } else if i == n {
            (3.0 * big_f[n] - 4.0 * big_f[n - 1] + big_f[n - 2]) / (2.0 * h)
        } else {
            (big_f[i + 1] - big_f[i - 1]) / (2.0 * h)
        };
    }
    let sign = match side {
        Side::Left => 1.0,
        Side::Right => -1.0,
    };
    let values = d
        .iter()
        .zip(&weights)
        .map(|(di, wi)| sign * di / (p.phi * wi))
        .collect();
    SampledFunction::new(grid, values)
}

/// `(Qf)(x) = f(a + b − x)`: sample order reversed.
pub fn reflect(f: &SampledFunction) -> SampledFunction {
    let mut v = f.values().to_vec();
    v.reverse();
    SampledFunction::new(*f.grid(), v).expect("reversal preserves length and finiteness")
}

pub fn apply(m: &OperatorMatrix, f: &SampledFunction) -> Result<SampledFunction> {
    if !m.grid.same_as(f.grid()) {
        return Err(Error::GridMismatch(format!(
            "operator on {:?}, function on {:?}",
            m.grid,
            f.grid()
        )));
    }
    let x = DVector::from_column_slice(f.values());
    let y = &m.entries * x;
    SampledFunction::new(m.grid, y.as_slice().to_vec())
}

// ---------------------------------------------------------------- Atangana–Baleanu builders

/// Atangana–Baleanu normalization `1 − α + α/Γ(α)`.
fn ab_normalization(alpha: f64) -> f64 {
    1.0 - alpha + alpha / libm::tgamma(alpha)
}

/// Atangana–Baleanu integral `(1−α)/B · f + α/B · I^α f` (left, `w ≡ 1`).
pub fn ab_integral(grid: Grid, alpha: f64, side: Side, opts: &OperatorOptions) -> Result<OperatorMatrix> {
    check_ab_alpha(alpha)?;
    let b = ab_normalization(alpha);
    let rule = RuleImpl::new(opts.rule, alpha);
    let mut m = base_left(grid, alpha, 0.0, &rule) * (alpha / b);
    for i in 0..grid.len() {
        m[(i, i)] += (1.0 - alpha) / b;
    }
    let (entries, kind) = match side {
        Side::Left => (m, OperatorKind::GenIntLeft),
        Side::Right => (reflect_matrix(&m), OperatorKind::GenIntRight),
    };
    Ok(OperatorMatrix {
        grid,
        entries,
        kind,
        order: OperatorOrder::Beta(alpha),
        weight_description: "1".into(),
    })
}

/// Atangana–Baleanu Riemann–Liouville derivative as the series
/// `B/(1−α) Σ_j (−α/(1−α))^j I^{αj}` (`w ≡ 1`).
pub fn ab_derivative(grid: Grid, alpha: f64, side: Side, opts: &OperatorOptions) -> Result<OperatorMatrix> {
    check_ab_alpha(alpha)?;
    opts.validate()?;
    let b = ab_normalization(alpha);
    let rule = RuleImpl::new(opts.rule, alpha);
    let lead = b / (1.0 - alpha);
    let ratio = alpha / (1.0 - alpha);
    let dim = grid.len();
    let mut sum = DMatrix::<f64>::identity(dim, dim) * lead;
    for j in 1..opts.max_terms {
        let ln_scale = j as f64 * ratio.ln() + lead.ln();
        let mut term = base_left(grid, alpha * j as f64, ln_scale, &rule);
        if j % 2 == 1 {
            term.neg_mut();
        }
        let norm = term
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        sum += term;
        if norm < opts.series_tol {
            break;
        }
    }
    let (entries, kind) = match side {
        Side::Left => (sum, OperatorKind::GenDerLeft),
        Side::Right => (
            reflect_matrix(&sum) * opts.right_sign.factor(),
            OperatorKind::GenDerRight,
        ),
    };
    Ok(OperatorMatrix {
        grid,
        entries,
        kind,
        order: OperatorOrder::Beta(alpha),
        weight_description: "1".into(),
    })
}

fn check_ab_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "Atangana-Baleanu order must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- internals

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("order beta must be > 0, got {beta}")));
    }
    Ok(())
}

fn gen_integral(
    grid: Grid,
    p: &FracParams,
    w: &WeightFunction,
    opts: &OperatorOptions,
    side: Side,
) -> Result<OperatorMatrix> {
    let weights = w.values_on(&grid)?;
    let mut m = if p.psi == 0.0 {
        DMatrix::zeros(grid.len(), grid.len())
    } else {
        let rule = RuleImpl::new(opts.rule, p.beta);
        base_left(grid, p.beta, p.psi.ln(), &rule)
    };
    for i in 0..grid.len() {
        m[(i, i)] += p.phi;
    }
    let (m, kind) = match side {
        Side::Left => (m, OperatorKind::GenIntLeft),
        Side::Right => (reflect_matrix(&m), OperatorKind::GenIntRight),
    };
    Ok(OperatorMatrix {
        grid,
        entries: conjugate(&m, &weights),
        kind,
        order: OperatorOrder::Params(*p),
        weight_description: w.description().to_string(),
    })
}

fn gen_derivative(
    grid: Grid,
    p: &FracParams,
    w: &WeightFunction,
    opts: &OperatorOptions,
    side: Side,
) -> Result<(OperatorMatrix, SeriesReport)> {
    opts.validate()?;
    let weights = w.values_on(&grid)?;
    let dim = grid.len();
    let rule = RuleImpl::new(opts.rule, p.beta);

    let mut flags = BTreeSet::new();
    if p.mu * (grid.b - grid.a).powf(p.beta) > LARGE_MU_THRESHOLD {
        flags.insert(SeriesWarning::LargeMu);
        log::warn!(
            "mu (b - a)^beta = {:.3e} exceeds {LARGE_MU_THRESHOLD}; expect precision loss",
            p.mu * (grid.b - grid.a).powf(p.beta)
        );
    }

    // Norms are measured on the weighted term W⁻¹ T W, as applied to data.
    let weighted_norm = |t: &DMatrix<f64>| -> f64 {
        (0..dim)
            .map(|i| (0..dim).map(|k| t[(i, k)].abs() * weights[k]).sum::<f64>() / weights[i])
            .fold(0.0, f64::max)
    };

    let mut sum = DMatrix::<f64>::identity(dim, dim) / p.phi;
    let mut terms_used = 1;
    let mut last_term_norm = 1.0 / p.phi;
    let mut converged = p.mu == 0.0;
    if p.mu == 0.0 {
        last_term_norm = 0.0;
    } else {
        for j in 1..opts.max_terms {
            let ln_scale = j as f64 * p.mu.ln() - p.phi.ln();
            let mut term = base_left(grid, p.beta * j as f64, ln_scale, &rule);
            if j % 2 == 1 {
                term.neg_mut();
            }
            last_term_norm = weighted_norm(&term);
            sum += term;
            terms_used = j + 1;
            if last_term_norm < opts.series_tol {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        flags.insert(SeriesWarning::NonConvergence);
        log::warn!(
            "derivative series hit max_terms = {} with last term norm {last_term_norm:.3e}",
            opts.max_terms
        );
    }

    let (m, kind) = match side {
        Side::Left => (sum, OperatorKind::GenDerLeft),
        Side::Right => (
            reflect_matrix(&sum) * opts.right_sign.factor(),
            OperatorKind::GenDerRight,
        ),
    };
    Ok((
        OperatorMatrix {
            grid,
            entries: conjugate(&m, &weights),
            kind,
            order: OperatorOrder::Params(*p),
            weight_description: w.description().to_string(),
        },
        SeriesReport {
            terms_used,
            last_term_norm,
            warning_flags: flags,
        },
    ))
}

/// `W⁻¹ · m · W`.
fn conjugate(m: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, k| m[(i, k)] * w[k] / w[i])
}

/// `P · m · P`.
fn reflect_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, m.ncols(), |i, k| m[(n - 1 - i, m.ncols() - 1 - k)])
}

/// Largest number of non-integer exponents given starting weights. More
/// exponents make the Vandermonde fit ill-conditioned and the weights on the
/// first columns blow up with alternating signs.
const MAX_CORRECTION_EXPONENTS: usize = 3;
/// Exponents at or above this have a bounded second derivative and are left
/// to the base quadratic rule.
const CORRECTION_CUTOFF: f64 = 2.0;

enum RuleImpl {
    Trapezoid,
    Quadratic(Option<Arc<Corrections>>),
}

impl RuleImpl {
    fn new(rule: Rule, beta: f64) -> Self {
        match rule {
            Rule::Trapezoid => RuleImpl::Trapezoid,
            Rule::Corrected => RuleImpl::Quadratic(Corrections::for_beta(beta)),
        }
    }
}

/// Starting weights making the rule exact for `(t − a)^σ`, `σ ∈ exponents`.
struct Corrections {
    exponents: Vec<f64>,
    /// Inverse of `V[σ][l] = l^σ`, `l = 0..s`.
    vinv: DMatrix<f64>,
}

impl Corrections {
    fn for_beta(beta: f64) -> Option<Arc<Self>> {
        let mut frac = Vec::new();
        let mut k = 1;
        while beta * (k as f64) < CORRECTION_CUTOFF {
            let mut m = 0;
            loop {
                let s = beta * k as f64 + m as f64;
                if s >= CORRECTION_CUTOFF {
                    break;
                }
                if (s - s.round()).abs() > 1e-9 && !frac.iter().any(|&e: &f64| (e - s).abs() < 1e-9) {
                    frac.push(s);
                }
                m += 1;
            }
            k += 1;
        }
        if frac.is_empty() {
            return None;
        }
        frac.sort_by(f64::total_cmp);
        frac.truncate(MAX_CORRECTION_EXPONENTS);
        let mut exponents = vec![0.0, 1.0, 2.0];
        exponents.extend(frac);
        exponents.sort_by(f64::total_cmp);
        let s = exponents.len();
        let v = DMatrix::from_fn(s, s, |r, l| {
            if l == 0 {
                if exponents[r] == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (l as f64).powf(exponents[r])
            }
        });
        match v.try_inverse() {
            Some(vinv) => Some(Arc::new(Self { exponents, vinv })),
            None => {
                log::warn!("starting-weight system for beta = {beta} is singular; using the uncorrected rule");
                None
            }
        }
    }
}

/// `ln(h^γ / Γ(γ + shift))` in a form that stays finite for large `γ`.
fn ln_prefactor(h: f64, gamma: f64, shift: f64) -> f64 {
    gamma * h.ln() - libm::lgamma(gamma + shift)
}

/// Unweighted left integral of order `gamma` scaled by `exp(ln_scale)`.
/// Row 0 is zero.
fn base_left(grid: Grid, gamma: f64, ln_scale: f64, rule: &RuleImpl) -> DMatrix<f64> {
    // Built at the fixed normalization Γ(γ+1)/(b−a)^γ (entries O(1)) and
    // rescaled once, so the starting-weight cancellation does not depend on
    // how a caller splits its constants between `ln_scale` and a product.
    let ln_unit = libm::lgamma(gamma + 1.0) - gamma * (grid.b - grid.a).ln();
    let m = match rule {
        RuleImpl::Trapezoid => trapezoid_left(grid, gamma, ln_unit),
        RuleImpl::Quadratic(corr) => quadratic_left(grid, gamma, ln_unit, corr.as_deref()),
    };
    m * (ln_scale - ln_unit).exp()
}

/// Product trapezoid weights. With `c = h^γ/Γ(γ+2)` and `p = γ + 1`:
/// column 0 gets `c[(i−1)^p − (i−1−γ) i^γ]`, interior column `k` gets
/// `c[(m+1)^p + (m−1)^p − 2m^p]` with `m = i − k`, the diagonal gets `c`.
fn trapezoid_left(grid: Grid, gamma: f64, ln_scale: f64) -> DMatrix<f64> {
    let n = grid.n;
    let ln_c = ln_prefactor(grid.h(), gamma, 2.0) + ln_scale;
    let p = gamma + 1.0;
    // Interior weight by distance m ≥ 1, written as m^p·g(1/m) with
    // g(x) = (1+x)^p + (1−x)^p − 2 evaluated through expm1/ln1p.
    let interior: Vec<f64> = (0..=n)
        .map(|m| {
            if m == 0 {
                return ln_c.exp();
            }
            let x = 1.0 / m as f64;
            let g = (p * x.ln_1p()).exp_m1() + (p * (-x).ln_1p()).exp_m1();
            (ln_c + p * (m as f64).ln()).exp() * g
        })
        .collect();
    let first: Vec<f64> = (0..=n)
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            let x = 1.0 / i as f64;
            let g = (p * (-x).ln_1p()).exp_m1() + p * x;
            (ln_c + p * (i as f64).ln()).exp() * g
        })
        .collect();
    DMatrix::from_fn(n + 1, n + 1, |i, k| {
        if i == 0 || k > i {
            0.0
        } else if k == 0 {
            first[i]
        } else {
            interior[i - k]
        }
    })
}

fn gauss_legendre() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let q = GaussLegendre::new(12.try_into().expect("12 > 0"));
        // Map [−1, 1] to [0, 1].
        q.iter().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
    })
}

/// Cell weights for the quadratic product rule.
///
/// For the cell `[t_c, t_{c+1}]` in row `i`, put `q = i − 1 − c` and
/// `s = t_c + (1 − u)h`; the kernel becomes `h^{γ−1}(q + u)^{γ−1}`. Returns
/// `exp(ln_scale)·h^γ/Γ(γ) · ∫_0^1 (q+u)^{γ−1} u^m du` for `m = 0, 1, 2`.
fn cell_moments(h: f64, gamma: f64, ln_scale: f64, q: usize) -> [f64; 3] {
    let ln_pre = ln_prefactor(h, gamma, 0.0) + ln_scale;
    if q == 0 {
        let pre = ln_pre.exp();
        return [pre / gamma, pre / (gamma + 1.0), pre / (gamma + 2.0)];
    }
    let qf = q as f64;
    let pre = (ln_pre + (gamma - 1.0) * (qf + 1.0).ln()).exp();
    if pre == 0.0 {
        return [0.0; 3];
    }
    let mut acc = [0.0; 3];
    for &(u, wt) in gauss_legendre() {
        let k = wt * ((qf + u) / (qf + 1.0)).powf(gamma - 1.0);
        acc[0] += k;
        acc[1] += k * u;
        acc[2] += k * u * u;
    }
    [pre * acc[0], pre * acc[1], pre * acc[2]]
}

/// Quadratic product rule. Cells `c ≤ i − 2` interpolate on `{c, c+1, c+2}`,
/// the last cell on `{i−2, i−1, i}`; row 1 is linear.
fn quadratic_left(grid: Grid, gamma: f64, ln_scale: f64, corr: Option<&Corrections>) -> DMatrix<f64> {
    let n = grid.n;
    let h = grid.h();
    let moments: Vec<[f64; 3]> = (0..n).map(|q| cell_moments(h, gamma, ln_scale, q)).collect();

    // Correction data: powers k^σ and the exact moments of (t − a)^σ.
    let powers: Vec<Vec<f64>> = corr
        .map(|c| {
            c.exponents
                .iter()
                .map(|&s| (0..=n).map(|k| if k == 0 { if s == 0.0 { 1.0 } else { 0.0 } } else { (k as f64).powf(s) }).collect())
                .collect()
        })
        .unwrap_or_default();

    let rows: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n + 1];
            if i == 0 {
                return row;
            }
            if i == 1 {
                let [u0, u1, _] = moments[0];
                // v = 1 − u; linear interpolant g0(1 − v) + g1 v.
                row[0] += u1;
                row[1] += u0 - u1;
            } else {
                for c in 0..i - 1 {
                    let [u0, u1, u2] = moments[i - 1 - c];
                    // Forward basis in u: (u+u²)/2, 1−u², (u²−u)/2.
                    row[c] += 0.5 * (u1 + u2);
                    row[c + 1] += u0 - u2;
                    row[c + 2] += 0.5 * (u2 - u1);
                }
                let [u0, u1, u2] = moments[0];
                // Backward basis in u: (u²−u)/2, 2u−u², (2−3u+u²)/2.
                row[i - 2] += 0.5 * (u2 - u1);
                row[i - 1] += 2.0 * u1 - u2;
                row[i] += 0.5 * (2.0 * u0 - 3.0 * u1 + u2);
            }
            if let Some(c) = corr {
                apply_corrections(&mut row, i, h, gamma, ln_scale, c, &powers);
            }
            row
        })
        .collect();

    DMatrix::from_fn(n + 1, n + 1, |i, k| rows[i][k])
}

fn apply_corrections(
    row: &mut [f64],
    i: usize,
    h: f64,
    gamma: f64,
    ln_scale: f64,
    corr: &Corrections,
    powers: &[Vec<f64>],
) {
    let s = corr.exponents.len();
    if s > row.len() {
        return;
    }
    let t = i as f64 * h;
    // Defect of the rule on (t − a)^σ, divided by h^σ.
    let rhs = DVector::from_iterator(
        s,
        corr.exponents.iter().zip(powers).map(|(&sigma, pw)| {
            let ln_exact = libm::lgamma(sigma + 1.0) - libm::lgamma(sigma + gamma + 1.0)
                + (sigma + gamma) * t.ln()
                - sigma * h.ln()
                + ln_scale;
            let rule: f64 = row.iter().zip(pw).map(|(a, b)| a * b).sum();
            ln_exact.exp() - rule
        }),
    );
    let c = &corr.vinv * rhs;
    for (l, cl) in c.iter().enumerate() {
        row[l] += cl;
    }
}
