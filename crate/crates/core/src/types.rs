//! Fractional parameters, uniform grids, sampled functions and weights.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Normalization function `B(α)`. Both variants satisfy `B(0) = B(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `B(α) ≡ 1`.
    #[default]
    ConstantOne,
    /// `B(α) = 1 − α + α/Γ(α)`, the Atangana–Baleanu choice.
    OneMinusAlphaPlusAlphaOverGamma,
}

impl Normalization {
    pub fn eval(self, alpha: f64) -> f64 {
        match self {
            Normalization::ConstantOne => 1.0,
            // α/Γ(α) = α²/Γ(α + 1) stays finite at α = 0.
            Normalization::OneMinusAlphaPlusAlphaOverGamma => {
                1.0 - alpha + alpha * alpha / libm::tgamma(alpha + 1.0)
            }
        }
    }
}

/// Orders `α ∈ [0, 1)`, `β > 0` and the derived constants
/// `φ = (1 − α)/B(α)`, `ψ = α/B(α)`, `μ = α/(1 − α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub alpha: f64,
    pub beta: f64,
    pub normalization: Normalization,
    pub b_alpha: f64,
    pub phi: f64,
    pub psi: f64,
    pub mu: f64,
}

impl FracParams {
    pub fn new(alpha: f64, beta: f64, normalization: Normalization) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, 1), got {alpha}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be > 0, got {beta}")));
        }
        let b_alpha = normalization.eval(alpha);
        Ok(Self {
            alpha,
            beta,
            normalization,
            b_alpha,
            phi: (1.0 - alpha) / b_alpha,
            psi: alpha / b_alpha,
            mu: alpha / (1.0 - alpha),
        })
    }
}

/// Shorthand for [`FracParams::new`].
pub fn make_params(alpha: f64, beta: f64, normalization: Normalization) -> Result<FracParams> {
    FracParams::new(alpha, beta, normalization)
}

/// Uniform grid on `[a, b]` with `n` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || !(a < b) {
            return Err(Error::Domain(format!("grid requires finite a < b, got [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::Domain(format!("grid requires n >= 2 intervals, got {n}")));
        }
        Ok(Self { a, b, n })
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node `i`; the last node is `b` exactly.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.b
        } else {
            self.a + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }

    /// Composite trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.n + 1];
        w[0] = 0.5 * h;
        w[self.n] = 0.5 * h;
        w
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Values of a function at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "sample {i} at x = {} is not finite",
                grid.node(i)
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .grid
            .nodes()
            .into_iter()
            .zip(&self.values)
            .map(|(x, &v)| f(x, v))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.grid, values)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)))
        }
    }
}

/// Samples an expression at every node.
pub fn sample(expr: &Expr, grid: Grid) -> Result<SampledFunction> {
    let values = grid
        .nodes()
        .into_iter()
        .map(|x| {
            expr.eval(x).map_err(|e| match e {
                Error::Eval { offset, message } => Error::Eval {
                    offset,
                    message: format!("{message} (at node x = {x})"),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(grid, values)
}

/// Samples a closure at every node.
pub fn sample_fn(f: impl Fn(f64) -> f64, grid: Grid) -> Result<SampledFunction> {
    SampledFunction::from_fn(grid, f)
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Positive weight `w` together with its derivative.
#[derive(Clone)]
pub struct WeightFunction {
    value: RealFn,
    derivative: RealFn,
    description: String,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("description", &self.description)
            .finish()
    }
}

impl WeightFunction {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        description: impl Into<String>,
    ) -> Self {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            description: description.into(),
        }
    }

    /// `w ≡ 1`.
    pub fn one() -> Self {
        Self::new(|_| 1.0, |_| 0.0, "1")
    }

    /// Weight given by an expression; the derivative is symbolic.
    pub fn from_expr(expr: &Expr) -> Result<Self> {
        let d = expr.differentiate()?;
        let e = expr.clone();
        let description = expr.to_string();
        Ok(Self::new(
            move |x| e.eval(x).unwrap_or(f64::NAN),
            move |x| d.eval(x).unwrap_or(f64::NAN),
            description,
        ))
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// `x ↦ w(a + b − x)`.
    pub fn reflected(&self, grid: &Grid) -> Self {
        let s = grid.a + grid.b;
        let v = Arc::clone(&self.value);
        let d = Arc::clone(&self.derivative);
        Self {
            value: Arc::new(move |x| v(s - x)),
            derivative: Arc::new(move |x| -d(s - x)),
            description: format!("reflected({})", self.description),
        }
    }

    /// Checks `w > 0` at every node and returns the node values. A warning is
    /// logged when `w' < 0` somewhere (a decreasing weight); that case is allowed.
    pub fn values_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        let nodes = grid.nodes();
        let values: Vec<f64> = nodes.iter().map(|&x| self.value(x)).collect();
        if let Some(i) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "weight `{}` must be positive: w({}) = {}",
                self.description, nodes[i], values[i]
            )));
        }
        if let Some(&x) = nodes.iter().find(|&&x| !(self.derivative(x) >= 0.0)) {
            // Once per weight; operators are rebuilt many times per run.
            static WARNED: Mutex<BTreeSet<String>> = Mutex::new(BTreeSet::new());
            let mut warned = WARNED.lock().unwrap_or_else(|e| e.into_inner());
            if warned.insert(self.description.clone()) {
                log::warn!(
                    "weight `{}` has w'({x}) < 0; continuing (only w > 0 is required here)",
                    self.description
                );
            }
        }
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_substitution() {
        let p = make_params(0.0, 1.0, Normalization::ConstantOne).unwrap();
        assert_eq!((p.phi, p.psi, p.mu), (1.0, 0.0, 0.0));
        let p = make_params(0.5, 0.8, Normalization::ConstantOne).unwrap();
        assert_eq!((p.phi, p.psi, p.mu), (0.5, 0.5, 1.0));
        assert!(matches!(
            make_params(1.0, 1.0, Normalization::ConstantOne),
            Err(Error::Domain(_))
        ));
        assert!(make_params(-0.1, 1.0, Normalization::ConstantOne).is_err());
        assert!(make_params(0.5, 0.0, Normalization::ConstantOne).is_err());
    }

    #[test]
    fn normalizations_hit_one_at_both_ends() {
        for norm in [
            Normalization::ConstantOne,
            Normalization::OneMinusAlphaPlusAlphaOverGamma,
        ] {
            assert_eq!(norm.eval(0.0), 1.0);
            assert!((norm.eval(1.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn literal_identities() {
        for k in 0..100 {
            let alpha = k as f64 / 100.0;
            for norm in [
                Normalization::ConstantOne,
                Normalization::OneMinusAlphaPlusAlphaOverGamma,
            ] {
                let p = make_params(alpha, 0.7, norm).unwrap();
                let b = norm.eval(alpha);
                assert!((p.phi - (1.0 - alpha) / b).abs() <= 1e-15 * p.phi.abs().max(1e-300));
                assert!((p.psi - alpha / b).abs() <= 1e-15 * p.psi.abs().max(1e-300));
                assert!((p.mu - alpha / (1.0 - alpha)).abs() <= 1e-15 * p.mu.abs().max(1e-300));
                if alpha > 0.0 {
                    assert!((p.psi / p.phi - p.mu).abs() <= 1e-14 * p.mu);
                }
            }
        }
    }

    #[test]
    fn grid_nodes() {
        let g = Grid::new(0.3, 1.7, 7).unwrap();
        let x = g.nodes();
        assert_eq!(x[0], 0.3);
        assert_eq!(x[7], 1.7);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!(Grid::new(1.0, 1.0, 4).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn sampling() {
        let g = Grid::new(0.0, 1.0, 4).unwrap();
        let one = sample(&Expr::parse("1").unwrap(), g).unwrap();
        assert_eq!(one.values(), &[1.0; 5]);
        let x = sample(&Expr::parse("x").unwrap(), g).unwrap();
        assert_eq!(x.values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g2 = Grid::new(0.0, 1.0, 2).unwrap();
        let e = sample(&Expr::parse("exp(x)").unwrap(), g2).unwrap();
        for (v, x) in e.values().iter().zip([0.0f64, 0.5, 1.0]) {
            assert!((v - x.exp()).abs() <= 1e-15);
        }
    }

    #[test]
    fn sampling_reports_failing_node() {
        let g = Grid::new(-1.0, 1.0, 2).unwrap();
        match sample(&Expr::parse("1/x").unwrap(), g) {
            Err(Error::Eval { message, .. }) => assert!(message.contains("x = 0"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weight_positivity() {
        let g = Grid::new(0.0, 1.0, 4).unwrap();
        assert!(WeightFunction::one().values_on(&g).is_ok());
        let bad = WeightFunction::new(|x| x - 0.5, |_| 1.0, "x - 0.5");
        assert!(matches!(bad.values_on(&g), Err(Error::Domain(_))));
        let w = WeightFunction::from_expr(&Expr::parse("1 + x^2").unwrap()).unwrap();
        assert_eq!(w.derivative(0.5), 1.0);
        let r = w.reflected(&g);
        assert_eq!(r.value(0.0), 2.0);
        assert_eq!(r.derivative(0.0), -2.0);
    }
}
