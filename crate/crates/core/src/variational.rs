//! Discretize-then-optimize treatment of
//! `J[X] = ∫_a^b L(t, X, D_{a,w}X, D_{b,w}X) dt → min`, `X(a) = X_a`, `X(b) = X_b`.
//!
//! `J_h = Σ_i ω_i L(t_i, X_i, (A X)_i, (B X)_i)` with trapezoid weights `ω`,
//! `A` the left and `B` the right generalized derivative matrix. Its exact
//! gradient with respect to the interior values is
//! `ω∘∂₂L + Aᵀ(ω∘∂₃L) + Bᵀ(ω∘∂₄L)`, and the Euler–Lagrange residual
//! `∂₂L + w²·D_b(∂₃L/w²) + w²·D_a(∂₄L/w²)` is evaluated independently with the
//! operator matrices.
//!
//! For the kinetic Lagrangian
//! `L = ½(½m (D_a X)² + ½m (D_b X)²) − V(X)` the partials are
//! `∂₂L = −V'(X)`, `∂₃L = ½m·D_a X`, `∂₄L = ½m·D_b X`, and the Euler–Lagrange
//! residual coincides with `½m[w² D_b(D_a X/w²) + w² D_a(D_b X/w²)] − V'(X)`.
//!
//! At `α = 0` with `RightSign::Definition` both derivatives are the identity,
//! so the Euler–Lagrange equation collapses to `m X − V'(X) = 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::operators::{gen_derivative_left, gen_derivative_right, OperatorMatrix, OperatorOptions, Rule};
use crate::types::{FracParams, Grid, SampledFunction, WeightFunction};

/// Boundary values must match to this absolute tolerance.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Operator options for variational problems: the product trapezoid rule.
///
/// Paired with trapezoid weights `ω` it satisfies `Ω⁻¹AᵀΩ ≈ B` to second
/// order, so the discrete minimizer tracks the Euler–Lagrange equation. The
/// quadratic rule's end weights do not match `ω` and leave an `O(h)`
/// residual plus node-to-node oscillation near the ends.
pub fn default_operator_options() -> OperatorOptions {
    OperatorOptions::default().with_rule(Rule::Trapezoid)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LagrangianForm {
    /// `½(½m (D_a X)² + ½m (D_b X)²) − V(X)`.
    QuadraticKinetic { m: f64, v: Expr },
    /// `c₂F₂(X) + c₃F₃(D_a X) + c₄F₄(D_b X)`.
    GeneralSum {
        c2: f64,
        f2: Expr,
        c3: f64,
        f3: Expr,
        c4: f64,
        f4: Expr,
    },
}

/// A Lagrangian with its partial derivatives prepared symbolically.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSpec {
    pub form: LagrangianForm,
    d2: Expr,
    d3: Option<Expr>,
    d4: Option<Expr>,
    /// `V''` when it is constant, i.e. `V` is at most quadratic.
    v_second: Option<f64>,
}

impl LagrangianSpec {
    pub fn quadratic_kinetic(m: f64, v: Expr) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Domain(format!("mass m must be > 0, got {m}")));
        }
        let dv = v.differentiate()?;
        let v_second = match dv.differentiate() {
            Ok(d2) if d2.is_constant() => Some(d2.eval(0.0)?),
            _ => None,
        };
        Ok(Self {
            form: LagrangianForm::QuadraticKinetic { m, v },
            d2: dv,
            d3: None,
            d4: None,
            v_second,
        })
    }

    pub fn general_sum(c2: f64, f2: Expr, c3: f64, f3: Expr, c4: f64, f4: Expr) -> Result<Self> {
        for (name, c) in [("c2", c2), ("c3", c3), ("c4", c4)] {
            if !c.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite")));
            }
        }
        Ok(Self {
            d2: f2.differentiate()?,
            d3: Some(f3.differentiate()?),
            d4: Some(f4.differentiate()?),
            form: LagrangianForm::GeneralSum {
                c2,
                f2,
                c3,
                f3,
                c4,
                f4,
            },
            v_second: None,
        })
    }

    pub fn mass(&self) -> Option<f64> {
        match self.form {
            LagrangianForm::QuadraticKinetic { m, .. } => Some(m),
            LagrangianForm::GeneralSum { .. } => None,
        }
    }

    /// `L(t, x, dl, dr)`. The built-in forms do not depend on `t`.
    pub fn value(&self, _t: f64, x: f64, dl: f64, dr: f64) -> Result<f64> {
        match &self.form {
            LagrangianForm::QuadraticKinetic { m, v } => {
                Ok(0.25 * m * (dl * dl + dr * dr) - v.eval(x)?)
            }
            LagrangianForm::GeneralSum {
                c2,
                f2,
                c3,
                f3,
                c4,
                f4,
            } => Ok(c2 * f2.eval(x)? + c3 * f3.eval(dl)? + c4 * f4.eval(dr)?),
        }
    }

    /// `(∂₂L, ∂₃L, ∂₄L)` at one point.
    pub fn partials(&self, _t: f64, x: f64, dl: f64, dr: f64) -> Result<(f64, f64, f64)> {
        match &self.form {
            LagrangianForm::QuadraticKinetic { m, .. } => {
                Ok((-self.d2.eval(x)?, 0.5 * m * dl, 0.5 * m * dr))
            }
            LagrangianForm::GeneralSum { c2, c3, c4, .. } => {
                let d3 = self.d3.as_ref().expect("general form has d3");
                let d4 = self.d4.as_ref().expect("general form has d4");
                Ok((c2 * self.d2.eval(x)?, c3 * d3.eval(dl)?, c4 * d4.eval(dr)?))
            }
        }
    }

    /// `V'(x)` for the kinetic form.
    pub fn potential_derivative(&self, x: f64) -> Result<f64> {
        match self.form {
            LagrangianForm::QuadraticKinetic { .. } => self.d2.eval(x),
            LagrangianForm::GeneralSum { .. } => Err(Error::Unsupported(
                "potential derivative requires the kinetic Lagrangian".into(),
            )),
        }
    }

    /// True for the kinetic form with `V` at most quadratic.
    pub fn is_linear_quadratic(&self) -> bool {
        self.v_second.is_some()
    }
}

/// Fixed-endpoint problem on a grid with the derivative matrices prebuilt.
#[derive(Debug, Clone)]
pub struct VariationalProblem {
    pub grid: Grid,
    pub params: FracParams,
    pub w: WeightFunction,
    pub lagrangian: LagrangianSpec,
    pub x_a: f64,
    pub x_b: f64,
    pub ops: OperatorOptions,
    a_mat: OperatorMatrix,
    b_mat: OperatorMatrix,
    weights: Vec<f64>,
    omega: Vec<f64>,
}

impl VariationalProblem {
    pub fn new(
        grid: Grid,
        params: FracParams,
        w: WeightFunction,
        lagrangian: LagrangianSpec,
        x_a: f64,
        x_b: f64,
        ops: OperatorOptions,
    ) -> Result<Self> {
        if !x_a.is_finite() || !x_b.is_finite() {
            return Err(Error::Domain("boundary values must be finite".into()));
        }
        let (a_mat, _) = gen_derivative_left(grid, &params, &w, &ops)?;
        let (b_mat, _) = gen_derivative_right(grid, &params, &w, &ops)?;
        let weights = w.values_on(&grid)?;
        Ok(Self {
            grid,
            params,
            lagrangian,
            x_a,
            x_b,
            ops,
            a_mat,
            b_mat,
            weights,
            omega: grid.trapezoid_weights(),
            w,
        })
    }

    pub fn left_matrix(&self) -> &OperatorMatrix {
        &self.a_mat
    }

    pub fn right_matrix(&self) -> &OperatorMatrix {
        &self.b_mat
    }

    /// `(D_a X, D_b X)`.
    pub fn derivatives(&self, x: &SampledFunction) -> Result<(SampledFunction, SampledFunction)> {
        Ok((self.a_mat.apply(x)?, self.b_mat.apply(x)?))
    }

    /// Linear interpolation between the boundary values.
    pub fn straight_line(&self) -> SampledFunction {
        let (a, b) = (self.grid.a, self.grid.b);
        let mut v: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .map(|&t| self.x_a + (self.x_b - self.x_a) * (t - a) / (b - a))
            .collect();
        v[0] = self.x_a;
        v[self.grid.n] = self.x_b;
        SampledFunction::new(self.grid, v).expect("finite boundary values")
    }

    fn check(&self, x: &SampledFunction) -> Result<()> {
        if !x.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch(format!(
                "trajectory on {:?}, problem on {:?}",
                x.grid(),
                self.grid
            )));
        }
        let v = x.values();
        for (at, found, expected) in [
            (self.grid.a, v[0], self.x_a),
            (self.grid.b, v[self.grid.n], self.x_b),
        ] {
            if (found - expected).abs() > BOUNDARY_TOL {
                return Err(Error::BoundaryMismatch {
                    at,
                    found,
                    expected,
                });
            }
        }
        Ok(())
    }

    /// Partials at every node.
    fn partials(&self, x: &SampledFunction) -> Result<[Vec<f64>; 3]> {
        let (dl, dr) = self.derivatives(x)?;
        let nodes = self.grid.nodes();
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for i in 0..self.grid.len() {
            let (p2, p3, p4) =
                self.lagrangian
                    .partials(nodes[i], x.values()[i], dl.values()[i], dr.values()[i])?;
            out[0].push(p2);
            out[1].push(p3);
            out[2].push(p4);
        }
        Ok(out)
    }
}

/// `J_h[X]`.
pub fn evaluate_functional(prob: &VariationalProblem, x: &SampledFunction) -> Result<f64> {
    prob.check(x)?;
    let (dl, dr) = prob.derivatives(x)?;
    let nodes = prob.grid.nodes();
    let mut j = 0.0;
    for i in 0..prob.grid.len() {
        j += prob.omega[i]
            * prob
                .lagrangian
                .value(nodes[i], x.values()[i], dl.values()[i], dr.values()[i])?;
    }
    Ok(j)
}

/// Exact gradient of `J_h` with respect to the interior values `X_1..X_{n−1}`.
pub fn discrete_gradient(prob: &VariationalProblem, x: &SampledFunction) -> Result<Vec<f64>> {
    prob.check(x)?;
    let [p2, p3, p4] = prob.partials(x)?;
    let om = DVector::from_column_slice(&prob.omega);
    let w3 = DVector::from_iterator(p3.len(), p3.iter().zip(&prob.omega).map(|(a, b)| a * b));
    let w4 = DVector::from_iterator(p4.len(), p4.iter().zip(&prob.omega).map(|(a, b)| a * b));
    let g = prob.a_mat.entries.tr_mul(&w3) + prob.b_mat.entries.tr_mul(&w4)
        + DVector::from_iterator(p2.len(), p2.iter().zip(om.iter()).map(|(a, b)| a * b));
    Ok(g.as_slice()[1..prob.grid.n].to_vec())
}

/// `∂₂L + w²·D_b(∂₃L/w²) + w²·D_a(∂₄L/w²)` at interior nodes; the two
/// boundary entries are set to zero.
pub fn el_residual(prob: &VariationalProblem, x: &SampledFunction) -> Result<SampledFunction> {
    prob.check(x)?;
    let [p2, p3, p4] = prob.partials(x)?;
    let w2: Vec<f64> = prob.weights.iter().map(|w| w * w).collect();
    let scaled = |p: &[f64]| {
        DVector::from_iterator(p.len(), p.iter().zip(&w2).map(|(a, b)| a / b))
    };
    let r3 = &prob.b_mat.entries * scaled(&p3);
    let r4 = &prob.a_mat.entries * scaled(&p4);
    let n = prob.grid.n;
    let values = (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                0.0
            } else {
                p2[i] + w2[i] * r3[i] + w2[i] * r4[i]
            }
        })
        .collect();
    SampledFunction::new(prob.grid, values)
}

/// `½m[w² D_b(D_a X/w²) + w² D_a(D_b X/w²)] − V'(X)` at interior nodes;
/// the two boundary entries are set to zero. Requires the kinetic form.
pub fn newton_law_residual(prob: &VariationalProblem, x: &SampledFunction) -> Result<SampledFunction> {
    prob.check(x)?;
    let m = prob.lagrangian.mass().ok_or_else(|| {
        Error::Unsupported("the Newton-law residual requires the kinetic Lagrangian".into())
    })?;
    let (dl, dr) = prob.derivatives(x)?;
    let w2: Vec<f64> = prob.weights.iter().map(|w| w * w).collect();
    let over_w2 = |f: &SampledFunction| {
        DVector::from_iterator(w2.len(), f.values().iter().zip(&w2).map(|(a, b)| a / b))
    };
    let t1 = &prob.b_mat.entries * over_w2(&dl);
    let t2 = &prob.a_mat.entries * over_w2(&dr);
    let n = prob.grid.n;
    let values = (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                Ok(0.0)
            } else {
                let lhs = 0.5 * m * (w2[i] * t1[i] + w2[i] * t2[i]);
                Ok(lhs - prob.lagrangian.potential_derivative(x.values()[i])?)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    SampledFunction::new(prob.grid, values)
}

/// Sup norm of interior residual values outside a band of
/// `ceil(band · n)` nodes at each end.
pub fn interior_sup(r: &SampledFunction, band: f64) -> f64 {
    let n = r.grid().n;
    let skip = ((band * n as f64).ceil() as usize).max(1);
    if 2 * skip > n {
        return 0.0;
    }
    r.values()[skip..=n - skip]
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepControl {
    /// Steps of fixed length along the preconditioned descent direction.
    FixedStep(f64),
    /// Armijo backtracking starting from the previous accepted step.
    BacktrackingLineSearch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_control: StepControl,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-8,
            step_control: StepControl::BacktrackingLineSearch,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Domain("grad_tol must be positive".into()));
        }
        if let StepControl::FixedStep(s) = self.step_control {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Domain("fixed step must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    LinearSystem,
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub method: SolveMethod,
    pub iterations: usize,
    pub grad_norm: f64,
    pub j_initial: f64,
    pub j_final: f64,
    pub converged: bool,
    /// The descent loop stopped at `max_iters`; the best iterate is returned.
    pub max_iters_exceeded: bool,
    /// Linear path only: max entrywise asymmetry of the reduced system.
    pub system_asymmetry: Option<f64>,
    /// Linear path only: whether the reduced system admitted a Cholesky
    /// factorization (a strict minimizer rather than a saddle).
    pub positive_definite: Option<bool>,
}

/// Minimizes `J_h` over interior values with the boundary values fixed.
///
/// The kinetic Lagrangian with quadratic `V` has an affine gradient and is
/// solved as one linear system; everything else uses preconditioned gradient
/// descent (direction `−M⁻¹g`, `M` the interior block of `AᵀΩA + BᵀΩB + Ω`)
/// with the chosen step control.
pub fn solve(
    prob: &VariationalProblem,
    x_init: &SampledFunction,
    opts: &SolveOptions,
) -> Result<(SampledFunction, SolveDiagnostics)> {
    opts.validate()?;
    let j_initial = evaluate_functional(prob, x_init)?;
    if prob.lagrangian.is_linear_quadratic() {
        solve_linear(prob, j_initial)
    } else {
        solve_descent(prob, x_init, j_initial, opts)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn solve_linear(prob: &VariationalProblem, j_initial: f64) -> Result<(SampledFunction, SolveDiagnostics)> {
    let m = prob.lagrangian.mass().expect("linear path only for the kinetic form");
    let v2 = prob.lagrangian.v_second.expect("linear path requires quadratic V");
    // V'(X) = v2·X + v1.
    let v1 = prob.lagrangian.potential_derivative(0.0)?;
    let n = prob.grid.n;
    let dim = n + 1;
    let omega = DMatrix::from_diagonal(&DVector::from_column_slice(&prob.omega));
    let a = &prob.a_mat.entries;
    let b = &prob.b_mat.entries;
    // Full gradient: H X − v1·ω with H = ½m(AᵀΩA + BᵀΩB) − v2·Ω.
    let h = (a.transpose() * &omega * a + b.transpose() * &omega * b) * (0.5 * m) - &omega * v2;
    let interior = n - 1;
    let hii = h.view((1, 1), (interior, interior)).clone_owned();
    let rhs = DVector::from_fn(interior, |r, _| {
        let i = r + 1;
        v1 * prob.omega[i] - h[(i, 0)] * prob.x_a - h[(i, n)] * prob.x_b
    });
    let asym = (0..interior)
        .flat_map(|i| (0..interior).map(move |k| (i, k)))
        .fold(0.0f64, |acc, (i, k)| acc.max((hii[(i, k)] - hii[(k, i)]).abs()));
    let sym = (&hii + hii.transpose()) * 0.5;
    let (sol, pd) = match sym.clone().cholesky() {
        Some(ch) => (ch.solve(&rhs), true),
        None => {
            let lu = sym.lu();
            let sol = lu.solve(&rhs).ok_or_else(|| {
                Error::SingularSystem("reduced Euler-Lagrange system is singular".into())
            })?;
            (sol, false)
        }
    };
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("linear solve produced non-finite values".into()));
    }
    let mut values = vec![0.0; dim];
    values[0] = prob.x_a;
    values[n] = prob.x_b;
    values[1..n].copy_from_slice(sol.as_slice());
    let x = SampledFunction::new(prob.grid, values)?;
    let g = discrete_gradient(prob, &x)?;
    let j_final = evaluate_functional(prob, &x)?;
    Ok((
        x,
        SolveDiagnostics {
            method: SolveMethod::LinearSystem,
            iterations: 1,
            grad_norm: sup(&g),
            j_initial,
            j_final,
            converged: true,
            max_iters_exceeded: false,
            system_asymmetry: Some(asym),
            positive_definite: Some(pd),
        },
    ))
}

/// Interior block of `AᵀΩA + BᵀΩB + Ω`. The starting-weight columns of the
/// corrected rule make the plain `Ω` metric badly conditioned, so descent
/// directions are taken in this fixed metric instead.
fn descent_metric(prob: &VariationalProblem) -> Result<nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>> {
    let n = prob.grid.n;
    let omega = DMatrix::from_diagonal(&DVector::from_column_slice(&prob.omega));
    let a = &prob.a_mat.entries;
    let b = &prob.b_mat.entries;
    let full = a.transpose() * &omega * a + b.transpose() * &omega * b + &omega;
    let m = full.view((1, 1), (n - 1, n - 1)).clone_owned();
    let m = (&m + m.transpose()) * 0.5;
    m.cholesky()
        .ok_or_else(|| Error::SingularSystem("descent metric is not positive definite".into()))
}

fn solve_descent(
    prob: &VariationalProblem,
    x_init: &SampledFunction,
    j_initial: f64,
    opts: &SolveOptions,
) -> Result<(SampledFunction, SolveDiagnostics)> {
    const ARMIJO: f64 = 1e-4;
    const MAX_HALVINGS: usize = 60;
    const ROUNDING: f64 = 1e-13;
    let n = prob.grid.n;
    let mut x = x_init.clone();
    let mut j = j_initial;
    let mut g = discrete_gradient(prob, &x)?;
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let mut best = (x.clone(), j, sup(&g));

    let metric = descent_metric(prob)?;
    let direction = |g: &[f64]| -> Vec<f64> {
        let d = metric.solve(&DVector::from_column_slice(g));
        d.iter().map(|v| -v).collect()
    };
    let trial = |x: &SampledFunction, d: &[f64], s: f64| -> Result<SampledFunction> {
        let mut v = x.values().to_vec();
        for i in 1..n {
            v[i] += s * d[i - 1];
        }
        SampledFunction::new(prob.grid, v)
    };

    while sup(&g) > opts.grad_tol && iterations < opts.max_iters {
        iterations += 1;
        let d = direction(&g);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let (next, j_next) = match opts.step_control {
            StepControl::FixedStep(s) => {
                let cand = trial(&x, &d, s)?;
                let jc = evaluate_functional(prob, &cand)?;
                (cand, jc)
            }
            StepControl::BacktrackingLineSearch => {
                let mut s = (step * 2.0).clamp(1.0, 1e6);
                let mut accepted = None;
                let g_norm = sup(&g);
                // Below this the predicted decrease is lost in the rounding
                // of J, and progress is judged by the gradient instead.
                let flat = slope.abs() <= ROUNDING * j.abs().max(1.0);
                for _ in 0..MAX_HALVINGS {
                    let cand = trial(&x, &d, s)?;
                    if let Ok(jc) = evaluate_functional(prob, &cand) {
                        let ok = if flat {
                            jc <= j && sup(&discrete_gradient(prob, &cand)?) < g_norm
                        } else {
                            jc < j && jc <= j + ARMIJO * s * slope
                        };
                        if ok {
                            accepted = Some((cand, jc));
                            break;
                        }
                    }
                    s *= 0.5;
                }
                match accepted {
                    Some(a) => {
                        step = s;
                        a
                    }
                    // No decrease is possible at rounding level.
                    None => break,
                }
            }
        };
        x = next;
        j = j_next;
        g = discrete_gradient(prob, &x)?;
        if j <= best.1 {
            best = (x.clone(), j, sup(&g));
        }
    }

    let (x, j_final, grad_norm) = best;
    let converged = grad_norm <= opts.grad_tol;
    if !converged && iterations >= opts.max_iters {
        log::warn!("gradient descent stopped at max_iters = {} with |g| = {grad_norm:.3e}", opts.max_iters);
    }
    Ok((
        x,
        SolveDiagnostics {
            method: SolveMethod::GradientDescent,
            iterations,
            grad_norm,
            j_initial,
            j_final,
            converged,
            max_iters_exceeded: !converged && iterations >= opts.max_iters,
            system_asymmetry: None,
            positive_definite: None,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{make_params, Normalization};

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn problem(alpha: f64, v: &str, m: f64, xa: f64, xb: f64, n: usize) -> VariationalProblem {
        VariationalProblem::new(
            Grid::new(0.0, 1.0, n).unwrap(),
            make_params(alpha, 0.8, Normalization::ConstantOne).unwrap(),
            WeightFunction::one(),
            LagrangianSpec::quadratic_kinetic(m, e(v)).unwrap(),
            xa,
            xb,
            default_operator_options(),
        )
        .unwrap()
    }

    #[test]
    fn constant_trajectory_at_alpha_zero() {
        let prob = problem(0.0, "0", 3.0, 2.0, 2.0, 16);
        let x = SampledFunction::from_fn(prob.grid, |_| 2.0).unwrap();
        let j = evaluate_functional(&prob, &x).unwrap();
        assert!((j - 3.0 * 4.0 / 2.0).abs() <= 1e-13, "{j}");
    }

    #[test]
    fn zero_cases() {
        let prob = problem(0.4, "x^2", 1.0, 0.0, 0.0, 16);
        let x = SampledFunction::zeros(prob.grid);
        assert_eq!(evaluate_functional(&prob, &x).unwrap(), 0.0);
        assert!(discrete_gradient(&prob, &x).unwrap().iter().all(|g| *g == 0.0));
        let (sol, d) = solve(&prob, &x, &SolveOptions::default()).unwrap();
        assert!(sol.values().iter().all(|v| *v == 0.0));
        assert_eq!(d.j_final, 0.0);
        let r = newton_law_residual(&prob, &x).unwrap();
        assert!(r.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn boundary_mismatch() {
        let prob = problem(0.4, "0", 1.0, 1.0, 0.0, 8);
        let x = SampledFunction::zeros(prob.grid);
        assert!(matches!(
            evaluate_functional(&prob, &x),
            Err(Error::BoundaryMismatch { .. })
        ));
    }

    #[test]
    fn alpha_zero_closed_form() {
        // m X − V'(X) = 0 with V = X²/2 − 3X, m = 2: X* = −3.
        let prob = problem(0.0, "x^2/2 - 3*x", 2.0, -3.0, -3.0, 32);
        let (x, d) = solve(&prob, &prob.straight_line(), &SolveOptions::default()).unwrap();
        assert_eq!(d.method, SolveMethod::LinearSystem);
        assert!(x.values().iter().all(|v| (v + 3.0).abs() <= 1e-10));
        let r = el_residual(&prob, &x).unwrap();
        assert!(r.sup_norm() <= 1e-10);
    }

    #[test]
    fn lagrangian_without_state_has_zero_residual() {
        let l = LagrangianSpec::general_sum(1.0, e("5"), 2.0, e("1"), 3.0, e("pi")).unwrap();
        let prob = VariationalProblem::new(
            Grid::new(0.0, 1.0, 16).unwrap(),
            make_params(0.4, 0.8, Normalization::ConstantOne).unwrap(),
            WeightFunction::one(),
            l,
            0.3,
            -1.0,
            OperatorOptions::default(),
        )
        .unwrap();
        let x = prob.straight_line();
        assert_eq!(el_residual(&prob, &x).unwrap().sup_norm(), 0.0);
        assert!(matches!(newton_law_residual(&prob, &x), Err(Error::Unsupported(_))));
    }

    #[test]
    fn descent_decreases_functional() {
        let prob = problem(0.4, "-cos(x)", 1.0, 0.0, 1.0, 24);
        let init = prob.straight_line();
        let (x, d) = solve(&prob, &init, &SolveOptions::default()).unwrap();
        assert_eq!(d.method, SolveMethod::GradientDescent);
        assert!(d.j_final <= d.j_initial);
        assert!(d.converged, "{d:?}");
        assert!(sup(&discrete_gradient(&prob, &x).unwrap()) <= 1e-8);
    }
}
