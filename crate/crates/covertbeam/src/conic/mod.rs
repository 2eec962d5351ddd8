//! Conic modeling layer over complex Hermitian PSD variables.
//!
//! Problems are stated with named variables, affine trace constraints and
//! linear matrix inequalities, then compiled to a real symmetric standard form
//! and handed to the interior-point solver in [`ipm`]. Solutions are mapped
//! back to complex matrices and re-checked against the original constraints;
//! the reported violation comes from that independent evaluation, not from the
//! solver's own residuals.

pub mod compile;
pub mod embed;
pub mod ipm;

use std::collections::HashMap;
use std::fmt;

use nalgebra::SymmetricEigen;
use num_complex::Complex;
use thiserror::Error;

use crate::{CMat, CVec};

pub use ipm::Tolerances;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("duplicate variable name {0:?}")]
    DuplicateName(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("matrix for {context} is not Hermitian (skew part {skew:.3e})")]
    NotHermitian { context: String, skew: f64 },
    #[error("dimension mismatch in {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Nonneg,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

/// Real-valued affine expression: sum of Re tr(C_i W_i), scalar terms and a
/// constant. Coefficient matrices must be Hermitian.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub matrix_terms: Vec<(String, CMat)>,
    pub scalar_terms: Vec<(String, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn trace(mut self, var: impl Into<String>, coeff: CMat) -> Self {
        self.matrix_terms.push((var.into(), coeff));
        self
    }

    pub fn scalar(mut self, var: impl Into<String>, coeff: f64) -> Self {
        self.scalar_terms.push((var.into(), coeff));
        self
    }

    pub fn plus(mut self, constant: f64) -> Self {
        self.constant += constant;
        self
    }
}

/// One additive term of a linear matrix inequality.
#[derive(Debug, Clone)]
pub enum LmiTerm {
    /// `coeff * E^H W E` for a PSD variable W; `left` is E with shape
    /// (var_dim, lmi_dim).
    Congruence { var: String, left: CMat, coeff: f64 },
    /// `matrix * s` for a scalar variable s; `matrix` is Hermitian of the
    /// LMI dimension.
    ScalarMat { var: String, matrix: CMat },
}

/// `sum(terms) + constant >= 0` in the PSD order.
#[derive(Debug, Clone)]
pub struct LmiConstraint {
    pub label: String,
    pub dim: usize,
    pub terms: Vec<LmiTerm>,
    pub constant: CMat,
}

#[derive(Debug, Clone)]
pub enum Objective {
    Feasibility,
    Minimize(LinExpr),
    Maximize(LinExpr),
}

#[derive(Debug, Clone)]
pub(crate) struct AffineConstraint {
    label: String,
    expr: LinExpr,
    rel: Rel,
    rhs: f64,
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    psd_vars: Vec<(String, usize)>,
    scalar_vars: Vec<(String, ScalarKind)>,
    constraints: Vec<AffineConstraint>,
    lmis: Vec<LmiConstraint>,
    objective: Objective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub matrix_values: HashMap<String, CMat>,
    pub scalar_values: HashMap<String, f64>,
    pub objective_value: f64,
    /// Worst violation found by re-evaluating every constraint and LMI at the
    /// recovered point (negative eigenvalues count as violations).
    pub max_constraint_violation: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

fn hermitian_skew(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|x| x * 0.5)
}

const HERMITIAN_TOL: f64 = 1e-12;

impl ConicProblem {
    pub fn new() -> Self {
        Self {
            psd_vars: Vec::new(),
            scalar_vars: Vec::new(),
            constraints: Vec::new(),
            lmis: Vec::new(),
            objective: Objective::Feasibility,
        }
    }

    fn check_fresh(&self, name: &str) -> Result<(), ConicError> {
        if self.psd_vars.iter().any(|(n, _)| n == name)
            || self.scalar_vars.iter().any(|(n, _)| n == name)
        {
            return Err(ConicError::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    /// Declares a complex Hermitian PSD matrix variable of size `dim`.
    pub fn psd_var(&mut self, name: impl Into<String>, dim: usize) -> Result<(), ConicError> {
        let name = name.into();
        self.check_fresh(&name)?;
        self.psd_vars.push((name, dim));
        Ok(())
    }

    pub fn scalar_var(
        &mut self,
        name: impl Into<String>,
        kind: ScalarKind,
    ) -> Result<(), ConicError> {
        let name = name.into();
        self.check_fresh(&name)?;
        self.scalar_vars.push((name, kind));
        Ok(())
    }

    fn validate_expr(&self, expr: &mut LinExpr, context: &str) -> Result<(), ConicError> {
        for (name, coeff) in &mut expr.matrix_terms {
            let dim = self
                .psd_vars
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, d)| *d)
                .ok_or_else(|| ConicError::UnknownVariable(name.clone()))?;
            if coeff.nrows() != dim || coeff.ncols() != dim {
                return Err(ConicError::DimensionMismatch(format!(
                    "{context}: coefficient for {name} is {}x{}, variable is {dim}x{dim}",
                    coeff.nrows(),
                    coeff.ncols()
                )));
            }
            let skew = hermitian_skew(coeff);
            let scale = coeff.iter().map(|x| x.norm()).fold(1.0, f64::max);
            if skew > HERMITIAN_TOL * scale {
                return Err(ConicError::NotHermitian { context: context.to_string(), skew });
            }
            *coeff = symmetrize(coeff);
        }
        for (name, _) in &expr.scalar_terms {
            if !self.scalar_vars.iter().any(|(n, _)| n == name) {
                return Err(ConicError::UnknownVariable(name.clone()));
            }
        }
        Ok(())
    }

    pub fn constrain(
        &mut self,
        label: impl Into<String>,
        mut expr: LinExpr,
        rel: Rel,
        rhs: f64,
    ) -> Result<(), ConicError> {
        let label = label.into();
        self.validate_expr(&mut expr, &label)?;
        self.constraints.push(AffineConstraint { label, expr, rel, rhs });
        Ok(())
    }

    pub fn add_lmi(&mut self, mut lmi: LmiConstraint) -> Result<(), ConicError> {
        let d = lmi.dim;
        if lmi.constant.nrows() != d || lmi.constant.ncols() != d {
            return Err(ConicError::DimensionMismatch(format!(
                "{}: constant block is {}x{}",
                lmi.label,
                lmi.constant.nrows(),
                lmi.constant.ncols()
            )));
        }
        let skew = hermitian_skew(&lmi.constant);
        if skew > HERMITIAN_TOL * (1.0 + lmi.constant.iter().map(|x| x.norm()).fold(0.0, f64::max)) {
            return Err(ConicError::NotHermitian { context: lmi.label.clone(), skew });
        }
        lmi.constant = symmetrize(&lmi.constant);
        for term in &mut lmi.terms {
            match term {
                LmiTerm::Congruence { var, left, .. } => {
                    let vd = self
                        .psd_vars
                        .iter()
                        .find(|(n, _)| n == var)
                        .map(|(_, d)| *d)
                        .ok_or_else(|| ConicError::UnknownVariable(var.clone()))?;
                    if left.nrows() != vd || left.ncols() != d {
                        return Err(ConicError::DimensionMismatch(format!(
                            "{}: congruence factor for {var} is {}x{}, expected {vd}x{d}",
                            lmi.label,
                            left.nrows(),
                            left.ncols()
                        )));
                    }
                }
                LmiTerm::ScalarMat { var, matrix } => {
                    if !self.scalar_vars.iter().any(|(n, _)| n == var) {
                        return Err(ConicError::UnknownVariable(var.clone()));
                    }
                    if matrix.nrows() != d || matrix.ncols() != d {
                        return Err(ConicError::DimensionMismatch(format!(
                            "{}: scalar coefficient block is {}x{}",
                            lmi.label,
                            matrix.nrows(),
                            matrix.ncols()
                        )));
                    }
                    let skew = hermitian_skew(matrix);
                    let scale = matrix.iter().map(|x| x.norm()).fold(1.0, f64::max);
                    if skew > HERMITIAN_TOL * scale {
                        return Err(ConicError::NotHermitian {
                            context: lmi.label.clone(),
                            skew,
                        });
                    }
                    *matrix = symmetrize(matrix);
                }
            }
        }
        self.lmis.push(lmi);
        Ok(())
    }

    pub fn set_objective(&mut self, mut obj: Objective) -> Result<(), ConicError> {
        match &mut obj {
            Objective::Feasibility => {}
            Objective::Minimize(e) | Objective::Maximize(e) => {
                self.validate_expr(e, "objective")?;
            }
        }
        self.objective = obj;
        Ok(())
    }

    pub fn psd_vars(&self) -> &[(String, usize)] {
        &self.psd_vars
    }

    pub fn scalar_vars(&self) -> &[(String, ScalarKind)] {
        &self.scalar_vars
    }

    pub fn solve(&self, tol: &Tolerances) -> ConicSolution {
        compile::solve_problem(self, tol)
    }

    /// Evaluates an expression at a candidate point.
    pub fn eval_expr(
        expr: &LinExpr,
        mats: &HashMap<String, CMat>,
        scalars: &HashMap<String, f64>,
    ) -> f64 {
        let mut v = expr.constant;
        for (name, coeff) in &expr.matrix_terms {
            v += (coeff * &mats[name]).trace().re;
        }
        for (name, c) in &expr.scalar_terms {
            v += c * scalars[name];
        }
        v
    }

    /// Worst violation over all constraints and LMIs at a point. Used both on
    /// solver output and in tests that probe candidate beamformers directly.
    pub fn max_violation(
        &self,
        mats: &HashMap<String, CMat>,
        scalars: &HashMap<String, f64>,
    ) -> f64 {
        let mut worst: f64 = 0.0;
        for con in &self.constraints {
            let v = Self::eval_expr(&con.expr, mats, scalars);
            let viol = match con.rel {
                Rel::Le => v - con.rhs,
                Rel::Ge => con.rhs - v,
                Rel::Eq => (v - con.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for lmi in &self.lmis {
            let m = self.lmi_value(lmi, mats, scalars);
            worst = worst.max(-min_eigenvalue(&m));
        }
        for (name, _) in &self.psd_vars {
            worst = worst.max(-min_eigenvalue(&mats[name]));
        }
        for (name, kind) in &self.scalar_vars {
            if *kind == ScalarKind::Nonneg {
                worst = worst.max(-scalars[name]);
            }
        }
        worst
    }

    pub fn lmi_value(
        &self,
        lmi: &LmiConstraint,
        mats: &HashMap<String, CMat>,
        scalars: &HashMap<String, f64>,
    ) -> CMat {
        let mut m = lmi.constant.clone();
        for term in &lmi.terms {
            match term {
                LmiTerm::Congruence { var, left, coeff } => {
                    m += (left.adjoint() * &mats[var] * left).map(|x| x * *coeff);
                }
                LmiTerm::ScalarMat { var, matrix } => {
                    m += matrix.map(|x| x * scalars[var]);
                }
            }
        }
        m
    }

    pub(crate) fn constraints(&self) -> &[AffineConstraint] {
        &self.constraints
    }

    pub(crate) fn lmis(&self) -> &[LmiConstraint] {
        &self.lmis
    }

    pub(crate) fn objective(&self) -> &Objective {
        &self.objective
    }
}

impl Default for ConicProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl AffineConstraint {
    pub(crate) fn parts(&self) -> (&LinExpr, Rel, f64, &str) {
        (&self.expr, self.rel, self.rhs, &self.label)
    }
}

impl fmt::Display for ConicProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "conic problem: {} psd vars, {} scalars, {} affine constraints, {} lmis",
            self.psd_vars.len(),
            self.scalar_vars.len(),
            self.constraints.len(),
            self.lmis.len()
        )?;
        for (n, d) in &self.psd_vars {
            writeln!(f, "  psd {n}: {d}x{d}")?;
        }
        for (n, k) in &self.scalar_vars {
            writeln!(f, "  scalar {n}: {k:?}")?;
        }
        for c in &self.constraints {
            writeln!(f, "  {} ({:?} {})", c.label, c.rel, c.rhs)?;
        }
        for l in &self.lmis {
            writeln!(f, "  lmi {} ({}x{})", l.label, l.dim, l.dim)?;
        }
        Ok(())
    }
}

/// Smallest eigenvalue of a Hermitian matrix, via its real embedding.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    let e = embed::embed(m);
    SymmetricEigen::new(e).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Dominant eigenpair of a Hermitian PSD matrix: returns the principal
/// component scaled to `sqrt(lambda_max) * v` plus the eigenvalue-to-trace
/// ratio used for the rank-one test.
pub fn dominant_component(m: &CMat) -> (CVec, f64) {
    let d = m.nrows();
    let eig = SymmetricEigen::new(embed::embed(m));
    let mut best = 0usize;
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let lam = eig.eigenvalues[best].max(0.0);
    let col = eig.eigenvectors.column(best);
    let mut v = CVec::zeros(d);
    for i in 0..d {
        v[i] = Complex::new(col[i], col[d + i]);
    }
    let nrm = v.norm();
    if nrm > 0.0 {
        v /= Complex::new(nrm, 0.0);
    }
    let tr = m.trace().re.max(f64::MIN_POSITIVE);
    (v.map(|x| x * lam.sqrt()), lam / tr)
}

/// A PSD matrix counts as rank one when its top eigenvalue carries all but a
/// sliver of the trace.
pub fn is_rank_one(ratio: f64) -> bool {
    ratio >= 1.0 - 1e-6
}
