//! Compilation of complex Hermitian conic problems into the real symmetric
//! standard form consumed by [`super::ipm`], and recovery of solutions.
//!
//! Each complex PSD variable of size d becomes one real PSD block of size 2d
//! through the [[Re, -Im], [Im, Re]] embedding; `Re tr(C W)` then equals half
//! the svec inner product of the embedded matrices. Every LMI gets a complex
//! slack block and d^2 scalar equality rows written against an orthonormal
//! Hermitian basis, which skips the redundant half of the embedded block.
//! Free scalars are split into differences of nonnegative pairs and
//! inequalities receive nonnegative slack scalars.

use std::collections::HashMap;

use super::embed::{embed, hermitian_basis, smat, svec, svec_len, unembed_hermitian};
use super::ipm::{self, RawStatus, StandardSdp, Tolerances};
use super::{ConicProblem, ConicSolution, LinExpr, LmiTerm, Objective, Rel, ScalarKind, SolveStatus};
use crate::{CMat, RMat, RVec};

struct Layout {
    block_dims: Vec<usize>,
    /// x-vector offset of each psd variable's block, by declaration order.
    var_offsets: Vec<usize>,
    /// x-vector offset of each LMI's slack block.
    lmi_offsets: Vec<usize>,
    /// Scalar slot: (offset, split). Free scalars occupy (offset, offset+1).
    scalar_slots: Vec<(usize, bool)>,
    nn: usize,
    total: usize,
    var_index: HashMap<String, usize>,
    scalar_index: HashMap<String, usize>,
}

fn layout(p: &ConicProblem, n_ineq: usize) -> Layout {
    let mut block_dims = Vec::new();
    let mut var_offsets = Vec::new();
    let mut off = 0;
    let mut var_index = HashMap::new();
    for (i, (name, d)) in p.psd_vars().iter().enumerate() {
        var_index.insert(name.clone(), i);
        var_offsets.push(off);
        block_dims.push(2 * d);
        off += svec_len(2 * d);
    }
    let mut lmi_offsets = Vec::new();
    for lmi in p.lmis() {
        lmi_offsets.push(off);
        block_dims.push(2 * lmi.dim);
        off += svec_len(2 * lmi.dim);
    }
    let mut scalar_slots = Vec::new();
    let mut scalar_index = HashMap::new();
    let mut s = off;
    for (i, (name, kind)) in p.scalar_vars().iter().enumerate() {
        scalar_index.insert(name.clone(), i);
        let split = *kind == ScalarKind::Free;
        scalar_slots.push((s, split));
        s += if split { 2 } else { 1 };
    }
    let total = s + n_ineq;
    Layout {
        block_dims,
        var_offsets,
        lmi_offsets,
        scalar_slots,
        nn: total - off,
        total,
        var_index,
        scalar_index,
    }
}

/// Writes a linear expression's coefficients into one constraint row.
fn fill_expr(row: &mut RVec, lay: &Layout, expr: &LinExpr) {
    for (name, coeff) in &expr.matrix_terms {
        let vi = lay.var_index[name];
        let seg = svec(&embed(coeff)).scale(0.5);
        let off = lay.var_offsets[vi];
        for k in 0..seg.len() {
            row[off + k] += seg[k];
        }
    }
    for (name, c) in &expr.scalar_terms {
        let (off, split) = lay.scalar_slots[lay.scalar_index[name]];
        row[off] += c;
        if split {
            row[off + 1] -= c;
        }
    }
}

/// Complex orthonormal null-space basis of a Hermitian PSD matrix, or None
/// when the matrix is (numerically) nonsingular.
fn null_basis(c: &CMat) -> Option<CMat> {
    let d = c.nrows();
    let eig = nalgebra::SymmetricEigen::new(embed(c));
    let lam_max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let cut = 1e-10 * lam_max.max(1.0);
    let mut basis: Vec<crate::CVec> = Vec::new();
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > cut {
            continue;
        }
        let col = eig.eigenvectors.column(i);
        let mut v = crate::CVec::from_fn(d, |k, _| num_complex::Complex::new(col[k], col[d + k]));
        // The embedded null space carries each complex direction twice (v and
        // iv); Gram-Schmidt in complex arithmetic discards the duplicate.
        for b in &basis {
            let inner = b.dotc(&v);
            v -= b.map(|x| x * inner);
        }
        let nrm = v.norm();
        if nrm > 0.5 {
            basis.push(v.map(|x| x / num_complex::Complex::new(nrm, 0.0)));
        }
    }
    if basis.len() == d {
        return None;
    }
    let mut m = CMat::zeros(d, basis.len());
    for (i, b) in basis.iter().enumerate() {
        m.set_column(i, b);
    }
    Some(m)
}

/// Presolve: a constraint `Re tr(C W) <= 0` (or `= 0`) with C and W both PSD
/// forces W onto the null space of C. Substituting `W = V X V^H` removes the
/// constraint and restores a strict interior, which the interior-point method
/// needs for full-accuracy convergence. Returns the reduced problem plus the
/// per-variable back-substitution bases (None = untouched, empty = forced 0).
fn reduce_problem(p: &ConicProblem) -> Option<(ConicProblem, HashMap<String, CMat>)> {
    use super::min_eigenvalue;

    let mut null_accum: HashMap<String, CMat> = HashMap::new();
    let mut dropped = vec![false; p.constraints().len()];
    for (i, con) in p.constraints().iter().enumerate() {
        let (expr, rel, rhs, _) = con.parts();
        if rel == Rel::Ge
            || rhs - expr.constant != 0.0
            || expr.matrix_terms.len() != 1
            || !expr.scalar_terms.is_empty()
        {
            continue;
        }
        let (name, coeff) = &expr.matrix_terms[0];
        let scale = coeff.iter().map(|x| x.norm()).fold(1.0, f64::max);
        if min_eigenvalue(coeff) < -1e-10 * scale {
            continue;
        }
        let acc = null_accum
            .entry(name.clone())
            .or_insert_with(|| CMat::zeros(coeff.nrows(), coeff.ncols()));
        *acc += coeff;
        dropped[i] = true;
    }
    if null_accum.is_empty() {
        return None;
    }
    let mut bases: HashMap<String, CMat> = HashMap::new();
    for (name, acc) in &null_accum {
        // None marks an all-zero coefficient, which constrains nothing.
        if let Some(v) = null_basis(acc) {
            bases.insert(name.clone(), v);
        }
    }
    if bases.is_empty() {
        return None;
    }

    let sub_expr = |expr: &LinExpr| -> LinExpr {
        let mut out = LinExpr::new().plus(expr.constant);
        for (name, coeff) in &expr.matrix_terms {
            match bases.get(name) {
                Some(v) if v.ncols() == 0 => {}
                Some(v) => {
                    out = out.trace(name.clone(), v.adjoint() * coeff * v);
                }
                None => {
                    out = out.trace(name.clone(), coeff.clone());
                }
            }
        }
        for (name, c) in &expr.scalar_terms {
            out = out.scalar(name.clone(), *c);
        }
        out
    };

    let mut rp = ConicProblem::new();
    for (name, d) in p.psd_vars() {
        match bases.get(name) {
            Some(v) if v.ncols() == 0 => {}
            Some(v) => rp.psd_var(name.clone(), v.ncols()).unwrap(),
            None => rp.psd_var(name.clone(), *d).unwrap(),
        }
    }
    for (name, kind) in p.scalar_vars() {
        rp.scalar_var(name.clone(), *kind).unwrap();
    }
    for (i, con) in p.constraints().iter().enumerate() {
        if dropped[i] {
            continue;
        }
        let (expr, rel, rhs, label) = con.parts();
        rp.constrain(label.to_string(), sub_expr(expr), rel, rhs).unwrap();
    }
    for lmi in p.lmis() {
        let mut terms = Vec::new();
        for term in &lmi.terms {
            match term {
                LmiTerm::Congruence { var, left, coeff } => match bases.get(var) {
                    Some(v) if v.ncols() == 0 => {}
                    Some(v) => terms.push(LmiTerm::Congruence {
                        var: var.clone(),
                        left: v.adjoint() * left,
                        coeff: *coeff,
                    }),
                    None => terms.push(term.clone()),
                },
                LmiTerm::ScalarMat { .. } => terms.push(term.clone()),
            }
        }
        rp.add_lmi(super::LmiConstraint {
            label: lmi.label.clone(),
            dim: lmi.dim,
            terms,
            constant: lmi.constant.clone(),
        })
        .unwrap();
    }
    let obj = match p.objective() {
        Objective::Feasibility => Objective::Feasibility,
        Objective::Minimize(e) => Objective::Minimize(sub_expr(e)),
        Objective::Maximize(e) => Objective::Maximize(sub_expr(e)),
    };
    rp.set_objective(obj).unwrap();
    Some((rp, bases))
}

pub fn solve_problem(p: &ConicProblem, tol: &Tolerances) -> ConicSolution {
    if let Some((rp, bases)) = reduce_problem(p) {
        let inner = solve_inner(&rp, tol);
        let mut matrix_values = HashMap::new();
        for (name, d) in p.psd_vars() {
            let value = match bases.get(name) {
                Some(v) if v.ncols() == 0 => CMat::zeros(*d, *d),
                Some(v) => v * &inner.matrix_values[name] * v.adjoint(),
                None => inner.matrix_values[name].clone(),
            };
            matrix_values.insert(name.clone(), value);
        }
        let objective_value = match p.objective() {
            Objective::Feasibility => 0.0,
            Objective::Minimize(e) | Objective::Maximize(e) => {
                ConicProblem::eval_expr(e, &matrix_values, &inner.scalar_values)
            }
        };
        let max_constraint_violation = if inner.status == SolveStatus::Optimal {
            p.max_violation(&matrix_values, &inner.scalar_values)
        } else {
            f64::NAN
        };
        return ConicSolution {
            status: inner.status,
            matrix_values,
            scalar_values: inner.scalar_values,
            objective_value,
            max_constraint_violation,
            iterations: inner.iterations,
        };
    }
    solve_inner(p, tol)
}

fn solve_inner(p: &ConicProblem, tol: &Tolerances) -> ConicSolution {
    let n_ineq = p
        .constraints()
        .iter()
        .filter(|c| c.parts().1 != Rel::Eq)
        .count();
    let lay = layout(p, n_ineq);

    let n_lmi_rows: usize = p.lmis().iter().map(|l| l.dim * l.dim).sum();
    let m = p.constraints().len() + n_lmi_rows;
    let mut a = RMat::zeros(m, lay.total);
    let mut b = RVec::zeros(m);

    let mut ineq_slot = lay.total - n_ineq;
    for (r, con) in p.constraints().iter().enumerate() {
        let (expr, rel, rhs, _) = con.parts();
        let mut row = RVec::zeros(lay.total);
        fill_expr(&mut row, &lay, expr);
        match rel {
            Rel::Eq => {}
            Rel::Ge => {
                row[ineq_slot] = -1.0;
                ineq_slot += 1;
            }
            Rel::Le => {
                row[ineq_slot] = 1.0;
                ineq_slot += 1;
            }
        }
        a.row_mut(r).copy_from(&row.transpose());
        b[r] = rhs - expr.constant;
    }

    let mut r = p.constraints().len();
    for (li, lmi) in p.lmis().iter().enumerate() {
        let basis = hermitian_basis(lmi.dim);
        let slack_off = lay.lmi_offsets[li];
        for bk in &basis {
            let mut row = RVec::zeros(lay.total);
            for term in &lmi.terms {
                match term {
                    LmiTerm::Congruence { var, left, coeff } => {
                        let ck: CMat = left * bk * left.adjoint();
                        let seg = svec(&embed(&ck)).scale(0.5 * coeff);
                        let off = lay.var_offsets[lay.var_index[var]];
                        for k in 0..seg.len() {
                            row[off + k] += seg[k];
                        }
                    }
                    LmiTerm::ScalarMat { var, matrix } => {
                        let c = (bk * matrix).trace().re;
                        let (off, split) = lay.scalar_slots[lay.scalar_index[var]];
                        row[off] += c;
                        if split {
                            row[off + 1] -= c;
                        }
                    }
                }
            }
            let seg = svec(&embed(bk)).scale(-0.5);
            for k in 0..seg.len() {
                row[slack_off + k] += seg[k];
            }
            a.row_mut(r).copy_from(&row.transpose());
            b[r] = -(bk * &lmi.constant).trace().re;
            r += 1;
        }
    }

    let mut c = RVec::zeros(lay.total);
    match p.objective() {
        Objective::Feasibility => {}
        Objective::Minimize(e) => fill_expr(&mut c, &lay, e),
        Objective::Maximize(e) => {
            let mut tmp = RVec::zeros(lay.total);
            fill_expr(&mut tmp, &lay, e);
            c = -tmp;
        }
    }

    let sdp = StandardSdp { block_dims: lay.block_dims.clone(), nn: lay.nn, a, b, c };
    let raw = ipm::solve(&sdp, tol);

    let status = match raw.status {
        RawStatus::Optimal => SolveStatus::Optimal,
        RawStatus::PrimalInfeasible => SolveStatus::Infeasible,
        RawStatus::DualInfeasible => SolveStatus::Unbounded,
        RawStatus::MaxIterations => SolveStatus::MaxIterations,
        RawStatus::NumericalFailure => SolveStatus::NumericalFailure,
    };

    let mut matrix_values = HashMap::new();
    for (i, (name, d)) in p.psd_vars().iter().enumerate() {
        let off = lay.var_offsets[i];
        let block = smat(&raw.x.rows(off, svec_len(2 * d)).into_owned(), 2 * d);
        matrix_values.insert(name.clone(), unembed_hermitian(&block));
    }
    let mut scalar_values = HashMap::new();
    for (i, (name, _)) in p.scalar_vars().iter().enumerate() {
        let (off, split) = lay.scalar_slots[i];
        let v = if split { raw.x[off] - raw.x[off + 1] } else { raw.x[off] };
        scalar_values.insert(name.clone(), v);
    }

    let objective_value = match p.objective() {
        Objective::Feasibility => 0.0,
        Objective::Minimize(e) | Objective::Maximize(e) => {
            ConicProblem::eval_expr(e, &matrix_values, &scalar_values)
        }
    };
    let max_constraint_violation = if status == SolveStatus::Optimal {
        p.max_violation(&matrix_values, &scalar_values)
    } else {
        f64::NAN
    };

    ConicSolution {
        status,
        matrix_values,
        scalar_values,
        objective_value,
        max_constraint_violation,
        iterations: raw.iterations,
    }
}
