//! Dense primal-dual interior-point method on the homogeneous self-dual
//! embedding, for real standard-form problems
//!
//! ```text
//! minimize    c . x
//! subject to  A x = b,   x in K
//! ```
//!
//! where K is a product of small symmetric-PSD blocks and a nonnegative
//! orthant. The embedding provides a certificate of infeasibility instead of
//! mere failure to converge, which the bisection searches upstream rely on.
//!
//! Directions are HKM-scaled with a Mehrotra predictor-corrector; the Schur
//! complement is formed densely, which is the right trade for blocks of at
//! most a few dozen rows.

use nalgebra::{Cholesky, SymmetricEigen};

use super::embed::{smat, svec, svec_len};
use crate::{RMat, RVec};

/// Solver tolerances.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Relative duality gap for an optimal verdict.
    pub gap: f64,
    /// Relative primal/dual feasibility residual.
    pub feas: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { gap: 1e-8, feas: 1e-8, max_iter: 200 }
    }
}

/// Real standard-form problem over PSD blocks plus a nonnegative orthant.
#[derive(Debug, Clone)]
pub struct StandardSdp {
    /// Side lengths of the symmetric PSD blocks.
    pub block_dims: Vec<usize>,
    /// Number of nonnegative scalar variables appended after the blocks.
    pub nn: usize,
    pub a: RMat,
    pub b: RVec,
    pub c: RVec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawStatus {
    Optimal,
    /// Certificate y with A'y + z ~ 0, z in K, b'y > 0.
    PrimalInfeasible,
    /// Certificate x in K with A x ~ 0, c'x < 0 (primal unbounded).
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct RawSolution {
    pub status: RawStatus,
    /// Scaled primal point x/tau (certificate ray when infeasible).
    pub x: RVec,
    pub y: RVec,
    pub z: RVec,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

struct Cone {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    nn_offset: usize,
    n: usize,
    degree: f64,
}

impl Cone {
    fn new(p: &StandardSdp) -> Self {
        let mut offsets = Vec::with_capacity(p.block_dims.len());
        let mut off = 0;
        for &d in &p.block_dims {
            offsets.push(off);
            off += svec_len(d);
        }
        let n = off + p.nn;
        let degree = p.block_dims.iter().sum::<usize>() as f64 + p.nn as f64;
        Cone { dims: p.block_dims.clone(), offsets, nn_offset: off, n, degree }
    }

    fn identity(&self) -> RVec {
        let mut e = RVec::zeros(self.n);
        for (k, &d) in self.dims.iter().enumerate() {
            e.rows_mut(self.offsets[k], svec_len(d))
                .copy_from(&svec(&RMat::identity(d, d)));
        }
        for i in self.nn_offset..self.n {
            e[i] = 1.0;
        }
        e
    }

    fn blocks(&self, v: &RVec) -> Vec<RMat> {
        self.dims
            .iter()
            .enumerate()
            .map(|(k, &d)| smat(&v.rows(self.offsets[k], svec_len(d)).into_owned(), d))
            .collect()
    }
}

/// Per-iteration factorization state of the current (x, z).
struct Scaling {
    x_mats: Vec<RMat>,
    zinv_mats: Vec<RMat>,
    x_chols: Vec<Cholesky<f64, nalgebra::Dyn>>,
    z_chols: Vec<Cholesky<f64, nalgebra::Dyn>>,
}

impl Scaling {
    fn build(cone: &Cone, x: &RVec, z: &RVec) -> Option<Self> {
        let x_mats = cone.blocks(x);
        let z_mats = cone.blocks(z);
        let mut x_chols = Vec::with_capacity(x_mats.len());
        let mut z_chols = Vec::with_capacity(z_mats.len());
        let mut zinv_mats = Vec::with_capacity(z_mats.len());
        for (xm, zm) in x_mats.iter().zip(&z_mats) {
            x_chols.push(Cholesky::new(xm.clone())?);
            let ch = Cholesky::new(zm.clone())?;
            zinv_mats.push(ch.inverse());
            z_chols.push(ch);
        }
        Some(Scaling { x_mats, zinv_mats, x_chols, z_chols })
    }

    /// HKM operator `H(U) = (X U Z^-1 + Z^-1 U X) / 2` blockwise;
    /// `x/z * u` on the nonnegative orthant.
    fn apply(&self, cone: &Cone, x: &RVec, z: &RVec, v: &RVec) -> RVec {
        let mut out = RVec::zeros(cone.n);
        for (k, &d) in cone.dims.iter().enumerate() {
            let u = smat(&v.rows(cone.offsets[k], svec_len(d)).into_owned(), d);
            let t = &self.x_mats[k] * &u * &self.zinv_mats[k];
            let sym = (&t + t.transpose()).scale(0.5);
            out.rows_mut(cone.offsets[k], svec_len(d)).copy_from(&svec(&sym));
        }
        for i in cone.nn_offset..cone.n {
            out[i] = x[i] / z[i] * v[i];
        }
        out
    }

    /// `sigma_mu * Z^-1 - X` blockwise, minus the Mehrotra correction
    /// `sym(dX dZ Z^-1)` when an affine direction is supplied.
    fn complementarity_rhs(
        &self,
        cone: &Cone,
        x: &RVec,
        z: &RVec,
        sigma_mu: f64,
        corrector: Option<(&RVec, &RVec)>,
    ) -> RVec {
        let mut out = RVec::zeros(cone.n);
        for (k, &d) in cone.dims.iter().enumerate() {
            let mut m = self.zinv_mats[k].scale(sigma_mu) - &self.x_mats[k];
            if let Some((dx, dz)) = corrector {
                let dxm = smat(&dx.rows(cone.offsets[k], svec_len(d)).into_owned(), d);
                let dzm = smat(&dz.rows(cone.offsets[k], svec_len(d)).into_owned(), d);
                let t = &dxm * &dzm * &self.zinv_mats[k];
                m -= (&t + t.transpose()).scale(0.5);
            }
            out.rows_mut(cone.offsets[k], svec_len(d)).copy_from(&svec(&m));
        }
        for i in cone.nn_offset..cone.n {
            let mut v = sigma_mu / z[i] - x[i];
            if let Some((dx, dz)) = corrector {
                v -= dx[i] * dz[i] / z[i];
            }
            out[i] = v;
        }
        out
    }

    /// Largest step alpha with x + alpha*dx staying in the cone interior.
    fn max_step(&self, cone: &Cone, chols: &[Cholesky<f64, nalgebra::Dyn>], v: &RVec, dv: &RVec) -> f64 {
        let mut alpha = f64::INFINITY;
        for (k, &d) in cone.dims.iter().enumerate() {
            let dm = smat(&dv.rows(cone.offsets[k], svec_len(d)).into_owned(), d);
            let l = chols[k].l();
            let s1 = l.solve_lower_triangular(&dm).expect("cholesky factor is nonsingular");
            let s2 = l
                .solve_lower_triangular(&s1.transpose())
                .expect("cholesky factor is nonsingular");
            let sym = (&s2 + s2.transpose()).scale(0.5);
            let lam_min = SymmetricEigen::new(sym)
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if lam_min < 0.0 {
                alpha = alpha.min(-1.0 / lam_min);
            }
        }
        for i in cone.nn_offset..cone.n {
            if dv[i] < 0.0 {
                alpha = alpha.min(-v[i] / dv[i]);
            }
        }
        alpha
    }
}

struct Direction {
    dx: RVec,
    dy: RVec,
    dz: RVec,
    dtau: f64,
    dkappa: f64,
}

pub fn solve(p: &StandardSdp, tol: &Tolerances) -> RawSolution {
    let cone = Cone::new(p);
    let (m, n) = (p.a.nrows(), p.a.ncols());
    assert_eq!(n, cone.n, "constraint matrix width must match cone dimension");
    let at = p.a.transpose();

    let mut x = cone.identity();
    let mut z = cone.identity();
    let mut y = RVec::zeros(m);
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;

    let bnorm = 1.0 + p.b.amax();
    let cnorm = 1.0 + p.c.amax();

    // Degenerate instances (no strict primal interior) stall short of full
    // accuracy; the best iterate seen is kept and accepted at a relaxed
    // tolerance instead of reporting failure.
    let mut best: Option<RawSolution> = None;
    let relax = 100.0;
    let mut end_status = RawStatus::MaxIterations;

    for iter in 0..tol.max_iter {
        // Residuals of the self-dual system.
        let rp = &p.a * &x - p.b.scale(tau);
        let rd = &at * &y + &z - p.c.scale(tau);
        let rg = p.b.dot(&y) - p.c.dot(&x) - kappa;
        let mu = (x.dot(&z) + tau * kappa) / (cone.degree + 1.0);

        // Convergence on the tau-scaled iterate.
        let xs = x.scale(1.0 / tau);
        let ys = y.scale(1.0 / tau);
        let zs = z.scale(1.0 / tau);
        let pres = (&p.a * &xs - &p.b).amax() / bnorm;
        let dres = (&at * &ys + &zs - &p.c).amax() / cnorm;
        let pobj = p.c.dot(&xs);
        let dobj = p.b.dot(&ys);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs().max(dobj.abs()));
        let merit = pres.max(dres).max(gap);
        if best.as_ref().is_none_or(|b| {
            merit < b.primal_residual.max(b.dual_residual).max(b.gap)
        }) {
            best = Some(RawSolution {
                status: RawStatus::Optimal,
                x: xs.clone(),
                y: ys.clone(),
                z: zs.clone(),
                iterations: iter,
                primal_residual: pres,
                dual_residual: dres,
                gap,
            });
        }
        if pres <= tol.feas && dres <= tol.feas && gap <= tol.gap {
            return RawSolution {
                status: RawStatus::Optimal,
                x: xs,
                y: ys,
                z: zs,
                iterations: iter,
                primal_residual: pres,
                dual_residual: dres,
                gap,
            };
        }

        // Infeasibility certificates.
        let by = p.b.dot(&y);
        if by > 1e-12 {
            let res = (&at * &y + &z).amax();
            if res <= 1e-7 * by * cnorm / bnorm {
                let sc = 1.0 / by;
                return RawSolution {
                    status: RawStatus::PrimalInfeasible,
                    x: RVec::zeros(n),
                    y: y.scale(sc),
                    z: z.scale(sc),
                    iterations: iter,
                    primal_residual: f64::NAN,
                    dual_residual: res * sc,
                    gap: f64::NAN,
                };
            }
        }
        let cx = p.c.dot(&x);
        if cx < -1e-12 {
            let res = (&p.a * &x).amax();
            if res <= 1e-7 * (-cx) {
                let sc = -1.0 / cx;
                return RawSolution {
                    status: RawStatus::DualInfeasible,
                    x: x.scale(sc),
                    y: RVec::zeros(m),
                    z: RVec::zeros(n),
                    iterations: iter,
                    primal_residual: res * sc,
                    dual_residual: f64::NAN,
                    gap: f64::NAN,
                };
            }
        }

        let Some(scaling) = Scaling::build(&cone, &x, &z) else {
            end_status = RawStatus::NumericalFailure;
            break;
        };

        // Schur complement M = A H A' plus the data-vector images.
        let h_c = scaling.apply(&cone, &x, &z, &p.c);
        let h_rd = scaling.apply(&cone, &x, &z, &rd);
        let mut hat = RMat::zeros(n, m);
        for i in 0..m {
            let ai = at.column(i).into_owned();
            hat.set_column(i, &scaling.apply(&cone, &x, &z, &ai));
        }
        let m_schur = &p.a * &hat;
        let m_sym = (&m_schur + m_schur.transpose()).scale(0.5);
        let m_chol = match cholesky_with_regularization(m_sym) {
            Some(ch) => ch,
            None => {
                end_status = RawStatus::NumericalFailure;
                break;
            }
        };
        let a_hc = &p.a * &h_c;
        let u2 = m_chol.solve(&(&a_hc + &p.b));
        let b_minus_ahc = &p.b - &a_hc;

        let solve_dir = |sigma: f64, corr: Option<&Direction>| -> Option<Direction> {
            let sigma_mu = sigma * mu;
            let corr_pair = corr.map(|d| (&d.dx, &d.dz));
            let dvec = scaling.complementarity_rhs(&cone, &x, &z, sigma_mu, corr_pair);
            let dk0 = (sigma_mu - tau * kappa - corr.map_or(0.0, |d| d.dtau * d.dkappa)) / tau;
            let sm1 = sigma - 1.0;
            let r1 = rp.scale(sm1) + (&p.a * &h_rd).scale(sm1) - &p.a * &dvec;
            let u1 = m_chol.solve(&r1);
            let rhs_g = sm1 * (rg - p.c.dot(&h_rd)) + p.c.dot(&dvec) + dk0;
            let denom = b_minus_ahc.dot(&u2) + p.c.dot(&h_c) + kappa / tau;
            if denom.abs() < 1e-300 || !denom.is_finite() {
                return None;
            }
            let dtau = (rhs_g - b_minus_ahc.dot(&u1)) / denom;
            let dy = &u1 + u2.scale(dtau);
            let dz = rd.scale(sm1) - &at * &dy + p.c.scale(dtau);
            let dx = &dvec - scaling.apply(&cone, &x, &z, &dz);
            let dkappa = dk0 - kappa / tau * dtau;
            Some(Direction { dx, dy, dz, dtau, dkappa })
        };

        // Predictor.
        let Some(aff) = solve_dir(0.0, None) else {
            end_status = RawStatus::NumericalFailure;
            break;
        };
        let alpha_aff = step_length(&cone, &scaling, &x, &z, tau, kappa, &aff).min(1.0);
        let mu_aff = {
            let xn = &x + aff.dx.scale(alpha_aff);
            let zn = &z + aff.dz.scale(alpha_aff);
            let tn = tau + alpha_aff * aff.dtau;
            let kn = kappa + alpha_aff * aff.dkappa;
            (xn.dot(&zn) + tn * kn) / (cone.degree + 1.0)
        };
        let sigma = (mu_aff / mu).powi(3).clamp(1e-8, 0.999);

        // Corrector.
        let Some(dir) = solve_dir(sigma, Some(&aff)) else {
            end_status = RawStatus::NumericalFailure;
            break;
        };
        let alpha = (0.99 * step_length(&cone, &scaling, &x, &z, tau, kappa, &dir)).min(1.0);
        if alpha < 1e-10 {
            end_status = RawStatus::NumericalFailure;
            break;
        }

        x += dir.dx.scale(alpha);
        y += dir.dy.scale(alpha);
        z += dir.dz.scale(alpha);
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        if tau <= 0.0 || kappa < 0.0 {
            end_status = RawStatus::NumericalFailure;
            break;
        }
    }

    // Accept the best stalled iterate at a relaxed tolerance before giving up.
    if let Some(b) = best {
        if b.primal_residual <= relax * tol.feas
            && b.dual_residual <= relax * tol.feas
            && b.gap <= relax * tol.gap
        {
            return b;
        }
        return RawSolution { status: end_status, ..b };
    }
    let ts = tau.max(1e-300);
    RawSolution {
        status: end_status,
        x: x.scale(1.0 / ts),
        y: y.scale(1.0 / ts),
        z: z.scale(1.0 / ts),
        iterations: tol.max_iter,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        gap: f64::NAN,
    }
}

fn step_length(
    cone: &Cone,
    scaling: &Scaling,
    x: &RVec,
    z: &RVec,
    tau: f64,
    kappa: f64,
    d: &Direction,
) -> f64 {
    let mut alpha = scaling.max_step(cone, &scaling.x_chols, x, &d.dx);
    alpha = alpha.min(scaling.max_step(cone, &scaling.z_chols, z, &d.dz));
    if d.dtau < 0.0 {
        alpha = alpha.min(-tau / d.dtau);
    }
    if d.dkappa < 0.0 {
        alpha = alpha.min(-kappa / d.dkappa);
    }
    alpha
}

fn cholesky_with_regularization(m: RMat) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some(ch);
    }
    let scale = 1.0 + m.trace().abs() / m.nrows() as f64;
    for reg in [1e-12, 1e-10, 1e-8] {
        let r = &m + RMat::identity(m.nrows(), m.ncols()).scale(reg * scale);
        if let Some(ch) = Cholesky::new(r) {
            return Some(ch);
        }
    }
    None
}
