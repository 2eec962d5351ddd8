//! Beamformer designs under perfect warden CSI.
//!
//! The covertness requirement collapses to the hard null `h_W^H w1 = 0`, so
//! the communication beam carries zero power to the warden and both KL
//! divergences vanish. Two pipelines are provided: semidefinite relaxation
//! with bisection on the radar information level, and the zero-forcing
//! construction whose stages all admit closed forms used as cross-checks.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::conic::{
    dominant_component, is_rank_one, ConicProblem, ConicSolution, LinExpr, Objective, Rel,
    SolveStatus, Tolerances,
};
use crate::metrics;
use crate::scene::Scene;
use crate::{C64, CMat, CVec};

/// Default relative bisection accuracy (zeta in Algorithms 1 and 2).
pub const DEFAULT_ZETA: f64 = 1e-4;
/// Default Gaussian randomization trial count.
pub const DEFAULT_TRIALS: usize = 500;

#[derive(Debug, Error)]
pub enum DesignError {
    /// The requested floors cannot be met within the power budget.
    #[error("design infeasible under the given constraints")]
    Infeasible,
    /// No randomized candidate survived feasibility repair.
    #[error("rank-one extraction found no feasible candidate")]
    ExtractionFailed,
    /// A zero-forcing projection has no room to work with.
    #[error("zero-forcing degenerate: {0}")]
    ZfDegenerate(String),
    #[error("solver returned {0:?}")]
    Solver(SolveStatus),
}

#[derive(Debug, Clone)]
pub struct BeamformerPair {
    /// Radar (cover) beam, w_R0.
    pub w0: CVec,
    /// Communication beam, w_R1.
    pub w1: CVec,
}

impl BeamformerPair {
    pub fn power(&self) -> f64 {
        self.w0.norm_squared() + self.w1.norm_squared()
    }
}

#[derive(Debug, Clone, Default)]
pub struct DesignDiagnostics {
    pub bisection_iterations: usize,
    /// Top-eigenvalue fraction of trace for the two lifted matrices.
    pub rank_ratio_w0: f64,
    pub rank_ratio_w1: f64,
    pub randomization_trials: usize,
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub pair: BeamformerPair,
    pub mi_bits: f64,
    pub rate_bits: f64,
    pub kl01: f64,
    pub kl10: f64,
    pub diagnostics: DesignDiagnostics,
}

/// Evaluates all reported figures of merit at the true warden channel.
pub fn evaluate_pair(
    scene: &Scene,
    pair: BeamformerPair,
    diagnostics: DesignDiagnostics,
) -> DesignResult {
    let mi_bits = metrics::mi_radar(scene, &pair.w0, &pair.w1);
    let rate_bits = metrics::rate_bob(scene, &pair.w0, &pair.w1);
    let lp = metrics::lambda_pair(&scene.h_w_true, &pair.w0, &pair.w1, scene.sigma2_w)
        .expect("scene vectors share a dimension");
    DesignResult {
        pair,
        mi_bits,
        rate_bits,
        kl01: metrics::kl_p0_p1(&lp),
        kl10: metrics::kl_p1_p0(&lp),
        diagnostics,
    }
}

pub(crate) fn outer(h: &CVec) -> CMat {
    h * h.adjoint()
}

/// Coefficient of the radar information-level inequality: at level `i_r`,
/// require `a2 ht^H W0 ht >= i_r * (a2 ht^H W1 ht + sigma_R^2)` where
/// `a2 = |alpha|^2 ||h_T||^2`.
pub(crate) fn mi_level_expr(scene: &Scene, i_r: f64) -> LinExpr {
    let a2 = scene.alpha.norm_sqr() * scene.h_t.norm_squared();
    let ct = outer(&scene.h_t);
    LinExpr::new()
        .trace("W0", ct.map(|x| x * a2))
        .trace("W1", ct.map(|x| x * (-i_r * a2)))
}

pub(crate) fn sinr_expr(scene: &Scene, beta_sinr: f64) -> LinExpr {
    let cb = outer(&scene.h_b);
    LinExpr::new()
        .trace("W1", cb.clone())
        .trace("W0", cb.map(|x| x * (-beta_sinr)))
}

pub(crate) fn power_expr(n: usize) -> LinExpr {
    LinExpr::new()
        .trace("W0", CMat::identity(n, n))
        .trace("W1", CMat::identity(n, n))
}

/// Relaxed feasibility problem at radar information level `i_r` with Bob SINR
/// floor `beta_sinr`, under perfect covertness (hard warden null on W1).
pub fn mi_feasibility_problem(scene: &Scene, i_r: f64, beta_sinr: f64) -> ConicProblem {
    let n = scene.n_antennas;
    let mut p = ConicProblem::new();
    p.psd_var("W0", n).unwrap();
    p.psd_var("W1", n).unwrap();
    p.constrain("mi_level", mi_level_expr(scene, i_r), Rel::Ge, i_r * scene.sigma2_r)
        .unwrap();
    p.constrain("sinr_bob", sinr_expr(scene, beta_sinr), Rel::Ge, beta_sinr * scene.sigma2_b)
        .unwrap();
    p.constrain(
        "warden_null",
        LinExpr::new().trace("W1", outer(&scene.h_w_true)),
        Rel::Eq,
        0.0,
    )
    .unwrap();
    p.constrain("power", power_expr(n), Rel::Le, scene.p_total).unwrap();
    p
}

/// Feasibility problem for the rate design: Bob SINR at level `t`, radar
/// information floor from `gamma_mi` bits.
pub fn rate_feasibility_problem(scene: &Scene, t: f64, gamma_mi: f64) -> ConicProblem {
    let n = scene.n_antennas;
    let floor = metrics::mi_to_level_floor(gamma_mi);
    let mut p = ConicProblem::new();
    p.psd_var("W0", n).unwrap();
    p.psd_var("W1", n).unwrap();
    p.constrain("sinr_bob", sinr_expr(scene, t), Rel::Ge, t * scene.sigma2_b).unwrap();
    p.constrain("mi_floor", mi_level_expr(scene, floor), Rel::Ge, floor * scene.sigma2_r)
        .unwrap();
    p.constrain(
        "warden_null",
        LinExpr::new().trace("W1", outer(&scene.h_w_true)),
        Rel::Eq,
        0.0,
    )
    .unwrap();
    p.constrain("power", power_expr(n), Rel::Le, scene.p_total).unwrap();
    p
}

/// Feasibility verdict tolerant of near-converged runs: anything that is not
/// a clean optimum must still re-verify against the original constraints.
pub(crate) fn feasible_solution(p: &ConicProblem, tol: &Tolerances) -> Option<ConicSolution> {
    let s = p.solve(tol);
    match s.status {
        SolveStatus::Optimal => Some(s),
        SolveStatus::Infeasible => None,
        _ => {
            let v = p.max_violation(&s.matrix_values, &s.scalar_values);
            if v.is_finite() && v <= 1e-6 {
                Some(s)
            } else {
                None
            }
        }
    }
}

/// Bisection on a level in `[0, hi]`, given feasibility at 0. Returns the
/// last feasible level, its solution and the iteration count.
pub(crate) fn bisect_level<S>(
    hi: f64,
    zeta: f64,
    probe: impl Fn(f64) -> Option<S>,
) -> Option<(f64, S, usize)> {
    let mut lo = 0.0;
    let mut best = probe(0.0)?;
    let mut hi_open = hi;
    let mut iters = 0usize;
    // Absolute width target, zeta relative to the initial bracket.
    let width = zeta * hi.max(f64::MIN_POSITIVE);
    while hi_open - lo > width {
        let mid = 0.5 * (lo + hi_open);
        iters += 1;
        match probe(mid) {
            Some(s) => {
                lo = mid;
                best = s;
            }
            None => hi_open = mid,
        }
    }
    Some((lo, best, iters))
}

/// Draws a candidate from the zero-mean complex Gaussian with covariance W,
/// using the PSD square root from the eigendecomposition.
fn gaussian_candidate<R: Rng>(sqrt_w: &CMat, rng: &mut R) -> CVec {
    let n = sqrt_w.nrows();
    let g = CVec::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    sqrt_w * g
}

pub(crate) fn psd_sqrt(w: &CMat) -> CMat {
    let n = w.nrows();
    let e = crate::conic::embed::embed(w);
    let eig = nalgebra::SymmetricEigen::new(e);
    let mut s = crate::RMat::zeros(2 * n, 2 * n);
    for i in 0..2 * n {
        let l = eig.eigenvalues[i].max(0.0).sqrt();
        let v = eig.eigenvectors.column(i);
        s += (v * v.transpose()).scale(l);
    }
    crate::conic::embed::unembed_hermitian(&s)
}

/// Projects `v` onto the orthogonal complement of the span of `dirs`.
pub(crate) fn project_out(v: &CVec, dirs: &[&CVec]) -> CVec {
    let mut basis: Vec<CVec> = Vec::new();
    for d in dirs {
        let mut u = (*d).clone();
        for b in &basis {
            let c = b.dotc(&u);
            u -= b.map(|x| x * c);
        }
        let nrm = u.norm();
        if nrm > 1e-12 {
            basis.push(u.map(|x| x / nrm));
        }
    }
    let mut out = v.clone();
    for b in &basis {
        let c = b.dotc(&out);
        out -= b.map(|x| x * c);
    }
    out
}

/// Candidate directions for one lifted matrix: the principal eigenvector, and
/// Gaussian draws when the matrix is not numerically rank one.
pub fn extract_rank1<R: Rng>(w_star: &CMat, n_trials: usize, rng: &mut R) -> (Vec<CVec>, f64) {
    let (principal, ratio) = dominant_component(w_star);
    let mut cands = vec![principal];
    if !is_rank_one(ratio) {
        let sq = psd_sqrt(w_star);
        for _ in 0..n_trials {
            cands.push(gaussian_candidate(&sq, rng));
        }
    }
    (cands, ratio)
}

/// Joint rescale for MI problems: meet the Bob SINR floor with equality and
/// spend the whole power budget, which maximizes MI over scalings of a fixed
/// direction pair. Returns None when the pair cannot meet the floor.
pub(crate) fn rescale_for_mi(scene: &Scene, w0: &CVec, w1: &CVec, beta_sinr: f64) -> Option<BeamformerPair> {
    let p0 = w0.norm_squared();
    let p1 = w1.norm_squared();
    if beta_sinr <= 0.0 {
        if p0 <= 0.0 {
            return None;
        }
        let t0 = (scene.p_total / p0).sqrt();
        return Some(BeamformerPair {
            w0: w0.map(|x| x * t0),
            w1: CVec::zeros(w0.len()),
        });
    }
    let g0 = scene.h_b.dotc(w0).norm_sqr();
    let g1 = scene.h_b.dotc(w1).norm_sqr();
    if g1 <= 1e-300 || p1 <= 0.0 {
        return None;
    }
    // t1^2 g1 = beta (t0^2 g0 + sigma_B^2); t0^2 p0 + t1^2 p1 = P.
    let denom = p0 + beta_sinr * g0 * p1 / g1;
    let budget = scene.p_total - beta_sinr * scene.sigma2_b * p1 / g1;
    if budget < 0.0 {
        return None;
    }
    let t0sq = if denom > 0.0 { budget / denom } else { 0.0 };
    let t1sq = beta_sinr * (t0sq * g0 + scene.sigma2_b) / g1;
    if t0sq * p0 + t1sq * p1 > scene.p_total * (1.0 + 1e-9) {
        return None;
    }
    Some(BeamformerPair {
        w0: w0.map(|x| x * t0sq.sqrt()),
        w1: w1.map(|x| x * t1sq.sqrt()),
    })
}

/// Joint rescale for rate problems: spend the minimum radar power meeting the
/// MI floor and give the rest to the communication beam.
pub(crate) fn rescale_for_rate(scene: &Scene, w0: &CVec, w1: &CVec, gamma_mi: f64) -> Option<BeamformerPair> {
    let p0 = w0.norm_squared();
    let p1 = w1.norm_squared();
    if p1 <= 0.0 {
        return None;
    }
    let k = metrics::mi_to_level_floor(gamma_mi);
    let a2 = scene.alpha.norm_sqr() * scene.h_t.norm_squared();
    let a0 = a2 * scene.h_t.dotc(w0).norm_sqr();
    let a1 = a2 * scene.h_t.dotc(w1).norm_sqr();
    if k <= 0.0 {
        let t1 = (scene.p_total / p1).sqrt();
        return Some(BeamformerPair {
            w0: CVec::zeros(w0.len()),
            w1: w1.map(|x| x * t1),
        });
    }
    if a0 <= 1e-300 || p0 <= 0.0 {
        return None;
    }
    // t0^2 a0 = k (t1^2 a1 + sigma_R^2); t0^2 p0 + t1^2 p1 = P.
    let denom = p1 + k * a1 * p0 / a0;
    let budget = scene.p_total - k * scene.sigma2_r * p0 / a0;
    if budget < 0.0 || denom <= 0.0 {
        return None;
    }
    let t1sq = budget / denom;
    let t0sq = k * (t1sq * a1 + scene.sigma2_r) / a0;
    Some(BeamformerPair {
        w0: w0.map(|x| x * t0sq.sqrt()),
        w1: w1.map(|x| x * t1sq.sqrt()),
    })
}

pub(crate) struct Extraction {
    pub(crate) pair: BeamformerPair,
    pub(crate) trials: usize,
}

/// Picks the best feasible rank-one pair from a solved relaxation. `score`
/// ranks repaired pairs; `repair` enforces the hard constraints exactly.
pub(crate) fn best_pair(
    cands0: &[CVec],
    cands1: &[CVec],
    repair: impl Fn(&CVec, &CVec) -> Option<BeamformerPair>,
    score: impl Fn(&BeamformerPair) -> f64,
) -> Option<Extraction> {
    let mut best: Option<(f64, BeamformerPair)> = None;
    let mut trials = 0usize;
    for c0 in cands0 {
        for c1 in cands1 {
            trials += 1;
            if let Some(pair) = repair(c0, c1) {
                let s = score(&pair);
                if best.as_ref().is_none_or(|(b, _)| s > *b) {
                    best = Some((s, pair));
                }
            }
        }
    }
    best.map(|(_, pair)| Extraction { pair, trials })
}

/// Algorithm 1: MI maximization by bisection on the information level over
/// the relaxed problem, then rank-one extraction.
pub fn maximize_mi_sdr<R: Rng>(
    scene: &Scene,
    beta_sinr: f64,
    zeta: f64,
    n_trials: usize,
    rng: &mut R,
) -> Result<DesignResult, DesignError> {
    let tol = Tolerances::default();
    let hi = scene.mi_level_upper_bound();
    let (_, sol, iters) = bisect_level(hi, zeta, |i_r| {
        feasible_solution(&mi_feasibility_problem(scene, i_r, beta_sinr), &tol)
    })
    .ok_or(DesignError::Infeasible)?;

    let w0_star = &sol.matrix_values["W0"];
    let w1_star = &sol.matrix_values["W1"];
    let (cands0, r0) = extract_rank1(w0_star, n_trials, rng);
    let (cands1, r1) = extract_rank1(w1_star, n_trials, rng);
    let h_w = scene.h_w_true.clone();
    let ext = best_pair(
        &cands0,
        &cands1,
        |c0, c1| {
            let w1 = project_out(c1, &[&h_w]);
            rescale_for_mi(scene, c0, &w1, beta_sinr)
        },
        |pair| metrics::mi_radar(scene, &pair.w0, &pair.w1),
    )
    .ok_or(DesignError::ExtractionFailed)?;

    Ok(evaluate_pair(
        scene,
        ext.pair,
        DesignDiagnostics {
            bisection_iterations: iters,
            rank_ratio_w0: r0,
            rank_ratio_w1: r1,
            randomization_trials: ext.trials,
        },
    ))
}

/// Rate maximization under a radar information floor, by bisection on Bob's
/// SINR level.
pub fn maximize_rate_perfect<R: Rng>(
    scene: &Scene,
    gamma_mi: f64,
    zeta: f64,
    n_trials: usize,
    rng: &mut R,
) -> Result<DesignResult, DesignError> {
    let tol = Tolerances::default();
    // SINR never exceeds P ||h_B||^2 / sigma_B^2 within the power budget.
    let hi = scene.p_total * scene.h_b.norm_squared() / scene.sigma2_b;
    let (_, sol, iters) = bisect_level(hi, zeta, |t| {
        feasible_solution(&rate_feasibility_problem(scene, t, gamma_mi), &tol)
    })
    .ok_or(DesignError::Infeasible)?;

    let w0_star = &sol.matrix_values["W0"];
    let w1_star = &sol.matrix_values["W1"];
    let (cands0, r0) = extract_rank1(w0_star, n_trials, rng);
    let (cands1, r1) = extract_rank1(w1_star, n_trials, rng);
    let h_w = scene.h_w_true.clone();
    let floor = gamma_mi - 1e-9;
    let ext = best_pair(
        &cands0,
        &cands1,
        |c0, c1| {
            let w1 = project_out(c1, &[&h_w]);
            let pair = rescale_for_rate(scene, c0, &w1, gamma_mi)?;
            (metrics::mi_radar(scene, &pair.w0, &pair.w1) >= floor).then_some(pair)
        },
        |pair| metrics::rate_bob(scene, &pair.w0, &pair.w1),
    )
    .ok_or(DesignError::ExtractionFailed)?;

    // The w1 = 0 fallback covers radar floors at the very top of the range,
    // where no candidate leaves room for communication.
    if ext.pair.w1.norm_squared() == 0.0 && gamma_mi > 0.0 {
        let w0 = scene.h_t.map(|x| x * ((scene.p_total / scene.h_t.norm_squared()).sqrt()));
        let pair = BeamformerPair { w0, w1: CVec::zeros(scene.n_antennas) };
        if metrics::mi_radar(scene, &pair.w0, &pair.w1) >= floor {
            return Ok(evaluate_pair(
                scene,
                pair,
                DesignDiagnostics {
                    bisection_iterations: iters,
                    rank_ratio_w0: r0,
                    rank_ratio_w1: r1,
                    randomization_trials: ext.trials,
                },
            ));
        }
    }

    Ok(evaluate_pair(
        scene,
        ext.pair,
        DesignDiagnostics {
            bisection_iterations: iters,
            rank_ratio_w0: r0,
            rank_ratio_w1: r1,
            randomization_trials: ext.trials,
        },
    ))
}

/// Zero-forcing communication beam: minimum-power vector orthogonal to both
/// the target and warden channels with `|h_B^H w1|^2 = beta sigma_B^2`.
pub fn zf_w1_closed_form(scene: &Scene, beta_sinr: f64) -> Result<CVec, DesignError> {
    if beta_sinr <= 0.0 {
        return Ok(CVec::zeros(scene.n_antennas));
    }
    let p_hb = project_out(&scene.h_b, &[&scene.h_t, &scene.h_w_true]);
    let nsq = p_hb.norm_squared();
    if nsq < 1e-10 {
        return Err(DesignError::ZfDegenerate(
            "Bob's channel lies in the span of the target and warden channels".into(),
        ));
    }
    let scale = (beta_sinr * scene.sigma2_b).sqrt() / nsq;
    Ok(p_hb.map(|x| x * scale))
}

/// The SDR counterpart of the minimum-power ZF beam, for cross-checking the
/// projector closed form.
pub fn zf_w1_sdp(scene: &Scene, beta_sinr: f64) -> Result<CVec, DesignError> {
    if beta_sinr <= 0.0 {
        return Ok(CVec::zeros(scene.n_antennas));
    }
    let n = scene.n_antennas;
    let mut p = ConicProblem::new();
    p.psd_var("W1", n).unwrap();
    p.constrain("null_t", LinExpr::new().trace("W1", outer(&scene.h_t)), Rel::Eq, 0.0)
        .unwrap();
    p.constrain("null_w", LinExpr::new().trace("W1", outer(&scene.h_w_true)), Rel::Eq, 0.0)
        .unwrap();
    p.constrain(
        "bob_power",
        LinExpr::new().trace("W1", outer(&scene.h_b)),
        Rel::Ge,
        beta_sinr * scene.sigma2_b,
    )
    .unwrap();
    p.set_objective(Objective::Minimize(LinExpr::new().trace("W1", CMat::identity(n, n))))
        .unwrap();
    let s = p.solve(&Tolerances::default());
    match s.status {
        SolveStatus::Optimal => {
            let (v, _) = dominant_component(&s.matrix_values["W1"]);
            Ok(v)
        }
        SolveStatus::Infeasible => Err(DesignError::ZfDegenerate("SDP infeasible".into())),
        other => Err(DesignError::Solver(other)),
    }
}

/// Radar beam under ZF: maximize the target response in the complement of
/// Bob's channel, closed form. The flag marks the degenerate parallel case.
pub fn zf_w0_closed_form(scene: &Scene, p_remaining: f64) -> (CVec, bool) {
    let q_ht = project_out(&scene.h_t, &[&scene.h_b]);
    let nrm = q_ht.norm();
    if nrm < 1e-10 || p_remaining <= 0.0 {
        return (CVec::zeros(scene.n_antennas), nrm < 1e-10);
    }
    let scale = p_remaining.sqrt() / nrm;
    (q_ht.map(|x| x * scale), false)
}

/// The same radar-beam problem solved as an SDP through the usual lifting of
/// a vector variable into the bordered PSD matrix [[W, w], [w^H, 1]].
pub fn zf_w0_sdp(scene: &Scene, p_remaining: f64) -> Result<CVec, DesignError> {
    let n = scene.n_antennas;
    if p_remaining <= 0.0 {
        return Ok(CVec::zeros(n));
    }
    let mut p = ConicProblem::new();
    p.psd_var("Z", n + 1).unwrap();
    let j = C64::new(0.0, 1.0);
    // Re tr(C Z) = Re(c^H w) for C with vector c in the border column.
    let border = |c: &CVec| -> CMat {
        let mut m = CMat::zeros(n + 1, n + 1);
        for i in 0..n {
            m[(i, n)] = c[i] * 0.5;
            m[(n, i)] = c[i].conj() * 0.5;
        }
        m
    };
    let corner = {
        let mut m = CMat::zeros(n + 1, n + 1);
        m[(n, n)] = C64::new(1.0, 0.0);
        m
    };
    let mut top_id = CMat::zeros(n + 1, n + 1);
    for i in 0..n {
        top_id[(i, i)] = C64::new(1.0, 0.0);
    }
    p.constrain("corner", LinExpr::new().trace("Z", corner), Rel::Eq, 1.0).unwrap();
    p.constrain("power", LinExpr::new().trace("Z", top_id), Rel::Le, p_remaining).unwrap();
    p.constrain("bob_re", LinExpr::new().trace("Z", border(&scene.h_b)), Rel::Eq, 0.0)
        .unwrap();
    p.constrain(
        "bob_im",
        LinExpr::new().trace("Z", border(&scene.h_b.map(|x| x * j))),
        Rel::Eq,
        0.0,
    )
    .unwrap();
    p.constrain(
        "target_im",
        LinExpr::new().trace("Z", border(&scene.h_t.map(|x| x * j))),
        Rel::Eq,
        0.0,
    )
    .unwrap();
    p.set_objective(Objective::Maximize(LinExpr::new().trace("Z", border(&scene.h_t))))
        .unwrap();
    let s = p.solve(&Tolerances::default());
    if s.status != SolveStatus::Optimal {
        return Err(DesignError::Solver(s.status));
    }
    let z = &s.matrix_values["Z"];
    let mut w = CVec::zeros(n);
    for i in 0..n {
        w[i] = z[(i, n)];
    }
    Ok(w)
}

/// Two-stage zero-forcing MI design: minimum-power communication beam, then
/// all remaining power into the radar beam in Bob's null space.
pub fn maximize_mi_zf(scene: &Scene, beta_sinr: f64) -> Result<DesignResult, DesignError> {
    let w1 = zf_w1_closed_form(scene, beta_sinr)?;
    let p_rem = scene.p_total - w1.norm_squared();
    if p_rem < 0.0 {
        return Err(DesignError::Infeasible);
    }
    let (w0, degenerate) = zf_w0_closed_form(scene, p_rem);
    if degenerate {
        return Err(DesignError::ZfDegenerate(
            "target channel parallel to Bob's channel".into(),
        ));
    }
    Ok(evaluate_pair(
        scene,
        BeamformerPair { w0, w1 },
        DesignDiagnostics {
            rank_ratio_w0: 1.0,
            rank_ratio_w1: 1.0,
            ..Default::default()
        },
    ))
}

/// Independent feasibility audit used by tests and acceptance checks.
pub fn verify_design(
    scene: &Scene,
    pair: &BeamformerPair,
    beta_sinr: Option<f64>,
    gamma_mi: Option<f64>,
) -> Result<(), String> {
    let power = pair.power();
    if power > scene.p_total * (1.0 + 1e-9) {
        return Err(format!("power {power} exceeds budget {}", scene.p_total));
    }
    let leak = scene.h_w_true.dotc(&pair.w1).norm_sqr();
    if leak > 1e-8 * scene.p_total {
        return Err(format!("warden leakage {leak}"));
    }
    if let Some(beta) = beta_sinr {
        let sinr = metrics::sinr_bob(scene, &pair.w0, &pair.w1);
        if sinr < beta * (1.0 - 1e-4) {
            return Err(format!("SINR {sinr} below floor {beta}"));
        }
    }
    if let Some(gamma) = gamma_mi {
        let mi = metrics::mi_radar(scene, &pair.w0, &pair.w1);
        if mi < gamma - 1e-6 {
            return Err(format!("MI {mi} below floor {gamma}"));
        }
    }
    let lp = metrics::lambda_pair(&scene.h_w_true, &pair.w0, &pair.w1, scene.sigma2_w)
        .map_err(|e| e.to_string())?;
    let kl01 = metrics::kl_p0_p1(&lp);
    if kl01 > 1e-10 {
        return Err(format!("covert KL {kl01}"));
    }
    let xi = 1.0 - metrics::total_variation(&lp);
    if xi < 1.0 - 1e-5 {
        return Err(format!("warden total error {xi}"));
    }
    Ok(())
}
