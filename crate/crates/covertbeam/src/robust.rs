//! Beamformer designs under imperfect warden CSI.
//!
//! The warden channel is known only through an estimate plus an ellipsoidal
//! error set. The covertness requirement is recast as an interval constraint
//! on the received-power ratio, which holds for every channel in the set iff
//! two quadratic-form inequalities do; the S-procedure turns each into one
//! LMI with a nonnegative multiplier. A sampled worst-case KL oracle verifies
//! accepted designs independently of the certificates.

use rand::Rng;

use crate::conic::{
    ConicProblem, LinExpr, LmiConstraint, LmiTerm, Rel, ScalarKind, Tolerances,
};
use crate::metrics::{self, CovertInterval, KlDirection};
use crate::perfect::{
    self, bisect_level, evaluate_pair, extract_rank1, feasible_solution, outer, power_expr,
    rescale_for_mi, rescale_for_rate, BeamformerPair, DesignDiagnostics, DesignError,
    DesignResult,
};
use crate::scene::{sample_ellipsoid_error, EllipsoidError, EllipsoidMode, Scene};
use crate::{C64, CMat, CVec};

/// Covertness requirement against an uncertain warden channel. `error: None`
/// treats the estimate as exact (the non-robust limit).
#[derive(Debug, Clone)]
pub struct RobustCovertSpec {
    pub epsilon: f64,
    pub direction: KlDirection,
    pub error: Option<EllipsoidError>,
}

/// S-procedure multipliers at an accepted solution.
#[derive(Debug, Clone, Copy)]
pub struct SLemmaCertificate {
    pub eta1: f64,
    pub eta2: f64,
}

impl RobustCovertSpec {
    pub fn threshold(&self) -> f64 {
        2.0 * self.epsilon * self.epsilon
    }

    pub fn interval(&self) -> CovertInterval {
        metrics::covert_interval(self.epsilon).expect("epsilon is positive")
    }

    /// Bounds on the ratio lambda1/lambda0 implied by the active direction.
    /// The KL(p1,p0) form bounds lambda0/lambda1 in the same interval, which
    /// maps to (1/b, 1/a) for the forward ratio.
    pub fn ratio_bounds(&self) -> (f64, f64) {
        let iv = self.interval();
        match self.direction {
            KlDirection::Kl01 => (iv.a_bar, iv.b_bar),
            KlDirection::Kl10 => (1.0 / iv.b_bar, 1.0 / iv.a_bar),
        }
    }

    /// KL of the active direction at a concrete warden channel.
    pub fn kl_at(&self, h_w: &CVec, pair: &BeamformerPair, sigma2_w: f64) -> f64 {
        let lp = metrics::lambda_pair(h_w, &pair.w0, &pair.w1, sigma2_w)
            .expect("dimensions match");
        metrics::kl_directed(&lp, self.direction)
    }
}

/// The two S-procedure LMIs of size (N+1) certifying the interval constraint
/// over the whole ellipsoid. `lo`/`hi` bound lambda1/lambda0; the lower-bound
/// LMI never binds (the ratio is at least one) but is kept for structural
/// fidelity to the certified reformulation.
pub fn build_robust_lmis(
    scene: &Scene,
    error: &EllipsoidError,
    lo: f64,
    hi: f64,
    names: (&str, &str, &str, &str),
) -> (LmiConstraint, LmiConstraint) {
    let n = scene.n_antennas;
    let (w0, w1, eta1, eta2) = names;
    // E = [I, h_est]; E^H M E stacks the quadratic form's blocks.
    let mut e = CMat::zeros(n, n + 1);
    for i in 0..n {
        e[(i, i)] = C64::new(1.0, 0.0);
    }
    e.column_mut(n).copy_from(&scene.h_w_est);
    let mut shape = CMat::zeros(n + 1, n + 1);
    shape.view_mut((0, 0), (n, n)).copy_from(error.c_shape());
    shape[(n, n)] = C64::new(-error.upsilon(), 0.0);

    let corner = |v: f64| {
        let mut m = CMat::zeros(n + 1, n + 1);
        m[(n, n)] = C64::new(v, 0.0);
        m
    };

    let lmi_lo = LmiConstraint {
        label: "covert_ratio_lower".into(),
        dim: n + 1,
        terms: vec![
            LmiTerm::Congruence { var: w0.into(), left: e.clone(), coeff: 1.0 - lo },
            LmiTerm::Congruence { var: w1.into(), left: e.clone(), coeff: 1.0 },
            LmiTerm::ScalarMat { var: eta1.into(), matrix: shape.clone() },
        ],
        constant: corner(scene.sigma2_w * (1.0 - lo)),
    };
    let lmi_hi = LmiConstraint {
        label: "covert_ratio_upper".into(),
        dim: n + 1,
        terms: vec![
            LmiTerm::Congruence { var: w0.into(), left: e.clone(), coeff: hi - 1.0 },
            LmiTerm::Congruence { var: w1.into(), left: e, coeff: -1.0 },
            LmiTerm::ScalarMat { var: eta2.into(), matrix: shape },
        ],
        constant: corner(scene.sigma2_w * (hi - 1.0)),
    };
    (lmi_lo, lmi_hi)
}

/// Interval constraint evaluated at the estimate only: the non-robust
/// baseline treats the estimated channel as exact.
fn nominal_interval_exprs(scene: &Scene, lo: f64, hi: f64) -> (LinExpr, f64, LinExpr, f64) {
    let ch = outer(&scene.h_w_est);
    let lower = LinExpr::new()
        .trace("W0", ch.map(|x| x * (1.0 - lo)))
        .trace("W1", ch.clone());
    let upper = LinExpr::new()
        .trace("W0", ch.map(|x| x * (1.0 - hi)))
        .trace("W1", ch);
    (
        lower,
        scene.sigma2_w * (lo - 1.0),
        upper,
        scene.sigma2_w * (hi - 1.0),
    )
}

fn add_covertness(p: &mut ConicProblem, scene: &Scene, spec: &RobustCovertSpec) {
    let (lo, hi) = spec.ratio_bounds();
    match &spec.error {
        Some(err) => {
            p.scalar_var("eta1", ScalarKind::Nonneg).unwrap();
            p.scalar_var("eta2", ScalarKind::Nonneg).unwrap();
            let (l1, l2) = build_robust_lmis(scene, err, lo, hi, ("W0", "W1", "eta1", "eta2"));
            p.add_lmi(l1).unwrap();
            p.add_lmi(l2).unwrap();
        }
        None => {
            let (le, lrhs, ue, urhs) = nominal_interval_exprs(scene, lo, hi);
            p.constrain("covert_lower", le, Rel::Ge, lrhs).unwrap();
            p.constrain("covert_upper", ue, Rel::Le, urhs).unwrap();
        }
    }
}

/// Conservative relaxed feasibility problem at radar information level `i_r`.
pub fn robust_mi_feasibility_problem(
    scene: &Scene,
    spec: &RobustCovertSpec,
    i_r: f64,
    beta_sinr: f64,
) -> ConicProblem {
    let n = scene.n_antennas;
    let mut p = ConicProblem::new();
    p.psd_var("W0", n).unwrap();
    p.psd_var("W1", n).unwrap();
    p.constrain(
        "mi_level",
        perfect::mi_level_expr(scene, i_r),
        Rel::Ge,
        i_r * scene.sigma2_r,
    )
    .unwrap();
    p.constrain(
        "sinr_bob",
        perfect::sinr_expr(scene, beta_sinr),
        Rel::Ge,
        beta_sinr * scene.sigma2_b,
    )
    .unwrap();
    p.constrain("power", power_expr(n), Rel::Le, scene.p_total).unwrap();
    add_covertness(&mut p, scene, spec);
    p
}

/// Rate-design feasibility problem at Bob SINR level `t` with an MI floor.
pub fn robust_rate_feasibility_problem(
    scene: &Scene,
    spec: &RobustCovertSpec,
    t: f64,
    gamma_mi: f64,
) -> ConicProblem {
    let n = scene.n_antennas;
    let floor = metrics::mi_to_level_floor(gamma_mi);
    let mut p = ConicProblem::new();
    p.psd_var("W0", n).unwrap();
    p.psd_var("W1", n).unwrap();
    p.constrain("sinr_bob", perfect::sinr_expr(scene, t), Rel::Ge, t * scene.sigma2_b)
        .unwrap();
    p.constrain(
        "mi_floor",
        perfect::mi_level_expr(scene, floor),
        Rel::Ge,
        floor * scene.sigma2_r,
    )
    .unwrap();
    p.constrain("power", power_expr(n), Rel::Le, scene.p_total).unwrap();
    add_covertness(&mut p, scene, spec);
    p
}

/// Sampled lower bound on the supremum of the active-direction KL over the
/// uncertainty set: dense boundary sampling plus projected gradient ascent
/// from the best samples. Returns the value and the maximizing error vector.
pub fn worst_case_kl<R: Rng>(
    pair: &BeamformerPair,
    spec: &RobustCovertSpec,
    scene: &Scene,
    n_samples: usize,
    rng: &mut R,
) -> (f64, CVec) {
    let n = scene.n_antennas;
    let Some(err) = &spec.error else {
        return (
            spec.kl_at(&scene.h_w_est, pair, scene.sigma2_w),
            CVec::zeros(n),
        );
    };
    // The KL is monotone in the power ratio in both directions, so
    // maximizing the ratio maximizes the divergence.
    let ratio = |dh: &CVec| -> f64 {
        let h = &scene.h_w_est + dh;
        let num = h.dotc(&pair.w1).norm_sqr();
        let den = h.dotc(&pair.w0).norm_sqr() + scene.sigma2_w;
        1.0 + num / den
    };

    let mut top: Vec<(f64, CVec)> = vec![(ratio(&CVec::zeros(n)), CVec::zeros(n))];
    for i in 0..n_samples {
        let mode = if i % 4 == 0 { EllipsoidMode::Interior } else { EllipsoidMode::Boundary };
        let dh = sample_ellipsoid_error(err, rng, mode).expect("shape factor is nonsingular");
        let r = ratio(&dh);
        top.push((r, dh));
        top.sort_by(|a, b| b.0.total_cmp(&a.0));
        top.truncate(3);
    }

    // Local ascent in the error vector with ellipsoid projection.
    let scale = (err.upsilon() / err.c_shape().trace().re.max(1e-300)).sqrt();
    let mut best = top[0].clone();
    for (r0, dh0) in top {
        let mut cur = dh0;
        let mut val = r0;
        let mut step = scale;
        for _ in 0..120 {
            let h = &scene.h_w_est + &cur;
            let num = h.dotc(&pair.w1).norm_sqr();
            let den = h.dotc(&pair.w0).norm_sqr() + scene.sigma2_w;
            // Wirtinger gradient of the ratio with respect to conj(h).
            let g = pair.w1.map(|x| x * (pair.w1.dotc(&h) / C64::new(den, 0.0)))
                - pair.w0.map(|x| x * (pair.w0.dotc(&h) * (num / (den * den))));
            let gn = g.norm();
            if gn < 1e-16 {
                break;
            }
            let cand = err.clamp(&(&cur + g.map(|x| x * (step / gn))));
            let cv = ratio(&cand);
            if cv > val {
                cur = cand;
                val = cv;
                step *= 1.3;
            } else {
                step *= 0.4;
                if step < 1e-12 * scale {
                    break;
                }
            }
        }
        if val > best.0 {
            best = (val, cur);
        }
    }

    let r = best.0;
    let kl = match spec.direction {
        KlDirection::Kl01 => metrics::covert_fn(r),
        KlDirection::Kl10 => metrics::covert_fn(1.0 / r),
    };
    (kl, best.1)
}

/// Candidate index pairs for extraction: eigenvector pair first, then each
/// randomized draw against the eigenvector and against its own partner.
/// Avoids the quadratic cross product, which the covertness gate cannot
/// afford.
fn candidate_pairs(n0: usize, n1: usize) -> Vec<(usize, usize)> {
    let mut out = vec![(0, 0)];
    for k in 1..n0.max(n1) {
        let i = k.min(n0 - 1);
        let j = k.min(n1 - 1);
        out.push((0, j));
        out.push((i, 0));
        if i == k && j == k {
            out.push((i, j));
        }
    }
    out.dedup();
    out
}

struct RobustExtraction {
    pair: BeamformerPair,
    trials: usize,
}

/// Extraction with the covertness gate: repaired candidates are screened by a
/// cheap sampled worst case, and the winner must pass the full oracle with a
/// one-percent margin.
fn extract_robust<R: Rng>(
    scene: &Scene,
    spec: &RobustCovertSpec,
    cands0: &[CVec],
    cands1: &[CVec],
    repair: impl Fn(&CVec, &CVec) -> Option<BeamformerPair>,
    score: impl Fn(&BeamformerPair) -> f64,
    rng: &mut R,
) -> Option<RobustExtraction> {
    let threshold = spec.threshold();
    let mut passing: Vec<(f64, BeamformerPair)> = Vec::new();
    let mut trials = 0usize;
    for (i, j) in candidate_pairs(cands0.len(), cands1.len()) {
        trials += 1;
        let Some(pair) = repair(&cands0[i], &cands1[j]) else { continue };
        let (screen, _) = worst_case_kl(&pair, spec, scene, 300, rng);
        if screen <= threshold * 0.99 {
            passing.push((score(&pair), pair));
        }
    }
    passing.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, pair) in passing {
        let (wkl, _) = worst_case_kl(&pair, spec, scene, 2000, rng);
        if wkl <= threshold * 0.99 {
            return Some(RobustExtraction { pair, trials });
        }
    }
    None
}

/// Algorithm 2: robust MI maximization by bisection over the conservative
/// relaxation, then gated rank-one extraction.
pub fn maximize_mi_robust<R: Rng>(
    scene: &Scene,
    spec: &RobustCovertSpec,
    beta_sinr: f64,
    zeta: f64,
    n_trials: usize,
    rng: &mut R,
) -> Result<DesignResult, DesignError> {
    let tol = Tolerances::default();
    let hi = scene.mi_level_upper_bound();
    let (_, sol, iters) = bisect_level(hi, zeta, |i_r| {
        feasible_solution(&robust_mi_feasibility_problem(scene, spec, i_r, beta_sinr), &tol)
    })
    .ok_or(DesignError::Infeasible)?;

    let (cands0, r0) = extract_rank1(&sol.matrix_values["W0"], n_trials, rng);
    let (cands1, r1) = extract_rank1(&sol.matrix_values["W1"], n_trials, rng);
    let ext = extract_robust(
        scene,
        spec,
        &cands0,
        &cands1,
        |c0, c1| rescale_for_mi(scene, c0, c1, beta_sinr),
        |pair| metrics::mi_radar(scene, &pair.w0, &pair.w1),
        rng,
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

/// Robust rate maximization under an MI floor.
pub fn maximize_rate_robust<R: Rng>(
    scene: &Scene,
    spec: &RobustCovertSpec,
    gamma_mi: f64,
    zeta: f64,
    n_trials: usize,
    rng: &mut R,
) -> Result<DesignResult, DesignError> {
    let tol = Tolerances::default();
    let hi = scene.p_total * scene.h_b.norm_squared() / scene.sigma2_b;
    let (_, sol, iters) = bisect_level(hi, zeta, |t| {
        feasible_solution(&robust_rate_feasibility_problem(scene, spec, t, gamma_mi), &tol)
    })
    .ok_or(DesignError::Infeasible)?;

    let (cands0, r0) = extract_rank1(&sol.matrix_values["W0"], n_trials, rng);
    let (cands1, r1) = extract_rank1(&sol.matrix_values["W1"], n_trials, rng);
    let floor = gamma_mi - 1e-9;
    let ext = extract_robust(
        scene,
        spec,
        &cands0,
        &cands1,
        |c0, c1| {
            let pair = rescale_for_rate(scene, c0, c1, gamma_mi)?;
            (metrics::mi_radar(scene, &pair.w0, &pair.w1) >= floor).then_some(pair)
        },
        |pair| metrics::rate_bob(scene, &pair.w0, &pair.w1),
        rng,
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

/// Non-robust baseline: the interval constraint is enforced at the estimate
/// only, so the design may violate covertness under channel error.
pub fn maximize_mi_nominal<R: Rng>(
    scene: &Scene,
    spec: &RobustCovertSpec,
    beta_sinr: f64,
    zeta: f64,
    n_trials: usize,
    rng: &mut R,
) -> Result<DesignResult, DesignError> {
    let nominal = RobustCovertSpec {
        epsilon: spec.epsilon,
        direction: spec.direction,
        error: None,
    };
    maximize_mi_robust(scene, &nominal, beta_sinr, zeta, n_trials, rng)
}

/// Recovers the S-procedure multipliers from a solved robust problem.
pub fn certificate(sol: &crate::conic::ConicSolution) -> Option<SLemmaCertificate> {
    Some(SLemmaCertificate {
        eta1: *sol.scalar_values.get("eta1")?,
        eta2: *sol.scalar_values.get("eta2")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perfect::verify_design;
    use crate::scene::{sample_rayleigh, SeedSpec};
    use approx::assert_relative_eq;

    fn random_scene(seed: u64, upsilon: f64) -> (Scene, RobustCovertSpec) {
        let seeds = SeedSpec::new(42);
        let mut rng = seeds.stream("scene", seed);
        let n = 5;
        let h_w_true = sample_rayleigh(n, 1.0, &mut rng).unwrap();
        let mut err_rng = seeds.stream("csi_err", seed);
        let err = EllipsoidError::spherical(n, upsilon).unwrap();
        let dh = sample_ellipsoid_error(&err, &mut err_rng, EllipsoidMode::Interior).unwrap();
        let scene = Scene {
            n_antennas: n,
            h_t: crate::scene::steering_vector(0.3, n),
            h_b: sample_rayleigh(n, 1.0, &mut rng).unwrap(),
            h_w_est: &h_w_true - &dh,
            h_w_true,
            alpha: C64::new(1.0, 0.0),
            sigma2_r: 1.0,
            sigma2_b: 1.0,
            sigma2_w: 1.0,
            p_total: 10.0,
        };
        let spec = RobustCovertSpec {
            epsilon: 0.05,
            direction: KlDirection::Kl01,
            error: Some(err),
        };
        (scene, spec)
    }

    #[test]
    fn zero_design_is_robustly_covert() {
        let (scene, spec) = random_scene(0, 0.005);
        let p = robust_mi_feasibility_problem(&scene, &spec, 0.0, 0.0);
        let sol = feasible_solution(&p, &Tolerances::default()).unwrap();
        let cert = certificate(&sol).unwrap();
        assert!(cert.eta1 >= -1e-10 && cert.eta2 >= -1e-10);
    }

    #[test]
    fn s_procedure_soundness_on_a_solved_instance() {
        // Quadratic-form inequalities must hold at every sampled error for
        // the lifted solution the LMIs certified.
        let (scene, spec) = random_scene(1, 0.005);
        let hi_level = scene.mi_level_upper_bound() * 0.3;
        let p = robust_mi_feasibility_problem(&scene, &spec, hi_level, 1.0);
        let Some(sol) = feasible_solution(&p, &Tolerances::default()) else {
            panic!("expected a feasible mid-level instance");
        };
        let w0 = &sol.matrix_values["W0"];
        let w1 = &sol.matrix_values["W1"];
        let (lo, hi) = spec.ratio_bounds();
        let err = spec.error.as_ref().unwrap();
        let mut rng = SeedSpec::new(5).stream("sproc", 0);
        for i in 0..10_000 {
            let mode = if i % 2 == 0 { EllipsoidMode::Interior } else { EllipsoidMode::Boundary };
            let dh = sample_ellipsoid_error(err, &mut rng, mode).unwrap();
            let h = &scene.h_w_est + &dh;
            let q0 = (h.adjoint() * w0 * &h)[(0, 0)].re;
            let q1 = (h.adjoint() * w1 * &h)[(0, 0)].re;
            let lower = (1.0 - lo) * q0 + q1 - scene.sigma2_w * (lo - 1.0);
            let upper = (1.0 - hi) * q0 + q1 - scene.sigma2_w * (hi - 1.0);
            assert!(lower >= -1e-8, "sample {i}: lower form {lower}");
            assert!(upper <= 1e-8, "sample {i}: upper form {upper}");
        }
    }

    #[test]
    fn robust_design_passes_worst_case_oracle() {
        let (scene, spec) = random_scene(2, 0.005);
        let mut rng = SeedSpec::new(6).stream("design", 0);
        let r = maximize_mi_robust(&scene, &spec, 1.0, 1e-3, 100, &mut rng).unwrap();
        let power = r.pair.power();
        assert!(power <= scene.p_total * (1.0 + 1e-9));
        assert!(metrics::sinr_bob(&scene, &r.pair.w0, &r.pair.w1) >= 1.0 - 1e-4);
        let mut orng = SeedSpec::new(6).stream("oracle", 0);
        let (wkl, arg) = worst_case_kl(&r.pair, &spec, &scene, 10_000, &mut orng);
        assert!(wkl <= spec.threshold() * (1.0 + 1e-6), "worst KL {wkl}");
        assert!(spec.error.as_ref().unwrap().contains(&arg, 1e-9));
    }

    #[test]
    fn worst_case_kl_edge_cases() {
        let (scene, spec) = random_scene(3, 0.005);
        let n = scene.n_antennas;
        // Zero communication beam: identically zero divergence.
        let silent = BeamformerPair {
            w0: scene.h_t.map(|x| x * 0.5),
            w1: CVec::zeros(n),
        };
        let mut rng = SeedSpec::new(7).stream("wkl", 0);
        let (kl, _) = worst_case_kl(&silent, &spec, &scene, 500, &mut rng);
        assert!(kl.abs() < 1e-15);

        // No uncertainty: the nominal KL at the estimate.
        let exact = RobustCovertSpec { error: None, ..spec.clone() };
        let pair = BeamformerPair {
            w0: scene.h_t.map(|x| x * 0.3),
            w1: scene.h_b.map(|x| x * 0.2),
        };
        let (kl0, _) = worst_case_kl(&pair, &exact, &scene, 10, &mut rng);
        assert_relative_eq!(
            kl0,
            exact.kl_at(&scene.h_w_est, &pair, scene.sigma2_w),
            epsilon = 1e-15
        );
    }

    #[test]
    fn worst_case_kl_grows_with_sample_budget() {
        let (scene, spec) = random_scene(4, 0.01);
        let pair = BeamformerPair {
            w0: scene.h_t.map(|x| x * 0.5),
            w1: scene.h_b.map(|x| x * 0.4),
        };
        let v1 = worst_case_kl(&pair, &spec, &scene, 200, &mut SeedSpec::new(8).stream("w", 0)).0;
        let v2 =
            worst_case_kl(&pair, &spec, &scene, 2000, &mut SeedSpec::new(8).stream("w", 0)).0;
        // Both include ascent, so the larger budget may only help slightly,
        // but it must never do worse than a tiny numerical slack.
        assert!(v2 >= v1 - 1e-12, "{v2} < {v1}");
    }

    #[test]
    fn kl01_direction_dominates_kl10() {
        // The reverse divergence constrains harder, so its optimum is lower.
        for seed in [5, 6] {
            let (scene, spec) = random_scene(seed, 0.001);
            let mut rng = SeedSpec::new(9).stream("dir", seed);
            let mi01 = maximize_mi_robust(&scene, &spec, 1.0, 1e-3, 100, &mut rng)
                .unwrap()
                .mi_bits;
            let spec10 = RobustCovertSpec { direction: KlDirection::Kl10, ..spec.clone() };
            let mut rng = SeedSpec::new(9).stream("dir10", seed);
            let mi10 = maximize_mi_robust(&scene, &spec10, 1.0, 1e-3, 100, &mut rng)
                .unwrap()
                .mi_bits;
            assert!(mi01 >= mi10 - 1e-6, "seed {seed}: {mi01} vs {mi10}");
        }
    }

    #[test]
    fn robust_is_conservative_versus_nominal() {
        let (scene, spec) = random_scene(7, 0.005);
        let mut rng = SeedSpec::new(10).stream("cons", 0);
        let robust = maximize_mi_robust(&scene, &spec, 1.0, 1e-3, 100, &mut rng).unwrap();
        let mut rng = SeedSpec::new(10).stream("cons", 1);
        let nominal = maximize_mi_nominal(&scene, &spec, 1.0, 1e-3, 100, &mut rng).unwrap();
        assert!(robust.mi_bits <= nominal.mi_bits + 1e-4);
    }

    #[test]
    fn nominal_design_can_violate_under_error() {
        // At least one of a handful of scenes must show the non-robust
        // baseline breaking covertness somewhere in the uncertainty set.
        let mut violated = 0;
        for seed in 0..5 {
            let (scene, spec) = random_scene(20 + seed, 0.005);
            let eps = (0.005f64 / 2.0).sqrt();
            let spec = RobustCovertSpec { epsilon: eps, ..spec };
            let mut rng = SeedSpec::new(11).stream("viol", seed);
            let Ok(nominal) = maximize_mi_nominal(&scene, &spec, 1.0, 1e-3, 100, &mut rng)
            else {
                continue;
            };
            let (wkl, _) = worst_case_kl(&nominal.pair, &spec, &scene, 3000, &mut rng);
            if wkl > spec.threshold() {
                violated += 1;
            }
        }
        assert!(violated >= 1, "no nominal design violated covertness");
    }

    #[test]
    fn robust_rate_design_meets_floor() {
        let (scene, spec) = random_scene(8, 0.001);
        let mut rng = SeedSpec::new(12).stream("rate", 0);
        let r = maximize_rate_robust(&scene, &spec, 1.0, 1e-3, 100, &mut rng).unwrap();
        assert!(r.mi_bits >= 1.0 - 1e-6);
        assert!(r.pair.power() <= scene.p_total * (1.0 + 1e-9));
        let mut orng = SeedSpec::new(12).stream("oracle", 0);
        let (wkl, _) = worst_case_kl(&r.pair, &spec, &scene, 5000, &mut orng);
        assert!(wkl <= spec.threshold() * (1.0 + 1e-6), "worst KL {wkl}");
    }

    #[test]
    fn tiny_uncertainty_approaches_nominal_optimum() {
        let (scene, spec) = random_scene(9, 1e-9);
        let mut rng = SeedSpec::new(13).stream("tiny", 0);
        let robust = maximize_mi_robust(&scene, &spec, 1.0, 1e-3, 100, &mut rng).unwrap();
        let mut rng = SeedSpec::new(13).stream("tiny", 1);
        let nominal = maximize_mi_nominal(&scene, &spec, 1.0, 1e-3, 100, &mut rng).unwrap();
        assert_relative_eq!(robust.mi_bits, nominal.mi_bits, max_relative = 1e-2);
    }

    #[test]
    fn perfect_design_also_passes_when_error_is_zero() {
        // Cross-module consistency: with exact CSI the perfect-null design
        // satisfies the interval trivially.
        let (scene, _) = random_scene(10, 0.005);
        let mut scene = scene;
        scene.h_w_est = scene.h_w_true.clone();
        let mut rng = SeedSpec::new(14).stream("x", 0);
        let r = perfect::maximize_mi_sdr(&scene, 1.0, 1e-3, 100, &mut rng).unwrap();
        verify_design(&scene, &r.pair, Some(1.0), None).unwrap();
        let spec = RobustCovertSpec {
            epsilon: 0.05,
            direction: KlDirection::Kl01,
            error: None,
        };
        let (wkl, _) = worst_case_kl(&r.pair, &spec, &scene, 10, &mut rng);
        assert!(wkl <= spec.threshold());
    }
}
