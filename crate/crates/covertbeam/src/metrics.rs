//! Closed-form analytics of the warden's hypothesis test and the link
//! metrics: received-power parameters, both KL divergences, the optimal
//! detection threshold, false-alarm/missed-detection probabilities, radar
//! mutual information, Bob's rate, and the covert-interval roots.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::Scene;
use crate::CVec;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: channel has {channel} entries, beamformer has {beamformer}")]
    DimensionMismatch { channel: usize, beamformer: usize },
    #[error("lambda pair must satisfy lambda1 >= lambda0 > 0, got ({lambda0}, {lambda1})")]
    BadLambdaPair { lambda0: f64, lambda1: f64 },
    #[error("covertness parameter epsilon must be > 0, got {0}")]
    BadEpsilon(f64),
}

/// Mean received power at the warden under the two hypotheses.
///
/// `lambda0 = |h_W^H w0|^2 + sigma_W^2` (probing only) and
/// `lambda1 = lambda0 + |h_W^H w1|^2` (probing plus communication).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPair {
    lambda0: f64,
    lambda1: f64,
}

impl LambdaPair {
    pub fn new(lambda0: f64, lambda1: f64) -> Result<Self, MetricsError> {
        if !(lambda0 > 0.0) || lambda1 < lambda0 {
            return Err(MetricsError::BadLambdaPair { lambda0, lambda1 });
        }
        Ok(Self { lambda0, lambda1 })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Power ratio `lambda1 / lambda0 >= 1`.
    pub fn ratio(&self) -> f64 {
        self.lambda1 / self.lambda0
    }
}

/// The warden's detection operating point at the optimal threshold.
#[derive(Debug, Clone, Copy)]
pub struct DetectionReport {
    /// False-alarm probability.
    pub p_fa: f64,
    /// Missed-detection probability.
    pub p_md: f64,
    /// Total detection error, `p_fa + p_md`.
    pub xi: f64,
    /// Optimal power threshold, mW.
    pub phi_star: f64,
}

/// The two roots of `ln x + 1/x - 1 = 2 eps^2` bracketing 1.
#[derive(Debug, Clone, Copy)]
pub struct CovertInterval {
    pub a_bar: f64,
    pub b_bar: f64,
}

/// Which KL divergence the covertness constraint bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    /// `D(p0 || p1) <= 2 eps^2`.
    #[default]
    Kl01,
    /// `D(p1 || p0) <= 2 eps^2`.
    Kl10,
}

/// Received-power parameters at the warden for a beamformer pair.
pub fn lambda_pair(
    h_w: &CVec,
    w0: &CVec,
    w1: &CVec,
    sigma2_w: f64,
) -> Result<LambdaPair, MetricsError> {
    for w in [w0, w1] {
        if w.len() != h_w.len() {
            return Err(MetricsError::DimensionMismatch {
                channel: h_w.len(),
                beamformer: w.len(),
            });
        }
    }
    assert!(sigma2_w > 0.0, "warden noise power must be positive");
    let lambda0 = h_w.dotc(w0).norm_sqr() + sigma2_w;
    let lambda1 = lambda0 + h_w.dotc(w1).norm_sqr();
    Ok(LambdaPair { lambda0, lambda1 })
}

/// The covert function `f(x) = ln x + 1/x - 1`; both KL divergences are
/// this function evaluated at a power ratio.
pub fn covert_fn(x: f64) -> f64 {
    x.ln() + 1.0 / x - 1.0
}

/// `D(p0 || p1) = ln(l1/l0) + l0/l1 - 1`.
pub fn kl_p0_p1(lp: &LambdaPair) -> f64 {
    covert_fn(lp.ratio()).max(0.0)
}

/// `D(p1 || p0) = ln(l0/l1) + l1/l0 - 1`.
pub fn kl_p1_p0(lp: &LambdaPair) -> f64 {
    covert_fn(1.0 / lp.ratio()).max(0.0)
}

/// The KL divergence selected by `direction`.
pub fn kl_directed(lp: &LambdaPair, direction: KlDirection) -> f64 {
    match direction {
        KlDirection::Kl01 => kl_p0_p1(lp),
        KlDirection::Kl10 => kl_p1_p0(lp),
    }
}

/// Optimal warden threshold `phi* = l0 l1 ln(l1/l0) / (l1 - l0)`, extended
/// by continuity to `l0` when the hypotheses coincide.
pub fn optimal_threshold(lp: &LambdaPair) -> f64 {
    let r = lp.ratio();
    // Relative gaps below ~1e-9 lose all precision in ln(r)/(r-1); the limit
    // of the exact expression there is l0 * (1 + (r-1)/2 + ...).
    if r - 1.0 < 1e-9 {
        return lp.lambda0 * (1.0 + (r - 1.0) / 2.0);
    }
    lp.lambda0 * lp.lambda1 * (lp.lambda1 / lp.lambda0).ln()
        / (lp.lambda1 - lp.lambda0)
}

/// False-alarm, missed-detection, and total error probabilities at the
/// optimal threshold.
pub fn detection_error_probs(lp: &LambdaPair) -> DetectionReport {
    let phi_star = optimal_threshold(lp);
    let r = lp.ratio();
    let (p_fa, p_md) = if r - 1.0 < 1e-9 {
        // Blind warden limit: both exponents tend to -1.
        ((-1f64).exp(), 1.0 - (-1f64).exp())
    } else {
        let d = lp.lambda1 - lp.lambda0;
        let p_fa = r.powf(-lp.lambda1 / d);
        let p_md = 1.0 - r.powf(-lp.lambda0 / d);
        (p_fa, p_md)
    };
    DetectionReport { p_fa, p_md, xi: p_fa + p_md, phi_star }
}

/// Total variation distance between the two received-power distributions,
/// `exp(-phi*/l1) - exp(-phi*/l0)`; the optimal total error is one minus it.
pub fn total_variation(lp: &LambdaPair) -> f64 {
    let phi = optimal_threshold(lp);
    (-phi / lp.lambda1).exp() - (-phi / lp.lambda0).exp()
}

/// Solves `ln x + 1/x - 1 = 2 eps^2` for the root below 1 and the root
/// above 1, to residual 1e-10 or better.
pub fn covert_interval(epsilon: f64) -> Result<CovertInterval, MetricsError> {
    if !(epsilon > 0.0) {
        return Err(MetricsError::BadEpsilon(epsilon));
    }
    let target = 2.0 * epsilon * epsilon;
    // f is decreasing on (0,1) and increasing on (1,inf) with f(1) = 0.
    let lo_bracket = (-target - 2.0).exp().max(1e-12);
    let a_bar = solve_covert_root(lo_bracket, 1.0, target);
    let mut hi = 1.0 + 4.0 * epsilon + 8.0 * epsilon * epsilon;
    while covert_fn(hi) < target {
        hi *= 2.0;
    }
    let b_bar = solve_covert_root(1.0, hi, target);
    Ok(CovertInterval { a_bar, b_bar })
}

/// Bracketed bisection refined by Newton on `f(x) - target`.
fn solve_covert_root(mut lo: f64, mut hi: f64, target: f64) -> f64 {
    let g = |x: f64| covert_fn(x) - target;
    debug_assert!(g(lo) * g(hi) <= 0.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        // f'(x) = 1/x - 1/x^2
        let deriv = 1.0 / x - 1.0 / (x * x);
        if deriv.abs() < 1e-300 {
            break;
        }
        let step = g(x) / deriv;
        let next = x - step;
        if next > 0.0 {
            x = next;
        }
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

/// Radar mutual information in bits:
/// `0.5 * log2(1 + |a|^2 |h_T^H w0|^2 ||h_T||^2 /
///  (|a|^2 |h_T^H w1|^2 ||h_T||^2 + sigma_R^2))`.
pub fn mi_radar(scene: &Scene, w0: &CVec, w1: &CVec) -> f64 {
    let a2 = scene.alpha.norm_sqr();
    let ht2 = scene.h_t.norm_squared();
    let sig = a2 * scene.h_t.dotc(w0).norm_sqr() * ht2;
    let intf = a2 * scene.h_t.dotc(w1).norm_sqr() * ht2 + scene.sigma2_r;
    0.5 * (1.0 + sig / intf).log2()
}

/// Bob's SINR: `|h_B^H w1|^2 / (|h_B^H w0|^2 + sigma_B^2)`.
pub fn sinr_bob(scene: &Scene, w0: &CVec, w1: &CVec) -> f64 {
    let sig = scene.h_b.dotc(w1).norm_sqr();
    let intf = scene.h_b.dotc(w0).norm_sqr() + scene.sigma2_b;
    sig / intf
}

/// Bob's achievable rate `log2(1 + SINR)` in bits/s/Hz.
pub fn rate_bob(scene: &Scene, w0: &CVec, w1: &CVec) -> f64 {
    (1.0 + sinr_bob(scene, w0, w1)).log2()
}

/// Converts a rate floor in bits/s/Hz to the SINR floor the solved
/// formulations use.
pub fn rate_to_sinr_floor(rate_bits: f64) -> f64 {
    2f64.powf(rate_bits) - 1.0
}

/// Converts a mutual-information floor in bits to the level-domain floor
/// (inverts the half-log2).
pub fn mi_to_level_floor(gamma_bits: f64) -> f64 {
    4f64.powf(gamma_bits) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{steering_vector, SeedSpec};
    use crate::C64;
    use num_complex::Complex;
    use proptest::prelude::*;
    use rand::Rng;

    fn unit(n: usize, k: usize) -> CVec {
        let mut v = CVec::zeros(n);
        v[k] = Complex::new(1.0, 0.0);
        v
    }

    #[test]
    fn lambda_pair_direct_arithmetic() {
        let h = unit(3, 0);
        let lp = lambda_pair(&h, &unit(3, 0).scale(2.0), &unit(3, 0), 1.0).unwrap();
        assert!((lp.lambda0() - 5.0).abs() < 1e-12);
        assert!((lp.lambda1() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_pair_zero_beams() {
        let h = unit(4, 1);
        let z = CVec::zeros(4);
        let lp = lambda_pair(&h, &z, &z, 1.0).unwrap();
        assert_eq!((lp.lambda0(), lp.lambda1()), (1.0, 1.0));
        let lp2 = lambda_pair(&h, &unit(4, 1), &z, 1.0).unwrap();
        assert_eq!(lp2.lambda0(), lp2.lambda1());
    }

    #[test]
    fn lambda_pair_dimension_mismatch() {
        let h = unit(3, 0);
        assert!(lambda_pair(&h, &unit(4, 0), &unit(3, 0), 1.0).is_err());
    }

    #[test]
    fn kl_values_at_one_two() {
        let lp = LambdaPair::new(1.0, 2.0).unwrap();
        let d01 = kl_p0_p1(&lp);
        let d10 = kl_p1_p0(&lp);
        assert!((d01 - (2f64.ln() - 0.5)).abs() < 1e-12);
        assert!((d10 - (1.0 - 2f64.ln())).abs() < 1e-12);
        // The reverse direction is the stricter one for the same pair.
        assert!(d10 > d01);
    }

    #[test]
    fn kl_zero_iff_equal() {
        let lp = LambdaPair::new(3.0, 3.0).unwrap();
        assert_eq!(kl_p0_p1(&lp), 0.0);
        assert_eq!(kl_p1_p0(&lp), 0.0);
    }

    #[test]
    fn threshold_at_one_two() {
        let lp = LambdaPair::new(1.0, 2.0).unwrap();
        let phi = optimal_threshold(&lp);
        assert!((phi - 2.0 * 2f64.ln()).abs() < 1e-12);
        // Densities are equal at the threshold (likelihood ratio = 1).
        let p0 = (-phi / 1.0).exp() / 1.0;
        let p1 = (-phi / 2.0).exp() / 2.0;
        assert!((p0 - p1).abs() < 1e-12);
    }

    #[test]
    fn threshold_degenerate_limit() {
        let lp = LambdaPair::new(1.0, 1.0).unwrap();
        assert!((optimal_threshold(&lp) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detection_probs_at_one_two() {
        let lp = LambdaPair::new(1.0, 2.0).unwrap();
        let rep = detection_error_probs(&lp);
        assert!((rep.p_fa - 0.25).abs() < 1e-12);
        assert!((rep.p_md - 0.5).abs() < 1e-12);
        assert!((rep.xi - 0.75).abs() < 1e-12);
    }

    #[test]
    fn detection_probs_blind_warden() {
        let lp = LambdaPair::new(2.5, 2.5).unwrap();
        let rep = detection_error_probs(&lp);
        assert!((rep.xi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covert_interval_roots_and_ordering() {
        for &eps in &[0.01, 0.05, 0.1, 0.2] {
            let t = 2.0 * eps * eps;
            let iv = covert_interval(eps).unwrap();
            assert!(iv.a_bar < 1.0 && iv.b_bar > 1.0);
            assert!((covert_fn(iv.a_bar) - t).abs() <= 1e-10);
            assert!((covert_fn(iv.b_bar) - t).abs() <= 1e-10);
            // 1/a <= b: the reverse-KL constraint is the stricter one.
            assert!(1.0 / iv.a_bar <= iv.b_bar);
            assert!(1.0 / iv.a_bar < iv.b_bar, "strict for eps > 0");
        }
    }

    #[test]
    fn covert_interval_shrinks_to_one() {
        let iv = covert_interval(1e-6).unwrap();
        assert!((iv.a_bar - 1.0).abs() < 1e-2);
        assert!((iv.b_bar - 1.0).abs() < 1e-2);
        assert!(iv.a_bar < 1.0 && iv.b_bar > 1.0);
    }

    #[test]
    fn covert_interval_large_epsilon_bracket_extends() {
        let iv = covert_interval(1.0).unwrap();
        assert!((covert_fn(iv.b_bar) - 2.0).abs() <= 1e-10);
    }

    fn test_scene(n: usize) -> Scene {
        Scene {
            n_antennas: n,
            h_t: steering_vector(0.3, n),
            h_b: unit(n, 0).scale(1.5),
            h_w_true: unit(n, 1),
            h_w_est: unit(n, 1),
            alpha: Complex::new(1.0, 0.0),
            sigma2_r: 1.0,
            sigma2_b: 1.0,
            sigma2_w: 1.0,
            p_total: 10.0,
        }
    }

    #[test]
    fn mi_zero_radar_beam() {
        let s = test_scene(5);
        let z = CVec::zeros(5);
        assert_eq!(mi_radar(&s, &z, &z), 0.0);
    }

    #[test]
    fn mi_aligned_full_power() {
        // w0 = sqrt(10) h_T/||h_T||, w1 = 0, N=5: MI = 0.5*log2(1 + 250).
        let s = test_scene(5);
        let w0 = s.h_t.scale((10.0 / s.h_t.norm_squared()).sqrt());
        let z = CVec::zeros(5);
        let mi = mi_radar(&s, &w0, &z);
        assert!((mi - 0.5 * (251f64).log2()).abs() < 1e-10, "mi = {mi}");
    }

    #[test]
    fn mi_unchanged_by_target_orthogonal_interference() {
        let s = test_scene(5);
        let w0 = s.h_t.scale(0.7);
        // Build w1 orthogonal to h_T.
        let c = s.h_t.dotc(&unit(5, 0)) / C64::from(s.h_t.norm_squared());
        let w1 = unit(5, 0) - s.h_t.map(|x| x * c);
        assert!(s.h_t.dotc(&w1).norm() < 1e-12);
        let z = CVec::zeros(5);
        assert!((mi_radar(&s, &w0, &w1) - mi_radar(&s, &w0, &z)).abs() < 1e-12);
    }

    #[test]
    fn rate_simple_cases() {
        let s = test_scene(4);
        let z = CVec::zeros(4);
        assert_eq!(rate_bob(&s, &z, &z), 0.0);
        // h_B = 1.5 e0; choose w1 so |h_B^H w1|^2 = sigma_B^2 -> 1 bit.
        let w1 = unit(4, 0).scale(1.0 / 1.5);
        assert!((rate_bob(&s, &z, &w1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pinsker_and_total_variation_random_pairs() {
        let mut rng = SeedSpec::new(11).stream("pinsker", 0);
        for _ in 0..10_000 {
            let l0 = 0.1 + 5.0 * rng.gen::<f64>();
            let extra = 5.0 * rng.gen::<f64>();
            let lp = LambdaPair::new(l0, l0 + extra).unwrap();
            let rep = detection_error_probs(&lp);
            let tv = total_variation(&lp);
            assert!((rep.xi - (1.0 - tv)).abs() < 1e-12);
            let bound01 = (kl_p0_p1(&lp) / 2.0).sqrt();
            let bound10 = (kl_p1_p0(&lp) / 2.0).sqrt();
            assert!(1.0 - rep.xi <= bound01 + 1e-12);
            assert!(1.0 - rep.xi <= bound10 + 1e-12);
        }
    }

    #[test]
    fn threshold_optimality_on_a_grid() {
        let mut rng = SeedSpec::new(13).stream("thresh", 0);
        for _ in 0..200 {
            let l0 = 0.2 + 3.0 * rng.gen::<f64>();
            let lp = LambdaPair::new(l0, l0 + 0.05 + 3.0 * rng.gen::<f64>()).unwrap();
            let rep = detection_error_probs(&lp);
            let xi_at = |phi: f64| {
                let p_fa = (-phi / lp.lambda0()).exp();
                let p_md = 1.0 - (-phi / lp.lambda1()).exp();
                p_fa + p_md
            };
            for k in 0..100 {
                let phi = rep.phi_star * (0.5 + 0.01 * k as f64);
                assert!(rep.xi <= xi_at(phi) + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn prop_kl_nonnegative_and_joint_vanishing(
            l0 in 1e-3f64..10.0, extra in 0f64..10.0
        ) {
            let lp = LambdaPair::new(l0, l0 + extra).unwrap();
            let d01 = kl_p0_p1(&lp);
            let d10 = kl_p1_p0(&lp);
            prop_assert!(d01 >= 0.0 && d10 >= 0.0);
            if extra == 0.0 {
                prop_assert!(d01 == 0.0 && d10 == 0.0);
            } else if extra > 1e-6 {
                prop_assert!(d01 > 0.0 && d10 > 0.0);
            }
        }

        #[test]
        fn prop_rate_matches_sinr((seed, p0, p1) in (0u64..1000, 0f64..4.0, 0f64..4.0)) {
            let mut rng = SeedSpec::new(seed).stream("prop", 0);
            let s = test_scene(4);
            let w0 = crate::scene::sample_rayleigh(4, p0, &mut rng).unwrap();
            let w1 = crate::scene::sample_rayleigh(4, p1, &mut rng).unwrap();
            let r = rate_bob(&s, &w0, &w1);
            let si = sinr_bob(&s, &w0, &w1);
            prop_assert!((r - (1.0 + si).log2()).abs() < 1e-12);
        }

        #[test]
        fn prop_threshold_between_lambdas(l0 in 1e-2f64..10.0, extra in 0f64..20.0) {
            let lp = LambdaPair::new(l0, l0 + extra).unwrap();
            let phi = optimal_threshold(&lp);
            prop_assert!(phi >= lp.lambda0() - 1e-9 && phi <= lp.lambda1() + 1e-9);
        }
    }
}
