//! Problem instances: steering vectors, Rayleigh channels, noise powers,
//! the warden-CSI uncertainty ellipsoid, and deterministic seeding.
//!
//! All powers are stored in linear milliwatts; configuration files carry dBm
//! and are converted once at ingestion.

use nalgebra::Cholesky;
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{dbm_to_mw, C64, CMat, CVec};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("config field `{field}`: {reason}")]
    BadConfig { field: &'static str, reason: String },
    #[error("negative variance {0} passed to a channel sampler")]
    NegativeVariance(f64),
    #[error("ellipsoid shape matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("ellipsoid shape matrix must be positive definite for a bounded uncertainty set")]
    ShapeNotPositiveDefinite,
    #[error("ellipsoid size upsilon must be > 0, got {0}")]
    BadUpsilon(f64),
    #[error("boundary sampling requires a nonsingular shape matrix")]
    SingularShape,
}

/// A problem instance: every channel, noise power, and the power budget.
///
/// `h_w_est` is what the transmitter designs against; `h_w_true` is what the
/// warden actually experiences. Under perfect warden CSI the two coincide.
#[derive(Debug, Clone)]
pub struct Scene {
    pub n_antennas: usize,
    /// Radar-target channel (a transmit steering vector).
    pub h_t: CVec,
    /// Radar-Bob channel.
    pub h_b: CVec,
    /// Radar-warden channel, ground truth.
    pub h_w_true: CVec,
    /// The transmitter's estimate of the radar-warden channel.
    pub h_w_est: CVec,
    /// Path-loss coefficient of the radar-target round trip.
    pub alpha: C64,
    /// Radar receive noise power, mW.
    pub sigma2_r: f64,
    /// Bob receive noise power, mW.
    pub sigma2_b: f64,
    /// Warden receive noise power, mW.
    pub sigma2_w: f64,
    /// Total transmit power budget, mW.
    pub p_total: f64,
}

impl Scene {
    /// The detection-only mutual-information ceiling: no feasibility level
    /// above `|alpha|^2 * P_total * ||h_T||^4 / sigma_R^2` can be met within
    /// the power budget (Cauchy-Schwarz on the radar beam).
    pub fn mi_level_upper_bound(&self) -> f64 {
        let ht2 = self.h_t.norm_squared();
        self.alpha.norm_sqr() * self.p_total * ht2 * ht2 / self.sigma2_r
    }
}

/// Ellipsoidal uncertainty set for the warden-channel error vector:
/// `{ dh : dh^H C dh <= upsilon }`.
#[derive(Debug, Clone)]
pub struct EllipsoidError {
    c_shape: CMat,
    upsilon: f64,
    chol: Cholesky<C64, nalgebra::Dyn>,
}

impl EllipsoidError {
    pub fn new(c_shape: CMat, upsilon: f64) -> Result<Self, SceneError> {
        if upsilon <= 0.0 {
            return Err(SceneError::BadUpsilon(upsilon));
        }
        let asym = (&c_shape - c_shape.adjoint()).norm();
        if asym > 1e-12 * (1.0 + c_shape.norm()) {
            return Err(SceneError::NotHermitian(asym));
        }
        let sym = (&c_shape + c_shape.adjoint()).scale(0.5);
        let chol =
            Cholesky::new(sym.clone()).ok_or(SceneError::ShapeNotPositiveDefinite)?;
        Ok(Self { c_shape: sym, upsilon, chol })
    }

    /// Identity shape: the scalar-parameterized set `||dh||^2 <= upsilon`.
    pub fn spherical(n: usize, upsilon: f64) -> Result<Self, SceneError> {
        Self::new(CMat::identity(n, n), upsilon)
    }

    pub fn c_shape(&self) -> &CMat {
        &self.c_shape
    }

    pub fn upsilon(&self) -> f64 {
        self.upsilon
    }

    pub fn dim(&self) -> usize {
        self.c_shape.nrows()
    }

    /// Quadratic form `dh^H C dh`.
    pub fn quad(&self, dh: &CVec) -> f64 {
        (dh.adjoint() * &self.c_shape * dh)[(0, 0)].re
    }

    /// Membership check with relative slack.
    pub fn contains(&self, dh: &CVec, slack: f64) -> bool {
        self.quad(dh) <= self.upsilon * (1.0 + slack)
    }

    /// Projects `dh` back onto the ellipsoid if it lies outside.
    pub fn clamp(&self, dh: &CVec) -> CVec {
        let q = self.quad(dh);
        if q <= self.upsilon {
            dh.clone()
        } else {
            dh.scale((self.upsilon / q).sqrt())
        }
    }
}

/// Sampling mode for [`sample_ellipsoid_error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipsoidMode {
    /// Uniform in the metric induced by the shape matrix.
    Interior,
    /// On the boundary: the quadratic form equals upsilon.
    Boundary,
}

/// Uniform-linear-array steering vector, half-wavelength spacing:
/// entry k is `exp(j * pi * k * sin(theta))`, k = 0..n-1.
pub fn steering_vector(theta: f64, n: usize) -> CVec {
    assert!(n >= 1, "steering vector needs at least one antenna");
    let s = theta.sin();
    CVec::from_fn(n, |k, _| {
        Complex::from_polar(1.0, std::f64::consts::PI * k as f64 * s)
    })
}

/// I.i.d. circularly symmetric complex Gaussian vector with per-entry
/// expected squared modulus `variance`.
pub fn sample_rayleigh<R: Rng>(
    n: usize,
    variance: f64,
    rng: &mut R,
) -> Result<CVec, SceneError> {
    if variance < 0.0 {
        return Err(SceneError::NegativeVariance(variance));
    }
    let s = (variance / 2.0).sqrt();
    Ok(CVec::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(s * re, s * im)
    }))
}

/// Draws an error vector from the uncertainty ellipsoid.
///
/// Interior mode is uniform under the metric induced by the shape matrix;
/// boundary mode returns a point with `dh^H C dh = upsilon` exactly.
pub fn sample_ellipsoid_error<R: Rng>(
    e: &EllipsoidError,
    rng: &mut R,
    mode: EllipsoidMode,
) -> Result<CVec, SceneError> {
    let n = e.dim();
    // Direction uniform on the unit sphere of C^n (2n real dimensions).
    let mut u = CVec::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re, im)
    });
    let nu = u.norm();
    if nu == 0.0 {
        u[0] = Complex::new(1.0, 0.0);
    } else {
        u.scale_mut(1.0 / nu);
    }
    let radius = match mode {
        EllipsoidMode::Boundary => 1.0,
        EllipsoidMode::Interior => {
            let t: f64 = rng.gen();
            t.powf(1.0 / (2.0 * n as f64))
        }
    };
    // Map the unit ball through L^{-H} where C = L L^H, so that
    // dh^H C dh = upsilon * radius^2.
    let v = e.chol.l().adjoint().solve_upper_triangular(&u).ok_or(
        SceneError::SingularShape,
    )?;
    Ok(v.scale(radius * e.upsilon.sqrt()))
}

/// JSON configuration for a scene; powers in dBm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneConfig {
    pub n_antennas: usize,
    #[serde(default)]
    pub theta_deg: f64,
    pub p_total_dbm: f64,
    #[serde(default)]
    pub sigma_r_dbm: f64,
    #[serde(default)]
    pub sigma_b_dbm: f64,
    #[serde(default)]
    pub sigma_w_dbm: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub csi_error: Option<CsiErrorConfig>,
    /// Per-entry variance of the radar-Bob channel.
    #[serde(default = "default_one")]
    pub channel_var_b: f64,
    /// Per-entry variance of the radar-warden channel.
    #[serde(default = "default_one")]
    pub channel_var_w: f64,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_one() -> f64 {
    1.0
}

/// Warden-CSI error set in configuration form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsiErrorConfig {
    /// Either the string "identity" or an explicit matrix of `[re, im]`
    /// entry pairs, row-major.
    #[serde(default = "default_shape")]
    pub c_shape: ShapeSpec,
    pub upsilon: f64,
}

fn default_shape() -> ShapeSpec {
    ShapeSpec::Identity(String::from("identity"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeSpec {
    Identity(String),
    Matrix(Vec<Vec<[f64; 2]>>),
}

impl CsiErrorConfig {
    pub fn build(&self, n: usize) -> Result<EllipsoidError, SceneError> {
        match &self.c_shape {
            ShapeSpec::Identity(s) if s == "identity" => {
                EllipsoidError::spherical(n, self.upsilon)
            }
            ShapeSpec::Identity(s) => Err(SceneError::BadConfig {
                field: "csi_error.c_shape",
                reason: format!("unknown shape keyword `{s}`"),
            }),
            ShapeSpec::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(SceneError::BadConfig {
                        field: "csi_error.c_shape",
                        reason: format!("expected a {n}x{n} matrix"),
                    });
                }
                let m = CMat::from_fn(n, n, |i, j| {
                    Complex::new(rows[i][j][0], rows[i][j][1])
                });
                EllipsoidError::new(m, self.upsilon)
            }
        }
    }
}

/// Purpose-keyed RNG streams fanned out from one master seed, so channels,
/// error draws, randomization, and Monte Carlo are independently
/// reproducible.
#[derive(Debug, Clone, Copy)]
pub struct SeedSpec {
    pub master: u64,
}

impl SeedSpec {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    /// A dedicated stream for (purpose, index).
    pub fn stream(&self, purpose: &str, index: u64) -> ChaCha8Rng {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in purpose.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(h ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1));
        rng
    }
}

/// Builds a deterministic scene from a validated configuration.
///
/// The target channel is the steering vector at `theta_deg`; Bob and warden
/// channels are Rayleigh draws from the config seed. `scene_index` selects an
/// independent channel realization for batch studies.
pub fn scene_from_config(config: &SceneConfig, scene_index: u64) -> Result<Scene, SceneError> {
    if config.n_antennas < 2 {
        return Err(SceneError::BadConfig {
            field: "n_antennas",
            reason: format!("need at least 2 antennas, got {}", config.n_antennas),
        });
    }
    for (field, v) in [
        ("channel_var_b", config.channel_var_b),
        ("channel_var_w", config.channel_var_w),
    ] {
        if v < 0.0 {
            return Err(SceneError::BadConfig {
                field,
                reason: format!("must be >= 0, got {v}"),
            });
        }
    }
    let n = config.n_antennas;
    let seeds = SeedSpec::new(config.seed);
    let mut rng = seeds.stream("channels", scene_index);
    let h_t = steering_vector(config.theta_deg.to_radians(), n);
    let h_b = sample_rayleigh(n, config.channel_var_b, &mut rng)?;
    let h_w_true = sample_rayleigh(n, config.channel_var_w, &mut rng)?;
    Ok(Scene {
        n_antennas: n,
        h_t,
        h_b,
        h_w_est: h_w_true.clone(),
        h_w_true,
        alpha: Complex::new(config.alpha, 0.0),
        sigma2_r: dbm_to_mw(config.sigma_r_dbm),
        sigma2_b: dbm_to_mw(config.sigma_b_dbm),
        sigma2_w: dbm_to_mw(config.sigma_w_dbm),
        p_total: dbm_to_mw(config.p_total_dbm),
    })
}

/// Applies an estimation error to the scene: the true warden channel becomes
/// `h_w_est + dh` while the design keeps using the estimate.
pub fn perturb_warden_channel(scene: &Scene, dh: &CVec) -> Scene {
    let mut s = scene.clone();
    s.h_w_true = &s.h_w_est + dh;
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steering_vector_zero_angle_is_all_ones() {
        let a = steering_vector(0.0, 4);
        for k in 0..4 {
            assert!((a[k] - Complex::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn steering_vector_norm_is_antenna_count() {
        for &n in &[1usize, 2, 5, 8] {
            for &theta in &[0.0, 0.3, -1.2, std::f64::consts::FRAC_PI_2] {
                let a = steering_vector(theta, n);
                assert!((a.norm_squared() - n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn steering_vector_broadside_two_elements() {
        let a = steering_vector(std::f64::consts::FRAC_PI_2, 2);
        assert!((a[0] - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!((a[1] - Complex::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rayleigh_zero_variance_is_zero_vector() {
        let mut rng = SeedSpec::new(1).stream("t", 0);
        let h = sample_rayleigh(6, 0.0, &mut rng).unwrap();
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn rayleigh_negative_variance_rejected() {
        let mut rng = SeedSpec::new(1).stream("t", 0);
        assert!(sample_rayleigh(3, -0.5, &mut rng).is_err());
    }

    #[test]
    fn rayleigh_seed_determinism() {
        let seeds = SeedSpec::new(42);
        let a = sample_rayleigh(5, 1.0, &mut seeds.stream("ch", 3)).unwrap();
        let b = sample_rayleigh(5, 1.0, &mut seeds.stream("ch", 3)).unwrap();
        assert_eq!(a, b);
        let c = sample_rayleigh(5, 1.0, &mut seeds.stream("ch", 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rayleigh_mean_power_law_of_large_numbers() {
        let mut rng = SeedSpec::new(7).stream("lln", 0);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h = sample_rayleigh(5, 1.0, &mut rng).unwrap();
            acc += h.norm_squared() / 5.0;
        }
        let mean = acc / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean per-entry power {mean}");
    }

    #[test]
    fn ellipsoid_interior_draws_stay_inside() {
        let e = EllipsoidError::spherical(4, 0.005).unwrap();
        let mut rng = SeedSpec::new(9).stream("ell", 0);
        for _ in 0..10_000 {
            let dh = sample_ellipsoid_error(&e, &mut rng, EllipsoidMode::Interior).unwrap();
            assert!(e.contains(&dh, 1e-12));
        }
    }

    #[test]
    fn ellipsoid_boundary_draws_hit_the_shell() {
        let e = EllipsoidError::spherical(5, 0.02).unwrap();
        let mut rng = SeedSpec::new(9).stream("ell", 1);
        for _ in 0..100 {
            let dh = sample_ellipsoid_error(&e, &mut rng, EllipsoidMode::Boundary).unwrap();
            assert!((dh.norm_squared() - 0.02).abs() <= 1e-12 * 0.02 + 1e-15);
        }
    }

    #[test]
    fn ellipsoid_rejects_bad_inputs() {
        assert!(EllipsoidError::spherical(3, 0.0).is_err());
        let mut m = CMat::identity(3, 3);
        m[(0, 1)] = Complex::new(0.5, 0.0); // not Hermitian
        assert!(EllipsoidError::new(m, 1.0).is_err());
        let z = CMat::zeros(3, 3);
        assert!(EllipsoidError::new(z, 1.0).is_err());
    }

    #[test]
    fn config_dbm_conversion() {
        let cfg = SceneConfig {
            n_antennas: 5,
            theta_deg: 0.0,
            p_total_dbm: 10.0,
            sigma_r_dbm: 0.0,
            sigma_b_dbm: 0.0,
            sigma_w_dbm: 0.0,
            alpha: 1.0,
            seed: 42,
            csi_error: None,
            channel_var_b: 1.0,
            channel_var_w: 1.0,
        };
        let scene = scene_from_config(&cfg, 0).unwrap();
        assert!((scene.p_total - 10.0).abs() < 1e-12);
        assert!((scene.sigma2_b - 1.0).abs() < 1e-12);
        assert_eq!(scene.alpha, Complex::new(1.0, 0.0));
        assert_eq!(scene.h_w_est, scene.h_w_true);
        assert!((scene.h_t.norm_squared() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn config_json_roundtrip_and_identity_shape() {
        let json = r#"{
            "n_antennas": 4, "theta_deg": 30.0, "p_total_dbm": 10.0,
            "sigma_r_dbm": 0.0, "sigma_b_dbm": 0.0, "sigma_w_dbm": 0.0,
            "alpha": 1.0, "seed": 3,
            "csi_error": { "c_shape": "identity", "upsilon": 0.005 }
        }"#;
        let cfg: SceneConfig = serde_json::from_str(json).unwrap();
        let e = cfg.csi_error.as_ref().unwrap().build(4).unwrap();
        assert!((e.upsilon() - 0.005).abs() < 1e-15);
        assert_eq!(e.c_shape(), &CMat::identity(4, 4));
    }
}
