//! Batch experiment runner: Monte Carlo checks of the analytic detection
//! probabilities, empirical CDFs of achieved KL divergence under channel
//! error, and trend sweeps over the design parameters.
//!
//! All randomness flows through purpose-keyed streams of one master seed, and
//! result assembly is sorted, so a config plus a seed fully determines the
//! CSV bytes regardless of worker count. Wall times are reported out of band
//! (stderr and summaries) to keep the CSV deterministic.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{self, KlDirection, LambdaPair};
use crate::perfect::{self, DesignError, DesignResult};
use crate::robust::{self, RobustCovertSpec};
use crate::scene::{
    sample_ellipsoid_error, scene_from_config, EllipsoidMode, Scene, SceneConfig, SceneError,
    SeedSpec,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("no data rows in {0}")]
    NoData(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DetectionOracle,
    CdfKl,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    #[default]
    Sdr,
    Zf,
    Robust,
    NonRobust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    #[default]
    Mi,
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PTotalDbm,
    NAntennas,
    Epsilon,
    Upsilon,
    BetaSinr,
    GammaMi,
}

fn default_epsilon() -> f64 {
    0.05
}
fn default_beta() -> f64 {
    1.0
}
fn default_scenes() -> usize {
    100
}
fn default_err_samples() -> usize {
    10_000
}
fn default_det_samples() -> usize {
    1_000_000
}
fn default_zeta() -> f64 {
    perfect::DEFAULT_ZETA
}
fn default_trials() -> usize {
    perfect::DEFAULT_TRIALS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub scene: SceneConfig,
    #[serde(default)]
    pub design: DesignKind,
    #[serde(default)]
    pub objective: ObjectiveKind,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub direction: KlDirection,
    #[serde(default = "default_beta")]
    pub beta_sinr: f64,
    #[serde(default)]
    pub gamma_mi: f64,
    #[serde(default)]
    pub sweep_axis: Option<SweepAxis>,
    #[serde(default)]
    pub grid: Vec<f64>,
    #[serde(default = "default_scenes")]
    pub n_scenes: usize,
    #[serde(default = "default_err_samples")]
    pub n_error_samples: usize,
    #[serde(default = "default_det_samples")]
    pub n_detection_samples: usize,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.n_scenes < 1 || self.n_error_samples < 1 || self.n_detection_samples < 1 {
            return bad("all sample counts must be at least 1".into());
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        match self.kind {
            ExperimentKind::Sweep => {
                if self.sweep_axis.is_none() {
                    return bad("sweep requires sweep_axis".into());
                }
                if self.grid.is_empty() {
                    return bad("sweep requires a nonempty grid".into());
                }
                if self.grid.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("grid values must be strictly increasing".into());
                }
            }
            ExperimentKind::CdfKl => {
                if !matches!(self.design, DesignKind::Robust | DesignKind::NonRobust) {
                    return bad("cdf_kl requires design robust or non_robust".into());
                }
                if self.scene.csi_error.is_none() {
                    return bad("cdf_kl requires scene.csi_error".into());
                }
            }
            ExperimentKind::DetectionOracle => {}
        }
        if self.design == DesignKind::Zf && self.objective == ObjectiveKind::Rate {
            return bad("the zero-forcing pipeline only supports the mi objective".into());
        }
        Ok(())
    }
}

/// One output record. Design fields are empty when the design was infeasible
/// or the field does not apply to the run kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub scene_id: u64,
    pub axis_value: f64,
    pub mi_bits: Option<f64>,
    pub rate_bits: Option<f64>,
    pub kl01: Option<f64>,
    pub kl10: Option<f64>,
    pub p_fa: Option<f64>,
    pub p_md: Option<f64>,
    pub xi: Option<f64>,
    pub worst_kl: Option<f64>,
    pub feasible_flag: bool,
    /// Always zero in CSV output so identical seeds give identical bytes;
    /// measured times are carried in the run summary instead.
    pub wall_time_ms: u64,
}

impl ResultRow {
    fn empty(scene_id: u64, axis_value: f64) -> Self {
        ResultRow {
            scene_id,
            axis_value,
            mi_bits: None,
            rate_bits: None,
            kl01: None,
            kl10: None,
            p_fa: None,
            p_md: None,
            xi: None,
            worst_kl: None,
            feasible_flag: false,
            wall_time_ms: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SceneSummary {
    pub scene_id: u64,
    pub feasible: bool,
    pub violation_fraction: f64,
    pub worst_kl: f64,
    pub design_ms: u64,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub n_feasible: usize,
    pub mean_mi: f64,
    pub std_mi: f64,
    pub mean_rate: f64,
    pub std_rate: f64,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub cdf_summaries: Vec<SceneSummary>,
    pub sweep_summary: Vec<SweepPoint>,
    pub n_feasible: usize,
    pub n_designs: usize,
    pub total_design_ms: u64,
}

impl RunOutput {
    /// Exit-code contract: designs were attempted and none succeeded.
    pub fn all_infeasible(&self) -> bool {
        self.n_designs > 0 && self.n_feasible == 0
    }
}

/// Empirical false-alarm and missed-detection rates of the optimal-threshold
/// test, from exponential power draws under the two hypotheses.
pub fn empirical_detection_sim<R: Rng>(
    lp: &LambdaPair,
    n_samples: usize,
    rng: &mut R,
) -> (f64, f64) {
    let phi = metrics::optimal_threshold(lp);
    let draw = |lambda: f64, rng: &mut R| -> f64 {
        let u: f64 = rng.gen();
        -lambda * (1.0 - u).ln()
    };
    let mut fa = 0usize;
    for _ in 0..n_samples {
        if draw(lp.lambda0(), rng) > phi {
            fa += 1;
        }
    }
    let mut md = 0usize;
    for _ in 0..n_samples {
        if draw(lp.lambda1(), rng) <= phi {
            md += 1;
        }
    }
    (fa as f64 / n_samples as f64, md as f64 / n_samples as f64)
}

/// The lambda grid used by the detection oracle: base powers crossed with
/// power ratios, with the (1, 2) reference pair included.
pub fn detection_grid() -> Vec<(f64, f64)> {
    let bases = [0.5, 1.0, 2.0, 4.0, 8.0];
    let ratios = [1.1, 1.5, 2.0, 3.0, 5.0];
    let mut out = Vec::with_capacity(bases.len() * ratios.len());
    for b in bases {
        for r in ratios {
            out.push((b, b * r));
        }
    }
    out
}

fn run_detection_oracle(config: &ExperimentConfig) -> RunOutput {
    let seeds = SeedSpec::new(config.seed);
    let rows: Vec<ResultRow> = detection_grid()
        .par_iter()
        .enumerate()
        .map(|(i, &(l0, l1))| {
            let lp = LambdaPair::new(l0, l1).expect("grid pairs are ordered");
            let mut rng = seeds.stream("detect", i as u64);
            let (p_fa, p_md) = empirical_detection_sim(&lp, config.n_detection_samples, &mut rng);
            ResultRow {
                scene_id: i as u64,
                axis_value: lp.ratio(),
                mi_bits: None,
                rate_bits: None,
                kl01: Some(metrics::kl_p0_p1(&lp)),
                kl10: Some(metrics::kl_p1_p0(&lp)),
                p_fa: Some(p_fa),
                p_md: Some(p_md),
                xi: Some(p_fa + p_md),
                worst_kl: None,
                feasible_flag: true,
                wall_time_ms: 0,
            }
        })
        .collect();
    RunOutput { rows, ..Default::default() }
}

#[derive(Debug, Clone, Copy)]
struct DesignParams {
    epsilon: f64,
    beta_sinr: f64,
    gamma_mi: f64,
    upsilon_override: Option<f64>,
}

fn covert_spec(
    config: &ExperimentConfig,
    scene_cfg: &SceneConfig,
    params: &DesignParams,
) -> Result<RobustCovertSpec, SceneError> {
    let error = match (&scene_cfg.csi_error, params.upsilon_override) {
        (Some(c), Some(u)) => {
            let mut c = c.clone();
            c.upsilon = u;
            Some(c.build(scene_cfg.n_antennas)?)
        }
        (Some(c), None) => Some(c.build(scene_cfg.n_antennas)?),
        (None, Some(u)) if u > 0.0 => Some(
            crate::scene::EllipsoidError::spherical(scene_cfg.n_antennas, u)
                .expect("positive upsilon"),
        ),
        _ => None,
    };
    Ok(RobustCovertSpec { epsilon: params.epsilon, direction: config.direction, error })
}

fn run_design<R: Rng>(
    config: &ExperimentConfig,
    scene: &Scene,
    spec: &RobustCovertSpec,
    params: &DesignParams,
    rng: &mut R,
) -> Result<DesignResult, DesignError> {
    match (config.design, config.objective) {
        (DesignKind::Sdr, ObjectiveKind::Mi) => {
            perfect::maximize_mi_sdr(scene, params.beta_sinr, config.zeta, config.n_trials, rng)
        }
        (DesignKind::Sdr, ObjectiveKind::Rate) => {
            perfect::maximize_rate_perfect(scene, params.gamma_mi, config.zeta, config.n_trials, rng)
        }
        (DesignKind::Zf, _) => perfect::maximize_mi_zf(scene, params.beta_sinr),
        (DesignKind::Robust, ObjectiveKind::Mi) => robust::maximize_mi_robust(
            scene,
            spec,
            params.beta_sinr,
            config.zeta,
            config.n_trials,
            rng,
        ),
        (DesignKind::Robust, ObjectiveKind::Rate) => robust::maximize_rate_robust(
            scene,
            spec,
            params.gamma_mi,
            config.zeta,
            config.n_trials,
            rng,
        ),
        (DesignKind::NonRobust, ObjectiveKind::Mi) => {
            let nominal = RobustCovertSpec { error: None, ..spec.clone() };
            robust::maximize_mi_robust(
                scene,
                &nominal,
                params.beta_sinr,
                config.zeta,
                config.n_trials,
                rng,
            )
        }
        (DesignKind::NonRobust, ObjectiveKind::Rate) => {
            let nominal = RobustCovertSpec { error: None, ..spec.clone() };
            robust::maximize_rate_robust(
                scene,
                &nominal,
                params.gamma_mi,
                config.zeta,
                config.n_trials,
                rng,
            )
        }
    }
}

struct CdfSceneOutput {
    rows: Vec<ResultRow>,
    summary: SceneSummary,
}

fn run_cdf_scene(config: &ExperimentConfig, scene_id: u64) -> Result<CdfSceneOutput, SceneError> {
    let mut scene_cfg = config.scene.clone();
    scene_cfg.seed = config.seed;
    let scene = scene_from_config(&scene_cfg, scene_id)?;
    let params = DesignParams {
        epsilon: config.epsilon,
        beta_sinr: config.beta_sinr,
        gamma_mi: config.gamma_mi,
        upsilon_override: None,
    };
    let spec = covert_spec(config, &scene_cfg, &params)?;
    let seeds = SeedSpec::new(config.seed);
    let mut rng = seeds.stream("design", scene_id);
    let t0 = Instant::now();
    let design = run_design(config, &scene, &spec, &params, &mut rng);
    let design_ms = t0.elapsed().as_millis() as u64;

    let Ok(design) = design else {
        return Ok(CdfSceneOutput {
            rows: vec![ResultRow::empty(scene_id, f64::NAN)],
            summary: SceneSummary {
                scene_id,
                feasible: false,
                violation_fraction: 0.0,
                worst_kl: f64::NAN,
                design_ms,
            },
        });
    };

    let threshold = 2.0 * config.epsilon * config.epsilon;
    let err = spec.error.as_ref().expect("cdf_kl requires csi_error");
    let mut err_rng = seeds.stream("cdf_err", scene_id);
    let mut rows = Vec::with_capacity(config.n_error_samples);
    let mut violations = 0usize;
    // The sampled worst case is shared across this scene's rows.
    let mut wkl_rng = seeds.stream("cdf_wkl", scene_id);
    let (worst, _) = robust::worst_case_kl(&design.pair, &spec, &scene, 2000, &mut wkl_rng);
    for i in 0..config.n_error_samples {
        let mode = if i % 2 == 0 { EllipsoidMode::Interior } else { EllipsoidMode::Boundary };
        let dh = sample_ellipsoid_error(err, &mut err_rng, mode)?;
        let h = &scene.h_w_est + &dh;
        let lp = metrics::lambda_pair(&h, &design.pair.w0, &design.pair.w1, scene.sigma2_w)
            .expect("dimensions match");
        let kl01 = metrics::kl_p0_p1(&lp);
        let kl10 = metrics::kl_p1_p0(&lp);
        let achieved = match config.direction {
            KlDirection::Kl01 => kl01,
            KlDirection::Kl10 => kl10,
        };
        if achieved > threshold {
            violations += 1;
        }
        let det = metrics::detection_error_probs(&lp);
        rows.push(ResultRow {
            scene_id,
            axis_value: achieved,
            mi_bits: Some(design.mi_bits),
            rate_bits: Some(design.rate_bits),
            kl01: Some(kl01),
            kl10: Some(kl10),
            p_fa: Some(det.p_fa),
            p_md: Some(det.p_md),
            xi: Some(det.xi),
            worst_kl: Some(worst),
            feasible_flag: true,
            wall_time_ms: 0,
        });
    }
    Ok(CdfSceneOutput {
        rows,
        summary: SceneSummary {
            scene_id,
            feasible: true,
            violation_fraction: violations as f64 / config.n_error_samples as f64,
            worst_kl: worst,
            design_ms,
        },
    })
}

fn run_cdf_kl(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let outputs: Result<Vec<CdfSceneOutput>, SceneError> = (0..config.n_scenes as u64)
        .into_par_iter()
        .map(|scene_id| run_cdf_scene(config, scene_id))
        .collect();
    let mut outputs = outputs?;
    outputs.sort_by_key(|o| o.summary.scene_id);
    let mut out = RunOutput::default();
    for o in outputs {
        out.n_designs += 1;
        if o.summary.feasible {
            out.n_feasible += 1;
        }
        out.total_design_ms += o.summary.design_ms;
        out.rows.extend(o.rows);
        out.cdf_summaries.push(o.summary);
    }
    Ok(out)
}

fn apply_axis(
    axis: SweepAxis,
    value: f64,
    scene_cfg: &mut SceneConfig,
    params: &mut DesignParams,
) {
    match axis {
        SweepAxis::PTotalDbm => scene_cfg.p_total_dbm = value,
        SweepAxis::NAntennas => scene_cfg.n_antennas = value.round() as usize,
        SweepAxis::Epsilon => params.epsilon = value,
        SweepAxis::Upsilon => params.upsilon_override = Some(value),
        SweepAxis::BetaSinr => params.beta_sinr = value,
        SweepAxis::GammaMi => params.gamma_mi = value,
    }
}

fn run_sweep_task(
    config: &ExperimentConfig,
    scene_id: u64,
    axis_idx: usize,
) -> Result<(ResultRow, u64), SceneError> {
    let axis = config.sweep_axis.expect("validated");
    let value = config.grid[axis_idx];
    let mut scene_cfg = config.scene.clone();
    scene_cfg.seed = config.seed;
    let mut params = DesignParams {
        epsilon: config.epsilon,
        beta_sinr: config.beta_sinr,
        gamma_mi: config.gamma_mi,
        upsilon_override: None,
    };
    apply_axis(axis, value, &mut scene_cfg, &mut params);
    let scene = scene_from_config(&scene_cfg, scene_id)?;
    let spec = covert_spec(config, &scene_cfg, &params)?;
    let seeds = SeedSpec::new(config.seed);
    let mut rng = seeds.stream("design", scene_id * 10_000 + axis_idx as u64);
    let t0 = Instant::now();
    let design = run_design(config, &scene, &spec, &params, &mut rng);
    let ms = t0.elapsed().as_millis() as u64;
    let row = match design {
        Ok(d) => {
            let worst = if spec.error.is_some()
                && matches!(config.design, DesignKind::Robust | DesignKind::NonRobust)
            {
                let mut wrng = seeds.stream("sweep_wkl", scene_id * 10_000 + axis_idx as u64);
                Some(robust::worst_case_kl(&d.pair, &spec, &scene, 2000, &mut wrng).0)
            } else {
                None
            };
            let lp = metrics::lambda_pair(&scene.h_w_true, &d.pair.w0, &d.pair.w1, scene.sigma2_w)
                .expect("dimensions match");
            let det = metrics::detection_error_probs(&lp);
            ResultRow {
                scene_id,
                axis_value: value,
                mi_bits: Some(d.mi_bits),
                rate_bits: Some(d.rate_bits),
                kl01: Some(d.kl01),
                kl10: Some(d.kl10),
                p_fa: Some(det.p_fa),
                p_md: Some(det.p_md),
                xi: Some(det.xi),
                worst_kl: worst,
                feasible_flag: true,
                wall_time_ms: 0,
            }
        }
        Err(_) => ResultRow::empty(scene_id, value),
    };
    Ok((row, ms))
}

fn run_sweep(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let mut tasks = Vec::new();
    for scene_id in 0..config.n_scenes as u64 {
        for axis_idx in 0..config.grid.len() {
            tasks.push((scene_id, axis_idx));
        }
    }
    let results: Result<Vec<(ResultRow, u64)>, SceneError> = tasks
        .par_iter()
        .map(|&(s, a)| run_sweep_task(config, s, a))
        .collect();
    let mut rows_ms = results?;
    rows_ms.sort_by(|a, b| {
        a.0.scene_id
            .cmp(&b.0.scene_id)
            .then(a.0.axis_value.total_cmp(&b.0.axis_value))
    });
    let mut out = RunOutput::default();
    for (row, ms) in &rows_ms {
        out.n_designs += 1;
        if row.feasible_flag {
            out.n_feasible += 1;
        }
        out.total_design_ms += ms;
        out.rows.push(row.clone());
    }
    // Across-scene aggregates per grid point.
    for (axis_idx, &value) in config.grid.iter().enumerate() {
        let _ = axis_idx;
        let mis: Vec<f64> = out
            .rows
            .iter()
            .filter(|r| r.axis_value == value && r.feasible_flag)
            .filter_map(|r| r.mi_bits)
            .collect();
        let rates: Vec<f64> = out
            .rows
            .iter()
            .filter(|r| r.axis_value == value && r.feasible_flag)
            .filter_map(|r| r.rate_bits)
            .collect();
        let stat = |v: &[f64]| -> (f64, f64) {
            if v.is_empty() {
                return (f64::NAN, f64::NAN);
            }
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = if v.len() > 1 {
                v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() - 1) as f64
            } else {
                0.0
            };
            (mean, var.sqrt())
        };
        let (mean_mi, std_mi) = stat(&mis);
        let (mean_rate, std_rate) = stat(&rates);
        out.sweep_summary.push(SweepPoint {
            axis_value: value,
            n_feasible: mis.len(),
            mean_mi,
            std_mi,
            mean_rate,
            std_rate,
        });
    }
    Ok(out)
}

/// Runs an experiment on a worker pool of the given size (None = rayon's
/// default).
pub fn run(config: &ExperimentConfig, jobs: Option<usize>) -> Result<RunOutput, ExperimentError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    pool.install(|| match config.kind {
        ExperimentKind::DetectionOracle => Ok(run_detection_oracle(config)),
        ExperimentKind::CdfKl => run_cdf_kl(config),
        ExperimentKind::Sweep => run_sweep(config),
    })
}

/// CSV field order is the stable public schema.
pub const CSV_HEADER: &str =
    "scene_id,axis_value,mi_bits,rate_bits,kl01,kl10,p_fa,p_md,xi,worst_kl,feasible_flag,wall_time_ms";

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<(), ExperimentError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(true).from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv(path: &str) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let got = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != CSV_HEADER {
        return Err(ExperimentError::Config(format!(
            "unexpected CSV header {got:?}"
        )));
    }
    let rows: Result<Vec<ResultRow>, csv::Error> = rdr.deserialize().collect();
    let rows = rows?;
    if rows.is_empty() {
        return Err(ExperimentError::NoData(path.to_string()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_scene() -> SceneConfig {
        serde_json::from_str(
            r#"{"n_antennas":5,"theta_deg":20.0,"p_total_dbm":10.0}"#,
        )
        .unwrap()
    }

    fn detect_config(n: usize) -> ExperimentConfig {
        ExperimentConfig {
            kind: ExperimentKind::DetectionOracle,
            scene: base_scene(),
            design: DesignKind::Sdr,
            objective: ObjectiveKind::Mi,
            epsilon: 0.05,
            direction: KlDirection::Kl01,
            beta_sinr: 1.0,
            gamma_mi: 0.0,
            sweep_axis: None,
            grid: vec![],
            n_scenes: 1,
            n_error_samples: 1,
            n_detection_samples: n,
            zeta: 1e-3,
            n_trials: 50,
            seed: 7,
        }
    }

    #[test]
    fn detection_sim_matches_analytic_reference() {
        let lp = LambdaPair::new(1.0, 2.0).unwrap();
        let mut rng = SeedSpec::new(1).stream("det", 0);
        let (fa, md) = empirical_detection_sim(&lp, 1_000_000, &mut rng);
        assert!((fa - 0.25).abs() < 3e-3, "fa {fa}");
        assert!((md - 0.50).abs() < 3e-3, "md {md}");
    }

    #[test]
    fn detection_sim_blind_when_lambdas_coincide() {
        let lp = LambdaPair::new(1.0, 1.0 + 1e-12).unwrap();
        let mut rng = SeedSpec::new(2).stream("det", 0);
        let (fa, md) = empirical_detection_sim(&lp, 200_000, &mut rng);
        assert!((fa + md - 1.0).abs() < 5e-3);
    }

    #[test]
    fn detection_sim_deterministic_per_seed() {
        let lp = LambdaPair::new(2.0, 3.0).unwrap();
        let a = empirical_detection_sim(&lp, 10_000, &mut SeedSpec::new(3).stream("det", 1));
        let b = empirical_detection_sim(&lp, 10_000, &mut SeedSpec::new(3).stream("det", 1));
        assert_eq!(a, b);
    }

    #[test]
    fn csv_roundtrip_and_header() {
        let cfg = detect_config(1000);
        let out = run(&cfg, Some(2)).unwrap();
        let mut buf = Vec::new();
        write_csv(&out.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        let tmp = std::env::temp_dir().join("covertbeam_csv_roundtrip.csv");
        std::fs::write(&tmp, &buf).unwrap();
        let rows = read_csv(tmp.to_str().unwrap()).unwrap();
        assert_eq!(rows.len(), out.rows.len());
        assert_eq!(rows[0].p_fa, out.rows[0].p_fa);
    }

    #[test]
    fn runs_are_byte_identical_across_worker_counts() {
        let cfg = detect_config(20_000);
        let a = run(&cfg, Some(1)).unwrap();
        let b = run(&cfg, Some(4)).unwrap();
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        write_csv(&a.rows, &mut ba).unwrap();
        write_csv(&b.rows, &mut bb).unwrap();
        assert_eq!(ba, bb);
    }

    #[test]
    fn sweep_produces_sorted_feasible_rows() {
        let mut cfg = detect_config(1);
        cfg.kind = ExperimentKind::Sweep;
        cfg.sweep_axis = Some(SweepAxis::PTotalDbm);
        cfg.grid = vec![0.0, 10.0];
        cfg.n_scenes = 3;
        let out = run(&cfg, Some(2)).unwrap();
        assert_eq!(out.rows.len(), 6);
        assert!(out.rows.windows(2).all(|w| {
            (w[0].scene_id, w[0].axis_value) <= (w[1].scene_id, w[1].axis_value)
        }));
        assert_eq!(out.n_feasible, 6);
        // More power, more mutual information, scene by scene.
        for r in out.rows.chunks(2) {
            assert!(r[1].mi_bits.unwrap() > r[0].mi_bits.unwrap());
        }
        assert_eq!(out.sweep_summary.len(), 2);
        assert!(out.sweep_summary[1].mean_mi > out.sweep_summary[0].mean_mi);
    }

    #[test]
    fn cdf_kl_robust_design_never_violates() {
        let mut cfg = detect_config(1);
        cfg.kind = ExperimentKind::CdfKl;
        cfg.design = DesignKind::Robust;
        cfg.epsilon = (0.005f64 / 2.0).sqrt();
        cfg.scene.csi_error = Some(crate::scene::CsiErrorConfig {
            c_shape: crate::scene::ShapeSpec::Identity("identity".into()),
            upsilon: 0.005,
        });
        cfg.n_scenes = 3;
        cfg.n_error_samples = 500;
        let out = run(&cfg, Some(2)).unwrap();
        for s in &out.cdf_summaries {
            if s.feasible {
                assert_eq!(s.violation_fraction, 0.0, "scene {}", s.scene_id);
            }
        }
        assert!(out.n_feasible > 0);
    }

    #[test]
    fn config_validation_rejects_bad_grids() {
        let mut cfg = detect_config(1);
        cfg.kind = ExperimentKind::Sweep;
        cfg.sweep_axis = Some(SweepAxis::Epsilon);
        cfg.grid = vec![0.2, 0.1];
        assert!(matches!(run(&cfg, None), Err(ExperimentError::Config(_))));
        cfg.grid = vec![];
        assert!(matches!(run(&cfg, None), Err(ExperimentError::Config(_))));
    }
}
