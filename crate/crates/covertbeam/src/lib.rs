//! Covert beamformer design for a joint radar-sensing-and-communication
//! transmitter.
//!
//! The radar probes a target while covertly communicating with a legitimate
//! receiver; a warden observes the transmission and runs a binary hypothesis
//! test for the presence of the communication signal. Designs bound the
//! Kullback-Leibler divergence between the warden's received-power
//! distributions under the two hypotheses, which lower-bounds the warden's
//! total detection error.
//!
//! Modules:
//! - [`scene`]: problem instances (channels, noise powers, power budget,
//!   warden-CSI uncertainty ellipsoid) and deterministic sampling.
//! - [`metrics`]: closed-form analytics (received-power parameters, KL
//!   divergences, optimal threshold, detection error probabilities, radar
//!   mutual information, communication rate, covert-interval roots).
//! - [`conic`]: a dense primal-dual interior-point solver for the small
//!   complex-Hermitian semidefinite programs all designs reduce to.
//! - [`perfect`]: designs under exactly known warden CSI (semidefinite
//!   relaxation with bisection, zero-forcing pipeline, rate maximization).
//! - [`robust`]: designs under ellipsoidal warden-CSI uncertainty
//!   (S-procedure LMIs, conservative SDP, worst-case KL verification).
//! - [`experiment`]: batch experiment runner (Monte Carlo detection oracle,
//!   KL CDF studies, trend sweeps, CSV emission).
//! - [`plot`]: deterministic SVG rendering of experiment CSV output.

pub mod conic;
pub mod experiment;
pub mod metrics;
pub mod perfect;
pub mod plot;
pub mod robust;
pub mod scene;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMat = DMatrix<C64>;
/// Dense complex vector.
pub type CVec = DVector<C64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;
/// Dense real vector.
pub type RVec = DVector<f64>;

/// Converts a dBm quantity to linear milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Converts linear milliwatts to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}
