//! Per-location link metrics and the search for the best reuse factor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{InterferenceMoments, MomentMethod};
use crate::lattice::{self, LatticeSpec, LedIndex, ReceiverPos};
use crate::params::{DerivedParams, SystemParams};
use crate::specfun::q_func;

/// Link quality at one receiver position for one reuse factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    /// Union-bound symbol error probability, clamped to 1.
    pub p_e: f64,
    /// Signal to interference-plus-noise ratio.
    pub gamma: f64,
    /// `log2(1 + gamma) / K²`, bits/s/Hz.
    pub r_spectral: f64,
    /// `bandwidth * r_spectral`, bits/s.
    pub r_reported: f64,
    /// `r_reported * (1 - p_e)`, bits/s.
    pub goodput: f64,
    /// Distance between adjacent constellation points, W.
    pub d: f64,
    pub moments: InterferenceMoments,
}

/// Outcome of [`optimize_k`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub k_star: u32,
    pub g_star: f64,
    /// Metrics for every K in the range, ascending.
    pub trace: Vec<(u32, LinkMetrics)>,
}

/// Adjacent constellation distance `2·A·G₀₀(z)` for the tagged LED.
pub fn constellation_distance(
    pos: ReceiverPos,
    spec: &LatticeSpec,
    sp: &SystemParams,
    derived: &DerivedParams,
) -> f64 {
    2.0 * sp.power_constant
        * lattice::channel_gain(LedIndex::TAGGED, pos, spec, derived, sp.pd_area)
}

/// Union bound on the symbol error probability, clamped to `[0, 1]`.
///
/// The interference mean shifts the decision margin and its variance adds to
/// the receiver noise.
pub fn error_probability(
    moments: &InterferenceMoments,
    d: f64,
    sp: &SystemParams,
    derived: &DerivedParams,
) -> f64 {
    let levels = f64::from(sp.pam_order);
    let margin = sp.responsivity * d / 2.0 - moments.mean;
    let spread = (derived.noise_variance + moments.variance).sqrt();
    let bound = 2.0 * (levels - 1.0) / levels * q_func(margin / spread);
    bound.min(1.0)
}

/// Electrical SINR of the tagged LED at `pos`.
pub fn sinr(
    pos: ReceiverPos,
    spec: &LatticeSpec,
    derived: &DerivedParams,
    moments: &InterferenceMoments,
) -> f64 {
    let r2 = pos.radius_sq() + spec.height * spec.height;
    derived.mean_prefactor.powi(2) * r2.powf(-derived.decay_exponent)
        / (moments.variance + derived.noise_variance)
}

/// All link metrics at `pos` for the reuse factor in `spec`.
pub fn metrics(
    pos: ReceiverPos,
    spec: &LatticeSpec,
    sp: &SystemParams,
    derived: &DerivedParams,
    method: MomentMethod,
) -> Result<LinkMetrics> {
    sp.validate()?;
    let moments = method.evaluate(pos, spec, derived)?;
    Ok(from_moments(pos, spec, sp, derived, moments))
}

/// Link metrics for precomputed interference moments.
pub fn from_moments(
    pos: ReceiverPos,
    spec: &LatticeSpec,
    sp: &SystemParams,
    derived: &DerivedParams,
    moments: InterferenceMoments,
) -> LinkMetrics {
    let d = constellation_distance(pos, spec, sp, derived);
    let p_e = error_probability(&moments, d, sp, derived);
    let gamma = sinr(pos, spec, derived, &moments);
    let k = f64::from(spec.reuse);
    let r_spectral = (1.0 + gamma).log2() / (k * k);
    let r_reported = sp.bandwidth * r_spectral;
    LinkMetrics {
        p_e,
        gamma,
        r_spectral,
        r_reported,
        goodput: r_reported * (1.0 - p_e),
        d,
        moments,
    }
}

/// Exhaustive search for the reuse factor with the largest goodput.
///
/// `template` supplies spacing and height; its reuse factor is ignored. Ties
/// go to the smallest K.
pub fn optimize_k(
    pos: ReceiverPos,
    template: &LatticeSpec,
    sp: &SystemParams,
    derived: &DerivedParams,
    method: MomentMethod,
    k_min: u32,
    k_max: u32,
) -> Result<OptResult> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::EmptyRange {
            min: k_min,
            max: k_max,
        });
    }
    let trace = (k_min..=k_max)
        .into_par_iter()
        .map(|k| metrics(pos, &template.with_reuse(k), sp, derived, method).map(|m| (k, m)))
        .collect::<Result<Vec<_>>>()?;

    let (mut k_star, mut g_star) = (trace[0].0, trace[0].1.goodput);
    for &(k, ref m) in &trace[1..] {
        if m.goodput > g_star {
            k_star = k;
            g_star = m.goodput;
        }
    }
    Ok(OptResult {
        k_star,
        g_star,
        trace,
    })
}
