//! Physical constants of the downlink and the quantities derived from them.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the LED/photodiode link.
///
/// Angles are stored in radians; use [`SystemParams::with_angles_deg`] at
/// configuration boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Noise power spectral density at the photodiode, A²/Hz.
    pub noise_psd: f64,
    /// Modulation bandwidth, Hz.
    pub bandwidth: f64,
    /// Photodiode area, m².
    pub pd_area: f64,
    /// Photodiode responsivity, A/W.
    pub responsivity: f64,
    /// Number of PAM intensity levels.
    pub pam_order: u32,
    /// Optical power constant (the lowest PAM level), W.
    pub power_constant: f64,
    /// Photodiode field of view, rad. Only π/2 is supported.
    pub field_of_view: f64,
    /// LED half-power semi-angle, rad.
    pub half_power_angle: f64,
    /// Operating temperature, K. Carried for provenance; no formula uses it.
    pub temperature: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            noise_psd: 4.14e-21,
            bandwidth: 40e6,
            pd_area: 1e-4,
            responsivity: 0.1,
            pam_order: 8,
            power_constant: 1.0,
            field_of_view: FRAC_PI_2,
            half_power_angle: 60f64.to_radians(),
            temperature: 300.0,
        }
    }
}

impl SystemParams {
    pub fn with_angles_deg(mut self, field_of_view_deg: f64, half_power_angle_deg: f64) -> Self {
        self.field_of_view = field_of_view_deg.to_radians();
        self.half_power_angle = half_power_angle_deg.to_radians();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("noise_psd", self.noise_psd),
            ("bandwidth", self.bandwidth),
            ("pd_area", self.pd_area),
            ("responsivity", self.responsivity),
            ("power_constant", self.power_constant),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(
                    field,
                    format!("{value} must be finite and > 0"),
                ));
            }
        }
        if self.pam_order < 2 {
            return Err(Error::invalid(
                "pam_order",
                format!("{} must be >= 2", self.pam_order),
            ));
        }
        if !(self.half_power_angle > 0.0 && self.half_power_angle < FRAC_PI_2) {
            return Err(Error::invalid(
                "half_power_angle",
                format!("{} rad must lie in (0, pi/2)", self.half_power_angle),
            ));
        }
        // The gain model has no field-of-view cutoff, so every other value
        // would silently produce wrong gains.
        if (self.field_of_view - FRAC_PI_2).abs() > 1e-9 {
            return Err(Error::invalid(
                "field_of_view",
                format!(
                    "{} rad; only pi/2 (90 deg) is supported",
                    self.field_of_view
                ),
            ));
        }
        Ok(())
    }

    pub fn lambertian_order(&self) -> f64 {
        -std::f64::consts::LN_2 / self.half_power_angle.cos().ln()
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }

    /// Average emitted optical power `A·M`, W.
    pub fn mean_optical_power(&self) -> f64 {
        self.power_constant * f64::from(self.pam_order)
    }

    /// Validates `self` and derives the height-dependent constants.
    pub fn derive(&self, height: f64) -> Result<DerivedParams> {
        self.validate()?;
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::invalid(
                "height",
                format!("{height} must be finite and > 0"),
            ));
        }
        let m = self.lambertian_order();
        let levels = f64::from(self.pam_order);
        let lambert = (m + 1.0) * self.pd_area * height.powf(m + 1.0);
        let amplitude = self.power_constant * self.responsivity;
        let derived = DerivedParams {
            height,
            lambertian_order: m,
            decay_exponent: m + 3.0,
            noise_variance: self.noise_variance(),
            mean_optical_power: self.mean_optical_power(),
            mean_prefactor: amplitude * levels * lambert / (2.0 * PI),
            variance_prefactor: amplitude * amplitude * (levels * levels - 1.0) * lambert * lambert
                / (12.0 * PI * PI),
        };
        if !(derived.variance_prefactor > 0.0 && derived.variance_prefactor.is_finite()) {
            return Err(Error::invalid(
                "height",
                format!("{height} m with Lambertian order {m:.3} puts the gain prefactors outside f64 range"),
            ));
        }
        Ok(derived)
    }
}

/// Constants derived from [`SystemParams`] for one mounting height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Mounting height these prefactors were derived for, m.
    pub height: f64,
    /// Lambertian emission order `m`.
    pub lambertian_order: f64,
    /// Exponent `m + 3` of the line-of-sight gain.
    pub decay_exponent: f64,
    /// Receiver noise variance `N_o·W`, A².
    pub noise_variance: f64,
    /// Average emitted optical power, W.
    pub mean_optical_power: f64,
    /// Prefactor of the interference-mean lattice sum.
    pub mean_prefactor: f64,
    /// Prefactor of the interference-variance lattice sum.
    pub variance_prefactor: f64,
}
