//! Fourier-Bessel closed forms for the mean and variance of the co-channel
//! interference current.
//!
//! Poisson summation turns the lattice sum `Σ (D²+h²)^(-s)` into a smooth
//! continuum term, minus the tagged LED, plus a Fourier series whose
//! coefficients are `K_{s-1}` Bessel functions of `2π h |(w,f)| / a`. Only the
//! quadrant `w, f >= 0` is summed; interior terms stand for four mirror
//! images `(±w, ±f)` and axis terms (`w = 0` or `f = 0`) for two, which is why
//! axis terms carry half the weight of interior ones.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeSpec, ReceiverPos};
use crate::params::DerivedParams;
use crate::specfun::{bessel_k, gamma};

/// Relative size of the first omitted Fourier shell at which adaptive truncation stops.
pub const ADAPTIVE_TOLERANCE: f64 = 1e-15;
const MAX_ADAPTIVE_ORDER: u32 = 400;

/// Number of Fourier terms kept along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeriesOrder {
    pub x_terms: u32,
    pub y_terms: u32,
}

impl SeriesOrder {
    pub const fn new(x_terms: u32, y_terms: u32) -> Self {
        SeriesOrder { x_terms, y_terms }
    }

    pub const fn square(n: u32) -> Self {
        SeriesOrder::new(n, n)
    }
}

impl Default for SeriesOrder {
    fn default() -> Self {
        SeriesOrder::square(2)
    }
}

impl fmt::Display for SeriesOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x_terms, self.y_terms)
    }
}

/// How the Fourier series is cut off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Truncation {
    /// Grow a square order from (2, 2) until the next shell is negligible.
    #[default]
    Adaptive,
    Fixed(SeriesOrder),
}

impl Truncation {
    pub fn resolve(&self, spec: &LatticeSpec, decay_exponent: f64) -> SeriesOrder {
        match *self {
            Truncation::Fixed(order) => order,
            Truncation::Adaptive => adaptive_order(spec, decay_exponent),
        }
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truncation::Adaptive => f.write_str("auto"),
            Truncation::Fixed(o) => write!(f, "{o}"),
        }
    }
}

/// How the interference moments are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentMethod {
    /// Brute-force lattice sum over `[-radius, radius]²`.
    ExactSum { radius: u32 },
    /// Fourier-Bessel closed form.
    ClosedForm(Truncation),
}

impl MomentMethod {
    pub fn exact() -> Self {
        MomentMethod::ExactSum {
            radius: lattice::DEFAULT_EXACT_RADIUS,
        }
    }

    pub fn closed_form() -> Self {
        MomentMethod::ClosedForm(Truncation::Adaptive)
    }

    /// Short tag used in tables: `exact-sum` or `closed-form`.
    pub fn tag(&self) -> &'static str {
        match self {
            MomentMethod::ExactSum { .. } => "exact-sum",
            MomentMethod::ClosedForm(_) => "closed-form",
        }
    }

    pub fn evaluate(
        &self,
        pos: ReceiverPos,
        spec: &LatticeSpec,
        derived: &DerivedParams,
    ) -> Result<InterferenceMoments> {
        match *self {
            MomentMethod::ExactSum { radius } => lattice::exact_moments(pos, spec, derived, radius),
            MomentMethod::ClosedForm(truncation) => {
                closed_form_moments(pos, spec, derived, truncation)
            }
        }
    }
}

impl Default for MomentMethod {
    fn default() -> Self {
        MomentMethod::closed_form()
    }
}

/// Mean and variance of the interference current, A and A².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceMoments {
    pub mean: f64,
    pub variance: f64,
    pub method: MomentMethod,
}

/// Which of the two lattice sums a series evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Moment {
    Mean,
    Variance,
}

impl Moment {
    fn name(self) -> &'static str {
        match self {
            Moment::Mean => "mean",
            Moment::Variance => "variance",
        }
    }

    /// Exponent `s` in `Σ (D²+h²)^(-s)`.
    fn exponent(self, decay_exponent: f64) -> f64 {
        match self {
            Moment::Mean => decay_exponent / 2.0,
            Moment::Variance => decay_exponent,
        }
    }
}

/// Closed-form interference mean, A.
pub fn mean_closed_form(
    pos: ReceiverPos,
    spec: &LatticeSpec,
    derived: &DerivedParams,
    order: SeriesOrder,
) -> Result<f64> {
    prepare(pos, spec, derived)?;
    let sum = series(Moment::Mean, pos, spec, derived.decay_exponent, order)?;
    positive(Moment::Mean, derived.mean_prefactor * sum, order)
}

/// Closed-form interference variance, A².
pub fn variance_closed_form(
    pos: ReceiverPos,
    spec: &LatticeSpec,
    derived: &DerivedParams,
    order: SeriesOrder,
) -> Result<f64> {
    prepare(pos, spec, derived)?;
    let sum = series(Moment::Variance, pos, spec, derived.decay_exponent, order)?;
    let value = derived.variance_prefactor * sum;
    // a single-level constellation has no variance to speak of
    if derived.variance_prefactor == 0.0 {
        return Ok(0.0);
    }
    positive(Moment::Variance, value, order)
}

/// Both closed-form moments with the given truncation policy.
pub fn closed_form_moments(
    pos: ReceiverPos,
    spec: &LatticeSpec,
    derived: &DerivedParams,
    truncation: Truncation,
) -> Result<InterferenceMoments> {
    let order = truncation.resolve(spec, derived.decay_exponent);
    Ok(InterferenceMoments {
        mean: mean_closed_form(pos, spec, derived, order)?,
        variance: variance_closed_form(pos, spec, derived, order)?,
        method: MomentMethod::ClosedForm(truncation),
    })
}

fn prepare(pos: ReceiverPos, spec: &LatticeSpec, derived: &DerivedParams) -> Result<()> {
    spec.validate()?;
    lattice::check_height(spec, derived)?;
    spec.check_in_cell(pos)
}

fn positive(moment: Moment, value: f64, order: SeriesOrder) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::SeriesNotConverged {
            moment: moment.name(),
            value,
            x_terms: order.x_terms,
            y_terms: order.y_terms,
        })
    }
}

/// Normalised lattice sum `Σ_{n≠0} (D_n² + h²)^(-s)` via its Fourier-Bessel form.
fn series(
    moment: Moment,
    pos: ReceiverPos,
    spec: &LatticeSpec,
    decay_exponent: f64,
    order: SeriesOrder,
) -> Result<f64> {
    let s = moment.exponent(decay_exponent);
    if !(s > 1.0) {
        return Err(Error::domain(
            match moment {
                Moment::Mean => "mean_closed_form",
                Moment::Variance => "variance_closed_form",
            },
            format!(
                "decay exponent {decay_exponent} too small; the {} sum diverges",
                moment.name()
            ),
        ));
    }
    let a = spec.active_spacing();
    let h = spec.height;
    let continuum = h.powf(2.0 - 2.0 * s) * PI / (a * a * (s - 1.0));
    let tagged = (pos.radius_sq() + h * h).powf(-s);
    let coeff = FourierCoefficient::new(s, h, a)?;

    let mut total = continuum - tagged;
    for w in 0..=order.x_terms {
        let cx = (2.0 * PI * f64::from(w) * pos.x / a).cos();
        for f in 0..=order.y_terms {
            if w == 0 && f == 0 {
                continue;
            }
            let cy = (2.0 * PI * f64::from(f) * pos.y / a).cos();
            let weight = if w == 0 || f == 0 { 0.5 } else { 1.0 };
            total += weight * coeff.at(w, f)? * cx * cy;
        }
    }
    Ok(total)
}

/// Magnitude of the `(w, f)` Fourier term for a fixed exponent and geometry.
struct FourierCoefficient {
    order: f64,
    height: f64,
    spacing: f64,
    denominator_const: f64,
}

impl FourierCoefficient {
    fn new(s: f64, height: f64, spacing: f64) -> Result<Self> {
        let nu = s - 1.0;
        let denominator_const = 2f64.powf(s - 4.0) * spacing.powf(s + 1.0) * gamma(s)? / PI;
        Ok(FourierCoefficient {
            order: nu,
            height,
            spacing,
            denominator_const,
        })
    }

    fn at(&self, w: u32, f: u32) -> Result<f64> {
        let r = f64::from(w).hypot(f64::from(f));
        let arg = 2.0 * PI * self.height * r / self.spacing;
        let k = bessel_k(self.order, arg)?;
        if k == 0.0 {
            return Ok(0.0);
        }
        let scale = (self.height / (2.0 * PI * r)).powf(self.order);
        Ok(k / (scale * self.denominator_const))
    }
}

/// Smallest square order `>= 2` whose next shell is below [`ADAPTIVE_TOLERANCE`]
/// of the continuum term, for both moments.
pub fn adaptive_order(spec: &LatticeSpec, decay_exponent: f64) -> SeriesOrder {
    let a = spec.active_spacing();
    let h = spec.height;
    let mut n = 2;
    for moment in [Moment::Mean, Moment::Variance] {
        let s = moment.exponent(decay_exponent);
        if !(s > 1.0) {
            continue;
        }
        let Ok(coeff) = FourierCoefficient::new(s, h, a) else {
            continue;
        };
        let continuum = h.powf(2.0 - 2.0 * s) * PI / (a * a * (s - 1.0));
        // |term| is decreasing in |(w,f)|, so the axis term bounds the shell
        while n < MAX_ADAPTIVE_ORDER {
            match coeff.at(n + 1, 0) {
                Ok(t) if t.abs() > ADAPTIVE_TOLERANCE * continuum => n += 1,
                _ => break,
            }
        }
    }
    SeriesOrder::square(n)
}
