//! Square LED lattice geometry, line-of-sight gain and brute-force moment sums.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{InterferenceMoments, MomentMethod};
use crate::params::DerivedParams;

/// Default half-width (in lattice indices) of the brute-force summation square.
pub const DEFAULT_EXACT_RADIUS: u32 = 1000;

/// Photodiode location on the ground plane, relative to the tagged LED, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReceiverPos {
    pub x: f64,
    pub y: f64,
}

impl ReceiverPos {
    pub const ORIGIN: ReceiverPos = ReceiverPos { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        ReceiverPos { x, y }
    }

    /// Distance from the point below the tagged LED.
    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn radius_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }
}

/// Lattice geometry with TDMA thinning: the active LEDs are `reuse * spacing` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Inter-LED spacing, m.
    pub spacing: f64,
    /// Mounting height, m.
    pub height: f64,
    /// TDMA reuse factor: one LED in every `reuse²` block is active per slot.
    pub reuse: u32,
}

impl LatticeSpec {
    pub fn new(spacing: f64, height: f64, reuse: u32) -> Result<Self> {
        let spec = LatticeSpec {
            spacing,
            height,
            reuse,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::invalid(
                "spacing",
                format!("{} must be > 0", self.spacing),
            ));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::invalid(
                "height",
                format!("{} must be > 0", self.height),
            ));
        }
        if self.reuse == 0 {
            return Err(Error::invalid("reuse", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_reuse(self, reuse: u32) -> Self {
        LatticeSpec { reuse, ..self }
    }

    /// Distance between simultaneously active LEDs.
    pub fn active_spacing(&self) -> f64 {
        f64::from(self.reuse) * self.spacing
    }

    /// Height over active spacing, the only geometric ratio the noise-free model depends on.
    pub fn thinned_ratio(&self) -> f64 {
        self.height / self.active_spacing()
    }

    /// Rejects receivers outside the tagged LED's (thinned) attocell.
    pub fn check_in_cell(&self, pos: ReceiverPos) -> Result<()> {
        let half_width = 0.5 * self.active_spacing();
        let ok = pos.x.is_finite()
            && pos.y.is_finite()
            && pos.x.abs() <= half_width
            && pos.y.abs() <= half_width;
        if ok {
            Ok(())
        } else {
            Err(Error::OutsideCell {
                x: pos.x,
                y: pos.y,
                half_width,
            })
        }
    }
}

/// Index of an LED in the (active) lattice; `(0, 0)` is the tagged LED.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LedIndex {
    pub i: i64,
    pub j: i64,
}

impl LedIndex {
    pub const TAGGED: LedIndex = LedIndex { i: 0, j: 0 };

    pub fn new(i: i64, j: i64) -> Self {
        LedIndex { i, j }
    }
}

/// Ground distance between the photodiode and LED `idx` of a lattice with the given spacing.
pub fn horizontal_distance(idx: LedIndex, pos: ReceiverPos, spacing: f64) -> f64 {
    let dx = pos.x + idx.i as f64 * spacing;
    let dy = pos.y + idx.j as f64 * spacing;
    dx.hypot(dy)
}

/// Lambertian line-of-sight gain for a ground distance `distance` below an LED at `height`.
pub fn gain_at_distance(distance: f64, height: f64, lambertian_order: f64, pd_area: f64) -> f64 {
    let m = lambertian_order;
    (m + 1.0) * pd_area * height.powf(m + 1.0) / (2.0 * PI)
        * (distance * distance + height * height).powf(-(m + 3.0) / 2.0)
}

/// Channel gain from LED `idx` of the active lattice to the photodiode.
pub fn channel_gain(
    idx: LedIndex,
    pos: ReceiverPos,
    spec: &LatticeSpec,
    derived: &DerivedParams,
    pd_area: f64,
) -> f64 {
    let d = horizontal_distance(idx, pos, spec.active_spacing());
    gain_at_distance(d, spec.height, derived.lambertian_order, pd_area)
}

/// Mean interference current contributed by one LED, `A·M·G·R_pd`.
pub fn mean_current(gain: f64, mean_optical_power: f64, responsivity: f64) -> f64 {
    mean_optical_power * gain * responsivity
}

/// Brute-force truncated lattice sums of the interference mean and variance.
///
/// Sums over `(i, j)` in `[-radius, radius]²` minus the tagged LED, on the
/// thinned lattice. Each row is accumulated with compensated summation and
/// rows are combined in index order, so the result does not depend on the
/// thread count.
pub fn exact_moments(
    pos: ReceiverPos,
    spec: &LatticeSpec,
    derived: &DerivedParams,
    radius: u32,
) -> Result<InterferenceMoments> {
    spec.validate()?;
    check_height(spec, derived)?;
    spec.check_in_cell(pos)?;
    if radius == 0 {
        return Err(Error::invalid("radius", "exact sums need radius >= 1"));
    }
    let (mean_sum, var_sum) = lattice_sums(pos, spec, derived.decay_exponent, radius);
    Ok(InterferenceMoments {
        mean: derived.mean_prefactor * mean_sum,
        variance: derived.variance_prefactor * var_sum,
        method: MomentMethod::ExactSum { radius },
    })
}

/// `(Σ (D²+h²)^(-β/2), Σ (D²+h²)^(-β))` over the truncated interferer set.
pub(crate) fn lattice_sums(
    pos: ReceiverPos,
    spec: &LatticeSpec,
    decay_exponent: f64,
    radius: u32,
) -> (f64, f64) {
    let a = spec.active_spacing();
    let h2 = spec.height * spec.height;
    let n = i64::from(radius);
    let half = decay_exponent / 2.0;
    let int_half = (half.fract() == 0.0 && half <= 64.0).then_some(half as i32);
    let dy2: Vec<f64> = (-n..=n)
        .map(|j| {
            let dy = pos.y + j as f64 * a;
            dy * dy
        })
        .collect();

    let rows: Vec<(f64, f64)> = (-n..=n)
        .into_par_iter()
        .map(|i| {
            let dx = pos.x + i as f64 * a;
            let base = dx * dx + h2;
            let mut mean = Neumaier::default();
            let mut var = Neumaier::default();
            for (j, dy2) in (-n..=n).zip(&dy2) {
                if i == 0 && j == 0 {
                    continue;
                }
                let t = base + dy2;
                let p = match int_half {
                    Some(k) => t.powi(-k),
                    None => t.powf(-half),
                };
                mean.add(p);
                var.add(p * p);
            }
            (mean.total(), var.total())
        })
        .collect();

    let mut mean = Neumaier::default();
    let mut var = Neumaier::default();
    for (m, v) in rows {
        mean.add(m);
        var.add(v);
    }
    (mean.total(), var.total())
}

pub(crate) fn check_height(spec: &LatticeSpec, derived: &DerivedParams) -> Result<()> {
    if (spec.height - derived.height).abs() > 1e-12 * spec.height {
        return Err(Error::invalid(
            "height",
            format!(
                "lattice height {} differs from the height {} the prefactors were derived for",
                spec.height, derived.height
            ),
        ));
    }
    Ok(())
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;
    use proptest::prelude::*;

    fn setup(h: f64, a: f64, k: u32) -> (LatticeSpec, DerivedParams) {
        let spec = LatticeSpec::new(a, h, k).unwrap();
        let derived = SystemParams::default().derive(h).unwrap();
        (spec, derived)
    }

    #[test]
    fn distances() {
        let d = horizontal_distance(LedIndex::new(1, 1), ReceiverPos::ORIGIN, 1.0);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let d = horizontal_distance(LedIndex::TAGGED, ReceiverPos::new(0.3, 0.4), 1.0);
        assert!((d - 0.5).abs() < 1e-15);
        let d = horizontal_distance(LedIndex::new(-2, 1), ReceiverPos::new(0.1, -0.2), 2.0);
        let expected = ((0.1f64 - 4.0).powi(2) + (-0.2f64 + 2.0).powi(2)).sqrt();
        assert!((d - expected).abs() < 1e-14);
        assert!((d - 4.2953).abs() < 1e-4);
    }

    #[test]
    fn gain_under_led_and_at_height_offset() {
        let g0 = gain_at_distance(0.0, 3.0, 1.0, 1e-4);
        let expected = 1e-4 / (PI * 9.0);
        assert!(((g0 - expected) / expected).abs() < 1e-14);
        assert!((g0 - 3.53678e-6).abs() < 1e-11);
        let g3 = gain_at_distance(3.0, 3.0, 1.0, 1e-4);
        assert!(((g3 / g0) - 0.25).abs() < 1e-14);
        assert!(gain_at_distance(1.0, 3.0, 1.0, 1e-4) > gain_at_distance(1.5, 3.0, 1.0, 1e-4));
    }

    #[test]
    fn channel_gain_uses_thinned_spacing() {
        let (spec, derived) = setup(3.0, 1.0, 2);
        let g = channel_gain(
            LedIndex::new(1, 0),
            ReceiverPos::ORIGIN,
            &spec,
            &derived,
            1e-4,
        );
        assert!((g - gain_at_distance(2.0, 3.0, 1.0, 1e-4)).abs() < 1e-20);
    }

    #[test]
    fn nearest_ring_by_hand() {
        // a = h = 1, eight interferers with D² in {1, 2}
        let (spec, derived) = setup(1.0, 1.0, 1);
        let got = exact_moments(ReceiverPos::ORIGIN, &spec, &derived, 1).unwrap();
        let expected = derived.mean_prefactor * (4.0 / 4.0 + 4.0 / 9.0);
        assert!(((got.mean - expected) / expected).abs() < 1e-14);

        // building block: per-LED mean current summed over the same ring
        let params = SystemParams::default();
        let mut total = 0.0;
        for i in -1..=1i64 {
            for j in -1..=1i64 {
                if (i, j) == (0, 0) {
                    continue;
                }
                let g = channel_gain(
                    LedIndex::new(i, j),
                    ReceiverPos::ORIGIN,
                    &spec,
                    &derived,
                    params.pd_area,
                );
                total += mean_current(g, derived.mean_optical_power, params.responsivity);
            }
        }
        assert!(((total - expected) / expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_out_of_cell_and_bad_radius() {
        let (spec, derived) = setup(3.0, 1.0, 1);
        let err = exact_moments(ReceiverPos::new(0.6, 0.0), &spec, &derived, 10).unwrap_err();
        assert!(matches!(err, Error::OutsideCell { .. }));
        // boundary is accepted
        exact_moments(ReceiverPos::new(0.5, -0.5), &spec, &derived, 10).unwrap();
        assert!(exact_moments(ReceiverPos::ORIGIN, &spec, &derived, 0).is_err());
        // same point is in-cell once thinned
        let thinned = spec.with_reuse(3);
        exact_moments(ReceiverPos::new(0.6, 0.0), &thinned, &derived, 10).unwrap();
    }

    #[test]
    fn rejects_mismatched_height() {
        let (spec, _) = setup(3.0, 1.0, 1);
        let other = SystemParams::default().derive(5.0).unwrap();
        assert!(exact_moments(ReceiverPos::ORIGIN, &spec, &other, 5).is_err());
    }

    #[test]
    fn moments_shrink_with_reuse() {
        let derived = SystemParams::default().derive(3.0).unwrap();
        let first = exact_moments(
            ReceiverPos::ORIGIN,
            &LatticeSpec::new(1.0, 3.0, 1).unwrap(),
            &derived,
            200,
        )
        .unwrap();
        let mut prev: Option<InterferenceMoments> = None;
        for k in 1..=12 {
            let spec = LatticeSpec::new(1.0, 3.0, k).unwrap();
            let m = exact_moments(ReceiverPos::ORIGIN, &spec, &derived, 200).unwrap();
            assert!(m.mean > 0.0 && m.variance > 0.0);
            if let Some(p) = prev {
                assert!(m.mean < p.mean && m.variance < p.variance);
            }
            prev = Some(m);
        }
        let far = LatticeSpec::new(1.0, 3.0, 10_000).unwrap();
        let m = exact_moments(ReceiverPos::ORIGIN, &far, &derived, 50).unwrap();
        assert!(m.mean < 1e-9 * first.mean);
    }

    #[test]
    fn radius_doubling_matches_tail_estimate() {
        // The mean sum decays as D^-4, so its truncation tail over the
        // square [-N, N]² is ≈ C/N² with C = ∫ outside unit square of r^-4.
        let (spec, derived) = setup(3.0, 1.0, 1);
        let small = exact_moments(ReceiverPos::ORIGIN, &spec, &derived, 1000).unwrap();
        let large = exact_moments(ReceiverPos::ORIGIN, &spec, &derived, 2000).unwrap();
        let rel_mean = (large.mean - small.mean) / large.mean;
        assert!(rel_mean > 0.0 && rel_mean < 1e-5, "{rel_mean}");
        let rel_var = (large.variance - small.variance) / large.variance;
        assert!(rel_var.abs() < 1e-12, "{rel_var}");
    }

    #[test]
    fn cell_center_sees_less_than_corner() {
        let (spec, derived) = setup(3.0, 1.0, 1);
        let center = exact_moments(ReceiverPos::ORIGIN, &spec, &derived, 300).unwrap();
        let corner = exact_moments(ReceiverPos::new(0.49, 0.49), &spec, &derived, 300).unwrap();
        assert!(center.mean < corner.mean);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn four_fold_symmetry(fx in 0.0f64..0.5, fy in 0.0f64..0.5, k in 1u32..6) {
            let (spec, derived) = setup(3.0, 1.0, k);
            let a = spec.active_spacing();
            let (x, y) = (fx * a, fy * a);
            let base = exact_moments(ReceiverPos::new(x, y), &spec, &derived, 60).unwrap();
            for (sx, sy) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                let m = exact_moments(ReceiverPos::new(sx * x, sy * y), &spec, &derived, 60).unwrap();
                prop_assert!(((m.mean - base.mean) / base.mean).abs() < 1e-12);
                prop_assert!(((m.variance - base.variance) / base.variance).abs() < 1e-12);
            }
        }
    }
}
