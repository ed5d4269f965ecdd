//! Grid evaluation over reuse factor, height-to-spacing ratio and receiver
//! position, with CSV output.
//!
//! A ratio `r` is realised as spacing 1 m and height `r` m.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{MomentMethod, Truncation};
use crate::lattice::{self, LatticeSpec, ReceiverPos};
use crate::link::{self, LinkMetrics};
use crate::mcsim::{self, McConfig, McReport};
use crate::params::SystemParams;

/// Spacing used to realise every ratio, m.
pub const SWEEP_SPACING: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMethod {
    ExactSum,
    #[default]
    ClosedForm,
    Both,
}

impl SweepMethod {
    fn methods(self, truncation: Truncation, radius: u32) -> Vec<MomentMethod> {
        let exact = MomentMethod::ExactSum { radius };
        let closed = MomentMethod::ClosedForm(truncation);
        match self {
            SweepMethod::ExactSum => vec![exact],
            SweepMethod::ClosedForm => vec![closed],
            SweepMethod::Both => vec![closed, exact],
        }
    }
}

impl fmt::Display for SweepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepMethod::ExactSum => "exact-sum",
            SweepMethod::ClosedForm => "closed-form",
            SweepMethod::Both => "both",
        })
    }
}

/// Grid to evaluate. Positions are in metres at spacing [`SWEEP_SPACING`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub k_values: Vec<u32>,
    pub ha_ratios: Vec<f64>,
    pub positions: Vec<ReceiverPos>,
    pub method: SweepMethod,
    pub truncation: Truncation,
    pub exact_radius: u32,
    pub mc: Option<McConfig>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            k_values: (1..=15).collect(),
            ha_ratios: vec![3.0, 5.0, 7.0],
            positions: vec![ReceiverPos::ORIGIN],
            method: SweepMethod::ClosedForm,
            truncation: Truncation::Adaptive,
            exact_radius: lattice::DEFAULT_EXACT_RADIUS,
            mc: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() {
            return Err(Error::invalid("k_values", "must not be empty"));
        }
        if self.k_values.contains(&0) {
            return Err(Error::invalid("k_values", "reuse factors must be >= 1"));
        }
        if self.ha_ratios.is_empty() {
            return Err(Error::invalid("ha_ratios", "must not be empty"));
        }
        if let Some(r) = self
            .ha_ratios
            .iter()
            .find(|r| !(**r > 0.0 && r.is_finite()))
        {
            return Err(Error::invalid(
                "ha_ratios",
                format!("{r} must be finite and > 0"),
            ));
        }
        if self.positions.is_empty() {
            return Err(Error::invalid("positions", "must not be empty"));
        }
        if self.method != SweepMethod::ClosedForm && self.exact_radius == 0 {
            return Err(Error::invalid("exact_radius", "must be >= 1"));
        }
        Ok(())
    }

    pub fn row_count(&self) -> usize {
        let per_cell = if self.method == SweepMethod::Both {
            2
        } else {
            1
        };
        self.k_values.len() * self.ha_ratios.len() * self.positions.len() * per_cell
    }
}

/// One evaluated grid cell for one moment method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h_over_a: f64,
    pub k: u32,
    pub position_index: usize,
    pub z_x: f64,
    pub z_y: f64,
    pub method: MomentMethod,
    /// `Err` holds the message of a cell that could not be evaluated.
    pub metrics: std::result::Result<LinkMetrics, String>,
    pub mc: Option<std::result::Result<McReport, String>>,
}

/// Best reuse factor over the swept K values for one ratio, position and method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KStar {
    pub h_over_a: f64,
    pub position_index: usize,
    pub method: MomentMethod,
    pub k_star: u32,
    pub g_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub k_star: Vec<KStar>,
}

impl SweepResult {
    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.metrics.is_err() || matches!(r.mc, Some(Err(_))))
    }
}

/// Evaluates the full grid.
///
/// Rows are ordered by ratio, K, position and method, in the order given in
/// `spec`. A cell that fails (for instance a position outside the attocell
/// for a small K) yields a row carrying the error; the rest of the grid still
/// runs.
pub fn run_sweep(spec: &SweepSpec, sp: &SystemParams) -> Result<SweepResult> {
    spec.validate()?;
    sp.validate()?;
    let methods = spec.method.methods(spec.truncation, spec.exact_radius);

    let mut cells = Vec::with_capacity(spec.row_count() / methods.len());
    for &ratio in &spec.ha_ratios {
        for &k in &spec.k_values {
            for (p, &pos) in spec.positions.iter().enumerate() {
                cells.push((ratio, k, p, pos));
            }
        }
    }

    let rows: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|&(ratio, k, position_index, pos)| {
            let lattice = LatticeSpec::new(SWEEP_SPACING, ratio, k);
            let derived = sp.derive(ratio);
            let mc = spec.mc.map(|mc| {
                let lattice = lattice.as_ref().map_err(Error::to_string)?;
                let derived = derived.as_ref().map_err(Error::to_string)?;
                mcsim::simulate(pos, lattice, sp, derived, &mc).map_err(|e| e.to_string())
            });
            methods
                .iter()
                .map(|&method| {
                    let metrics = match (&lattice, &derived) {
                        (Ok(l), Ok(d)) => link::metrics(pos, l, sp, d, method),
                        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                    };
                    SweepRow {
                        h_over_a: ratio,
                        k,
                        position_index,
                        z_x: pos.x,
                        z_y: pos.y,
                        method,
                        metrics: metrics.map_err(|e| e.to_string()),
                        mc: mc.clone(),
                    }
                })
                .collect()
        })
        .collect();
    let rows: Vec<SweepRow> = rows.into_iter().flatten().collect();
    let k_star = summarize(spec, &methods, &rows);
    Ok(SweepResult { rows, k_star })
}

fn summarize(spec: &SweepSpec, methods: &[MomentMethod], rows: &[SweepRow]) -> Vec<KStar> {
    let mut out = Vec::new();
    for &ratio in &spec.ha_ratios {
        for p in 0..spec.positions.len() {
            for &method in methods {
                let mut best: Option<(u32, f64)> = None;
                for r in rows {
                    if r.h_over_a != ratio || r.position_index != p || r.method != method {
                        continue;
                    }
                    let Ok(m) = &r.metrics else { continue };
                    let better = match best {
                        None => true,
                        Some((bk, bg)) => m.goodput > bg || (m.goodput == bg && r.k < bk),
                    };
                    if better {
                        best = Some((r.k, m.goodput));
                    }
                }
                if let Some((k_star, g_star)) = best {
                    out.push(KStar {
                        h_over_a: ratio,
                        position_index: p,
                        method,
                        k_star,
                        g_star,
                    });
                }
            }
        }
    }
    out
}

/// CSV column names, in order.
pub fn csv_columns(with_mc: bool) -> Vec<&'static str> {
    let mut cols = vec![
        "h_over_a",
        "K",
        "z_x",
        "z_y",
        "method",
        "mu",
        "sigma1_sq",
        "p_e",
        "gamma",
        "r_spectral",
        "r_reported",
        "goodput",
    ];
    if with_mc {
        cols.extend([
            "mc_emp_mean",
            "mc_emp_var",
            "mc_emp_ser",
            "mc_stderr_mean",
            "mc_stderr_ser",
        ]);
    }
    cols.push("error");
    cols
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// Writes `result` as CSV: `#` metadata lines, a header, then one line per row.
///
/// Output is a pure function of its inputs, so identical sweeps produce
/// byte-identical files.
pub fn write_csv<W: Write>(
    out: &mut W,
    spec: &SweepSpec,
    sp: &SystemParams,
    result: &SweepResult,
) -> io::Result<()> {
    writeln!(out, "# attocell sweep")?;
    writeln!(out, "# spacing_a_m = {}", num(SWEEP_SPACING))?;
    let heights: Vec<String> = spec
        .ha_ratios
        .iter()
        .map(|r| num(r * SWEEP_SPACING))
        .collect();
    writeln!(out, "# height_h_m = {}", heights.join(" "))?;
    writeln!(out, "# noise_psd = {}", num(sp.noise_psd))?;
    writeln!(out, "# bandwidth = {}", num(sp.bandwidth))?;
    writeln!(out, "# pd_area = {}", num(sp.pd_area))?;
    writeln!(out, "# responsivity = {}", num(sp.responsivity))?;
    writeln!(out, "# pam_order = {}", sp.pam_order)?;
    writeln!(out, "# power_constant = {}", num(sp.power_constant))?;
    writeln!(
        out,
        "# field_of_view_deg = {}",
        num(sp.field_of_view.to_degrees())
    )?;
    writeln!(
        out,
        "# half_power_angle_deg = {}",
        num(sp.half_power_angle.to_degrees())
    )?;
    writeln!(out, "# temperature = {}", num(sp.temperature))?;
    writeln!(out, "# method = {}", spec.method)?;
    writeln!(out, "# series_order = {}", spec.truncation)?;
    if spec.method != SweepMethod::ClosedForm {
        writeln!(out, "# exact_radius = {}", spec.exact_radius)?;
    }
    if let Some(mc) = &spec.mc {
        writeln!(out, "# mc_n_slots = {}", mc.n_slots)?;
        writeln!(out, "# mc_seed = {}", mc.seed)?;
        writeln!(out, "# mc_oracle_radius = {}", mc.oracle_radius)?;
    }
    for k in &result.k_star {
        let pos = spec.positions[k.position_index];
        writeln!(
            out,
            "# k_star h_over_a={} z_x={} z_y={} method={} K*={} goodput={}",
            num(k.h_over_a),
            num(pos.x),
            num(pos.y),
            k.method.tag(),
            k.k_star,
            num(k.g_star)
        )?;
    }

    let with_mc = spec.mc.is_some();
    writeln!(out, "{}", csv_columns(with_mc).join(","))?;
    for row in &result.rows {
        let mut fields = vec![
            num(row.h_over_a),
            row.k.to_string(),
            num(row.z_x),
            num(row.z_y),
            row.method.tag().to_string(),
        ];
        let mut errors = Vec::new();
        match &row.metrics {
            Ok(m) => fields.extend(
                [
                    m.moments.mean,
                    m.moments.variance,
                    m.p_e,
                    m.gamma,
                    m.r_spectral,
                    m.r_reported,
                    m.goodput,
                ]
                .map(num),
            ),
            Err(e) => {
                fields.extend(std::iter::repeat_n(String::new(), 7));
                errors.push(e.clone());
            }
        }
        if with_mc {
            match &row.mc {
                Some(Ok(r)) => fields.extend(
                    [
                        r.emp_mean,
                        r.emp_var,
                        r.emp_ser,
                        r.stderr_mean,
                        r.stderr_ser,
                    ]
                    .map(num),
                ),
                Some(Err(e)) => {
                    fields.extend(std::iter::repeat_n(String::new(), 5));
                    errors.push(format!("mc: {e}"));
                }
                None => fields.extend(std::iter::repeat_n(String::new(), 5)),
            }
        }
        errors.dedup();
        fields.push(quote(&errors.join("; ")));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
