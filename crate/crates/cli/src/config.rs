//! Experiment manifests: a TOML file with `[system]`, `[sweep]` and `[output]`
//! sections. Every key is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use attocell_core::mcsim::DEFAULT_ORACLE_RADIUS;
use attocell_core::{
    McConfig, ReceiverPos, SeriesOrder, SweepMethod, SweepSpec, SystemParams, Truncation,
};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Clone, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// Noise power spectral density, A²/Hz
    #[arg(long)]
    pub noise_psd: Option<f64>,
    /// Modulation bandwidth, Hz
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Photodiode area, m²
    #[arg(long)]
    pub pd_area: Option<f64>,
    /// Photodiode responsivity, A/W
    #[arg(long)]
    pub responsivity: Option<f64>,
    /// Number of PAM levels
    #[arg(long)]
    pub pam_order: Option<u32>,
    /// Optical power constant, W
    #[arg(long)]
    pub power_constant: Option<f64>,
    /// Photodiode field of view, degrees
    #[arg(long)]
    pub field_of_view_deg: Option<f64>,
    /// LED half-power semi-angle, degrees
    #[arg(long)]
    pub half_power_angle_deg: Option<f64>,
    /// Operating temperature, K
    #[arg(long)]
    pub temperature: Option<f64>,
}

impl SystemSection {
    /// Values set in `over` win.
    pub fn merge(&self, over: &SystemSection) -> SystemSection {
        SystemSection {
            noise_psd: over.noise_psd.or(self.noise_psd),
            bandwidth: over.bandwidth.or(self.bandwidth),
            pd_area: over.pd_area.or(self.pd_area),
            responsivity: over.responsivity.or(self.responsivity),
            pam_order: over.pam_order.or(self.pam_order),
            power_constant: over.power_constant.or(self.power_constant),
            field_of_view_deg: over.field_of_view_deg.or(self.field_of_view_deg),
            half_power_angle_deg: over.half_power_angle_deg.or(self.half_power_angle_deg),
            temperature: over.temperature.or(self.temperature),
        }
    }

    pub fn params(&self) -> SystemParams {
        let base = SystemParams::default();
        let mut p = SystemParams {
            noise_psd: self.noise_psd.unwrap_or(base.noise_psd),
            bandwidth: self.bandwidth.unwrap_or(base.bandwidth),
            pd_area: self.pd_area.unwrap_or(base.pd_area),
            responsivity: self.responsivity.unwrap_or(base.responsivity),
            pam_order: self.pam_order.unwrap_or(base.pam_order),
            power_constant: self.power_constant.unwrap_or(base.power_constant),
            temperature: self.temperature.unwrap_or(base.temperature),
            ..base
        };
        if let Some(fov) = self.field_of_view_deg {
            p.field_of_view = fov.to_radians();
        }
        if let Some(hpa) = self.half_power_angle_deg {
            p.half_power_angle = hpa.to_radians();
        }
        p
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub k_values: Option<Vec<u32>>,
    /// Inclusive range such as `"1..15"`; ignored when `k_values` is set.
    pub k_range: Option<String>,
    pub ha_ratios: Option<Vec<f64>>,
    /// `[[x, y], ...]` in metres at 1 m spacing.
    pub positions: Option<Vec<[f64; 2]>>,
    pub method: Option<SweepMethod>,
    /// `"auto"` or `"u,v"`.
    pub order: Option<String>,
    pub exact_radius: Option<u32>,
    pub with_mc: Option<bool>,
    pub n_slots: Option<u64>,
    pub seed: Option<u64>,
    pub oracle_radius: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    #[serde(rename = "csv+plot")]
    #[value(name = "csv+plot")]
    CsvPlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PlotFormat {
    #[default]
    Svg,
    GnuplotScript,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub plot_format: Option<PlotFormat>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// Parses `"a..b"` or `"a..=b"` (both inclusive) or a single integer.
pub fn parse_k_range(s: &str) -> anyhow::Result<Vec<u32>> {
    let s = s.trim();
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo, hi.trim_start_matches('=')),
        None => (s, s),
    };
    let lo: u32 = lo
        .trim()
        .parse()
        .with_context(|| format!("bad K range `{s}`"))?;
    let hi: u32 = hi
        .trim()
        .parse()
        .with_context(|| format!("bad K range `{s}`"))?;
    if lo == 0 || lo > hi {
        bail!("K range `{s}` must satisfy 1 <= start <= end");
    }
    Ok((lo..=hi).collect())
}

/// Parses `"auto"` or `"u,v"`.
pub fn parse_order(s: &str) -> anyhow::Result<Truncation> {
    if s.trim().eq_ignore_ascii_case("auto") {
        return Ok(Truncation::Adaptive);
    }
    let (u, v) = s
        .split_once(',')
        .with_context(|| format!("series order `{s}` must be `auto` or `u,v`"))?;
    let u = u
        .trim()
        .parse()
        .with_context(|| format!("bad series order `{s}`"))?;
    let v = v
        .trim()
        .parse()
        .with_context(|| format!("bad series order `{s}`"))?;
    Ok(Truncation::Fixed(SeriesOrder::new(u, v)))
}

impl SweepSection {
    pub fn spec(&self) -> anyhow::Result<SweepSpec> {
        let base = SweepSpec::default();
        let k_values = match (&self.k_values, &self.k_range) {
            (Some(k), _) => k.clone(),
            (None, Some(r)) => parse_k_range(r)?,
            (None, None) => base.k_values,
        };
        let mc = self.with_mc.unwrap_or(false).then(|| McConfig {
            n_slots: self.n_slots.unwrap_or(McConfig::default().n_slots),
            seed: self.seed.unwrap_or(0),
            oracle_radius: self.oracle_radius.unwrap_or(DEFAULT_ORACLE_RADIUS),
            ..McConfig::default()
        });
        Ok(SweepSpec {
            k_values,
            ha_ratios: self.ha_ratios.clone().unwrap_or(base.ha_ratios),
            positions: self
                .positions
                .as_ref()
                .map(|ps| ps.iter().map(|&[x, y]| ReceiverPos::new(x, y)).collect())
                .unwrap_or(base.positions),
            method: self.method.unwrap_or(base.method),
            truncation: match &self.order {
                Some(o) => parse_order(o)?,
                None => base.truncation,
            },
            exact_radius: self.exact_radius.unwrap_or(base.exact_radius),
            mc,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c: RunConfig = toml::from_str("").unwrap();
        assert_eq!(c.system.params(), SystemParams::default());
        assert_eq!(c.sweep.spec().unwrap(), SweepSpec::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[system]\nbandwith = 1.0\n").is_err());
        assert!(toml::from_str::<RunConfig>("[plots]\n").is_err());
    }

    #[test]
    fn full_manifest() {
        let c: RunConfig = toml::from_str(
            r#"
            [system]
            pam_order = 4
            half_power_angle_deg = 45.0
            [sweep]
            k_range = "2..4"
            ha_ratios = [5.0]
            positions = [[0.0, 0.0], [0.5, 0.25]]
            method = "both"
            order = "3,4"
            with_mc = true
            seed = 9
            [output]
            path = "out.csv"
            format = "csv+plot"
            plot_format = "gnuplot-script"
            "#,
        )
        .unwrap();
        let p = c.system.params();
        assert_eq!(p.pam_order, 4);
        assert!((p.half_power_angle - 45f64.to_radians()).abs() < 1e-15);
        let s = c.sweep.spec().unwrap();
        assert_eq!(s.k_values, vec![2, 3, 4]);
        assert_eq!(s.positions[1], ReceiverPos::new(0.5, 0.25));
        assert_eq!(s.method, SweepMethod::Both);
        assert_eq!(s.truncation, Truncation::Fixed(SeriesOrder::new(3, 4)));
        assert_eq!(s.mc.unwrap().seed, 9);
        assert_eq!(c.output.format, Some(OutputFormat::CsvPlot));
        assert_eq!(c.output.plot_format, Some(PlotFormat::GnuplotScript));
    }

    #[test]
    fn flags_override_file() {
        let file = SystemSection {
            pam_order: Some(4),
            bandwidth: Some(1e6),
            ..SystemSection::default()
        };
        let flags = SystemSection {
            pam_order: Some(16),
            ..SystemSection::default()
        };
        let m = file.merge(&flags);
        assert_eq!(m.pam_order, Some(16));
        assert_eq!(m.bandwidth, Some(1e6));
    }

    #[test]
    fn k_ranges() {
        assert_eq!(parse_k_range("1..1").unwrap(), vec![1]);
        assert_eq!(parse_k_range("3..=5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_k_range("7").unwrap(), vec![7]);
        assert!(parse_k_range("0..3").is_err());
        assert!(parse_k_range("5..2").is_err());
        assert!(parse_k_range("a..b").is_err());
    }

    #[test]
    fn orders() {
        assert_eq!(parse_order("auto").unwrap(), Truncation::Adaptive);
        assert_eq!(
            parse_order("2, 2").unwrap(),
            Truncation::Fixed(SeriesOrder::square(2))
        );
        assert!(parse_order("2").is_err());
    }
}
