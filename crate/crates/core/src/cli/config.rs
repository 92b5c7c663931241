//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chern_forms::FormSettings;
use crate::connection::{ConnectionKind, EhresmannSpec};
use crate::error::{GbcError, Result};
use crate::manifolds::Surface;
use crate::metric::finsler::MetricSpec;
use crate::quadrature::FdConfig;
use crate::topology::VectorFieldSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    pub manifold: ManifoldConfig,
    #[serde(default)]
    pub connection: ConnectionKind,
    #[serde(default)]
    pub ehresmann: EhresmannSpec,
    #[serde(default)]
    pub vector_field: Option<VectorFieldSpec>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub checks: CheckConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    #[serde(rename = "type")]
    pub surface: Surface,
    /// A metric identifier such as `round_sphere` or `randers(0.1)`.
    pub metric: String,
}

impl ManifoldConfig {
    pub fn metric_spec(&self) -> Result<MetricSpec> {
        self.metric.parse()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Nodes per fiber circle.
    pub order_fiber: usize,
    /// Nodes per direction in each base cell.
    pub order_base: usize,
    /// Nodes on each excision circle.
    pub order_boundary: usize,
    /// Gauss–Legendre nodes of the connection-family integral.
    pub s_order: usize,
    /// Excision radii, strictly decreasing.
    pub epsilon_schedule: Vec<f64>,
    pub richardson: bool,
    /// Grid points per direction in the zero scan.
    pub zero_grid: usize,
    /// Central-difference step for curvature and exterior derivatives.
    pub fd_step: f64,
    /// Central-difference step for `d log V`.
    pub volume_step: f64,
    /// Re-run the smallest radius at doubled base order.
    pub convergence_check: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            order_fiber: 64,
            order_base: 48,
            order_boundary: 48,
            s_order: 8,
            epsilon_schedule: vec![0.2, 0.1, 0.05],
            richardson: true,
            zero_grid: 33,
            fd_step: FdConfig::CURVATURE.h,
            volume_step: FdConfig::VOLUME.h,
            convergence_check: true,
        }
    }
}

impl QuadratureConfig {
    pub fn form_settings(&self) -> FormSettings {
        FormSettings {
            curvature: FdConfig { h: self.fd_step, richardson: true },
            volume: FdConfig { h: self.volume_step, richardson: true },
            fiber_order: self.order_fiber,
            s_order: self.s_order,
        }
    }
}

/// Tolerances and sample counts of the pass/fail checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Normalized GBC integral against `χ`.
    pub gbc: f64,
    /// Extrapolated boundary integrals against `−deg/(2π)`.
    pub boundary: f64,
    /// `∫ d(·) + Σ ∮ (·)` on the excised domain.
    pub stokes: f64,
    /// Transgression identities (`dΠ = Ω^∇`, exactness of the integrand, `dΥ₀`).
    pub identity: f64,
    /// Fiber volume form and full metric compatibility.
    pub exact: f64,
    /// Bigraded-algebra expansion.
    pub algebra: f64,
    /// Closedness and transgression of the Mathai–Quillen family.
    pub mathai_quillen: f64,
    /// When set, `max V / min V − 1` must exceed this.
    pub min_volume_variation: Option<f64>,
    pub identity_points: usize,
    pub mathai_quillen_points: usize,
    pub norm_pairs: usize,
    pub rays_per_pair: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            gbc: 1e-2,
            boundary: 1e-3,
            stokes: 1e-5,
            identity: 1e-5,
            exact: 1e-8,
            algebra: 1e-10,
            mathai_quillen: 1e-4,
            min_volume_variation: None,
            identity_points: 200,
            mathai_quillen_points: 20,
            norm_pairs: 200,
            rays_per_pair: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Table,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    /// A configuration with defaults everywhere but the manifold.
    pub fn new(scenario: &str, surface: Surface, metric: &MetricSpec) -> Self {
        ExperimentConfig {
            scenario: scenario.into(),
            seed: 0,
            manifold: ManifoldConfig { surface, metric: metric.id() },
            connection: ConnectionKind::default(),
            ehresmann: EhresmannSpec::default(),
            vector_field: None,
            quadrature: QuadratureConfig::default(),
            checks: CheckConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| GbcError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            GbcError::Config(m) => GbcError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GbcError::Config(m));
        if self.scenario.is_empty() || !self.scenario.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return bad(format!("scenario id `{}` must be non-empty and use [A-Za-z0-9_.-]", self.scenario));
        }
        self.manifold.metric_spec()?;
        let q = &self.quadrature;
        if q.order_fiber < 2 || q.order_base < 2 || q.order_boundary < 2 || q.s_order < 1 || q.zero_grid < 3 {
            return bad("quadrature orders are too small".into());
        }
        if q.epsilon_schedule.is_empty() || q.epsilon_schedule.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return bad("epsilon schedule must be non-empty and positive".into());
        }
        if q.epsilon_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad("epsilon schedule must be strictly decreasing".into());
        }
        FdConfig { h: q.fd_step, richardson: true }.validate()?;
        FdConfig { h: q.volume_step, richardson: true }.validate()?;
        if let ConnectionKind::Perturbed { amplitude, .. } = self.connection {
            if !amplitude.is_finite() {
                return bad("perturbation amplitude must be finite".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::PerturbationProfile;

    #[test]
    fn full_config_parses() {
        let cfg = ExperimentConfig::from_toml(
            r#"
scenario = "randers_perturbed"
seed = 3

[manifold]
type = "sphere"
metric = "randers(0.1)"

[connection]
type = "perturbed"
perturbation_amplitude = 0.2
perturbation_profile = "sinusoidal"

[ehresmann]
type = "spray"

[vector_field]
type = "stereographic_power"
k = 2

[quadrature]
order_base = 32
epsilon_schedule = [0.3, 0.15]
richardson = false

[checks]
gbc = 2e-2
min_volume_variation = 1e-4

[output]
format = "csv"
"#,
        )
        .unwrap();
        assert_eq!(cfg.manifold.metric_spec().unwrap(), MetricSpec::Randers(0.1));
        assert_eq!(cfg.connection, ConnectionKind::Perturbed { amplitude: 0.2, profile: PerturbationProfile::Sinusoidal });
        assert_eq!(cfg.vector_field, Some(VectorFieldSpec::StereographicPower { k: 2 }));
        assert_eq!(cfg.quadrature.order_base, 32);
        assert_eq!(cfg.quadrature.order_fiber, 64);
        assert_eq!(cfg.checks.min_volume_variation, Some(1e-4));
        assert_eq!(cfg.output.format, Format::Csv);
    }

    #[test]
    fn defaults_and_round_trip() {
        let cfg = ExperimentConfig::from_toml("scenario = \"t\"\n[manifold]\ntype = \"torus\"\nmetric = \"flat_torus\"\n").unwrap();
        assert_eq!(cfg.connection, ConnectionKind::Cartan);
        assert_eq!(cfg.ehresmann, EhresmannSpec::Spray);
        assert_eq!(cfg.quadrature, QuadratureConfig::default());
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = "scenario = \"t\"\n[manifold]\ntype = \"sphere\"\n";
        for extra in [
            "metric = \"finsler\"\n",
            "metric = \"round_sphere\"\n[quadrature]\nepsilon_schedule = [0.1, 0.2]\n",
            "metric = \"round_sphere\"\n[quadrature]\nepsilon_schedule = []\n",
            "metric = \"round_sphere\"\n[quadrature]\nfd_step = 0.0\n",
            "metric = \"round_sphere\"\ncolour = 1\n",
            "metric = \"round_sphere\"\n[connection]\ntype = \"levi_civita\"\n",
        ] {
            let r = ExperimentConfig::from_toml(&format!("{base}{extra}"));
            assert!(matches!(r, Err(GbcError::Config(_)) | Err(GbcError::Validation(_))), "{extra}");
        }
    }
}
