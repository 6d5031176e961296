use std::path::{Path, PathBuf};

use netiss_core::catalog::{self, CatalogEntry};
use netiss_core::certify::{EnsembleConfig, Tolerance};
use netiss_core::smallgain::{CycleConfig, MbiConfig, SamplerConfig};
use netiss_core::systems::InputSignal;
use netiss_core::{NetworkSpec, ScalarCurve, TimeDomain};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_radii() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0]
}

/// Half-octave grid spanning the default MBI sampling range `[0.01, 100]`.
fn sgc_radii() -> Vec<f64> {
    (-14..=14).map(|k| 2f64.powf(k as f64 / 2.0)).collect()
}

/// Where the network comes from: `catalog:<name>?k=v`, a path to a network
/// JSON file (relative to the config file), or an inline network object.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum NetworkSource {
    Ref(String),
    Inline(Box<NetworkSpec>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub network: NetworkSource,
    /// Working window size; defaults to the network's own default.
    #[serde(default)]
    pub window: Option<usize>,
    /// Overrides the integration step of continuous-time networks.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub gains_check: GainsCheckConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub trace: TraceConfig,
    #[serde(default)]
    pub subnetwork: SubnetworkConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsCheckConfig {
    /// Radius grid for `η̂`; a derived ξ is only trustworthy on the range it
    /// covers, so it should span the MBI sample norms.
    pub radii: Vec<f64>,
    pub sampler: SamplerConfig,
    pub mbi: MbiConfig,
    pub cycle: CycleConfig,
    /// Candidate ξ; derived from η̂ when absent.
    pub xi: Option<ScalarCurve>,
    /// Relative safety margin applied to a derived ξ; covers the sampling
    /// error of η̂, which overestimates the infimum.
    pub xi_margin: f64,
    /// Rounds of feeding MBI witnesses back into η̂.
    pub refine_rounds: usize,
}

impl Default for GainsCheckConfig {
    fn default() -> Self {
        GainsCheckConfig {
            radii: sgc_radii(),
            sampler: SamplerConfig::default(),
            mbi: MbiConfig::default(),
            cycle: CycleConfig::default(),
            xi: None,
            xi_margin: 0.05,
            refine_rounds: 3,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Constant(f64),
    Vector(Vec<f64>),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub horizon: Option<f64>,
    pub x0: Option<InitialState>,
    /// Scalar input broadcast to every component, or one component per index.
    pub input: Option<InputSignal>,
    /// Keep every n-th sample in the CSV.
    pub record_every: Option<usize>,
    /// Window sizes for a truncation sweep.
    pub sweep: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub radii: Vec<f64>,
    /// Dyadic depth `n_max`.
    pub depth: usize,
    pub horizon: Option<f64>,
    pub ensemble: EnsembleConfig,
    pub holdout: EnsembleConfig,
    /// Reference gain `γ̂`; defaults to the fitted `γ_UGS`.
    pub gamma_hat: Option<ScalarCurve>,
    pub tol: Tolerance,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            radii: default_radii(),
            depth: 10,
            horizon: None,
            ensemble: EnsembleConfig::default(),
            holdout: EnsembleConfig::default(),
            gamma_hat: None,
            tol: Tolerance::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub radii: Vec<f64>,
    pub bands: Vec<u32>,
    /// Caps `q` for the small-input variant.
    pub small_inputs: Vec<f64>,
    pub horizon: Option<f64>,
    /// Absolute tail start times; overrides `tail_fractions`.
    pub tail_starts: Option<Vec<f64>>,
    /// Tail starts as fractions of the horizon.
    pub tail_fractions: Vec<f64>,
    pub ensemble: EnsembleConfig,
    pub xi: Option<ScalarCurve>,
    pub gamma: Option<ScalarCurve>,
    pub tol: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            radii: vec![0.5, 1.0, 2.0],
            bands: (1..=6).collect(),
            small_inputs: vec![0.0],
            horizon: None,
            tail_starts: None,
            tail_fractions: vec![0.5, 0.75, 0.95],
            ensemble: EnsembleConfig::default(),
            xi: None,
            gamma: None,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubnetworkConfig {
    pub indices: Vec<usize>,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<(JobConfig, PathBuf), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: JobConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn parse(text: &str) -> Result<JobConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed config: {e}")))
    }
}

/// A resolved network plus its catalog entry when it came from the catalog.
pub struct LoadedNetwork {
    pub spec: NetworkSpec,
    pub entry: Option<CatalogEntry>,
}

pub fn load_network(cfg: &JobConfig, base: &Path) -> Result<LoadedNetwork, CliError> {
    let (mut spec, entry) = match &cfg.network {
        NetworkSource::Inline(spec) => ((**spec).clone(), None),
        NetworkSource::Ref(r) if r.starts_with("catalog:") => {
            let e = catalog::from_ref(r)?;
            (e.spec.clone(), Some(e))
        }
        NetworkSource::Ref(file) => {
            let path = base.join(file);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Usage(format!("cannot read network {}: {e}", path.display())))?;
            let spec: NetworkSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("malformed network {}: {e}", path.display())))?;
            (spec, None)
        }
    };
    if let Some(dt) = cfg.dt {
        match spec.time_domain {
            TimeDomain::Continuous { .. } => spec.time_domain = TimeDomain::Continuous { dt },
            TimeDomain::Discrete => return Err(CliError::Usage("dt given for a discrete-time network".into())),
        }
    }
    spec.validate()?;
    Ok(LoadedNetwork { spec, entry })
}

impl JobConfig {
    /// Network reference as written in the config, for reports.
    pub fn source_label(&self) -> String {
        match &self.network {
            NetworkSource::Ref(r) => r.clone(),
            NetworkSource::Inline(_) => "inline".into(),
        }
    }
}
