//! Flat TOML experiment configuration. Unknown keys are rejected everywhere.

use anyhow::{bail, Context};
use asmc::kernels::{FiniteStateLocalModel, StayProbability};
use asmc::targets::{
    DoubleWellTorusEnergy, Energy, GaussianMixtureEnergy, HalfspaceClassifier, WellClassifier,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fig3_2d,
    SweepN,
    SweepMt,
    LocalModelTheorem,
    ConstantsReport,
    BaselineCompare,
}

impl ExperimentKind {
    pub fn schema(&self) -> &'static str {
        match self {
            ExperimentKind::Fig3_2d => "fig3_2d.v1",
            ExperimentKind::SweepN => "sweep_n.v1",
            ExperimentKind::SweepMt => "sweep_mt.v1",
            ExperimentKind::LocalModelTheorem => "local_model_theorem.v1",
            ExperimentKind::ConstantsReport => "constants_report.v1",
            ExperimentKind::BaselineCompare => "baseline_compare.v1",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum TargetConfig {
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
    /// Isotropic components with means on the first axis; convenient for the
    /// high-dimensional sweeps.
    GaussianMixtureE1 {
        dimension: usize,
        weights: Vec<f64>,
        centers_x1: Vec<f64>,
        variances: Vec<f64>,
    },
    TorusDoubleWell {
        dimension: usize,
        amplitude: f64,
        kappa: f64,
        cross_amplitude: f64,
    },
    FiniteLocal {
        energies: Vec<f64>,
        domains: Vec<usize>,
        #[serde(default)]
        chi_constant: Option<f64>,
        #[serde(default)]
        chi_amplitude: Option<f64>,
        #[serde(default)]
        chi_barrier: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigSection {
    #[serde(default = "default_eta1")]
    pub eta1: f64,
    pub eta: f64,
    #[serde(default)]
    pub m: Option<u64>,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub steps_per_level: Option<u64>,
    /// Run with the energy `eta * U` so the Gibbs law at the final
    /// temperature equals `exp(-U)` (the low-temperature convention for
    /// mixture targets).
    #[serde(default)]
    pub scale_energy_by_eta: bool,
}

fn default_eta1() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum TestFunctionConfig {
    /// `1{x[axis] < threshold}`.
    Halfplane { axis: usize, threshold: f64 },
    /// `1{membership(x) = index}` for finite local targets.
    DomainIndicator { index: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepNSection {
    pub n_values: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepMtSection {
    pub m_values: Vec<u64>,
    pub total_steps: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub delta: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableSection {
    pub dims: Vec<usize>,
    pub k0: f64,
    pub alpha0: f64,
    #[serde(default)]
    pub alpha_b: f64,
    #[serde(default)]
    pub alpha_u: f64,
    pub eta: f64,
    pub marginal: Box<TargetConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub nu: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_chi")]
    pub chi_at_eta1: f64,
    #[serde(default)]
    pub separable: Option<SeparableSection>,
}

fn default_delta() -> f64 {
    0.1
}

fn default_chi() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    #[serde(default)]
    pub rejection_budget: Option<u64>,
    #[serde(default = "default_burn_in")]
    pub proposal_burn_in: f64,
}

fn default_burn_in() -> f64 {
    50.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Output path; overridable by --out. Not echoed into the CSV.
    #[serde(default)]
    pub out: Option<String>,
    /// Worker threads; 0 or absent = library default. Not echoed (results are
    /// independent of it).
    #[serde(default)]
    pub threads: Option<usize>,
    pub target: TargetConfig,
    #[serde(default)]
    pub run: Option<RunConfigSection>,
    #[serde(default)]
    pub test_function: Option<TestFunctionConfig>,
    #[serde(default)]
    pub sweep_n: Option<SweepNSection>,
    #[serde(default)]
    pub sweep_mt: Option<SweepMtSection>,
    #[serde(default)]
    pub plan: Option<PlanSection>,
    #[serde(default)]
    pub constants: Option<ConstantsSection>,
    #[serde(default)]
    pub baseline: Option<BaselineSection>,
}

fn default_replicates() -> usize {
    100
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("config parse error")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fail fast on missing sections for the chosen experiment.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.seed == u64::MAX {
            bail!("seed u64::MAX is reserved");
        }
        let need = |cond: bool, what: &str| -> anyhow::Result<()> {
            if !cond {
                bail!("experiment {:?} needs the {what} section", self.experiment);
            }
            Ok(())
        };
        match self.experiment {
            ExperimentKind::Fig3_2d | ExperimentKind::BaselineCompare => {
                need(self.run.is_some(), "[run]")?;
                need(self.test_function.is_some(), "[test_function]")?;
                let run = self.run.as_ref().unwrap();
                if run.m.is_none() || run.n.is_none() || run.dt.is_none()
                    || run.steps_per_level.is_none()
                {
                    bail!("[run] must pin m, n, dt and steps_per_level");
                }
            }
            ExperimentKind::SweepN => {
                need(self.run.is_some(), "[run]")?;
                need(self.test_function.is_some(), "[test_function]")?;
                need(self.sweep_n.is_some(), "[sweep_n]")?;
                if self.sweep_n.as_ref().unwrap().n_values.is_empty() {
                    bail!("[sweep_n].n_values must not be empty");
                }
            }
            ExperimentKind::SweepMt => {
                need(self.run.is_some(), "[run]")?;
                need(self.test_function.is_some(), "[test_function]")?;
                need(self.sweep_mt.is_some(), "[sweep_mt]")?;
                let sw = self.sweep_mt.as_ref().unwrap();
                if sw.m_values.is_empty() {
                    bail!("[sweep_mt].m_values must not be empty");
                }
                for m in &sw.m_values {
                    if *m == 0 || sw.total_steps % m != 0 {
                        bail!(
                            "total_steps = {} is not divisible by m = {m}; the budget MT \
                             must be constant across rows",
                            sw.total_steps
                        );
                    }
                }
            }
            ExperimentKind::LocalModelTheorem => {
                need(self.run.is_some(), "[run]")?;
                need(self.test_function.is_some(), "[test_function]")?;
                need(self.plan.is_some(), "[plan]")?;
                if !matches!(self.target, TargetConfig::FiniteLocal { .. }) {
                    bail!("local_model_theorem needs a finite_local target");
                }
            }
            ExperimentKind::ConstantsReport => {
                need(self.constants.is_some(), "[constants]")?;
                need(self.run.is_some(), "[run]")?;
            }
        }
        if self.replicates == 0 {
            bail!("replicates must be positive");
        }
        Ok(())
    }

    /// Canonical echo for the CSV comment block. `out` and `threads` are
    /// omitted: they do not affect any emitted value.
    pub fn echo_lines(&self) -> Vec<String> {
        let mut stripped = self.clone();
        stripped.out = None;
        stripped.threads = None;
        let text = toml::to_string(&stripped).expect("config reserializes");
        text.lines().map(|l| format!("# {l}")).collect()
    }
}

/// A constructed target: the energy plus whatever structure it carries.
pub enum BuiltTarget {
    Mixture(GaussianMixtureEnergy),
    DoubleWell(DoubleWellTorusEnergy),
    Finite(FiniteStateLocalModel),
}

impl BuiltTarget {
    pub fn energy(&self) -> &dyn Energy {
        match self {
            BuiltTarget::Mixture(m) => m,
            BuiltTarget::DoubleWell(m) => m,
            BuiltTarget::Finite(m) => m,
        }
    }

    pub fn classifier(&self) -> Option<Box<dyn WellClassifier>> {
        match self {
            BuiltTarget::Mixture(_) => Some(Box::new(HalfspaceClassifier {
                axis: 0,
                threshold: 0.0,
            })),
            BuiltTarget::DoubleWell(m) => Some(Box::new(m.classifier())),
            BuiltTarget::Finite(m) => Some(Box::new(FiniteMembershipClassifier(m.clone()))),
        }
    }
}

struct FiniteMembershipClassifier(FiniteStateLocalModel);

impl WellClassifier for FiniteMembershipClassifier {
    fn well_count(&self) -> usize {
        asmc::kernels::LocalModel::domain_count(&self.0)
    }
    fn classify(&self, x: &[f64]) -> usize {
        asmc::kernels::LocalModel::membership(&self.0, x)
    }
}

pub fn build_target(cfg: &TargetConfig) -> anyhow::Result<BuiltTarget> {
    Ok(match cfg {
        TargetConfig::GaussianMixture {
            weights,
            means,
            variances,
        } => BuiltTarget::Mixture(GaussianMixtureEnergy::new(
            weights.clone(),
            means.clone(),
            variances.clone(),
        )?),
        TargetConfig::GaussianMixtureE1 {
            dimension,
            weights,
            centers_x1,
            variances,
        } => BuiltTarget::Mixture(GaussianMixtureEnergy::isotropic_on_axis(
            *dimension,
            weights.clone(),
            centers_x1.clone(),
            variances.clone(),
        )?),
        TargetConfig::TorusDoubleWell {
            dimension,
            amplitude,
            kappa,
            cross_amplitude,
        } => BuiltTarget::DoubleWell(DoubleWellTorusEnergy::new(
            *dimension,
            *amplitude,
            *kappa,
            *cross_amplitude,
        )?),
        TargetConfig::FiniteLocal {
            energies,
            domains,
            chi_constant,
            chi_amplitude,
            chi_barrier,
        } => {
            let chi = match (chi_constant, chi_amplitude, chi_barrier) {
                (Some(c), None, None) => StayProbability::Constant(*c),
                (None, Some(a), Some(b)) => StayProbability::Arrhenius {
                    amplitude: *a,
                    barrier: *b,
                },
                _ => bail!(
                    "finite_local target needs either chi_constant or both \
                     chi_amplitude and chi_barrier"
                ),
            };
            BuiltTarget::Finite(FiniteStateLocalModel::new(
                energies.clone(),
                domains.clone(),
                chi,
            )?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "fig3_2d"
seed = 7
replicates = 3

[target]
kind = "gaussian_mixture"
weights = [0.7, 0.3]
means = [[-1.0, 0.0], [1.0, 0.0]]
variances = [[0.09, 0.04], [0.02, 0.18]]

[run]
eta = 0.2
m = 5
n = 100
dt = 0.001
steps_per_level = 20
scale_energy_by_eta = true

[test_function]
kind = "halfplane"
axis = 0
threshold = 0.0
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_str(MINIMAL).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Fig3_2d);
        assert_eq!(cfg.run.as_ref().unwrap().eta1, 1.0);
        assert!(matches!(
            build_target(&cfg.target).unwrap(),
            BuiltTarget::Mixture(_)
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("[run]", "[run]\nbogus_knob = 1");
        assert!(ExperimentConfig::from_str(&bad).is_err());
        let bad_top = format!("{MINIMAL}\nmystery = 3\n");
        assert!(ExperimentConfig::from_str(&bad_top).is_err());
    }

    #[test]
    fn missing_sections_fail_fast() {
        let no_tf = MINIMAL.replace("[test_function]", "[ignored_section]");
        assert!(ExperimentConfig::from_str(&no_tf).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig::from_str(MINIMAL).unwrap();
        let echoed: String = cfg
            .echo_lines()
            .iter()
            .map(|l| format!("{}\n", l.trim_start_matches("# ")))
            .collect();
        let back = ExperimentConfig::from_str(&echoed).unwrap();
        assert_eq!(back.seed, cfg.seed);
        assert_eq!(back.replicates, cfg.replicates);
    }

    #[test]
    fn sweep_mt_divisibility_enforced() {
        let cfg = r#"
experiment = "sweep_mt"
seed = 1
replicates = 2

[target]
kind = "gaussian_mixture_e1"
dimension = 4
weights = [0.2, 0.8]
centers_x1 = [-1.0, 1.0]
variances = [0.0625, 0.04]

[run]
eta = 0.1
dt = 0.01

[test_function]
kind = "halfplane"
axis = 0
threshold = 0.0

[sweep_mt]
m_values = [1, 3]
total_steps = 100
"#;
        assert!(ExperimentConfig::from_str(cfg).is_err());
    }
}
