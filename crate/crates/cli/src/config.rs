//! The run configuration: one TOML file, then environment, then flags.

use crate::error::{input, Result};
use fgm_core::flamelet::{
    stoichiometric_mixture_fraction, BoundaryConditions, ChiShape, Grid, SolverOptions,
};
use fgm_core::library::{TabulateOptions, REFERENCE_CHIS};
use fgm_core::mech::{bundled_methane, parse_mechanism, Mechanism};
use fgm_ml::linear::LrConfig;
use fgm_ml::mlp::{Activation, MlpConfig, Solver};
use fgm_ml::svr::SvrConfig;
use fgm_ml::tree::RfConfig;
use fgm_ml::tuner::SearchSpace;
use fgm_ml::{Family, ModelSpec};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const ENV_OUTPUT_DIR: &str = "FGM_OUTPUT_DIR";
pub const ENV_WORKERS: &str = "FGM_WORKERS";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub workers: usize,
    pub mechanism: MechanismSection,
    /// methane against air when absent
    pub boundary: Option<BoundarySection>,
    pub grid: GridSection,
    pub flamelet: FlameletSection,
    pub data: DataSection,
    pub model: ModelSection,
    pub compare: CompareSection,
    pub tune: TuneSection,
    pub subset: SubsetSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("fgm-out"),
            workers: 1,
            mechanism: MechanismSection::default(),
            boundary: None,
            grid: GridSection::default(),
            flamelet: FlameletSection::default(),
            data: DataSection::default(),
            model: ModelSection::default(),
            compare: CompareSection::default(),
            tune: TuneSection::default(),
            subset: SubsetSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismSection {
    /// bundled four-step methane mechanism when absent
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub pressure: f64,
    pub t_fuel: f64,
    pub t_ox: f64,
    /// species name to mass fraction
    pub fuel: BTreeMap<String, f64>,
    pub oxidizer: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub points: usize,
    /// sinh clustering strength around Z_st; 0 gives a uniform grid
    pub clustering: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            points: fgm_core::flamelet::DEFAULT_GRID_POINTS,
            clustering: fgm_core::flamelet::DEFAULT_CLUSTERING,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Erfc,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlameletSection {
    pub chi: Vec<f64>,
    pub chi_shape: ShapeName,
    pub max_pseudo_steps: usize,
    pub residual_tol: f64,
}

impl Default for FlameletSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            chi: REFERENCE_CHIS.to_vec(),
            chi_shape: ShapeName::Erfc,
            max_pseudo_steps: s.max_pseudo_steps,
            residual_tol: s.residual_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// flattened table to train on; tabulated from `[flamelet]` when absent
    pub dataset: Option<PathBuf>,
    pub test_fraction: f64,
    pub split_seed: u64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            dataset: None,
            test_fraction: 0.2,
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub family: Family,
    pub lr: LrConfig,
    pub mlp: MlpConfig,
    pub rf: RfConfig,
    pub svr: SvrConfig,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            family: Family::Mlp,
            lr: LrConfig::default(),
            mlp: MlpConfig::default(),
            rf: RfConfig::default(),
            svr: SvrConfig::default(),
        }
    }
}

impl ModelSection {
    pub fn spec(&self, family: Family) -> ModelSpec {
        match family {
            Family::Lr => ModelSpec::Lr(self.lr),
            Family::Mlp => ModelSpec::Mlp(self.mlp.clone()),
            Family::Rf => ModelSpec::Rf(self.rf),
            Family::Svr => ModelSpec::Svr(self.svr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// dissipation rate of the emitted prediction curves, 1/s
    pub chi: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { chi: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    /// configurations drawn at random from the space
    pub budget: usize,
    pub seed: u64,
    pub top_k: usize,
    /// every configuration instead of a sample; needs `confirm_full`
    pub full: bool,
    pub confirm_full: bool,
    /// configurations timed for the full-search cost estimate
    pub probes: usize,
    pub min_layers: usize,
    pub max_layers: usize,
    pub neurons: Vec<usize>,
    pub uniform_only: bool,
    pub activations: Vec<Activation>,
    pub solvers: Vec<Solver>,
    pub alphas: Vec<f64>,
    pub tols: Vec<f64>,
}

impl Default for TuneSection {
    fn default() -> Self {
        let s = SearchSpace::standard();
        Self {
            budget: 200,
            seed: 0,
            top_k: 5,
            full: false,
            confirm_full: false,
            probes: 3,
            min_layers: s.min_layers,
            max_layers: s.max_layers,
            neurons: s.neurons,
            uniform_only: s.uniform_only,
            activations: s.activations,
            solvers: s.solvers,
            alphas: s.alphas,
            tols: s.tols,
        }
    }
}

impl TuneSection {
    pub fn space(&self) -> SearchSpace {
        SearchSpace {
            min_layers: self.min_layers,
            max_layers: self.max_layers,
            neurons: self.neurons.clone(),
            uniform_only: self.uniform_only,
            activations: self.activations.clone(),
            solvers: self.solvers.clone(),
            alphas: self.alphas.clone(),
            tols: self.tols.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsetSection {
    /// log-spaced candidate flamelets between `chi_min` and `chi_max`
    pub pool_size: usize,
    pub chi_min: f64,
    pub chi_max: f64,
    pub counts: Vec<usize>,
}

impl Default for SubsetSection {
    fn default() -> Self {
        Self {
            pool_size: 27,
            chi_min: REFERENCE_CHIS[0],
            chi_max: REFERENCE_CHIS[REFERENCE_CHIS.len() - 1],
            counts: vec![3, 7, 12, 17, 22],
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| input(format!("config: {e}")))
    }

    /// Defaults when `path` is `None`. Relative paths inside the file are
    /// taken relative to the file's directory.
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.mechanism.path.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.data.dataset.as_mut() {
            rebase(p);
        }
        rebase(&mut cfg.output_dir);
        Ok(cfg)
    }

    /// Output directory and worker count only.
    pub fn apply_env(&mut self, get: &dyn Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(d) = get(ENV_OUTPUT_DIR).filter(|s| !s.is_empty()) {
            self.output_dir = PathBuf::from(d);
        }
        if let Some(w) = get(ENV_WORKERS).filter(|s| !s.is_empty()) {
            self.workers = w.trim().parse().map_err(|_| {
                input(format!(
                    "{ENV_WORKERS} must be a positive integer, got '{w}'"
                ))
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(input("workers must be at least 1"));
        }
        for p in [&self.mechanism.path, &self.data.dataset]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(input(format!("{} does not exist", p.display())));
            }
        }
        if self.grid.points < 3 {
            return Err(input("grid.points must be at least 3"));
        }
        if !(self.grid.clustering >= 0.0) {
            return Err(input("grid.clustering must be non-negative"));
        }
        if !(self.data.test_fraction > 0.0 && self.data.test_fraction < 1.0) {
            return Err(input("data.test_fraction must lie in (0, 1)"));
        }
        if !(self.compare.chi > 0.0) {
            return Err(input("compare.chi must be positive"));
        }
        if self.tune.top_k == 0 {
            return Err(input("tune.top_k must be at least 1"));
        }
        Ok(())
    }

    pub fn mechanism(&self) -> Result<Mechanism> {
        match &self.mechanism.path {
            None => Ok(bundled_methane()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| input(format!("cannot read {}: {e}", p.display())))?;
                Ok(parse_mechanism(&text)?)
            }
        }
    }

    pub fn boundary(&self, mech: &Mechanism) -> Result<BoundaryConditions> {
        let Some(b) = &self.boundary else {
            return Ok(BoundaryConditions::methane_air(mech)?);
        };
        let compose = |m: &BTreeMap<String, f64>, label: &str| -> Result<Vec<f64>> {
            let mut y = vec![0.0; mech.n_species()];
            for (name, v) in m {
                let k = mech.species_index(name).ok_or_else(|| {
                    input(format!("{label} species '{name}' is not in the mechanism"))
                })?;
                y[k] = *v;
            }
            Ok(y)
        };
        let bc = BoundaryConditions {
            t_fuel: b.t_fuel,
            t_ox: b.t_ox,
            y_fuel: compose(&b.fuel, "fuel")?,
            y_ox: compose(&b.oxidizer, "oxidizer")?,
            pressure: b.pressure,
        };
        bc.validate(mech)?;
        Ok(bc)
    }

    pub fn grid(&self, mech: &Mechanism, bc: &BoundaryConditions) -> Result<Grid> {
        if self.grid.clustering == 0.0 {
            return Ok(Grid::uniform(self.grid.points)?);
        }
        let z_st = stoichiometric_mixture_fraction(mech, bc)?;
        Ok(Grid::clustered(
            self.grid.points,
            z_st,
            self.grid.clustering,
        )?)
    }

    pub fn tabulate_options(&self) -> TabulateOptions {
        TabulateOptions {
            solver: SolverOptions {
                max_pseudo_steps: self.flamelet.max_pseudo_steps,
                residual_tol: self.flamelet.residual_tol,
                ..SolverOptions::default()
            },
            chi_shape: match self.flamelet.chi_shape {
                ShapeName::Erfc => ChiShape::Erfc,
                ShapeName::Constant => ChiShape::Constant,
            },
            allow_unconverged: false,
        }
    }
}
