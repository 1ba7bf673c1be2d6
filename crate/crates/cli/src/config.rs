//! Run configuration: a TOML file with `geometry`, `operator`, `problem`,
//! `solver`, `experiment` and `output` tables.

use std::fs;
use std::path::{Path, PathBuf};

use hessian_lab::fixture::{Fixture, RhsExpr};
use hessian_lab::geometry::{Expr, PeriodicGrid, ScalarField, StencilOrder, SymTensorExpr};
use hessian_lab::gradient::{ConstantSweep, PsiSpec};
use hessian_lab::operators::Family;
use hessian_lab::solver::{manufactured_rhs, Background, SolveOptions};
use hessian_lab::weak::MollifierSchedule;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every randomized step; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub operator: OperatorConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub dim: usize,
    /// Points per axis; multi-size experiments use all, the rest the first.
    pub sizes: Vec<usize>,
    #[serde(default = "one")]
    pub period: f64,
    /// Metric components (upper triangle); identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<SymTensorExpr>,
    #[serde(default)]
    pub order: StencilOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    #[serde(flatten)]
    pub family: Family,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Background tensor (upper triangle); identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<SymTensorExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<RhsExpr>,
    /// Field file in the binary field format, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_file: Option<PathBuf>,
    /// Exact solution `φ*`; when set, the rhs is manufactured from it and
    /// `solve` reports errors against it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsConfig {
    #[serde(default = "condition_samples")]
    pub samples: usize,
    /// Weights of an asymmetric counterexample `Σ w_i λ_i` to run alongside.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<f64>>,
}

impl Default for ConditionsConfig {
    fn default() -> Self {
        Self {
            samples: condition_samples(),
            counterexample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Experiment selection and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Linf {
        family: Vec<RhsExpr>,
        #[serde(default = "two")]
        q: f64,
        #[serde(default = "two")]
        p: f64,
    },
    Stability {
        /// Base rhs; `problem.rhs` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<RhsExpr>,
        eta: Expr,
        deltas: Vec<f64>,
        #[serde(default = "two")]
        p: f64,
        #[serde(default = "two")]
        q: f64,
    },
    BBounds {},
    BUniqueness {
        schedule: MollifierSchedule,
        alt: MollifierSchedule,
    },
    Equicontinuity {
        family: Vec<RhsExpr>,
        #[serde(default = "two")]
        q: f64,
        k_class: f64,
    },
    Abp {
        resolution: usize,
        #[serde(default = "one")]
        scale: f64,
        /// Number of randomized fixtures (2D only).
        #[serde(default)]
        random: usize,
    },
    Gradient {
        /// Grid coordinates of the probe-ball centre.
        center: Vec<usize>,
        radius: f64,
        #[serde(default)]
        schedule: MollifierSchedule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sweep: Option<ConstantSweep>,
        #[serde(default)]
        psi: Vec<PsiSpec>,
    },
    WeakSolve {
        #[serde(default)]
        schedule: MollifierSchedule,
    },
    Viscosity {
        #[serde(default = "viscosity_samples")]
        samples: usize,
        #[serde(default = "two_usize")]
        probe_radius: usize,
        /// Absolute tolerance; defaults to `tol_factor` times the probe error
        /// on `problem.exact`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
        #[serde(default = "ten")]
        tol_factor: f64,
        /// Solve through the approximation sequence instead of directly.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schedule: Option<MollifierSchedule>,
    },
}

/// Names accepted by `experiment.name`.
pub const EXPERIMENTS: [&str; 9] = [
    "linf",
    "stability",
    "b-bounds",
    "b-uniqueness",
    "equicontinuity",
    "abp",
    "gradient",
    "weak-solve",
    "viscosity",
];

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Linf { .. } => EXPERIMENTS[0],
            ExperimentConfig::Stability { .. } => EXPERIMENTS[1],
            ExperimentConfig::BBounds {} => EXPERIMENTS[2],
            ExperimentConfig::BUniqueness { .. } => EXPERIMENTS[3],
            ExperimentConfig::Equicontinuity { .. } => EXPERIMENTS[4],
            ExperimentConfig::Abp { .. } => EXPERIMENTS[5],
            ExperimentConfig::Gradient { .. } => EXPERIMENTS[6],
            ExperimentConfig::WeakSolve { .. } => EXPERIMENTS[7],
            ExperimentConfig::Viscosity { .. } => EXPERIMENTS[8],
        }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn ten() -> f64 {
    10.0
}
fn two_usize() -> usize {
    2
}
fn viscosity_samples() -> usize {
    64
}
fn condition_samples() -> usize {
    10_000
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads and parses a config file, returning its raw bytes for hashing.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Config("config is not UTF-8".into()))?;
        Ok((Self::parse(&text)?, bytes))
    }

    pub fn metric(&self) -> SymTensorExpr {
        self.geometry
            .metric
            .clone()
            .unwrap_or_else(|| SymTensorExpr::identity(self.geometry.dim))
    }

    pub fn chi(&self) -> SymTensorExpr {
        self.problem
            .chi
            .clone()
            .unwrap_or_else(|| SymTensorExpr::identity(self.geometry.dim))
    }

    pub fn fixture(&self, size: usize) -> Fixture {
        Fixture {
            dim: self.geometry.dim,
            period: self.geometry.period,
            size,
            metric: self.metric(),
            chi: self.chi(),
            family: self.operator.family,
            sigma: self.operator.sigma,
            order: self.geometry.order,
        }
    }

    pub fn first_size(&self) -> usize {
        self.geometry.sizes[0]
    }

    /// Structural checks with field-level messages. Cone admissibility of the
    /// background is checked when the background is built.
    pub fn validate(&self, base: &Path) -> Result<(), CliError> {
        let gm = &self.geometry;
        if !(2..=3).contains(&gm.dim) {
            return Err(field_err(
                "geometry.dim",
                format!("must be 2 or 3, got {}", gm.dim),
            ));
        }
        if gm.sizes.is_empty() {
            return Err(field_err("geometry.sizes", "must not be empty"));
        }
        if let Some(&s) = gm.sizes.iter().find(|&&s| s < 4) {
            return Err(field_err(
                "geometry.sizes",
                format!("every size must be at least 4, got {s}"),
            ));
        }
        if !(gm.period > 0.0 && gm.period.is_finite()) {
            return Err(field_err(
                "geometry.period",
                format!("must be positive, got {}", gm.period),
            ));
        }
        self.metric()
            .validate(gm.dim)
            .map_err(|e| field_err("geometry.metric", e))?;
        self.chi()
            .validate(gm.dim)
            .map_err(|e| field_err("problem.chi", e))?;
        if !(self.operator.sigma > 0.0) {
            return Err(field_err(
                "operator.sigma",
                format!("must be positive, got {}", self.operator.sigma),
            ));
        }
        if let Family::HessianQuotient { k } = self.operator.family {
            if k >= gm.dim {
                return Err(field_err(
                    "operator.k",
                    format!("must be below dim = {}, got {k}", gm.dim),
                ));
            }
        }
        let p = &self.problem;
        let sources = [p.rhs.is_some(), p.rhs_file.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if sources > 1 {
            return Err(field_err("problem", "give at most one of rhs and rhs_file"));
        }
        if let Some(rhs) = &p.rhs {
            rhs.expr
                .validate(gm.dim)
                .map_err(|e| field_err("problem.rhs", e))?;
        }
        if let Some(e) = &p.exact {
            e.validate(gm.dim)
                .map_err(|e| field_err("problem.exact", e))?;
        }
        if let Some(file) = &p.rhs_file {
            let field = self.read_rhs_file(base, file)?;
            let grid = self.grid(self.first_size())?;
            if gm.sizes.len() != 1 || field.grid() != &grid {
                return Err(field_err(
                    "problem.rhs_file",
                    format!(
                        "field grid {:?} (periods {:?}) does not match the single declared size {:?}",
                        field.grid().sizes(),
                        field.grid().periods(),
                        gm.sizes
                    ),
                ));
            }
        }
        self.solver.validate().map_err(|e| field_err("solver", e))?;
        if let Some(c) = &self.conditions {
            if c.counterexample.as_ref().is_some_and(|w| w.len() != gm.dim) {
                return Err(field_err(
                    "conditions.counterexample",
                    "needs one weight per dimension",
                ));
            }
        }
        if let Some(exp) = &self.experiment {
            self.validate_experiment(exp)?;
        }
        Ok(())
    }

    fn validate_experiment(&self, exp: &ExperimentConfig) -> Result<(), CliError> {
        let dim = self.geometry.dim;
        match exp {
            ExperimentConfig::Linf { family, q, p }
            | ExperimentConfig::Equicontinuity {
                family,
                q,
                k_class: p,
            } => {
                for (i, m) in family.iter().enumerate() {
                    m.expr
                        .validate(dim)
                        .map_err(|e| field_err(&format!("experiment.family[{i}]"), e))?;
                }
                if !(*q > 1.0) || !(*p > 0.0) {
                    return Err(field_err(
                        "experiment",
                        format!("need q > 1 and p > 0, got q = {q}, p = {p}"),
                    ));
                }
            }
            ExperimentConfig::Stability {
                f,
                eta,
                deltas,
                p,
                q,
            } => {
                if f.is_none() && self.problem.rhs.is_none() {
                    return Err(field_err("experiment.f", "missing and problem.rhs not set"));
                }
                eta.validate(dim)
                    .map_err(|e| field_err("experiment.eta", e))?;
                if deltas.iter().any(|d| !(*d >= 0.0)) {
                    return Err(field_err("experiment.deltas", "must be non-negative"));
                }
                if !(*p > 0.0) || !(*q > 1.0) {
                    return Err(field_err(
                        "experiment",
                        format!("need q > 1 and p > 0, got q = {q}, p = {p}"),
                    ));
                }
            }
            ExperimentConfig::BUniqueness { schedule, alt } => {
                schedule
                    .validate()
                    .map_err(|e| field_err("experiment.schedule", e))?;
                alt.validate().map_err(|e| field_err("experiment.alt", e))?;
            }
            ExperimentConfig::WeakSolve { schedule }
            | ExperimentConfig::Gradient { schedule, .. } => {
                schedule
                    .validate()
                    .map_err(|e| field_err("experiment.schedule", e))?;
            }
            ExperimentConfig::Viscosity { schedule, tol, .. } => {
                if let Some(s) = schedule {
                    s.validate()
                        .map_err(|e| field_err("experiment.schedule", e))?;
                }
                if tol.is_none() && self.problem.exact.is_none() {
                    return Err(field_err(
                        "experiment.tol",
                        "missing and problem.exact not set for calibration",
                    ));
                }
            }
            ExperimentConfig::Abp {
                resolution, random, ..
            } => {
                if *resolution < 4 {
                    return Err(field_err("experiment.resolution", "must be at least 4"));
                }
                if *random > 0 && dim != 2 {
                    return Err(field_err(
                        "experiment.random",
                        "randomized fixtures are two-dimensional",
                    ));
                }
            }
            ExperimentConfig::BBounds {} => {}
        }
        if let ExperimentConfig::Gradient { center, .. } = exp {
            if center.len() != dim {
                return Err(field_err(
                    "experiment.center",
                    format!("needs {dim} grid coordinates"),
                ));
            }
            if center.iter().any(|&c| c >= self.first_size()) {
                return Err(field_err(
                    "experiment.center",
                    "coordinate outside the grid",
                ));
            }
        }
        Ok(())
    }

    pub fn grid(&self, size: usize) -> Result<PeriodicGrid<f64>, CliError> {
        Ok(self.fixture(size).grid()?)
    }

    fn read_rhs_file(&self, base: &Path, file: &Path) -> Result<ScalarField<f64>, CliError> {
        let path = base.join(file);
        let f = fs::File::open(&path)
            .map_err(|e| field_err("problem.rhs_file", format!("{}: {e}", path.display())))?;
        ScalarField::read_binary(std::io::BufReader::new(f))
            .map_err(|e| field_err("problem.rhs_file", format!("{}: {e}", path.display())))
    }

    /// Paths of every input file the run reads besides the config.
    pub fn input_files(&self, base: &Path) -> Vec<PathBuf> {
        self.problem.rhs_file.iter().map(|f| base.join(f)).collect()
    }

    /// The problem's right-hand side on `bg`.
    pub fn rhs_field(
        &self,
        bg: &Background<f64>,
        base: &Path,
    ) -> Result<ScalarField<f64>, CliError> {
        let p = &self.problem;
        if let Some(rhs) = &p.rhs {
            return Ok(rhs.field(bg)?);
        }
        if let Some(file) = &p.rhs_file {
            return self.read_rhs_file(base, file);
        }
        if let Some(exact) = &p.exact {
            return Ok(manufactured_rhs(
                bg.operator(),
                bg.grid(),
                &self.metric(),
                &self.chi(),
                exact,
            )?);
        }
        Err(field_err(
            "problem.rhs",
            "no right-hand side: set rhs, rhs_file or exact",
        ))
    }

    /// `φ*` sampled on `grid`, normalized to `sup = 0`.
    pub fn exact_field(
        &self,
        grid: &PeriodicGrid<f64>,
    ) -> Result<Option<ScalarField<f64>>, CliError> {
        let Some(e) = &self.problem.exact else {
            return Ok(None);
        };
        let periods = grid.periods().to_vec();
        let f = ScalarField::from_fn(grid, |x| e.eval(x, &periods))?;
        Ok(Some(f.shifted(-f.max())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 7

[geometry]
dim = 2
sizes = [16, 32]
period = 1.0
order = "fourth"

[geometry.metric]
components = [
  { trig = [{ coeff = 1.0, modes = [0, 0], kinds = ["cos", "cos"] }, { coeff = 0.2, modes = [1, 0], kinds = ["sin", "cos"] }] },
  { const = 0.0 },
  { const = 1.0 },
]

[operator]
family = "hessian_quotient"
k = 1
sigma = 0.5

[problem]
chi = { components = [{ const = 2.0 }, { const = 0.0 }, { const = 2.0 }] }
rhs = { expr = { sum = [{ const = 1.0 }, { abs = { trig = [{ coeff = 0.5, modes = [1, 0], kinds = ["sin", "cos"] }] } }] } }

[solver]
continuity_steps = 6

[experiment]
name = "b-uniqueness"
schedule = { levels = 4, shape = "sharp" }
alt = { levels = 4, shape = "raised_cosine" }
"#;

    #[test]
    fn full_config_round_trips() {
        let cfg = RunConfig::parse(FULL).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.operator.family, Family::HessianQuotient { k: 1 });
        assert_eq!(cfg.solver.continuity_steps, 6);
        assert_eq!(cfg.experiment.as_ref().unwrap().name(), "b-uniqueness");
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
        cfg.validate(Path::new(".")).unwrap();
    }

    #[test]
    fn unknown_experiment_lists_valid_names() {
        let text = FULL.replace("name = \"b-uniqueness\"", "name = \"bogus\"");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        for name in EXPERIMENTS {
            assert!(err.contains(name), "{err}");
        }
    }

    #[test]
    fn field_level_messages() {
        let mut cfg = RunConfig::parse(FULL).unwrap();
        cfg.geometry.sizes.clear();
        let err = cfg.validate(Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("geometry.sizes"), "{err}");
        let mut cfg = RunConfig::parse(FULL).unwrap();
        cfg.operator.family = Family::HessianQuotient { k: 2 };
        assert!(cfg
            .validate(Path::new("."))
            .unwrap_err()
            .to_string()
            .contains("operator.k"));
        let mut cfg = RunConfig::parse(FULL).unwrap();
        cfg.problem.rhs_file = Some("missing.bin".into());
        assert!(cfg
            .validate(Path::new("."))
            .unwrap_err()
            .to_string()
            .contains("problem"));
    }
}
