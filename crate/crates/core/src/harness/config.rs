use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::error::{Result, SaddleError};
use crate::linesearch::LineSearchParams;
use crate::problems::ProblemSpec;
use crate::sesop::SesopConfig;

/// How the starting point of each repetition is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartSpec {
    /// `scale · N(0, I)`
    StandardNormal {
        #[serde(default = "one")]
        scale: f64,
    },
    Zeros,
    /// `z* + scale · N(0, I)`; requires a problem with a known solution.
    NearSolution {
        scale: f64,
    },
}

impl Default for StartSpec {
    fn default() -> Self {
        StartSpec::StandardNormal { scale: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SesopSpec {
    pub id: Option<String>,
    pub d: usize,
    pub max_iters: usize,
    pub eps: f64,
    /// Defaults to 0 on strongly convex-concave problems and 1 otherwise.
    pub tau0: Option<f64>,
    pub tau_shrink: f64,
    pub shrink_trigger: Option<f64>,
    pub ls: LineSearchParams,
    pub max_inner: usize,
    pub exhaustion_limit: usize,
    /// Inject an ADMM displacement every k iterations (Lasso problems only).
    pub boost_every_k: Option<usize>,
}

impl Default for SesopSpec {
    fn default() -> Self {
        let c = SesopConfig::default();
        SesopSpec {
            id: None,
            d: c.d,
            max_iters: c.max_iters,
            eps: c.eps,
            tau0: None,
            tau_shrink: c.tau_shrink,
            shrink_trigger: c.shrink_trigger,
            ls: c.ls,
            max_inner: c.max_inner,
            exhaustion_limit: c.exhaustion_limit,
            boost_every_k: None,
        }
    }
}

impl SesopSpec {
    pub fn resolve(&self, problem: &ProblemSpec) -> SesopConfig {
        let tau0 = self
            .tau0
            .unwrap_or(if problem.is_strongly_convex_concave() { 0.0 } else { 1.0 });
        SesopConfig {
            d: self.d,
            max_iters: self.max_iters,
            eps: self.eps,
            tau0,
            tau_shrink: self.tau_shrink,
            shrink_trigger: self.shrink_trigger,
            ls: self.ls,
            max_inner: self.max_inner,
            exhaustion_limit: self.exhaustion_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSpec {
    pub id: Option<String>,
    pub max_iters: usize,
    pub eps: f64,
    pub ls: LineSearchParams,
    pub fixed_step: Option<f64>,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        let c = BaselineConfig::default();
        BaselineSpec {
            id: None,
            max_iters: c.max_iters,
            eps: c.eps,
            ls: c.ls,
            fixed_step: c.fixed_step,
        }
    }
}

impl BaselineSpec {
    pub fn resolve(&self) -> BaselineConfig {
        BaselineConfig {
            max_iters: self.max_iters,
            eps: self.eps,
            ls: self.ls,
            fixed_step: self.fixed_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmSpec {
    pub id: Option<String>,
    pub max_iters: usize,
    pub eps: f64,
}

impl Default for AdmmSpec {
    fn default() -> Self {
        AdmmSpec {
            id: None,
            max_iters: 1000,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverSpec {
    Sesop(SesopSpec),
    Gda(BaselineSpec),
    Ogda(BaselineSpec),
    Egda(BaselineSpec),
    Admm(AdmmSpec),
}

impl SolverSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SolverSpec::Sesop(_) => "sesop",
            SolverSpec::Gda(_) => "gda",
            SolverSpec::Ogda(_) => "ogda",
            SolverSpec::Egda(_) => "egda",
            SolverSpec::Admm(_) => "admm",
        }
    }

    /// A solver of the given kind with default settings.
    pub fn default_for(kind: &str) -> Result<Self> {
        Ok(match kind {
            "sesop" => SolverSpec::Sesop(SesopSpec::default()),
            "gda" => SolverSpec::Gda(BaselineSpec::default()),
            "ogda" => SolverSpec::Ogda(BaselineSpec::default()),
            "egda" => SolverSpec::Egda(BaselineSpec::default()),
            "admm" => SolverSpec::Admm(AdmmSpec::default()),
            other => return Err(SaddleError::Config(format!("unknown solver kind '{other}'"))),
        })
    }

    pub fn explicit_id(&self) -> Option<&str> {
        match self {
            SolverSpec::Sesop(s) => s.id.as_deref(),
            SolverSpec::Gda(b) | SolverSpec::Ogda(b) | SolverSpec::Egda(b) => b.id.as_deref(),
            SolverSpec::Admm(a) => a.id.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub solvers: Vec<SolverSpec>,
    /// Output directory; the CLI flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Gradient-norm tolerance for iterations-to-tolerance metrics.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Number of steps averaged by the mean convergence rate; all steps when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_steps: Option<usize>,
    /// Write wall-clock times into the CSV traces (breaks byte-reproducibility).
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub dump_matrices: bool,
}

fn default_repetitions() -> usize {
    5
}

fn default_tolerance() -> f64 {
    1e-6
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| SaddleError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SaddleError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            SaddleError::Config(msg) => SaddleError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(SaddleError::Config("repetitions must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(SaddleError::Config("tolerance must be positive".into()));
        }
        if self.rate_steps == Some(0) {
            return Err(SaddleError::Config("rate_steps must be positive".into()));
        }
        match self.start {
            StartSpec::StandardNormal { scale } | StartSpec::NearSolution { scale } if !(scale >= 0.0) => {
                return Err(SaddleError::Config(format!("start scale must be >= 0, got {scale}")));
            }
            _ => {}
        }
        let is_lasso = matches!(self.problem, ProblemSpec::Lasso { .. });
        for s in &self.solvers {
            match s {
                SolverSpec::Sesop(spec) => {
                    spec.resolve(&self.problem).validate().map_err(config_error)?;
                    if spec.boost_every_k.is_some() && !is_lasso {
                        return Err(SaddleError::Config("ADMM boosting requires a lasso problem".into()));
                    }
                    if spec.boost_every_k == Some(0) {
                        return Err(SaddleError::Config("boost_every_k must be positive".into()));
                    }
                }
                SolverSpec::Gda(b) | SolverSpec::Ogda(b) | SolverSpec::Egda(b) => {
                    b.resolve().validate().map_err(config_error)?
                }
                SolverSpec::Admm(a) => {
                    if !is_lasso {
                        return Err(SaddleError::Config("the admm solver requires a lasso problem".into()));
                    }
                    if !(a.eps > 0.0) {
                        return Err(SaddleError::Config("admm eps must be positive".into()));
                    }
                }
            }
        }
        let ids = self.solver_ids();
        let unique: HashSet<&String> = ids.iter().collect();
        if unique.len() != ids.len() {
            return Err(SaddleError::Config("solver ids must be unique".into()));
        }
        Ok(())
    }

    /// Solver identifiers used in file names: the explicit `id`, else the
    /// kind, suffixed with its position when the kind repeats.
    pub fn solver_ids(&self) -> Vec<String> {
        let count = |kind: &str| {
            self.solvers
                .iter()
                .filter(|s| s.explicit_id().is_none() && s.kind() == kind)
                .count()
        };
        self.solvers
            .iter()
            .enumerate()
            .map(|(i, s)| match s.explicit_id() {
                Some(id) => id.to_string(),
                None if count(s.kind()) > 1 => format!("{}_{i}", s.kind()),
                None => s.kind().to_string(),
            })
            .collect()
    }
}

fn config_error(e: SaddleError) -> SaddleError {
    match e {
        SaddleError::InvalidParameter(msg) => SaddleError::Config(msg),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "problem": {"kind": "quadratic", "m": 30, "n": 10, "kappa_x": 100.0, "kappa_y": 10.0},
        "seed": 3,
        "repetitions": 2,
        "solvers": [
            {"kind": "sesop", "d": 3},
            {"kind": "gda", "max_iters": 500},
            {"kind": "egda", "id": "eg", "fixed_step": 0.1}
        ]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.solvers.len(), 3);
        assert_eq!(cfg.start, StartSpec::StandardNormal { scale: 1.0 });
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.solver_ids(), vec!["sesop", "gda", "eg"]);
    }

    #[test]
    fn tau_default_follows_problem_type() {
        let stable = ProblemSpec::Quadratic {
            m: 2,
            n: 2,
            kappa_x: 1.0,
            kappa_y: 1.0,
            kappa_c: None,
            bilinear: false,
        };
        assert_eq!(SesopSpec::default().resolve(&stable).tau0, 0.0);
        assert_eq!(SesopSpec::default().resolve(&ProblemSpec::Dirac { n: 3 }).tau0, 1.0);
        let explicit = SesopSpec {
            tau0: Some(0.3),
            ..Default::default()
        };
        assert_eq!(explicit.resolve(&stable).tau0, 0.3);
    }

    #[test]
    fn repeated_kinds_get_distinct_ids() {
        let text = r#"{"problem": {"kind": "dirac", "n": 4},
            "solvers": [{"kind": "sesop", "tau0": 0.1}, {"kind": "sesop", "tau0": 1.0}]}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.solver_ids(), vec!["sesop_0", "sesop_1"]);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"problem": {"kind": "dirac"}, "solvers": [{"kind": "admm"}]}"#,
            r#"{"problem": {"kind": "dirac"}, "solvers": [{"kind": "sesop", "d": 0}]}"#,
            r#"{"problem": {"kind": "dirac"}, "solvers": [{"kind": "sesop", "boost_every_k": 1}]}"#,
            r#"{"problem": {"kind": "dirac"}, "solvers": [{"kind": "gda", "typo": 1}]}"#,
            r#"{"problem": {"kind": "dirac"}, "solvers": [], "repetitions": 0}"#,
            r#"{"problem": {"kind": "dirac"}, "solvers": [{"kind": "gda", "id": "a"}, {"kind": "ogda", "id": "a"}]}"#,
            r#"{"problem": {"kind": "cubic"}, "solvers": []}"#,
        ];
        for text in bad {
            assert!(
                matches!(ExperimentConfig::from_json(text), Err(SaddleError::Config(_))),
                "{text}"
            );
        }
    }
}
