//! Experiment plans: a TOML file naming a generator grid, methods, level,
//! replication count and base seed.
//!
//! Any scalar under `[generator]` or `[noise]` may be replaced by an array;
//! the plan then runs the Cartesian product of all arrays, keys taken in
//! sorted order, generator keys outermost.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plis_core::procedures::Method;
use plis_core::simgen::{Generator, GeneratorConfig, Noise};
use plis_core::NullDistribution;
use serde::{Deserialize, Serialize};

use crate::{AppError, AppResult};

pub const BUNDLED: &[(&str, &str)] = &[
    ("fig2", include_str!("../plans/fig2.toml")),
    ("fig3", include_str!("../plans/fig3.toml")),
    ("e7", include_str!("../plans/e7.toml")),
    ("covariate", include_str!("../plans/covariate.toml")),
    ("semi_supervised", include_str!("../plans/semi_supervised.toml")),
    ("derandomized", include_str!("../plans/derandomized.toml")),
    ("variants", include_str!("../plans/variants.toml")),
];

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    name: String,
    /// Mandatory: nothing is ever seeded from the clock.
    seed: u64,
    reps: usize,
    m: usize,
    #[serde(default = "default_alpha")]
    alpha: f64,
    methods: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    null: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_nulls: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    generator: toml::Table,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<toml::Table>,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub name: String,
    pub seed: u64,
    pub reps: usize,
    pub alpha: f64,
    pub f0: NullDistribution,
    pub methods: Vec<Method>,
    pub cells: Vec<GeneratorConfig>,
    pub output: Option<PathBuf>,
    source: PlanFile,
}

/// Every combination of the array-valued entries.
fn expand(table: &toml::Table) -> Vec<toml::Table> {
    let mut out = vec![toml::Table::new()];
    for (key, value) in table {
        let choices = match value {
            toml::Value::Array(a) => a.clone(),
            other => vec![other.clone()],
        };
        out = out
            .into_iter()
            .flat_map(|t| {
                choices.iter().map(move |c| {
                    let mut t = t.clone();
                    t.insert(key.clone(), c.clone());
                    t
                })
            })
            .collect();
    }
    out
}

impl ExperimentPlan {
    pub fn parse(text: &str) -> AppResult<Self> {
        let file: PlanFile = toml::from_str(text).map_err(|e| AppError::config(format!("plan: {e}")))?;
        Self::resolve(file)
    }

    fn resolve(file: PlanFile) -> AppResult<Self> {
        let cfg = |msg: String| AppError::config(format!("plan `{}`: {msg}", file.name));
        if file.reps == 0 {
            return Err(cfg("reps must be at least 1".into()));
        }
        if !(file.alpha > 0.0 && file.alpha < 1.0) {
            return Err(cfg(format!("alpha must lie in (0, 1), got {}", file.alpha)));
        }
        if file.methods.is_empty() {
            return Err(cfg("no methods listed".into()));
        }
        let methods = file
            .methods
            .iter()
            .map(|name| name.parse::<Method>().map_err(|e| cfg(e.to_string())))
            .collect::<AppResult<Vec<_>>>()?;
        let f0: NullDistribution = match &file.null {
            Some(s) => s.parse().map_err(|e: plis_core::Error| cfg(e.to_string()))?,
            None => NullDistribution::default(),
        };
        let needs_nulls = methods.iter().any(Method::needs_nulls);
        let noise_grid = file.noise.as_ref().map_or_else(|| vec![None], |t| expand(t).into_iter().map(Some).collect());
        let mut cells = Vec::new();
        for g in expand(&file.generator) {
            let generator: Generator = toml::Value::Table(g).try_into().map_err(|e| cfg(format!("generator: {e}")))?;
            for n in &noise_grid {
                let noise: Noise = match n {
                    Some(t) => toml::Value::Table(t.clone()).try_into().map_err(|e| cfg(format!("noise: {e}")))?,
                    None => Noise::Iid,
                };
                let n_nulls = file.n_nulls.or(needs_nulls.then_some(2 * file.m));
                let cell = GeneratorConfig { m: file.m, generator, noise, n_nulls };
                cell.validate().map_err(|e| cfg(e.to_string()))?;
                cells.push(cell);
            }
        }
        if cells.is_empty() {
            return Err(cfg("the generator grid is empty".into()));
        }
        Ok(ExperimentPlan {
            name: file.name.clone(),
            seed: file.seed,
            reps: file.reps,
            alpha: file.alpha,
            f0,
            methods,
            cells,
            output: file.output.clone(),
            source: file,
        })
    }

    pub fn bundled(name: &str) -> Option<Self> {
        BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::parse(text).expect("bundled plans are valid"))
    }

    /// A plan file path, or the name of a bundled plan.
    pub fn load(spec: &str) -> AppResult<Self> {
        let path = Path::new(spec);
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
            return Self::parse(&text);
        }
        Self::bundled(spec).ok_or_else(|| {
            let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
            AppError::config(format!("no plan file `{spec}` and no bundled plan of that name ({})", names.join(", ")))
        })
    }

    pub fn with_reps(mut self, reps: usize) -> AppResult<Self> {
        self.source.reps = reps;
        Self::resolve(self.source)
    }

    pub fn with_seed(mut self, seed: u64) -> AppResult<Self> {
        self.source.seed = seed;
        Self::resolve(self.source)
    }

    /// The plan with every default filled in, followed by the expanded
    /// cells as comments.
    pub fn to_toml(&self) -> String {
        let mut full = self.source.clone();
        full.null = Some(self.f0.to_string());
        full.methods = self.methods.iter().map(ToString::to_string).collect();
        let mut s = toml::to_string(&full).expect("plans serialize");
        for (i, c) in self.cells.iter().enumerate() {
            let _ = writeln!(s, "# cell {i}: {}", serde_json::to_string(c).expect("cells serialize"));
        }
        s
    }
}
