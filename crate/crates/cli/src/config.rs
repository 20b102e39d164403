//! Scenario configuration: a flat `key = value` file with dotted keys.
//!
//! ```text
//! # unit interval, classical gap
//! mode = pullin
//! domain.shape = interval
//! domain.size = 1
//! domain.N = 400
//! nonlinearity.kind = power-gap
//! nonlinearity.p = 2
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use mems_core::evolution::StepControls;
use mems_core::stationary::IterationOptions;
use mems_core::{Field, ForcingProfile, GridDomain, NonlinearityProfile, Problem, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Stationary,
    Pullin,
    Bounds,
    Evolve,
    Picard,
    VerifyAll,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Stationary => "stationary",
            Mode::Pullin => "pullin",
            Mode::Bounds => "bounds",
            Mode::Evolve => "evolve",
            Mode::Picard => "picard",
            Mode::VerifyAll => "verify-all",
        }
    }

    fn needs_lambda(self) -> bool {
        matches!(self, Mode::Stationary | Mode::Evolve | Mode::Picard)
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "stationary" => Mode::Stationary,
            "pullin" => Mode::Pullin,
            "bounds" => Mode::Bounds,
            "evolve" => Mode::Evolve,
            "picard" => Mode::Picard,
            "verify-all" => Mode::VerifyAll,
            _ => {
                return Err(one_of(&[
                    "stationary",
                    "pullin",
                    "bounds",
                    "evolve",
                    "picard",
                    "verify-all",
                ]))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Interval,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapKind {
    PowerGap,
    ExpGap,
    ConstantOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingKind {
    Constant,
    Bump,
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Zero,
    Constant,
    /// `value` times the normalized principal eigenfunction (max one).
    Eigenmode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    None,
    Minimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub shape: ShapeKind,
    /// Length of the interval or radius of the ball.
    pub size: f64,
    /// Space dimension of a ball.
    pub n: usize,
    /// Number of interior nodes.
    #[serde(rename = "N")]
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub kind: GapKind,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub kind: ForcingKind,
    pub value: f64,
    pub amplitude: f64,
    /// Defaults to the center of the domain.
    pub center: Option<f64>,
    pub width: f64,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub iteration: f64,
    pub max_iter: usize,
    pub bisection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub t_end: f64,
    /// Defaults to `1e-3 L²`.
    pub dt_max: Option<f64>,
    /// Defaults to `10 dt_max`; zero records every step.
    pub sample_interval: Option<f64>,
    pub reference: ReferenceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Option<Mode>,
    pub domain: DomainConfig,
    pub nonlinearity: NonlinearityConfig,
    pub forcing: ForcingConfig,
    pub lambda: Option<f64>,
    pub u0: InitialConfig,
    pub tol: ToleranceConfig,
    pub evolve: EvolveConfig,
    pub picard: PicardConfig,
    pub output: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let it = IterationOptions::default();
        Self {
            mode: None,
            domain: DomainConfig {
                shape: ShapeKind::Interval,
                size: 1.0,
                n: 2,
                nodes: 400,
            },
            nonlinearity: NonlinearityConfig {
                kind: GapKind::PowerGap,
                p: 2.0,
            },
            forcing: ForcingConfig {
                kind: ForcingKind::Constant,
                value: 1.0,
                amplitude: 1.0,
                center: None,
                width: 0.25,
                coeffs: vec![1.0],
            },
            lambda: None,
            u0: InitialConfig {
                kind: InitialKind::Zero,
                value: 0.0,
            },
            tol: ToleranceConfig {
                iteration: it.tol,
                max_iter: it.max_iter,
                bisection: 1e-4,
            },
            evolve: EvolveConfig {
                t_end: 1.0,
                dt_max: None,
                sample_interval: None,
                reference: ReferenceKind::None,
            },
            picard: PicardConfig { sweeps: 8 },
            output: PathBuf::from("mems-out"),
        }
    }
}

fn one_of(options: &[&str]) -> String {
    format!("expected one of {}", options.join(", "))
}

fn parse<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| {
        anyhow!(
            "key `{key}`: cannot parse `{raw}` as {}",
            std::any::type_name::<T>()
        )
    })
}

fn keyword<T>(key: &str, raw: &str, table: &[(&str, T)]) -> Result<T>
where
    T: Copy,
{
    table
        .iter()
        .find(|(name, _)| *name == raw)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
            anyhow!("key `{key}`: `{raw}` is not valid, {}", one_of(&names))
        })
}

impl ScenarioConfig {
    /// Reads a config file on top of the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_text(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            let key = key.trim();
            let raw = raw.trim().trim_matches('"');
            if !seen.insert(key.to_string()) {
                bail!("line {}: key `{key}` given twice", i + 1);
            }
            cfg.set(key, raw)
                .with_context(|| format!("line {}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "mode" => self.mode = Some(raw.parse().map_err(|e| anyhow!("key `mode`: {e}"))?),
            "domain.shape" => {
                self.domain.shape = keyword(
                    key,
                    raw,
                    &[("interval", ShapeKind::Interval), ("ball", ShapeKind::Ball)],
                )?
            }
            "domain.size" => self.domain.size = parse(key, raw)?,
            "domain.n" => self.domain.n = parse(key, raw)?,
            "domain.N" => self.domain.nodes = parse(key, raw)?,
            "nonlinearity.kind" => {
                self.nonlinearity.kind = keyword(
                    key,
                    raw,
                    &[
                        ("power-gap", GapKind::PowerGap),
                        ("exp-gap", GapKind::ExpGap),
                        ("constant-one", GapKind::ConstantOne),
                    ],
                )?
            }
            "nonlinearity.p" => self.nonlinearity.p = parse(key, raw)?,
            "forcing.kind" => {
                self.forcing.kind = keyword(
                    key,
                    raw,
                    &[
                        ("constant", ForcingKind::Constant),
                        ("bump", ForcingKind::Bump),
                        ("polynomial", ForcingKind::Polynomial),
                    ],
                )?
            }
            "forcing.value" => self.forcing.value = parse(key, raw)?,
            "forcing.amplitude" => self.forcing.amplitude = parse(key, raw)?,
            "forcing.center" => self.forcing.center = Some(parse(key, raw)?),
            "forcing.width" => self.forcing.width = parse(key, raw)?,
            "forcing.coeffs" => {
                self.forcing.coeffs = raw
                    .split(',')
                    .map(|c| parse(key, c.trim()))
                    .collect::<Result<_>>()?
            }
            "lambda" => self.lambda = Some(parse(key, raw)?),
            "u0.kind" => {
                self.u0.kind = keyword(
                    key,
                    raw,
                    &[
                        ("zero", InitialKind::Zero),
                        ("constant", InitialKind::Constant),
                        ("eigenmode", InitialKind::Eigenmode),
                    ],
                )?
            }
            "u0.value" => self.u0.value = parse(key, raw)?,
            "tol.iteration" => self.tol.iteration = parse(key, raw)?,
            "tol.max_iter" => self.tol.max_iter = parse(key, raw)?,
            "tol.bisection" => self.tol.bisection = parse(key, raw)?,
            "evolve.t_end" => self.evolve.t_end = parse(key, raw)?,
            "evolve.dt_max" => self.evolve.dt_max = Some(parse(key, raw)?),
            "evolve.sample_interval" => self.evolve.sample_interval = Some(parse(key, raw)?),
            "evolve.reference" => {
                self.evolve.reference = keyword(
                    key,
                    raw,
                    &[
                        ("none", ReferenceKind::None),
                        ("minimal", ReferenceKind::Minimal),
                    ],
                )?
            }
            "picard.sweeps" => self.picard.sweeps = parse(key, raw)?,
            "output.dir" => self.output = PathBuf::from(raw),
            _ => bail!("unknown key `{key}`"),
        }
        Ok(())
    }

    /// Checks every value that does not need a solve.
    pub fn validate(&self) -> Result<Mode> {
        let mode = self
            .mode
            .ok_or_else(|| anyhow!("no mode given: pass a subcommand or set `mode`"))?;
        let positive = |key: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                bail!("key `{key}`: must be positive, got {v}")
            }
        };
        positive("domain.size", self.domain.size)?;
        if self.domain.shape == ShapeKind::Ball && self.domain.n < 2 {
            bail!(
                "key `domain.n`: a ball needs dimension at least 2, got {}",
                self.domain.n
            );
        }
        if self.domain.nodes < mems_core::grid::MIN_NODES {
            bail!(
                "key `domain.N`: need at least {} nodes, got {}",
                mems_core::grid::MIN_NODES,
                self.domain.nodes
            );
        }
        if self.nonlinearity.kind == GapKind::PowerGap {
            positive("nonlinearity.p", self.nonlinearity.p)?;
        }
        if self.forcing.kind == ForcingKind::Bump {
            positive("forcing.width", self.forcing.width)?;
        }
        if self.forcing.kind == ForcingKind::Polynomial && self.forcing.coeffs.is_empty() {
            bail!("key `forcing.coeffs`: need at least one coefficient");
        }
        positive("tol.iteration", self.tol.iteration)?;
        positive("tol.bisection", self.tol.bisection)?;
        if self.tol.max_iter == 0 {
            bail!("key `tol.max_iter`: must be at least 1");
        }
        if !(self.evolve.t_end.is_finite() && self.evolve.t_end >= 0.0) {
            bail!(
                "key `evolve.t_end`: must be nonnegative, got {}",
                self.evolve.t_end
            );
        }
        if let Some(dt) = self.evolve.dt_max {
            positive("evolve.dt_max", dt)?;
        }
        if let Some(s) = self.evolve.sample_interval {
            if !(s.is_finite() && s >= 0.0) {
                bail!("key `evolve.sample_interval`: must be nonnegative, got {s}");
            }
        }
        if !(self.u0.value.is_finite() && self.u0.value < 1.0) {
            bail!(
                "key `u0.value`: initial data must stay below 1, got {}",
                self.u0.value
            );
        }
        match self.lambda {
            Some(l) if !(l.is_finite() && l >= 0.0) => {
                bail!("key `lambda`: must be finite and nonnegative, got {l}")
            }
            None if mode.needs_lambda() => bail!("key `lambda`: required for mode {}", mode.name()),
            _ => {}
        }
        if mode == Mode::Picard && self.picard.sweeps < 2 {
            bail!("key `picard.sweeps`: need at least 2 sweeps to measure a gap");
        }
        Ok(mode)
    }

    pub fn shape(&self) -> Shape {
        match self.domain.shape {
            ShapeKind::Interval => Shape::Interval {
                length: self.domain.size,
            },
            ShapeKind::Ball => Shape::Ball {
                dim: self.domain.n,
                radius: self.domain.size,
            },
        }
    }

    pub fn gap(&self) -> Result<NonlinearityProfile> {
        Ok(match self.nonlinearity.kind {
            GapKind::PowerGap => NonlinearityProfile::power_gap(self.nonlinearity.p)
                .context("key `nonlinearity.p`")?,
            GapKind::ExpGap => NonlinearityProfile::ExpGap,
            GapKind::ConstantOne => NonlinearityProfile::ConstantOne,
        })
    }

    pub fn forcing(&self) -> Result<ForcingProfile> {
        let f = &self.forcing;
        let center = f.center.unwrap_or_else(|| self.shape().center());
        Ok(match f.kind {
            ForcingKind::Constant => ForcingProfile::constant(f.value),
            ForcingKind::Bump => {
                ForcingProfile::bump(f.amplitude, center, f.width).context("key `forcing.width`")?
            }
            ForcingKind::Polynomial => ForcingProfile::polynomial(f.coeffs.clone(), center)
                .context("key `forcing.coeffs`")?,
        })
    }

    pub fn problem(&self) -> Result<Problem> {
        let grid = GridDomain::build(self.shape(), self.domain.nodes).context("key `domain`")?;
        Problem::new(grid, self.gap()?, self.forcing()?).context("building the problem")
    }

    pub fn iteration(&self) -> IterationOptions {
        IterationOptions {
            tol: self.tol.iteration,
            max_iter: self.tol.max_iter,
            ..IterationOptions::default()
        }
    }

    pub fn controls(&self, problem: &Problem) -> StepControls {
        let mut c = StepControls::for_grid(problem.grid());
        if let Some(dt) = self.evolve.dt_max {
            c.dt_max = dt;
            c.sample_interval = 10.0 * dt;
            c.dt_min = c.dt_min.min(dt);
        }
        if let Some(s) = self.evolve.sample_interval {
            c.sample_interval = s;
        }
        c
    }

    pub fn initial(&self, problem: &Problem) -> Field {
        let grid = problem.grid();
        match self.u0.kind {
            InitialKind::Zero => Field::zeros(grid),
            InitialKind::Constant => Field::constant(grid, self.u0.value),
            InitialKind::Eigenmode => {
                let phi = &problem.eigen().phi;
                phi.scale(self.u0.value / phi.max())
            }
        }
    }
}
