//! Runs one scenario and writes its artifacts.

use std::io::Write;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use mems_core::eigen::{dilation_product, DilationScan};
use mems_core::evolution::{
    evolve, picard_local, touchdown_bounds, PicardReport, StepControls, TerminalStatus,
    TouchdownBounds,
};
use mems_core::grid::sig17;
use mems_core::model::HypothesisReport;
use mems_core::stationary::{
    lambda_bounds, linearized_eigenvalue, minimal_solution, pull_in_voltage, BoundsRecord,
    IterationOptions, IterationStatus, PullInEstimate,
};
use mems_core::verify::{run_all, CriterionOutcome};

use crate::config::{Mode, ReferenceKind, ScenarioConfig};
use crate::output::Artifacts;

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub mode: Mode,
    /// The resolved configuration, defaults included.
    pub config: ScenarioConfig,
    pub seedless: bool,
    pub hypotheses: Option<HypothesisReport>,
    pub result: ModeResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeResult {
    Stationary(StationarySummary),
    Pullin(PullinSummary),
    Bounds(BoundsSummary),
    Evolve(EvolveSummary),
    Picard(PicardReport),
    VerifyAll(VerifySummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySummary {
    pub lambda: f64,
    pub status: IterationStatus,
    pub converged: bool,
    pub iterations: usize,
    pub increment: f64,
    pub residual: f64,
    pub residual_tolerance: f64,
    pub max_v: f64,
    pub min_step: f64,
    /// Smallest eigenvalue of the linearized operator, when converged.
    pub stability_eigenvalue: Option<f64>,
    pub options: IterationOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PullinSummary {
    pub estimate: PullInEstimate,
    pub midpoint: f64,
    pub relative_gap: f64,
    pub tolerance: f64,
    pub options: IterationOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSummary {
    pub bounds: BoundsRecord,
    pub best_upper: f64,
    pub mu1: f64,
    pub scan: DilationScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSummary {
    pub lambda: f64,
    pub status: TerminalStatus,
    pub steps: usize,
    pub floor_steps: usize,
    pub final_max: f64,
    pub final_time: f64,
    pub touchdown: Option<(f64, f64)>,
    pub bounds: TouchdownBounds,
    /// Sup distance to the minimal solution at the end, if requested.
    pub final_distance: Option<f64>,
    pub controls: StepControls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySummary {
    pub criteria: Vec<CriterionOutcome>,
    pub all_passed: bool,
}

impl Summary {
    /// Whether a verification mode found a failed check.
    pub fn failed_assertion(&self) -> bool {
        matches!(&self.result, ModeResult::VerifyAll(v) if !v.all_passed)
    }
}

/// Runs the scenario described by a validated config.
pub fn run(cfg: &ScenarioConfig, seedless: bool, out: &mut dyn Write) -> Result<Summary> {
    let mode = cfg.validate()?;
    let art = Artifacts::create(&cfg.output)?;
    if mode == Mode::VerifyAll {
        return verify_all(cfg, seedless, &art, out);
    }

    let problem = cfg.problem()?;
    let opts = cfg.iteration();
    let lambda = cfg.lambda.unwrap_or(0.0);
    let result = match mode {
        Mode::Stationary => {
            let r = minimal_solution(&problem, lambda, None, &opts)?;
            art.trace(|w| {
                writeln!(w, "k,increment,max_v")?;
                for rec in &r.trace {
                    writeln!(w, "{},{},{}", rec.k, sig17(rec.increment), sig17(rec.max_v))?;
                }
                Ok(())
            })?;
            art.field("v_lambda", &r.v)?;
            let stability = if r.converged() {
                Some(linearized_eigenvalue(&problem, lambda, &r.v)?)
            } else {
                None
            };
            writeln!(
                out,
                "stationary: λ = {lambda}, {:?} after {} iterations, max v = {}",
                r.status,
                r.iterations,
                r.v.max()
            )?;
            ModeResult::Stationary(StationarySummary {
                lambda,
                status: r.status,
                converged: r.converged(),
                iterations: r.iterations,
                increment: r.increment,
                residual: r.residual,
                residual_tolerance: r.residual_tolerance(&problem, lambda),
                max_v: r.v.max(),
                min_step: r.min_step,
                stability_eigenvalue: stability,
                options: opts,
            })
        }
        Mode::Pullin => {
            let est = pull_in_voltage(&problem, cfg.tol.bisection, &opts)?;
            let v = minimal_solution(&problem, est.lambda_lo, None, &opts)?;
            art.trace(|w| {
                writeln!(w, "k,lambda,converged")?;
                for (k, (l, ok)) in est.trials.iter().enumerate() {
                    writeln!(w, "{k},{},{ok}", sig17(*l))?;
                }
                Ok(())
            })?;
            art.field("v_lambda", &v.v)?;
            writeln!(
                out,
                "pullin: λ* in [{}, {}] after {} bisections",
                est.lambda_lo, est.lambda_hi, est.bisections
            )?;
            ModeResult::Pullin(PullinSummary {
                midpoint: est.midpoint(),
                relative_gap: (est.lambda_hi - est.lambda_lo) / est.lambda_hi,
                tolerance: cfg.tol.bisection,
                estimate: est,
                options: opts,
            })
        }
        Mode::Bounds => {
            let scan = DilationScan::default();
            let bounds = lambda_bounds(&problem, scan)?;
            let points = scan.points()?;
            art.trace(|w| {
                writeln!(w, "dilation,product")?;
                for a in points {
                    writeln!(
                        w,
                        "{},{}",
                        sig17(a),
                        sig17(dilation_product(cfg.shape(), a))
                    )?;
                }
                Ok(())
            })?;
            art.field("phi1", &problem.eigen().phi)?;
            writeln!(
                out,
                "bounds: best upper bound on λ* = {}",
                bounds.best_upper()
            )?;
            ModeResult::Bounds(BoundsSummary {
                best_upper: bounds.best_upper(),
                mu1: problem.eigen().mu,
                bounds,
                scan,
            })
        }
        Mode::Evolve => {
            let controls = cfg.controls(&problem);
            let u0 = cfg.initial(&problem);
            let reference = match cfg.evolve.reference {
                ReferenceKind::None => None,
                ReferenceKind::Minimal => {
                    let r = minimal_solution(&problem, lambda, None, &opts)?;
                    r.converged().then_some(r.v)
                }
            };
            let trace = evolve(
                &problem,
                lambda,
                &u0,
                cfg.evolve.t_end,
                &controls,
                reference.as_ref(),
            )?;
            let bounds = touchdown_bounds(&problem, lambda, &u0, 0.5)?;
            art.trace(|w| trace.write_csv(w))?;
            art.field("u_final", &trace.final_field)?;
            if let Some(v) = &reference {
                art.field("v_lambda", v)?;
            }
            let last = trace.samples.last();
            writeln!(out, "evolve: λ = {lambda}, {:?}", trace.status)?;
            ModeResult::Evolve(EvolveSummary {
                lambda,
                status: trace.status,
                steps: trace.steps,
                floor_steps: trace.floor_steps,
                final_max: trace.final_field.max(),
                final_time: last.map_or(0.0, |s| s.t),
                touchdown: trace.touchdown(),
                bounds,
                final_distance: reference
                    .as_ref()
                    .map(|v| trace.final_field.sup_distance(v))
                    .transpose()?,
                controls,
            })
        }
        Mode::Picard => {
            let controls = cfg.controls(&problem);
            let u0 = cfg.initial(&problem);
            let rep = picard_local(&problem, lambda, &u0, cfg.picard.sweeps, &controls)?;
            art.trace(|w| {
                writeln!(w, "sweep,gap")?;
                for (k, g) in rep.gaps.iter().enumerate() {
                    writeln!(w, "{},{}", k + 1, sig17(*g))?;
                }
                Ok(())
            })?;
            if let Some(u) = &rep.final_field {
                art.field("u_picard", u)?;
            }
            writeln!(
                out,
                "picard: T = {}, final gap {:e}, distance to evolve {:e}",
                rep.t_local,
                rep.final_gap(),
                rep.evolve_distance
            )?;
            ModeResult::Picard(rep)
        }
        Mode::VerifyAll => unreachable!(),
    };

    let summary = Summary {
        mode,
        config: cfg.clone(),
        seedless,
        hypotheses: Some(problem.hypotheses().clone()),
        result,
    };
    art.summary(&summary)?;
    Ok(summary)
}

fn verify_all(
    cfg: &ScenarioConfig,
    seedless: bool,
    art: &Artifacts,
    out: &mut dyn Write,
) -> Result<Summary> {
    let mut criteria = run_all();
    let all_passed = criteria.iter().all(|c| c.passed);
    criteria.push(CriterionOutcome {
        id: 12,
        name: "verify-all".into(),
        passed: all_passed,
        detail: format!(
            "{} of {} checks passed",
            criteria.iter().filter(|c| c.passed).count(),
            criteria.len()
        ),
    });

    writeln!(
        out,
        "{:>3}  {:<22} {:<6} detail",
        "id", "criterion", "result"
    )?;
    for c in &criteria {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{:>3}  {:<22} {:<6} {}",
            c.id, c.name, verdict, c.detail
        )?;
    }

    art.trace(|w| {
        writeln!(w, "id,name,passed")?;
        for c in &criteria {
            writeln!(w, "{},{},{}", c.id, c.name, c.passed)?;
        }
        Ok(())
    })?;
    let summary = Summary {
        mode: Mode::VerifyAll,
        config: cfg.clone(),
        seedless,
        hypotheses: None,
        result: ModeResult::VerifyAll(VerifySummary {
            criteria,
            all_passed,
        }),
    };
    art.summary(&summary)
        .with_context(|| format!("in {}", art.root().display()))?;
    Ok(summary)
}
