//! The batch runs behind the command-line front end.

use rayon::prelude::*;

use super::report::{PointRecord, Provenance, Report, ResidualRecord, ScanRecord, SectorRecord};
use super::{Check, Scene};
use crate::clifford::weitzenboeck_residual;
use crate::emt::{
    divergence_identity_check, evaluate_tensors, random_bump_perturbation, required_depth,
    sector_tensors, trace_check, variational_oracle,
};
use crate::energycond::{aggregate, point_verdicts, Condition, PointVerdicts};
use crate::error::{Error, Result};
use crate::gauge::{covariant_jet, el_residuals};
use crate::numerics::linspace;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub tool_version: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: crate::numerics::DEFAULT_SEED,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

fn new_report(scene: &Scene, command: &str, opts: &RunOptions) -> Report {
    Report::new(Provenance {
        command: command.to_string(),
        scene_hash: scene.hash.clone(),
        builtin: scene.builtin.clone(),
        tolerances: scene.tolerances,
        seed: opts.seed,
        tool_version: opts.tool_version.clone(),
    })
}

fn region_points(scene: &Scene) -> Vec<Vec<f64>> {
    if scene.region.is_empty() {
        Vec::new()
    } else {
        scene.region.points()
    }
}

/// Sector tensors and traces at every sample.
pub fn run_emt(scene: &Scene, opts: &RunOptions) -> Result<Report> {
    let stencil = scene.tolerances.stencil()?;
    let points = region_points(scene);
    let records = points
        .par_iter()
        .map(|x| -> Result<PointRecord> {
            let ts = evaluate_tensors(&scene.config, x, &stencil)?;
            Ok(PointRecord {
                coordinates: x.clone(),
                sectors: ts
                    .iter()
                    .map(|t| SectorRecord {
                        sector: t.sector,
                        tensor: t.components.transpose().as_slice().to_vec(),
                        trace: t.trace(),
                        verdicts: Vec::new(),
                    })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = new_report(scene, "emt", opts);
    report.points = records;
    Ok(report)
}

fn verdict_records(scene: &Scene, conditions: &[Condition]) -> Result<Vec<PointVerdicts>> {
    let stencil = scene.tolerances.stencil()?;
    let points = region_points(scene);
    let mut out = points
        .par_iter()
        .map(|x| point_verdicts(&scene.config, x, &stencil))
        .collect::<Result<Vec<_>>>()?;
    for p in &mut out {
        for v in &mut p.verdicts {
            v.retain(|c| conditions.contains(&c.condition));
        }
    }
    Ok(out)
}

fn fill_verdicts(report: &mut Report, verdicts: Vec<PointVerdicts>) {
    report.table = aggregate(&verdicts);
    report.points = verdicts
        .into_iter()
        .map(|p| PointRecord {
            coordinates: p.point,
            sectors: p
                .tensors
                .iter()
                .zip(p.verdicts)
                .map(|(t, v)| SectorRecord {
                    sector: t.sector,
                    tensor: t.components.transpose().as_slice().to_vec(),
                    trace: t.trace(),
                    verdicts: v,
                })
                .collect(),
        })
        .collect();
}

/// The energy conditions listed in the scene at every sample.
pub fn run_check(scene: &Scene, opts: &RunOptions) -> Result<Report> {
    let verdicts = verdict_records(scene, &scene.conditions())?;
    let mut report = new_report(scene, "check", opts);
    fill_verdicts(&mut report, verdicts);
    Ok(report)
}

/// All four energy conditions, aggregated per sector.
pub fn run_classify(scene: &Scene, opts: &RunOptions) -> Result<Report> {
    let verdicts = verdict_records(scene, &Condition::ALL)?;
    let mut report = new_report(scene, "classify", opts);
    fill_verdicts(&mut report, verdicts);
    Ok(report)
}

/// Identity suites requested by the scene, or the applicable defaults.
fn suites(scene: &Scene) -> Vec<Check> {
    let listed: Vec<Check> = scene
        .checks
        .iter()
        .copied()
        .filter(|c| !c.is_energy_condition())
        .collect();
    if !listed.is_empty() {
        return listed;
    }
    let mut out = vec![Check::Trace, Check::Divergence];
    if scene.solution() {
        out.push(Check::FieldEquations);
    }
    if scene.config.spinor.is_some() {
        out.push(Check::Weitzenboeck);
    }
    out
}

/// Trace, divergence, field-equation, Weitzenböck and variational residuals.
pub fn run_verify(scene: &Scene, opts: &RunOptions) -> Result<Report> {
    let config = &scene.config;
    let tol = scene.tolerances;
    let stencil = tol.stencil()?;
    let inner = tol.inner_stencil()?;
    let suites = suites(scene);
    let points = region_points(scene);
    let record = |suite: &str, i: usize, x: &[f64], sector: &str, value: f64, tolerance: f64| {
        ResidualRecord {
            suite: suite.to_string(),
            index: Some(i),
            coordinates: x.to_vec(),
            sector: sector.to_string(),
            value,
            tolerance,
        }
    };
    let per_point = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| -> Result<Vec<ResidualRecord>> {
            let mut out = Vec::new();
            for s in &suites {
                match s {
                    Check::Trace => {
                        let jet = covariant_jet(config, x, &stencil, required_depth(config))?;
                        let ts = sector_tensors(&jet, &config.theory, config.connection.is_some())?;
                        for t in &ts {
                            let c = trace_check(t, &jet, &config.theory)?;
                            out.push(record("trace", i, x, t.sector.name(), c.residual, tol.residual));
                        }
                    }
                    Check::Divergence => {
                        let off_shell = config.connection.is_some()
                            || (config.higgs.is_some() && !config.theory.potential.is_conformal());
                        if !off_shell && !scene.solution() {
                            continue;
                        }
                        let d = divergence_identity_check(config, x, &stencil, &inner, scene.solution())?;
                        let (ym, higgs, total) = d.norms();
                        for (name, v) in [("YM", ym), ("Higgs", higgs), ("total", total)] {
                            if let Some(v) = v {
                                out.push(record("divergence", i, x, name, v, tol.residual));
                            }
                        }
                    }
                    Check::FieldEquations if scene.solution() => {
                        let r = el_residuals(config, x, &inner)?;
                        out.push(record("field-equations", i, x, "total", r.max_norm(), tol.residual));
                    }
                    Check::Weitzenboeck if config.spinor.is_some() => {
                        let r = weitzenboeck_residual(config, x, &stencil)?;
                        out.push(record("weitzenboeck", i, x, "Dirac", r, tol.residual));
                    }
                    _ => {}
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = new_report(scene, "verify", opts);
    report.residuals = per_point.into_iter().flatten().collect();
    if suites.contains(&Check::Variational) && !scene.region.is_empty() {
        match variational_check(scene, opts) {
            Ok(r) => report.residuals.push(r),
            Err(Error::OutOfScope(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

fn variational_check(scene: &Scene, opts: &RunOptions) -> Result<ResidualRecord> {
    let stencil = scene.tolerances.stencil()?;
    let pert = random_bump_perturbation(&scene.region, opts.seed);
    let r = variational_oracle(&scene.config, &scene.region, &stencil, pert.as_ref(), 1e-4)?;
    Ok(ResidualRecord {
        suite: "variational".into(),
        index: None,
        coordinates: scene.region.center.clone(),
        sector: "total".into(),
        value: r.rel_error,
        tolerance: scene.tolerances.variational,
    })
}

/// Classifies the scene at `steps` evenly spaced values of a parameter.
pub fn run_scan(
    scene: &Scene,
    opts: &RunOptions,
    parameter: &str,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<Report> {
    if steps == 0 {
        return Err(Error::Parameter("scan needs at least one step".into()));
    }
    let mut report = new_report(scene, "scan", opts);
    for v in linspace(from, to, steps) {
        let s = scene.with_param(parameter, v)?;
        let verdicts = verdict_records(&s, &Condition::ALL)?;
        report.scan.push(ScanRecord {
            parameter: parameter.to_string(),
            value: v,
            table: aggregate(&verdicts),
        });
    }
    Ok(report)
}
