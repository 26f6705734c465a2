//! Run a configuration to completion: initial data, evolution, artifacts and
//! the final status record.

use std::io::Write;
use std::path::{Path, PathBuf};

use evth_core::{
    flat_state, kasner_state, perturbed_flat, radius_report, Evolver, MonitorReport, SliceState,
    Termination,
};
use serde::Serialize;

use crate::checkpoint;
use crate::config::{InitialSection, RunConfig};
use crate::csv::CsvWriter;
use crate::error::RunError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BREAKDOWN: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

pub fn exit_code(t: Termination) -> i32 {
    match t {
        Termination::TauEnd | Termination::MaxSteps | Termination::DomainCrushed => EXIT_OK,
        Termination::MonitorThreshold(_) => EXIT_BREAKDOWN,
        Termination::DtUnderflow | Termination::StepFailed { .. } => EXIT_NUMERICAL,
    }
}

/// Extremes over every row of the run.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct WorstMonitors {
    pub gauge_residual: f64,
    pub ham_sup: f64,
    pub mom_sup: f64,
    pub breakdown_pointwise: f64,
    pub breakdown_integral: f64,
    pub pi_l1: f64,
    pub curvature_l2: f64,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
}

impl WorstMonitors {
    fn new(r: &MonitorReport) -> Self {
        WorstMonitors {
            gauge_residual: r.gauge_residual,
            ham_sup: r.ham_sup,
            mom_sup: r.mom_sup,
            breakdown_pointwise: r.breakdown_pointwise,
            breakdown_integral: r.breakdown_integral_accum,
            pi_l1: r.pi_l1linf_accum,
            curvature_l2: r.curvature_l2,
            spectrum_min: r.spectrum_min,
            spectrum_max: r.spectrum_max,
        }
    }

    fn absorb(&mut self, r: &MonitorReport) {
        let o = WorstMonitors::new(r);
        self.gauge_residual = self.gauge_residual.max(o.gauge_residual);
        self.ham_sup = self.ham_sup.max(o.ham_sup);
        self.mom_sup = self.mom_sup.max(o.mom_sup);
        self.breakdown_pointwise = self.breakdown_pointwise.max(o.breakdown_pointwise);
        self.breakdown_integral = self.breakdown_integral.max(o.breakdown_integral);
        self.pi_l1 = self.pi_l1.max(o.pi_l1);
        self.curvature_l2 = self.curvature_l2.max(o.curvature_l2);
        self.spectrum_min = self.spectrum_min.min(o.spectrum_min);
        self.spectrum_max = self.spectrum_max.max(o.spectrum_max);
    }
}

/// The record printed as the last line of standard output.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Summary {
    pub termination: String,
    pub final_tau: f64,
    pub proper_time: f64,
    pub worst_monitors: WorstMonitors,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub exit_code: i32,
    pub termination: Termination,
    pub summary: Summary,
    pub steps: usize,
    /// Error text behind a numerical failure.
    pub failure: Option<String>,
}

#[derive(Serialize)]
struct ScaleJson {
    scale: f64,
    ratio: f64,
    reliable: bool,
}

#[derive(Serialize)]
struct RadiusJson {
    tau: f64,
    point: [f64; 3],
    volume_radius_ratio: f64,
    chart_radius: f64,
    scales: Vec<ScaleJson>,
}

fn radius_line(cfg: &RunConfig, s: &SliceState) -> Result<String, evth_core::Error> {
    let r = &cfg.radius_diagnostics;
    let max_r = r.max_radius.unwrap_or(0.25 * cfg.grid.period);
    let report = radius_report(s.metric(), cfg.radius_point(), &r.scales, r.l, max_r)?;
    let json = RadiusJson {
        tau: s.tau(),
        point: report.point,
        volume_radius_ratio: report.volume_radius_ratio,
        chart_radius: report.chart_radius,
        scales: report
            .scales_tested
            .iter()
            .map(|x| ScaleJson {
                scale: x.scale,
                ratio: x.ratio,
                reliable: x.reliable,
            })
            .collect(),
    };
    Ok(format!(
        "{{\"radius_diagnostics\":{}}}",
        serde_json::to_string(&json).unwrap()
    ))
}

fn initial_state(cfg: &RunConfig) -> Result<SliceState, RunError> {
    let grid = cfg.grid()?;
    let s = match &cfg.initial {
        InitialSection::Flat => flat_state(grid),
        InitialSection::Kasner { .. } => {
            let (kp, tau) = cfg.kasner()?.expect("kasner section");
            kasner_state(&kp, tau, grid)?
        }
        InitialSection::Perturbed {
            amplitude,
            wavevector,
        } => perturbed_flat(grid, *amplitude, *wavevector)?,
        InitialSection::Checkpoint { path } => {
            let c = checkpoint::read(path)?;
            check_grid(path, c.state.grid(), cfg)?;
            c.state
        }
    };
    Ok(s)
}

fn check_grid(path: &Path, g: &evth_core::GridSpec, cfg: &RunConfig) -> Result<(), RunError> {
    if g.npts() != cfg.grid.npts || g.period() != cfg.grid.period {
        return Err(RunError::Config(format!(
            "grid mismatch: checkpoint {} has npts {} period {}, config has npts {} period {}",
            path.display(),
            g.npts(),
            g.period(),
            cfg.grid.npts,
            cfg.grid.period
        )));
    }
    Ok(())
}

/// `{step}` in the configured checkpoint path is replaced by the step number.
fn checkpoint_path(template: &Path, step: usize) -> PathBuf {
    let s = template.to_string_lossy();
    if s.contains("{step}") {
        PathBuf::from(s.replace("{step}", &step.to_string()))
    } else {
        template.to_owned()
    }
}

/// Run `cfg`, optionally continuing from a checkpoint written by an earlier
/// run. Radius diagnostics (if enabled) and the summary record go to `out`,
/// one JSON object per line, the summary last.
pub fn run(cfg: &RunConfig, resume: Option<&Path>, out: &mut dyn Write) -> Result<RunResult, RunError> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let evolution = cfg.evolution()?;
    let monitors = cfg.monitors(&grid)?;

    let mut ev = match resume {
        Some(path) => {
            let c = checkpoint::read(path)?;
            check_grid(path, c.state.grid(), cfg)?;
            let progress = c.progress.ok_or_else(|| {
                RunError::checkpoint(path, "no run progress recorded; use initial.kind = \"checkpoint\"")
            })?;
            Evolver::resume(c.state, &evolution, &monitors, progress)?
        }
        None => Evolver::new(initial_state(cfg)?, &evolution, &monitors)?,
    };

    let print = |out: &mut dyn Write, line: &str| {
        writeln!(out, "{line}").map_err(|e| RunError::io(Path::new("<stdout>"), e))
    };
    if cfg.radius_diagnostics.enabled {
        print(out, &radius_line(cfg, ev.state())?)?;
    }

    let mut csv = match &cfg.output.csv {
        Some(p) => Some(CsvWriter::create(p)?),
        None => None,
    };
    let mut worst = WorstMonitors::new(ev.report());
    if resume.is_none() {
        if let Some(w) = csv.as_mut() {
            w.push(ev.report())?;
        }
    }
    let stride = cfg.output.checkpoint_stride;
    while ev.advance() {
        let r = *ev.report();
        worst.absorb(&r);
        if let Some(w) = csv.as_mut() {
            w.push(&r)?;
        }
        if let (Some(p), true) = (&cfg.output.checkpoint, stride > 0 && r.step % stride == 0) {
            checkpoint::write(&checkpoint_path(p, r.step), ev.state(), Some(ev.progress()))?;
        }
    }
    if let Some(w) = csv {
        w.finish()?;
    }
    let termination = ev.termination().unwrap_or(Termination::MaxSteps);
    if let Some(p) = &cfg.output.checkpoint {
        let step = ev.progress().step;
        checkpoint::write(&checkpoint_path(p, step), ev.state(), Some(ev.progress()))?;
    }
    if cfg.radius_diagnostics.enabled {
        let line = radius_line(cfg, ev.state()).unwrap_or_else(|e| {
            format!(
                "{{\"radius_diagnostics\":{{\"tau\":{},\"error\":{}}}}}",
                serde_json::to_string(&ev.state().tau()).unwrap(),
                serde_json::to_string(&e.to_string()).unwrap()
            )
        });
        print(out, &line)?;
    }

    let summary = Summary {
        termination: termination.name(),
        final_tau: ev.report().tau,
        proper_time: ev.extent(),
        worst_monitors: worst,
    };
    print(out, &serde_json::to_string(&summary).unwrap())?;
    Ok(RunResult {
        exit_code: exit_code(termination),
        termination,
        summary,
        steps: ev.progress().step,
        failure: ev.failure().map(|e| e.to_string()),
    })
}
