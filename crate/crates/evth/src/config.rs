//! Run configuration, read from a TOML file.

use std::path::{Path, PathBuf};

use evth_core::{
    Direction, DomainSpec, EvolutionConfig, GridSpec, KasnerParams, MonitorConfig, ThresholdConfig,
};
use serde::Deserialize;

use crate::error::RunError;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub thresholds: ThresholdSection,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub radius_diagnostics: RadiusSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub npts: usize,
    pub period: f64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSection {
    Flat,
    Kasner {
        exponents: [f64; 3],
        #[serde(default = "one")]
        density: f64,
        #[serde(default)]
        tau: f64,
    },
    Perturbed {
        amplitude: f64,
        wavevector: [i64; 3],
    },
    /// Start a fresh run (step 0, zeroed accumulators) from a saved slice.
    Checkpoint { path: PathBuf },
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DirectionName {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    pub cfl: f64,
    pub tau_end: f64,
    pub direction: DirectionName,
    pub max_steps: usize,
    pub dt_floor: f64,
    pub fixed_dt: Option<f64>,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        let d = EvolutionConfig::default();
        EvolutionSection {
            cfl: d.cfl_factor,
            tau_end: d.tau_end,
            direction: DirectionName::Forward,
            max_steps: d.max_steps,
            dt_floor: d.dt_floor,
            fixed_dt: d.fixed_dt,
        }
    }
}

/// Absent thresholds never fire.
#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub pointwise: Option<f64>,
    pub integral: Option<f64>,
    pub pi_l1: Option<f64>,
    pub spectrum: Option<f64>,
    pub reference_scale: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub enabled: bool,
    pub center: Option<[f64; 3]>,
    pub radius: Option<f64>,
    pub halo_cells: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            enabled: false,
            center: None,
            radius: None,
            halo_cells: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RadiusSection {
    pub enabled: bool,
    /// Ball radii for the volume ratio, in coordinate length.
    pub scales: Vec<f64>,
    pub l: usize,
    /// Defaults to the domain centre, then the middle of the torus.
    pub point: Option<[f64; 3]>,
    /// Upper end of the chart-radius search; a quarter period by default.
    pub max_radius: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// Write a checkpoint every this many steps; 0 writes only the final one.
    pub checkpoint_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            csv: None,
            checkpoint: None,
            checkpoint_stride: 0,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    /// Read a config file. Relative paths inside it are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let Some(p) = self.output.csv.as_mut() {
            fix(p);
        }
        if let Some(p) = self.output.checkpoint.as_mut() {
            fix(p);
        }
        if let InitialSection::Checkpoint { path } = &mut self.initial {
            fix(path);
        }
    }

    pub fn grid(&self) -> Result<GridSpec, RunError> {
        Ok(GridSpec::new(self.grid.npts, self.grid.period)?)
    }

    pub fn kasner(&self) -> Result<Option<(KasnerParams, f64)>, RunError> {
        match self.initial {
            InitialSection::Kasner {
                exponents: [p1, p2, p3],
                density,
                tau,
            } => Ok(Some((KasnerParams::new(p1, p2, p3, density)?, tau))),
            _ => Ok(None),
        }
    }

    pub fn evolution(&self) -> Result<EvolutionConfig, RunError> {
        let e = &self.evolution;
        let cfg = EvolutionConfig {
            cfl_factor: e.cfl,
            tau_end: e.tau_end,
            max_steps: e.max_steps,
            direction: match e.direction {
                DirectionName::Forward => Direction::Forward,
                DirectionName::Backward => Direction::Backward,
            },
            dt_floor: e.dt_floor,
            fixed_dt: e.fixed_dt,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn thresholds(&self) -> Result<ThresholdConfig, RunError> {
        let t = &self.thresholds;
        let d = ThresholdConfig::default();
        let out = ThresholdConfig {
            pointwise: t.pointwise.unwrap_or(d.pointwise),
            integral: t.integral.unwrap_or(d.integral),
            pi_l1: t.pi_l1.unwrap_or(d.pi_l1),
            spectrum_bound: t.spectrum.unwrap_or(d.spectrum_bound),
            reference_scale: t.reference_scale.unwrap_or(d.reference_scale),
        };
        out.validate()?;
        Ok(out)
    }

    fn middle(&self) -> [f64; 3] {
        [0.5 * self.grid.period; 3]
    }

    pub fn domain(&self, grid: &GridSpec) -> Result<Option<DomainSpec>, RunError> {
        let d = &self.domain;
        if !d.enabled {
            return Ok(None);
        }
        let radius = d
            .radius
            .ok_or_else(|| invalid("domain.radius is required when domain.enabled = true"))?;
        let center = d.center.unwrap_or(self.middle());
        Ok(Some(DomainSpec::with_halo_cells(
            grid,
            center,
            radius,
            d.halo_cells,
        )?))
    }

    pub fn monitors(&self, grid: &GridSpec) -> Result<MonitorConfig, RunError> {
        let domain = self.domain(grid)?;
        Ok(MonitorConfig {
            thresholds: self.thresholds()?,
            domain,
            center: Some(domain.map_or(self.middle(), |d| d.center())),
        })
    }

    pub fn radius_point(&self) -> [f64; 3] {
        self.radius_diagnostics
            .point
            .or(self.domain.center.filter(|_| self.domain.enabled))
            .unwrap_or(self.middle())
    }

    /// Check everything that can be checked without building the initial slice.
    pub fn validate(&self) -> Result<(), RunError> {
        let grid = self.grid()?;
        self.kasner()?;
        self.evolution()?;
        self.monitors(&grid)?;
        if let InitialSection::Perturbed { amplitude, .. } = self.initial {
            if !amplitude.is_finite() {
                return Err(invalid(format!("initial.amplitude = {amplitude}")));
            }
        }
        let r = &self.radius_diagnostics;
        if r.enabled {
            if r.scales.is_empty() || r.scales.iter().any(|s| !(*s > 0.0)) {
                return Err(invalid("radius_diagnostics.scales must be positive and non-empty"));
            }
            if let Some(m) = r.max_radius {
                if !(m > 0.0) {
                    return Err(invalid(format!("radius_diagnostics.max_radius = {m}")));
                }
            }
        }
        Ok(())
    }
}
