//! Run configuration: one JSON document per run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use trimer_core::integrate::{EscapeThresholds, IntegratorConfig, ShootingConfig, SweepConfig};
use trimer_core::SystemParams;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: SystemParams,
    pub simulate: SimulateConfig,
    pub equilibria: EquilibriaConfig,
    pub po_search: PoSearchConfig,
    pub hetero: HeteroConfig,
    pub sweep: SweepSection,
    pub infinity: InfinityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: SystemParams::reference_symmetric(),
            simulate: SimulateConfig::default(),
            equilibria: EquilibriaConfig::default(),
            po_search: PoSearchConfig::default(),
            hetero: HeteroConfig::default(),
            sweep: SweepSection::default(),
            infinity: InfinityConfig::default(),
        }
    }
}

/// `initial` is `(y, s, w)` on the h0 chart (`R` slaved) and `(Rt, vt, st, ut)`
/// on the hpos chart; with three values there, `ut >= 0` is solved from the energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub initial: Option<Vec<f64>>,
    /// Stop at escape events; without them the run ends at `max_time`.
    pub events: bool,
    pub integrator: IntegratorConfig,
    pub thresholds: EscapeThresholds,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            initial: None,
            events: true,
            integrator: IntegratorConfig {
                max_step: 0.05,
                ..IntegratorConfig::default()
            },
            thresholds: EscapeThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriaConfig {
    /// Samples per positive-energy family.
    pub samples: usize,
}

impl Default for EquilibriaConfig {
    fn default() -> Self {
        EquilibriaConfig { samples: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoSearchConfig {
    /// `(y0, w0)` on the section `{s = 0, w > 0}`.
    pub seed: [f64; 2],
    pub shooting: ShootingConfig,
}

impl Default for PoSearchConfig {
    fn default() -> Self {
        PoSearchConfig {
            seed: [0.0, 6.67],
            shooting: ShootingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeteroConfig {
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub integrator: IntegratorConfig,
    pub sup_tol: f64,
    pub terminal_tol: f64,
}

impl Default for HeteroConfig {
    fn default() -> Self {
        HeteroConfig {
            sigma_start: -20.0,
            sigma_end: 20.0,
            integrator: IntegratorConfig {
                rel_tol: 1e-13,
                abs_tol: 1e-15,
                max_step: 1e-3,
                ..IntegratorConfig::default()
            },
            sup_tol: 1e-6,
            terminal_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub n: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub integrator: IntegratorConfig,
    pub thresholds: EscapeThresholds,
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepConfig::default();
        SweepSection {
            n: 1000,
            seed: d.seed,
            workers: d.workers,
            integrator: d.integrator,
            thresholds: d.thresholds,
        }
    }
}

impl SweepSection {
    pub fn to_core(&self) -> SweepConfig {
        SweepConfig {
            integrator: self.integrator.clone(),
            thresholds: self.thresholds,
            seed: self.seed,
            workers: self.workers,
        }
    }
}

/// Orbits on the infinity manifold. Each start is `(y, s)` on the h0 chart
/// (with `w >= 0` on `M`) or `(st, chi)` on the hpos chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfinityConfig {
    /// Chart-dependent defaults when absent.
    pub starts: Option<Vec<[f64; 2]>>,
    pub integrator: IntegratorConfig,
    /// Bound on the manifold residual along every orbit.
    pub residual_tol: f64,
    /// Bound on `|dchi/dst - lambda|` (hpos chart).
    pub slope_tol: f64,
}

impl Default for InfinityConfig {
    fn default() -> Self {
        InfinityConfig {
            starts: None,
            integrator: IntegratorConfig {
                rel_tol: 1e-12,
                abs_tol: 1e-14,
                max_step: 0.05,
                max_time: 1e4,
                ..IntegratorConfig::default()
            },
            residual_tol: 1e-9,
            slope_tol: 1e-8,
        }
    }
}

impl InfinityConfig {
    pub fn starts_h0(&self) -> Vec<[f64; 2]> {
        self.starts
            .clone()
            .unwrap_or_else(|| vec![[0.0, 0.0], [-2.0, 0.3], [2.0, -0.3], [0.0, 0.6], [-4.0, -0.5]])
    }

    pub fn starts_hpos(&self) -> Vec<[f64; 2]> {
        self.starts
            .clone()
            .unwrap_or_else(|| vec![[0.0, 0.5], [0.0, 1.5], [0.3, -1.0], [-0.5, 2.5], [0.5, -2.5]])
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg: RunConfig = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        let integrators = [
            ("simulate", &self.simulate.integrator),
            ("po_search.shooting", &self.po_search.shooting.integrator),
            ("hetero", &self.hetero.integrator),
            ("sweep", &self.sweep.integrator),
            ("infinity", &self.infinity.integrator),
        ];
        for (name, ic) in integrators {
            ic.validate()
                .map_err(|e| CliError::Config(format!("{name}.integrator: {e}")))?;
        }
        let thresholds = [
            ("simulate", &self.simulate.thresholds),
            ("sweep", &self.sweep.thresholds),
        ];
        for (name, t) in thresholds {
            if !(t.r_esc > 0.0 && t.s_margin > 0.0 && t.s_margin < 1.0 && t.delta > 0.0) {
                return Err(CliError::Config(format!(
                    "{name}.thresholds must be positive with s_margin < 1: {t:?}"
                )));
            }
        }
        if self.sweep.n == 0 {
            return Err(CliError::Config("sweep.n must be positive".into()));
        }
        if self.sweep.workers == Some(0) {
            return Err(CliError::Config("sweep.workers must be positive".into()));
        }
        if !(self.hetero.sigma_start < self.hetero.sigma_end) {
            return Err(CliError::Config("hetero.sigma_start must be below sigma_end".into()));
        }
        let sh = &self.po_search.shooting;
        if !(sh.tol > 0.0 && sh.fd_step > 0.0 && sh.max_iter > 0) {
            return Err(CliError::Config(
                "po_search.shooting needs positive tol, fd_step and max_iter".into(),
            ));
        }
        if self.infinity.starts.as_ref().is_some_and(|s| s.is_empty()) {
            return Err(CliError::Config("infinity.starts must not be empty".into()));
        }
        for v in self
            .simulate
            .initial
            .iter()
            .flatten()
            .chain(self.infinity.starts.iter().flatten().flatten())
        {
            if !v.is_finite() {
                return Err(CliError::Config("initial states must be finite".into()));
            }
        }
        Ok(())
    }
}
