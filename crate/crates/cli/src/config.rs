//! Run configuration: TOML file plus command-line overrides.

use edchain::{ModelParams, ParitySector};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub system: SystemSection,
    pub sweep: SweepSection,
    pub observables: ObservablesSection,
    pub run: RunSection,
    pub export: ExportSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSection::default(),
            system: SystemSection::default(),
            sweep: SweepSection::default(),
            observables: ObservablesSection::default(),
            run: RunSection::default(),
            export: ExportSection::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub t: f64,
    pub u_plus: f64,
    pub u_minus: f64,
    pub u: f64,
    /// Forward spin-orbital hop amplitude b + alpha_R.
    pub so_fwd: f64,
    /// Backward spin-orbital hop amplitude b - alpha_R.
    pub so_bwd: f64,
    /// Pair-exchange coupling in units of |t|, used by single-point commands.
    pub w_over_t: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::preset(0.0);
        ModelSection {
            t: p.t,
            u_plus: p.u_plus,
            u_minus: p.u_minus,
            u: p.u,
            so_fwd: p.so_fwd,
            so_bwd: p.so_bwd,
            w_over_t: 0.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub l: usize,
    pub n: usize,
    /// "even", "odd", or "all".
    pub sector: String,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            l: 7,
            n: 7,
            sector: "even".into(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// "lo:hi:step" in W/T.
    pub grid: String,
    pub k: usize,
    pub tol: f64,
    /// Refine around a detected gap minimum (lz command).
    pub refine_window: f64,
    pub refine_step: f64,
    /// Sorted-level pair for the crossing search.
    pub level_lo: usize,
    pub level_hi: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            grid: "0:20:0.25".into(),
            k: 6,
            tol: 1e-10,
            refine_window: 1.0,
            refine_step: 0.025,
            level_lo: 0,
            level_hi: 2,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservablesSection {
    /// How many low-energy states to evaluate.
    pub states: usize,
    pub densities: bool,
    pub green: bool,
    pub green_cross_orbital: bool,
    /// (L_A, L_C) pairs for edge-edge mutual information.
    pub mi_pairs: Vec<[usize; 2]>,
    /// Prefix cuts L_A for the local parity expectation.
    pub parity_cuts: Vec<usize>,
}

impl Default for ObservablesSection {
    fn default() -> Self {
        ObservablesSection {
            states: 4,
            densities: true,
            green: true,
            green_cross_orbital: false,
            mi_pairs: vec![[1, 1]],
            parity_cuts: vec![1, 2, 3],
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// 0 leaves the global thread pool at its default size.
    pub threads: usize,
    pub out: PathBuf,
    /// Entropy/MI logarithm base: "e" (nats) or "2" (bits).
    pub log_base: String,
    /// Physical tunneling energy scale in h*Hz for the LZ analysis.
    pub t_phys_hz: f64,
    /// Ramp rates to evaluate, h*Hz/s.
    pub lz_rates: Vec<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 1,
            threads: 0,
            out: PathBuf::from("out"),
            log_base: "e".into(),
            t_phys_hz: 100.0,
            lz_rates: vec![136.0, 1360.0, 13600.0],
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportSection {
    /// Write the sector Hamiltonian in Matrix Market coordinate format.
    pub matrix_market: bool,
    /// Emit a gnuplot script next to each CSV.
    pub gnuplot: bool,
}

impl Default for ExportSection {
    fn default() -> Self {
        ExportSection {
            matrix_market: false,
            gnuplot: true,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub w_over_t: Option<f64>,
    pub grid: Option<String>,
    pub k: Option<usize>,
    pub sector: Option<String>,
    pub log_base: Option<String>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<RunConfig, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str(&text)
                    .map_err(|e| ConfigError(format!("cannot parse {}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = &ov.out {
            cfg.run.out = v.clone();
        }
        if let Some(v) = ov.seed {
            cfg.run.seed = v;
        }
        if let Some(v) = ov.threads {
            cfg.run.threads = v;
        }
        if let Some(v) = ov.w_over_t {
            cfg.model.w_over_t = v;
        }
        if let Some(v) = &ov.grid {
            cfg.sweep.grid = v.clone();
        }
        if let Some(v) = ov.k {
            cfg.sweep.k = v;
        }
        if let Some(v) = &ov.sector {
            cfg.system.sector = v.clone();
        }
        if let Some(v) = &ov.log_base {
            cfg.run.log_base = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let l = self.system.l;
        if l < 1 || l > 15 {
            return Err(ConfigError(format!("L = {l} out of supported range 1..=15")));
        }
        if self.system.n > 4 * l {
            return Err(ConfigError(format!(
                "N = {} exceeds the {} modes of an L = {l} chain",
                self.system.n,
                4 * l
            )));
        }
        self.sector()?;
        self.grid_bounds()?;
        if self.sweep.k < 1 {
            return Err(ConfigError("sweep.k must be at least 1".into()));
        }
        if !(self.sweep.tol > 0.0) {
            return Err(ConfigError("sweep.tol must be positive".into()));
        }
        if self.sweep.level_lo >= self.sweep.k || self.sweep.level_hi >= self.sweep.k {
            return Err(ConfigError(format!(
                "tracked branches ({}, {}) need sweep.k > {}",
                self.sweep.level_lo,
                self.sweep.level_hi,
                self.sweep.level_lo.max(self.sweep.level_hi)
            )));
        }
        match self.run.log_base.as_str() {
            "e" | "2" => {}
            other => {
                return Err(ConfigError(format!(
                    "run.log_base must be \"e\" or \"2\", got \"{other}\""
                )))
            }
        }
        for pair in &self.observables.mi_pairs {
            let [a, c] = *pair;
            if a < 1 || c < 1 || a + c >= l {
                return Err(ConfigError(format!(
                    "mi pair ({a}, {c}) needs 1 <= L_A, L_C and L_A + L_C < L = {l}"
                )));
            }
        }
        for &cut in &self.observables.parity_cuts {
            if cut < 1 || cut > l {
                return Err(ConfigError(format!("parity cut {cut} out of 1..={l}")));
            }
        }
        if self.observables.states < 1 {
            return Err(ConfigError("observables.states must be at least 1".into()));
        }
        if !(self.run.t_phys_hz > 0.0) {
            return Err(ConfigError("run.t_phys_hz must be positive".into()));
        }
        Ok(())
    }

    pub fn sector(&self) -> Result<ParitySector, ConfigError> {
        match self.system.sector.as_str() {
            "even" => Ok(ParitySector::Even),
            "odd" => Ok(ParitySector::Odd),
            "all" => Ok(ParitySector::Unrestricted),
            other => Err(ConfigError(format!(
                "sector must be one of even, odd, all; got \"{other}\""
            ))),
        }
    }

    pub fn grid_bounds(&self) -> Result<(f64, f64, f64), ConfigError> {
        let parts: Vec<&str> = self.sweep.grid.split(':').collect();
        if parts.len() != 3 {
            return Err(ConfigError(format!(
                "grid \"{}\" must have the form LO:HI:STEP",
                self.sweep.grid
            )));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| ConfigError(format!("grid component \"{s}\" is not a number")))
            })
            .collect::<Result<_, _>>()?;
        let (lo, hi, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || hi < lo {
            return Err(ConfigError(format!(
                "grid \"{}\" needs LO <= HI and STEP > 0",
                self.sweep.grid
            )));
        }
        Ok((lo, hi, step))
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            t: self.model.t,
            u_plus: self.model.u_plus,
            u_minus: self.model.u_minus,
            u: self.model.u,
            w: self.model.w_over_t * self.model.t.abs(),
            so_fwd: self.model.so_fwd,
            so_bwd: self.model.so_bwd,
        }
    }

    /// ln -> requested-base conversion factor for entropies.
    pub fn log_factor(&self) -> f64 {
        match self.run.log_base.as_str() {
            "2" => 1.0 / std::f64::consts::LN_2,
            _ => 1.0,
        }
    }
}
