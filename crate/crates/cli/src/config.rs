//! Flat key-value run configuration.
//!
//! The format is one `key = value` pair per line with dotted section keys
//! (`trap.omega_y_khz = 93`), `#` comments, and strict parsing: unknown keys
//! are rejected. Frequencies are ordinary frequencies in kHz, fields in
//! gauss, powers in µW; the conversion to internal angular units happens
//! here and nowhere else.

use std::collections::BTreeMap;
use std::fmt;

use spinmotion::analysis::{SpectrumSettings, RAD_PER_KHZ};
use spinmotion::model::{ModelParams, PhysicalConstants, HBAR};
use spinmotion::spectra::uniform_grid;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Fully resolved run configuration (defaults merged with file overrides).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spin_f: f64,
    pub n_max: usize,
    pub omega_x_khz: f64,
    pub omega_y_khz: f64,
    pub omega_z_khz: f64,
    pub g_x_khz: f64,
    pub g_y_khz: f64,
    pub mean_n_x: f64,
    pub mean_n_y: f64,
    pub mean_n_z: f64,
    pub eta_x: f64,
    pub eta_y: f64,
    pub eta_z: Option<f64>,
    pub spin_excited_fraction: f64,
    pub f_min_khz: f64,
    pub f_max_khz: f64,
    pub step_khz: f64,
    pub linewidth_khz: f64,
    pub delta_khz: f64,
    pub scan_start_khz: f64,
    pub scan_stop_khz: f64,
    pub scan_step_khz: f64,
    pub noise_sigma_rel: f64,
    pub noise_seed: u64,
    pub trap_window_min_khz: f64,
    pub trap_window_max_khz: f64,
    pub zeeman_window_min_khz: f64,
    pub zeeman_window_max_khz: f64,
    pub zeeman_offset_khz: f64,
    pub peak_min_height_fraction: f64,
    pub peak_min_separation_khz: f64,
    pub compare_gate_khz: f64,
    pub g_f: f64,
    pub mass_kg: f64,
    pub mu_b_over_h_khz_per_gauss: f64,
    pub tuneout_slope_hz_per_uw: f64,
    pub tuneout_intercept_khz: f64,
    pub tuneout_power_min_uw: f64,
    pub tuneout_power_max_uw: f64,
    pub tuneout_power_step_uw: f64,
    pub tuneout_noise_sigma_khz: f64,
    pub tuneout_exclude_above_uw: Option<f64>,
    pub include_carrier: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spin_f: 4.0,
            n_max: 5,
            omega_x_khz: 149.0,
            omega_y_khz: 93.0,
            omega_z_khz: 243.0,
            g_x_khz: 18.0,
            g_y_khz: 17.5,
            mean_n_x: 0.5,
            mean_n_y: 0.5,
            mean_n_z: 0.5,
            eta_x: 0.1,
            eta_y: 0.15,
            eta_z: None,
            spin_excited_fraction: 0.0,
            f_min_khz: -350.0,
            f_max_khz: 350.0,
            step_khz: 0.25,
            linewidth_khz: 2.0,
            delta_khz: 300.0,
            scan_start_khz: 0.0,
            scan_stop_khz: 330.0,
            scan_step_khz: 5.5,
            noise_sigma_rel: 0.0,
            noise_seed: 1,
            trap_window_min_khz: 250.0,
            trap_window_max_khz: 330.0,
            zeeman_window_min_khz: 270.0,
            zeeman_window_max_khz: 330.0,
            zeeman_offset_khz: 0.0,
            peak_min_height_fraction: 1e-3,
            peak_min_separation_khz: 8.0,
            compare_gate_khz: 10.0,
            g_f: 0.25,
            mass_kg: 2.20695e-25,
            mu_b_over_h_khz_per_gauss: 1399.6,
            tuneout_slope_hz_per_uw: -120.0,
            tuneout_intercept_khz: 35.0,
            tuneout_power_min_uw: 0.0,
            tuneout_power_max_uw: 150.0,
            tuneout_power_step_uw: 10.0,
            tuneout_noise_sigma_khz: 0.2,
            tuneout_exclude_above_uw: Some(100.0),
            include_carrier: true,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not a number")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64, ConfigError> {
    v.parse::<u64>().map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not an integer")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse::<usize>().map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not an integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError(format!("key `{key}`: `{v}` is not a boolean"))),
    }
}

impl RunConfig {
    /// Parse the flat key-value text, starting from defaults. Strict: every
    /// key must be known, values must parse, duplicates are rejected.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen: BTreeMap<String, ()> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.insert(key.to_string(), ()).is_some() {
                return Err(ConfigError(format!("duplicate key `{key}`")));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "spin.f" => self.spin_f = parse_f64(key, v)?,
            "fock.n_max" => self.n_max = parse_usize(key, v)?,
            "trap.omega_x_khz" => self.omega_x_khz = parse_f64(key, v)?,
            "trap.omega_y_khz" => self.omega_y_khz = parse_f64(key, v)?,
            "trap.omega_z_khz" => self.omega_z_khz = parse_f64(key, v)?,
            "coupling.g_x_khz" => self.g_x_khz = parse_f64(key, v)?,
            "coupling.g_y_khz" => self.g_y_khz = parse_f64(key, v)?,
            "thermal.mean_n_x" => self.mean_n_x = parse_f64(key, v)?,
            "thermal.mean_n_y" => self.mean_n_y = parse_f64(key, v)?,
            "thermal.mean_n_z" => self.mean_n_z = parse_f64(key, v)?,
            "emission.eta_x" => self.eta_x = parse_f64(key, v)?,
            "emission.eta_y" => self.eta_y = parse_f64(key, v)?,
            "emission.eta_z" => self.eta_z = Some(parse_f64(key, v)?),
            "spin.excited_fraction" => self.spin_excited_fraction = parse_f64(key, v)?,
            "spectrum.f_min_khz" => self.f_min_khz = parse_f64(key, v)?,
            "spectrum.f_max_khz" => self.f_max_khz = parse_f64(key, v)?,
            "spectrum.step_khz" => self.step_khz = parse_f64(key, v)?,
            "spectrum.linewidth_khz" => self.linewidth_khz = parse_f64(key, v)?,
            "spectrum.include_carrier" => self.include_carrier = parse_bool(key, v)?,
            "zeeman.delta_khz" => self.delta_khz = parse_f64(key, v)?,
            "zeeman.offset_khz" => self.zeeman_offset_khz = parse_f64(key, v)?,
            "scan.delta_start_khz" => self.scan_start_khz = parse_f64(key, v)?,
            "scan.delta_stop_khz" => self.scan_stop_khz = parse_f64(key, v)?,
            "scan.delta_step_khz" => self.scan_step_khz = parse_f64(key, v)?,
            "noise.sigma_rel" => self.noise_sigma_rel = parse_f64(key, v)?,
            "noise.seed" => self.noise_seed = parse_u64(key, v)?,
            "fit.trap_window_min_khz" => self.trap_window_min_khz = parse_f64(key, v)?,
            "fit.trap_window_max_khz" => self.trap_window_max_khz = parse_f64(key, v)?,
            "fit.zeeman_window_min_khz" => self.zeeman_window_min_khz = parse_f64(key, v)?,
            "fit.zeeman_window_max_khz" => self.zeeman_window_max_khz = parse_f64(key, v)?,
            "fit.peak_min_height_fraction" => self.peak_min_height_fraction = parse_f64(key, v)?,
            "fit.peak_min_separation_khz" => self.peak_min_separation_khz = parse_f64(key, v)?,
            "compare.gate_khz" => self.compare_gate_khz = parse_f64(key, v)?,
            "constants.g_f" => self.g_f = parse_f64(key, v)?,
            "constants.mass_kg" => self.mass_kg = parse_f64(key, v)?,
            "constants.mu_b_over_h_khz_per_gauss" => {
                self.mu_b_over_h_khz_per_gauss = parse_f64(key, v)?
            }
            "tuneout.slope_hz_per_uw" => self.tuneout_slope_hz_per_uw = parse_f64(key, v)?,
            "tuneout.intercept_khz" => self.tuneout_intercept_khz = parse_f64(key, v)?,
            "tuneout.power_min_uw" => self.tuneout_power_min_uw = parse_f64(key, v)?,
            "tuneout.power_max_uw" => self.tuneout_power_max_uw = parse_f64(key, v)?,
            "tuneout.power_step_uw" => self.tuneout_power_step_uw = parse_f64(key, v)?,
            "tuneout.noise_sigma_khz" => self.tuneout_noise_sigma_khz = parse_f64(key, v)?,
            "tuneout.exclude_above_uw" => self.tuneout_exclude_above_uw = Some(parse_f64(key, v)?),
            _ => return Err(ConfigError(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model_params().map_err(|e| ConfigError(e.to_string()))?;
        if !(self.step_khz > 0.0) || !(self.f_max_khz > self.f_min_khz) {
            return Err(ConfigError("spectrum grid is empty or descending".into()));
        }
        if !(self.linewidth_khz > 0.0) {
            return Err(ConfigError("spectrum.linewidth_khz must be positive".into()));
        }
        if !(self.scan_step_khz > 0.0) || self.scan_stop_khz < self.scan_start_khz {
            return Err(ConfigError("scan grid is empty or descending".into()));
        }
        for (k, v) in [
            ("thermal.mean_n_x", self.mean_n_x),
            ("thermal.mean_n_y", self.mean_n_y),
            ("thermal.mean_n_z", self.mean_n_z),
            ("emission.eta_x", self.eta_x),
            ("emission.eta_y", self.eta_y),
            ("noise.sigma_rel", self.noise_sigma_rel),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(ConfigError(format!("{k} must be nonnegative")));
            }
        }
        if let Some(eta) = self.eta_z {
            if eta < 0.0 || !eta.is_finite() {
                return Err(ConfigError("emission.eta_z must be nonnegative".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.spin_excited_fraction) {
            return Err(ConfigError("spin.excited_fraction must be in [0, 1]".into()));
        }
        if self.g_f == 0.0 || self.mass_kg <= 0.0 || self.mu_b_over_h_khz_per_gauss <= 0.0 {
            return Err(ConfigError("constants must be nonzero/positive".into()));
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams, spinmotion::model::ModelError> {
        let p = ModelParams {
            f: self.spin_f,
            omega_x: self.omega_x_khz * RAD_PER_KHZ,
            omega_y: self.omega_y_khz * RAD_PER_KHZ,
            omega_z: self.omega_z_khz * RAD_PER_KHZ,
            delta: self.delta_khz * RAD_PER_KHZ,
            g_x: self.g_x_khz * RAD_PER_KHZ,
            g_y: self.g_y_khz * RAD_PER_KHZ,
            n_max: self.n_max,
            b0: None,
            b_y: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants {
            hbar: HBAR,
            mu_b: self.mu_b_over_h_khz_per_gauss * RAD_PER_KHZ * HBAR,
            mass: self.mass_kg,
            g_f: self.g_f,
        }
    }

    /// Zeeman scale g_F mu_B / hbar in rad/s per gauss implied by the
    /// configured constants (the nominal coil calibration).
    pub fn nominal_zeeman_scale(&self) -> f64 {
        self.g_f * self.mu_b_over_h_khz_per_gauss * RAD_PER_KHZ
    }

    pub fn spectrum_settings(&self, include_carrier: bool) -> SpectrumSettings {
        SpectrumSettings {
            grid: uniform_grid(self.f_min_khz, self.f_max_khz, self.step_khz)
                .expect("grid validated"),
            linewidth_khz: self.linewidth_khz,
            mean_n_x: self.mean_n_x,
            mean_n_y: self.mean_n_y,
            mean_n_z: self.mean_n_z,
            eta_x: self.eta_x,
            eta_y: self.eta_y,
            eta_z: self.eta_z,
            spin_excited_fraction: self.spin_excited_fraction,
            include_carrier,
        }
    }

    /// Canonical `key = value` listing of every semantically meaningful
    /// field, used for hashing. Floats are formatted to 17 significant
    /// digits so the hash changes exactly when a value changes.
    pub fn canonical(&self) -> String {
        let f = |v: f64| format!("{v:.16e}");
        let mut pairs: Vec<(String, String)> = vec![
            ("compare.gate_khz".into(), f(self.compare_gate_khz)),
            ("constants.g_f".into(), f(self.g_f)),
            ("constants.mass_kg".into(), f(self.mass_kg)),
            ("constants.mu_b_over_h_khz_per_gauss".into(), f(self.mu_b_over_h_khz_per_gauss)),
            ("coupling.g_x_khz".into(), f(self.g_x_khz)),
            ("coupling.g_y_khz".into(), f(self.g_y_khz)),
            ("emission.eta_x".into(), f(self.eta_x)),
            ("emission.eta_y".into(), f(self.eta_y)),
            (
                "emission.eta_z".into(),
                self.eta_z.map(f).unwrap_or_else(|| "none".into()),
            ),
            ("fit.peak_min_height_fraction".into(), f(self.peak_min_height_fraction)),
            ("fit.peak_min_separation_khz".into(), f(self.peak_min_separation_khz)),
            ("fit.trap_window_max_khz".into(), f(self.trap_window_max_khz)),
            ("fit.trap_window_min_khz".into(), f(self.trap_window_min_khz)),
            ("fit.zeeman_window_max_khz".into(), f(self.zeeman_window_max_khz)),
            ("fit.zeeman_window_min_khz".into(), f(self.zeeman_window_min_khz)),
            ("fock.n_max".into(), format!("{}", self.n_max)),
            ("noise.seed".into(), format!("{}", self.noise_seed)),
            ("noise.sigma_rel".into(), f(self.noise_sigma_rel)),
            ("scan.delta_start_khz".into(), f(self.scan_start_khz)),
            ("scan.delta_step_khz".into(), f(self.scan_step_khz)),
            ("scan.delta_stop_khz".into(), f(self.scan_stop_khz)),
            ("spectrum.f_max_khz".into(), f(self.f_max_khz)),
            ("spectrum.f_min_khz".into(), f(self.f_min_khz)),
            ("spectrum.include_carrier".into(), format!("{}", self.include_carrier)),
            ("spectrum.linewidth_khz".into(), f(self.linewidth_khz)),
            ("spectrum.step_khz".into(), f(self.step_khz)),
            ("spin.excited_fraction".into(), f(self.spin_excited_fraction)),
            ("spin.f".into(), f(self.spin_f)),
            ("thermal.mean_n_x".into(), f(self.mean_n_x)),
            ("thermal.mean_n_y".into(), f(self.mean_n_y)),
            ("thermal.mean_n_z".into(), f(self.mean_n_z)),
            ("trap.omega_x_khz".into(), f(self.omega_x_khz)),
            ("trap.omega_y_khz".into(), f(self.omega_y_khz)),
            ("trap.omega_z_khz".into(), f(self.omega_z_khz)),
            (
                "tuneout.exclude_above_uw".into(),
                self.tuneout_exclude_above_uw.map(f).unwrap_or_else(|| "none".into()),
            ),
            ("tuneout.intercept_khz".into(), f(self.tuneout_intercept_khz)),
            ("tuneout.noise_sigma_khz".into(), f(self.tuneout_noise_sigma_khz)),
            ("tuneout.power_max_uw".into(), f(self.tuneout_power_max_uw)),
            ("tuneout.power_min_uw".into(), f(self.tuneout_power_min_uw)),
            ("tuneout.power_step_uw".into(), f(self.tuneout_power_step_uw)),
            ("tuneout.slope_hz_per_uw".into(), f(self.tuneout_slope_hz_per_uw)),
            ("zeeman.delta_khz".into(), f(self.delta_khz)),
            ("zeeman.offset_khz".into(), f(self.zeeman_offset_khz)),
        ];
        pairs.sort();
        let mut out = String::new();
        for (k, v) in pairs {
            out.push_str(&k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// FNV-1a hash of the canonical listing, as a fixed-width hex string.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.canonical().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
