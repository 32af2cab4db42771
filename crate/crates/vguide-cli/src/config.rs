//! Run configuration: a flat `key = value` text file plus `--set` overrides,
//! validated against the preconditions of the library before any work starts.
//!
//! Numbers accept fractions (`h = 1/64`); lists are comma separated and may be
//! empty; angles are given in degrees and converted to radians on use.

use crate::error::CliError;
use serde::Serialize;
use std::collections::BTreeSet;
use vguide::extension::TGrid;
use vguide::theorems::{RitzBox, TrialMode};

/// Every experiment parameter; serialized verbatim into each result file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub s: f64,
    pub n: usize,
    pub omega_lower: Vec<f64>,
    pub omega_upper: Vec<f64>,
    pub beta_deg: f64,
    pub angles_deg: Vec<f64>,
    pub h: f64,
    pub h_levels: Vec<f64>,
    pub truncation_l: f64,
    pub padding: f64,
    pub k: usize,
    pub radii: Vec<f64>,
    pub tgrid_first: f64,
    pub tgrid_ratio: f64,
    pub trial_mode: TrialMode,
    /// `None` selects the default case boundary `2 − 2s`.
    pub case_boundary: Option<f64>,
    pub ritz_spacing: f64,
    pub ritz_extent: f64,
    pub ritz_x_before: f64,
    pub ritz_x_after: f64,
    pub lemma: bool,
    pub pushforward_deg: Vec<f64>,
    pub lemma_margin: f64,
    pub lemma_t_max: f64,
    pub truncation_audit: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ritz = RitzBox::default();
        RunConfig {
            s: 0.5,
            n: 2,
            omega_lower: vec![0.0],
            omega_upper: vec![1.0],
            beta_deg: 45.0,
            angles_deg: vec![30.0, 45.0, 60.0, 75.0],
            h: 1.0 / 32.0,
            h_levels: vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            truncation_l: 12.0,
            padding: 2.0,
            k: 2,
            radii: vec![8.0, 16.0, 32.0, 64.0],
            tgrid_first: TGrid::default().first_over_h,
            tgrid_ratio: TGrid::default().ratio,
            trial_mode: TrialMode::Ritz,
            case_boundary: None,
            ritz_spacing: ritz.spacing,
            ritz_extent: ritz.extent,
            ritz_x_before: ritz.x_before,
            ritz_x_after: ritz.x_after,
            lemma: true,
            pushforward_deg: Vec::new(),
            lemma_margin: 3.0,
            lemma_t_max: 8.0,
            truncation_audit: true,
            tol: 1e-7,
            max_iter: 600,
            seed: 0x5eed,
        }
    }
}

/// Keys accepted in config files and `--set`.
pub const KEYS: &[&str] = &[
    "s",
    "n",
    "omega_lower",
    "omega_upper",
    "beta_deg",
    "angles_deg",
    "h",
    "h_levels",
    "truncation_l",
    "padding",
    "k",
    "radii",
    "tgrid_first",
    "tgrid_ratio",
    "trial_mode",
    "case_boundary",
    "ritz_spacing",
    "ritz_extent",
    "ritz_x_before",
    "ritz_x_after",
    "lemma",
    "pushforward_deg",
    "lemma_margin",
    "lemma_t_max",
    "truncation_audit",
    "tol",
    "max_iter",
    "seed",
];

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let v = v.trim();
    let bad = || CliError::Config(format!("{key}: `{v}` is not a number"));
    let x = match v.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => v.parse().map_err(|_| bad())?,
    };
    if !x.is_finite() {
        return Err(bad());
    }
    Ok(x)
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(str::trim).filter(|p| !p.is_empty()).map(|p| parse_f64(key, p)).collect()
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.trim().parse().map_err(|_| CliError::Config(format!("{key}: `{}` is not a non-negative integer", v.trim())))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(CliError::Config(format!("{key}: `{other}` is not a boolean"))),
    }
}

fn parse_seed(v: &str) -> Result<u64, CliError> {
    let v = v.trim();
    let r = match v.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => v.parse(),
    };
    r.map_err(|_| CliError::Config(format!("seed: `{v}` is not an unsigned integer")))
}

impl RunConfig {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim();
        match key {
            "s" => self.s = parse_f64(key, value)?,
            "n" => self.n = parse_usize(key, value)?,
            "omega_lower" => self.omega_lower = parse_list(key, value)?,
            "omega_upper" => self.omega_upper = parse_list(key, value)?,
            "beta_deg" => self.beta_deg = parse_f64(key, value)?,
            "angles_deg" => self.angles_deg = parse_list(key, value)?,
            "h" => self.h = parse_f64(key, value)?,
            "h_levels" => self.h_levels = parse_list(key, value)?,
            "truncation_l" => self.truncation_l = parse_f64(key, value)?,
            "padding" => self.padding = parse_f64(key, value)?,
            "k" => self.k = parse_usize(key, value)?,
            "radii" => self.radii = parse_list(key, value)?,
            "tgrid_first" => self.tgrid_first = parse_f64(key, value)?,
            "tgrid_ratio" => self.tgrid_ratio = parse_f64(key, value)?,
            "trial_mode" => {
                self.trial_mode = match value.trim() {
                    "none" => TrialMode::None,
                    "bump" => TrialMode::Bump,
                    "ritz" => TrialMode::Ritz,
                    other => return Err(CliError::Config(format!("trial_mode: `{other}` is not one of none, bump, ritz"))),
                }
            }
            "case_boundary" => {
                self.case_boundary = match value.trim() {
                    "auto" | "" => None,
                    v => Some(parse_f64(key, v)?),
                }
            }
            "ritz_spacing" => self.ritz_spacing = parse_f64(key, value)?,
            "ritz_extent" => self.ritz_extent = parse_f64(key, value)?,
            "ritz_x_before" => self.ritz_x_before = parse_f64(key, value)?,
            "ritz_x_after" => self.ritz_x_after = parse_f64(key, value)?,
            "lemma" => self.lemma = parse_bool(key, value)?,
            "pushforward_deg" => self.pushforward_deg = parse_list(key, value)?,
            "lemma_margin" => self.lemma_margin = parse_f64(key, value)?,
            "lemma_t_max" => self.lemma_t_max = parse_f64(key, value)?,
            "truncation_audit" => self.truncation_audit = parse_bool(key, value)?,
            "tol" => self.tol = parse_f64(key, value)?,
            "max_iter" => self.max_iter = parse_usize(key, value)?,
            "seed" => self.seed = parse_seed(value)?,
            other => return Err(CliError::Config(format!("unknown key `{other}`; known keys: {}", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Parse a config file body on top of the defaults.  Lines are
    /// `key = value`; blank lines and `#` comments are ignored; a key may
    /// appear only once.
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
            if !seen.insert(k.trim().to_string()) {
                return Err(CliError::Config(format!("line {}: key `{}` given twice", i + 1, k.trim())));
            }
            cfg.set(k, v).map_err(|e| CliError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    /// Apply `KEY=VALUE` overrides in order.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{o}`")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn beta_rad(&self) -> f64 {
        self.beta_deg.to_radians()
    }

    pub fn angles_rad(&self) -> Vec<f64> {
        self.angles_deg.iter().map(|a| a.to_radians()).collect()
    }

    pub fn tgrid(&self) -> TGrid {
        TGrid { first_over_h: self.tgrid_first, ratio: self.tgrid_ratio }
    }

    pub fn ritz(&self) -> RitzBox {
        RitzBox { x_before: self.ritz_x_before, x_after: self.ritz_x_after, extent: self.ritz_extent, spacing: self.ritz_spacing }
    }

    /// Check every value against the preconditions of the operations.
    pub fn validate(&self) -> Result<(), CliError> {
        let err = |m: String| Err(CliError::Config(m));
        if !(self.s > 0.0 && self.s < 1.0) {
            return err(format!("s = {} must lie in (0, 1)", self.s));
        }
        if self.n < 2 {
            return err(format!("n = {} must be at least 2", self.n));
        }
        if self.omega_lower.len() != self.n - 1 || self.omega_upper.len() != self.n - 1 {
            return err(format!("omega_lower and omega_upper need n − 1 = {} entries", self.n - 1));
        }
        if self.omega_lower.iter().zip(&self.omega_upper).any(|(a, b)| !(a < b)) {
            return err("every omega_lower entry must be below its omega_upper entry".into());
        }
        if !(self.beta_deg > 0.0 && self.beta_deg <= 90.0) {
            return err(format!("beta_deg = {} must lie in (0, 90]", self.beta_deg));
        }
        if self.angles_deg.iter().any(|&a| !(a > 0.0 && a < 90.0)) {
            return err("angles_deg entries must lie in (0, 90)".into());
        }
        if self.angles_deg.windows(2).any(|w| !(w[1] > w[0])) {
            return err("angles_deg must be strictly increasing".into());
        }
        if !(self.h > 0.0) {
            return err(format!("h = {} must be positive", self.h));
        }
        if self.h_levels.iter().any(|&h| !(h > 0.0)) {
            return err("h_levels entries must be positive".into());
        }
        let mut sorted = self.h_levels.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return err("h_levels entries must be distinct".into());
        }
        if !(self.truncation_l > 0.0) {
            return err(format!("truncation_l = {} must be positive", self.truncation_l));
        }
        if !(self.padding >= 2.0) {
            return err(format!("padding = {} must be at least 2", self.padding));
        }
        if self.k == 0 {
            return err("k must be at least 1".into());
        }
        if self.radii.iter().any(|&r| !(r > 0.0)) {
            return err("radii entries must be positive".into());
        }
        self.tgrid().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(b) = self.case_boundary {
            if !b.is_finite() {
                return err("case_boundary must be finite".into());
            }
        }
        if !(self.ritz_spacing > 0.0 && self.ritz_extent > 0.0 && self.ritz_x_before >= 0.0 && self.ritz_x_after >= 0.0) {
            return err("ritz_spacing and ritz_extent must be positive, ritz_x_before and ritz_x_after non-negative".into());
        }
        if self.pushforward_deg.iter().any(|&a| !(a > 0.0 && a < self.beta_deg)) {
            return err(format!("pushforward_deg entries must lie in (0, beta_deg = {})", self.beta_deg));
        }
        if !(self.lemma_margin >= 0.0 && self.lemma_t_max > 0.0) {
            return err("lemma_margin must be non-negative and lemma_t_max positive".into());
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return err("tol must be positive and max_iter at least 1".into());
        }
        Ok(())
    }
}
