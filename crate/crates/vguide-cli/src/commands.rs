//! The four experiment commands.  Each returns a serializable result that
//! embeds the resolved configuration and the crate version; nothing
//! time-dependent is recorded, so identical configurations give identical files.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::plot::{line_plot, Series};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use vguide::fracform::FracOrder;
use vguide::geometry::{CrossSection, Grid, Waveguide};
use vguide::spectral::{
    rayleigh, threshold, threshold_study, waveguide_eigs, EigenOptions, SolverKind, ThresholdReference, ThresholdResult,
    ThresholdStudy,
};
use vguide::theorems::{
    angle_sweep, build_trial, case_estimate, decompose_trial, fit_decay, lemma_audit, pushforward, sweep_verdict,
    CaseEstimate, LemmaAudit, LemmaOptions, SweepRow, SweepVerdict, TrialDecomposition, TrialOptions,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where results go.
#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub plot: Option<PathBuf>,
}

impl OutputSpec {
    fn write(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.write(name, &body)
    }

    fn write_plot(&self, svg: impl FnOnce() -> String) -> Result<Option<PathBuf>, CliError> {
        match &self.plot {
            Some(p) => {
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(parent)?;
                }
                fs::write(p, svg())?;
                Ok(Some(p.clone()))
            }
            None => Ok(None),
        }
    }
}

/// Common header of every result file.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
}

fn header(command: &'static str, cfg: &RunConfig) -> Header {
    Header { version: VERSION, command, config: cfg.clone() }
}

fn order(cfg: &RunConfig) -> Result<FracOrder, CliError> {
    Ok(FracOrder::new(cfg.s)?)
}

fn omega(cfg: &RunConfig) -> Result<CrossSection, CliError> {
    Ok(CrossSection::new(cfg.omega_lower.clone(), cfg.omega_upper.clone())?)
}

pub fn eigen_options(cfg: &RunConfig) -> EigenOptions {
    EigenOptions { tol: cfg.tol, max_iter: cfg.max_iter, padding: cfg.padding, seed: cfg.seed, ..EigenOptions::default() }
}

/// `Λ†` at the working spacing and the refinement study giving `ε_disc`.
struct Reference {
    at_h: ThresholdResult,
    study: ThresholdStudy,
}

impl Reference {
    fn compute(cfg: &RunConfig) -> Result<Reference, CliError> {
        let (s, om, opts) = (order(cfg)?, omega(cfg)?, eigen_options(cfg));
        if cfg.h_levels.len() < 2 {
            return Err(CliError::Config("h_levels needs at least two spacings for ε_disc".into()));
        }
        let study = threshold_study(&om, s, &cfg.h_levels, &opts)?;
        let at_h = threshold(&om, s, cfg.h, &opts)?;
        Ok(Reference { at_h, study })
    }

    fn reference(&self) -> ThresholdReference {
        ThresholdReference { value: self.at_h.value, eps_disc: self.study.eps_disc }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdLevel {
    pub h: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdOutput {
    #[serde(flatten)]
    pub header: Header,
    pub s: f64,
    pub levels: Vec<ThresholdLevel>,
    pub extrapolated: f64,
    pub order: Option<f64>,
    pub eps_disc: f64,
    /// `Λ†` at the working spacing `h`.
    pub lambda_h: f64,
    pub residual: f64,
    /// `(x, φ(x))` on the working grid (first cross-section axis).
    pub phi: Vec<[f64; 2]>,
}

pub fn cmd_threshold(cfg: &RunConfig, out: &OutputSpec) -> Result<ThresholdOutput, CliError> {
    let r = Reference::compute(cfg)?;
    let phi = &r.at_h.phi;
    let g = phi.grid();
    let samples: Vec<[f64; 2]> = phi.mask().nodes().iter().map(|&f| [g.position(f)[0], phi.values()[f]]).collect();
    let result = ThresholdOutput {
        header: header("threshold", cfg),
        s: cfg.s,
        levels: r.study.levels.iter().map(|&(h, lambda)| ThresholdLevel { h, lambda }).collect(),
        extrapolated: r.study.extrapolated,
        order: r.study.order,
        eps_disc: r.study.eps_disc,
        lambda_h: r.at_h.value,
        residual: r.at_h.residual,
        phi: samples,
    };
    out.write_json("threshold.json", &result)?;
    out.write_plot(|| {
        let pts: Vec<(f64, f64)> = result.phi.iter().map(|p| (p[0], p[1])).collect();
        line_plot(
            &format!("cross-section ground state, s = {}", cfg.s),
            "x",
            "φ",
            &[Series { name: "φ".into(), points: pts, colour: "#1f77b4", dashed: false, markers: false }],
        )
    })?;
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdInfo {
    pub h: f64,
    pub value: f64,
    pub eps_disc: f64,
    pub extrapolated: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationAudit {
    pub truncation_l: f64,
    pub eigenvalues: Vec<f64>,
    pub count: usize,
    /// Largest `|λ_j(1.5L) − λ_j(L)|` over the common indices.
    pub max_shift: f64,
    /// The shift stays below `ε_disc`.
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigsOutput {
    #[serde(flatten)]
    pub header: Header,
    pub beta_rad: f64,
    pub threshold: ThresholdInfo,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub count: usize,
    pub partial: bool,
    pub iterations: usize,
    pub solver: SolverKind,
    pub truncation_audit: Option<TruncationAudit>,
}

pub fn cmd_eigs(cfg: &RunConfig, out: &OutputSpec) -> Result<EigsOutput, CliError> {
    let (s, om, opts) = (order(cfg)?, omega(cfg)?, eigen_options(cfg));
    let r = Reference::compute(cfg)?;
    let reference = r.reference();
    let solve = |l: f64| -> Result<vguide::spectral::EigenResult, CliError> {
        let w = Waveguide::new(cfg.beta_rad(), om.clone(), l)?;
        let grid = Grid::for_waveguides(std::slice::from_ref(&w), cfg.h)?;
        Ok(waveguide_eigs(&w, s, &grid, cfg.k, reference, &opts)?)
    };
    let main = solve(cfg.truncation_l)?;
    let audit = if cfg.truncation_audit {
        let long = solve(1.5 * cfg.truncation_l)?;
        let max_shift = main.values.iter().zip(&long.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Some(TruncationAudit {
            truncation_l: 1.5 * cfg.truncation_l,
            count: long.below_threshold_count,
            stable: max_shift < reference.eps_disc && long.below_threshold_count == main.below_threshold_count,
            eigenvalues: long.values,
            max_shift,
        })
    } else {
        None
    };
    let result = EigsOutput {
        header: header("eigs", cfg),
        beta_rad: cfg.beta_rad(),
        threshold: ThresholdInfo { h: cfg.h, value: reference.value, eps_disc: reference.eps_disc, extrapolated: r.study.extrapolated },
        eigenvalues: main.values,
        residuals: main.residuals,
        count: main.below_threshold_count,
        partial: main.partial,
        iterations: main.iterations,
        solver: main.solver,
        truncation_audit: audit,
    };
    out.write_json("eigs.json", &result)?;
    out.write_plot(|| {
        let idx = |v: &[f64]| v.iter().enumerate().map(|(j, &l)| ((j + 1) as f64, l)).collect::<Vec<_>>();
        let n = result.eigenvalues.len().max(1) as f64;
        line_plot(
            &format!("eigenvalues at β = {}°", cfg.beta_deg),
            "index j",
            "λ_j",
            &[
                Series { name: "λ_j".into(), points: idx(&result.eigenvalues), colour: "#1f77b4", dashed: false, markers: true },
                Series {
                    name: "Λ†".into(),
                    points: vec![(1.0, reference.value), (n, reference.value)],
                    colour: "#2ca02c",
                    dashed: true,
                    markers: false,
                },
            ],
        )
    })?;
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    #[serde(flatten)]
    pub header: Header,
    pub threshold: ThresholdInfo,
    pub rows: Vec<SweepRow>,
    pub verdict: SweepVerdict,
}

/// Write the sweep CSV: `alpha_rad, lambda_1..lambda_k, threshold, lower_bound, count`.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow], k: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec!["alpha_rad".to_string()];
    head.extend((1..=k).map(|j| format!("lambda_{j}")));
    head.extend(["threshold", "lower_bound", "count"].map(String::from));
    w.write_record(&head)?;
    for r in rows {
        let mut rec = vec![r.alpha.to_string()];
        rec.extend((0..k).map(|j| r.eigenvalues.get(j).map(|l| l.to_string()).unwrap_or_default()));
        rec.push(r.threshold.to_string());
        rec.push(r.lower_bound.to_string());
        rec.push(r.count.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, out: &OutputSpec) -> Result<SweepOutput, CliError> {
    if cfg.angles_deg.is_empty() {
        return Err(CliError::Config("angles_deg is empty; nothing to sweep".into()));
    }
    let (s, om, opts) = (order(cfg)?, omega(cfg)?, eigen_options(cfg));
    let r = Reference::compute(cfg)?;
    let reference = r.reference();
    let rows = angle_sweep(s, &cfg.angles_rad(), &om, cfg.h, cfg.truncation_l, cfg.k, reference, &opts)?;
    let verdict = sweep_verdict(&rows);
    fs::create_dir_all(&out.dir)?;
    write_sweep_csv(&out.dir.join("sweep.csv"), &rows, cfg.k)?;
    let result = SweepOutput {
        header: header("sweep", cfg),
        threshold: ThresholdInfo { h: cfg.h, value: reference.value, eps_disc: reference.eps_disc, extrapolated: r.study.extrapolated },
        rows,
        verdict,
    };
    out.write_json("sweep.json", &result)?;
    out.write_plot(|| {
        let l1: Vec<(f64, f64)> = result.rows.iter().filter_map(|r| r.lambda_1().map(|l| (r.alpha, l))).collect();
        let lb: Vec<(f64, f64)> = result.rows.iter().map(|r| (r.alpha, r.lower_bound)).collect();
        let th: Vec<(f64, f64)> = result.rows.iter().map(|r| (r.alpha, r.threshold)).collect();
        let band: Vec<(f64, f64)> = result.rows.iter().map(|r| (r.alpha, r.threshold - r.eps_disc)).collect();
        line_plot(
            &format!("lowest eigenvalue against the opening angle, s = {}", cfg.s),
            "α (rad)",
            "λ",
            &[
                Series { name: "λ₁(α)".into(), points: l1, colour: "#1f77b4", dashed: false, markers: true },
                Series { name: "Λ†".into(), points: th, colour: "#2ca02c", dashed: false, markers: false },
                Series { name: "Λ† − ε_disc".into(), points: band, colour: "#2ca02c", dashed: true, markers: false },
                Series { name: "(1 − cos α)Λ†".into(), points: lb, colour: "#d62728", dashed: true, markers: false },
            ],
        )
    })?;
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub records: Vec<TrialDecomposition>,
    pub case: CaseEstimate,
    /// Fitted decay exponent of `I₂₁ + I₂₂` over the radii (when at least two are positive).
    pub decay_exponent: Option<f64>,
    pub decay_consistent: bool,
    pub min_gap: f64,
    pub existence_certified: bool,
    /// Every record passed the 5% split/direct audit.
    pub audits_within_tolerance: bool,
    pub i1_non_positive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PushforwardRecord {
    pub alpha_deg: f64,
    pub rayleigh: f64,
    pub audit: LemmaAudit,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaSummary {
    /// Ground state at β first, then the pushforwards in the configured order.
    pub chain: Vec<PushforwardRecord>,
    /// Rayleigh quotients strictly decrease with the angle.
    pub decreasing: bool,
    pub decomposition_within_tolerance: bool,
    pub remainder_negative: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyOutput {
    #[serde(flatten)]
    pub header: Header,
    pub beta_rad: f64,
    pub threshold: ThresholdInfo,
    pub trial: TrialSummary,
    pub lemma: Option<LemmaSummary>,
    pub certified: bool,
}

pub fn cmd_certify(cfg: &RunConfig, out: &OutputSpec) -> Result<CertifyOutput, CliError> {
    if cfg.radii.is_empty() {
        return Err(CliError::Config("radii is empty; nothing to certify".into()));
    }
    let (s, om, opts) = (order(cfg)?, omega(cfg)?, eigen_options(cfg));
    let r = Reference::compute(cfg)?;
    let reference = r.reference();
    let w = Waveguide::new(cfg.beta_rad(), om.clone(), cfg.truncation_l)?;
    let topts = TrialOptions { mode: cfg.trial_mode, boundary: cfg.case_boundary, ritz: cfg.ritz(), ..TrialOptions::default() };
    let mut records = Vec::with_capacity(cfg.radii.len());
    for &radius in &cfg.radii {
        let (_, _, field) = build_trial(&w, s, radius, &r.at_h, &topts)?;
        records.push(decompose_trial(&field)?);
    }
    let case = case_estimate(cfg.n, s);
    let pairs: Vec<(f64, f64)> = records.iter().map(|d| (d.radius, d.i21 + d.i22)).filter(|p| p.1 > 0.0 && p.0 > 1.0).collect();
    let decay_exponent = if pairs.len() >= 2 {
        let (rs, vs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        Some(fit_decay(&rs, &vs, case.log)?)
    } else {
        None
    };
    let min_gap = records.iter().map(|d| d.rayleigh_gap).fold(f64::INFINITY, f64::min);
    let trial = TrialSummary {
        case,
        decay_consistent: decay_exponent.is_some_and(|p| (p - case.exponent).abs() <= 0.2),
        decay_exponent,
        min_gap,
        existence_certified: min_gap < -reference.eps_disc,
        audits_within_tolerance: records.iter().all(|d| d.audit <= 0.05),
        i1_non_positive: records.iter().all(|d| d.i1 <= 0.0),
        records,
    };

    let lemma = if cfg.lemma {
        let grid = Grid::for_waveguides(std::slice::from_ref(&w), cfg.h)?;
        let ground = waveguide_eigs(&w, s, &grid, 1, reference, &opts)?;
        let u = ground.vectors[0].clone();
        let lopts = LemmaOptions { margin: cfg.lemma_margin, t_max: cfg.lemma_t_max, padding: cfg.padding, tgrid: cfg.tgrid() };
        let mut chain = vec![PushforwardRecord { alpha_deg: cfg.beta_deg, rayleigh: rayleigh(&u, s)?, audit: lemma_audit(&u, &w, s, &lopts)? }];
        for &a in &cfg.pushforward_deg {
            let target = w.with_angle(a.to_radians())?;
            let tg = Grid::for_waveguides(std::slice::from_ref(&target), cfg.h)?;
            let v = pushforward(&u, &w, &target, &tg)?;
            chain.push(PushforwardRecord { alpha_deg: a, rayleigh: rayleigh(&v, s)?, audit: lemma_audit(&v, &target, s, &lopts)? });
        }
        let mut by_angle: Vec<&PushforwardRecord> = chain.iter().collect();
        by_angle.sort_by(|a, b| a.alpha_deg.total_cmp(&b.alpha_deg));
        Some(LemmaSummary {
            decreasing: by_angle.windows(2).all(|p| p[0].rayleigh < p[1].rayleigh),
            decomposition_within_tolerance: chain.iter().all(|c| c.audit.mismatch <= 0.05),
            remainder_negative: chain.iter().all(|c| c.audit.remainder < 0.0),
            chain,
        })
    } else {
        None
    };
    let lemma_ok = lemma.as_ref().is_none_or(|l| l.decreasing && l.decomposition_within_tolerance && l.remainder_negative);
    let certified = trial.existence_certified && trial.audits_within_tolerance && lemma_ok;
    let result = CertifyOutput {
        header: header("certify", cfg),
        beta_rad: cfg.beta_rad(),
        threshold: ThresholdInfo { h: cfg.h, value: reference.value, eps_disc: reference.eps_disc, extrapolated: r.study.extrapolated },
        trial,
        lemma,
        certified,
    };
    out.write_json("certify.json", &result)?;
    out.write_plot(|| {
        let gap: Vec<(f64, f64)> = result.trial.records.iter().map(|d| (d.radius, d.rayleigh_gap)).collect();
        let eps: Vec<(f64, f64)> = result.trial.records.iter().map(|d| (d.radius, -reference.eps_disc)).collect();
        line_plot(
            &format!("trial-function Rayleigh defect at β = {}°", cfg.beta_deg),
            "cutoff radius R",
            "C_s E(Ψ) − Λ†‖Ψ(·,0)‖²",
            &[
                Series { name: "defect".into(), points: gap, colour: "#1f77b4", dashed: false, markers: true },
                Series { name: "−ε_disc".into(), points: eps, colour: "#d62728", dashed: true, markers: false },
            ],
        )
    })?;
    if !result.certified {
        return Err(CliError::NotAchieved(certificate_failures(&result).join("; ")));
    }
    Ok(result)
}

fn certificate_failures(r: &CertifyOutput) -> Vec<String> {
    let mut why = Vec::new();
    if !r.trial.existence_certified {
        why.push(format!("smallest Rayleigh defect {:.3e} is not below −ε_disc = {:.3e}", r.trial.min_gap, -r.threshold.eps_disc));
    }
    if !r.trial.audits_within_tolerance {
        why.push("a decomposition audit exceeded 5%".into());
    }
    if let Some(l) = &r.lemma {
        if !l.decreasing {
            why.push("pushforward Rayleigh quotients are not strictly decreasing".into());
        }
        if !l.decomposition_within_tolerance {
            why.push("energy splitting mismatch above 5%".into());
        }
        if !l.remainder_negative {
            why.push("remainder term not negative".into());
        }
    }
    why
}
