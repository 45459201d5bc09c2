//! Experiment dispatch: one config in, one table and a JSON summary out.

use crate::config::{mode_name, ConfigError, Experiment, ExperimentConfig, StripObservable};
use crate::formats::{read_initial_state, write_operator, FormatError};
use crate::output::{num, site, Table};
use ccnet_core::dynamics::{median, spread_experiment, SpreadSeries};
use ccnet_core::lattice::{BoxSpec, IndexMap, Site};
use ccnet_core::mc::{run_seeded, TrialRunner};
use ccnet_core::operator::{build_network, sample_disorder, PhaseAngle};
use ccnet_core::resolvent::{
    axis_diagonal_pairs, correlator_mc, fit_decay, fit_decay_weighted, fractional_moment_mc,
    iteration_contraction_check, ContractionSetup, CorrelatorEnsemble, DecayFit, FitOptions,
    SpectralParameter,
};
use ccnet_core::seed::trial_seed;
use ccnet_core::spectral::{
    diagonalize, gap_probability_mc, matched_distance, phi0_spectrum, DENSE_LIMIT,
};
use ccnet_core::C64;
use serde_json::{json, Value};
use std::io;

/// Largest tolerated `‖U*U − I‖_max`.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Largest tolerated `|‖ψ_n‖ − 1|` in spreading runs.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl RunError {
    /// 2 for configuration errors, 3 for numerical failures, 1 for IO.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl From<ccnet_core::Error> for RunError {
    fn from(e: ccnet_core::Error) -> Self {
        use ccnet_core::Error as E;
        match e {
            E::Eigensolver(_) | E::NearSingular { .. } | E::Fit(_) => {
                RunError::Numerical(e.to_string())
            }
            _ => RunError::Config(e.to_string()),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<FormatError> for RunError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Model(m) => m.into(),
            s => RunError::Config(s.to_string()),
        }
    }
}

/// Result of one experiment, before it is written anywhere.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub summary: Value,
    /// Trials discarded after a failed solve or eigen-decomposition.
    pub dropped: usize,
    /// Set when a checked tolerance was exceeded; the data is still reported.
    pub failure: Option<String>,
    /// Serialized operator for `operator_out`.
    pub operator: Option<String>,
}

impl Outcome {
    fn new(table: Table, summary: Value) -> Self {
        Outcome {
            table,
            summary,
            dropped: 0,
            failure: None,
            operator: None,
        }
    }
}

pub fn fit_json(fit: &Result<DecayFit, ccnet_core::Error>) -> Value {
    match fit {
        Ok(f) => json!({
            "g": f.rate,
            "c": f.prefactor,
            "r2": f.r_squared,
            "ci_low": f.ci_low,
            "ci_high": f.ci_high,
            "d_min": f.d_min,
            "d_max": f.d_max,
            "bins": f.bins.iter().map(|b| json!([b.distance, b.mean, b.count])).collect::<Vec<_>>(),
            "excluded": f.excluded,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn fit_options(config: &ExperimentConfig) -> FitOptions {
    FitOptions {
        d_min: f64::from(config.d_min),
        d_max: f64::from(config.d_max),
        ..FitOptions::default()
    }
}

/// Runs the configured experiment on `runner`.
pub fn execute<R: TrialRunner + ?Sized>(
    config: &ExperimentConfig,
    runner: &R,
) -> Result<Outcome, RunError> {
    config.validate()?;
    let phi = PhaseAngle::new(config.phi);
    match config.experiment {
        Experiment::Unitarity => unitarity(config, phi, runner),
        Experiment::Spectrum => spectrum(config, phi, runner),
        Experiment::Gaps => gaps(config, runner),
        Experiment::Moments => moments(config, phi, runner),
        Experiment::Correlator => correlator(config, phi, runner),
        Experiment::Contraction => contraction(config, phi, runner),
        Experiment::Spread => spread(config, phi, runner),
        Experiment::Strip => strip(config, phi, runner),
    }
}

fn unitarity<R: TrialRunner + ?Sized>(
    c: &ExperimentConfig,
    phi: PhaseAngle,
    runner: &R,
) -> Result<Outcome, RunError> {
    let g = c.geometry()?;
    let results = run_seeded(runner, c.seed, c.trials, |ts| {
        build_network(&sample_disorder(ts, &g), phi, &g)
            .map(|u| (ts, u.dim(), u.unitarity_deviation()))
    });
    let mut table = Table::new(&[
        "trial",
        "seed",
        "phi",
        "L1",
        "L2",
        "mode",
        "dim",
        "deviation",
    ]);
    let mut worst = 0.0f64;
    for (i, r) in results.into_iter().enumerate() {
        let (ts, dim, dev) = r?;
        worst = worst.max(dev);
        table.push(vec![
            i.to_string(),
            ts.to_string(),
            num(c.phi),
            g.l1.to_string(),
            g.l2.to_string(),
            mode_name(g.mode),
            dim.to_string(),
            num(dev),
        ]);
    }
    let mut out = Outcome::new(
        table,
        json!({ "max_deviation": worst, "tolerance": UNITARITY_TOL }),
    );
    if worst > UNITARITY_TOL {
        out.failure = Some(format!(
            "unitarity deviation {worst:e} exceeds {UNITARITY_TOL:e}"
        ));
    }
    if c.operator_out.is_some() {
        let u = build_network(&sample_disorder(trial_seed(c.seed, 0), &g), phi, &g)?;
        out.operator = Some(write_operator(&u));
    }
    Ok(out)
}

fn spectrum<R: TrialRunner + ?Sized>(
    c: &ExperimentConfig,
    phi: PhaseAngle,
    runner: &R,
) -> Result<Outcome, RunError> {
    let g = c.geometry()?;
    let exact = c.phi == 0.0;
    let results = run_seeded(runner, c.seed, c.trials, |ts| -> ccnet_core::Result<_> {
        let w = sample_disorder(ts, &g);
        let sp = diagonalize(&build_network(&w, phi, &g)?, DENSE_LIMIT)?;
        let mismatch = if exact {
            let reference = phi0_spectrum(&w, &g)?;
            Some(matched_distance(&sp.eigenvalues, &reference.eigenvalues).unwrap_or(f64::INFINITY))
        } else {
            None
        };
        Ok((ts, sp.eigenvalues, mismatch))
    });
    let mut table = Table::new(&["trial", "seed", "index", "re", "im", "modulus_defect"]);
    let mut worst_mismatch = 0.0f64;
    let mut dropped = 0;
    for (i, r) in results.into_iter().enumerate() {
        let (ts, values, mismatch) = match r {
            Ok(v) => v,
            Err(ccnet_core::Error::Eigensolver(_)) => {
                dropped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        worst_mismatch = worst_mismatch.max(mismatch.unwrap_or(0.0));
        for (k, l) in values.iter().enumerate() {
            table.push(vec![
                i.to_string(),
                ts.to_string(),
                k.to_string(),
                num(l.re),
                num(l.im),
                num(l.norm() - 1.0),
            ]);
        }
    }
    let summary = if exact {
        json!({ "max_phi0_mismatch": worst_mismatch })
    } else {
        json!({})
    };
    let mut out = Outcome::new(table, summary);
    out.dropped = dropped;
    if exact && worst_mismatch > ccnet_core::spectral::SPECTRUM_TOL {
        out.failure = Some(format!(
            "dense and exact spectra differ by {worst_mismatch:e}"
        ));
    }
    Ok(out)
}

fn gaps<R: TrialRunner + ?Sized>(c: &ExperimentConfig, runner: &R) -> Result<Outcome, RunError> {
    let g = c.geometry()?;
    let step = std::f64::consts::TAU / f64::from(c.theta_count);
    let mut table = Table::new(&[
        "L1", "L2", "eta", "theta", "trials", "estimate", "stderr", "exact", "bound",
    ]);
    let mut consistent = true;
    for k in 0..c.theta_count {
        let theta = step * f64::from(k);
        let z = C64::from_polar(1.0, theta);
        let est = gap_probability_mc(z, c.eta, &g, c.trials, c.seed, runner)?;
        consistent &= (est.miss - est.exact_miss).abs() <= 3.0 * est.stderr
            && est.miss >= est.lower_bound_miss - 3.0 * est.stderr;
        table.push(vec![
            g.l1.to_string(),
            g.l2.to_string(),
            num(c.eta),
            num(theta),
            est.trials.to_string(),
            num(est.miss),
            num(est.stderr),
            num(est.exact_miss),
            num(est.lower_bound_miss),
        ]);
    }
    Ok(Outcome::new(
        table,
        json!({ "within_3_stderr": consistent, "blocks": g.block_count() }),
    ))
}

fn moments<R: TrialRunner + ?Sized>(
    c: &ExperimentConfig,
    phi: PhaseAngle,
    runner: &R,
) -> Result<Outcome, RunError> {
    let g = c.geometry()?;
    let pairs = axis_diagonal_pairs(&g, Site::new(0, 0), c.d_min, c.d_max);
    if pairs.is_empty() {
        return Err(RunError::Config(format!(
            "no site pairs at distance {}..{} fit the geometry",
            c.d_min, c.d_max
        )));
    }
    let mut table = Table::new(&[
        "phi", "L1", "L2", "s", "rho", "theta", "mu", "nu", "dist", "estimate", "stderr", "trials",
    ]);
    let mut fits = Vec::new();
    let mut dropped = 0;
    for (rho, theta) in c.z_grid() {
        let z = SpectralParameter::polar(rho, theta)?;
        let recs = fractional_moment_mc(phi, z, c.s, &pairs, &g, c.trials, c.seed, runner)?;
        dropped += recs.first().map_or(0, |r| r.dropped);
        let mut weighted = Vec::new();
        for r in &recs {
            let d = g.distance_euclid(r.mu, r.nu);
            weighted.push((d, r.estimate, r.trials));
            table.push(vec![
                num(c.phi),
                g.l1.to_string(),
                g.l2.to_string(),
                num(c.s),
                num(rho),
                num(theta),
                site(r.mu),
                site(r.nu),
                num(d),
                num(r.estimate),
                num(r.stderr),
                r.trials.to_string(),
            ]);
        }
        let fit = fit_decay_weighted(&weighted, fit_options(c));
        fits.push(json!({ "rho": rho, "theta": theta, "fit": fit_json(&fit) }));
    }
    let mut out = Outcome::new(table, json!({ "fits": fits }));
    out.dropped = dropped;
    Ok(out)
}

fn correlator_table(c: &ExperimentConfig, g: &BoxSpec, ens: &CorrelatorEnsemble) -> Table {
    let mut table = Table::new(&[
        "phi", "L1", "L2", "mu", "nu", "dist", "estimate", "stderr", "trials",
    ]);
    for ((&(mu, nu), &d), e) in ens.pairs.iter().zip(&ens.distances).zip(ens.pair_means()) {
        table.push(vec![
            num(c.phi),
            g.l1.to_string(),
            g.l2.to_string(),
            site(mu),
            site(nu),
            num(d),
            num(e.mean),
            num(e.stderr),
            e.samples.to_string(),
        ]);
    }
    table
}

fn correlator<R: TrialRunner + ?Sized>(
    c: &ExperimentConfig,
    phi: PhaseAngle,
    runner: &R,
) -> Result<Outcome, RunError> {
    let g = c.geometry()?;
    let pairs = axis_diagonal_pairs(&g, Site::new(0, 0), c.d_min, c.d_max);
    let ens = correlator_mc(phi, &g, &pairs, c.trials, c.seed, runner)?;
    if ens.values.is_empty() {
        return Err(RunError::Numerical(
            "every eigen-decomposition failed".into(),
        ));
    }
    let fit = fit_decay(&ens.samples(), fit_options(c));
    let mut out = Outcome::new(
        correlator_table(c, &g, &ens),
        json!({ "fit": fit_json(&fit) }),
    );
    out.dropped = ens.dropped;
    Ok(out)
}

/// Ambient torus for a contraction check on the box `inner_l`.
pub fn contraction_ambient(l1: u32, l2: u32) -> BoxSpec {
    BoxSpec::torus(2 * l1 + 1, 2 * l2 + 1).expect("positive sizes")
}

/// The site of the complement's interior farthest from `mu` on the torus.
pub fn farthest_target(inner: &BoxSpec, ambient: &BoxSpec, mu: Site) -> Result<Site, RunError> {
    let comp = IndexMap::with_hole(*ambient, *inner)?;
    comp.interior()
        .into_iter()
        .max_by(|a, b| {
            ambient
                .distance_euclid(mu, *a)
                .total_cmp(&ambient.distance_euclid(mu, *b))
        })
        .ok_or_else(|| RunError::Config("the complement has no interior".into()))
}

fn contraction<R: TrialRunner + ?Sized>(
    c: &ExperimentConfig,
    phi: PhaseAngle,
    runner: &R,
) -> Result<Outcome, RunError> {
    let ambient = contraction_ambient(c.l1, c.l2);
    let mu = Site::new(0, 0);
    let mut table = Table::new(&[
        "phi",
        "L1",
        "L2",
        "s",
        "rho",
        "theta",
        "mu",
        "nu",
        "lhs",
        "lhs_stderr",
        "rhs",
        "rhs_stderr",
        "argmax",
        "q_hat",
        "trials",
        "dropped",
    ]);
    let mut worst = 0.0f64;
    let mut dropped = 0;
    let mut nu = None;
    for (rho, theta) in c.z_grid() {
        let mut setup = ContractionSetup {
            l1: c.l1,
            l2: c.l2,
            ambient,
            mu,
            nu: mu,
            s: c.s,
            z: SpectralParameter::polar(rho, theta)?,
        };
        let target = match nu {
            Some(n) => n,
            None => *nu.insert(farthest_target(&setup.inner()?, &ambient, mu)?),
        };
        setup.nu = target;
        let rep = iteration_contraction_check(phi, &setup, c.trials, c.seed, runner)?;
        worst = worst.max(rep.q_hat);
        dropped += rep.dropped;
        table.push(vec![
            num(c.phi),
            c.l1.to_string(),
            c.l2.to_string(),
            num(c.s),
            num(rho),
            num(theta),
            site(mu),
            site(target),
            num(rep.lhs.mean),
            num(rep.lhs.stderr),
            num(rep.rhs.mean),
            num(rep.rhs.stderr),
            site(rep.argmax),
            num(rep.q_hat),
            rep.lhs.samples.to_string(),
            rep.dropped.to_string(),
        ]);
    }
    let summary = json!({
        "max_q_hat": worst,
        "ambient": [ambient.l1, ambient.l2],
        "contracts": worst < 1.0,
    });
    let mut out = Outcome::new(table, summary);
    out.dropped = dropped;
    Ok(out)
}

fn initial_state(c: &ExperimentConfig) -> Result<Vec<(Site, C64)>, RunError> {
    match &c.initial_state {
        Some(path) => Ok(read_initial_state(&std::fs::read_to_string(path)?)?),
        None => Ok(vec![(Site::new(0, 0), C64::new(1.0, 0.0))]),
    }
}

fn spread_outcome(c: &ExperimentConfig, series: &[SpreadSeries], seeds: &[u64]) -> Outcome {
    let mut table = Table::new(&["seed", "n", "moment_p", "leakage"]);
    for (sr, &seed) in series.iter().zip(seeds) {
        for (n, (m, l)) in sr.moment_p.iter().zip(&sr.leakage).enumerate() {
            table.push(vec![seed.to_string(), n.to_string(), num(*m), num(*l)]);
        }
    }
    let ratios: Vec<f64> = series.iter().map(SpreadSeries::plateau_ratio).collect();
    let lates: Vec<f64> = series.iter().map(|s| s.early_late_max().1).collect();
    let finals: Vec<f64> = series.iter().map(SpreadSeries::final_value).collect();
    let leaks = series.iter().filter(|s| s.leaked()).count();
    let drift = series.iter().map(|s| s.norm_drift).fold(0.0, f64::max);
    let per_seed: Vec<Value> = series
        .iter()
        .zip(seeds)
        .map(|(s, &seed)| {
            json!({
                "seed": seed,
                "plateau_ratio": s.plateau_ratio(),
                "final": s.final_value(),
                "leaked": s.leaked(),
                "first_leak": s.first_leak(),
                "norm_drift": s.norm_drift,
            })
        })
        .collect();
    let median_ratio = median(&ratios);
    let summary = json!({
        "median_plateau_ratio": median_ratio,
        "median_late_max": median(&lates),
        "median_final": median(&finals),
        "leak_count": leaks,
        "plateau_factor": c.plateau_factor,
        "plateau_holds": leaks == 0 && median_ratio <= c.plateau_factor,
        "max_norm_drift": drift,
        "runs": per_seed,
    });
    let mut out = Outcome::new(table, summary);
    if drift > NORM_TOL {
        out.failure = Some(format!("norm drift {drift:e} exceeds {NORM_TOL:e}"));
    }
    out
}

fn spread_seeds(c: &ExperimentConfig, count: u64) -> Vec<u64> {
    (0..count).map(|i| trial_seed(c.seed, i)).collect()
}

fn spread<R: TrialRunner + ?Sized>(
    c: &ExperimentConfig,
    phi: PhaseAngle,
    runner: &R,
) -> Result<Outcome, RunError> {
    let g = c.geometry()?;
    let seeds = spread_seeds(c, u64::from(c.seeds));
    let series = spread_experiment(
        phi,
        &g,
        c.p,
        c.horizon as usize,
        &seeds,
        &initial_state(c)?,
        runner,
    )?;
    Ok(spread_outcome(c, &series, &seeds))
}

/// What [`strip_experiment`] measured.
#[derive(Debug, Clone)]
pub enum StripReport {
    Decay {
        ensemble: CorrelatorEnsemble,
        fit: Result<DecayFit, ccnet_core::Error>,
    },
    Spread(Vec<SpreadSeries>),
}

/// Pairs `(0, y) – (±d, y)` for every row `y` of the strip, `d` in `[d_min, d_max]`
/// up to half the length.
pub fn strip_pairs(strip: &BoxSpec, d_min: u32, d_max: u32) -> Vec<(Site, Site)> {
    let (y0, y1) = strip.y_range();
    let half = strip.width() as i64 / 2;
    let mut out = Vec::new();
    for y in y0..=y1 {
        let origin = Site::new(0, y);
        let mut seen = std::collections::BTreeSet::new();
        for d in i64::from(d_min)..=i64::from(d_max).min(half) {
            for target in [origin.offset(d, 0), origin.offset(-d, 0)] {
                let t = strip.canonical(target).expect("rows stay inside the strip");
                if seen.insert(t) {
                    out.push((origin, t));
                }
            }
        }
    }
    out
}

/// Runs `observable` on the strip of half-height `m` and periodic length `length`.
/// For the spread observable, `trials` is the number of disorder seeds.
#[allow(clippy::too_many_arguments)]
pub fn strip_experiment<R: TrialRunner + ?Sized>(
    phi: PhaseAngle,
    m: u32,
    length: u32,
    observable: StripObservable,
    trials: u64,
    seed: u64,
    fit: FitOptions,
    runner: &R,
) -> ccnet_core::Result<StripReport> {
    if !length.is_multiple_of(2) || length < 8 * m {
        return Err(ccnet_core::Error::Geometry(format!(
            "strip length must be even and at least 8·M = {}, got {length}",
            8 * m
        )));
    }
    let g = BoxSpec::strip(m, length)?;
    match observable {
        StripObservable::CorrelatorDecay => {
            let pairs = strip_pairs(
                &g,
                fit.d_min.max(0.0) as u32,
                fit.d_max.min(f64::from(length)) as u32,
            );
            let ensemble = correlator_mc(phi, &g, &pairs, trials, seed, runner)?;
            let fit = fit_decay(&ensemble.samples(), fit);
            Ok(StripReport::Decay { ensemble, fit })
        }
        StripObservable::Spread => {
            let seeds: Vec<u64> = (0..trials).map(|i| trial_seed(seed, i)).collect();
            let origin = [(Site::new(0, 0), C64::new(1.0, 0.0))];
            Ok(StripReport::Spread(spread_experiment(
                phi, &g, 2.0, 2000, &seeds, &origin, runner,
            )?))
        }
    }
}

fn strip<R: TrialRunner + ?Sized>(
    c: &ExperimentConfig,
    phi: PhaseAngle,
    runner: &R,
) -> Result<Outcome, RunError> {
    let g = c.geometry()?;
    let length = c.length.expect("validated strip length");
    match c.observable {
        StripObservable::CorrelatorDecay => {
            let report = strip_experiment(
                phi,
                c.l2,
                length,
                c.observable,
                c.trials,
                c.seed,
                fit_options(c),
                runner,
            )?;
            let StripReport::Decay { ensemble, fit } = report else {
                unreachable!("decay observable")
            };
            if ensemble.values.is_empty() {
                return Err(RunError::Numerical(
                    "every eigen-decomposition failed".into(),
                ));
            }
            let mut out = Outcome::new(
                correlator_table(c, &g, &ensemble),
                json!({ "fit": fit_json(&fit) }),
            );
            out.dropped = ensemble.dropped;
            Ok(out)
        }
        StripObservable::Spread => {
            // same protocol as the torus spread, with the configured moment order and horizon
            let seeds = spread_seeds(c, u64::from(c.seeds));
            let series = spread_experiment(
                phi,
                &g,
                c.p,
                c.horizon as usize,
                &seeds,
                &initial_state(c)?,
                runner,
            )?;
            Ok(spread_outcome(c, &series, &seeds))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ccnet_core::mc::Sequential;

    fn small(e: Experiment) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults_for(e);
        c.trials = c.trials.min(100);
        c.theta_count = 2;
        c.rho = vec![1.1];
        c.seeds = 3;
        c.horizon = 40;
        c
    }

    #[test]
    fn unitarity_reports_every_trial() {
        let mut c = small(Experiment::Unitarity);
        c.trials = 5;
        c.operator_out = Some("op.txt".into());
        let out = execute(&c, &Sequential).unwrap();
        assert_eq!(out.table.rows.len(), 5);
        assert!(out.failure.is_none());
        assert!(out.operator.unwrap().starts_with("ccnet-operator 1"));
    }

    #[test]
    fn spectrum_at_phi_zero_matches_blocks() {
        let mut c = small(Experiment::Spectrum);
        c.phi = 0.0;
        c.trials = 3;
        let out = execute(&c, &Sequential).unwrap();
        assert_eq!(out.table.rows.len(), 3 * 64);
        assert!(out.summary["max_phi0_mismatch"].as_f64().unwrap() < 1e-8);
    }

    #[test]
    fn gaps_report_exact_and_bound() {
        let mut c = small(Experiment::Gaps);
        c.trials = 2000;
        let out = execute(&c, &Sequential).unwrap();
        assert_eq!(
            out.table.columns,
            ["L1", "L2", "eta", "theta", "trials", "estimate", "stderr", "exact", "bound"]
        );
        let exact: f64 = out.table.rows[0][7].parse().unwrap();
        let ell = 2.0 / std::f64::consts::PI * (0.05f64).asin();
        assert!((exact - (1.0 - 4.0 * ell).powi(4)).abs() < 1e-12);
    }

    #[test]
    fn contraction_and_moments_run() {
        let mut c = small(Experiment::Contraction);
        (c.l1, c.l2) = (1, 1);
        c.theta_count = 1;
        let out = execute(&c, &Sequential).unwrap();
        assert_eq!(out.table.rows.len(), 1);
        assert!(out.summary["contracts"].as_bool().unwrap());
        let m = execute(&small(Experiment::Moments), &Sequential).unwrap();
        assert_eq!(m.table.columns.len(), 12);
        assert!(m
            .table
            .rows
            .iter()
            .all(|r| r[9].parse::<f64>().unwrap().is_finite()));
    }

    #[test]
    fn farthest_target_is_in_complement_interior() {
        let inner = BoxSpec::boxed(3, 3).unwrap();
        let amb = contraction_ambient(3, 3);
        let nu = farthest_target(&inner, &amb, Site::new(0, 0)).unwrap();
        let comp = IndexMap::with_hole(amb, inner).unwrap();
        assert!(comp.interior().contains(&nu));
        assert!(amb.distance_inf(Site::new(0, 0), nu) >= 12);
    }

    #[test]
    fn spread_and_strip_spread() {
        let out = execute(&small(Experiment::Spread), &Sequential).unwrap();
        assert_eq!(out.table.rows.len(), 3 * 41);
        assert_eq!(out.summary["leak_count"], 0);
        let mut s = small(Experiment::Strip);
        s.observable = StripObservable::Spread;
        let out = execute(&s, &Sequential).unwrap();
        assert_eq!(out.table.columns, ["seed", "n", "moment_p", "leakage"]);
    }

    #[test]
    fn strip_pairs_stay_on_rows() {
        let g = BoxSpec::strip(1, 16).unwrap();
        let pairs = strip_pairs(&g, 2, 14);
        assert!(pairs.iter().all(|(a, b)| a.n == b.n && a.m == 0));
        // d = 8 wraps onto itself, so each row has 2·6 + 1 targets
        assert_eq!(pairs.len(), 4 * 13);
        assert!(strip_experiment(
            PhaseAngle::new(0.1),
            2,
            12,
            StripObservable::Spread,
            1,
            0,
            FitOptions::default(),
            &Sequential
        )
        .is_err());
    }

    #[test]
    fn strip_correlator_vanishes_at_phi_zero() {
        let g = BoxSpec::strip(1, 16).unwrap();
        let opts = FitOptions {
            d_min: 2.0,
            d_max: 8.0,
            ..FitOptions::default()
        };
        let rep = strip_experiment(
            PhaseAngle::new(0.0),
            1,
            16,
            StripObservable::CorrelatorDecay,
            5,
            1,
            opts,
            &Sequential,
        )
        .unwrap();
        let StripReport::Decay { ensemble, .. } = rep else {
            panic!()
        };
        assert_eq!(ensemble.pairs, strip_pairs(&g, 2, 8));
        assert!(ensemble.values.iter().flatten().all(|&v| v < 1e-10));
    }

    #[test]
    fn config_errors_map_to_exit_two() {
        let mut c = small(Experiment::Spread);
        c.mode = crate::config::GeometryMode::Box;
        assert_eq!(execute(&c, &Sequential).unwrap_err().exit_code(), 2);
        let e: RunError = ccnet_core::Error::Fit("x".into()).into();
        assert_eq!(e.exit_code(), 3);
    }
}
