//! One PASS/FAIL line per acceptance criterion. Lines go straight to stderr so
//! they show up without `--nocapture`.

use ccnet::config::{Experiment, ExperimentConfig, GeometryMode};
use ccnet::experiments::execute;
use ccnet::output::data_section;
use ccnet::runner::Parallel;
use ccnet_core::lattice::BoxSpec;
use ccnet_core::linalg::operator_norm;
use ccnet_core::operator::{
    build_decoupled, build_network, build_s, build_u, sample_disorder, wall_term, Boundary,
    PhaseAngle,
};
use ccnet_core::seed::{splitmix64, unit_f64};
use ccnet_core::spectral::{diagonalize, matched_distance, phi0_spectrum, DENSE_LIMIT};
use serde_json::Value;
use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;
use std::time::Instant;

const UNITARITY_TOL: f64 = 1e-10;
const SPECTRUM_TOL: f64 = 1e-8;
const GAP_SIGMAS: f64 = 3.0;
const NORM_SLACK: f64 = 1e-12;
const DECOUPLING_TOL: f64 = 1e-14;
const MOMENT_RATIO: f64 = 10.0;
const MIN_R2: f64 = 0.9;
const CRITICAL_G_FACTOR: f64 = 3.0;
const PLATEAU_RATIO: f64 = 2.0;
const CRITICAL_SPREAD_FACTOR: f64 = 5.0;

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn report(id: u32, name: &str, started: Instant, verdict: &Verdict) {
    let (tag, detail) = match verdict {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let mut err = std::io::stderr().lock();
    writeln!(
        err,
        "{tag} criterion {id:>2} {name}: {detail} ({:.1} s)",
        started.elapsed().as_secs_f64()
    )
    .unwrap();
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn config(e: Experiment) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults_for(e);
    c.seed = 20240501;
    c
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

/// Deterministic stream of uniforms for picking random instances.
struct Draws(u64);

impl Draws {
    fn next(&mut self) -> f64 {
        self.0 = splitmix64(self.0);
        unit_f64(self.0)
    }

    fn below(&mut self, n: u32) -> u32 {
        (self.next() * f64::from(n)) as u32 % n
    }
}

fn unitarity_suite() -> Verdict {
    let mut draws = Draws(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let seed = splitmix64(draws.0 ^ 0x5eed);
        let phi = PhaseAngle::new((2.0 * draws.next() - 1.0) * PI);
        let (l1, l2) = (1 + draws.below(4), 1 + draws.below(4));
        let u = match draws.below(5) {
            0 => build_network(
                &sample_disorder(seed, &BoxSpec::boxed(l1, l2).unwrap()),
                phi,
                &BoxSpec::boxed(l1, l2).unwrap(),
            ),
            1 => build_network(
                &sample_disorder(seed, &BoxSpec::torus(l1, l2).unwrap()),
                phi,
                &BoxSpec::torus(l1, l2).unwrap(),
            ),
            2 => {
                let m = 1 + draws.below(2);
                let g = BoxSpec::strip(m, 16).unwrap();
                build_network(&sample_disorder(seed, &g), phi, &g)
            }
            k => {
                let (i1, i2) = (l1.min(3), l2.min(3));
                let inner = BoxSpec::boxed(i1, i2).unwrap();
                let ambient = BoxSpec::torus(i1 + 1, i2 + 1).unwrap();
                let w = sample_disorder(seed, &ambient);
                if k == 3 {
                    build_u(
                        &w,
                        &build_s(phi, &ambient, Boundary::ComplementWalls { inner }).unwrap(),
                    )
                } else {
                    build_decoupled(&w, phi, &inner, &ambient).map(|p| p.0)
                }
            }
        }
        .map_err(|e| e.to_string())?;
        worst = worst.max(u.unitarity_deviation());
    }
    check(
        worst <= UNITARITY_TOL,
        format!("max ‖U*U − I‖ = {worst:.2e} over 50 instances"),
    )
}

fn phi0_spectrum_matches() -> Verdict {
    let g = BoxSpec::boxed(2, 2).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let w = sample_disorder(seed, &g);
        let dense = diagonalize(
            &build_network(&w, PhaseAngle::new(0.0), &g).unwrap(),
            DENSE_LIMIT,
        )
        .map_err(|e| e.to_string())?;
        let exact = phi0_spectrum(&w, &g).map_err(|e| e.to_string())?;
        let d = matched_distance(&dense.eigenvalues, &exact.eigenvalues)
            .ok_or("spectra of different size")?;
        worst = worst.max(d);
    }
    check(
        worst <= SPECTRUM_TOL,
        format!("max matched distance {worst:.2e} over 20 seeds"),
    )
}

fn gap_law(runner: &Parallel) -> Verdict {
    let mut detail = Vec::new();
    let mut ok = true;
    for l in [1, 2] {
        let mut c = config(Experiment::Gaps);
        (c.l1, c.l2, c.eta, c.trials, c.theta_count) = (l, l, 0.1, 10_000, 3);
        let out = execute(&c, runner).map_err(|e| e.to_string())?;
        for row in &out.table.rows {
            let num = |i: usize| row[i].parse::<f64>().unwrap();
            let (est, se, exact, bound) = (num(5), num(6), num(7), num(8));
            ok &= (est - exact).abs() <= GAP_SIGMAS * se && est >= bound - GAP_SIGMAS * se;
            detail.push(format!(
                "L={l} θ={:.2}: {est:.4}±{se:.4} vs {exact:.4}",
                num(3)
            ));
        }
    }
    check(ok, detail.join("; "))
}

fn norm_bounds() -> Verdict {
    let g = BoxSpec::boxed(2, 2).unwrap();
    let mut worst = 0.0f64;
    for phi in [0.01, 0.1, 0.5, 1.0] {
        let p = PhaseAngle::new(phi);
        let t = operator_norm(&wall_term(p, &g).unwrap().to_dense());
        worst = worst.max(t - 2.0 * (1.0 - phi.cos()).abs());
        for seed in 0..5 {
            let w = sample_disorder(seed, &g);
            let diff = build_network(&w, p, &g).unwrap().matrix().sub(
                build_network(&w, PhaseAngle::new(0.0), &g)
                    .unwrap()
                    .matrix(),
            );
            worst = worst.max(operator_norm(&diff.to_dense()) - 4.0 * phi.abs());
        }
    }
    check(
        worst <= NORM_SLACK,
        format!("largest excess over the bounds {worst:.3e}"),
    )
}

fn decoupling() -> Verdict {
    let phi = PhaseAngle::new(0.3);
    let mut counts = Vec::new();
    let mut identity = 0.0f64;
    let mut excess = f64::NEG_INFINITY;
    let mut at_zero = 0;
    for l in 1..=3u32 {
        let inner = BoxSpec::boxed(l, l).unwrap();
        let ambient = BoxSpec::torus(l + 2, l + 2).unwrap();
        let w = sample_disorder(u64::from(l), &ambient);
        let full = build_network(&w, phi, &ambient).unwrap();
        let (dec, v) = build_decoupled(&w, phi, &inner, &ambient).map_err(|e| e.to_string())?;
        identity = identity.max(dec.matrix().add(&v.matrix).sub(full.matrix()).max_abs());
        excess = excess.max(v.max_abs() - 4.0 * phi.radians().abs());
        counts.push(v.nonzero_count() as i64);
        at_zero += build_decoupled(&w, PhaseAngle::new(0.0), &inner, &ambient)
            .unwrap()
            .1
            .nonzero_count();
    }
    let linear = counts[2] - counts[1] == counts[1] - counts[0] && counts[1] > counts[0];
    check(
        identity <= DECOUPLING_TOL && at_zero == 0 && linear && excess <= 0.0,
        format!("identity {identity:.1e}, V at φ=0 has {at_zero} entries, counts {counts:?} for L1+L2 = 2,4,6, max |V| − 4|φ| = {excess:.3}"),
    )
}

fn moment_boundedness(runner: &Parallel) -> Verdict {
    let mut c = config(Experiment::Moments);
    (c.phi, c.l1, c.l2, c.s, c.trials) = (0.3, 2, 2, 0.5, 500);
    c.rho = vec![0.9, 0.99, 0.999];
    c.theta_count = 1;
    let out = execute(&c, runner).map_err(|e| e.to_string())?;
    // columns: ..., mu(6), nu(7), dist, estimate(9)
    let mut by_pair: std::collections::BTreeMap<(String, String), Vec<f64>> = Default::default();
    for row in &out.table.rows {
        by_pair
            .entry((row[6].clone(), row[7].clone()))
            .or_default()
            .push(row[9].parse().unwrap());
    }
    let finite = by_pair
        .values()
        .flatten()
        .all(|v| v.is_finite() && *v > 0.0);
    let ratio = by_pair
        .values()
        .map(|v| {
            v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    check(
        finite && ratio < MOMENT_RATIO,
        format!(
            "{} pairs, all finite: {finite}, worst max/min over ρ {ratio:.3}",
            by_pair.len()
        ),
    )
}

fn correlator_decay(runner: &Parallel) -> Verdict {
    let mut fits = Vec::new();
    for phi in [0.05, FRAC_PI_4] {
        let mut c = config(Experiment::Correlator);
        c.phi = phi;
        let out = execute(&c, runner).map_err(|e| e.to_string())?;
        fits.push(out.summary["fit"].clone());
    }
    let (g, r2, g_crit) = (f(&fits[0]["g"]), f(&fits[0]["r2"]), f(&fits[1]["g"]));
    check(
        g > 0.0 && r2 > MIN_R2 && g_crit * CRITICAL_G_FACTOR <= g,
        format!("φ=0.05: g = {g:.3}, R² = {r2:.3}; φ=π/4: g = {g_crit:.3}"),
    )
}

fn dynamical_plateau(runner: &Parallel) -> Verdict {
    let mut summaries = Vec::new();
    for phi in [0.05, FRAC_PI_4] {
        let mut c = config(Experiment::Spread);
        (c.phi, c.l1, c.l2, c.p, c.horizon, c.seeds) = (phi, 16, 16, 2.0, 2000, 32);
        summaries.push(execute(&c, runner).map_err(|e| e.to_string())?.summary);
    }
    let (ratio, leaks, plateau) = (
        f(&summaries[0]["median_plateau_ratio"]),
        summaries[0]["leak_count"].as_u64().unwrap_or(u64::MAX),
        f(&summaries[0]["median_late_max"]),
    );
    let critical = f(&summaries[1]["median_final"]);
    check(
        ratio <= PLATEAU_RATIO && leaks == 0 && critical >= CRITICAL_SPREAD_FACTOR * plateau,
        format!("median ratio {ratio:.3}, leaks {leaks}, plateau {plateau:.2}; φ=π/4 final {critical:.1}"),
    )
}

fn contraction(runner: &Parallel) -> Verdict {
    let mut q = Vec::new();
    for phi in [0.1, 0.05, 0.01] {
        let mut c = config(Experiment::Contraction);
        (c.phi, c.l1, c.l2, c.trials, c.theta_count) = (phi, 3, 3, 1000, 1);
        c.rho = vec![1.1];
        q.push(f(
            &execute(&c, runner).map_err(|e| e.to_string())?.summary["max_q_hat"]
        ));
    }
    check(
        q[1] < 1.0 && q[0] > q[1] && q[1] > q[2],
        format!(
            "q̂ = {:.3e}, {:.3e}, {:.3e} at φ = 0.1, 0.05, 0.01",
            q[0], q[1], q[2]
        ),
    )
}

fn strip_decay(runner: &Parallel) -> Verdict {
    let mut c = config(Experiment::Strip);
    (c.phi, c.l2, c.length) = (0.05, 1, Some(64));
    let fit = execute(&c, runner).map_err(|e| e.to_string())?.summary["fit"].clone();
    let (g, r2) = (f(&fit["g"]), f(&fit["r2"]));
    check(g > 0.0 && r2 > MIN_R2, format!("g = {g:.3}, R² = {r2:.3}"))
}

fn reproducibility() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cases = Vec::new();
    for e in [
        Experiment::Unitarity,
        Experiment::Spectrum,
        Experiment::Gaps,
        Experiment::Moments,
        Experiment::Correlator,
        Experiment::Contraction,
        Experiment::Spread,
        Experiment::Strip,
    ] {
        let mut c = config(e);
        c.trials = c.trials.min(100);
        c.theta_count = 2;
        c.rho = vec![1.1];
        c.horizon = 100;
        c.seeds = 4;
        if e == Experiment::Spread {
            (c.l1, c.l2) = (4, 4);
        }
        if e == Experiment::Correlator {
            (c.l1, c.l2, c.mode) = (2, 2, GeometryMode::Torus);
        }
        if e == Experiment::Strip {
            c.length = Some(16);
            c.trials = 40;
        }
        cases.push(c);
    }
    let mut differing = Vec::new();
    for c in &cases {
        let mut sections = Vec::new();
        for workers in [1, 3] {
            let mut run = c.clone();
            run.workers = Some(workers);
            run.out = Some(dir.path().join(format!("{}-{workers}.csv", c.experiment)));
            let files = ccnet::run(&run).map_err(|e| format!("{}: {e}", c.experiment))?;
            sections.push(data_section(&std::fs::read_to_string(files.table).unwrap()).to_string());
        }
        if sections[0] != sections[1] || sections[0].is_empty() {
            differing.push(c.experiment.name());
        }
    }
    check(
        differing.is_empty(),
        format!(
            "{} experiments at 1 and 3 workers, differing: {differing:?}",
            cases.len()
        ),
    )
}

#[test]
fn acceptance() {
    let runner = Parallel::new(ccnet::runner::default_workers()).unwrap();
    let criteria: Vec<Criterion> = vec![
        ("unitarity suite", Box::new(unitarity_suite)),
        ("phi=0 exact spectrum", Box::new(phi0_spectrum_matches)),
        ("gap law", Box::new(|| gap_law(&runner))),
        ("norm bounds", Box::new(norm_bounds)),
        ("decoupling identity", Box::new(decoupling)),
        (
            "fractional-moment boundedness",
            Box::new(|| moment_boundedness(&runner)),
        ),
        ("localization decay", Box::new(|| correlator_decay(&runner))),
        ("dynamical plateau", Box::new(|| dynamical_plateau(&runner))),
        ("contraction witness", Box::new(|| contraction(&runner))),
        ("strip decay", Box::new(|| strip_decay(&runner))),
        ("reproducibility", Box::new(reproducibility)),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let verdict = run();
        report(i as u32 + 1, name, started, &verdict);
        if verdict.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
