//! Command-line front end: run configuration, subcommand dispatch and the
//! files each subcommand writes.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::complexity::{dimension_profile, sample_complexity_experiment, RateOptions};
use crate::error::{Error, Result};
use crate::instances::{cell_centers, reference_instance};
use crate::io::{self, fmt_real, TripletHeader};
use crate::measures::{DiscreteMeasure, Exponent, MarginalVector, ProductMeasure};
use crate::oracle::{project_oracle_with, DEFAULT_VARIABLE_CAP};
use crate::plot::{emit_plot, Guide, PlotSpec, Series};
use crate::shadow::{compose_shadow_with, is_map_induced, ShadowOptions, DEFAULT_SUPPORT_CAP};
use crate::stability::{
    self, evaluate_stability, holder_experiment, map_stability_experiment, map_stability_sweep, mass_swap_family,
    random_stability_batch, theta_of, translation_family, SmoothingSpec, StabilityOptions, StabilityReport,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SHADOWPROJ_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "shadowproj-out";
/// Tolerance for agreement between the composed shadow and the LP oracle.
pub const AGREEMENT_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Canonical shadow of rho onto the marginals mu.
    Shadow,
    /// Brute-force LP projection and agreement with the shadow.
    Project,
    /// Lower-bound report for one instance or a random batch.
    Stability,
    /// Slope of shadow distance against marginal perturbation size.
    Holder,
    /// Stability of barycentric maps out of a grid.
    Mapstab,
    /// Empirical sample-complexity table.
    Rates,
    /// Covering-number dimension profile.
    Dim,
    /// Common-offset smoothing of a measure.
    Smooth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Translation,
    MassSwap,
}

/// Everything a run depends on. Stored as one JSON document; command-line
/// flags override fields read from `--config`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub rho: Option<PathBuf>,
    pub xi: Option<PathBuf>,
    pub mu: Vec<PathBuf>,
    pub nu: Vec<PathBuf>,
    /// Input measure for `dim` and `smooth`.
    pub input: Option<PathBuf>,
    /// Reference grid for `mapstab`.
    pub lambda: Option<PathBuf>,
    pub p: Option<Exponent<f64>>,
    pub q: Option<Exponent<f64>>,
    /// Exponents swept by the `stability` batch.
    pub p_values: Option<Vec<Exponent<f64>>>,
    pub q_values: Option<Vec<Exponent<f64>>>,
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub stencil: Option<Vec<Vec<f64>>>,
    pub n_grid: Option<Vec<usize>>,
    pub m_grid: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub instances: Option<usize>,
    pub max_atoms: Option<usize>,
    pub family: Option<Family>,
    pub scales: Option<Vec<f64>>,
    pub epsilons: Option<Vec<f64>>,
    pub tau: Option<f64>,
    /// Norm for covering numbers.
    pub norm: Option<Exponent<f64>>,
    pub support_cap: Option<usize>,
    pub variable_cap: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub plot: Option<bool>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($opt:ident),*; $($vec:ident),*) => {
        $( if $src.$opt.is_some() { $dst.$opt = $src.$opt.clone(); } )*
        $( if !$src.$vec.is_empty() { $dst.$vec = $src.$vec.clone(); } )*
    };
}

impl RunConfig {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: &RunConfig) -> Self {
        overlay!(self, other;
            command, rho, xi, input, lambda, p, q, p_values, q_values, delta, sigma, stencil, n_grid, m_grid,
            trials, seed, instances, max_atoms, family, scales, epsilons, tau, norm, support_cap, variable_cap,
            output_dir, plot;
            mu, nu);
        self
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    fn p(&self) -> Exponent<f64> {
        self.p.unwrap_or(Exponent::Finite(2.0))
    }

    fn q(&self) -> Exponent<f64> {
        self.q.unwrap_or(Exponent::Finite(1.0))
    }

    fn delta(&self) -> Result<f64> {
        let d = self.delta.unwrap_or(stability::DEFAULT_DELTA);
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::input("delta", format!("must lie in (0, 1), got {d}")));
        }
        Ok(d)
    }

    fn shadow_options(&self) -> ShadowOptions {
        ShadowOptions { support_cap: self.support_cap.unwrap_or(DEFAULT_SUPPORT_CAP) }
    }

    fn wants_plot(&self) -> bool {
        self.plot.unwrap_or(true)
    }

    /// `output_dir`, else the environment variable, else the built-in default.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }
}

/// Command-line flags. Unset flags leave the config file's values alone.
#[derive(Debug, Parser)]
#[command(name = "shadowproj", version, about = "Exact Wasserstein shadows and stability experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub rho: Option<PathBuf>,
    #[arg(long)]
    pub xi: Option<PathBuf>,
    /// One measure file per block, in block order.
    #[arg(long, num_args = 1..)]
    pub mu: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub nu: Vec<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<PathBuf>,
    /// Exponent: a number >= 1 or "inf".
    #[arg(long)]
    pub p: Option<Exponent<f64>>,
    #[arg(long)]
    pub q: Option<Exponent<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub p_values: Option<Vec<Exponent<f64>>>,
    #[arg(long, value_delimiter = ',')]
    pub q_values: Option<Vec<Exponent<f64>>>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub m_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub max_atoms: Option<usize>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub norm: Option<Exponent<f64>>,
    #[arg(long)]
    pub support_cap: Option<usize>,
    #[arg(long)]
    pub variable_cap: Option<usize>,
    /// Defaults to $SHADOWPROJ_OUTPUT_DIR, then ./shadowproj-out.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Skip SVG output.
    #[arg(long)]
    pub no_plot: bool,
}

impl Cli {
    /// Config file (if any) overlaid with the flags.
    pub fn into_config(self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            command: Some(self.command),
            rho: self.rho,
            xi: self.xi,
            mu: self.mu,
            nu: self.nu,
            input: self.input,
            lambda: self.lambda,
            p: self.p,
            q: self.q,
            p_values: self.p_values,
            q_values: self.q_values,
            delta: self.delta,
            sigma: self.sigma,
            stencil: None,
            n_grid: self.n_grid,
            m_grid: self.m_grid,
            trials: self.trials,
            seed: self.seed,
            instances: self.instances,
            max_atoms: self.max_atoms,
            family: self.family,
            scales: self.scales,
            epsilons: self.epsilons,
            tau: self.tau,
            norm: self.norm,
            support_cap: self.support_cap,
            variable_cap: self.variable_cap,
            output_dir: self.output_dir,
            plot: if self.no_plot { Some(false) } else { None },
        };
        Ok(base.overlay(&flags))
    }
}

impl Error {
    /// 2 for a violated mathematical assertion, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Assertion(_) => 2,
            _ => 1,
        }
    }
}

fn required<'a>(field: &str, v: &'a Option<PathBuf>) -> Result<&'a Path> {
    v.as_deref().ok_or_else(|| Error::input(field, "required for this command"))
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// `(ρ, μ)` from files, or the built-in reference instance when neither is given.
fn joint_and_marginals(cfg: &RunConfig, p: Exponent<f64>) -> Result<(ProductMeasure<f64>, MarginalVector<f64>)> {
    match (&cfg.rho, cfg.mu.is_empty()) {
        (None, true) => {
            let (rho, mu, _) = reference_instance(p)?;
            Ok((rho, mu))
        }
        (Some(path), false) => {
            let rho = io::load_product(path, p)?;
            let mu = io::load_marginals(&cfg.mu, rho.spec())?;
            Ok((rho, mu))
        }
        (None, false) => Err(Error::input("rho", "required when mu is given")),
        (Some(_), true) => Err(Error::input("mu", "required when rho is given")),
    }
}

fn report_cells(instance: &str, t: Option<f64>, r: &StabilityReport<f64>) -> Vec<String> {
    vec![
        instance.to_string(),
        r.p.to_string(),
        r.q.to_string(),
        t.map(fmt_real).unwrap_or_default(),
        fmt_real(r.marginal_distance()),
        fmt_real(r.lower),
        fmt_real(r.observed),
        fmt_real(r.rho_xi_term),
        r.ratio().map(fmt_real).unwrap_or_default(),
    ]
}

const REPORT_COLUMNS: [&str; 9] = ["instance", "p", "q", "t", "W_q_marginals", "lower", "observed", "rho_xi_term", "ratio"];

#[derive(Serialize)]
struct FitSummary {
    slope: f64,
    intercept: f64,
    r2: f64,
    stderr: f64,
    theta: Option<f64>,
    decades: f64,
    pass: bool,
}

/// Runs one configured command, writing its artifacts into the output directory.
pub fn run(cfg: &RunConfig) -> Result<()> {
    let command = cfg.command.ok_or_else(|| Error::input("command", "missing"))?;
    let out = cfg.resolved_output_dir();
    io::ensure_dir(&out)?;
    // The output location is not part of the experiment.
    let echo = RunConfig { output_dir: None, ..cfg.clone() };
    io::write_json(&out.join("config.json"), &echo)?;
    match command {
        Command::Shadow => run_shadow(cfg, &out),
        Command::Project => run_project(cfg, &out),
        Command::Stability => run_stability(cfg, &out),
        Command::Holder => run_holder(cfg, &out),
        Command::Mapstab => run_mapstab(cfg, &out),
        Command::Rates => run_rates(cfg, &out),
        Command::Dim => run_dim(cfg, &out),
        Command::Smooth => run_smooth(cfg, &out),
    }
}

fn run_shadow(cfg: &RunConfig, out: &Path) -> Result<()> {
    let rho_path = required("rho", &cfg.rho)?;
    let rho = io::load_product(rho_path, cfg.p())?;
    let mu = io::load_marginals(&cfg.mu, rho.spec())?;
    let spec = rho.spec().clone();
    let result = compose_shadow_with(&rho, &mu, &spec, &cfg.shadow_options())?;
    io::save_measure(&out.join("shadow.json"), result.shadow.base(), spec.block_dims())?;
    io::write_triplets(
        &out.join("glued.csv"),
        &TripletHeader { rows: "shadow.json".into(), cols: display(rho_path) },
        &result.glued,
    )?;
    #[derive(Serialize)]
    struct Summary<'a> {
        p: Exponent<f64>,
        value: f64,
        per_marginal_values: &'a [f64],
        map_induced: bool,
    }
    io::write_json(
        &out.join("summary.json"),
        &Summary {
            p: spec.p,
            value: result.value,
            per_marginal_values: &result.per_marginal_values,
            map_induced: is_map_induced(&result).induced,
        },
    )
}

fn run_project(cfg: &RunConfig, out: &Path) -> Result<()> {
    let rho_path = required("rho", &cfg.rho)?;
    let rho = io::load_product(rho_path, cfg.p())?;
    let mu = io::load_marginals(&cfg.mu, rho.spec())?;
    let spec = rho.spec().clone();
    let cert = project_oracle_with(&rho, &mu, &spec, cfg.variable_cap.unwrap_or(DEFAULT_VARIABLE_CAP))?;
    let shadow = compose_shadow_with(&rho, &mu, &spec, &cfg.shadow_options())?;
    let gap = (shadow.value - cert.distance()).abs();
    let projection = cert.projection.base();
    let points: Vec<Vec<f64>> = cert
        .gamma
        .iter()
        .map(|(t, _, _)| t.iter().enumerate().flat_map(|(i, &a)| mu.get(i).atom(a).to_vec()).collect())
        .collect();
    let triplets: Vec<(usize, usize, f64)> = cert
        .gamma
        .iter()
        .zip(&points)
        .map(|((_, y, m), x)| (projection.find(x).expect("projection atom"), *y, *m))
        .collect();
    io::save_measure(&out.join("projection.json"), projection, spec.block_dims())?;
    io::write_triplets(
        &out.join("coupling.csv"),
        &TripletHeader { rows: "projection.json".into(), cols: display(rho_path) },
        &triplets,
    )?;
    #[derive(Serialize)]
    struct Certificate<'a> {
        p: Exponent<f64>,
        value: f64,
        distance: f64,
        shadow_value: f64,
        agreement: f64,
        duality_gap: f64,
        max_violation: f64,
        iterations: usize,
        duals: &'a [f64],
    }
    io::write_json(
        &out.join("certificate.json"),
        &Certificate {
            p: spec.p,
            value: cert.value,
            distance: cert.distance(),
            shadow_value: shadow.value,
            agreement: gap,
            duality_gap: cert.duality_gap,
            max_violation: cert.max_violation,
            iterations: cert.iterations,
            duals: &cert.duals,
        },
    )?;
    if gap > AGREEMENT_TOL {
        return Err(Error::Assertion(format!(
            "shadow value {} and oracle distance {} differ by {gap:e}",
            shadow.value,
            cert.distance()
        )));
    }
    Ok(())
}

fn run_stability(cfg: &RunConfig, out: &Path) -> Result<()> {
    let options = StabilityOptions { delta: cfg.delta()?, shadow: cfg.shadow_options() };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    if cfg.rho.is_some() || cfg.xi.is_some() {
        let rho = io::load_product(required("rho", &cfg.rho)?, cfg.p())?;
        let xi = io::load_product(required("xi", &cfg.xi)?, cfg.p())?;
        let mu = io::load_marginals(&cfg.mu, rho.spec())?;
        let nu = io::load_marginals(&cfg.nu, rho.spec())?;
        let r = evaluate_stability(&rho, &xi, &mu, &nu, cfg.p(), cfg.q(), &options)?;
        rows.push(report_cells("0", None, &r));
        reports.push(r);
    } else {
        let ps = cfg.p_values.clone().unwrap_or_else(|| vec![Exponent::Finite(1.5), Exponent::Finite(2.0)]);
        let qs = cfg
            .q_values
            .clone()
            .unwrap_or_else(|| vec![Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinite]);
        let batch = random_stability_batch(
            cfg.instances.unwrap_or(100),
            cfg.seed.unwrap_or(0),
            &ps,
            &qs,
            2,
            cfg.max_atoms.unwrap_or(4),
        )?;
        for b in batch {
            rows.push(report_cells(&b.instance.to_string(), None, &b.report));
            reports.push(b.report);
        }
    }
    io::write_table(&out.join("stability.csv"), &REPORT_COLUMNS, &rows)?;
    let violations = reports.iter().filter(|r| !r.lower_bound_holds()).count();
    let min_slack = reports.iter().map(|r| r.slack_lower).fold(f64::INFINITY, f64::min);
    #[derive(Serialize)]
    struct Summary {
        rows: usize,
        violations: usize,
        min_slack: f64,
        pass: bool,
    }
    io::write_json(
        &out.join("stability_summary.json"),
        &Summary { rows: reports.len(), violations, min_slack, pass: violations == 0 },
    )?;
    if violations > 0 {
        return Err(Error::Assertion(format!("lower bound violated on {violations} rows (min slack {min_slack:e})")));
    }
    Ok(())
}

fn default_scales(family: Family) -> Vec<f64> {
    match family {
        Family::Translation => (0..6).map(|k| 0.002 * 2f64.powi(k)).collect(),
        Family::MassSwap => (0..6).map(|k| 0.0025 * 2f64.powi(k)).collect(),
    }
}

fn log_plot(title: &str, x: &str, y: &str, label: &str, pts: Vec<(f64, f64)>, guide: Option<(f64, &str)>) -> PlotSpec {
    let anchor = pts.first().copied().unwrap_or((1.0, 1.0));
    PlotSpec {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        series: vec![Series { label: label.into(), points: pts }],
        log_log: true,
        guides: guide.map(|(slope, l)| Guide { label: l.into(), slope, anchor }).into_iter().collect(),
    }
}

fn run_holder(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (p, q) = (cfg.p(), cfg.q());
    let (rho, mu) = joint_and_marginals(cfg, p)?;
    let family = cfg.family.unwrap_or(Family::Translation);
    let scales = cfg.scales.clone().unwrap_or_else(|| default_scales(family));
    let fit = match family {
        Family::Translation => holder_experiment(&rho, &mu, translation_family(&mu), p, q, &scales)?,
        Family::MassSwap => {
            let last = mu.components().iter().map(DiscreteMeasure::len).min().unwrap_or(1) - 1;
            holder_experiment(&rho, &mu, mass_swap_family(&mu, 0, last), p, q, &scales)?
        }
    };
    let theta = p.finite().and_then(|p| theta_of(p, cfg.delta().ok()?).ok()).map(|t| t.theta);
    let rows: Vec<Vec<String>> =
        fit.points.iter().zip(&fit.reports).map(|(pt, r)| report_cells("0", Some(pt.t), r)).collect();
    io::write_table(&out.join("holder.csv"), &REPORT_COLUMNS, &rows)?;
    let pass = match family {
        Family::Translation => (fit.slope - 1.0).abs() <= 0.05,
        Family::MassSwap => theta.is_some_and(|th| fit.slope >= th - 0.05) && fit.r2 >= 0.8,
    };
    io::write_json(
        &out.join("holder_fit.json"),
        &FitSummary { slope: fit.slope, intercept: fit.intercept, r2: fit.r2, stderr: fit.stderr, theta, decades: fit.decades, pass },
    )?;
    if cfg.wants_plot() {
        let pts = fit.points.iter().filter(|pt| pt.input > 0.0 && pt.output > 0.0).map(|pt| (pt.input, pt.output)).collect();
        let spec = log_plot("shadow distance vs marginal perturbation", "W_q(mu, nu_t)", "W_p(shadows)", "observed", pts, theta.map(|t| (t, "slope theta(p)")));
        emit_plot(&spec, &out.join("holder.svg"))?;
    }
    if let Some(r) = fit.reports.iter().find(|r| !r.lower_bound_holds()) {
        return Err(Error::Assertion(format!("lower bound violated: {} > {}", r.lower, r.observed)));
    }
    Ok(())
}

fn run_mapstab(cfg: &RunConfig, out: &Path) -> Result<()> {
    let p = cfg.p();
    let lambda = match &cfg.lambda {
        Some(path) => io::load_measure(path)?.0,
        None => DiscreteMeasure::uniform(cell_centers::<f64>(50).into_iter().map(|x| vec![x]).collect())?,
    };
    let mu = match cfg.mu.as_slice() {
        [] => DiscreteMeasure::on_line(&[0.1, 0.4, 0.9], Some(vec![0.2, 0.5, 0.3]))?,
        [one] => io::load_measure(one)?.0,
        _ => return Err(Error::input("mu", "mapstab takes a single measure")),
    };
    if let [nu_path] = cfg.nu.as_slice() {
        let nu = io::load_measure(nu_path)?.0;
        let r = map_stability_experiment(&lambda, &mu, &nu, p)?;
        return io::write_json(&out.join("mapstab.json"), &r);
    }
    let scales = cfg.scales.clone().unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
    let dim = mu.dim();
    let fit = map_stability_sweep(&lambda, &mu, |t| mu.translate(&vec![t; dim]), p, &scales)?;
    let rows: Vec<Vec<String>> =
        fit.points.iter().map(|pt| vec![fmt_real(pt.t), fmt_real(pt.input), fmt_real(pt.output)]).collect();
    io::write_table(&out.join("mapstab.csv"), &["t", "rhs_base", "lhs"], &rows)?;
    let theta = 1.0 / 6.0;
    io::write_json(
        &out.join("mapstab_fit.json"),
        &FitSummary {
            slope: fit.slope,
            intercept: fit.intercept,
            r2: fit.r2,
            stderr: fit.stderr,
            theta: Some(theta),
            decades: fit.decades,
            pass: fit.slope >= theta,
        },
    )?;
    if cfg.wants_plot() {
        let pts = fit.points.iter().map(|pt| (pt.input, pt.output)).collect();
        let spec = log_plot("map stability", "W_1(mu, nu)", "|T_mu - T_nu|", "lhs", pts, Some((theta, "slope 1/6")));
        emit_plot(&spec, &out.join("mapstab.svg"))?;
    }
    Ok(())
}

fn run_rates(cfg: &RunConfig, out: &Path) -> Result<()> {
    let p = cfg.p();
    let (rho, mu) = joint_and_marginals(cfg, p)?;
    let grid = vec![50, 100, 200, 400];
    let options = RateOptions { shadow: cfg.shadow_options(), delta: cfg.delta()?, ..RateOptions::default() };
    let table = sample_complexity_experiment(
        &rho,
        &mu,
        cfg.n_grid.as_deref().unwrap_or(&grid),
        cfg.m_grid.as_deref().unwrap_or(&grid),
        cfg.trials.unwrap_or(20),
        cfg.seed.unwrap_or(0),
        p,
        &options,
    )?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), r.m.to_string(), r.trial.to_string(), r.seed.to_string(), fmt_real(r.distance)])
        .collect();
    io::write_table(&out.join("rates.csv"), &["n", "m", "trial", "seed", "distance"], &rows)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        n_fit: Option<crate::fit::LinearFit>,
        m_fit: Option<crate::fit::LinearFit>,
        reference_n_slope: f64,
        reference_m_slopes: &'a Option<Vec<f64>>,
        s: &'a [f64],
        t: &'a [f64],
        cells: &'a [crate::complexity::CellSummary],
        diagonal_nonincreasing: bool,
        lower_bound_holds: bool,
    }
    io::write_json(
        &out.join("rates_summary.json"),
        &Summary {
            n_fit: table.n_fit,
            m_fit: table.m_fit,
            reference_n_slope: table.reference_n_slope,
            reference_m_slopes: &table.reference_m_slopes,
            s: &table.s,
            t: &table.t,
            cells: &table.cells,
            diagonal_nonincreasing: table.diagonal_nonincreasing(),
            lower_bound_holds: table.lower_bound_holds(),
        },
    )?;
    if cfg.wants_plot() {
        let pts: Vec<(f64, f64)> = table.diagonal().iter().filter(|c| c.mean > 0.0).map(|c| (c.n as f64, c.mean)).collect();
        if !pts.is_empty() {
            let spec = log_plot("empirical shadow error", "n = m", "mean distance", "mean", pts, Some((table.reference_n_slope, "slope -1/sum d_i")));
            emit_plot(&spec, &out.join("rates.svg"))?;
        }
    }
    if !table.lower_bound_holds() {
        return Err(Error::Assertion("per-trial lower bound violated".into()));
    }
    Ok(())
}

fn run_dim(cfg: &RunConfig, out: &Path) -> Result<()> {
    let m = match &cfg.input {
        Some(path) => io::load_measure(path)?.0,
        None => {
            let c: Vec<f64> = cell_centers(16);
            DiscreteMeasure::uniform(c.iter().flat_map(|&x| c.iter().map(move |&y| vec![x, y])).collect())?
        }
    };
    let eps = cfg.epsilons.clone().unwrap_or_else(|| (0..6).map(|k| 0.5 * 0.7f64.powi(k)).collect());
    let tau = cfg.tau.unwrap_or(0.0);
    let prof = dimension_profile(&m, &eps, tau, cfg.norm.unwrap_or(Exponent::Infinite))?;
    let rows: Vec<Vec<String>> = prof
        .estimates
        .iter()
        .map(|c| vec![fmt_real(c.epsilon), c.n.to_string(), fmt_real(c.d_eps), fmt_real(c.tau), fmt_real(c.dropped)])
        .collect();
    io::write_table(&out.join("dim.csv"), &["epsilon", "N", "d_eps", "tau", "dropped"], &rows)?;
    io::write_json(&out.join("dim_summary.json"), &prof)?;
    if cfg.wants_plot() {
        let pts = prof.estimates.iter().map(|c| (1.0 / c.epsilon, c.n as f64)).collect();
        let spec = log_plot("covering numbers", "1/epsilon", "N", "greedy net", pts, Some((prof.fitted_dimension, "fitted dimension")));
        emit_plot(&spec, &out.join("dim.svg"))?;
    }
    Ok(())
}

fn run_smooth(cfg: &RunConfig, out: &Path) -> Result<()> {
    let path = required("input", &cfg.input)?;
    let (m, dims) = io::load_measure(path)?;
    let sigma = cfg.sigma.unwrap_or(0.05);
    let spec = match &cfg.stencil {
        Some(offsets) => SmoothingSpec::custom(sigma, offsets.clone(), cfg.norm.unwrap_or(Exponent::Finite(2.0)))?,
        None => SmoothingSpec::axis(sigma, m.dim())?,
    };
    io::save_measure(&out.join("smoothed.json"), &stability::smooth(&m, &spec)?, &dims)
}

/// Parses `args`, runs, and maps the outcome to an exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.into_config().and_then(|cfg| run(&cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        let cfg = RunConfig {
            command: Some(Command::Rates),
            p: Some(Exponent::Infinite),
            q: Some(Exponent::Finite(1.5)),
            mu: vec!["a.json".into(), "b.json".into()],
            n_grid: Some(vec![10, 20]),
            family: Some(Family::MassSwap),
            delta: Some(0.1 + 0.2),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig { p: Some(Exponent::Finite(1.5)), seed: Some(3), ..Default::default() };
        let flags = RunConfig { seed: Some(9), ..Default::default() };
        let merged = file.overlay(&flags);
        assert_eq!(merged.p, Some(Exponent::Finite(1.5)));
        assert_eq!(merged.seed, Some(9));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 3}"#).is_err());
    }
}
