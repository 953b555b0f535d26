//! `qdphonon`: model sweeps, spectra, fits and histogram analysis from the
//! command line. Curves go out as CSV, scalar reports as JSON; both carry the
//! tool version, the resolved parameters and the seed.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qdphonon::experiment::{analyze_hom, expected_visibility_ratio, fit_fringe_contrast, SetupImperfections};
use qdphonon::synthetic::{self, HomExperiment};
use qdphonon::tempfit::{
    fit_visibility_with, CurveMode, ParamBounds, TempFitOptions, VisibilityDataset, VisibilityModel,
};
use qdphonon::{io, phonon, CavityFilter, EmissionModel, EmitterParams, PhononParams, SpectrumMode, Temperature};
use serde_json::json;

use output::{check_input, check_output, emit, report, Provenance, Table};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(qdphonon::Error),
}

impl From<qdphonon::Error> for CliError {
    fn from(e: qdphonon::Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Compute(e.into())
    }
}

#[derive(Parser)]
#[command(name = "qdphonon", version, about = "Phonon-limited indistinguishability of quantum-dot single photons")]
struct Cli {
    /// Seed for synthetic generators; recorded in every output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pure-dephasing rate versus temperature (CSV).
    Gamma(GammaArgs),
    /// Emission spectrum at one temperature (CSV).
    Spectrum(SpectrumArgs),
    /// Full and sideband-only indistinguishability versus temperature (CSV).
    Visibility(VisibilityArgs),
    /// Fit (alpha, nu_c, mu) to visibility data (JSON report, optional CSV curve).
    FitVisibility(FitArgs),
    /// Pseudo-Voigt fit of a fringe-contrast scan (JSON).
    Fts(FtsArgs),
    /// HBT + HOM histogram analysis (JSON).
    Hom(HomArgs),
    /// Seeded synthetic input files.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Args, Clone)]
struct PhononArgs {
    /// Coupling strength alpha, ps^2.
    #[arg(long = "alpha-ps2", visible_alias = "alpha")]
    alpha_ps2: f64,
    /// Phonon cut-off frequency nu_c, ps^-1.
    #[arg(long = "nu-c-ps-inv", visible_alias = "nu-c")]
    nu_c_ps_inv: f64,
    /// Virtual-process strength mu, ps^2.
    #[arg(long = "mu-ps2", visible_alias = "mu")]
    mu_ps2: f64,
}

impl PhononArgs {
    fn params(&self) -> qdphonon::Result<PhononParams> {
        PhononParams::new(self.alpha_ps2, self.nu_c_ps_inv, self.mu_ps2)
    }
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// Lowest temperature, K.
    #[arg(long = "t-min-k", visible_alias = "t-min")]
    t_min_k: f64,
    /// Highest temperature, K.
    #[arg(long = "t-max-k", visible_alias = "t-max")]
    t_max_k: f64,
    /// Number of temperatures, endpoints included.
    #[arg(long, default_value_t = 29)]
    steps: usize,
}

impl SweepArgs {
    fn grid(&self) -> Result<Vec<f64>, CliError> {
        temperature_grid(self.t_min_k, self.t_max_k, self.steps)
    }
}

fn temperature_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(CliError::Usage(format!("need 0 < t-min-k <= t-max-k, got {lo} and {hi}")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let dt = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps).map(|k| if k + 1 == steps { hi } else { lo + dt * k as f64 }).collect())
}

#[derive(Args, Clone)]
struct EmitterArgs {
    /// Radiative lifetime T1, ps.
    #[arg(long = "t1-ps", required_unless_present = "gamma_ps_inv", conflicts_with = "gamma_ps_inv")]
    t1_ps: Option<f64>,
    /// Radiative rate Gamma = 1/T1, ps^-1.
    #[arg(long = "gamma-ps-inv")]
    gamma_ps_inv: Option<f64>,
}

impl EmitterArgs {
    fn emitter(&self) -> qdphonon::Result<EmitterParams> {
        match (self.t1_ps, self.gamma_ps_inv) {
            (Some(t1), _) => EmitterParams::from_t1_ps(t1),
            (None, Some(g)) => EmitterParams::new(g),
            (None, None) => unreachable!("clap enforces one of the two"),
        }
    }
}

#[derive(Args, Clone)]
struct FilterArgs {
    /// Cavity linewidth (FWHM), meV.
    #[arg(long = "kappa-mev", conflicts_with = "kappa_ps_inv")]
    kappa_mev: Option<f64>,
    /// Cavity linewidth (FWHM), ps^-1.
    #[arg(long = "kappa-ps-inv")]
    kappa_ps_inv: Option<f64>,
    /// Cavity-dot detuning, meV.
    #[arg(long = "delta-mev", conflicts_with = "delta_ps_inv", allow_negative_numbers = true)]
    delta_mev: Option<f64>,
    /// Cavity-dot detuning, ps^-1.
    #[arg(long = "delta-ps-inv", allow_negative_numbers = true)]
    delta_ps_inv: Option<f64>,
}

impl FilterArgs {
    /// Flat filter when no linewidth is given.
    fn filter(&self) -> qdphonon::Result<CavityFilter> {
        let delta = self
            .delta_ps_inv
            .or(self.delta_mev.map(|d| d * phonon::MEV_TO_PS_INV))
            .unwrap_or(0.0);
        match self.kappa_ps_inv.or(self.kappa_mev.map(|k| k * phonon::MEV_TO_PS_INV)) {
            Some(k) => CavityFilter::new(k, delta),
            None => Ok(CavityFilter::flat()),
        }
    }

    fn require_kappa(&self) -> Result<(), CliError> {
        if self.kappa_mev.is_none() && self.kappa_ps_inv.is_none() {
            Err(CliError::Usage("one of --kappa-mev or --kappa-ps-inv is required".into()))
        } else {
            Ok(())
        }
    }
}

#[derive(Args)]
struct GammaArgs {
    #[command(flatten)]
    phonon: PhononArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    /// CSV output; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumPart {
    /// ZPL + sideband.
    Full,
    /// Sideband diagonal only.
    SidebandOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum SidebandModel {
    Exact,
    WeakCoupling,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    phonon: PhononArgs,
    #[command(flatten)]
    emitter: EmitterArgs,
    #[command(flatten)]
    filter: FilterArgs,
    /// Bath temperature, K.
    #[arg(long = "temperature-k", visible_alias = "temperature")]
    temperature_k: f64,
    /// Detuning from the ZPL, ps^-1.
    #[arg(long = "omega-min-ps-inv", default_value_t = -20.0, allow_negative_numbers = true)]
    omega_min_ps_inv: f64,
    /// Detuning from the ZPL, ps^-1.
    #[arg(long = "omega-max-ps-inv", default_value_t = 20.0, allow_negative_numbers = true)]
    omega_max_ps_inv: f64,
    /// Number of frequencies, endpoints included.
    #[arg(long, default_value_t = 4001)]
    points: usize,
    #[arg(long, value_enum, default_value = "full")]
    mode: SpectrumPart,
    #[arg(long = "sideband-model", value_enum, default_value = "exact")]
    sideband_model: SidebandModel,
    /// CSV output; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VisibilityArgs {
    #[command(flatten)]
    phonon: PhononArgs,
    #[command(flatten)]
    emitter: EmitterArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    /// CSV output; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with columns temperature_K,visibility,sigma.
    #[arg(long)]
    data: PathBuf,
    /// Emitter/filter record (JSON or key = value).
    #[arg(long)]
    config: PathBuf,
    /// Initial alpha, ps^2.
    #[arg(long = "alpha-ps2", visible_alias = "alpha", default_value_t = 0.01)]
    alpha_ps2: f64,
    /// Initial nu_c, ps^-1.
    #[arg(long = "nu-c-ps-inv", visible_alias = "nu-c", default_value_t = 10.0)]
    nu_c_ps_inv: f64,
    /// Initial mu, ps^2.
    #[arg(long = "mu-ps2", visible_alias = "mu", default_value_t = 3e-4)]
    mu_ps2: f64,
    /// Single start from the initial guess.
    #[arg(long)]
    no_multistart: bool,
    /// Model curve points over the data's temperature range.
    #[arg(long, default_value_t = 100)]
    curve_steps: usize,
    /// JSON report; stdout when absent.
    /// CSV output; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// CSV model curve.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct FtsArgs {
    /// CSV with columns delay_ps,contrast,sigma.
    #[arg(long)]
    input: PathBuf,
    /// Radiative lifetime T1, ps; adds the expected T2/2T1 visibility.
    #[arg(long = "t1-ps")]
    t1_ps: Option<f64>,
    /// CSV output; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct HomArgs {
    /// HBT histogram CSV (delay_ns,counts).
    #[arg(long)]
    hbt: PathBuf,
    /// HBT acquisition metadata JSON.
    #[arg(long)]
    hbt_meta: PathBuf,
    /// HOM histogram CSV (delay_ns,counts).
    #[arg(long)]
    hom: PathBuf,
    /// HOM acquisition metadata JSON.
    #[arg(long)]
    hom_meta: PathBuf,
    /// Beamsplitter reflectance R.
    #[arg(long, default_value_t = 0.5)]
    reflectance: f64,
    /// Beamsplitter transmittance T.
    #[arg(long, default_value_t = 0.5)]
    transmittance: f64,
    /// Interferometer contrast squared C^2.
    #[arg(long = "contrast-sq", default_value_t = 1.0)]
    contrast_sq: f64,
    /// Fix the peak decay constant instead of fitting it, ns.
    #[arg(long = "decay-ns")]
    decay_ns: Option<f64>,
    /// CSV output; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Visibility-vs-temperature dataset from the model plus relative Gaussian noise.
    Visibility(SynthVisibilityArgs),
    /// Fringe-contrast scan.
    Fringe(SynthFringeArgs),
    /// HBT and HOM histograms with planted g2_HBT and visibility.
    Hom(SynthHomArgs),
}

#[derive(Args)]
struct SynthVisibilityArgs {
    #[command(flatten)]
    phonon: PhononArgs,
    #[command(flatten)]
    emitter: EmitterArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Relative noise sigma/V.
    #[arg(long, default_value_t = 0.03)]
    noise: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SynthFringeArgs {
    /// Coherence time T2, ps.
    #[arg(long = "t2-ps")]
    t2_ps: f64,
    /// Gaussian share of the pseudo-Voigt decay.
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Largest path delay, ps.
    #[arg(long = "delay-max-ps")]
    delay_max_ps: f64,
    #[arg(long, default_value_t = 61)]
    points: usize,
    /// Absolute contrast noise.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SynthHomArgs {
    #[arg(long = "g2-hbt", default_value_t = 0.12)]
    g2_hbt: f64,
    /// Planted TPI visibility.
    #[arg(long, default_value_t = 0.79)]
    visibility: f64,
    #[arg(long, default_value_t = 0.43)]
    reflectance: f64,
    #[arg(long, default_value_t = 0.57)]
    transmittance: f64,
    /// Interferometer contrast squared C^2.
    #[arg(long = "contrast-sq", default_value_t = 0.98)]
    contrast_sq: f64,
    /// Laser-leakage share of the HOM central-bunch counts.
    #[arg(long, default_value_t = 0.1)]
    background: f64,
    /// Directory receiving hbt.csv, hbt.json, hom.csv, hom.json and truth.json.
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("{}", json!({ "error": msg, "kind": "usage" }));
            ExitCode::from(2)
        }
        Err(CliError::Compute(e)) => {
            eprintln!("{}", json!({ "error": e.to_string(), "kind": error_kind(&e) }));
            ExitCode::from(1)
        }
    }
}

fn error_kind(e: &qdphonon::Error) -> &'static str {
    use qdphonon::Error::*;
    match e {
        Numerics(_) => "numerics",
        Domain { .. } => "domain",
        InvalidInput(_) => "invalid_input",
        GridResolution { .. } => "grid_resolution",
        Io { .. } => "io",
        Csv(_) => "csv",
        Json(_) => "json",
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed;
    match cli.command {
        Command::Gamma(a) => gamma(a, seed),
        Command::Spectrum(a) => spectrum(a, seed),
        Command::Visibility(a) => visibility(a, seed),
        Command::FitVisibility(a) => fit(a, seed),
        Command::Fts(a) => fts(a, seed),
        Command::Hom(a) => hom(a, seed),
        Command::Synth(SynthCommand::Visibility(a)) => synth_visibility(a, seed),
        Command::Synth(SynthCommand::Fringe(a)) => synth_fringe(a, seed),
        Command::Synth(SynthCommand::Hom(a)) => synth_hom(a, seed),
    }
}

fn kelvin(t: f64) -> qdphonon::Result<Temperature> {
    Temperature::from_kelvin(t)
}

fn filter_json(f: &CavityFilter) -> serde_json::Value {
    if f.is_flat() {
        json!({ "kappa_ps_inv": null, "delta_ps_inv": f.delta })
    } else {
        json!({ "kappa_ps_inv": f.kappa, "delta_ps_inv": f.delta })
    }
}

fn gamma(a: GammaArgs, seed: u64) -> Result<(), CliError> {
    check_output(a.output.as_ref())?;
    let temps = a.sweep.grid()?;
    let p = a.phonon.params()?;
    let mut table = Table::new(vec!["temperature_K", "gamma_pd_ps_inv"]);
    for &t in &temps {
        table.rows.push(vec![t, phonon::dephasing_rate(&p, kelvin(t)?)?]);
    }
    let prov = Provenance::new(
        "gamma",
        seed,
        json!({
            "alpha_ps2": p.alpha, "nu_c_ps_inv": p.nu_c, "mu_ps2": p.mu,
            "t_min_K": a.sweep.t_min_k, "t_max_K": a.sweep.t_max_k, "steps": a.sweep.steps,
        }),
    );
    emit(a.output.as_deref(), &table.render(&prov)?)
}

fn spectrum(a: SpectrumArgs, seed: u64) -> Result<(), CliError> {
    check_output(a.output.as_ref())?;
    if a.points < 2 || !(a.omega_max_ps_inv > a.omega_min_ps_inv) {
        return Err(CliError::Usage("need --points >= 2 and omega-max > omega-min".into()));
    }
    let p = a.phonon.params()?;
    let e = a.emitter.emitter()?;
    let f = a.filter.filter()?;
    let mode = match a.sideband_model {
        SidebandModel::Exact => SpectrumMode::Exact,
        SidebandModel::WeakCoupling => SpectrumMode::WeakCoupling,
    };
    let model = EmissionModel::new(e, f, p, kelvin(a.temperature_k)?, mode)?;
    let step = (a.omega_max_ps_inv - a.omega_min_ps_inv) / (a.points - 1) as f64;
    let mut table = Table::new(vec!["omega_ps_inv", "S"]);
    for k in 0..a.points {
        let w = a.omega_min_ps_inv + step * k as f64;
        let s = match a.mode {
            SpectrumPart::Full => model.emission_spectrum(w),
            SpectrumPart::SidebandOnly => model.sideband_two_colour(w, w).re,
        };
        table.rows.push(vec![w, s]);
    }
    let prov = Provenance::new(
        "spectrum",
        seed,
        json!({
            "alpha_ps2": p.alpha, "nu_c_ps_inv": p.nu_c, "mu_ps2": p.mu,
            "gamma_ps_inv": e.gamma, "filter": filter_json(&f), "temperature_K": a.temperature_k,
            "omega_min_ps_inv": a.omega_min_ps_inv, "omega_max_ps_inv": a.omega_max_ps_inv, "points": a.points,
            "mode": match a.mode { SpectrumPart::Full => "full", SpectrumPart::SidebandOnly => "sideband-only" },
            "sideband_model": match mode { SpectrumMode::Exact => "exact", SpectrumMode::WeakCoupling => "weak-coupling" },
            "zpl_weight_B2": model.zpl_weight(), "gamma_pd_ps_inv": model.dephasing_rate(),
        }),
    );
    emit(a.output.as_deref(), &table.render(&prov)?)
}

fn visibility(a: VisibilityArgs, seed: u64) -> Result<(), CliError> {
    check_output(a.output.as_ref())?;
    a.filter.require_kappa()?;
    let temps = a.sweep.grid()?;
    let p = a.phonon.params()?;
    let e = a.emitter.emitter()?;
    let f = a.filter.filter()?;
    let model = VisibilityModel::new(e, f)?;
    let full = model.evaluate_many(&p, &temps, CurveMode::Full)?;
    let side = model.evaluate_many(&p, &temps, CurveMode::SidebandOnly)?;
    let mut table = Table::new(vec!["temperature_K", "I_full", "I_sideband_only"]);
    for ((t, x), y) in temps.iter().zip(full).zip(side) {
        table.rows.push(vec![*t, x, y]);
    }
    let prov = Provenance::new(
        "visibility",
        seed,
        json!({
            "alpha_ps2": p.alpha, "nu_c_ps_inv": p.nu_c, "mu_ps2": p.mu,
            "gamma_ps_inv": e.gamma, "filter": filter_json(&f),
            "t_min_K": a.sweep.t_min_k, "t_max_K": a.sweep.t_max_k, "steps": a.sweep.steps,
        }),
    );
    emit(a.output.as_deref(), &table.render(&prov)?)
}

fn fit(a: FitArgs, seed: u64) -> Result<(), CliError> {
    check_input(&a.data)?;
    check_input(&a.config)?;
    check_output(a.output.as_ref())?;
    check_output(a.curve.as_ref())?;
    let config = io::SetupConfig::read(&a.config)?;
    let (e, f) = (config.emitter()?, config.filter()?);
    let data = VisibilityDataset::new(io::read_visibility(&a.data)?, e, f)?;
    let init = PhononParams::new(a.alpha_ps2, a.nu_c_ps_inv, a.mu_ps2)?;
    let bounds = ParamBounds::default();
    let options = TempFitOptions {
        multistart: !a.no_multistart,
    };
    let result = fit_visibility_with(&data, &init, &bounds, &options)?;

    let prov = Provenance::new(
        "fit-visibility",
        seed,
        json!({
            "data": a.data.display().to_string(), "config": config,
            "gamma_ps_inv": e.gamma, "filter": filter_json(&f),
            "initial": init, "bounds": bounds, "multistart": options.multistart,
        }),
    );
    if let Some(path) = &a.curve {
        let (lo, hi) = data
            .points()
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.temperature_k), hi.max(p.temperature_k)));
        let temps = temperature_grid(lo, hi, a.curve_steps)?;
        let model = VisibilityModel::new(e, f)?;
        let full = model.evaluate_many(&result.params, &temps, CurveMode::Full)?;
        let side = model.evaluate_many(&result.params, &temps, CurveMode::SidebandOnly)?;
        let mut table = Table::new(vec!["temperature_K", "I_full", "I_sideband_only"]);
        for ((t, x), y) in temps.iter().zip(full).zip(side) {
            table.rows.push(vec![*t, x, y]);
        }
        emit(Some(path), &table.render(&prov)?)?;
    }
    emit(a.output.as_deref(), &report(&prov, &result)?)
}

fn fts(a: FtsArgs, seed: u64) -> Result<(), CliError> {
    check_input(&a.input)?;
    check_output(a.output.as_ref())?;
    let data = io::read_fringe(&a.input)?;
    let result = fit_fringe_contrast(&data)?;
    let ratio = a.t1_ps.map(|t1| expected_visibility_ratio(t1, result.t2_ps)).transpose()?;
    let prov = Provenance::new(
        "fts",
        seed,
        json!({ "input": a.input.display().to_string(), "t1_ps": a.t1_ps, "samples": data.samples().len() }),
    );
    let body = json!({ "fit": result, "expected_visibility_t2_over_2t1": ratio });
    emit(a.output.as_deref(), &report(&prov, &body)?)
}

fn hom(a: HomArgs, seed: u64) -> Result<(), CliError> {
    for p in [&a.hbt, &a.hbt_meta, &a.hom, &a.hom_meta] {
        check_input(p)?;
    }
    check_output(a.output.as_ref())?;
    let setup = SetupImperfections::new(a.reflectance, a.transmittance, a.contrast_sq)?;
    let hbt = io::read_histogram(&a.hbt, &a.hbt_meta)?;
    let hom = io::read_histogram(&a.hom, &a.hom_meta)?;
    let analysis = analyze_hom(&hbt, &hom, &setup, a.decay_ns)?;
    let prov = Provenance::new(
        "hom",
        seed,
        json!({
            "hbt": a.hbt.display().to_string(), "hbt_meta": hbt.meta(),
            "hom": a.hom.display().to_string(), "hom_meta": hom.meta(),
            "setup": setup, "decay_ns": a.decay_ns,
        }),
    );
    emit(a.output.as_deref(), &report(&prov, &analysis)?)
}

fn synth_visibility(a: SynthVisibilityArgs, seed: u64) -> Result<(), CliError> {
    check_output(Some(&a.output))?;
    a.filter.require_kappa()?;
    let temps = a.sweep.grid()?;
    let p = a.phonon.params()?;
    let e = a.emitter.emitter()?;
    let f = a.filter.filter()?;
    let points = synthetic::visibility_points(&p, &e, &f, &temps, a.noise, seed)?;
    let mut table = Table::new(vec!["temperature_K", "visibility", "sigma"]);
    for q in &points {
        table.rows.push(vec![q.temperature_k, q.visibility, q.sigma]);
    }
    let prov = Provenance::new(
        "synth visibility",
        seed,
        json!({
            "alpha_ps2": p.alpha, "nu_c_ps_inv": p.nu_c, "mu_ps2": p.mu,
            "gamma_ps_inv": e.gamma, "filter": filter_json(&f), "relative_noise": a.noise,
            "t_min_K": a.sweep.t_min_k, "t_max_K": a.sweep.t_max_k, "steps": a.sweep.steps,
        }),
    );
    emit(Some(&a.output), &table.render(&prov)?)
}

fn synth_fringe(a: SynthFringeArgs, seed: u64) -> Result<(), CliError> {
    check_output(Some(&a.output))?;
    if a.points < 2 || !(a.delay_max_ps > 0.0) {
        return Err(CliError::Usage("need --points >= 2 and --delay-max-ps > 0".into()));
    }
    let step = a.delay_max_ps / (a.points - 1) as f64;
    let delays: Vec<f64> = (0..a.points).map(|k| step * k as f64).collect();
    let scan = synthetic::fringe_scan(a.t2_ps, a.eta, &delays, a.noise, seed)?;
    let mut table = Table::new(vec!["delay_ps", "contrast", "sigma"]);
    for s in scan.samples() {
        table.rows.push(vec![s.delay_ps, s.contrast, s.sigma]);
    }
    let prov = Provenance::new(
        "synth fringe",
        seed,
        json!({ "t2_ps": a.t2_ps, "eta": a.eta, "delay_max_ps": a.delay_max_ps, "points": a.points, "noise": a.noise }),
    );
    emit(Some(&a.output), &table.render(&prov)?)
}

fn synth_hom(a: SynthHomArgs, seed: u64) -> Result<(), CliError> {
    if !a.out_dir.is_dir() {
        return Err(CliError::Usage(format!("output directory {} does not exist", a.out_dir.display())));
    }
    let experiment = HomExperiment {
        g2_hbt: a.g2_hbt,
        visibility: a.visibility,
        setup: SetupImperfections::new(a.reflectance, a.transmittance, a.contrast_sq)?,
        background_fraction: a.background,
        ..HomExperiment::default()
    };
    let sample = experiment.generate(seed)?;
    let dir: &Path = &a.out_dir;
    io::write_histogram(&sample.hbt, &dir.join("hbt.csv"), &dir.join("hbt.json"))?;
    io::write_histogram(&sample.hom, &dir.join("hom.csv"), &dir.join("hom.json"))?;
    let prov = Provenance::new("synth hom", seed, json!({ "experiment": experiment }));
    let truth = json!({ "g2_hom": sample.g2_hom, "t_hom_s": sample.t_hom_s });
    emit(Some(&dir.join("truth.json")), &report(&prov, &truth)?)
}
