//! Command-line front end. The binary only parses arguments and maps errors
//! to exit codes; everything else lives here so it can be tested in-process.

use crate::analysis::{fit_state, subtract_accidentals, FitOptions, FitResult};
use crate::config::ExperimentConfig;
use crate::detection::{
    accidental_coincidences, estimate_gamma, estimate_pair_number, simulate_run, simulate_scan, DetectorLayout,
    Engine, JointDensity, SpatialSource,
};
use crate::diffraction::{aperture_amplitude, diffraction_coefficients, DiffractionCoefficients};
use crate::error::{Error, Result};
use crate::io;
use crate::map::{coincidence_map, CoincidenceMap, Envelope, GridSpec, MapModel};
use crate::optics::{engineering_parameter, slit_plane_amplitude, LensConfiguration};
use crate::state::{Branch, SlitQubitState};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

/// Name of the manifest written next to every set of outputs.
pub const MANIFEST: &str = "manifest.toml";

/// Half range (mm) and cell (mm) of the tabulated pair density used by
/// Monte Carlo runs.
const DENSITY_HALF_RANGE_MM: f64 = 6.0;
const DENSITY_CELL_MM: f64 = 0.02;

/// Preamble key recording the pinhole half width of simulated count maps.
pub const APERTURE_KEY: &str = "aperture_half_width_mm";

#[derive(Debug, Parser)]
#[command(name = "slitpairs", version, about = "Entangled photon pairs behind a double slit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Sbc,
    Dbc,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Branch {
        match b {
            BranchArg::Sbc => Branch::Sbc,
            BranchArg::Dbc => Branch::Dbc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Thinned,
    PulseByPulse,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Configuration file, or `bundled:crystal_image` / `bundled:crystal_far_field`.
    #[arg(long, default_value = "bundled:crystal_image")]
    pub config: String,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// fine | broad | custom:<n>x<step_um>
    #[arg(long, default_value = "fine")]
    pub grid: String,
    #[arg(long, value_enum, default_value = "dbc")]
    pub branch: BranchArg,
    /// Multiply maps by the single-slit diffraction envelope.
    #[arg(long, value_enum, default_value = "on")]
    pub envelope: Toggle,
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    /// Two-qubit state as `alpha_deg,phi_deg`; defaults to the config values.
    #[arg(long, conflicts_with = "derive_from_optics")]
    pub state: Option<String>,
    /// Derive the state from the optical model of the configuration.
    #[arg(long)]
    pub derive_from_optics: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic coincidence map.
    SimulateMap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        state: StateArgs,
    },
    /// Monte Carlo acquisition over a scan grid or at fixed detector positions.
    SimulateRun {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        state: StateArgs,
        /// Integration time per point (s); defaults to the config value.
        #[arg(long)]
        duration: Option<f64>,
        /// Fixed positions of D1..D4 in mm as `x1,x2,x3,x4` instead of a scan.
        #[arg(long)]
        positions: Option<String>,
        #[arg(long, value_enum, default_value = "thinned")]
        engine: EngineArg,
    },
    /// Fit (alpha, phi) to a coincidence map CSV.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Map CSV written by simulate-map or simulate-run.
        #[arg(long)]
        map: PathBuf,
        /// Fringe constant per mm; defaults to the map preamble, then the config.
        #[arg(long)]
        beta_per_mm: Option<f64>,
    },
    /// Single-slit diffraction coefficients of the two-photon amplitude.
    Diffraction {
        #[command(flatten)]
        common: Common,
    },
    /// Pair-number distribution and efficiency / pair-number estimates.
    Characterize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        duration: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SimulateMap { .. } => "simulate-map",
            Command::SimulateRun { .. } => "simulate-run",
            Command::Fit { .. } => "fit",
            Command::Diffraction { .. } => "diffraction",
            Command::Characterize { .. } => "characterize",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::SimulateMap { common, .. }
            | Command::SimulateRun { common, .. }
            | Command::Fit { common, .. }
            | Command::Diffraction { common }
            | Command::Characterize { common, .. } => common,
        }
    }
}

/// Provenance record written as `manifest.toml` in the output directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: String,
    pub out: String,
    pub seed: u64,
    pub grid: String,
    pub branch: String,
    pub envelope: bool,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub outputs: Vec<String>,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Loads a configuration named on the command line.
pub fn load_config(spec: &str) -> Result<ExperimentConfig> {
    match spec.strip_prefix("bundled:") {
        Some("crystal_image") => Ok(ExperimentConfig::bundled(LensConfiguration::CrystalImage)),
        Some("crystal_far_field") => Ok(ExperimentConfig::bundled(LensConfiguration::CrystalFarField)),
        Some(other) => Err(Error::Config(format!("unknown bundled configuration '{other}'"))),
        None => ExperimentConfig::load(spec),
    }
}

fn parse_list(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("{what} must be {n} comma-separated numbers, got '{s}'")))?;
    if v.len() != n {
        return Err(Error::Config(format!("{what} must be {n} comma-separated numbers, got '{s}'")));
    }
    Ok(v)
}

/// State selected by the command line, and where it came from.
fn select_state(cfg: &ExperimentConfig, args: &StateArgs) -> Result<(SlitQubitState, &'static str)> {
    if args.derive_from_optics {
        let optics = cfg.optics();
        let p = engineering_parameter(&slit_plane_amplitude(&optics)?, optics.slit_half_separation)?;
        log::info!("engineering parameter |p| = {:.4}, alpha = {:.3}, phi = {:.3}", p.p.norm(), p.alpha_deg, p.phi_deg);
        return Ok((SlitQubitState::canonical(p.alpha_deg, p.phi_deg), "optics"));
    }
    match &args.state {
        Some(s) => {
            let v = parse_list(s, 2, "--state")?;
            Ok((SlitQubitState::new(v[0], v[1])?, "command_line"))
        }
        None => Ok((cfg.state()?, "config")),
    }
}

fn diffraction(cfg: &ExperimentConfig, branch: Branch) -> Result<DiffractionCoefficients> {
    let optics = cfg.optics();
    diffraction_coefficients(&aperture_amplitude(&optics)?, &optics, branch)
}

fn envelope_for(cfg: &ExperimentConfig, common: &Common, branch: Branch) -> Result<Option<Envelope>> {
    match common.envelope {
        Toggle::On => Ok(Some(diffraction(cfg, branch)?.envelope())),
        Toggle::Off => Ok(None),
    }
}

/// Collects outputs and writes the manifest last.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    preamble: Vec<(String, String)>,
}

impl Outputs {
    fn new(cmd: &Command) -> Result<Self> {
        let c = cmd.common();
        std::fs::create_dir_all(&c.out).map_err(|e| Error::io(&c.out, e))?;
        let preamble = vec![
            ("manifest".to_string(), MANIFEST.to_string()),
            ("subcommand".to_string(), cmd.name().to_string()),
            ("config".to_string(), c.config.clone()),
            ("seed".to_string(), c.seed.to_string()),
            ("grid".to_string(), c.grid.clone()),
            ("envelope".to_string(), (c.envelope == Toggle::On).to_string()),
        ];
        Ok(Outputs { dir: c.out.clone(), files: Vec::new(), preamble })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        io::write_text(p, text)
    }

    fn map(&mut self, stem: &str, map: &CoincidenceMap) -> Result<()> {
        let p = self.path(&format!("{stem}.csv"));
        io::write_map(p, map, &self.preamble)?;
        self.text(&format!("{stem}.pgm"), &io::map_to_pgm(&map.clipped()))
    }

    fn csv(&mut self, name: &str, body: &str) -> Result<()> {
        let mut text = String::new();
        for (k, v) in &self.preamble {
            let _ = writeln!(text, "# {k} = {v}");
        }
        text.push_str(body);
        self.text(name, &text)
    }

    fn finish(self, cmd: &Command, started: f64) -> Result<Vec<PathBuf>> {
        let c = cmd.common();
        let manifest = RunManifest {
            subcommand: cmd.name().to_string(),
            config: c.config.clone(),
            out: c.out.display().to_string(),
            seed: c.seed,
            grid: c.grid.clone(),
            branch: Branch::from(c.branch).name().to_string(),
            envelope: c.envelope == Toggle::On,
            started_unix_s: started,
            finished_unix_s: now(),
            outputs: self.files.clone(),
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::Numerical(format!("manifest: {e}")))?;
        let path = self.dir.join(MANIFEST);
        io::write_text(&path, &text)?;
        let mut all: Vec<PathBuf> = self.files.iter().map(|f| self.dir.join(f)).collect();
        all.push(path);
        Ok(all)
    }
}

/// Runs one subcommand and returns the paths of everything it wrote.
pub fn run(cmd: &Command) -> Result<Vec<PathBuf>> {
    let started = now();
    let common = cmd.common();
    let cfg = load_config(&common.config)?;
    let grid = GridSpec::parse(&common.grid)?;
    let branch = Branch::from(common.branch);
    let mut out = Outputs::new(cmd)?;
    match cmd {
        Command::SimulateMap { state, .. } => {
            let (st, origin) = select_state(&cfg, state)?;
            let model = MapModel::from_optics(st, &cfg.optics(), envelope_for(&cfg, common, branch)?);
            let mut map = coincidence_map(&model, branch, &grid)?;
            map.metadata.extra.push(("state_source".into(), origin.into()));
            out.map(&format!("map_{}", branch.name()), &map)?;
        }
        Command::SimulateRun { state, duration, positions, engine, .. } => {
            let (st, origin) = select_state(&cfg, state)?;
            let mut source = cfg.source()?;
            if let Some(t) = duration {
                source = source.with_duration(*t)?;
            }
            // Pair positions follow the cross-branch distribution (V photon, H photon).
            let model = MapModel::from_optics(st, &cfg.optics(), envelope_for(&cfg, common, Branch::Dbc)?);
            let density = JointDensity::from_map_model(&model, Branch::Dbc, DENSITY_HALF_RANGE_MM, DENSITY_CELL_MM)?;
            let spatial = SpatialSource::Density(density);
            let engine = match engine {
                EngineArg::Thinned => Engine::Thinned,
                EngineArg::PulseByPulse => Engine::PulseByPulse,
            };
            let mut acquisition = io::source_preamble(&source, common.seed, cfg.parametric_gain);
            acquisition.push(("state_source".into(), origin.into()));
            let mut pre = out.preamble.clone();
            pre.extend(acquisition.iter().cloned());
            match positions {
                Some(p) => {
                    let v = parse_list(p, 4, "--positions")?;
                    let layout =
                        DetectorLayout::standard([v[0], v[1], v[2], v[3]], cfg.pinhole_half_width_mm());
                    let run = simulate_run(&source, &spatial, &layout, common.seed, engine)?;
                    out.text("runs.csv", &io::runs_to_csv(&[run], &pre))?;
                }
                None => {
                    let scan =
                        simulate_scan(&source, &spatial, &grid, cfg.pinhole_half_width_mm(), common.seed, engine)?;
                    out.text("runs.csv", &io::runs_to_csv(&scan.runs, &pre))?;
                    let (partner, counts) = match branch {
                        Branch::Dbc => (2, scan.dbc_map()),
                        Branch::Sbc => (1, scan.sbc_map()),
                    };
                    let annotate = |mut m: CoincidenceMap| {
                        m.metadata.alpha_deg = Some(st.alpha_deg());
                        m.metadata.phi_deg = Some(st.phi_deg());
                        m.metadata.beta_per_mm = Some(model.beta_per_mm);
                        if let Some(e) = model.envelope {
                            m.metadata.a_plus = Some(e.a_plus);
                            m.metadata.a_minus = Some(e.a_minus);
                        }
                        m.metadata.extra.extend(acquisition.iter().filter(|(k, _)| k != "seed").cloned());
                        m.metadata.extra.push((APERTURE_KEY.into(), cfg.pinhole_half_width_mm().to_string()));
                        m
                    };
                    let s1 = scan.singles_map(0);
                    let s2 = scan.singles_map(partner);
                    let subtracted = if source.pulses() > 0 {
                        subtract_accidentals(&counts, &s1, &s2, source.repetition_rate, source.duration)?
                    } else {
                        counts.clone()
                    };
                    let name = branch.name();
                    out.map(&format!("counts_{name}"), &annotate(counts))?;
                    out.map(&format!("subtracted_{name}"), &annotate(subtracted))?;
                    out.map("singles_d1", &annotate(s1))?;
                    out.map(&format!("singles_d{}", partner + 1), &annotate(s2))?;
                }
            }
        }
        Command::Fit { map, beta_per_mm, .. } => {
            let m = io::read_map(map)?;
            let beta = beta_per_mm.or(m.metadata.beta_per_mm).unwrap_or(cfg.optics().beta() * 1e-3);
            let envelope = match (common.envelope, m.metadata.a_plus, m.metadata.a_minus) {
                (Toggle::Off, _, _) => None,
                (Toggle::On, Some(a_plus), Some(a_minus)) => Some(Envelope { a_plus, a_minus }),
                (Toggle::On, _, _) => envelope_for(&cfg, common, m.branch)?,
            };
            let aperture = match m.metadata.extra.iter().find(|(k, _)| k == APERTURE_KEY) {
                Some((_, v)) => Some(
                    v.parse::<f64>().map_err(|_| Error::Config(format!("invalid {APERTURE_KEY} '{v}' in map")))?,
                ),
                None => None,
            };
            let options = FitOptions {
                uncertainty: cfg.fit_uncertainty,
                bootstrap_resamples: cfg.bootstrap_resamples,
                seed: common.seed,
                aperture_half_width_mm: aperture,
            };
            let fit = fit_state(&m, beta, envelope, &options)?;
            print!("{}", fit.report());
            out.text("fit_report.txt", &fit.report())?;
            out.csv("fit.csv", &format!("{}\n{}\n", FitResult::csv_header(), fit.csv_row()))?;
        }
        Command::Diffraction { .. } => {
            let d = diffraction(&cfg, branch)?;
            let report = diffraction_report(&d);
            print!("{report}");
            out.text("diffraction_report.txt", &report)?;
            let mut body = String::from("line,t_mm,profile\n");
            for (line, fit) in [("plus", &d.plus), ("minus", &d.minus)] {
                for (t, v) in &fit.profile {
                    let _ = writeln!(body, "{line},{},{v}", t * 1e3);
                }
            }
            out.csv("diffraction_profiles.csv", &body)?;
        }
        Command::Characterize { duration, .. } => {
            let (report, pn) = characterize(&cfg, common, *duration)?;
            print!("{report}");
            out.text("characterize_report.txt", &report)?;
            out.csv("pair_distribution.csv", &pn)?;
        }
    }
    out.finish(cmd, started)
}

fn diffraction_report(d: &DiffractionCoefficients) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "branch = {}", d.branch.name());
    let _ = writeln!(s, "reference_per_mm = {}", d.reference * 1e-3);
    let _ = writeln!(s, "a_plus_per_mm = {}", d.plus.coefficient * 1e-3);
    let _ = writeln!(s, "a_minus_per_mm = {}", d.minus.coefficient * 1e-3);
    let _ = writeln!(s, "a_plus_ratio = {}", d.ratio_plus());
    let _ = writeln!(s, "a_minus_ratio = {}", d.ratio_minus());
    let _ = writeln!(s, "a_plus_rms_residual = {}", d.plus.rms_residual);
    let _ = writeln!(s, "a_minus_rms_residual = {}", d.minus.rms_residual);
    let _ = writeln!(s, "warnings = {}", d.warnings.len());
    s
}

/// Pair-number table and a run at the DBC map maximum, where detector
/// efficiency and mean pair number are estimated from singles and
/// coincidences.
fn characterize(cfg: &ExperimentConfig, common: &Common, duration: Option<f64>) -> Result<(String, String)> {
    let mut source = cfg.source()?;
    if let Some(t) = duration {
        source = source.with_duration(t)?;
    }
    let pairs = &source.pairs;
    let mut pn = String::from("n,probability\n");
    for n in 0..=pairs.support_max().min(20) {
        let _ = writeln!(pn, "{n},{}", pairs.pmf(n));
    }

    let optics = cfg.optics();
    let model = MapModel::from_optics(cfg.state()?, &optics, envelope_for(cfg, common, Branch::Dbc)?);
    let grid = GridSpec::parse(&common.grid)?;
    let analytic = coincidence_map(&model, Branch::Dbc, &grid)?;
    let (i, j) = analytic.argmax();
    let (x1, x2) = (analytic.x1_mm[i], analytic.x2_mm[j]);
    let density = JointDensity::from_map_model(&model, Branch::Dbc, DENSITY_HALF_RANGE_MM, DENSITY_CELL_MM)?;
    let layout = DetectorLayout::standard(crate::detection::scan_positions(x1, x2), cfg.pinhole_half_width_mm());
    let run = simulate_run(&source, &SpatialSource::Density(density), &layout, common.seed, Engine::Thinned)?;

    let mut s = String::new();
    let _ = writeln!(s, "distribution = {}", pairs.family.name());
    if let Some(g) = cfg.parametric_gain {
        let _ = writeln!(s, "gain = {g}");
    }
    let _ = writeln!(s, "thermal_modes = {}", pairs.modes);
    let _ = writeln!(s, "mean_pairs = {}", pairs.mean);
    for n in 0..=3 {
        let _ = writeln!(s, "p_{n} = {}", pairs.pmf(n));
    }
    let _ = writeln!(s, "configured_gamma = {}", source.overall_efficiency());
    let _ = writeln!(s, "x1_mm = {x1}");
    let _ = writeln!(s, "x2_mm = {x2}");
    let _ = writeln!(s, "pulses = {}", run.pulses);
    for (d, n) in run.singles.iter().enumerate() {
        let _ = writeln!(s, "singles_d{} = {n}", d + 1);
    }
    let _ = writeln!(s, "coincidences_d1_d3 = {}", run.coincidence(0, 2));
    match estimate_gamma(&run, 0, 2) {
        Ok(g) => {
            let _ = writeln!(s, "gamma_hat = {}", g.value);
            let _ = writeln!(s, "gamma_hat_sigma = {}", g.sigma);
            if let Ok(p) = estimate_pair_number(&run, 0, g.value) {
                let _ = writeln!(s, "p_hat = {}", p.value);
                let _ = writeln!(s, "p_hat_sigma = {}", p.sigma);
            }
        }
        Err(e) => {
            let _ = writeln!(s, "gamma_hat = undefined ({e})");
        }
    }
    let acc = accidental_coincidences(
        run.singles[0] as f64,
        run.singles[2] as f64,
        source.repetition_rate,
        source.duration,
    );
    if let Ok(a) = acc {
        let _ = writeln!(s, "accidentals_expected_d1_d3 = {a}");
    }
    let _ = writeln!(s, "cross_pair_d1_d3 = {}", run.cross_pair(0, 2));
    Ok((s, pn))
}

/// Summary line printed by the binary after a successful run.
pub fn summary(paths: &[PathBuf]) -> String {
    let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    format!("wrote {}", names.join(", "))
}
