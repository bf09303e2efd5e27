use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use stokes_core::certificate::{
    certify, scan_rho2, CertificateParams, Verdict, B1_TILDE_MAX, B2_TILDE_MAX, ETA_STAR, GAMMA_STAR,
    KAPPA_STAR, RHO1_STAR, RHO2_STAR,
};
use stokes_core::error::{CertificateError, StokesError};
use stokes_core::integrator::{write_trajectory_csv, DomainGuard, IntegratorConfig, Mode, OdeSystem, SectionCrossing};
use stokes_core::quadrature::{constant_a, DEFAULT_PANELS};
use stokes_core::report::{consolidate, point_triple, triple, RunManifest};
use stokes_core::stokes::{
    fast_crossing, initial_set, rigorous_crossing, rigorous_leg, seed_state, stokes_estimates, CrossingSummary,
    InitialSet, DEFAULT_RE_U0, DEFAULT_RHO0, DEFAULT_START_RHO,
};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "STOKES_THREADS";

/// Span in Re U of the validated leg reported when the full run is skipped.
const LEG_LENGTH: f64 = 100.0;

#[derive(Parser)]
#[command(name = "stokes", version, about = "Validated computation of the inner-equation splitting")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Fast,
    Rigorous,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SeedArg {
    /// Centre of the certified box
    Midpoint,
    /// Leading-order tail approximation
    Tail,
}

#[derive(Args, Clone)]
struct IntegrationArgs {
    #[arg(long, value_enum, default_value = "fast")]
    mode: ModeArg,
    #[arg(long, default_value_t = 20)]
    order: usize,
    #[arg(long, default_value_t = 1e-16)]
    tol: f64,
    #[arg(long, default_value_t = 1.0)]
    h_max: f64,
    #[arg(long, default_value_t = 100_000)]
    max_steps: usize,
}

impl IntegrationArgs {
    fn config(&self) -> IntegratorConfig {
        IntegratorConfig {
            order: self.order,
            tol: self.tol,
            h_max: self.h_max,
            h_init: self.h_max.min(0.5),
            max_steps: self.max_steps,
            mode: match self.mode {
                ModeArg::Fast => Mode::Fast,
                ModeArg::Rigorous => Mode::Rigorous,
            },
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Interval check of the fixed-point constants
    Certify {
        #[arg(long, default_value_t = KAPPA_STAR, allow_hyphen_values = true)]
        kappa: f64,
        #[arg(long, default_value_t = GAMMA_STAR)]
        gamma: f64,
        #[arg(long, default_value_t = RHO1_STAR)]
        rho1: f64,
        #[arg(long, default_value_t = RHO2_STAR)]
        rho2: f64,
        /// Tail cutoff; the estimates use it in place of kappa
        #[arg(long)]
        eta: Option<f64>,
        /// Search rho2 on a grid (rho1 = 20 rho2) for the smallest certified ball
        #[arg(long)]
        scan_rho2: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certified box of initial conditions at U0 = re_u0 - i rho0
    InitialSet {
        #[arg(long, default_value_t = ETA_STAR)]
        eta: f64,
        #[arg(long, default_value_t = DEFAULT_RHO0)]
        rho0: f64,
        #[arg(long, default_value_t = DEFAULT_RE_U0, allow_hyphen_values = true)]
        re_u0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate to {Re U = 0} and report Re Y there
    Crossing {
        #[command(flatten)]
        integ: IntegrationArgs,
        /// Serialized initial set; built fresh when absent
        #[arg(long)]
        initial: Option<PathBuf>,
        #[arg(long, default_value_t = ETA_STAR)]
        eta: f64,
        /// Depth of the starting point, -Im U0
        #[arg(long, default_value_t = DEFAULT_START_RHO)]
        start_rho: f64,
        /// Guard level: the run must keep Im U < -rho0
        #[arg(long, default_value_t = DEFAULT_RHO0)]
        rho0: f64,
        #[arg(long, default_value_t = DEFAULT_RE_U0, allow_hyphen_values = true)]
        re_u0: f64,
        #[arg(long, value_enum, default_value = "midpoint")]
        seed: SeedArg,
        #[arg(long)]
        no_guard: bool,
        /// Rigorous mode only: stop once Re U reaches this value
        #[arg(long, allow_hyphen_values = true)]
        leg_until: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimates of the Stokes constant from fast crossings
    Stokes {
        #[command(flatten)]
        integ: IntegrationArgs,
        /// Starting depths, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = vec![7.2, 9.0, 11.0])]
        rho: Vec<f64>,
        #[arg(long, default_value_t = -8000.0, allow_hyphen_values = true)]
        re_u0: f64,
        #[arg(long, default_value_t = ETA_STAR)]
        eta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enclosure of the strip-width integral
    ConstantA {
        #[arg(long, default_value_t = DEFAULT_PANELS)]
        panels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge run manifests into one document
    Report {
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certificates plus crossing: exit 0 iff Re Y at the section is negative
    Verify {
        /// `fast` skips the validated run and reports the evidence with a caveat
        #[arg(long, value_enum, default_value = "rigorous")]
        mode: ModeArg,
        #[arg(long, default_value_t = 20)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_START_RHO)]
        start_rho: f64,
        #[arg(long, default_value_t = DEFAULT_RHO0)]
        rho0: f64,
        #[arg(long, default_value_t = DEFAULT_RE_U0, allow_hyphen_values = true)]
        re_u0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(m: &RunManifest, out: &Option<PathBuf>) -> Result<(), StokesError> {
    let text = m.to_json_string();
    match out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn setup_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn crossing_json(c: &SectionCrossing) -> Value {
    let s = CrossingSummary::new("", c);
    json!({
        "t_cross": triple(&s.t_cross, "crossing time"),
        "im_u": triple(&s.im_u, "Im U at Re U = 0"),
        "re_y": triple(&s.re_y, "Re Y of the unstable graph at the section"),
        "splitting_lower_bound": point_triple(s.splitting_lower_bound, "|2 Re Y|, lower bound on |Z^u - Z^s|"),
        "theta_rho": point_triple(s.theta_rho, "|Delta Y| e^rho at the crossing depth"),
        "before_re_u_hi": c.before[0].re.hi(),
        "after_re_u_lo": c.after[0].re.lo(),
    })
}

fn cmd_certify(
    params: CertificateParams,
    scan: bool,
    out: &Option<PathBuf>,
) -> Result<ExitCode, StokesError> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("certify", json!({ "params": params, "scan_rho2": scan }), json!({}));
    let outcome = if scan {
        let eta = params.eta.unwrap_or(ETA_STAR);
        match scan_rho2(params.kappa, params.gamma, eta, B1_TILDE_MAX, B2_TILDE_MAX) {
            Ok(Some(rep)) => Ok(rep),
            Ok(None) => Err(CertificateError::GateFailed("no certified rho2 on the scan grid".into())),
            Err(e) => Err(e),
        }
    } else {
        certify(&params)
    };
    let code = match outcome {
        Ok(rep) => {
            let ok = rep.verdict.is_certified();
            manifest.verdict = Some(match &rep.verdict {
                Verdict::Certified => "Certified".into(),
                Verdict::Failed(r) => format!("Failed: {r}"),
            });
            manifest.result = rep.to_json();
            if ok {
                0
            } else {
                1
            }
        }
        Err(CertificateError::OutOfRange(m)) => {
            eprintln!("out of range: {m}");
            manifest.verdict = Some(format!("OutOfRange: {m}"));
            2
        }
        Err(e) => {
            eprintln!("{e}");
            manifest.verdict = Some(format!("Failed: {e}"));
            1
        }
    };
    emit(&manifest.with_seconds(start.elapsed().as_secs_f64()), out)?;
    Ok(ExitCode::from(code))
}

fn load_or_build_initial(path: &Option<PathBuf>, eta: f64, rho0: f64, re_u0: f64) -> Result<InitialSet, StokesError> {
    match path {
        Some(p) => {
            let m = RunManifest::load(p)?;
            Ok(serde_json::from_value(m.result["initial_set"].clone())?)
        }
        None => initial_set(eta, rho0, re_u0),
    }
}

fn run(cli: Cli) -> Result<ExitCode, StokesError> {
    match cli.cmd {
        Cmd::Certify {
            kappa,
            gamma,
            rho1,
            rho2,
            eta,
            scan_rho2,
            out,
        } => {
            let mut p = CertificateParams::new(kappa, gamma, rho1, rho2);
            p.eta = eta;
            cmd_certify(p, scan_rho2, &out)
        }
        Cmd::InitialSet { eta, rho0, re_u0, out } => {
            let start = Instant::now();
            let mut m = RunManifest::new("initial-set", json!({ "eta": eta, "rho0": rho0, "re_u0": re_u0 }), json!({}));
            let s = initial_set(eta, rho0, re_u0)?;
            m.verdict = Some("Certified".into());
            m.result = json!({
                "w_radius": point_triple(s.w_radius, "b1 |U0|^(-8/3)"),
                "xy_radius": point_triple(s.xy_radius, "b2 |U0|^(-4/3)"),
                "b1_tilde": triple(&s.b1_tilde, "tail ball radius, W"),
                "b2_tilde": triple(&s.b2_tilde, "tail ball radius, X and Y"),
                "initial_set": s,
            });
            emit(&m.with_seconds(start.elapsed().as_secs_f64()), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Crossing {
            integ,
            initial,
            eta,
            start_rho,
            rho0,
            re_u0,
            seed,
            no_guard,
            leg_until,
            csv,
            out,
        } => {
            let start = Instant::now();
            let cfg = integ.config();
            let params = json!({
                "eta": eta, "start_rho": start_rho, "rho0": rho0, "re_u0": re_u0,
                "seed": format!("{seed:?}").to_lowercase(), "guard": !no_guard, "leg_until": leg_until,
            });
            let mut m = RunManifest::new("crossing", params, serde_json::to_value(&cfg)?);
            let guard = (!no_guard).then_some(DomainGuard { rho0 });
            let set = load_or_build_initial(&initial, eta, start_rho, re_u0)?;
            let sys = OdeSystem::extended();
            let mut records = Vec::new();
            match (cfg.mode, leg_until) {
                (Mode::Rigorous, Some(stop)) => {
                    let leg = rigorous_leg(
                        &set.boxes,
                        set.probe_points()?,
                        stop,
                        &cfg,
                        &IntegratorConfig::default(),
                        Some(&mut records),
                    )?;
                    m.result = json!({ "leg": leg, "width_growth": leg.growth() });
                }
                (Mode::Rigorous, None) => {
                    let c = rigorous_crossing(&sys, &set.boxes, &cfg, guard, Some(&mut records))?;
                    m.verdict = Some(if c.re_y_interval.hi() < 0.0 { "ReY<0" } else { "undecided" }.into());
                    m.result = crossing_json(&c);
                }
                (Mode::Fast, _) => {
                    let x0 = match seed {
                        SeedArg::Midpoint => set.midpoint_state()?,
                        SeedArg::Tail => seed_state(set.u0(), eta)?,
                    };
                    let c = fast_crossing(&sys, x0, &cfg, guard, Some(&mut records))?;
                    m.result = crossing_json(&c);
                }
            }
            if let Some(p) = &csv {
                let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
                write_trajectory_csv(&mut f, &sys.names, &records)?;
                m.outputs.push(p.display().to_string());
            }
            emit(&m.with_seconds(start.elapsed().as_secs_f64()), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Stokes {
            integ,
            rho,
            re_u0,
            eta,
            out,
        } => {
            let start = Instant::now();
            let cfg = integ.config();
            let mut m = RunManifest::new(
                "stokes",
                json!({ "rho": rho, "re_u0": re_u0, "eta": eta }),
                serde_json::to_value(&cfg)?,
            );
            let est = stokes_estimates(&rho, re_u0, eta, &cfg)?;
            let extrapolated = est.first().and_then(|e| e.extrapolated_theta);
            m.result = json!({
                "estimates": est.iter().map(|e| json!({
                    "rho": point_triple(e.rho, "crossing depth -Im U"),
                    "delta_y_re": point_triple(e.delta_y[0], "2 Re Y^u at U = -i rho"),
                    "theta_rho": point_triple(e.theta_rho, "|Delta Y(-i rho)| e^rho"),
                })).collect::<Vec<_>>(),
                "extrapolated_theta": extrapolated.map(|t| point_triple(t, "polynomial extrapolation in 1/rho")),
            });
            emit(&m.with_seconds(start.elapsed().as_secs_f64()), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::ConstantA { panels, out } => {
            let start = Instant::now();
            let mut m = RunManifest::new("constant-a", json!({ "panels": panels }), json!({}));
            let a = constant_a(panels)?;
            m.result = json!({ "A": triple(&a, "half-width of the analyticity strip of the separatrix") });
            emit(&m.with_seconds(start.elapsed().as_secs_f64()), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Report { runs, out } => {
            let manifests = runs.iter().map(|p| RunManifest::load(p)).collect::<Result<Vec<_>, _>>()?;
            let doc = consolidate(&manifests);
            let text = serde_json::to_string_pretty(&doc)?;
            match out {
                Some(p) => std::fs::write(p, text + "\n")?,
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify {
            mode,
            order,
            start_rho,
            rho0,
            re_u0,
            out,
        } => {
            let start = Instant::now();
            let cfg = IntegrationArgs {
                mode,
                order,
                tol: 1e-16,
                h_max: 1.0,
                max_steps: 100_000,
            }
            .config();
            let mut m = RunManifest::new(
                "verify",
                json!({ "start_rho": start_rho, "rho0": rho0, "re_u0": re_u0 }),
                serde_json::to_value(&cfg)?,
            );
            let inner = certify(&CertificateParams::new(KAPPA_STAR, GAMMA_STAR, RHO1_STAR, RHO2_STAR))?;
            let set = initial_set(ETA_STAR, start_rho, re_u0);
            let tail_ok = set.is_ok();
            let mut result = json!({
                "certificate": { "verdict": inner.verdict, "L": triple(&inner.lipschitz, "Lipschitz constant") },
                "tail_certificate": tail_ok,
            });
            let guard = Some(DomainGuard { rho0 });
            let sys = OdeSystem::extended();
            let mut chain = inner.verdict.is_certified() && tail_ok;
            let mut caveat = None;
            if let Ok(set) = &set {
                let crossing = match cfg.mode {
                    Mode::Rigorous => rigorous_crossing(&sys, &set.boxes, &cfg, guard, None),
                    Mode::Fast => Err(StokesError::NotCertified("fast mode requested".into())),
                };
                match crossing {
                    Ok(c) => {
                        chain &= c.re_y_interval.hi() < 0.0;
                        result["crossing"] = crossing_json(&c);
                        result["crossing_mode"] = json!("rigorous");
                    }
                    Err(e) => {
                        let x0 = set.midpoint_state()?;
                        let c = fast_crossing(&sys, x0, &IntegratorConfig::default(), guard, None)?;
                        result["crossing"] = crossing_json(&c);
                        result["crossing_mode"] = json!("fast");
                        result["rigorous_failure"] = json!(e.to_string());
                        let rig = IntegratorConfig {
                            mode: Mode::Rigorous,
                            ..cfg.clone()
                        };
                        let leg = rigorous_leg(
                            &set.boxes,
                            set.probe_points()?,
                            re_u0 + LEG_LENGTH,
                            &rig,
                            &IntegratorConfig::default(),
                            None,
                        )?;
                        result["rigorous_leg"] = json!({ "re_u_stop": leg.re_u_stop, "escapes": leg.escapes, "width_growth": leg.growth() });
                        chain = false;
                        caveat = Some("rigorous-leg-only: crossing from fast mode, not a proof");
                    }
                }
            }
            m.verdict = Some(match (chain, caveat) {
                (true, _) => "verified".into(),
                (false, Some(c)) => c.into(),
                (false, None) => "not verified".into(),
            });
            m.result = result;
            emit(&m.with_seconds(start.elapsed().as_secs_f64()), &out)?;
            Ok(if chain { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    setup_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
