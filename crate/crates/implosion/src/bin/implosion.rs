use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use implosion::config::{Config, Envelope};
use implosion::emden::{portrait_sample, Emden, Window};
use implosion::profile::{dampen, profile_at, ProfileSolution};
use implosion::repulsivity::{characteristic_speeds, margins};
use implosion::simulate::{init, physical_rates, run, sim_grid, Perturbation, RunConfig};
use implosion::spectral::{shifted_root, spectral_study, SpectralConfig};
use implosion::Error;

#[derive(Parser)]
#[command(name = "implosion", version, about = "Self-similar implosion profiles for radial compressible flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Find the smooth profile and export it.
    Profile,
    /// Check the repulsivity inequalities; exits 4 when a margin fails.
    Verify,
    /// Count unstable eigenvalues of the linearized operator.
    Spectrum,
    /// Integrate the renormalized flow from dampened profile data.
    Simulate,
    /// Export phase-portrait data of the Emden system at the profile speed.
    Portrait,
}

enum Failure {
    Lib(Error),
    Margins,
    Output(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidStateLaw(_)
        | Error::DegenerateTriplePoint { .. }
        | Error::InvalidParameter(_)
        | Error::GaugeSingularity(_)
        | Error::NonIntegrableEnergy { .. } => 1,
        Error::NoSonicRoot(_) | Error::NoRootInBracket { .. } | Error::RootNotBracketed(_) => 2,
        Error::CrossingFailed(_) | Error::WrongBranch(_) | Error::NotCritical(_) | Error::Integration(_) => 3,
        Error::Input(_) => 64,
        Error::AssemblyFailed(_) | Error::Vacuum(_) | Error::Blowup(_) => 1,
    }
}

type Out<T> = std::result::Result<T, Failure>;

fn write_json<T: Serialize>(dir: &Path, name: &str, schema: &str, cfg: &Config, data: &T) -> Out<()> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))?;
    serde_json::to_writer_pretty(f, &Envelope::new(schema, cfg, data)).map_err(|e| Failure::Output(e.to_string()))
}

fn write_csv<R: Serialize>(dir: &Path, name: &str, rows: impl IntoIterator<Item = R>) -> Out<()> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| Failure::Output(e.to_string()))
}

#[derive(Serialize)]
struct ProfileRow {
    z: f64,
    w: f64,
    sigma: f64,
    x: f64,
    rho: f64,
    u: f64,
    psi: f64,
}

#[derive(Serialize)]
struct ProfileSummary<'a> {
    d: u32,
    gamma: f64,
    ell: f64,
    p: f64,
    r: f64,
    e: f64,
    r_eye: f64,
    z2: f64,
    c_w: f64,
    tail_slope: f64,
    miss: f64,
    crossing: &'a implosion::profile::Crossing,
    rejected: &'a [implosion::profile::RejectedRoot],
}

fn profile(cfg: &Config, dir: &Path) -> Out<(implosion::Parameters, ProfileSolution)> {
    let params = cfg.parameters()?;
    let sol = cfg.profile(&params)?;
    let c = &sol.curve;
    let params = params.with_speed(c.r)?;
    let summary = ProfileSummary {
        d: params.d,
        gamma: params.gamma,
        ell: params.ell,
        p: params.p,
        r: c.r,
        e: params.e.unwrap(),
        r_eye: params.r_eye,
        z2: c.z2,
        c_w: c.c_w,
        tail_slope: c.tail_slope,
        miss: sol.root.miss,
        crossing: &c.crossing,
        rejected: &sol.rejected,
    };
    write_json(dir, "profile.json", "implosion.profile", cfg, &summary)?;
    write_csv(
        dir,
        "profile.csv",
        (0..c.z.len()).map(|i| {
            let (rho, u, psi) = profile_at(c, c.z[i]);
            ProfileRow { z: c.z[i], w: c.w[i], sigma: c.sigma[i], x: c.x[i], rho, u, psi }
        }),
    )?;
    Ok((params, sol))
}

#[derive(Serialize)]
struct MarginRow {
    z: f64,
    q_inside_1: f64,
    q_inside_2: f64,
    q_outside: f64,
    f: f64,
    l: f64,
    l_bar: f64,
}

fn verify(cfg: &Config, dir: &Path) -> Out<()> {
    let (params, sol) = profile(cfg, dir)?;
    let rep = margins(&sol.curve, &params);
    let cs = characteristic_speeds(&sol.curve);
    #[derive(Serialize)]
    struct Doc<'a> {
        report: &'a implosion::repulsivity::RepulsivityReport,
        halving_drift: f64,
        speed_sign_changes: usize,
        speed_root: Option<f64>,
        passes: bool,
    }
    let doc = Doc {
        report: &rep,
        halving_drift: rep.halving_drift(),
        speed_sign_changes: cs.sign_changes,
        speed_root: cs.root,
        passes: rep.passes(),
    };
    write_json(dir, "repulsivity.json", "implosion.repulsivity", cfg, &doc)?;
    write_csv(
        dir,
        "margins.csv",
        (0..rep.grid.len()).map(|i| MarginRow {
            z: rep.grid[i],
            q_inside_1: rep.q_inside_1[i],
            q_inside_2: rep.q_inside_2[i],
            q_outside: rep.q_outside[i],
            f: rep.f[i],
            l: cs.l[i],
            l_bar: cs.l_bar[i],
        }),
    )?;
    if rep.passes() {
        Ok(())
    } else {
        Err(Failure::Margins)
    }
}

#[derive(Serialize)]
struct EigenRow {
    n: usize,
    re: f64,
    im: f64,
    tail: f64,
    drift: Option<f64>,
    resolved: bool,
    neutral: bool,
}

fn spectrum(cfg: &Config, dir: &Path) -> Out<()> {
    let (_, sol) = profile(cfg, dir)?;
    let scfg = SpectralConfig { a: cfg.a, threshold: cfg.threshold, ..SpectralConfig::default() };
    let study = spectral_study(&sol.curve, cfg.n, &scfg)?;
    let shifts: Vec<(f64, f64)> = [0.0, 0.01, 0.02, 0.04, 0.08]
        .iter()
        .map(|&a| shifted_root(&sol.curve, a).map(|z| (a, z)))
        .collect::<implosion::Result<_>>()?;
    #[derive(Serialize)]
    struct Doc<'a> {
        study: &'a implosion::spectral::SpectralStudy,
        lambda_max: Option<f64>,
        shifted_roots: &'a [(f64, f64)],
    }
    write_json(
        dir,
        "spectrum.json",
        "implosion.spectrum",
        cfg,
        &Doc { study: &study, lambda_max: study.report.lambda_max(), shifted_roots: &shifts },
    )?;
    write_csv(
        dir,
        "eigenvalues.csv",
        study.report.eigenvalues.iter().map(|e| EigenRow {
            n: study.n,
            re: e.re,
            im: e.im,
            tail: e.tail,
            drift: e.drift,
            resolved: e.resolved,
            neutral: e.neutral,
        }),
    )
}

#[derive(Serialize)]
struct SnapRow {
    tau: f64,
    z: f64,
    rho_t: f64,
    u_t: f64,
}

#[derive(Serialize)]
struct RateRow {
    t: f64,
    sup_rho: f64,
    sup_u: f64,
    rho_scaled: f64,
    u_scaled: f64,
}

fn simulate(cfg: &Config, dir: &Path) -> Out<()> {
    let (params, sol) = profile(cfg, dir)?;
    let c = &sol.curve;
    let zstar = cfg.tau0.exp();
    let z_out = cfg.z_out.unwrap_or(20.0 * zstar);
    let z = sim_grid(cfg.h, z_out);
    let xs: Vec<f64> = z.iter().map(|z| z / zstar).collect();
    let damp = dampen(c, cfg.n_p, cfg.tau0, &xs)?;
    let pert = match cfg.seed {
        Some(seed) => Perturbation::random(seed, cfg.bumps, cfg.amplitude, c.z2),
        None if cfg.amplitude != 0.0 => Perturbation::single(cfg.amplitude, cfg.amplitude, cfg.bump_center, cfg.bump_width),
        None => Perturbation::none(),
    };
    let mut state = init(&damp, c, &params, &pert)?;
    let rc = RunConfig { cadence: cfg.cadence, snapshot_every: 1, ..RunConfig::default() };
    let traj = run(&mut state, cfg.tau0 + cfg.tau_span, &rc, c.z2);
    let final_deviation = traj.diagnostics.last().deviation.iter().cloned().fold(0.0, f64::max);
    // physical rates on the same tau samples
    let kappa = cfg.time_convention.kappa(c.r);
    let ts: Vec<f64> = traj.diagnostics.samples.iter().map(|s| cfg.t_blowup - kappa * (-c.r * s.tau).exp()).collect();
    let rates = physical_rates(c, cfg.t_blowup, &ts, cfg.time_convention, cfg.fixed_x);
    #[derive(Serialize)]
    struct Doc<'a> {
        trajectory: &'a implosion::simulate::Trajectory,
        final_deviation: f64,
        stationarity_bound: f64,
        within_bound: bool,
        rates: &'a implosion::simulate::RateCurves,
    }
    let within = final_deviation < cfg.stationarity_bound;
    // snapshots go to the CSV only
    let mut slim = traj.clone();
    slim.snapshots.clear();
    write_json(
        dir,
        "diagnostics.json",
        "implosion.simulate",
        cfg,
        &Doc { trajectory: &slim, final_deviation, stationarity_bound: cfg.stationarity_bound, within_bound: within, rates: &rates },
    )?;
    write_csv(
        dir,
        "snapshots.csv",
        traj.snapshots.iter().flat_map(|s| {
            (0..s.z.len()).map(move |i| SnapRow { tau: s.tau, z: s.z[i], rho_t: s.rho[i], u_t: s.u[i] })
        }),
    )?;
    write_csv(
        dir,
        "rates.csv",
        (0..rates.t.len()).map(|i| RateRow {
            t: rates.t[i],
            sup_rho: rates.sup_rho[i],
            sup_u: rates.sup_u[i],
            rho_scaled: rates.rho_scaled[i],
            u_scaled: rates.u_scaled[i],
        }),
    )?;
    match traj.stop {
        implosion::simulate::Stop::Vacuum => Err(Error::Vacuum(state.tau).into()),
        implosion::simulate::Stop::Blowup => Err(Error::Blowup(state.tau).into()),
        implosion::simulate::Stop::StepUnderflow => Err(Error::Integration(format!("step underflow at tau = {}", state.tau)).into()),
        implosion::simulate::Stop::Finished => Ok(()),
    }
}

#[derive(Serialize)]
struct PortraitCsvRow {
    w: f64,
    sigma: f64,
    fw: f64,
    fsigma: f64,
    locus: &'static str,
}

#[derive(Serialize)]
struct TrajectoryRow {
    z: f64,
    w: f64,
    sigma: f64,
}

fn portrait(cfg: &Config, dir: &Path) -> Out<()> {
    let (params, sol) = profile(cfg, dir)?;
    let c = &sol.curve;
    let sys = Emden::new(params.dim(), params.ell, c.r);
    let s_max = c.sigma.iter().cloned().filter(|s| s.is_finite()).fold(0.0, f64::max).min(4.0).max(2.0);
    let window = Window { w_min: -0.5, w_max: 1.5, s_min: 0.0, s_max };
    let p = portrait_sample(&sys, window, cfg.portrait_n)?;
    write_json(dir, "critical.json", "implosion.portrait", cfg, &p.critical)?;
    write_csv(
        dir,
        "portrait.csv",
        p.rows.iter().map(|r| PortraitCsvRow { w: r.w, sigma: r.sigma, fw: r.fw, fsigma: r.fsigma, locus: r.locus.id() }),
    )?;
    write_csv(
        dir,
        "trajectory.csv",
        (0..c.z.len()).map(|i| TrajectoryRow { z: c.z[i], w: c.w[i], sigma: c.sigma[i] }),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = match &cli.config {
        Some(p) => Config::load(p),
        None => Err(Error::Input("--config PATH is required".into())),
    };
    let result = cfg.map_err(Failure::from).and_then(|cfg| {
        std::fs::create_dir_all(&cli.out).map_err(|e| Failure::Output(format!("{}: {e}", cli.out.display())))?;
        match cli.command {
            Command::Profile => profile(&cfg, &cli.out).map(|_| ()),
            Command::Verify => verify(&cfg, &cli.out),
            Command::Spectrum => spectrum(&cfg, &cli.out),
            Command::Simulate => simulate(&cfg, &cli.out),
            Command::Portrait => portrait(&cfg, &cli.out),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Margins) => {
            eprintln!("error: repulsivity margins failed");
            ExitCode::from(4)
        }
        Err(Failure::Output(msg)) => {
            eprintln!("error: cannot write output: {msg}");
            ExitCode::from(73)
        }
    }
}
