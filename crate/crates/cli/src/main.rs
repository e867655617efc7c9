use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use nibplan::association::{candidate_links, LinkParams};
use nibplan::beamopt::BeamGeometry;
use nibplan::deployment::hex_baseline;
use nibplan::pipeline::{
    self, deploy, persist_run, persist_sweep, place, provisional_beams, run_plan, run_trial, sweep,
    write_csv, write_json, Manifest, OutputFormat, RunArtifacts, SweepAxis, SweepScope,
};
use nibplan::rng::{substream, Stream};
use nibplan::scenario::{generate_users, load_config, GroundUser, ScenarioConfig};
use nibplan::units::lin_to_db;
use nibplan::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "nibplan", version, about = "Plan UAV-borne NIB fleets with a HAPS backhaul")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Scenario JSON; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Take config and seed from a manifest written by an earlier run.
    #[arg(long, global = true, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "NIBPLAN_OUT", default_value = "out")]
    out: PathBuf,
    /// Monte Carlo trials per epoch or sweep point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true, default_value = "csv")]
    format: OutputFormat,
    /// Also write every candidate access link to channels.csv (associate,
    /// optimize-beams, allocate).
    #[arg(long, global = true)]
    dump_channels: bool,
}

#[derive(Subcommand, Debug, Clone)]
enum Cmd {
    /// Check the configuration and list every violation.
    Validate,
    /// Draw the ground users.
    GenerateUsers,
    /// Disk-cover deployment and the hexagonal baseline at one beam radius.
    Deploy(RadiusArg),
    /// Max-SINR association on the provisional beams.
    Associate(RadiusArg),
    /// Association followed by per-NIB beam geometry.
    OptimizeBeams(RadiusArg),
    /// One full trial at a fixed radius: backhaul split and access power.
    Allocate(RadiusArg),
    /// The sequential planning loop over beam radii.
    Run,
    /// Monte Carlo sweep of one parameter.
    Sweep(SweepArgs),
    /// Re-emit the CSV tables of a saved run.json.
    Report {
        /// A run.json written by `run --format json`.
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
struct RadiusArg {
    /// Beam radius in meters; defaults to the configured r_min.
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    /// coverage_radius (m), tx_power (dBW), transmit_snr (dB), n_antennas or density (users/km^2).
    #[arg(long)]
    axis: SweepAxis,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, default_value = "deployment")]
    scope: SweepScope,
}

fn load(g: &Global) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = match (&g.manifest, &g.config) {
        (Some(m), _) => pipeline::load_manifest(m)?.config,
        (None, Some(p)) => load_config(p)?,
        (None, None) => ScenarioConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = g.trials {
        cfg.trials = t;
    }
    cfg.ensure_valid()?;
    Ok(cfg)
}

fn manifest(cmd: &str, cfg: &ScenarioConfig, args: &[(&str, String)]) -> Manifest {
    let mut m = Manifest::new(cmd, cfg);
    m.args = args.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<BTreeMap<_, _>>();
    m
}

fn emit<T: Serialize>(dir: &Path, stem: &str, rows: &[T], format: OutputFormat) -> anyhow::Result<PathBuf> {
    let path = match format {
        OutputFormat::Csv => {
            let p = dir.join(format!("{stem}.csv"));
            write_csv(&p, rows)?;
            p
        }
        OutputFormat::Json => {
            let p = dir.join(format!("{stem}.json"));
            write_json(&p, &rows)?;
            p
        }
    };
    Ok(path)
}

#[derive(Serialize)]
struct UserCsv {
    user: usize,
    x: f64,
    y: f64,
    rat: usize,
    noise_figure_db: f64,
    backhaul_dependent: bool,
}

#[derive(Serialize)]
struct CenterCsv {
    method: String,
    index: usize,
    x: f64,
    y: f64,
    radius_m: f64,
}

#[derive(Serialize)]
struct AssocCsv {
    user: usize,
    nib: usize,
    deployed_id: usize,
    association_sinr: f64,
}

#[derive(Serialize)]
struct BeamCsv {
    nib: usize,
    deployed_id: usize,
    center_x: f64,
    center_y: f64,
    radius_m: f64,
    altitude_m: f64,
    hpbw_deg: f64,
    elevation_deg: f64,
    clamped: bool,
}

#[derive(Serialize)]
struct ChannelCsv {
    user: usize,
    deployed_id: usize,
    beam_gain: f64,
    path_loss_db: f64,
    off_axis_deg: f64,
    elevation_deg: f64,
    distance_m: f64,
    gain: f64,
}

/// Same draws as the association stage of trial 0.
fn dump_channels(cfg: &ScenarioConfig, users: &[GroundUser], beams: &[BeamGeometry], dir: &Path) -> anyhow::Result<PathBuf> {
    let params = LinkParams::from_config(cfg);
    let mut rng = substream(cfg.seed, Stream::AccessFading, 0);
    let links = candidate_links(users, beams, &params, &mut rng)?;
    let rows: Vec<ChannelCsv> = links
        .iter()
        .zip(users)
        .flat_map(|(ls, u)| {
            ls.iter().map(move |l| ChannelCsv {
                user: u.id,
                deployed_id: l.nib,
                beam_gain: l.channel.beam_gain,
                path_loss_db: lin_to_db(l.channel.path_loss),
                off_axis_deg: l.channel.off_axis_deg,
                elevation_deg: l.channel.elevation_deg,
                distance_m: l.channel.distance_m,
                gain: l.channel.norm_sqr(),
            })
        })
        .collect();
    let p = dir.join("channels.csv");
    write_csv(&p, &rows)?;
    Ok(p)
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    if let Cmd::Report { input } = &cli.cmd {
        let text = std::fs::read_to_string(input).map_err(|e| Error::Io {
            path: input.clone(),
            source: e,
        })?;
        let art: RunArtifacts =
            serde_json::from_str(&text).with_context(|| format!("reading run artifacts from {}", input.display()))?;
        let m = manifest("report", &art.config, &[("input", input.display().to_string())]);
        for p in persist_run(&art, &g.out, OutputFormat::Csv, &m)? {
            println!("{}", p.display());
        }
        return Ok(());
    }
    let cfg = load(g)?;
    let radius = |r: &RadiusArg| r.radius.unwrap_or(cfg.sweep.r_min_m);
    match &cli.cmd {
        Cmd::Validate => {
            println!("ok: config hash {}", cfg.hash());
        }
        Cmd::GenerateUsers => {
            let users = generate_users(&cfg)?;
            pipeline::ensure_dir(&g.out)?;
            let rows: Vec<UserCsv> = users
                .users
                .iter()
                .map(|u| UserCsv {
                    user: u.id,
                    x: u.position.x,
                    y: u.position.y,
                    rat: u.rat,
                    noise_figure_db: u.noise_figure_db,
                    backhaul_dependent: u.backhaul_dependent,
                })
                .collect();
            write_json(&g.out.join("manifest.json"), &manifest("generate-users", &cfg, &[]))?;
            let p = emit(&g.out, "users", &rows, g.format)?;
            println!("{} users -> {}", rows.len(), p.display());
        }
        Cmd::Deploy(r) => {
            let r = radius(r);
            let users = generate_users(&cfg)?;
            let plan = deploy(&users.positions(), r, cfg.exact_cap)?;
            let hex = hex_baseline(cfg.coverage_radius(), r.min(cfg.coverage_radius()), cfg.haps.center)?;
            pipeline::ensure_dir(&g.out)?;
            let mut rows = Vec::new();
            for (name, p) in [("gdc", &plan), ("hex", &hex)] {
                rows.extend(p.centers.iter().enumerate().map(|(i, c)| CenterCsv {
                    method: name.into(),
                    index: i,
                    x: c.x,
                    y: c.y,
                    radius_m: r,
                }));
            }
            write_json(&g.out.join("manifest.json"), &manifest("deploy", &cfg, &[("radius", r.to_string())]))?;
            let p = emit(&g.out, "deployment", &rows, g.format)?;
            println!("J_gdc = {}, J_hex = {} -> {}", plan.count(), hex.count(), p.display());
        }
        Cmd::Associate(r) | Cmd::OptimizeBeams(r) => {
            let r = radius(r);
            let users = generate_users(&cfg)?;
            let plan = deploy(&users.positions(), r, cfg.exact_cap)?;
            let beams = provisional_beams(&cfg, &plan)?;
            let pl = place(&cfg, &users.users, &beams, 0)?;
            pipeline::ensure_dir(&g.out)?;
            if g.dump_channels {
                println!("channels -> {}", dump_channels(&cfg, &users.users, &beams, &g.out)?.display());
            }
            let name = if matches!(cli.cmd, Cmd::Associate(_)) { "associate" } else { "optimize-beams" };
            write_json(&g.out.join("manifest.json"), &manifest(name, &cfg, &[("radius", r.to_string())]))?;
            let assoc: Vec<AssocCsv> = pl
                .association
                .nib_of
                .iter()
                .enumerate()
                .map(|(k, &j)| AssocCsv {
                    user: users.users[k].id,
                    nib: j,
                    deployed_id: pl.deployed_ids[j],
                    association_sinr: pl.association_sinr[k],
                })
                .collect();
            let p = emit(&g.out, "association", &assoc, g.format)?;
            println!("{} users on {} active NIBs -> {}", assoc.len(), pl.geometries.len(), p.display());
            if name == "optimize-beams" {
                let beams: Vec<BeamCsv> = pl
                    .geometries
                    .iter()
                    .enumerate()
                    .map(|(j, b)| BeamCsv {
                        nib: j,
                        deployed_id: pl.deployed_ids[j],
                        center_x: b.center.x,
                        center_y: b.center.y,
                        radius_m: b.radius_m,
                        altitude_m: b.altitude_m,
                        hpbw_deg: b.hpbw_deg,
                        elevation_deg: b.elevation_deg,
                        clamped: b.clamped,
                    })
                    .collect();
                let p = emit(&g.out, "beams", &beams, g.format)?;
                println!("beams -> {}", p.display());
            }
        }
        Cmd::Allocate(r) => {
            let r = radius(r);
            let users = generate_users(&cfg)?;
            let plan = deploy(&users.positions(), r, cfg.exact_cap)?;
            let beams = provisional_beams(&cfg, &plan)?;
            let t = run_trial(&cfg, &users.users, &beams, 0, 0)?;
            pipeline::ensure_dir(&g.out)?;
            if g.dump_channels {
                println!("channels -> {}", dump_channels(&cfg, &users.users, &beams, &g.out)?.display());
            }
            write_json(&g.out.join("manifest.json"), &manifest("allocate", &cfg, &[("radius", r.to_string())]))?;
            emit(&g.out, "backhaul", &t.backhaul, g.format)?;
            let p = emit(&g.out, "users", &t.users, g.format)?;
            println!(
                "R_a = {:.4e} bps (UPA {:.4e}), R_b = {:.4e} bps -> {}",
                t.nupa.sum_rate_access_bps,
                t.upa.sum_rate_access_bps,
                t.nupa.sum_rate_backhaul_bps,
                p.display()
            );
        }
        Cmd::Run => {
            let art = run_plan(&cfg)?;
            let written = persist_run(&art, &g.out, g.format, &manifest("run", &cfg, &[]))?;
            let best = &art.epochs[art.best_epoch];
            println!(
                "{} epochs, best r = {:.1} m with J = {} and R_a = {:.4e} bps",
                art.epochs.len(),
                best.radius_m,
                art.best.trial.geometries.len(),
                best.nupa.as_ref().map_or(0.0, |m| m.sum_rate_access_bps)
            );
            for p in written {
                println!("{}", p.display());
            }
        }
        Cmd::Sweep(a) => {
            let table = sweep(&cfg, a.axis, &a.values, a.scope)?;
            let values = a.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
            let m = manifest(
                "sweep",
                &cfg,
                &[
                    ("axis", a.axis.name().to_string()),
                    ("values", values),
                    ("scope", format!("{:?}", a.scope).to_lowercase()),
                ],
            );
            for (v, rep, why) in &table.failures {
                log::warn!("{}={v} replica {rep} failed: {why}", a.axis.name());
            }
            if table.rows.is_empty() {
                bail!(Error::Infeasible("every sweep replica failed".into()));
            }
            for p in persist_sweep(&table, &g.out, g.format, &m)? {
                println!("{}", p.display());
            }
        }
        Cmd::Report { .. } => unreachable!(),
    }
    info!("done");
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::InvalidConfig(_) | Error::Parse { .. } | Error::InvalidArgument { .. }) => EXIT_CONFIG,
        Some(Error::Io { .. } | Error::Csv { .. }) => EXIT_IO,
        Some(Error::Infeasible(_) | Error::AllEpochsInfeasible(_) | Error::Uncovered { .. })
        | Some(Error::ExactCapExceeded { .. }) => EXIT_INFEASIBLE,
        None if e.chain().any(|c| c.is::<serde_json::Error>()) => EXIT_CONFIG,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
