//! The `ackplan` command line. Exit codes: 0 success, 1 domain error, 2 usage
//! or parse error. Diagnostics go to standard error; results go to files or
//! standard output.

use std::ffi::OsString;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::bench::{bench_compare, generate_map, rows_to_csv, MapFamily, MapFamilySpec, PlannerKind};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::kinematics::RobotState;
use crate::par::Exec;
use crate::planner::{Path, PlannerParams};
use crate::sac::{self, metrics_to_csv, save_checkpoint};
use crate::svg::render_svg;
use crate::world::OccupancyGrid;

#[derive(Debug, Parser)]
#[command(name = "ackplan", version, about = "Hybrid A* planning and SAC navigation for Ackermann robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_pose(s: &str) -> std::result::Result<RobotState, String> {
    let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == 3 && v.iter().all(|x| x.is_finite()) => Ok(RobotState::new(v[0], v[1], v[2])),
        _ => Err(format!("expected X,Y,THETA, got {s:?}")),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan a path between two poses on a map.
    Plan {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        start: RobotState,
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        goal: RobotState,
        #[arg(long, value_parser = ["oneway", "twoway"])]
        mode: String,
        /// Config file; planner and vehicle keys are used.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Train a SAC policy on a map.
    Train {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trained policy with deterministic actions.
    Eval {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Compare one-way and two-way search on generated maps.
    Bench {
        #[arg(long, value_parser = ["deadend", "clutter"])]
        family: String,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Draw a map and a path file as SVG.
    Render {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a benchmark map; prints its start and goal poses as JSON.
    Genmap {
        #[arg(long, value_parser = ["deadend", "clutter"])]
        family: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ParseError { .. } | Error::InvalidInput(_) => 2,
        _ => 1,
    }
}

fn read(path: &FsPath) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &FsPath, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_map(path: &FsPath) -> Result<OccupancyGrid> {
    OccupancyGrid::parse(&read(path)?)
}

fn load_config(path: Option<&FsPath>) -> Result<Config> {
    match path {
        Some(p) => Config::parse(&read(p)?),
        None => Ok(Config::default()),
    }
}

fn pose_json(p: &RobotState) -> serde_json::Value {
    json!([p.x, p.y, p.theta])
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Plan {
            map,
            start,
            goal,
            mode,
            params,
            out,
            svg,
        } => {
            let grid = load_map(&map)?;
            let cfg = load_config(params.as_deref())?;
            let kind: PlannerKind = mode.parse()?;
            let res = kind.plan(&grid, start, goal, &cfg.vehicle, &cfg.planner)?;
            let best = res.best.as_ref().expect("a successful plan has a best path");
            write(&out, &best.to_csv())?;
            if let Some(svg) = svg {
                write(&svg, &render_svg(&grid, &res.candidates, &start, &goal))?;
            }
            println!(
                "{}",
                json!({
                    "expansions": res.expansions,
                    "candidates": res.candidates.len(),
                    "cost": best.cost,
                    "score": best.score,
                    "terminated_by": format!("{:?}", res.terminated_by),
                    "elapsed_ms": res.elapsed * 1e3,
                })
            );
            Ok(())
        }
        Command::Train {
            map,
            config,
            steps,
            seed,
            out,
        } => {
            let grid = load_map(&map)?;
            let cfg = load_config(Some(&config))?;
            let env = cfg.env_config(grid)?;
            let report = sac::train_with(&env, &cfg.sac, steps, seed, Exec::default(), |e| {
                if e.episode % 50 == 0 {
                    eprintln!("episode {} steps {} return {:.3} {}", e.episode, e.steps, e.ret, e.event.name());
                }
            })?;
            save_checkpoint(&out, &report.agent.nets, &cfg.sac, seed)?;
            write(&out.join("config.txt"), &cfg.to_text())?;
            write(&out.join("metrics.csv"), &metrics_to_csv(&report.episodes))?;
            println!(
                "{}",
                json!({
                    "episodes": report.episodes.len(),
                    "env_steps": report.env_steps,
                    "updates": report.updates,
                    "success_rate_last_100": report.recent_success_rate(100),
                })
            );
            Ok(())
        }
        Command::Eval {
            map,
            checkpoint,
            episodes,
            seed,
        } => {
            let grid = load_map(&map)?;
            let cfg = Config::parse(&read(&checkpoint.join("config.txt"))?)?;
            let env = cfg.env_config(grid)?;
            let nets = sac::load_checkpoint(&checkpoint)?;
            if nets.obs_dim() != env.obs_dim() {
                return Err(Error::ShapeMismatch {
                    expected: env.obs_dim(),
                    got: nets.obs_dim(),
                });
            }
            let stats = sac::evaluate(&nets, &env, episodes, seed)?;
            println!("{}", serde_json::to_string(&stats).expect("stats serialize"));
            Ok(())
        }
        Command::Bench {
            family,
            count,
            seed,
            out,
            svg_dir,
            repetitions,
            params,
        } => {
            let family: MapFamily = family.parse()?;
            let cfg = load_config(params.as_deref())?;
            let specs: Vec<MapFamilySpec> = (0..count as u64)
                .map(|i| match family {
                    MapFamily::DeadEndCorridor => MapFamilySpec::deadend(seed + i),
                    MapFamily::RandomClutter => MapFamilySpec::clutter(seed + i),
                })
                .collect();
            let report = bench_compare(&specs, &cfg.vehicle, &cfg.planner, repetitions, Exec::default())?;
            write(&out, &rows_to_csv(&report.rows))?;
            if let Some(dir) = svg_dir {
                fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
                for spec in &specs {
                    render_bench_svg(spec, &cfg.vehicle, &cfg.planner, &dir)?;
                }
            }
            eprint!("{}", report.summary_text());
            eprintln!("reference: one-way 3152 vs two-way 845 expansions (ratio 3.73) on an unpublished map");
            println!("{}", serde_json::to_string(&report.summary).expect("summary serializes"));
            Ok(())
        }
        Command::Render { map, path, out } => {
            let grid = load_map(&map)?;
            let p = Path::from_csv(&read(&path)?)?;
            write(&out, &render_svg(&grid, std::slice::from_ref(&p), p.start(), p.end()))
        }
        Command::Genmap { family, seed, out } => {
            let spec = match family.parse::<MapFamily>()? {
                MapFamily::DeadEndCorridor => MapFamilySpec::deadend(seed),
                MapFamily::RandomClutter => MapFamilySpec::clutter(seed),
            };
            let (grid, start, goal) = generate_map(&spec, &Default::default())?;
            write(&out, &grid.to_text())?;
            println!("{}", json!({ "start": pose_json(&start), "goal": pose_json(&goal) }));
            Ok(())
        }
    }
}

/// `<map_id>.svg` with the best one-way path as `path-0` and the best
/// two-way path as `path-1`, where they exist.
fn render_bench_svg(
    spec: &MapFamilySpec,
    vehicle: &crate::kinematics::VehicleParams,
    params: &PlannerParams,
    dir: &FsPath,
) -> Result<()> {
    let (grid, start, goal) = generate_map(spec, vehicle)?;
    let paths: Vec<Path> = [PlannerKind::OneWay, PlannerKind::TwoWay]
        .iter()
        .filter_map(|k| k.plan(&grid, start, goal, vehicle, params).ok()?.best)
        .collect();
    write(
        &dir.join(format!("{}.svg", spec.map_id())),
        &render_svg(&grid, &paths, &start, &goal),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_parser() {
        assert_eq!(parse_pose("1,2,-0.5").unwrap(), RobotState::new(1.0, 2.0, -0.5));
        assert!(parse_pose("1,2").is_err());
        assert!(parse_pose("a,b,c").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["ackplan", "plan", "--bogus"]), 2);
        assert_eq!(run(["ackplan", "fly"]), 2);
        assert_eq!(run(["ackplan", "--help"]), 0);
    }
}
