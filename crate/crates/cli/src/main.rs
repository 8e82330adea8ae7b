use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gdlab_cli::config::ExperimentConfig;
use gdlab_cli::plot::{render_lines, series_from_csv};
use gdlab_cli::presets;
use gdlab_cli::runner::{self, default_out_dir, run_config, run_preset};
use gdlab_core::dynamics::{classify, gd_run, Schedule};
use gdlab_core::periodic::{solve_x_eta, x_eta_curve};
use gdlab_core::quasistatic::compare_quasistatic;
use gdlab_core::registry;

#[derive(Parser)]
#[command(name = "gdlab", about = "Gradient descent on multiscale toy loss landscapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a preset or a config file
    Run {
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (defaults to $GDLAB_OUT or ./gdlab-out)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also emit an SVG plot of the loss curve(s)
        #[arg(long)]
        plot: bool,
    },
    /// Render a line plot from a CSV produced by `run`
    Plot {
        #[arg(long)]
        csv: PathBuf,
        /// x-axis column name
        #[arg(long, default_value = "step")]
        x: String,
        /// comma-separated y column names
        #[arg(long)]
        y: String,
        #[arg(long)]
        logy: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// List figure presets with their frozen parameters
    ListPresets,
    /// Solve the 2-periodic orbit amplitude for a scalar landscape
    SolvePeriodic {
        #[arg(long)]
        landscape: String,
        #[arg(long)]
        eta: f64,
        /// Emit a CSV curve over `start:end:count` learning rates instead
        #[arg(long)]
        curve: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the quasistatic comparison preset
    Quasistatic {
        #[arg(long, default_value = "fig5")]
        preset: String,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        /// Print comparison error metrics
        #[arg(long)]
        compare: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify GD outcomes over a grid of learning rates and random inits
    Sweep {
        #[arg(long)]
        landscape: String,
        /// `start:end:count` learning-rate grid
        #[arg(long)]
        eta_grid: String,
        #[arg(long, default_value_t = 50)]
        inits: usize,
        /// init range `lo:hi` per coordinate
        #[arg(long, default_value = "-10:10")]
        range: String,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { preset, config, out, plot } => cmd_run(preset, config, out, plot),
        Command::Plot { csv, x, y, logy, out } => cmd_plot(&csv, &x, &y, logy, &out),
        Command::ListPresets => {
            cmd_list_presets();
            Ok(())
        }
        Command::SolvePeriodic { landscape, eta, curve, out } => {
            cmd_solve_periodic(&landscape, eta, curve.as_deref(), out)
        }
        Command::Quasistatic { preset, steps, compare, out } => {
            cmd_quasistatic(&preset, steps, compare, out)
        }
        Command::Sweep { landscape, eta_grid, inits, range, steps, seed, out } => {
            cmd_sweep(&landscape, &eta_grid, inits, &range, steps, seed, out)
        }
    }
}

fn cmd_run(
    preset: Option<String>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    plot: bool,
) -> Result<()> {
    let out_dir = default_out_dir(out.as_deref());
    let csv_paths = match (preset, config) {
        (Some(id), None) => {
            let preset = presets::get(&id)
                .ok_or_else(|| anyhow!("unknown preset `{id}`; see `gdlab list-presets`"))?;
            run_preset(&preset, &out_dir)?
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(&path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            let cfg: ExperimentConfig = text.parse().map_err(|e| anyhow!("config parse error: {e}"))?;
            let out_dir = default_out_dir(cfg.out_dir.as_deref().or(out.as_deref()));
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".to_string());
            let art = run_config(&cfg, &out_dir, &name)?;
            println!("{}", art.outcome);
            vec![art.csv_path]
        }
        _ => bail!("exactly one of --preset or --config is required"),
    };
    for p in &csv_paths {
        println!("wrote {}", p.display());
    }
    if plot {
        for p in &csv_paths {
            let text = fs::read_to_string(p)?;
            if !text.starts_with("step,") {
                continue;
            }
            let series = series_from_csv(&text, "step", &["loss".to_string()])?;
            let svg_path = p.with_extension("svg");
            let svg = render_lines(&series, &p.file_stem().unwrap().to_string_lossy(), false)?;
            fs::write(&svg_path, svg)?;
            println!("wrote {}", svg_path.display());
        }
    }
    Ok(())
}

fn cmd_plot(csv: &PathBuf, x: &str, y: &str, logy: bool, out: &PathBuf) -> Result<()> {
    let text = fs::read_to_string(csv).with_context(|| format!("cannot read {}", csv.display()))?;
    let y_cols: Vec<String> = y.split(',').map(str::to_string).collect();
    let series = series_from_csv(&text, x, &y_cols)?;
    let title = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let svg = render_lines(&series, &title, logy)?;
    fs::write(out, svg).with_context(|| format!("cannot write {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_list_presets() {
    println!("{:<12} {:<55} parameters", "preset", "reproduces");
    for id in presets::all_ids() {
        let p = presets::get(id).expect("listed preset exists");
        println!("{:<12} {:<55} {}", p.id, p.figure, p.params);
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("expected start:end:count, got `{spec}`");
    }
    let start: f64 = parts[0].parse()?;
    let end: f64 = parts[1].parse()?;
    let count: usize = parts[2].parse()?;
    if count < 1 {
        bail!("grid count must be at least 1");
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (end - start) * i as f64 / (count as f64 - 1.0))
        .collect())
}

fn cmd_solve_periodic(
    landscape_id: &str,
    eta: f64,
    curve: Option<&str>,
    out: Option<PathBuf>,
) -> Result<()> {
    let landscape = registry::resolve(landscape_id)?;
    let scalar = landscape
        .as_scalar()
        .ok_or_else(|| anyhow!("`{landscape_id}` is not a scalar landscape"))?;
    if let Some(grid_spec) = curve {
        let etas = parse_grid(grid_spec)?;
        let amplitudes = x_eta_curve(scalar, &etas)?;
        let mut csv = String::from("eta,x_eta\n");
        for (e, a) in etas.iter().zip(&amplitudes) {
            csv.push_str(&format!("{e:.17e},{a:.17e}\n"));
        }
        match out {
            Some(path) => {
                fs::write(&path, csv)?;
                println!("wrote {}", path.display());
            }
            None => print!("{csv}"),
        }
    } else {
        let sol = solve_x_eta(scalar, eta)?;
        println!(
            "landscape={landscape_id} eta={eta} x_eta={:.12} residual={:.3e}{}",
            sol.amplitude,
            sol.residual,
            if sol.h_non_monotone { " h_non_monotone=true" } else { "" }
        );
    }
    Ok(())
}

fn cmd_quasistatic(preset_id: &str, steps: usize, compare: bool, out: Option<PathBuf>) -> Result<()> {
    let preset = presets::get(preset_id)
        .ok_or_else(|| anyhow!("unknown preset `{preset_id}`"))?;
    let mut cfg = match preset.kind {
        presets::PresetKind::QuasistaticCompare(cfg) => cfg,
        _ => bail!("preset `{preset_id}` has no quasistatic comparison"),
    };
    cfg.steps = steps;
    let out_dir = default_out_dir(out.as_deref());
    let art = run_config(&cfg, &out_dir, preset_id)?;
    println!("wrote {}", art.csv_path.display());
    if compare {
        let quasi = runner::fig5_quasistatic(&cfg)?;
        let cmp = compare_quasistatic(&art.trajectory, &quasi);
        println!(
            "max_rel_x={:.6e} max_rel_y={:.6e} steps_compared={}",
            cmp.max_rel_x,
            cmp.max_rel_y,
            cmp.x_abs_err.len()
        );
    }
    Ok(())
}

fn cmd_sweep(
    landscape_id: &str,
    eta_grid: &str,
    inits: usize,
    range: &str,
    steps: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let landscape = registry::resolve(landscape_id)?.as_vector();
    let etas = parse_grid(eta_grid)?;
    let (lo, hi) = range
        .split_once(':')
        .ok_or_else(|| anyhow!("expected lo:hi range"))?;
    let (lo, hi): (f64, f64) = (lo.parse()?, hi.parse()?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("eta,init,outcome\n");
    for &eta in &etas {
        let schedule = Schedule::constant(eta);
        for _ in 0..inits {
            let x0: Vec<f64> = (0..landscape.dim()).map(|_| rng.gen_range(lo..hi)).collect();
            let traj = gd_run(&landscape, &x0, &schedule, steps, false)?;
            let outcome = classify(&traj, 200.min(steps), 1e-8);
            let init_str: Vec<String> = x0.iter().map(|v| format!("{v:.6}")).collect();
            csv.push_str(&format!("{eta},({}),{outcome}\n", init_str.join(" ")));
        }
    }
    match out {
        Some(path) => {
            fs::write(&path, csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
