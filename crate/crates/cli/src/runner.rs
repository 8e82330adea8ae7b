//! Executes configs and presets, writing CSV artifacts and outcome records.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use gdlab_core::dataloss::{empirical_loss, DataSet1D};
use gdlab_core::dynamics::{classify, gd_run, RunOutcome, Schedule, Trajectory};
use gdlab_core::landscapes::{f1_logquad, f2_population, fig5_flatness};
use gdlab_core::quasistatic::{compare_quasistatic, quasistatic_run, QuasistaticRun};
use gdlab_core::registry;

use crate::config::ExperimentConfig;
use crate::presets::{Preset, PresetKind};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "GDLAB_OUT";

pub fn default_out_dir(cfg_dir: Option<&Path>) -> PathBuf {
    if let Some(d) = cfg_dir {
        return d.to_path_buf();
    }
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("gdlab-out"))
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub name: String,
    pub trajectory: Trajectory,
    pub outcome: RunOutcome,
    pub csv_path: PathBuf,
}

/// Execute one config: run GD, classify, write `<name>.csv` and
/// `<name>.outcome.txt`. A fig5-style config additionally writes the
/// quasistatic comparison CSV.
pub fn run_config(cfg: &ExperimentConfig, out_dir: &Path, name: &str) -> Result<RunArtifacts> {
    let landscape = registry::resolve(&cfg.landscape)
        .map_err(|e| anyhow!("invalid landscape id: {e}"))?;
    let vector = landscape.as_vector();
    if cfg.x0.len() != vector.dim() {
        bail!(
            "initial point has {} coordinates but `{}` is {}-dimensional",
            cfg.x0.len(),
            cfg.landscape,
            vector.dim()
        );
    }
    let schedule = Schedule::new(cfg.schedule.clone()).map_err(|e| anyhow!("malformed schedule: {e}"))?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;

    let trajectory = gd_run(&vector, &cfg.x0, &schedule, cfg.steps, cfg.record_sharpness)?;
    let outcome = classify(&trajectory, 200.min(cfg.steps), 1e-8);

    let csv_path = out_dir.join(format!("{name}.csv"));
    let mut file = fs::File::create(&csv_path)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    trajectory.write_csv(&mut file)?;

    let mut record = format!("run={name} landscape={} {outcome}", cfg.landscape);
    if trajectory.hit_unstable_fixed_point {
        record.push_str(" hit_unstable_fixed_point=true");
    }
    fs::write(out_dir.join(format!("{name}.outcome.txt")), format!("{record}\n"))?;

    if cfg.quasistatic_compare {
        let quasi = fig5_quasistatic(cfg)?;
        write_comparison_csv(&trajectory, &quasi, &out_dir.join(format!("{name}.quasistatic.csv")))?;
    }

    Ok(RunArtifacts { name: name.to_string(), trajectory, outcome, csv_path })
}

/// The quasistatic recurrence matching a valley config (currently the
/// single-valley preset landscape).
pub fn fig5_quasistatic(cfg: &ExperimentConfig) -> Result<QuasistaticRun> {
    if cfg.landscape != "fig5_valley" {
        bail!("quasistatic comparison is defined for the fig5_valley landscape");
    }
    let eta = cfg.schedule[0].1;
    let manifold_x0 = &cfg.x0[..cfg.x0.len() - 1];
    Ok(quasistatic_run(&f1_logquad(), &fig5_flatness(), manifold_x0, eta, cfg.steps))
}

/// CSV columns `step,x_full,x_quasi,abs_y_full,y_quasi`.
pub fn write_comparison_csv(full: &Trajectory, quasi: &QuasistaticRun, path: &Path) -> Result<()> {
    let n = full.len().min(quasi.states.len());
    let mut file = fs::File::create(path)?;
    writeln!(file, "step,x_full,x_quasi,abs_y_full,y_quasi")?;
    for t in 0..n {
        let s = &quasi.states[t];
        writeln!(
            file,
            "{t},{:.17e},{:.17e},{:.17e},{:.17e}",
            full.points[t][0],
            s.x[0],
            full.points[t][1].abs(),
            s.y
        )?;
    }
    // comparison metrics as a trailing comment line
    let cmp = compare_quasistatic(full, quasi);
    writeln!(file, "# max_rel_x={:.6e} max_rel_y={:.6e}", cmp.max_rel_x, cmp.max_rel_y)?;
    Ok(())
}

/// Execute a preset. Multi-run presets execute their runs in parallel.
pub fn run_preset(preset: &Preset, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    match &preset.kind {
        PresetKind::GdRuns(cfgs) => {
            if cfgs.len() == 1 {
                let art = run_config(&cfgs[0], out_dir, preset.id)?;
                return Ok(vec![art.csv_path]);
            }
            let results: Vec<Result<RunArtifacts>> = std::thread::scope(|scope| {
                let handles: Vec<_> = cfgs
                    .iter()
                    .map(|cfg| {
                        let name = format!("{}-decay{}", preset.id, cfg.schedule[1].0);
                        scope.spawn(move || run_config(cfg, out_dir, &name))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
            });
            results.into_iter().map(|r| r.map(|a| a.csv_path)).collect()
        }
        PresetKind::QuasistaticCompare(cfg) => {
            let art = run_config(cfg, out_dir, preset.id)?;
            Ok(vec![art.csv_path, out_dir.join(format!("{}.quasistatic.csv", preset.id))])
        }
        PresetKind::LossCurve1D { magnitudes, population_c, w_max, samples } => {
            let data = DataSet1D::new(magnitudes.clone())?;
            let piecewise = empirical_loss(&data);
            let population = f2_population(*population_c)?;
            let path = out_dir.join(format!("{}.csv", preset.id));
            let mut file = fs::File::create(&path)?;
            writeln!(file, "w,empirical,population")?;
            for i in 0..*samples {
                let w = -w_max + 2.0 * w_max * i as f64 / (*samples as f64 - 1.0);
                writeln!(file, "{w:.17e},{:.17e},{:.17e}", piecewise.eval(w), population.eval(w))?;
            }
            let seg_path = out_dir.join(format!("{}.segments.csv", preset.id));
            let mut seg_file = fs::File::create(&seg_path)?;
            piecewise.write_csv(&mut seg_file)?;
            Ok(vec![path, seg_path])
        }
        PresetKind::LossSurface2D { ratio, population_c, extent, samples } => {
            let data = DataSet1D::new(vec![1.0])?; // unused in population mode
            let surface = gdlab_core::dataloss::two_valley_from_data(
                &data,
                *ratio,
                gdlab_core::dataloss::DataLossMode::Population { c: *population_c },
            )?;
            let path = out_dir.join(format!("{}.csv", preset.id));
            let mut file = fs::File::create(&path)?;
            writeln!(file, "w1,w2,loss")?;
            for i in 0..*samples {
                let w1 = -extent + 2.0 * extent * i as f64 / (*samples as f64 - 1.0);
                for j in 0..*samples {
                    let w2 = -extent + 2.0 * extent * j as f64 / (*samples as f64 - 1.0);
                    writeln!(file, "{w1:.17e},{w2:.17e},{:.17e}", surface.eval(&[w1, w2]))?;
                }
            }
            Ok(vec![path])
        }
    }
}
