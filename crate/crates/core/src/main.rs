use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use mfagl::aggl::{train_observed, write_predictions, GranularPrediction, MfAglModel};
use mfagl::baselines::LagSchema;
use mfagl::geofeatures::io::{read_pois, read_trajectories, write_geofeatures, GEOFEATURES_FILE};
use mfagl::geofeatures::{daily_geo_rows, daily_visit_counts, visits_to_features};
use mfagl::harness::{
    evaluate_models, export_choropleth, forecast_ar, forecast_rf, read_geometries, schedule_run, Availability,
    ChoroplethExport, EvalConfig, RunConfig,
};
use mfagl::regions::io::{read_panel, write_features, FEATURES_FILE};
use mfagl::regions::{AreaId, Period};
use mfagl::synth::{generate_world, write_world};
use mfagl::{Error, Result};

/// Mixed-frequency aggregate learning: granular nowcasts from coarse labels.
#[derive(Parser)]
#[command(name = "mfagl", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set rf.n_trees=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world with known granular truth.
    Simulate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn GPS trajectories into geo-features and daily visit counts.
    ExtractFeatures {
        #[arg(long)]
        trajectories: PathBuf,
        #[arg(long)]
        pois: PathBuf,
        /// Receives geofeatures.csv and features.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train MF-AGL on a panel directory and write a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Drop labels from this month (YYYY-MM) on before training.
        #[arg(long)]
        holdout: Option<Period>,
    },
    /// Nowcast the month of `--as-of` using only data public on that day.
    Nowcast {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        as_of: NaiveDate,
        /// Granular predictions CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hold out a month, fit AR, RF and MF-AGL, and report MAPE.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        /// Month to score (YYYY-MM); the newest labeled month by default.
        #[arg(long)]
        holdout: Option<Period>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also save the trained MF-AGL model.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Forecast one month with a baseline from the labels before it.
    Baseline {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        model: BaselineKind,
        /// Month to forecast (YYYY-MM); the month after the newest label by default.
        #[arg(long)]
        target: Option<Period>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write per-area nowcasts or year-over-year changes as GeoJSON.
    ExportMap {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        as_of: NaiveDate,
        #[arg(long, value_enum, default_value = "yoy")]
        metric: MapMetric,
        /// GeoJSON whose features carry a `small_area_id` property.
        #[arg(long)]
        geometry: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Ar,
    Rf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapMetric {
    Yoy,
    Nowcast,
}

fn print_areas(title: &str, values: &BTreeMap<AreaId, f64>) {
    println!("{title}");
    for (a, v) in values {
        println!("  {a:<12} {v:>12.3}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = RunConfig::load(cli.common.config.as_deref(), &cli.common.overrides)?;
    println!("# resolved config\n{}", config.to_toml());
    println!("seed: {}", config.seed);

    match cli.command {
        Command::Simulate { out } => {
            let world = generate_world(&config.world_config())?;
            write_world(&out, &world)?;
            println!(
                "wrote {} small areas, {} labels, {} feature rows to {}",
                world.panel.hierarchy.small_areas().len(),
                world.panel.labels.len(),
                world.panel.features.len(),
                out.display()
            );
        }
        Command::ExtractFeatures { trajectories, pois, out } => {
            let trajs = read_trajectories(&trajectories)?;
            let offices = read_pois(&pois)?;
            std::fs::create_dir_all(&out)?;
            let rows = daily_geo_rows(&trajs, &offices, &config.geo.features)?;
            write_geofeatures(&out.join(GEOFEATURES_FILE), &rows)?;
            let counts = daily_visit_counts(&trajs, &offices, &config.visit_rule(), &config.geo.features)?;
            write_features(&out.join(FEATURES_FILE), &visits_to_features(&counts))?;
            println!("{} geo-feature rows, {} office-days with visits", rows.len(), counts.len());
        }
        Command::Train {
            data,
            checkpoint,
            holdout,
        } => {
            let mut panel = read_panel(&data)?;
            if let Some(t) = holdout {
                panel = panel.without_labels_from(t);
            }
            let train_config = config.train_config();
            let epochs = train_config.epochs;
            let trained = train_observed(&panel, &panel.labels, &train_config, |e, _| {
                if e.epoch % 50 == 0 || e.epoch == epochs {
                    println!("epoch {} loss {:.6e}", e.epoch, e.loss);
                }
            })?;
            trained.model.save(&checkpoint)?;
            println!("checkpoint written to {}", checkpoint.display());
        }
        Command::Nowcast {
            data,
            checkpoint,
            as_of,
            out,
        } => {
            let panel = read_panel(&data)?;
            let model = MfAglModel::load(&checkpoint)?;
            let run = schedule_run(&panel, Some(&model), as_of, &config.schedule_config())?;
            println!("nowcasting {} as of {}", run.target, run.as_of);
            match run.newest_released {
                Some(t) => println!("newest released label: {t}"),
                None => println!("no labels released yet"),
            }
            for (name, a) in [("AR", &run.ar), ("RF", &run.rf)] {
                match a {
                    Availability::Available(v) => print_areas(name, v),
                    Availability::Unavailable(why) => println!("{name}: unavailable ({why})"),
                }
            }
            let (granular, totals) = run.mfagl.expect("model given");
            print_areas("MF-AGL", &totals);
            if let Some(path) = out {
                let preds: Vec<GranularPrediction> = granular
                    .into_iter()
                    .map(|(q, value)| GranularPrediction {
                        small_area: q,
                        as_of,
                        period: run.target,
                        value,
                    })
                    .collect();
                write_predictions(&path, &preds)?;
                println!("granular predictions written to {}", path.display());
            }
        }
        Command::Evaluate {
            data,
            holdout,
            report,
            checkpoint,
        } => {
            let panel = read_panel(&data)?;
            let eval = evaluate_models(
                &panel,
                &EvalConfig {
                    train: config.train_config(),
                    baselines: config.baseline_config(),
                    holdout,
                },
            )?;
            print!("{}", eval.report.table());
            if let Some(path) = report {
                eval.report.write_csv(&path)?;
                println!("report written to {}", path.display());
            }
            if let Some(path) = checkpoint {
                eval.model.save(&path)?;
                println!("checkpoint written to {}", path.display());
            }
        }
        Command::Baseline {
            data,
            model,
            target,
            out,
        } => {
            let panel = read_panel(&data)?;
            let target = match target {
                Some(t) => t,
                None => panel.labeled_periods().last().ok_or(Error::NoLabels)?.next(),
            };
            let labels = panel.without_labels_from(target).labels;
            let baselines = config.baseline_config();
            let values = match model {
                BaselineKind::Ar => forecast_ar(&labels, panel.hierarchy.large_areas(), target, &baselines)?,
                BaselineKind::Rf => {
                    forecast_rf(&labels, &LagSchema::from_panel(&panel, baselines.lag_order), target, &baselines)?
                }
            };
            print_areas(&format!("forecast for {target}"), &values);
            if let Some(path) = out {
                let mut s = String::from("period,large_area_id,value\n");
                for (p, v) in &values {
                    s.push_str(&format!("{target},{p},{v}\n"));
                }
                std::fs::write(&path, s)?;
            }
        }
        Command::ExportMap {
            data,
            checkpoint,
            as_of,
            metric,
            geometry,
            out,
        } => {
            let panel = read_panel(&data)?;
            let model = MfAglModel::load(&checkpoint)?;
            let features = panel.features.truncated(as_of);
            let mut values = BTreeMap::new();
            for q in model.hierarchy.small_areas() {
                let v = match metric {
                    MapMetric::Yoy => model.year_over_year(&features, q.as_str(), as_of)?,
                    MapMetric::Nowcast => model.predict_at(&features, q.as_str(), as_of)?,
                };
                values.insert(q.clone(), v);
            }
            let geometries = geometry.as_deref().map(read_geometries).transpose()?;
            let export = ChoroplethExport {
                metric: match metric {
                    MapMetric::Yoy => "yoy",
                    MapMetric::Nowcast => "nowcast",
                }
                .to_owned(),
                values,
            };
            let warnings = export_choropleth(&export, geometries.as_ref(), &out)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            println!("{} areas written to {}", export.values.len(), out.display());
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
