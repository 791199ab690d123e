use affect_core::dataio::{save_ensemble, save_model, TrainingMeta};
use affect_core::predictor::{train_affect_model, train_channel_ensemble};
use affect_core::{ModelKind, GRID_CHANNELS};
use serde_json::json;

use super::{require_output, sibling, write_json, Annotated, Ctx};
use crate::args::TrainArgs;
use crate::error::{usage, CliResult};
use crate::settings::{train_config, TrainFlags};

pub fn run(ctx: &Ctx, args: TrainArgs) -> CliResult<()> {
    let ensemble = match args.channels {
        1 => false,
        GRID_CHANNELS => true,
        n => return usage(format!("--channels must be 1 or {GRID_CHANNELS}, got {n}")),
    };
    let config = train_config(
        &ctx.file,
        TrainFlags {
            epochs: args.epochs,
            dropout: args.dropout,
            train_fraction: args.train_fraction,
            lr: args.lr,
            batch_size: args.batch_size,
            seed: args.seed,
            eval_every: args.eval_every,
        },
    )?;
    if ensemble && args.data.images.is_some() {
        return usage("--images cannot be combined with --channels 77");
    }
    let out = ctx.model_path(
        args.out,
        if ensemble {
            "ensemble.afm"
        } else {
            "affect.afm"
        },
    );
    let report_path = args.report.unwrap_or_else(|| sibling(&out, "report.json"));
    Annotated::check_paths(&args.data)?;
    require_output(&out)?;
    require_output(&report_path)?;
    ctx.show_settings("training", &config);

    let data = Annotated::load(&args.data)?;
    let report = if ensemble {
        let (grids, summary) = data.grid()?;
        ctx.info(format_args!(
            "training {GRID_CHANNELS} channel models on {} words",
            summary.samples
        ));
        let (models, report) = train_channel_ensemble(&grids, &config)?;
        let losses: Vec<f64> = report
            .channels
            .iter()
            .filter_map(|c| c.final_train_loss)
            .collect();
        let meta = TrainingMeta {
            config: config.clone(),
            loss: (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64),
            test_mae: Some(report.mae_mean),
        };
        save_ensemble(&out, &models, &meta)?;
        println!(
            "ensemble of {GRID_CHANNELS}: {} train / {} test words, {} skipped",
            report.train_size,
            report.test_size,
            summary.skipped()
        );
        println!(
            "test mean error {:.4} ± {:.4} across channels (sample sd {:.4}), within 1 sd {:.4}",
            report.mae_mean, report.mae_std, report.mae_std_sample, report.within_sd_fraction
        );
        json!({ "model": out, "kind": "ensemble", "config": config, "data": summary, "training": report })
    } else {
        let (ds, summary) = data.joint()?;
        ctx.info(format_args!(
            "training joint model on {} samples",
            summary.samples
        ));
        let (model, report) = train_affect_model(&ds, ModelKind::Joint, &config)?;
        let meta = TrainingMeta {
            config: config.clone(),
            loss: report.final_train_loss(),
            test_mae: Some(report.test.mae),
        };
        save_model(&out, &model, &meta)?;
        ctx.debug(report.render());
        println!(
            "joint model: {} train / {} test samples, {} skipped",
            report.train_size,
            report.test_size,
            summary.skipped()
        );
        print!("{}", report.test.render());
        json!({ "model": out, "kind": "joint", "config": config, "data": summary, "training": report })
    };
    write_json(&report_path, &report)?;
    println!("model written to {}", out.display());
    Ok(())
}
