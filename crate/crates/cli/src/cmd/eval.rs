use affect_core::dataio::{load_model_file, split_indices, Dataset};
use affect_core::evalreport::evaluate;
use affect_core::predictor::{ChannelSummary, EnsembleReport};
use serde_json::json;

use super::{require_input, require_output, write_json, Annotated, Ctx};
use crate::args::{EvalArgs, SplitArg};
use crate::error::CliResult;

pub fn run(ctx: &Ctx, args: EvalArgs) -> CliResult<()> {
    let model_path = ctx.model_path(args.model, "affect.afm");
    require_input(&model_path)?;
    Annotated::check_paths(&args.data)?;
    if let Some(p) = &args.report {
        require_output(p)?;
    }
    let file = load_model_file(&model_path)?;
    let fraction = args
        .train_fraction
        .unwrap_or(file.training.config.train_fraction);
    let seed = args.seed.unwrap_or(file.training.config.seed);
    if args.split == SplitArg::Test {
        ctx.info(format_args!(
            "# split\ntrain_fraction = {fraction}\nseed = {seed}"
        ));
    }
    let pick = |ds: Dataset| -> CliResult<Dataset> {
        Ok(match args.split {
            SplitArg::All => ds,
            SplitArg::Test => ds.subset(&split_indices(ds.len(), fraction, seed)?.1),
        })
    };
    let data = Annotated::load(&args.data)?;

    let (report, text) = if file.is_ensemble() {
        let ensemble = file.into_ensemble()?;
        let (grids, summary) = data.grid()?;
        let mut channels = Vec::with_capacity(ensemble.models().len());
        let mut size = 0;
        for (c, model) in ensemble.models().iter().enumerate() {
            let test = pick(grids.channel(c)?)?;
            size = test.len();
            let r = evaluate(model, &test)?;
            channels.push(ChannelSummary {
                channel: c,
                final_train_loss: None,
                test_mae: r.mae,
                within_sd_fraction: r.within_sd_fraction,
            });
        }
        let report = EnsembleReport::from_summaries(channels, summary.samples - size, size);
        let mut text = format!(
            "{:>7}  {:>10}  {:>10}\n",
            "channel", "mean_err", "within_sd"
        );
        for c in &report.channels {
            text.push_str(&format!(
                "{:>7}  {:>10.4}  {:>10.4}\n",
                c.channel, c.test_mae, c.within_sd_fraction
            ));
        }
        text.push_str(&format!(
            "{size} items; mean error {:.4} ± {:.4} (population) / ± {:.4} (sample); within 1 sd {:.4}\n",
            report.mae_mean, report.mae_std, report.mae_std_sample, report.within_sd_fraction
        ));
        (
            json!({ "kind": "ensemble", "data": summary, "report": report }),
            text,
        )
    } else {
        let model = file.into_single()?;
        let (ds, summary) = data.joint()?;
        let report = evaluate(&model, &pick(ds)?)?;
        let text = report.render();
        (
            json!({ "kind": "joint", "data": summary, "report": report }),
            text,
        )
    };
    if let Some(p) = &args.report {
        write_json(p, &report)?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{text}");
    }
    Ok(())
}
