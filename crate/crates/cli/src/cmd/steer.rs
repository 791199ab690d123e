use std::collections::BTreeMap;

use affect_core::dataio::{load_ensemble, read_container};
use affect_core::steering::{build_target, export_steered, steer_embedding, SteeredGrid};
use affect_core::EmbeddingGrid;
use serde_json::json;

use super::{require_input, require_output, sibling, write_json, Ctx};
use crate::args::SteerArgs;
use crate::error::CliResult;
use crate::settings::{steering_config, SteerFlags};

pub fn run(ctx: &Ctx, args: SteerArgs) -> CliResult<()> {
    let config = steering_config(
        &ctx.file,
        SteerFlags {
            lambda: args.target.lambda,
            lr: args.lr,
            max_steps: args.max_steps,
            tol: args.tol,
            seed: args.seed,
        },
    )?;
    let model_path = ctx.model_path(args.model, "ensemble.afm");
    let trace_path = args
        .trace
        .unwrap_or_else(|| sibling(&args.out, "trace.json"));
    require_input(&model_path)?;
    require_input(&args.anchor)?;
    require_output(&args.out)?;
    require_output(&trace_path)?;
    ctx.show_settings("steering", &config);

    let ensemble = load_ensemble(&model_path)?;
    let anchors = read_container(&args.anchor)?;
    let keys = if args.keys.is_empty() {
        anchors.keys().to_vec()
    } else {
        args.keys
    };
    let target = build_target(args.target.dim.into(), args.target.dir.into());

    let mut steered = Vec::with_capacity(keys.len());
    let mut runs = Vec::with_capacity(keys.len());
    for key in &keys {
        let anchor = EmbeddingGrid::from_container(&anchors, key)?;
        let result = steer_embedding(&ensemble, &anchor, &target, &config)?;
        let before = ensemble.score_grid_mean(&anchor)?;
        let after = ensemble.score_grid_mean(&result.z_star)?;
        let mut stops = BTreeMap::new();
        for s in &result.channel_stops {
            *stops
                .entry(serde_json::to_value(s)?.as_str().unwrap_or("?").to_string())
                .or_insert(0usize) += 1;
        }
        println!(
            "{key}: loss {:.6} -> {:.6} in {} steps, score {:.3}/{:.3}/{:.3} -> {:.3}/{:.3}/{:.3}",
            result.initial_loss(),
            result.final_loss(),
            result.trace.len() - 1,
            before.0[0],
            before.0[1],
            before.0[2],
            after.0[0],
            after.0[1],
            after.0[2],
        );
        ctx.info(format_args!("  channel stops: {stops:?}"));
        runs.push(json!({
            "key": key,
            "score_before": before.0,
            "score_after": after.0,
            "displacement": result.z_star.distance(&anchor),
            "channel_stops": stops,
            "trace": result.trace,
        }));
        steered.push(SteeredGrid::new(result.z_star, &target, config.lambda));
    }
    export_steered(&args.out, &steered, args.append)?;
    write_json(
        &trace_path,
        &json!({ "target": target.label(), "v0": target.v0.0, "config": config, "runs": runs }),
    )?;
    println!(
        "{} steered grids written to {}",
        steered.len(),
        args.out.display()
    );
    Ok(())
}
