use affect_core::dataio::{load_model, read_container, write_container, EmbeddingContainer};
use affect_core::steering::{affect_penalty, build_target};
use affect_core::SteeringConfig;
use serde_json::json;

use super::{require_input, require_output, Ctx};
use crate::args::PenaltyArgs;
use crate::error::CliResult;

pub fn run(ctx: &Ctx, args: PenaltyArgs) -> CliResult<()> {
    let lambda = ctx.file.pick(
        args.target.lambda,
        "lambda",
        SteeringConfig::default().lambda,
    )?;
    let model_path = ctx.model_path(args.model, "affect.afm");
    require_input(&model_path)?;
    require_input(&args.embeddings)?;
    require_output(&args.out)?;
    ctx.info(format_args!("# penalty\nlambda = {lambda}"));

    let model = load_model(&model_path)?;
    let container = read_container(&args.embeddings)?;
    let embedding: Vec<f64> = container
        .get(&args.key)?
        .iter()
        .map(|&x| x as f64)
        .collect();
    let target = build_target(args.target.dim.into(), args.target.dir.into());
    let (loss, grad) = affect_penalty(&model, &embedding, &target, lambda)?;
    let score = model.score(&embedding)?;

    let grad32: Vec<f32> = grad.iter().map(|&g| g as f32).collect();
    let out = EmbeddingContainer::from_rows(vec![args.key.clone()], &[grad32])?
        .with_meta("loss", json!(loss))
        .with_meta("lambda", json!(lambda))
        .with_meta("target", json!(target.label()))
        .with_meta("v0", json!(target.v0.0))
        .with_meta("score", json!(score.0));
    write_container(&args.out, &out)?;
    println!(
        "{}: penalty {loss:.6e} (score {:.4}/{:.4}/{:.4})",
        args.key, score.0[0], score.0[1], score.0[2]
    );
    Ok(())
}
