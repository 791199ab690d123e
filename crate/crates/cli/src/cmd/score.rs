use affect_core::dataio::{load_model_file, read_container};
use affect_core::evalreport::{prompt_score_table, prompt_score_table_grids};
use affect_core::EmbeddingGrid;

use super::{require_input, require_output, write_text, Ctx};
use crate::args::ScoreArgs;
use crate::error::CliResult;

pub fn run(ctx: &Ctx, args: ScoreArgs) -> CliResult<()> {
    let model_path = ctx.model_path(args.model, "affect.afm");
    require_input(&model_path)?;
    require_input(&args.embeddings)?;
    if let Some(out) = &args.out {
        require_output(out)?;
    }
    let file = load_model_file(&model_path)?;
    let container = read_container(&args.embeddings)?;
    let keys = if args.keys.is_empty() {
        container.keys().to_vec()
    } else {
        args.keys
    };
    ctx.info(format_args!(
        "scoring {} rows with {}",
        keys.len(),
        model_path.display()
    ));

    let table = if file.is_ensemble() {
        let ensemble = file.into_ensemble()?;
        let grids = keys
            .iter()
            .map(|k| EmbeddingGrid::from_container(&container, k))
            .collect::<affect_core::Result<Vec<_>>>()?;
        prompt_score_table_grids(&ensemble, &grids)?
    } else {
        let model = file.into_single()?;
        let prompts = keys
            .iter()
            .map(|k| Ok((k.clone(), container.get(k)?.to_vec())))
            .collect::<affect_core::Result<Vec<_>>>()?;
        prompt_score_table(&model, &prompts)?
    };
    let text = if args.json {
        let mut s = serde_json::to_string_pretty(&table)?;
        s.push('\n');
        s
    } else {
        table.render()
    };
    match &args.out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
