pub mod eval;
pub mod penalty;
pub mod score;
pub mod steer;
pub mod train;

use std::fmt::Display;
use std::path::{Path, PathBuf};

use affect_core::dataio::{
    parse_lexicon, read_container, Dataset, EmbeddingContainer, GridDataset, LexiconColumns,
    ParsedLexicon, RowReject, SourceKind,
};
use serde::Serialize;

use crate::args::DataArgs;
use crate::error::{data, CliError, CliResult};
use crate::settings::FileSettings;

pub struct Ctx {
    pub file: FileSettings,
    pub verbose: u8,
    pub model_dir: PathBuf,
}

impl Ctx {
    pub fn info(&self, msg: impl Display) {
        if self.verbose >= 1 {
            eprintln!("{msg}");
        }
    }

    pub fn debug(&self, msg: impl Display) {
        if self.verbose >= 2 {
            eprintln!("{msg}");
        }
    }

    /// The given path, or `default_name` inside the model directory.
    pub fn model_path(&self, given: Option<PathBuf>, default_name: &str) -> PathBuf {
        given.unwrap_or_else(|| self.model_dir.join(default_name))
    }

    /// Prints every field of a resolved config as `key = value`.
    pub fn show_settings(&self, title: &str, config: &impl Serialize) {
        if self.verbose == 0 {
            return;
        }
        eprintln!("# {title}");
        if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(config) {
            for (k, v) in map {
                eprintln!("{k} = {v}");
            }
        }
    }
}

pub fn require_input(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        data(format!("input file {} does not exist", path.display()))
    }
}

pub fn require_output(path: &Path) -> CliResult<()> {
    if path.is_dir() {
        return data(format!("output path {} is a directory", path.display()));
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            data(format!("output directory {} does not exist", dir.display()))
        }
        _ => Ok(()),
    }
}

/// `dir/name.ext` becomes `dir/name.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// What survived the join between ratings and embeddings.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DataSummary {
    pub lexicon_rows: usize,
    pub lexicon_rejects: Vec<RowReject>,
    pub missing_embeddings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_rows: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub image_rejects: Vec<RowReject>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub missing_images: Vec<String>,
    pub samples: usize,
}

impl DataSummary {
    pub fn skipped(&self) -> usize {
        self.lexicon_rejects.len()
            + self.missing_embeddings.len()
            + self.image_rejects.len()
            + self.missing_images.len()
    }
}

pub struct Annotated {
    words: ParsedLexicon,
    embeddings: EmbeddingContainer,
    images: Option<(ParsedLexicon, EmbeddingContainer)>,
}

impl Annotated {
    pub fn check_paths(args: &DataArgs) -> CliResult<()> {
        require_input(&args.lexicon)?;
        require_input(&args.embeddings)?;
        for p in args.images.iter().chain(&args.image_vad) {
            require_input(p)?;
        }
        Ok(())
    }

    pub fn load(args: &DataArgs) -> CliResult<Self> {
        let columns = LexiconColumns::default();
        let images = match (&args.images, &args.image_vad) {
            (Some(emb), Some(vad)) => Some((parse_lexicon(vad, &columns)?, read_container(emb)?)),
            _ => None,
        };
        Ok(Self {
            words: parse_lexicon(&args.lexicon, &columns)?,
            embeddings: read_container(&args.embeddings)?,
            images,
        })
    }

    fn summary(&self) -> DataSummary {
        DataSummary {
            lexicon_rows: self.words.total_rows(),
            lexicon_rejects: self.words.rejects.clone(),
            image_rows: self.images.as_ref().map(|(l, _)| l.total_rows()),
            image_rejects: self
                .images
                .as_ref()
                .map(|(l, _)| l.rejects.clone())
                .unwrap_or_default(),
            ..Default::default()
        }
    }

    /// Words first, then images, in file order.
    pub fn joint(&self) -> CliResult<(Dataset, DataSummary)> {
        let mut summary = self.summary();
        let (mut ds, missing) =
            Dataset::from_entries(&self.words.entries, &self.embeddings, SourceKind::Word)?;
        summary.missing_embeddings = missing;
        if let Some((vad, emb)) = &self.images {
            let (img, missing) = Dataset::from_entries(&vad.entries, emb, SourceKind::Image)?;
            ds.extend(img)?;
            summary.missing_images = missing;
        }
        if ds.is_empty() {
            return data("no lexicon entry has an embedding");
        }
        summary.samples = ds.len();
        Ok((ds, summary))
    }

    pub fn grid(&self) -> CliResult<(GridDataset<'_>, DataSummary)> {
        if self.images.is_some() {
            return Err(CliError::Usage(
                "image data cannot be used with a channel ensemble".into(),
            ));
        }
        let mut summary = self.summary();
        let (ds, missing) = GridDataset::from_entries(&self.words.entries, &self.embeddings)?;
        summary.missing_embeddings = missing;
        if ds.is_empty() {
            return data("no lexicon entry has a prompt grid");
        }
        summary.samples = ds.len();
        Ok((ds, summary))
    }
}
