use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound of the survey rating scale.
const SURVEY_MAX: f64 = 9.0;

/// Header names for the lexicon table. Defaults follow the published
/// Warriner et al. VAD norms CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconColumns {
    pub word: String,
    pub mean: [String; 3],
    pub sd: [String; 3],
}

impl Default for LexiconColumns {
    fn default() -> Self {
        Self {
            word: "Word".into(),
            mean: [
                "V.Mean.Sum".into(),
                "A.Mean.Sum".into(),
                "D.Mean.Sum".into(),
            ],
            sd: ["V.SD.Sum".into(), "A.SD.Sum".into(), "D.SD.Sum".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub word: String,
    /// Survey-scale means, `(V, A, D)`.
    pub mean: [f64; 3],
    /// Survey-scale standard deviations.
    pub sd: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReject {
    /// 1-based line number in the file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParsedLexicon {
    pub entries: Vec<LexiconEntry>,
    pub rejects: Vec<RowReject>,
}

impl ParsedLexicon {
    pub fn total_rows(&self) -> usize {
        self.entries.len() + self.rejects.len()
    }
}

pub fn parse_lexicon(path: &Path, columns: &LexiconColumns) -> Result<ParsedLexicon> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon_reader(file, columns)
}

/// Parses a comma-separated lexicon. Rows that fail to parse, fall outside
/// the rating scale, or repeat an earlier word are returned as rejects.
pub fn parse_lexicon_reader(reader: impl Read, columns: &LexiconColumns) -> Result<ParsedLexicon> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let word_col = find(&columns.word)?;
    let mean_cols = [
        find(&columns.mean[0])?,
        find(&columns.mean[1])?,
        find(&columns.mean[2])?,
    ];
    let sd_cols = [
        find(&columns.sd[0])?,
        find(&columns.sd[1])?,
        find(&columns.sd[2])?,
    ];

    let mut out = ParsedLexicon::default();
    let mut seen = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let line = record
            .as_ref()
            .ok()
            .and_then(|r| r.position())
            .map(|p| p.line())
            .unwrap_or(i as u64 + 2);
        let parsed = record
            .map_err(|e| e.to_string())
            .and_then(|r| parse_row(&r, word_col, &mean_cols, &sd_cols, columns));
        match parsed {
            Ok(entry) if !seen.insert(entry.word.clone()) => out.rejects.push(RowReject {
                line,
                reason: format!("duplicate word `{}`", entry.word),
            }),
            Ok(entry) => out.entries.push(entry),
            Err(reason) => out.rejects.push(RowReject { line, reason }),
        }
    }
    Ok(out)
}

fn parse_row(
    record: &csv::StringRecord,
    word_col: usize,
    mean_cols: &[usize; 3],
    sd_cols: &[usize; 3],
    columns: &LexiconColumns,
) -> std::result::Result<LexiconEntry, String> {
    let word = record
        .get(word_col)
        .filter(|w| !w.is_empty())
        .ok_or("empty word")?
        .to_string();
    let field = |col: usize, name: &str| -> std::result::Result<f64, String> {
        let raw = record
            .get(col)
            .ok_or_else(|| format!("missing field `{name}`"))?;
        let v: f64 = raw
            .parse()
            .map_err(|_| format!("`{name}`: cannot parse `{raw}` as a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{name}`: non-finite value"))
        }
    };
    let mut mean = [0.0; 3];
    let mut sd = [0.0; 3];
    for d in 0..3 {
        mean[d] = field(mean_cols[d], &columns.mean[d])?;
        sd[d] = field(sd_cols[d], &columns.sd[d])?;
        if !(0.0..=SURVEY_MAX).contains(&mean[d]) {
            return Err(format!(
                "`{}` = {} outside [0, 9]",
                columns.mean[d], mean[d]
            ));
        }
        if sd[d] < 0.0 {
            return Err(format!("`{}` = {} is negative", columns.sd[d], sd[d]));
        }
    }
    Ok(LexiconEntry { word, mean, sd })
}
