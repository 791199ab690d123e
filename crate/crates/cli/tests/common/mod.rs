#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use affect_core::dataio::{
    save_ensemble, save_model, write_container, EmbeddingContainer, Scaler, TrainingMeta,
};
use affect_core::nn::{DenseLayer, Mlp};
use affect_core::{AffectModel, ChannelEnsemble, ModelKind, CHANNEL_DIM, GRID_CHANNELS, JOINT_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HEADER: &str = "Word,V.Mean.Sum,A.Mean.Sum,D.Mean.Sum,V.SD.Sum,A.SD.Sum,D.SD.Sum\n";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs the binary with a clean environment for the model directory.
pub fn affect(args: &[&str]) -> Output {
    affect_env(args, &[])
}

pub fn affect_env(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_affect"));
    cmd.args(args).env_remove("AFFECT_MODEL_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
pub fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        stdout(o),
        stderr(o)
    );
}

#[track_caller]
pub fn assert_exit(o: &Output, code: i32) {
    assert_eq!(
        o.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        stdout(o),
        stderr(o)
    );
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// One CSV line with the given survey-scale means and sds.
pub fn lexicon_line(word: &str, mean: [f64; 3], sd: [f64; 3]) -> String {
    format!(
        "{word},{},{},{},{},{},{}\n",
        mean[0], mean[1], mean[2], sd[0], sd[1], sd[2]
    )
}

/// `n` rated words `w00..` with random `(n, dim)` embeddings, plus a rated
/// word without an embedding (`orphan`) and one out-of-scale row.
pub fn word_fixture(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut r = rng(seed);
    let mut csv = HEADER.to_string();
    let mut keys = Vec::new();
    let mut rows = Vec::new();
    for i in 0..n {
        let word = format!("w{i:02}");
        let mean = [0; 3].map(|_| (r.gen_range(100..900) as f64) / 100.0);
        csv.push_str(&lexicon_line(&word, mean, [1.0; 3]));
        keys.push(word);
        rows.push(
            (0..JOINT_DIM)
                .map(|_| r.gen_range(-1.0f32..1.0))
                .collect::<Vec<_>>(),
        );
    }
    csv.push_str(&lexicon_line("orphan", [5.0; 3], [1.0; 3]));
    csv.push_str(&lexicon_line("offscale", [12.0, 5.0, 5.0], [1.0; 3]));
    let lexicon = dir.join("lexicon.csv");
    std::fs::write(&lexicon, csv).unwrap();
    let emb = dir.join("words.aec");
    write_container(&emb, &EmbeddingContainer::from_rows(keys, &rows).unwrap()).unwrap();
    (lexicon, emb)
}

/// `n` images `img00..` with ratings in a sidecar CSV.
pub fn image_fixture(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut r = rng(seed);
    let mut csv = HEADER.to_string();
    let mut keys = Vec::new();
    let mut rows = Vec::new();
    for i in 0..n {
        let key = format!("img{i:02}.jpg");
        let mean = [0; 3].map(|_| (r.gen_range(100..900) as f64) / 100.0);
        csv.push_str(&lexicon_line(&key, mean, [1.5; 3]));
        keys.push(key);
        rows.push(
            (0..JOINT_DIM)
                .map(|_| r.gen_range(-1.0f32..1.0))
                .collect::<Vec<_>>(),
        );
    }
    let vad = dir.join("images.csv");
    std::fs::write(&vad, csv).unwrap();
    let emb = dir.join("images.aec");
    write_container(&emb, &EmbeddingContainer::from_rows(keys, &rows).unwrap()).unwrap();
    (vad, emb)
}

/// Rated words with `(n, 77, 768)` prompt grids.
pub fn grid_fixture(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut r = rng(seed);
    let mut csv = HEADER.to_string();
    let mut keys = Vec::new();
    let mut data = Vec::new();
    for i in 0..n {
        let word = format!("g{i:02}");
        let mean = [0; 3].map(|_| (r.gen_range(100..900) as f64) / 100.0);
        csv.push_str(&lexicon_line(&word, mean, [1.0; 3]));
        keys.push(word);
        data.extend((0..GRID_CHANNELS * CHANNEL_DIM).map(|_| r.gen_range(-1.0f32..1.0)));
    }
    let lexicon = dir.join("grid_lexicon.csv");
    std::fs::write(&lexicon, csv).unwrap();
    let grids = dir.join("grids.aec");
    write_container(
        &grids,
        &EmbeddingContainer::new(vec![n, GRID_CHANNELS, CHANNEL_DIM], keys, data).unwrap(),
    )
    .unwrap();
    (lexicon, grids)
}

/// Prompt grids only, keyed by prompt text.
pub fn anchor_fixture(path: &Path, prompts: &[&str], seed: u64) {
    let mut r = rng(seed);
    let data = (0..prompts.len() * GRID_CHANNELS * CHANNEL_DIM)
        .map(|_| r.gen_range(-0.5f32..0.5))
        .collect();
    let keys = prompts.iter().map(|p| p.to_string()).collect();
    write_container(
        path,
        &EmbeddingContainer::new(vec![prompts.len(), GRID_CHANNELS, CHANNEL_DIM], keys, data)
            .unwrap(),
    )
    .unwrap();
}

/// Untrained small ensemble with unit scalers.
pub fn random_ensemble(path: &Path, seed: u64) -> ChannelEnsemble {
    let models = (0..GRID_CHANNELS)
        .map(|c| {
            AffectModel::new(
                Mlp::init(&[CHANNEL_DIM, 8, 3], seed * 1000 + c as u64).unwrap(),
                Scaler::unit(CHANNEL_DIM),
                Scaler::unit(3),
                ModelKind::Channel(c),
            )
            .unwrap()
        })
        .collect();
    let ensemble = ChannelEnsemble::new(models).unwrap();
    save_ensemble(path, &ensemble, &TrainingMeta::untrained()).unwrap();
    ensemble
}

/// Small random joint model.
pub fn random_model(path: &Path, seed: u64) -> AffectModel {
    let model = AffectModel::new(
        Mlp::init(&[JOINT_DIM, 16, 3], seed).unwrap(),
        Scaler::unit(JOINT_DIM),
        Scaler::unit(3),
        ModelKind::Joint,
    )
    .unwrap();
    save_model(path, &model, &TrainingMeta::untrained()).unwrap();
    model
}

/// Joint model whose `[0,1]` scores are the first three embedding
/// coordinates; targets are scaled from the 1..9 survey range.
pub fn copy_model(path: &Path) -> AffectModel {
    let mut w = vec![0.0f32; 3 * JOINT_DIM];
    for d in 0..3 {
        w[d * JOINT_DIM + d] = 1.0;
    }
    let model = AffectModel::new(
        Mlp::new(vec![DenseLayer::new(JOINT_DIM, 3, w, vec![0.0; 3]).unwrap()]).unwrap(),
        Scaler::unit(JOINT_DIM),
        Scaler::new(vec![1.0; 3], vec![9.0; 3]).unwrap(),
        ModelKind::Joint,
    )
    .unwrap();
    save_model(path, &model, &TrainingMeta::untrained()).unwrap();
    model
}

/// An embedding that `copy_model` scores as `score`.
pub fn copy_embedding(score: [f64; 3]) -> Vec<f32> {
    let mut e = vec![0.0f32; JOINT_DIM];
    for d in 0..3 {
        e[d] = score[d] as f32;
    }
    e
}
