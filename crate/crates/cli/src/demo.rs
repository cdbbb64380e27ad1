//! Self-contained run on the synthetic corpus: writes the inputs a real
//! project would have, then drives every stage through the same code paths
//! as the individual subcommands.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use arousal_core::corpus::write_corpus;
use arousal_core::synth::{fill_sheet, generate, PlantedConfig, SyntheticRater};
use arousal_core::wordnet::write_wordnet;

use crate::config::{Paths, PipelineConfig};
use crate::pipeline::{Pipeline, SHEET};

/// Writes the demo inputs under `dir/input` and returns the config that
/// points at them. The config is also saved as `dir/input/config.toml`.
pub fn write_inputs(dir: &Path, issues_per_priority: usize) -> Result<PipelineConfig> {
    let planted = PlantedConfig::default();
    let mut synth = planted.synth.clone();
    synth.issues_per_priority = issues_per_priority;
    let data = generate(&synth);

    let input = dir.join("input");
    std::fs::create_dir_all(&input).with_context(|| format!("creating {}", input.display()))?;
    write_corpus(&input.join("issues.jsonl"), &data.issues)?;
    let mut general = String::from("Word,A.Mean.Sum,A.SD.Sum\n");
    for (w, e) in data.general.iter() {
        writeln!(general, "{w},{},{}", e.arousal, e.arousal_sd.unwrap_or(0.0)).unwrap();
    }
    std::fs::write(input.join("general.csv"), general)?;
    write_wordnet(&input.join("wordnet"), &data.wordnet)?;

    let cfg = PipelineConfig {
        paths: Paths {
            corpus: Some("issues.jsonl".into()),
            general_lexicon: Some("general.csv".into()),
            wordnet: Some("wordnet".into()),
            ..Paths::default()
        },
        embedding: planted.glove.clone(),
        seeds: planted.seeds,
        k: planted.k,
        min_count: planted.min_count,
        sea_avg: planted.sea_avg,
        t_test: planted.test,
        ..PipelineConfig::default()
    };
    let cfg_path = input.join("config.toml");
    std::fs::write(&cfg_path, cfg.to_toml())?;
    PipelineConfig::load(&cfg_path)
}

/// Runs every stage in `dir/work`, filling the rating sheet with two
/// simulated raters. Returns the printed report.
pub fn run(dir: &Path, issues_per_priority: usize) -> Result<String> {
    let cfg = write_inputs(dir, issues_per_priority)?;
    let mut synth = PlantedConfig::default().synth;
    synth.issues_per_priority = issues_per_priority;
    let truth = generate(&synth).truth;

    let mut pipe = Pipeline::open(cfg, dir.join("work"))?;
    let mut out = String::new();
    let mut log = |line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    log(pipe.ingest(None)?);
    log(pipe.train()?);
    log(pipe.seeds(None, None)?);
    log(pipe.expand(None)?);
    log(pipe.sheet(None, true, None)?);

    let sheet = std::fs::read_to_string(pipe.work_dir.join(SHEET))?;
    let mut specs = Vec::new();
    for rater in SyntheticRater::pair() {
        let path = dir.join("input").join(format!("sheet_{}.csv", rater.name));
        std::fs::write(&path, fill_sheet(&sheet, &rater, &truth))?;
        specs.push(format!("{}={}", rater.name, path.display()));
    }
    log(pipe.ratings(&specs)?);
    log(pipe.agreement(None)?);
    log(pipe.build()?);
    log(pipe.score(None, None)?);
    log(pipe.evaluate()?);
    Ok(out)
}
