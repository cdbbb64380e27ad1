use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use arousal_core::embedding::GloveConfig;
use arousal_core::evalstats::TTest;
use arousal_core::lexicon::{ColumnMap, SeedConfig, Weighting};
use arousal_core::scoring::SeaAvg;
use serde::{Deserialize, Serialize};

/// Input locations. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Line-delimited JSON issues.
    pub corpus: Option<PathBuf>,
    /// General-purpose arousal norms (CSV or TSV).
    pub general_lexicon: Option<PathBuf>,
    /// Directory with WordNet `data.*`/`index.*` files.
    pub wordnet: Option<PathBuf>,
    /// Extra seeds, one `word,pole,source` per line.
    pub seed_list: Option<PathBuf>,
    /// Accept/reject decisions, one `word,accept|reject` per line.
    pub review: Option<PathBuf>,
    /// Existing domain lexicon used by `score` instead of the built one.
    pub sea_lexicon: Option<PathBuf>,
    pub work_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub embedding: GloveConfig,
    pub seeds: SeedConfig,
    pub general_columns: ColumnMap,
    /// Neighbors per seed during expansion and per row on the rating sheet.
    pub k: usize,
    pub min_count: u64,
    pub kappa_weighting: Weighting,
    pub sea_avg: SeaAvg,
    pub t_test: TTest,
    /// Shuffle rating-sheet rows with this seed instead of sorting them.
    pub sheet_shuffle_seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: Paths::default(),
            embedding: GloveConfig::default(),
            seeds: SeedConfig::default(),
            general_columns: ColumnMap::default(),
            k: 10,
            min_count: 5,
            kappa_weighting: Weighting::Linear,
            sea_avg: SeaAvg::TwiceLexiconMean,
            t_test: TTest::Welch,
            sheet_shuffle_seed: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(base) = path.parent() {
            cfg.paths.resolve_against(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.embedding.validate()?;
        let positive = [
            ("k", self.k as u64),
            ("min_count", self.min_count),
            ("seeds.n1", self.seeds.n1 as u64),
            ("seeds.n2", self.seeds.n2 as u64),
            ("seeds.f1", self.seeds.f1),
            ("seeds.f2", self.seeds.f2),
            ("embedding.epochs", self.embedding.epochs as u64),
        ];
        for (name, v) in positive {
            if v == 0 {
                bail!("config: {name} must be positive");
            }
        }
        if let SeaAvg::Fixed(v) = self.sea_avg {
            if !v.is_finite() {
                bail!("config: sea_avg must be finite");
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

impl Paths {
    fn resolve_against(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.general_lexicon,
            &mut self.wordnet,
            &mut self.seed_list,
            &mut self.review,
            &mut self.sea_lexicon,
            &mut self.work_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = PipelineConfig::default();
        let back: PipelineConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.embedding.dim, 300);
        assert_eq!(cfg.embedding.window, 10);
        assert_eq!((cfg.seeds.f1, cfg.seeds.f2), (100, 1000));
    }

    #[test]
    fn partial_file_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("arousal.toml");
        std::fs::write(
            &path,
            "k = 5\nsea_avg = \"dataset-mean\"\n[paths]\ncorpus = \"issues.jsonl\"\n[embedding]\ndim = 20\n",
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.embedding.dim, 20);
        assert_eq!(cfg.embedding.window, 10);
        assert_eq!(cfg.sea_avg, SeaAvg::DatasetMean);
        assert_eq!(cfg.paths.corpus, Some(dir.path().join("issues.jsonl")));
    }

    #[test]
    fn rejects_zero_and_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "k = 0\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
        std::fs::write(&path, "[paths]\ncorpse = \"x\"\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
    }
}
