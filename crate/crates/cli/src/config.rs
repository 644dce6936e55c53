use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kmodel_core::pipeline::PipelineConfig;
use kmodel_core::topic::{Lexicon, StopWords};
use kmodel_core::KnowledgeTree;

pub fn load(path: Option<&Path>) -> Result<PipelineConfig> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let raw = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&raw).with_context(|| format!("parsing config {}", path.display()))
}

pub fn require<'a>(value: Option<&'a PathBuf>, what: &str, flag: &str) -> Result<&'a PathBuf> {
    value.with_context(|| format!("no {what} given; pass {flag} or set it in the config file"))
}

pub fn read_tree(path: &Path) -> Result<KnowledgeTree> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading tree {}", path.display()))?;
    KnowledgeTree::parse(&raw).with_context(|| format!("invalid tree {}", path.display()))
}

pub fn read_stopwords(path: Option<&PathBuf>) -> Result<StopWords> {
    match path {
        Some(p) => Ok(StopWords::parse(
            &fs::read_to_string(p).with_context(|| format!("reading stopwords {}", p.display()))?,
        )),
        None => Ok(StopWords::default()),
    }
}

/// The configured lexicon file merged with the tree's multi-word points.
pub fn read_lexicon(path: Option<&PathBuf>, tree: Option<&KnowledgeTree>) -> Result<Lexicon> {
    let mut lex = match path {
        Some(p) => Lexicon::parse(&fs::read_to_string(p).with_context(|| format!("reading lexicon {}", p.display()))?),
        None => Lexicon::default(),
    };
    if let Some(tree) = tree {
        lex.extend(&Lexicon::from_tree(tree));
    }
    Ok(lex)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/kmodel.toml");
        let cfg = load(Some(&path)).unwrap();
        cfg.validate().unwrap();
        let defaults = PipelineConfig::default();
        assert_eq!(cfg.sessions, defaults.sessions);
        assert_eq!(cfg.lda, defaults.lda);
        assert_eq!(cfg.retention, defaults.retention);
        assert_eq!(cfg.top_m, defaults.top_m);
        assert!(cfg.paths.tree.is_some());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.toml");
        fs::write(&path, "[sessions]\nidle_treshold_s = 10\n").unwrap();
        assert!(load(Some(&path)).is_err());
    }
}
