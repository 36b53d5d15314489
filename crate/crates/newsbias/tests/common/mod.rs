#![allow(dead_code)]

use std::path::{Path, PathBuf};

use newsbias::config::PipelineConfig;
use newsbias::synth::{generate_synthetic, SyntheticSpec, Truth};

pub struct Workspace {
    pub dir: tempfile::TempDir,
    pub truth: Truth,
}

impl Workspace {
    pub fn corpus(&self) -> PathBuf {
        self.dir.path().join("corpus")
    }

    pub fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    pub fn config(&self) -> PipelineConfig {
        config_for(&self.corpus(), &self.out(), &self.truth)
    }
}

pub fn config_for(corpus: &Path, out: &Path, truth: &Truth) -> PipelineConfig {
    PipelineConfig {
        inputs: vec![corpus.to_path_buf()],
        out_dir: out.to_path_buf(),
        networks: truth.networks.clone(),
        ..PipelineConfig::default()
    }
}

pub fn synthetic(spec: &SyntheticSpec) -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let truth = generate_synthetic(spec, &dir.path().join("corpus")).unwrap();
    Workspace { dir, truth }
}

/// Every regular file under `root`, relative path to contents.
pub fn snapshot(root: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut std::collections::BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = std::collections::BTreeMap::new();
    walk(root, root, &mut out);
    out
}
