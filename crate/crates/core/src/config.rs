//! Flat `key = value` run configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{config_err, Error, Result};
use crate::metrics::Metric;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub manifest: Option<PathBuf>,
    pub clean_dir: Option<PathBuf>,
    pub rir_dir: Option<PathBuf>,
    pub mixture_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub metrics: Option<Vec<Metric>>,
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| config_err!("{key}: cannot parse {v:?}"))
}

impl RunConfig {
    /// Parses config text; relative paths are joined onto `base`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut c = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err!("line {}: expected key = value", lineno + 1))?;
            let (key, v) = (key.trim(), value.trim());
            let path = || base.join(v);
            let t = &mut c.train;
            match key {
                "q_order" => t.q_order = num(key, v)?,
                "batch_size" => t.batch_size = num(key, v)?,
                "max_iterations" => t.max_iterations = num(key, v)?,
                "lr_g" => t.lr_g = num(key, v)?,
                "lr_d" => t.lr_d = num(key, v)?,
                "lambda_td" => t.lambda_td = num(key, v)?,
                "lambda_fd" => t.lambda_fd = num(key, v)?,
                "seed" => t.seed = num(key, v)?,
                "validate_every" => t.validate_every = num(key, v)?,
                "checkpoint_dir" => t.checkpoint_dir = Some(path()),
                "manifest" => c.manifest = Some(path()),
                "clean_dir" => c.clean_dir = Some(path()),
                "rir_dir" => c.rir_dir = Some(path()),
                "mixture_dir" => c.mixture_dir = Some(path()),
                "out_dir" => c.out_dir = Some(path()),
                "metrics" => c.metrics = Some(Metric::parse_list(v)?),
                other => return Err(config_err!("line {}: unknown key {other:?}", lineno + 1)),
            }
        }
        c.train.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_resolves_paths() {
        let text = "# toy run\nq_order = 2\nbatch_size=4\nlr_g = 5e-4\nmanifest = data/manifest.jsonl\nmetrics = sdr,stoi\n\n";
        let c = RunConfig::parse(text, Path::new("/runs/a")).unwrap();
        assert_eq!(c.train.q_order, 2);
        assert_eq!(c.train.batch_size, 4);
        assert_eq!(c.train.lr_g, 5e-4);
        assert_eq!(c.train.lr_d, 2e-3);
        assert_eq!(c.manifest, Some(PathBuf::from("/runs/a/data/manifest.jsonl")));
        assert_eq!(c.metrics, Some(vec![Metric::Sdr, Metric::Stoi]));
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(matches!(RunConfig::parse("epochs = 3", Path::new("")), Err(Error::Config(_))));
        assert!(RunConfig::parse("batch_size = 0", Path::new("")).is_err());
        assert!(RunConfig::parse("lr_g = fast", Path::new("")).is_err());
        assert!(RunConfig::parse("just words", Path::new("")).is_err());
    }
}
