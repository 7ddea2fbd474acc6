//! Flat `key = value` pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use soundweave::corpus::DEFAULT_CHAPTER_MARKER;
use soundweave::fingerprint::FingerprintParams;
use soundweave::musicseg::MusicSegConfig;
use soundweave::refine::RefineParams;
use soundweave::textseg::DEFAULT_PARTITION_LEVEL;
use soundweave::weave::DEFAULT_CROSSFADE_MS;

use crate::CliError;

/// Input paths, keyed by config name.
const PATH_KEYS: &[(&str, bool)] = &[
    ("book", true),
    ("quotes", false),
    ("subtitles", true),
    ("transcript", true),
    ("shots", true),
    ("embeddings.paragraphs", true),
    ("embeddings.sentences", true),
    ("embeddings.frames", true),
    ("emotions", true),
    ("lexicon", true),
    ("stopwords", false),
    ("album_dir", true),
    ("movie_audio", true),
];

/// Every recognised parameter key with its default.
fn defaults() -> BTreeMap<&'static str, String> {
    let ms = MusicSegConfig::default();
    let rf = RefineParams::default();
    let fp = FingerprintParams::default();
    let mut d = BTreeMap::new();
    let mut put = |k: &'static str, v: String| {
        d.insert(k, v);
    };
    put("book_id", "book".into());
    put("chapter_marker", DEFAULT_CHAPTER_MARKER.into());
    put("out", "out".into());
    put("textseg.partition_level", DEFAULT_PARTITION_LEVEL.to_string());
    put("musicseg.window_s", ms.window_s.to_string());
    put("musicseg.overlap", ms.overlap.to_string());
    put("musicseg.kernel", ms.kernel.to_string());
    put("musicseg.taper_ratio", ms.taper_ratio.to_string());
    put("musicseg.threshold_k", ms.threshold_k.to_string());
    put("musicseg.min_len_s", ms.min_len_s.to_string());
    put("musicseg.silence_rms", ms.silence_rms.to_string());
    put("scenes.q", "auto".into());
    put("align.alpha", "1".into());
    put("refine.theta", rf.theta.to_string());
    put("refine.top_k", rf.top_k.to_string());
    put("refine.concreteness_threshold", rf.concreteness_threshold.to_string());
    put("refine.min_coverage", rf.min_coverage.to_string());
    put("fingerprint.sample_rate", fp.sample_rate.to_string());
    put("fingerprint.window", fp.window.to_string());
    put("fingerprint.hop", fp.hop.to_string());
    put("fingerprint.neighbourhood_frames", fp.neighbourhood_frames.to_string());
    put("fingerprint.neighbourhood_bins", fp.neighbourhood_bins.to_string());
    put("fingerprint.percentile", fp.percentile.to_string());
    put("fingerprint.fan_out", fp.fan_out.to_string());
    put("fingerprint.max_dt_s", fp.max_dt_s.to_string());
    put("fingerprint.max_df_bins", fp.max_df_bins.to_string());
    put("fingerprint.bin_shift", fp.bin_shift.to_string());
    put("fingerprint.min_hashes", fp.min_hashes.to_string());
    put("fingerprint.margin", fp.margin.to_string());
    put("fingerprint.min_query_s", fp.min_query_s.to_string());
    put("fingerprint.scan_window_s", fp.scan_window_s.to_string());
    put("fingerprint.scan_stride_s", fp.scan_stride_s.to_string());
    put("weave.seed", "0".into());
    put("weave.crossfade_ms", DEFAULT_CROSSFADE_MS.to_string());
    put("export.padding_ms", "50".into());
    d
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Resolved input paths; optional inputs may be absent.
    pub paths: BTreeMap<String, PathBuf>,
    /// Every parameter after defaults and overrides, as text.
    pub values: BTreeMap<String, String>,
    pub out_dir: PathBuf,
    pub book_id: String,
    pub chapter_marker: String,
    pub partition_level: usize,
    pub musicseg: MusicSegConfig,
    /// `None` derives the scene count from the shot count.
    pub scene_count: Option<usize>,
    pub alpha: f64,
    pub refine: RefineParams,
    pub fingerprint: FingerprintParams,
    pub seed: u64,
    pub crossfade_ms: u32,
    pub padding_ms: u32,
    /// Pre-made track log replacing the local matcher.
    pub log_import: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_value<T: std::str::FromStr>(values: &BTreeMap<String, String>, key: &str) -> Result<T, CliError> {
    let raw = &values[key];
    raw.parse()
        .map_err(|_| config_err(format!("{key}: cannot parse {raw:?}")))
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub log_import: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<PipelineConfig, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        PipelineConfig::parse(&raw, base, overrides)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(raw: &str, base: &Path, overrides: &Overrides) -> Result<PipelineConfig, CliError> {
        let mut values: BTreeMap<String, String> =
            defaults().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let mut paths = BTreeMap::new();
        let mut seen = std::collections::HashSet::new();
        for (n, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| config_err(format!("line {}: expected key = value", n + 1)))?;
            if !seen.insert(key.to_string()) {
                return Err(config_err(format!("line {}: duplicate key {key}", n + 1)));
            }
            if PATH_KEYS.iter().any(|(k, _)| *k == key) {
                paths.insert(key.to_string(), base.join(value));
            } else if values.contains_key(key) {
                values.insert(key.to_string(), value.to_string());
            } else {
                return Err(config_err(format!("line {}: unknown key {key}", n + 1)));
            }
        }
        for (key, required) in PATH_KEYS {
            match paths.get(*key) {
                None if *required => return Err(config_err(format!("missing required path {key}"))),
                Some(p) => {
                    let target = match *key {
                        k if k.starts_with("embeddings.") => p.with_extension("manifest"),
                        _ => p.clone(),
                    };
                    if !target.exists() {
                        return Err(config_err(format!("{key}: {} does not exist", target.display())));
                    }
                }
                None => {}
            }
        }
        if let Some(seed) = overrides.seed {
            values.insert("weave.seed".into(), seed.to_string());
        }
        let out_dir = match &overrides.out {
            Some(o) => o.clone(),
            None => base.join(&values["out"]),
        };
        if let Some(p) = &overrides.log_import {
            if !p.exists() {
                return Err(config_err(format!("--log-import: {} does not exist", p.display())));
            }
        }

        let musicseg = MusicSegConfig {
            window_s: parse_value(&values, "musicseg.window_s")?,
            overlap: parse_value(&values, "musicseg.overlap")?,
            kernel: parse_value(&values, "musicseg.kernel")?,
            taper_ratio: parse_value(&values, "musicseg.taper_ratio")?,
            threshold_k: parse_value(&values, "musicseg.threshold_k")?,
            min_len_s: parse_value(&values, "musicseg.min_len_s")?,
            silence_rms: parse_value(&values, "musicseg.silence_rms")?,
        };
        musicseg.validate().map_err(|e| config_err(format!("musicseg: {e}")))?;
        let refine = RefineParams {
            theta: parse_value(&values, "refine.theta")?,
            top_k: parse_value(&values, "refine.top_k")?,
            concreteness_threshold: parse_value(&values, "refine.concreteness_threshold")?,
            min_coverage: parse_value(&values, "refine.min_coverage")?,
        };
        if !(0.0..=1.0).contains(&refine.theta) || refine.top_k == 0 {
            return Err(config_err("refine.theta must be in [0, 1] and refine.top_k positive"));
        }
        if !(1.0..=5.0).contains(&refine.concreteness_threshold) || !(0.0..=1.0).contains(&refine.min_coverage) {
            return Err(config_err("refine.concreteness_threshold in [1, 5], refine.min_coverage in [0, 1]"));
        }
        let fingerprint = FingerprintParams {
            sample_rate: parse_value(&values, "fingerprint.sample_rate")?,
            window: parse_value(&values, "fingerprint.window")?,
            hop: parse_value(&values, "fingerprint.hop")?,
            neighbourhood_frames: parse_value(&values, "fingerprint.neighbourhood_frames")?,
            neighbourhood_bins: parse_value(&values, "fingerprint.neighbourhood_bins")?,
            percentile: parse_value(&values, "fingerprint.percentile")?,
            fan_out: parse_value(&values, "fingerprint.fan_out")?,
            max_dt_s: parse_value(&values, "fingerprint.max_dt_s")?,
            max_df_bins: parse_value(&values, "fingerprint.max_df_bins")?,
            bin_shift: parse_value(&values, "fingerprint.bin_shift")?,
            min_hashes: parse_value(&values, "fingerprint.min_hashes")?,
            margin: parse_value(&values, "fingerprint.margin")?,
            min_query_s: parse_value(&values, "fingerprint.min_query_s")?,
            scan_window_s: parse_value(&values, "fingerprint.scan_window_s")?,
            scan_stride_s: parse_value(&values, "fingerprint.scan_stride_s")?,
        };
        fingerprint.validate().map_err(|e| config_err(format!("fingerprint: {e}")))?;
        let partition_level: usize = parse_value(&values, "textseg.partition_level")?;
        if partition_level == 0 {
            return Err(config_err("textseg.partition_level must be at least 1"));
        }
        let scene_count = match values["scenes.q"].as_str() {
            "auto" => None,
            _ => match parse_value::<usize>(&values, "scenes.q")? {
                0 => return Err(config_err("scenes.q must be positive or auto")),
                q => Some(q),
            },
        };
        let alpha: f64 = parse_value(&values, "align.alpha")?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(config_err("align.alpha must be a non-negative number"));
        }
        regex::Regex::new(&values["chapter_marker"])
            .map_err(|e| config_err(format!("chapter_marker: {e}")))?;

        Ok(PipelineConfig {
            out_dir,
            book_id: values["book_id"].clone(),
            chapter_marker: values["chapter_marker"].clone(),
            partition_level,
            musicseg,
            scene_count,
            alpha,
            refine,
            fingerprint,
            seed: parse_value(&values, "weave.seed")?,
            crossfade_ms: parse_value(&values, "weave.crossfade_ms")?,
            padding_ms: parse_value(&values, "export.padding_ms")?,
            log_import: overrides.log_import.clone(),
            paths,
            values,
        })
    }

    pub fn path(&self, key: &str) -> Option<&Path> {
        self.paths.get(key).map(PathBuf::as_path)
    }

    /// A required input path.
    pub fn input(&self, key: &str) -> &Path {
        self.path(key).expect("required paths are checked at load")
    }

    pub fn album_index(&self) -> PathBuf {
        self.input("album_dir").join("album.tsv")
    }

    /// Parameter lines whose key starts with any of `prefixes`, for cache keys.
    pub fn params_text(&self, prefixes: &[&str]) -> String {
        self.values
            .iter()
            .filter(|(k, _)| prefixes.iter().any(|p| k.starts_with(p)))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

/// Config text for a corpus laid out by the fixture generator.
pub fn fixture_config(partition_level: usize) -> String {
    format!(
        "# mini-corpus\n\
         book_id = mini-corpus\n\
         book = book.txt\n\
         quotes = quotes.tsv\n\
         subtitles = subtitles.srt\n\
         transcript = transcript.txt\n\
         shots = shots.tsv\n\
         embeddings.paragraphs = embeddings/paragraphs\n\
         embeddings.sentences = embeddings/sentences\n\
         embeddings.frames = embeddings/frames\n\
         emotions = emotions.tsv\n\
         lexicon = lexicon.tsv\n\
         stopwords = stopwords.txt\n\
         album_dir = album\n\
         movie_audio = movie.wav\n\
         out = out\n\
         textseg.partition_level = {partition_level}\n\
         weave.seed = 7\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn files(dir: &Path) {
        for f in ["book.txt", "s.srt", "t.txt", "shots.tsv", "e.tsv", "l.tsv", "m.wav", "p.manifest"] {
            std::fs::write(dir.join(f), "").unwrap();
        }
        std::fs::create_dir_all(dir.join("album")).unwrap();
    }

    const MINIMAL: &str = "book = book.txt\nsubtitles = s.srt\ntranscript = t.txt\nshots = shots.tsv\n\
        embeddings.paragraphs = p\nembeddings.sentences = p\nembeddings.frames = p\n\
        emotions = e.tsv\nlexicon = l.tsv\nalbum_dir = album\nmovie_audio = m.wav\n";

    #[test]
    fn defaults_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        files(dir.path());
        let c = PipelineConfig::parse(
            &format!("{MINIMAL}refine.theta = 0.4\n# comment\n"),
            dir.path(),
            &Overrides {
                seed: Some(9),
                ..Overrides::default()
            },
        )
        .unwrap();
        assert_eq!(c.partition_level, 3);
        assert_eq!(c.musicseg.kernel, 64);
        assert_eq!(c.refine.theta, 0.4);
        assert_eq!(c.seed, 9);
        assert_eq!(c.scene_count, None);
        assert_eq!(c.out_dir, dir.path().join("out"));
        assert!(c.params_text(&["refine."]).contains("refine.theta=0.4\n"));
    }

    #[test]
    fn rejects_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        files(dir.path());
        let o = Overrides::default();
        for extra in [
            "bogus = 1\n",
            "musicseg.kernel = 63\n",
            "refine.theta = 1.5\n",
            "textseg.partition_level = 0\n",
            "quotes = nowhere.tsv\n",
            "book = again.txt\n",
        ] {
            assert!(
                PipelineConfig::parse(&format!("{MINIMAL}{extra}"), dir.path(), &o).is_err(),
                "{extra}"
            );
        }
        assert!(PipelineConfig::parse("book = book.txt\n", dir.path(), &o).is_err());
    }
}
