//! Pipeline configuration: one TOML file, `KSUM_*` environment overrides,
//! then command-line flags.

use std::path::{Path, PathBuf};

use ksum_core::encoder::MockEncoder;
use ksum_core::rewriter::{AblationFlags, DecodeOptions, ToyConfig};
use ksum_core::selector::SelectorHyper;
use ksum_core::{LinkPolicy, LinkerConfig, Split};
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "KSUM_";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub link_policy: LinkPolicy,
    pub paths: Paths,
    pub oracle: OracleSection,
    pub encoder: EncoderSection,
    pub linker: LinkerSection,
    pub ner: NerSection,
    pub selector: SelectorSection,
    pub rewriter: RewriterSection,
    pub ablation: AblationFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// A games file, or a directory with `train/dev/test.jsonl`.
    pub games: Option<PathBuf>,
    pub split: Split,
    pub players: Option<PathBuf>,
    pub cards: Option<PathBuf>,
    pub teams: Option<PathBuf>,
    pub links: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            games: None,
            split: Split::All,
            players: None,
            cards: None,
            teams: None,
            links: None,
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    #[default]
    TokenF1,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub similarity: SimilarityKind,
    pub window_span: u32,
    /// Replaces the built-in minute-marker patterns.
    pub patterns: Option<Vec<String>>,
    pub max_leading: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            similarity: SimilarityKind::default(),
            window_span: 3,
            patterns: None,
            max_leading: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub dim: usize,
    pub max_len: usize,
    pub context_weight: f64,
}

impl Default for EncoderSection {
    fn default() -> Self {
        let m = MockEncoder::default();
        Self {
            dim: m.dim,
            max_len: m.max_len,
            context_weight: m.context_weight,
        }
    }
}

impl EncoderSection {
    pub fn build(&self) -> MockEncoder {
        MockEncoder {
            dim: self.dim,
            max_len: self.max_len,
            context_weight: self.context_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkerSection {
    pub lambda_p: f64,
    pub lambda_o: f64,
    pub case_fold: bool,
}

impl Default for LinkerSection {
    fn default() -> Self {
        let l = LinkerConfig::default();
        Self {
            lambda_p: l.lambda_p,
            lambda_o: l.lambda_o,
            case_fold: l.case_fold,
        }
    }
}

impl LinkerSection {
    pub fn build(&self) -> LinkerConfig {
        LinkerConfig {
            lambda_p: self.lambda_p,
            lambda_o: self.lambda_o,
            case_fold: self.case_fold,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NerSection {
    /// Extra gazetteer entries as `[name, label]`.
    pub aliases: Vec<(String, String)>,
    /// JSON map from sentence to tagged spans; replaces the gazetteer.
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorSection {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub tau: f64,
    pub pos_weight: Option<f64>,
}

impl Default for SelectorSection {
    fn default() -> Self {
        let h = SelectorHyper::default();
        Self {
            lr: h.lr,
            epochs: h.epochs,
            batch_size: h.batch_size,
            tau: h.tau,
            pos_weight: h.pos_weight,
        }
    }
}

impl SelectorSection {
    pub fn hyper(&self, seed: u64) -> SelectorHyper {
        SelectorHyper {
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            tau: self.tau,
            pos_weight: self.pos_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriterBackend {
    #[default]
    Toy,
    /// Copies the commentary sentence; no training.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewriterSection {
    pub backend: RewriterBackend,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub model: ToyConfig,
    pub max_len: usize,
    pub beam_width: usize,
}

impl Default for RewriterSection {
    fn default() -> Self {
        let h = ksum_core::rewriter::RewriterHyper::default();
        let d = DecodeOptions::default();
        Self {
            backend: RewriterBackend::default(),
            lr: h.lr,
            epochs: h.epochs,
            batch_size: h.batch_size,
            model: h.model,
            max_len: d.max_len,
            beam_width: d.beam_width,
        }
    }
}

impl RewriterSection {
    pub fn hyper(&self, seed: u64) -> ksum_core::rewriter::RewriterHyper {
        ksum_core::rewriter::RewriterHyper {
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            model: self.model.clone(),
        }
    }

    pub fn decode(&self) -> DecodeOptions {
        DecodeOptions {
            max_len: self.max_len,
            beam_width: self.beam_width,
        }
    }
}

/// Flag values that win over file and environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub no_segment: bool,
    pub no_knowledge: bool,
    pub lenient: bool,
}

/// Parses an environment value as a TOML value, falling back to a string.
fn env_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `KSUM_SECTION__KEY=value` pairs; `__` separates nesting levels.
pub fn apply_env<I>(table: &mut toml::Table, vars: I) -> Result<(), String>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<_> = vars
        .into_iter()
        .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (k.to_lowercase(), v)))
        .collect();
    vars.sort();
    for (key, raw) in vars {
        let parts: Vec<&str> = key.split("__").collect();
        let (last, sections) = parts.split_last().expect("split yields one part");
        let mut cur = &mut *table;
        for s in sections {
            let entry = cur
                .entry(s.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = entry
                .as_table_mut()
                .ok_or_else(|| format!("{ENV_PREFIX}{}: `{s}` is not a section", key.to_uppercase()))?;
        }
        cur.insert(last.to_string(), env_value(&raw));
    }
    Ok(())
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Reads the file (if any), applies environment overrides and flags, and
    /// resolves relative paths against the file's directory.
    pub fn load<I>(file: Option<&Path>, env: I, flags: &Overrides) -> Result<Self, Vec<String>>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
                toml::from_str::<toml::Table>(&text).map_err(|e| vec![format!("{}: {e}", path.display())])?
            }
            None => toml::Table::new(),
        };
        apply_env(&mut table, env).map_err(|e| vec![e])?;
        let mut cfg: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| vec![format!("configuration: {e}")])?;

        if let Some(seed) = flags.seed {
            cfg.seed = seed;
        }
        cfg.ablation.no_segment |= flags.no_segment;
        cfg.ablation.no_knowledge |= flags.no_knowledge;
        if flags.lenient {
            cfg.link_policy = LinkPolicy::Lenient;
        }

        let base = file
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let p = &mut cfg.paths;
        for path in [&mut p.games, &mut p.players, &mut p.cards, &mut p.teams, &mut p.links].into_iter().flatten() {
            resolve(&base, path);
        }
        if let Some(path) = &mut cfg.ner.predictions {
            resolve(&base, path);
        }
        match &flags.output {
            Some(out) => p.output = out.clone(),
            None => resolve(&base, &mut p.output),
        }
        Ok(cfg)
    }

    /// Every problem with the values, independent of subcommand.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if let Err(e) = self.linker.build().validate() {
            errs.push(e.to_string());
        }
        let s = &self.selector;
        if !(s.tau > 0.0 && s.tau < 1.0) {
            errs.push(format!("selector.tau = {} must lie in (0, 1)", s.tau));
        }
        if !(s.lr > 0.0) {
            errs.push(format!("selector.lr = {} must be positive", s.lr));
        }
        if s.batch_size == 0 {
            errs.push("selector.batch_size must be positive".into());
        }
        if s.pos_weight.is_some_and(|w| !(w > 0.0)) {
            errs.push("selector.pos_weight must be positive".into());
        }
        let r = &self.rewriter;
        if !(r.lr > 0.0) {
            errs.push(format!("rewriter.lr = {} must be positive", r.lr));
        }
        if r.batch_size == 0 {
            errs.push("rewriter.batch_size must be positive".into());
        }
        if r.max_len == 0 || r.beam_width == 0 {
            errs.push("rewriter.max_len and rewriter.beam_width must be positive".into());
        }
        let m = &r.model;
        if m.embed_dim == 0 || m.hidden == 0 || m.max_input_len == 0 || m.max_output_len < 2 {
            errs.push("rewriter.model dimensions must be positive (max_output_len at least 2)".into());
        }
        if self.encoder.dim == 0 || self.encoder.max_len < 2 {
            errs.push("encoder.dim must be positive and encoder.max_len at least 2".into());
        }
        if let Some(p) = &self.oracle.patterns {
            if let Err(e) = ksum_core::oracle::PrefixMatcher::new(p, self.oracle.max_leading) {
                errs.push(e.to_string());
            }
        }
        errs
    }
}

/// Checks that each named path is configured and exists.
pub fn require_paths(errs: &mut Vec<String>, items: &[(&str, Option<&Path>)]) {
    for (name, path) in items {
        match path {
            None => errs.push(format!("paths.{name} is not set")),
            Some(p) if !p.exists() => errs.push(format!("paths.{name}: {} does not exist", p.display())),
            Some(_) => {}
        }
    }
}
