use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ksum_core::corpus::{corpus_stats, load_dataset, CorpusPaths};
use ksum_core::eval::{compare, default_tokenizer, evaluate_run, format_comparison, EvalReport};
use ksum_core::oracle::{
    derive_labels, map_article, EmbeddingSimilarity, OracleConfig, PrefixMatcher, SentenceSimilarity,
    TokenF1Similarity,
};
use ksum_core::pipeline::{rewriter_examples, summarize_game, KnowledgeContext};
use ksum_core::retriever::{NerTagger, PrecomputedTagger};
use ksum_core::rewriter::{train_rewriter, IdentityBackend, PassageEmbedder, Seq2SeqBackend};
use ksum_core::selector::train_selector;
use ksum_core::text::BasicTokenizer;
use ksum_core::{GameRecord, ImportanceLabels, KnowledgeCorpus, MappedPair, SummaryRecord};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{self as art, LinkRow, RewriterArtifact, SelectorArtifact};
use crate::config::{require_paths, PipelineConfig, RewriterBackend, SimilarityKind};

/// Problems found before any stage runs. Reported together; exit status 1.
#[derive(Debug)]
pub struct ValidationErrors(pub Vec<String>);

impl std::fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} configuration problem(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    BuildOracle,
    TrainSelector,
    TrainRewriter,
    Summarize,
    Evaluate,
    Stats,
}

impl Stage {
    fn needs_corpus(self) -> bool {
        matches!(self, Stage::TrainRewriter | Stage::Summarize)
    }
}

/// Collects every configuration problem for a stage.
pub fn check(cfg: &PipelineConfig, stage: Stage) -> Result<(), ValidationErrors> {
    let mut errs = cfg.validate();
    let p = &cfg.paths;
    require_paths(&mut errs, &[("games", p.games.as_deref())]);
    if stage.needs_corpus() {
        require_paths(&mut errs, &[("teams", p.teams.as_deref()), ("links", p.links.as_deref())]);
        if p.players.is_none() && p.cards.is_none() {
            errs.push("one of paths.players or paths.cards must be set".into());
        }
        for (name, path) in [("players", &p.players), ("cards", &p.cards)] {
            if let Some(path) = path {
                require_paths(&mut errs, &[(name, Some(path))]);
            }
        }
        if let Some(pred) = &cfg.ner.predictions {
            require_paths(&mut errs, &[("ner.predictions", Some(pred))]);
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(ValidationErrors(errs))
    }
}

fn games(cfg: &PipelineConfig) -> Result<Vec<GameRecord>> {
    let path = cfg.paths.games.as_deref().expect("checked");
    let ds = load_dataset(path, cfg.paths.split)?;
    Ok(ds.games)
}

fn corpus(cfg: &PipelineConfig) -> Result<KnowledgeCorpus> {
    let p = &cfg.paths;
    let paths = CorpusPaths {
        players: p.players.clone(),
        cards: p.cards.clone(),
        teams: p.teams.clone().expect("checked"),
        links: p.links.clone().expect("checked"),
    };
    let (corpus, warnings) = KnowledgeCorpus::load(&paths, cfg.link_policy)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(corpus)
}

fn out(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.paths.output.join(name)
}

fn game_index(games: &[GameRecord]) -> HashMap<&str, &GameRecord> {
    games.iter().map(|g| (g.game_id.as_str(), g)).collect()
}

pub fn build_oracle(cfg: &PipelineConfig) -> Result<()> {
    let games = games(cfg)?;
    let matcher = match &cfg.oracle.patterns {
        Some(p) => PrefixMatcher::new(p, cfg.oracle.max_leading)?,
        None => PrefixMatcher::new(ksum_core::oracle::DEFAULT_PREFIX_PATTERNS, cfg.oracle.max_leading)?,
    };
    let oracle = OracleConfig {
        matcher,
        window_span: cfg.oracle.window_span,
    };
    let sim: Box<dyn SentenceSimilarity> = match cfg.oracle.similarity {
        SimilarityKind::TokenF1 => Box::new(TokenF1Similarity::default()),
        SimilarityKind::Embedding => Box::new(EmbeddingSimilarity {
            encoder: cfg.encoder.build(),
        }),
    };
    let per_game: Vec<(Vec<MappedPair>, ImportanceLabels)> = games
        .par_iter()
        .map(|g| {
            let pairs = map_article(g, sim.as_ref(), &oracle);
            let labels = derive_labels(g, &pairs)?;
            Ok((pairs, labels))
        })
        .collect::<ksum_core::Result<_>>()?;
    let (pairs, labels): (Vec<Vec<MappedPair>>, Vec<ImportanceLabels>) = per_game.into_iter().unzip();
    let pairs: Vec<MappedPair> = pairs.into_iter().flatten().collect();
    if pairs.is_empty() {
        log::warn!("no news sentence carried a minute marker; the oracle is empty");
    }
    art::write_lines(&out(cfg, art::PAIRS), &pairs)?;
    art::write_lines(&out(cfg, art::LABELS), &labels)?;
    let positives: usize = labels.iter().map(ImportanceLabels::positives).sum();
    println!("build-oracle: {} games, {} pairs, {positives} positive labels", games.len(), pairs.len());
    Ok(())
}

fn check_labels(games: &[GameRecord], labels: &[ImportanceLabels]) -> Result<Vec<(GameRecord, ImportanceLabels)>> {
    let idx = game_index(games);
    labels
        .iter()
        .map(|l| {
            let g = idx
                .get(l.game_id.as_str())
                .with_context(|| format!("{}: unknown game `{}`", art::LABELS, l.game_id))?;
            if l.labels.len() != g.commentaries.len() || l.labels.iter().any(|&y| y > 1) {
                bail!("{}: labels for `{}` do not match its commentaries", art::LABELS, l.game_id);
            }
            Ok(((*g).clone(), l.clone()))
        })
        .collect()
}

pub fn train_selector_cmd(cfg: &PipelineConfig) -> Result<()> {
    let games = games(cfg)?;
    let labels: Vec<ImportanceLabels> = art::read_lines(&art::upstream(&cfg.paths.output, art::LABELS, "build-oracle")?)?;
    let data = check_labels(&games, &labels)?;
    let (model, curve) = train_selector(cfg.encoder.build(), &data, &cfg.selector.hyper(cfg.seed))?;
    let first = curve.loss.first().copied().unwrap_or(f64::NAN);
    let last = curve.loss.last().copied().unwrap_or(f64::NAN);
    let acc = curve.accuracy.last().copied().unwrap_or(f64::NAN);
    art::write_json(&out(cfg, art::SELECTOR), &SelectorArtifact { model, curve })?;
    println!("train-selector: loss {first:.4} -> {last:.4}, accuracy {acc:.3}");
    Ok(())
}

fn check_pairs(games: &[GameRecord], pairs: &[MappedPair]) -> Result<()> {
    let idx = game_index(games);
    for p in pairs {
        let g = idx
            .get(p.game_id.as_str())
            .with_context(|| format!("{}: unknown game `{}`", art::PAIRS, p.game_id))?;
        if p.commentary_index >= g.commentaries.len() || p.news_index >= g.news.len() {
            bail!("{}: pair indices out of range for `{}`", art::PAIRS, p.game_id);
        }
    }
    Ok(())
}

struct Knowledge {
    corpus: KnowledgeCorpus,
    embedder: PassageEmbedder<ksum_core::MockEncoder>,
    tagger: Option<PrecomputedTagger>,
}

impl Knowledge {
    fn load(cfg: &PipelineConfig) -> Result<Self> {
        let tagger = match &cfg.ner.predictions {
            Some(p) => Some(art::read_json::<PrecomputedTagger>(p)?),
            None => None,
        };
        Ok(Self {
            corpus: corpus(cfg)?,
            embedder: PassageEmbedder::new(cfg.encoder.build()),
            tagger,
        })
    }

    fn context<'a>(&'a self, cfg: &'a PipelineConfig, linker: &'a ksum_core::LinkerConfig) -> KnowledgeContext<'a> {
        KnowledgeContext {
            corpus: &self.corpus,
            policy: cfg.link_policy,
            linker,
            embedder: &self.embedder,
            ner: self.tagger.as_ref().map(|t| t as &(dyn NerTagger + Sync)),
            aliases: &cfg.ner.aliases,
        }
    }
}

pub fn train_rewriter_cmd(cfg: &PipelineConfig) -> Result<()> {
    let flags = cfg.ablation;
    if cfg.rewriter.backend == RewriterBackend::Identity {
        let artifact = RewriterArtifact {
            backend: RewriterBackend::Identity,
            flags,
            model: None,
            curve: Default::default(),
        };
        art::write_json(&out(cfg, art::REWRITER), &artifact)?;
        println!("train-rewriter: identity backend, nothing to train");
        return Ok(());
    }
    let games = games(cfg)?;
    let pairs: Vec<MappedPair> = art::read_lines(&art::upstream(&cfg.paths.output, art::PAIRS, "build-oracle")?)?;
    check_pairs(&games, &pairs)?;
    let knowledge = Knowledge::load(cfg)?;
    let linker = cfg.linker.build();
    let examples = rewriter_examples(&games, &pairs, &knowledge.context(cfg, &linker))?;
    let (model, curve) = train_rewriter(&examples, &cfg.rewriter.hyper(cfg.seed), flags)?;
    let first = curve.loss.first().copied().unwrap_or(f64::NAN);
    let last = curve.loss.last().copied().unwrap_or(f64::NAN);
    let artifact = RewriterArtifact {
        backend: RewriterBackend::Toy,
        flags,
        model: Some(model),
        curve,
    };
    art::write_json(&out(cfg, art::REWRITER), &artifact)?;
    println!("train-rewriter: {} pairs, per-piece NLL {first:.4} -> {last:.4}", examples.len());
    Ok(())
}

fn load_rewriter(cfg: &PipelineConfig) -> Result<Box<dyn Seq2SeqBackend>> {
    let path = out(cfg, art::REWRITER);
    if !path.exists() && cfg.rewriter.backend == RewriterBackend::Identity {
        return Ok(Box::new(IdentityBackend));
    }
    let artifact: RewriterArtifact = art::read_json(&art::upstream(&cfg.paths.output, art::REWRITER, "train-rewriter")?)?;
    match (artifact.backend, artifact.model) {
        (RewriterBackend::Identity, _) => Ok(Box::new(IdentityBackend)),
        (RewriterBackend::Toy, Some(mut model)) => {
            // ablation flags given at inference also apply
            model.flags.no_segment |= cfg.ablation.no_segment;
            model.flags.no_knowledge |= cfg.ablation.no_knowledge;
            if model.flags != artifact.flags {
                log::warn!("decoding with ablation flags {:?} that differ from training", model.flags);
            }
            Ok(Box::new(model))
        }
        (RewriterBackend::Toy, None) => bail!("{}: toy backend without model", path.display()),
    }
}

pub fn summarize(cfg: &PipelineConfig) -> Result<()> {
    let games = games(cfg)?;
    let selector: SelectorArtifact = art::read_json(&art::upstream(&cfg.paths.output, art::SELECTOR, "train-selector")?)?;
    let mut model = selector.model;
    model.tau = cfg.selector.tau;
    let rewriter = load_rewriter(cfg)?;
    let knowledge = Knowledge::load(cfg)?;
    let linker = cfg.linker.build();
    let ctx = knowledge.context(cfg, &linker);
    let opts = cfg.rewriter.decode();

    let results = games
        .par_iter()
        .map(|g| summarize_game(g, &model, &ctx, rewriter.as_ref(), &opts))
        .collect::<ksum_core::Result<Vec<_>>>()?;

    let mut selected = Vec::with_capacity(results.len());
    let mut links = Vec::new();
    let mut summaries = Vec::with_capacity(results.len());
    for (game, r) in games.iter().zip(results) {
        for (&i, debug) in r.selection.selected_indices.iter().zip(r.links) {
            links.push(LinkRow {
                game_id: game.game_id.clone(),
                commentary_index: i,
                sentence: debug.sentence,
                mentions: debug.mentions,
            });
        }
        selected.push(r.selection);
        summaries.push(r.summary);
    }
    art::write_lines(&out(cfg, art::SELECTED), &selected)?;
    art::write_lines(&out(cfg, art::LINKS_DEBUG), &links)?;
    art::write_lines(&out(cfg, art::SUMMARIES), &summaries)?;
    let n: usize = selected.iter().map(|s| s.selected_indices.len()).sum();
    println!("summarize: {} articles from {n} selected sentences", summaries.len());
    Ok(())
}

#[derive(Serialize)]
struct Scores<'a> {
    #[serde(flatten)]
    report: &'a EvalReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    comparison: Vec<ksum_core::eval::ComparisonRow>,
}

pub fn evaluate(cfg: &PipelineConfig, summaries: Option<&Path>, variants: &[(String, PathBuf)]) -> Result<()> {
    let games = games(cfg)?;
    let tok = default_tokenizer();
    let score = |path: &Path| -> Result<EvalReport> {
        let outputs: Vec<SummaryRecord> = art::read_lines(path)?;
        evaluate_run(&outputs, &games, &tok).with_context(|| format!("scoring {}", path.display()))
    };
    let main = match summaries {
        Some(p) => p.to_path_buf(),
        None => art::upstream(&cfg.paths.output, art::SUMMARIES, "summarize")?,
    };
    let report = score(&main)?;
    let mut others = Vec::with_capacity(variants.len());
    for (name, path) in variants {
        others.push((name.clone(), score(path)?));
    }
    let comparison = compare(&report, &others);
    art::write_json(
        &out(cfg, art::SCORES),
        &Scores {
            report: &report,
            comparison: comparison.clone(),
        },
    )?;
    let m = report.mean;
    println!(
        "evaluate: R-1 {:.2}  R-2 {:.2}  R-L {:.2}  Avg {:.2}",
        100.0 * m.rouge1,
        100.0 * m.rouge2,
        100.0 * m.rouge_l,
        100.0 * m.avg
    );
    if !comparison.is_empty() {
        print!("{}", format_comparison(&comparison));
    }
    Ok(())
}

pub fn stats(cfg: &PipelineConfig) -> Result<()> {
    let games = games(cfg)?;
    let report = corpus_stats(&games, &BasicTokenizer::default())?;
    art::write_json(&out(cfg, art::STATS), &report)?;
    println!(
        "stats: {} games, mean news tokens {:.2}, mean commentary tokens {:.2}",
        report.example_count, report.news.tokens.mean, report.commentary.tokens.mean
    );
    Ok(())
}
