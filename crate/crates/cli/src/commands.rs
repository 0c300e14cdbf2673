use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use interfere_core::corpus::{count_patterns, load_annotated, write_counts_csv, Number};
use interfere_core::experiment::{
    self, interference_effects, load_stimuli, run_experiment, summarize, Metric, RunOptions,
};
use interfere_core::headfinder::{
    all_heads, compute_baseline, score_heads, select_specialized, DependencyCorpus, ScoringOptions,
    Threshold, REFLEXIVE_RELATION,
};
use interfere_core::metrics::surprisal;
use interfere_core::util::word_spans;
use interfere_core::{locate_span, Anchor, HeadId, Model, ModelConfig, Tokenizer};
use serde_json::json;

use crate::manifest::{FileDigest, RunManifest};
use crate::args::{
    AnchorArg, Cli, Command, CountCorpusArgs, ExperimentArgs, FindHeadsArgs, Mode, ModelArgs,
    SurprisalArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building worker pool")?;
    let workers = cli.workers;
    pool.install(|| match cli.command {
        Command::Surprisal(a) => cmd_surprisal(a, workers),
        Command::FindHeads(a) => cmd_find_heads(a, workers),
        Command::Experiment(a) => cmd_experiment(a, workers),
        Command::CountCorpus(a) => cmd_count_corpus(a, workers),
    })
}

struct Loaded {
    model: Model,
    tokenizer: Tokenizer,
}

fn sibling(checkpoint: &Path, name: &str) -> PathBuf {
    checkpoint.parent().unwrap_or(Path::new(".")).join(name)
}

fn load_model(args: &ModelArgs, manifest: &mut RunManifest) -> Result<Loaded> {
    let config = match &args.config {
        Some(p) => {
            manifest.inputs.push(FileDigest::of(p)?);
            ModelConfig::from_json_file(p)?
        }
        None => ModelConfig::default(),
    };
    let vocab = args.vocab.clone().unwrap_or_else(|| sibling(&args.checkpoint, "vocab.json"));
    let merges = args.merges.clone().unwrap_or_else(|| sibling(&args.checkpoint, "merges.txt"));
    let tokenizer = Tokenizer::from_files(&vocab, &merges)?;
    if tokenizer.vocab_size() > config.vocab_size {
        bail!(
            "tokenizer has {} entries but the model vocabulary is {}",
            tokenizer.vocab_size(),
            config.vocab_size
        );
    }
    let model = Model::load(&args.checkpoint, config)?;
    manifest.checkpoint = Some(FileDigest::of(&args.checkpoint)?);
    manifest.inputs.push(FileDigest::of(&vocab)?);
    manifest.inputs.push(FileDigest::of(&merges)?);
    manifest.config = Some(config);
    Ok(Loaded { model, tokenizer })
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_surprisal(a: SurprisalArgs, workers: Option<usize>) -> Result<()> {
    let mut manifest = RunManifest::new("surprisal", workers);
    let sentences: Vec<String> = match (&a.text, &a.input) {
        (Some(t), _) => vec![t.clone()],
        (None, Some(p)) => {
            manifest.inputs.push(FileDigest::of(p)?);
            std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))?
                .lines()
                .map(str::to_string)
                .collect()
        }
        (None, None) => bail!("give --text or --input"),
    };
    let Loaded { model, tokenizer } = load_model(&a.model, &mut manifest)?;
    prepare_out_dir(&a.out.out_dir)?;

    use rayon::prelude::*;
    let rows: Vec<Vec<[String; 7]>> = sentences
        .par_iter()
        .enumerate()
        .filter(|(_, s)| !s.trim().is_empty())
        .map(|(i, text)| -> Result<Vec<[String; 7]>> {
            let spans = tokenizer.encode(text);
            let ids: Vec<u32> = spans.iter().map(|s| s.token_id).collect();
            let trace = model
                .forward(&ids)
                .with_context(|| format!("sentence {}", i + 1))?;
            word_spans(text)
                .into_iter()
                .enumerate()
                .map(|(w, range)| {
                    let toks = locate_span(&spans, range.clone())?;
                    let s = if toks.start == 0 {
                        String::new()
                    } else {
                        surprisal(&trace, toks.clone())?.to_string()
                    };
                    Ok([
                        (i + 1).to_string(),
                        w.to_string(),
                        text[range.clone()].to_string(),
                        range.start.to_string(),
                        range.end.to_string(),
                        toks.len().to_string(),
                        s,
                    ])
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let path = a.out.out_dir.join("surprisal.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["sentence", "word_index", "word", "byte_start", "byte_end", "n_tokens", "surprisal_bits"])?;
    for row in rows.iter().flatten() {
        w.write_record(row)?;
    }
    w.flush()?;
    manifest.flags = json!({ "text": a.text, "input": a.input });
    manifest.outputs.push("surprisal.csv".into());
    manifest.write(&a.out.out_dir)
}

fn cmd_find_heads(a: FindHeadsArgs, workers: Option<usize>) -> Result<()> {
    let mut manifest = RunManifest::new("find-heads", workers);
    let (corpus, relation) = match (&a.conllu, &a.reflexive) {
        (Some(p), _) => {
            let Some(rel) = a.relation.clone() else {
                bail!("--relation is required with --conllu");
            };
            manifest.inputs.push(FileDigest::of(p)?);
            (DependencyCorpus::from_conllu_file(p)?, rel)
        }
        (None, Some(p)) => {
            manifest.inputs.push(FileDigest::of(p)?);
            let rel = a.relation.clone().unwrap_or_else(|| REFLEXIVE_RELATION.to_string());
            (DependencyCorpus::from_reflexive_jsonl(p)?, rel)
        }
        (None, None) => bail!("give --conllu or --reflexive"),
    };
    let options = ScoringOptions {
        include_self: a.include_self,
        skip_punct: a.skip_punct,
    };
    let baseline = compute_baseline(&corpus, &relation, options)?;
    let threshold = match a.baseline {
        Some(p) if !(0.0..=1.0).contains(&p) => bail!("--baseline must be in [0, 1], got {p}"),
        Some(p) => Threshold::from_proportion(p),
        None => baseline.threshold(),
    };
    let Loaded { model, tokenizer } = load_model(&a.model, &mut manifest)?;
    prepare_out_dir(&a.out.out_dir)?;

    let heads = all_heads(&model);
    let scores = score_heads(&model, &tokenizer, &corpus, &relation, &heads, options)?;
    let specialized = select_specialized(&scores.scores, threshold);

    let path = a.out.out_dir.join("head_scores.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["layer", "head", "relation", "hits", "n_instances", "accuracy", "specialized"])?;
    for s in &scores.scores {
        let picked = specialized.iter().any(|p| p.head_id() == s.head_id());
        w.write_record([
            s.layer.to_string(),
            s.head.to_string(),
            s.relation.clone(),
            s.hits.to_string(),
            s.n_instances.to_string(),
            s.accuracy.to_string(),
            picked.to_string(),
        ])?;
    }
    w.flush()?;

    manifest.heads = specialized.iter().map(|s| s.head_id()).collect();
    manifest.flags = json!({
        "conllu": a.conllu,
        "reflexive": a.reflexive,
        "relation": relation,
        "baseline": a.baseline,
        "include_self": a.include_self,
        "skip_punct": a.skip_punct,
    });
    manifest.results = json!({
        "baseline_offset": baseline.offset,
        "baseline_count": baseline.count,
        "baseline_total": baseline.total,
        "baseline_proportion": a.baseline.unwrap_or(baseline.proportion()),
        "threshold": threshold.value,
        "skipped_sentences": scores.skipped_sentences,
        "skipped_instances": scores.skipped_instances,
        "specialized": specialized
            .iter()
            .map(|s| json!({ "head": s.head_id().to_string(), "accuracy": s.accuracy }))
            .collect::<Vec<_>>(),
    });
    manifest.outputs.push("head_scores.csv".into());
    manifest.write(&a.out.out_dir)
}

fn cmd_experiment(a: ExperimentArgs, workers: Option<usize>) -> Result<()> {
    let mut manifest = RunManifest::new("experiment", workers);
    manifest.inputs.push(FileDigest::of(&a.stimuli)?);
    let items = load_stimuli(&a.stimuli)?;
    if items.is_empty() {
        bail!("stimulus file {} has no items", a.stimuli.display());
    }
    let (dl, dh) = match a.mode {
        Mode::Agreement => (4, 3),
        Mode::Reflexive => (1, 5),
    };
    let head = HeadId::new(a.layer.unwrap_or(dl), a.head.unwrap_or(dh));
    let options = RunOptions {
        anchor: match a.anchor {
            AnchorArg::First => Anchor::First,
            AnchorArg::Last => Anchor::Last,
        },
        spillover: a.spillover,
    };
    let Loaded { model, tokenizer } = load_model(&a.model, &mut manifest)?;
    prepare_out_dir(&a.out.out_dir)?;

    let records = run_experiment(&model, &tokenizer, &items, head, options)?;
    let mut summaries = Vec::new();
    let mut effects = Vec::new();
    for m in Metric::ALL {
        summaries.extend(summarize(&records, m.name())?);
        effects.extend(interference_effects(&records, m.name())?);
    }
    let dir = &a.out.out_dir;
    experiment::write_items_csv(dir.join("items.csv"), &records)?;
    experiment::write_summary_csv(dir.join("summary.csv"), &summaries)?;
    experiment::write_effects_csv(dir.join("effects.csv"), &effects)?;
    experiment::write_plot_data(
        dir.join("plot_data.json"),
        &experiment::plot_data(&records, &summaries),
    )?;

    manifest.heads = vec![head];
    manifest.flags = json!({
        "stimuli": a.stimuli,
        "mode": a.mode,
        "layer": head.layer,
        "head": head.head,
        "anchor": options.anchor,
        "spillover": options.spillover,
    });
    manifest.results = json!({ "items": records.len() });
    manifest.outputs = ["items.csv", "summary.csv", "effects.csv", "plot_data.json"]
        .map(String::from)
        .to_vec();
    manifest.write(dir)
}

fn cmd_count_corpus(a: CountCorpusArgs, workers: Option<usize>) -> Result<()> {
    let mut manifest = RunManifest::new("count-corpus", workers);
    manifest.inputs.push(FileDigest::of(&a.input)?);
    let sentences = load_annotated(&a.input)?;
    let table = count_patterns(&sentences)?;
    prepare_out_dir(&a.out.out_dir)?;
    write_counts_csv(a.out.out_dir.join("counts.csv"), &table)?;
    manifest.flags = json!({ "input": a.input, "multi_distractor_policy": "any-match" });
    manifest.results = json!({
        "table": table,
        "sg_ratio": table.ratio(Number::Sg),
        "pl_ratio": table.ratio(Number::Pl),
    });
    manifest.outputs.push("counts.csv".into());
    manifest.write(&a.out.out_dir)
}
