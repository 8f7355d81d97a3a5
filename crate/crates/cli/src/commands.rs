//! Subcommand bodies. Each reads its inputs, writes its outputs, then writes a
//! run manifest next to the primary output.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use ars_core::ars::{ars_histogram, read_labels, write_labels, FailureMode, Scorer, ThresholdRule};
use ars_core::corpus::{load_corpus, load_corpus_with_report};
use ars_core::dacs::{self, read_candidates, write_selections, Blacklist, DacsConfig, Grouping};
use ars_core::loss::{attach_weights, read_log_probs, unweighted_ce, weighted_ce, write_weights};
use ars_core::providers::ScoreTable;
use ars_core::stats::{LogBase, ScaleKind, StatsConfig, TauPopulation};
use ars_core::{label_corpus, partition_by_threshold, Error, FrozenStats, RunManifest};
use serde::Serialize;

use crate::failure::Failure;
use crate::{backends, GroupingArg, ProviderArgs, RuleArg, ScaleArg, TauPopulationArg};

type Outcome = Result<(), Failure>;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e).into())
}

fn write_with<F>(path: &Path, fill: F) -> Outcome
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    fill(&mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    write_with(path, |buf| {
        serde_json::to_writer_pretty(&mut *buf, value)?;
        buf.write_all(b"\n")
    })
}

fn finish(mut manifest: RunManifest, outputs: &[&Path]) -> Outcome {
    for out in outputs {
        manifest.output(out)?;
    }
    manifest.write_for(outputs[0])?;
    Ok(())
}

fn provider_config(m: &mut RunManifest, p: &ProviderArgs) {
    m.set("sentiment", &p.sentiment);
    let list = |path: &Option<PathBuf>| {
        path.as_ref()
            .map_or("builtin".to_string(), |p| p.display().to_string())
    };
    m.set("aw", list(&p.aw));
    m.set("ow", list(&p.ow));
    m.set("provider_timeout", p.provider_timeout);
}

fn provider_inputs(m: &mut RunManifest, p: &ProviderArgs) -> Outcome {
    for path in [&p.aw, &p.ow].into_iter().flatten() {
        m.input(path)?;
    }
    if let Some(path) = p.sentiment.strip_prefix("file:") {
        m.input(path)?;
    }
    Ok(())
}

pub fn ingest(corpus: &Path, out: &Path) -> Outcome {
    let (c, report) = load_corpus_with_report(corpus)?;
    let mut m = RunManifest::new("ingest");
    m.input(corpus)?;
    write_with(out, |buf| c.write_jsonl(buf))?;
    m.set("images", report.images);
    m.set("comments", report.comments);
    m.set("sentences", report.sentences);
    m.set("dropped_sentences", report.dropped_sentences);
    m.set("dropped_comments", report.dropped_comments);
    m.set("corpus_hash", c.content_hash());
    eprintln!(
        "ingested {} images, {} comments, {} sentences ({} sentences and {} comments dropped)",
        report.images,
        report.comments,
        report.sentences,
        report.dropped_sentences,
        report.dropped_comments
    );
    finish(m, &[out])
}

pub fn stats(
    corpus: &Path,
    out: &Path,
    scale: ScaleArg,
    log_base: &str,
    tau_population: TauPopulationArg,
) -> Outcome {
    let log_base: LogBase = log_base
        .parse()
        .map_err(|e| Failure::input(format!("--log-base: {e}")))?;
    let config = StatsConfig {
        scale: match scale {
            ScaleArg::Stddev => ScaleKind::StdDev,
            ScaleArg::Variance => ScaleKind::Variance,
        },
        log_base,
        tau_population: match tau_population {
            TauPopulationArg::Pairs => TauPopulation::Pairs,
            TauPopulationArg::Occurrences => TauPopulation::Occurrences,
        },
    };
    let c = load_corpus(corpus)?;
    let frozen = FrozenStats::build(&c, config)?;
    let mut m = RunManifest::new("stats");
    m.input(corpus)?;
    m.set("scale", format!("{scale:?}").to_lowercase());
    m.set(
        "log_base",
        serde_json::to_string(&log_base).unwrap_or_default(),
    );
    m.set(
        "tau_population",
        format!("{tau_population:?}").to_lowercase(),
    );
    frozen.save(out)?;
    finish(m, &[out])
}

pub struct LabelArgs {
    pub corpus: PathBuf,
    pub stats: PathBuf,
    pub providers: ProviderArgs,
    pub out: PathBuf,
    pub lenient: bool,
    pub freeze_ars: bool,
    pub force: bool,
    pub summary: Option<PathBuf>,
}

pub fn label(a: LabelArgs) -> Outcome {
    let corpus = load_corpus(&a.corpus)?;
    let mut stats = FrozenStats::load(&a.stats)?;
    stats.check_corpus(&corpus, a.force)?;
    let lexicons = backends::lexicons(&a.providers)?;
    let sentiment = backends::sentiment(&a.providers)?;

    let mut m = RunManifest::new("label");
    m.input(&a.corpus)?;
    m.input(&a.stats)?;
    provider_inputs(&mut m, &a.providers)?;
    provider_config(&mut m, &a.providers);
    m.set("lenient", a.lenient);
    m.set("freeze_ars", a.freeze_ars);
    m.set("force", a.force);

    let mode = if a.lenient {
        FailureMode::Lenient
    } else {
        FailureMode::Strict
    };
    let labelling = {
        let scorer = Scorer::new(&stats, &lexicons, sentiment.as_ref());
        label_corpus(&corpus, &scorer, mode)?
    };
    if labelling.skipped > 0 {
        log::warn!(
            "{} sentences skipped after provider failures",
            labelling.skipped
        );
    }
    m.set("skipped", labelling.skipped);

    let records = labelling.records();
    write_with(&a.out, |buf| write_labels(&records, buf))?;
    let mut outputs: Vec<&Path> = vec![&a.out];
    if let Some(path) = &a.summary {
        write_json(path, &labelling.summary)?;
        outputs.push(path);
    }
    if a.freeze_ars {
        labelling.freeze_into(&mut stats)?;
        stats.save(&a.stats)?;
        outputs.push(&a.stats);
    }
    finish(m, &outputs)?;
    let summary = serde_json::to_string_pretty(&labelling.summary).expect("summary serialize");
    stdout_line(&summary);
    Ok(())
}

/// Prints to stdout, ignoring a closed pipe: outputs are already on disk.
fn stdout_line(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

pub fn partition(labels: &Path, stats: &Path, alpha: f64, rule: RuleArg, out: &Path) -> Outcome {
    if !alpha.is_finite() {
        return Err(Failure::input(format!("--alpha {alpha} must be finite")));
    }
    let records = read_labels(open(labels)?)?;
    let (mean, scale) = FrozenStats::load(stats)?.ars_moments()?;
    let rule = match rule {
        RuleArg::Leq => ThresholdRule::Leq,
        RuleArg::Geq => ThresholdRule::Geq,
    };
    let part = partition_by_threshold(&records, mean, scale, alpha, rule);
    let mut m = RunManifest::new("partition");
    m.input(labels)?;
    m.input(stats)?;
    m.set("alpha", alpha);
    m.set("rule", serde_json::to_string(&rule).unwrap_or_default());
    eprintln!(
        "{} of {} labels at threshold {}",
        part.members.len(),
        records.len(),
        part.threshold
    );
    write_json(out, &part)?;
    finish(m, &[out])
}

pub struct SelectArgs {
    pub candidates: PathBuf,
    pub stats: PathBuf,
    pub threshold: f64,
    pub floor: String,
    pub embed: String,
    pub scorer: String,
    pub blacklist: Option<PathBuf>,
    pub max_outputs: Option<usize>,
    pub grouping: GroupingArg,
    pub providers: ProviderArgs,
    pub out: PathBuf,
}

pub fn select(a: SelectArgs) -> Outcome {
    let inputs = read_candidates(open(&a.candidates)?)?;
    let stats = FrozenStats::load(&a.stats)?;
    let floor = match a.floor.as_str() {
        "auto" => stats.ars_moments()?.0,
        v => v
            .parse::<f64>()
            .map_err(|_| Failure::input(format!("--floor {v:?}: expected auto or a number")))?,
    };
    let blacklist = match &a.blacklist {
        Some(path) => {
            Blacklist::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
        }
        None => Blacklist::default(),
    };
    let config = DacsConfig {
        similarity_threshold: a.threshold,
        ars_floor: floor,
        blacklist,
        max_outputs: a.max_outputs,
        grouping: match a.grouping {
            GroupingArg::Leader => Grouping::Leader,
            GroupingArg::Components => Grouping::Components,
        },
    };
    config.validate()?;

    let mut m = RunManifest::new("select");
    m.input(&a.candidates)?;
    m.input(&a.stats)?;
    if let Some(path) = &a.blacklist {
        m.input(path)?;
    }
    provider_inputs(&mut m, &a.providers)?;
    provider_config(&mut m, &a.providers);
    m.set("threshold", a.threshold);
    m.set("floor", floor);
    m.set("embed", &a.embed);
    m.set("scorer", &a.scorer);
    m.set("grouping", format!("{:?}", a.grouping).to_lowercase());
    m.set(
        "max_outputs",
        a.max_outputs.map_or("none".to_string(), |n| n.to_string()),
    );

    let lexicons = backends::lexicons(&a.providers)?;
    let sentiment = backends::sentiment(&a.providers)?;
    let embedder = backends::embedder(&a.embed, Duration::from_secs(a.providers.provider_timeout))?;
    if let Some(path) = a.embed.strip_prefix("file:") {
        m.input(path)?;
    }
    let ars = Scorer::new(&stats, &lexicons, sentiment.as_ref());
    let selection = match a.scorer.as_str() {
        "ars" => dacs::select(&inputs, &config, embedder.as_ref(), &ars)?,
        s => match s.strip_prefix("file:") {
            Some(path) => {
                let table = ScoreTable::load(path)?;
                m.input(path)?;
                dacs::select_with_scorer(&inputs, &config, embedder.as_ref(), &ars, &table)?
            }
            None => {
                return Err(Failure::input(format!(
                    "--scorer {s:?}: expected ars or file:PATH"
                )))
            }
        },
    };
    eprintln!(
        "selected {} of {} candidates",
        selection.len(),
        inputs.len()
    );
    write_with(&a.out, |buf| write_selections(&selection, buf))?;
    finish(m, &[&a.out])
}

#[derive(Serialize)]
struct LossReport {
    total: f64,
    unweighted_total: f64,
    sentence_count: usize,
    per_sentence: Vec<f64>,
}

pub fn loss(labels: &Path, logprobs: &Path, out: &Path, weights_out: Option<&Path>) -> Outcome {
    let records = read_labels(open(labels)?)?;
    let rows = read_log_probs(open(logprobs)?)?;
    let batch = attach_weights(&records, &rows)?;
    let weighted = weighted_ce(&batch)?;
    let report = LossReport {
        total: weighted.total,
        unweighted_total: unweighted_ce(&batch)?,
        sentence_count: weighted.sentence_count,
        per_sentence: weighted.per_sentence,
    };
    let mut m = RunManifest::new("loss");
    m.input(labels)?;
    m.input(logprobs)?;
    write_json(out, &report)?;
    let mut outputs = vec![out];
    if let Some(path) = weights_out {
        write_with(path, |buf| write_weights(&rows, &batch, buf))?;
        outputs.push(path);
    }
    finish(m, &outputs)?;
    stdout_line(&report.total.to_string());
    Ok(())
}

pub fn report(labels: &Path, bin_width: f64, out: &Path) -> Outcome {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Failure::input(format!(
            "--bin-width {bin_width} must be positive"
        )));
    }
    let records = read_labels(open(labels)?)?;
    let values: Vec<f64> = records.iter().map(|r| r.ars).collect();
    let bins = ars_histogram(&values, bin_width);
    let mut m = RunManifest::new("report");
    m.input(labels)?;
    m.set("bin_width", bin_width);
    write_with(out, |buf| {
        writeln!(buf, "bin_start,count")?;
        for (start, count) in &bins {
            writeln!(buf, "{start},{count}")?;
        }
        Ok(())
    })?;
    finish(m, &[out])
}
