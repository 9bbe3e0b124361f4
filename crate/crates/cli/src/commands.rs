use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use geval::analysis::{bias_report, read_preferences};
use geval::benchmarks::{emit_normalized, ingest, DatasetDescriptor};
use geval::judge::{read_results, write_failures, write_results};
use geval::llm::Backend;
use geval::metaeval::{compute_row, CorrelationReport};
use geval::prompt::{assemble, CotCache, Placeholder, PromptTemplate};
use geval::{score_dataset, CriterionSpec};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, ExitClass};

const DEFAULT_LABEL: &str = "G-Eval";

/// Refuses to replace existing artifacts unless `force` is set.
fn guard(paths: &[PathBuf], force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(CliError::config(format!(
            "{} already exists; pass --force to overwrite",
            p.display()
        ))),
        None => Ok(()),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn snapshot(cfg: &RunConfig, name: &str) -> Result<(), CliError> {
    write(&cfg.output_dir.join(format!("{name}.config.toml")), &cfg.to_toml()?)
}

fn cot_cache(cfg: &RunConfig) -> CotCache {
    CotCache::persistent(cfg.output_dir.join("cot"))
}

/// Fills evaluation steps for the criteria whose template has a steps slot.
async fn with_steps(
    cfg: &RunConfig,
    criteria: Vec<CriterionSpec>,
    templates: &BTreeMap<String, PromptTemplate>,
    backend: &Backend,
) -> Result<Vec<CriterionSpec>, CliError> {
    if !cfg.scoring.include_cot {
        return Ok(criteria);
    }
    let cache = cot_cache(cfg);
    let mut out = Vec::with_capacity(criteria.len());
    for c in criteria {
        let needs_steps = c.evaluation_steps.is_none() && templates[&c.name].uses(Placeholder::Steps);
        if needs_steps {
            let outcome = cache.generate(&c, backend).await?;
            out.push(c.with_steps(outcome.steps));
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

fn report_stats(backend: &Backend) {
    let s = backend.stats();
    eprintln!(
        "backend: {} provider call(s), {} cache hit(s), {} retried failure(s)",
        s.provider_calls, s.cache_hits, s.retried_failures
    );
}

pub async fn cot(cfg: &RunConfig) -> Result<(), CliError> {
    let (criteria, _) = cfg.criteria()?;
    create_dir(&cfg.output_dir)?;
    let backend = cfg.backend()?;
    let cache = cot_cache(cfg);
    for c in &criteria {
        let (steps, status) = match &c.evaluation_steps {
            Some(steps) => (steps.clone(), "supplied"),
            None => {
                let outcome = cache.generate(c, &backend).await?;
                (outcome.steps, if outcome.cached { "cached" } else { "generated" })
            }
        };
        println!("{} ({status}):", c.name);
        for (i, step) in steps.iter().enumerate() {
            println!("{}. {step}", i + 1);
        }
        println!();
    }
    report_stats(&backend);
    Ok(())
}

#[derive(Serialize)]
struct PromptLine<'a> {
    record_id: &'a str,
    criterion: &'a str,
    template_id: &'a str,
    includes_cot: bool,
    fingerprint: String,
}

pub async fn score(cfg: &RunConfig, force: bool) -> Result<(), CliError> {
    cfg.scoring.validate()?;
    let (criteria, templates) = cfg.criteria()?;
    let records = cfg.records()?;
    let out = &cfg.output_dir;
    let files = ["score.config.toml", "criteria.json", "prompts.jsonl", "results.jsonl", "failures.jsonl"]
        .map(|f| out.join(f));
    guard(&files, force)?;
    create_dir(out)?;

    let backend = cfg.backend()?;
    let criteria = with_steps(cfg, criteria, &templates, &backend).await?;

    let mut prompts = Vec::new();
    for r in &records {
        for c in &criteria {
            let t = &templates[&c.name];
            let p = assemble(t, c, r, cfg.scoring.include_cot)?;
            prompts.push(PromptLine {
                record_id: &r.record_id,
                criterion: &c.name,
                template_id: &t.template_id,
                includes_cot: p.includes_cot,
                fingerprint: p.fingerprint,
            });
        }
    }
    prompts.sort_by(|a, b| (a.record_id, a.criterion).cmp(&(b.record_id, b.criterion)));

    let batch = score_dataset(&records, &criteria, &templates, &cfg.scoring, &backend).await?;

    snapshot(cfg, "score")?;
    let criteria_json = serde_json::to_string_pretty(&criteria).map_err(|e| CliError::data(e.to_string()))?;
    write(&files[1], &(criteria_json + "\n"))?;
    let lines: Result<Vec<String>, _> = prompts.iter().map(serde_json::to_string).collect();
    let mut body = lines.map_err(|e| CliError::data(e.to_string()))?.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    write(&files[2], &body)?;
    write_results(&files[3], &batch.results)?;
    write_failures(&files[4], &batch.failures)?;

    let total = records.len() * criteria.len();
    println!(
        "scored {} of {total} pair(s) into {}",
        batch.results.len(),
        files[3].display()
    );
    report_stats(&backend);
    match batch.failures.first() {
        None => Ok(()),
        Some(first) => Err(CliError::new(
            ExitClass::of_failure_kind(&first.error_kind),
            format!(
                "{} pair(s) failed, listed in {}; first: {}",
                batch.failures.len(),
                files[4].display(),
                first.message
            ),
        )),
    }
}

pub fn metaeval(cfg: &RunConfig, results: Option<&Path>, force: bool) -> Result<(), CliError> {
    let out = &cfg.output_dir;
    let results_path = results.map(Path::to_path_buf).unwrap_or_else(|| out.join("results.jsonl"));
    if !results_path.exists() {
        return Err(CliError::data(format!("{}: results file not found", results_path.display())));
    }
    let table = cfg.table()?;
    let records = cfg.records()?;
    let files = ["report.md", "report.csv", "report.json", "metaeval.config.toml"].map(|f| out.join(f));
    guard(&files, force)?;
    let results = read_results(&results_path)?;
    let label = cfg.metaeval.label.as_deref().unwrap_or(DEFAULT_LABEL);
    let row = compute_row(label, &table, &results, &records)?;
    let report = CorrelationReport::new(&table, vec![row]);

    create_dir(out)?;
    let markdown = report.to_markdown();
    write(&files[0], &markdown)?;
    write(&files[1], &report.to_csv()?)?;
    write(&files[2], &report.to_json()?)?;
    snapshot(cfg, "metaeval")?;
    print!("{markdown}");
    Ok(())
}

pub async fn bias(cfg: &RunConfig, force: bool) -> Result<(), CliError> {
    let path = cfg.bias.preferences.as_ref().ok_or_else(|| {
        CliError::config("no preference data: pass --preferences or set bias.preferences")
    })?;
    let mut selection = cfg.clone();
    selection.criteria = vec![cfg.bias.criterion.clone()];
    let (criteria, templates) = selection.criteria()?;
    let data = read_preferences(path)?;
    let out = &cfg.output_dir;
    let files = ["bias.md", "bias.csv", "bias_results.jsonl", "bias_failures.jsonl", "bias.config.toml"]
        .map(|f| out.join(f));
    guard(&files, force)?;
    create_dir(out)?;

    let backend = cfg.backend()?;
    let criteria = with_steps(cfg, criteria, &templates, &backend).await?;
    let criterion = &criteria[0];
    let outcome = bias_report(&data, criterion, &templates[&criterion.name], &cfg.scoring, &backend).await?;

    let markdown = outcome.report.to_markdown();
    write(&files[0], &markdown)?;
    write(&files[1], &outcome.report.to_csv()?)?;
    write_results(&files[2], &outcome.results)?;
    write_failures(&files[3], &outcome.failures)?;
    snapshot(cfg, "bias")?;
    print!("{markdown}");
    report_stats(&backend);
    if !outcome.failures.is_empty() {
        eprintln!(
            "warning: {} pair(s) failed, listed in {}",
            outcome.failures.len(),
            files[3].display()
        );
    }
    Ok(())
}

pub fn convert(desc: &DatasetDescriptor, output: Option<&Path>, force: bool) -> Result<(), CliError> {
    let records = ingest(desc)?;
    let Some(output) = output else {
        println!("{}: {} valid record(s); nothing written", desc.path.display(), records.len());
        return Ok(());
    };
    guard(&[output.to_path_buf()], force)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let n = emit_normalized(&records, output)?;
    println!("wrote {n} record(s) to {}", output.display());
    Ok(())
}
