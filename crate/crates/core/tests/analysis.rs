mod common;

use common::*;
use geval::analysis::{
    ablation_compare, bias_report, preference_records, read_preferences, Preference, PreferenceRecord, Variant,
};
use geval::llm::Script;
use geval::metaeval::{tie_fraction, ColumnSpec, TableSpec};
use geval::prompt::{assemble, render_steps};
use geval::ScoringConfig;

fn bias_script(data: &[PreferenceRecord]) -> Script {
    let c = criterion("coherence");
    let t = summarization();
    let mut script = Script::new();
    for r in preference_records(data) {
        let answer = if r.system_id == "human" { "5" } else { "3" };
        script.insert(prompt_fp(&t, &c, &r, true), texts(&[answer]));
    }
    script
}

#[tokio::test]
async fn bias_report_groups_by_preference() {
    let data = read_preferences(&fixture("preferences.jsonl")).unwrap();
    let c = criterion("coherence");
    let outcome = bias_report(&data, &c, &summarization(), &ScoringConfig::single_greedy(), &backend(bias_script(&data)))
        .await
        .unwrap();
    let report = &outcome.report;
    assert_eq!(report.categories.iter().map(|c| c.count).sum::<usize>(), data.len());
    for cat in &report.categories {
        match cat.category {
            Preference::Equal => {
                assert_eq!(cat.count, 0);
                assert_eq!((cat.human_mean, cat.llm_mean), (None, None));
            }
            _ => {
                assert_eq!(cat.count, 2);
                assert_eq!((cat.human_mean, cat.llm_mean), (Some(5.0), Some(3.0)));
            }
        }
    }
    assert_eq!(report.overall_delta, Some(-2.0));
    let csv = report.to_csv().unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "category,human_mean,llm_mean,count");
    assert_eq!(lines[1], "human_better,5,3,2");
    assert_eq!(lines[3], "equal,,,0");
    assert!(report.to_markdown().contains("| equal | n/a | n/a | 0 |"));
}

#[test]
fn paired_prompts_differ_only_in_summary() {
    let data = read_preferences(&fixture("preferences.jsonl")).unwrap();
    let records = preference_records(&data);
    let c = criterion("coherence");
    let t = summarization();
    for pair in records.chunks(2) {
        let human = assemble(&t, &c, &pair[0], true).unwrap();
        let llm = assemble(&t, &c, &pair[1], true).unwrap();
        let (_, h, l) = geval::analysis::prompt_diff(&human.text, &llm.text);
        assert!(pair[0].output.contains(&h) && pair[1].output.contains(&l));
        assert_eq!(human.text.replace(&pair[0].output, "<S>"), llm.text.replace(&pair[1].output, "<S>"));
    }
}

#[tokio::test]
async fn bias_failures_go_to_manifest() {
    let data = read_preferences(&fixture("preferences.jsonl")).unwrap();
    let mut script = bias_script(&data);
    let records = preference_records(&data);
    script.remove(&prompt_fp(&summarization(), &criterion("coherence"), &records[0], true));
    let outcome = bias_report(&data, &criterion("coherence"), &summarization(), &ScoringConfig::single_greedy(), &backend(script))
        .await
        .unwrap();
    assert_eq!(outcome.failures.len(), 1);
    let human_better = &outcome.report.categories[0];
    assert_eq!(human_better.count, 2);
    assert_eq!(human_better.human_mean, Some(5.0));
}

fn coherence_table() -> TableSpec {
    TableSpec {
        columns: vec![ColumnSpec::aspect("Coherence", "coherence")],
        ..TableSpec::summeval()
    }
}

/// 3 documents × 4 systems; greedy answers tie, sampled answers spread.
fn ablation_fixture() -> (Vec<geval::EvalRecord>, Script) {
    let c = criterion("coherence");
    let t = summarization();
    let mut records = Vec::new();
    let mut script = Script::new();
    let spreads: [&[(&str, usize)]; 4] = [
        &[("2", 14), ("3", 6)],
        &[("3", 12), ("2", 8)],
        &[("3", 10), ("4", 10)],
        &[("4", 15), ("5", 5)],
    ];
    for d in 0..3 {
        for (s, spread) in spreads.iter().enumerate() {
            let r = record(
                &format!("d{d}/s{s}"),
                &format!("d{d}"),
                &format!("s{s}"),
                &format!("summary {s} of doc {d}"),
                &[("coherence", 1.0 + s as f64 + d as f64 * 0.1)],
            );
            script.insert(prompt_fp(&t, &c, &r, true), repeated(spread));
            script.insert(prompt_fp(&t, &c, &r, false), repeated(spread));
            records.push(r);
        }
    }
    (records, script)
}

#[tokio::test]
async fn ablation_rows_and_prompt_diffs() {
    let (records, script) = ablation_fixture();
    let criteria = vec![criterion("coherence")];
    let templates = templates_for(&criteria, &summarization());
    let outcome = ablation_compare(
        &records,
        &criteria,
        &templates,
        &ScoringConfig::sample_weighted(),
        &backend(script),
        &[Variant::NoCot, Variant::Full, Variant::NoProbs],
        &coherence_table(),
    )
    .await
    .unwrap();
    let labels: Vec<&str> = outcome.report.rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, vec!["G-Eval", "- Probs", "- CoT"]);

    let scores = |v: Variant| -> Vec<f64> {
        let batch = &outcome.batches.iter().find(|(x, _)| *x == v).unwrap().1;
        assert!(batch.failures.is_empty());
        batch.results.iter().map(|r| r.final_score).collect()
    };
    let greedy = scores(Variant::NoProbs);
    assert!(greedy.iter().all(|s| s.fract() == 0.0));
    assert!(tie_fraction(&greedy) > tie_fraction(&scores(Variant::Full)));

    let steps_block = render_steps(&steps());
    assert_eq!(outcome.prompt_diffs.len(), records.len());
    for d in &outcome.prompt_diffs {
        assert_eq!(d.full_only, steps_block);
        assert_eq!(d.variant_only, "");
        assert_ne!(d.full_fingerprint, d.variant_fingerprint);
    }
}

#[tokio::test]
async fn single_variant_gives_one_row() {
    let (records, script) = ablation_fixture();
    let criteria = vec![criterion("coherence")];
    let templates = templates_for(&criteria, &summarization());
    let outcome = ablation_compare(
        &records,
        &criteria,
        &templates,
        &ScoringConfig::sample_weighted(),
        &backend(script),
        &[Variant::Full],
        &coherence_table(),
    )
    .await
    .unwrap();
    assert_eq!(outcome.report.rows.len(), 1);
    assert!(outcome.prompt_diffs.is_empty());
    let md = outcome.report.to_markdown();
    assert_eq!(md.lines().count(), 5);
}
