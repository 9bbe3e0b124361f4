mod common;

use common::oracle;
use geval::metaeval::{
    aggregate_correlation, compute_row, kendall_tau, pearson, spearman, tie_fraction, AggregationMode,
    AggregationSpec, Coefficient, CorrelationError, CorrelationReport, MetaevalError, TableSpec, TauVariant,
    UndefinedPolicy,
};
use geval::model::ScoreDistribution;
use geval::{EvalRecord, JudgeResult, ScoreScale};
use proptest::prelude::*;

fn series() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..=30).prop_flat_map(|n| {
        let value = prop_oneof![(0i32..6).prop_map(f64::from), -50.0f64..50.0];
        (prop::collection::vec(value.clone(), n), prop::collection::vec(value, n))
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coefficients_match_brute_force((x, y) in series()) {
        match (spearman(&x, &y), oracle::spearman(&x, &y)) {
            (Ok(a), Some(b)) => prop_assert!(close(a, b), "spearman {a} vs {b}"),
            (Err(CorrelationError::Undefined), None) => {}
            (a, b) => prop_assert!(false, "spearman disagreement {a:?} vs {b:?}"),
        }
        match (pearson(&x, &y), oracle::pearson(&x, &y)) {
            (Ok(a), Some(b)) => prop_assert!(close(a, b), "pearson {a} vs {b}"),
            (Err(CorrelationError::Undefined), None) => {}
            (a, b) => prop_assert!(false, "pearson disagreement {a:?} vs {b:?}"),
        }
        prop_assert!(close(kendall_tau(&x, &y, TauVariant::TauA).unwrap(), oracle::tau_a(&x, &y)));
        match (kendall_tau(&x, &y, TauVariant::TauB), oracle::tau_b(&x, &y)) {
            (Ok(a), Some(b)) => prop_assert!(close(a, b), "tau_b {a} vs {b}"),
            (Err(CorrelationError::Undefined), None) => {}
            (a, b) => prop_assert!(false, "tau_b disagreement {a:?} vs {b:?}"),
        }
        prop_assert!(close(tie_fraction(&x), oracle::tie_fraction(&x)));
    }

    #[test]
    fn coefficients_are_bounded_and_symmetric((x, y) in series()) {
        for coef in [Coefficient::Pearson, Coefficient::Spearman, Coefficient::Kendall] {
            let a = geval::metaeval::correlate(coef, &x, &y, TauVariant::TauB);
            let b = geval::metaeval::correlate(coef, &y, &x, TauVariant::TauB);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((-1.0..=1.0).contains(&a));
                    prop_assert!(close(a, b));
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "asymmetric {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn rank_coefficients_ignore_monotone_maps((x, y) in series(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let mapped: Vec<f64> = x.iter().map(|v| (v * scale + shift).exp().min(1e300) + v * scale).collect();
        for variant in [TauVariant::TauA, TauVariant::TauB] {
            match (kendall_tau(&x, &y, variant), kendall_tau(&mapped, &y, variant)) {
                (Ok(a), Ok(b)) => prop_assert!(close(a, b)),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }
        match (spearman(&x, &y), spearman(&mapped, &y)) {
            (Ok(a), Ok(b)) => prop_assert!(close(a, b)),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn tau_variants_agree_without_ties(n in 3usize..30, seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut y = x.clone();
        y.shuffle(&mut rng);
        let a = kendall_tau(&x, &y, TauVariant::TauA).unwrap();
        let b = kendall_tau(&x, &y, TauVariant::TauB).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn tau_b_hand_example_matches_enumeration() {
    let x = [1.0, 2.0, 2.0, 3.0];
    let y = [1.0, 2.0, 3.0, 4.0];
    let expected = oracle::tau_b(&x, &y).unwrap();
    assert!(close(expected, 5.0 / 30f64.sqrt()));
    assert!(close(kendall_tau(&x, &y, TauVariant::TauB).unwrap(), expected));
}

fn result(id: &str, criterion: &str, score: f64) -> JudgeResult {
    let scale = ScoreScale::range(1, 5).unwrap();
    JudgeResult {
        record_id: id.into(),
        criterion: criterion.into(),
        distribution: ScoreDistribution::degenerate(&scale, 3).unwrap(),
        final_score: score,
        raw_responses: vec![],
        parse_failures: 0,
        prompt_fingerprint: String::new(),
    }
}

fn rec(id: &str, doc: &str, aspect: &str, human: f64, provenance: &str) -> EvalRecord {
    EvalRecord {
        record_id: id.into(),
        doc_id: doc.into(),
        system_id: id.into(),
        source: "s".into(),
        extra_context: None,
        output: "o".into(),
        human_ratings: [(aspect.to_string(), human)].into(),
        provenance: provenance.into(),
    }
}

fn grid(docs: usize, systems: usize, f: impl Fn(f64) -> f64) -> (Vec<JudgeResult>, Vec<EvalRecord>) {
    let mut results = Vec::new();
    let mut records = Vec::new();
    for d in 0..docs {
        for s in 0..systems {
            let id = format!("d{d}-s{s}");
            let human = ((d + 2 * s) % (systems + 1)) as f64 + s as f64 * 0.25;
            records.push(rec(&id, &format!("d{d}"), "coherence", human, "test"));
            results.push(result(&id, "coherence", f(human)));
        }
    }
    (results, records)
}

#[test]
fn summary_level_perfect_agreement() {
    let (results, records) = grid(2, 3, |h| h);
    let spec = AggregationSpec::new(AggregationMode::SummaryLevel);
    let agg = aggregate_correlation(&results, &records, "coherence", Coefficient::Spearman, &spec).unwrap();
    assert_eq!((agg.value, agg.groups_used, agg.groups_skipped), (1.0, 2, 0));
    let pooled = aggregate_correlation(&results, &records, "coherence", Coefficient::Spearman, &AggregationSpec::new(AggregationMode::Pooled)).unwrap();
    assert!(close(pooled.value, 1.0));
}

#[test]
fn constant_human_group_is_skipped() {
    let (mut results, mut records) = grid(2, 3, |h| h);
    for (i, r) in records.iter_mut().enumerate().filter(|(_, r)| r.doc_id == "d1") {
        r.human_ratings.insert("coherence".into(), 3.0);
        results[i].final_score = i as f64;
    }
    let spec = AggregationSpec::new(AggregationMode::SummaryLevel);
    let agg = aggregate_correlation(&results, &records, "coherence", Coefficient::Spearman, &spec).unwrap();
    assert_eq!((agg.groups_used, agg.groups_skipped), (1, 1));
    let zero = AggregationSpec {
        undefined_policy: UndefinedPolicy::Zero,
        ..spec
    };
    let agg = aggregate_correlation(&results, &records, "coherence", Coefficient::Spearman, &zero).unwrap();
    assert_eq!((agg.value, agg.groups_used), (0.5, 2));
}

#[test]
fn missing_aspect_is_named() {
    let (results, records) = grid(2, 3, |h| h);
    let spec = AggregationSpec::new(AggregationMode::SummaryLevel);
    let err = aggregate_correlation(&results, &records, "fluency", Coefficient::Spearman, &spec).unwrap_err();
    assert_eq!(err, MetaevalError::NoPairs("fluency".into()));
}

#[test]
fn unknown_record_is_error() {
    let (mut results, records) = grid(2, 3, |h| h);
    results.push(result("ghost", "coherence", 1.0));
    let spec = AggregationSpec::new(AggregationMode::Pooled);
    let err = aggregate_correlation(&results, &records, "coherence", Coefficient::Pearson, &spec).unwrap_err();
    assert_eq!(err, MetaevalError::UnknownRecord("ghost".into()));
}

#[test]
fn csv_and_json_numbers_agree() {
    let mut results = Vec::new();
    let mut records = Vec::new();
    for (i, aspect) in ["coherence", "consistency", "fluency", "relevance"].iter().enumerate() {
        let (r, mut rs) = grid(4, 4, |h| (h * 1.7 + i as f64).sin());
        for x in r {
            results.push(JudgeResult { criterion: aspect.to_string(), ..x });
        }
        for x in rs.iter_mut() {
            let v = x.human_ratings.remove("coherence").unwrap();
            x.human_ratings.insert(aspect.to_string(), v);
        }
        records.extend(rs);
    }
    // Records repeat ids across aspects; keep one record per id with all aspects.
    let mut merged: std::collections::BTreeMap<String, EvalRecord> = Default::default();
    for r in records {
        merged
            .entry(r.record_id.clone())
            .and_modify(|m| m.human_ratings.extend(r.human_ratings.clone()))
            .or_insert(r);
    }
    let records: Vec<EvalRecord> = merged.into_values().collect();
    let table = TableSpec::summeval();
    let row = compute_row("G-Eval", &table, &results, &records).unwrap();
    let report = CorrelationReport::new(&table, vec![row]);
    let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    let csv = report.to_csv().unwrap();
    let mut csv_values = Vec::new();
    for line in csv.lines().skip(1) {
        for field in line.split(',').skip(2) {
            csv_values.push(field.parse::<f64>().unwrap());
        }
    }
    let mut json_values = Vec::new();
    let row = &json["rows"][0];
    for cell in row["cells"].as_array().unwrap() {
        json_values.push(cell["value"].as_f64().unwrap());
    }
    for avg in row["averages"].as_array().unwrap() {
        json_values.push(avg["value"].as_f64().unwrap());
    }
    assert_eq!(csv_values, json_values);
    assert_eq!(json["tau_variant"], "tau_b");
    assert_eq!(json["aggregation"], "summary_level");
    assert!(report.to_markdown().starts_with("| Metrics | Coherence ρ | Coherence τ |"));
}

#[test]
fn qags_table_filters_subsets_and_inverts() {
    let mut results = Vec::new();
    let mut records = Vec::new();
    for (subset, offset) in [("qags_cnn", 0), ("qags_xsum", 10)] {
        for i in 0..5 {
            let id = format!("{subset}-{i}");
            let human = i as f64 / 4.0;
            records.push(rec(&id, &id, "consistency", human, subset));
            // Judge reports P(inconsistent): high when humans see few consistent sentences.
            results.push(result(&id, "consistency", 1.0 - human * 0.9 - offset as f64 * 0.001));
        }
    }
    let table = TableSpec::qags();
    let row = compute_row("G-Eval", &table, &results, &records).unwrap();
    assert!(row.cells.iter().all(|c| close(c.value, 1.0) && c.n_pairs == 5));
    let md = CorrelationReport::new(&table, vec![row]).to_markdown();
    assert!(md.starts_with("| Metrics | QAGS-CNN r | QAGS-CNN ρ | QAGS-CNN τ | QAGS-XSUM r |"));
    assert!(md.contains("Average τ"));
}

#[test]
fn topical_chat_table_layout() {
    let table = TableSpec::topical_chat();
    let labels: Vec<&str> = table.columns.iter().map(|c| c.label.as_str()).collect();
    assert_eq!(labels, vec!["Naturalness", "Coherence", "Engagingness", "Groundedness"]);
    assert_eq!(table.coefficients, vec![Coefficient::Pearson, Coefficient::Spearman]);
    assert_eq!(table.aggregation.mode, AggregationMode::TurnLevel);
}

#[test]
fn greedy_ties_exceed_weighted_ties() {
    let greedy = [3.0, 3.0, 4.0, 3.0, 4.0, 3.0];
    let weighted = [3.1, 3.25, 3.9, 2.95, 4.2, 3.4];
    assert!(tie_fraction(&greedy) > tie_fraction(&weighted));
}
