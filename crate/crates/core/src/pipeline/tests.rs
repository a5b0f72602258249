use std::collections::BTreeMap;

use tempfile::tempdir;

use super::*;
use crate::dataset::{generate_synthetic, load_dataset, save_dataset, GeneratorConfig, ProblemRecord, SplitMode};
use crate::models::{Gamma, Kernel, MaxFeatures};
use crate::polysys::{parse_system, OrderingLabel};

fn tiny_grids() -> BTreeMap<Family, Vec<Hyperparams>> {
    let mut g = BTreeMap::new();
    g.insert(Family::Knn, vec![Hyperparams::Knn { k: 3 }]);
    g.insert(
        Family::Dt,
        vec![Hyperparams::Dt {
            max_depth: Some(4),
            min_samples_split: 2,
        }],
    );
    g.insert(
        Family::Rf,
        vec![Hyperparams::Rf {
            n_trees: 5,
            max_features: MaxFeatures::Sqrt,
            max_depth: Some(6),
        }],
    );
    g.insert(
        Family::Svm,
        vec![Hyperparams::Svm {
            c: 1.0,
            gamma: Gamma::Scale,
            kernel: Kernel::Rbf,
        }],
    );
    g.insert(
        Family::Mlp,
        vec![Hyperparams::Mlp {
            hidden_sizes: vec![8],
            learning_rate: 0.05,
            epochs: 5,
            batch_size: 16,
        }],
    );
    g
}

fn small_study() -> ReproConfig {
    let mut cfg = ReproConfig::default();
    cfg.generator.count = 150;
    cfg.experiment.grids = tiny_grids();
    cfg.experiment.cv_folds = 3;
    cfg
}

fn labeled(count: usize, seed: u64) -> Dataset {
    let cfg = GeneratorConfig {
        count,
        exclude_ties: true,
        ..GeneratorConfig::default()
    };
    generate_synthetic(&cfg, seed).unwrap()
}

fn unlabeled_file(dir: &Path, systems: &[(&str, &str)]) -> PathBuf {
    let records = systems
        .iter()
        .map(|(id, s)| ProblemRecord::root(*id, parse_system(s).unwrap()))
        .collect();
    let d = Dataset::new(records, BTreeMap::new()).unwrap();
    let path = dir.join("problems.jsonl");
    save_dataset(&d, &path).unwrap();
    path
}

#[test]
fn timings_file_labels_by_argmin() {
    let dir = tempdir().unwrap();
    let input = unlabeled_file(dir.path(), &[("a", "vars 3; x1*x2 - x3"), ("b", "vars 3; x1 + x2^2 + x3")]);
    let timings = dir.path().join("t.csv");
    std::fs::write(&timings, "id,t0,t1,t2,t3,t4,t5\nb,1,1,2,3,4,5\na,5,4,9.9,7.1,8,6\n").unwrap();
    let out = dir.path().join("labeled.csv");
    let d = label_file(&input, &out, &LabelSource::Timings(timings)).unwrap();
    assert_eq!(d.records[0].label, Some(OrderingLabel(1)));
    assert!(!d.records[0].tie);
    assert_eq!(d.records[1].label, Some(OrderingLabel(0)));
    assert!(d.records[1].tie);
    let back = load_dataset(&out).unwrap();
    assert_eq!(back.labels().unwrap(), d.labels().unwrap());
    assert_eq!(back.records[1].timings, d.records[1].timings);
}

#[test]
fn oracle_labels_symmetric_sum_as_tie() {
    let mut d = Dataset::new(
        vec![ProblemRecord::root("s", parse_system("vars 3; x1 + x2 + x3").unwrap())],
        BTreeMap::new(),
    )
    .unwrap();
    label(&mut d, &LabelSource::Oracle).unwrap();
    assert_eq!(d.records[0].label, Some(OrderingLabel(0)));
    assert!(d.records[0].tie);
    assert_eq!(d.records[0].timings.as_ref().unwrap().len(), 6);
}

#[test]
fn timings_join_errors() {
    let dir = tempdir().unwrap();
    let input = unlabeled_file(dir.path(), &[("a", "vars 3; x1*x2 - x3")]);
    let cases = [
        ("id,t0,t1,t2,t3,t4,t5\n", "MissingTimings"),
        ("id,t0,t1,t2,t3,t4,t5\na,1,2,3,4,5,6\nzz,1,2,3,4,5,6\n", "UnknownTimingsId"),
        ("id,t0,t1,t2,t3,t4,t5\na,inf,inf,inf,inf,inf,inf\n", "Record"),
        ("id,t0,t1\na,1,2\n", "Config"),
    ];
    for (text, kind) in cases {
        let t = dir.path().join("t.csv");
        std::fs::write(&t, text).unwrap();
        let err = label_file(&input, &dir.path().join("o.csv"), &LabelSource::Timings(t)).unwrap_err();
        assert!(format!("{err:?}").starts_with(kind), "{kind}: {err:?}");
        assert!(err.is_validation());
    }
}

#[test]
fn all_timeouts_reported_with_id() {
    let dir = tempdir().unwrap();
    let input = unlabeled_file(dir.path(), &[("slow", "vars 3; x1*x2 - x3")]);
    let t = dir.path().join("t.csv");
    std::fs::write(&t, "id,t0,t1,t2,t3,t4,t5\nslow,inf,inf,inf,inf,inf,inf\n").unwrap();
    let err = label_file(&input, &dir.path().join("o.csv"), &LabelSource::Timings(t)).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("slow") && msg.contains("timed out"), "{msg}");
}

#[test]
fn featurize_is_reproducible() {
    let dir = tempdir().unwrap();
    let input = unlabeled_file(dir.path(), &[("a", "vars 3; x1*x2 - x3"), ("b", "vars 3; x1^2 + x3; x2 - 1")]);
    let (o1, o2) = (dir.path().join("f1.csv"), dir.path().join("f2.csv"));
    featurize(&input, &o1).unwrap();
    featurize(&input, &o2).unwrap();
    let text = std::fs::read_to_string(&o1).unwrap();
    assert_eq!(text, std::fs::read_to_string(&o2).unwrap());
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.iter().filter(|h| h.starts_with('f')).count(), 11);
}

#[test]
fn missing_io_is_not_validation() {
    let err = featurize(Path::new("/nonexistent/in.jsonl"), Path::new("/tmp/x.csv")).unwrap_err();
    assert!(!err.is_validation());
}

#[test]
fn experiment_rows_and_leakage() {
    let roots = labeled(60, 3);
    let aug = crate::augment::augment_dataset(&roots).unwrap();
    let cfg = ExperimentConfig {
        grids: tiny_grids(),
        cv_folds: 3,
        split_mode: SplitMode::Orbit,
        ..ExperimentConfig::default()
    };
    let (rep, arts) = run_experiment(("A", &aug), ("B", &aug.clone()), &cfg, 1).unwrap();
    assert_eq!(rep.rows.len(), 2 * (Family::ALL.len() + 1));
    assert_eq!(arts.len(), 2);
    for d in &rep.directions {
        assert_eq!(d.leakage, 0.0);
        assert_eq!(d.train_size + d.test_size, aug.len());
    }
    for r in &rep.rows {
        for a in [r.train_accuracy, r.test_accuracy, r.cross_dataset_accuracy] {
            assert!((0.0..=1.0).contains(&a));
        }
    }
    let csv = report_csv(std::slice::from_ref(&rep));
    assert_eq!(csv.lines().count(), 1 + rep.rows.len());
    let md = report_markdown(std::slice::from_ref(&rep));
    assert_eq!(md.matches("### Trained on").count(), 2);

    let no_baseline = ExperimentConfig {
        random_baseline: false,
        families: vec![Family::Knn, Family::Dt],
        ..cfg
    };
    let (rep, _) = run_experiment(("A", &aug), ("B", &aug), &no_baseline, 1).unwrap();
    assert_eq!(rep.rows.len(), 4);
}

#[test]
fn experiment_rejects_missing_class_and_bad_config() {
    let d = labeled(30, 4);
    let mut skewed = d.clone();
    skewed.records.retain(|r| r.label != Some(OrderingLabel(2)));
    let cfg = ExperimentConfig {
        grids: tiny_grids(),
        cv_folds: 2,
        families: vec![Family::Knn],
        ..ExperimentConfig::default()
    };
    assert!(matches!(
        run_experiment(("A", &skewed), ("B", &d), &cfg, 0),
        Err(PipelineError::MissingClass { label: 2, .. })
    ));
    for bad in [
        ExperimentConfig {
            test_fraction: 1.0,
            ..cfg.clone()
        },
        ExperimentConfig {
            cv_folds: 1,
            ..cfg.clone()
        },
        ExperimentConfig {
            families: vec![],
            ..cfg.clone()
        },
    ] {
        assert!(matches!(
            run_experiment(("A", &d), ("B", &d), &bad, 0),
            Err(PipelineError::Config(_))
        ));
    }
    let mut wrong = cfg.clone();
    wrong.grids.insert(Family::Dt, vec![Hyperparams::Knn { k: 1 }]);
    assert!(wrong.validate().is_err());
}

#[test]
fn config_json_round_trip() {
    let cfg = ReproConfig::default();
    let text = serde_json::to_string(&cfg).unwrap();
    let back: ReproConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);
    let partial: ExperimentConfig = serde_json::from_str(r#"{"cv_folds": 3}"#).unwrap();
    assert_eq!(partial.cv_folds, 3);
    assert_eq!(partial.test_fraction, 0.2);
    assert!(serde_json::from_str::<ExperimentConfig>(r#"{"folds": 3}"#).is_err());
}

#[test]
fn study_datasets_and_persisted_accuracies() {
    let dir = tempdir().unwrap();
    let cfg = small_study();
    let out = repro_bias_study(11, &cfg, Some(dir.path())).unwrap();
    assert_eq!(out.balanced.len(), 6 * out.roots.len());
    let dist = class_distribution(&out.balanced);
    assert!(dist.counts.iter().all(|&c| c == out.roots.len()));
    assert_eq!(out.reports.len(), 2);
    assert_eq!(out.reports[1].directions[0].leakage, 0.0);
    assert!(out.reports[0].directions[1].leakage > 0.9);
    assert_eq!(bias_pattern(&out.reports[0]).len(), Family::ALL.len());

    // Accuracies recomputed from persisted models and splits match the report.
    let rep = &out.reports[1];
    let base = dir.path().join("orbit");
    for (name, data) in [(BIASED_NAME, &out.biased), (BALANCED_NAME, &out.balanced)] {
        let ids: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(base.join("splits").join(format!("{name}.json"))).unwrap())
                .unwrap();
        let pick = |key: &str| -> Dataset {
            let wanted: std::collections::HashSet<&str> =
                ids[key].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
            Dataset {
                records: data.records.iter().filter(|r| wanted.contains(r.id.as_str())).cloned().collect(),
                provenance: BTreeMap::new(),
            }
        };
        let (train_d, test_d) = (pick("train"), pick("test"));
        for family in Family::ALL {
            let path = base
                .join("models")
                .join(format!("{name}_{}.json", family.name().to_lowercase()));
            let model = models::load_model(&path).unwrap();
            let scaler = model.scaler.clone().unwrap();
            let row = rep.row(name, family.name()).unwrap();
            let train_acc = models::accuracy(&model, &dataset_samples(&train_d, &scaler).unwrap()).unwrap();
            let test_acc = models::accuracy(&model, &dataset_samples(&test_d, &scaler).unwrap()).unwrap();
            assert_eq!(train_acc, row.train_accuracy, "{name} {family}");
            assert_eq!(test_acc, row.test_accuracy, "{name} {family}");
        }
    }
    for f in ["report.csv", "report.md", "report.json", "D1.distribution.csv", "D2.summary.json", "roots.jsonl"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn study_reports_are_byte_identical() {
    let (d1, d2) = (tempdir().unwrap(), tempdir().unwrap());
    let mut cfg = small_study();
    cfg.split_modes = vec![SplitMode::Orbit];
    repro_bias_study(5, &cfg, Some(d1.path())).unwrap();
    repro_bias_study(5, &cfg, Some(d2.path())).unwrap();
    for f in ["report.csv", "report.md", "report.json", "orbit/report.json", "D1.csv"] {
        assert_eq!(
            std::fs::read(d1.path().join(f)).unwrap(),
            std::fs::read(d2.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn train_and_evaluate_files() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("d.csv");
    save_dataset(&labeled(40, 8), &data).unwrap();
    let model_path = dir.path().join("m.json");
    let cfg = TrainConfig {
        family: Family::Knn,
        grid: Some(vec![Hyperparams::Knn { k: 1 }, Hyperparams::Knn { k: 3 }]),
        cv_folds: 4,
    };
    train_file(&data, &model_path, &cfg, 2).unwrap();
    let acc = evaluate_file(&model_path, &data).unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let bad = TrainConfig {
        family: Family::Dt,
        ..cfg
    };
    assert!(matches!(
        train_file(&data, &model_path, &bad, 2),
        Err(PipelineError::Config(_))
    ));
}
