use routekd::data::{
    generate_synthetic_vr, load_csv, sample_basic_data, save_csv, ExitProbabilities, FeatureScaler, Provenance,
    ScenarioSpec, DEFAULT_TRAVEL_TIMES,
};
use routekd::distill::{default_student, pretrain_teacher, TrainConfig, TrainingTrace};
use routekd::eval::{Accuracies, ComparisonReport};
use routekd::gmm::{fit_em, records_to_matrix, EmConfig};
use routekd::{Encoded, GmmModel, Mlp};

#[test]
fn dataset_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_synthetic_vr(&ScenarioSpec::default(), 3, 9).unwrap();
    let path = dir.path().join("vr.csv");
    save_csv(&ds, &path).unwrap();
    let back = load_csv(&path, Provenance::SyntheticVr).unwrap();
    assert_eq!(ds, back);
}

#[test]
fn trained_model_and_trace_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let basic = sample_basic_data(&ExitProbabilities::uniform(), 120, &DEFAULT_TRAVEL_TIMES, 4).unwrap();
    let scaler = FeatureScaler::fit(&basic).unwrap();
    let data: Encoded = scaler.encode_dataset(&basic).unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    let trained = pretrain_teacher(&default_student(), &data, Some(&data), &cfg).unwrap();

    let model_path = dir.path().join("m.json");
    trained.best.save(&model_path).unwrap();
    let loaded = Mlp::load(&model_path).unwrap();
    assert_eq!(
        trained.best.infer(&data.features).unwrap(),
        loaded.infer(&data.features).unwrap()
    );
    assert_eq!(std::fs::read_to_string(&model_path).unwrap(), loaded.to_json().unwrap() + "\n");

    let trace_path = dir.path().join("trace.csv");
    trained.trace.save_csv(&trace_path).unwrap();
    assert_eq!(TrainingTrace::load_csv(&trace_path).unwrap(), trained.trace);
}

#[test]
fn mixture_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_synthetic_vr(&ScenarioSpec::default(), 5, 2).unwrap();
    let (gmm, _) = fit_em(&records_to_matrix(&ds), 3, &EmConfig::default()).unwrap();
    let path = dir.path().join("gmm.json");
    gmm.save(&path).unwrap();
    assert_eq!(GmmModel::load(&path).unwrap(), gmm);
}

#[test]
fn report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |w| ExitProbabilities::from_weights(w).unwrap();
    let report = ComparisonReport::build(
        p([1.0, 2.0, 3.0, 4.0]),
        p([4.0, 3.0, 2.0, 1.0]),
        p([1.0, 1.0, 1.0, 1.0]),
        p([0.3, 0.1, 0.5, 0.1]),
        Accuracies {
            teacher_on_basic: 0.25,
            student_standalone: 0.5,
            distilled: 0.75,
        },
    )
    .unwrap();
    let csv = dir.path().join("report.csv");
    report.save_csv(&csv).unwrap();
    assert_eq!(ComparisonReport::load_csv(&csv).unwrap(), report);
    let svg = report.to_svg();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg, report.to_svg());
}
