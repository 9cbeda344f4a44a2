use gqml_core::classical::{CnnSpec, EncoderSpec, Head, MlpSpec, Padding, SiameseModel};
use gqml_core::dataset::{generate_dataset, DEFAULT_EPSILON};
use gqml_core::qnn_meas::{LassoConfig, MeasurementModel};
use gqml_core::qnn_var::{AnsatzParams, AnsatzSpec, VariationalModel};
use gqml_core::seeded_rng;
use gqml_core::symmetry::{build_pool, PoolOp};
use gqml_workbench::io::{
    dataset_to_json, parse_dataset, read_dataset, read_model_json, read_siamese, siamese_from_bytes, siamese_to_bytes,
    write_dataset, write_model_json, write_siamese, AnsatzFile, LassoFile,
};
use gqml_workbench::WorkbenchError;
use std::path::Path;

#[test]
fn dataset_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.json");
    let ds = generate_dataset(3, DEFAULT_EPSILON, 6, 81).unwrap();
    write_dataset(&path, &ds).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), ds);
}

fn field_error(text: &str) -> (usize, String) {
    match parse_dataset(Path::new("bad.json"), text) {
        Err(WorkbenchError::Field { line, field, .. }) => (line, field),
        other => panic!("expected a field error, got {other:?}"),
    }
}

#[test]
fn malformed_samples_report_field_and_line() {
    let ds = generate_dataset(2, DEFAULT_EPSILON, 2, 82).unwrap();
    let good = dataset_to_json(&ds);
    let lines: Vec<&str> = good.lines().collect();
    let sample_line = lines.iter().position(|l| l.contains("\"x1\"")).unwrap() + 1;

    let bad_label = good.replacen("\"y\":1", "\"y\":7", 1);
    let (line, field) = field_error(&bad_label);
    assert!(field.starts_with("samples["), "{field}");
    assert!(line >= sample_line, "line {line}");

    let bad_pixel = good.replacen("\"x1\":\"", "\"x1\":\"2", 1);
    let (_, field) = field_error(&bad_pixel);
    assert!(field.starts_with("samples[0]"), "{field}");

    let wrong_n = good.replacen("\"n\": 2", "\"n\": 3", 1);
    let (line, field) = field_error(&wrong_n);
    assert_eq!(field, "samples[0].x1");
    assert_eq!(line, sample_line);

    assert!(matches!(parse_dataset(Path::new("x"), "{ not json"), Err(WorkbenchError::Json { .. })));
}

#[test]
fn measurement_model_round_trip_preserves_scores() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lasso.json");
    let train = generate_dataset(3, DEFAULT_EPSILON, 5, 83).unwrap();
    let pool = build_pool(3, PoolOp::DEFAULT_K).unwrap();
    let model = MeasurementModel::fit(&train.samples, &pool, &LassoConfig::default()).unwrap();
    write_model_json(&path, &LassoFile::from_model(3, &model.lasso)).unwrap();
    let back = read_model_json::<LassoFile>(&path).unwrap().to_model().unwrap();
    let restored = MeasurementModel { pool: pool.clone(), lasso: back };
    for s in &generate_dataset(3, DEFAULT_EPSILON, 5, 84).unwrap().samples {
        assert_eq!(model.score(s).unwrap(), restored.score(s).unwrap());
    }
}

#[test]
fn variational_model_round_trip_preserves_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ansatz.json");
    let spec = AnsatzSpec::default();
    let params = AnsatzParams::random(spec.num_angles(), 1.0, &mut seeded_rng(85));
    let model = VariationalModel::new(&spec, 2, PoolOp::Swap, params).unwrap();
    write_model_json(&path, &AnsatzFile::from_model(&model)).unwrap();
    let back = read_model_json::<AnsatzFile>(&path).unwrap().to_model().unwrap();
    assert_eq!(back.params, model.params);
    for s in &generate_dataset(2, DEFAULT_EPSILON, 3, 86).unwrap().samples {
        assert_eq!(model.predict(s).unwrap(), back.predict(s).unwrap());
    }
}

#[test]
fn model_json_rejects_unknown_operators() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ansatz.json");
    std::fs::write(
        &path,
        r#"{"n": 2, "layers": 1, "generators": ["bogus"], "observable": "swap", "theta": [0.0], "a": 1.0, "b": 0.0}"#,
    )
    .unwrap();
    assert!(read_model_json::<AnsatzFile>(&path).unwrap().to_model().is_err());
}

#[test]
fn siamese_weights_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for (spec, n, head) in [
        (EncoderSpec::Mlp(MlpSpec { widths: vec![8, 4] }), 3, Head::Logistic),
        (EncoderSpec::Cnn(CnnSpec::default()), 4, Head::ExpDecay),
        (EncoderSpec::Cnn(CnnSpec { padding: Some(Padding::Same), ..CnnSpec::default() }), 6, Head::Logistic),
    ] {
        let model = SiameseModel::init(&spec, n, head, 87).unwrap();
        let path = dir.path().join(format!("{}-{n}.bin", spec.name()));
        write_siamese(&path, &model).unwrap();
        assert_eq!(read_siamese(&path).unwrap(), model);
    }
}

#[test]
fn corrupted_tensor_files_are_rejected() {
    let model = SiameseModel::init(&EncoderSpec::Mlp(MlpSpec { widths: vec![4] }), 2, Head::Logistic, 88).unwrap();
    let bytes = siamese_to_bytes(&model);
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(siamese_from_bytes(&bad_magic).is_err());
    assert!(siamese_from_bytes(&bytes[..bytes.len() - 8]).is_err());
    assert!(siamese_from_bytes(&bytes[..bytes.len() - 3]).is_err());
    assert!(siamese_from_bytes(&bytes[..20]).is_err());
}
