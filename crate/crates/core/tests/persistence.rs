use promil::bagdata::{
    generate_synthetic, load_idx, split_dataset, DatasetFile, InstanceEncoding, SyntheticSpec,
};
use promil::bernstein::QuantileParam;
use promil::config::ExperimentConfig;
use promil::heads::Head;
use promil::metrics::score_bags;
use promil::model::{Model, ModelFile, TrainingMeta};
use promil::net::{init_params, Activation, NetArch};
use promil::Error;

fn meta() -> TrainingMeta {
    TrainingMeta {
        seed: 1,
        epochs_run: 3,
        best_epoch: 2,
        best_val_metric: 0.91,
        val_metric: "auc".into(),
        saved_at_unix: None,
    }
}

#[test]
fn model_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let arch = NetArch {
        input_dim: 2,
        hidden_dims: vec![5, 3],
        activation: Activation::Relu,
    };
    let model = Model::new(
        init_params(&arch, 4).unwrap(),
        QuantileParam::from_raw(-0.123456789012345),
        Head::Promil,
    );
    let path = dir.path().join("m.json");
    ModelFile::from_model(&model, meta()).save(&path).unwrap();
    let back = ModelFile::load(&path).unwrap().to_model().unwrap();
    assert_eq!(back.q.raw().to_bits(), model.q.raw().to_bits());
    assert_eq!(back.net, model.net);

    let bags = generate_synthetic(&SyntheticSpec { n_bags: 30, ..SyntheticSpec::default() }, 2).unwrap();
    for head in Head::ALL {
        let a = score_bags(&model, &bags, head).unwrap();
        let b = score_bags(&back, &bags, head).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn model_file_rejects_wrong_schema() {
    let arch = NetArch::logistic_regression(2);
    let model = Model::new(init_params(&arch, 0).unwrap(), QuantileParam::from_raw(0.0), Head::Promil);
    let text = ModelFile::from_model(&model, meta()).to_json().unwrap();
    let bad = text.replace("promil-model/1", "promil-model/9");
    assert!(ModelFile::from_json(&bad).is_err());
}

#[test]
fn dataset_round_trip_keeps_partition() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        n_bags: 50,
        ..SyntheticSpec::default()
    };
    let bags = generate_synthetic(&spec, 6).unwrap();
    let split = split_dataset(bags.clone(), [0.5, 0.2, 0.3], 6).unwrap();
    let file = DatasetFile {
        source: "synthetic".into(),
        spec,
        seed: 6,
        encoding: InstanceEncoding::F64,
        bags,
        partition: Some(split.partition()),
    };
    let path = dir.path().join("d.json");
    file.save(&path).unwrap();
    let back = DatasetFile::load(&path).unwrap();
    assert_eq!(back, file);
    let resplit = promil::pipeline::dataset_split(&back, &ExperimentConfig::default()).unwrap();
    assert_eq!(resplit, split);
}

#[test]
fn idx_errors_name_an_offset() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img");
    let lbl = dir.path().join("lbl");
    // two 2x2 images, second one truncated
    let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
    bytes.extend([1, 2, 3, 4, 5, 6]);
    std::fs::write(&img, bytes).unwrap();
    std::fs::write(&lbl, [0, 0, 8, 1, 0, 0, 0, 2, 9, 1]).unwrap();
    match load_idx(&img, &lbl) {
        Err(Error::Parse { offset, .. }) => assert!(offset >= 16),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(matches!(load_idx(&dir.path().join("none"), &lbl), Err(Error::Io { .. })));
}
