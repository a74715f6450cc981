//! Glue between configuration, datasets and training.

use crate::bagdata::{
    apply_partition, generate_synthetic, load_idx, make_mnist_bags, split_dataset, DatasetFile,
    DatasetSplit, InstanceEncoding,
};
use crate::config::{DataSource, ExperimentConfig};
use crate::error::{Error, Result};
use crate::heads::Head;
use crate::train::{train, TrainState, TrainedModel};

/// Generates the dataset described by `cfg` with data seed `seed`, including
/// its train / validation / test partition.
pub fn build_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<DatasetFile> {
    cfg.validate()?;
    let spec = cfg.data.synthetic_spec();
    match cfg.data.source {
        DataSource::Synthetic => {
            let bags = generate_synthetic(&spec, seed)?;
            let split = split_dataset(bags.clone(), cfg.data.split, seed)?;
            Ok(DatasetFile {
                source: "synthetic".into(),
                spec,
                seed,
                encoding: InstanceEncoding::F64,
                bags,
                partition: Some(split.partition()),
            })
        }
        DataSource::Mnist => {
            let path = |p: &Option<std::path::PathBuf>| p.clone().expect("validated");
            let (train_img, train_lbl) = load_idx(
                &path(&cfg.data.mnist_train_images),
                &path(&cfg.data.mnist_train_labels),
            )?;
            let (test_img, test_lbl) = load_idx(
                &path(&cfg.data.mnist_test_images),
                &path(&cfg.data.mnist_test_labels),
            )?;
            let mut train_bags = make_mnist_bags(&train_img, &train_lbl, &spec, seed)?;
            for b in &mut train_bags {
                b.id = format!("train-{}", b.id);
            }
            let test_spec = crate::bagdata::SyntheticSpec {
                n_bags: cfg.data.mnist_test_bags,
                ..spec.clone()
            };
            let mut test_bags =
                make_mnist_bags(&test_img, &test_lbl, &test_spec, seed.wrapping_add(1))?;
            for b in &mut test_bags {
                b.id = format!("test-{}", b.id);
            }
            let [tr, va, _] = cfg.data.split;
            let fit = split_dataset(train_bags.clone(), [tr / (tr + va), va / (tr + va), 0.0], seed)?;
            let mut partition = fit.partition();
            partition.test = test_bags.iter().map(|b| b.id.clone()).collect();
            let mut bags = train_bags;
            bags.extend(test_bags);
            Ok(DatasetFile {
                source: "mnist".into(),
                spec,
                seed,
                encoding: InstanceEncoding::U8,
                bags,
                partition: Some(partition),
            })
        }
    }
}

/// The stored partition, or a fresh split from the config when the file has
/// none.
pub fn dataset_split(data: &DatasetFile, cfg: &ExperimentConfig) -> Result<DatasetSplit> {
    match &data.partition {
        Some(p) => apply_partition(&data.bags, p),
        None => split_dataset(data.bags.clone(), cfg.data.split, data.seed),
    }
}

/// Trains a fresh model with head `head` on `split`.
pub fn train_model(
    cfg: &ExperimentConfig,
    split: &DatasetSplit,
    head: Head,
    seed: u64,
) -> Result<TrainedModel> {
    let input_dim = split
        .train
        .first()
        .and_then(|b| b.dim())
        .ok_or_else(|| Error::domain("empty training split"))?;
    let arch = cfg.net.arch(input_dim);
    let tcfg = crate::train::TrainConfig {
        head,
        seed,
        ..cfg.train.clone()
    };
    let state = TrainState::init(&arch, &tcfg)?;
    train(state, split, &tcfg)
}
