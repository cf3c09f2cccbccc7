use std::io::Write;

use zoorank_core::dataset::{
    self, balanced_subsample, stratified_split, stratified_subsample, CIFAR10_CLASSES, CIFAR_RECORD_BYTES,
};
use zoorank_core::{Dataset32, DatasetError};

#[test]
fn cifar_file_loads_by_path() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    for label in 0..10u8 {
        let mut rec = vec![label * 20; CIFAR_RECORD_BYTES];
        rec[0] = label;
        f.write_all(&rec).unwrap();
    }
    let ds: Dataset32 = dataset::load_cifar_binary(f.path()).unwrap();
    assert_eq!(ds.len(), 10);
    assert_eq!(ds.features.shape(), &[10, 3, 32, 32]);
    assert_eq!(ds.class_names, CIFAR10_CLASSES.map(String::from));
    assert!((ds.features.row(3)[0] - 60.0 / 255.0).abs() < 1e-7);
}

#[test]
fn truncated_cifar_file_is_malformed() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(&[0u8; CIFAR_RECORD_BYTES + 7]).unwrap();
    assert!(matches!(dataset::load_cifar_binary::<f32>(f.path()), Err(DatasetError::MalformedFile(_))));
    assert!(matches!(dataset::load_cifar_binary::<f32>("/no/such/file.bin"), Err(DatasetError::Io { .. })));
}

#[test]
fn csv_file_loads_and_splits() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "x,y,species").unwrap();
    for i in 0..30 {
        let s = ["setosa", "virginica", "versicolor"][i % 3];
        writeln!(f, "{},{},{s}", i as f32 * 0.1, (i % 7) as f32).unwrap();
    }
    let ds: Dataset32 = dataset::load_csv(f.path(), "species").unwrap();
    assert_eq!(ds.class_names, ["setosa", "virginica", "versicolor"]);
    assert_eq!(ds.features.shape(), &[30, 2]);
    let split = stratified_split(&ds, 0.2, 1).unwrap();
    assert_eq!(split.test.class_counts(), [2, 2, 2]);
    assert_eq!(split.train.class_counts(), [8, 8, 8]);
}

#[test]
fn desk_scale_subset_sizes() {
    // Uneven class sizes, as in a single CIFAR batch file.
    let sizes = [1005, 974, 1032, 1016, 999, 937, 1030, 1001, 1025, 981];
    let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &n)| vec![c; n]).collect();
    let features = zoorank_core::Tensor::zeros(&[labels.len(), 1]);
    let names = CIFAR10_CLASSES.map(String::from).to_vec();
    let ds = Dataset32::new("batch", features, labels, names).unwrap();
    let sub = balanced_subsample(&ds, 300, 42).unwrap();
    assert_eq!(sub.class_counts(), vec![300; 10]);
    let split = stratified_split(&sub, 1.0 / 3.0, 42).unwrap();
    assert_eq!((split.train.len(), split.test.len()), (2000, 1000));
    assert_eq!(split.test.class_counts(), vec![100; 10]);
    // Proportional subsampling keeps the imbalance.
    assert_ne!(stratified_subsample(&ds, 3000, 42).unwrap().class_counts(), vec![300; 10]);
}
