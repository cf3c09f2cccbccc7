mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::{class_metrics_match, oracle_class_metrics};
use zoorank_core::evaluation::{confusion_matrix_k, overall_metrics, per_class_metrics};

#[test]
fn thousand_random_instances_match_counting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for instance in 0..1000 {
        let n = rng.random_range(1..=50);
        let k = rng.random_range(2..=5);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let cm = confusion_matrix_k(&pred, &truth, k).unwrap();
        let metrics = per_class_metrics(&cm);
        assert_eq!(metrics.len(), k);
        for (c, m) in metrics.iter().enumerate() {
            let o = oracle_class_metrics(&pred, &truth, c);
            assert!(class_metrics_match(m, &o), "instance {instance}, class {c}: {m:?} vs {o:?}");
            assert_eq!(m.support as usize, truth.iter().filter(|&&t| t == c).count());
        }
        let hits = pred.iter().zip(&truth).filter(|(p, t)| p == t).count();
        assert_eq!(overall_metrics(&cm).accuracy, hits as f64 / n as f64);
    }
}

#[test]
fn hand_case() {
    // cm = [[1, 1], [0, 1]]: rows are truth, columns predictions.
    let truth = [0, 0, 1];
    let pred = [0, 1, 1];
    let cm = confusion_matrix_k(&pred, &truth, 2).unwrap();
    assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 1]]);
    let m = &per_class_metrics(&cm)[0];
    assert_eq!((m.sensitivity, m.precision, m.specificity), (0.5, 1.0, 1.0));
}
