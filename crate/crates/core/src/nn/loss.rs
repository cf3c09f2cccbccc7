use super::EngineError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Numerically stable softmax of each row of a `[batch, classes]` tensor.
pub fn softmax_rows<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let k = *logits.shape().last().expect("non-scalar tensor");
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.data().chunks_exact(k) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let start = out.len();
        let mut total = T::zero();
        for &v in row {
            let e = (v - max).exp();
            total += e;
            out.push(e);
        }
        for e in &mut out[start..] {
            *e /= total;
        }
    }
    Tensor::new(logits.shape().to_vec(), out).expect("same shape")
}

/// Mean softmax cross-entropy and its gradient w.r.t. the logits,
/// `(softmax - one_hot) / batch`.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>), EngineError> {
    if logits.rank() != 2 || logits.shape()[0] != labels.len() {
        return Err(EngineError::Dimension(format!(
            "cross_entropy: logits {:?} vs {} labels",
            logits.shape(),
            labels.len()
        )));
    }
    let (b, k) = (logits.shape()[0], logits.shape()[1]);
    if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
        return Err(EngineError::Index(format!("label {l} at position {i} outside [0, {k})")));
    }
    let inv_b = T::one() / T::of(b as f64);
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(b * k);
    for (row, &label) in logits.data().chunks_exact(k).zip(labels) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum_exp: T = row.iter().map(|&v| (v - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        loss += log_z - row[label];
        for (j, &v) in row.iter().enumerate() {
            let p = (v - log_z).exp();
            let target = if j == label { T::one() } else { T::zero() };
            grad.push((p - target) * inv_b);
        }
    }
    Ok((loss * inv_b, Tensor::new(vec![b, k], grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(shape.to_vec(), v).unwrap()
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let p = softmax_rows(&t(&[1, 3], &[0.0, 0.0, 0.0]));
        for &v in p.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        let (loss, _) = cross_entropy(&t(&[1, 3], &[1000.0, 0.0, 0.0]), &[0]).unwrap();
        assert!(loss.abs() < 1e-12);
    }

    #[test]
    fn uniform_logits_give_log_k() {
        let (loss, _) = cross_entropy(&Tensor::<f32>::zeros(&[4, 10]), &[0, 3, 9, 5]).unwrap();
        assert!((loss - 10f32.ln()).abs() < 1e-6);
    }

    #[test]
    fn two_class_gradient_by_hand() {
        let (_, g) = cross_entropy(&t(&[1, 2], &[0.0, 0.0]), &[0]).unwrap();
        assert_eq!(g.data(), &[-0.5, 0.5]);
    }

    #[test]
    fn out_of_range_label_is_an_index_error() {
        let err = cross_entropy(&t(&[1, 2], &[0.0, 0.0]), &[2]).unwrap_err();
        assert!(matches!(err, EngineError::Index(_)));
    }
}
