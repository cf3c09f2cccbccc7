use super::{EngineError, Layer};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// An ordered stack of layers mapping `[batch, input_shape...]` to
/// `[batch, num_classes]` logits.
#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    layers: Vec<Layer<T>>,
    input_shape: Vec<usize>,
    num_classes: usize,
}

impl<T: Scalar> Model<T> {
    pub fn new(layers: Vec<Layer<T>>, input_shape: Vec<usize>, num_classes: usize) -> Self {
        Self { layers, input_shape, num_classes }
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    /// Runs every layer, caching what the backward pass needs.
    pub fn forward(&mut self, batch: &Tensor<T>) -> Result<Tensor<T>, EngineError> {
        if batch.rank() == 0 || batch.shape()[1..] != self.input_shape[..] {
            let first = self.layers.first().map(|l| l.kind().name()).unwrap_or("input");
            return Err(EngineError::Dimension(format!(
                "layer 0 ({first}): expected [batch, {:?}], got {:?}",
                self.input_shape,
                batch.shape()
            )));
        }
        let mut x = batch.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let kind = layer.kind();
            x = layer.forward(x).map_err(|e| annotate(e, i, kind.name()))?;
        }
        if x.shape() != [batch.batch(), self.num_classes] {
            return Err(EngineError::Dimension(format!(
                "model produced {:?}, expected [{}, {}]",
                x.shape(),
                batch.batch(),
                self.num_classes
            )));
        }
        if !x.all_finite() {
            return Err(EngineError::NumericFailure("non-finite logits".into()));
        }
        Ok(x)
    }

    /// Back-propagates the logit gradient; returns parameter gradients in
    /// [`params`](Self::params) order.
    pub fn backward(&mut self, grad_logits: Tensor<T>) -> Result<Vec<Tensor<T>>, EngineError> {
        let mut per_layer: Vec<Vec<Tensor<T>>> = Vec::with_capacity(self.layers.len());
        let mut g = grad_logits;
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            let kind = layer.kind();
            let (gx, grads) = layer.backward(g, i > 0).map_err(|e| annotate(e, i, kind.name()))?;
            per_layer.push(grads);
            match gx {
                Some(gx) => g = gx,
                None => break,
            }
        }
        Ok(per_layer.into_iter().rev().flatten().collect())
    }
}

fn annotate(err: EngineError, index: usize, kind: &str) -> EngineError {
    let tag = |m: String| format!("layer {index} ({kind}): {m}");
    match err {
        EngineError::Dimension(m) => EngineError::Dimension(tag(m)),
        EngineError::Protocol(m) => EngineError::Protocol(tag(m)),
        EngineError::NumericFailure(m) => EngineError::NumericFailure(tag(m)),
        EngineError::Index(m) => EngineError::Index(tag(m)),
    }
}
