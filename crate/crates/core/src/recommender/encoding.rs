use std::cmp::Ordering;

use super::SearchError;
use crate::nn::OptimizerKind;
use crate::zoo::{self, HyperparameterConfig, Template, BATCH_SIZES, EPOCHS_MAX, EPOCHS_MIN, LAYERS_MAX, LAYERS_MIN};

/// Dimension of the encoded space.
pub const ENCODED_DIM: usize = 14;

const TEMPLATE_AT: usize = 0;
const OPTIMIZER_AT: usize = 4;
const BATCH_AT: usize = 7;
const LAYERS_AT: usize = 11;
const EPOCHS_AT: usize = 12;
const LR_AT: usize = 13;

/// A configuration mapped into `[0, 1]^14`: one-hot template (4), optimizer
/// (3) and batch size (4), then layers, epochs and log10 learning rate
/// scaled to the unit interval. The seed is not encoded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedPoint(pub [f64; ENCODED_DIM]);

impl EncodedPoint {
    pub fn coords(&self) -> &[f64; ENCODED_DIM] {
        &self.0
    }

    pub fn squared_distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.squared_distance(other).sqrt()
    }

    /// Total lexicographic order on the coordinates.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

fn position<T: PartialEq>(items: &[T], x: &T) -> usize {
    items.iter().position(|i| i == x).unwrap_or(0)
}

/// Encodes without validating; out-of-domain values land outside `[0, 1]`.
pub(crate) fn encode_unchecked(c: &HyperparameterConfig) -> EncodedPoint {
    let mut x = [0.0; ENCODED_DIM];
    x[TEMPLATE_AT + position(&Template::ALL, &c.template)] = 1.0;
    x[OPTIMIZER_AT + position(&OptimizerKind::ALL, &c.optimizer)] = 1.0;
    if let Some(b) = BATCH_SIZES.iter().position(|&b| b == c.batch_size) {
        x[BATCH_AT + b] = 1.0;
    }
    x[LAYERS_AT] = (c.layers as f64 - LAYERS_MIN as f64) / (LAYERS_MAX - LAYERS_MIN) as f64;
    x[EPOCHS_AT] = (c.epochs as f64 - EPOCHS_MIN as f64) / (EPOCHS_MAX - EPOCHS_MIN) as f64;
    x[LR_AT] = (c.learning_rate.log10() + 4.0) / 3.0;
    EncodedPoint(x)
}

pub fn encode_config(c: &HyperparameterConfig) -> Result<EncodedPoint, SearchError> {
    let violations = zoo::validate(c);
    if !violations.is_empty() {
        return Err(SearchError::Validation(violations.join("; ")));
    }
    Ok(encode_unchecked(c))
}

fn argmax(block: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in block.iter().enumerate() {
        if v > block[best] {
            best = i;
        }
    }
    best
}

/// Nearest configuration to an encoded point; the seed is 0.
pub fn decode_point(p: &EncodedPoint) -> HyperparameterConfig {
    let x = &p.0;
    let unit = |v: f64| v.clamp(0.0, 1.0);
    HyperparameterConfig {
        template: Template::ALL[argmax(&x[TEMPLATE_AT..OPTIMIZER_AT])],
        optimizer: OptimizerKind::ALL[argmax(&x[OPTIMIZER_AT..BATCH_AT])],
        batch_size: BATCH_SIZES[argmax(&x[BATCH_AT..LAYERS_AT])],
        layers: LAYERS_MIN + (unit(x[LAYERS_AT]) * (LAYERS_MAX - LAYERS_MIN) as f64).round() as u32,
        epochs: EPOCHS_MIN + (unit(x[EPOCHS_AT]) * (EPOCHS_MAX - EPOCHS_MIN) as f64).round() as u32,
        learning_rate: zoo::quantize_learning_rate(10f64.powf(unit(x[LR_AT]) * 3.0 - 4.0)),
        seed: 0,
    }
}
