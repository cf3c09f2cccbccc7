//! Classifier templates, the hyperparameter search space, and model
//! instantiation from a [`HyperparameterConfig`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{Conv2d, Dense, Flatten, Init, Layer, MaxPool2d, Model, OptimizerKind, Relu};
use crate::scalar::Scalar;

pub const HIDDEN_WIDTH: usize = 64;
pub const BASE_CHANNELS: usize = 8;
pub const KERNEL: usize = 3;

pub const LAYERS_MIN: u32 = 1;
pub const LAYERS_MAX: u32 = 4;
pub const EPOCHS_MIN: u32 = 1;
pub const EPOCHS_MAX: u32 = 50;
pub const BATCH_SIZES: [u32; 4] = [16, 32, 64, 128];
pub const LEARNING_RATE_MIN: f64 = 1e-4;
pub const LEARNING_RATE_MAX: f64 = 1e-1;

#[derive(Debug, Error, PartialEq)]
pub enum ZooError {
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("template {template} is incompatible with input shape {shape:?}")]
    TemplateIncompatible { template: Template, shape: Vec<usize> },
    #[error("template {template} with {layers} layers collapses a {shape:?} input below 1x1")]
    DepthTooLarge { template: Template, layers: u32, shape: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Template {
    #[serde(rename = "mlp")]
    Mlp,
    #[serde(rename = "mini-cnn")]
    MiniCnn,
    #[serde(rename = "mini-vgg")]
    MiniVgg,
    #[serde(rename = "mini-deep")]
    MiniDeep,
}

impl Template {
    pub const ALL: [Template; 4] = [Template::Mlp, Template::MiniCnn, Template::MiniVgg, Template::MiniDeep];

    pub fn name(self) -> &'static str {
        match self {
            Template::Mlp => "mlp",
            Template::MiniCnn => "mini-cnn",
            Template::MiniVgg => "mini-vgg",
            Template::MiniDeep => "mini-deep",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Template::Mlp => "multilayer perceptron: `layers` dense(64)+relu blocks, then a dense classifier",
            Template::MiniCnn => {
                "small CNN: `layers` blocks of conv3x3+relu+maxpool with channels 8, 16, 32, 64, then a dense classifier"
            }
            Template::MiniVgg => {
                "VGG-style: `layers` blocks of two conv3x3+relu and a maxpool, channels doubling from 8, then dense(64)+relu and a dense classifier"
            }
            Template::MiniDeep => "deeper CNN: mini-cnn with min(2*layers, 4) blocks",
        }
    }

    pub fn is_convolutional(self) -> bool {
        self != Template::Mlp
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown template {s:?} (expected mlp, mini-cnn, mini-vgg or mini-deep)"))
    }
}

/// One point of the search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperparameterConfig {
    pub template: Template,
    pub layers: u32,
    pub epochs: u32,
    pub batch_size: u32,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub seed: u64,
}

impl HyperparameterConfig {
    /// Equality on everything that affects the search, i.e. ignoring the seed.
    pub fn same_point(&self, other: &Self) -> bool {
        Self { seed: 0, ..self.clone() } == Self { seed: 0, ..other.clone() }
    }
}

/// Every domain violation of `config`; empty when valid.
pub fn validate(config: &HyperparameterConfig) -> Vec<String> {
    let mut v = Vec::new();
    if config.layers < LAYERS_MIN {
        v.push(format!("layers below {LAYERS_MIN}"));
    }
    if config.layers > LAYERS_MAX {
        v.push(format!("layers above {LAYERS_MAX}"));
    }
    if config.epochs < EPOCHS_MIN {
        v.push(format!("epochs below {EPOCHS_MIN}"));
    }
    if config.epochs > EPOCHS_MAX {
        v.push(format!("epochs above {EPOCHS_MAX}"));
    }
    if !BATCH_SIZES.contains(&config.batch_size) {
        v.push("batch_size not in {16,32,64,128}".to_string());
    }
    let lr = config.learning_rate;
    if !lr.is_finite() || lr <= 0.0 {
        v.push("learning_rate not strictly positive".to_string());
    } else if lr < LEARNING_RATE_MIN * (1.0 - 1e-12) {
        v.push(format!("learning_rate below {LEARNING_RATE_MIN}"));
    } else if lr > LEARNING_RATE_MAX * (1.0 + 1e-12) {
        v.push(format!("learning_rate above {LEARNING_RATE_MAX}"));
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntRange {
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRange {
    pub min: f64,
    pub max: f64,
    pub scale: Scale,
}

/// Per-dimension domains. `learning_rate` is sampled log-uniformly; all other
/// dimensions uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub templates: Vec<Template>,
    pub layers: IntRange,
    pub epochs: IntRange,
    pub batch_sizes: Vec<u32>,
    pub optimizers: Vec<OptimizerKind>,
    pub learning_rate: LogRange,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            templates: Template::ALL.to_vec(),
            layers: IntRange { min: LAYERS_MIN, max: LAYERS_MAX },
            epochs: IntRange { min: EPOCHS_MIN, max: EPOCHS_MAX },
            batch_sizes: BATCH_SIZES.to_vec(),
            optimizers: OptimizerKind::ALL.to_vec(),
            learning_rate: LogRange { min: LEARNING_RATE_MIN, max: LEARNING_RATE_MAX, scale: Scale::Log },
        }
    }
}

/// Rounds to 6 significant digits, the precision kept in results files.
pub fn quantize_learning_rate(lr: f64) -> f64 {
    format!("{lr:.5e}").parse().unwrap_or(lr)
}

impl SearchSpace {
    /// The full space restricted to templates that accept `input_shape`:
    /// flat inputs admit only the perceptron.
    pub fn for_input_shape(input_shape: &[usize]) -> Self {
        let mut space = Self::default();
        if input_shape.len() != 3 {
            space.templates = vec![Template::Mlp];
        }
        space
    }

    /// Problems that would let the space generate invalid configurations.
    pub fn check(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.templates.is_empty() {
            v.push("no templates".into());
        }
        if self.optimizers.is_empty() {
            v.push("no optimizers".into());
        }
        if self.batch_sizes.is_empty() || self.batch_sizes.iter().any(|b| !BATCH_SIZES.contains(b)) {
            v.push("batch_sizes must be a non-empty subset of {16,32,64,128}".into());
        }
        if self.layers.min > self.layers.max || self.layers.min < LAYERS_MIN || self.layers.max > LAYERS_MAX {
            v.push(format!("layers range must lie within [{LAYERS_MIN}, {LAYERS_MAX}]"));
        }
        if self.epochs.min > self.epochs.max || self.epochs.min < EPOCHS_MIN || self.epochs.max > EPOCHS_MAX {
            v.push(format!("epochs range must lie within [{EPOCHS_MIN}, {EPOCHS_MAX}]"));
        }
        let lr = self.learning_rate;
        if !(lr.min <= lr.max && lr.min >= LEARNING_RATE_MIN && lr.max <= LEARNING_RATE_MAX) {
            v.push(format!("learning_rate range must lie within [{LEARNING_RATE_MIN}, {LEARNING_RATE_MAX}]"));
        }
        v
    }

    pub fn contains(&self, c: &HyperparameterConfig) -> bool {
        self.templates.contains(&c.template)
            && self.optimizers.contains(&c.optimizer)
            && self.batch_sizes.contains(&c.batch_size)
            && (self.layers.min..=self.layers.max).contains(&c.layers)
            && (self.epochs.min..=self.epochs.max).contains(&c.epochs)
            && c.learning_rate >= self.learning_rate.min * (1.0 - 1e-9)
            && c.learning_rate <= self.learning_rate.max * (1.0 + 1e-9)
    }

    /// Uniform draw (log-uniform for the learning rate); `seed` is set to 0.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HyperparameterConfig {
        let template = self.templates[rng.random_range(0..self.templates.len())];
        let layers = rng.random_range(self.layers.min..=self.layers.max);
        let epochs = rng.random_range(self.epochs.min..=self.epochs.max);
        let batch_size = self.batch_sizes[rng.random_range(0..self.batch_sizes.len())];
        let optimizer = self.optimizers[rng.random_range(0..self.optimizers.len())];
        let (lo, hi) = (self.learning_rate.min.log10(), self.learning_rate.max.log10());
        let exponent = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let learning_rate =
            quantize_learning_rate(10f64.powf(exponent)).clamp(self.learning_rate.min, self.learning_rate.max);
        HyperparameterConfig { template, layers, epochs, batch_size, optimizer, learning_rate, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Spec {
    Flatten,
    Dense { fan_in: usize, fan_out: usize, init: Init },
    Conv { in_ch: usize, out_ch: usize, init: Init },
    Relu,
    Pool,
}

impl Spec {
    fn parameter_count(self) -> usize {
        match self {
            Spec::Dense { fan_in, fan_out, .. } => fan_in * fan_out + fan_out,
            Spec::Conv { in_ch, out_ch, .. } => out_ch * in_ch * KERNEL * KERNEL + out_ch,
            _ => 0,
        }
    }
}

/// Builds the layer plan, tracking the activation shape through it.
struct Planner {
    specs: Vec<Spec>,
    shape: Vec<usize>,
}

impl Planner {
    fn conv_relu(&mut self, out_ch: usize) {
        self.specs.push(Spec::Conv { in_ch: self.shape[0], out_ch, init: Init::HeUniform });
        self.specs.push(Spec::Relu);
        self.shape[0] = out_ch;
    }

    fn pool(&mut self) -> bool {
        if self.shape[1] < 2 || self.shape[2] < 2 {
            return false;
        }
        self.specs.push(Spec::Pool);
        self.shape[1] /= 2;
        self.shape[2] /= 2;
        true
    }

    fn flatten(&mut self) {
        if self.shape.len() > 1 {
            self.specs.push(Spec::Flatten);
            self.shape = vec![self.shape.iter().product()];
        }
    }

    fn dense(&mut self, fan_out: usize, relu: bool) {
        let init = if relu { Init::HeUniform } else { Init::GlorotUniform };
        self.specs.push(Spec::Dense { fan_in: self.shape[0], fan_out, init });
        if relu {
            self.specs.push(Spec::Relu);
        }
        self.shape = vec![fan_out];
    }
}

fn plan(template: Template, layers: u32, input_shape: &[usize], num_classes: usize) -> Result<Vec<Spec>, ZooError> {
    let incompatible = || ZooError::TemplateIncompatible { template, shape: input_shape.to_vec() };
    if input_shape.is_empty() || input_shape.contains(&0) {
        return Err(incompatible());
    }
    if template.is_convolutional() && input_shape.len() != 3 {
        return Err(incompatible());
    }
    let too_deep = || ZooError::DepthTooLarge { template, layers, shape: input_shape.to_vec() };
    let mut p = Planner { specs: Vec::new(), shape: input_shape.to_vec() };
    let channels = |block: usize| BASE_CHANNELS << block;
    match template {
        Template::Mlp => {
            p.flatten();
            for _ in 0..layers {
                p.dense(HIDDEN_WIDTH, true);
            }
        }
        Template::MiniCnn | Template::MiniDeep => {
            let blocks = if template == Template::MiniDeep { (2 * layers).min(4) } else { layers };
            for b in 0..blocks as usize {
                p.conv_relu(channels(b));
                if !p.pool() {
                    return Err(too_deep());
                }
            }
            p.flatten();
        }
        Template::MiniVgg => {
            for b in 0..layers as usize {
                p.conv_relu(channels(b));
                p.conv_relu(channels(b));
                if !p.pool() {
                    return Err(too_deep());
                }
            }
            p.flatten();
            p.dense(HIDDEN_WIDTH, true);
        }
    }
    p.dense(num_classes, false);
    Ok(p.specs)
}

/// Trainable parameters of a template; independent of any seed.
pub fn parameter_count(
    template: Template,
    layers: u32,
    input_shape: &[usize],
    num_classes: usize,
) -> Result<usize, ZooError> {
    Ok(plan(template, layers, input_shape, num_classes)?.into_iter().map(Spec::parameter_count).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateInfo {
    pub template: Template,
    pub name: &'static str,
    pub description: &'static str,
    /// Parameter counts for `layers = 1..=4`; `None` where the template does
    /// not fit the input.
    pub parameter_counts: Vec<(u32, Option<usize>)>,
}

pub fn list_templates(input_shape: &[usize], num_classes: usize) -> Vec<TemplateInfo> {
    Template::ALL
        .into_iter()
        .map(|t| TemplateInfo {
            template: t,
            name: t.name(),
            description: t.description(),
            parameter_counts: (LAYERS_MIN..=LAYERS_MAX)
                .map(|l| (l, parameter_count(t, l, input_shape, num_classes).ok()))
                .collect(),
        })
        .collect()
}

/// Builds a freshly initialized model; weights depend only on `config.seed`.
pub fn instantiate<T: Scalar>(
    config: &HyperparameterConfig,
    input_shape: &[usize],
    num_classes: usize,
) -> Result<Model<T>, ZooError> {
    let violations = validate(config);
    if !violations.is_empty() {
        return Err(ZooError::InvalidConfig(violations));
    }
    let specs = plan(config.template, config.layers, input_shape, num_classes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let layers = specs
        .into_iter()
        .map(|s| match s {
            Spec::Flatten => Layer::Flatten(Flatten::new()),
            Spec::Dense { fan_in, fan_out, init } => Layer::Dense(Dense::new(fan_in, fan_out, init, &mut rng)),
            Spec::Conv { in_ch, out_ch, init } => Layer::Conv2d(Conv2d::new(in_ch, out_ch, KERNEL, init, &mut rng)),
            Spec::Relu => Layer::Relu(Relu::new()),
            Spec::Pool => Layer::MaxPool2d(MaxPool2d::new()),
        })
        .collect();
    Ok(Model::new(layers, input_shape.to_vec(), num_classes))
}
