use std::fmt;

use rand::Rng;

use super::EngineError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Gradient w.r.t. the input (when requested) and w.r.t. each parameter.
pub type Gradients<T> = (Option<Tensor<T>>, Vec<Tensor<T>>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Dense,
    Conv2d,
    Relu,
    MaxPool2d,
    Flatten,
    Softmax,
}

impl LayerKind {
    pub const ALL: [LayerKind; 6] = [
        LayerKind::Dense,
        LayerKind::Conv2d,
        LayerKind::Relu,
        LayerKind::MaxPool2d,
        LayerKind::Flatten,
        LayerKind::Softmax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Dense => "dense",
            LayerKind::Conv2d => "conv2d",
            LayerKind::Relu => "relu",
            LayerKind::MaxPool2d => "maxpool2d",
            LayerKind::Flatten => "flatten",
            LayerKind::Softmax => "softmax",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Weight initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// U(-a, a) with a = sqrt(6 / fan_in); for layers feeding a relu.
    HeUniform,
    /// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
    GlorotUniform,
}

impl Init {
    fn fill<T: Scalar, R: Rng + ?Sized>(
        self,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Tensor<T> {
        let limit = match self {
            Init::HeUniform => (6.0 / fan_in as f64).sqrt(),
            Init::GlorotUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
        };
        let n = shape.iter().product();
        let data = (0..n).map(|_| T::of(rng.random_range(-limit..limit))).collect();
        Tensor::new(shape.to_vec(), data).expect("init shape")
    }
}

fn missing_cache(kind: LayerKind) -> EngineError {
    EngineError::Protocol(format!("{kind} backward called before forward"))
}

fn expect_same_shape<T: Scalar>(kind: LayerKind, g: &Tensor<T>, shape: &[usize]) -> Result<(), EngineError> {
    if g.shape() != shape {
        return Err(EngineError::Dimension(format!(
            "{kind}: upstream gradient shape {:?} does not match output shape {:?}",
            g.shape(),
            shape
        )));
    }
    Ok(())
}

/// Fully connected layer, `y = x W + b` with `W` of shape `[fan_in, fan_out]`.
#[derive(Debug, Clone)]
pub struct Dense<T: Scalar> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, init: Init, rng: &mut R) -> Self {
        Self {
            weight: init.fill(&[fan_in, fan_out], fan_in, fan_out, rng),
            bias: Tensor::zeros(&[fan_out]),
            input: None,
        }
    }

    pub fn from_parameters(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self, EngineError> {
        if weight.rank() != 2 || bias.shape() != [weight.shape()[1]] {
            return Err(EngineError::Dimension(format!(
                "dense: weight {:?} and bias {:?} are inconsistent",
                weight.shape(),
                bias.shape()
            )));
        }
        Ok(Self { weight, bias, input: None })
    }

    pub fn fan_in(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn fan_out(&self) -> usize {
        self.weight.shape()[1]
    }

    fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        if x.rank() != 2 || x.shape()[1] != self.fan_in() {
            return Err(EngineError::Dimension(format!(
                "dense expects [batch, {}], got {:?}",
                self.fan_in(),
                x.shape()
            )));
        }
        let (b, n) = (x.shape()[0], self.fan_out());
        let mut y = Vec::with_capacity(b * n);
        for _ in 0..b {
            y.extend_from_slice(self.bias.data());
        }
        T::gemm(b, self.fan_in(), n, x.data(), false, self.weight.data(), false, &mut y, true);
        self.input = Some(x);
        Tensor::new(vec![b, n], y)
    }

    fn backward(&mut self, g: Tensor<T>, need_input: bool) -> Result<Gradients<T>, EngineError> {
        let x = self.input.take().ok_or_else(|| missing_cache(LayerKind::Dense))?;
        let (b, fan_in, fan_out) = (x.shape()[0], self.fan_in(), self.fan_out());
        expect_same_shape(LayerKind::Dense, &g, &[b, fan_out])?;

        let mut gw = vec![T::zero(); fan_in * fan_out];
        T::gemm(fan_in, b, fan_out, x.data(), true, g.data(), false, &mut gw, false);
        let mut gb = vec![T::zero(); fan_out];
        for row in g.data().chunks_exact(fan_out) {
            for (acc, &v) in gb.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let gx = if need_input {
            let mut gx = vec![T::zero(); b * fan_in];
            T::gemm(b, fan_out, fan_in, g.data(), false, self.weight.data(), true, &mut gx, false);
            Some(Tensor::new(x.shape().to_vec(), gx)?)
        } else {
            None
        };
        Ok((gx, vec![Tensor::new(vec![fan_in, fan_out], gw)?, Tensor::new(vec![fan_out], gb)?]))
    }
}

/// Stride-1 convolution with "same" zero padding (`kernel / 2` on each side).
/// Weight shape `[out_ch, in_ch, kh, kw]`.
#[derive(Debug, Clone)]
pub struct Conv2d<T: Scalar> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    cache: Option<ConvCache<T>>,
}

#[derive(Debug, Clone)]
struct ConvCache<T> {
    input_shape: Vec<usize>,
    cols: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    batch: usize,
    in_ch: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    ph: usize,
    pw: usize,
    oh: usize,
    ow: usize,
}

impl ConvGeom {
    fn patch(&self) -> usize {
        self.in_ch * self.kh * self.kw
    }

    fn positions(&self) -> usize {
        self.oh * self.ow
    }

    fn im2col<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let cols_n = self.batch * self.positions();
        let mut cols = vec![T::zero(); self.patch() * cols_n];
        for c in 0..self.in_ch {
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = (c * self.kh + ki) * self.kw + kj;
                    let dst_row = &mut cols[row * cols_n..(row + 1) * cols_n];
                    for b in 0..self.batch {
                        let plane = &x[(b * self.in_ch + c) * self.h * self.w..][..self.h * self.w];
                        for oy in 0..self.oh {
                            let iy = oy as isize + ki as isize - self.ph as isize;
                            if iy < 0 || iy >= self.h as isize {
                                continue;
                            }
                            let src = &plane[iy as usize * self.w..][..self.w];
                            let dst = &mut dst_row[b * self.positions() + oy * self.ow..][..self.ow];
                            for (ox, d) in dst.iter_mut().enumerate() {
                                let ix = ox as isize + kj as isize - self.pw as isize;
                                if ix >= 0 && ix < self.w as isize {
                                    *d = src[ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im<T: Scalar>(&self, cols: &[T]) -> Vec<T> {
        let cols_n = self.batch * self.positions();
        let mut x = vec![T::zero(); self.batch * self.in_ch * self.h * self.w];
        for c in 0..self.in_ch {
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = (c * self.kh + ki) * self.kw + kj;
                    let src_row = &cols[row * cols_n..(row + 1) * cols_n];
                    for b in 0..self.batch {
                        let plane = &mut x[(b * self.in_ch + c) * self.h * self.w..][..self.h * self.w];
                        for oy in 0..self.oh {
                            let iy = oy as isize + ki as isize - self.ph as isize;
                            if iy < 0 || iy >= self.h as isize {
                                continue;
                            }
                            let dst = &mut plane[iy as usize * self.w..][..self.w];
                            let src = &src_row[b * self.positions() + oy * self.ow..][..self.ow];
                            for (ox, &s) in src.iter().enumerate() {
                                let ix = ox as isize + kj as isize - self.pw as isize;
                                if ix >= 0 && ix < self.w as isize {
                                    dst[ix as usize] += s;
                                }
                            }
                        }
                    }
                }
            }
        }
        x
    }
}

impl<T: Scalar> Conv2d<T> {
    pub fn new<R: Rng + ?Sized>(in_ch: usize, out_ch: usize, kernel: usize, init: Init, rng: &mut R) -> Self {
        let k2 = kernel * kernel;
        Self {
            weight: init.fill(&[out_ch, in_ch, kernel, kernel], in_ch * k2, out_ch * k2, rng),
            bias: Tensor::zeros(&[out_ch]),
            cache: None,
        }
    }

    pub fn from_parameters(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self, EngineError> {
        if weight.rank() != 4 || bias.shape() != [weight.shape()[0]] {
            return Err(EngineError::Dimension(format!(
                "conv2d: weight {:?} and bias {:?} are inconsistent",
                weight.shape(),
                bias.shape()
            )));
        }
        Ok(Self { weight, bias, cache: None })
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    fn geometry(&self, input: &[usize]) -> Result<ConvGeom, EngineError> {
        if input.len() != 4 || input[1] != self.in_channels() {
            return Err(EngineError::Dimension(format!(
                "conv2d expects [batch, {}, h, w], got {input:?}",
                self.in_channels()
            )));
        }
        let (kh, kw) = (self.weight.shape()[2], self.weight.shape()[3]);
        let (ph, pw) = (kh / 2, kw / 2);
        let (h, w) = (input[2], input[3]);
        if h + 2 * ph < kh || w + 2 * pw < kw {
            return Err(EngineError::Dimension(format!("conv2d kernel {kh}x{kw} larger than padded input {h}x{w}")));
        }
        Ok(ConvGeom {
            batch: input[0],
            in_ch: input[1],
            h,
            w,
            kh,
            kw,
            ph,
            pw,
            oh: h + 2 * ph - kh + 1,
            ow: w + 2 * pw - kw + 1,
        })
    }

    fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        let geom = self.geometry(x.shape())?;
        let out_ch = self.out_channels();
        let cols = geom.im2col(x.data());
        let n = geom.batch * geom.positions();
        let mut out = vec![T::zero(); out_ch * n];
        T::gemm(out_ch, geom.patch(), n, self.weight.data(), false, &cols, false, &mut out, false);

        // [out_ch, batch * positions] -> [batch, out_ch, oh, ow]
        let p = geom.positions();
        let mut y = vec![T::zero(); out.len()];
        for o in 0..out_ch {
            let bias = self.bias.data()[o];
            for b in 0..geom.batch {
                let src = &out[o * n + b * p..][..p];
                let dst = &mut y[(b * out_ch + o) * p..][..p];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = s + bias;
                }
            }
        }
        self.cache = Some(ConvCache { input_shape: x.shape().to_vec(), cols });
        Tensor::new(vec![geom.batch, out_ch, geom.oh, geom.ow], y)
    }

    fn backward(&mut self, g: Tensor<T>, need_input: bool) -> Result<Gradients<T>, EngineError> {
        let cache = self.cache.take().ok_or_else(|| missing_cache(LayerKind::Conv2d))?;
        let geom = self.geometry(&cache.input_shape)?;
        let out_ch = self.out_channels();
        expect_same_shape(LayerKind::Conv2d, &g, &[geom.batch, out_ch, geom.oh, geom.ow])?;

        let p = geom.positions();
        let n = geom.batch * p;
        let mut gmat = vec![T::zero(); out_ch * n];
        let mut gb = vec![T::zero(); out_ch];
        for b in 0..geom.batch {
            for o in 0..out_ch {
                let src = &g.data()[(b * out_ch + o) * p..][..p];
                gmat[o * n + b * p..][..p].copy_from_slice(src);
                gb[o] += src.iter().copied().sum::<T>();
            }
        }
        let mut gw = vec![T::zero(); out_ch * geom.patch()];
        T::gemm(out_ch, n, geom.patch(), &gmat, false, &cache.cols, true, &mut gw, false);

        let gx = if need_input {
            let mut dcols = vec![T::zero(); geom.patch() * n];
            T::gemm(geom.patch(), out_ch, n, self.weight.data(), true, &gmat, false, &mut dcols, false);
            Some(Tensor::new(cache.input_shape.clone(), geom.col2im(&dcols))?)
        } else {
            None
        };
        Ok((gx, vec![Tensor::new(self.weight.shape().to_vec(), gw)?, Tensor::new(vec![out_ch], gb)?]))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Relu<T: Scalar> {
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Relu<T> {
    pub fn new() -> Self {
        Self { input: None }
    }

    fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        let mut y = x.clone();
        y.map_inplace(|v| if v > T::zero() { v } else { T::zero() });
        self.input = Some(x);
        Ok(y)
    }

    fn backward(&mut self, mut g: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        let x = self.input.take().ok_or_else(|| missing_cache(LayerKind::Relu))?;
        expect_same_shape(LayerKind::Relu, &g, x.shape())?;
        for (gv, &xv) in g.data_mut().iter_mut().zip(x.data()) {
            if xv <= T::zero() {
                *gv = T::zero();
            }
        }
        Ok(g)
    }
}

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
#[derive(Debug, Clone, Default)]
pub struct MaxPool2d {
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub const WINDOW: usize = 2;

    pub fn new() -> Self {
        Self { cache: None }
    }

    fn forward<T: Scalar>(&mut self, x: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        let s = x.shape();
        if s.len() != 4 || s[2] < Self::WINDOW || s[3] < Self::WINDOW {
            return Err(EngineError::Dimension(format!("maxpool2d expects [batch, ch, h>=2, w>=2], got {s:?}")));
        }
        let (planes, h, w) = (s[0] * s[1], s[2], s[3]);
        let (oh, ow) = (h / 2, w / 2);
        let mut y = Vec::with_capacity(planes * oh * ow);
        let mut argmax = Vec::with_capacity(planes * oh * ow);
        let xd = x.data();
        for p in 0..planes {
            let base = p * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + 2 * oy * w + 2 * ox;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = base + (2 * oy + dy) * w + 2 * ox + dx;
                        if xd[idx] > xd[best] {
                            best = idx;
                        }
                    }
                    y.push(xd[best]);
                    argmax.push(best);
                }
            }
        }
        self.cache = Some((s.to_vec(), argmax));
        Tensor::new(vec![s[0], s[1], oh, ow], y)
    }

    fn backward<T: Scalar>(&mut self, g: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        let (shape, argmax) = self.cache.take().ok_or_else(|| missing_cache(LayerKind::MaxPool2d))?;
        expect_same_shape(LayerKind::MaxPool2d, &g, &[shape[0], shape[1], shape[2] / 2, shape[3] / 2])?;
        let mut gx = Tensor::zeros(&shape);
        let gd = gx.data_mut();
        for (&idx, &v) in argmax.iter().zip(g.data()) {
            gd[idx] += v;
        }
        Ok(gx)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Flatten {
    input_shape: Option<Vec<usize>>,
}

impl Flatten {
    pub fn new() -> Self {
        Self { input_shape: None }
    }

    fn forward<T: Scalar>(&mut self, x: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        let shape = x.shape().to_vec();
        let flat = vec![x.batch(), x.row_len()];
        self.input_shape = Some(shape);
        x.reshape(flat)
    }

    fn backward<T: Scalar>(&mut self, g: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        let shape = self.input_shape.take().ok_or_else(|| missing_cache(LayerKind::Flatten))?;
        g.reshape(shape)
    }
}

/// Row-wise softmax over `[batch, classes]`.
#[derive(Debug, Clone, Default)]
pub struct Softmax<T: Scalar> {
    output: Option<Tensor<T>>,
}

impl<T: Scalar> Softmax<T> {
    pub fn new() -> Self {
        Self { output: None }
    }

    fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        if x.rank() != 2 {
            return Err(EngineError::Dimension(format!("softmax expects [batch, classes], got {:?}", x.shape())));
        }
        let y = super::loss::softmax_rows(&x);
        self.output = Some(y.clone());
        Ok(y)
    }

    fn backward(&mut self, g: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        let y = self.output.take().ok_or_else(|| missing_cache(LayerKind::Softmax))?;
        expect_same_shape(LayerKind::Softmax, &g, y.shape())?;
        let k = y.shape()[1];
        let mut gx = Vec::with_capacity(y.len());
        for (yr, gr) in y.data().chunks_exact(k).zip(g.data().chunks_exact(k)) {
            let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
            gx.extend(yr.iter().zip(gr).map(|(&a, &b)| a * (b - dot)));
        }
        Tensor::new(y.shape().to_vec(), gx)
    }
}

#[derive(Debug, Clone)]
pub enum Layer<T: Scalar> {
    Dense(Dense<T>),
    Conv2d(Conv2d<T>),
    Relu(Relu<T>),
    MaxPool2d(MaxPool2d),
    Flatten(Flatten),
    Softmax(Softmax<T>),
}

impl<T: Scalar> Layer<T> {
    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Dense(_) => LayerKind::Dense,
            Layer::Conv2d(_) => LayerKind::Conv2d,
            Layer::Relu(_) => LayerKind::Relu,
            Layer::MaxPool2d(_) => LayerKind::MaxPool2d,
            Layer::Flatten(_) => LayerKind::Flatten,
            Layer::Softmax(_) => LayerKind::Softmax,
        }
    }

    pub fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>, EngineError> {
        match self {
            Layer::Dense(l) => l.forward(x),
            Layer::Conv2d(l) => l.forward(x),
            Layer::Relu(l) => l.forward(x),
            Layer::MaxPool2d(l) => l.forward(x),
            Layer::Flatten(l) => l.forward(x),
            Layer::Softmax(l) => l.forward(x),
        }
    }

    /// Propagates `g` (gradient w.r.t. this layer's output) backwards.
    ///
    /// Returns the gradient w.r.t. the input, if requested, and the parameter
    /// gradients in the same order as [`Layer::params`].
    pub fn backward(&mut self, g: Tensor<T>, need_input: bool) -> Result<Gradients<T>, EngineError> {
        let input_only = |r: Result<Tensor<T>, EngineError>| r.map(|gx| (Some(gx), Vec::new()));
        match self {
            Layer::Dense(l) => l.backward(g, need_input),
            Layer::Conv2d(l) => l.backward(g, need_input),
            Layer::Relu(l) => input_only(l.backward(g)),
            Layer::MaxPool2d(l) => input_only(l.backward(g)),
            Layer::Flatten(l) => input_only(l.backward(g)),
            Layer::Softmax(l) => input_only(l.backward(g)),
        }
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::Dense(l) => vec![&l.weight, &l.bias],
            Layer::Conv2d(l) => vec![&l.weight, &l.bias],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::Dense(l) => vec![&mut l.weight, &mut l.bias],
            Layer::Conv2d(l) => vec![&mut l.weight, &mut l.bias],
            _ => Vec::new(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(shape.to_vec(), v).unwrap()
    }

    #[test]
    fn one_by_one_conv_scales_input() {
        let mut conv = Conv2d::from_parameters(t(&[1, 1, 1, 1], &[2.0]), t(&[1], &[0.0])).unwrap();
        let y = conv.forward(Tensor::filled(&[2, 1, 3, 3], 1.0)).unwrap();
        assert_eq!(y.shape(), &[2, 1, 3, 3]);
        assert!(y.data().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn three_by_three_conv_uses_zero_padding() {
        // All-ones kernel on all-ones 3x3 input counts in-bounds neighbours.
        let mut conv = Conv2d::from_parameters(Tensor::filled(&[1, 1, 3, 3], 1.0), t(&[1], &[0.5])).unwrap();
        let y = conv.forward(Tensor::filled(&[1, 1, 3, 3], 1.0)).unwrap();
        let want = [4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0].map(|v| v + 0.5);
        assert_eq!(y.data(), &want);
    }

    #[test]
    fn dense_weight_gradient_is_outer_product() {
        let mut d = Dense::from_parameters(t(&[2, 2], &[0.1, 0.2, 0.3, 0.4]), t(&[2], &[0.0, 0.0])).unwrap();
        d.forward(t(&[1, 2], &[3.0, 5.0])).unwrap();
        let (_, grads) = d.backward(t(&[1, 2], &[7.0, 11.0]), true).unwrap();
        // dW[i][j] = x_i * g_j
        assert_eq!(grads[0].data(), &[21.0, 33.0, 35.0, 55.0]);
        assert_eq!(grads[1].data(), &[7.0, 11.0]);
    }

    #[test]
    fn maxpool_routes_gradient_to_argmax() {
        let mut p = MaxPool2d::new();
        let y = p.forward(t(&[1, 1, 2, 2], &[1.0, 4.0, 3.0, 2.0])).unwrap();
        assert_eq!(y.data(), &[4.0]);
        let gx = p.backward(t(&[1, 1, 1, 1], &[1.5])).unwrap();
        assert_eq!(gx.data(), &[0.0, 1.5, 0.0, 0.0]);
    }

    #[test]
    fn backward_before_forward_is_a_protocol_error() {
        let mut rng = rand::rng();
        let mut layers: Vec<Layer<f64>> = vec![
            Layer::Dense(Dense::new(2, 2, Init::GlorotUniform, &mut rng)),
            Layer::Conv2d(Conv2d::new(1, 1, 3, Init::HeUniform, &mut rng)),
            Layer::Relu(Relu::new()),
            Layer::MaxPool2d(MaxPool2d::new()),
            Layer::Flatten(Flatten::new()),
            Layer::Softmax(Softmax::new()),
        ];
        for l in &mut layers {
            let err = l.backward(Tensor::zeros(&[1, 2]), true).unwrap_err();
            assert!(matches!(err, EngineError::Protocol(_)), "{}: {err}", l.kind());
        }
    }

    #[test]
    fn dense_rejects_wrong_width() {
        let mut d = Dense::<f32>::from_parameters(Tensor::zeros(&[3, 2]), Tensor::zeros(&[2])).unwrap();
        assert!(matches!(d.forward(Tensor::zeros(&[4, 5])), Err(EngineError::Dimension(_))));
    }
}
