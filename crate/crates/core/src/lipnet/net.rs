use ndarray::{linalg::general_mat_mul, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::adam::AdamState;
use super::head::AffineHead;
use super::layer::{fresh_stamp, SllLayer};
use crate::error::{ensure_dim, Error, Result};
use crate::geometry::{FieldMode, NormalizeTransform};

/// Training metadata stored alongside the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelMeta {
    pub mode: FieldMode,
    pub margin: f64,
    pub lambda: f64,
}

impl Default for ModelMeta {
    fn default() -> Self {
        ModelMeta {
            mode: FieldMode::Signed,
            margin: 1e-2,
            lambda: 100.0,
        }
    }
}

/// 1-Lipschitz network `head . layers . pad . normalize`.
///
/// The input point occupies the first `input_dim` of the `width` channels; the
/// remaining channels are zero. Evaluation in raw coordinates divides the
/// output by the normalization scale so values stay in raw distance units and
/// the map is 1-Lipschitz regardless of the scale.
#[derive(Debug)]
pub struct LipNet {
    input_dim: usize,
    width: usize,
    layers: Vec<SllLayer>,
    head: AffineHead,
    norm: NormalizeTransform,
    pub meta: ModelMeta,
    stamp: u64,
}

impl Clone for LipNet {
    fn clone(&self) -> Self {
        LipNet {
            input_dim: self.input_dim,
            width: self.width,
            layers: self.layers.clone(),
            head: self.head.clone(),
            norm: self.norm.clone(),
            meta: self.meta.clone(),
            stamp: fresh_stamp(),
        }
    }
}

impl PartialEq for LipNet {
    fn eq(&self, other: &Self) -> bool {
        self.input_dim == other.input_dim
            && self.width == other.width
            && self.layers == other.layers
            && self.head == other.head
            && self.norm == other.norm
            && self.meta == other.meta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParamGrads {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub scale_logits: Vec<f64>,
}

/// Parameter gradients in the same layout as the network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetGrads {
    pub layers: Vec<LayerParamGrads>,
    pub head_weight: Vec<f64>,
    pub head_bias: f64,
}

impl NetGrads {
    /// Tensors in optimizer order: per layer `W, b, q`, then head `w`, head `b`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(3 * self.layers.len() + 2);
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
            out.push(&l.scale_logits);
        }
        out.push(&self.head_weight);
        out.push(std::slice::from_ref(&self.head_bias));
        out
    }
}

/// Batched forward intermediates for [`LipNet::backward_params`].
#[derive(Debug)]
pub struct NetTape {
    stamp: u64,
    inputs: Vec<Array2<f64>>,
    preacts: Vec<Array2<f64>>,
    scaled: Vec<Array2<f64>>,
    last: Array2<f64>,
}

impl NetTape {
    pub fn batch_len(&self) -> usize {
        self.last.nrows()
    }
}

impl LipNet {
    pub fn new(
        input_dim: usize,
        layers: Vec<SllLayer>,
        head: AffineHead,
        norm: NormalizeTransform,
        meta: ModelMeta,
    ) -> Result<Self> {
        if !(input_dim == 2 || input_dim == 3) {
            return Err(Error::invalid(format!("input_dim must be 2 or 3, got {input_dim}")));
        }
        let width = head.width();
        if width < input_dim {
            return Err(Error::invalid(format!(
                "width {width} is smaller than input_dim {input_dim}"
            )));
        }
        for l in &layers {
            ensure_dim(width, l.width())?;
        }
        ensure_dim(input_dim, norm.dim())?;
        Ok(LipNet {
            input_dim,
            width,
            layers,
            head,
            norm,
            meta,
            stamp: fresh_stamp(),
        })
    }

    /// Seeded initialization: `W ~ U[-sqrt(1/k), sqrt(1/k)]`, `b = q = 0`,
    /// head weights standard normal, head bias 0, identity normalization.
    pub fn init(input_dim: usize, width: usize, depth: usize, seed: u64) -> Result<Self> {
        if width < input_dim {
            return Err(Error::invalid(format!(
                "width {width} is smaller than input_dim {input_dim}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = (1.0 / width as f64).sqrt();
        let mut layers = Vec::with_capacity(depth);
        for _ in 0..depth {
            let weight = (0..width * width)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            layers.push(SllLayer::new(
                width,
                weight,
                vec![0.0; width],
                vec![0.0; width],
            )?);
        }
        let head_w = (0..width).map(|_| rng.sample(StandardNormal)).collect();
        let head = AffineHead::new(head_w, 0.0)?;
        Self::new(
            input_dim,
            layers,
            head,
            NormalizeTransform::identity(input_dim),
            ModelMeta::default(),
        )
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[SllLayer] {
        &self.layers
    }

    pub fn head(&self) -> &AffineHead {
        &self.head
    }

    pub fn normalization(&self) -> &NormalizeTransform {
        &self.norm
    }

    pub fn set_normalization(&mut self, norm: NormalizeTransform) -> Result<()> {
        ensure_dim(self.input_dim, norm.dim())?;
        self.norm = norm;
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers.len() * (self.width * self.width + 2 * self.width) + self.width + 1
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        let k = self.width;
        let mut shapes = Vec::with_capacity(3 * self.layers.len() + 2);
        for _ in &self.layers {
            shapes.extend([k * k, k, k]);
        }
        shapes.extend([k, 1]);
        shapes
    }

    /// Per-layer parameter norms followed by the head weight norm.
    pub fn param_norms(&self) -> Vec<f64> {
        let mut norms: Vec<f64> = self.layers.iter().map(|l| l.param_norm()).collect();
        norms.push(crate::vecmath::norm(self.head.weight()));
        norms
    }

    fn padded(&self, p: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.width];
        x[..self.input_dim].copy_from_slice(p);
        x
    }

    /// Network output for a point already in normalized coordinates.
    pub fn eval_normalized(&self, p: &[f64]) -> f64 {
        assert_eq!(p.len(), self.input_dim, "point dimension");
        let k = self.width;
        let mut x = self.padded(p);
        let mut out = vec![0.0; k];
        let mut preact = vec![0.0; k];
        let mut scaled = vec![0.0; k];
        for layer in &self.layers {
            layer.forward_into(&x, &mut out, &mut preact, &mut scaled);
            std::mem::swap(&mut x, &mut out);
        }
        self.head.eval_unchecked(&x)
    }

    /// Field value at a raw-coordinate point, in raw distance units.
    ///
    /// # Panics
    /// If `x_raw.len() != input_dim`.
    pub fn eval(&self, x_raw: &[f64]) -> f64 {
        let p = self.norm.apply(x_raw);
        self.eval_normalized(&p) / self.norm.scale
    }

    /// Evaluates a flat buffer of raw points. Each value is bit-identical to
    /// the corresponding [`LipNet::eval`] call.
    pub fn eval_batch(&self, points: &[f64]) -> Vec<f64> {
        points
            .par_chunks_exact(self.input_dim)
            .map(|x| self.eval(x))
            .collect()
    }

    /// Value and gradient with respect to normalized coordinates.
    pub fn value_and_grad_normalized(&self, p: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(p.len(), self.input_dim, "point dimension");
        let k = self.width;
        let mut x = self.padded(p);
        let mut out = vec![0.0; k];
        let mut scaled = vec![0.0; k];
        let mut preacts = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut preact = vec![0.0; k];
            layer.forward_into(&x, &mut out, &mut preact, &mut scaled);
            preacts.push(preact);
            std::mem::swap(&mut x, &mut out);
        }
        let value = self.head.eval_unchecked(&x);
        let wn = crate::vecmath::norm(self.head.weight());
        let mut dy: Vec<f64> = self.head.weight().iter().map(|w| w / wn).collect();
        for (layer, preact) in self.layers.iter().zip(&preacts).rev() {
            let (_, g_z) = layer.residual_grads(preact, &dy);
            dy = layer.input_grad_from(&dy, &g_z);
        }
        dy.truncate(self.input_dim);
        (value, dy)
    }

    /// Value (raw units) and gradient with respect to raw coordinates.
    pub fn value_and_grad(&self, x_raw: &[f64]) -> (f64, Vec<f64>) {
        let p = self.norm.apply(x_raw);
        let (v, g) = self.value_and_grad_normalized(&p);
        // d/dx [f(s (x - c)) / s] = grad f
        (v / self.norm.scale, g)
    }

    pub fn grad_input(&self, x_raw: &[f64]) -> Vec<f64> {
        self.value_and_grad(x_raw).1
    }

    /// Batched forward pass over normalized points (flat, `input_dim` per point),
    /// recording what [`LipNet::backward_params`] needs.
    pub fn forward_batch(&self, points: &[f64]) -> Result<(Vec<f64>, NetTape)> {
        let n = self.input_dim;
        let k = self.width;
        if points.len() % n != 0 {
            return Err(Error::Dimension {
                expected: n,
                got: points.len() % n,
            });
        }
        let rows = points.len() / n;
        let mut x = Array2::<f64>::zeros((rows, k));
        for (r, p) in points.chunks_exact(n).enumerate() {
            for (a, &v) in p.iter().enumerate() {
                x[[r, a]] = v;
            }
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut scaled_all = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let w = ArrayView2::from_shape((k, k), layer.weight()).expect("square weight");
            let mut z = Array2::<f64>::zeros((rows, k));
            for mut row in z.rows_mut() {
                row.assign(&ndarray::aview1(layer.bias()));
            }
            general_mat_mul(1.0, &x, &w, 1.0, &mut z);
            let t = layer.t_diag();
            let mut u = z.clone();
            for mut row in u.rows_mut() {
                for (v, &tj) in row.iter_mut().zip(t) {
                    *v = if *v > 0.0 && tj > 0.0 { *v / tj } else { 0.0 };
                }
            }
            let mut y = x.clone();
            general_mat_mul(-2.0, &u, &w.t(), 1.0, &mut y);
            inputs.push(std::mem::replace(&mut x, y));
            preacts.push(z);
            scaled_all.push(u);
        }
        let wn = crate::vecmath::norm(self.head.weight());
        let w_hat = ndarray::Array1::from_iter(self.head.weight().iter().map(|w| w / wn));
        let out = x.dot(&w_hat).mapv(|v| v + self.head.bias()).to_vec();
        Ok((
            out,
            NetTape {
                stamp: self.stamp,
                inputs,
                preacts,
                scaled: scaled_all,
                last: x,
            },
        ))
    }

    /// Sum over the batch of per-point parameter gradients weighted by `df`
    /// (typically `dLoss/df`).
    pub fn backward_params(&self, tape: &NetTape, df: &[f64]) -> Result<NetGrads> {
        if tape.stamp != self.stamp {
            return Err(Error::StaleTape);
        }
        ensure_dim(tape.batch_len(), df.len())?;
        let k = self.width;
        let rows = df.len();
        let df_arr = ndarray::ArrayView1::from(df);

        let w = self.head.weight();
        let wn = crate::vecmath::norm(w);
        // sum_r df_r x_r and sum_r df_r (w . x_r)
        let weighted_x = tape.last.t().dot(&df_arr);
        let proj: f64 = weighted_x.iter().zip(w).map(|(a, b)| a * b).sum();
        let head_weight = w
            .iter()
            .zip(weighted_x.iter())
            .map(|(wi, xi)| xi / wn - proj * wi / (wn * wn * wn))
            .collect();
        let head_bias = df.iter().sum();

        let mut dy = Array2::<f64>::zeros((rows, k));
        for (r, &d) in df.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                dy[[r, j]] = d * wj / wn;
            }
        }

        let mut layer_grads = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let wv = ArrayView2::from_shape((k, k), layer.weight()).expect("square weight");
            let t = layer.t_diag();
            let z = &tape.preacts[li];
            let u = &tape.scaled[li];
            let x = &tape.inputs[li];
            let g_u = dy.dot(&wv) * -2.0;
            let mut g_z = g_u.clone();
            let mut g_t = vec![0.0; k];
            for r in 0..rows {
                for j in 0..k {
                    let tj = t[j];
                    if tj > 0.0 {
                        g_t[j] -= g_u[[r, j]] * u[[r, j]] / tj;
                    }
                    g_z[[r, j]] = if z[[r, j]] > 0.0 && tj > 0.0 {
                        g_u[[r, j]] / tj
                    } else {
                        0.0
                    };
                }
            }
            let mut d_w = x.t().dot(&g_z);
            general_mat_mul(-2.0, &dy.t(), u, 1.0, &mut d_w);
            let mut weight = d_w.into_raw_vec_and_offset().0;
            let mut scale_logits = vec![0.0; k];
            layer.accumulate_t_path(&g_t, &mut weight, &mut scale_logits);
            let bias = g_z.sum_axis(Axis(0)).to_vec();
            general_mat_mul(1.0, &g_z, &wv.t(), 1.0, &mut dy);
            layer_grads.push(LayerParamGrads {
                weight,
                bias,
                scale_logits,
            });
        }
        layer_grads.reverse();
        Ok(NetGrads {
            layers: layer_grads,
            head_weight,
            head_bias,
        })
    }

    /// Applies one Adam update with `grads`, then refreshes every layer's `T`.
    pub fn apply_adam(&mut self, adam: &mut AdamState, grads: &NetGrads) -> Result<()> {
        ensure_dim(self.layers.len(), grads.layers.len())?;
        {
            let mut params: Vec<&mut [f64]> = Vec::with_capacity(3 * self.layers.len() + 2);
            for layer in &mut self.layers {
                let (w, b, q) = layer.params_mut();
                params.push(w);
                params.push(b);
                params.push(q);
            }
            let (hw, hb) = self.head.params_mut();
            params.push(hw);
            params.push(std::slice::from_mut(hb));
            adam.step(&mut params, &grads.tensors())?;
        }
        for layer in &mut self.layers {
            layer.refresh();
        }
        if crate::vecmath::norm(self.head.weight()) == 0.0 {
            return Err(Error::invalid("head weight collapsed to zero"));
        }
        self.stamp = fresh_stamp();
        Ok(())
    }

    pub fn params_finite(&self) -> bool {
        self.layers.iter().all(|l| l.params_finite())
            && self.head.weight().iter().all(|v| v.is_finite())
            && self.head.bias().is_finite()
    }

    /// Flat copy of all parameters in optimizer order.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight());
            out.extend_from_slice(l.bias());
            out.extend_from_slice(l.scale_logits());
        }
        out.extend_from_slice(self.head.weight());
        out.push(self.head.bias());
        out
    }

    /// Rebuilds a network of the same shape from a flat parameter vector.
    pub fn with_flat_params(&self, flat: &[f64]) -> Result<Self> {
        ensure_dim(self.param_count(), flat.len())?;
        let k = self.width;
        let mut at = 0;
        let mut take = |n: usize| {
            let s = flat[at..at + n].to_vec();
            at += n;
            s
        };
        let mut layers = Vec::with_capacity(self.layers.len());
        for _ in &self.layers {
            let w = take(k * k);
            let b = take(k);
            let q = take(k);
            layers.push(SllLayer::new(k, w, b, q)?);
        }
        let hw = take(k);
        let hb = take(1)[0];
        LipNet::new(
            self.input_dim,
            layers,
            AffineHead::new(hw, hb)?,
            self.norm.clone(),
            self.meta.clone(),
        )
    }
}
