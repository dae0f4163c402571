use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{ensure_dim, Error, Result};

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

/// Every distinct parameter state of every layer gets its own stamp, so a tape
/// can tell whether it was produced by the layer it is handed back to.
pub(crate) fn fresh_stamp() -> u64 {
    NEXT_STAMP.fetch_add(1, Ordering::Relaxed)
}

/// Residual SDP-based Lipschitz layer `x -> x - 2 W T^-1 relu(W^T x + b)`.
///
/// `T` is diagonal with `T_ii = sum_j |(W^T W)_ij| exp(q_j - q_i)`. It is kept
/// in sync with the parameters, together with the Gram matrix `W^T W` that the
/// backward pass reuses. Channels whose `T_ii` is zero (column `i` of `W` is
/// zero) contribute nothing to the residual.
#[derive(Debug)]
pub struct SllLayer {
    width: usize,
    /// Row-major `width x width`.
    weight: Vec<f64>,
    bias: Vec<f64>,
    scale_logits: Vec<f64>,
    gram: Vec<f64>,
    t_diag: Vec<f64>,
    stamp: u64,
}

impl Clone for SllLayer {
    fn clone(&self) -> Self {
        SllLayer {
            width: self.width,
            weight: self.weight.clone(),
            bias: self.bias.clone(),
            scale_logits: self.scale_logits.clone(),
            gram: self.gram.clone(),
            t_diag: self.t_diag.clone(),
            stamp: fresh_stamp(),
        }
    }
}

impl PartialEq for SllLayer {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.weight == other.weight
            && self.bias == other.bias
            && self.scale_logits == other.scale_logits
    }
}

/// Intermediates of one forward pass, consumed by [`SllLayer::backward`].
#[derive(Clone, Debug)]
pub struct LayerTape {
    stamp: u64,
    input: Vec<f64>,
    preact: Vec<f64>,
    /// `T^-1 relu(preact)`
    scaled: Vec<f64>,
}

impl LayerTape {
    /// Pre-activations `W^T x + b` recorded by the forward pass.
    pub fn preactivations(&self) -> &[f64] {
        &self.preact
    }
}

/// Gradients of `<dy, layer(x)>` with respect to the input and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub input: Vec<f64>,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub scale_logits: Vec<f64>,
}

impl SllLayer {
    pub fn new(
        width: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
        scale_logits: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 {
            return Err(Error::invalid("layer width must be at least 1"));
        }
        ensure_dim(width * width, weight.len())?;
        ensure_dim(width, bias.len())?;
        ensure_dim(width, scale_logits.len())?;
        let all_finite = weight
            .iter()
            .chain(&bias)
            .chain(&scale_logits)
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::invalid("non-finite SLL layer parameter"));
        }
        let mut layer = SllLayer {
            width,
            weight,
            bias,
            scale_logits,
            gram: Vec::new(),
            t_diag: Vec::new(),
            stamp: 0,
        };
        layer.refresh();
        Ok(layer)
    }

    /// Layer with `W = 0`, which is exactly the identity map.
    pub fn identity(width: usize) -> Result<Self> {
        Self::new(
            width,
            vec![0.0; width * width],
            vec![0.0; width],
            vec![0.0; width],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn scale_logits(&self) -> &[f64] {
        &self.scale_logits
    }

    pub fn t_diag(&self) -> &[f64] {
        &self.t_diag
    }

    pub(crate) fn params_finite(&self) -> bool {
        self.weight
            .iter()
            .chain(&self.bias)
            .chain(&self.scale_logits)
            .all(|v| v.is_finite())
    }

    pub(crate) fn param_norm(&self) -> f64 {
        self.weight
            .iter()
            .chain(&self.bias)
            .chain(&self.scale_logits)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.weight, &mut self.bias, &mut self.scale_logits)
    }

    /// Recomputes `W^T W`, `T` and the stamp; call after mutating through [`SllLayer::params_mut`].
    pub(crate) fn refresh(&mut self) {
        let k = self.width;
        let w = &self.weight;
        let mut gram = vec![0.0; k * k];
        // G = W^T W, accumulated row by row of W.
        for l in 0..k {
            let row = &w[l * k..(l + 1) * k];
            for i in 0..k {
                let wi = row[i];
                if wi == 0.0 {
                    continue;
                }
                let g = &mut gram[i * k..(i + 1) * k];
                for (gj, wj) in g.iter_mut().zip(row) {
                    *gj += wi * wj;
                }
            }
        }
        let q = &self.scale_logits;
        let t_diag = (0..k)
            .map(|i| {
                let g = &gram[i * k..(i + 1) * k];
                g.iter()
                    .zip(q)
                    .map(|(gij, qj)| (gij * (qj - q[i]).exp()).abs())
                    .sum()
            })
            .collect();
        self.gram = gram;
        self.t_diag = t_diag;
        self.stamp = fresh_stamp();
    }

    /// Allocation-free forward pass. `preact` and `scaled` are scratch buffers
    /// of length `width` that end up holding `W^T x + b` and `T^-1 relu(.)`.
    pub(crate) fn forward_into(
        &self,
        x: &[f64],
        out: &mut [f64],
        preact: &mut [f64],
        scaled: &mut [f64],
    ) {
        let k = self.width;
        preact.copy_from_slice(&self.bias);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weight[i * k..(i + 1) * k];
            for (z, w) in preact.iter_mut().zip(row) {
                *z += xi * w;
            }
        }
        for ((u, &z), &t) in scaled.iter_mut().zip(preact.iter()).zip(&self.t_diag) {
            *u = if z > 0.0 && t > 0.0 { z / t } else { 0.0 };
        }
        for (i, (o, &xi)) in out.iter_mut().zip(x).enumerate() {
            let row = &self.weight[i * k..(i + 1) * k];
            let s: f64 = row.iter().zip(scaled.iter()).map(|(w, u)| w * u).sum();
            *o = xi - 2.0 * s;
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_taped(x)?.0)
    }

    pub fn forward_taped(&self, x: &[f64]) -> Result<(Vec<f64>, LayerTape)> {
        ensure_dim(self.width, x.len())?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("non-finite layer input"));
        }
        let k = self.width;
        let mut out = vec![0.0; k];
        let mut preact = vec![0.0; k];
        let mut scaled = vec![0.0; k];
        self.forward_into(x, &mut out, &mut preact, &mut scaled);
        let tape = LayerTape {
            stamp: self.stamp,
            input: x.to_vec(),
            preact,
            scaled,
        };
        Ok((out, tape))
    }

    fn check_tape(&self, tape: &LayerTape, dy: &[f64]) -> Result<()> {
        if tape.stamp != self.stamp {
            return Err(Error::StaleTape);
        }
        ensure_dim(self.width, dy.len())
    }

    /// `(g_u, g_z)` for upstream gradient `dy`: `g_u = -2 W^T dy`,
    /// `g_z = (g_u / T) * [z > 0]`.
    pub(crate) fn residual_grads(&self, preact: &[f64], dy: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.width;
        let mut g_u = vec![0.0; k];
        for (i, &d) in dy.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &self.weight[i * k..(i + 1) * k];
            for (g, w) in g_u.iter_mut().zip(row) {
                *g += d * w;
            }
        }
        g_u.iter_mut().for_each(|g| *g *= -2.0);
        let g_z = g_u
            .iter()
            .zip(preact)
            .zip(&self.t_diag)
            .map(|((&g, &z), &t)| if z > 0.0 && t > 0.0 { g / t } else { 0.0 })
            .collect();
        (g_u, g_z)
    }

    /// `dx = dy + W g_z`.
    pub(crate) fn input_grad_from(&self, dy: &[f64], g_z: &[f64]) -> Vec<f64> {
        let k = self.width;
        dy.iter()
            .enumerate()
            .map(|(i, &d)| {
                let row = &self.weight[i * k..(i + 1) * k];
                d + row.iter().zip(g_z).map(|(w, g)| w * g).sum::<f64>()
            })
            .collect()
    }

    /// Input gradient only; cheaper than [`SllLayer::backward`].
    pub fn backward_input(&self, tape: &LayerTape, dy: &[f64]) -> Result<Vec<f64>> {
        self.check_tape(tape, dy)?;
        let (_, g_z) = self.residual_grads(&tape.preact, dy);
        Ok(self.input_grad_from(dy, &g_z))
    }

    pub fn backward(&self, tape: &LayerTape, dy: &[f64]) -> Result<LayerGrads> {
        self.check_tape(tape, dy)?;
        let k = self.width;
        let (g_u, g_z) = self.residual_grads(&tape.preact, dy);
        let input = self.input_grad_from(dy, &g_z);

        let mut weight = vec![0.0; k * k];
        for i in 0..k {
            let row = &mut weight[i * k..(i + 1) * k];
            let (d, x) = (dy[i], tape.input[i]);
            for j in 0..k {
                row[j] = -2.0 * d * tape.scaled[j] + x * g_z[j];
            }
        }
        let g_t: Vec<f64> = g_u
            .iter()
            .zip(&tape.scaled)
            .zip(&self.t_diag)
            .map(|((&g, &u), &t)| if t > 0.0 { -g * u / t } else { 0.0 })
            .collect();
        let mut scale_logits = vec![0.0; k];
        self.accumulate_t_path(&g_t, &mut weight, &mut scale_logits);

        Ok(LayerGrads {
            input,
            weight,
            bias: g_z,
            scale_logits,
        })
    }

    /// Adds the contribution of `T`'s dependence on `(W, q)` given `g_t = dL/dT_ii`.
    ///
    /// With `M_ij = |G_ij| e^(q_j - q_i)`:
    /// `dL/dG_ij = g_t_i sign(G_ij) e^(q_j - q_i)`, `dW += W (dG + dG^T)`,
    /// `dq_m += sum_i g_t_i M_im - g_t_m sum_j M_mj`.
    pub(crate) fn accumulate_t_path(&self, g_t: &[f64], d_weight: &mut [f64], d_logits: &mut [f64]) {
        let k = self.width;
        if g_t.iter().all(|&g| g == 0.0) {
            return;
        }
        let q = &self.scale_logits;
        let mut d_gram = vec![0.0; k * k];
        let mut m_row_sum = vec![0.0; k];
        let mut m_col_dot = vec![0.0; k];
        for i in 0..k {
            let gi = g_t[i];
            for j in 0..k {
                let gij = self.gram[i * k + j];
                if gij == 0.0 {
                    continue;
                }
                let e = (q[j] - q[i]).exp();
                let m = gij.abs() * e;
                m_row_sum[i] += m;
                m_col_dot[j] += gi * m;
                d_gram[i * k + j] = gi * gij.signum() * e;
            }
        }
        for m in 0..k {
            d_logits[m] += m_col_dot[m] - g_t[m] * m_row_sum[m];
        }
        // S = dG + dG^T, then dW += W S.
        let mut sym = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                sym[i * k + j] = d_gram[i * k + j] + d_gram[j * k + i];
            }
        }
        for l in 0..k {
            let w_row = &self.weight[l * k..(l + 1) * k];
            let out = &mut d_weight[l * k..(l + 1) * k];
            for (i, &wli) in w_row.iter().enumerate() {
                if wli == 0.0 {
                    continue;
                }
                let s_row = &sym[i * k..(i + 1) * k];
                for (o, s) in out.iter_mut().zip(s_row) {
                    *o += wli * s;
                }
            }
        }
    }
}
