//! Minimal fully-connected network with tanh hidden activations,
//! hand-derived backpropagation, and Adam.
//!
//! Everything is f64 and analytically differentiable (tanh throughout,
//! no kinked activations), which keeps central finite differences a
//! meaningful oracle for the gradient computations built on top.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// [in, out]
    pub w: Array2<f64>,
    /// [out]
    pub b: Array1<f64>,
}

impl Linear {
    fn zeros_like(&self) -> Linear {
        Linear {
            w: Array2::zeros(self.w.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }
}

/// Per-layer gradients, same shapes as the parameters.
pub type LayerGrads = Vec<Linear>;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

/// Forward activations kept for the backward pass: `xs[0]` is the input,
/// `xs[l + 1]` the output of layer `l` (tanh applied on hidden layers,
/// identity on the last).
pub struct MlpCache {
    xs: Vec<Array2<f64>>,
}

impl Mlp {
    /// Xavier-uniform initialization; biases start at zero.
    pub fn init<R: Rng>(dims: &[usize], rng: &mut R) -> Mlp {
        assert!(dims.len() >= 2);
        let layers = dims
            .windows(2)
            .map(|d| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w = Array2::from_shape_fn((fan_in, fan_out), |_| {
                    rng.random_range(-limit..limit)
                });
                Linear {
                    w,
                    b: Array1::zeros(fan_out),
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn zeros(dims: &[usize]) -> Mlp {
        let layers = dims
            .windows(2)
            .map(|d| Linear {
                w: Array2::zeros((d[0], d[1])),
                b: Array1::zeros(d[1]),
            })
            .collect();
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, MlpCache) {
        let n = self.layers.len();
        let mut xs = Vec::with_capacity(n + 1);
        xs.push(x.clone());
        for (l, layer) in self.layers.iter().enumerate() {
            let z = xs[l].dot(&layer.w) + &layer.b;
            let out = if l + 1 < n { z.mapv(f64::tanh) } else { z };
            xs.push(out);
        }
        let y = xs[n].clone();
        (y, MlpCache { xs })
    }

    /// Output without keeping activations.
    pub fn infer(&self, x: &Array2<f64>) -> Array2<f64> {
        let n = self.layers.len();
        let mut cur = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = cur.dot(&layer.w) + &layer.b;
            cur = if l + 1 < n { z.mapv(f64::tanh) } else { z };
        }
        cur
    }

    /// Backpropagates `grad_out` (d loss / d output) through the cached
    /// forward pass; returns per-layer parameter gradients and the
    /// gradient with respect to the input.
    pub fn backward(&self, cache: &MlpCache, grad_out: &Array2<f64>) -> (LayerGrads, Array2<f64>) {
        let n = self.layers.len();
        let mut grads: Vec<Linear> = self.layers.iter().map(Linear::zeros_like).collect();
        let mut g = grad_out.clone();
        for l in (0..n).rev() {
            grads[l].w = cache.xs[l].t().dot(&g);
            grads[l].b = g.sum_axis(Axis(0));
            let g_input = g.dot(&self.layers[l].w.t());
            if l > 0 {
                // xs[l] is the tanh output feeding layer l.
                g = g_input * cache.xs[l].mapv(|a| 1.0 - a * a);
            } else {
                return (grads, g_input);
            }
        }
        unreachable!("loop always returns at l == 0");
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w.len() + l.b.len())
            .sum()
    }

    /// Flat indexing over (w then b) of each layer in order, used by the
    /// finite-difference checker. The index is logical (row-major over
    /// each weight matrix), independent of memory layout.
    pub fn get_param(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.w.len() {
                return l.w[(idx / l.w.ncols(), idx % l.w.ncols())];
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                return l.b[idx];
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut idx: usize, value: f64) {
        for l in &mut self.layers {
            if idx < l.w.len() {
                let cols = l.w.ncols();
                l.w[(idx / cols, idx % cols)] = value;
                return;
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                l.b[idx] = value;
                return;
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn get_grad(grads: &LayerGrads, mut idx: usize) -> f64 {
        for l in grads {
            if idx < l.w.len() {
                return l.w[(idx / l.w.ncols(), idx % l.w.ncols())];
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                return l.b[idx];
            }
            idx -= l.b.len();
        }
        panic!("gradient index out of range");
    }

    /// Soft parameter mix: self = retain * self + (1 - retain) * other.
    pub fn polyak_from(&mut self, other: &Mlp, retain: f64) {
        for (t, o) in self.layers.iter_mut().zip(&other.layers) {
            t.w.zip_mut_with(&o.w, |a, b| *a = retain * *a + (1.0 - retain) * b);
            t.b.zip_mut_with(&o.b, |a, b| *a = retain * *a + (1.0 - retain) * b);
        }
    }

    pub fn has_non_finite(&self) -> bool {
        self.layers
            .iter()
            .any(|l| l.w.iter().any(|x| !x.is_finite()) || l.b.iter().any(|x| !x.is_finite()))
    }
}

/// Adam state for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<Linear>,
    v: Vec<Linear>,
}

impl Adam {
    pub fn new(mlp: &Mlp, lr: f64) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: mlp.layers.iter().map(Linear::zeros_like).collect(),
            v: mlp.layers.iter().map(Linear::zeros_like).collect(),
        }
    }

    pub fn step(&mut self, mlp: &mut Mlp, grads: &LayerGrads) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        let update = move |p: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for ((layer, grad), (m, v)) in mlp
            .layers
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            ndarray::Zip::from(&mut layer.w)
                .and(&grad.w)
                .and(&mut m.w)
                .and(&mut v.w)
                .for_each(update);
            ndarray::Zip::from(&mut layer.b)
                .and(&grad.b)
                .and(&mut m.b)
                .and(&mut v.b)
                .for_each(update);
        }
    }

    pub fn tensors(&self) -> (&[Linear], &[Linear]) {
        (&self.m, &self.v)
    }

    pub fn from_tensors(lr: f64, t: u64, m: Vec<Linear>, v: Vec<Linear>) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t,
            m,
            v,
        }
    }
}

/// Scalar Adam (for the entropy temperature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarAdam {
    pub lr: f64,
    pub t: u64,
    pub m: f64,
    pub v: f64,
}

impl ScalarAdam {
    pub fn new(lr: f64) -> Self {
        ScalarAdam {
            lr,
            t: 0,
            m: 0.0,
            v: 0.0,
        }
    }

    pub fn step(&mut self, p: &mut f64, g: f64) {
        self.t += 1;
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        self.m = b1 * self.m + (1.0 - b1) * g;
        self.v = b2 * self.v + (1.0 - b2) * g * g;
        let m_hat = self.m / (1.0 - b1.powi(self.t as i32));
        let v_hat = self.v / (1.0 - b2.powi(self.t as i32));
        *p -= self.lr * m_hat / (v_hat.sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use ndarray::array;

    /// Central finite differences of a scalar loss over one parameter.
    fn fd_grad<F: Fn(&Mlp) -> f64>(mlp: &Mlp, loss: F, idx: usize, h: f64) -> f64 {
        let mut plus = mlp.clone();
        plus.set_param(idx, mlp.get_param(idx) + h);
        let mut minus = mlp.clone();
        minus.set_param(idx, mlp.get_param(idx) - h);
        (loss(&plus) - loss(&minus)) / (2.0 * h)
    }

    #[test]
    fn backward_matches_finite_differences_on_quadratic_loss() {
        let mut rng = substream(31, "mlp-fd");
        let mlp = Mlp::init(&[5, 8, 8, 3], &mut rng);
        let x = Array2::from_shape_fn((7, 5), |_| {
            use rand::Rng;
            rng.random_range(-1.0..1.0)
        });
        // loss = 0.5 * sum(y^2): d loss / d y = y.
        let loss = |m: &Mlp| -> f64 {
            let y = m.infer(&x);
            0.5 * y.iter().map(|v| v * v).sum::<f64>()
        };
        let (y, cache) = mlp.forward(&x);
        let (grads, grad_in) = mlp.backward(&cache, &y);
        let h = 1e-6;
        for idx in (0..mlp.param_count()).step_by(17) {
            let numeric = fd_grad(&mlp, loss, idx, h);
            let analytic = Mlp::get_grad(&grads, idx);
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(
                ((analytic - numeric) / denom).abs() < 1e-6,
                "param {idx}: analytic {analytic} vs numeric {numeric}"
            );
        }
        // Input gradient against finite differences too.
        let mut x_plus = x.clone();
        x_plus[(3, 2)] += h;
        let mut x_minus = x.clone();
        x_minus[(3, 2)] -= h;
        let l = |xx: &Array2<f64>| 0.5 * mlp.infer(xx).iter().map(|v| v * v).sum::<f64>();
        let numeric = (l(&x_plus) - l(&x_minus)) / (2.0 * h);
        assert!((grad_in[(3, 2)] - numeric).abs() < 1e-6);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mlp = Mlp::zeros(&[4, 6, 2]);
        let x = array![[1.0, -2.0, 0.5, 3.0]];
        let y = mlp.infer(&x);
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn adam_descends_a_quadratic() {
        // Fit y = 0 from a fixed input: loss must drop fast.
        let mut rng = substream(32, "adam");
        let mut mlp = Mlp::init(&[3, 16, 1], &mut rng);
        let mut opt = Adam::new(&mlp, 1e-2);
        let x = array![[0.3, -0.7, 0.9]];
        let initial = {
            let y = mlp.infer(&x);
            y[(0, 0)].powi(2)
        };
        for _ in 0..200 {
            let (y, cache) = mlp.forward(&x);
            let grad_out = y.mapv(|v| 2.0 * v);
            let (grads, _) = mlp.backward(&cache, &grad_out);
            opt.step(&mut mlp, &grads);
        }
        let last = mlp.infer(&x)[(0, 0)].powi(2);
        assert!(last < initial * 1e-4, "initial {initial}, last {last}");
    }

    #[test]
    fn polyak_retention_semantics() {
        let mut rng = substream(33, "polyak");
        let online = Mlp::init(&[2, 4, 1], &mut rng);
        let mut target = Mlp::init(&[2, 4, 1], &mut rng);
        let frozen = target.clone();
        // retain = 1: target unchanged.
        target.polyak_from(&online, 1.0);
        assert_eq!(target, frozen);
        // retain = 0: full copy of the online network.
        target.polyak_from(&online, 0.0);
        assert_eq!(target, online);
    }

    #[test]
    fn param_indexing_round_trips() {
        let mut rng = substream(34, "idx");
        let mut mlp = Mlp::init(&[3, 5, 2], &mut rng);
        let n = mlp.param_count();
        assert_eq!(n, 3 * 5 + 5 + 5 * 2 + 2);
        for idx in 0..n {
            let v = mlp.get_param(idx);
            mlp.set_param(idx, v + 1.0);
            assert_eq!(mlp.get_param(idx), v + 1.0);
            mlp.set_param(idx, v);
        }
    }
}

