//! Adam with one learning rate per parameter group.

use crate::error::{Error, Result};
use crate::raster::Gradients;
use crate::scene::{GaussianCloud, SH_LEN};

/// Opacity logits are kept inside this band so `sigmoid` stays strictly
/// inside `(0, 1)` in double precision.
pub const OPACITY_LOGIT_LIMIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-15,
        }
    }
}

/// One bias-corrected Adam update of a parameter slice. `t` is the 1-based
/// step number.
pub fn adam_update(param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, t: u64, p: &AdamParams) {
    let bc1 = 1.0 - p.beta1.powi(t as i32);
    let bc2 = 1.0 - p.beta2.powi(t as i32);
    for k in 0..param.len() {
        let g = grad[k];
        m[k] = p.beta1 * m[k] + (1.0 - p.beta1) * g;
        v[k] = p.beta2 * v[k] + (1.0 - p.beta2) * g * g;
        let m_hat = m[k] / bc1;
        let v_hat = v[k] / bc2;
        param[k] -= lr * m_hat / (v_hat.sqrt() + p.eps);
    }
}

/// First and second moments for a group of `K`-vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Moments<const K: usize> {
    pub m: Vec<[f64; K]>,
    pub v: Vec<[f64; K]>,
}

impl<const K: usize> Moments<K> {
    pub fn zeros(n: usize) -> Self {
        Self {
            m: vec![[0.0; K]; n],
            v: vec![[0.0; K]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    fn step(&mut self, params: &mut [[f64; K]], grads: &[[f64; K]], lr: f64, t: u64, p: &AdamParams) {
        for i in 0..params.len() {
            adam_update(&mut params[i], &grads[i], &mut self.m[i], &mut self.v[i], lr, t, p);
        }
    }

    pub fn retain_mask(&mut self, keep: &[bool]) {
        let mut it = keep.iter();
        self.m.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        self.v.retain(|_| *it.next().unwrap());
    }

    pub fn push_zeros(&mut self, n: usize) {
        self.m.extend(std::iter::repeat([0.0; K]).take(n));
        self.v.extend(std::iter::repeat([0.0; K]).take(n));
    }

    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = [0.0; K]);
        self.v.iter_mut().for_each(|x| *x = [0.0; K]);
    }
}

/// Learning rate for each parameter group at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupRates {
    pub means: f64,
    pub log_scales: f64,
    pub rotations: f64,
    pub opacity: f64,
    pub sh: f64,
}

/// Optimizer state for a whole cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub params: AdamParams,
    pub step: u64,
    pub means: Moments<3>,
    pub log_scales: Moments<3>,
    pub rotations: Moments<4>,
    pub opacity: Moments<1>,
    pub sh: Moments<SH_LEN>,
}

impl Adam {
    pub fn new(n: usize, params: AdamParams) -> Self {
        Self {
            params,
            step: 0,
            means: Moments::zeros(n),
            log_scales: Moments::zeros(n),
            rotations: Moments::zeros(n),
            opacity: Moments::zeros(n),
            sh: Moments::zeros(n),
        }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn retain_mask(&mut self, keep: &[bool]) {
        self.means.retain_mask(keep);
        self.log_scales.retain_mask(keep);
        self.rotations.retain_mask(keep);
        self.opacity.retain_mask(keep);
        self.sh.retain_mask(keep);
    }

    pub fn push_zeros(&mut self, n: usize) {
        self.means.push_zeros(n);
        self.log_scales.push_zeros(n);
        self.rotations.push_zeros(n);
        self.opacity.push_zeros(n);
        self.sh.push_zeros(n);
    }

    /// Applies one update and re-normalizes every quaternion.
    pub fn apply(&mut self, cloud: &mut GaussianCloud, grads: &Gradients, rates: &GroupRates) -> Result<()> {
        if grads.len() != cloud.len() || self.len() != cloud.len() {
            return Err(Error::DimensionMismatch(format!(
                "cloud has {} Gaussians, gradients {}, optimizer {}",
                cloud.len(),
                grads.len(),
                self.len()
            )));
        }
        let finite = grads.means.iter().flatten().all(|v| v.is_finite())
            && grads.log_scales.iter().flatten().all(|v| v.is_finite())
            && grads.rotations.iter().flatten().all(|v| v.is_finite())
            && grads.opacity_logits.iter().all(|v| v.is_finite())
            && grads.sh.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFiniteGradient("optimizer received a non-finite gradient".into()));
        }
        self.step += 1;
        let (t, p) = (self.step, self.params);
        self.means.step(&mut cloud.means, &grads.means, rates.means, t, &p);
        self.log_scales.step(&mut cloud.log_scales, &grads.log_scales, rates.log_scales, t, &p);
        self.rotations.step(&mut cloud.rotations, &grads.rotations, rates.rotations, t, &p);
        for i in 0..cloud.len() {
            let mut o = [cloud.opacity_logits[i]];
            adam_update(
                &mut o,
                &[grads.opacity_logits[i]],
                &mut self.opacity.m[i],
                &mut self.opacity.v[i],
                rates.opacity,
                t,
                &p,
            );
            cloud.opacity_logits[i] = o[0].clamp(-OPACITY_LOGIT_LIMIT, OPACITY_LOGIT_LIMIT);
        }
        self.sh.step(&mut cloud.sh, &grads.sh, rates.sh, t, &p);
        cloud.normalize_rotations();
        Ok(())
    }
}
