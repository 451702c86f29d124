use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Network, ParamKind};

/// SGD with classical momentum:
///
/// ```text
/// buf ← momentum · buf + (grad + weight_decay · param)
/// param ← param − lr · buf
/// ```
///
/// Weight decay applies to weight parameters only (`W`, or `V` in LCW mode),
/// never to biases or batch-norm scale and shift.
#[derive(Clone, Debug)]
pub struct Sgd {
    pub momentum: f64,
    pub weight_decay: f64,
    buffers: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(momentum: f64, weight_decay: f64) -> Self {
        Sgd {
            momentum,
            weight_decay,
            buffers: Vec::new(),
        }
    }

    pub fn step(&mut self, net: &mut Network, lr: f64) {
        let (mu, wd) = (self.momentum, self.weight_decay);
        let buffers = &mut self.buffers;
        let mut k = 0;
        net.update_params(|_, slot| {
            if buffers.len() == k {
                buffers.push(vec![0.0; slot.value.len()]);
            }
            let decay = if slot.kind == ParamKind::Weight {
                wd
            } else {
                0.0
            };
            let buf = &mut buffers[k];
            for ((p, &g), b) in slot.value.iter_mut().zip(slot.grad).zip(buf.iter_mut()) {
                *b = mu * *b + g + decay * *p;
                *p -= lr * *b;
            }
            k += 1;
        });
    }
}

/// Step decay with a floor: `max(initial · decay^⌊epoch / every⌋, floor)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay: f64,
    /// Epochs between decays.
    pub every: usize,
    pub floor: f64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            initial: 0.1,
            decay: 0.95,
            every: 1,
            floor: 0.001,
        }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.initial > 0.0
            && self.decay > 0.0
            && self.decay <= 1.0
            && self.every > 0
            && self.floor >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid learning-rate schedule {self:?}"
            )))
        }
    }

    pub fn rate(&self, epoch: usize) -> f64 {
        let steps = (epoch / self.every) as i32;
        (self.initial * self.decay.powi(steps)).max(self.floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::nn::{Dense, Parameterization};

    fn one_weight_net() -> Network {
        let d = Dense::from_weights(
            &Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            vec![0.0],
            Parameterization::Standard,
        )
        .unwrap();
        Network::new(1, vec![d.into()]).unwrap()
    }

    /// Sets the accumulated gradient of every slot to `g` by backpropagating a
    /// chosen upstream gradient through the single dense layer.
    fn set_grad(net: &mut Network, g: f64) {
        net.zero_grad();
        net.forward(&Matrix::from_vec(1, 1, vec![1.0]).unwrap())
            .unwrap();
        net.backward(&Matrix::from_vec(1, 1, vec![g]).unwrap())
            .unwrap();
    }

    #[test]
    fn schedule_values() {
        let s = LrSchedule::default();
        assert_eq!(s.rate(0), 0.1);
        assert!((s.rate(1) - 0.095).abs() < 1e-15);
        assert!(0.1 * 0.95f64.powi(200) < 0.001);
        assert_eq!(s.rate(200), 0.001);
        let slow = LrSchedule { every: 3, ..s };
        assert_eq!(slow.rate(2), 0.1);
        assert!((slow.rate(3) - 0.095).abs() < 1e-15);
    }

    #[test]
    fn plain_step() {
        let mut net = one_weight_net();
        set_grad(&mut net, 2.0);
        Sgd::new(0.0, 0.0).step(&mut net, 0.1);
        assert_eq!(net.param_values(), vec![1.0 - 0.2, -0.2]);
    }

    #[test]
    fn momentum_recurrence() {
        let mut net = one_weight_net();
        let mut opt = Sgd::new(0.9, 0.0);
        for _ in 0..2 {
            set_grad(&mut net, 1.0);
            opt.step(&mut net, 0.1);
        }
        // bias sees the constant gradient 1: displacement lr·g·(1 + 1.9)
        let b = net.param_values()[1];
        assert!((b + 0.1 * 2.9).abs() < 1e-15, "{b}");
    }

    #[test]
    fn decay_skips_bias() {
        let mut net = one_weight_net();
        set_grad(&mut net, 0.0);
        net.update_params(|_, s| s.value.iter_mut().for_each(|v| *v = 1.0));
        Sgd::new(0.0, 0.5).step(&mut net, 0.1);
        assert_eq!(net.param_values(), vec![0.95, 1.0]);
    }

    #[test]
    fn bad_schedule() {
        assert!(LrSchedule {
            every: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(LrSchedule {
            initial: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(LrSchedule::default().validate().is_ok());
    }
}
