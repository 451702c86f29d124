use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{summarize, Matrix, Rng, SummaryStats};
use crate::nn::{softmax_xent, Layer, Network};

/// Probe batch size used when none is configured.
pub const DEFAULT_PROBE_SAMPLES: usize = 100;

/// Statistics of one linear layer's preactivation and its gradient.
#[derive(Clone, Debug, Serialize)]
pub struct LayerStats {
    /// 1-based position among the dense and conv layers.
    pub layer: usize,
    /// Position in the network's layer list.
    pub index: usize,
    pub z: SummaryStats,
    pub grad: SummaryStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerProfile {
    pub layers: Vec<LayerStats>,
}

impl LayerProfile {
    /// `V(∇z^first) / V(∇z^last)` for 1-based layer numbers.
    pub fn grad_variance_ratio(&self, first: usize, last: usize) -> Option<f64> {
        let get = |l: usize| {
            self.layers
                .iter()
                .find(|s| s.layer == l)
                .map(|s| s.grad.variance)
        };
        Some(get(first)? / get(last)?)
    }

    /// `layer,quantity,stat,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,quantity,stat,value\n");
        for s in &self.layers {
            for (quantity, stats) in [("z", &s.z), ("grad_z", &s.grad)] {
                for (name, v) in stats.named() {
                    out.push_str(&format!("{},{quantity},{name},{v}\n", s.layer));
                }
            }
        }
        out
    }
}

/// One forward and backward pass of the cross-entropy loss over `batch`,
/// summarizing `z` and `∇z` of every dense and conv layer. Without labels,
/// uniformly random labels drawn from `rng` are used. Parameter gradients are
/// cleared afterwards.
pub fn layer_profile(
    net: &mut Network,
    batch: &Matrix,
    labels: Option<&[usize]>,
    rng: &mut Rng,
) -> Result<LayerProfile> {
    let random: Vec<usize>;
    let labels = match labels {
        Some(l) => l,
        None => {
            let classes = net.output_features();
            random = (0..batch.cols()).map(|_| rng.below(classes)).collect();
            &random
        }
    };
    let outs = net.forward_traced(batch)?;
    let logits = outs.last().ok_or(Error::Empty("layer_profile"))?;
    let (_, grad) = softmax_xent(logits, labels)?;
    let grads = net.backward_traced(&grad)?;
    net.zero_grad();
    let layers = net
        .linear_layers()
        .into_iter()
        .enumerate()
        .map(|(k, i)| {
            Ok(LayerStats {
                layer: k + 1,
                index: i,
                z: summarize(outs[i].as_slice())?,
                grad: summarize(grads[i].as_slice())?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LayerProfile { layers })
}

/// Distribution of one neuron's activation over a batch.
#[derive(Clone, Debug, Serialize)]
pub struct NeuronQuantiles {
    /// 1-based activation layer number.
    pub layer: usize,
    pub neuron: usize,
    pub stats: SummaryStats,
}

/// Summaries of the first `neurons` units of the selected activation layers
/// (1-based, counting activation layers only). Batch norm uses batch
/// statistics and the network is not modified.
pub fn activation_quantiles(
    net: &Network,
    batch: &Matrix,
    layers: &[usize],
    neurons: usize,
) -> Result<Vec<NeuronQuantiles>> {
    let mut acts = Vec::new();
    let mut h = batch.clone();
    for layer in net.layers() {
        h = layer.infer_batch(&h)?;
        if matches!(layer, Layer::Activation(_)) {
            acts.push(h.clone());
        }
    }
    let mut out = Vec::new();
    for &l in layers {
        let a = acts.get(l.wrapping_sub(1)).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "activation layer {l} out of range 1..={}",
                acts.len()
            ))
        })?;
        if neurons > a.rows() {
            return Err(Error::InvalidArgument(format!(
                "layer {l} has {} neurons, asked for {neurons}",
                a.rows()
            )));
        }
        for neuron in 0..neurons {
            out.push(NeuronQuantiles {
                layer: l,
                neuron,
                stats: summarize(a.row(neuron))?,
            });
        }
    }
    Ok(out)
}

/// `layer,neuron,stat,value` rows.
pub fn quantiles_csv(rows: &[NeuronQuantiles]) -> String {
    let mut out = String::from("layer,neuron,stat,value\n");
    for r in rows {
        for (name, v) in r.stats.named() {
            out.push_str(&format!("{},{},{name},{v}\n", r.layer, r.neuron));
        }
    }
    out
}
