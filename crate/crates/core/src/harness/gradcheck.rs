//! Central finite-difference checks of every backward pass.
//!
//! The loss is softmax cross-entropy on the network output with random labels.
//! Errors are norm-wise: `‖analytic − numeric‖ / (‖analytic‖ + ‖numeric‖)`.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::{dot, rand_normal, Matrix, Rng};
use crate::nn::{
    softmax_xent, Activation, ActivationKind, BatchNorm, Conv2d, ConvGeometry, Dense, Layer,
    MlpSpec, Network, Parameterization,
};

pub const FD_STEP: f64 = 1e-5;
pub const GRADCHECK_TOL: f64 = 1e-5;

#[derive(Clone, Debug, Serialize)]
pub struct GradCheck {
    pub name: String,
    pub param_error: f64,
    pub input_error: f64,
}

impl GradCheck {
    pub fn max_error(&self) -> f64 {
        self.param_error.max(self.input_error)
    }

    pub fn pass(&self) -> bool {
        self.max_error() < GRADCHECK_TOL
    }
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let denom = dot(a, a).sqrt() + dot(b, b).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        dot(&diff, &diff).sqrt() / denom
    }
}

fn loss(net: &mut Network, x: &Matrix, labels: &[usize]) -> Result<f64> {
    let logits = net.forward(x)?;
    Ok(softmax_xent(&logits, labels)?.0)
}

/// Compares analytic parameter and input gradients of `net` with central
/// differences at step [`FD_STEP`].
pub fn check_network(
    name: &str,
    net: &mut Network,
    x: &Matrix,
    labels: &[usize],
) -> Result<GradCheck> {
    net.zero_grad();
    let logits = net.forward(x)?;
    let (_, g) = softmax_xent(&logits, labels)?;
    let input_grad = net.backward(&g)?;
    let analytic = net.param_grads();
    net.zero_grad();

    let mut p = net.param_values();
    let mut numeric = vec![0.0; p.len()];
    for k in 0..p.len() {
        let orig = p[k];
        p[k] = orig + FD_STEP;
        net.set_param_values(&p)?;
        let plus = loss(net, x, labels)?;
        p[k] = orig - FD_STEP;
        net.set_param_values(&p)?;
        let minus = loss(net, x, labels)?;
        p[k] = orig;
        numeric[k] = (plus - minus) / (2.0 * FD_STEP);
    }
    net.set_param_values(&p)?;

    let mut xp = x.clone();
    let mut numeric_x = vec![0.0; x.len()];
    for k in 0..x.len() {
        let orig = xp.as_slice()[k];
        xp.as_mut_slice()[k] = orig + FD_STEP;
        let plus = loss(net, &xp, labels)?;
        xp.as_mut_slice()[k] = orig - FD_STEP;
        let minus = loss(net, &xp, labels)?;
        xp.as_mut_slice()[k] = orig;
        numeric_x[k] = (plus - minus) / (2.0 * FD_STEP);
    }
    Ok(GradCheck {
        name: name.to_string(),
        param_error: relative_error(&analytic, &numeric),
        input_error: relative_error(input_grad.as_slice(), &numeric_x),
    })
}

/// Direct check of the softmax cross-entropy gradient.
pub fn check_loss(logits: &Matrix, labels: &[usize]) -> Result<GradCheck> {
    let (_, analytic) = softmax_xent(logits, labels)?;
    let mut z = logits.clone();
    let mut numeric = vec![0.0; z.len()];
    for k in 0..z.len() {
        let orig = z.as_slice()[k];
        z.as_mut_slice()[k] = orig + FD_STEP;
        let plus = softmax_xent(&z, labels)?.0;
        z.as_mut_slice()[k] = orig - FD_STEP;
        let minus = softmax_xent(&z, labels)?.0;
        z.as_mut_slice()[k] = orig;
        numeric[k] = (plus - minus) / (2.0 * FD_STEP);
    }
    Ok(GradCheck {
        name: "softmax_xent".into(),
        param_error: 0.0,
        input_error: relative_error(analytic.as_slice(), &numeric),
    })
}

fn randomize(net: &mut Network, rng: &mut Rng, scale: f64) -> Result<()> {
    let p: Vec<f64> = (0..net.param_values().len())
        .map(|_| scale * rng.normal())
        .collect();
    net.set_param_values(&p)
}

fn labels(rng: &mut Rng, classes: usize, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.below(classes)).collect()
}

fn single(layer: Layer, inputs: usize) -> Result<Network> {
    Network::new(inputs, vec![layer])
}

fn run_case(
    out: &mut Vec<GradCheck>,
    name: &str,
    mut net: Network,
    batch: usize,
    rng: &mut Rng,
    avoid_kink: bool,
) -> Result<()> {
    randomize(&mut net, rng, 0.5)?;
    let mut x = rand_normal(rng, 0.0, 1.0, net.input_features(), batch)?;
    if avoid_kink {
        x.as_mut_slice()
            .iter_mut()
            .filter(|v| v.abs() < 1e-3)
            .for_each(|v| *v += 0.01);
    }
    let y = labels(rng, net.output_features(), batch);
    out.push(check_network(name, &mut net, &x, &y)?);
    Ok(())
}

/// Every layer type, both parameterizations, and composed MLPs, drawn from
/// `seed`.
pub fn gradcheck_suite(seed: u64) -> Result<Vec<GradCheck>> {
    use Parameterization::{Lcw, Standard};
    let mut rng = Rng::new(seed);
    let mut out = Vec::new();

    for (name, mode) in [("dense", Standard), ("dense_lcw", Lcw)] {
        run_case(
            &mut out,
            name,
            single(Dense::new(4, 3, mode)?.into(), 4)?,
            5,
            &mut rng,
            false,
        )?;
    }

    let geom = |stride, padding| ConvGeometry {
        in_channels: 3,
        out_channels: 4,
        kernel_h: 3,
        kernel_w: 3,
        stride,
        padding,
        in_h: 5,
        in_w: 5,
    };
    for (name, mode, stride, padding) in [
        ("conv2d", Standard, 1, 0),
        ("conv2d_lcw", Lcw, 1, 0),
        ("conv2d_stride2_pad1", Standard, 2, 1),
        ("conv2d_lcw_stride2_pad1", Lcw, 2, 1),
    ] {
        let net = single(Conv2d::new(geom(stride, padding), mode)?.into(), 75)?;
        run_case(&mut out, name, net, 2, &mut rng, false)?;
    }

    for (name, kind) in [
        ("sigmoid", ActivationKind::Sigmoid),
        ("relu", ActivationKind::Relu),
    ] {
        let net = single(Activation::new(kind).into(), 4)?;
        run_case(
            &mut out,
            name,
            net,
            6,
            &mut rng,
            kind == ActivationKind::Relu,
        )?;
    }

    let mut bn = single(BatchNorm::new(4).into(), 4)?;
    randomize(&mut bn, &mut rng, 1.0)?;
    let x = rand_normal(&mut rng, 0.5, 2.0, 4, 8)?;
    let y = labels(&mut rng, 4, 8);
    out.push(check_network("batchnorm", &mut bn, &x, &y)?);

    let logits = rand_normal(&mut rng, 0.0, 2.0, 3, 5)?;
    out.push(check_loss(&logits, &labels(&mut rng, 3, 5))?);

    run_case(
        &mut out,
        "mlp_sigmoid_6_5_5_4",
        MlpSpec::new(6, 3, 5, 4).build()?,
        7,
        &mut rng,
        false,
    )?;
    let spec = MlpSpec::new(6, 3, 5, 4).with_lcw(true).with_batchnorm(true);
    let mut net = spec.build()?;
    randomize(&mut net, &mut rng, 0.5)?;
    let x = rand_normal(&mut rng, 0.0, 1.0, 6, 8)?;
    let y = labels(&mut rng, 4, 8);
    out.push(check_network("mlp_lcw_batchnorm", &mut net, &x, &y)?);

    Ok(out)
}
