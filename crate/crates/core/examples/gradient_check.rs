//! Compares backpropagated gradients of every variant with central finite
//! differences in f64.

use terzaghi_deeponet::deeponet::{DeepOnet, InputBatch, ModelSpec, Variant};
use terzaghi_deeponet::nn::FourierSpec;
use terzaghi_deeponet::Result;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `||g_fd - g|| / max(||g_fd||, ||g||)` over all parameters.
pub fn relative_error(variant: Variant, depth: usize, width: usize, triples: usize, eps: f64, seed: u64) -> Result<f64> {
    let m = 8;
    let spec = ModelSpec::new(variant, m, 10, depth, width, FourierSpec { m_freq: 8, sigma: 1.0 })?;
    let mut net = DeepOnet::<f64>::new(&spec, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut x = InputBatch::with_capacity(&spec, triples);
    let mut y = Vec::with_capacity(triples);
    for _ in 0..triples {
        let u: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.5..1.5)).collect();
        x.push(&spec, &u, rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        y.push(rng.gen_range(-1.0..1.0));
    }
    net.zero_grad();
    net.loss_and_grad(&x, &y)?;
    let g = net.flat_grads();
    let mut p = net.flat_params();
    let mut fd = vec![0.0; p.len()];
    for k in 0..p.len() {
        let orig = p[k];
        p[k] = orig + eps;
        net.set_flat_params(&p)?;
        let up = loss(&net, &x, &y)?;
        p[k] = orig - eps;
        net.set_flat_params(&p)?;
        let down = loss(&net, &x, &y)?;
        p[k] = orig;
        fd[k] = (up - down) / (2.0 * eps);
    }
    let diff = fd.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(diff / norm(&fd).max(norm(&g)).max(f64::MIN_POSITIVE))
}

fn loss(net: &DeepOnet<f64>, x: &InputBatch<f64>, y: &[f64]) -> Result<f64> {
    let pred = net.predict(x)?;
    Ok(pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    for v in Variant::ALL {
        println!("{v}: relative error {:.3e}", relative_error(v, 3, 10, 5, 1e-5, 42)?);
    }
    Ok(())
}
