//! Gumbel-Softmax sampling: differentiable approximate draws from a
//! categorical distribution parameterized by logits.
//!
//! `y = softmax((logits + g) / temperature)` with `g_i = -ln(-ln(u_i))`,
//! `u_i` uniform on the open interval (0, 1). The argmax of `y` is an
//! exact categorical sample of `softmax(logits)` at any temperature
//! (Gumbel-max), while `y` itself stays differentiable in the logits.

use rand::Rng;

use super::graph::{Graph, NodeId};
use super::tensor::{softmax_slice, Tensor};
use crate::rng::Stream;

/// Standard Gumbel noise, one draw per entry. Endpoint draws (u of
/// exactly 0 or 1) are rejected and resampled so the transform stays
/// finite.
pub fn sample_gumbel(n: usize, rng: &mut Stream) -> Vec<f64> {
    (0..n)
        .map(|_| {
            loop {
                let u: f64 = rng.gen();
                if u > 0.0 && u < 1.0 {
                    return -(-u.ln()).ln();
                }
            }
        })
        .collect()
}

/// Plain tensor-level sample, for statistics and tests.
pub fn gumbel_softmax(logits: &Tensor, temperature: f64, rng: &mut Stream) -> Tensor {
    assert!(temperature > 0.0, "temperature must be positive");
    let g = sample_gumbel(logits.len(), rng);
    let scaled: Vec<f64> = logits
        .data()
        .iter()
        .zip(&g)
        .map(|(&l, &gi)| (l + gi) / temperature)
        .collect();
    Tensor::vector(softmax_slice(&scaled))
}

/// Graph-mode sample: same function built from tape ops so gradients
/// flow back to the `logits` node. Noise is drawn fresh per call and
/// enters the graph as a constant.
pub fn gumbel_softmax_node(
    graph: &mut Graph,
    logits: NodeId,
    temperature: f64,
    rng: &mut Stream,
) -> NodeId {
    assert!(temperature > 0.0, "temperature must be positive");
    let n = graph.value(logits).len();
    let noise = graph.input(Tensor::vector(sample_gumbel(n, rng)));
    let shifted = graph.add(logits, noise);
    let scaled = graph.scale(shifted, 1.0 / temperature);
    graph.softmax(scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn gumbel_of_half_matches_closed_form() {
        // u = 0.5 gives -ln(ln 2) which is about 0.366513.
        let u: f64 = 0.5;
        let g = -(-u.ln()).ln();
        assert!((g - 0.3665129205816643).abs() < 1e-12);
    }

    #[test]
    fn output_is_on_the_simplex_for_various_temperatures() {
        let mut rng = stream(5);
        let logits = Tensor::vector(vec![0.3, -2.0, 1.4, 0.0]);
        for &t in &[0.1, 0.5, 1.0, 10.0] {
            let y = gumbel_softmax(&logits, t, &mut rng);
            let sum: f64 = y.data().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "temperature {t}");
            assert!(y.data().iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn low_temperature_approaches_one_hot() {
        let mut rng = stream(9);
        let logits = Tensor::vector(vec![0.0, 0.5, -0.3]);
        let y = gumbel_softmax(&logits, 1e-8, &mut rng);
        let max = y.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(max > 1.0 - 1e-9);
    }

    #[test]
    fn graph_and_tensor_paths_agree_given_same_noise() {
        let logits = Tensor::vector(vec![0.2, -0.7, 1.0]);
        let mut r1 = stream(42);
        let mut r2 = stream(42);
        let plain = gumbel_softmax(&logits, 1.0, &mut r1);
        let mut g = Graph::new();
        let l = g.leaf(logits);
        let node = gumbel_softmax_node(&mut g, l, 1.0, &mut r2);
        assert_eq!(plain.data(), g.value(node).data());
    }
}
