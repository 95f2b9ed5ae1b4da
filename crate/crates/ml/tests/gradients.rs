use fgm_ml::mlp::{backprop_gradient, Activation, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PROBES: usize = 1000;

/// Central differences against the analytic gradient on random small nets.
#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let acts = [Activation::Tanh, Activation::Sigmoid, Activation::Relu];
    let mut worst: f64 = 0.0;
    let mut probes = 0;
    while probes < PROBES {
        let depth = rng.gen_range(1..=3);
        let mut sizes = vec![rng.gen_range(1..=3)];
        sizes.extend((0..depth).map(|_| rng.gen_range(2..=5)));
        sizes.push(rng.gen_range(1..=3));
        let act = acts[rng.gen_range(0..3)];
        let mut net = Network::init(&sizes, act, &mut rng);
        let rows = rng.gen_range(1..=6);
        let xs: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let ys: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                (0..*sizes.last().unwrap())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let alpha = [0.0, 1e-3, 0.05][rng.gen_range(0..3)];
        let (_, grad) = backprop_gradient(&net, &xs, &ys, alpha);
        let p0 = net.params();
        for _ in 0..10 {
            let k = rng.gen_range(0..p0.len());
            let h = 1e-6;
            let mut p = p0.clone();
            p[k] = p0[k] + h;
            net.set_params(&p);
            let up = net.loss(&xs, &ys, alpha);
            p[k] = p0[k] - h;
            net.set_params(&p);
            let down = net.loss(&xs, &ys, alpha);
            net.set_params(&p0);
            let fd = (up - down) / (2.0 * h);
            // relu kinks make the difference quotient meaningless; skip
            // probes whose stencil straddles one
            if act == Activation::Relu && kink_within(&net, &xs, k, h) {
                continue;
            }
            let rel = (grad[k] - fd).abs() / grad[k].abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
            probes += 1;
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

/// Whether any hidden pre-activation changes sign when parameter `k` moves
/// by ±h.
fn kink_within(net: &Network, xs: &[Vec<f64>], k: usize, h: f64) -> bool {
    let mut p = net.params();
    let base = p[k];
    let mut signs = Vec::new();
    for d in [-h, h] {
        p[k] = base + d;
        let mut n = net.clone();
        n.set_params(&p);
        signs.push(pre_activation_signs(&n, xs));
    }
    signs[0] != signs[1]
}

fn pre_activation_signs(net: &Network, xs: &[Vec<f64>]) -> Vec<bool> {
    let mut out = Vec::new();
    for x in xs {
        let mut a = x.clone();
        for (li, l) in net.layers.iter().enumerate() {
            let z: Vec<f64> = (0..l.n_out)
                .map(|o| l.b[o] + (0..l.n_in).map(|i| l.w[o * l.n_in + i] * a[i]).sum::<f64>())
                .collect();
            if li + 1 < net.layers.len() {
                out.extend(z.iter().map(|v| *v > 0.0));
                a = z.iter().map(|v| net.activation.apply(*v)).collect();
            }
        }
    }
    out
}
