use opgan::models::{build_discriminator, build_generator, Discriminator, Generator, Network};
use opgan::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

fn rand_tensor(rng: &mut ChaCha8Rng, c: usize, l: usize) -> Tensor<f64> {
    Tensor::from_vec(c, l, (0..c * l).map(|_| rng.random_range(-0.9..0.9)).collect()).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn assert_close(what: &str, analytic: f64, numeric: f64) {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    assert!(
        (analytic - numeric).abs() / scale < 1e-4,
        "{what}: analytic {analytic:e}, numeric {numeric:e}"
    );
}

/// Probes a few weights and the bias of every layer of `net` with central
/// differences of `f`.
fn check_params<N: Network<f64> + Clone>(
    net: &N,
    analytic: &[opgan::models::ParamGrads<f64>],
    rng: &mut ChaCha8Rng,
    f: impl Fn(&N) -> f64,
) {
    for (li, g) in analytic.iter().enumerate() {
        let n = net.layers()[li].weights.len();
        for _ in 0..4 {
            let i = rng.random_range(0..n);
            let mut up = net.clone();
            up.layers_mut()[li].weights[i] += H;
            let mut down = net.clone();
            down.layers_mut()[li].weights[i] -= H;
            assert_close(&format!("layer {li} weight {i}"), g.weights[i], (f(&up) - f(&down)) / (2.0 * H));
        }
        let mut up = net.clone();
        up.layers_mut()[li].bias[0] += H;
        let mut down = net.clone();
        down.layers_mut()[li].bias[0] -= H;
        assert_close(&format!("layer {li} bias"), g.bias[0], (f(&up) - f(&down)) / (2.0 * H));
    }
}

#[test]
fn generator_backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for q in [1, 3] {
        let g: Generator<f64> = build_generator(q, &mut rng).unwrap();
        let x = rand_tensor(&mut rng, 1, 64);
        let r: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, cache) = g.forward_cached(&x).unwrap();
        let grads = g.backward(&cache, &Tensor::from_vec(1, 64, r.clone()).unwrap()).unwrap();
        assert_eq!(grads.len(), g.layers().len());
        check_params(&g, &grads, &mut rng, |net| dot(&r, net.forward(&x).unwrap().data()));
    }
}

#[test]
fn discriminator_backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let d: Discriminator<f64> = build_discriminator(3, &mut rng).unwrap();
    let cond = rand_tensor(&mut rng, 1, 128);
    let cand = rand_tensor(&mut rng, 1, 128);
    let (s, cache) = d.forward_cached(&cond, &cand).unwrap();
    assert_eq!(s.shape(), (1, 4));
    let r: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (grads, d_cand) = d.backward(&cache, &Tensor::from_vec(1, 4, r.clone()).unwrap()).unwrap();
    check_params(&d, &grads, &mut rng, |net| dot(&r, net.forward(&cond, &cand).unwrap().data()));
    for i in [0, 17, 64, 127] {
        let mut up = cand.clone();
        up.data_mut()[i] += H;
        let mut down = cand.clone();
        down.data_mut()[i] -= H;
        let num = (dot(&r, d.forward(&cond, &up).unwrap().data()) - dot(&r, d.forward(&cond, &down).unwrap().data())) / (2.0 * H);
        assert_close(&format!("candidate {i}"), d_cand.data()[i], num);
    }
}
