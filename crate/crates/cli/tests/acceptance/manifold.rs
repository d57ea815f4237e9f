use cuelens_core::geometry::{id_2nn, id_lpca, id_mle, two_nn_from_ratios, LPCA_K, LPCA_VARIANCE, MLE_K, TWO_NN_DISCARD};
use cuelens_core::synth::gen_manifold;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Checks, Verdict};

const N: usize = 2000;
const CASES: [(usize, usize); 4] = [(1, 10), (2, 10), (5, 20), (8, 30)];

pub fn run() -> Verdict {
    let mut checks = Checks::default();
    for (i, &(d, ambient)) in CASES.iter().enumerate() {
        let x = gen_manifold(d, ambient, N, 0.0, 100 + i as u64).unwrap();
        let lpca = id_lpca(x.view(), LPCA_K, LPCA_VARIANCE).unwrap().value;
        let mle = id_mle(x.view(), MLE_K).unwrap().value;
        let two_nn = id_2nn(x.view(), TWO_NN_DISCARD).unwrap().value;
        let d = d as f64;
        checks.check(format!("lpca({d},{ambient})={lpca:.3}"), (lpca - d).abs() < 1e-9);
        checks.check(format!("mle({d},{ambient})={mle:.3}"), (mle - d).abs() <= 1.0);
        checks.check(format!("2nn({d},{ambient})={two_nn:.3}"), (two_nn - d).abs() <= 0.5);
    }
    // inverse-CDF draws from the Pareto law of the neighbor-distance ratio
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let dim = 3.0;
    let ratios: Vec<f64> = (0..N).map(|_| (1.0 - r.random::<f64>()).powf(-1.0 / dim)).collect();
    let fit = two_nn_from_ratios(&ratios, TWO_NN_DISCARD).unwrap();
    checks.check(format!("2nn pareto(3)={fit:.3}"), (fit - dim).abs() <= 0.2);
    checks.verdict()
}
