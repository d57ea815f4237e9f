use cuelens_core::geometry::id_mle;
use cuelens_core::hardness::{aum, el2n, vog};
use cuelens_core::memorization::{mt_hard, FoldPair};
use cuelens_core::perturb::js_divergence;
use cuelens_core::saliency::{concordance_score, min_max_normalize};
use cuelens_core::similarity::{cohens_kappa, kernel_total_variation, weight_displacement};
use cuelens_core::telemetry::{LabelSet, PredictionTrace};
use ndarray::{Array2, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{close, Checks, Verdict};

const INSTANCES: usize = 1000;
const REL: f64 = 1e-6;
const EXACT: f64 = 1e-9;

fn distribution(r: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| if r.random_bool(0.2) { 0.0 } else { r.random::<f64>() }).collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

fn js_oracle(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    entropy(&m) - 0.5 * (entropy(p) + entropy(q))
}

fn random_trace(r: &mut ChaCha8Rng) -> (Vec<Vec<Vec<f64>>>, Vec<usize>) {
    let (n, c, t) = (r.random_range(1..6), r.random_range(2..5), r.random_range(1..7));
    let labels = (0..n).map(|_| r.random_range(0..c)).collect();
    let logits = (0..t)
        .map(|_| (0..n).map(|_| (0..c).map(|_| r.random_range(-5.0..5.0)).collect()).collect())
        .collect();
    (logits, labels)
}

fn to_trace(logits: &[Vec<Vec<f64>>], labels: &[usize]) -> (PredictionTrace, LabelSet) {
    let c = logits[0][0].len();
    let mats = logits
        .iter()
        .map(|z| Array2::from_shape_fn((z.len(), c), |(i, k)| z[i][k]))
        .collect();
    (PredictionTrace::new(mats).unwrap(), LabelSet::new(labels.to_vec(), c).unwrap())
}

fn aum_oracle(logits: &[Vec<Vec<f64>>], labels: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; labels.len()];
    for z in logits {
        for (i, row) in z.iter().enumerate() {
            let mut others: Vec<f64> = row.iter().enumerate().filter(|(k, _)| *k != labels[i]).map(|(_, v)| *v).collect();
            others.sort_by(|a, b| b.partial_cmp(a).unwrap());
            out[i] += (row[labels[i]] - others[0]) / logits.len() as f64;
        }
    }
    out
}

fn el2n_oracle(logits: &[Vec<Vec<f64>>], labels: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; labels.len()];
    for z in logits {
        for (i, row) in z.iter().enumerate() {
            let denom: f64 = row.iter().map(|v| v.exp()).sum();
            let sq: f64 = row
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let target = if k == labels[i] { 1.0 } else { 0.0 };
                    (v.exp() / denom - target).powi(2)
                })
                .sum();
            out[i] += sq.sqrt() / logits.len() as f64;
        }
    }
    out
}

fn variance_oracle(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let sum_sq: f64 = v.iter().map(|x| x * x).sum();
    let sum: f64 = v.iter().sum();
    (sum_sq - sum * sum / n) / n
}

fn kappa_oracle(a: &[bool], b: &[bool]) -> f64 {
    let mut table = [[0usize; 2]; 2];
    for (&x, &y) in a.iter().zip(b) {
        table[usize::from(x)][usize::from(y)] += 1;
    }
    let n = a.len() as f64;
    let po = (table[0][0] + table[1][1]) as f64 / n;
    let pa = (table[1][0] + table[1][1]) as f64 / n;
    let pb = (table[0][1] + table[1][1]) as f64 / n;
    let pe = pa * pb + (1.0 - pa) * (1.0 - pb);
    if pe >= 1.0 {
        0.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

fn tv_oracle(k: &Array4<f64>) -> Vec<f64> {
    let (o, h, w, c) = k.dim();
    (0..o)
        .map(|q| {
            let mut tv = 0.0;
            for y in 0..h {
                for x in 0..w {
                    for ch in 0..c {
                        if x + 1 < w {
                            tv += (k[[q, y, x + 1, ch]] - k[[q, y, x, ch]]).abs();
                        }
                        if y + 1 < h {
                            tv += (k[[q, y + 1, x, ch]] - k[[q, y, x, ch]]).abs();
                        }
                    }
                }
            }
            tv
        })
        .collect()
}

/// The `rank`-th smallest value, found by counting rather than sorting.
fn order_statistic(values: &[f64], rank: usize) -> f64 {
    for &v in values {
        let below = values.iter().filter(|&&x| x < v).count();
        let at_or_below = values.iter().filter(|&&x| x <= v).count();
        if below <= rank && rank < at_or_below {
            return v;
        }
    }
    unreachable!("rank within range")
}

fn concordance_oracle(values: &[f64], mask: &[bool], flat: bool) -> f64 {
    if flat {
        return 0.0;
    }
    let m = values.len();
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let mut hits = 0;
    for q in 90..=100usize {
        let keep = |v: f64| {
            if q == 100 {
                v == max
            } else {
                v > order_statistic(values, q * (m - 1) / 100)
            }
        };
        if values.iter().zip(mask).any(|(&v, &y)| y && keep(v)) {
            hits += 1;
        }
    }
    hits as f64 / 11.0
}

fn mle_oracle(points: &[Vec<f64>], k: usize) -> f64 {
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut d: Vec<f64> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let inv: f64 = (0..k - 1).map(|j| (d[k - 1] / d[j]).ln()).sum::<f64>() / (k - 1) as f64;
        total += 1.0 / inv;
    }
    total / points.len() as f64
}

pub fn run() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(20261016);
    let mut checks = Checks::default();
    let mut ok = true;
    for _ in 0..INSTANCES {
        let len = r.random_range(2..7);
        let (p, q) = (distribution(&mut r, len), distribution(&mut r, len));
        ok &= close(js_divergence(&p, &q).unwrap(), js_oracle(&p, &q), REL);
    }
    checks.check("js_divergence", ok);

    let (mut ok_aum, mut ok_el2n) = (true, true);
    for _ in 0..INSTANCES {
        let (logits, labels) = random_trace(&mut r);
        let (trace, set) = to_trace(&logits, &labels);
        let a = aum(&trace, &set).unwrap();
        let e = el2n(&trace, &set).unwrap();
        ok_aum &= a.iter().zip(aum_oracle(&logits, &labels)).all(|(x, y)| close(*x, y, REL));
        ok_el2n &= e.iter().zip(el2n_oracle(&logits, &labels)).all(|(x, y)| close(*x, y, REL));
    }
    checks.check("aum", ok_aum);
    checks.check("el2n", ok_el2n);

    let mut ok = true;
    for _ in 0..INSTANCES {
        let (n, t) = (r.random_range(1..5), r.random_range(1..9));
        let g = Array2::from_shape_fn((n, t), |_| r.random_range(0.0..3.0));
        let v = vog(&g);
        ok &= (0..n).all(|i| (v[i] - variance_oracle(&g.row(i).to_vec())).abs() <= REL * v[i].abs() + 1e-12);
    }
    checks.check("vog", ok);

    let mut ok = true;
    for _ in 0..INSTANCES {
        let n = r.random_range(1..30);
        let bias = r.random::<f64>();
        let a: Vec<bool> = (0..n).map(|_| r.random_bool(bias)).collect();
        let b: Vec<bool> = (0..n).map(|_| r.random_bool(bias)).collect();
        ok &= (cohens_kappa(&a, &b).unwrap().value - kappa_oracle(&a, &b)).abs() <= EXACT;
    }
    checks.check("cohens_kappa", ok);

    let mut ok = true;
    for _ in 0..INSTANCES {
        let dims = (r.random_range(1..4), r.random_range(1..5), r.random_range(1..5), r.random_range(1..4));
        let k = Array4::from_shape_fn(dims, |_| r.random_range(-1.0..1.0));
        ok &= kernel_total_variation(&k)
            .iter()
            .zip(tv_oracle(&k))
            .all(|(a, b)| close(*a, b, REL));
    }
    checks.check("kernel_total_variation", ok);

    let mut ok = true;
    for _ in 0..INSTANCES {
        let (t, len) = (r.random_range(1..6), r.random_range(1..20));
        let snaps: Vec<Vec<f64>> = (0..t).map(|_| (0..len).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let d = weight_displacement(&snaps).unwrap();
        ok &= d.len() == t - 1;
        for s in 1..t {
            let mut sq = 0.0;
            for j in 0..len {
                sq += (snaps[s][j] - snaps[s - 1][j]).powi(2);
            }
            ok &= close(d[s - 1], sq.sqrt(), REL);
        }
    }
    checks.check("weight_displacement", ok);

    let mut ok = true;
    for _ in 0..INSTANCES {
        let folds: Vec<FoldPair> = (0..r.random_range(1..5))
            .map(|k| {
                let (h, seeds) = (r.random_range(1..8), r.random_range(1..4));
                let cin = Array2::from_shape_fn((seeds, h), |_| r.random_bool(0.7));
                let cout = Array2::from_shape_fn((seeds, h), |_| r.random_bool(0.4));
                FoldPair::new(k, (0..h).collect(), cin, cout).unwrap()
            })
            .collect();
        let mut gap = 0.0;
        for f in &folds {
            let (seeds, h) = f.correct_in.dim();
            let count = |m: &Array2<bool>| m.iter().filter(|&&x| x).count() as f64;
            gap += (count(&f.correct_in) - count(&f.correct_out)) / (seeds * h) as f64;
            let mem = f.mem_scores();
            for j in 0..h {
                let col = |m: &Array2<bool>| (0..seeds).filter(|&s| m[[s, j]]).count() as f64 / seeds as f64;
                ok &= (mem[j] - (col(&f.correct_in) - col(&f.correct_out))).abs() <= EXACT;
            }
        }
        ok &= (mt_hard(&folds).unwrap() - gap / folds.len() as f64).abs() <= EXACT;
    }
    checks.check("mem/mt_hard", ok);

    let mut ok = true;
    for _ in 0..INSTANCES {
        let (h, w) = (r.random_range(2..9), r.random_range(2..9));
        let levels = r.random_range(1..6) as f64;
        let raw = Array2::from_shape_fn((h, w), |_| (r.random::<f64>() * levels).floor());
        let mut mask: Vec<bool> = (0..h * w).map(|_| r.random_bool(0.2)).collect();
        let pick = r.random_range(0..h * w);
        mask[pick] = true;
        let map = min_max_normalize(raw);
        let mask_arr = Array2::from_shape_vec((h, w), mask.clone()).unwrap();
        let values: Vec<f64> = map.values.iter().copied().collect();
        let got = concordance_score(&map, mask_arr.view()).unwrap();
        ok &= (got - concordance_oracle(&values, &mask, map.flat)).abs() <= EXACT;
    }
    checks.check("concordance_score", ok);

    let mut ok = true;
    for _ in 0..INSTANCES {
        let (n, dim, k) = (r.random_range(8..20), r.random_range(1..5), 6);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random::<f64>()).collect()).collect();
        let x = Array2::from_shape_fn((n, dim), |(i, j)| points[i][j]);
        ok &= close(id_mle(x.view(), k).unwrap().value, mle_oracle(&points, k), REL);
    }
    checks.check("id_mle", ok);

    let mut v = checks.verdict();
    v.detail = format!("{INSTANCES} instances each, {}", v.detail);
    v
}
