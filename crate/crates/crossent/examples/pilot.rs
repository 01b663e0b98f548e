use crossent::analytics::*;
use crossent::estimators::*;
use crossent::rng::RngStream;
use crossent::seq::Alphabet;
use crossent::sources::{CylinderMeasure, MarkovModel};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

fn main() {
    // Criterion 4 probe: worst truncation bias at n = 12 for random binary pairs.
    for (lo, width) in [(0.3, 0.4), (0.35, 0.3), (0.4, 0.2)] {
        let mut rng = RngStream::new(999, 0);
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let draw = |rng: &mut RngStream| {
                let a = lo + width * rng.uniform();
                let b = lo + width * rng.uniform();
                MarkovModel::new(
                    Alphabet::binary(),
                    1,
                    vec![vec![a, 1.0 - a], vec![b, 1.0 - b]],
                    None,
                )
                .unwrap()
            };
            let q = draw(&mut rng);
            let p = draw(&mut rng);
            let exact = exact_cross_entropy(&q, &p).unwrap();
            let t = truncated_cross_entropy(&q, &p, 12, 1 << 22).unwrap();
            worst = worst.max((t - exact).abs());
        }
        println!(
            "criterion4: worst |trunc12 - exact| over 2000 pairs (rows {lo}..{:.2}): {worst:.5}",
            lo + width
        );
    }

    // Criterion 5 probe: ZM estimator medians for Bern(1/2) and a Markov pair.
    for (name, p, q) in [
        (
            "bern-half",
            MarkovModel::iid(Alphabet::binary(), vec![0.5, 0.5]).unwrap(),
            MarkovModel::iid(Alphabet::binary(), vec![0.5, 0.5]).unwrap(),
        ),
        (
            "markov-pair",
            MarkovModel::new(
                Alphabet::binary(),
                1,
                vec![vec![0.7, 0.3], vec![0.4, 0.6]],
                None,
            )
            .unwrap(),
            MarkovModel::new(
                Alphabet::binary(),
                1,
                vec![vec![0.6, 0.4], vec![0.2, 0.8]],
                None,
            )
            .unwrap(),
        ),
    ] {
        let hc = exact_cross_entropy(&q, &p).unwrap();
        for exp in [12u32, 16, 20] {
            let n = 1usize << exp;
            let mut vals = Vec::new();
            for seed in 0..16u64 {
                let mut rx = RngStream::new(seed, 0);
                let mut ry = RngStream::new(seed, 1);
                let x = p.sample(n, &mut rx);
                let y = q.sample(n, &mut ry);
                vals.push(zm_estimate(&x, &y).unwrap().value);
            }
            let med = median(vals.clone());
            let errs: Vec<f64> = vals.iter().map(|v| (v - hc).abs()).collect();
            println!(
                "criterion5 {name} N=2^{exp}: median {med:.4} exact {hc:.4} rel {:.3} mederr {:.4}",
                (med - hc).abs() / hc,
                median(errs)
            );
        }
    }

    // Criterion 8 probe: LZ78 on Bern(0.3).
    let q = MarkovModel::iid(Alphabet::binary(), vec![0.7, 0.3]).unwrap();
    let h = exact_entropy(&q);
    for exp in [14u32, 20] {
        let n = 1usize << exp;
        let mut vals = Vec::new();
        for seed in 0..16u64 {
            let mut ry = RngStream::new(seed, 1);
            let y = q.sample(n, &mut ry);
            vals.push(lz78_entropy_estimate(&y, Lz78Norm::PhraseLog).unwrap().value);
        }
        let med = median(vals.clone());
        let errs: Vec<f64> = vals.iter().map(|v| (v - h).abs()).collect();
        println!(
            "criterion8 N=2^{exp}: median {med:.4} exact {h:.4} rel {:.3} mederr {:.4}",
            (med - h).abs() / h,
            median(errs)
        );
    }

    // Criterion 7 probe: WZ median at ell = 20 over 64 trials.
    let p = MarkovModel::iid(Alphabet::binary(), vec![0.5, 0.5]).unwrap();
    let q = p.clone();
    let mut vals = Vec::new();
    let mut notfound = 0;
    for seed in 0..64u64 {
        let mut ry = RngStream::new(seed, 1);
        let y = q.sample(20, &mut ry);
        let stream = p.sample_stream(RngStream::new(seed, 0));
        match wz_estimate_stream(stream, &y, 20, 1 << 24).unwrap() {
            WzOutcome::Found { value, .. } => vals.push(value),
            WzOutcome::NotFound { .. } => notfound += 1,
        }
    }
    let med = median(vals);
    println!(
        "criterion7: median lnW/l {med:.4} target {:.4} rel {:.3} notfound {notfound}",
        2.0f64.ln(),
        (med - 2.0f64.ln()).abs() / 2.0f64.ln()
    );
}
