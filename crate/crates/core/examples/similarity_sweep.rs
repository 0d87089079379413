//! Ranks three synthetic candidates against a correlated Gaussian target over
//! several master seeds: one candidate drawn from the target's distribution,
//! two with independent columns and different marginal shapes.
//!
//! `cargo run --release --example similarity_sweep -- [iterations] [pretrain iterations] [trials] [seeds]`
//! (`ALPHA` overrides the reconstruction weight)

use std::time::Instant;

use cluegain::rng::Stream;
use cluegain::similarity::{measure_similarity, Candidate, SimilarityConfig};
use cluegain::synthetic::{independent_bimodal, independent_exponential, FactorGaussian};
use cluegain::GainHyperparams;
use rand::SeedableRng;

fn main() -> cluegain::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().unwrap()).collect();
    let iterations = args.first().copied().unwrap_or(3000);
    let pretrain_iterations = args.get(1).copied().unwrap_or(10_000);
    let trials = args.get(2).copied().unwrap_or(3);
    let seeds = args.get(3).copied().unwrap_or(10);

    let family = FactorGaussian::new(20, 1, 0.1, 7);
    let mut rng = Stream::seed_from_u64(21);
    let target = family.sample(2000, &mut rng)?;
    let candidates = vec![
        Candidate::new("same_distribution", family.sample(400, &mut rng)?),
        Candidate::new("independent_exponential", independent_exponential(400, 15, &mut rng)?),
        Candidate::new("independent_bimodal", independent_bimodal(400, 25, &mut rng)?),
    ];
    let alpha = std::env::var("ALPHA").map_or(10.0, |v| v.parse().unwrap());
    let hyper = GainHyperparams {
        iterations,
        alpha,
        pretrain_iterations: Some(pretrain_iterations),
        ..Default::default()
    };

    let mut firsts = 0;
    let start = Instant::now();
    for seed in 0..seeds as u64 {
        let config = SimilarityConfig {
            hyper,
            n_trials: trials,
            master_seed: seed,
            ..Default::default()
        };
        let report = measure_similarity(&target, &candidates, &config)?;
        if report.top() == 0 {
            firsts += 1;
        }
        let scores: Vec<String> = report
            .candidates
            .iter()
            .map(|c| format!("{}={:+.4}±{:.4}", c.name, c.score.mean, c.score.std))
            .collect();
        println!(
            "seed {seed}: top {} | {}",
            report.candidates[report.top()].name,
            scores.join(" ")
        );
        for c in &report.candidates {
            let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            println!(
                "    {:<24} gain {:.4} clue {:.4}",
                c.name,
                m(&c.rmse_gain),
                m(&c.rmse_clue)
            );
        }
    }
    println!(
        "same_distribution first in {firsts}/{seeds} seeds ({:.1?})",
        start.elapsed()
    );
    Ok(())
}
