//! Compares plain GAIN against a transferred model on synthetic correlated
//! Gaussian data across miss rates.
//!
//! `cargo run --release --example transfer_sweep -- [iterations] [trials] [miss rates...]`

use std::time::Instant;

use cluegain::eval::{pretrain_per_trial, render_results_table, run_trials, ExperimentConfig, ModelKind};
use cluegain::rng::Stream;
use cluegain::synthetic::FactorGaussian;
use cluegain::{GainHyperparams, Strategy, TransferPlan};
use rand::SeedableRng;

fn main() -> cluegain::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let iterations: usize = args.first().map_or(Ok(10_000), |s| s.parse()).unwrap();
    let trials: usize = args.get(1).map_or(Ok(10), |s| s.parse()).unwrap();
    let miss_rates: Vec<f64> = if args.len() > 2 {
        args[2..].iter().map(|s| s.parse().unwrap()).collect()
    } else {
        vec![0.2, 0.8, 0.9]
    };

    let env = |k: &str, d: f64| std::env::var(k).ok().map_or(d, |v| v.parse().unwrap());
    let family = FactorGaussian::new(
        20,
        env("FACTORS", 1.0) as usize,
        env("NOISE", 0.1),
        env("FAMILY_SEED", 7.0) as u64,
    );
    let mut rng = Stream::seed_from_u64(env("DATA_SEED", 11.0) as u64);
    let source = family.sample(5000, &mut rng)?;
    let target = family.sample(400, &mut rng)?;
    let hyper = GainHyperparams {
        iterations,
        learning_rate: env("LEARNING_RATE", 1e-3),
        alpha: env("ALPHA", 10.0),
        ..Default::default()
    };

    let master = env("MASTER_SEED", 1.0) as u64;
    let start = Instant::now();
    let pre_hyper = GainHyperparams {
        iterations: env("PRETRAIN_ITERATIONS", iterations as f64) as usize,
        pretrain_miss_rate: env("PRETRAIN_MISS_RATE", hyper.pretrain_miss_rate),
        learning_rate: env("PRETRAIN_LEARNING_RATE", hyper.learning_rate),
        ..hyper
    };
    let bundles = pretrain_per_trial(&source, &pre_hyper, master, trials)?;
    eprintln!("pretrain: {:.1?}", start.elapsed());

    let mut outcomes = Vec::new();
    let mut summary = Vec::new();
    for &miss_rate in &miss_rates {
        for model in [
            ModelKind::Gain,
            ModelKind::ClueGain(TransferPlan::new(Strategy::FreezeDeep)),
        ] {
            let start = Instant::now();
            let config = ExperimentConfig {
                model,
                miss_rate,
                n_trials: trials,
                master_seed: master,
                hyper,
                prediction: None,
            };
            let outcome = run_trials(&target, &config, Some(&bundles))?;
            eprintln!(
                "{} @ {miss_rate}: {:.1?} per-trial {:?}",
                model.label(),
                start.elapsed(),
                outcome
                    .trials
                    .iter()
                    .map(|t| (t.rmse * 1e4).round() / 1e4)
                    .collect::<Vec<_>>()
            );
            outcomes.push(outcome);
        }
        let (g, c) = (&outcomes[outcomes.len() - 2], &outcomes[outcomes.len() - 1]);
        let wins = g.trials.iter().zip(&c.trials).filter(|(a, b)| b.rmse < a.rmse).count();
        summary.push(format!(
            "miss {miss_rate}: gap {:+.1}% wins {wins}/{}",
            100.0 * (g.rmse.mean - c.rmse.mean) / g.rmse.mean,
            g.trials.len()
        ));
    }
    print!("{}", render_results_table(&outcomes));
    for line in summary {
        println!("{line}");
    }
    Ok(())
}
