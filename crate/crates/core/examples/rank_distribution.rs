// Monte Carlo check that every designed precoder has full column rank.
// Pass a trial count as the first argument (default 500).

use ia3::metrics::rank_distribution;
use ia3::network::NetworkConfig;
use ia3::numerics::Tolerance;

pub fn run_example() -> ia3::Result<()> {
    run_with(200)
}

fn run_with(trials: usize) -> ia3::Result<()> {
    let cfg = NetworkConfig::new(16, 8, 2, 3)?;
    let hist = rank_distribution(&cfg, trials, 1, &Tolerance::default())?;
    print!("{}", hist.to_csv());
    println!("failures: {}", hist.failures.len());
    println!("full rank in {:.1}% of trials", 100.0 * hist.full_rank_fraction());
    Ok(())
}

fn main() -> ia3::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(500);
    run_with(trials)
}
