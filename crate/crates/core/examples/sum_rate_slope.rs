// At high SNR the sum rate grows like eta * log2(SNR). Fit the slope for
// both canonical configurations and for a d=1 vs d=2 pair.

use ia3::metrics::{fit_slope, sum_rate_curve};
use ia3::network::NetworkConfig;
use ia3::numerics::Tolerance;

pub fn run_example() -> ia3::Result<()> {
    let tol = Tolerance::default();
    let snrs = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0];
    for (cfg, seed) in [(NetworkConfig::new(16, 8, 2, 3)?, 1), (NetworkConfig::new(8, 4, 3, 1)?, 2)] {
        let curve = sum_rate_curve(&cfg, seed, &snrs, &tol)?;
        for (snr, rate) in &curve {
            println!("{cfg} {snr:>4} dB  {rate:8.2} bits");
        }
        let slope = fit_slope(&curve[3..]).unwrap_or(f64::NAN);
        println!("slope over 30-50 dB: {slope:.3} (eta = {})\n", 3 * cfg.k * cfg.d);
    }

    for d in [1, 2] {
        let cfg = NetworkConfig::new(10, 5, 2, d)?;
        let curve = sum_rate_curve(&cfg, 1, &[30.0, 50.0], &tol)?;
        println!("{cfg}: slope {:.3}", fit_slope(&curve).unwrap_or(f64::NAN));
    }
    Ok(())
}

fn main() -> ia3::Result<()> {
    run_example()
}
