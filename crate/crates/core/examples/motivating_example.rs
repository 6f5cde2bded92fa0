// Three cells, 16 base-station antennas, two users per cell with 8 antennas
// each, three streams per user. Every base station sees the 12 interfering
// streams from the other two cells squeezed into 9 dimensions, which leaves
// room for its own 6 streams.

use ia3::alignment::{check_feasibility, span_condition_pairs, stream_interference_dimension};
use ia3::metrics::{orthogonal_dof, Trial};
use ia3::network::NetworkConfig;
use ia3::numerics::{spans_equal, Tolerance};

pub fn run_example() -> ia3::Result<()> {
    let cfg = NetworkConfig::new(16, 8, 2, 3)?;
    let tol = Tolerance::default();
    let verdict = check_feasibility(&cfg)?;
    println!("{cfg}: method {:?}, d_max {}, eta {}", verdict.method, verdict.d_max, verdict.eta);

    let trial = Trial::run(&cfg, 1, &tol)?;
    let report = &trial.report;
    println!("interference dims per BS: {:?}", report.per_bs_interference_dim);
    println!("worst ICI leakage: {:e}", report.per_bs_ici_leakage.iter().copied().fold(0.0, f64::max));
    println!("worst IUI leakage: {:e}", report.per_user_iui_leakage.iter().copied().fold(0.0, f64::max));

    for (bs, (a, b)) in span_condition_pairs(&trial.channels, &trial.precoders)?.iter().enumerate() {
        println!("BS {}: the two foreign cells span the same subspace: {}", bs + 1, spans_equal(a, b, &tol)?);
    }
    for stream in 0..cfg.d {
        let dim = stream_interference_dimension(&trial.channels, &trial.precoders, 0, stream, &tol)?;
        println!("stream {}: 4 interfering images span {dim} dims at BS 1", stream + 1);
    }

    println!(
        "aligned scheme: {} streams, orthogonal baseline: {}",
        report.eta_achieved,
        orthogonal_dof(&cfg)?
    );
    assert!(report.decodable);
    Ok(())
}

fn main() -> ia3::Result<()> {
    run_example()
}
