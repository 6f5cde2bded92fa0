// When base stations have fewer antennas than a cell's users combined
// (M < KN), precoders come from the null space of the stacked cross-cell
// channel instead of an eigenproblem.

use ia3::alignment::{check_feasibility, design_precoders_nullspace};
use ia3::metrics::{orthogonal_dof, run_trial};
use ia3::network::{generate_channels, stacked_interference_matrix, NetworkConfig};
use ia3::numerics::{relative_norm, vstack, Tolerance};

pub fn run_example() -> ia3::Result<()> {
    let tol = Tolerance::default();

    let cfg = NetworkConfig::new(8, 4, 3, 1)?;
    let report = run_trial(&cfg, 2, &tol)?;
    println!(
        "{cfg}: eta {} vs orthogonal {}, dims {:?}, decodable {}",
        report.eta_achieved,
        orthogonal_dof(&cfg)?,
        report.per_bs_interference_dim,
        report.decodable
    );

    // The stacked precoder really is annihilated by the cross-cell channel.
    let ch = generate_channels(&cfg, 2)?;
    let sol = design_precoders_nullspace(&ch, cfg.d)?;
    let blocks: Vec<_> = sol.unnormalized_blocks();
    let refs: Vec<_> = blocks.iter().collect();
    let stacked = vstack(&refs)?;
    let h_bar = stacked_interference_matrix(&ch);
    println!("||H W|| / ||W|| = {:e}", relative_norm(&(&h_bar * &stacked), &stacked));

    let small = NetworkConfig::new(6, 4, 2, 1)?;
    let v = check_feasibility(&small)?;
    println!("{small}: method {:?}, eta {}", v.method, v.eta);
    Ok(())
}

fn main() -> ia3::Result<()> {
    run_example()
}
