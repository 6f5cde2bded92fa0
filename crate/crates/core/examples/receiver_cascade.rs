// The receiver works in two stages: V removes inter-cell interference at
// the base station, then P_j separates the users of the cell.

use ia3::alignment::{design_precoders, interference_matrix};
use ia3::network::{generate_channels, NetworkConfig};
use ia3::numerics::{numerical_rank, relative_norm, Tolerance};
use ia3::receiver::{design_ici_eliminator, design_iui_eliminator, ici_free_channels};

pub fn run_example() -> ia3::Result<()> {
    let cfg = NetworkConfig::new(16, 8, 2, 3)?;
    let tol = Tolerance::default();
    let ch = generate_channels(&cfg, 5)?;
    let sol = design_precoders(&ch)?;

    for bs in 0..3 {
        let ici = interference_matrix(&ch, &sol.per_user, bs)?;
        let v = design_ici_eliminator(&ch, &sol, bs, &tol)?;
        println!(
            "BS {}: V is {}x{}, ||V^H I|| / ||I|| = {:e}",
            bs + 1,
            v.nrows(),
            v.ncols(),
            relative_norm(&(v.adjoint() * &ici), &ici)
        );
        let own = ici_free_channels(&ch, &sol, &v, bs);
        for user in 0..cfg.k {
            let p = design_iui_eliminator(&own, user, &tol)?;
            let other = &own[1 - user];
            let h_eff = p.adjoint() * &own[user];
            println!(
                "  user {}: IUI residual {:e}, effective channel rank {}",
                user + 1,
                relative_norm(&(p.adjoint() * other), other),
                numerical_rank(&h_eff, &tol)?
            );
        }
    }
    Ok(())
}

fn main() -> ia3::Result<()> {
    run_example()
}
