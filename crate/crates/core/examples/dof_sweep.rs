// For each base-station antenna count M, pick the users-per-cell K and
// user antennas N that maximise aligned DoF and compare with serving M
// streams orthogonally.

use ia3::metrics::{dof_sweep, DOF_SWEEP_CSV_HEADER};

pub fn run_example() -> ia3::Result<()> {
    let rows = dof_sweep(5, 32)?;
    println!("{DOF_SWEEP_CSV_HEADER}");
    for row in &rows {
        let mark = if row.ia_dof < row.orthogonal_dof { "  <- orthogonal wins" } else { "" };
        println!("{}{mark}", row.csv_line());
    }
    let losers: Vec<usize> = rows.iter().filter(|r| r.ia_dof < r.orthogonal_dof).map(|r| r.m).collect();
    println!("alignment loses at M = {losers:?}");
    Ok(())
}

fn main() -> ia3::Result<()> {
    run_example()
}
