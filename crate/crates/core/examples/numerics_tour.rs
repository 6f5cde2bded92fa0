// The linear-algebra kernel on its own: rank, null spaces, subspace
// equality and a general complex eigendecomposition.

use ia3::numerics::{
    c64, general_eig, left_null_basis, numerical_rank, relative_norm, right_null_basis, spans_equal,
    ComplexMatrix, Tolerance,
};

pub fn run_example() -> ia3::Result<()> {
    let tol = Tolerance::default();
    let a = ComplexMatrix::from_fn(4, 6, |r, c| c64::new((r + c) as f64, (r * c) as f64 % 3.0));
    let rank = numerical_rank(&a, &tol)?;
    let right = right_null_basis(&a, &tol)?;
    let left = left_null_basis(&a, &tol)?;
    println!("4x6 matrix: rank {rank}, right null {} cols, left null {} cols", right.ncols(), left.ncols());
    println!("||A N|| / ||N|| = {:e}", relative_norm(&(&a * &right), &right));

    let b = ComplexMatrix::from_fn(3, 2, |r, c| c64::new(1.0 + r as f64, c as f64));
    let mix = ComplexMatrix::from_row_slice(2, 2, &[c64::new(2.0, 1.0), c64::new(0.0, 1.0), c64::new(1.0, 0.0), c64::new(-1.0, 0.5)]);
    println!("span(B) == span(B X): {}", spans_equal(&b, &(&b * &mix), &tol)?);

    let rot = ComplexMatrix::from_row_slice(2, 2, &[c64::new(0.0, 0.0), c64::new(-1.0, 0.0), c64::new(1.0, 0.0), c64::new(0.0, 0.0)]);
    let eig = general_eig(&rot)?;
    println!("eigenvalues of a 90 degree rotation: {:?}", eig.values);
    let residual = &rot * &eig.vectors - &eig.vectors * ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.values.clone()));
    println!("||A X - X L|| = {:e}", residual.norm());
    Ok(())
}

fn main() -> ia3::Result<()> {
    run_example()
}
