// quick diagnostic: Loewner vs Gram error with and without refinement
use lsl_core::forward::*;
use lsl_core::grid::Grid;
use lsl_core::rom::*;
use lsl_core::spectral::ArrayLayout;
use nalgebra::{DMatrix, DVector};

fn main() {
    let grid = Grid::line(1.0_f64, 101).unwrap();
    let layout = ArrayLayout::new(vec![[0.02, 0.0]], vec![[0.02, 0.0], [0.98, 0.0]], 0.0).unwrap();
    let lambdas = [1.0, 2.0, 14.0, 50.0, 128.0];
    let medium = Medium::background(grid.clone());
    let d = synthesize_dataset(&medium, &layout, &lambdas).unwrap();
    let (mass, _s, _b) = loewner_blocks(&d.symmetric_part()).unwrap();
    let op = assemble_operator(&medium);
    let snaps: Vec<DVector<f64>> = lambdas
        .iter()
        .map(|&l| solve_shifted(&op, l, &layout).unwrap().fields.column(0).into_owned())
        .collect();
    let m = lambdas.len();
    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = grid.inner(&snaps[i], &snaps[j]);
        }
    }
    let e = (&mass - &gram).norm() / gram.norm();
    println!("Loewner-vs-Gram rel error: {e:.3e}");
    // entrywise relative
    for i in 0..m {
        for j in 0..m {
            let rel = ((mass[(i,j)] - gram[(i,j)]) / gram[(i,j)]).abs();
            print!("{rel:9.2e} ");
        }
        println!();
    }
    // scaled condition of M
    let d_scale = DVector::from_fn(m, |i, _| 1.0 / mass[(i, i)].sqrt());
    let mhat = DMatrix::from_fn(m, m, |i, j| mass[(i, j)] * d_scale[i] * d_scale[j]);
    let eig = nalgebra::SymmetricEigen::new(mhat);
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("kappa(M_hat) = {:.3e}", ev[m-1] / ev[0]);
}
