//! Shared fixtures for the benchmarks.

use lekry_core::linalg::DenseOperator;
use lekry_core::problems::LinearProblem;

/// Second-difference Laplacian on `n` interior points as a dense operator,
/// together with a smooth start vector.
pub fn laplacian(n: usize) -> (DenseOperator, Vec<f64>) {
    let problem = LinearProblem::laplacian_1d(n, 1.0).expect("valid grid size");
    let op = DenseOperator::new(problem.matrix().clone()).expect("square matrix");
    let b = (0..n)
        .map(|i| (std::f64::consts::PI * (i + 1) as f64 / (n + 1) as f64).sin())
        .collect();
    (op, b)
}
