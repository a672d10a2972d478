//! Rectangular minimum-cost assignment, checked against brute force.

use mht::{brute_force_assignment, solve_assignment, CostMatrix, Result};

fn main() -> Result<()> {
    let cost = CostMatrix::from_rows(&[
        vec![4.0, 1.0, 3.0, 7.0],
        vec![2.0, 0.0, 5.0, 1.0],
        vec![3.0, 2.0, 2.0, 6.0],
    ])?;
    let fast = solve_assignment(&cost)?;
    let slow = brute_force_assignment(&cost)?;

    println!("pairs: {:?}", fast.pairs);
    println!("total: {} (brute force {})", fast.total_cost, slow.total_cost);
    assert_eq!(fast.pairs, slow.pairs);

    // Ties resolve to the lexicographically smallest column vector.
    let tied = CostMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]])?;
    println!("tied:  {:?}", solve_assignment(&tied)?.pairs);
    Ok(())
}
