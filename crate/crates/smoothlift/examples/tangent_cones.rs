//! Tangent cones of the downstairs sets, their dual cones and stationarity gaps.
//!
//! cargo run --release --example tangent_cones

use smoothlift::cones::{nodal_param, SetDesc};
use smoothlift::numerics::{mat_of, vec_of, TolerancePolicy, Vector};

fn show(name: &str, set: &SetDesc, x: &Vector, w: &Vector) -> smoothlift::Result<()> {
    let tol = TolerancePolicy::default();
    let cone = set.cone_at(x, &tol)?.simplify(&tol)?;
    println!("{name}: {} cone of dimension {}", cone.kind(), cone.dim());
    let dirs = cone.sample_directions(200, 0);
    let worst = dirs.iter().map(|v| cone.violation(v)).fold(0.0, f64::max);
    println!("    200 sampled directions, worst violation {worst:.1e}");
    let duals = cone.sample_dual(50, 0)?;
    let worst_dual = duals.iter().map(|d| cone.stationarity_gap(d)).fold(f64::INFINITY, f64::min);
    println!("    50 dual samples, smallest gap {worst_dual:.1e}");
    println!("    gap of w = {:?}: {:.4}", w.as_slice(), cone.stationarity_gap(w));
    Ok(())
}

fn main() -> smoothlift::Result<()> {
    show(
        "simplex vertex",
        &SetDesc::Simplex(3),
        &Vector::from_vec(vec![1.0, 0.0, 0.0]),
        &Vector::from_vec(vec![0.0, 1.0, 1.0]),
    )?;
    show(
        "disk boundary",
        &SetDesc::Disk(2),
        &Vector::from_vec(vec![1.0, 0.0]),
        &Vector::from_vec(vec![1.0, 0.0]),
    )?;
    show("nodal cubic node", &SetDesc::NodalCubic, &nodal_param(1.0), &Vector::from_vec(vec![-1.0, -1.0]))?;
    // A rank-one 3x3 matrix in the set of matrices of rank at most two.
    let x = vec_of(&(mat_of(&[1.0, 2.0, 0.0], 3, 1) * mat_of(&[0.0, 1.0, 1.0], 1, 3)));
    show("bounded rank", &SetDesc::BoundedRank { m: 3, n: 3, r: 2 }, &x, &Vector::from_element(9, 1.0))?;
    Ok(())
}
