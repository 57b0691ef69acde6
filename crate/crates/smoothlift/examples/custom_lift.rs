//! A lift written from scratch: `φ(y) = (y_1², y_2²)` from the plane onto the
//! nonnegative orthant, with analytic derivatives, and the same map with
//! finite-difference derivatives for comparison.
//!
//! cargo run --release --example custom_lift

use std::sync::Arc;

use smoothlift::catalog::Property;
use smoothlift::checker::{check_lift, CheckSettings};
use smoothlift::cones::SetDesc;
use smoothlift::lift::Lift;
use smoothlift::manifold::{FdMap, FnMap, ManifoldDesc, SmoothMap};
use smoothlift::numerics::{Matrix, Vector};

fn squares() -> FnMap {
    FnMap::new(
        2,
        2,
        |y| y.component_mul(y),
        |y| Matrix::from_diagonal(&(y * 2.0)),
        |_, v| v.component_mul(v) * 2.0,
    )
}

fn report(map: Arc<dyn SmoothMap>, y: &Vector) -> smoothlift::Result<()> {
    let lift = Lift::new("squares", ManifoldDesc::Chart { dim: 2 }, map)?;
    let lq = lift.lq(y)?;
    println!("y = {:?}: x = {:?}, rank L = {}", y.as_slice(), lq.x.as_slice(), lq.rank);
    let rows: Vec<Vec<f64>> = lq.l.row_iter().map(|r| r.iter().copied().collect()).collect();
    println!("    L = {rows:?}");
    // The second-order form is defined for w orthogonal to im L.
    let w = Vector::from_vec(vec![1.0, 0.0]);
    println!("    <w, Q(.)> for w = (1, 0): {:?}", lq.qform(&w)?.as_slice());
    let settings = CheckSettings { directions: 100, w_samples: 100, restarts: 10, fiber_samples: 100, seed: 0 };
    let rep = check_lift(&lift, &SetDesc::Orthant(2), y, &settings)?;
    println!(
        "    1=>1 {:?}, 2=>1 {:?} ({}), finite differences: {}",
        rep.verdict(Property::OneToOne),
        rep.verdict(Property::TwoToOne),
        rep.chain.w_condition.note,
        lift.uses_finite_differences()
    );
    Ok(())
}

fn main() -> smoothlift::Result<()> {
    let y = Vector::from_vec(vec![0.0, 1.5]);
    report(Arc::new(squares()), &y)?;
    report(Arc::new(FdMap::new(2, 2, |y| y.component_mul(y))), &y)?;
    Ok(())
}
