//! Costs that expose failing properties.
//!
//! On the quartic disk lift the boundary point `y = (1, 0, 0)` is a second-order
//! critical point of a quadratic cost whose image is not stationary. On the nodal
//! cubic a linear cost has a strict local minimum at a preimage of the node, which
//! is not stationary downstairs.
//!
//! cargo run --release --example witness_costs

use smoothlift::catalog::{build, EntryId};
use smoothlift::checker::{w_set_member, witness_linear_cost, witness_quadratic_cost, WitnessKind};
use smoothlift::numerics::Vector;
use smoothlift::optimize::{downstream_stationarity, grad_g, Cost};

fn main() -> smoothlift::Result<()> {
    let disk = build(&EntryId::DiskQuartic)?;
    let y = Vector::from_vec(vec![1.0, 0.0, 0.0]);
    let cone = disk.set.cone_at(&disk.lift.value(&y)?, disk.tol())?;
    let w = Vector::from_vec(vec![1.0, 0.0]);
    println!("disk quartic at y = {:?}", y.as_slice());
    println!("  w = {:?} satisfies the second-order condition: {}", w.as_slice(), w_set_member(&disk.lift, &y, &w)?);
    let quad = witness_quadratic_cost(&disk.lift, &y, &w, &cone)?;
    if let WitnessKind::Quadratic { alpha, center, .. } = &quad.kind {
        println!("  quadratic witness alpha = {alpha}, center = {center:?}");
    }
    let v = &quad.verification;
    println!(
        "  |grad g| = {:.1e}, min eig hess g = {:.3}, downstream gap = {:.3}",
        v.grad_norm_upstairs, v.hess_min_eig_upstairs, v.downstream_gap
    );

    let nodal = build(&EntryId::NodalCubic)?;
    let y = Vector::from_vec(vec![0.0, 0.0, -1.0]);
    let x = nodal.lift.value(&y)?;
    let cone = nodal.set.cone_at(&x, nodal.tol())?;
    println!("nodal cubic at y = {:?}, x = {:?}", y.as_slice(), x.as_slice());
    let lin = witness_linear_cost(&nodal.lift, &y, &cone, 0)?;
    println!(
        "  linear witness {:?}: |grad g| = {:.1e}, gap = {:.4}, valid = {}",
        lin.kind,
        lin.verification.grad_norm_upstairs,
        lin.verification.downstream_gap,
        lin.is_valid()
    );
    // Upstairs this cost is g(t) = -(t - 1)(t + 1)², with a strict local minimum at this preimage.
    let cost = Cost::linear(Vector::from_vec(vec![-1.0, -1.0]));
    println!(
        "  f = -x1 - x2: |grad g| = {:.1e}, gap = {:.4}",
        grad_g(&nodal.lift, &y, &cost)?.norm(),
        downstream_stationarity(&nodal.lift, &cost, &y, &cone)?
    );
    Ok(())
}
