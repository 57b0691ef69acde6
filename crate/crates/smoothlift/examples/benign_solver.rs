//! Second-order solver runs. On the sphere the solver stays on the manifold; on the
//! Hadamard lift of the simplex "2=>1" holds everywhere, so its limits map to
//! stationary points downstairs.
//!
//! cargo run --release --example benign_solver

use smoothlift::catalog::{build, sphere_embedding, EntryId};
use smoothlift::experiment::random_quadratic;
use smoothlift::manifold::ManifoldDesc;
use smoothlift::optimize::{downstream_stationarity, find_second_order_point, SolverParams};

fn main() -> smoothlift::Result<()> {
    let params = SolverParams::default();

    let sphere = sphere_embedding(4)?;
    for seed in 0..3 {
        let cost = random_quadratic(4, false, 0.0, seed);
        let y0 = ManifoldDesc::Sphere(3).random_point(seed, &sphere.tol)?;
        let res = find_second_order_point(&sphere, &cost, &y0, &params)?;
        let x = sphere.value(&res.point())?;
        println!(
            "sphere seed {seed}: {} iters, value {:.6}, |grad| {:.1e}, min eig {:.2e}, |x| = {:.12}",
            res.iters,
            res.value,
            res.grad_norm,
            res.min_eig,
            x.norm()
        );
    }

    let entry = build(&EntryId::Hadamard { n: 4 })?;
    for seed in 0..3 {
        let cost = random_quadratic(4, true, 0.0, seed);
        let y0 = entry.sample_point("interior", seed)?;
        let res = find_second_order_point(&entry.lift, &cost, &y0, &params)?;
        let y = res.point();
        let cone = entry.set.cone_at(&entry.lift.value(&y)?, entry.tol())?;
        let gap = downstream_stationarity(&entry.lift, &cost, &y, &cone)?;
        println!(
            "hadamard seed {seed}: {} iters, |grad| {:.1e}, min eig {:.2e}, downstream gap {gap:.2e}",
            res.iters, res.grad_norm, res.min_eig
        );
    }
    Ok(())
}
