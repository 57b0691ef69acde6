//! New lifts from old ones: products, compositions with submersions and fiber
//! products over preimages.
//!
//! cargo run --release --example lift_combinators

use std::sync::Arc;

use smoothlift::catalog::{build, EntryId, Property};
use smoothlift::checker::{check_lift, CheckSettings, PropertyReport};
use smoothlift::cones::SetDesc;
use smoothlift::lift::{compose_submersion, fiber_product, product};
use smoothlift::manifold::{FnMap, ManifoldDesc};
use smoothlift::numerics::{Matrix, Vector};

fn summary(name: &str, rep: &PropertyReport) {
    println!(
        "{name:<28} rank L {} of {}  1=>1 {:?}  2=>1 {:?}  witnesses {}",
        rep.rank_l,
        rep.tangent_dim,
        rep.verdict(Property::OneToOne),
        rep.verdict(Property::TwoToOne),
        rep.witnesses.len()
    );
}

fn main() -> smoothlift::Result<()> {
    let settings = CheckSettings { directions: 100, w_samples: 100, restarts: 10, fiber_samples: 100, seed: 0 };
    let had = build(&EntryId::Hadamard { n: 3 })?;

    let prod = product(&[had.lift.clone(), had.lift.clone()])?;
    let set = SetDesc::Product(vec![SetDesc::Simplex(3), SetDesc::Simplex(3)]);
    let y = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.6, 0.8, 0.0]);
    summary(&prod.name, &check_lift(&prod, &set, &y, &settings)?);

    // A rotation of the sphere is a submersion onto it.
    let (c, s) = (0.6, 0.8);
    let q = Matrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
    let comp = compose_submersion(&had.lift, ManifoldDesc::Sphere(2), Arc::new(FnMap::linear(q.clone())))?;
    let z = q.transpose() * Vector::from_vec(vec![0.0, 0.6, 0.8]);
    summary(&comp.name, &check_lift(&comp, &SetDesc::Simplex(3), &z, &settings)?);

    // X = {x : A x in simplex}, lifted through the Hadamard lift of the simplex.
    let a = Matrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let f = Arc::new(FnMap::linear(a.clone()));
    let fib = fiber_product("fiber", f.clone(), &had.lift)?;
    let set = SetDesc::Preimage { f, inner: Box::new(SetDesc::Simplex(3)) };
    let yn = Vector::from_vec(vec![0.6, 0.0, 0.8]);
    let x = a.clone().try_inverse().expect("invertible") * yn.component_mul(&yn);
    let point = Vector::from_iterator(6, x.iter().chain(yn.iter()).copied());
    summary(&fib.name, &check_lift(&fib, &set, &point, &settings)?);
    Ok(())
}
