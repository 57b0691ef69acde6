//! Taylor residuals of `g = f∘φ` along a curve, which validate the closed-form
//! gradient and Hessian of the lifted cost on every catalog entry.
//!
//! cargo run --release --example taylor_check

use smoothlift::catalog::{build, EntryId};
use smoothlift::experiment::random_quadratic;
use smoothlift::optimize::fd_validate;

fn main() -> smoothlift::Result<()> {
    for id in EntryId::defaults() {
        let entry = build(&id)?;
        let regime = entry.regimes()[0];
        let y = entry.sample_point(regime, 3)?;
        let cost = random_quadratic(entry.set.dim(), false, 0.5, 3);
        let rep = fd_validate(&entry.lift, &cost, &y, 3)?;
        println!(
            "{:<16} grad slope {:>5.2}  hess slope {:>5.2}  {}",
            id.name(),
            rep.grad_slope,
            rep.hess_slope,
            if rep.passes() { "ok" } else { "FAILED" }
        );
        for (t, (r1, r2)) in rep.ts.iter().zip(rep.grad_residuals.iter().zip(&rep.hess_residuals)) {
            println!("    t = {t:.0e}   r1 = {r1:.3e}   r2 = {r2:.3e}");
        }
    }
    Ok(())
}
