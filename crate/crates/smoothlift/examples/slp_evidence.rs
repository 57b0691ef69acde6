//! Sequences `x_i -> φ(y)` in the set whose lifts stay away from `y`, which is how
//! "local=>local" fails at rank-deficient points of the matrix lifts.
//!
//! cargo run --release --example slp_evidence

use smoothlift::catalog::{build, EntryId};
use smoothlift::checker::{slp_evidence, CheckSettings};
use smoothlift::LiftError;

fn main() -> smoothlift::Result<()> {
    let settings = CheckSettings { fiber_samples: 300, ..CheckSettings::default() };
    let cases = [
        (EntryId::DesingChart { m: 4, n: 4, r: 2, perm: Some(vec![2, 0, 3, 1]) }, "rank_deficient"),
        (EntryId::Svd { m: 4, n: 3, r: 2 }, "repeated"),
        (EntryId::Lr { m: 4, n: 3, r: 2 }, "full_rank"),
    ];
    for (id, regime) in cases {
        let entry = build(&id)?;
        let y = entry.sample_point(regime, 2)?;
        let ev = match slp_evidence(&entry, &y, &settings) {
            Ok(ev) => ev,
            Err(LiftError::NoPathology) => {
                println!("{} at a {regime} point: no pathological sequence, local minima are preserved", id.name());
                continue;
            }
            Err(e) => return Err(e),
        };
        println!("{} at a {regime} point (margin {}):", id.name(), ev.margin);
        for row in &ev.rows {
            let d = row.best_lift_distance.map_or("no lift".to_string(), |d| format!("{d:.4}"));
            println!("    i = {:>2}  |x_i - x| = {:.4}  best lift distance {d}", row.i, row.x_distance);
        }
        println!("    supports failure: {}", ev.supports_failure());
    }
    Ok(())
}
