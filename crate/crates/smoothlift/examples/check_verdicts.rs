//! Verdicts for the three lift properties at one point of every regime of every
//! catalog entry, next to the classification.
//!
//! cargo run --release --example check_verdicts

use smoothlift::catalog::{build, EntryId, Property};
use smoothlift::checker::{check_point, CheckSettings, Verdict};

fn mark(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Inconclusive => "?",
    }
}

fn main() -> smoothlift::Result<()> {
    let settings = CheckSettings { directions: 100, w_samples: 100, restarts: 10, fiber_samples: 200, seed: 1 };
    println!("{:<16} {:<20} {:>8} {:>8} {:>8}  mismatches", "entry", "regime", "l=>l", "1=>1", "2=>1");
    for id in EntryId::defaults() {
        let entry = build(&id)?;
        for regime in entry.regimes() {
            let y = entry.sample_point(regime, 1)?;
            let rep = check_point(&entry, &y, &settings)?;
            println!(
                "{:<16} {:<20} {:>8} {:>8} {:>8}  {:?}",
                id.name(),
                regime,
                mark(rep.verdict(Property::LocalToLocal)),
                mark(rep.verdict(Property::OneToOne)),
                mark(rep.verdict(Property::TwoToOne)),
                rep.mismatches,
            );
        }
    }
    Ok(())
}
