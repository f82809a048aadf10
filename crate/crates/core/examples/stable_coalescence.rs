//! Stable-limit lineages: two-lineage coalescence times at separations 1 and
//! 2, and the rate of large events near a ball.

use slfv::geometry::Dim;
use slfv::limit::{coalescence_time_two_lineages, large_event_rate, sample_large_events, StableParams};
use slfv::rng::replica_rng;

fn main() -> slfv::Result<()> {
    let alpha = 1.3;
    let mut medians = Vec::new();
    for x in [1.0f64, 2.0] {
        // cut-off proportional to x keeps the two runs self-similar
        let params = StableParams::new(Dim::One, alpha, 0.8, 1e-2 * x)?;
        let s = coalescence_time_two_lineages(x, &params, 1e3 * x.powf(alpha), 200, 5)?;
        println!("x = {x}: median {:.3}, censored {:.1}%", s.median(), 100.0 * s.censored_fraction());
        medians.push(s.median());
    }
    println!("ratio {:.3}, 2^alpha = {:.3}", medians[1] / medians[0], 2f64.powf(alpha));

    let mut rng = replica_rng(9, 0);
    for x in [1.0, 4.0] {
        let target = large_event_rate(Dim::One, alpha, x);
        let s = sample_large_events(Dim::One, alpha, x, 5000.0 / target, &mut rng);
        println!(
            "large events near B(0,{x}): {:.4} +- {:.4}, exact {target:.4}",
            s.rate(),
            s.rate_std_error()
        );
    }
    Ok(())
}
