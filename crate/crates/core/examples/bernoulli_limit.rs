//! Local-average moments at x = 0.5 along a ladder of n. With Pareto radii
//! the gap to m(1-m) shrinks; with fixed radii in the plane the variance
//! shrinks instead, but only logarithmically.

use slfv::analysis::{bernoulli_limit_test, BernoulliSpec};
use slfv::events::{EventStreamConfig, Window};
use slfv::geometry::{Dim, Point};

fn main() -> slfv::Result<()> {
    let stable = BernoulliSpec {
        cfg: EventStreamConfig::case_b(0.8, 1.3, Window::Unbounded(Dim::One), 0)?,
        t: 1.0,
        probe: Point::d1(0.5),
        eps: 0.05,
        ladder: vec![100, 1000, 10_000],
        replicas: 4000,
    };
    for r in bernoulli_limit_test(&stable, 1)? {
        println!(
            "d=1 n={:>6}  m {:.4}  v {:.4}  gap {:.4} +- {:.4}  gap/m(1-m) {:.3}",
            r.n,
            r.mean.mean,
            r.variance.mean,
            r.gap.mean,
            r.gap.std_error,
            r.relative_gap()
        );
    }
    let plane = BernoulliSpec {
        cfg: EventStreamConfig::case_a(0.8, 1.0, Window::Unbounded(Dim::Two), 0)?,
        probe: Point::d2(0.5, 0.0),
        ladder: vec![100, 10_000],
        replicas: 1000,
        ..stable
    };
    for r in bernoulli_limit_test(&plane, 1)? {
        println!("d=2 n={:>6}  m {:.4}  v {:.4} +- {:.4}", r.n, r.mean.mean, r.variance.mean, r.variance.std_error);
    }
    Ok(())
}
