//! Five lineages under fixed-radius events, run until they share one
//! ancestor. Prints every merger.

use slfv::dual::{run_dual, Horizon};
use slfv::events::{EventStreamConfig, Window};
use slfv::geometry::{Dim, Point};
use slfv::rng::replica_rng;

fn main() -> slfv::Result<()> {
    let cfg = EventStreamConfig::case_a(0.8, 1.0, Window::Unbounded(Dim::One), 0)?;
    let marks: Vec<Point> = [-2.0, -0.5, 0.0, 0.7, 3.0].iter().map(|x| Point::d1(*x)).collect();
    let mut rng = replica_rng(11, 0);
    let run = run_dual(&marks, &cfg, Horizon::FullCoalescence { max_time: 1e5 }, &[], &mut rng)?;
    for rec in &run.records {
        println!("t = {:>9.3}  merged {:?} at {:+.3}", rec.time, rec.merged, rec.mark.first());
    }
    match run.completed {
        true => println!("one ancestor left at {:+.3}", run.partition.marks()[0].first()),
        false => println!("{} blocks left at the cap", run.partition.len()),
    }
    Ok(())
}
