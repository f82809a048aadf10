//! Parses a flat config and prints its first events as CSV.

use slfv::config::parse_config;
use slfv::events::{Event, EventStream};

const CONFIG: &str = "\
# fig. 2 parameters
d=1
case=B
alpha=1.3
u=0.8
n=1e4
L=20
seed=1
";

fn main() -> slfv::Result<()> {
    let cfg = parse_config(CONFIG)?;
    let mut stream = EventStream::new(&cfg.stream()?)?;
    println!("{}", Event::csv_header(cfg.dim));
    for _ in 0..10 {
        println!("{}", stream.next_event().csv_record());
    }
    println!("# total event rate {:.1} per unit time", stream.rate());
    Ok(())
}
