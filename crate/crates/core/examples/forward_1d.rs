//! Half-space start on a circle of length 20 with fixed radii, then the
//! same with Pareto radii. Prints interface statistics at a few event counts.

use slfv::analysis::interface_statistics;
use slfv::events::{rescaled_stream, EventStreamConfig, Window};
use slfv::forward::{simulate_forward, Field, FieldOptions, InitialCondition, Schedule};
use slfv::geometry::{Dim, Torus};

fn main() -> slfv::Result<()> {
    let circle = Window::Torus(Torus::new(20.0, Dim::One)?);
    let fixed = EventStreamConfig::case_a(0.8, 0.033, circle, 1)?;
    let pareto = rescaled_stream(
        &EventStreamConfig::case_b(0.8, 1.3, Window::Unbounded(Dim::One), 1)?,
        10_000,
    )?
    .with_window(circle)?;

    let schedule = Schedule::Events(vec![0, 10_000, 100_000, 1_000_000]);
    for (label, cfg) in [("fixed r", fixed), ("pareto r", pareto)] {
        println!("{label}");
        let snaps = simulate_forward(&cfg, &InitialCondition::HalfSpace, &FieldOptions::default(), &schedule, 0)?;
        for s in &snaps {
            let st = interface_statistics(&s.field, 0.5)?;
            let arcs = match &s.field {
                Field::Line(f) => f.arc_count(),
                Field::Grid(_) => 0,
            };
            println!(
                "  events {:>8}  time {:>10.3}  arcs {arcs:>6}  crossings {:>3}  mass {:.4}",
                s.events,
                s.time,
                st.crossings.unwrap_or(0),
                s.field.total_mass()
            );
        }
    }
    Ok(())
}
