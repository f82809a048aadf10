//! A circular patch at frequency 0.8 on an 8x8 torus under Pareto radii.
//! Writes one PGM per snapshot to `out/forward_2d_patch/`.

use std::path::Path;

use slfv::events::{rescaled_stream, EventStreamConfig, Window};
use slfv::forward::{simulate_forward, FieldOptions, InitialCondition, Schedule};
use slfv::geometry::{Dim, Point, Torus};
use slfv::io::emit_snapshot;

fn main() -> slfv::Result<()> {
    let torus = Torus::new(8.0, Dim::Two)?;
    let unit = EventStreamConfig::case_b(0.8, 1.3, Window::Unbounded(Dim::Two), 3)?;
    let cfg = rescaled_stream(&unit, 1000)?.with_window(Window::Torus(torus))?;
    let init = InitialCondition::Patch {
        center: Point::d2(0.0, 0.0),
        radius: 4.0,
        frequency: 0.8,
    };
    let opts = FieldOptions {
        grid_cells: 256,
        ..FieldOptions::default()
    };
    let dir = Path::new("out/forward_2d_patch");
    let snaps = simulate_forward(&cfg, &init, &opts, &Schedule::Events(vec![0, 100_000, 1_000_000]), 0)?;
    for s in &snaps {
        let header = format!("events={}\ntime={}\n", s.events, s.time);
        emit_snapshot(dir, &format!("patch_{}", s.events), &s.field, &header)?;
        println!(
            "events {:>8}  coexistence(0.1) {:.4}  mass {:.4}",
            s.events,
            s.field.coexistence(0.1),
            s.field.total_mass()
        );
    }
    println!("images in {}", dir.display());
    Ok(())
}
