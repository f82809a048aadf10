//! Forward moment against the lineage dual for one spec per radius law.

use slfv::analysis::{duality_gap, DualityTestSpec};
use slfv::events::{EventStreamConfig, Window};
use slfv::geometry::{Dim, Point};

fn main() -> slfv::Result<()> {
    let w = Window::Unbounded(Dim::One);
    let specs = [
        DualityTestSpec::new(
            EventStreamConfig::case_a(0.8, 0.033, w, 0)?,
            vec![Point::d1(-0.05), Point::d1(0.03)],
            50.0,
            1000,
        ),
        DualityTestSpec::new(
            EventStreamConfig::case_b(0.8, 1.3, w, 0)?,
            vec![Point::d1(-0.3), Point::d1(0.2), Point::d1(0.8)],
            0.5,
            1000,
        ),
    ];
    for spec in &specs {
        let r = duality_gap(spec, 3)?;
        println!(
            "{:?}: forward {:.4} +- {:.4}, dual {:.4} +- {:.4}, z = {:+.2} (torus side {:.2})",
            spec.cfg.case(),
            r.forward.mean,
            r.forward.std_error,
            r.dual.mean,
            r.dual.std_error,
            r.z_score,
            r.window
        );
    }
    Ok(())
}
