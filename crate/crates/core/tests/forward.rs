use slfv::analysis::McEstimate;
use slfv::events::{Event, EventStream, EventStreamConfig, Window};
use slfv::forward::{
    simulate_forward, Field, FieldOptions, GridField2D, InitialCondition, PiecewiseField1D, Schedule,
};
use slfv::geometry::{ball_volume, Dim, Point, Torus};

#[test]
fn line_mass_is_a_martingale() {
    let t = Torus::new(20.0, Dim::One).unwrap();
    for cfg in [
        EventStreamConfig::case_a(0.8, 1.0, Window::Torus(t), 2).unwrap(),
        EventStreamConfig::case_b(0.6, 1.5, Window::Torus(t), 2).unwrap(),
    ] {
        let changes: Vec<f64> = (0..400)
            .map(|rep| {
                let s = simulate_forward(
                    &cfg,
                    &InitialCondition::HalfSpace,
                    &FieldOptions::default(),
                    &Schedule::Events(vec![500]),
                    rep,
                )
                .unwrap();
                s[0].field.total_mass() - 10.0
            })
            .collect();
        let est = McEstimate::from_samples(&changes).unwrap();
        assert!(est.within(0.0, 3.0), "{est:?}");
        assert!(est.std_error > 0.0);
    }
}

#[test]
fn full_impact_keeps_an_indicator() {
    let t = Torus::new(10.0, Dim::One).unwrap();
    let cfg = EventStreamConfig::case_b(1.0, 1.3, Window::Torus(t), 6).unwrap();
    let init = InitialCondition::Patch {
        center: Point::d1(0.0),
        radius: 2.0,
        frequency: 1.0,
    };
    let mut f = PiecewiseField1D::new(t, &init, 1_000_000).unwrap();
    for ev in EventStream::new(&cfg).unwrap().take(3000) {
        f.apply_event(&ev).unwrap();
    }
    assert!(f.breakpoints().iter().all(|(_, v)| *v == 0.0 || *v == 1.0));
    assert_eq!(f.coexistence(0.1), 0.0);

    let t2 = Torus::new(8.0, Dim::Two).unwrap();
    let cfg2 = EventStreamConfig::case_a(1.0, 0.7, Window::Torus(t2), 6).unwrap();
    let s = simulate_forward(
        &cfg2,
        &InitialCondition::Patch {
            center: Point::d2(0.0, 0.0),
            radius: 2.0,
            frequency: 1.0,
        },
        &FieldOptions { grid_cells: 64, ..FieldOptions::default() },
        &Schedule::Events(vec![500]),
        0,
    )
    .unwrap();
    match &s[0].field {
        Field::Grid(g) => assert!(g.values().iter().all(|v| *v == 0.0 || *v == 1.0)),
        Field::Line(_) => panic!("expected a grid"),
    }
}

// One type-1 event on a grid at w = 1/2: the gained mass is u/2 times the
// area of the cells inside the ball, which converges to the ball volume.
#[test]
fn grid_refinement_converges_to_the_ball() {
    let t = Torus::new(8.0, Dim::Two).unwrap();
    let ev = Event {
        time: 1.0,
        center: Point::d2(0.3, -0.2),
        radius: 1.1,
        impact: 0.8,
        parent_pos: Point::d2(0.3, -0.2),
        parent_type_draw: 0.1,
    };
    let exact = 0.4 * ball_volume(1.1, Dim::Two).unwrap();
    let err = |cells| {
        let mut g = GridField2D::constant(t, cells, 0.5).unwrap();
        g.apply_event(&ev).unwrap();
        (g.total_mass() - 32.0 - exact).abs()
    };
    let (coarse, fine) = (err(32), err(1024));
    assert!(fine < coarse, "{coarse} {fine}");
    assert!(fine < 2e-3 * exact, "{fine}");
}
