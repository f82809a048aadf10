use slfv::analysis::ks_one_sample;
use slfv::events::{rescaled_stream, sample_radius, EventStream, EventStreamConfig, Window};
use slfv::geometry::{Dim, Torus};
use slfv::rng::replica_rng;

#[test]
fn inter_arrival_times_are_exponential() {
    let w = Window::Torus(Torus::new(20.0, Dim::One).unwrap());
    for cfg in [
        EventStreamConfig::case_a(0.8, 0.033, w, 4).unwrap(),
        rescaled_stream(&EventStreamConfig::case_b(0.8, 1.3, Window::Unbounded(Dim::One), 4).unwrap(), 100)
            .unwrap()
            .with_window(w)
            .unwrap(),
    ] {
        let mut s = EventStream::new(&cfg).unwrap();
        let rate = s.rate();
        let mut last = 0.0;
        let gaps: Vec<f64> = (0..20_000)
            .map(|_| {
                let t = s.next_event().time;
                let g = t - last;
                last = t;
                g
            })
            .collect();
        let (_, p) = ks_one_sample(&gaps, |x| 1.0 - (-rate * x).exp()).unwrap();
        assert!(p > 1e-3, "p = {p}");
        assert_eq!(s.drawn(), 20_000);
    }
}

#[test]
fn centres_uniform_on_the_circle() {
    let t = Torus::new(20.0, Dim::One).unwrap();
    let cfg = EventStreamConfig::case_a(0.8, 0.5, Window::Torus(t), 8).unwrap();
    let xs: Vec<f64> = EventStream::new(&cfg).unwrap().take(20_000).map(|e| e.center.first()).collect();
    let (_, p) = ks_one_sample(&xs, |x| (x + 10.0) / 20.0).unwrap();
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn pareto_radii_follow_the_tail() {
    let cfg = EventStreamConfig::case_b(0.8, 1.3, Window::Unbounded(Dim::Two), 0).unwrap();
    let r_min = cfg.min_radius();
    let mut rng = replica_rng(5, 0);
    let rs: Vec<f64> = (0..50_000).map(|_| sample_radius(&cfg, &mut rng)).collect();
    // mu(dr) ~ r^{-alpha-d-1} dr, so P(R > r) = (r/r_min)^{-(alpha+d)}
    let (_, p) = ks_one_sample(&rs, |r| 1.0 - (r / r_min).powf(-3.3)).unwrap();
    assert!(p > 1e-3, "p = {p}");
}
