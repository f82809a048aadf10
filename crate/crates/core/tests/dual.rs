use slfv::analysis::{ks_one_sample, ks_two_sample};
use slfv::dual::{rescale_dual, run_dual, single_lineage_displacement, step_dual, Horizon, MarkedPartition};
use slfv::events::{EventStreamConfig, Window};
use slfv::geometry::{Dim, Point};
use slfv::rng::replica_rng;

// With fixed radius r on the line a lineage jumps by y - x + z - y with both
// steps uniform on [-r, r], so the jump is triangular on [-2r, 2r].
#[test]
fn thinned_jumps_have_the_triangular_law() {
    let r = 0.5;
    let cfg = EventStreamConfig::case_a(0.8, r, Window::Unbounded(Dim::One), 0).unwrap();
    let mut rng = replica_rng(17, 0);
    let mut a = MarkedPartition::new(&[Point::d1(0.0)]).unwrap();
    let mut jumps = Vec::new();
    let mut proposals = 0u64;
    while jumps.len() < 20_000 {
        let before = a.blocks()[0].mark.first();
        let step = step_dual(&mut a, &cfg, &mut rng);
        proposals += 1;
        if step.affected > 0 {
            jumps.push(a.blocks()[0].mark.first() - before);
        }
    }
    let cdf = |z: f64| {
        let s = (z / (2.0 * r)).clamp(-1.0, 1.0);
        if s < 0.0 {
            0.5 * (1.0 + s) * (1.0 + s)
        } else {
            1.0 - 0.5 * (1.0 - s) * (1.0 - s)
        }
    };
    let (_, p) = ks_one_sample(&jumps, cdf).unwrap();
    assert!(p > 1e-3, "p = {p}");
    // a single lineage accepts every proposal and is hit with probability u
    let share = jumps.len() as f64 / proposals as f64;
    assert!((share - 0.8).abs() < 0.01, "{share}");
}

// Lineage 1 of a three-lineage system has the one-lineage law.
#[test]
fn one_lineage_marginal_is_consistent() {
    let cfg = rescale_dual(
        &EventStreamConfig::case_b(0.8, 1.3, Window::Unbounded(Dim::One), 0).unwrap(),
        10,
    )
    .unwrap();
    let marks = [Point::d1(0.0), Point::d1(0.3), Point::d1(-0.2)];
    let mut rng = replica_rng(2, 0);
    let in_system: Vec<f64> = (0..4000)
        .map(|_| {
            let run = run_dual(&marks, &cfg, Horizon::Time(1.0), &[], &mut rng).unwrap();
            run.partition.mark_of(1).unwrap().first()
        })
        .collect();
    let alone: Vec<f64> = (0..4000)
        .map(|_| single_lineage_displacement(&cfg, 1.0, &mut rng).first())
        .collect();
    let (_, p) = ks_two_sample(&in_system, &alone).unwrap();
    assert!(p > 1e-3, "p = {p}");
}

fn pair_spread(marks: &[Point], seed: u64) -> Vec<f64> {
    let cfg = EventStreamConfig::case_a(0.8, 0.6, Window::Unbounded(Dim::One), 0).unwrap();
    let mut rng = replica_rng(seed, 0);
    (0..3000)
        .map(|_| {
            let run = run_dual(marks, &cfg, Horizon::Time(2.0), &[], &mut rng).unwrap();
            let mut xs: Vec<f64> = run.partition.marks().iter().map(|m| m.first()).collect();
            xs.sort_by(f64::total_cmp);
            let n = xs.len();
            let mut s = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    s += xs[j] - xs[i];
                }
            }
            s / xs.len() as f64
        })
        .collect()
}

// Relabelling the starting lineages leaves the unlabelled configuration's
// law unchanged.
#[test]
fn relabelling_is_invisible() {
    let a = [Point::d1(-0.5), Point::d1(0.1), Point::d1(0.4)];
    let b = [Point::d1(0.4), Point::d1(-0.5), Point::d1(0.1)];
    let (_, p) = ks_two_sample(&pair_spread(&a, 3), &pair_spread(&b, 4)).unwrap();
    assert!(p > 1e-3, "p = {p}");
}
