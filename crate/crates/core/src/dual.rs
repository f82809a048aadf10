//! Coalescing ancestral lineages on the whole of `R^d`.
//!
//! Only events whose ball contains at least one mark matter, and those form
//! a Poisson process of finite rate. We propose events at `m` times the
//! per-lineage rate by picking a block, a size-biased radius and a centre
//! in the ball around that block's mark, then keep the proposal with
//! probability `1/J` where `J` counts the marks the ball covers. Accepted
//! proposals are exactly the events that hit the marks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::events::{exponential, sample_size_biased_radius, EventStreamConfig, RadiusLaw, Window};
use crate::geometry::{
    ball_volume_unchecked, lens_volume_unchecked, sample_uniform_ball_unchecked, Dim, Point,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    /// Sorted sample labels, starting at 1.
    pub labels: Vec<usize>,
    pub mark: Point,
}

/// Partition of the sample labels into blocks with one ancestor location each.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedPartition {
    blocks: Vec<Block>,
    labels: usize,
    clock: f64,
    dim: Dim,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoalescenceRecord {
    pub time: f64,
    /// Label sets of the blocks that merged, ordered by smallest label.
    pub merged: Vec<Vec<usize>>,
    pub mark: Point,
}

impl MarkedPartition {
    /// One singleton block per mark; labels follow the order of `marks`.
    pub fn new(marks: &[Point]) -> Result<Self> {
        let first = marks
            .first()
            .ok_or_else(|| Error::invalid("a partition needs at least one mark"))?;
        let mut p = MarkedPartition {
            blocks: Vec::with_capacity(marks.len()),
            labels: 0,
            clock: 0.0,
            dim: first.dim(),
        };
        p.inject(marks)?;
        Ok(p)
    }

    /// Adds fresh singleton blocks with the next unused labels.
    pub fn inject(&mut self, marks: &[Point]) -> Result<()> {
        for m in marks {
            if m.dim() != self.dim {
                return Err(Error::invalid("all marks must share one dimension"));
            }
            if self.blocks.iter().any(|b| b.mark == *m) {
                return Err(Error::invalid(format!("duplicate mark {:?}", m.coords())));
            }
            self.labels += 1;
            self.blocks.push(Block {
                labels: vec![self.labels],
                mark: *m,
            });
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn label_count(&self) -> usize {
        self.labels
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn marks(&self) -> Vec<Point> {
        self.blocks.iter().map(|b| b.mark).collect()
    }

    /// Mark of the block holding `label`.
    pub fn mark_of(&self, label: usize) -> Option<Point> {
        self.blocks
            .iter()
            .find(|b| b.labels.binary_search(&label).is_ok())
            .map(|b| b.mark)
    }

    /// Half the smallest distance between two marks; infinite for one block.
    pub fn delta(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.blocks.iter().enumerate() {
            for b in &self.blocks[i + 1..] {
                best = best.min(a.mark.distance(&b.mark));
            }
        }
        0.5 * best
    }

    pub(crate) fn set_clock(&mut self, t: f64) {
        self.clock = t;
    }

    pub(crate) fn set_mark(&mut self, block: usize, mark: Point) {
        self.blocks[block].mark = mark;
    }

    /// Merges the blocks at the given indices onto `mark`. Returns the
    /// record when at least two blocks were involved.
    pub(crate) fn merge(&mut self, idx: &[usize], mark: Point) -> Option<CoalescenceRecord> {
        match idx {
            [] => None,
            [i] => {
                self.blocks[*i].mark = mark;
                None
            }
            _ => {
                let mut sorted = idx.to_vec();
                sorted.sort_unstable();
                let mut merged = Vec::with_capacity(sorted.len());
                let mut labels = Vec::new();
                for &i in sorted.iter().rev() {
                    let b = self.blocks.remove(i);
                    labels.extend_from_slice(&b.labels);
                    merged.push(b.labels);
                }
                merged.sort_by_key(|l| l[0]);
                labels.sort_unstable();
                let pos = self
                    .blocks
                    .partition_point(|b| b.labels[0] < labels[0]);
                self.blocks.insert(pos, Block { labels, mark });
                Some(CoalescenceRecord {
                    time: self.clock,
                    merged,
                    mark,
                })
            }
        }
    }

    /// Checks that the blocks partition `{1..k}` and are ordered.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.labels + 1];
        let mut last_min = 0;
        for b in &self.blocks {
            if b.labels.is_empty() || b.labels.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Internal("block labels not strictly increasing".into()));
            }
            if b.labels[0] <= last_min {
                return Err(Error::Internal("blocks out of order".into()));
            }
            last_min = b.labels[0];
            for &l in &b.labels {
                if l == 0 || l > self.labels || seen[l] {
                    return Err(Error::Internal(format!("label {l} repeated or out of range")));
                }
                seen[l] = true;
            }
        }
        if seen[1..].iter().all(|s| *s) {
            Ok(())
        } else {
            Err(Error::Internal("labels missing from partition".into()))
        }
    }
}

/// Jump rate of one lineage: `u I int V_r mu(dr)`.
pub fn lineage_jump_rate(cfg: &EventStreamConfig) -> f64 {
    cfg.impact * cfg.ball_rate()
}

/// Density at `z` of the jump intensity `m(dz)` of one lineage.
pub fn jump_displacement_intensity(z: &Point, cfg: &EventStreamConfig) -> f64 {
    let s = z.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
    let dim = cfg.dim();
    let overlap = |r: f64| lens_volume_unchecked(s, r, dim) / ball_volume_unchecked(r, dim);
    match cfg.radius {
        RadiusLaw::Fixed(r) => cfg.impact * cfg.intensity * overlap(r),
        RadiusLaw::Pareto { alpha, r_min } => {
            // with q = r^{-alpha}, mu(dr) = r^{-d} dq / alpha on (0, lo^{-alpha}]
            let lo = r_min.max(0.5 * s);
            let d = dim.as_f64();
            let f = |q: f64| {
                if q <= 0.0 {
                    return 0.0;
                }
                let r = q.powf(-1.0 / alpha);
                overlap(r) * r.powf(-d) / alpha
            };
            let top = lo.powf(-alpha);
            let scale = top * lo.powf(-d);
            let integral = quadrature::integrate(f, 0.0, top, 1e-12 * scale).integral;
            cfg.impact * cfg.intensity * integral
        }
    }
}

/// `sigma^2 = (1/d) int |z|^2 m(dz)` for fixed radii.
///
/// A jump is the difference of two independent uniform points of `B(0,r)`,
/// whose mean square length is `2 d r^2 / (d + 2)`.
pub fn sigma_squared(cfg: &EventStreamConfig) -> Result<f64> {
    match cfg.radius {
        RadiusLaw::Fixed(r) => {
            let d = cfg.dim().as_f64();
            Ok(lineage_jump_rate(cfg) * 2.0 * r * r / (d + 2.0))
        }
        RadiusLaw::Pareto { .. } => Err(Error::UnsupportedCase(
            "jump variance is infinite for Pareto radii".into(),
        )),
    }
}

/// Stream configuration of the rescaled dual: lengths shrink by
/// `n^{-1/index}` and time runs `n` times faster. Marks and times of the
/// returned system are in rescaled units.
pub fn rescale_dual(cfg: &EventStreamConfig, n: u64) -> Result<EventStreamConfig> {
    let unbounded = EventStreamConfig {
        window: Window::Unbounded(cfg.dim()),
        ..*cfg
    };
    crate::events::rescaled_stream(&unbounded, n)
}

/// What one proposal did.
#[derive(Clone, Debug, PartialEq)]
pub struct DualStep {
    pub time: f64,
    pub accepted: bool,
    /// Indices (before the update) of the blocks whose marks the ball covered.
    pub covered: Vec<usize>,
    pub affected: usize,
    pub radius: f64,
    pub record: Option<CoalescenceRecord>,
}

/// Ball hitting one or more marks, before the `u`-thinning.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Proposal {
    pub center: Point,
    pub radius: f64,
    pub covered: Vec<usize>,
}

/// Draws a proposal around a uniformly chosen block with radius in
/// `[lo, hi)` and returns it if the `1/J` acceptance succeeds.
pub(crate) fn propose<R: Rng + ?Sized>(
    a: &MarkedPartition,
    cfg: &EventStreamConfig,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> (Proposal, bool) {
    let i = rng.random_range(0..a.len());
    let r = sample_size_biased_radius(cfg, lo, hi, rng);
    let y = sample_uniform_ball_unchecked(&a.blocks[i].mark, r, rng);
    let mut covered: Vec<usize> = a
        .blocks
        .iter()
        .enumerate()
        .filter(|(j, b)| *j == i || b.mark.distance(&y) <= r)
        .map(|(j, _)| j)
        .collect();
    covered.sort_unstable();
    let accept = covered.len() == 1 || rng.random::<f64>() * covered.len() as f64 <= 1.0;
    (
        Proposal {
            center: y,
            radius: r,
            covered,
        },
        accept,
    )
}

/// Applies an accepted event: each covered block is hit with probability
/// `u`, and the hit blocks jump together to a uniform point of the ball.
pub(crate) fn apply_proposal<R: Rng + ?Sized>(
    a: &mut MarkedPartition,
    prop: &Proposal,
    impact: f64,
    rng: &mut R,
) -> (usize, Option<CoalescenceRecord>) {
    let hit: Vec<usize> = prop
        .covered
        .iter()
        .copied()
        .filter(|_| rng.random::<f64>() < impact)
        .collect();
    if hit.is_empty() {
        return (0, None);
    }
    let z = sample_uniform_ball_unchecked(&prop.center, prop.radius, rng);
    let n = hit.len();
    (n, a.merge(&hit, z))
}

/// Advances to the next proposal if it falls before `t_max`; otherwise sets
/// the clock to `t_max` and returns `None`.
pub fn step_dual_until<R: Rng + ?Sized>(
    a: &mut MarkedPartition,
    cfg: &EventStreamConfig,
    t_max: f64,
    rng: &mut R,
) -> Option<DualStep> {
    let rate = a.len() as f64 * cfg.ball_rate();
    let t = a.clock() + exponential(rate, rng);
    if t > t_max {
        a.set_clock(t_max);
        return None;
    }
    a.set_clock(t);
    let (prop, accepted) = propose(a, cfg, 0.0, f64::INFINITY, rng);
    let (affected, record) = if accepted {
        apply_proposal(a, &prop, cfg.impact, rng)
    } else {
        (0, None)
    };
    Some(DualStep {
        time: t,
        accepted,
        covered: prop.covered,
        affected,
        radius: prop.radius,
        record,
    })
}

/// One proposal of the thinning scheme.
pub fn step_dual<R: Rng + ?Sized>(
    a: &mut MarkedPartition,
    cfg: &EventStreamConfig,
    rng: &mut R,
) -> DualStep {
    step_dual_until(a, cfg, f64::INFINITY, rng).expect("infinite horizon")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Time(f64),
    /// Run until one block remains, giving up at `max_time`.
    FullCoalescence { max_time: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualRun {
    pub partition: MarkedPartition,
    pub records: Vec<CoalescenceRecord>,
    /// False when a full-coalescence run hit its time cap first.
    pub completed: bool,
}

/// Runs the lineage system from `marks`. Each `(time, marks)` entry of
/// `injections` adds fresh lineages at that dual time.
pub fn run_dual<R: Rng + ?Sized>(
    marks: &[Point],
    cfg: &EventStreamConfig,
    horizon: Horizon,
    injections: &[(f64, Vec<Point>)],
    rng: &mut R,
) -> Result<DualRun> {
    if marks.iter().any(|m| m.dim() != cfg.dim()) {
        return Err(Error::invalid("mark dimension differs from the configuration"));
    }
    let mut a = MarkedPartition::new(marks)?;
    let mut stages = injections.to_vec();
    stages.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut records = Vec::new();
    let end = match horizon {
        Horizon::Time(t) => t,
        Horizon::FullCoalescence { max_time } => max_time,
    };
    let mut next_stage = 0;
    loop {
        let stop = stages
            .get(next_stage)
            .map_or(end, |s| s.0.min(end));
        while let Some(step) = step_dual_until(&mut a, cfg, stop, rng) {
            if let Some(rec) = step.record {
                records.push(rec);
            }
            if matches!(horizon, Horizon::FullCoalescence { .. }) && a.len() == 1 && next_stage == stages.len() {
                return Ok(DualRun {
                    partition: a,
                    records,
                    completed: true,
                });
            }
        }
        match stages.get(next_stage) {
            Some((t, new)) if *t <= end => {
                a.inject(new)?;
                next_stage += 1;
            }
            _ => break,
        }
    }
    let completed = match horizon {
        Horizon::Time(_) => true,
        Horizon::FullCoalescence { .. } => a.len() == 1,
    };
    Ok(DualRun {
        partition: a,
        records,
        completed,
    })
}

/// Displacement of one lineage started at the origin after time `t`.
pub fn single_lineage_displacement<R: Rng + ?Sized>(
    cfg: &EventStreamConfig,
    t: f64,
    rng: &mut R,
) -> Point {
    let origin = Point::origin(cfg.dim());
    let mut a = MarkedPartition::new(&[origin]).expect("one mark");
    while step_dual_until(&mut a, cfg, t, rng).is_some() {}
    a.blocks[0].mark
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    fn unbounded(d: Dim) -> Window {
        Window::Unbounded(d)
    }

    #[test]
    fn jump_rate_examples() {
        let a = EventStreamConfig::case_a(0.8, 0.033, unbounded(Dim::One), 0).unwrap();
        assert!((lineage_jump_rate(&a) - 0.0528).abs() < 1e-12);
        let a2 = EventStreamConfig::case_a(0.8, 1.0, unbounded(Dim::Two), 0).unwrap();
        assert!((lineage_jump_rate(&a2) - 0.8 * std::f64::consts::PI).abs() < 1e-12);
        let b = EventStreamConfig::case_b(0.8, 1.3, unbounded(Dim::One), 0).unwrap();
        assert!((lineage_jump_rate(&b) - 1.6 / 1.3).abs() < 1e-12);
    }

    #[test]
    fn displacement_intensity_examples() {
        let a = EventStreamConfig::case_a(0.8, 0.5, unbounded(Dim::One), 0).unwrap();
        assert!((jump_displacement_intensity(&Point::d1(0.0), &a) - 0.8).abs() < 1e-12);
        assert!((jump_displacement_intensity(&Point::d1(0.3), &a) - 0.56).abs() < 1e-12);
        assert_eq!(jump_displacement_intensity(&Point::d1(1.0), &a), 0.0);
        assert_eq!(jump_displacement_intensity(&Point::d1(-1.7), &a), 0.0);
    }

    #[test]
    fn pareto_displacement_intensity_closed_form() {
        let (u, alpha) = (0.8, 1.3);
        let b = EventStreamConfig::case_b(u, alpha, unbounded(Dim::One), 0).unwrap();
        // int_{max(1,s/2)}^inf (1 - s/(2r)) r^{-alpha-2} dr
        let exact = |s: f64| {
            let a = (0.5 * s).max(1.0);
            u * (a.powf(-alpha - 1.0) / (alpha + 1.0) - 0.5 * s * a.powf(-alpha - 2.0) / (alpha + 2.0))
        };
        for s in [0.0, 0.3, 1.0, 2.0, 2.5, 7.0, 40.0] {
            let got = jump_displacement_intensity(&Point::d1(s), &b);
            assert!((got - exact(s)).abs() < 1e-9 * exact(s).max(1e-300), "s={s}: {got} vs {}", exact(s));
        }
    }

    #[test]
    fn intensity_integrates_to_jump_rate() {
        let b = EventStreamConfig::case_b(0.8, 1.3, unbounded(Dim::Two), 0).unwrap();
        // radial integral, substituting s = e^v beyond s = 2
        let f = |s: f64| jump_displacement_intensity(&Point::d2(s, 0.0), &b) * 2.0 * std::f64::consts::PI * s;
        let near = quadrature::integrate(f, 0.0, 2.0, 1e-10).integral;
        let far = quadrature::integrate(|v: f64| f(v.exp()) * v.exp(), 2f64.ln(), 60.0, 1e-10).integral;
        let rate = lineage_jump_rate(&b);
        assert!(((near + far) - rate).abs() < 1e-5 * rate, "{} vs {rate}", near + far);
    }

    #[test]
    fn sigma_squared_examples() {
        let a = EventStreamConfig::case_a(0.8, 0.033, unbounded(Dim::One), 0).unwrap();
        let expected = 4.0 * 0.8 * 0.033f64.powi(3) / 3.0;
        assert!((sigma_squared(&a).unwrap() - expected).abs() < 1e-18);
        assert!((sigma_squared(&a).unwrap() - 3.8333e-5).abs() < 1e-8);
        let one = EventStreamConfig::case_a(1.0, 1.0, unbounded(Dim::One), 0).unwrap();
        assert!((sigma_squared(&one).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        let half = EventStreamConfig::case_a(0.5, 1.0, unbounded(Dim::One), 0).unwrap();
        assert!((sigma_squared(&half).unwrap() - 0.5 * sigma_squared(&one).unwrap()).abs() < 1e-14);
        let b = EventStreamConfig::case_b(0.8, 1.3, unbounded(Dim::One), 0).unwrap();
        assert!(matches!(sigma_squared(&b), Err(Error::UnsupportedCase(_))));
    }

    #[test]
    fn sigma_squared_plane_matches_radial_integral() {
        let (u, r) = (0.7, 1.3);
        let a = EventStreamConfig::case_a(u, r, unbounded(Dim::Two), 0).unwrap();
        let vr = std::f64::consts::PI * r * r;
        let f = |s: f64| u * lens_volume_unchecked(s, r, Dim::Two) / vr * s * s * 2.0 * std::f64::consts::PI * s;
        let numeric = 0.5 * quadrature::integrate(f, 0.0, 2.0 * r, 1e-12).integral;
        assert!((numeric - sigma_squared(&a).unwrap()).abs() < 1e-9);
        assert!((numeric - u * std::f64::consts::PI * r.powi(4) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn rescale_dual_identity_and_invariant_sigma() {
        let a = EventStreamConfig::case_a(0.8, 0.033, unbounded(Dim::One), 0).unwrap();
        assert_eq!(rescale_dual(&a, 1).unwrap(), a);
        let s1 = sigma_squared(&a).unwrap();
        let s2 = sigma_squared(&rescale_dual(&a, 10_000).unwrap()).unwrap();
        assert!((s1 - s2).abs() < 1e-12 * s1);
        let a2 = EventStreamConfig::case_a(0.8, 1.0, unbounded(Dim::Two), 0).unwrap();
        let r2 = rescale_dual(&a2, 100).unwrap();
        assert!((lineage_jump_rate(&r2) / lineage_jump_rate(&a2) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn single_block_and_partition_bookkeeping() {
        let cfg = EventStreamConfig::case_a(1.0, 1.0, unbounded(Dim::One), 0).unwrap();
        let mut rng = replica_rng(5, 0);
        let mut a = MarkedPartition::new(&[Point::d1(0.0)]).unwrap();
        for _ in 0..100 {
            let step = step_dual(&mut a, &cfg, &mut rng);
            assert!(step.accepted);
            assert!(step.record.is_none());
        }
        let marks: Vec<Point> = (0..6).map(|i| Point::d1(0.3 * i as f64)).collect();
        let mut a = MarkedPartition::new(&marks).unwrap();
        let mut last = a.len();
        while a.len() > 1 {
            step_dual(&mut a, &cfg, &mut rng);
            a.validate().unwrap();
            assert!(a.len() <= last);
            last = a.len();
        }
        assert_eq!(a.blocks()[0].labels, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn distant_blocks_never_share_an_event() {
        let cfg = EventStreamConfig::case_a(1.0, 0.5, unbounded(Dim::One), 0).unwrap();
        let mut rng = replica_rng(9, 0);
        let mut a = MarkedPartition::new(&[Point::d1(0.0), Point::d1(50.0)]).unwrap();
        for _ in 0..2000 {
            let apart = a.delta() > 0.5;
            let step = step_dual(&mut a, &cfg, &mut rng);
            if apart {
                assert_eq!(step.covered.len(), 1);
                assert_eq!(a.len(), 2);
            }
        }
    }

    #[test]
    fn merge_keeps_order_and_records_labels() {
        let pts: Vec<Point> = (0..4).map(|i| Point::d1(i as f64)).collect();
        let mut a = MarkedPartition::new(&pts).unwrap();
        a.set_clock(2.5);
        let rec = a.merge(&[3, 1], Point::d1(7.0)).unwrap();
        assert_eq!(rec.merged, vec![vec![2], vec![4]]);
        assert_eq!(rec.time, 2.5);
        let labels: Vec<Vec<usize>> = a.blocks().iter().map(|b| b.labels.clone()).collect();
        assert_eq!(labels, vec![vec![1], vec![2, 4], vec![3]]);
        assert_eq!(a.mark_of(4), Some(Point::d1(7.0)));
        a.validate().unwrap();
        assert!(MarkedPartition::new(&[Point::d1(1.0), Point::d1(1.0)]).is_err());
    }

    #[test]
    fn run_dual_horizon_and_injection() {
        let cfg = EventStreamConfig::case_a(0.8, 0.5, unbounded(Dim::One), 0).unwrap();
        let mut rng = replica_rng(1, 0);
        let run = run_dual(&[Point::d1(0.0)], &cfg, Horizon::Time(10.0), &[], &mut rng).unwrap();
        assert!(run.records.is_empty());
        assert_eq!(run.partition.clock(), 10.0);
        let run = run_dual(
            &[Point::d1(0.0)],
            &cfg,
            Horizon::Time(10.0),
            &[(4.0, vec![Point::d1(0.1), Point::d1(0.2)])],
            &mut rng,
        )
        .unwrap();
        assert_eq!(run.partition.label_count(), 3);
        run.partition.validate().unwrap();
        let run = run_dual(
            &[Point::d1(0.0), Point::d1(0.4)],
            &cfg,
            Horizon::FullCoalescence { max_time: 1e6 },
            &[],
            &mut rng,
        )
        .unwrap();
        assert!(run.completed);
        assert_eq!(run.partition.len(), 1);
        assert_eq!(run.records.len(), 1);
    }

    #[test]
    fn replay_is_deterministic() {
        let cfg = EventStreamConfig::case_b(0.8, 1.3, unbounded(Dim::Two), 0).unwrap();
        let marks = [Point::d2(0.0, 0.0), Point::d2(1.0, 0.5), Point::d2(-2.0, 0.3)];
        let a = run_dual(&marks, &cfg, Horizon::Time(5.0), &[], &mut replica_rng(3, 7)).unwrap();
        let b = run_dual(&marks, &cfg, Horizon::Time(5.0), &[], &mut replica_rng(3, 7)).unwrap();
        assert_eq!(a, b);
    }
}
