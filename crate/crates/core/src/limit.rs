//! Limiting genealogies: coalescing Brownian motions on the line,
//! independent Brownian motions in the plane, and the coalescing stable
//! system driven by Pareto radii with no lower cut-off.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dual::{apply_proposal, propose, CoalescenceRecord, MarkedPartition};
use crate::error::{Error, Result};
use crate::events::{exponential, truncated_pareto, EventStreamConfig, RadiusLaw, Window};
use crate::geometry::{sample_uniform_ball_unchecked, Dim, Point};
use crate::rng::replica_rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Indices of the starting marks that have merged into this cluster.
    pub members: Vec<usize>,
    pub mark: Point,
}

/// Brownian lineages with clock speed `sigma2` (variance per unit time per
/// coordinate). On the line, clusters are kept sorted by position.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianSystem {
    dim: Dim,
    sigma2: f64,
    time: f64,
    clusters: Vec<Cluster>,
}

impl BrownianSystem {
    /// Marks that start at the same point on the line are merged at once.
    pub fn new(marks: &[Point], sigma2: f64) -> Result<Self> {
        let first = marks
            .first()
            .ok_or_else(|| Error::invalid("a Brownian system needs at least one mark"))?;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid(format!("clock speed must be positive, got {sigma2}")));
        }
        let dim = first.dim();
        if marks.iter().any(|m| m.dim() != dim) {
            return Err(Error::invalid("all marks must share one dimension"));
        }
        let mut clusters: Vec<Cluster> = marks
            .iter()
            .enumerate()
            .map(|(i, m)| Cluster {
                members: vec![i],
                mark: *m,
            })
            .collect();
        if dim == Dim::One {
            clusters.sort_by(|a, b| a.mark.first().total_cmp(&b.mark.first()));
            let mut merged: Vec<Cluster> = Vec::with_capacity(clusters.len());
            for c in clusters {
                match merged.last_mut() {
                    Some(last) if last.mark == c.mark => last.members.extend(c.members),
                    _ => merged.push(c),
                }
            }
            clusters = merged;
        }
        Ok(BrownianSystem {
            dim,
            sigma2,
            time: 0.0,
            clusters,
        })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Current mark of starting lineage `i`.
    pub fn mark_of(&self, i: usize) -> Option<Point> {
        self.clusters
            .iter()
            .find(|c| c.members.contains(&i))
            .map(|c| c.mark)
    }

    pub fn coalesced(&self, i: usize, j: usize) -> bool {
        self.clusters
            .iter()
            .any(|c| c.members.contains(&i) && c.members.contains(&j))
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("time step must be positive, got {dt}")))
    }
}

/// One Euler step of coalescing Brownian motions on the line. Adjacent
/// clusters merge when they cross, or with the bridge probability
/// `exp(-2ab / (2 sigma^2 dt))` when they stay ordered at both ends of the
/// step. A merged run of clusters sits at the mean of their end points.
pub fn step_coalescing_bm<R: Rng + ?Sized>(sys: &mut BrownianSystem, dt: f64, rng: &mut R) -> Result<()> {
    check_dt(dt)?;
    if sys.dim != Dim::One {
        return Err(Error::UnsupportedCase(
            "coalescing Brownian motions are simulated on the line only".into(),
        ));
    }
    let sd = (sys.sigma2 * dt).sqrt();
    let old: Vec<f64> = sys.clusters.iter().map(|c| c.mark.first()).collect();
    let new: Vec<f64> = old
        .iter()
        .map(|x| x + sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    let gap_var = 2.0 * sys.sigma2 * dt;
    let joins: Vec<bool> = (1..old.len())
        .map(|i| {
            let a = old[i] - old[i - 1];
            let b = new[i] - new[i - 1];
            b <= 0.0 || rng.random::<f64>() < (-2.0 * a * b / gap_var).exp()
        })
        .collect();
    let mut out: Vec<Cluster> = Vec::with_capacity(old.len());
    let mut run_sum = 0.0;
    let mut run_len = 0usize;
    let clusters = std::mem::take(&mut sys.clusters);
    for (i, c) in clusters.into_iter().enumerate() {
        if i > 0 && joins[i - 1] {
            let last = out.last_mut().expect("run in progress");
            last.members.extend(c.members);
            run_sum += new[i];
            run_len += 1;
            last.mark = Point::d1(run_sum / run_len as f64);
        } else {
            run_sum = new[i];
            run_len = 1;
            out.push(Cluster {
                members: c.members,
                mark: Point::d1(new[i]),
            });
        }
    }
    sys.clusters = out;
    sys.time += dt;
    Ok(())
}

/// Independent Brownian motions in the plane; lineages never meet.
pub fn step_independent_bm<R: Rng + ?Sized>(sys: &mut BrownianSystem, dt: f64, rng: &mut R) -> Result<()> {
    check_dt(dt)?;
    if sys.dim == Dim::One {
        return Err(Error::UnsupportedCase(
            "lineages on the line coalesce; use step_coalescing_bm".into(),
        ));
    }
    let sd = (sys.sigma2 * dt).sqrt();
    for c in &mut sys.clusters {
        let dx = sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        let dy = sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        c.mark = c.mark.offset(&[dx, dy]);
    }
    sys.time += dt;
    Ok(())
}

/// Parameters of the limiting stable system: events at rate
/// `dt x dx x r^{-alpha-d-1} dr` on all radii, impact `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableParams {
    pub dim: Dim,
    pub alpha: f64,
    pub impact: f64,
    /// Free-motion jumps shorter than this are dropped.
    pub cutoff: f64,
}

impl StableParams {
    pub fn new(dim: Dim, alpha: f64, impact: f64, cutoff: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::invalid(format!("alpha must lie in (1,2), got {alpha}")));
        }
        if !(impact > 0.0 && impact <= 1.0) {
            return Err(Error::invalid(format!("impact u must lie in (0,1], got {impact}")));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::invalid(format!("jump cutoff must be positive, got {cutoff}")));
        }
        Ok(StableParams {
            dim,
            alpha,
            impact,
            cutoff,
        })
    }

    /// Event-stream view with radii bounded below by `r_min`; only its
    /// size-biased radius sampler is used.
    fn stream(&self, r_min: f64) -> EventStreamConfig {
        EventStreamConfig {
            impact: self.impact,
            radius: RadiusLaw::Pareto {
                alpha: self.alpha,
                r_min,
            },
            intensity: 1.0,
            window: Window::Unbounded(self.dim),
            seed: 0,
        }
    }

    /// Coverage rate of a point by balls with radius in `[lo, hi)`, no cut-off.
    pub fn ball_rate_between(&self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        let tail = |r: f64| if r.is_finite() { r.powf(-self.alpha) } else { 0.0 };
        self.dim.unit_ball_volume() * (tail(lo) - tail(hi)) / self.alpha
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StableSystem {
    pub partition: MarkedPartition,
    pub params: StableParams,
}

/// Which mechanism produced a stable-system step.
#[derive(Clone, Debug, PartialEq)]
pub enum StableStep {
    /// Event of radius at least `delta`, possibly covering several marks.
    Interaction {
        accepted: bool,
        covered: usize,
        affected: usize,
        radius: f64,
    },
    /// Event of radius below `delta` hitting a single block.
    Free { block: usize, jump: f64, kept: bool },
}

impl StableSystem {
    pub fn new(marks: &[Point], params: StableParams) -> Result<Self> {
        if marks.iter().any(|m| m.dim() != params.dim) {
            return Err(Error::invalid("mark dimension differs from the parameters"));
        }
        Ok(StableSystem {
            partition: MarkedPartition::new(marks)?,
            params,
        })
    }

    fn rates(&self) -> (f64, f64) {
        let m = self.partition.len() as f64;
        let delta = self.partition.delta();
        let p = &self.params;
        let interaction = if delta.is_finite() {
            m * p.ball_rate_between(delta, f64::INFINITY)
        } else {
            0.0
        };
        let free = m * p.impact * p.ball_rate_between(0.5 * p.cutoff, delta);
        (interaction, free)
    }
}

/// Draws the next event of the stable system before `t_max` and applies it.
/// Returns `None` and moves the clock to `t_max` when nothing happens first.
pub fn step_stable_until<R: Rng + ?Sized>(
    sys: &mut StableSystem,
    t_max: f64,
    rng: &mut R,
) -> Option<(StableStep, Option<CoalescenceRecord>)> {
    let (interaction, free) = sys.rates();
    let total = interaction + free;
    let t = sys.partition.clock() + exponential(total, rng);
    if !(t <= t_max) {
        sys.partition.set_clock(t_max);
        return None;
    }
    sys.partition.set_clock(t);
    let p = sys.params;
    if rng.random::<f64>() * total < interaction {
        let delta = sys.partition.delta();
        let cfg = p.stream(delta);
        let (prop, accepted) = propose(&sys.partition, &cfg, delta, f64::INFINITY, rng);
        let (affected, record) = if accepted {
            apply_proposal(&mut sys.partition, &prop, p.impact, rng)
        } else {
            (0, None)
        };
        let step = StableStep::Interaction {
            accepted,
            covered: prop.covered.len(),
            affected,
            radius: prop.radius,
        };
        Some((step, record))
    } else {
        let block = rng.random_range(0..sys.partition.len());
        let delta = sys.partition.delta();
        let r = truncated_pareto(p.alpha, 0.5 * p.cutoff, delta, rng);
        let x = sys.partition.blocks()[block].mark;
        let y = sample_uniform_ball_unchecked(&x, r, rng);
        let z = sample_uniform_ball_unchecked(&y, r, rng);
        let jump = z.distance(&x);
        let kept = jump >= p.cutoff;
        if kept {
            sys.partition.set_mark(block, z);
        }
        Some((StableStep::Free { block, jump, kept }, None))
    }
}

/// One event of the stable system.
pub fn step_stable_system<R: Rng + ?Sized>(
    sys: &mut StableSystem,
    rng: &mut R,
) -> (StableStep, Option<CoalescenceRecord>) {
    step_stable_until(sys, f64::INFINITY, rng).expect("infinite horizon")
}

/// Coalescence times of two lineages started `x` apart, one per replica.
#[derive(Clone, Debug, PartialEq)]
pub struct CoalescenceSample {
    pub times: Vec<f64>,
    /// True where the run reached the cap before the lineages merged.
    pub censored: Vec<bool>,
    pub cap: f64,
}

impl CoalescenceSample {
    pub fn censored_fraction(&self) -> f64 {
        self.censored.iter().filter(|c| **c).count() as f64 / self.censored.len().max(1) as f64
    }

    /// Median of the times, counting censored runs as the cap.
    pub fn median(&self) -> f64 {
        let mut t = self.times.clone();
        t.sort_by(f64::total_cmp);
        let n = t.len();
        if n == 0 {
            return f64::NAN;
        }
        if n % 2 == 1 {
            t[n / 2]
        } else {
            0.5 * (t[n / 2 - 1] + t[n / 2])
        }
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("tau,censored\n");
        for (t, c) in self.times.iter().zip(&self.censored) {
            s.push_str(&format!("{t},{}\n", u8::from(*c)));
        }
        s
    }
}

/// Runs `replicas` independent two-lineage stable systems from `0` and
/// `x e_1` until they merge or `cap` is reached. The jump cut-off of
/// `params` is used as given, so pass one proportional to `x` to keep the
/// system self-similar across separations.
pub fn coalescence_time_two_lineages(
    x: f64,
    params: &StableParams,
    cap: f64,
    replicas: u64,
    seed: u64,
) -> Result<CoalescenceSample> {
    if !(x > 0.0) {
        return Err(Error::invalid(format!("separation must be positive, got {x}")));
    }
    let start = [Point::origin(params.dim), Point::origin(params.dim).offset(&[x, 0.0])];
    let runs: Vec<(f64, bool)> = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(seed, rep);
            let mut sys = StableSystem::new(&start, *params).expect("valid start");
            while sys.partition.len() > 1 {
                if step_stable_until(&mut sys, cap, &mut rng).is_none() {
                    return (cap, true);
                }
            }
            (sys.partition.clock(), false)
        })
        .collect();
    Ok(CoalescenceSample {
        times: runs.iter().map(|r| r.0).collect(),
        censored: runs.iter().map(|r| r.1).collect(),
        cap,
    })
}

/// `C = int_{1/4}^inf r^{-alpha-d-1} Vol(B(0, 1 + r)) dr`, computed with
/// `s = r^{-alpha}` as `(c_d / alpha) int_0^{4^alpha} (1 + s^{1/alpha})^d ds`.
pub fn large_event_constant(dim: Dim, alpha: f64) -> f64 {
    let d = dim.as_usize() as i32;
    let f = |s: f64| (1.0 + s.powf(1.0 / alpha)).powi(d);
    let top = 4f64.powf(alpha);
    let integral = quadrature::integrate(f, 0.0, top, 1e-12 * top).integral;
    dim.unit_ball_volume() * integral / alpha
}

/// Rate of events with radius above `x/4` whose ball meets `B(0, x)`.
pub fn large_event_rate(dim: Dim, alpha: f64, x: f64) -> f64 {
    large_event_constant(dim, alpha) * x.powf(-alpha)
}

/// Observed events of radius above `x/4` touching `B(0, x)` during `[0, t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LargeEventSample {
    pub radii: Vec<f64>,
    pub duration: f64,
}

impl LargeEventSample {
    pub fn rate(&self) -> f64 {
        self.radii.len() as f64 / self.duration
    }

    pub fn rate_std_error(&self) -> f64 {
        (self.radii.len() as f64).sqrt() / self.duration
    }
}

/// Samples the Poisson events of radius `r > x/4` meeting `B(0, x)` over a
/// time window `t`. Centres are proposed in the box `[-(x+r), x+r]^d`; the
/// box measure `(2(x+r))^d r^{-alpha-d-1}` splits by the binomial theorem
/// into Pareto pieces, each drawn by inversion, and points outside
/// `B(0, x+r)` are discarded.
pub fn sample_large_events<R: Rng + ?Sized>(
    dim: Dim,
    alpha: f64,
    x: f64,
    t: f64,
    rng: &mut R,
) -> LargeEventSample {
    let d = dim.as_usize() as i32;
    let lo = 0.25 * x;
    let mut radii = Vec::new();
    for k in 0..=d {
        let binom = if k == 1 && d == 2 { 2.0 } else { 1.0 };
        let p = alpha + (d - k) as f64;
        let mass = 2f64.powi(d) * binom * x.powi(d - k) * lo.powf(-p) / p;
        let mut clock = exponential(mass, rng);
        while clock <= t {
            let r = truncated_pareto(p, lo, f64::INFINITY, rng);
            let reach = x + r;
            let y: Vec<f64> = (0..d).map(|_| reach * (2.0 * rng.random::<f64>() - 1.0)).collect();
            if y.iter().map(|c| c * c).sum::<f64>() <= reach * reach {
                radii.push(r);
            }
            clock += exponential(mass, rng);
        }
    }
    LargeEventSample { radii, duration: t }
}
