//! The space-time Poisson process of reproduction events.
//!
//! Events `(t, x, r)` arrive with intensity `I dt dx mu(dr)`. Case A uses a
//! Dirac radius law, Case B the Pareto-type law `r^{-alpha-d-1} dr` on
//! `[r_min, inf)`. On a torus the whole window is simulated; on the unbounded
//! plane only rate, radius and centre primitives are offered and the lineage
//! dual does its own thinning.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::geometry::{uniform_ball_offset, Dim, Point, Torus};
use crate::rng::{replica_rng, SimRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    /// Fixed radius.
    A,
    /// Heavy-tailed radii.
    B,
}

impl Case {
    pub fn parse(s: &str) -> Option<Case> {
        match s.trim() {
            "A" | "a" => Some(Case::A),
            "B" | "b" => Some(Case::B),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadiusLaw {
    Fixed(f64),
    /// Density `r^{-alpha-d-1}` on `[r_min, inf)`.
    Pareto { alpha: f64, r_min: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window {
    Torus(Torus),
    Unbounded(Dim),
}

impl Window {
    pub fn dim(&self) -> Dim {
        match self {
            Window::Torus(t) => t.dim(),
            Window::Unbounded(d) => *d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventStreamConfig {
    pub impact: f64,
    pub radius: RadiusLaw,
    /// Density of event centres per unit time and unit volume, before the
    /// radius law. One for the unrescaled model.
    pub intensity: f64,
    pub window: Window,
    pub seed: u64,
}

fn check_impact(u: f64) -> Result<()> {
    if u > 0.0 && u <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("impact u must lie in (0,1], got {u}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (1,2), got {alpha}")))
    }
}

impl EventStreamConfig {
    pub fn case_a(u: f64, r: f64, window: Window, seed: u64) -> Result<Self> {
        check_impact(u)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("radius must be positive, got {r}")));
        }
        Ok(EventStreamConfig {
            impact: u,
            radius: RadiusLaw::Fixed(r),
            intensity: 1.0,
            window,
            seed,
        })
    }

    pub fn case_b(u: f64, alpha: f64, window: Window, seed: u64) -> Result<Self> {
        check_impact(u)?;
        check_alpha(alpha)?;
        Ok(EventStreamConfig {
            impact: u,
            radius: RadiusLaw::Pareto { alpha, r_min: 1.0 },
            intensity: 1.0,
            window,
            seed,
        })
    }

    pub fn dim(&self) -> Dim {
        self.window.dim()
    }

    pub fn case(&self) -> Case {
        match self.radius {
            RadiusLaw::Fixed(_) => Case::A,
            RadiusLaw::Pareto { .. } => Case::B,
        }
    }

    /// Stability index of the lineage limit: 2 in Case A, alpha in Case B.
    pub fn scaling_index(&self) -> f64 {
        match self.radius {
            RadiusLaw::Fixed(_) => 2.0,
            RadiusLaw::Pareto { alpha, .. } => alpha,
        }
    }

    /// Smallest radius the law can produce.
    pub fn min_radius(&self) -> f64 {
        match self.radius {
            RadiusLaw::Fixed(r) => r,
            RadiusLaw::Pareto { r_min, .. } => r_min,
        }
    }

    pub fn with_window(mut self, window: Window) -> Result<Self> {
        if window.dim() != self.dim() {
            return Err(Error::invalid("window dimension differs from config"));
        }
        self.window = window;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_impact(mut self, u: f64) -> Result<Self> {
        check_impact(u)?;
        self.impact = u;
        Ok(self)
    }

    pub fn torus(&self) -> Option<&Torus> {
        match &self.window {
            Window::Torus(t) => Some(t),
            Window::Unbounded(_) => None,
        }
    }

    /// Rate, per unit time and unit volume of centres, of events of any radius.
    pub fn radius_mass(&self) -> f64 {
        match self.radius {
            RadiusLaw::Fixed(_) => self.intensity,
            RadiusLaw::Pareto { alpha, r_min } => {
                let p = alpha + self.dim().as_f64();
                self.intensity * r_min.powf(-p) / p
            }
        }
    }

    /// Rate at which a fixed point is covered by an event ball, with radii
    /// restricted to `[lo, hi)`: `I * int_lo^hi V_r mu(dr)`.
    pub fn ball_rate_between(&self, lo: f64, hi: f64) -> f64 {
        let dim = self.dim();
        match self.radius {
            RadiusLaw::Fixed(r) => {
                if r >= lo && r < hi {
                    self.intensity * crate::geometry::ball_volume_unchecked(r, dim)
                } else {
                    0.0
                }
            }
            RadiusLaw::Pareto { alpha, r_min } => {
                let lo = lo.max(r_min);
                if !(hi > lo) {
                    return 0.0;
                }
                let tail = |r: f64| if r.is_finite() { r.powf(-alpha) } else { 0.0 };
                self.intensity * dim.unit_ball_volume() * (tail(lo) - tail(hi)) / alpha
            }
        }
    }

    /// Rate at which a fixed point is covered by any event ball.
    pub fn ball_rate(&self) -> f64 {
        self.ball_rate_between(0.0, f64::INFINITY)
    }
}

/// One reproduction event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub center: Point,
    pub radius: f64,
    pub impact: f64,
    pub parent_pos: Point,
    /// Uniform variate compared with the frequency at `parent_pos`.
    pub parent_type_draw: f64,
}

impl Event {
    pub fn csv_header(dim: Dim) -> &'static str {
        match dim {
            Dim::One => "time,center_x,radius,parent_x,parent_type_draw",
            Dim::Two => "time,center_x,center_y,radius,parent_x,parent_y,parent_type_draw",
        }
    }

    /// One CSV record. Floats use the shortest round-trip representation.
    pub fn csv_record(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{}", self.time);
        for c in self.center.coords() {
            let _ = write!(s, ",{c}");
        }
        let _ = write!(s, ",{}", self.radius);
        for c in self.parent_pos.coords() {
            let _ = write!(s, ",{c}");
        }
        let _ = write!(s, ",{}", self.parent_type_draw);
        s
    }
}

/// Rate of events whose ball meets the window. On a torus every centre lies
/// in the window, so this is `|W| * I * mu_total`.
pub fn total_event_rate(cfg: &EventStreamConfig) -> Result<f64> {
    match &cfg.window {
        Window::Torus(t) => {
            let rate = t.volume() * cfg.radius_mass();
            if rate.is_finite() && rate > 0.0 {
                Ok(rate)
            } else {
                Err(Error::Internal(format!("event rate is not finite: {rate}")))
            }
        }
        Window::Unbounded(_) => Err(Error::invalid(
            "the total event rate on an unbounded domain is infinite",
        )),
    }
}

/// Radius of one event: `r` in Case A, `r_min U^{-1/(alpha+d)}` in Case B.
pub fn sample_radius<R: Rng + ?Sized>(cfg: &EventStreamConfig, rng: &mut R) -> f64 {
    match cfg.radius {
        RadiusLaw::Fixed(r) => r,
        RadiusLaw::Pareto { alpha, r_min } => {
            let p = alpha + cfg.dim().as_f64();
            r_min * open_unit(rng).powf(-1.0 / p)
        }
    }
}

/// Radius drawn from the size-biased law `V_r mu(dr)` restricted to
/// `[lo, hi)`. The Pareto tail of `r^d r^{-alpha-d-1}` is `r^{-alpha}`, so
/// inversion is closed form.
pub fn sample_size_biased_radius<R: Rng + ?Sized>(
    cfg: &EventStreamConfig,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> f64 {
    match cfg.radius {
        RadiusLaw::Fixed(r) => r,
        RadiusLaw::Pareto { alpha, r_min } => {
            truncated_pareto(alpha, lo.max(r_min), hi, rng)
        }
    }
}

/// Draw from the density proportional to `r^{-alpha-1}` on `[lo, hi)`.
pub(crate) fn truncated_pareto<R: Rng + ?Sized>(alpha: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let a = lo.powf(-alpha);
    let b = if hi.is_finite() { hi.powf(-alpha) } else { 0.0 };
    let v = a - (a - b) * rng.random::<f64>();
    v.powf(-1.0 / alpha).clamp(lo, if hi.is_finite() { hi } else { f64::MAX })
}

/// Uniform on (0, 1].
#[inline]
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

#[inline]
pub(crate) fn exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

fn uniform_on_torus<R: Rng + ?Sized>(torus: &Torus, rng: &mut R) -> Point {
    let half = 0.5 * torus.side();
    let mut draw = || torus.wrap(half - torus.side() * rng.random::<f64>());
    match torus.dim() {
        Dim::One => Point::d1(draw()),
        Dim::Two => {
            let x = draw();
            let y = draw();
            Point::d2(x, y)
        }
    }
}

/// Uniform point of the torus ball `{z : dist(z, center) <= r}`.
pub(crate) fn sample_torus_ball<R: Rng + ?Sized>(
    torus: &Torus,
    center: &Point,
    r: f64,
    rng: &mut R,
) -> Point {
    if r >= torus.max_distance() {
        return uniform_on_torus(torus, rng);
    }
    if 2.0 * r <= torus.side() {
        let delta = uniform_ball_offset(torus.dim(), r, rng);
        return torus.normalize(&center.offset(&delta));
    }
    // the ball overlaps itself through the boundary
    loop {
        let z = uniform_on_torus(torus, rng);
        if torus.distance_unchecked(&z, center) <= r {
            return z;
        }
    }
}

/// Next event after `t_now` on a torus window.
pub fn next_event<R: Rng + ?Sized>(
    cfg: &EventStreamConfig,
    t_now: f64,
    rng: &mut R,
) -> Result<Event> {
    if !t_now.is_finite() {
        return Err(Error::invalid("current time must be finite"));
    }
    let torus = cfg
        .torus()
        .ok_or_else(|| Error::invalid("event streams need a torus window"))?;
    let rate = total_event_rate(cfg)?;
    Ok(draw_event(cfg, torus, rate, t_now, rng))
}

#[inline]
fn draw_event<R: Rng + ?Sized>(
    cfg: &EventStreamConfig,
    torus: &Torus,
    rate: f64,
    t_now: f64,
    rng: &mut R,
) -> Event {
    let time = t_now + exponential(rate, rng);
    let center = uniform_on_torus(torus, rng);
    let radius = sample_radius(cfg, rng);
    let parent_pos = sample_torus_ball(torus, &center, radius, rng);
    let parent_type_draw = rng.random::<f64>();
    Event {
        time,
        center,
        radius,
        impact: cfg.impact,
        parent_pos,
        parent_type_draw,
    }
}

/// Speeds time up by `n` and shrinks lengths by `n^{-1/index}` (index 2 in
/// Case A, alpha in Case B). Case B keeps its intensity and only lowers the
/// minimal radius; Case A gains the factor `n^{1+d/2}`.
pub fn rescaled_stream(cfg: &EventStreamConfig, n: u64) -> Result<EventStreamConfig> {
    if n == 0 {
        return Err(Error::invalid("rescaling level n must be at least 1"));
    }
    if n == 1 {
        return Ok(*cfg);
    }
    let nf = n as f64;
    let scale = nf.powf(-1.0 / cfg.scaling_index());
    let d = cfg.dim().as_f64();
    let mut out = *cfg;
    match cfg.radius {
        RadiusLaw::Fixed(r) => {
            out.radius = RadiusLaw::Fixed(r * scale);
            out.intensity = cfg.intensity * nf * scale.powf(-d);
        }
        RadiusLaw::Pareto { alpha, r_min } => {
            out.radius = RadiusLaw::Pareto {
                alpha,
                r_min: r_min * scale,
            };
        }
    }
    if let Window::Torus(t) = cfg.window {
        out.window = Window::Torus(Torus::new(t.side() * scale, t.dim())?);
    }
    Ok(out)
}

/// Seeded sequence of events on a torus.
pub struct EventStream {
    cfg: EventStreamConfig,
    torus: Torus,
    rate: f64,
    rng: SimRng,
    time: f64,
    count: u64,
}

impl EventStream {
    pub fn new(cfg: &EventStreamConfig) -> Result<Self> {
        Self::for_replica(cfg, 0)
    }

    pub fn for_replica(cfg: &EventStreamConfig, replica: u64) -> Result<Self> {
        let torus = *cfg
            .torus()
            .ok_or_else(|| Error::invalid("event streams need a torus window"))?;
        Ok(EventStream {
            cfg: *cfg,
            torus,
            rate: total_event_rate(cfg)?,
            rng: replica_rng(cfg.seed, replica),
            time: 0.0,
            count: 0,
        })
    }

    pub fn config(&self) -> &EventStreamConfig {
        &self.cfg
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn drawn(&self) -> u64 {
        self.count
    }

    pub fn next_event(&mut self) -> Event {
        let ev = draw_event(&self.cfg, &self.torus, self.rate, self.time, &mut self.rng);
        self.time = ev.time;
        self.count += 1;
        ev
    }
}

impl Iterator for EventStream {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        Some(self.next_event())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    fn torus1(side: f64) -> Window {
        Window::Torus(Torus::new(side, Dim::One).unwrap())
    }

    #[test]
    fn total_rate_examples() {
        let a = EventStreamConfig::case_a(0.8, 0.033, torus1(20.0), 1).unwrap();
        assert!((total_event_rate(&a).unwrap() - 20.0).abs() < 1e-12);
        let b = EventStreamConfig::case_b(0.8, 1.3, torus1(20.0), 1).unwrap();
        assert!((total_event_rate(&b).unwrap() - 20.0 / 2.3).abs() < 1e-12);
        let b2 = EventStreamConfig::case_b(
            0.8,
            1.3,
            Window::Torus(Torus::new(8.0, Dim::Two).unwrap()),
            1,
        )
        .unwrap();
        assert!((total_event_rate(&b2).unwrap() - 64.0 / 3.3).abs() < 1e-12);
        let unbounded = a.with_window(Window::Unbounded(Dim::One)).unwrap();
        assert!(total_event_rate(&unbounded).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EventStreamConfig::case_a(0.0, 1.0, torus1(1.0), 0).is_err());
        assert!(EventStreamConfig::case_a(1.2, 1.0, torus1(1.0), 0).is_err());
        assert!(EventStreamConfig::case_a(0.5, -1.0, torus1(1.0), 0).is_err());
        assert!(EventStreamConfig::case_b(0.5, 2.0, torus1(1.0), 0).is_err());
        assert!(EventStreamConfig::case_b(0.5, 1.0, torus1(1.0), 0).is_err());
    }

    #[test]
    fn radius_samples() {
        let a = EventStreamConfig::case_a(0.8, 0.033, torus1(20.0), 1).unwrap();
        let mut rng = replica_rng(5, 0);
        for _ in 0..100 {
            assert_eq!(sample_radius(&a, &mut rng), 0.033);
        }
        let b = EventStreamConfig::case_b(0.8, 1.3, torus1(20.0), 1).unwrap();
        let n = 100_000;
        let mut above = 0;
        let mut sum = 0.0;
        for _ in 0..n {
            let r = sample_radius(&b, &mut rng);
            assert!(r >= 1.0);
            if r > 2.0 {
                above += 1;
            }
            sum += r;
        }
        let p = 2f64.powf(-2.3);
        let frac = above as f64 / n as f64;
        assert!((frac - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
        // Pareto(2.3) mean 2.3/1.3; its variance is finite (2.3 > 2)
        let mean = sum / n as f64;
        let var = 2.3 / (1.3f64.powi(2) * 0.3);
        assert!((mean - 2.3 / 1.3).abs() < 3.0 * (var / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn rescaling() {
        let a = EventStreamConfig::case_a(0.8, 1.0, torus1(20.0), 1).unwrap();
        assert_eq!(rescaled_stream(&a, 1).unwrap(), a);
        let a6 = rescaled_stream(&a, 1_000_000).unwrap();
        assert!((a6.min_radius() - 1e-3).abs() < 1e-15);
        assert!((a6.intensity - 1e9).abs() < 1e-3);
        let b = EventStreamConfig::case_b(0.8, 1.3, torus1(20.0), 1).unwrap();
        let b4 = rescaled_stream(&b, 10_000).unwrap();
        assert!((b4.min_radius() - 10f64.powf(-4.0 / 1.3)).abs() < 1e-15);
        assert!((b4.min_radius() - 8.38e-4).abs() < 1e-6);
        assert_eq!(b4.intensity, 1.0);
        assert!(rescaled_stream(&b, 0).is_err());
        // lineage jump rate is multiplied by n
        let ratio = b4.ball_rate() / b.ball_rate();
        assert!((ratio / 1e4 - 1.0).abs() < 1e-9);
        let a4 = rescaled_stream(&a, 10_000).unwrap();
        assert!((a4.ball_rate() / a.ball_rate() / 1e4 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_replay() {
        let cfg = EventStreamConfig::case_b(0.8, 1.3, torus1(20.0), 42).unwrap();
        let a: Vec<String> = EventStream::new(&cfg).unwrap().take(1000).map(|e| e.csv_record()).collect();
        let b: Vec<String> = EventStream::new(&cfg).unwrap().take(1000).map(|e| e.csv_record()).collect();
        assert_eq!(a, b);
        let c: Vec<String> = EventStream::for_replica(&cfg, 1).unwrap().take(10).map(|e| e.csv_record()).collect();
        assert_ne!(a[..10], c[..]);
    }

    #[test]
    fn parents_lie_in_event_balls() {
        for window in [torus1(20.0), Window::Torus(Torus::new(3.0, Dim::Two).unwrap())] {
            let cfg = EventStreamConfig::case_b(0.8, 1.3, window, 9).unwrap();
            let torus = *cfg.torus().unwrap();
            for ev in EventStream::new(&cfg).unwrap().take(20_000) {
                let d = torus.distance_unchecked(&ev.parent_pos, &ev.center);
                assert!(d <= ev.radius + 1e-9);
                assert!((0.0..1.0).contains(&ev.parent_type_draw));
                for c in ev.center.coords().iter().chain(ev.parent_pos.coords()) {
                    assert!(*c > -0.5 * torus.side() && *c <= 0.5 * torus.side());
                }
            }
        }
    }

    #[test]
    fn size_biased_radius_tail() {
        let cfg = EventStreamConfig::case_b(0.8, 1.3, Window::Unbounded(Dim::One), 1).unwrap();
        let mut rng = replica_rng(11, 0);
        let n = 100_000;
        let above = (0..n)
            .filter(|_| sample_size_biased_radius(&cfg, 0.0, f64::INFINITY, &mut rng) > 3.0)
            .count();
        let p = 3f64.powf(-1.3);
        let frac = above as f64 / n as f64;
        assert!((frac - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
        for _ in 0..1000 {
            let r = truncated_pareto(1.3, 0.5, 2.0, &mut rng);
            assert!((0.5..=2.0).contains(&r));
        }
    }
}
