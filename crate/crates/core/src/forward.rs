//! Forward-in-time frequency field `w(t, .)` of type-1 individuals.
//!
//! On the line the field is stored exactly as a piecewise-constant function
//! on the circle of circumference `L`. In the plane it lives on a square
//! grid of cell centres. Both representations apply the same update: the
//! parent type is read at the parent location and every site of the event
//! ball moves a fraction `u` of the way towards that type.

use std::collections::BTreeMap;
use std::ops::Bound::{Excluded, Included, Unbounded};

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, EventStreamConfig};
use crate::geometry::{Dim, Point, Torus};

pub const DEFAULT_MAX_BREAKPOINTS: usize = 1_000_000;
pub const DEFAULT_GRID_CELLS: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialCondition {
    /// `w(0, x) = 1{x_1 <= 0}`.
    HalfSpace,
    /// Disc (interval on the line) of the given frequency, zero elsewhere.
    Patch {
        center: Point,
        radius: f64,
        frequency: f64,
    },
}

impl InitialCondition {
    pub fn value_at(&self, p: &Point, torus: &Torus) -> f64 {
        match self {
            InitialCondition::HalfSpace => {
                if p.first() <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            InitialCondition::Patch {
                center,
                radius,
                frequency,
            } => {
                if torus.distance_unchecked(p, center) <= *radius {
                    *frequency
                } else {
                    0.0
                }
            }
        }
    }
}

type Key = OrderedFloat<f64>;

/// Exact piecewise-constant field on the circle `(-L/2, L/2]`.
///
/// Each key `k` owns the arc `(k, next key]`. The key `-L/2` is always
/// present so the arcs tile the circle without a wrap-around arc.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseField1D {
    torus: Torus,
    arcs: BTreeMap<Key, f64>,
    max_breakpoints: usize,
}

impl PiecewiseField1D {
    pub fn new(torus: Torus, init: &InitialCondition, max_breakpoints: usize) -> Result<Self> {
        if torus.dim() != Dim::One {
            return Err(Error::invalid("piecewise fields live on the line"));
        }
        let half = 0.5 * torus.side();
        let mut field = PiecewiseField1D {
            torus,
            arcs: BTreeMap::new(),
            max_breakpoints,
        };
        match init {
            InitialCondition::HalfSpace => {
                field.arcs.insert(OrderedFloat(-half), 1.0);
                field.arcs.insert(OrderedFloat(0.0), 0.0);
            }
            InitialCondition::Patch {
                center,
                radius,
                frequency,
            } => {
                check_unit(*frequency)?;
                field.arcs.insert(OrderedFloat(-half), 0.0);
                let interval = [center.first() - radius, center.first() + radius];
                field.update_ball(interval, |_| *frequency);
            }
        }
        field.merge_all();
        Ok(field)
    }

    pub fn constant(torus: Torus, value: f64) -> Result<Self> {
        check_unit(value)?;
        let mut arcs = BTreeMap::new();
        arcs.insert(OrderedFloat(-0.5 * torus.side()), value);
        Ok(PiecewiseField1D {
            torus,
            arcs,
            max_breakpoints: DEFAULT_MAX_BREAKPOINTS,
        })
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    fn half(&self) -> f64 {
        0.5 * self.torus.side()
    }

    /// Number of stored arcs, including the fixed one at `-L/2`.
    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// `(breakpoint, value to the right)` pairs around the circle. The seam
    /// at `-L/2` is listed only when the field actually jumps there.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.arcs.iter().map(|(k, v)| (k.0, *v)).collect();
        if out.len() > 1 {
            let last = out[out.len() - 1].1;
            if last == out[0].1 {
                out.remove(0);
            }
        }
        out
    }

    /// Iterates `(start, end, value)` over the arcs `(start, end]`.
    pub fn arcs(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let half = self.half();
        let mut iter = self.arcs.iter().peekable();
        std::iter::from_fn(move || {
            let (k, v) = iter.next()?;
            let end = iter.peek().map_or(half, |(n, _)| n.0);
            Some((k.0, end, *v))
        })
    }

    /// Field value at a point of the circle.
    pub fn value_at(&self, x: f64) -> f64 {
        let x = self.torus.wrap(x);
        self.arcs
            .range((Unbounded, Excluded(OrderedFloat(x))))
            .next_back()
            .map(|(_, v)| *v)
            .unwrap_or_else(|| *self.arcs.values().next_back().unwrap())
    }

    pub fn total_mass(&self) -> f64 {
        self.arcs().map(|(a, b, v)| (b - a) * v).sum()
    }

    /// Integral of the field over the linear interval `[lo, hi]`, `hi - lo <= L`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.linear_pieces([lo, hi])
            .into_iter()
            .map(|(a, b)| {
                self.arcs()
                    .map(|(s, e, v)| (e.min(b) - s.max(a)).max(0.0) * v)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Splits `[lo, hi]` into pieces inside `(-L/2, L/2]`.
    fn linear_pieces(&self, [lo, hi]: [f64; 2]) -> Vec<(f64, f64)> {
        let half = self.half();
        let side = self.torus.side();
        if hi - lo >= side {
            return vec![(-half, half)];
        }
        let lo_w = self.torus.wrap(lo);
        let hi_w = lo_w + (hi - lo);
        if hi_w <= half {
            vec![(lo_w, hi_w)]
        } else {
            vec![(lo_w, half), (-half, hi_w - side)]
        }
    }

    fn split_at(&mut self, x: f64) {
        let key = OrderedFloat(x);
        if x >= self.half() || self.arcs.contains_key(&key) {
            return;
        }
        let v = self.value_at(x);
        self.arcs.insert(key, v);
    }

    fn update_ball(&mut self, interval: [f64; 2], map: impl Fn(f64) -> f64) {
        for (a, b) in self.linear_pieces(interval) {
            self.split_at(b);
            self.split_at(a);
            let range = (Included(OrderedFloat(a)), Excluded(OrderedFloat(b)));
            for (_, v) in self.arcs.range_mut(range) {
                *v = map(*v);
                debug_assert!((0.0..=1.0).contains(v), "field value {v} left [0,1]");
            }
            self.merge_range(a, b);
        }
    }

    /// Drops keys in `[a, b]` whose arc repeats its predecessor's value.
    fn merge_range(&mut self, a: f64, b: f64) {
        let anchor = OrderedFloat(-self.half());
        let start = self
            .arcs
            .range((Unbounded, Excluded(OrderedFloat(a))))
            .next_back()
            .map(|(k, _)| *k)
            .unwrap_or(anchor);
        let mut prev: Option<f64> = None;
        let mut doomed = Vec::new();
        for (k, v) in self.arcs.range((Included(start), Included(OrderedFloat(b)))) {
            if let Some(p) = prev {
                if p == *v && *k != anchor {
                    doomed.push(*k);
                    continue;
                }
            }
            prev = Some(*v);
        }
        for k in doomed {
            self.arcs.remove(&k);
        }
    }

    fn merge_all(&mut self) {
        let half = self.half();
        self.merge_range(-half, half);
    }

    pub fn apply_event(&mut self, ev: &Event) -> Result<()> {
        let parent_value = self.value_at(ev.parent_pos.first());
        let target = if ev.parent_type_draw < parent_value { 1.0 } else { 0.0 };
        let keep = 1.0 - ev.impact;
        let gain = ev.impact * target;
        let c = ev.center.first();
        let r = ev.radius.min(self.half());
        let interval = if ev.radius >= self.half() {
            [-self.half(), self.half()]
        } else {
            [c - r, c + r]
        };
        self.update_ball(interval, |v| keep * v + gain);
        if self.arcs.len() > self.max_breakpoints {
            return Err(Error::Resource(format!(
                "piecewise field holds {} breakpoints, cap is {}",
                self.arcs.len(),
                self.max_breakpoints
            )));
        }
        Ok(())
    }

    /// Number of times `w > threshold` switches on or off around the circle.
    pub fn crossings(&self, threshold: f64) -> usize {
        let above: Vec<bool> = self.arcs.values().map(|v| *v > threshold).collect();
        if above.len() < 2 {
            return 0;
        }
        let mut count = above.windows(2).filter(|w| w[0] != w[1]).count();
        if above[0] != above[above.len() - 1] {
            count += 1;
        }
        count
    }

    /// Length of `{x : eta < w(x) < 1 - eta}`.
    pub fn coexistence(&self, eta: f64) -> f64 {
        self.arcs()
            .filter(|(_, _, v)| *v > eta && *v < 1.0 - eta)
            .map(|(a, b, _)| b - a)
            .sum::<f64>()
            + 0.0
    }
}

fn check_unit(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("frequency must lie in [0,1], got {v}")))
    }
}

/// Square grid of `cells x cells` values on the torus `(-L/2, L/2]^2`.
/// A cell belongs to an event ball when its centre does.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField2D {
    torus: Torus,
    cells: usize,
    h: f64,
    values: Vec<f64>,
}

impl GridField2D {
    pub fn new(torus: Torus, cells: usize, init: &InitialCondition) -> Result<Self> {
        if torus.dim() != Dim::Two {
            return Err(Error::invalid("grid fields live in the plane"));
        }
        if cells == 0 {
            return Err(Error::invalid("grid needs at least one cell per side"));
        }
        if let InitialCondition::Patch { frequency, .. } = init {
            check_unit(*frequency)?;
        }
        let h = torus.side() / cells as f64;
        let mut grid = GridField2D {
            torus,
            cells,
            h,
            values: vec![0.0; cells * cells],
        };
        for j in 0..cells {
            for i in 0..cells {
                let p = grid.cell_center(i, j);
                grid.values[j * cells + i] = init.value_at(&p, &torus);
            }
        }
        Ok(grid)
    }

    pub fn constant(torus: Torus, cells: usize, value: f64) -> Result<Self> {
        check_unit(value)?;
        let mut g = GridField2D::new(torus, cells, &InitialCondition::HalfSpace)?;
        g.values.iter_mut().for_each(|v| *v = value);
        Ok(g)
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells
    }

    pub fn cell_side(&self) -> f64 {
        self.h
    }

    /// Row-major values; row `j` holds second coordinate `-L/2 + (j + 1/2) h`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn coord(&self, k: usize) -> f64 {
        -0.5 * self.torus.side() + (k as f64 + 0.5) * self.h
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::d2(self.coord(i), self.coord(j))
    }

    fn index_of(&self, x: f64) -> usize {
        let x = self.torus.wrap(x);
        let k = ((x + 0.5 * self.torus.side()) / self.h).floor() as isize;
        k.clamp(0, self.cells as isize - 1) as usize
    }

    pub fn value_at(&self, p: &Point) -> f64 {
        let c = p.coords();
        self.values[self.index_of(c[1]) * self.cells + self.index_of(c[0])]
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.h * self.h
    }

    pub fn coexistence(&self, eta: f64) -> f64 {
        self.values.iter().filter(|v| **v > eta && **v < 1.0 - eta).count() as f64 * self.h * self.h
    }

    /// Cell indices along one axis whose centres lie within `r` of `c`,
    /// with their wrapped offsets.
    fn axis_span(&self, c: f64, r: f64) -> Vec<(usize, f64)> {
        let half = 0.5 * self.torus.side();
        let n = self.cells as i64;
        let lo = ((c - r + half) / self.h - 0.5).ceil() as i64;
        let hi = ((c + r + half) / self.h - 0.5).floor() as i64;
        let (lo, hi) = if hi - lo + 1 >= n { (0, n - 1) } else { (lo, hi) };
        (lo..=hi)
            .map(|k| {
                let idx = k.rem_euclid(n) as usize;
                (idx, self.torus.wrap(self.coord(idx) - c))
            })
            .collect()
    }

    pub fn apply_event(&mut self, ev: &Event) -> Result<()> {
        let parent_value = self.value_at(&ev.parent_pos);
        let target = if ev.parent_type_draw < parent_value { 1.0 } else { 0.0 };
        let keep = 1.0 - ev.impact;
        let gain = ev.impact * target;
        let update = |v: &mut f64| {
            *v = keep * *v + gain;
            debug_assert!((0.0..=1.0).contains(v));
        };
        if ev.radius >= self.torus.max_distance() {
            self.values.iter_mut().for_each(update);
            return Ok(());
        }
        let c = ev.center.coords();
        let r2 = ev.radius * ev.radius;
        let xs = self.axis_span(c[0], ev.radius);
        let ys = self.axis_span(c[1], ev.radius);
        for (j, dy) in &ys {
            let row = j * self.cells;
            for (i, dx) in &xs {
                if dx * dx + dy * dy <= r2 {
                    update(&mut self.values[row + i]);
                }
            }
        }
        Ok(())
    }
}

/// Frequency field in either dimension.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Line(PiecewiseField1D),
    Grid(GridField2D),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldOptions {
    pub grid_cells: usize,
    pub max_breakpoints: usize,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions {
            grid_cells: DEFAULT_GRID_CELLS,
            max_breakpoints: DEFAULT_MAX_BREAKPOINTS,
        }
    }
}

impl Field {
    pub fn new(torus: Torus, init: &InitialCondition, opts: &FieldOptions) -> Result<Self> {
        match torus.dim() {
            Dim::One => Ok(Field::Line(PiecewiseField1D::new(torus, init, opts.max_breakpoints)?)),
            Dim::Two => Ok(Field::Grid(GridField2D::new(torus, opts.grid_cells, init)?)),
        }
    }

    pub fn torus(&self) -> &Torus {
        match self {
            Field::Line(f) => f.torus(),
            Field::Grid(g) => g.torus(),
        }
    }

    pub fn value_at(&self, p: &Point) -> f64 {
        match self {
            Field::Line(f) => f.value_at(p.first()),
            Field::Grid(g) => g.value_at(p),
        }
    }

    /// Applies one reproduction event. Events on a torus always meet the field.
    pub fn apply_event(&mut self, ev: &Event) -> Result<()> {
        match self {
            Field::Line(f) => f.apply_event(ev),
            Field::Grid(g) => g.apply_event(ev),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Field::Line(f) => f.total_mass(),
            Field::Grid(g) => g.total_mass(),
        }
    }

    pub fn coexistence(&self, eta: f64) -> f64 {
        match self {
            Field::Line(f) => f.coexistence(eta),
            Field::Grid(g) => g.coexistence(eta),
        }
    }
}

/// Total mass `int w(x) dx` over the torus.
pub fn total_mass(field: &Field) -> f64 {
    field.total_mass()
}

/// Applies one event to a field.
pub fn apply_event(field: &mut Field, ev: &Event) -> Result<()> {
    field.apply_event(ev)
}

/// When snapshots are taken: after given event counts, or at given times.
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    Events(Vec<u64>),
    Times(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub events: u64,
    pub time: f64,
    pub field: Field,
}

/// Runs the forward process on the configured torus for replica `replica`
/// of the stream, emitting a snapshot at every scheduled point.
pub fn simulate_forward(
    cfg: &EventStreamConfig,
    init: &InitialCondition,
    opts: &FieldOptions,
    schedule: &Schedule,
    replica: u64,
) -> Result<Vec<Snapshot>> {
    let mut stream = EventStream::for_replica(cfg, replica)?;
    let torus = *cfg.torus().expect("stream has a torus");
    let mut field = Field::new(torus, init, opts)?;
    let mut out = Vec::new();
    match schedule {
        Schedule::Events(marks) => {
            let mut marks = marks.clone();
            marks.sort_unstable();
            for mark in marks {
                while stream.drawn() < mark {
                    let ev = stream.next_event();
                    field.apply_event(&ev)?;
                }
                out.push(Snapshot {
                    events: stream.drawn(),
                    time: stream.time(),
                    field: field.clone(),
                });
            }
        }
        Schedule::Times(times) => {
            let mut times = times.clone();
            times.sort_by(f64::total_cmp);
            let mut pending: Option<Event> = None;
            for t in times {
                loop {
                    let ev = match pending.take() {
                        Some(ev) => ev,
                        None => stream.next_event(),
                    };
                    if ev.time > t {
                        pending = Some(ev);
                        break;
                    }
                    field.apply_event(&ev)?;
                }
                let applied = stream.drawn() - u64::from(pending.is_some());
                out.push(Snapshot {
                    events: applied,
                    time: t,
                    field: field.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Reads `w(n t, n^{1/index} x)` off a snapshot taken in unrescaled units.
pub fn observe_rescaled(
    field: &Field,
    n: u64,
    scaling_index: f64,
    probes: &[Point],
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("rescaling level n must be at least 1"));
    }
    let factor = (n as f64).powf(1.0 / scaling_index);
    let half = 0.5 * field.torus().side();
    probes
        .iter()
        .map(|p| {
            if p.dim() != field.torus().dim() {
                return Err(Error::invalid("probe dimension differs from field"));
            }
            let q = p.scaled(factor);
            if q.coords().iter().any(|c| !(*c > -half && *c <= half)) {
                return Err(Error::OutOfDomain(format!(
                    "probe {:?} scales to {:?}, outside the simulated window",
                    p.coords(),
                    q.coords()
                )));
            }
            Ok(field.value_at(&q))
        })
        .collect()
}
