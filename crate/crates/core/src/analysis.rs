//! Estimators and the statistical checks tying the forward field to the
//! lineage dual.

use rayon::prelude::*;

use crate::dual::{rescale_dual, run_dual, single_lineage_displacement, sigma_squared, Horizon};
use crate::error::{Error, Result};
use crate::events::{EventStreamConfig, RadiusLaw, Window};
use crate::forward::{simulate_forward, Field, FieldOptions, InitialCondition, Schedule};
use crate::geometry::{sample_uniform_ball_unchecked, Point, Torus};
use crate::rng::{derive_seed, replica_rng};

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicas: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::invalid("an estimate needs at least two replicas"));
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(McEstimate {
            mean,
            std_error: (var / n as f64).sqrt(),
            replicas: n,
        })
    }

    /// Difference divided by the combined standard error; zero when both
    /// estimates are exact and equal.
    pub fn z_score(&self, other: &McEstimate) -> f64 {
        let diff = self.mean - other.mean;
        let se = self.std_error.hypot(other.std_error);
        if se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            }
        } else {
            diff / se
        }
    }

    /// `|mean - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Asymptotic Kolmogorov tail `P(K > lambda)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let s = effective_n.sqrt();
    kolmogorov_tail((s + 0.12 + 0.11 / s) * d)
}

/// Two-sample Kolmogorov-Smirnov statistic and p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("KS test needs two non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok((d, ks_p_value(d, na * nb / (na + nb))))
}

/// One-sample Kolmogorov-Smirnov statistic and p-value against `cdf`.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::invalid("KS test needs a non-empty sample"));
    }
    let mut xs = xs.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok((d, ks_p_value(d, n)))
}

/// Hill estimate of the tail index from the `k_top` largest samples,
/// relative to the next order statistic.
pub fn hill_tail_exponent(samples: &[f64], k_top: usize) -> Result<f64> {
    if k_top == 0 || k_top >= samples.len() {
        return Err(Error::invalid(format!(
            "k_top must lie in 1..{}, got {k_top}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| x.is_nan() || x.is_infinite()) {
        return Err(Error::invalid("Hill estimator needs finite samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    // only the top order statistics enter, so an atom at zero is harmless
    if !(s[k_top] > 0.0) {
        return Err(Error::invalid("Hill estimator needs k_top + 1 positive samples"));
    }
    let base = s[k_top].ln();
    let mean_excess = s[..k_top].iter().map(|x| x.ln() - base).sum::<f64>() / k_top as f64;
    if mean_excess <= 0.0 {
        return Err(Error::Degenerate(
            "top order statistics are all equal, tail index undefined".into(),
        ));
    }
    Ok(1.0 / mean_excess)
}

/// `(1/d) |displacement|^2 / t` of one lineage, averaged over replicas.
pub fn sigma2_empirical(cfg: &EventStreamConfig, t: f64, replicas: u64, seed: u64) -> Result<McEstimate> {
    if !matches!(cfg.radius, RadiusLaw::Fixed(_)) {
        return Err(Error::UnsupportedCase(
            "the jump variance is finite for fixed radii only".into(),
        ));
    }
    if !(t > 0.0) {
        return Err(Error::invalid("time must be positive"));
    }
    let d = cfg.dim().as_f64();
    let xs: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(seed, rep);
            let z = single_lineage_displacement(cfg, t, &mut rng);
            z.coords().iter().map(|c| c * c).sum::<f64>() / (d * t)
        })
        .collect();
    McEstimate::from_samples(&xs)
}

/// Single-lineage displacement lengths at time `t`, one per replica.
pub fn displacement_lengths(cfg: &EventStreamConfig, t: f64, replicas: u64, seed: u64) -> Vec<f64> {
    (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(seed, rep);
            let z = single_lineage_displacement(cfg, t, &mut rng);
            z.coords().iter().map(|c| c * c).sum::<f64>().sqrt()
        })
        .collect()
}

fn in_half_space(p: &Point) -> bool {
    p.first() <= 0.0
}

/// Forward product moment against the lineage dual.
#[derive(Clone, Debug, PartialEq)]
pub struct DualityTestSpec {
    /// Unscaled model; the window is ignored.
    pub cfg: EventStreamConfig,
    /// Probe points at the final time, in rescaled units.
    pub probes: Vec<Point>,
    pub t: f64,
    pub n: u64,
    pub replicas: u64,
    /// Extra probes read at earlier forward times `(time, points)`.
    pub earlier: Vec<(f64, Vec<Point>)>,
    /// Torus side of the forward run; chosen automatically when absent.
    pub window: Option<f64>,
}

impl DualityTestSpec {
    pub fn new(cfg: EventStreamConfig, probes: Vec<Point>, t: f64, replicas: u64) -> Self {
        DualityTestSpec {
            cfg,
            probes,
            t,
            n: 1,
            replicas,
            earlier: Vec::new(),
            window: None,
        }
    }

    fn all_probes(&self) -> impl Iterator<Item = &Point> {
        self.probes
            .iter()
            .chain(self.earlier.iter().flat_map(|(_, p)| p.iter()))
    }

    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.probes.is_empty() {
            problems.push("at least one probe point is required".to_string());
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            problems.push(format!("time must be finite and nonnegative, got {}", self.t));
        }
        if self.replicas < 2 {
            problems.push("at least two replicas per side are required".into());
        }
        let pts: Vec<&Point> = self.all_probes().collect();
        if pts.iter().any(|p| p.dim() != self.cfg.dim()) {
            problems.push("probe dimension differs from the model".into());
        }
        for (i, a) in pts.iter().enumerate() {
            if pts[i + 1..].contains(a) {
                problems.push(format!("probe {:?} repeated", a.coords()));
            }
        }
        for (s, _) in &self.earlier {
            if !(*s >= 0.0 && *s <= self.t) {
                problems.push(format!("earlier probe time {s} outside [0, {}]", self.t));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Smallest torus side for which probes sit at least a motion range
    /// away from the second interface at `+-L/2`: `4 (max|x| + range)`, with
    /// `range = 6 sigma sqrt(t) + 2r` for fixed radii and the 99% quantile of
    /// single-lineage displacement for Pareto radii.
    pub fn required_window(&self, seed: u64) -> Result<f64> {
        let scaled = rescale_dual(&self.cfg, self.n)?;
        let reach = self
            .all_probes()
            .map(|p| p.coords().iter().fold(0f64, |m, c| m.max(c.abs())))
            .fold(0f64, f64::max);
        let range = match scaled.radius {
            RadiusLaw::Fixed(r) => 6.0 * (sigma_squared(&scaled)? * self.t).sqrt() + 2.0 * r,
            RadiusLaw::Pareto { r_min, .. } => {
                let mut d = displacement_lengths(&scaled, self.t, 2000, derive_seed(seed, 0xa11ce));
                d.sort_by(f64::total_cmp);
                d[1979].max(2.0 * r_min)
            }
        };
        Ok(4.0 * (reach + range).max(1e-9))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualityReport {
    pub forward: McEstimate,
    pub dual: McEstimate,
    pub z_score: f64,
    pub window: f64,
}

/// Estimates `E[prod_i w(t, x_i)]` forward on a torus and
/// `P(all lineages end in H)` with the dual on the whole space, for the
/// half-space initial condition `H = {x_1 <= 0}`.
pub fn duality_gap(spec: &DualityTestSpec, seed: u64) -> Result<DualityReport> {
    spec.validate()?;
    let needed = spec.required_window(seed)?;
    let side = match spec.window {
        Some(l) if l < needed => {
            return Err(Error::Config(vec![format!(
                "window side {l} is below the required {needed:.4}"
            )]))
        }
        Some(l) => l,
        None => needed,
    };
    let scaled = rescale_dual(&spec.cfg, spec.n)?;
    let torus = Torus::new(side, scaled.dim())?;
    let fwd_cfg = scaled
        .with_window(Window::Torus(torus))?
        .with_seed(derive_seed(seed, 1));

    let mut times: Vec<f64> = spec.earlier.iter().map(|e| e.0).collect();
    times.push(spec.t);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let schedule = Schedule::Times(times.clone());
    let opts = FieldOptions::default();
    let forward: Vec<f64> = (0..spec.replicas)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let snaps = simulate_forward(&fwd_cfg, &InitialCondition::HalfSpace, &opts, &schedule, rep)?;
            let field_at = |s: f64| -> &Field {
                let k = times.iter().position(|t| *t == s).expect("scheduled time");
                &snaps[k].field
            };
            let mut prod: f64 = spec.probes.iter().map(|p| field_at(spec.t).value_at(p)).product();
            for (s, pts) in &spec.earlier {
                prod *= pts.iter().map(|p| field_at(*s).value_at(p)).product::<f64>();
            }
            Ok(prod)
        })
        .collect::<Result<_>>()?;

    let injections: Vec<(f64, Vec<Point>)> = spec
        .earlier
        .iter()
        .map(|(s, pts)| (spec.t - s, pts.clone()))
        .collect();
    let dual_seed = derive_seed(seed, 2);
    let dual: Vec<f64> = (0..spec.replicas)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let mut rng = replica_rng(dual_seed, rep);
            let run = run_dual(&spec.probes, &scaled, Horizon::Time(spec.t), &injections, &mut rng)?;
            Ok(f64::from(u8::from(run.partition.blocks().iter().all(|b| in_half_space(&b.mark)))))
        })
        .collect::<Result<_>>()?;

    let forward = McEstimate::from_samples(&forward)?;
    let dual = McEstimate::from_samples(&dual)?;
    Ok(DualityReport {
        z_score: forward.z_score(&dual),
        forward,
        dual,
        window: side,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliSpec {
    pub cfg: EventStreamConfig,
    pub t: f64,
    pub probe: Point,
    /// Averaging radius in rescaled units.
    pub eps: f64,
    pub ladder: Vec<u64>,
    pub replicas: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernoulliRow {
    pub n: u64,
    /// `m_n = E[w_hat]`.
    pub mean: McEstimate,
    /// `v_n = Var[w_hat]`, standard error by the delta method.
    pub variance: McEstimate,
    /// `|v_n - m_n (1 - m_n)|`.
    pub gap: McEstimate,
}

impl BernoulliRow {
    /// Gap relative to the Bernoulli variance `m (1 - m)`.
    pub fn relative_gap(&self) -> f64 {
        let b = self.mean.mean * (1.0 - self.mean.mean);
        if b > 0.0 {
            self.gap.mean / b
        } else {
            0.0
        }
    }
}

/// Moments of the local average `w_hat` of `w^n(t, .)` over `B(probe, eps)`.
///
/// Two lineages started at independent uniform points of the ball give
/// `E[w_hat] = P(I_1 in H)` and `E[w_hat^2] = P(I_1, I_2 in H)`, so the gap
/// `m - E[w_hat^2]` is half the probability that exactly one ends in `H`.
pub fn bernoulli_limit_test(spec: &BernoulliSpec, seed: u64) -> Result<Vec<BernoulliRow>> {
    if spec.probe.dim() != spec.cfg.dim() {
        return Err(Error::invalid("probe dimension differs from the model"));
    }
    if !(spec.eps > 0.0) {
        return Err(Error::invalid("averaging radius must be positive"));
    }
    spec.ladder
        .iter()
        .enumerate()
        .map(|(level, &n)| {
            let scaled = rescale_dual(&spec.cfg, n)?;
            let level_seed = derive_seed(seed, level as u64);
            let pairs: Vec<(f64, f64)> = (0..spec.replicas)
                .into_par_iter()
                .map(|rep| -> Result<(f64, f64)> {
                    let mut rng = replica_rng(level_seed, rep);
                    let start = [
                        sample_uniform_ball_unchecked(&spec.probe, spec.eps, &mut rng),
                        sample_uniform_ball_unchecked(&spec.probe, spec.eps, &mut rng),
                    ];
                    let run = run_dual(&start, &scaled, Horizon::Time(spec.t), &[], &mut rng)?;
                    let hit = |label| {
                        let m = run.partition.mark_of(label).expect("label present");
                        f64::from(u8::from(in_half_space(&m)))
                    };
                    Ok((hit(1), hit(2)))
                })
                .collect::<Result<_>>()?;
            let singles: Vec<f64> = pairs.iter().map(|(a, b)| 0.5 * (a + b)).collect();
            let mean = McEstimate::from_samples(&singles)?;
            let m = mean.mean;
            let psi: Vec<f64> = pairs.iter().map(|(a, b)| a * b - m * (a + b)).collect();
            let mut variance = McEstimate::from_samples(&psi)?;
            variance.mean += m * m;
            let gaps: Vec<f64> = pairs.iter().map(|(a, b)| 0.5 * (a - b).abs()).collect();
            let gap = McEstimate::from_samples(&gaps)?;
            Ok(BernoulliRow {
                n,
                mean,
                variance,
                gap,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceStats {
    /// Threshold crossings around the circle; `None` in the plane.
    pub crossings: Option<usize>,
    /// Volume of `{threshold < w < 1 - threshold}`.
    pub coexistence: f64,
}

pub fn interface_statistics(field: &Field, threshold: f64) -> Result<InterfaceStats> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold must lie in (0,1), got {threshold}")));
    }
    Ok(match field {
        Field::Line(f) => InterfaceStats {
            crossings: Some(f.crossings(threshold)),
            coexistence: f.coexistence(threshold),
        },
        Field::Grid(g) => InterfaceStats {
            crossings: None,
            coexistence: g.coexistence(threshold),
        },
    })
}
