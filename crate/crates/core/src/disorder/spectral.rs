//! Deterministic disorder average as a weighted sum of cosines.
//!
//! For one noise realization both return probabilities depend on the noise only
//! through the point `(x, y) = (d, 2c)`, with `d = j' - (j1 + j2)/2 + delta_e` and
//! `2c = sqrt(3)/2 (j1 - j2)`. In polar form `x = r cos(theta)`, `y = r sin(theta)`:
//!
//! ```text
//! P_zero(t) = 1 - sin^2(theta)             sin^2(r t / 2)
//! P_sup(t)  = 1/2 + sin(theta) cos(theta)  sin^2(r t / 2)
//! ```
//!
//! so only the radius `r = 2 beta` oscillates in time. The average is reduced to
//! a finite set of frequencies `omega_i` carrying the weights `E[w(theta) ; r = omega_i]`,
//! computed once and evaluated at any time by summation.
//!
//! Depending on which widths are non-zero the pushforward of the noise onto the
//! plane is a point, a line, or a planar density:
//!
//! * point: a single node,
//! * line: composite Gauss-Legendre along the noise variable, with panels short
//!   enough to resolve the phase `t_max * r` and graded toward the point of
//!   closest approach to the origin,
//! * plane: composite Gauss-Legendre in `r` and adaptive Gauss-Kronrod in `theta`.
//!   With both couplings and the field noisy, the field is integrated out in
//!   closed form, leaving an `erfc` along the line of constant `j1 - j2`.

use rayon::prelude::*;

use super::{NoiseSpec, QuadratureSpec};
use crate::error::Result;
use crate::qubit::{ExchangeParams, InitialState};
use crate::quadrature::{integrate_adaptive, AdaptiveTolerance, GaussLegendre};
use crate::special::{erf, erfc};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const TAU: f64 = std::f64::consts::TAU;
/// Points per block of the phase recurrence in [`SpectralMeasure::trace`].
const ROTATION_BLOCK: usize = 256;

/// One frequency of the decomposition with its (unnormalized) weights.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    omega: f64,
    mass: f64,
    zero: f64,
    sup: f64,
}

/// Disorder-averaged return probabilities as weighted sums over frequencies.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    nodes: Vec<Node>,
    total_mass: f64,
}

impl SpectralMeasure {
    /// Builds the decomposition resolving phases up to `t_max`.
    ///
    /// `refinement` scales the resolution (1 = nominal, 2 = half-width panels and
    /// tighter angular tolerance).
    pub fn build(
        params: &ExchangeParams<f64>,
        noise: &NoiseSpec<f64>,
        spec: &QuadratureSpec,
        t_max: f64,
        refinement: usize,
    ) -> Result<Self> {
        params.validate()?;
        noise.validate()?;
        spec.validate()?;
        let model = Model::new(params, noise, spec.truncation_width);
        let res = Resolution::new(spec, t_max, refinement.max(1));
        let nodes = match model.support() {
            Support::Point(x, y) => vec![point_node(x, y, 1.0, 1.0)],
            Support::Line(line) => line_nodes(&line, &res),
            Support::Plane(plane) => plane_nodes(&plane, &res),
        };
        let nodes: Vec<Node> = nodes.into_iter().filter(|n| n.mass > 0.0).collect();
        let total_mass = nodes.iter().map(|n| n.mass).sum();
        Ok(Self { nodes, total_mass })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrated probability mass before renormalization.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Averaged return probability at time `t`.
    pub fn probability(&self, initial: InitialState, t: f64) -> f64 {
        let half_t = 0.5 * t;
        let weighted: f64 = match initial {
            InitialState::Zero => self
                .nodes
                .iter()
                .map(|n| {
                    let s = (n.omega * half_t).sin();
                    n.zero * s * s
                })
                .sum(),
            InitialState::Superposition => self
                .nodes
                .iter()
                .map(|n| {
                    let s = (n.omega * half_t).sin();
                    n.sup * s * s
                })
                .sum(),
        };
        let p = match initial {
            InitialState::Zero => 1.0 - weighted / self.total_mass,
            InitialState::Superposition => 0.5 + weighted / self.total_mass,
        };
        p.clamp(0.0, 1.0)
    }

    /// Averaged return probability on each of `times`, evaluated in parallel.
    ///
    /// On a uniform grid the phases advance by rotation, re-anchored with an exact
    /// `sin_cos` at the start of every block of [`ROTATION_BLOCK`] points.
    pub fn trace(&self, initial: InitialState, times: &[f64]) -> Vec<f64> {
        let n = times.len();
        let uniform = n > 2 && {
            let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
            dt > 0.0
                && times
                    .iter()
                    .enumerate()
                    .all(|(k, t)| (t - (times[0] + k as f64 * dt)).abs() <= 1e-9 * dt.max(t.abs()))
        };
        if !uniform {
            return times.par_iter().map(|&t| self.probability(initial, t)).collect();
        }
        let half_dt = 0.5 * (times[n - 1] - times[0]) / (n - 1) as f64;
        let (offset, sign) = match initial {
            InitialState::Zero => (1.0, -1.0),
            InitialState::Superposition => (0.5, 1.0),
        };
        times
            .par_chunks(ROTATION_BLOCK)
            .flat_map_iter(|block| {
                let mut acc = vec![0.0; block.len()];
                for node in &self.nodes {
                    let w = match initial {
                        InitialState::Zero => node.zero,
                        InitialState::Superposition => node.sup,
                    };
                    if w == 0.0 {
                        continue;
                    }
                    let (mut s, mut c) = (node.omega * 0.5 * block[0]).sin_cos();
                    let (ds, dc) = (node.omega * half_dt).sin_cos();
                    for a in acc.iter_mut() {
                        *a += w * s * s;
                        let s_next = s * dc + c * ds;
                        c = c * dc - s * ds;
                        s = s_next;
                    }
                }
                acc.into_iter()
                    .map(move |a| (offset + sign * a / self.total_mass).clamp(0.0, 1.0))
            })
            .collect()
    }

    /// Weighted moment `sum_i mass_i * f(omega_i, w_zero_i, w_sup_i) / total_mass`,
    /// where `w_zero = sin^2(theta)` and `w_sup = sin(theta)cos(theta)` averaged at that frequency.
    pub fn expectation<F: Fn(f64, f64, f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .map(|n| {
                if n.mass == 0.0 {
                    0.0
                } else {
                    n.mass * f(n.omega, n.zero / n.mass, n.sup / n.mass)
                }
            })
            .sum::<f64>()
            / self.total_mass
    }
}

fn point_node(x: f64, y: f64, mass: f64, weight: f64) -> Node {
    let r2 = x * x + y * y;
    let (zero, sup) = if r2 == 0.0 {
        (0.0, 0.0)
    } else {
        (y * y / r2, x * y / r2)
    };
    Node {
        omega: r2.sqrt(),
        mass: mass * weight,
        zero: mass * weight * zero,
        sup: mass * weight * sup,
    }
}

struct Resolution {
    rule: GaussLegendre<f64>,
    /// Largest radial (or line-parameter) extent of a panel from the phase limit.
    phase_step: f64,
    refinement: f64,
    angular_tol: f64,
}

impl Resolution {
    fn new(spec: &QuadratureSpec, t_max: f64, refinement: usize) -> Self {
        let refinement = refinement as f64;
        let phase_step = if t_max > 0.0 {
            spec.panel_phase / t_max
        } else {
            f64::INFINITY
        };
        Self {
            rule: GaussLegendre::new(spec.nodes_per_panel),
            phase_step: phase_step / refinement,
            refinement,
            angular_tol: spec.angular_tolerance / (refinement * refinement),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Gauss {
    mean: f64,
    sigma: f64,
}

impl Gauss {
    fn pdf(&self, v: f64) -> f64 {
        let z = (v - self.mean) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * TAU.sqrt())
    }
}

/// Truncated Gaussian coupling, `sigma > 0`.
#[derive(Debug, Clone, Copy)]
struct Coupling {
    mean: f64,
    sigma: f64,
    norm: f64,
    lo: f64,
    hi: f64,
}

impl Coupling {
    fn new(mean: f64, sigma: f64, width: f64) -> Self {
        Self {
            mean,
            sigma,
            norm: 2.0 / (1.0 + erf(mean / (sigma * std::f64::consts::SQRT_2))),
            lo: (mean - width * sigma).max(0.0),
            hi: mean + width * sigma,
        }
    }

    fn pdf(&self, j: f64) -> f64 {
        if j < 0.0 {
            return 0.0;
        }
        let z = (j - self.mean) / self.sigma;
        self.norm * (-0.5 * z * z).exp() / (self.sigma * TAU.sqrt())
    }
}

struct Model {
    j_prime: f64,
    j01: f64,
    j02: f64,
    field: Option<Gauss>,
    field_halfwidth: f64,
    c1: Option<Coupling>,
    c2: Option<Coupling>,
}

enum Support {
    Point(f64, f64),
    Line(Line),
    Plane(Plane),
}

impl Model {
    fn new(p: &ExchangeParams<f64>, n: &NoiseSpec<f64>, width: f64) -> Self {
        let se = n.delta_e_std();
        Self {
            j_prime: p.j_prime,
            j01: n.j01,
            j02: n.j02,
            field: (se > 0.0).then_some(Gauss {
                mean: 0.0,
                sigma: se,
            }),
            field_halfwidth: width * se,
            c1: (n.sigma_j1 > 0.0).then(|| Coupling::new(n.j01, n.sigma_j1, width)),
            c2: (n.sigma_j2 > 0.0).then(|| Coupling::new(n.j02, n.sigma_j2, width)),
        }
    }

    fn plane_point(&self, j1: f64, j2: f64, delta_e: f64) -> (f64, f64) {
        (
            self.j_prime - 0.5 * (j1 + j2) + delta_e,
            0.5 * SQRT3 * (j1 - j2),
        )
    }

    fn support(&self) -> Support {
        let (jp, j01, j02) = (self.j_prime, self.j01, self.j02);
        let hw = self.field_halfwidth;
        match (self.field, self.c1, self.c2) {
            (None, None, None) => {
                let (x, y) = self.plane_point(j01, j02, 0.0);
                Support::Point(x, y)
            }
            (Some(g), None, None) => {
                let (x0, y0) = self.plane_point(j01, j02, 0.0);
                Support::Line(Line {
                    origin: (x0, y0),
                    direction: (1.0, 0.0),
                    lo: -hw,
                    hi: hw,
                    sigma: g.sigma,
                    density: LineDensity::Field(g),
                })
            }
            (None, Some(c), None) => {
                let origin = self.plane_point(0.0, j02, 0.0);
                Support::Line(Line {
                    origin,
                    direction: (-0.5, 0.5 * SQRT3),
                    lo: c.lo,
                    hi: c.hi,
                    sigma: c.sigma,
                    density: LineDensity::Coupling(c),
                })
            }
            (None, None, Some(c)) => {
                let origin = self.plane_point(j01, 0.0, 0.0);
                Support::Line(Line {
                    origin,
                    direction: (-0.5, -0.5 * SQRT3),
                    lo: c.lo,
                    hi: c.hi,
                    sigma: c.sigma,
                    density: LineDensity::Coupling(c),
                })
            }
            (field, c1, c2) => {
                let var_e = field.map_or(0.0, |g| g.sigma * g.sigma);
                let var1 = c1.map_or(0.0, |c| c.sigma * c.sigma);
                let var2 = c2.map_or(0.0, |c| c.sigma * c.sigma);
                // covariance of (x, y) under the linear map, truncation ignored
                let cxx = 0.25 * (var1 + var2) + var_e;
                let cyy = 0.75 * (var1 + var2);
                let cxy = 0.25 * SQRT3 * (var2 - var1);
                let tr = cxx + cyy;
                let disc = (0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy).sqrt();
                let lam_min = (0.5 * tr - disc).max(0.0);
                let lam_max = 0.5 * tr + disc;
                let scale = lam_min.sqrt();
                let peak = 1.0 / (TAU * (lam_min * lam_max).sqrt());

                let inv = 1.0 / SQRT3;
                let (density, constraints) = match (field, c1, c2) {
                    (Some(g), Some(a), Some(b)) => {
                        let xlo = jp - 0.5 * (a.hi + b.hi) - hw;
                        let xhi = jp - 0.5 * (a.lo + b.lo) + hw;
                        let ylo = 0.5 * SQRT3 * (a.lo - b.hi);
                        let yhi = 0.5 * SQRT3 * (a.hi - b.lo);
                        (
                            PlaneDensity::Full {
                                j_prime: jp,
                                field: g,
                                c1: a,
                                c2: b,
                            },
                            vec![
                                HalfPlane::new(1.0, 0.0, xhi),
                                HalfPlane::new(-1.0, 0.0, -xlo),
                                HalfPlane::new(0.0, 1.0, yhi),
                                HalfPlane::new(0.0, -1.0, -ylo),
                            ],
                        )
                    }
                    (None, Some(a), Some(b)) => (
                        // j1 = j' - x + y/sqrt3, j2 = j' - x - y/sqrt3
                        PlaneDensity::Couplings {
                            j_prime: jp,
                            c1: a,
                            c2: b,
                        },
                        vec![
                            HalfPlane::new(1.0, -inv, jp - a.lo),
                            HalfPlane::new(-1.0, inv, a.hi - jp),
                            HalfPlane::new(1.0, inv, jp - b.lo),
                            HalfPlane::new(-1.0, -inv, b.hi - jp),
                        ],
                    ),
                    (Some(g), Some(a), None) => (
                        // j1 = j02 + 2y/sqrt3, delta_e = x - j' + j02 + y/sqrt3
                        PlaneDensity::FieldAndFirst {
                            j_prime: jp,
                            j02,
                            field: g,
                            c1: a,
                        },
                        vec![
                            HalfPlane::new(0.0, 1.0, 0.5 * SQRT3 * (a.hi - j02)),
                            HalfPlane::new(0.0, -1.0, -0.5 * SQRT3 * (a.lo - j02)),
                            HalfPlane::new(1.0, inv, jp - j02 + hw),
                            HalfPlane::new(-1.0, -inv, hw - (jp - j02)),
                        ],
                    ),
                    (Some(g), None, Some(b)) => (
                        // j2 = j01 - 2y/sqrt3, delta_e = x - j' + j01 - y/sqrt3
                        PlaneDensity::FieldAndSecond {
                            j_prime: jp,
                            j01,
                            field: g,
                            c2: b,
                        },
                        vec![
                            HalfPlane::new(0.0, -1.0, 0.5 * SQRT3 * (b.hi - j01)),
                            HalfPlane::new(0.0, 1.0, -0.5 * SQRT3 * (b.lo - j01)),
                            HalfPlane::new(1.0, -inv, jp - j01 + hw),
                            HalfPlane::new(-1.0, inv, hw - (jp - j01)),
                        ],
                    ),
                    _ => unreachable!("fewer than two active noise dimensions handled above"),
                };
                let kink_angles = match density {
                    // lower limit |j1 - j2| of the closed-form integral has a kink at y = 0
                    PlaneDensity::Full { .. } => vec![0.0, std::f64::consts::PI],
                    _ => Vec::new(),
                };
                Support::Plane(Plane {
                    density,
                    constraints,
                    kink_angles,
                    scale,
                    peak,
                })
            }
        }
    }
}

enum LineDensity {
    Field(Gauss),
    Coupling(Coupling),
}

struct Line {
    origin: (f64, f64),
    direction: (f64, f64),
    lo: f64,
    hi: f64,
    sigma: f64,
    density: LineDensity,
}

impl Line {
    fn point(&self, s: f64) -> (f64, f64) {
        (
            self.origin.0 + s * self.direction.0,
            self.origin.1 + s * self.direction.1,
        )
    }

    fn pdf(&self, s: f64) -> f64 {
        match &self.density {
            LineDensity::Field(g) => g.pdf(s),
            LineDensity::Coupling(c) => c.pdf(s),
        }
    }
}

fn panel_breaks(lo: f64, hi: f64, mut cuts: Vec<f64>, max_width: f64) -> Vec<(f64, f64)> {
    cuts.retain(|c| *c > lo && *c < hi);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut panels = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let n = if max_width.is_finite() {
            ((len / max_width).ceil() as usize).max(1)
        } else {
            1
        };
        let h = len / n as f64;
        for k in 0..n {
            let pa = a + k as f64 * h;
            let pb = if k + 1 == n { b } else { a + (k + 1) as f64 * h };
            panels.push((pa, pb));
        }
    }
    panels
}

/// Composite rule on `[lo, hi]` that tolerates square-root behavior at every break.
///
/// Panels touching a break use `r = a + h s^2` toward that break; a segment
/// that fits in one panel is halved so each half touches one break.
fn graded_nodes(
    rule: &GaussLegendre<f64>,
    lo: f64,
    hi: f64,
    cuts: Vec<f64>,
    max_width: f64,
) -> Vec<(f64, f64)> {
    let mut breaks: Vec<f64> = cuts.into_iter().filter(|c| *c > lo && *c < hi).collect();
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut out = Vec::new();
    let toward = |from: f64, to: f64, out: &mut Vec<(f64, f64)>| {
        // from is the break; nodes cluster there
        let h = to - from;
        for (x, w) in rule.mapped(0.0, 1.0) {
            out.push((from + h * x * x, 2.0 * h.abs() * x * w));
        }
    };
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        let n = if max_width.is_finite() {
            ((b - a) / max_width).ceil() as usize
        } else {
            1
        };
        if n <= 1 {
            let m = 0.5 * (a + b);
            toward(a, m, &mut out);
            toward(b, m, &mut out);
            continue;
        }
        let h = (b - a) / n as f64;
        toward(a, a + h, &mut out);
        for k in 1..n - 1 {
            out.extend(rule.mapped(a + k as f64 * h, a + (k + 1) as f64 * h));
        }
        toward(b, b - h, &mut out);
    }
    out
}

fn line_nodes(line: &Line, res: &Resolution) -> Vec<Node> {
    let (ex, ey) = line.direction;
    let speed = ex.hypot(ey);
    let (ox, oy) = line.origin;
    // closest approach to the origin, where the weights vary fastest
    let s_star = -(ox * ex + oy * ey) / (speed * speed);
    let (cx, cy) = line.point(s_star);
    let span = line.hi - line.lo;
    let mut scale = cx.hypot(cy) / speed;
    scale = scale.max(1e-12 * span);
    let mut cuts = vec![s_star];
    let mut d = scale;
    while d < span {
        cuts.push(s_star - d);
        cuts.push(s_star + d);
        d *= 2.0;
    }
    let max_width = (res.phase_step / speed).min(line.sigma / res.refinement);
    let panels = panel_breaks(line.lo, line.hi, cuts, max_width);
    let mut nodes = Vec::with_capacity(panels.len() * res.rule.len());
    for (a, b) in panels {
        for (s, w) in res.rule.mapped(a, b) {
            let (x, y) = line.point(s);
            nodes.push(point_node(x, y, line.pdf(s), w));
        }
    }
    nodes
}

/// `n . p <= b` with unit normal `n`.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    nx: f64,
    ny: f64,
    b: f64,
}

impl HalfPlane {
    fn new(nx: f64, ny: f64, b: f64) -> Self {
        let norm = nx.hypot(ny);
        Self {
            nx: nx / norm,
            ny: ny / norm,
            b: b / norm,
        }
    }

    fn contains(&self, x: f64, y: f64, slack: f64) -> bool {
        self.nx * x + self.ny * y <= self.b + slack
    }

    /// Angular intervals (within `[0, 2pi)`) of the circle of radius `r` inside the half-plane.
    fn arc(&self, r: f64) -> Option<Vec<(f64, f64)>> {
        let ratio = self.b / r;
        if ratio >= 1.0 {
            return Some(vec![(0.0, TAU)]);
        }
        if ratio <= -1.0 {
            return None;
        }
        let phi = self.ny.atan2(self.nx);
        let alpha = ratio.acos();
        let start = (phi + alpha).rem_euclid(TAU);
        let len = TAU - 2.0 * alpha;
        let end = start + len;
        if end <= TAU {
            Some(vec![(start, end)])
        } else {
            Some(vec![(0.0, end - TAU), (start, TAU)])
        }
    }
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

enum PlaneDensity {
    /// Field and both couplings noisy; field integrated out analytically.
    Full {
        j_prime: f64,
        field: Gauss,
        c1: Coupling,
        c2: Coupling,
    },
    Couplings {
        j_prime: f64,
        c1: Coupling,
        c2: Coupling,
    },
    FieldAndFirst {
        j_prime: f64,
        j02: f64,
        field: Gauss,
        c1: Coupling,
    },
    FieldAndSecond {
        j_prime: f64,
        j01: f64,
        field: Gauss,
        c2: Coupling,
    },
}

impl PlaneDensity {
    fn eval(&self, x: f64, y: f64) -> f64 {
        let jac = 2.0 / SQRT3;
        match *self {
            PlaneDensity::Full {
                j_prime,
                field,
                c1,
                c2,
            } => {
                // With v = j1 + j2 and u = j1 - j2 = 2y/sqrt3, each factor is a
                // Gaussian in v; their product integrates over v >= |u| to an erfc.
                let u = 2.0 * y / SQRT3;
                let means = [2.0 * c1.mean - u, 2.0 * c2.mean + u, 2.0 * (j_prime - x)];
                let vars = [
                    4.0 * c1.sigma * c1.sigma,
                    4.0 * c2.sigma * c2.sigma,
                    4.0 * field.sigma * field.sigma,
                ];
                let prec: f64 = vars.iter().map(|v| 1.0 / v).sum();
                let mean = means.iter().zip(&vars).map(|(m, v)| m / v).sum::<f64>() / prec;
                let mut spread = 0.0;
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        let dm = means[i] - means[j];
                        spread += dm * dm / (vars[i] * vars[j]);
                    }
                }
                spread /= prec;
                let gauss_norm = (TAU.powi(3) * vars[0] * vars[1] * vars[2]).sqrt();
                let tail = (std::f64::consts::PI / (2.0 * prec)).sqrt()
                    * erfc((u.abs() - mean) * (0.5 * prec).sqrt());
                0.5 * jac * 8.0 * c1.norm * c2.norm * (-0.5 * spread).exp() / gauss_norm * tail
            }
            PlaneDensity::Couplings { j_prime, c1, c2 } => {
                let j1 = j_prime - x + y / SQRT3;
                let j2 = j_prime - x - y / SQRT3;
                jac * c1.pdf(j1) * c2.pdf(j2)
            }
            PlaneDensity::FieldAndFirst {
                j_prime,
                j02,
                field,
                c1,
            } => {
                let j1 = j02 + 2.0 * y / SQRT3;
                let de = x - j_prime + 0.5 * (j1 + j02);
                jac * c1.pdf(j1) * field.pdf(de)
            }
            PlaneDensity::FieldAndSecond {
                j_prime,
                j01,
                field,
                c2,
            } => {
                let j2 = j01 - 2.0 * y / SQRT3;
                let de = x - j_prime + 0.5 * (j01 + j2);
                jac * c2.pdf(j2) * field.pdf(de)
            }
        }
    }
}

struct Plane {
    density: PlaneDensity,
    constraints: Vec<HalfPlane>,
    kink_angles: Vec<f64>,
    /// Smallest principal standard deviation of the density.
    scale: f64,
    /// Rough peak density, sets the absolute angular tolerance.
    peak: f64,
}

impl Plane {
    fn contains(&self, x: f64, y: f64, slack: f64) -> bool {
        self.constraints.iter().all(|h| h.contains(x, y, slack))
    }

    /// Radii where the arc structure of the circle changes, plus the radial extent.
    fn radial_breaks(&self) -> (f64, f64, Vec<f64>) {
        let slack = 1e-12;
        let mut vertices = Vec::new();
        for (i, a) in self.constraints.iter().enumerate() {
            for b in &self.constraints[i + 1..] {
                let det = a.nx * b.ny - a.ny * b.nx;
                if det.abs() < 1e-14 {
                    continue;
                }
                let x = (a.b * b.ny - b.b * a.ny) / det;
                let y = (a.nx * b.b - b.nx * a.b) / det;
                if self.contains(x, y, slack * (1.0 + x.abs() + y.abs())) {
                    vertices.push((x, y));
                }
            }
        }
        let mut radii: Vec<f64> = vertices.iter().map(|(x, y)| x.hypot(*y)).collect();
        let r_hi = radii.iter().copied().fold(0.0, f64::max);
        for h in &self.constraints {
            let (fx, fy) = (h.nx * h.b, h.ny * h.b);
            if self.contains(fx, fy, slack * (1.0 + h.b.abs())) {
                radii.push(h.b.abs());
            }
        }
        let r_lo = if self.contains(0.0, 0.0, 0.0) {
            0.0
        } else {
            radii.iter().copied().fold(f64::INFINITY, f64::min)
        };
        (r_lo, r_hi, radii)
    }

    fn angular_intervals(&self, r: f64) -> Vec<(f64, f64)> {
        let mut set = vec![(0.0, TAU)];
        for h in &self.constraints {
            match h.arc(r) {
                Some(arc) => set = intersect(&set, &arc),
                None => return Vec::new(),
            }
            if set.is_empty() {
                return set;
            }
        }
        set
    }
}

fn plane_nodes(plane: &Plane, res: &Resolution) -> Vec<Node> {
    let (r_lo, r_hi, radii) = plane.radial_breaks();
    if !(r_hi > r_lo) {
        return Vec::new();
    }
    let max_width = res.phase_step.min(plane.scale / res.refinement);
    let radial = graded_nodes(&res.rule, r_lo, r_hi, radii, max_width);
    let tol = AdaptiveTolerance {
        abs: 1e-15 * plane.peak,
        rel: res.angular_tol,
        max_intervals: 4000,
    };
    radial
        .par_iter()
        .filter_map(|&(r, w)| {
            if r <= 0.0 {
                return None;
            }
            let arcs = plane.angular_intervals(r);
            if arcs.is_empty() {
                return None;
            }
            // pre-split so no feature narrower than the density scale is skipped
            let max_arc = (plane.scale / (r * res.refinement)).min(std::f64::consts::FRAC_PI_4);
            let mut pieces = Vec::new();
            for (a, b) in arcs {
                let mut cuts = plane.kink_angles.clone();
                cuts.retain(|c| *c > a && *c < b);
                pieces.extend(panel_breaks(a, b, cuts, max_arc));
            }
            let (v, _) = integrate_adaptive(
                |theta: f64| {
                    let (s, c) = theta.sin_cos();
                    let rho = plane.density.eval(r * c, r * s);
                    [rho, rho * s * s, rho * s * c]
                },
                &pieces,
                tol,
            );
            let jac = w * r;
            Some(Node {
                omega: r,
                mass: jac * v[0],
                zero: jac * v[1],
                sup: jac * v[2],
            })
        })
        .collect()
}
