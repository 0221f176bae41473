//! Solid model of the pipe, its fittings and the launch rig, with exact
//! ray casting against it.
//!
//! Frame: x along the pipe axis with the entrance plane at x = 0, z up.
//! Clock angles run from +z (12 o'clock) toward +y, so a point at radius r
//! and clock angle θ sits at (y, z) = (r sin θ, r cos θ); 180° is the floor.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::Serialize;
use thiserror::Error;

use super::scenario::{
    FittingKind, FittingTag, Scenario, PORT_DEPTH, SWEEP_LENGTH, TAPER_LENGTH, VALVE_THICKNESS,
};

pub type Vec3 = Vector3<f64>;

pub const WALL_THICKNESS: f64 = 0.01;
/// Range reported when a ray escapes into cell space.
pub const RANGE_CLAMP: f64 = 10.0;
pub const RIG_LENGTH: f64 = 1.3;
/// Distance of the rangefinder target plate behind the rig front.
pub const RIG_TARGET_SETBACK: f64 = 1.2;
pub const RIG_TARGET_RADIUS: f64 = 0.2;
const RIG_TARGET_THICKNESS: f64 = 0.01;
/// Half of the trough arc; the trough is the lower 150° of a tube.
const TROUGH_HALF_ARC: f64 = 75.0 * PI / 180.0;
/// Axial length of the entrance lip.
pub const LIP_LENGTH: f64 = 0.03;

const HIT_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("axial position {x} outside pipe [0, {length}]")]
    OutOfRange { x: f64, length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Surface {
    Wall,
    Rig,
    Fitting(FittingTag),
    /// Nothing within the clamp range.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub range: f64,
    pub surface: Surface,
}

impl Hit {
    fn clamp() -> Self {
        Hit {
            range: RANGE_CLAMP,
            surface: Surface::None,
        }
    }
}

pub fn deg(v: f64) -> f64 {
    v * PI / 180.0
}

/// Clock angle of a cross-section point, in (-π, π].
pub fn clock_angle(y: f64, z: f64) -> f64 {
    y.atan2(z)
}

fn wrap(a: f64) -> f64 {
    a - TAU * (a / TAU).round()
}

/// Annular sector box: x, clock angle and radius ranges.
#[derive(Debug, Clone, Copy)]
struct Sector {
    x0: f64,
    x1: f64,
    theta: f64,
    half_width: f64,
    r_in: f64,
    r_out: f64,
}

impl Sector {
    fn full_circle(&self) -> bool {
        self.half_width >= PI
    }

    fn in_footprint(&self, x: f64, theta: f64) -> bool {
        x >= self.x0
            && x <= self.x1
            && (self.full_circle() || wrap(theta - self.theta).abs() <= self.half_width)
    }

    fn contains(&self, x: f64, theta: f64, r: f64) -> bool {
        r >= self.r_in && r <= self.r_out && self.in_footprint(x, theta)
    }

    fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.x1 >= lo && self.x0 <= hi
    }

    fn push_roots(&self, o: &Vec3, d: &Vec3, roots: &mut Roots) {
        plane_x(o, d, self.x0, roots);
        plane_x(o, d, self.x1, roots);
        if !self.full_circle() {
            radial_plane(o, d, self.theta - self.half_width, roots);
            radial_plane(o, d, self.theta + self.half_width, roots);
        }
        if self.r_in > 0.0 {
            cylinder(o, d, self.r_in, roots);
        }
        cylinder(o, d, self.r_out, roots);
    }
}

/// Stretch of pipe with a linearly varying inner radius.
#[derive(Debug, Clone, Copy)]
struct Segment {
    x0: f64,
    x1: f64,
    r0: f64,
    r1: f64,
}

impl Segment {
    fn slope(&self) -> f64 {
        (self.r1 - self.r0) / (self.x1 - self.x0)
    }

    fn radius(&self, x: f64) -> f64 {
        if self.r0 == self.r1 {
            self.r0
        } else {
            self.r0 + self.slope() * (x - self.x0)
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Terminal {
    Open,
    Valve {
        x0: f64,
        x1: f64,
        r: f64,
    },
    /// Solid region beyond an inclined plane through the opposite wall at
    /// `p` and the branch-side wall at `p + SWEEP_LENGTH`.
    Sweep {
        p: f64,
        k: f64,
        ey: f64,
        ez: f64,
        r: f64,
        x_end: f64,
    },
}

/// Rigid placement of the launch rig.
#[derive(Debug, Clone, Copy)]
pub struct RigFrame {
    pub origin: Vec3,
    pub yaw: f64,
}

impl RigFrame {
    pub fn to_rig(&self, p: &Vec3) -> Vec3 {
        let q = p - self.origin;
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * q.x + s * q.y, -s * q.x + c * q.y, q.z)
    }

    pub fn dir_to_rig(&self, d: &Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * d.x + s * d.y, -s * d.x + c * d.y, d.z)
    }

    pub fn to_world(&self, q: &Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * q.x - s * q.y, s * q.x + c * q.y, q.z) + self.origin
    }

    pub fn dir_to_world(&self, q: &Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * q.x - s * q.y, s * q.x + c * q.y, q.z)
    }
}

#[derive(Debug, Clone)]
struct Rig {
    frame: RigFrame,
    trough: Sector,
    target: Sector,
    x_lo: f64,
    x_hi: f64,
}

/// Immutable, query-ready solid model compiled from a scenario.
#[derive(Debug, Clone)]
pub struct World {
    radius0: f64,
    pipe_length: f64,
    shell_end: f64,
    segments: Vec<Segment>,
    obstacles: Vec<(Sector, FittingTag)>,
    holes: Vec<Sector>,
    pockets: Vec<Sector>,
    port_walls: Vec<Sector>,
    lip: Option<Sector>,
    terminal: Terminal,
    rig: Rig,
    /// Axial intervals of plain constant-radius pipe, `(x0, x1, r)`.
    clean: Vec<(f64, f64, f64)>,
}

/// Fixed-capacity root buffer; a ray meets a handful of primitives.
struct Roots {
    t: [f64; 96],
    n: usize,
    t_max: f64,
}

impl Roots {
    fn new(t_max: f64) -> Self {
        Roots {
            t: [0.0; 96],
            n: 0,
            t_max,
        }
    }

    fn push(&mut self, t: f64) {
        if t > 1e-12 && t <= self.t_max && self.n < self.t.len() {
            self.t[self.n] = t;
            self.n += 1;
        }
    }

    fn sorted(&mut self) -> &[f64] {
        let s = &mut self.t[..self.n];
        s.sort_unstable_by(|a, b| a.total_cmp(b));
        s
    }
}

fn plane_x(o: &Vec3, d: &Vec3, c: f64, roots: &mut Roots) {
    if d.x.abs() > 1e-15 {
        roots.push((c - o.x) / d.x);
    }
}

fn radial_plane(o: &Vec3, d: &Vec3, theta: f64, roots: &mut Roots) {
    let (s, c) = theta.sin_cos();
    let dn = d.y * c - d.z * s;
    if dn.abs() > 1e-15 {
        roots.push(-(o.y * c - o.z * s) / dn);
    }
}

fn quadratic(a: f64, b: f64, c: f64, roots: &mut Roots) {
    if a.abs() < 1e-15 {
        if b.abs() > 1e-15 {
            roots.push(-c / b);
        }
        return;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q != 0.0 {
        roots.push(q / a);
        roots.push(c / q);
    } else {
        roots.push(0.0);
    }
}

fn cylinder(o: &Vec3, d: &Vec3, rho: f64, roots: &mut Roots) {
    let a = d.y * d.y + d.z * d.z;
    let b = 2.0 * (o.y * d.y + o.z * d.z);
    let c = o.y * o.y + o.z * o.z - rho * rho;
    if a > 1e-18 {
        quadratic(a, b, c, roots);
    }
}

/// Roots of r(x) = r0 + m (x - x0) along the ray.
fn cone(o: &Vec3, d: &Vec3, x0: f64, r0: f64, m: f64, roots: &mut Roots) {
    let s0 = r0 + m * (o.x - x0);
    let s1 = m * d.x;
    let a = d.y * d.y + d.z * d.z - s1 * s1;
    let b = 2.0 * (o.y * d.y + o.z * d.z - s0 * s1);
    let c = o.y * o.y + o.z * o.z - s0 * s0;
    quadratic(a, b, c, roots);
}

impl World {
    pub fn new(s: &Scenario) -> World {
        let r0 = s.radius();
        let mut segments = Vec::new();
        let mut obstacles = Vec::new();
        let mut holes = Vec::new();
        let mut pockets = Vec::new();
        let mut port_walls = Vec::new();
        let mut terminal = Terminal::Open;
        let mut shell_end = s.pipe_length;
        let mut x = 0.0;
        let mut r = r0;
        let mut features: Vec<(f64, f64)> = Vec::new();

        for f in &s.fittings {
            let p = f.position;
            match &f.kind {
                FittingKind::Reducer { exit_radius } => {
                    segments.push(Segment { x0: x, x1: p, r0: r, r1: r });
                    segments.push(Segment { x0: p, x1: p + TAPER_LENGTH, r0: r, r1: *exit_radius });
                    x = p + TAPER_LENGTH;
                    r = *exit_radius;
                    features.push((p, p + TAPER_LENGTH));
                }
                FittingKind::Obstacle { height, length, clock_angle, angular_width } => {
                    obstacles.push((
                        Sector {
                            x0: p,
                            x1: p + length,
                            theta: deg(*clock_angle),
                            half_width: deg(*angular_width) / 2.0,
                            r_in: r - height,
                            r_out: r,
                        },
                        FittingTag::Obstacle,
                    ));
                    features.push((p, p + length));
                }
                FittingKind::Hole { axial_extent, angular_extent, clock_angle } => {
                    holes.push(Sector {
                        x0: p,
                        x1: p + axial_extent,
                        theta: deg(*clock_angle),
                        half_width: deg(*angular_extent) / 2.0,
                        r_in: 0.0,
                        r_out: f64::INFINITY,
                    });
                    features.push((p, p + axial_extent));
                }
                FittingKind::Port { radius, clock_angle } => {
                    let theta = deg(*clock_angle);
                    pockets.push(Sector {
                        x0: p - radius,
                        x1: p + radius,
                        theta,
                        half_width: radius / r,
                        r_in: r,
                        r_out: r + PORT_DEPTH,
                    });
                    let rw = radius + WALL_THICKNESS;
                    port_walls.push(Sector {
                        x0: p - rw,
                        x1: p + rw,
                        theta,
                        half_width: rw / r,
                        r_in: r,
                        r_out: r + PORT_DEPTH + WALL_THICKNESS,
                    });
                    features.push((p - rw, p + rw));
                }
                FittingKind::ClosedValve => {
                    terminal = Terminal::Valve { x0: p, x1: p + VALVE_THICKNESS, r: r + WALL_THICKNESS };
                    shell_end = p + VALVE_THICKNESS;
                    features.push((p, f64::INFINITY));
                }
                FittingKind::OpenEnd => {
                    shell_end = p;
                    features.push((p, f64::INFINITY));
                }
                FittingKind::SweptT { clock_angle, .. } => {
                    let c = deg(*clock_angle);
                    terminal = Terminal::Sweep {
                        p,
                        k: SWEEP_LENGTH / (2.0 * r),
                        ey: c.sin(),
                        ez: c.cos(),
                        r: r + WALL_THICKNESS,
                        x_end: p + SWEEP_LENGTH + WALL_THICKNESS,
                    };
                    shell_end = p + SWEEP_LENGTH + WALL_THICKNESS;
                    features.push((p, f64::INFINITY));
                }
            }
        }
        segments.push(Segment { x0: x, x1: shell_end.max(x), r0: r, r1: r });
        segments.retain(|sg| sg.x1 > sg.x0);

        let e = &s.entrance;
        let frame = RigFrame {
            origin: Vec3::new(-e.gap, e.dy, e.dz),
            yaw: deg(e.yaw),
        };
        let trough = Sector {
            x0: -RIG_LENGTH,
            x1: 0.0,
            theta: PI,
            half_width: TROUGH_HALF_ARC,
            r_in: r0,
            r_out: r0 + WALL_THICKNESS,
        };
        let target = Sector {
            x0: -RIG_TARGET_SETBACK - RIG_TARGET_THICKNESS,
            x1: -RIG_TARGET_SETBACK,
            theta: 0.0,
            half_width: PI,
            r_in: 0.0,
            r_out: RIG_TARGET_RADIUS,
        };
        let margin = (r0 + WALL_THICKNESS) * frame.yaw.sin().abs() + 0.01;
        let rig = Rig {
            frame,
            trough,
            target,
            x_lo: -e.gap - RIG_LENGTH * frame.yaw.cos() - margin,
            x_hi: -e.gap + margin,
        };

        let lip = (e.step > 0.0).then_some(Sector {
            x0: 0.0,
            x1: LIP_LENGTH,
            theta: PI,
            half_width: TROUGH_HALF_ARC,
            r_in: r0 - e.step,
            r_out: r0,
        });
        let lip_end = if lip.is_some() { LIP_LENGTH } else { 0.0 };
        features.push((f64::NEG_INFINITY, rig.x_hi.max(lip_end)));

        let mut clean = Vec::new();
        for sg in segments.iter().filter(|sg| sg.r0 == sg.r1) {
            let mut pieces = vec![(sg.x0, sg.x1)];
            for &(a, b) in &features {
                let (a, b) = (a - 1e-6, b + 1e-6);
                pieces = pieces
                    .into_iter()
                    .flat_map(|(lo, hi)| {
                        if b <= lo || a >= hi {
                            vec![(lo, hi)]
                        } else {
                            [(lo, a), (b, hi)].into_iter().filter(|(l, h)| h > l).collect()
                        }
                    })
                    .collect();
            }
            clean.extend(pieces.into_iter().map(|(lo, hi)| (lo, hi, sg.r0)));
        }

        World {
            radius0: r0,
            pipe_length: s.pipe_length,
            shell_end,
            segments,
            obstacles,
            holes,
            pockets,
            port_walls,
            lip,
            terminal,
            rig,
            clean,
        }
    }

    pub fn nominal_radius(&self) -> f64 {
        self.radius0
    }

    pub fn pipe_length(&self) -> f64 {
        self.pipe_length
    }

    pub fn rig_frame(&self) -> RigFrame {
        self.rig.frame
    }

    /// Local inner radius including reducer tapers.
    pub fn radius_at(&self, x: f64) -> Result<f64, WorldError> {
        if !(0.0..=self.pipe_length).contains(&x) {
            return Err(WorldError::OutOfRange {
                x,
                length: self.pipe_length,
            });
        }
        Ok(self.radius_profile(x))
    }

    /// Inner radius with x clamped to the modeled tube.
    pub fn radius_profile(&self, x: f64) -> f64 {
        for sg in &self.segments {
            if x <= sg.x1 {
                return sg.radius(x.max(sg.x0));
            }
        }
        self.segments.last().map_or(self.radius0, |sg| sg.r1)
    }

    /// Height of any obstacle covering clock angle `theta` at `x`.
    pub fn obstacle_height(&self, x: f64, theta: f64) -> f64 {
        let mut h = 0.0f64;
        for (s, _) in &self.obstacles {
            if s.in_footprint(x, theta) {
                h = h.max(s.r_out - s.r_in);
            }
        }
        if let Some(l) = &self.lip {
            if l.in_footprint(x, theta) {
                h = h.max(l.r_out - l.r_in);
            }
        }
        h
    }

    /// Axial position where the pipe bore stops being traversable.
    pub fn bore_end(&self) -> f64 {
        match self.terminal {
            Terminal::Open => self.shell_end,
            Terminal::Valve { x0, .. } => x0,
            Terminal::Sweep { p, .. } => p,
        }
    }

    /// What solid, if any, occupies `p`.
    pub fn solid_at(&self, p: &Vec3) -> Option<Surface> {
        if p.x <= self.rig.x_hi && p.x >= self.rig.x_lo {
            let q = self.rig.frame.to_rig(p);
            let (r, th) = (q.y.hypot(q.z), clock_angle(q.y, q.z));
            if self.rig.trough.contains(q.x, th, r) || self.rig.target.contains(q.x, th, r) {
                return Some(Surface::Rig);
            }
        }
        let x = p.x;
        if x < 0.0 || x > self.shell_end {
            return None;
        }
        let r = p.y.hypot(p.z);
        let th = clock_angle(p.y, p.z);
        match self.terminal {
            Terminal::Open => {}
            Terminal::Valve { x0, x1, r: rv } => {
                if x >= x0 && x <= x1 && r <= rv {
                    return Some(Surface::Fitting(FittingTag::ClosedValve));
                }
            }
            Terminal::Sweep { p: xp, k, ey, ez, r: rs, x_end } => {
                let yc = p.y * ey + p.z * ez;
                if x >= xp && x <= x_end && r <= rs && x - xp >= k * (yc + rs - WALL_THICKNESS) {
                    return Some(Surface::Fitting(FittingTag::SweptT));
                }
            }
        }
        let rx = self.radius_profile(x);
        for (s, tag) in &self.obstacles {
            if s.contains(x, th, r) {
                return Some(Surface::Fitting(*tag));
            }
        }
        if let Some(l) = &self.lip {
            if l.contains(x, th, r) {
                return Some(Surface::Wall);
            }
        }
        let in_pocket = self.pockets.iter().any(|s| s.contains(x, th, r));
        if r >= rx && r <= rx + WALL_THICKNESS && !in_pocket {
            let in_hole = self.holes.iter().any(|s| s.in_footprint(x, th));
            if !in_hole {
                return Some(Surface::Wall);
            }
        }
        if !in_pocket && self.port_walls.iter().any(|s| s.contains(x, th, r)) {
            return Some(Surface::Fitting(FittingTag::Port));
        }
        None
    }

    /// Nearest solid along a unit-direction ray, clamped at 10 m.
    pub fn cast_ray(&self, origin: &Vec3, dir: &Vec3) -> Hit {
        self.cast_ray_within(origin, dir, RANGE_CLAMP)
    }

    /// As [`World::cast_ray`] but ignores anything beyond `max_range`
    /// (returned as a clamp miss).
    pub fn cast_ray_within(&self, o: &Vec3, d: &Vec3, max_range: f64) -> Hit {
        let t_max = max_range.min(RANGE_CLAMP);
        if let Some(hit) = self.fast_path(o, d, t_max) {
            return hit;
        }
        if let Some(s) = self.solid_at(o) {
            return Hit { range: 0.0, surface: s };
        }
        let (lo, hi) = {
            let a = o.x;
            let b = o.x + t_max * d.x;
            (a.min(b), a.max(b))
        };
        let mut roots = Roots::new(t_max);
        self.collect_roots(o, d, lo, hi, &mut roots);
        for &t in roots.sorted() {
            let p = o + d * (t + HIT_EPS);
            if let Some(s) = self.solid_at(&p) {
                return Hit { range: t, surface: s };
            }
        }
        Hit::clamp()
    }

    /// Plain-cylinder shortcut when the ray stays inside a clean stretch.
    fn fast_path(&self, o: &Vec3, d: &Vec3, t_max: f64) -> Option<Hit> {
        let &(x0, x1, r) = self.clean.iter().find(|c| o.x > c.0 && o.x < c.1)?;
        let a = d.y * d.y + d.z * d.z;
        let c = o.y * o.y + o.z * o.z - r * r;
        if c >= 0.0 || a < 1e-12 {
            return None;
        }
        let b = o.y * d.y + o.z * d.z;
        let t = if o.y == 0.0 && o.z == 0.0 && d.x == 0.0 {
            // Radial ray from the axis; the direction is unit by contract.
            r
        } else {
            (-b + (b * b - a * c).sqrt()) / a
        };
        let xh = o.x + t * d.x;
        if xh > x0 && xh < x1 {
            Some(if t <= t_max {
                Hit { range: t, surface: Surface::Wall }
            } else {
                Hit::clamp()
            })
        } else {
            None
        }
    }

    fn collect_roots(&self, o: &Vec3, d: &Vec3, lo: f64, hi: f64, roots: &mut Roots) {
        if lo <= self.rig.x_hi && hi >= self.rig.x_lo {
            let q = self.rig.frame.to_rig(o);
            let e = self.rig.frame.dir_to_rig(d);
            self.rig.trough.push_roots(&q, &e, roots);
            self.rig.target.push_roots(&q, &e, roots);
        }
        if hi < 0.0 || lo > self.shell_end {
            return;
        }
        plane_x(o, d, 0.0, roots);
        plane_x(o, d, self.shell_end, roots);
        for sg in &self.segments {
            if sg.x1 < lo || sg.x0 > hi {
                continue;
            }
            if sg.r0 == sg.r1 {
                cylinder(o, d, sg.r0, roots);
                cylinder(o, d, sg.r0 + WALL_THICKNESS, roots);
            } else {
                let m = sg.slope();
                cone(o, d, sg.x0, sg.r0, m, roots);
                cone(o, d, sg.x0, sg.r0 + WALL_THICKNESS, m, roots);
            }
        }
        for (s, _) in &self.obstacles {
            if s.overlaps(lo, hi) {
                s.push_roots(o, d, roots);
            }
        }
        if let Some(l) = &self.lip {
            if l.overlaps(lo, hi) {
                l.push_roots(o, d, roots);
            }
        }
        for s in &self.holes {
            if s.overlaps(lo, hi) {
                plane_x(o, d, s.x0, roots);
                plane_x(o, d, s.x1, roots);
                radial_plane(o, d, s.theta - s.half_width, roots);
                radial_plane(o, d, s.theta + s.half_width, roots);
            }
        }
        for s in self.pockets.iter().chain(&self.port_walls) {
            if s.overlaps(lo, hi) {
                s.push_roots(o, d, roots);
            }
        }
        match self.terminal {
            Terminal::Open => {}
            Terminal::Valve { x0, x1, r } => {
                if x1 >= lo && x0 <= hi {
                    plane_x(o, d, x0, roots);
                    plane_x(o, d, x1, roots);
                    cylinder(o, d, r, roots);
                }
            }
            Terminal::Sweep { p, k, ey, ez, r, x_end } => {
                if x_end >= lo && p <= hi {
                    // f(q) = (q.x - p) - k (q·e + R) changes sign on the sweep plane.
                    let f0 = (o.x - p) - k * (o.y * ey + o.z * ez + r - WALL_THICKNESS);
                    let fd = d.x - k * (d.y * ey + d.z * ez);
                    if fd.abs() > 1e-15 {
                        roots.push(-f0 / fd);
                    }
                    plane_x(o, d, p, roots);
                    plane_x(o, d, x_end, roots);
                    cylinder(o, d, r, roots);
                }
            }
        }
    }
}
