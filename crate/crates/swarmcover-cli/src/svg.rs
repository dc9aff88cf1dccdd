//! Deterministic SVG emission: trajectory panels, side-by-side comparison,
//! and the (position, velocity) safe-set slice of a single obstacle.
//!
//! Every coordinate is formatted with fixed precision and nothing
//! time-dependent enters the output, so a fixed run renders byte-for-byte
//! identically.

use nalgebra::Vector2;
use swarmcover::safety::{position_barrier, velocity_barrier};
use swarmcover::{CbfParams, Obstacle};

use swarmcover::geometry::ObstacleShape;

const AGENT_COLORS: [&str; 6] =
    ["#1f6fb4", "#2c9a2c", "#8a4fb4", "#e07a1f", "#17a8b8", "#b33a3a"];
const OBSTACLE_FILL: &str = "#cc3333";
const OBSTACLE_EDGE: &str = "#882222";
const SP_FILL: &str = "#999999";
const SAFE_FILL: &str = "#79c479";
const PANEL_TARGET: f64 = 560.0;
const PAD: f64 = 28.0;

/// Fixed two-decimal pixel formatting; "-0.00" normalizes to "0.00" so the
/// byte stream does not depend on the sign of a rounded-away zero.
fn f2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// One run's drawable content.
pub struct PlotScene {
    pub obstacles: Vec<Obstacle>,
    /// Sample points as (x, y, weight); drawn with radius proportional to
    /// weight.
    pub sample_points: Vec<(f64, f64, f64)>,
    /// Per-agent position series.
    pub tracks: Vec<Vec<(f64, f64)>>,
    pub label: String,
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    minx: f64,
    maxx: f64,
    miny: f64,
    maxy: f64,
}

impl Bounds {
    fn empty() -> Self {
        Bounds { minx: f64::INFINITY, maxx: f64::NEG_INFINITY, miny: f64::INFINITY, maxy: f64::NEG_INFINITY }
    }

    fn add(&mut self, x: f64, y: f64) {
        self.minx = self.minx.min(x);
        self.maxx = self.maxx.max(x);
        self.miny = self.miny.min(y);
        self.maxy = self.maxy.max(y);
    }

    fn add_scene(&mut self, scene: &PlotScene) {
        for obs in &scene.obstacles {
            let (ex, ey) = match obs.shape {
                ObstacleShape::Circle { radius } => (radius, radius),
                ObstacleShape::Rect { length, width } => (length / 2.0, width / 2.0),
            };
            self.add(obs.center.x - ex, obs.center.y - ey);
            self.add(obs.center.x + ex, obs.center.y + ey);
        }
        for &(x, y, _) in &scene.sample_points {
            self.add(x, y);
        }
        for track in &scene.tracks {
            for &(x, y) in track {
                self.add(x, y);
            }
        }
    }

    fn padded(mut self, margin: f64) -> Self {
        if self.minx > self.maxx {
            // Nothing drawable; pick a unit window.
            self = Bounds { minx: -1.0, maxx: 1.0, miny: -1.0, maxy: 1.0 };
        }
        self.minx -= margin;
        self.maxx += margin;
        self.miny -= margin;
        self.maxy += margin;
        self
    }
}

/// World-to-pixel map for one panel, y up in world, y down in pixels.
struct Frame {
    b: Bounds,
    scale: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn fit(b: Bounds) -> Frame {
        let dx = b.maxx - b.minx;
        let dy = b.maxy - b.miny;
        let scale = PANEL_TARGET / dx.max(dy).max(1e-9);
        Frame { b, scale, w: dx * scale + 2.0 * PAD, h: dy * scale + 2.0 * PAD }
    }

    fn x(&self, wx: f64) -> f64 {
        PAD + (wx - self.b.minx) * self.scale
    }

    fn y(&self, wy: f64) -> f64 {
        PAD + (self.b.maxy - wy) * self.scale
    }
}

fn render_obstacle(out: &mut String, frame: &Frame, obs: &Obstacle) {
    match obs.shape {
        ObstacleShape::Circle { radius } => {
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{OBSTACLE_FILL}\" fill-opacity=\"0.85\" stroke=\"{OBSTACLE_EDGE}\"/>\n",
                f2(frame.x(obs.center.x)),
                f2(frame.y(obs.center.y)),
                f2(radius * frame.scale),
            ));
        }
        ObstacleShape::Rect { length, width } => {
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{OBSTACLE_FILL}\" fill-opacity=\"0.85\" stroke=\"{OBSTACLE_EDGE}\"/>\n",
                f2(frame.x(obs.center.x - length / 2.0)),
                f2(frame.y(obs.center.y + width / 2.0)),
                f2(length * frame.scale),
                f2(width * frame.scale),
            ));
        }
    }
}

/// Panel body: obstacles, weight-scaled sample points, one `<path>` per
/// agent plus a start cross and an end circle in the agent's color.
fn render_panel(out: &mut String, frame: &Frame, scene: &PlotScene) {
    for obs in &scene.obstacles {
        render_obstacle(out, frame, obs);
    }
    let wmax = scene
        .sample_points
        .iter()
        .map(|&(_, _, w)| w)
        .fold(0.0f64, f64::max);
    if wmax > 0.0 {
        for &(x, y, w) in &scene.sample_points {
            if w <= 0.0 {
                continue;
            }
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{SP_FILL}\" fill-opacity=\"0.6\"/>\n",
                f2(frame.x(x)),
                f2(frame.y(y)),
                f2(0.45 * frame.scale * w / wmax),
            ));
        }
    }
    for (i, track) in scene.tracks.iter().enumerate() {
        if track.is_empty() {
            continue;
        }
        let color = AGENT_COLORS[i % AGENT_COLORS.len()];
        let mut d = String::new();
        for (k, &(x, y)) in track.iter().enumerate() {
            d.push_str(if k == 0 { "M" } else { " L" });
            d.push_str(&format!("{},{}", f2(frame.x(x)), f2(frame.y(y))));
        }
        out.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" stroke-linejoin=\"round\"/>\n"
        ));
        let (sx, sy) = (frame.x(track[0].0), frame.y(track[0].1));
        for (dx, dy) in [(5.0, 0.0), (0.0, 5.0)] {
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                f2(sx - dx),
                f2(sy - dy),
                f2(sx + dx),
                f2(sy + dy),
            ));
        }
        let &(ex, ey) = track.last().expect("non-empty track");
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"4.5\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            f2(frame.x(ex)),
            f2(frame.y(ey)),
        ));
    }
    if !scene.label.is_empty() {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"18\" font-family=\"monospace\" font-size=\"13\">{}</text>\n",
            f2(PAD),
            scene.label,
        ));
    }
}

fn document(w: f64, h: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n\
         {body}</svg>\n",
        w = f2(w),
        h = f2(h),
        body = body,
    )
}

pub fn trajectory_svg(scene: &PlotScene) -> String {
    let mut b = Bounds::empty();
    b.add_scene(scene);
    let frame = Frame::fit(b.padded(1.5));
    let mut body = String::new();
    render_panel(&mut body, &frame, scene);
    document(frame.w, frame.h, &body)
}

/// Two panels on a shared world window and scale, left then right.
pub fn comparison_svg(left: &PlotScene, right: &PlotScene) -> String {
    let mut b = Bounds::empty();
    b.add_scene(left);
    b.add_scene(right);
    let frame = Frame::fit(b.padded(1.5));
    let gap = 24.0;
    let mut body = String::new();
    body.push_str("<g>\n");
    render_panel(&mut body, &frame, left);
    body.push_str("</g>\n");
    body.push_str(&format!("<g transform=\"translate({},0)\">\n", f2(frame.w + gap)));
    render_panel(&mut body, &frame, right);
    body.push_str("</g>\n");
    document(frame.w * 2.0 + gap, frame.h, &body)
}

/// Membership test for the slice plot: position offset `s` along +x from
/// the obstacle center, velocity `v` along x (negative approaches from the
/// +x side). Safe when both the position barrier and the charged barrier
/// are nonnegative; undefined geometry (the exact center) counts unsafe.
pub fn slice_safe(obs: &Obstacle, params: &CbfParams, s: f64, v: f64) -> bool {
    let p = Vector2::new(obs.center.x + s, obs.center.y);
    let vel = Vector2::new(v, 0.0);
    let h1 = match position_barrier(obs, &p, &p) {
        Ok(h) => h,
        Err(_) => return false,
    };
    let h2 = match velocity_barrier(obs, &p, &p, &vel, params) {
        Ok(h) => h,
        Err(_) => return false,
    };
    h1 >= 0.0 && h2 >= 0.0
}

/// Evaluated slice grid; `safe[iv * s.len() + is]` is the cell at
/// (s[is], v[iv]).
pub struct SliceGrid {
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub safe: Vec<bool>,
}

/// Sample the slice on an n-by-n grid: s spans four boundary radii either
/// side of the center, v spans [-5, 5] m/s.
pub fn safe_slice_grid(obs: &Obstacle, params: &CbfParams, n: usize) -> SliceGrid {
    let probe = Vector2::new(obs.center.x + 1.0, obs.center.y);
    let r = obs.boundary_radius(&probe).expect("probe off-center");
    let span = 4.0 * r;
    let lerp = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let s: Vec<f64> = (0..n).map(|i| lerp(-span, span, i)).collect();
    let v: Vec<f64> = (0..n).map(|i| lerp(-5.0, 5.0, i)).collect();
    let mut safe = Vec::with_capacity(n * n);
    for &vv in &v {
        for &ss in &s {
            safe.push(slice_safe(obs, params, ss, vv));
        }
    }
    SliceGrid { s, v, safe }
}

/// Safe-set slice rendering: green cells where the slice is safe, a red
/// band over the obstacle's extent, axes through the origin.
pub fn safe_slice_svg(obs: &Obstacle, params: &CbfParams) -> String {
    let n = 200;
    let grid = safe_slice_grid(obs, params, n);
    let plot = PANEL_TARGET;
    let w = plot + 2.0 * PAD;
    let h = plot + 2.0 * PAD;
    let cell = plot / n as f64;
    let span = -grid.s[0];
    let sx = |s: f64| PAD + (s + span) / (2.0 * span) * plot;
    let sy = |v: f64| PAD + (5.0 - v) / 10.0 * plot;
    let mut body = String::new();
    let probe = Vector2::new(obs.center.x + 1.0, obs.center.y);
    let r = obs.boundary_radius(&probe).expect("probe off-center");
    body.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{OBSTACLE_FILL}\" fill-opacity=\"0.5\"/>\n",
        f2(sx(-r)),
        f2(PAD),
        f2(2.0 * r / (2.0 * span) * plot),
        f2(plot),
    ));
    // Merge each row's safe cells into horizontal runs to keep the file small.
    for iv in 0..n {
        let row = &grid.safe[iv * n..(iv + 1) * n];
        let y = sy(grid.v[iv]) - cell / 2.0;
        let mut is = 0;
        while is < n {
            if !row[is] {
                is += 1;
                continue;
            }
            let start = is;
            while is < n && row[is] {
                is += 1;
            }
            let x0 = sx(grid.s[start]) - cell / 2.0;
            let x1 = sx(grid.s[is - 1]) + cell / 2.0;
            body.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{SAFE_FILL}\"/>\n",
                f2(x0),
                f2(y),
                f2(x1 - x0),
                f2(cell),
            ));
        }
    }
    for (x1, y1, x2, y2) in [
        (sx(0.0), PAD, sx(0.0), PAD + plot),
        (PAD, sy(0.0), PAD + plot, sy(0.0)),
    ] {
        body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#555555\" stroke-width=\"1\"/>\n",
            f2(x1),
            f2(y1),
            f2(x2),
            f2(y2),
        ));
    }
    body.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>\n",
        f2(PAD),
        f2(PAD),
        f2(plot),
        f2(plot),
    ));
    body.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">x offset from obstacle center (m), span {}</text>\n",
        f2(PAD),
        f2(h - 8.0),
        f2(2.0 * span),
    ));
    body.push_str(&format!(
        "<text x=\"10\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 10 {})\">vx (m/s)</text>\n",
        f2(PAD + plot / 2.0),
        f2(PAD + plot / 2.0),
    ));
    document(w, h, &body)
}
