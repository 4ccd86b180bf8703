//! Scatterer shapes, pixel rasterization and boundary meshes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeSpec {
    Disk { center: Point, radius: f64 },
    Ellipse { center: Point, semi_axes: [f64; 2] },
    Polygon { vertices: Vec<Point> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    spec: ShapeSpec,
    corner_angles: Vec<f64>,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(sub(q2, q1), sub(p1, q1));
    let d2 = cross(sub(q2, q1), sub(p2, q1));
    let d3 = cross(sub(p2, p1), sub(q1, p1));
    let d4 = cross(sub(p2, p1), sub(q2, p1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, p: Point, d: f64| {
        d == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

impl Shape {
    pub fn new(spec: ShapeSpec) -> Result<Shape> {
        match spec {
            ShapeSpec::Disk { center, radius } => {
                if !(radius > 0.0) || !radius.is_finite() || !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidShape(format!("disk radius must be positive, got {radius}")));
                }
                Ok(Shape { spec: ShapeSpec::Disk { center, radius }, corner_angles: vec![] })
            }
            ShapeSpec::Ellipse { center, semi_axes } => {
                if !semi_axes.iter().all(|a| *a > 0.0 && a.is_finite()) {
                    return Err(Error::InvalidShape(format!(
                        "ellipse semi-axes must be positive, got {semi_axes:?}"
                    )));
                }
                Ok(Shape { spec: ShapeSpec::Ellipse { center, semi_axes }, corner_angles: vec![] })
            }
            ShapeSpec::Polygon { mut vertices } => {
                let n = vertices.len();
                if n < 3 {
                    return Err(Error::InvalidShape(format!("polygon needs at least 3 vertices, got {n}")));
                }
                if !vertices.iter().flatten().all(|c| c.is_finite()) {
                    return Err(Error::InvalidShape("non-finite vertex".into()));
                }
                for i in 0..n {
                    if norm(sub(vertices[(i + 1) % n], vertices[i])) == 0.0 {
                        return Err(Error::InvalidShape(format!("repeated vertex at index {i}")));
                    }
                }
                for i in 0..n {
                    for j in i + 1..n {
                        let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                        if adjacent {
                            continue;
                        }
                        if segments_intersect(
                            vertices[i],
                            vertices[(i + 1) % n],
                            vertices[j],
                            vertices[(j + 1) % n],
                        ) {
                            return Err(Error::InvalidShape(format!(
                                "polygon is self-intersecting (edges {i} and {j})"
                            )));
                        }
                    }
                }
                let signed: f64 = (0..n).map(|i| cross(vertices[i], vertices[(i + 1) % n])).sum();
                if signed == 0.0 {
                    return Err(Error::InvalidShape("polygon has zero area".into()));
                }
                if signed < 0.0 {
                    vertices.reverse();
                }
                let corner_angles = (0..n)
                    .map(|i| {
                        let e_in = sub(vertices[i], vertices[(i + n - 1) % n]);
                        let e_out = sub(vertices[(i + 1) % n], vertices[i]);
                        PI - cross(e_in, e_out).atan2(dot(e_in, e_out))
                    })
                    .collect();
                Ok(Shape { spec: ShapeSpec::Polygon { vertices }, corner_angles })
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Shape> {
        Shape::new(serde_json::from_str(text)?)
    }

    pub fn disk(center: Point, radius: f64) -> Result<Shape> {
        Shape::new(ShapeSpec::Disk { center, radius })
    }

    pub fn ellipse(center: Point, semi_axes: [f64; 2]) -> Result<Shape> {
        Shape::new(ShapeSpec::Ellipse { center, semi_axes })
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Shape> {
        Shape::new(ShapeSpec::Polygon { vertices })
    }

    pub fn unit_square() -> Shape {
        Shape::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    pub fn equilateral_triangle() -> Shape {
        Shape::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.75_f64.sqrt()]]).unwrap()
    }

    /// Right trapezoid with interior angles π/2, π/3, 2π/3, π/2.
    pub fn right_trapezoid() -> Shape {
        let b = 1.0 + 1.0 / 3.0_f64.sqrt();
        Shape::polygon(vec![[0.0, 0.0], [b, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    /// Unit square with the upper right quadrant removed.
    pub fn l_shape() -> Shape {
        Shape::polygon(vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.5],
            [0.5, 0.5],
            [0.5, 1.0],
            [0.0, 1.0],
        ])
        .unwrap()
    }

    /// Shapes addressable by name from the command line.
    pub fn named(name: &str) -> Result<Shape> {
        match name {
            "disk" => Shape::disk([0.0, 0.0], 1.0),
            "ellipse" => Shape::ellipse([0.0, 0.0], [1.0, 0.6]),
            "square" => Ok(Shape::unit_square()),
            "triangle" => Ok(Shape::equilateral_triangle()),
            "trapezoid" => Ok(Shape::right_trapezoid()),
            "lshape" => Ok(Shape::l_shape()),
            other => Err(Error::InvalidShape(format!(
                "unknown shape '{other}' (expected disk, ellipse, square, triangle, trapezoid, lshape)"
            ))),
        }
    }

    pub fn spec(&self) -> &ShapeSpec {
        &self.spec
    }

    pub fn kind(&self) -> &'static str {
        match self.spec {
            ShapeSpec::Disk { .. } => "disk",
            ShapeSpec::Ellipse { .. } => "ellipse",
            ShapeSpec::Polygon { .. } => "polygon",
        }
    }

    pub fn corner_angles(&self) -> &[f64] {
        &self.corner_angles
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self.spec, ShapeSpec::Polygon { .. })
    }

    pub fn contains(&self, p: Point) -> bool {
        match &self.spec {
            ShapeSpec::Disk { center, radius } => {
                let d = sub(p, *center);
                dot(d, d) < radius * radius
            }
            ShapeSpec::Ellipse { center, semi_axes } => {
                let d = sub(p, *center);
                (d[0] / semi_axes[0]).powi(2) + (d[1] / semi_axes[1]).powi(2) < 1.0
            }
            ShapeSpec::Polygon { vertices } => {
                let n = vertices.len();
                let mut inside = false;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.spec {
            ShapeSpec::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            ShapeSpec::Ellipse { center, semi_axes } => (
                [center[0] - semi_axes[0], center[1] - semi_axes[1]],
                [center[0] + semi_axes[0], center[1] + semi_axes[1]],
            ),
            ShapeSpec::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for d in 0..2 {
                        lo[d] = lo[d].min(v[d]);
                        hi[d] = hi[d].max(v[d]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.spec {
            ShapeSpec::Disk { radius, .. } => 2.0 * radius,
            ShapeSpec::Ellipse { semi_axes, .. } => 2.0 * semi_axes[0].max(semi_axes[1]),
            ShapeSpec::Polygon { vertices } => {
                let mut d: f64 = 0.0;
                for a in vertices {
                    for b in vertices {
                        d = d.max(norm(sub(*a, *b)));
                    }
                }
                d
            }
        }
    }

    pub fn area(&self) -> f64 {
        match &self.spec {
            ShapeSpec::Disk { radius, .. } => PI * radius * radius,
            ShapeSpec::Ellipse { semi_axes, .. } => PI * semi_axes[0] * semi_axes[1],
            ShapeSpec::Polygon { vertices } => {
                let n = vertices.len();
                0.5 * (0..n).map(|i| cross(vertices[i], vertices[(i + 1) % n])).sum::<f64>()
            }
        }
    }

    pub fn perimeter(&self) -> f64 {
        match &self.spec {
            ShapeSpec::Disk { radius, .. } => 2.0 * PI * radius,
            ShapeSpec::Ellipse { semi_axes: [a, b], .. } => {
                // Trapezoidal rule is spectrally accurate for the periodic speed.
                let n = 4096;
                (0..n)
                    .map(|j| {
                        let t = 2.0 * PI * j as f64 / n as f64;
                        (a * t.sin()).hypot(b * t.cos())
                    })
                    .sum::<f64>()
                    * 2.0
                    * PI
                    / n as f64
            }
            ShapeSpec::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).map(|i| norm(sub(vertices[(i + 1) % n], vertices[i]))).sum()
            }
        }
    }

    pub fn centroid(&self) -> Point {
        match &self.spec {
            ShapeSpec::Disk { center, .. } | ShapeSpec::Ellipse { center, .. } => *center,
            ShapeSpec::Polygon { vertices } => {
                let n = vertices.len();
                let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    let p = vertices[i];
                    let q = vertices[(i + 1) % n];
                    let c = cross(p, q);
                    a += c;
                    cx += (p[0] + q[0]) * c;
                    cy += (p[1] + q[1]) * c;
                }
                [cx / (3.0 * a), cy / (3.0 * a)]
            }
        }
    }

    /// Copy scaled by `s` about the origin.
    pub fn scaled(&self, s: f64) -> Result<Shape> {
        let sp = |p: &Point| [p[0] * s, p[1] * s];
        Shape::new(match &self.spec {
            ShapeSpec::Disk { center, radius } => ShapeSpec::Disk { center: sp(center), radius: radius * s },
            ShapeSpec::Ellipse { center, semi_axes } => ShapeSpec::Ellipse {
                center: sp(center),
                semi_axes: [semi_axes[0] * s, semi_axes[1] * s],
            },
            ShapeSpec::Polygon { vertices } => ShapeSpec::Polygon { vertices: vertices.iter().map(sp).collect() },
        })
    }
}

/// Uniform grid covering a shape. Cells are indexed `i * ny + j` with `i` along x.
///
/// Besides the per-cell volume fraction the grid stores the fraction of the
/// dual cell around every edge: `edge_x[i * (ny + 1) + j]` belongs to the
/// bottom edge of cell (i, j), `edge_y[i * ny + j]` to its left edge.
#[derive(Clone, Debug)]
pub struct PixelGrid {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub indicator: Vec<f64>,
    pub edge_x: Vec<f64>,
    pub edge_y: Vec<f64>,
    pub sharp: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct RasterOptions {
    pub subsamples: usize,
    pub sharp: bool,
}

impl Default for RasterOptions {
    fn default() -> Self {
        RasterOptions { subsamples: 8, sharp: false }
    }
}

fn sampled_fraction(shape: &Shape, center: Point, h: f64, s: usize) -> f64 {
    let mut hits = 0usize;
    for a in 0..s {
        let x = center[0] + h * ((a as f64 + 0.5) / s as f64 - 0.5);
        for b in 0..s {
            let y = center[1] + h * ((b as f64 + 0.5) / s as f64 - 0.5);
            if shape.contains([x, y]) {
                hits += 1;
            }
        }
    }
    hits as f64 / (s * s) as f64
}

pub fn rasterize(shape: &Shape, nx: usize, margin: f64) -> Result<PixelGrid> {
    rasterize_with(shape, nx, margin, RasterOptions::default())
}

/// Grid of `nx` cells across the bounding box plus `margin` on each side.
/// The margin is raised to two cells when smaller.
pub fn rasterize_with(shape: &Shape, nx: usize, margin: f64, opts: RasterOptions) -> Result<PixelGrid> {
    if nx < 8 {
        return Err(Error::InvalidInput(format!("rasterize needs nx >= 8, got {nx}")));
    }
    if opts.subsamples == 0 {
        return Err(Error::InvalidInput("subsamples must be positive".into()));
    }
    let (lo, hi) = shape.bounding_box();
    let width = hi[0] - lo[0];
    let height = hi[1] - lo[1];
    let mut h = (width + 2.0 * margin.max(0.0)) / nx as f64;
    let mut m = margin.max(0.0);
    if m < 2.0 * h {
        h = width / (nx as f64 - 4.0);
        m = 2.0 * h;
    }
    let ny = ((height + 2.0 * m) / h - 1e-9).ceil().max(1.0) as usize;
    let origin = [lo[0] - m, 0.5 * (lo[1] + hi[1]) - 0.5 * ny as f64 * h];
    let cell_center = |i: usize, j: usize| [origin[0] + (i as f64 + 0.5) * h, origin[1] + (j as f64 + 0.5) * h];

    let mut indicator = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let c = cell_center(i, j);
            indicator[i * ny + j] = if opts.sharp {
                if shape.contains(c) { 1.0 } else { 0.0 }
            } else {
                sampled_fraction(shape, c, h, opts.subsamples)
            };
        }
    }
    let cell = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
            0.0
        } else {
            indicator[i as usize * ny + j as usize]
        }
    };
    let mut edge_x = vec![0.0; nx * (ny + 1)];
    for i in 0..nx {
        for j in 0..=ny {
            edge_x[i * (ny + 1) + j] = if opts.sharp {
                0.5 * (cell(i as isize, j as isize) + cell(i as isize, j as isize - 1))
            } else {
                let c = [origin[0] + (i as f64 + 0.5) * h, origin[1] + j as f64 * h];
                sampled_fraction(shape, c, h, opts.subsamples)
            };
        }
    }
    let mut edge_y = vec![0.0; (nx + 1) * ny];
    for i in 0..=nx {
        for j in 0..ny {
            edge_y[i * ny + j] = if opts.sharp {
                0.5 * (cell(i as isize, j as isize) + cell(i as isize - 1, j as isize))
            } else {
                let c = [origin[0] + i as f64 * h, origin[1] + (j as f64 + 0.5) * h];
                sampled_fraction(shape, c, h, opts.subsamples)
            };
        }
    }
    if indicator.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("shape does not intersect any grid cell".into()));
    }
    Ok(PixelGrid { origin, h, nx, ny, indicator, edge_x, edge_y, sharp: opts.sharp })
}

impl PixelGrid {
    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        [self.origin[0] + (i as f64 + 0.5) * self.h, self.origin[1] + (j as f64 + 0.5) * self.h]
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    /// Midpoint of the bottom edge of cell (i, j), where x-components live.
    pub fn edge_x_mid(&self, i: usize, j: usize) -> Point {
        [self.origin[0] + (i as f64 + 0.5) * self.h, self.origin[1] + j as f64 * self.h]
    }

    /// Midpoint of the left edge of cell (i, j), where y-components live.
    pub fn edge_y_mid(&self, i: usize, j: usize) -> Point {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + (j as f64 + 0.5) * self.h]
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn area(&self) -> f64 {
        self.indicator.iter().sum::<f64>() * self.h * self.h
    }
}

/// Quadrature on Γ. Polygon meshes are collocation panels (one node at each
/// panel midpoint); smooth boundaries use the equispaced trapezoidal rule.
#[derive(Clone, Debug)]
pub struct BoundaryMesh {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub normals: Vec<Point>,
    pub tangents: Vec<Point>,
    /// Panel endpoints (polygons only).
    pub panels: Option<Vec<[Point; 2]>>,
    /// Signed curvature at the nodes (zero on flat panels).
    pub curvature: Vec<f64>,
    /// Distance from each node to the nearest corner (infinite on smooth boundaries).
    pub corner_distance: Vec<f64>,
    /// Arclength coordinate of each node, starting at the first panel.
    pub arclength: Vec<f64>,
    pub perimeter: f64,
    pub grading: f64,
}

pub fn boundary_mesh(shape: &Shape, n_panels: usize, q: f64) -> Result<BoundaryMesh> {
    if n_panels < 16 {
        return Err(Error::InvalidInput(format!("boundary mesh needs at least 16 panels, got {n_panels}")));
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidInput(format!("grading exponent must be >= 1, got {q}")));
    }
    match shape.spec() {
        ShapeSpec::Disk { center, radius } => Ok(smooth_mesh(n_panels, |t| {
            let (s, c) = t.sin_cos();
            (
                [center[0] + radius * c, center[1] + radius * s],
                [-radius * s, radius * c],
                [-radius * c, -radius * s],
            )
        })),
        ShapeSpec::Ellipse { center, semi_axes: [a, b] } => Ok(smooth_mesh(n_panels, |t| {
            let (s, c) = t.sin_cos();
            ([center[0] + a * c, center[1] + b * s], [-a * s, b * c], [-a * c, -b * s])
        })),
        ShapeSpec::Polygon { vertices } => Ok(polygon_mesh(vertices, n_panels, q)),
    }
}

fn smooth_mesh<F>(n: usize, curve: F) -> BoundaryMesh
where
    F: Fn(f64) -> (Point, Point, Point),
{
    let dt = 2.0 * PI / n as f64;
    let mut m = BoundaryMesh {
        nodes: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        tangents: Vec::with_capacity(n),
        panels: None,
        curvature: Vec::with_capacity(n),
        corner_distance: vec![f64::INFINITY; n],
        arclength: Vec::with_capacity(n),
        perimeter: 0.0,
        grading: 1.0,
    };
    let mut s = 0.0;
    for j in 0..n {
        let t = dt * (j as f64 + 0.5);
        let (x, d1, d2) = curve(t);
        let speed = norm(d1);
        let tau = [d1[0] / speed, d1[1] / speed];
        m.nodes.push(x);
        m.weights.push(speed * dt);
        m.tangents.push(tau);
        m.normals.push([tau[1], -tau[0]]);
        m.curvature.push(cross(d1, d2) / speed.powi(3));
        m.arclength.push(s + 0.5 * speed * dt);
        s += speed * dt;
    }
    m.perimeter = s;
    m
}

fn polygon_mesh(vertices: &[Point], n: usize, q: f64) -> BoundaryMesh {
    let nv = vertices.len();
    let lens: Vec<f64> = (0..nv).map(|e| norm(sub(vertices[(e + 1) % nv], vertices[e]))).collect();
    let perimeter: f64 = lens.iter().sum();
    let mut m = BoundaryMesh {
        nodes: vec![],
        weights: vec![],
        normals: vec![],
        tangents: vec![],
        panels: Some(vec![]),
        curvature: vec![],
        corner_distance: vec![],
        arclength: vec![],
        perimeter,
        grading: q,
    };
    let mut s0 = 0.0;
    for e in 0..nv {
        let a = vertices[e];
        let len = lens[e];
        let tau = [(vertices[(e + 1) % nv][0] - a[0]) / len, (vertices[(e + 1) % nv][1] - a[1]) / len];
        let normal = [tau[1], -tau[0]];
        let half = ((n as f64 * len / perimeter / 2.0).round() as usize).max(1);
        let mut breaks: Vec<f64> = (0..=half).map(|k| (k as f64 / half as f64).powf(q) * 0.5 * len).collect();
        for k in (0..half).rev() {
            breaks.push(len - breaks[k]);
        }
        for w in breaks.windows(2) {
            let p0 = [a[0] + w[0] * tau[0], a[1] + w[0] * tau[1]];
            let p1 = [a[0] + w[1] * tau[0], a[1] + w[1] * tau[1]];
            let mid = 0.5 * (w[0] + w[1]);
            m.nodes.push([0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1])]);
            m.weights.push(w[1] - w[0]);
            m.tangents.push(tau);
            m.normals.push(normal);
            m.curvature.push(0.0);
            m.corner_distance.push(mid.min(len - mid));
            m.arclength.push(s0 + mid);
            m.panels.as_mut().unwrap().push([p0, p1]);
        }
        s0 += len;
    }
    m
}

impl BoundaryMesh {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_polygonal(&self) -> bool {
        self.panels.is_some()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled(&self, s: f64) -> BoundaryMesh {
        let sp = |p: &Point| [p[0] * s, p[1] * s];
        BoundaryMesh {
            nodes: self.nodes.iter().map(sp).collect(),
            weights: self.weights.iter().map(|w| w * s).collect(),
            normals: self.normals.clone(),
            tangents: self.tangents.clone(),
            panels: self.panels.as_ref().map(|p| p.iter().map(|[a, b]| [sp(a), sp(b)]).collect()),
            curvature: self.curvature.iter().map(|k| k / s).collect(),
            corner_distance: self.corner_distance.iter().map(|d| d * s).collect(),
            arclength: self.arclength.iter().map(|a| a * s).collect(),
            perimeter: self.perimeter * s,
            grading: self.grading,
        }
    }
}
