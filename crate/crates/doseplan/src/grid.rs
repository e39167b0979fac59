//! Spatial mesh, region geometry, and the source-cap field `U(x)`.
//!
//! The domain is `Z = [-1,1] × [-1,1]`. Cells are labeled tumor, risk, or
//! normal by the position of their center in the target-case rectangles;
//! a separate flag marks the void annulus `0.8 ≤ |x| ≤ 0.9`. Material
//! lookup uses the void flag, objective weights use the tissue label.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DOMAIN_MIN: f64 = -1.0;
pub const DOMAIN_MAX: f64 = 1.0;

/// Inner and outer radius of the void annulus.
pub const VOID_INNER: f64 = 0.8;
pub const VOID_OUTER: f64 = 0.9;

/// Uniform Cartesian mesh over `[-1,1]²`, indexed row-major (y outer, x inner).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Grid {
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Center of cell `(i, j)`: `(-1 + (i+½)dx, -1 + (j+½)dy)`.
    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            DOMAIN_MIN + (i as f64 + 0.5) * self.dx,
            DOMAIN_MIN + (j as f64 + 0.5) * self.dy,
        )
    }

    /// Iterate cell indices with centers, row-major.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, usize, f64, f64)> + '_ {
        let g = *self;
        (0..g.ny).flat_map(move |j| {
            (0..g.nx).map(move |i| {
                let (x, y) = g.cell_center(i, j);
                (g.idx(i, j), i, j, x, y)
            })
        })
    }
}

/// Builds the uniform mesh; `dx = 2/nx`, `dy = 2/ny`.
pub fn build_grid(nx: usize, ny: usize) -> Result<Grid> {
    if nx < 2 || ny < 2 {
        return Err(Error::Grid(format!(
            "cell counts must be at least 2, got nx = {nx}, ny = {ny}"
        )));
    }
    Ok(Grid {
        nx,
        ny,
        dx: (DOMAIN_MAX - DOMAIN_MIN) / nx as f64,
        dy: (DOMAIN_MAX - DOMAIN_MIN) / ny as f64,
    })
}

/// Tissue label; the labels partition the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tissue {
    Tumor,
    Risk,
    Normal,
}

impl Tissue {
    /// Stable integer code used by the CSV export.
    pub fn code(self) -> i64 {
        match self {
            Tissue::Tumor => 1,
            Tissue::Risk => 2,
            Tissue::Normal => 0,
        }
    }

    pub fn from_code(code: i64) -> Option<Tissue> {
        match code {
            1 => Some(Tissue::Tumor),
            2 => Some(Tissue::Risk),
            0 => Some(Tissue::Normal),
            _ => None,
        }
    }
}

/// The three target geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetCase {
    Basic,
    Intermediate,
    Complex,
}

/// Axis-aligned closed rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Rect {
        Rect { x0, x1, y0, y1 }
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Tumor and risk rectangles defining one target case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRects {
    pub tumor: Vec<Rect>,
    pub risk: Vec<Rect>,
}

impl TargetCase {
    /// Default region rectangles for each case.
    pub fn rects(self) -> RegionRects {
        match self {
            TargetCase::Basic => RegionRects {
                tumor: vec![Rect::new(-0.25, 0.25, -0.25, 0.25)],
                risk: vec![Rect::new(0.254, 0.379, -0.125, 0.125)],
            },
            TargetCase::Intermediate => RegionRects {
                tumor: vec![
                    Rect::new(-0.25, 0.25, -0.25, 0.0),
                    Rect::new(-0.25, 0.0, 0.0, 0.25),
                ],
                risk: vec![Rect::new(0.04, 0.25, 0.04, 0.25)],
            },
            TargetCase::Complex => RegionRects {
                tumor: vec![
                    Rect::new(-0.25, 0.25, -0.25, -0.125),
                    Rect::new(-0.25, 0.25, 0.125, 0.25),
                    Rect::new(0.04, 0.25, -0.125, 0.125),
                ],
                risk: vec![Rect::new(-0.25, -0.04, -0.121, 0.121)],
            },
        }
    }
}

/// Per-cell tissue labels plus the void flag.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub labels: Vec<Tissue>,
    pub void: Vec<bool>,
}

impl RegionMap {
    pub fn n_cells(&self) -> usize {
        self.labels.len()
    }

    /// Indicator field (1.0 on `tissue` cells) for building cell densities.
    pub fn indicator(&self, tissue: Tissue) -> Vec<f64> {
        self.labels
            .iter()
            .map(|&l| if l == tissue { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn count(&self, tissue: Tissue) -> usize {
        self.labels.iter().filter(|&&l| l == tissue).count()
    }
}

/// Labels cells by membership of their center in the target rectangles.
///
/// Tumor takes precedence over risk where rectangles overlap (they do not
/// in the default geometries); cells in no rectangle are normal. The void
/// flag is set from the center radius alone and overlaps the tissue label.
pub fn classify_regions(grid: &Grid, case: TargetCase) -> RegionMap {
    classify_regions_with(grid, &case.rects())
}

/// Same as [`classify_regions`] with explicit rectangles.
pub fn classify_regions_with(grid: &Grid, rects: &RegionRects) -> RegionMap {
    let n = grid.n_cells();
    let mut labels = vec![Tissue::Normal; n];
    let mut void = vec![false; n];
    for (k, _, _, x, y) in grid.cells() {
        if rects.tumor.iter().any(|r| r.contains(x, y)) {
            labels[k] = Tissue::Tumor;
        } else if rects.risk.iter().any(|r| r.contains(x, y)) {
            labels[k] = Tissue::Risk;
        }
        let r = (x * x + y * y).sqrt();
        void[k] = (VOID_INNER..=VOID_OUTER).contains(&r);
    }
    RegionMap { labels, void }
}

/// Domain edges on which the source cap may be blocked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
    Top,
    Bottom,
}

pub const ALL_EDGES: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Top, Edge::Bottom];

/// Per-cell source cap `U(x)`: `q_max` within `eps` of an unblocked edge,
/// `delta` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceCapField {
    pub values: Vec<f64>,
    pub q_max: f64,
    pub eps: f64,
    pub delta: f64,
    pub blocked: Vec<Edge>,
}

fn edge_distance(edge: Edge, x: f64, y: f64) -> f64 {
    match edge {
        Edge::Left => x - DOMAIN_MIN,
        Edge::Right => DOMAIN_MAX - x,
        Edge::Bottom => y - DOMAIN_MIN,
        Edge::Top => DOMAIN_MAX - y,
    }
}

/// Builds `U(x)`. Cells within `eps` of the nearest unblocked edge get
/// `q_max`; everything else, including the strip adjacent to a blocked
/// edge, gets `delta`.
pub fn source_cap(
    grid: &Grid,
    q_max: f64,
    eps: f64,
    delta: f64,
    blocked: &[Edge],
) -> Result<SourceCapField> {
    if !(q_max > delta && delta > 0.0) {
        return Err(Error::Config(format!(
            "source cap requires q_max > delta > 0, got q_max = {q_max}, delta = {delta}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Config(format!("source cap requires eps > 0, got {eps}")));
    }
    let active: Vec<Edge> = ALL_EDGES
        .iter()
        .copied()
        .filter(|e| !blocked.contains(e))
        .collect();
    if active.is_empty() {
        return Err(Error::Config(
            "all four edges blocked: empty active boundary".into(),
        ));
    }
    let mut values = vec![delta; grid.n_cells()];
    for (k, _, _, x, y) in grid.cells() {
        let d = active
            .iter()
            .map(|&e| edge_distance(e, x, y))
            .fold(f64::INFINITY, f64::min);
        if d <= eps {
            values[k] = q_max;
        }
    }
    Ok(SourceCapField {
        values,
        q_max,
        eps,
        delta,
        blocked: blocked.to_vec(),
    })
}

/// Default near-edge strip width: one cell.
pub fn default_eps(grid: &Grid) -> f64 {
    grid.dx.min(grid.dy)
}

/// Default interior cap level.
pub fn default_delta(grid: &Grid) -> f64 {
    1e-4 * grid.dx.min(grid.dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cell_at(grid: &Grid, x: f64, y: f64) -> usize {
        let i = ((x - DOMAIN_MIN) / grid.dx).floor() as usize;
        let j = ((y - DOMAIN_MIN) / grid.dy).floor() as usize;
        grid.idx(i.min(grid.nx - 1), j.min(grid.ny - 1))
    }

    #[test]
    fn build_grid_paper_resolution() {
        let g = build_grid(100, 100).unwrap();
        assert_eq!(g.n_cells(), 10_000);
        assert_relative_eq!(g.dx, 0.02);
        assert_relative_eq!(g.dy, 0.02);
        for (_, _, _, x, y) in g.cells() {
            assert!(x > DOMAIN_MIN && x < DOMAIN_MAX);
            assert!(y > DOMAIN_MIN && y < DOMAIN_MAX);
        }
    }

    #[test]
    fn build_grid_two_by_two_centers() {
        let g = build_grid(2, 2).unwrap();
        assert_eq!(g.n_cells(), 4);
        let centers: Vec<_> = g.cells().map(|(_, _, _, x, y)| (x, y)).collect();
        assert_eq!(centers, vec![(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)]);
    }

    #[test]
    fn build_grid_anisotropic() {
        let g = build_grid(100, 50).unwrap();
        assert_relative_eq!(g.dx, 0.02);
        assert_relative_eq!(g.dy, 0.04);
    }

    #[test]
    fn build_grid_rejects_small_counts() {
        assert!(build_grid(1, 10).is_err());
        assert!(build_grid(10, 0).is_err());
    }

    #[test]
    fn classify_basic_center_is_tumor() {
        let g = build_grid(100, 100).unwrap();
        let m = classify_regions(&g, TargetCase::Basic);
        assert_eq!(m.labels[cell_at(&g, 0.0, 0.0)], Tissue::Tumor);
    }

    #[test]
    fn classify_void_annulus() {
        let g = build_grid(100, 100).unwrap();
        for case in [TargetCase::Basic, TargetCase::Intermediate, TargetCase::Complex] {
            let m = classify_regions(&g, case);
            let k = cell_at(&g, 0.85, 0.0);
            assert!(m.void[k]);
            assert_eq!(m.labels[k], Tissue::Normal);
        }
    }

    #[test]
    fn classify_intermediate_risk() {
        let g = build_grid(100, 100).unwrap();
        let m = classify_regions(&g, TargetCase::Intermediate);
        assert_eq!(m.labels[cell_at(&g, 0.1, 0.1)], Tissue::Risk);
    }

    #[test]
    fn classify_complex_risk() {
        let g = build_grid(100, 100).unwrap();
        let m = classify_regions(&g, TargetCase::Complex);
        assert_eq!(m.labels[cell_at(&g, -0.1, 0.0)], Tissue::Risk);
    }

    #[test]
    fn classify_is_deterministic() {
        let g = build_grid(60, 60).unwrap();
        let a = classify_regions(&g, TargetCase::Complex);
        let b = classify_regions(&g, TargetCase::Complex);
        assert_eq!(a, b);
    }

    #[test]
    fn region_areas_converge() {
        // Basic tumor rectangle has exact area 0.25; the rasterized area
        // must be within one ring of boundary cells at each resolution and
        // converge under refinement.
        let exact = 0.25;
        let mut errs = Vec::new();
        for n in [50, 100, 200] {
            let g = build_grid(n, n).unwrap();
            let m = classify_regions(&g, TargetCase::Basic);
            let area = m.count(Tissue::Tumor) as f64 * g.cell_area();
            let err = (area - exact).abs();
            // one cell ring around a 0.5 x 0.5 square
            let ring = 4.0 * 0.5 * g.dx + 4.0 * g.cell_area();
            assert!(err <= ring, "n = {n}: err = {err}, ring = {ring}");
            errs.push(err);
        }
        assert!(errs[2] <= errs[0]);
    }

    #[test]
    fn source_cap_interior_is_delta() {
        let g = build_grid(100, 100).unwrap();
        let cap = source_cap(&g, 10.0, default_eps(&g), 1e-4, &[]).unwrap();
        assert_eq!(cap.values[cell_at(&g, 0.0, 0.0)], 1e-4);
    }

    #[test]
    fn source_cap_boundary_strip_is_q_max() {
        let g = build_grid(40, 40).unwrap();
        let cap = source_cap(&g, 10.0, default_eps(&g), 1e-4, &[]).unwrap();
        // every cell touching the boundary carries q_max
        for (k, i, j, _, _) in g.cells() {
            let on_edge = i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1;
            if on_edge {
                assert_eq!(cap.values[k], 10.0);
            }
        }
        // values are exactly q_max or delta
        assert!(cap.values.iter().all(|&v| v == 10.0 || v == 1e-4));
    }

    #[test]
    fn source_cap_blocked_left_edge() {
        let g = build_grid(40, 40).unwrap();
        let cap = source_cap(&g, 10.0, default_eps(&g), 1e-4, &[Edge::Left]).unwrap();
        // left-edge cells away from top/bottom corners fall back to delta
        for j in 1..g.ny - 1 {
            assert_eq!(cap.values[g.idx(0, j)], 1e-4);
        }
        // right edge still active
        assert_eq!(cap.values[g.idx(g.nx - 1, g.ny / 2)], 10.0);
    }

    #[test]
    fn source_cap_rejects_all_blocked() {
        let g = build_grid(10, 10).unwrap();
        assert!(source_cap(&g, 10.0, 0.2, 1e-4, &ALL_EDGES).is_err());
    }

    #[test]
    fn source_cap_rejects_bad_levels() {
        let g = build_grid(10, 10).unwrap();
        assert!(source_cap(&g, 1.0, 0.2, 2.0, &[]).is_err());
        assert!(source_cap(&g, 1.0, 0.2, 0.0, &[]).is_err());
        assert!(source_cap(&g, 1.0, 0.0, 0.5, &[]).is_err());
    }
}
