//! The subgradient graph of a univariate convex PLQ function as an
//! explicit monotone polyline in the plane.
//!
//! The curve is parameterized by arc length: vertex 0 sits at parameter 0,
//! a ray extends southwest from the first vertex and northeast from the
//! last.  Exact point-to-curve distances drive KKT residuals, graph
//! snapping, and the sampling oracles.

use rand::Rng;

use crate::cone::{Slope, SlopePair};
use crate::plq::UnivariatePlq;

#[derive(Clone, Debug)]
pub struct SubgradientGraph1D {
    /// Kinks and junctions of the curve, ordered southwest to northeast.
    vertices: Vec<[f64; 2]>,
    /// Cumulative arc parameter of each vertex (first is 0).
    params: Vec<f64>,
    /// Unit direction of the outgoing southwest ray.
    sw_dir: [f64; 2],
    /// Unit direction of the outgoing northeast ray.
    ne_dir: [f64; 2],
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

impl SubgradientGraph1D {
    pub fn of(g: &UnivariatePlq) -> Self {
        let g = g.canonical();
        let dom = g.domain();
        if dom.is_point() {
            return SubgradientGraph1D {
                vertices: vec![[dom.lo, 0.0]],
                params: vec![0.0],
                sw_dir: [0.0, -1.0],
                ne_dir: [0.0, 1.0],
            };
        }
        let pieces = g.pieces();
        let mut vertices: Vec<[f64; 2]> = Vec::new();
        let sw_dir = if dom.lo.is_finite() {
            vertices.push([dom.lo, pieces[0].derivative(dom.lo)]);
            [0.0, -1.0]
        } else {
            normalize([-1.0, -pieces[0].quad])
        };
        for i in 0..pieces.len() - 1 {
            let t = pieces[i].hi;
            let d_in = pieces[i].derivative(t);
            let d_out = pieces[i + 1].derivative(t);
            if vertices.last() != Some(&[t, d_in]) {
                vertices.push([t, d_in]);
            }
            // a jump below rounding noise is a slope change, not a
            // vertical segment
            let scale = d_in.abs().max(d_out.abs()).max(1.0);
            if d_out > d_in + 1e-9 * scale {
                vertices.push([t, d_out]);
            }
        }
        let last = pieces.last().unwrap();
        let ne_dir = if dom.hi.is_finite() {
            let v = [dom.hi, last.derivative(dom.hi)];
            if vertices.last() != Some(&v) {
                vertices.push(v);
            }
            [0.0, 1.0]
        } else {
            normalize([1.0, last.quad])
        };
        if vertices.is_empty() {
            // single piece over the whole line: anchor at u = 0
            vertices.push([0.0, pieces[0].derivative(0.0)]);
        }
        let mut params = vec![0.0];
        for i in 1..vertices.len() {
            let p = params[i - 1] + dist2(vertices[i], vertices[i - 1]);
            params.push(p);
        }
        SubgradientGraph1D {
            vertices,
            params,
            sw_dir,
            ne_dir,
        }
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Point on the curve at signed arc parameter `tau`.
    pub fn point_at(&self, tau: f64) -> [f64; 2] {
        if tau <= 0.0 {
            let v = self.vertices[0];
            return [v[0] - tau * self.sw_dir[0], v[1] - tau * self.sw_dir[1]];
        }
        let end = *self.params.last().unwrap();
        if tau >= end {
            let v = *self.vertices.last().unwrap();
            let t = tau - end;
            return [v[0] + t * self.ne_dir[0], v[1] + t * self.ne_dir[1]];
        }
        let i = match self
            .params
            .binary_search_by(|p| p.partial_cmp(&tau).unwrap())
        {
            Ok(i) => return self.vertices[i],
            Err(i) => i - 1,
        };
        let (a, b) = (self.vertices[i], self.vertices[i + 1]);
        let seg = self.params[i + 1] - self.params[i];
        let t = (tau - self.params[i]) / seg;
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Nearest curve point: `(parameter, point, distance)`.
    pub fn nearest(&self, p: [f64; 2]) -> (f64, [f64; 2], f64) {
        let mut best_tau = 0.0;
        let mut best_pt = self.vertices[0];
        let mut best_d = dist2(p, best_pt);
        let mut consider = |tau: f64, pt: [f64; 2], d: f64| {
            if d < best_d {
                best_d = d;
                best_pt = pt;
                best_tau = tau;
            }
        };
        // southwest ray: x = v0 - s * sw, s >= 0 with dir pointing outward
        {
            let v = self.vertices[0];
            let rel = [p[0] - v[0], p[1] - v[1]];
            let s = (rel[0] * self.sw_dir[0] + rel[1] * self.sw_dir[1]).max(0.0);
            let pt = [v[0] + s * self.sw_dir[0], v[1] + s * self.sw_dir[1]];
            consider(-s, pt, dist2(p, pt));
        }
        // interior segments
        for i in 0..self.vertices.len().saturating_sub(1) {
            let (a, b) = (self.vertices[i], self.vertices[i + 1]);
            let ab = [b[0] - a[0], b[1] - a[1]];
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            if len2 == 0.0 {
                continue;
            }
            let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
            let pt = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let tau = self.params[i] + t * (self.params[i + 1] - self.params[i]);
            consider(tau, pt, dist2(p, pt));
        }
        // northeast ray
        {
            let v = *self.vertices.last().unwrap();
            let rel = [p[0] - v[0], p[1] - v[1]];
            let s = (rel[0] * self.ne_dir[0] + rel[1] * self.ne_dir[1]).max(0.0);
            let pt = [v[0] + s * self.ne_dir[0], v[1] + s * self.ne_dir[1]];
            consider(self.params.last().unwrap() + s, pt, dist2(p, pt));
        }
        (best_tau, best_pt, best_d)
    }

    /// Exact Euclidean distance from `p` to the curve.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        self.nearest(p).2
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.distance(p) <= tol
    }

    fn element_dir(&self, index: isize) -> [f64; 2] {
        let nseg = self.vertices.len() as isize - 1;
        if index < 0 {
            // reversed so every direction reads southwest-to-northeast
            [-self.sw_dir[0], -self.sw_dir[1]]
        } else if index >= nseg {
            self.ne_dir
        } else {
            let a = self.vertices[index as usize];
            let b = self.vertices[index as usize + 1];
            normalize([b[0] - a[0], b[1] - a[1]])
        }
    }

    fn slope_of_dir(d: [f64; 2]) -> Slope {
        if d[0] == 0.0 {
            Slope::Infinite
        } else {
            Slope::Finite((d[1] / d[0]).max(0.0))
        }
    }

    /// Slopes of the curve leaving the snapped point southwest and
    /// northeast.  Fails with the true distance if `p` is farther than
    /// `tol` from the curve.
    pub fn slopes_at(&self, p: [f64; 2], tol: f64) -> Result<(SlopePair, [f64; 2]), f64> {
        let (tau, pt, d) = self.nearest(p);
        if d > tol {
            return Err(d);
        }
        // vertex takes priority when within tolerance of it
        let mut at_vertex: Option<usize> = None;
        for (i, &vp) in self.params.iter().enumerate() {
            if dist2(p, self.vertices[i]) <= tol {
                at_vertex = Some(i);
                let _ = vp;
                break;
            }
        }
        match at_vertex {
            Some(i) => {
                let sw = Self::slope_of_dir(self.element_dir(i as isize - 1));
                let ne = Self::slope_of_dir(self.element_dir(i as isize));
                Ok((SlopePair { sw, ne }, self.vertices[i]))
            }
            None => {
                // interior of an element
                let nseg = self.vertices.len() as isize - 1;
                let index = if tau < 0.0 {
                    -1
                } else if tau >= *self.params.last().unwrap() {
                    nseg
                } else {
                    match self
                        .params
                        .binary_search_by(|q| q.partial_cmp(&tau).unwrap())
                    {
                        Ok(i) => i as isize,
                        Err(i) => i as isize - 1,
                    }
                };
                let s = Self::slope_of_dir(self.element_dir(index));
                Ok((SlopePair { sw: s, ne: s }, pt))
            }
        }
    }

    /// Uniform arc-length sample within `radius` of the point at `tau`.
    pub fn sample_arc<R: Rng>(&self, rng: &mut R, tau: f64, radius: f64) -> [f64; 2] {
        let offset: f64 = rng.gen_range(-radius..=radius);
        self.point_at(tau + offset)
    }

    /// Vertices within Euclidean `radius` of `p`.
    pub fn vertices_near(&self, p: [f64; 2], radius: f64) -> Vec<[f64; 2]> {
        self.vertices
            .iter()
            .copied()
            .filter(|v| dist2(*v, p) <= radius)
            .collect()
    }

    /// Distance from `p` to the nearest vertex other than `p` itself;
    /// within this radius the curve coincides with its tangent cone.
    pub fn locality_radius(&self, p: [f64; 2]) -> f64 {
        self.vertices
            .iter()
            .filter(|v| dist2(**v, p) > 1e-12)
            .map(|v| dist2(*v, p))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Slope;

    #[test]
    fn indicator_graph_shape() {
        let g = SubgradientGraph1D::of(&UnivariatePlq::indicator_le_zero());
        assert_eq!(g.vertices(), &[[0.0, 0.0]]);
        assert_eq!(g.sw_dir, [-1.0, 0.0]);
        assert_eq!(g.ne_dir, [0.0, 1.0]);
        // distance of (0, -1) to the graph is 1 (nearest point the corner)
        assert!((g.distance([0.0, -1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(g.distance([-2.0, 0.0]), 0.0);
        assert_eq!(g.distance([0.0, 3.0]), 0.0);
    }

    #[test]
    fn corner_slopes() {
        let g = SubgradientGraph1D::of(&UnivariatePlq::indicator_le_zero());
        let (pair, snapped) = g.slopes_at([0.0, 0.0], 1e-10).unwrap();
        assert_eq!(snapped, [0.0, 0.0]);
        assert_eq!(pair.sw, Slope::Finite(0.0));
        assert_eq!(pair.ne, Slope::Infinite);
    }

    #[test]
    fn quadratic_graph_is_a_line() {
        let g = SubgradientGraph1D::of(&UnivariatePlq::quadratic(1.0));
        let (pair, _) = g.slopes_at([2.0, 2.0], 1e-10).unwrap();
        assert_eq!(pair.sw, Slope::Finite(1.0));
        assert_eq!(pair.ne, Slope::Finite(1.0));
    }

    #[test]
    fn off_graph_reports_distance() {
        let g = SubgradientGraph1D::of(&UnivariatePlq::quadratic(1.0));
        let err = g.slopes_at([0.0, 1.0], 1e-10).unwrap_err();
        assert!((err - (0.5f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn equality_indicator_is_vertical_line() {
        let g = SubgradientGraph1D::of(&UnivariatePlq::indicator_zero());
        let (pair, _) = g.slopes_at([0.0, 5.0], 1e-10).unwrap();
        assert_eq!(pair.sw, Slope::Infinite);
        assert_eq!(pair.ne, Slope::Infinite);
    }

    #[test]
    fn derivative_kink_slopes() {
        // g'(u) = max(u, 0): pieces 0 then u
        let g = UnivariatePlq::new(vec![
            crate::plq::PlqPiece::new(f64::NEG_INFINITY, 0.0, 0.0, 0.0, 0.0),
            crate::plq::PlqPiece::new(0.0, f64::INFINITY, 1.0, 0.0, 0.0),
        ])
        .unwrap();
        let graph = SubgradientGraph1D::of(&g);
        let (pair, _) = graph.slopes_at([0.0, 0.0], 1e-10).unwrap();
        assert_eq!(pair.sw, Slope::Finite(0.0));
        assert_eq!(pair.ne, Slope::Finite(1.0));
    }

    #[test]
    fn arc_walk_round_trip() {
        let g = SubgradientGraph1D::of(&UnivariatePlq::abs());
        // vertices (0,-1) and (0,1); parameter 0 at the bottom one
        assert_eq!(g.point_at(0.0), [0.0, -1.0]);
        assert_eq!(g.point_at(2.0), [0.0, 1.0]);
        assert_eq!(g.point_at(1.0), [0.0, 0.0]);
        assert_eq!(g.point_at(-1.0), [-1.0, -1.0]);
        assert_eq!(g.point_at(3.0), [1.0, 1.0]);
    }
}
