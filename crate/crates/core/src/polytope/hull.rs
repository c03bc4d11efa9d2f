//! Convex hulls in two and three dimensions.

use crate::error::{Error, Result};

/// Facet plane `normal . x <= offset` with unit normal.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Plane<const D: usize> {
    pub normal: [f64; D],
    pub offset: f64,
}

fn scale_of<const D: usize>(points: &[[f64; D]]) -> f64 {
    points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0_f64, |a, x| a.max(x.abs()))
        .max(1.0)
}

/// Removes points closer than `tol` (scaled) to an earlier point.
pub(crate) fn dedup<const D: usize>(points: &[[f64; D]], tol: f64) -> Vec<[f64; D]> {
    let scale = scale_of(points);
    let mut out: Vec<[f64; D]> = Vec::with_capacity(points.len());
    for p in points {
        let dup = out.iter().any(|q| {
            p.iter()
                .zip(q.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
                <= tol * scale
        });
        if !dup {
            out.push(*p);
        }
    }
    out
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull vertices (Andrew's monotone chain), collinear
/// points dropped.
pub(crate) fn hull2(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let mut pts = dedup(points, 1e-12);
    if pts.len() < 3 {
        return Err(Error::HullDegenerate);
    }
    let eps = 1e-12 * scale_of(&pts).powi(2);
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross2(lower[lower.len() - 2], lower[lower.len() - 1], *p) <= eps {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(upper[upper.len() - 2], upper[upper.len() - 1], *p) <= eps {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(Error::HullDegenerate);
    }
    Ok(lower)
}

pub(crate) fn hull2_planes(points: &[[f64; 2]]) -> Result<(Vec<[f64; 2]>, Vec<Plane<2>>)> {
    let verts = hull2(points)?;
    let k = verts.len();
    let planes = (0..k)
        .map(|i| {
            let a = verts[i];
            let b = verts[(i + 1) % k];
            // outward normal of a CCW edge
            let (nx, ny) = (b[1] - a[1], a[0] - b[0]);
            let len = (nx * nx + ny * ny).sqrt();
            let normal = [nx / len, ny / len];
            Plane {
                normal,
                offset: normal[0] * a[0] + normal[1] * a[1],
            }
        })
        .collect();
    Ok((verts, planes))
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    normal: [f64; 3],
    offset: f64,
    alive: bool,
}

impl Face {
    fn new(pts: &[[f64; 3]], v: [usize; 3]) -> Self {
        let n = cross3(sub3(pts[v[1]], pts[v[0]]), sub3(pts[v[2]], pts[v[0]]));
        let len = norm3(n);
        let normal = [n[0] / len, n[1] / len, n[2] / len];
        Face {
            v,
            normal,
            offset: dot3(normal, pts[v[0]]),
            alive: true,
        }
    }

    fn dist(&self, p: [f64; 3]) -> f64 {
        dot3(self.normal, p) - self.offset
    }
}

/// Triangulated 3-D hull: deduplicated points and outward triangles.
pub(crate) struct Hull3 {
    pub points: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub planes: Vec<Plane<3>>,
}

/// Incremental 3-D hull. Coplanar triangles are merged into one facet plane.
pub(crate) fn hull3(points: &[[f64; 3]]) -> Result<Hull3> {
    let pts = dedup(points, 1e-12);
    if pts.len() < 4 {
        return Err(Error::HullDegenerate);
    }
    let scale = scale_of(&pts);
    let eps = 1e-10 * scale;

    // initial tetrahedron from extreme points
    let i0 = 0;
    let i1 = (0..pts.len())
        .max_by(|&a, &b| norm3(sub3(pts[a], pts[i0])).total_cmp(&norm3(sub3(pts[b], pts[i0]))))
        .unwrap();
    let dir = sub3(pts[i1], pts[i0]);
    if norm3(dir) <= eps {
        return Err(Error::HullDegenerate);
    }
    let line_dist = |p: [f64; 3]| norm3(cross3(sub3(p, pts[i0]), dir)) / norm3(dir);
    let i2 = (0..pts.len())
        .max_by(|&a, &b| line_dist(pts[a]).total_cmp(&line_dist(pts[b])))
        .unwrap();
    if line_dist(pts[i2]) <= eps {
        return Err(Error::HullDegenerate);
    }
    let n012 = cross3(dir, sub3(pts[i2], pts[i0]));
    let plane_dist = |p: [f64; 3]| dot3(n012, sub3(p, pts[i0])) / norm3(n012);
    let i3 = (0..pts.len())
        .max_by(|&a, &b| plane_dist(pts[a]).abs().total_cmp(&plane_dist(pts[b]).abs()))
        .unwrap();
    if plane_dist(pts[i3]).abs() <= eps {
        return Err(Error::HullDegenerate);
    }

    let centroid = {
        let s = [i0, i1, i2, i3].iter().fold([0.0; 3], |acc, &i| {
            [acc[0] + pts[i][0], acc[1] + pts[i][1], acc[2] + pts[i][2]]
        });
        [s[0] / 4.0, s[1] / 4.0, s[2] / 4.0]
    };
    let mut faces: Vec<Face> = Vec::new();
    for tri in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        let mut f = Face::new(&pts, tri);
        if f.dist(centroid) > 0.0 {
            f = Face::new(&pts, [tri[0], tri[2], tri[1]]);
        }
        faces.push(f);
    }

    for (pi, &p) in pts.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&pi) {
            continue;
        }
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive && f.dist(p) > eps)
            .map(|(i, _)| i)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &fi in &visible {
            let v = faces[fi].v;
            edges.extend([(v[0], v[1]), (v[1], v[2]), (v[2], v[0])]);
        }
        let horizon: Vec<(usize, usize)> = edges
            .iter()
            .filter(|(a, b)| !edges.contains(&(*b, *a)))
            .cloned()
            .collect();
        for &fi in &visible {
            faces[fi].alive = false;
        }
        for (a, b) in horizon {
            faces.push(Face::new(&pts, [a, b, pi]));
        }
    }

    let live: Vec<&Face> = faces.iter().filter(|f| f.alive).collect();
    let triangles = live.iter().map(|f| f.v).collect();
    let mut planes: Vec<Plane<3>> = Vec::new();
    for f in &live {
        let same = planes.iter().any(|pl| {
            dot3(pl.normal, f.normal) > 1.0 - 1e-9 && (pl.offset - f.offset).abs() <= 1e-9 * scale
        });
        if !same {
            planes.push(Plane {
                normal: f.normal,
                offset: f.offset,
            });
        }
    }
    Ok(Hull3 {
        points: pts,
        triangles,
        planes,
    })
}

impl Hull3 {
    /// Enclosed volume by signed tetrahedra about an interior point.
    pub fn volume(&self) -> f64 {
        let used: Vec<usize> = {
            let mut u: Vec<usize> = self.triangles.iter().flat_map(|t| t.iter().cloned()).collect();
            u.sort_unstable();
            u.dedup();
            u
        };
        let c = used.iter().fold([0.0; 3], |acc, &i| {
            [
                acc[0] + self.points[i][0],
                acc[1] + self.points[i][1],
                acc[2] + self.points[i][2],
            ]
        });
        let k = used.len() as f64;
        let c = [c[0] / k, c[1] / k, c[2] / k];
        self.triangles
            .iter()
            .map(|t| {
                let a = sub3(self.points[t[0]], c);
                let b = sub3(self.points[t[1]], c);
                let d = sub3(self.points[t[2]], c);
                dot3(a, cross3(b, d)).abs() / 6.0
            })
            .sum()
    }
}
