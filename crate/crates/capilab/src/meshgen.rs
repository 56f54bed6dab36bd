//! Structured triangulations of star-shaped half-space domains.
//!
//! The mesh is a graded polar grid in reference coordinates (t, phi), mapped
//! through the radial profile of the domain. The angular resolution coarsens
//! toward the collapse point in powers of two so cell aspect ratios stay
//! bounded; rings where the sector count doubles are stitched with conforming
//! three-triangle transitions, and every quad is split along whichever
//! diagonal maximizes its worst interior angle.
//!
//! Boundary edges carry tags: `Surface` for the free boundary (with the
//! angular parameters of both endpoints), `Base` for the flat bottom, `Axis`
//! for the symmetry axis of meridian meshes. Contact-line vertices are listed
//! separately.

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Mode};
use std::collections::HashMap;
use std::fmt::Write as _;

/// Hard rejection threshold for element quality, degrees.
const MIN_ANGLE_FLOOR_DEG: f64 = 5.0;
/// Radial grading exponent: t_i = (i/n_radial)^GRADING.
const GRADING: f64 = 0.8;

/// Sector budget of the center fan over the full angular interval.
fn fan_sectors(mode: Mode) -> usize {
    match mode {
        Mode::Planar => 8,
        Mode::Axisymmetric => 4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Surface,
    Base,
    Axis,
}

#[derive(Debug, Clone)]
pub struct BoundaryEdge {
    pub v: [u32; 2],
    pub tag: BoundaryTag,
    /// Angular parameters of the endpoints on the free surface.
    /// Zero for base and axis edges.
    pub phi: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub mode: Mode,
    pub vertices: Vec<[f64; 2]>,
    /// Vertex triples, counterclockwise.
    pub triangles: Vec<[u32; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    /// Vertices on the contact line (free surface meets base).
    pub gamma: Vec<u32>,
    pub h_max: f64,
    pub min_angle_deg: f64,
}

/// Builds the graded polar mesh with `n_angular` free-surface edges and
/// `n_radial` base edges per base segment.
pub fn build(spec: &DomainSpec, n_radial: usize, n_angular: usize) -> Result<Mesh> {
    spec.validate()?;
    if n_radial < 2 {
        return Err(Error::Mesh(format!("n_radial = {n_radial}, need at least 2")));
    }
    if n_angular < 4 {
        return Err(Error::Mesh(format!("n_angular = {n_angular}, need at least 4")));
    }
    let phi_max = spec.mode.phi_max();
    let t: Vec<f64> = (0..=n_radial)
        .map(|i| (i as f64 / n_radial as f64).powf(GRADING))
        .collect();

    // Sector count per ring. The outermost ring must land exactly on
    // n_angular, each step inward may halve, and the innermost ring aims for
    // the fan budget; the number of halvings is limited by the power of two
    // in n_angular and by the ring count.
    let m_floor = fan_sectors(spec.mode).min(n_angular);
    let mut two_adic = 0usize;
    while n_angular % (1usize << (two_adic + 1)) == 0 {
        two_adic += 1;
    }
    let mut ratio_cap = 0usize;
    while (m_floor << (ratio_cap + 1)) <= n_angular {
        ratio_cap += 1;
    }
    let doublings = two_adic.min(ratio_cap).min(n_radial - 1);
    let mut sectors = vec![0usize; n_radial + 1];
    sectors[1] = n_angular >> doublings;
    let mut remaining = doublings;
    for i in 1..n_radial {
        // Double once the arc length of a sector catches up with the radial
        // step, or when the remaining rings are all needed to reach the
        // requested outer resolution.
        let forced = remaining == n_radial - i;
        let arc = t[i] * phi_max / sectors[i] as f64;
        sectors[i + 1] = if remaining > 0 && (forced || arc >= t[i + 1] - t[i]) {
            remaining -= 1;
            2 * sectors[i]
        } else {
            sectors[i]
        };
    }
    debug_assert_eq!(sectors[n_radial], n_angular);

    let mut vertices: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    let mut rings: Vec<Vec<u32>> = Vec::with_capacity(n_radial);
    for i in 1..=n_radial {
        let m = sectors[i];
        let mut ring = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let phi = phi_max * (j as f64 / m as f64);
            let p = spec.point(phi);
            ring.push(vertices.len() as u32);
            // p carries exact zeros on the base and the axis; scaling by t
            // preserves them. t = 1 on the outer ring, so free-surface
            // vertices coincide bitwise with the parametrized curve.
            vertices.push([t[i] * p[0], t[i] * p[1]]);
        }
        rings.push(ring);
    }

    let mut triangles: Vec<[u32; 3]> = Vec::new();
    for j in 0..sectors[1] {
        triangles.push([0, rings[0][j], rings[0][j + 1]]);
    }
    for i in 1..n_radial {
        let inner = &rings[i - 1];
        let outer = &rings[i];
        if sectors[i + 1] == sectors[i] {
            for j in 0..sectors[i] {
                push_quad(
                    &mut triangles,
                    &vertices,
                    inner[j],
                    outer[j],
                    outer[j + 1],
                    inner[j + 1],
                );
            }
        } else {
            for j in 0..sectors[i] {
                let (a, b) = (inner[j], inner[j + 1]);
                let (o0, o1, o2) = (outer[2 * j], outer[2 * j + 1], outer[2 * j + 2]);
                triangles.push([a, o0, o1]);
                triangles.push([a, o1, b]);
                triangles.push([b, o1, o2]);
            }
        }
    }

    let mut boundary = Vec::new();
    let outer = &rings[n_radial - 1];
    for j in 0..n_angular {
        boundary.push(BoundaryEdge {
            v: [outer[j], outer[j + 1]],
            tag: BoundaryTag::Surface,
            phi: [
                phi_max * (j as f64 / n_angular as f64),
                phi_max * ((j + 1) as f64 / n_angular as f64),
            ],
        });
    }
    let mut prev = 0u32;
    for ring in &rings {
        boundary.push(BoundaryEdge {
            v: [prev, ring[0]],
            tag: BoundaryTag::Base,
            phi: [0.0; 2],
        });
        prev = ring[0];
    }
    let far_tag = match spec.mode {
        Mode::Planar => BoundaryTag::Base,
        Mode::Axisymmetric => BoundaryTag::Axis,
    };
    let mut prev = 0u32;
    for ring in &rings {
        let node = *ring.last().unwrap();
        boundary.push(BoundaryEdge {
            v: [prev, node],
            tag: far_tag,
            phi: [0.0; 2],
        });
        prev = node;
    }
    let gamma = match spec.mode {
        Mode::Planar => vec![outer[0], outer[n_angular]],
        Mode::Axisymmetric => vec![outer[0]],
    };
    finalize(spec.mode, vertices, triangles, boundary, gamma)
}

impl Mesh {
    /// Uniform four-way refinement. New free-surface vertices are placed on
    /// the parametrized curve at the midpoint angle, so boundary resolution
    /// improves with the mesh instead of freezing at the coarse polygon.
    pub fn refine(&self, spec: &DomainSpec) -> Result<Mesh> {
        let mut vertices = self.vertices.clone();
        let mut surface_phi: HashMap<(u32, u32), f64> = HashMap::new();
        for e in &self.boundary {
            if e.tag == BoundaryTag::Surface {
                surface_phi.insert(key(e.v[0], e.v[1]), 0.5 * (e.phi[0] + e.phi[1]));
            }
        }
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut get_mid = |a: u32, b: u32, vertices: &mut Vec<[f64; 2]>| -> u32 {
            let k = key(a, b);
            if let Some(&m) = midpoint.get(&k) {
                return m;
            }
            let p = match surface_phi.get(&k) {
                Some(&phi) => spec.point(phi),
                None => {
                    let (pa, pb) = (vertices[a as usize], vertices[b as usize]);
                    [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
                }
            };
            let m = vertices.len() as u32;
            vertices.push(p);
            midpoint.insert(k, m);
            m
        };

        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = get_mid(a, b, &mut vertices);
            let bc = get_mid(b, c, &mut vertices);
            let ca = get_mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([b, bc, ab]);
            triangles.push([c, ca, bc]);
            triangles.push([ab, bc, ca]);
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for e in &self.boundary {
            let m = get_mid(e.v[0], e.v[1], &mut vertices);
            let mid_phi = 0.5 * (e.phi[0] + e.phi[1]);
            boundary.push(BoundaryEdge {
                v: [e.v[0], m],
                tag: e.tag,
                phi: [e.phi[0], mid_phi],
            });
            boundary.push(BoundaryEdge {
                v: [m, e.v[1]],
                tag: e.tag,
                phi: [mid_phi, e.phi[1]],
            });
        }
        finalize(self.mode, vertices, triangles, boundary, self.gamma.clone())
    }

    /// Serializes the mesh in the `capilab-mesh v1` plain-text format.
    /// Deterministic: the same mesh always produces the same bytes.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "capilab-mesh v1");
        let mode = match self.mode {
            Mode::Planar => "planar",
            Mode::Axisymmetric => "axisymmetric",
        };
        let _ = writeln!(s, "mode {mode}");
        let _ = writeln!(
            s,
            "counts {} {} {} {}",
            self.vertices.len(),
            self.triangles.len(),
            self.boundary.len(),
            self.gamma.len()
        );
        for v in &self.vertices {
            let _ = writeln!(s, "v {:.17e} {:.17e}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "t {} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary {
            let tag = match e.tag {
                BoundaryTag::Surface => "surface",
                BoundaryTag::Base => "base",
                BoundaryTag::Axis => "axis",
            };
            let _ = writeln!(s, "b {} {} {tag} {:.17e} {:.17e}", e.v[0], e.v[1], e.phi[0], e.phi[1]);
        }
        for g in &self.gamma {
            let _ = writeln!(s, "g {g}");
        }
        s
    }

    /// Parses the `capilab-mesh v1` format. Quality measures are recomputed,
    /// so a corrupted file with inverted elements is rejected.
    pub fn from_text(text: &str) -> Result<Mesh> {
        let bad = |line: usize, why: &str| Error::Mesh(format!("mesh text line {}: {why}", line + 1));
        let mut lines = text.lines().enumerate();
        let (i, header) = lines.next().ok_or_else(|| bad(0, "empty input"))?;
        if header.trim() != "capilab-mesh v1" {
            return Err(bad(i, "expected header 'capilab-mesh v1'"));
        }
        let (i, mode_line) = lines.next().ok_or_else(|| bad(1, "missing mode line"))?;
        let mode = match mode_line.trim() {
            "mode planar" => Mode::Planar,
            "mode axisymmetric" => Mode::Axisymmetric,
            _ => return Err(bad(i, "expected 'mode planar' or 'mode axisymmetric'")),
        };
        let (i, counts_line) = lines.next().ok_or_else(|| bad(2, "missing counts line"))?;
        let counts: Vec<usize> = counts_line
            .trim()
            .strip_prefix("counts ")
            .ok_or_else(|| bad(i, "expected 'counts nv nt nb ng'"))?
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| bad(i, "bad count")))
            .collect::<Result<_>>()?;
        if counts.len() != 4 {
            return Err(bad(i, "expected four counts"));
        }
        let (nv, nt, nb, ng) = (counts[0], counts[1], counts[2], counts[3]);

        let mut vertices = Vec::with_capacity(nv);
        let mut triangles = Vec::with_capacity(nt);
        let mut boundary = Vec::with_capacity(nb);
        let mut gamma = Vec::with_capacity(ng);
        for _ in 0..nv {
            let (i, line) = lines.next().ok_or_else(|| bad(0, "truncated vertex block"))?;
            let w: Vec<&str> = line.split_whitespace().collect();
            if w.len() != 3 || w[0] != "v" {
                return Err(bad(i, "expected 'v x y'"));
            }
            let x: f64 = w[1].parse().map_err(|_| bad(i, "bad coordinate"))?;
            let y: f64 = w[2].parse().map_err(|_| bad(i, "bad coordinate"))?;
            vertices.push([x, y]);
        }
        for _ in 0..nt {
            let (i, line) = lines.next().ok_or_else(|| bad(0, "truncated triangle block"))?;
            let w: Vec<&str> = line.split_whitespace().collect();
            if w.len() != 4 || w[0] != "t" {
                return Err(bad(i, "expected 't a b c'"));
            }
            let mut tri = [0u32; 3];
            for (slot, word) in tri.iter_mut().zip(&w[1..]) {
                *slot = word.parse().map_err(|_| bad(i, "bad vertex id"))?;
                if *slot as usize >= nv {
                    return Err(bad(i, "vertex id out of range"));
                }
            }
            triangles.push(tri);
        }
        for _ in 0..nb {
            let (i, line) = lines.next().ok_or_else(|| bad(0, "truncated boundary block"))?;
            let w: Vec<&str> = line.split_whitespace().collect();
            if w.len() != 6 || w[0] != "b" {
                return Err(bad(i, "expected 'b a b tag phi0 phi1'"));
            }
            let a: u32 = w[1].parse().map_err(|_| bad(i, "bad vertex id"))?;
            let b: u32 = w[2].parse().map_err(|_| bad(i, "bad vertex id"))?;
            if a as usize >= nv || b as usize >= nv {
                return Err(bad(i, "vertex id out of range"));
            }
            let tag = match w[3] {
                "surface" => BoundaryTag::Surface,
                "base" => BoundaryTag::Base,
                "axis" => BoundaryTag::Axis,
                _ => return Err(bad(i, "unknown boundary tag")),
            };
            let p0: f64 = w[4].parse().map_err(|_| bad(i, "bad parameter"))?;
            let p1: f64 = w[5].parse().map_err(|_| bad(i, "bad parameter"))?;
            boundary.push(BoundaryEdge { v: [a, b], tag, phi: [p0, p1] });
        }
        for _ in 0..ng {
            let (i, line) = lines.next().ok_or_else(|| bad(0, "truncated contact-vertex block"))?;
            let w: Vec<&str> = line.split_whitespace().collect();
            if w.len() != 2 || w[0] != "g" {
                return Err(bad(i, "expected 'g id'"));
            }
            let id: u32 = w[1].parse().map_err(|_| bad(i, "bad vertex id"))?;
            if id as usize >= nv {
                return Err(bad(i, "vertex id out of range"));
            }
            gamma.push(id);
        }
        finalize(mode, vertices, triangles, boundary, gamma)
    }
}

fn finalize(
    mode: Mode,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[u32; 3]>,
    boundary: Vec<BoundaryEdge>,
    gamma: Vec<u32>,
) -> Result<Mesh> {
    let mut h_max = 0.0f64;
    let mut min_angle = f64::INFINITY;
    for (k, tri) in triangles.iter().enumerate() {
        let [a, b, c] = tri.map(|i| vertices[i as usize]);
        if !(signed_area(a, b, c) > 0.0) {
            return Err(Error::Mesh(format!("triangle {k} has non-positive area")));
        }
        min_angle = min_angle.min(tri_min_angle(a, b, c));
        for (p, q) in [(a, b), (b, c), (c, a)] {
            h_max = h_max.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        }
    }
    let min_angle_deg = min_angle.to_degrees();
    if min_angle_deg < MIN_ANGLE_FLOOR_DEG {
        return Err(Error::Mesh(format!(
            "mesh min angle {min_angle_deg:.2} deg is below the {MIN_ANGLE_FLOOR_DEG} deg floor"
        )));
    }
    Ok(Mesh { mode, vertices, triangles, boundary, gamma, h_max, min_angle_deg })
}

/// Splits quad (a, b, c, d), listed counterclockwise, along the diagonal
/// that maximizes the worst interior angle of the two triangles.
fn push_quad(triangles: &mut Vec<[u32; 3]>, vertices: &[[f64; 2]], a: u32, b: u32, c: u32, d: u32) {
    let p = |i: u32| vertices[i as usize];
    let diag_ac = tri_min_angle(p(a), p(b), p(c)).min(tri_min_angle(p(a), p(c), p(d)));
    let diag_bd = tri_min_angle(p(a), p(b), p(d)).min(tri_min_angle(p(b), p(c), p(d)));
    if diag_ac >= diag_bd {
        triangles.push([a, b, c]);
        triangles.push([a, c, d]);
    } else {
        triangles.push([a, b, d]);
        triangles.push([b, c, d]);
    }
}

fn key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn tri_min_angle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let pts = [a, b, c];
    let mut best = f64::INFINITY;
    for i in 0..3 {
        let p = pts[i];
        let q = pts[(i + 1) % 3];
        let r = pts[(i + 2) % 3];
        let u = [q[0] - p[0], q[1] - p[1]];
        let v = [r[0] - p[0], r[1] - p[1]];
        let dot = u[0] * v[0] + u[1] * v[1];
        let cross = u[0] * v[1] - u[1] * v[0];
        best = best.min(cross.abs().atan2(dot));
    }
    best
}
