//! Triangle meshes with a bounding volume hierarchy for ray queries.

use std::io::{BufRead, BufReader, Read, Seek};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scalar::Real;

use super::RayHit;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb<T> {
    min: Vec3<T>,
    max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    fn empty() -> Self {
        let inf = T::infinity();
        Self {
            min: Vec3::new(inf, inf, inf),
            max: Vec3::new(-inf, -inf, -inf),
        }
    }

    fn grow(&mut self, p: &Vec3<T>) {
        self.min = Vec3::new(self.min.x.min(p.x), self.min.y.min(p.y), self.min.z.min(p.z));
        self.max = Vec3::new(self.max.x.max(p.x), self.max.y.max(p.y), self.max.z.max(p.z));
    }

    fn merge(&mut self, o: &Self) {
        self.grow(&o.min);
        self.grow(&o.max);
    }

    fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::half()
    }

    /// Slab test. Returns the entry parameter if the ray segment `[t_min, t_max]`
    /// overlaps the box.
    #[inline]
    fn hit(&self, origin: &Vec3<T>, inv_dir: &Vec3<T>, t_min: T, t_max: T) -> Option<T> {
        let mut lo = t_min;
        let mut hi = t_max;
        for k in 0..3 {
            let t1 = (self.min[k] - origin[k]) * inv_dir[k];
            let t2 = (self.max[k] - origin[k]) * inv_dir[k];
            // `min`/`max` drop NaN from 0 * inf when the origin sits on a slab plane
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
        (lo <= hi).then_some(lo)
    }
}

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf { bounds: Aabb<T>, start: usize, count: usize },
    Inner { bounds: Aabb<T>, left: usize, right: usize },
}

impl<T: Real> Node<T> {
    fn bounds(&self) -> &Aabb<T> {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Indexed triangle mesh in its local frame. Faces wind counter-clockwise when
/// seen from outside, so face normals point outward. Immutable after construction.
#[derive(Debug, Clone)]
pub struct TriangleMesh<T> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
    face_normals: Vec<Vec3<T>>,
    nodes: Vec<Node<T>>,
    order: Vec<usize>,
}

impl<T: Real> TriangleMesh<T> {
    /// Builds the mesh and its BVH. Degenerate (zero-area) faces are rejected.
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Mesh("mesh has no faces".into()));
        }
        let mut face_normals = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Mesh(format!("face {fi} references a missing vertex")));
            }
            let [a, b, c] = f.map(|i| vertices[i]);
            let n = (b - a)
                .cross(&(c - a))
                .try_normalize(T::zero())
                .ok_or_else(|| Error::Mesh(format!("face {fi} is degenerate")))?;
            face_normals.push(n);
        }
        let mut mesh = Self {
            vertices,
            faces,
            face_normals,
            nodes: Vec::new(),
            order: Vec::new(),
        };
        mesh.build_bvh();
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_normal(&self, f: usize) -> Vec3<T> {
        self.face_normals[f]
    }

    /// Center of the axis-aligned bounds and the radius of a sphere around it
    /// containing every vertex.
    pub fn bounding_sphere(&self) -> (Vec3<T>, T) {
        let c = self.nodes[0].bounds().center();
        let r = self
            .vertices
            .iter()
            .map(|v| (*v - c).norm())
            .fold(T::zero(), T::max);
        (c, r)
    }

    fn face_bounds(&self, f: usize) -> Aabb<T> {
        let mut b = Aabb::empty();
        for &i in &self.faces[f] {
            b.grow(&self.vertices[i]);
        }
        b
    }

    fn build_bvh(&mut self) {
        let bounds: Vec<Aabb<T>> = (0..self.faces.len()).map(|f| self.face_bounds(f)).collect();
        let centers: Vec<Vec3<T>> = bounds.iter().map(Aabb::center).collect();
        let mut order: Vec<usize> = (0..self.faces.len()).collect();
        let mut nodes = Vec::with_capacity(2 * self.faces.len() / LEAF_SIZE + 1);
        Self::build_node(&mut nodes, &mut order, 0, &bounds, &centers);
        self.nodes = nodes;
        self.order = order;
    }

    /// Median split along the widest axis of the centroid bounds.
    fn build_node(
        nodes: &mut Vec<Node<T>>,
        order: &mut [usize],
        offset: usize,
        bounds: &[Aabb<T>],
        centers: &[Vec3<T>],
    ) -> usize {
        let mut node_bounds = Aabb::empty();
        let mut centroid_bounds = Aabb::empty();
        for &f in order.iter() {
            node_bounds.merge(&bounds[f]);
            centroid_bounds.grow(&centers[f]);
        }
        let index = nodes.len();
        if order.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                bounds: node_bounds,
                start: offset,
                count: order.len(),
            });
            return index;
        }
        let ext = centroid_bounds.max - centroid_bounds.min;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            centers[a][axis]
                .partial_cmp(&centers[b][axis])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        // placeholder, patched once both children exist
        nodes.push(Node::Leaf {
            bounds: node_bounds,
            start: 0,
            count: 0,
        });
        let (lo, hi) = order.split_at_mut(mid);
        let left = Self::build_node(nodes, lo, offset, bounds, centers);
        let right = Self::build_node(nodes, hi, offset + mid, bounds, centers);
        nodes[index] = Node::Inner {
            bounds: node_bounds,
            left,
            right,
        };
        index
    }

    /// Möller–Trumbore, two-sided. Returns `t` along the ray.
    #[inline]
    fn intersect_face(&self, f: usize, origin: &Vec3<T>, dir: &Vec3<T>) -> Option<T> {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i]);
        let e1 = b - a;
        let e2 = c - a;
        let p = dir.cross(&e2);
        let det = e1.dot(&p);
        if det.abs() <= T::min_positive_value() {
            return None;
        }
        let inv = T::one() / det;
        let s = *origin - a;
        let u = s.dot(&p) * inv;
        // small tolerance so rays through shared edges cannot slip through a watertight mesh
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        if u < -tol || u > T::one() + tol {
            return None;
        }
        let q = s.cross(&e1);
        let v = dir.dot(&q) * inv;
        if v < -tol || u + v > T::one() + tol {
            return None;
        }
        Some(e2.dot(&q) * inv)
    }

    /// Closest hit with `t >= t_min` along the ray, in the mesh frame.
    pub fn first_hit(&self, origin: &Vec3<T>, dir: &Vec3<T>, t_min: T) -> Option<RayHit<T>> {
        let inv_dir = dir.map(|d| T::one() / d);
        let mut best_t = T::infinity();
        let mut best_face = usize::MAX;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            match &self.nodes[ni] {
                Node::Leaf { bounds, start, count } => {
                    if bounds.hit(origin, &inv_dir, t_min, best_t).is_none() {
                        continue;
                    }
                    for &f in &self.order[*start..*start + *count] {
                        if let Some(t) = self.intersect_face(f, origin, dir) {
                            // ties between faces sharing an edge resolve to the lowest index
                            if t >= t_min && (t < best_t || (t == best_t && f < best_face)) {
                                best_t = t;
                                best_face = f;
                            }
                        }
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if bounds.hit(origin, &inv_dir, t_min, best_t).is_none() {
                        continue;
                    }
                    let tl = self.nodes[*left].bounds().hit(origin, &inv_dir, t_min, best_t);
                    let tr = self.nodes[*right].bounds().hit(origin, &inv_dir, t_min, best_t);
                    match (tl, tr) {
                        (Some(a), Some(b)) => {
                            // push the farther child first so the nearer one is popped next
                            if a <= b {
                                stack.push(*right);
                                stack.push(*left);
                            } else {
                                stack.push(*left);
                                stack.push(*right);
                            }
                        }
                        (Some(_), None) => stack.push(*left),
                        (None, Some(_)) => stack.push(*right),
                        (None, None) => {}
                    }
                }
            }
        }
        (best_face != usize::MAX).then(|| {
            let n = self.face_normals[best_face];
            RayHit {
                t: best_t,
                normal: n,
                front: n.dot(dir) < T::zero(),
            }
        })
    }

    /// Brute-force closest hit over every face. Reference for the BVH traversal.
    pub fn first_hit_brute_force(&self, origin: &Vec3<T>, dir: &Vec3<T>, t_min: T) -> Option<RayHit<T>> {
        let mut best: Option<(T, usize)> = None;
        for f in 0..self.faces.len() {
            if let Some(t) = self.intersect_face(f, origin, dir) {
                if t >= t_min && best.is_none_or(|(bt, bf)| t < bt || (t == bt && f < bf)) {
                    best = Some((t, f));
                }
            }
        }
        best.map(|(t, f)| {
            let n = self.face_normals[f];
            RayHit {
                t,
                normal: n,
                front: n.dot(dir) < T::zero(),
            }
        })
    }

    /// Geodesic icosphere centered at the origin; `subdivisions` levels of 4-way splits.
    pub fn icosphere(radius: T, subdivisions: u32) -> Result<Self> {
        let phi = (T::one() + T::lit(5.0).sqrt()) * T::half();
        let (o, z) = (T::one(), T::zero());
        let mut verts: Vec<Vec3<T>> = [
            (-o, phi, z), (o, phi, z), (-o, -phi, z), (o, -phi, z),
            (z, -o, phi), (z, o, phi), (z, -o, -phi), (z, o, -phi),
            (phi, z, -o), (phi, z, o), (-phi, z, -o), (-phi, z, o),
        ]
        .iter()
        .map(|&(x, y, zz)| Vec3::new(x, y, zz).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoint = std::collections::HashMap::new();
            let mut next = Vec::with_capacity(faces.len() * 4);
            let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3<T>>| -> usize {
                *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) * T::half()).normalize());
                    verts.len() - 1
                })
            };
            for [a, b, c] in faces {
                let ab = mid(a, b, &mut verts);
                let bc = mid(b, c, &mut verts);
                let ca = mid(c, a, &mut verts);
                next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        let verts = verts.into_iter().map(|v| v * radius).collect();
        Self::new(verts, faces)
    }

    /// Closed cylinder along local `z`, `|z| <= half_length`, with `segments`
    /// facets around the circumference.
    pub fn capped_cylinder(radius: T, half_length: T, segments: usize) -> Result<Self> {
        if segments < 3 {
            return Err(Error::Mesh("cylinder needs at least 3 segments".into()));
        }
        let mut verts = Vec::with_capacity(2 * segments + 2);
        for k in 0..segments {
            let a = T::two() * T::PI() * T::from_count(k) / T::from_count(segments);
            let (s, c) = a.sin_cos();
            verts.push(Vec3::new(radius * c, radius * s, -half_length));
            verts.push(Vec3::new(radius * c, radius * s, half_length));
        }
        let bottom = verts.len();
        verts.push(Vec3::new(T::zero(), T::zero(), -half_length));
        let top = verts.len();
        verts.push(Vec3::new(T::zero(), T::zero(), half_length));
        let mut faces = Vec::with_capacity(4 * segments);
        for k in 0..segments {
            let (b0, t0) = (2 * k, 2 * k + 1);
            let (b1, t1) = (2 * ((k + 1) % segments), 2 * ((k + 1) % segments) + 1);
            faces.push([b0, b1, t1]);
            faces.push([b0, t1, t0]);
            faces.push([bottom, b1, b0]);
            faces.push([top, t0, t1]);
        }
        Self::new(verts, faces)
    }

    /// Axis-aligned box centered at the origin.
    pub fn cuboid(half_extents: Vec3<T>) -> Result<Self> {
        let h = half_extents;
        let verts: Vec<Vec3<T>> = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { -h.x } else { h.x },
                    if i & 2 == 0 { -h.y } else { h.y },
                    if i & 4 == 0 { -h.z } else { h.z },
                )
            })
            .collect();
        let faces = vec![
            [0, 4, 6], [0, 6, 2], // -x
            [1, 3, 7], [1, 7, 5], // +x
            [0, 1, 5], [0, 5, 4], // -y
            [2, 6, 7], [2, 7, 3], // +y
            [0, 2, 3], [0, 3, 1], // -z
            [4, 5, 7], [4, 7, 6], // +z
        ];
        Self::new(verts, faces)
    }

    /// Loads a binary or ASCII STL file. Coordinates are taken as mm and multiplied by `scale`.
    pub fn load_stl(path: impl AsRef<Path>, scale: T) -> Result<Self> {
        let mut file = std::fs::File::open(path)?;
        Self::read_stl(&mut file, scale)
    }

    pub fn read_stl<R: Read + Seek>(reader: &mut R, scale: T) -> Result<Self> {
        let mesh = stl_io::read_stl(reader).map_err(|e| Error::Mesh(format!("stl: {e}")))?;
        let verts = mesh
            .vertices
            .iter()
            .map(|v| Vec3::new(T::lit(v[0] as f64), T::lit(v[1] as f64), T::lit(v[2] as f64)) * scale)
            .collect();
        let faces = mesh.faces.iter().map(|f| f.vertices).collect();
        Self::new(verts, faces)
    }

    /// Loads a Wavefront OBJ file (`v` and `f` records; polygons are fan-triangulated).
    pub fn load_obj(path: impl AsRef<Path>, scale: T) -> Result<Self> {
        Self::read_obj(BufReader::new(std::fs::File::open(path)?), scale)
    }

    pub fn read_obj<R: BufRead>(reader: R, scale: T) -> Result<Self> {
        let mut verts = Vec::new();
        let mut faces = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let mut tokens = line.split_whitespace();
            let err = |what: &str| Error::Mesh(format!("obj line {}: {what}", lineno + 1));
            match tokens.next() {
                Some("v") => {
                    let mut xyz = [0.0_f64; 3];
                    for c in &mut xyz {
                        *c = tokens
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| err("bad vertex"))?;
                    }
                    verts.push(Vec3::new(T::lit(xyz[0]), T::lit(xyz[1]), T::lit(xyz[2])) * scale);
                }
                Some("f") => {
                    let idx = tokens
                        .map(|t| {
                            let first = t.split('/').next().unwrap_or("");
                            let i: i64 = first.parse().map_err(|_| err("bad face index"))?;
                            let resolved = if i < 0 { verts.len() as i64 + i } else { i - 1 };
                            usize::try_from(resolved).map_err(|_| err("face index out of range"))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if idx.len() < 3 {
                        return Err(err("face with fewer than 3 vertices"));
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        Self::new(verts, faces)
    }

    /// Loads `.stl` or `.obj` by extension.
    pub fn load(path: impl AsRef<Path>, scale: T) -> Result<Self> {
        let path = path.as_ref();
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("stl") => Self::load_stl(path, scale),
            Some("obj") => Self::load_obj(path, scale),
            _ => Err(Error::Mesh(format!("unsupported mesh format: {}", path.display()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    #[test]
    fn icosphere_is_closed_and_outward() {
        let m = TriangleMesh::<f64>::icosphere(2.0, 2).unwrap();
        assert_eq!(m.faces().len(), 20 * 16);
        for (f, face) in m.faces().iter().enumerate() {
            let c = face.iter().fold(Vec3::zeros(), |acc, &i| acc + m.vertices()[i]) / 3.0;
            assert!(m.face_normal(f).dot(&c) > 0.0);
        }
        let (c, r) = m.bounding_sphere();
        assert!(c.norm() < 1e-12 && (r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cuboid_and_cylinder_normals_point_out() {
        for m in [
            TriangleMesh::<f64>::cuboid(Vec3::new(1.0, 2.0, 3.0)).unwrap(),
            TriangleMesh::<f64>::capped_cylinder(1.0, 2.0, 16).unwrap(),
        ] {
            for (f, face) in m.faces().iter().enumerate() {
                let c = face.iter().fold(Vec3::zeros(), |acc, &i| acc + m.vertices()[i]) / 3.0;
                assert!(m.face_normal(f).dot(&c) > 0.0, "face {f}");
            }
        }
    }

    #[test]
    fn ray_through_box_hits_front_face() {
        let m = TriangleMesh::<f64>::cuboid(Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let hit = m
            .first_hit(&Vec3::new(-5.0, 0.3, 0.2), &Vec3::x_axis(), 0.0)
            .unwrap();
        assert!((hit.t - 4.0).abs() < 1e-12);
        assert!(hit.front);
        assert!((hit.normal + Vec3::x_axis()).norm() < 1e-12);
        // from inside, the first hit is a back face
        let inside = m.first_hit(&Vec3::new(0.0, 0.3, 0.2), &Vec3::x_axis(), 0.0).unwrap();
        assert!(!inside.front);
        assert!(m.first_hit(&Vec3::new(-5.0, 3.0, 0.0), &Vec3::x_axis(), 0.0).is_none());
    }

    #[test]
    fn obj_and_stl_readers() {
        let obj = "# box face\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nf 1 2 3 4\nf 1/1/1 2/2/2 5/5/5\n";
        let m = TriangleMesh::<f64>::read_obj(Cursor::new(obj), 2.0).unwrap();
        assert_eq!(m.faces().len(), 3);
        assert_eq!(m.vertices()[2], Vec3::new(2.0, 2.0, 0.0));
        assert!(TriangleMesh::<f64>::read_obj(Cursor::new("v 0 0\n"), 1.0).is_err());
        assert!(TriangleMesh::<f64>::read_obj(Cursor::new("v 0 0 0\nf 1 2 9\n"), 1.0).is_err());

        let stl = "solid t\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0 0\nvertex 0 1 0\nendloop\nendfacet\nendsolid t\n";
        let m = TriangleMesh::<f32>::read_stl(&mut Cursor::new(stl.as_bytes().to_vec()), 1.0).unwrap();
        assert_eq!(m.faces().len(), 1);
        assert!((m.face_normal(0).z - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn bvh_matches_brute_force(
            ox in -8.0_f64..8.0, oy in -8.0_f64..8.0, oz in -8.0_f64..8.0,
            dx in -1.0_f64..1.0, dy in -1.0_f64..1.0, dz in -1.0_f64..1.0,
        ) {
            let mesh = TriangleMesh::<f64>::icosphere(5.0, 3).unwrap();
            let d = Vec3::new(dx, dy, dz);
            prop_assume!(d.norm() > 1e-3);
            let d = d.normalize();
            let o = Vec3::new(ox, oy, oz);
            let a = mesh.first_hit(&o, &d, -2.0);
            let b = mesh.first_hit_brute_force(&o, &d, -2.0);
            match (a, b) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    prop_assert!((a.t - b.t).abs() < 1e-12);
                    prop_assert_eq!(a.front, b.front);
                }
                (a, b) => prop_assert!(false, "bvh {:?} vs brute {:?}", a, b),
            }
        }
    }
}
