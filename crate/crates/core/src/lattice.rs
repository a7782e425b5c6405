//! Exact arithmetic on the lattices `M` and `N` of a 3-dimensional Gorenstein cone.
//!
//! Both lattices are identified with `Z^3` through the standard basis. Rays live
//! in `N` at height one, so the Gorenstein covector is `(0,0,1)` in `M`. Every
//! rational point produced by the κ map has a denominator dividing the Gram
//! determinant, which lets the hot paths work with integer numerators over that
//! common denominator.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Deref, Neg, Sub};

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

pub type Vec3 = [i64; 3];
pub type Mat3 = [[i64; 3]; 3];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("need at least 3 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("duplicate point ({0}, {1})")]
    Duplicate(i64, i64),
    #[error("point ({0}, {1}) is not a corner of a strictly convex polygon")]
    NonConvex(i64, i64),
    #[error("ray {0:?} is not primitive")]
    NonPrimitive(Vec3),
    #[error("image {0:?} of a ray is not primitive")]
    NonPrimitiveImage(Vec3),
    #[error("matrix does not fix the height coordinate (third row must be (0,0,1))")]
    HeightNotPreserved,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("malformed polygon file: {0}")]
    Parse(String),
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn det3(m: &Mat3) -> i64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Adjugate, so that `m * adj3(m) = det3(m) * I`.
pub(crate) fn adj3(m: &Mat3) -> Mat3 {
    let c =
        |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    [
        [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
        [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
        [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
    ]
}

pub(crate) fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

#[cfg(test)]
fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    out
}

fn gcd3(v: &Vec3) -> i64 {
    v[0].gcd(&v[1]).gcd(&v[2])
}

fn cross2(o: [i64; 2], a: [i64; 2], b: [i64; 2]) -> i64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Strict convex hull (collinear boundary points dropped), counterclockwise,
/// starting at the lexicographically least point.
pub(crate) fn strict_hull(points: &[[i64; 2]]) -> Vec<[i64; 2]> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[i64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross2(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[i64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// An integer `k`-vector `b` describing the reflexive module `T(b)`, the span of
/// all `m` with `<m, v_i> >= b_i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BVector(pub Vec<i64>);

impl BVector {
    pub fn zero(k: usize) -> Self {
        BVector(vec![0; k])
    }

    pub fn unit(k: usize, i: usize) -> Self {
        let mut v = vec![0; k];
        v[i] = 1;
        BVector(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    /// Componentwise maximum.
    pub fn componentwise_max(&self, other: &BVector) -> BVector {
        BVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.max(b))
                .collect(),
        )
    }
}

impl Deref for BVector {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for BVector {
    fn from(v: Vec<i64>) -> Self {
        BVector(v)
    }
}

impl Add for &BVector {
    type Output = BVector;
    fn add(self, rhs: &BVector) -> BVector {
        BVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &BVector {
    type Output = BVector;
    fn sub(self, rhs: &BVector) -> BVector {
        BVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &BVector {
    type Output = BVector;
    fn neg(self) -> BVector {
        BVector(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for BVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Formats a rational as `p` or `p/q`.
pub fn ratio_string(r: &Ratio<i64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A point of `M ⊗ Q` with exact coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalVec3(pub [Ratio<i64>; 3]);

impl RationalVec3 {
    pub fn from_integers(v: Vec3) -> Self {
        RationalVec3(v.map(Ratio::from_integer))
    }

    /// `num / den`, reduced.
    pub fn from_scaled(num: Vec3, den: i64) -> Self {
        RationalVec3(num.map(|n| Ratio::new(n, den)))
    }

    pub fn coords(&self) -> &[Ratio<i64>; 3] {
        &self.0
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|c| c.is_integer())
    }

    pub fn floor(&self) -> Vec3 {
        self.0.map(|c| c.floor().to_integer())
    }

    /// Membership in the half-open cube `[0,1)^3`.
    pub fn in_unit_cube(&self) -> bool {
        self.0
            .iter()
            .all(|c| *c >= Ratio::from_integer(0) && *c < Ratio::from_integer(1))
    }

    pub fn to_strings(&self) -> [String; 3] {
        [
            ratio_string(&self.0[0]),
            ratio_string(&self.0[1]),
            ratio_string(&self.0[2]),
        ]
    }

    pub fn dot_int(&self, x: &Vec3) -> Ratio<i64> {
        self.0[0] * x[0] + self.0[1] * x[1] + self.0[2] * x[2]
    }
}

impl Add for RationalVec3 {
    type Output = RationalVec3;
    fn add(self, rhs: Self) -> Self {
        RationalVec3([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl Sub for RationalVec3 {
    type Output = RationalVec3;
    fn sub(self, rhs: Self) -> Self {
        RationalVec3([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
        ])
    }
}

impl fmt::Display for RationalVec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = self.to_strings();
        write!(f, "({x}, {y}, {z})")
    }
}

impl Serialize for RationalVec3 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_strings().serialize(serializer)
    }
}

/// The polygon input file: `{"points": [[x, y], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolygonFile {
    pub points: Vec<[i64; 2]>,
}

/// Validated corner rays of a Gorenstein cone together with the Gram data
/// `G = Σ v_i v_iᵀ` needed by κ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToricData {
    rays: Vec<Vec3>,
    gram: Mat3,
    gram_adj: Mat3,
    gram_det: i64,
}

impl ToricData {
    /// Lifts the points to height one and orders them counterclockwise starting
    /// from the lexicographically least point.
    pub fn from_points(points: &[[i64; 2]]) -> Result<Self, LatticeError> {
        let mut seen = HashSet::new();
        for p in points {
            if !seen.insert(*p) {
                return Err(LatticeError::Duplicate(p[0], p[1]));
            }
        }
        if points.len() < 3 {
            return Err(LatticeError::TooFewPoints(points.len()));
        }
        let hull = strict_hull(points);
        if hull.len() != points.len() {
            let corners: HashSet<_> = hull.iter().collect();
            let bad = points
                .iter()
                .find(|p| !corners.contains(p))
                .expect("hull is a subset");
            return Err(LatticeError::NonConvex(bad[0], bad[1]));
        }
        let rays: Vec<Vec3> = hull.iter().map(|p| [p[0], p[1], 1]).collect();
        for r in &rays {
            if gcd3(r) != 1 {
                return Err(LatticeError::NonPrimitive(*r));
            }
        }
        Ok(Self::from_ordered_rays(rays))
    }

    pub fn from_json(text: &str) -> Result<Self, LatticeError> {
        let file: PolygonFile =
            serde_json::from_str(text).map_err(|e| LatticeError::Parse(e.to_string()))?;
        Self::from_points(&file.points)
    }

    /// Rays already known to be corners of a strictly convex polygon, in cyclic order.
    pub(crate) fn from_ordered_rays(rays: Vec<Vec3>) -> Self {
        let mut gram = [[0; 3]; 3];
        for v in &rays {
            for i in 0..3 {
                for j in 0..3 {
                    gram[i][j] += v[i] * v[j];
                }
            }
        }
        let gram_det = det3(&gram);
        assert!(
            gram_det > 0,
            "Gram matrix of a 3-dimensional cone is positive definite"
        );
        ToricData {
            rays,
            gram,
            gram_adj: adj3(&gram),
            gram_det,
        }
    }

    /// The cone on the first `j` rays (in cyclic order).
    pub fn prefix(&self, j: usize) -> ToricData {
        assert!((3..=self.k()).contains(&j));
        Self::from_ordered_rays(self.rays[..j].to_vec())
    }

    /// The cone on all rays except ray `i`.
    pub fn without(&self, i: usize) -> ToricData {
        assert!(self.k() > 3 && i < self.k());
        let mut rays = self.rays.clone();
        rays.remove(i);
        Self::from_ordered_rays(rays)
    }

    pub fn k(&self) -> usize {
        self.rays.len()
    }

    pub fn rays(&self) -> &[Vec3] {
        &self.rays
    }

    pub fn points(&self) -> Vec<[i64; 2]> {
        self.rays.iter().map(|r| [r[0], r[1]]).collect()
    }

    pub fn gram(&self) -> &Mat3 {
        &self.gram
    }

    pub fn gram_det(&self) -> i64 {
        self.gram_det
    }

    /// `m ↦ (<m, v_1>, …, <m, v_k>)`.
    pub fn phi_t(&self, m: &Vec3) -> BVector {
        BVector(self.rays.iter().map(|v| dot(m, v)).collect())
    }

    /// `b ↦ Σ b_i v_i`.
    pub fn phi(&self, b: &[i64]) -> Vec3 {
        debug_assert_eq!(b.len(), self.k());
        let mut out = [0; 3];
        for (bi, v) in b.iter().zip(&self.rays) {
            for j in 0..3 {
                out[j] += bi * v[j];
            }
        }
        out
    }

    /// Numerators of κ(b) over the common denominator `gram_det`.
    pub fn kappa_scaled(&self, b: &[i64]) -> Vec3 {
        mat_vec(&self.gram_adj, &self.phi(b))
    }

    /// κ(b) = G⁻¹ Σ b_i v_i.
    pub fn kappa(&self, b: &[i64]) -> RationalVec3 {
        RationalVec3::from_scaled(self.kappa_scaled(b), self.gram_det)
    }

    /// The unique `m` with κ(b) + m in `[0,1)^3`.
    pub fn normalizing_shift(&self, b: &[i64]) -> Vec3 {
        self.kappa_scaled(b).map(|n| -n.div_euclid(self.gram_det))
    }

    /// Canonical representative `b + φᵀ(m)` of the isomorphism class of `T(b)`,
    /// together with the shift `m`.
    pub fn normalize(&self, b: &[i64]) -> (BVector, Vec3) {
        let m = self.normalizing_shift(b);
        let shift = self.phi_t(&m);
        (
            BVector(b.iter().zip(shift.iter()).map(|(x, y)| x + y).collect()),
            m,
        )
    }

    pub fn normalized(&self, b: &[i64]) -> BVector {
        self.normalize(b).0
    }

    pub fn is_normalized(&self, b: &[i64]) -> bool {
        self.normalizing_shift(b) == [0, 0, 0]
    }

    /// `|det[v_a v_b v_c]|`, the index of the simplicial subcone on three rays.
    pub fn triangle_index(&self, a: usize, b: usize, c: usize) -> i64 {
        det3(&[self.rays[a], self.rays[b], self.rays[c]]).abs()
    }

    /// The cone `Uσ`, whose ring is the invariant ring of `R_σ` under the finite
    /// group `Hom(M/MU, C*)` of order `|det U|`.
    pub fn quotient_cone(&self, u: &Mat3) -> Result<ToricData, LatticeError> {
        if det3(u) == 0 {
            return Err(LatticeError::SingularMatrix);
        }
        if u[2] != [0, 0, 1] {
            return Err(LatticeError::HeightNotPreserved);
        }
        let mut points = Vec::with_capacity(self.k());
        for v in &self.rays {
            let w = mat_vec(u, v);
            if gcd3(&w) != 1 {
                return Err(LatticeError::NonPrimitiveImage(w));
            }
            points.push([w[0], w[1]]);
        }
        ToricData::from_points(&points)
    }

    /// Lattice points strictly inside the polygon.
    pub fn interior_points(&self) -> Vec<[i64; 2]> {
        let pts = self.points();
        let (xmin, xmax) = (
            pts.iter().map(|p| p[0]).min().unwrap(),
            pts.iter().map(|p| p[0]).max().unwrap(),
        );
        let (ymin, ymax) = (
            pts.iter().map(|p| p[1]).min().unwrap(),
            pts.iter().map(|p| p[1]).max().unwrap(),
        );
        let n = pts.len();
        let mut out = Vec::new();
        for x in xmin..=xmax {
            for y in ymin..=ymax {
                let inside = (0..n).all(|i| cross2(pts[i], pts[(i + 1) % n], [x, y]) > 0);
                if inside {
                    out.push([x, y]);
                }
            }
        }
        out
    }

    /// All lattice points on the boundary, counterclockwise from the first corner.
    pub fn boundary_points(&self) -> Vec<[i64; 2]> {
        let pts = self.points();
        let n = pts.len();
        let mut out = Vec::new();
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let g = (b[0] - a[0]).gcd(&(b[1] - a[1]));
            let step = [(b[0] - a[0]) / g, (b[1] - a[1]) / g];
            for t in 0..g {
                out.push([a[0] + t * step[0], a[1] + t * step[1]]);
            }
        }
        out
    }

    /// Twice the area of the polygon, which equals the number of summands of
    /// every toric NCCR.
    pub fn normalized_area(&self) -> i64 {
        let pts = self.points();
        let n = pts.len();
        (0..n)
            .map(|i| pts[i][0] * pts[(i + 1) % n][1] - pts[i][1] * pts[(i + 1) % n][0])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conifold() -> ToricData {
        ToricData::from_points(&[[0, 0], [1, 0], [1, 1], [0, 1]]).unwrap()
    }

    fn r(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    #[test]
    fn conifold_validation() {
        // scrambled input order is canonicalised
        let d = ToricData::from_points(&[[1, 1], [0, 1], [1, 0], [0, 0]]).unwrap();
        assert_eq!(d.rays(), &[[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]);
        assert_eq!(d.gram(), &[[2, 1, 2], [1, 2, 2], [2, 2, 4]]);
        assert_eq!(d.gram_det(), 4);
    }

    #[test]
    fn smooth_triangle() {
        let d = ToricData::from_points(&[[0, 0], [1, 0], [0, 1]]).unwrap();
        assert_eq!(d.triangle_index(0, 1, 2), 1);
        assert_eq!(d.gram_det(), 1);
    }

    #[test]
    fn rejects_edge_points_and_duplicates() {
        let err = ToricData::from_points(&[[0, 0], [2, 0], [1, 1], [0, 1], [1, 0]]).unwrap_err();
        assert_eq!(err, LatticeError::NonConvex(1, 0));
        let err = ToricData::from_points(&[[0, 0], [1, 0], [0, 0], [0, 1]]).unwrap_err();
        assert_eq!(err, LatticeError::Duplicate(0, 0));
        let err = ToricData::from_points(&[[0, 0], [1, 1], [2, 2]]).unwrap_err();
        assert!(matches!(err, LatticeError::NonConvex(..)));
        assert_eq!(
            ToricData::from_points(&[[0, 0], [1, 0]]).unwrap_err(),
            LatticeError::TooFewPoints(2)
        );
        // interior point
        let err = ToricData::from_points(&[[0, 0], [3, 0], [0, 3], [1, 1]]).unwrap_err();
        assert_eq!(err, LatticeError::NonConvex(1, 1));
    }

    #[test]
    fn phi_t_examples() {
        let d = conifold();
        assert_eq!(d.phi_t(&[1, 0, 0]).0, vec![0, 1, 1, 0]);
        assert_eq!(d.phi_t(&[0, 0, 0]).0, vec![0; 4]);
        assert_eq!(d.phi_t(&[0, 0, 1]).0, vec![1; 4]);
    }

    #[test]
    fn kappa_examples() {
        let d = conifold();
        assert_eq!(
            d.kappa(&[0, 0, 0, 1]),
            RationalVec3([r(-1, 2), r(1, 2), r(1, 4)])
        );
        assert_eq!(
            d.kappa(&[1, 1, 1, 1]),
            RationalVec3::from_integers([0, 0, 1])
        );
        let m = [3, -2, 5];
        assert_eq!(d.kappa(&d.phi_t(&m)), RationalVec3::from_integers(m));
    }

    #[test]
    fn normalize_examples() {
        let d = conifold();
        let (b, m) = d.normalize(&[0, 0, 0, 1]);
        assert_eq!((b.0.clone(), m), (vec![0, 1, 1, 1], [1, 0, 0]));
        assert_eq!(d.kappa(&b), RationalVec3([r(1, 2), r(1, 2), r(1, 4)]));
        let (b, m) = d.normalize(&[1, 0, 0, 0]);
        assert_eq!((b.0.clone(), m), (vec![1, 1, 2, 1], [1, 1, 0]));
        assert_eq!(d.kappa(&b), RationalVec3([r(1, 2), r(1, 2), r(3, 4)]));
        assert_eq!(d.normalize(&[0; 4]), (BVector::zero(4), [0, 0, 0]));
    }

    #[test]
    fn quotient_examples() {
        let d = conifold();
        let q = d
            .quotient_cone(&[[2, -1, 0], [1, 2, 0], [0, 0, 1]])
            .unwrap();
        let mut pts = q.points();
        pts.sort();
        assert_eq!(pts, vec![[-1, 2], [0, 0], [1, 3], [2, 1]]);
        assert_eq!(det3(&[[2, -1, 0], [1, 2, 0], [0, 0, 1]]), 5);
        assert_eq!(
            d.quotient_cone(&[[1, 0, 0], [0, 1, 0], [0, 0, 1]]).unwrap(),
            d
        );
        let q = d.quotient_cone(&[[1, 0, 0], [0, 2, 0], [0, 0, 1]]).unwrap();
        assert_eq!(q.points(), vec![[0, 0], [1, 0], [1, 2], [0, 2]]);
        assert_eq!(
            d.quotient_cone(&[[1, 0, 0], [0, 1, 0], [0, 1, 1]])
                .unwrap_err(),
            LatticeError::HeightNotPreserved
        );
        let q = d.quotient_cone(&[[2, 0, 0], [0, 2, 0], [0, 0, 1]]).unwrap();
        assert_eq!(q.normalized_area(), 4 * d.normalized_area());
        assert_eq!(
            d.quotient_cone(&[[1, 1, 0], [1, 1, 0], [0, 0, 1]])
                .unwrap_err(),
            LatticeError::SingularMatrix
        );
    }

    #[test]
    fn boundary_and_interior() {
        let d = ToricData::from_points(&[[1, -1], [0, 1], [-1, -1]]).unwrap();
        assert_eq!(d.interior_points(), vec![[0, 0]]);
        assert_eq!(d.boundary_points().len(), 4);
        assert_eq!(d.normalized_area(), 4);
    }

    #[test]
    fn adjugate_identity() {
        let m = [[2, 1, 2], [1, 2, 2], [2, 2, 4]];
        let p = mat_mul(&m, &adj3(&m));
        assert_eq!(p, [[4, 0, 0], [0, 4, 0], [0, 0, 4]]);
    }
}
