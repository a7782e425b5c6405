//! Cohen–Macaulay test for rank one reflexive modules and enumeration of all
//! isomorphism classes of such modules.
//!
//! A module `T(b)` fails to be CM exactly when some `m ∈ M` has a signature
//! (`+` at ray `i` iff `<m, v_i> >= b_i`) that is not a cyclic segment. Any such
//! signature contains an alternating pattern on four rays, and the points with a
//! given alternating pattern form a bounded polytope. We search those polytopes
//! directly.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::RangeInclusive;

use thiserror::Error;

use crate::lattice::{adj3, det3, dot, mat_vec, BVector, ToricData, Vec3};

pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CmError {
    #[error("the vector without position {0} is not CM for the smaller cone")]
    PrefixNotCm(usize),
    #[error("interval search did not settle within {0} steps")]
    StepCapExceeded(usize),
}

/// Sign pattern of a point `m` against a vector `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature(pub Vec<bool>);

impl Signature {
    pub fn of(data: &ToricData, b: &[i64], m: &Vec3) -> Self {
        Signature(
            data.rays()
                .iter()
                .zip(b)
                .map(|(v, bi)| dot(m, v) >= *bi)
                .collect(),
        )
    }

    /// True when the `+` entries form a cyclic interval (possibly empty or full).
    pub fn is_segment(&self) -> bool {
        let k = self.0.len();
        let changes = (0..k).filter(|&i| self.0[i] != self.0[(i + 1) % k]).count();
        changes <= 2
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s { "+" } else { "-" })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CmWitness {
    Cm,
    NotCm { point: Vec3, signature: Signature },
}

impl CmWitness {
    pub fn is_cm(&self) -> bool {
        matches!(self, CmWitness::Cm)
    }

    pub fn point(&self) -> Option<Vec3> {
        match self {
            CmWitness::Cm => None,
            CmWitness::NotCm { point, .. } => Some(*point),
        }
    }
}

fn floor_div(n: i64, d: i64) -> i64 {
    n.div_euclid(d)
}

fn ceil_div(n: i64, d: i64) -> i64 {
    -(-n).div_euclid(d)
}

/// Solves `<x, v_j> = c_j` for three rays; returns numerators and a positive denominator.
fn triple_point(rays: [Vec3; 3], c: Vec3) -> (Vec3, i64) {
    let m = rays;
    let det = det3(&m);
    debug_assert_ne!(det, 0);
    let num = mat_vec(&adj3(&m), &c);
    if det < 0 {
        (num.map(|x| -x), -det)
    } else {
        (num, det)
    }
}

/// Integer bounding box `[xlo, xhi] x [ylo, yhi]` of a set of rational points.
fn xy_box(points: &[(Vec3, i64)]) -> (i64, i64, i64, i64) {
    let xlo = points
        .iter()
        .map(|(n, d)| floor_div(n[0], *d))
        .min()
        .unwrap();
    let xhi = points
        .iter()
        .map(|(n, d)| ceil_div(n[0], *d))
        .max()
        .unwrap();
    let ylo = points
        .iter()
        .map(|(n, d)| floor_div(n[1], *d))
        .min()
        .unwrap();
    let yhi = points
        .iter()
        .map(|(n, d)| ceil_div(n[1], *d))
        .max()
        .unwrap();
    (xlo, xhi, ylo, yhi)
}

/// Lexicographically least lattice point with the given alternating pattern on
/// rays `idx`, if any. `plus[j]` selects `<m, v> >= b`; otherwise `<m, v> <= b - 1`.
fn region_least_point(
    data: &ToricData,
    b: &[i64],
    idx: [usize; 4],
    plus: [bool; 4],
) -> Option<Vec3> {
    let rays = data.rays();
    let offset = |j: usize| if plus[j] { b[idx[j]] } else { b[idx[j]] - 1 };
    let mut corners = Vec::with_capacity(4);
    for skip in 0..4 {
        let sel: Vec<usize> = (0..4).filter(|&j| j != skip).collect();
        corners.push(triple_point(
            [rays[idx[sel[0]]], rays[idx[sel[1]]], rays[idx[sel[2]]]],
            [offset(sel[0]), offset(sel[1]), offset(sel[2])],
        ));
    }
    let (xlo, xhi, ylo, yhi) = xy_box(&corners);
    // Every ray has third coordinate 1, so each constraint bounds m_z directly.
    for mx in xlo..=xhi {
        for my in ylo..=yhi {
            let mut lower = i64::MIN;
            let mut upper = i64::MAX;
            for j in 0..4 {
                let v = rays[idx[j]];
                let rest = offset(j) - v[0] * mx - v[1] * my;
                if plus[j] {
                    lower = lower.max(rest);
                } else {
                    upper = upper.min(rest);
                }
            }
            if lower <= upper {
                return Some([mx, my, lower]);
            }
        }
    }
    None
}

/// Decides whether `T(b)` is CM. On failure the witness is the lexicographically
/// least point whose signature is not a segment.
pub fn is_cm(data: &ToricData, b: &[i64]) -> CmWitness {
    let k = data.k();
    assert_eq!(b.len(), k);
    let mut best: Option<Vec3> = None;
    for i1 in 0..k {
        for i2 in i1 + 1..k {
            for i3 in i2 + 1..k {
                for i4 in i3 + 1..k {
                    for first in [true, false] {
                        let plus = [first, !first, first, !first];
                        if let Some(p) = region_least_point(data, b, [i1, i2, i3, i4], plus) {
                            if best.is_none_or(|q| p < q) {
                                best = Some(p);
                            }
                        }
                    }
                }
            }
        }
    }
    match best {
        None => CmWitness::Cm,
        Some(point) => CmWitness::NotCm {
            signature: Signature::of(data, b, &point),
            point,
        },
    }
}

/// Brute-force CM decision: scans every lattice point of a box containing all
/// vertices of the hyperplane arrangement `<x, v_i> ∈ {b_i - 1, b_i}`, in
/// lexicographic order. Slow; intended as an independent check of [`is_cm`].
pub fn is_cm_by_cells(data: &ToricData, b: &[i64]) -> CmWitness {
    let k = data.k();
    let rays = data.rays();
    let mut corners = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                for mask in 0..8u32 {
                    let off = |bit: u32, idx: usize| b[idx] - ((mask >> bit) & 1) as i64;
                    corners.push(triple_point(
                        [rays[i], rays[j], rays[l]],
                        [off(0, i), off(1, j), off(2, l)],
                    ));
                }
            }
        }
    }
    let (xlo, xhi, ylo, yhi) = xy_box(&corners);
    let zlo = corners
        .iter()
        .map(|(n, d)| floor_div(n[2], *d))
        .min()
        .unwrap();
    let zhi = corners
        .iter()
        .map(|(n, d)| ceil_div(n[2], *d))
        .max()
        .unwrap();
    for mx in xlo..=xhi {
        for my in ylo..=yhi {
            for mz in zlo..=zhi {
                let m = [mx, my, mz];
                let sig = Signature::of(data, b, &m);
                if !sig.is_segment() {
                    return CmWitness::NotCm {
                        point: m,
                        signature: sig,
                    };
                }
            }
        }
    }
    CmWitness::Cm
}

fn insert_at(prefix: &[i64], position: usize, z: i64) -> Vec<i64> {
    let mut v = Vec::with_capacity(prefix.len() + 1);
    v.extend_from_slice(&prefix[..position]);
    v.push(z);
    v.extend_from_slice(&prefix[position..]);
    v
}

/// The set of `z` for which inserting `z` at `position` of `prefix` gives a CM
/// vector. This set is always an interval; `None` means it is empty.
pub fn cm_interval(
    data: &ToricData,
    position: usize,
    prefix: &[i64],
    probe: i64,
    max_steps: usize,
) -> Result<Option<RangeInclusive<i64>>, CmError> {
    assert_eq!(prefix.len() + 1, data.k());
    if data.k() > 3 && !is_cm(&data.without(position), prefix).is_cm() {
        return Err(CmError::PrefixNotCm(position));
    }
    let v = data.rays()[position];
    // every CM value lies in [lower, upper]
    let mut lower = i64::MIN;
    let mut upper = i64::MAX;
    let mut z = probe;
    let mut steps = 0usize;
    let mut tick = || {
        steps += 1;
        if steps > max_steps {
            Err(CmError::StepCapExceeded(max_steps))
        } else {
            Ok(())
        }
    };
    loop {
        tick()?;
        match is_cm(data, &insert_at(prefix, position, z)) {
            CmWitness::Cm => break,
            CmWitness::NotCm { point, .. } => {
                let val = dot(&point, &v);
                // The witness keeps its signature for every z on the same side of val.
                if val < z {
                    upper = val;
                    z = val;
                } else {
                    lower = val + 1;
                    z = val + 1;
                }
                if lower > upper {
                    return Ok(None);
                }
            }
        }
    }
    let mut lo = z;
    while lo > lower {
        tick()?;
        if !is_cm(data, &insert_at(prefix, position, lo - 1)).is_cm() {
            break;
        }
        lo -= 1;
    }
    let mut hi = z;
    while hi < upper {
        tick()?;
        if !is_cm(data, &insert_at(prefix, position, hi + 1)).is_cm() {
            break;
        }
        hi += 1;
    }
    Ok(Some(lo..=hi))
}

/// All normalized CM vectors, sorted lexicographically. Each isomorphism class
/// of CM modules appears exactly once.
pub fn enumerate_cm(data: &ToricData) -> Result<Vec<BVector>, CmError> {
    enumerate_cm_with(data, DEFAULT_MAX_STEPS)
}

pub fn enumerate_cm_with(data: &ToricData, max_steps: usize) -> Result<Vec<BVector>, CmError> {
    let base = data.prefix(3);
    let d = base.triangle_index(0, 1, 2);
    // d·Z^3 lies in the image of φᵀ, so [0, d)^3 meets every class.
    let mut classes = BTreeSet::new();
    for b0 in 0..d {
        for b1 in 0..d {
            for b2 in 0..d {
                classes.insert(base.normalized(&[b0, b1, b2]));
            }
        }
    }
    debug_assert_eq!(classes.len() as i64, d);
    for j in 3..data.k() {
        let sub = data.prefix(j + 1);
        let mut next = BTreeSet::new();
        for b in &classes {
            if let Some(range) = cm_interval(&sub, j, b, 0, max_steps)? {
                for z in range {
                    let mut v = b.0.clone();
                    v.push(z);
                    next.insert(sub.normalized(&v));
                }
            }
        }
        classes = next;
    }
    Ok(classes.into_iter().collect())
}
