//! Exact combinatorics of the discrete 2-torus `Z_N x Z_N`.
//!
//! Coordinates are 0-based. The distance is the folded L1 distance
//! `rho(u, v) = rho_N(u1 - v1) + rho_N(u2 - v2)` with `rho_N(i) = min(i, N - i)`.
//! The sphere of radius `r` around any vertex ("ring") has a size that does not
//! depend on the center:
//!
//! * odd `N`: `4r` for `r < N/2`, `4(N - r)` for `N/2 < r < N`;
//! * even `N`: additionally `4r - 2` at `r = N/2` and a single antipode at `r = N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: u32,
    pub y: u32,
}

impl TorusPoint {
    /// Builds a point, reducing both coordinates modulo `side`.
    pub fn wrapped(x: i64, y: i64, side: u32) -> Self {
        let n = side as i64;
        TorusPoint {
            x: x.rem_euclid(n) as u32,
            y: y.rem_euclid(n) as u32,
        }
    }
}

impl std::fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// The discrete torus of side `N >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Torus {
    side: u32,
}

impl Torus {
    pub fn new(side: u32) -> Result<Self> {
        if side < 3 {
            return Err(Error::DegenerateTorus(side));
        }
        Ok(Torus { side })
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn vertex_count(&self) -> usize {
        (self.side as usize) * (self.side as usize)
    }

    /// Largest attainable distance: `N` for even sides, `N - 1` for odd ones.
    pub fn max_distance(&self) -> u32 {
        if self.side % 2 == 0 {
            self.side
        } else {
            self.side - 1
        }
    }

    pub fn point(&self, x: u32, y: u32) -> Result<TorusPoint> {
        if x >= self.side || y >= self.side {
            return Err(Error::PointOutOfRange { x, y, side: self.side });
        }
        Ok(TorusPoint { x, y })
    }

    #[inline]
    pub fn index(&self, p: TorusPoint) -> u32 {
        p.x * self.side + p.y
    }

    #[inline]
    pub fn point_at(&self, index: u32) -> TorusPoint {
        TorusPoint {
            x: index / self.side,
            y: index % self.side,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = TorusPoint> + '_ {
        (0..self.vertex_count() as u32).map(move |i| self.point_at(i))
    }

    /// `rho_N(i) = min(i, N - i)` for a coordinate difference `i`.
    #[inline]
    pub fn fold(&self, diff: i64) -> u32 {
        let n = self.side as i64;
        let i = diff.rem_euclid(n);
        i.min(n - i) as u32
    }

    #[inline]
    pub fn distance(&self, u: TorusPoint, v: TorusPoint) -> u32 {
        self.fold(u.x as i64 - v.x as i64) + self.fold(u.y as i64 - v.y as i64)
    }

    #[inline]
    pub fn distance_by_index(&self, u: u32, v: u32) -> u32 {
        self.distance(self.point_at(u), self.point_at(v))
    }

    /// Displacement `v - u` reduced modulo `N`.
    pub fn displacement(&self, u: TorusPoint, v: TorusPoint) -> TorusPoint {
        TorusPoint::wrapped(v.x as i64 - u.x as i64, v.y as i64 - u.y as i64, self.side)
    }

    pub fn translate(&self, p: TorusPoint, by: TorusPoint) -> TorusPoint {
        TorusPoint::wrapped(p.x as i64 + by.x as i64, p.y as i64 + by.y as i64, self.side)
    }

    pub fn ring_size(&self, r: u32) -> u64 {
        ring_size_formula(self.side, r)
    }

    // Signed representatives of a coordinate offset: -lo..=hi, one per residue.
    fn offset_range(&self) -> (i64, i64) {
        let n = self.side as i64;
        ((n - 1) / 2, n / 2)
    }

    /// Offsets `(dx, dy)` of the ring of radius `r`, in canonical order:
    /// increasing signed first offset, then increasing signed second offset.
    fn ring_offsets(&self, r: u32) -> impl Iterator<Item = (i64, i64)> {
        let (lo, hi) = self.offset_range();
        let r = r as i64;
        let start = (-lo).max(-r);
        let end = hi.min(r);
        (start..=end).flat_map(move |dx| {
            let b = r - dx.abs();
            let first = if b == 0 {
                Some((dx, 0))
            } else if b <= lo {
                Some((dx, -b))
            } else {
                None
            };
            let second = if b > 0 && b <= hi { Some((dx, b)) } else { None };
            first.into_iter().chain(second)
        })
    }

    /// All points at distance exactly `r` from `center`, canonical order.
    /// Radii outside the support give an empty list.
    pub fn ring(&self, center: TorusPoint, r: u32) -> Vec<TorusPoint> {
        if r == 0 || r > self.max_distance() {
            return Vec::new();
        }
        self.ring_offsets(r)
            .map(|(dx, dy)| TorusPoint::wrapped(center.x as i64 + dx, center.y as i64 + dy, self.side))
            .collect()
    }

    /// The `idx`-th member (canonical order) of the ring of radius `r`.
    ///
    /// Panics if `idx >= ring_size(r)`.
    pub fn ring_member(&self, center: TorusPoint, r: u32, idx: u64) -> TorusPoint {
        let (lo, hi) = self.offset_range();
        let ri = r as i64;
        let start = (-lo).max(-ri);
        let end = hi.min(ri);
        let mut remaining = idx;
        for dx in start..=end {
            let b = ri - dx.abs();
            let lower = b == 0 || b <= lo;
            let upper = b > 0 && b <= hi;
            let count = lower as u64 + upper as u64;
            if remaining < count {
                let dy = if b == 0 {
                    0
                } else if lower && remaining == 0 {
                    -b
                } else {
                    b
                };
                return TorusPoint::wrapped(center.x as i64 + dx, center.y as i64 + dy, self.side);
            }
            remaining -= count;
        }
        panic!("ring member {idx} out of range for radius {r} on side {}", self.side);
    }
}

/// Torus distance between two points on a torus of side `side`.
pub fn torus_distance(u: TorusPoint, v: TorusPoint, side: u32) -> Result<u32> {
    let torus = Torus::new(side)?;
    torus.point(u.x, u.y)?;
    torus.point(v.x, v.y)?;
    Ok(torus.distance(u, v))
}

/// Closed-form ring size `N_r`; zero outside the support.
pub fn ring_size_formula(side: u32, r: u32) -> u64 {
    let (n, r) = (side as u64, r as u64);
    if r == 0 {
        return 0;
    }
    if n % 2 == 1 {
        if 2 * r < n {
            4 * r
        } else if r < n {
            4 * (n - r)
        } else {
            0
        }
    } else if 2 * r < n {
        4 * r
    } else if 2 * r == n {
        4 * r - 2
    } else if r < n {
        4 * (n - r)
    } else if r == n {
        1
    } else {
        0
    }
}

/// Same as [`ring_size_formula`]; kept under the operation's public name.
pub fn ring_size(side: u32, r: u32) -> u64 {
    ring_size_formula(side, r)
}

pub fn enumerate_ring(center: TorusPoint, r: u32, side: u32) -> Result<Vec<TorusPoint>> {
    let torus = Torus::new(side)?;
    torus.point(center.x, center.y)?;
    Ok(torus.ring(center, r))
}

/// `min{c / (N^{2 - alpha} r^alpha), 1}`, with `r = 0` mapped to zero (no loops).
pub fn edge_probability(side: u32, r: u32, c: f64, alpha: f64) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidCoupling(c));
    }
    if !(0.0..2.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(ring_probability(side, r, c, alpha))
}

/// Unchecked edge probability; `c = 0` yields zero.
#[inline]
pub(crate) fn ring_probability(side: u32, r: u32, c: f64, alpha: f64) -> f64 {
    if r == 0 || c == 0.0 {
        return 0.0;
    }
    let n = side as f64;
    let denom = if alpha == 1.0 {
        n * r as f64
    } else if alpha == 0.0 {
        n * n
    } else {
        n.powf(2.0 - alpha) * (r as f64).powf(alpha)
    };
    (c / denom).min(1.0)
}
