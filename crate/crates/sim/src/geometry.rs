//! Ellipse and disc predicates used for contact and occlusion.

pub type Vec2 = [f64; 2];

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn unit(angle: f64) -> Vec2 {
    [angle.cos(), angle.sin()]
}

/// A filled ellipse given by its center, semi-axes and major-axis angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center: Vec2,
    /// Semi-axis along `angle`.
    pub semi_major: f64,
    /// Semi-axis perpendicular to `angle`.
    pub semi_minor: f64,
    pub angle: f64,
}

impl Ellipse {
    /// Coordinates of `p` in the ellipse's own axes.
    #[inline]
    pub fn to_local(&self, p: Vec2) -> Vec2 {
        let d = sub(p, self.center);
        let (s, c) = self.angle.sin_cos();
        [d[0] * c + d[1] * s, -d[0] * s + d[1] * c]
    }

    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        let l = self.to_local(p);
        (l[0] / self.semi_major).powi(2) + (l[1] / self.semi_minor).powi(2) <= 1.0
    }

    /// Euclidean distance from `p` to the ellipse boundary.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        let l = self.to_local(p);
        let (e0, e1, y0, y1) = if self.semi_major >= self.semi_minor {
            (self.semi_major, self.semi_minor, l[0].abs(), l[1].abs())
        } else {
            (self.semi_minor, self.semi_major, l[1].abs(), l[0].abs())
        };
        distance_point_ellipse(e0, e1, y0, y1)
    }

    /// Whether the ellipse and the closed disc `(center, radius)` intersect.
    pub fn overlaps_disc(&self, center: Vec2, radius: f64) -> bool {
        self.contains(center) || self.boundary_distance(center) < radius
    }
}

/// Distance from a first-quadrant point `(y0, y1)` to the axis-aligned
/// ellipse with semi-axes `e0 ≥ e1`, by bisection on the Lagrange parameter.
fn distance_point_ellipse(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1).powi(2);
                let sbar = lagrange_root(r0, z0, z1, g);
                let x0 = r0 * y0 / (sbar + r0);
                let x1 = y1 / (sbar + 1.0);
                (x0 - y0).hypot(x1 - y1)
            } else {
                0.0
            }
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn lagrange_root(r0: f64, z0: f64, z1: f64, mut g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Whether `p` lies within `half_width` of the segment `a`–`b`.
pub fn near_segment(p: Vec2, a: Vec2, b: Vec2, half_width: f64) -> bool {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 {
        (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    norm(sub(p, q)) <= half_width
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_distance(e: &Ellipse, p: Vec2) -> f64 {
        (0..200_000)
            .map(|i| {
                let t = i as f64 / 200_000.0 * std::f64::consts::TAU;
                let (s, c) = e.angle.sin_cos();
                let lx = e.semi_major * t.cos();
                let ly = e.semi_minor * t.sin();
                let q = [e.center[0] + lx * c - ly * s, e.center[1] + lx * s + ly * c];
                norm(sub(p, q))
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn distance_matches_dense_sampling() {
        let e = Ellipse {
            center: [10.0, -4.0],
            semi_major: 60.0,
            semi_minor: 22.0,
            angle: 0.7,
        };
        for p in [[100.0, 50.0], [10.0, -4.0], [30.0, 10.0], [-70.0, -40.0], [10.0, 30.0]] {
            let d = e.boundary_distance(p);
            let b = brute_distance(&e, p);
            assert!((d - b).abs() < 1e-2, "{p:?}: {d} vs {b}");
        }
    }

    #[test]
    fn disc_overlap() {
        let e = Ellipse {
            center: [0.0, 0.0],
            semi_major: 50.0,
            semi_minor: 20.0,
            angle: 0.0,
        };
        assert!(e.overlaps_disc([0.0, 0.0], 1.0));
        assert!(e.overlaps_disc([0.0, 29.0], 10.0));
        assert!(!e.overlaps_disc([0.0, 31.0], 10.0));
        assert!(!e.overlaps_disc([61.0, 0.0], 10.0));
    }

    #[test]
    fn segment_band() {
        assert!(near_segment([5.0, 2.0], [0.0, 0.0], [10.0, 0.0], 2.0));
        assert!(!near_segment([12.5, 0.0], [0.0, 0.0], [10.0, 0.0], 2.0));
    }
}
