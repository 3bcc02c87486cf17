use super::ObjectiveError;

/// Convex hull in counter-clockwise order with its perimeter.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull2D {
    pub vertices: Vec<[f64; 2]>,
    pub perimeter: f64,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain hull. Collinear input yields the two extreme points, whose
/// closed perimeter is twice the segment length.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Result<Hull2D, ObjectiveError> {
    if points.len() < 3 {
        return Err(ObjectiveError::TooFewPoints(points.len()));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(ObjectiveError::NonFinite);
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() == 1 {
        return Ok(Hull2D {
            vertices: pts,
            perimeter: 0.0,
        });
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    let perimeter = (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .sum();
    Ok(Hull2D { vertices: hull, perimeter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_square() {
        let h = convex_hull_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(h.perimeter, 4.0);
        assert_eq!(h.vertices.len(), 4);
    }

    #[test]
    fn interior_points_are_dropped() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let mut pts: Vec<[f64; 2]> = corners.to_vec();
        pts.extend((0..100).map(|_| [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)]));
        pts.shuffle(&mut rng);
        let h = convex_hull_2d(&pts).unwrap();
        // Brute force: p is extreme iff some line through it has every other
        // point strictly on one side, i.e. p is not inside any triangle.
        let extreme: Vec<[f64; 2]> = pts
            .iter()
            .copied()
            .filter(|&p| {
                !pts.iter().any(|&a| {
                    pts.iter().any(|&b| {
                        pts.iter().any(|&c| {
                            if a == p || b == p || c == p {
                                return false;
                            }
                            let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
                            (d1 > 0.0 && d2 > 0.0 && d3 > 0.0) || (d1 < 0.0 && d2 < 0.0 && d3 < 0.0)
                        })
                    })
                })
            })
            .collect();
        let mut got = h.vertices.clone();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let mut want = extreme;
        want.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        assert_eq!(got, want);
        assert_eq!(got, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
    }

    #[test]
    fn collinear_convention() {
        let h = convex_hull_2d(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(h.perimeter, 4.0);
        assert_eq!(convex_hull_2d(&[[1.0, 1.0]; 3]).unwrap().perimeter, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(convex_hull_2d(&[[0.0, 0.0], [1.0, 0.0]]), Err(ObjectiveError::TooFewPoints(2))));
        assert!(convex_hull_2d(&[[0.0, 0.0], [1.0, f64::NAN], [2.0, 0.0]]).is_err());
    }

    proptest! {
        #[test]
        fn perimeter_invariant_under_motion(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..40),
            angle in 0.0f64..std::f64::consts::TAU,
            tx in -10.0f64..10.0,
            ty in -10.0f64..10.0,
            seed in 0u64..1000,
        ) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let base = convex_hull_2d(&pts).unwrap().perimeter;
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(convex_hull_2d(&shuffled).unwrap().perimeter, base);
            let (s, c) = angle.sin_cos();
            let moved: Vec<[f64; 2]> = pts.iter().map(|p| [c * p[0] - s * p[1] + tx, s * p[0] + c * p[1] + ty]).collect();
            let p = convex_hull_2d(&moved).unwrap().perimeter;
            prop_assert!((p - base).abs() < 1e-9, "{} vs {}", p, base);
        }
    }
}
