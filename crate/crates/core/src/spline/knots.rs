use super::SplineError;

/// Non-decreasing knot sequence with its polynomial degree.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    /// Validates monotonicity, minimum length and the clamped (open) form.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self, SplineError> {
        if knots.len() < 2 * (degree + 1) {
            return Err(SplineError::InvalidKnots(format!(
                "degree {degree} needs at least {} knots, got {}",
                2 * (degree + 1),
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(SplineError::InvalidKnots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(SplineError::InvalidKnots("knots must be non-decreasing".into()));
        }
        let n = knots.len();
        let clamped = knots[..=degree].iter().all(|&k| k == knots[0]) && knots[n - degree - 1..].iter().all(|&k| k == knots[n - 1]);
        if !clamped {
            return Err(SplineError::InvalidKnots(format!("end knots must each repeat {} times", degree + 1)));
        }
        if knots[0] == knots[n - 1] {
            return Err(SplineError::InvalidKnots("empty parameter range".into()));
        }
        Ok(Self { degree, knots })
    }

    /// Clamped knots on `[0, 1]` with uniformly spaced interior knots.
    pub fn clamped_uniform(degree: usize, n_basis: usize) -> Result<Self, SplineError> {
        if n_basis < degree + 1 {
            return Err(SplineError::InvalidKnots(format!(
                "{n_basis} control points cannot carry degree {degree}"
            )));
        }
        let interior = n_basis - degree - 1;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..=interior).map(|i| i as f64 / (interior + 1) as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Greville abscissa of basis function `i`; placing control points there
    /// makes the spline reproduce the identity map.
    pub fn greville(&self, i: usize) -> f64 {
        let p = self.degree;
        if p == 0 {
            return 0.5 * (self.knots[i] + self.knots[i + 1]);
        }
        self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64
    }

    /// Index `s` of the knot span with `knots[s] <= u < knots[s+1]`; the last
    /// non-empty span is used at the right end of the domain.
    fn span(&self, u: f64) -> usize {
        let n = self.n_basis();
        if u >= self.knots[n] {
            return n - 1;
        }
        // Largest s in [p, n-1] with knots[s] <= u.
        let p = self.degree;
        let s = self.knots[..=n].partition_point(|&k| k <= u) - 1;
        s.clamp(p, n - 1)
    }

    /// The `degree + 1` basis values that may be non-zero at `u`, together with
    /// the index of the first one.
    pub fn nonzero_basis(&self, u: f64) -> Result<(usize, Vec<f64>), SplineError> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&u) {
            return Err(SplineError::OutOfDomain { u, lo, hi });
        }
        let p = self.degree;
        let s = self.span(u);
        let t = &self.knots;
        // Triangular Cox–de Boor evaluation.
        let mut n = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = u - t[s + 1 - j];
            right[j] = t[s + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        Ok((s - p, n))
    }

    /// All basis functions `N_{i,degree}(u)`, `i = 0..n_basis`.
    pub fn basis_functions(&self, u: f64) -> Result<Vec<f64>, SplineError> {
        let (first, local) = self.nonzero_basis(u)?;
        let mut all = vec![0.0; self.n_basis()];
        all[first..first + local.len()].copy_from_slice(&local);
        Ok(all)
    }
}

/// Free-function form of [`KnotVector::basis_functions`].
pub fn basis_functions(kv: &KnotVector, u: f64) -> Result<Vec<f64>, SplineError> {
    kv.basis_functions(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Literal recursive definition, used only as an oracle.
    fn cox_de_boor(t: &[f64], i: usize, p: usize, u: f64, last: bool) -> f64 {
        if p == 0 {
            let inside = t[i] <= u && u < t[i + 1];
            // Close the final non-empty interval at the right domain end.
            let end = last && u == t[i + 1] && t[i] < t[i + 1] && t[i + 1..].iter().all(|&k| k == u);
            return if inside || end { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = t[i + p] - t[i];
        if d1 > 0.0 {
            v += (u - t[i]) / d1 * cox_de_boor(t, i, p - 1, u, last);
        }
        let d2 = t[i + p + 1] - t[i + 1];
        if d2 > 0.0 {
            v += (t[i + p + 1] - u) / d2 * cox_de_boor(t, i + 1, p - 1, u, last);
        }
        v
    }

    #[test]
    fn quadratic_midpoint_values() {
        let kv = KnotVector::new(2, vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 3.0, 3.0]).unwrap();
        let n = kv.basis_functions(1.5).unwrap();
        let oracle: Vec<f64> = (0..5).map(|i| cox_de_boor(kv.knots(), i, 2, 1.5, true)).collect();
        assert_eq!(oracle, vec![0.0, 0.125, 0.75, 0.125, 0.0]);
        for (a, b) in n.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn clamped_end_interpolates() {
        let kv = KnotVector::clamped_uniform(3, 7).unwrap();
        let n = kv.basis_functions(1.0).unwrap();
        assert_eq!(*n.last().unwrap(), 1.0);
        assert!(n[..n.len() - 1].iter().all(|&v| v == 0.0));
        let n = kv.basis_functions(0.0).unwrap();
        assert_eq!(n[0], 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let kv = KnotVector::clamped_uniform(2, 4).unwrap();
        assert!(matches!(kv.basis_functions(1.0001), Err(SplineError::OutOfDomain { .. })));
        assert!(kv.basis_functions(-0.1).is_err());
        assert!(KnotVector::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.5, 0.4, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(2, vec![0.0, 0.0, 0.1, 0.5, 1.0, 1.0, 1.0]).is_err());
        assert!(KnotVector::clamped_uniform(3, 3).is_err());
    }

    #[test]
    fn greville_of_clamped_quadratic() {
        let kv = KnotVector::clamped_uniform(2, 4).unwrap();
        let g: Vec<f64> = (0..4).map(|i| kv.greville(i)).collect();
        assert_eq!(g, vec![0.0, 0.25, 0.75, 1.0]);
    }

    fn arb_knots() -> impl Strategy<Value = (KnotVector, f64)> {
        (0usize..5, 0usize..6, proptest::collection::vec(0.0f64..1.0, 6), 0.0f64..=1.0).prop_map(|(p, interior, raw, s)| {
            let mut inner: Vec<f64> = raw.into_iter().take(interior).collect();
            inner.sort_by(f64::total_cmp);
            let mut knots = vec![0.0; p + 1];
            knots.extend(inner);
            knots.extend(std::iter::repeat_n(1.0, p + 1));
            (KnotVector::new(p, knots).unwrap(), s)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn partition_of_unity_and_support((kv, u) in arb_knots()) {
            let n = kv.basis_functions(u).unwrap();
            let sum: f64 = n.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            let t = kv.knots();
            let p = kv.degree();
            for (i, &v) in n.iter().enumerate() {
                prop_assert!(v >= -1e-15);
                if u < t[i] || u > t[i + p + 1] {
                    prop_assert_eq!(v, 0.0);
                }
                if t[i] < u && u < t[i + p + 1] {
                    prop_assert!(v > 0.0);
                }
                let oracle = cox_de_boor(t, i, p, u, true);
                prop_assert!((v - oracle).abs() < 1e-12);
            }
        }
    }
}
