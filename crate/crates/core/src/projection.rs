//! Slack-update projections. All functions work in place and never allocate.

use crate::problem::{Bounds, ConeSlice};

/// Clamps `z` elementwise into `[lower, upper]`.
#[inline]
pub fn project_box(z: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in z.iter_mut().zip(lower).zip(upper) {
        *v = lo.max(hi.min(*v));
    }
}

/// Projects onto `{ z : z[last] >= ‖z[..last]‖₂ }`.
///
/// A zero head falls into one of the first two cases depending on the sign
/// of the apex, so the division below only ever sees a positive norm.
#[inline]
pub fn project_soc(z: &mut [f64]) {
    let Some((apex, head)) = z.split_last_mut() else {
        return;
    };
    let mut sq = 0.0;
    for v in head.iter() {
        sq += v * v;
    }
    let norm = sq.sqrt();
    let a = *apex;
    if norm <= -a {
        head.fill(0.0);
        *apex = 0.0;
    } else if norm <= a {
        // already inside
    } else {
        let scale = 0.5 * (1.0 + a / norm);
        for v in head.iter_mut() {
            *v *= scale;
        }
        *apex = scale * norm;
    }
}

/// Box projection on every index, then cone projection on each slice.
/// Structure is assumed validated: cones are disjoint from each other and
/// from finitely bounded indices.
#[inline]
pub fn project_slacks(z: &mut [f64], bounds: Option<&Bounds>, cones: &[ConeSlice]) {
    if let Some(b) = bounds {
        project_box(z, b.lower.as_slice(), b.upper.as_slice());
    }
    for cone in cones {
        project_soc(&mut z[cone.range()]);
    }
}

/// `max(0, ‖head‖ - apex)`; zero inside the cone.
pub fn cone_violation(z: &[f64]) -> f64 {
    let (apex, head) = z.split_last().expect("cone slices have length >= 2");
    let norm = head.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm - apex).max(0.0)
}

/// Sum of elementwise excess outside `[lower, upper]`.
pub fn box_violation(z: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    z.iter()
        .zip(lower)
        .zip(upper)
        .map(|((v, lo), hi)| (lo - v).max(0.0) + (v - hi).max(0.0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn soc(v: &[f64]) -> Vec<f64> {
        let mut z = v.to_vec();
        project_soc(&mut z);
        z
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn box_clamps_above_and_keeps_interior() {
        let mut z = [5.0];
        project_box(&mut z, &[-1.0], &[1.0]);
        assert_eq!(z, [1.0]);
        let mut z = [0.3];
        project_box(&mut z, &[-1.0], &[1.0]);
        assert_eq!(z, [0.3]);
        let mut z = [-2.0, 0.0, 2.0];
        project_box(&mut z, &[-1.0; 3], &[1.0; 3]);
        assert_eq!(z, [-1.0, 0.0, 1.0]);
    }

    #[test]
    fn box_with_infinite_side_is_one_sided() {
        let mut z = [-7.0, 7.0];
        project_box(&mut z, &[f64::NEG_INFINITY, 0.0], &[0.0, f64::INFINITY]);
        assert_eq!(z, [-7.0, 7.0]);
    }

    #[test]
    fn soc_three_cases() {
        assert_eq!(soc(&[0.3, 0.4, 1.0]), vec![0.3, 0.4, 1.0]);
        assert_eq!(soc(&[0.3, 0.4, -1.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(soc(&[3.0, 4.0, 0.0]), vec![1.5, 2.0, 2.5]);
    }

    #[test]
    fn soc_zero_head() {
        assert_eq!(soc(&[0.0, 0.0, -2.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(soc(&[0.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(soc(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn soc_case_boundaries_agree() {
        // ‖v‖ = a: third-case formula would return z itself
        let z = [3.0, 4.0, 5.0];
        assert_eq!(soc(&z), z.to_vec());
        let scale = 0.5 * (1.0 + 5.0 / 5.0);
        assert_eq!(scale, 1.0);
        // ‖v‖ = -a: third-case formula would return 0
        let z = [3.0, 4.0, -5.0];
        assert_eq!(soc(&z), vec![0.0; 3]);
        assert_eq!(0.5 * (1.0 + -5.0 / 5.0), 0.0);
    }

    #[test]
    fn slacks_compose_disjoint_slices() {
        let bounds = Bounds::new(
            dvector![-1.0, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
            dvector![1.0, f64::INFINITY, f64::INFINITY, f64::INFINITY],
        );
        let mut z = [5.0, 3.0, 4.0, 0.0];
        project_slacks(&mut z, Some(&bounds), &[ConeSlice::new(1, 3)]);
        assert_eq!(z, [1.0, 1.5, 2.0, 2.5]);
    }

    #[test]
    fn slacks_identity_without_constraints() {
        let mut z = [5.0, -3.0, 4.0];
        project_slacks(&mut z, None, &[]);
        assert_eq!(z, [5.0, -3.0, 4.0]);
    }

    #[test]
    fn zero_is_fixed_by_every_configuration() {
        let bounds = Bounds::new(dvector![-1.0, -2.0, 0.0], dvector![1.0, 0.0, 3.0]);
        let mut z = [0.0; 3];
        project_slacks(&mut z, Some(&bounds), &[]);
        assert_eq!(z, [0.0; 3]);
        project_slacks(&mut z, None, &[ConeSlice::new(0, 3)]);
        assert_eq!(z, [0.0; 3]);
    }

    #[test]
    fn violations() {
        assert_eq!(cone_violation(&[3.0, 4.0, 1.0]), 4.0);
        assert_eq!(cone_violation(&[3.0, 4.0, 6.0]), 0.0);
        assert_eq!(box_violation(&[2.0, -3.0, 0.0], &[-1.0; 3], &[1.0; 3]), 3.0);
    }

    fn vec_in(dim: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
        dim.prop_flat_map(|d| prop::collection::vec(-10.0..10.0f64, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn soc_idempotent(z in vec_in(2..=10)) {
            let once = soc(&z);
            let twice = soc(&once);
            prop_assert!(dist(&once, &twice) <= 1e-12);
        }

        #[test]
        fn soc_output_in_cone(z in vec_in(2..=10)) {
            let p = soc(&z);
            prop_assert!(cone_violation(&p) <= 1e-12);
        }

        #[test]
        fn soc_nonexpansive((a, b) in (2..=10usize).prop_flat_map(|d| (
            prop::collection::vec(-10.0..10.0f64, d),
            prop::collection::vec(-10.0..10.0f64, d),
        ))) {
            prop_assert!(dist(&soc(&a), &soc(&b)) <= dist(&a, &b) + 1e-12);
        }

        #[test]
        fn box_nonexpansive_and_idempotent(
            (a, b, lo, width) in (1..=8usize).prop_flat_map(|d| (
                prop::collection::vec(-10.0..10.0f64, d),
                prop::collection::vec(-10.0..10.0f64, d),
                prop::collection::vec(-5.0..5.0f64, d),
                prop::collection::vec(0.0..5.0f64, d),
            ))
        ) {
            let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
            let (mut pa, mut pb) = (a.clone(), b.clone());
            project_box(&mut pa, &lo, &hi);
            project_box(&mut pb, &lo, &hi);
            prop_assert!(dist(&pa, &pb) <= dist(&a, &b) + 1e-12);
            let again = { let mut t = pa.clone(); project_box(&mut t, &lo, &hi); t };
            prop_assert_eq!(again, pa);
        }
    }
}
