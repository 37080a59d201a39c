use barytrack_core::sphere::{
    cosine_barycentre, cosine_energy, gc_distance, mean_cosine_energy, slerp, UnitVector,
};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = UnitVector> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("non-zero", |(x, y, z)| x * x + y * y + z * z > 1e-6)
        .prop_map(|(x, y, z)| UnitVector::new(x, y, z).unwrap())
}

/// Rotation matrix from a unit quaternion built out of four coordinates.
fn rotation(q: [f64; 4]) -> [[f64; 3]; 3] {
    let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

fn rotate(r: &[[f64; 3]; 3], p: &UnitVector) -> UnitVector {
    let v = p.as_array();
    let c = |row: &[f64; 3]| row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    UnitVector::new(c(&r[0]), c(&r[1]), c(&r[2])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn metric_properties(a in unit(), b in unit(), c in unit()) {
        prop_assert_eq!(gc_distance(&a, &a), 0.0);
        prop_assert!((gc_distance(&a, &b) - gc_distance(&b, &a)).abs() < 1e-15);
        prop_assert!(gc_distance(&a, &c) <= gc_distance(&a, &b) + gc_distance(&b, &c) + 1e-12);
        prop_assert!((cosine_energy(&a, &b) - (1.0 - gc_distance(&a, &b).cos())).abs() < 1e-12);
    }

    #[test]
    fn small_angle_energy(a in unit(), dir in unit(), d in 0.0f64..0.1) {
        // Move from a by angle d along the great circle towards dir.
        let perp = {
            let [x, y, z] = a.cross(&dir);
            UnitVector::new(x, y, z)
        };
        prop_assume!(perp.is_ok());
        let t = perp.unwrap();
        let tangent = t.cross(&a);
        let b = UnitVector::new(
            a.x() * d.cos() + tangent[0] * d.sin(),
            a.y() * d.cos() + tangent[1] * d.sin(),
            a.z() * d.cos() + tangent[2] * d.sin(),
        ).unwrap();
        let dist = gc_distance(&a, &b);
        prop_assert!((cosine_energy(&a, &b) - 0.5 * dist * dist).abs() <= dist.powi(4) / 24.0 + 1e-12);
    }

    #[test]
    fn slerp_splits_arc(a in unit(), b in unit(), t in 0.0f64..=1.0) {
        prop_assume!(gc_distance(&a, &b) < 3.1);
        let m = slerp(&a, &b, t).unwrap();
        prop_assert!((gc_distance(&a, &m) - t * gc_distance(&a, &b)).abs() < 1e-9);
        prop_assert!((gc_distance(&a, &m) + gc_distance(&m, &b) - gc_distance(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn barycentre_minimises_energy(
        pts in prop::collection::vec((unit(), 0.1f64..3.0), 1..12),
        probes in prop::collection::vec(unit(), 100),
    ) {
        let total: f64 = pts.iter().map(|(_, w)| w).sum();
        let mean = pts.iter().fold([0.0; 3], |acc, (p, w)| {
            [acc[0] + w * p.x() / total, acc[1] + w * p.y() / total, acc[2] + w * p.z() / total]
        });
        prop_assume!((mean[0].powi(2) + mean[1].powi(2) + mean[2].powi(2)).sqrt() > 0.1);
        let bary = cosine_barycentre(&pts).unwrap();
        let best = mean_cosine_energy(&pts, &bary);
        for v in &probes {
            prop_assert!(mean_cosine_energy(&pts, v) >= best - 1e-12);
        }
    }

    #[test]
    fn barycentre_rotation_equivariance(
        pts in prop::collection::vec((unit(), 0.1f64..3.0), 1..12),
        q in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
    ) {
        let q = [q.0, q.1, q.2, q.3];
        prop_assume!(q.iter().map(|c| c * c).sum::<f64>() > 1e-3);
        let Ok(bary) = cosine_barycentre(&pts) else { return Ok(()); };
        let r = rotation(q);
        let rotated: Vec<_> = pts.iter().map(|(p, w)| (rotate(&r, p), *w)).collect();
        let rb = cosine_barycentre(&rotated).unwrap();
        prop_assert!(gc_distance(&rb, &rotate(&r, &bary)) < 1e-9);
    }
}
