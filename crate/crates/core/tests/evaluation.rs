use nalgebra::Point3;
use proptest::prelude::*;
use voxelhyst::evaluation::{
    accuracy, completeness, evaluate, export_ply, nearest_distances, read_ply, EvalParams, KdTree, PointCloud,
};
use voxelhyst::{Rgb, WorldPoint};

fn cloud(max: usize) -> impl Strategy<Value = PointCloud> {
    proptest::collection::vec(((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), any::<[u8; 3]>()), 1..max).prop_map(
        |pts| PointCloud::new(pts.into_iter().map(|((x, y, z), c)| (Point3::new(x, y, z), Rgb(c))).collect(), ""),
    )
}

fn brute_force(from: &PointCloud, to: &PointCloud) -> Vec<f64> {
    from.positions()
        .map(|p| {
            to.positions()
                .map(|q| {
                    let d = p - q;
                    d.x * d.x + d.y * d.y + d.z * d.z
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

proptest! {
    #[test]
    fn kd_tree_distances_equal_brute_force(a in cloud(200), b in cloud(200)) {
        prop_assert_eq!(nearest_distances(&a, &b).unwrap(), brute_force(&a, &b));
    }

    #[test]
    fn clustered_points_are_handled(n in 1usize..300, q in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)) {
        // many duplicates and ties along the split axes
        let pts: Vec<WorldPoint> = (0..n).map(|i| Point3::new((i % 3) as f64, 0.0, (i % 2) as f64)).collect();
        let tree = KdTree::new(pts.clone());
        let q = Point3::new(q.0, q.1, q.2);
        let expected = pts.iter().map(|p| (p - q).norm_squared()).fold(f64::INFINITY, f64::min);
        prop_assert!((tree.nearest_distance_squared(&q) - expected).abs() < 1e-12);
    }

    #[test]
    fn metrics_are_bounded(a in cloud(100), b in cloud(100), p in 0.01f64..1.0, tol in 0.1f64..20.0) {
        let acc = accuracy(&a, &b, p).unwrap();
        prop_assert!(acc >= 0.0 && acc.is_finite());
        let comp = completeness(&b, &a, tol).unwrap();
        prop_assert!((0.0..=1.0).contains(&comp));
        prop_assert!(completeness(&b, &a, tol * 2.0).unwrap() >= comp);
        prop_assert_eq!(accuracy(&a, &a, p).unwrap(), 0.0);
    }
}

#[test]
fn ply_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cloud.ply");
    let pts = (0..50)
        .map(|i| (Point3::new(i as f64 * 0.25, -(i as f64), 0.5), Rgb::new(i as u8, 255 - i as u8, 3)))
        .collect();
    let cloud = PointCloud::new(pts, "m");
    export_ply(&cloud, &path).unwrap();
    assert_eq!(read_ply(&path).unwrap(), cloud);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn scaled_evaluation_reports_millimeters() {
    let truth = PointCloud::new(vec![(Point3::origin(), Rgb::BLACK), (Point3::new(1.0, 0.0, 0.0), Rgb::BLACK)], "m");
    let recon = PointCloud::new(vec![(Point3::new(0.0, 0.002, 0.0), Rgb::BLACK)], "m");
    let m = evaluate(&recon, &truth, &EvalParams::default()).unwrap();
    assert!((m.accuracy - 2.0).abs() < 1e-9);
    assert_eq!(m.completeness, 0.0);
    let loose = EvalParams { tol: 2.5, ..EvalParams::default() };
    assert_eq!(evaluate(&recon, &truth, &loose).unwrap().completeness, 0.5);
}
