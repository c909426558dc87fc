use crate::geometry::WorldPoint;

const LEAF_SIZE: usize = 8;

/// Static 3-d tree over a point set, stored implicitly: each subrange has its
/// median (along the splitting axis) in the middle.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<WorldPoint>,
}

impl KdTree {
    pub fn new(mut points: Vec<WorldPoint>) -> Self {
        build(&mut points, 0);
        KdTree { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared distance to the nearest point; infinite for an empty tree.
    pub fn nearest_distance_squared(&self, q: &WorldPoint) -> f64 {
        let mut best = f64::INFINITY;
        search(&self.points, 0, q, &mut best);
        best
    }
}

fn build(points: &mut [WorldPoint], axis: usize) {
    if points.len() <= LEAF_SIZE {
        return;
    }
    let mid = points.len() / 2;
    points.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
    let (left, right) = points.split_at_mut(mid);
    build(left, (axis + 1) % 3);
    build(&mut right[1..], (axis + 1) % 3);
}

#[inline]
fn distance_squared(a: &WorldPoint, b: &WorldPoint) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

fn search(points: &[WorldPoint], axis: usize, q: &WorldPoint, best: &mut f64) {
    if points.len() <= LEAF_SIZE {
        for p in points {
            *best = best.min(distance_squared(p, q));
        }
        return;
    }
    let mid = points.len() / 2;
    let pivot = &points[mid];
    *best = best.min(distance_squared(pivot, q));
    let diff = q[axis] - pivot[axis];
    let (near, far) =
        if diff < 0.0 { (&points[..mid], &points[mid + 1..]) } else { (&points[mid + 1..], &points[..mid]) };
    let next = (axis + 1) % 3;
    search(near, next, q, best);
    if diff * diff < *best {
        search(far, next, q, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    #[test]
    fn finds_nearest_on_a_lattice() {
        let pts: Vec<WorldPoint> =
            (0..125).map(|i| Point3::new((i % 5) as f64, ((i / 5) % 5) as f64, (i / 25) as f64)).collect();
        let tree = KdTree::new(pts);
        assert_eq!(tree.len(), 125);
        assert_eq!(tree.nearest_distance_squared(&Point3::new(2.0, 2.0, 2.0)), 0.0);
        assert_eq!(tree.nearest_distance_squared(&Point3::new(2.5, 2.0, -1.0)), 1.25);
        assert_eq!(KdTree::new(vec![]).nearest_distance_squared(&Point3::origin()), f64::INFINITY);
    }
}
