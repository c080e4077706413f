//! Bounding-box overlap measures used as matching similarity.

use crate::types::BoundingBox;

fn intersection_area(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = a.right().min(b.right()) - a.left.max(b.left);
    let h = a.bottom().min(b.bottom()) - a.top.max(b.top);
    if w <= 0.0 || h <= 0.0 {
        0.0
    } else {
        w * h
    }
}

/// Intersection over union (Jaccard index) of two boxes, in `[0, 1]`.
///
/// Areas are continuous width×height products; no pixel-inclusive `+1`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Fraction of `a` covered by `b`: `|a ∩ b| / |a|`, in `[0, 1]`.
///
/// Asymmetric coverage measure; an alternative reading of "overlap" for the
/// neutral-class suppression rule.
pub fn intersection_over_first(a: &BoundingBox, b: &BoundingBox) -> f64 {
    (intersection_area(a, b) / a.area()).clamp(0.0, 1.0)
}
