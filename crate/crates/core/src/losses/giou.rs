//! Intersection-over-union and its generalized form, with analytic
//! gradients for the training losses.
//!
//! Boxes are corner form `(x1, y1, x2, y2)` with `x1 <= x2`, `y1 <= y2`.

use crate::error::{Error, Result};

/// Corner-form box.
pub type BoxXyxy = [f64; 4];

/// Converts normalized center form `(cx, cy, w, h)` to corner form.
pub fn cxcywh_to_xyxy(b: [f64; 4]) -> BoxXyxy {
    let [cx, cy, w, h] = b;
    [cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0]
}

fn area(b: &BoxXyxy) -> f64 {
    (b[2] - b[0]) * (b[3] - b[1])
}

fn intersection(a: &BoxXyxy, b: &BoxXyxy) -> f64 {
    let iw = a[2].min(b[2]) - a[0].max(b[0]);
    let ih = a[3].min(b[3]) - a[1].max(b[1]);
    if iw > 0.0 && ih > 0.0 {
        iw * ih
    } else {
        0.0
    }
}

fn hull_area(a: &BoxXyxy, b: &BoxXyxy) -> f64 {
    (a[2].max(b[2]) - a[0].min(b[0])) * (a[3].max(b[3]) - a[1].min(b[1]))
}

/// Intersection over union, in `[0, 1]`. Fails when both boxes have zero
/// area (the ratio is undefined).
pub fn iou(a: &BoxXyxy, b: &BoxXyxy) -> Result<f64> {
    let inter = intersection(a, b);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        return Err(Error::DegenerateBox);
    }
    Ok(inter / union)
}

/// Generalized IoU: `iou - (hull - union) / hull`, in `(-1, 1]`. Defined
/// for disjoint boxes, where it approaches -1 as the boxes separate.
pub fn giou(a: &BoxXyxy, b: &BoxXyxy) -> Result<f64> {
    let inter = intersection(a, b);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        return Err(Error::DegenerateBox);
    }
    let hull = hull_area(a, b);
    Ok(inter / union - (hull - union) / hull)
}

/// Analytic gradient of [`giou`] with respect to the eight coordinates
/// `[ax1, ay1, ax2, ay2, bx1, by1, bx2, by2]`.
///
/// Valid away from kinks: coordinate ties between the boxes and
/// zero-measure intersections make giou non-differentiable there.
pub fn giou_grad(a: &BoxXyxy, b: &BoxXyxy) -> Result<[f64; 8]> {
    let inter = intersection(a, b);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        return Err(Error::DegenerateBox);
    }
    let hull = hull_area(a, b);

    // d(area)/d(coords) for each box
    let (aw, ah) = (a[2] - a[0], a[3] - a[1]);
    let (bw, bh) = (b[2] - b[0], b[3] - b[1]);
    let d_area = [
        [-ah, -aw, ah, aw, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, -bh, -bw, bh, bw],
    ];

    // d(inter): active only where the box owns the intersection edge
    let mut d_inter = [0.0f64; 8];
    if inter > 0.0 {
        let iw = a[2].min(b[2]) - a[0].max(b[0]);
        let ih = a[3].min(b[3]) - a[1].max(b[1]);
        // x edges
        if a[0] > b[0] {
            d_inter[0] = -ih;
        } else {
            d_inter[4] = -ih;
        }
        if a[2] < b[2] {
            d_inter[2] = ih;
        } else {
            d_inter[6] = ih;
        }
        // y edges
        if a[1] > b[1] {
            d_inter[1] = -iw;
        } else {
            d_inter[5] = -iw;
        }
        if a[3] < b[3] {
            d_inter[3] = iw;
        } else {
            d_inter[7] = iw;
        }
    }

    // d(hull): active where the box owns the hull edge
    let cw = a[2].max(b[2]) - a[0].min(b[0]);
    let ch = a[3].max(b[3]) - a[1].min(b[1]);
    let mut d_hull = [0.0f64; 8];
    if a[0] < b[0] {
        d_hull[0] = -ch;
    } else {
        d_hull[4] = -ch;
    }
    if a[2] > b[2] {
        d_hull[2] = ch;
    } else {
        d_hull[6] = ch;
    }
    if a[1] < b[1] {
        d_hull[1] = -cw;
    } else {
        d_hull[5] = -cw;
    }
    if a[3] > b[3] {
        d_hull[3] = cw;
    } else {
        d_hull[7] = cw;
    }

    // giou = I/U + U/C - 1
    let mut grad = [0.0f64; 8];
    for i in 0..8 {
        let d_union = d_area[0][i] + d_area[1][i] - d_inter[i];
        grad[i] = (d_inter[i] * union - inter * d_union) / (union * union)
            + (d_union * hull - union * d_hull[i]) / (hull * hull);
    }
    Ok(grad)
}
