//! Sparse-to-dense depth completion with classical morphology.
//!
//! The pipeline runs a fixed six-stage sequence of nearest-surface (min)
//! dilations, a close, column extension, a wide fill, and a median pass.
//! Stages 1-5 only ever fill pixels that are still invalid; measured depths
//! survive untouched until the final median filter.

use crate::error::{Error, Result};
use crate::kitti::DepthMap;

/// Named structuring elements used by the completion pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuringElement {
    /// 5x5 diamond (Manhattan radius 2), 13 active cells.
    Diamond5,
    /// Full 5x5 square.
    Full5,
    /// Full 7x7 square.
    Full7,
    /// Full 31x31 square.
    Full31,
}

impl StructuringElement {
    /// Side length of the (odd, square) mask.
    pub fn size(&self) -> usize {
        match self {
            StructuringElement::Diamond5 => 5,
            StructuringElement::Full5 => 5,
            StructuringElement::Full7 => 7,
            StructuringElement::Full31 => 31,
        }
    }

    /// Boolean mask, row-major `size x size`. The center is always active.
    pub fn mask(&self) -> Vec<bool> {
        let n = self.size();
        let r = (n / 2) as isize;
        let mut mask = vec![true; n * n];
        if let StructuringElement::Diamond5 = self {
            for dy in -r..=r {
                for dx in -r..=r {
                    if dy.abs() + dx.abs() > r {
                        mask[((dy + r) * n as isize + dx + r) as usize] = false;
                    }
                }
            }
        }
        mask
    }

    /// Active offsets `(dy, dx)` relative to the center.
    fn offsets(&self) -> Vec<(isize, isize)> {
        let n = self.size() as isize;
        let r = n / 2;
        let mask = self.mask();
        let mut offs = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if mask[((dy + r) * n + dx + r) as usize] {
                    offs.push((dy, dx));
                }
            }
        }
        offs
    }
}

#[inline]
fn footprint_min(map: &DepthMap, x: usize, y: usize, offs: &[(isize, isize)]) -> f64 {
    let mut best = f64::INFINITY;
    for &(dy, dx) in offs {
        let yy = y as isize + dy;
        let xx = x as isize + dx;
        if yy < 0 || xx < 0 || yy >= map.height as isize || xx >= map.width as isize {
            continue;
        }
        let v = map.values[yy as usize * map.width + xx as usize];
        if v > 0.0 && v < best {
            best = v;
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

#[inline]
fn footprint_max(map: &DepthMap, x: usize, y: usize, offs: &[(isize, isize)]) -> f64 {
    let mut best = 0.0f64;
    for &(dy, dx) in offs {
        let yy = y as isize + dy;
        let xx = x as isize + dx;
        if yy < 0 || xx < 0 || yy >= map.height as isize || xx >= map.width as isize {
            continue;
        }
        let v = map.values[yy as usize * map.width + xx as usize];
        if v > best {
            best = v;
        }
    }
    best
}

/// Nearest-surface dilation: every pixel takes the minimum valid depth under
/// the footprint; a pixel stays invalid only when the footprint holds no
/// valid depth.
pub fn dilate_min(map: &DepthMap, se: StructuringElement) -> DepthMap {
    let offs = se.offsets();
    let mut out = DepthMap::new(map.width, map.height);
    for y in 0..map.height {
        for x in 0..map.width {
            out.values[y * map.width + x] = footprint_min(map, x, y, &offs);
        }
    }
    out
}

/// Counterpart of [`dilate_min`]: maximum valid depth under the footprint.
pub fn erode_max(map: &DepthMap, se: StructuringElement) -> DepthMap {
    let offs = se.offsets();
    let mut out = DepthMap::new(map.width, map.height);
    for y in 0..map.height {
        for x in 0..map.width {
            out.values[y * map.width + x] = footprint_max(map, x, y, &offs);
        }
    }
    out
}

/// Writes `stage` values into the invalid pixels of `base`, leaving already
/// valid pixels alone.
fn fill_invalid_from(base: &mut DepthMap, stage: &DepthMap) {
    for (dst, &src) in base.values.iter_mut().zip(&stage.values) {
        if *dst == 0.0 {
            *dst = src;
        }
    }
}

/// Fills still-invalid pixels of `map` with the footprint minimum, leaving
/// valid pixels untouched. Same result as `fill_invalid_from(map,
/// dilate_min(map, se))` but only visits the holes.
fn dilate_min_into_holes(map: &DepthMap, se: StructuringElement) -> DepthMap {
    let offs = se.offsets();
    let mut out = map.clone();
    for y in 0..map.height {
        for x in 0..map.width {
            if map.values[y * map.width + x] == 0.0 {
                out.values[y * map.width + x] = footprint_min(map, x, y, &offs);
            }
        }
    }
    out
}

/// Each invalid pixel above the topmost valid pixel of its column takes that
/// pixel's value (sky regions inherit the nearest structure below).
fn extend_columns_upward(map: &DepthMap) -> DepthMap {
    let mut out = map.clone();
    for x in 0..map.width {
        let mut top = None;
        for y in 0..map.height {
            if map.values[y * map.width + x] > 0.0 {
                top = Some((y, map.values[y * map.width + x]));
                break;
            }
        }
        if let Some((top_y, v)) = top {
            for y in 0..top_y {
                if out.values[y * map.width + x] == 0.0 {
                    out.values[y * map.width + x] = v;
                }
            }
        }
    }
    out
}

/// 3x3 median over valid neighbors, applied at valid pixels. Uses the lower
/// median so output depths stay within the observed value set.
fn median3(map: &DepthMap) -> DepthMap {
    let mut out = map.clone();
    for y in 0..map.height {
        for x in 0..map.width {
            if map.values[y * map.width + x] == 0.0 {
                continue;
            }
            let mut vals = [0.0f64; 9];
            let mut n = 0;
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let yy = y as isize + dy;
                    let xx = x as isize + dx;
                    if yy < 0 || xx < 0 || yy >= map.height as isize || xx >= map.width as isize {
                        continue;
                    }
                    let v = map.values[yy as usize * map.width + xx as usize];
                    if v > 0.0 {
                        vals[n] = v;
                        n += 1;
                    }
                }
            }
            let vals = &mut vals[..n];
            vals.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            out.values[y * map.width + x] = vals[(n - 1) / 2];
        }
    }
    out
}

/// Runs the completion pipeline and returns the map after every stage:
/// `[diamond fill, close fill, 7x7 fill, column extension, 31x31 fill,
/// median]`. The final element is the [`complete`] output.
pub fn complete_trace(map: &DepthMap) -> Result<Vec<DepthMap>> {
    if map.valid_count() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut stages = Vec::with_capacity(6);

    // 1: nearest-surface dilation, holes only
    let mut cur = dilate_min_into_holes(map, StructuringElement::Diamond5);
    stages.push(cur.clone());

    // 2: morphological close, merged into holes
    let closed = erode_max(
        &dilate_min(&cur, StructuringElement::Full5),
        StructuringElement::Full5,
    );
    fill_invalid_from(&mut cur, &closed);
    stages.push(cur.clone());

    // 3: medium fill, holes only
    cur = dilate_min_into_holes(&cur, StructuringElement::Full7);
    stages.push(cur.clone());

    // 4: column extension toward the image top
    cur = extend_columns_upward(&cur);
    stages.push(cur.clone());

    // 5: large fill, holes only
    cur = dilate_min_into_holes(&cur, StructuringElement::Full31);
    stages.push(cur.clone());

    // 6: median smoothing of valid pixels
    cur = median3(&cur);
    stages.push(cur);

    Ok(stages)
}

/// Densifies a sparse depth map. The output has no invalid pixels whenever
/// every pixel sees at least one valid input within its 31x31 neighborhood.
pub fn complete(map: &DepthMap) -> Result<DepthMap> {
    Ok(complete_trace(map)?.pop().expect("six stages"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_invalid_dilates_to_all_invalid() {
        let map = DepthMap::new(8, 8);
        assert_eq!(
            dilate_min(&map, StructuringElement::Diamond5).valid_count(),
            0
        );
    }

    #[test]
    fn single_pixel_diamond_footprint() {
        let mut map = DepthMap::new(11, 11);
        map.set(5, 5, 7.0);
        let out = dilate_min(&map, StructuringElement::Diamond5);
        assert_eq!(out.valid_count(), 13);
        for y in 0..11usize {
            for x in 0..11usize {
                let inside = x.abs_diff(5) + y.abs_diff(5) <= 2;
                assert_eq!(out.is_valid(x, y), inside, "pixel ({x},{y})");
                if inside {
                    assert_eq!(out.get(x, y), 7.0);
                }
            }
        }
    }

    #[test]
    fn dense_constant_map_is_fixed_point() {
        let map = DepthMap::from_values(6, 4, vec![3.5; 24]);
        assert_eq!(dilate_min(&map, StructuringElement::Full5), map);
        assert_eq!(erode_max(&map, StructuringElement::Full7), map);
        assert_eq!(complete(&map).unwrap(), map);
        // complete twice equals complete once on dense constant inputs
        assert_eq!(complete(&complete(&map).unwrap()).unwrap(), map);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(complete(&DepthMap::new(4, 4)), Err(Error::EmptyInput));
    }

    #[test]
    fn dilate_never_raises_valid_pixels() {
        let mut map = DepthMap::new(9, 9);
        map.set(4, 4, 9.0);
        map.set(5, 4, 2.0);
        let out = dilate_min(&map, StructuringElement::Full5);
        assert_eq!(out.get(4, 4), 2.0); // footprint minimum
        assert!(out.get(4, 4) <= map.get(4, 4));
        assert_eq!(out.valid_count(), 81);
    }

    fn two_plane_scene() -> DepthMap {
        let (w, h) = (48, 32);
        let mut map = DepthMap::new(w, h);
        for y in (0..h).step_by(4) {
            for x in (0..w).step_by(4) {
                map.set(x, y, if y < h / 2 { 30.0 } else { 10.0 });
            }
        }
        map
    }

    #[test]
    fn two_plane_scene_completes_densely() {
        let map = two_plane_scene();
        let stages = complete_trace(&map).unwrap();
        assert_eq!(stages.len(), 6);

        // valid count never drops across stages 1..=5
        let mut prev = map.valid_count();
        for stage in &stages[..5] {
            assert!(stage.valid_count() >= prev);
            prev = stage.valid_count();
        }

        // fully dense, and pre-median values stay on the two planes
        let pre_median = &stages[4];
        assert_eq!(pre_median.valid_count(), map.width * map.height);
        for &v in &pre_median.values {
            assert!((v - 10.0).abs() < 1e-9 || (v - 30.0).abs() < 1e-9, "{v}");
        }

        // original samples are untouched until the median stage
        for y in 0..map.height {
            for x in 0..map.width {
                if map.is_valid(x, y) {
                    assert_eq!(pre_median.get(x, y), map.get(x, y));
                }
            }
        }
    }

    #[test]
    fn isolated_region_stays_invalid_beyond_reach() {
        // one valid pixel in a map wider than any kernel footprint chain
        let mut map = DepthMap::new(220, 9);
        map.set(2, 4, 5.0);
        let out = complete(&map).unwrap();
        assert!(out.valid_count() < map.width * map.height);
        assert!(out.is_valid(2, 4));
        assert!(!out.is_valid(219, 4));
    }
}
