//! Piecewise-linear helpers shared by curve evaluation, composition and
//! envelope construction. Points are `(r, value)` with strictly increasing `r`.

pub(crate) type Points = Vec<(f64, f64)>;

/// Evaluate a piecewise-linear function. Below the first breakpoint the first
/// value is held; above the last one the final slope is used (or the last value
/// is held when `flat_tail`). Results are clamped at zero.
pub(crate) fn eval(pts: &[(f64, f64)], r: f64, flat_tail: bool) -> f64 {
    debug_assert!(!pts.is_empty());
    let first = pts[0];
    if r <= first.0 {
        return first.1;
    }
    let last = pts[pts.len() - 1];
    if r >= last.0 {
        if r == last.0 || flat_tail || pts.len() == 1 {
            return last.1;
        }
        let prev = pts[pts.len() - 2];
        let slope = (last.1 - prev.1) / (last.0 - prev.0);
        return (last.1 + slope * (r - last.0)).max(0.0);
    }
    match pts.binary_search_by(|p| p.0.total_cmp(&r)) {
        Ok(k) => pts[k].1,
        Err(k) => {
            let (ra, va) = pts[k - 1];
            let (rb, vb) = pts[k];
            let s = (r - ra) / (rb - ra);
            va + (vb - va) * s
        }
    }
}

pub(crate) fn final_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let (ra, va) = pts[pts.len() - 2];
    let (rb, vb) = pts[pts.len() - 1];
    (vb - va) / (rb - ra)
}

/// Sorted, deduplicated union of abscissae.
pub(crate) fn merge_abscissae<'a>(sets: impl IntoIterator<Item = &'a [(f64, f64)]>) -> Vec<f64> {
    let mut xs: Vec<f64> = sets.into_iter().flat_map(|s| s.iter().map(|p| p.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Pointwise maximum of piecewise-linear functions, exact: the result carries
/// every breakpoint of the inputs plus every crossing between them.
pub(crate) fn upper_envelope(curves: &[&[(f64, f64)]], flat_tail: bool) -> Points {
    let mut xs = merge_abscissae(curves.iter().copied());
    if !flat_tail {
        // tail: all inputs are affine beyond the last breakpoint; add the
        // crossings of the tails plus one trailing point fixing the final slope
        let last = *xs.last().unwrap();
        let lines: Vec<(f64, f64)> = curves
            .iter()
            .map(|c| (eval(c, last, false), final_slope(c)))
            .collect();
        let mut extra = Vec::new();
        for a in 0..lines.len() {
            for b in a + 1..lines.len() {
                let (va, sa) = lines[a];
                let (vb, sb) = lines[b];
                if sa != sb {
                    let d = (vb - va) / (sa - sb);
                    if d > 0.0 {
                        extra.push(last + d);
                    }
                }
            }
        }
        let far = extra.iter().copied().fold(last, f64::max);
        extra.push(far + last.max(1.0));
        xs.extend(extra);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
    }
    let value = |x: f64| {
        curves
            .iter()
            .map(|c| eval(c, x, flat_tail))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut crossings = Vec::new();
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        for a in 0..curves.len() {
            for b in a + 1..curves.len() {
                let d0 = eval(curves[a], x0, flat_tail) - eval(curves[b], x0, flat_tail);
                let d1 = eval(curves[a], x1, flat_tail) - eval(curves[b], x1, flat_tail);
                if d0 * d1 < 0.0 {
                    let x = x0 + (x1 - x0) * (d0 / (d0 - d1));
                    if x > x0 && x < x1 {
                        crossings.push(x);
                    }
                }
            }
        }
    }
    xs.extend(crossings);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.into_iter().map(|x| (x, value(x))).collect()
}

/// Exact pointwise sum of piecewise-linear functions (non-flat tails).
pub(crate) fn sum(curves: &[&[(f64, f64)]]) -> Points {
    let mut xs = merge_abscissae(curves.iter().copied());
    let last = *xs.last().unwrap();
    xs.push(last + last.max(1.0));
    xs.into_iter()
        .map(|x| (x, curves.iter().map(|c| eval(c, x, false)).sum()))
        .collect()
}

/// Inverse image of `y` under a nondecreasing piecewise-linear function with
/// final-slope extrapolation: the smallest `r` with `f(r) >= y`, if any.
pub(crate) fn preimage(pts: &[(f64, f64)], y: f64) -> Option<f64> {
    if y <= pts[0].1 {
        return Some(pts[0].0);
    }
    for w in pts.windows(2) {
        let (ra, va) = w[0];
        let (rb, vb) = w[1];
        if y <= vb {
            if vb == va {
                return Some(ra);
            }
            return Some(ra + (rb - ra) * ((y - va) / (vb - va)));
        }
    }
    let slope = final_slope(pts);
    let (rl, vl) = pts[pts.len() - 1];
    if slope > 0.0 {
        Some(rl + (y - vl) / slope)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_hold_and_slope_tails() {
        let p = vec![(0.0, 0.0), (1.0, 2.0), (3.0, 4.0)];
        assert_eq!(eval(&p, 2.0, false), 3.0);
        assert_eq!(eval(&p, 5.0, false), 6.0);
        assert_eq!(eval(&p, 5.0, true), 4.0);
        assert_eq!(eval(&p, 1.0, false), 2.0);
    }

    #[test]
    fn envelope_contains_crossing() {
        let a = vec![(0.0, 0.0), (2.0, 2.0)];
        let b = vec![(0.0, 1.0), (2.0, 1.0)];
        let env = upper_envelope(&[&a, &b], true);
        assert!(env.iter().any(|p| p.0 == 1.0 && p.1 == 1.0));
        assert_eq!(eval(&env, 0.5, true), 1.0);
        assert_eq!(eval(&env, 1.5, true), 1.5);
    }

    #[test]
    fn envelope_tail_crossing_beyond_breakpoints() {
        // a: slope 1 from 0; b: 5 + 0.5 r. Tails cross at r = 10.
        let a = vec![(0.0, 0.0), (1.0, 1.0)];
        let b = vec![(0.0, 5.0), (1.0, 5.5)];
        let env = upper_envelope(&[&a, &b], false);
        for r in [0.0f64, 3.0, 9.0, 10.0, 11.0, 40.0] {
            let want = r.max(5.0 + 0.5 * r);
            assert!((eval(&env, r, false) - want).abs() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn preimage_inverts_segments() {
        let p = vec![(0.0, 0.0), (1.0, 2.0), (3.0, 4.0)];
        assert_eq!(preimage(&p, 3.0), Some(2.0));
        assert_eq!(preimage(&p, 6.0), Some(5.0));
    }
}
