//! Graded tensor-product axes.

/// Splits `total` cells over segments proportionally to their lengths,
/// at least one per segment (largest-remainder rounding, ties to the lower index).
pub(crate) fn apportion(lengths: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = lengths.iter().sum();
    let quotas: Vec<f64> = lengths.iter().map(|l| total as f64 * l / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q.floor() as usize).max(1)).collect();
    let assigned: usize = counts.iter().sum();
    if assigned < total {
        let mut order: Vec<usize> = (0..lengths.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &s in order.iter().cycle().take(total - assigned) {
            counts[s] += 1;
        }
    }
    counts
}

/// Node coordinates on `[lo, hi]` with breakpoints, base cell budget and an
/// optional refined interval whose segments get `factor` times more cells.
pub(crate) fn axis_nodes(
    lo: f64,
    hi: f64,
    base_cells: usize,
    breaks: &[f64],
    refine: Option<(f64, f64)>,
    factor: usize,
) -> Vec<f64> {
    let span = hi - lo;
    let tol = 1e-9 * span;
    let mut pts = vec![lo, hi];
    pts.extend(breaks.iter().copied().filter(|b| *b > lo + tol && *b < hi - tol));
    if let Some((a, b)) = refine {
        pts.extend([a, b].into_iter().filter(|b| *b > lo + tol && *b < hi - tol));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= tol);

    let lengths: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
    let counts = apportion(&lengths, base_cells.max(1));
    let mut nodes = vec![pts[0]];
    for (s, w) in pts.windows(2).enumerate() {
        let mid = 0.5 * (w[0] + w[1]);
        let refined = refine.is_some_and(|(a, b)| mid > a && mid < b);
        let c = counts[s] * if refined { factor.max(1) } else { 1 };
        for k in 1..=c {
            nodes.push(if k == c {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * k as f64 / c as f64
            });
        }
    }
    nodes
}

/// Axis on `[0, len]` that is mirror symmetric about `len / 2`.
///
/// The half axis gets `ceil(base_cells / 2)` cells; the centre is always a node.
pub(crate) fn mirrored_axis_nodes(
    len: f64,
    base_cells: usize,
    breaks: &[f64],
    refine: Option<(f64, f64)>,
    factor: usize,
) -> Vec<f64> {
    let half = 0.5 * len;
    let half_breaks: Vec<f64> = breaks
        .iter()
        .map(|&b| if b > half { len - b } else { b })
        .collect();
    let half_refine = refine.map(|(a, b)| {
        let a = if a > half { len - a } else { a };
        let b = if b > half { len - b } else { b };
        (a.min(b), half)
    });
    let left = axis_nodes(0.0, half, base_cells.div_ceil(2), &half_breaks, half_refine, factor);
    let mut nodes = left.clone();
    nodes.extend(left.iter().rev().skip(1).map(|x| len - x));
    nodes
}
