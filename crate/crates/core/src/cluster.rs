//! One-dimensional gap clustering shared by entry-point and lateral clustering.

/// Nominal lane width, meters.
pub const LANE_WIDTH: f64 = 3.5;

/// Default split gap: half a nominal lane.
pub const DEFAULT_GAP: f64 = LANE_WIDTH / 2.0;

/// Sorts `values` and cuts wherever consecutive values differ by more than
/// `gap`. Returns clusters as lists of indices into `values`, ordered by
/// value; equal values keep their input order.
pub fn gap_clusters(values: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // + 0.0 folds -0.0 into 0.0, which total_cmp would otherwise order first
    order.sort_by(|&a, &b| {
        (values[a] + 0.0)
            .total_cmp(&(values[b] + 0.0))
            .then(a.cmp(&b))
    });
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for k in order {
        let v = values[k];
        match out.last_mut() {
            Some(c) if v - prev <= gap => c.push(k),
            _ => out.push(vec![k]),
        }
        prev = v;
    }
    out
}
