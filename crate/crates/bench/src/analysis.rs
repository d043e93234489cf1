//! Summaries over result rows.

use std::collections::BTreeMap;

use crate::output::{InstanceKey, ResultRow};
use crate::spec::Solver;

/// The last row of each `(instance, solver)` run, in first-seen order.
pub fn final_rows(rows: &[ResultRow], solver: Solver) -> Vec<&ResultRow> {
    let mut order: Vec<InstanceKey> = Vec::new();
    let mut last: std::collections::HashMap<InstanceKey, &ResultRow> = std::collections::HashMap::new();
    for r in rows.iter().filter(|r| r.solver == solver) {
        if last.insert(r.key(), r).is_none() {
            order.push(r.key());
        }
    }
    order.into_iter().map(|k| last[&k]).collect()
}

/// Final rows of two solvers on the instances both ran.
pub fn paired(rows: &[ResultRow], a: Solver, b: Solver) -> Vec<(&ResultRow, &ResultRow)> {
    let bs: std::collections::HashMap<InstanceKey, &ResultRow> =
        final_rows(rows, b).into_iter().map(|r| (r.key(), r)).collect();
    final_rows(rows, a).into_iter().filter_map(|r| bs.get(&r.key()).map(|o| (r, *o))).collect()
}

/// Failure count and total per sketch size `s`, for one solver.
pub fn fail_counts(rows: &[ResultRow], solver: Solver) -> BTreeMap<usize, (usize, usize)> {
    let mut out = BTreeMap::new();
    for r in final_rows(rows, solver) {
        let e = out.entry(r.s).or_insert((0, 0));
        e.0 += r.failed as usize;
        e.1 += 1;
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn growth_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
