//! Brute-force nested-loop joins used as ground truth by every correctness
//! check. Single-threaded on purpose: simplicity over speed.

use crate::error::{Error, Result};
use crate::model::{JoinResult, Stream, ThetaOp};

/// Evaluates every `(x, y)` in `r × s`, returning all satisfying
/// `(payload_id, value)` pairs in (r-index, s-index) order plus the number of
/// pairs visited, which is always `|r| * |s|`.
pub fn oracle_join(op: ThetaOp, r: &Stream, s: &Stream) -> (Vec<JoinResult>, u64) {
    let mut results = Vec::new();
    for x in &r.elements {
        for y in &s.elements {
            if op.holds(x.value, y.value) {
                results.push(JoinResult::pair(
                    (x.payload_id, x.value),
                    (y.payload_id, y.value),
                ));
            }
        }
    }
    (results, r.len() as u64 * s.len() as u64)
}

/// Full nested enumeration over all streams, keeping tuples where every
/// adjacent value pair satisfies its operator. Visits the full product of
/// stream sizes; the visit count is returned alongside the results.
pub fn oracle_multiway(streams: &[Stream], thetas: &[ThetaOp]) -> Result<(Vec<JoinResult>, u64)> {
    if streams.len() < 2 || thetas.len() != streams.len() - 1 {
        return Err(Error::ArityMismatch {
            streams: streams.len(),
            thetas: thetas.len(),
        });
    }

    let mut results = Vec::new();
    let mut visited = 0u64;
    let mut tuple = Vec::with_capacity(streams.len());
    enumerate(streams, thetas, &mut tuple, &mut results, &mut visited);
    Ok((results, visited))
}

fn enumerate(
    streams: &[Stream],
    thetas: &[ThetaOp],
    tuple: &mut Vec<(u64, f64)>,
    results: &mut Vec<JoinResult>,
    visited: &mut u64,
) {
    let depth = tuple.len();
    if depth == streams.len() {
        *visited += 1;
        let ok = tuple
            .windows(2)
            .zip(thetas)
            .all(|(pair, &op)| op.holds(pair[0].1, pair[1].1));
        if ok {
            results.push(JoinResult {
                entries: tuple.as_slice().into(),
            });
        }
        return;
    }
    for e in &streams[depth].elements {
        tuple.push((e.payload_id, e.value));
        enumerate(streams, thetas, tuple, results, visited);
        tuple.pop();
    }
}
