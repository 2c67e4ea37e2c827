//! Stream-level pre-filtering: drop elements that provably cannot join with
//! anything in the opposite stream, using only the streams' extremes.
//!
//! The removal is sound but not complete: only extreme-based pruning is
//! performed, and only in a single pass. Both removal thresholds are taken
//! from the original inputs before either stream is touched.

use crate::model::{Element, Stream, ThetaOp};

/// The survival predicate for one side, given the opposite stream's extremes.
///
/// Under `r θ s`:
/// - `gt`: r keeps values >  min(s); s keeps values <  max(r)
/// - `ge`: r keeps values >= min(s); s keeps values <= max(r)
/// - `lt`: r keeps values <  max(s); s keeps values >  min(r)
/// - `le`: r keeps values <= max(s); s keeps values >= min(r)
#[inline]
fn keep_left(op: ThetaOp, x: f64, s_min: f64, s_max: f64) -> bool {
    match op {
        ThetaOp::Gt => x > s_min,
        ThetaOp::Ge => x >= s_min,
        ThetaOp::Lt => x < s_max,
        ThetaOp::Le => x <= s_max,
    }
}

#[inline]
fn keep_right(op: ThetaOp, y: f64, r_min: f64, r_max: f64) -> bool {
    match op {
        ThetaOp::Gt => y < r_max,
        ThetaOp::Ge => y <= r_max,
        ThetaOp::Lt => y > r_min,
        ThetaOp::Le => y >= r_min,
    }
}

/// Removes elements of `r` and `s` that cannot contribute to any `r θ s`
/// result, judging by the opposite stream's pre-removal extremes. Relative
/// order is preserved. If either input (or either filtered output) is empty,
/// both outputs are empty: nothing can join against nothing.
pub fn prefilter_pair(op: ThetaOp, r: &Stream, s: &Stream) -> (Stream, Stream) {
    let (r, s, _) = prefilter_pair_counted(op, r, s);
    (r, s)
}

/// Same as [`prefilter_pair`], also reporting the number of element visits.
/// One extremes pass plus one filter pass per stream: exactly
/// `2 * (|r| + |s|)` visits when both streams are non-empty, with no sorting.
pub(crate) fn prefilter_pair_counted(
    op: ThetaOp,
    r: &Stream,
    s: &Stream,
) -> (Stream, Stream, usize) {
    let mut visits = r.len() + s.len();
    let empty = |visits| {
        (
            Stream::new(r.name.clone(), Vec::new()),
            Stream::new(s.name.clone(), Vec::new()),
            visits,
        )
    };

    let (Some((r_min, r_max)), Some((s_min, s_max))) = (r.extremes(), s.extremes()) else {
        return empty(visits);
    };

    visits += r.len() + s.len();
    let filtered = |stream: &Stream, keep: &dyn Fn(f64) -> bool| -> Vec<Element> {
        stream
            .elements
            .iter()
            .filter(|e| keep(e.value))
            .copied()
            .collect()
    };
    let r_kept = filtered(r, &|x| keep_left(op, x, s_min, s_max));
    let s_kept = filtered(s, &|y| keep_right(op, y, r_min, r_max));

    if r_kept.is_empty() || s_kept.is_empty() {
        return empty(visits);
    }
    (
        Stream::new(r.name.clone(), r_kept),
        Stream::new(s.name.clone(), s_kept),
        visits,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ThetaOp::*;
    use crate::oracle::oracle_join;

    fn values(s: &Stream) -> Vec<f64> {
        s.elements.iter().map(|e| e.value).collect()
    }

    #[test]
    fn gt_impossible_pair_empties_both() {
        let r = Stream::from_values("r", &[3.0]);
        let s = Stream::from_values("s", &[3.0]);
        let (r2, s2) = prefilter_pair(Gt, &r, &s);
        assert!(r2.is_empty() && s2.is_empty());
    }

    #[test]
    fn gt_shrinks_ranges_to_worked_extremes() {
        // r covers [0, 9], s covers [0, 9]; under gt the r-side loses 0 and
        // the s-side loses everything >= 9, leaving r in [1, 9], s in [0, 8].
        let r = Stream::from_values("r", &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let s = Stream::from_values("s", &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let (r2, s2) = prefilter_pair(Gt, &r, &s);
        assert_eq!(r2.extremes(), Some((1.0, 9.0)));
        assert_eq!(s2.extremes(), Some((0.0, 8.0)));
        assert_eq!(r2.len(), 9);
        assert_eq!(s2.len(), 9);
    }

    #[test]
    fn le_drops_exact_outliers() {
        let r = Stream::from_values("r", &[10.0, 2.0, 7.0]);
        let s = Stream::from_values("s", &[5.0, 8.0, 1.0]);
        let (r2, s2) = prefilter_pair(Le, &r, &s);
        assert_eq!(values(&r2), vec![2.0, 7.0]);
        assert_eq!(values(&s2), vec![5.0, 8.0]);
        // Each removed element had zero satisfying partners in the original
        // opposite stream.
        let (results, _) = oracle_join(Le, &r, &s);
        assert!(results.iter().all(|t| t.ids()[0] != 0)); // r[0] = 10.0
        assert!(results.iter().all(|t| t.ids()[1] != 2)); // s[2] = 1.0
    }

    #[test]
    fn empty_input_empties_both() {
        let r = Stream::from_values("r", &[1.0, 2.0]);
        let s = Stream::from_values("s", &[]);
        let (r2, s2) = prefilter_pair(Gt, &r, &s);
        assert!(r2.is_empty() && s2.is_empty());
        let (r3, s3) = prefilter_pair(Lt, &s, &r);
        assert!(r3.is_empty() && s3.is_empty());
    }

    #[test]
    fn visit_count_is_linear() {
        let r = Stream::from_values("r", &[5.0, 1.0, 9.0, 4.0]);
        let s = Stream::from_values("s", &[2.0, 8.0, 3.0]);
        for op in ThetaOp::ALL {
            let (_, _, visits) = prefilter_pair_counted(op, &r, &s);
            assert_eq!(visits, 2 * (r.len() + s.len()));
        }
        let empty = Stream::from_values("s", &[]);
        let (_, _, visits) = prefilter_pair_counted(Gt, &r, &empty);
        assert_eq!(visits, r.len());
    }

    /// Applying the removals sequentially (s's threshold read from the
    /// already-filtered r) gives the same outcome as reading both thresholds
    /// up front: the filter never removes the extreme the other side reads,
    /// unless it empties the stream entirely, in which case both outputs are
    /// empty either way.
    #[test]
    fn sequential_and_simultaneous_thresholds_agree() {
        let datasets: [(&[f64], &[f64]); 4] = [
            (&[0.0, 1.0, 4.0, 9.0], &[0.0, 3.0, 9.0, 11.0]),
            (&[5.0, 5.0, 5.0], &[5.0, 5.0]),
            (&[1.0, 2.0, 3.0], &[4.0, 5.0]),
            (&[-3.0, 7.5, 2.0], &[-3.0, 7.5, 0.0]),
        ];
        for (rv, sv) in datasets {
            let r = Stream::from_values("r", rv);
            let s = Stream::from_values("s", sv);
            for op in ThetaOp::ALL {
                let (r_sim, s_sim) = prefilter_pair(op, &r, &s);

                // Sequential: filter r first, then read r's new extremes.
                let (s_min, s_max) = s.extremes().unwrap();
                let r_seq: Vec<Element> = r
                    .elements
                    .iter()
                    .filter(|e| keep_left(op, e.value, s_min, s_max))
                    .copied()
                    .collect();
                let r_seq_stream = Stream::new("r", r_seq);
                let s_seq: Vec<Element> = match r_seq_stream.extremes() {
                    Some((r_min, r_max)) => s
                        .elements
                        .iter()
                        .filter(|e| keep_right(op, e.value, r_min, r_max))
                        .copied()
                        .collect(),
                    None => Vec::new(),
                };
                let (r_seq, s_seq) = if r_seq_stream.is_empty() || s_seq.is_empty() {
                    (Vec::new(), Vec::new())
                } else {
                    (r_seq_stream.elements.clone(), s_seq)
                };

                assert_eq!(r_sim.elements, r_seq, "op {op:?} r side");
                assert_eq!(s_sim.elements, s_seq, "op {op:?} s side");
            }
        }
    }
}
