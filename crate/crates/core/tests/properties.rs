use std::io::Cursor;
use std::path::Path;

use proptest::prelude::*;

use rcxi::attractor::{annulus_score, symbolic_reducibility};
use rcxi::glyph::{collapse_check, nearest_symbol, Glyph, Vocab, VocabEntry};
use rcxi::io::trace::{read_trace_from, write_trace_to};
use rcxi::io::validate_trace_bytes;
use rcxi::tension::{moment_bound_check, persistence_check, tension_series, TensionTrace};
use rcxi::{State, SymbolicInput, Trajectory};

fn states(dim: usize, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-100.0..100.0f64, dim), len)
}

fn traj(points: &[Vec<f64>], ids: &[u64]) -> Trajectory {
    let s = points.iter().map(|p| State::new(p.clone()).unwrap()).collect();
    let inputs = ids.iter().map(|&id| SymbolicInput::new(id)).collect();
    Trajectory::new(s, inputs).unwrap()
}

fn zero_ids(points: &[Vec<f64>]) -> Vec<u64> {
    vec![0; points.len() - 1]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn tension_is_translation_invariant(pts in states(3, 2..40), shift in prop::collection::vec(-50.0..50.0f64, 3)) {
        let a = tension_series(&traj(&pts, &zero_ids(&pts))).unwrap();
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().zip(&shift).map(|(x, s)| x + s).collect()).collect();
        let b = tension_series(&traj(&moved, &zero_ids(&pts))).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!(close(*x, *y, 1e-9), "{x} vs {y}");
        }
    }

    #[test]
    fn tension_scales_linearly(pts in states(4, 2..40), k in 0.01..100.0f64) {
        let a = tension_series(&traj(&pts, &zero_ids(&pts))).unwrap();
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| x * k).collect()).collect();
        let b = tension_series(&traj(&scaled, &zero_ids(&pts))).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!(close(x * k, *y, 1e-9));
        }
    }

    #[test]
    fn moment_bound_monotone_in_bound(values in prop::collection::vec(0.0..5.0f64, 1..60), b1 in 0.0..20.0f64, b2 in 0.0..20.0f64) {
        let t = TensionTrace { dim: 1, burn_in: 0, values: values.clone() };
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let window = values.len();
        if moment_bound_check(&t, lo, window).unwrap().satisfied {
            prop_assert!(moment_bound_check(&t, hi, window).unwrap().satisfied);
        }
    }

    #[test]
    fn persistence_monotone_in_threshold(values in prop::collection::vec(0.0..1.0f64, 1..80), e1 in 0.0..1.0f64, e2 in 0.0..1.0f64, run in 1usize..20) {
        let t = TensionTrace { dim: 1, burn_in: 0, values };
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = persistence_check(&t, lo, run).unwrap();
        let b = persistence_check(&t, hi, run).unwrap();
        prop_assert!(a.longest_len >= b.longest_len);
        prop_assert!(!b.persistent || a.persistent);
    }

    #[test]
    fn annulus_rotation_and_scale_invariant(
        pts in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 20..100),
        angle in 0.0..std::f64::consts::TAU,
        k in 0.01..100.0f64,
        shift in (-5.0..5.0f64, -5.0..5.0f64),
    ) {
        let p: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        let Ok(base) = annulus_score(&p) else { return Ok(()) };
        let (c, s) = (angle.cos(), angle.sin());
        let q: Vec<[f64; 2]> = p
            .iter()
            .map(|[x, y]| [k * (c * x - s * y) + shift.0, k * (s * x + c * y) + shift.1])
            .collect();
        prop_assert!(close(base, annulus_score(&q).unwrap(), 1e-7));
    }

    #[test]
    fn reducibility_invariant_under_relabeling(pts in states(2, 12..60), labels in prop::collection::vec(0u64..5, 60), offset in 1u64..1000) {
        let ids: Vec<u64> = labels[..pts.len() - 1].to_vec();
        let Ok(a) = symbolic_reducibility(&traj(&pts, &ids)) else { return Ok(()) };
        // an injective relabeling
        let relabeled: Vec<u64> = ids.iter().map(|id| (4 - id) * 7 + offset).collect();
        let b = symbolic_reducibility(&traj(&pts, &relabeled)).unwrap();
        prop_assert!(close(a.r2, b.r2, 1e-9), "{} vs {}", a.r2, b.r2);
        prop_assert_eq!(a.n_symbols, b.n_symbols);
    }

    #[test]
    fn validation_is_total(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let _ = validate_trace_bytes(&bytes);
    }

    #[test]
    fn validation_total_on_mutated_traces(pts in states(2, 2..8), cut in 0usize..2000, byte in any::<u8>()) {
        let t = traj(&pts, &zero_ids(&pts));
        let mut buf = Vec::new();
        write_trace_to(&t, &mut buf).unwrap();
        prop_assert!(validate_trace_bytes(&buf).is_empty());
        let i = cut % buf.len();
        buf[i] = byte;
        let violations = validate_trace_bytes(&buf);
        if read_trace_from(Cursor::new(&buf), Path::new("mem")).is_err() {
            prop_assert!(!violations.is_empty());
        }
    }

    #[test]
    fn trace_round_trip_is_bit_exact(
        pts in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 3), 2..10),
    ) {
        let t = traj(&pts, &zero_ids(&pts));
        let mut buf = Vec::new();
        write_trace_to(&t, &mut buf).unwrap();
        let back = read_trace_from(Cursor::new(&buf), Path::new("mem")).unwrap();
        for (a, b) in t.states().iter().zip(back.states()) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        let mut again = Vec::new();
        write_trace_to(&back, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn nearest_symbol_ignores_vocab_order(
        emb in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 4), 2..30),
        q in prop::collection::vec(-3.0..3.0f64, 4),
        rot in 0usize..30,
    ) {
        let entries: Vec<VocabEntry> = emb
            .iter()
            .enumerate()
            .map(|(i, e)| VocabEntry { id: i as u64, text: String::new(), embedding: State::new(e.clone()).unwrap() })
            .collect();
        let a = nearest_symbol(&q, &Vocab::new(entries.clone()).unwrap()).unwrap();
        let mut shuffled = entries;
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let b = nearest_symbol(&q, &Vocab::new(shuffled).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn collapse_check_monotone_in_delta(
        emb in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 3), 1..20),
        g in prop::collection::vec(-3.0..3.0f64, 3),
        d1 in 1e-6..5.0f64,
        d2 in 1e-6..5.0f64,
    ) {
        let entries = emb
            .iter()
            .enumerate()
            .map(|(i, e)| VocabEntry { id: i as u64, text: String::new(), embedding: State::new(e.clone()).unwrap() })
            .collect();
        let vocab = Vocab::new(entries).unwrap();
        let glyph = Glyph { vector: State::new(g).unwrap(), window: 8, encoder_seed: 0 };
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let at_hi = collapse_check(&glyph, &vocab, hi, None).unwrap();
        let at_lo = collapse_check(&glyph, &vocab, lo, None).unwrap();
        prop_assert!(!at_hi.anchored || at_lo.anchored);
        prop_assert_eq!(at_hi.anchored, at_hi.nearest_distance >= hi);
    }
}

#[test]
fn equidistant_tie_goes_to_lowest_id() {
    let entry = |id, e: Vec<f64>| VocabEntry { id, text: String::new(), embedding: State::new(e).unwrap() };
    let vocab = Vocab::new(vec![entry(9, vec![1.0, 0.0]), entry(5, vec![-1.0, 0.0])]).unwrap();
    assert_eq!(nearest_symbol(&[0.0, 0.0], &vocab).unwrap(), (5, 1.0));
}
