use flowfire::explore::{explore, ExploreBounds};
use flowfire::firing::{self, is_legal, is_stable, legal_moves};
use flowfire::grid::{aztec_value, ball, ring, to_edge_representation};
use flowfire::pathfire::{check_trace_lemmas, closed_form_stable, path_fire_step, CanonicalRow, PathWeights};
use flowfire::strategies::{aztec_weight, complete_to_aztec, pulse_weight, stabilize_any};
use flowfire::{FaceCoord, FireMove, MarkedConfig, Trace};
use proptest::prelude::*;

fn face(radius: i32) -> impl Strategy<Value = FaceCoord> {
    (-radius..=radius, -radius..=radius).prop_map(|(x, y)| FaceCoord::new(x, y))
}

/// Small configurations: a handful of faces near the marked face.
fn config(max_n: u32, radius: i32, max_w: u32) -> impl Strategy<Value = MarkedConfig> {
    (
        0..=max_n,
        prop::collection::btree_map(face(radius), 0..=max_w, 0..8),
    )
        .prop_map(|(n, m)| {
            MarkedConfig::from_faces(
                n as i64,
                m.into_iter()
                    .filter(|(f, _)| !f.is_marked())
                    .map(|(f, w)| (f, w as i64)),
            )
            .unwrap()
        })
}

proptest! {
    #[test]
    fn metric_is_l1(a in face(20), b in face(20), c in face(20)) {
        prop_assert_eq!(a.dist(b), b.dist(a));
        prop_assert_eq!(a.dist(b), a.x.abs_diff(b.x) + a.y.abs_diff(b.y));
        prop_assert!(a.dist(c) <= a.dist(b) + b.dist(c));
        for g in a.neighbors() {
            prop_assert_eq!(a.dist(g), 1);
        }
    }

    #[test]
    fn rings_partition_balls(d in 0u32..12) {
        let r = ring(d);
        prop_assert_eq!(r.len() as u32, if d == 0 { 1 } else { 4 * d });
        prop_assert!(r.iter().all(|f| f.norm() == d));
        prop_assert_eq!(ball(d).len() as u32, 2 * d * (d + 1) + 1);
    }

    #[test]
    fn closed_form_weights(n in 0u32..40, r in 0u32..40) {
        prop_assert_eq!(MarkedConfig::pulse(n, r).total_weight(), pulse_weight(n, r));
        prop_assert_eq!(MarkedConfig::aztec(n % 20).total_weight(), aztec_weight(n % 20));
        let f = FaceCoord::new(r as i32 - 20, n as i32 - 20);
        prop_assert_eq!(aztec_value(n, f), (n + 1).saturating_sub(f.norm()));
    }

    #[test]
    fn moves_change_weight_only_through_the_marked_face(c in config(4, 3, 6), pick in any::<prop::sample::Index>()) {
        let moves = legal_moves(&c);
        prop_assume!(!moves.is_empty());
        let m = moves[pick.index(moves.len())];
        let next = firing::apply(&c, m).unwrap();
        prop_assert_eq!(next.n(), c.n());
        let delta = next.total_weight() as i64 - c.total_weight() as i64;
        let want = if m.from().is_marked() { 1 } else if m.to().is_marked() { -1 } else { 0 };
        prop_assert_eq!(delta, want);
        prop_assert!(to_edge_representation(&next).is_conservative());
    }

    #[test]
    fn stability_matches_pairwise_rule(c in config(3, 2, 4)) {
        // the marked face neither gives nor takes exactly when its neighbors hold n
        let marked_quiet = ring(1).iter().all(|&g| c.weight(g) == c.n());
        let pairs_quiet = c
            .faces()
            .all(|(f, wf)| f.neighbors().iter().all(|&g| g.is_marked() || wf < c.weight(g) + 2));
        prop_assert_eq!(is_stable(&c), marked_quiet && pairs_quiet);
        prop_assert_eq!(firing::first_legal_move(&c).is_none(), legal_moves(&c).is_empty());
    }

    #[test]
    fn json_roundtrips(c in config(6, 5, 9)) {
        prop_assert_eq!(&MarkedConfig::from_json(&c.to_json()).unwrap(), &c);
        prop_assert_eq!(&MarkedConfig::from_json(&c.to_json_pretty()).unwrap(), &c);
        let trace: Trace = legal_moves(&c);
        let text = serde_json::to_string(&trace).unwrap();
        let back: Trace = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, trace);
    }

    #[test]
    fn first_move_policy_replays(c in config(3, 2, 4)) {
        let run = stabilize_any(&c).unwrap();
        prop_assert!(is_stable(&run.config));
        prop_assert_eq!(firing::replay(&c, &run.trace).unwrap(), run.config);
    }

    #[test]
    fn completion_from_inside_the_diamond(n in 1u32..6, cut in prop::collection::vec(0u32..6, 60)) {
        // lower every face of az(n) by some amount; the result never violates az(n)
        let az = MarkedConfig::aztec(n);
        let c = MarkedConfig::from_faces(
            n as i64,
            az.faces().zip(cut.iter().cycle()).map(|((f, w), &k)| (f, w.saturating_sub(k) as i64)),
        ).unwrap();
        let run = complete_to_aztec(&c, n).unwrap();
        let mut cur = c.clone();
        for &m in &run.trace {
            prop_assert!(is_legal(&cur, m));
            cur = firing::apply(&cur, m).unwrap();
        }
        prop_assert_eq!(cur, az);
    }

    #[test]
    fn random_path_orders_agree_with_closed_form(n in 1u32..9, l in 1u32..7, seed in prop::collection::vec(any::<prop::sample::Index>(), 200)) {
        let row = CanonicalRow::new(n, l).unwrap();
        let mut cur = row.initial_with_tail(n as usize + 1);
        let mut trace = vec![cur.clone()];
        let mut picks = seed.iter().cycle();
        loop {
            let fireable: Vec<usize> = (0..cur.len() - 1).filter(|&i| cur.0[i] >= cur.0[i + 1] + 2).collect();
            if fireable.is_empty() {
                break;
            }
            let i = fireable[picks.next().unwrap().index(fireable.len())];
            cur = path_fire_step(&cur, i).unwrap();
            trace.push(cur.clone());
        }
        prop_assert_eq!(cur.trimmed(), closed_form_stable(row));
        prop_assert!(check_trace_lemmas(&trace).is_clean());
        prop_assert!(trace.iter().all(PathWeights::is_weakly_decreasing));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn explored_terminals_are_stable_and_witnessed(c in config(2, 1, 3)) {
        let b = ExploreBounds::for_config(&c).with_max_states(200_000).with_threads(1);
        let r = explore(&c, &b).unwrap();
        for t in &r.terminals {
            prop_assert!(is_stable(&t.config));
            prop_assert_eq!(t.witness.len() as u32, t.depth);
            prop_assert_eq!(&firing::replay(&c, &t.witness).unwrap(), &t.config);
        }
        let flat = explore(&c, &b.with_symmetry(false)).unwrap();
        if !r.truncated && !flat.truncated {
            let mut a: Vec<_> = r.terminal_configs().cloned().collect();
            let mut f: Vec<_> = flat.terminal_configs().cloned().collect();
            a.sort();
            f.sort();
            prop_assert_eq!(a, f);
        }
        let pooled = explore(&c, &b.with_threads(3)).unwrap();
        prop_assert_eq!(pooled.to_json(), r.to_json());
    }
}

#[test]
fn move_rejects_non_neighbors() {
    assert!(FireMove::new(FaceCoord::new(1, 1), FaceCoord::new(2, 2)).is_err());
}
