use lambda_flows::bridge::{compose, Bridge};
use lambda_flows::flemingviot::{simulate_fv, FvHorizon, MeasureState};
use lambda_flows::lookdown::{apply_event, evolve, flow_partition, LookdownGraph, ReproductionEvent, TypeTracker};
use lambda_flows::measure::LambdaMeasure;
use lambda_flows::partition::{coag, decode_single_block, encode_single_block, Partition};
use proptest::prelude::*;
use proptest::sample::subsequence;

fn partition(n: usize) -> impl Strategy<Value = Partition> {
    prop::collection::vec(0..n, n).prop_map(|labels| Partition::from_labels(&labels).unwrap())
}

fn subset(n: usize) -> impl Strategy<Value = Vec<usize>> {
    (2..=n).prop_flat_map(move |k| subsequence((1..=n).collect::<Vec<_>>(), k))
}

fn events(n: usize, max: usize) -> impl Strategy<Value = Vec<ReproductionEvent>> {
    prop::collection::vec(subset(n), 0..max).prop_map(|sets| {
        sets.into_iter()
            .enumerate()
            .map(|(k, levels)| ReproductionEvent { time: (k + 1) as f64, levels })
            .collect()
    })
}

fn bridge() -> impl Strategy<Value = Bridge> {
    prop::collection::vec((0.0..1.0f64, 0.01..1.0f64), 0..4).prop_map(|raw| {
        let total: f64 = raw.iter().map(|r| r.1).sum::<f64>().max(1.0) * 1.25;
        let mut jumps: Vec<(f64, f64)> = raw.iter().map(|&(u, a)| (u, a / total)).collect();
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        jumps.dedup_by(|a, b| a.0 == b.0);
        Bridge::new(jumps).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn coag_is_associative(a in partition(7), b in partition(7), c in partition(7)) {
        let left = coag(&coag(&a, &b).unwrap(), &c).unwrap();
        let right = coag(&a, &coag(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn coag_identities(a in partition(7)) {
        let zero = Partition::singletons(7);
        let one = Partition::one_block(7);
        prop_assert_eq!(coag(&a, &zero).unwrap(), a.clone());
        prop_assert_eq!(coag(&zero, &a).unwrap(), a.clone());
        prop_assert_eq!(coag(&a, &one).unwrap(), one);
    }

    #[test]
    fn single_block_round_trip(members in subset(12)) {
        let pi = encode_single_block(&members, 12).unwrap();
        prop_assert_eq!(pi.non_singleton_count(), 1);
        prop_assert_eq!(decode_single_block(&pi).unwrap(), members);
    }

    #[test]
    fn rates_are_consistent(alpha in 0.2..1.9f64, m in 2usize..20, p_off in 0usize..18) {
        let lam = LambdaMeasure::beta(alpha).unwrap();
        let p = 2 + p_off % (m - 1);
        let lhs = lam.lambda_rate(m, p).unwrap();
        let rhs = lam.lambda_rate(m + 1, p).unwrap() + lam.lambda_rate(m + 1, p + 1).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.max(1e-12));
        prop_assert!(lam.lambda_rate(m + 1, p).unwrap() <= lhs * (1.0 + 1e-12));
    }

    #[test]
    fn psi_is_convex(alpha in 1.05..1.95f64, a in 0.01..1e4f64, b in 0.01..1e4f64) {
        let lam = LambdaMeasure::beta(alpha).unwrap();
        let mid = lam.psi(0.5 * (a + b)).unwrap();
        prop_assert!(lam.psi(a).unwrap() + lam.psi(b).unwrap() >= 2.0 * mid * (1.0 - 1e-9));
    }

    #[test]
    fn tracker_matches_literal_pushup(n in 2usize..12, seq in events(11, 30)) {
        let seq: Vec<ReproductionEvent> = seq.into_iter().filter(|e| e.levels.iter().all(|&l| l <= n)).collect();
        let mut tr = TypeTracker::new(n);
        let mut literal: Vec<u32> = (0..n as u32).collect();
        for e in &seq {
            let levels: Vec<u32> = e.levels.iter().map(|&l| l as u32).collect();
            tr.apply(&levels);
            literal = apply_event(&literal, &e.levels);
            prop_assert_eq!(tr.types(), literal.as_slice());
            // alive types are a prefix of the initial levels
            let mut present = vec![false; n];
            for &ty in &literal {
                present[ty as usize] = true;
            }
            let k = present.iter().filter(|&&x| x).count();
            prop_assert_eq!(k, tr.alive());
            prop_assert!(present[..k].iter().all(|&x| x));
        }
    }

    #[test]
    fn flow_is_a_cocycle(seq in events(8, 12), r in 0usize..13, s in 0usize..13, t in 0usize..13) {
        let g = LookdownGraph::from_events(8, (0.0, 12.0), &seq).unwrap();
        let mut idx = [r, s, t];
        idx.sort();
        let [r, s, t] = idx.map(|k| k as f64);
        let whole = flow_partition(&g, r, t).unwrap();
        let split = coag(&flow_partition(&g, s, t).unwrap(), &flow_partition(&g, r, s).unwrap()).unwrap();
        prop_assert_eq!(whole, split);
    }

    #[test]
    fn evolve_agrees_with_flow(seq in events(9, 15), t in 0usize..16) {
        let g = LookdownGraph::from_events(9, (0.0, 15.0), &seq).unwrap();
        let t = t as f64;
        let types: Vec<usize> = (1..=9).collect();
        let now = evolve(&g, &types, t).unwrap();
        let pi = flow_partition(&g, 0.0, t).unwrap();
        for level in 1..=9 {
            prop_assert_eq!(now[level - 1], pi.block_of(level).unwrap());
        }
    }

    #[test]
    fn bridge_composition_is_associative(f1 in bridge(), f2 in bridge(), f3 in bridge()) {
        let left = compose(&f3, &compose(&f2, &f1));
        let right = compose(&compose(&f3, &f2), &f1);
        for k in 0..=200 {
            let x = k as f64 / 200.0;
            prop_assert!((left.eval(x) - right.eval(x)).abs() < 1e-12);
            prop_assert!((left.eval(x) - f3.eval(f2.eval(f1.eval(x)))).abs() < 1e-12);
        }
        prop_assert!((left.drift() - right.drift()).abs() < 1e-15);
    }

    #[test]
    fn bridge_inverse_brackets(f in bridge(), v in 0.0..1.0f64) {
        let x = f.inverse(v);
        prop_assert!(f.eval_left(x) <= v + 1e-12);
        prop_assert!(f.eval(x) >= v - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn speed_inverts_the_tail(alpha in 1.1..1.9f64, t in 1e-3..2.0f64) {
        let lam = LambdaMeasure::beta(alpha).unwrap();
        let v = lam.cdi_speed(t).unwrap();
        prop_assert!((lam.inverse_psi_tail(v).unwrap() - t).abs() <= 1e-6 * t);
        prop_assert!(lam.cdi_speed(1.5 * t).unwrap() < v);
    }

    #[test]
    fn kingman_states_fixate_monotonically(seed in any::<u64>()) {
        let m = LambdaMeasure::dirac0(1.0).unwrap();
        let run = simulate_fv(&m, 30, FvHorizon::UntilFixation { initial: 1.0, max: 1e3 }, seed, None).unwrap();
        let mut alive = usize::MAX;
        let mut last: Option<MeasureState> = None;
        for (_, state) in run.path() {
            prop_assert!((state.total_mass() - 1.0).abs() < 1e-12);
            let k = state.atoms.len() + (state.dust * 30.0).round() as usize;
            prop_assert!(k <= alive);
            alive = k;
            last = Some(state);
        }
        let last = last.unwrap();
        prop_assert_eq!(last.atoms.len(), 1);
        prop_assert!((last.atoms[0].1 - 1.0).abs() < 1e-12);
    }
}
