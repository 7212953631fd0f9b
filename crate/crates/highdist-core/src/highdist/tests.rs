use super::*;
use crate::classical::{exact_highdist_answer, PromiseClass};
use crate::oracle::{deutsch_jozsa_oracle, explicit_distribution_oracle, BooleanFunctionOracle};
use crate::qae::{decode, good_estimates};
use crate::state::{BranchedState, RegId};
use proptest::prelude::*;

fn small(p: &[f64]) -> (DistributionOracle, HighDistParams) {
    let o = explicit_distribution_oracle(p, 0).unwrap();
    let params = HighDistParams::derive(2, 0, 0.5, 0.25, 0.2).unwrap().with_copies(1).unwrap().with_precision(4).unwrap();
    (o, params)
}

fn dense_prefix(o: &DistributionOracle, params: &HighDistParams, pl: &PipelineLayout, stages: usize) -> Circuit {
    let mut c = pipeline::stage0(pl, params.tau1).unwrap();
    c.push(o.gate(&[pl.r1]));
    c.push(o.gate(&pl.work));
    if stages >= 2 {
        let regs = EqRegisters { index: pl.r1, value: pl.work[0], ancilla: None };
        let it = GroverIterate::eq(o, &regs).unwrap();
        for &r4 in &pl.r4 {
            c.append(&amp_est_circuit(&it, &pl.layout, r4));
        }
    }
    c
}

#[test]
fn examples() {
    let params = HighDistParams::derive(4, 0, 0.5, 0.25, 0.2).unwrap();
    let r = highdist(&explicit_distribution_oracle(&[1.0, 0.0, 0.0, 0.0], 0).unwrap(), &params).unwrap();
    assert!(r.decision && r.exact_success_probability >= 0.8);
    assert!(r.good_index_distribution[0] > 1.0 - 1e-9);

    let p8 = HighDistParams::derive(8, 0, 0.5, 0.25, 0.2).unwrap();
    let r = highdist(&explicit_distribution_oracle(&[0.125; 8], 0).unwrap(), &p8).unwrap();
    assert!(!r.decision && r.exact_success_probability < 0.2);

    let r = highdist(&explicit_distribution_oracle(&[0.55, 0.15, 0.15, 0.15], 0).unwrap(), &params).unwrap();
    assert!(r.decision && r.exact_success_probability >= 0.8);
    assert!(r.good_index_distribution[0] > 0.9);
    let s: f64 = r.good_index_distribution.iter().sum();
    assert!((s - 1.0).abs() < 1e-9);

    let bad = HighDistParams::derive(8, 0, 0.5, 0.25, 0.2).unwrap();
    assert!(highdist(&explicit_distribution_oracle(&[0.25; 4], 0).unwrap(), &bad).is_err());
}

#[test]
fn relative_examples() {
    let a = highdist_relative(&explicit_distribution_oracle(&[0.55, 0.15, 0.15, 0.15], 0).unwrap(), 0.5, 0.5, 0.2).unwrap();
    assert_eq!(a.params, HighDistParams::derive(4, 0, 0.5, 0.25, 0.2).unwrap());
    let low =
        highdist_relative(&explicit_distribution_oracle(&[0.2, 0.2, 0.2, 0.2, 0.05, 0.05, 0.05, 0.05], 0).unwrap(), 0.5, 0.5, 0.2).unwrap();
    assert!(low.exact_success_probability <= 0.2);
    let hit = highdist_relative(&explicit_distribution_oracle(&[0.5, 0.2, 0.2, 0.1], 0).unwrap(), 0.5, 0.5, 0.2).unwrap();
    assert!(hit.exact_success_probability >= 0.8);
    assert!(highdist_relative(&explicit_distribution_oracle(&[0.5, 0.5], 0).unwrap(), 0.5, 1.0, 0.2).is_err());
}

#[test]
fn backends_agree_on_the_small_pipeline() {
    for p in [[0.7, 0.3], [0.5, 0.5], [0.1, 0.9], [1.0, 0.0]] {
        let (o, params) = small(&p);
        assert_eq!(highdist_qubits(&o, &params), 20);
        let d = highdist_with(&o, &params, &EngineConfig::dense()).unwrap();
        let b = highdist_with(&o, &params, &EngineConfig::branch()).unwrap();
        assert_eq!(d.backend, Backend::Dense);
        assert!((d.exact_success_probability - b.exact_success_probability).abs() < 1e-9);
        assert!((d.pre_amplification_success - b.pre_amplification_success).abs() < 1e-9);
        for (x, y) in d.good_index_distribution.iter().zip(&b.good_index_distribution) {
            assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in d.acceptance_given_index.iter().zip(&b.acceptance_given_index) {
            assert!((x - y).abs() < 1e-9);
        }
        assert_eq!(d.queries, b.queries);
    }
}

#[test]
fn expansion_matches_dense_state() {
    let (o, params) = small(&[0.7, 0.3]);
    let pl = highdist_layout(&o, &params).unwrap();
    let prep = highdist_preparer(&o, &params, &pl).unwrap();
    let schedule = schedule_for(success_lower_bound(params.tau, params.delta), params.delta).unwrap();
    let dense = run_dense(&pl, &prep, &schedule, DEFAULT_DENSE_CAP).unwrap().state;
    let analysis = highdist_branches(&o, &params).unwrap();
    let expanded = expand_highdist_dense(&o, &params, &analysis, &schedule, DEFAULT_DENSE_CAP).unwrap();
    assert!(dense.fidelity(&expanded).unwrap() >= 1.0 - 1e-10);
    for r in pl.layout.ids() {
        let (a, b) = (dense.marginal(r).unwrap(), expanded.marginal(r).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "register {}", pl.layout.name(r));
        }
    }
}

#[test]
fn branched_state_reproduces_stages_two_to_four() {
    let (o, params) = small(&[0.6, 0.4]);
    let pl = highdist_layout(&o, &params).unwrap();
    let prep = highdist_preparer(&o, &params, &pl).unwrap();
    let mut dense = QuantumState::zero(pl.layout.clone()).unwrap();
    dense.run(&prep, &mut QueryCounter::new()).unwrap();
    let mut st = QuantumState::zero(pl.layout.clone()).unwrap();
    st.run(&dense_prefix(&o, &params, &pl, 1), &mut QueryCounter::new()).unwrap();
    let mut br = BranchedState::new(&st, pl.r1).unwrap();
    let mut rest = Circuit::new();
    for g in &prep.gates()[3..] {
        rest.push(g.clone());
    }
    br.run(&rest, &mut QueryCounter::new()).unwrap();
    assert!(br.recombine().unwrap().fidelity(&dense).unwrap() >= 1.0 - 1e-10);
}

#[test]
fn stage_three_uncomputes() {
    let (o, params) = small(&[0.7, 0.3]);
    let pl = highdist_layout(&o, &params).unwrap();
    let mut before = QuantumState::zero(pl.layout.clone()).unwrap();
    before.run(&dense_prefix(&o, &params, &pl, 2), &mut QueryCounter::new()).unwrap();
    let mut after = before.clone();
    after.run(&pipeline::stage3(&pl).unwrap(), &mut QueryCounter::new()).unwrap();
    let lay = &pl.layout;
    let mut want = vec![c(0.0, 0.0); before.amplitudes().len()];
    for (i, z) in before.amplitudes().iter().enumerate() {
        if z.norm_sqr() == 0.0 {
            continue;
        }
        assert_eq!(lay.extract(i, pl.r3), params.tau1);
        let a = lay.extract(i, pl.r4[0]);
        want[i | lay.deposit(pl.r5[0], marks(a, params.tau1, params.l) as usize)] = *z;
    }
    for (x, y) in want.iter().zip(after.amplitudes()) {
        assert!((x - y).norm() < 1e-12);
    }
    assert!((after.probability_of(pl.h3, 0).unwrap() - 1.0).abs() < 1e-12);
    assert!((after.probability_of(pl.h4, 0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn dense_queries_match_formula() {
    let (o, params) = small(&[0.7, 0.3]);
    let d = highdist_with(&o, &params, &EngineConfig::dense()).unwrap();
    let schedule = schedule_for(success_lower_bound(params.tau, params.delta), params.delta).unwrap();
    assert_eq!(d.queries, pipeline_tally("O_D", 2, 1, 4, &schedule));
    assert_eq!(d.schedule_length, schedule.preparer_calls());
}

#[test]
fn dense_cap_is_enforced() {
    let params = HighDistParams::derive(4, 0, 0.5, 0.25, 0.2).unwrap();
    let o = explicit_distribution_oracle(&[0.25; 4], 0).unwrap();
    let cfg = EngineConfig { backend: Backend::Dense, dense_cap: 20 };
    assert!(matches!(highdist_with(&o, &params, &cfg), Err(Error::QubitBudget { .. })));
    let auto = highdist_with(&o, &params, &EngineConfig { backend: Backend::Auto, dense_cap: 20 }).unwrap();
    assert_eq!(auto.backend, Backend::Branch);
}

#[test]
fn post_majority_error_with_full_copies() {
    let (tau, eps, delta) = (0.5, 0.25, 0.2);
    let p = [0.5, 0.2, 0.1, 0.1, 0.05, 0.05, 0.0, 0.0];
    let params = HighDistParams::derive(8, 0, tau, eps, delta).unwrap().full_copies();
    assert_eq!(params.k, 24);
    let a = highdist_branches(&explicit_distribution_oracle(&p, 0).unwrap(), &params).unwrap();
    for b in &a.branches {
        let wrong = if b.good >= tau {
            1.0 - b.accept
        } else if b.good < tau - eps {
            b.accept
        } else {
            continue;
        };
        assert!(wrong <= delta * delta * tau * tau, "x = {}: {wrong}", b.index);
    }
}

#[test]
fn highamp_examples() {
    let zero = deutsch_jozsa_oracle(&BooleanFunctionOracle::new(vec![false; 4]).unwrap());
    let r = highamp(&zero, 0.9, 0.04, 0.2).unwrap();
    assert!(r.decision && r.exact_success_probability >= 0.8);
    let and = deutsch_jozsa_oracle(&BooleanFunctionOracle::and2());
    let r = highamp(&and, 0.8, 0.05, 0.2).unwrap();
    assert!(!r.decision && r.exact_success_probability <= 0.2);
    let xor = deutsch_jozsa_oracle(&BooleanFunctionOracle::xor2());
    assert!(highamp(&xor, 0.9, 0.04, 0.2).unwrap().decision);
    assert!(highamp_params(4, 0.9, 0.1, 0.2).is_err());
    assert!(highamp(&explicit_distribution_oracle(&[0.5, 0.5], 1).unwrap(), 0.5, 0.1, 0.2).is_err());
}

#[test]
fn highamp_backends_agree() {
    let params = highamp_params(2, 0.5, 0.1, 0.1).unwrap().with_copies(1).unwrap().with_precision(4).unwrap();
    let f = BooleanFunctionOracle::new(vec![false, true]).unwrap();
    for o in [explicit_distribution_oracle(&[0.8, 0.2], 0).unwrap(), deutsch_jozsa_oracle(&f)] {
        assert_eq!(highamp::highamp_qubits(&o, &params), 21);
        for negate in [false, true] {
            let d = highamp::highamp_signed(&o, 0.5, &params, negate, &EngineConfig::dense()).unwrap();
            let b = highamp::highamp_signed(&o, 0.5, &params, negate, &EngineConfig::branch()).unwrap();
            assert!((d.exact_success_probability - b.exact_success_probability).abs() < 1e-9);
            for (x, y) in d.acceptance_given_index.iter().zip(&b.acceptance_given_index) {
                assert!((x - y).abs() < 1e-9);
            }
            assert_eq!(d.queries, b.queries);
        }
    }
}

#[test]
fn highamp_family_good_probability() {
    let o = deutsch_jozsa_oracle(&BooleanFunctionOracle::and2());
    let alpha = o.amplitudes().unwrap();
    for negate in [false, true] {
        let fam = highamp::highamp_family(&o, negate).unwrap();
        let s = if negate { -1.0 } else { 1.0 };
        for (x, a) in alpha.iter().enumerate() {
            assert!((fam.good_probability(x).unwrap() - 0.5 * (1.0 + s * a.re)).abs() < 1e-12);
        }
    }
}

fn promise_probs(seed: &[f64]) -> Vec<f64> {
    let s: f64 = seed.iter().sum();
    seed.iter().map(|v| v / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn marking_is_exact_on_good_estimates(p in 0.0f64..=1.0, e in 0usize..3) {
        let eps = [0.25, 0.125, 0.0625][e];
        let params = HighDistParams::derive(2, 0, 0.5, eps, 0.2).unwrap();
        for a in good_estimates(p, params.l) {
            if p >= params.tau {
                prop_assert!(marks(a, params.tau1, params.l));
            } else if p < params.tau - params.eps {
                prop_assert!(!marks(a, params.tau1, params.l));
            }
        }
        prop_assert!(decode(params.tau1, params.l) <= params.tau_prime);
    }

    #[test]
    fn promise_contract_holds(seed in proptest::collection::vec(0.01f64..1.0, 8), spike in proptest::bool::ANY) {
        let mut p = promise_probs(&seed);
        if spike {
            p[0] += 1.2;
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= s);
        }
        let params = HighDistParams::derive(8, 0, 0.5, 0.25, 0.2).unwrap();
        let r = highdist(&explicit_distribution_oracle(&p, 0).unwrap(), &params).unwrap();
        let probs: Vec<f64> = r.good_index_distribution.clone();
        prop_assert!(probs.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        match exact_highdist_answer(&p, 0.5, 0.25) {
            PromiseClass::True => prop_assert!(r.exact_success_probability >= 0.8),
            PromiseClass::False => prop_assert!(r.exact_success_probability <= 0.2),
            PromiseClass::NonPromise => {}
        }
    }
}

#[test]
fn register_ids_are_stable() {
    let (o, params) = small(&[0.5, 0.5]);
    let pl = highdist_layout(&o, &params).unwrap();
    assert_eq!(pl.r1, RegId(0));
    assert_eq!(pl.layout.name(pl.rf), "Rf");
}
