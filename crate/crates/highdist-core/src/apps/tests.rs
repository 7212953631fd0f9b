use super::*;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};

fn arr(v: &[usize], m: usize) -> ArrayOracle {
    ArrayOracle::new(v.to_vec(), m).unwrap()
}

#[test]
fn k_distinctness_examples() {
    let yes = k_distinctness(&arr(&[1, 2, 2, 3], 4), 2, 0.2).unwrap();
    assert!(yes.answer && yes.truth == Some(true) && yes.success_probability() >= 0.8);
    let no = k_distinctness(&arr(&[0, 1, 2, 3], 4), 2, 0.2).unwrap();
    assert!(!no.answer && no.success_probability() >= 0.8);
    assert!(k_distinctness(&arr(&[0, 1, 2, 3], 4), 5, 0.2).is_err());
}

#[test]
fn gapped_examples() {
    let yes = gapped_k_distinctness(&arr(&[5, 5, 5, 5, 1, 2, 3, 4], 8), 4, 2, 0.2).unwrap();
    assert!(yes.answer && yes.success_probability() >= 0.8);
    let no = gapped_k_distinctness(&arr(&[0, 1, 2, 3, 4, 5, 6, 7], 8), 4, 2, 0.2).unwrap();
    assert!(!no.answer && no.success_probability() >= 0.8);
    assert!(gapped_k_distinctness(&arr(&[0, 1, 2, 3], 4), 2, 3, 0.2).is_err());
}

#[test]
fn gapped_queries_shrink_with_the_gap() {
    let a = arr(&[0, 1, 2, 3, 4, 5, 6, 7, 0, 1, 2, 3, 4, 5, 6, 7], 8);
    let q = |gap| gapped_k_distinctness(&a, 8, gap, 0.2).unwrap().queries.total("O_S") as f64;
    let (q2, q4) = (q(2), q(4));
    let slope = (q4.ln() - q2.ln()) / 2.0f64.ln();
    assert!(q4 < q2 && slope < -0.5, "{slope}");
}

#[test]
fn random_k_distinctness() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let v: Vec<usize> = (0..8).map(|_| rng.gen_range(0..8)).collect();
        for k in [2, 3, 4] {
            let d = k_distinctness(&arr(&v, 8), k, 0.2).unwrap();
            assert_eq!(d.answer, classical::k_distinct(&v, k), "{v:?} {k}");
            assert!(d.success_probability() >= 0.8);
        }
    }
}

#[test]
fn f_infinity_exact_mode() {
    let e = f_infinity(&arr(&[1, 2, 2, 3, 2, 0, 0, 7], 8), 0.99, 0.2).unwrap();
    assert_eq!(e.truth, 3);
    assert_eq!(e.rounded, 3);
    assert!(e.success_probability >= 0.8);
    let lo = e.search.lower * 8.0;
    let hi = e.search.upper * 8.0;
    assert!(lo <= 3.0 && 3.0 < hi);
    let r = f_infinity_relative(&arr(&[1, 2, 2, 3, 2, 0, 0, 7], 8), 0.5, 0.2).unwrap();
    assert!(0.5 * r.estimate <= 3.0 && 3.0 < r.estimate);
    assert!(f_infinity(&arr(&[0, 1], 2), 2.0, 0.2).is_err());
}

#[test]
fn nonlinearity_examples() {
    let lin = nonlinearity(&BooleanFunctionOracle::xor2(), 0.1, 0.2).unwrap();
    assert!(lin.eta.abs() <= 0.1 && lin.truth == 0.0);
    let and = nonlinearity(&BooleanFunctionOracle::and2(), 0.1, 0.2).unwrap();
    assert!((and.eta - 0.25).abs() <= 0.1);
    assert!(and.success_probability >= 0.8);
    let fb = nonlinearity_with(&BooleanFunctionOracle::and2(), 0.1, 0.2, NonlinRoute::HighDistSquared, &EngineConfig::default()).unwrap();
    assert!((fb.eta - 0.25).abs() <= 0.1);
    assert!(nonlinearity(&BooleanFunctionOracle::and2(), 0.5, 0.2).is_err());
}

#[test]
fn highamp_route_is_cheaper() {
    let f = BooleanFunctionOracle::and2();
    let cost = |route| nonlinearity_with(&f, 1.0 / 16.0, 0.2, route, &EngineConfig::default()).unwrap().queries.total("f");
    assert!(cost(NonlinRoute::HighAmp) < cost(NonlinRoute::HighDistSquared));
}

#[test]
fn amplitude_decider_sides() {
    let od = deutsch_jozsa_oracle(&BooleanFunctionOracle::and2());
    let mut d = AmplitudeDecider { oracle: &od, config: EngineConfig::default() };
    assert!(d.decide(0.5, 0.1, 0.2).unwrap().p_true >= 0.8);
    assert!(d.decide(0.75, 0.1, 0.2).unwrap().p_true <= 0.2);
}
