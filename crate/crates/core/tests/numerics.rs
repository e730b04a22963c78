use fslstm_core::numerics::{
    finite_difference_check, Bindings, Graph, NumericsError, ParamRole, ParamSet, Tensor,
};
use proptest::prelude::*;

fn scalar_param(name: &str, v: f64) -> ParamSet {
    let mut p = ParamSet::new();
    p.insert(name, Tensor::vector(vec![v]), ParamRole::Weight, true)
        .unwrap();
    p
}

#[test]
fn sigmoid_of_zero_is_half() {
    let mut g = Graph::new();
    let x = g.input("x", &[]).unwrap();
    let y = g.sigmoid(x).unwrap();
    g.output("y", y).unwrap();
    let mut b = Bindings::new();
    b.insert("x".into(), Tensor::scalar(0.0));
    let eval = g.forward(&b, &ParamSet::new()).unwrap();
    assert_eq!(eval.output("y").unwrap(), &[0.5]);
}

#[test]
fn column_softmax_of_zero_matrix_is_uniform() {
    let mut g = Graph::new();
    let x = g.input("x", &[2, 2]).unwrap();
    let y = g.col_softmax(x).unwrap();
    g.output("y", y).unwrap();
    let mut b = Bindings::new();
    b.insert("x".into(), Tensor::zeros(vec![2, 2]));
    let out = g
        .forward(&b, &ParamSet::new())
        .unwrap()
        .output_tensor("y")
        .unwrap();
    assert_eq!(out.shape(), &[2, 2]);
    assert_eq!(out.values(), &[0.5, 0.5, 0.5, 0.5]);
}

#[test]
fn square_removes_sign() {
    let mut g = Graph::new();
    let x = g.input("x", &[]).unwrap();
    let y = g.square(x).unwrap();
    g.output("y", y).unwrap();
    let mut b = Bindings::new();
    b.insert("x".into(), Tensor::scalar(-3.0));
    assert_eq!(
        g.forward(&b, &ParamSet::new())
            .unwrap()
            .output("y")
            .unwrap(),
        &[9.0]
    );
}

#[test]
fn forward_rejects_wrong_input_shape_naming_the_node() {
    let mut g = Graph::new();
    let x = g.input("forcing", &[3]).unwrap();
    let y = g.sum(x).unwrap();
    g.output("y", y).unwrap();
    let mut b = Bindings::new();
    b.insert("forcing".into(), Tensor::vector(vec![1.0, 2.0]));
    match g.forward(&b, &ParamSet::new()) {
        Err(NumericsError::ShapeMismatch { node, .. }) => assert_eq!(node, "forcing"),
        other => panic!("expected shape mismatch, got {other:?}"),
    }
    assert!(matches!(
        g.forward(&Bindings::new(), &ParamSet::new()),
        Err(NumericsError::MissingInput(_))
    ));
}

#[test]
fn forward_rejects_non_finite_intermediate() {
    let mut g = Graph::new();
    let x = g.input("x", &[]).unwrap();
    let y = g.square(x).unwrap();
    g.set_label(y, "blows_up");
    g.output("y", y).unwrap();
    let mut b = Bindings::new();
    b.insert("x".into(), Tensor::scalar(1e200));
    match g.forward(&b, &ParamSet::new()) {
        Err(NumericsError::NonFinite { node, .. }) => assert_eq!(node, "blows_up"),
        other => panic!("expected non-finite rejection, got {other:?}"),
    }
}

#[test]
fn build_time_shape_checks() {
    let mut g = Graph::new();
    let a = g.input("a", &[2]).unwrap();
    let b = g.input("b", &[3]).unwrap();
    assert!(matches!(
        g.add(a, b),
        Err(NumericsError::ShapeMismatch { .. })
    ));
    let m = g.input("m", &[4, 3]).unwrap();
    assert!(g.matvec(m, a).is_err());
    let mv = g.matvec(m, b).unwrap();
    assert_eq!(g.shape(mv), &[4]);
    assert!(g.input("a", &[1]).is_err());
}

fn quadratic() -> (Graph, ParamSet) {
    let mut g = Graph::new();
    let t = g.param("theta", &[1]).unwrap();
    let y = g.square(t).unwrap();
    let s = g.sum(y).unwrap();
    g.output("f", s).unwrap();
    (g, scalar_param("theta", 3.0))
}

#[test]
fn power_rule_gradient() {
    let (g, p) = quadratic();
    let mut eval = g.forward(&Bindings::new(), &p).unwrap();
    assert_eq!(eval.output("f").unwrap(), &[9.0]);
    let grads = eval.backward("f").unwrap();
    assert_eq!(grads.get("theta").unwrap().values(), &[6.0]);
    // Repeated backward on the same forward state is stable.
    assert_eq!(eval.backward("f").unwrap(), grads);
}

#[test]
fn sigmoid_gradient_at_zero() {
    let mut g = Graph::new();
    let t = g.param("theta", &[1]).unwrap();
    let y = g.sigmoid(t).unwrap();
    let s = g.sum(y).unwrap();
    g.output("f", s).unwrap();
    let p = scalar_param("theta", 0.0);
    let grads = g
        .forward(&Bindings::new(), &p)
        .unwrap()
        .backward("f")
        .unwrap();
    assert_eq!(grads.get("theta").unwrap().values(), &[0.25]);
}

#[test]
fn sum_of_softmax_has_zero_gradient() {
    let mut g = Graph::new();
    let t = g.param("theta", &[5]).unwrap();
    let y = g.col_softmax(t).unwrap();
    let s = g.sum(y).unwrap();
    g.output("f", s).unwrap();
    let mut p = ParamSet::new();
    p.insert(
        "theta",
        Tensor::vector(vec![0.3, -1.2, 2.0, 0.0, 5.5]),
        ParamRole::Weight,
        true,
    )
    .unwrap();
    let grads = g
        .forward(&Bindings::new(), &p)
        .unwrap()
        .backward("f")
        .unwrap();
    for v in grads.get("theta").unwrap().values() {
        assert!(v.abs() < 1e-15, "{v}");
    }
}

#[test]
fn backward_requires_scalar_output() {
    let mut g = Graph::new();
    let t = g.param("theta", &[2]).unwrap();
    let y = g.tanh(t).unwrap();
    g.output("y", y).unwrap();
    let mut p = ParamSet::new();
    p.insert(
        "theta",
        Tensor::vector(vec![0.1, 0.2]),
        ParamRole::Weight,
        true,
    )
    .unwrap();
    let mut eval = g.forward(&Bindings::new(), &p).unwrap();
    assert!(matches!(
        eval.backward("y"),
        Err(NumericsError::NotScalar { .. })
    ));
}

#[test]
fn frozen_parameters_get_no_gradient() {
    let mut g = Graph::new();
    let a = g.param("a", &[1]).unwrap();
    let b = g.param("b", &[1]).unwrap();
    let y = g.mul(a, b).unwrap();
    let s = g.sum(y).unwrap();
    g.output("f", s).unwrap();
    let mut p = ParamSet::new();
    p.insert("a", Tensor::vector(vec![2.0]), ParamRole::Weight, true)
        .unwrap();
    p.insert("b", Tensor::vector(vec![5.0]), ParamRole::Weight, false)
        .unwrap();
    let grads = g
        .forward(&Bindings::new(), &p)
        .unwrap()
        .backward("f")
        .unwrap();
    assert_eq!(grads.get("a").unwrap().values(), &[5.0]);
    assert!(grads.get("b").is_none());
}

#[test]
fn finite_differences_on_quadratic() {
    let (g, p) = quadratic();
    let report = finite_difference_check(&g, &Bindings::new(), &p, "f", 1e-5).unwrap();
    assert!(report.max_relative_error <= 1e-6, "{report:?}");
    assert_eq!(report.probed, 1);
}

#[test]
fn finite_differences_on_constant() {
    let mut g = Graph::new();
    let _t = g.param("theta", &[1]).unwrap();
    let c = g.constant(Tensor::scalar(4.0));
    g.output("f", c).unwrap();
    let p = scalar_param("theta", 1.0);
    let report = finite_difference_check(&g, &Bindings::new(), &p, "f", 1e-5).unwrap();
    assert_eq!(report.max_relative_error, 0.0);
}

#[test]
fn finite_difference_step_must_be_positive() {
    let (g, p) = quadratic();
    assert!(matches!(
        finite_difference_check(&g, &Bindings::new(), &p, "f", 0.0),
        Err(NumericsError::InvalidEpsilon(_))
    ));
}

#[test]
fn l1_normalize_guards_empty_store() {
    let mut g = Graph::new();
    let x = g.input("x", &[3]).unwrap();
    let y = g.l1_normalize(x).unwrap();
    g.output("y", y).unwrap();
    let mut b = Bindings::new();
    b.insert("x".into(), Tensor::vector(vec![0.0, 0.0, 0.0]));
    assert_eq!(
        g.forward(&b, &ParamSet::new())
            .unwrap()
            .output("y")
            .unwrap(),
        &[0.0; 3]
    );
    b.insert("x".into(), Tensor::vector(vec![1.0, 3.0, 0.0]));
    assert_eq!(
        g.forward(&b, &ParamSet::new())
            .unwrap()
            .output("y")
            .unwrap(),
        &[0.25, 0.75, 0.0]
    );
}

/// Graph computing `sum(w ⊙ op(θ))` for one primitive, so every output
/// element contributes to the scalar with a distinct weight.
fn probe_unary(
    op: &str,
    theta: &[f64],
    weights: &[f64],
    cols: usize,
) -> (Graph, ParamSet, Bindings) {
    let n = theta.len();
    let shape: Vec<usize> = if cols > 1 {
        vec![n / cols, cols]
    } else {
        vec![n]
    };
    let mut g = Graph::new();
    let t = g.param("theta", &shape).unwrap();
    let w = g.input("w", &shape).unwrap();
    let y = match op {
        "sigmoid" => g.sigmoid(t),
        "tanh" => g.tanh(t),
        "square" => g.square(t),
        "softmax" => g.col_softmax(t),
        "l1" => g.l1_normalize(t),
        _ => unreachable!(),
    }
    .unwrap();
    let z = g.mul(y, w).unwrap();
    let s = g.sum(z).unwrap();
    g.output("f", s).unwrap();
    let mut p = ParamSet::new();
    p.insert(
        "theta",
        Tensor::new(shape.clone(), theta.to_vec()).unwrap(),
        ParamRole::Weight,
        true,
    )
    .unwrap();
    let mut b = Bindings::new();
    b.insert("w".into(), Tensor::new(shape, weights.to_vec()).unwrap());
    (g, p, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_columns_are_distributions(v in proptest::collection::vec(-10.0f64..10.0, 12)) {
        let mut g = Graph::new();
        let x = g.input("x", &[4, 3]).unwrap();
        let y = g.col_softmax(x).unwrap();
        g.output("y", y).unwrap();
        let mut b = Bindings::new();
        b.insert("x".into(), Tensor::new(vec![4, 3], v).unwrap());
        let out = g.forward(&b, &ParamSet::new()).unwrap().output("y").unwrap().to_vec();
        for c in 0..3 {
            let col: f64 = (0..4).map(|r| out[r * 3 + c]).sum();
            prop_assert!((col - 1.0).abs() <= 1e-12);
        }
        for v in out {
            prop_assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn sigmoid_and_square_ranges(x in -50.0f64..50.0) {
        let mut g = Graph::new();
        let i = g.input("x", &[]).unwrap();
        let s = g.sigmoid(i).unwrap();
        let q = g.square(i).unwrap();
        g.output("s", s).unwrap();
        g.output("q", q).unwrap();
        let mut b = Bindings::new();
        b.insert("x".into(), Tensor::scalar(x));
        let eval = g.forward(&b, &ParamSet::new()).unwrap();
        let s = eval.output("s").unwrap()[0];
        prop_assert!((0.0..=1.0).contains(&s));
        if x.abs() < 30.0 {
            prop_assert!(s > 0.0 && s < 1.0);
        }
        prop_assert!(eval.output("q").unwrap()[0] >= 0.0);
    }

    #[test]
    fn unary_primitives_match_finite_differences(
        theta in proptest::collection::vec(-2.0f64..2.0, 6),
        weights in proptest::collection::vec(-2.0f64..2.0, 6),
        which in 0usize..6,
    ) {
        let (op, cols) = [("sigmoid", 1), ("tanh", 1), ("square", 1), ("softmax", 1), ("softmax", 3), ("l1", 1)][which];
        let (g, p, b) = probe_unary(op, &theta, &weights, cols);
        let report = finite_difference_check(&g, &b, &p, "f", 1e-5).unwrap();
        // Near-zero derivatives make the relative error meaningless at the
        // floor; compare absolutely there.
        prop_assume!(report.max_relative_error.is_finite());
        let mut eval = g.forward(&b, &p).unwrap();
        let grads = eval.backward("f").unwrap();
        let analytic = grads.get("theta").unwrap().values().to_vec();
        let mut probe = p.clone();
        for i in 0..theta.len() {
            let orig = theta[i];
            probe.tensor_mut("theta").unwrap().values_mut()[i] = orig + 1e-5;
            let up = g.forward(&b, &probe).unwrap().output("f").unwrap()[0];
            probe.tensor_mut("theta").unwrap().values_mut()[i] = orig - 1e-5;
            let down = g.forward(&b, &probe).unwrap().output("f").unwrap()[0];
            probe.tensor_mut("theta").unwrap().values_mut()[i] = orig;
            let numeric = (up - down) / 2e-5;
            let rel = (analytic[i] - numeric).abs() / numeric.abs().max(1e-8);
            prop_assert!(rel <= 1e-6 || (analytic[i] - numeric).abs() <= 1e-10,
                "{op} element {i}: analytic {} numeric {numeric}", analytic[i]);
        }
    }

    #[test]
    fn binary_and_structural_primitives_match_finite_differences(
        m in proptest::collection::vec(-2.0f64..2.0, 12),
        v in proptest::collection::vec(-2.0f64..2.0, 3),
        u in proptest::collection::vec(-2.0f64..2.0, 4),
        w in proptest::collection::vec(-2.0f64..2.0, 4),
        which in 0usize..6,
    ) {
        let mut g = Graph::new();
        let pm = g.param("m", &[4, 3]).unwrap();
        let pv = g.param("v", &[3]).unwrap();
        let pu = g.param("u", &[4]).unwrap();
        let wv = g.constant(Tensor::vector(w));
        let y = match which {
            0 => g.matvec(pm, pv).unwrap(),
            1 => { let a = g.matvec(pm, pv).unwrap(); g.add(a, pu).unwrap() }
            2 => { let a = g.matvec(pm, pv).unwrap(); g.sub(a, pu).unwrap() }
            3 => { let a = g.matvec(pm, pv).unwrap(); g.mul(a, pu).unwrap() }
            4 => { let s = g.sum(pv).unwrap(); g.concat(&[pv, s]).unwrap() }
            _ => { let s = g.sum(pu).unwrap(); let t = g.sum(pv).unwrap(); let s2 = g.sum(pm).unwrap(); g.concat(&[s, t, s2, s]).unwrap() }
        };
        let z = g.mul(y, wv).unwrap();
        let f = g.sum(z).unwrap();
        g.output("f", f).unwrap();
        let mut p = ParamSet::new();
        p.insert("m", Tensor::new(vec![4, 3], m).unwrap(), ParamRole::Weight, true).unwrap();
        p.insert("v", Tensor::vector(v), ParamRole::Weight, true).unwrap();
        p.insert("u", Tensor::vector(u), ParamRole::Bias, true).unwrap();
        let report = finite_difference_check(&g, &Bindings::new(), &p, "f", 1e-5).unwrap();
        if report.max_relative_error > 1e-6 {
            // Only acceptable when the true derivative sits at rounding level.
            let mut eval = g.forward(&Bindings::new(), &p).unwrap();
            let grads = eval.backward("f").unwrap();
            let (name, idx) = report.worst.clone().unwrap();
            let a = grads.get(&name).unwrap().values()[idx];
            prop_assert!(a.abs() < 1e-4, "{report:?}");
        }
    }

    #[test]
    fn forward_is_bit_reproducible(v in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let (g, p, b) = probe_unary("softmax", &v, &[1.0, -1.0, 0.5, 2.0, 0.0, 1.5], 3);
        let a = g.forward(&b, &p).unwrap().output("f").unwrap()[0];
        let c = g.forward(&b, &p).unwrap().output("f").unwrap()[0];
        prop_assert_eq!(a.to_bits(), c.to_bits());
    }
}

#[test]
fn inference_matches_forward_and_refuses_backward() {
    let mut g = Graph::new();
    let x = g.input("x", &[3]).unwrap();
    let w = g.param("w", &[2, 3]).unwrap();
    let z = g.matvec(w, x).unwrap();
    let s = g.col_softmax(z).unwrap();
    let t = g.tanh(s).unwrap();
    let y = g.sum(t).unwrap();
    g.output("y", y).unwrap();
    let mut p = ParamSet::new();
    p.insert(
        "w",
        Tensor::matrix(2, 3, vec![0.1, -0.4, 0.3, 0.9, 0.2, -0.7]).unwrap(),
        ParamRole::Weight,
        true,
    )
    .unwrap();
    let mut b = Bindings::new();
    b.insert("x".into(), Tensor::vector(vec![1.0, 2.0, -1.0]));
    let full = g.forward(&b, &p).unwrap().output("y").unwrap().to_vec();
    let mut lean = g.infer_in(Default::default(), &b, &p).unwrap();
    assert_eq!(lean.output("y").unwrap(), full.as_slice());
    assert!(matches!(
        lean.backward("y"),
        Err(NumericsError::ForwardOnly)
    ));
}
