mod common;

use common::*;
use ndarray::{Array1, Array4};
use nnsql::conv::{conv2d_to_dense, Conv2dSpec};
use nnsql::graph::validate_layered;
use nnsql::synth::{random_inputs, random_model, sine16};
use nnsql::{export_inputs, export_model, import_inputs, import_model, model_to_graph, Activation};
use proptest::prelude::*;

#[test]
fn json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (i, out) in [Activation::Identity, Activation::Softmax].into_iter().enumerate() {
        let m = random_model(&mut rng(80 + i as u64), &[5, 7, 3, 4], out);
        let path = dir.path().join(format!("m{i}.json"));
        export_model(&m, &path).unwrap();
        assert_eq!(import_model(&path).unwrap(), m);
    }
    let inputs = random_inputs(&mut rng(82), 5, 3);
    let path = dir.path().join("inputs.json");
    export_inputs(&inputs, &path).unwrap();
    assert_eq!(import_inputs(&path).unwrap(), inputs);
}

#[test]
fn shipped_sine_fixture() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/sine16.json");
    let m = import_model(path).unwrap();
    assert_eq!(m.widths(), [1, 17, 1]);
    assert_eq!(m, sine16());
}

#[test]
fn shipped_saliency_fixture() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");
    let m = import_model(format!("{root}/saliency9.json")).unwrap();
    let inputs = import_inputs(format!("{root}/saliency9_inputs.json")).unwrap();
    assert_eq!(m.widths(), [9, 8, 1]);
    assert_eq!(inputs.len(), 1);
    inputs[0].check_dim(&m).unwrap();
}

#[test]
fn mismatched_bias_names_the_layer() {
    let text = r#"{"name":"bad","layers":[
        {"type":"dense","weights":[[1.0,2.0]],"bias":[0.0],"activation":"relu"},
        {"type":"dense","weights":[[1.0]],"bias":[0.0,1.0],"activation":"identity"}]}"#;
    let err = nnsql::Model::from_json_str(text, "bad.json").unwrap_err();
    assert!(err.to_string().contains("layer 1"), "{err}");
}

#[test]
fn graph_examples() {
    let chain = model(vec![dense(&[&[1.0]], &[0.0], Activation::Relu), dense(&[&[1.0]], &[0.0], Activation::Identity)]);
    let g = model_to_graph(&chain);
    assert_eq!(g.node_ids(), [0, 1, 2]);
    assert_eq!(g.edges.iter().map(|e| (e.src, e.dst, e.weight)).collect::<Vec<_>>(), [(0, 1, 1.0), (1, 2, 1.0)]);
    let g = model_to_graph(&random_model(&mut rng(83), &[2, 3, 1], Activation::Identity));
    assert_eq!((g.nodes.len(), g.edges.len()), (6, 9));
}

fn direct_conv(spec: &Conv2dSpec, x: &[f64]) -> Vec<f64> {
    let (oh, ow) = spec.output_size().unwrap();
    let (kh, kw) = spec.kernel_size();
    let (h, w) = (spec.in_height as isize, spec.in_width as isize);
    let mut out = vec![0.0; spec.out_channels * oh * ow];
    for o in 0..spec.out_channels {
        for r in 0..oh {
            for c in 0..ow {
                let mut acc = 0.0;
                for i in 0..spec.in_channels {
                    for a in 0..kh {
                        for b in 0..kw {
                            let y = (r * spec.stride.0 + a) as isize - spec.padding.0 as isize;
                            let z = (c * spec.stride.1 + b) as isize - spec.padding.1 as isize;
                            if (0..h).contains(&y) && (0..w).contains(&z) {
                                acc += spec.kernel[[o, i, a, b]] * x[i * (h * w) as usize + (y * w + z) as usize];
                            }
                        }
                    }
                }
                out[o * oh * ow + r * ow + c] = acc;
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_expansion_matches_direct(
        h in 1usize..=6, w in 1usize..=6, cin in 1usize..=3, cout in 1usize..=3,
        kh in 1usize..=3, kw in 1usize..=3, sh in 1usize..=2, sw in 1usize..=2,
        ph in 0usize..=1, pw in 0usize..=1, seed in any::<u64>(),
    ) {
        prop_assume!(kh <= h + 2 * ph && kw <= w + 2 * pw);
        let mut r = rng(seed);
        let kernel = Array4::from_shape_fn((cout, cin, kh, kw), |_| rand::Rng::gen_range(&mut r, -1.0..=1.0));
        let spec = Conv2dSpec { in_height: h, in_width: w, in_channels: cin, out_channels: cout, kernel, stride: (sh, sw), padding: (ph, pw) };
        let layer = conv2d_to_dense(&spec).unwrap();
        let x: Vec<f64> = (0..cin * h * w).map(|_| rand::Rng::gen_range(&mut r, -1.0..=1.0)).collect();
        let got = layer.weights.dot(&Array1::from_vec(x.clone()));
        let want = direct_conv(&spec, &x);
        prop_assert!(max_abs_delta(got.as_slice().unwrap(), &want) <= 1e-12);
    }

    #[test]
    fn generated_models_are_layered(widths in prop::collection::vec(1usize..=6, 2..=6), seed in any::<u64>()) {
        let m = random_model(&mut rng(seed), &widths, Activation::Identity);
        let g = model_to_graph(&m);
        let layers = validate_layered(&g.node_ids(), &g.edges).unwrap();
        prop_assert_eq!(layers.depth(), widths.len() - 1);
        prop_assert_eq!(layers.inputs(), g.input_ids());
        for n in &g.nodes {
            prop_assert_eq!(layers.layers[&n.id], n.layer);
        }
        prop_assert_eq!(g.to_model(m.name.clone()).unwrap(), m);
    }
}
