use std::path::PathBuf;

use nnsql::sqlgen::*;
use nnsql::{Activation, SqlQuery};

/// Every generator under one fixed set of options, keyed by snapshot name.
pub fn catalogue() -> Vec<(&'static str, SqlQuery)> {
    let eval = EvalOptions::for_model(0);
    let soft = eval.output(Activation::Softmax);
    let geo = GeometryOptions::for_model(0);
    let sal = SaliencyOptions::new(0, 0);
    vec![
        ("eval_recursive", gen_eval(&eval).unwrap()),
        ("eval_recursive_greatest", gen_eval(&EvalOptions { relu: ReluStyle::Greatest, ..eval }).unwrap()),
        ("eval_recursive_all_models", gen_eval(&eval.all_models()).unwrap()),
        ("eval_recursive_single_vec", gen_eval(&eval.single_vec(0)).unwrap()),
        ("eval_fixed_2", gen_eval(&eval.fixed(2)).unwrap()),
        ("eval_fixed_2_softmax", gen_eval(&soft.fixed(2)).unwrap()),
        ("eval_recursive_softmax", gen_eval(&soft).unwrap()),
        ("classify_recursive", gen_classify(&soft).unwrap()),
        ("classify_fixed_2", gen_classify(&soft.fixed(2)).unwrap()),
        ("breakpoints", gen_breakpoints(&geo).unwrap()),
        ("slopes", gen_slopes(&geo).unwrap()),
        ("initial_slope", gen_initial_slope(&geo).unwrap()),
        ("final_slope", gen_final_slope(&geo).unwrap()),
        ("intercept", gen_intercept(&geo).unwrap()),
        ("integral", gen_integral(&geo, -1.0, 2.5).unwrap()),
        ("threshold_check", gen_threshold_check(&geo, 0.5).unwrap()),
        ("prunable_nodes", gen_prunable_nodes(0, 0.1).unwrap()),
        ("unconnected_stored", gen_unconnected_nodes(0, &EdgeSource::Stored).unwrap()),
        ("unconnected_above", gen_unconnected_nodes(0, &EdgeSource::AboveThreshold(0.1)).unwrap()),
        ("unconnected_table", gen_unconnected_nodes(0, &EdgeSource::Table("Edge".into())).unwrap()),
        ("neuron_count", gen_neuron_count(0)),
        ("distinct_edges", gen_distinct_edges(0)),
        ("depth", gen_depth(0)),
        ("saliency_pinputs", gen_saliency_pinputs(&sal)),
        ("saliency_pinputs_single", gen_saliency_pinputs(&sal.only(0))),
        ("saliency_medges_input", gen_saliency_medges(DropTargets::Input, &sal)),
        ("saliency_medges_hidden", gen_saliency_medges(DropTargets::Hidden, &sal)),
        ("saliency_medges_hidden_single", gen_saliency_medges(DropTargets::Hidden, &sal.only(1))),
    ]
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Names of snapshots whose file is missing or differs from the generator.
pub fn stale_snapshots() -> Vec<&'static str> {
    catalogue()
        .into_iter()
        .filter(|(name, q)| std::fs::read_to_string(golden_dir().join(format!("{name}.sql"))).ok().as_deref() != Some(q.text.as_str()))
        .map(|(name, _)| name)
        .collect()
}
