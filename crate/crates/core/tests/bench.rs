use nnsql::bench::{
    compare_recursive_vs_fixed, loglog_slope, run_scaling, write_comparison_csv, write_csv, Axis, BenchConfig, Shape,
    Workload, CSV_HEADER,
};

fn small() -> Shape {
    Shape { input_length: 6, depth: 3, layer_size: 5, num_inputs: 3, output_width: 10 }
}

fn config(axis: Axis, sizes: Vec<usize>) -> BenchConfig {
    BenchConfig { base: small(), repetitions: 1, ..BenchConfig::new(axis, sizes) }
}

#[test]
fn hidden_junctions_have_square_edge_counts() {
    for s in [3usize, 7, 16] {
        let w = Workload::generate(small().with(Axis::LayerSize, s), 1);
        assert_eq!(w.hidden_junction_edges(), vec![s * s; small().depth - 2]);
    }
    let rows = run_scaling(&config(Axis::LayerSize, vec![4, 8])).unwrap();
    assert_eq!(rows[0].hidden_junction_edges, [16]);
    assert_eq!(rows[1].hidden_junction_edges, [64]);
}

#[test]
fn edges_grow_linearly_in_depth_and_input_length() {
    let e = |shape: Shape| Workload::generate(shape, 2).graph.edges.len();
    let base = small();
    let d: Vec<usize> = (2..6).map(|k| e(base.with(Axis::Depth, k))).collect();
    assert!(d.windows(2).all(|p| p[1] - p[0] == base.layer_size * base.layer_size));
    let i: Vec<usize> = (1..5).map(|k| e(base.with(Axis::InputLength, k))).collect();
    assert!(i.windows(2).all(|p| p[1] - p[0] == base.layer_size));
}

#[test]
fn result_rows_scale_with_input_count() {
    let rows = run_scaling(&config(Axis::NumInputs, vec![1, 2, 5, 9])).unwrap();
    for r in &rows {
        assert_eq!(r.rows, r.value * 10);
    }
}

#[test]
fn every_axis_agrees_with_oracle_at_minimal_size() {
    for axis in Axis::ALL {
        let rows = run_scaling(&config(axis, vec![1, 2])).unwrap();
        assert_eq!(rows.len(), 2);
    }
}

#[test]
fn strategies_agree_and_report_both_timings() {
    let cmp = compare_recursive_vs_fixed(5, &config(Axis::NumInputs, vec![1, 4])).unwrap();
    for (r, f) in cmp.recursive.iter().zip(&cmp.fixed) {
        assert_eq!(r.checksum, f.checksum);
        assert_eq!(r.rows, f.rows);
    }
    let mut out = Vec::new();
    write_comparison_csv(&mut out, &cmp).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "axis,value,recursive_seconds,fixed_seconds,checksum,rows");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("num_inputs,1,"));
}

#[test]
fn runs_are_reproducible() {
    let a = run_scaling(&config(Axis::Depth, vec![2])).unwrap();
    let b = run_scaling(&config(Axis::Depth, vec![2])).unwrap();
    assert_eq!(a[0].checksum, b[0].checksum);
    let mut out = Vec::new();
    write_csv(&mut out, &a).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 5);
}

/// Timing shape checks; noisy, so only run when `NNSQL_TIMING` is set.
#[test]
fn timing_slopes() {
    if std::env::var_os("NNSQL_TIMING").is_none() {
        return;
    }
    let cfg = |axis, sizes| BenchConfig { base: Shape::desk(), repetitions: 3, check: false, ..BenchConfig::new(axis, sizes) };
    let rows = run_scaling(&cfg(Axis::NumInputs, vec![2, 4, 8, 16])).unwrap();
    let s = loglog_slope(&rows).unwrap();
    eprintln!("num_inputs slope {s:.3}");
    assert!(s < 1.5);
    let rows = run_scaling(&cfg(Axis::LayerSize, vec![64, 128, 256])).unwrap();
    let s = loglog_slope(&rows).unwrap();
    eprintln!("layer_size slope {s:.3}");
    assert!(s > 1.0);
}
