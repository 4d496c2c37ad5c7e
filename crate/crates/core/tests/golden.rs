//! Generated SQL pinned to snapshot files under `tests/golden`.
//!
//! Run with `UPDATE_GOLDEN=1` to rewrite the snapshots.

mod common;

use common::catalogue::{catalogue, golden_dir, stale_snapshots};
use common::*;
use nnsql::synth::{random_geometry_model, random_inputs};

#[test]
fn sql_matches_snapshots() {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        for (name, q) in catalogue() {
            std::fs::write(golden_dir().join(format!("{name}.sql")), &q.text).unwrap();
        }
    }
    let stale = stale_snapshots();
    assert!(stale.is_empty(), "snapshots differ or are missing (rerun with UPDATE_GOLDEN=1): {stale:?}");
}

#[test]
fn no_orphan_snapshots() {
    let known: Vec<String> = catalogue().into_iter().map(|(n, _)| format!("{n}.sql")).collect();
    for entry in std::fs::read_dir(golden_dir()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        assert!(known.contains(&name), "unexpected snapshot {name}");
    }
}

#[test]
fn generation_is_deterministic() {
    for ((a, qa), (_, qb)) in catalogue().into_iter().zip(catalogue()) {
        assert_eq!(qa, qb, "{a}");
        qa.check_params().unwrap();
    }
}

#[test]
fn every_query_runs_on_the_engine() {
    let m = random_geometry_model(&mut rng(70), 3);
    let s = with_model(&m, &random_inputs(&mut rng(71), 1, 2));
    for (name, q) in catalogue() {
        let t = s.execute(&q).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(t.columns.len(), q.result_schema.len(), "{name}");
    }
}
