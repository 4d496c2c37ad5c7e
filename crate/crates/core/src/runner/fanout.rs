//! Per-drop saliency evaluated concurrently, one session per worker.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use super::tasks::decode_saliency;
use super::EngineSession;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::sqlgen::{gen_saliency_medges, gen_saliency_pinputs, DropTargets, SaliencyOptions, SqlQuery};
use crate::store;

/// Which saliency query to run: zeroing inputs, or removing input or hidden
/// units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SaliencyFamily {
    Zero(SaliencyOptions),
    Remove(DropTargets, SaliencyOptions),
}

impl SaliencyFamily {
    pub fn options(&self) -> &SaliencyOptions {
        match self {
            SaliencyFamily::Zero(o) | SaliencyFamily::Remove(_, o) => o,
        }
    }

    /// Every drop in one query.
    pub fn monolithic(&self) -> SqlQuery {
        match *self {
            SaliencyFamily::Zero(o) => gen_saliency_pinputs(&SaliencyOptions { single_drop: None, ..o }),
            SaliencyFamily::Remove(t, o) => gen_saliency_medges(t, &SaliencyOptions { single_drop: None, ..o }),
        }
    }

    pub fn for_drop(&self, d_id: NodeId) -> SqlQuery {
        match *self {
            SaliencyFamily::Zero(o) => gen_saliency_pinputs(&o.only(d_id)),
            SaliencyFamily::Remove(t, o) => gen_saliency_medges(t, &o.only(d_id)),
        }
    }

    /// Unit ids the monolithic query reports on.
    pub fn candidates(&self, session: &EngineSession) -> Result<Vec<NodeId>> {
        let graph = store::extract_graph(session.connection(), self.options().model_id)?;
        Ok(match self {
            SaliencyFamily::Zero(_) | SaliencyFamily::Remove(DropTargets::Input, _) => graph.input_ids(),
            SaliencyFamily::Remove(DropTargets::Hidden, _) => {
                let outputs = graph.output_ids();
                let mut ids: Vec<NodeId> = graph
                    .nodes
                    .iter()
                    .filter(|n| n.layer > 0 && !outputs.contains(&n.id))
                    .map(|n| n.id)
                    .collect();
                ids.sort_unstable();
                ids
            }
        })
    }

    pub(super) fn check_baseline(&self, session: &EngineSession) -> Result<()> {
        let vec_id = self.options().vec_id;
        if store::input_row_count(session.connection(), vec_id)? == 0 {
            return Err(Error::MissingBaseline(vec_id));
        }
        Ok(())
    }
}

/// Evaluates each drop in `drop_ids` as its own query on a pool of sessions
/// and merges the per-drop results.
///
/// `open_session` is called on the calling thread once per worker; the
/// sessions may share one database file or be independent in-memory copies.
/// The first worker error stops the remaining workers and is returned; no
/// partial map is produced.
pub fn run_saliency_concurrent<F>(
    mut open_session: F,
    family: &SaliencyFamily,
    drop_ids: &[NodeId],
    workers: Option<usize>,
) -> Result<BTreeMap<NodeId, f64>>
where
    F: FnMut() -> Result<EngineSession>,
{
    if drop_ids.is_empty() {
        return Err(Error::InvalidParameter("no units to drop".into()));
    }
    let workers = workers
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, drop_ids.len());
    let sessions = (0..workers).map(|_| open_session()).collect::<Result<Vec<_>>>()?;
    sessions[0].try_clone().and_then(|s| family.check_baseline(&s))?;

    let next = AtomicUsize::new(0);
    let cancelled = AtomicBool::new(false);
    let first_error: Mutex<Option<Error>> = Mutex::new(None);
    let merged: Mutex<BTreeMap<NodeId, f64>> = Mutex::new(BTreeMap::new());

    thread::scope(|scope| {
        for session in sessions {
            let (next, cancelled, first_error, merged) = (&next, &cancelled, &first_error, &merged);
            scope.spawn(move || {
                let mut local = Vec::new();
                while !cancelled.load(Ordering::SeqCst) {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&d) = drop_ids.get(i) else { break };
                    match run_one(&session, family, d) {
                        Ok(v) => local.push((d, v)),
                        Err(e) => {
                            cancelled.store(true, Ordering::SeqCst);
                            first_error.lock().expect("error slot").get_or_insert(e);
                            return;
                        }
                    }
                }
                merged.lock().expect("result map").extend(local);
            });
        }
    });

    if let Some(e) = first_error.into_inner().map_err(|e| Error::Worker(e.to_string()))? {
        return Err(e);
    }
    merged.into_inner().map_err(|e| Error::Worker(e.to_string()))
}

fn run_one(session: &EngineSession, family: &SaliencyFamily, d: NodeId) -> Result<f64> {
    let map = decode_saliency(&session.execute(&family.for_drop(d))?)?;
    match (map.len(), map.get(&d)) {
        (1, Some(&v)) => Ok(v),
        _ => Err(Error::InvalidParameter(format!("unit {d} is not a drop candidate for this saliency query"))),
    }
}

/// Opens an in-memory session holding a copy of one stored model and one
/// input vector, for fan-out workers that should not share a database.
pub fn memory_copy(source: &EngineSession, model_id: i64, vec_id: i64) -> Result<EngineSession> {
    let graph = store::extract_graph(source.connection(), model_id)?;
    let inputs = store::extract_inputs(source.connection(), Some(&[vec_id]))?;
    let copy = EngineSession::open_with(
        &super::Location::InMemory,
        &super::SessionOptions { threads: Some(1), ..Default::default() },
    )?;
    store::create_schema(copy.connection())?;
    store::load_graph(copy.connection(), &graph, model_id, store::LoadOptions::default())?;
    store::load_inputs(copy.connection(), &inputs, store::LoadOptions::default())?;
    Ok(copy)
}
