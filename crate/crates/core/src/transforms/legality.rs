use super::streamify::local_link;
use super::LegalityReport;
use crate::ir::{EdgeData, Graph, Node, SubgraphView};
use crate::symbolic::{Dim, StreamReason, Streamability};

/// Temporal vectorization needs order-deterministic external I/O only;
/// dependencies carried inside the computation are allowed.
pub fn check_temporal_vectorizable(graph: &Graph, sub: &SubgraphView) -> LegalityReport {
    let mut reasons = Vec::new();
    let mut pairs = Vec::new();
    let binding = graph.binding();

    for id in &sub.nodes {
        for d in graph.descendants(*id) {
            if let Ok(Node::Tasklet(t)) = graph.node(d) {
                for conn in t.gathers() {
                    reasons.push(format!(
                        "DataDependentIO: tasklet `{}` addresses `{conn}` by value",
                        t.label
                    ));
                }
            }
        }
    }

    for eid in &sub.boundary {
        let Ok(e) = graph.edge(*eid) else { continue };
        let verdict = match &e.data {
            EdgeData::Stream => Streamability::Streamable,
            EdgeData::Memlet(m) if !m.is_affine() => {
                Streamability::NotStreamable(StreamReason::NonAffine)
            }
            EdgeData::Memlet(m) => {
                let fixed = m.subset.iter().all(|dim| match dim {
                    Dim::Range(r) => (r.end.clone() - r.begin.clone())
                        .partial_eval(&binding)
                        .is_constant(),
                    _ => true,
                });
                if !fixed {
                    reasons.push(format!("VariableVolume: `{m}` moves a varying number of elements"));
                }
                Streamability::Streamable
            }
        };
        pairs.push((*eid, verdict));
    }

    for id in &sub.nodes {
        if let Some((_, _, verdict)) = local_link(graph, *id) {
            if let Some(e) = graph.out_edges(*id).next() {
                if let Streamability::NotStreamable(r) = &verdict {
                    reasons.push(format!("Unstreamable: local `{id}` ({r:?})"));
                }
                pairs.push((e.id, verdict));
            }
        }
    }

    LegalityReport {
        streamable_pairs: pairs,
        temporal_ok: reasons.is_empty(),
        reasons,
        largest_candidate: sub.clone(),
    }
}
