//! Graphviz DOT rendering of a tangle, byte-stable for identical inputs.

use std::fmt::Write;

use tanglesim_core::{Tangle, TwoStepState};

/// Render the tangle as a DOT digraph: one node per site labeled with its id
/// and cumulative weight, one edge child → parent per distinct parent. With
/// a resolution state, discarded sites are dashed and members of the
/// conflict-free tip set are double-circled. Node and edge lines are sorted
/// by site id so identical inputs produce identical bytes.
pub fn export_dot(tangle: &Tangle, state: Option<&TwoStepState>) -> String {
    let mut ids: Vec<_> = tangle.sites().map(|s| s.id.clone()).collect();
    ids.sort_unstable();
    let tips = state.map(|s| s.tip_ids(tangle)).unwrap_or_default();

    let mut out = String::from("digraph tangle {\n");
    for id in &ids {
        let weight = tangle.cumulative_weight(id).unwrap().get();
        let mut attrs = format!("label=\"{id}\\nw={weight}\"");
        if let Some(state) = state {
            if state.is_discarded(tangle, id) {
                attrs.push_str(", style=dashed");
            } else if tips.binary_search(id).is_ok() {
                attrs.push_str(", peripheries=2");
            }
        }
        writeln!(out, "  \"{id}\" [{attrs}];").unwrap();
    }

    let mut edges: Vec<(String, String)> = Vec::new();
    for site in tangle.sites() {
        if let Some((p, q)) = &site.parents {
            edges.push((site.id.to_string(), p.to_string()));
            if q != p {
                edges.push((site.id.to_string(), q.to_string()));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    for (child, parent) in &edges {
        writeln!(out, "  \"{child}\" -> \"{parent}\";").unwrap();
    }
    out.push_str("}\n");
    out
}
