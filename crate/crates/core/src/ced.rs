//! Content edit distance between two samples' EPL graphs.
//!
//! Every query vertex must be aligned to a candidate vertex (or priced as an
//! insertion), so the cost matrix is built per query row: property value
//! mismatches pay the configured replacement cost, missing properties pay
//! insertion, list-valued properties compare ordered (Levenshtein) or
//! unordered (multiset), and the vertex's adjacent edge labels pay a small
//! assignment of their own with `1/wpdist` for soft label matches. Surplus
//! candidate content is always free: retrieval asks whether the query is
//! contained in the candidate, not the reverse.
//!
//! The cumulative variant adds each pair's parent-assignment cost before
//! solving, which prefers alignments that keep parent/child structure
//! together. The solved total normalizes by mean graph size and maps to a
//! similarity via `e^{-nCED}`.

pub mod munkres;

pub use munkres::{munkres_assign, Assignment, InfeasibleAssignment};

use crate::harg::{construct_harg, discover_eplv, EplGraph, EplVertex};
use crate::lexicon::Taxonomy;
use crate::property::{CostConfig, MunkresVariant, PropertyRecord, PropertyValue};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Rectangular cost matrix over query rows × candidate columns. Columns past
/// the candidate's vertices are synthetic insertion columns (marked `None`
/// in `col_map`).
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
    pub row_map: Vec<usize>,
    pub col_map: Vec<Option<usize>>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, row_map: Vec<usize>, col_map: Vec<Option<usize>>) -> Self {
        assert!(rows <= cols || cols == 0);
        CostMatrix {
            rows,
            cols,
            cells: vec![0.0; rows * cols],
            row_map,
            col_map,
        }
    }

    /// Test/utility constructor with identity row/col maps.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut matrix = CostMatrix::new(
            n,
            m,
            (0..n).collect(),
            (0..m).map(Some).collect(),
        );
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), m, "ragged cost matrix");
            for (j, cell) in row.into_iter().enumerate() {
                matrix.set(i, j, cell);
            }
        }
        matrix
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.cells[row * self.cols + col] = value;
    }
}

/// Weak supervision label for one ordered (query, candidate) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CedLabel {
    pub query_id: String,
    pub cand_id: String,
    pub ced: f64,
    pub nced: f64,
    pub sim: f64,
    /// `(row, col)` indices of the solved assignment; empty when infeasible.
    pub assignment: Vec<(usize, usize)>,
}

impl CedLabel {
    pub fn is_feasible(&self) -> bool {
        self.ced.is_finite()
    }
}

/// Ordered list comparison (prDist): token-level Levenshtein where
/// substituting costs `rcost`, inserting a missing query token costs
/// `icost`, and deleting a surplus candidate token is free.
pub fn list_edit_distance(query: &[String], cand: &[String], rcost: f64, icost: f64) -> f64 {
    let nc = cand.len();
    let mut prev = vec![0.0_f64; nc + 1]; // empty query: surplus candidate is free
    for (i, q) in query.iter().enumerate() {
        let mut cur = vec![0.0_f64; nc + 1];
        cur[0] = (i + 1) as f64 * icost;
        for (j, c) in cand.iter().enumerate() {
            let substitute = prev[j] + if q == c { 0.0 } else { rcost };
            let insert = prev[j + 1] + icost;
            let delete = cur[j];
            cur[j + 1] = substitute.min(insert).min(delete);
        }
        prev = cur;
    }
    prev[nc]
}

/// Unordered list comparison (hComp): `rcost` per query token missing from
/// the candidate multiset; surplus candidate tokens are free.
pub fn hash_compare(query: &[String], cand: &[String], rcost: f64) -> f64 {
    let mut avail = std::collections::BTreeMap::new();
    for token in cand {
        *avail.entry(token.as_str()).or_insert(0_usize) += 1;
    }
    let mut missing = 0_usize;
    for token in query {
        match avail.get_mut(token.as_str()) {
            Some(count) if *count > 0 => *count -= 1,
            _ => missing += 1,
        }
    }
    rcost * missing as f64
}

fn property_cost(name: &str, q_val: &PropertyValue, c_val: &PropertyValue, cfg: &CostConfig) -> f64 {
    if q_val.is_list() || c_val.is_list() {
        let q = q_val.tokens();
        let c = c_val.tokens();
        if cfg.ordered_for(name) {
            list_edit_distance(q, c, cfg.rcost_for(name), cfg.icost_for(name))
        } else {
            hash_compare(q, c, cfg.rcost_for(name))
        }
    } else if q_val == c_val {
        0.0
    } else {
        cfg.rcost_for(name)
    }
}

fn edge_pair_cost(a: &str, b: &str, cfg: &CostConfig, tax: &Taxonomy) -> f64 {
    if a == b && cfg.exact_edge_match_zero {
        return 0.0;
    }
    match (tax.lookup(a), tax.lookup(b)) {
        (Some(ca), Some(cb)) => {
            1.0 / tax.wpdist(ca, cb).expect("looked-up concepts are known")
        }
        // unknown label: exact match costs nothing, anything else a full edge
        _ => {
            if a == b {
                0.0
            } else {
                cfg.edge_icost
            }
        }
    }
}

/// Minimal assignment of the query vertex's edge labels onto the candidate
/// vertex's. Unmatched query labels pay `edge_icost`; surplus candidate
/// labels are free.
fn edge_label_cost(query: &[String], cand: &[String], cfg: &CostConfig, tax: &Taxonomy) -> f64 {
    if query.is_empty() {
        return 0.0;
    }
    let cols = query.len().max(cand.len());
    let cost = |i: usize, j: usize| -> f64 {
        match cand.get(j) {
            Some(label) => edge_pair_cost(&query[i], label, cfg, tax),
            None => cfg.edge_icost,
        }
    };
    munkres::min_total(query.len(), cols, &cost)
}

/// Replacement cost of aligning query vertex `u` onto candidate vertex `v`.
/// Incompatible entity types cost ∞.
pub fn eplv_cost(u: &EplVertex, v: &EplVertex, cfg: &CostConfig, tax: &Taxonomy) -> f64 {
    if u.entity_type != v.entity_type {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    if cfg.include_metadata || u.level != 0 {
        for (name, q_val) in &u.props {
            total += match v.props.get(name) {
                None => cfg.icost_for(name),
                Some(c_val) => property_cost(name, q_val, c_val, cfg),
            };
        }
    }
    total + edge_label_cost(&u.adjacent_edge_labels, &v.adjacent_edge_labels, cfg, tax)
}

/// Price of inserting query vertex `u` into the candidate outright: every
/// property pays its insertion cost, every adjacent edge pays `edge_icost`.
pub fn insertion_cost(u: &EplVertex, cfg: &CostConfig) -> f64 {
    let props: f64 = if cfg.include_metadata || u.level != 0 {
        u.props.keys().map(|name| cfg.icost_for(name)).sum()
    } else {
        0.0
    };
    props + cfg.edge_icost * u.adjacent_edge_labels.len() as f64
}

/// Build the n×m′ cost matrix; when the query graph is larger than the
/// candidate, pads with n−m insertion columns.
pub fn build_cost_matrix(
    gq: &EplGraph,
    gc: &EplGraph,
    cfg: &CostConfig,
    tax: &Taxonomy,
) -> CostMatrix {
    let n = gq.len();
    let m = gc.len();
    let padded = m.max(n);
    let row_map = gq.vertices.iter().map(|v| v.id).collect();
    let mut col_map: Vec<Option<usize>> = gc.vertices.iter().map(|v| Some(v.id)).collect();
    col_map.resize(padded, None);
    let mut matrix = CostMatrix::new(n, padded, row_map, col_map);
    for (i, u) in gq.vertices.iter().enumerate() {
        for (j, v) in gc.vertices.iter().enumerate() {
            matrix.set(i, j, eplv_cost(u, v, cfg, tax));
        }
        if padded > m {
            let ins = insertion_cost(u, cfg);
            for j in m..padded {
                matrix.set(i, j, ins);
            }
        }
    }
    matrix
}

/// Add each pair's parent-assignment cost, ascending by level, so deeper
/// vertices carry their ancestry's cost (a root parent contributes nothing,
/// and insertion columns inherit the row's parent-to-insertion cost).
pub fn apply_cumulative(mut matrix: CostMatrix, gq: &EplGraph, gc: &EplGraph) -> CostMatrix {
    let row_index: std::collections::BTreeMap<usize, usize> = matrix
        .row_map
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();
    let col_index: std::collections::BTreeMap<usize, usize> = matrix
        .col_map
        .iter()
        .enumerate()
        .filter_map(|(j, &id)| id.map(|v| (v, j)))
        .collect();

    let mut order: Vec<usize> = (0..matrix.rows()).collect();
    order.sort_by_key(|&i| (gq.vertices[i].level, i));

    for i in order {
        let u = &gq.vertices[i];
        let parent_row = match u.parent {
            Some(p) if p != gq.root => row_index[&p],
            _ => continue, // root vertex or root parent: contributes 0
        };
        let parent_cells: Vec<f64> = (0..matrix.cols())
            .map(|j| matrix.get(parent_row, j))
            .collect();
        for j in 0..matrix.cols() {
            let add = match matrix.col_map[j] {
                None => parent_cells[j],
                Some(vid) => {
                    let v = gc.vertex(vid).expect("column maps to a vertex");
                    match v.parent {
                        Some(pv) if pv != gc.root => parent_cells[col_index[&pv]],
                        _ => 0.0,
                    }
                }
            };
            let cell = matrix.get(i, j);
            matrix.set(i, j, cell + add);
        }
    }
    matrix
}

/// Full pipeline over EPL graphs: cost matrix, optional cumulative update,
/// assignment, normalization, similarity.
pub fn ced(gq: &EplGraph, gc: &EplGraph, cfg: &CostConfig, tax: &Taxonomy) -> CedLabel {
    let mut matrix = build_cost_matrix(gq, gc, cfg, tax);
    if cfg.munkres_variant == MunkresVariant::Cumulative {
        matrix = apply_cumulative(matrix, gq, gc);
    }
    let (ced, assignment) = match munkres_assign(&matrix) {
        Ok(a) => (a.total, a.pairs),
        Err(InfeasibleAssignment) => (f64::INFINITY, Vec::new()),
    };
    let nced = ced / ((gq.len() + gc.len()) as f64 / 2.0);
    CedLabel {
        query_id: gq.sample_id.clone(),
        cand_id: gc.sample_id.clone(),
        ced,
        nced,
        sim: (-nced).exp(),
        assignment,
    }
}

/// Convenience wrapper over whole records.
pub fn ced_records(
    query: &PropertyRecord,
    cand: &PropertyRecord,
    cfg: &CostConfig,
    tax: &Taxonomy,
) -> CedLabel {
    let gq = discover_eplv(&construct_harg(query));
    let gc = discover_eplv(&construct_harg(cand));
    ced(&gq, &gc, cfg, tax)
}

/// `query_id,cand_id,ced,nced,sim` rows with fixed 6-decimal formatting.
pub fn labels_to_csv(labels: &[CedLabel]) -> String {
    let mut out = String::from("query_id,cand_id,ced,nced,sim\n");
    for label in labels {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            label.query_id, label.cand_id, label.ced, label.nced, label.sim
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::property::parse_record;

    fn toks(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn vertex(
        id: usize,
        ty: &str,
        level: u32,
        props: &[(&str, &str)],
        parent: Option<usize>,
        labels: &[&str],
    ) -> EplVertex {
        EplVertex {
            id,
            entity_type: ty.to_string(),
            level,
            props: props
                .iter()
                .map(|(k, v)| (k.to_string(), PropertyValue::scalar(*v)))
                .collect(),
            parent,
            adjacent_edge_labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn graph(sample_id: &str, vertices: Vec<EplVertex>) -> EplGraph {
        EplGraph {
            sample_id: sample_id.to_string(),
            root: vertices[0].id,
            vertices,
        }
    }

    fn person_record(id: &str, gender: &str, top: &str, bottom: &str) -> PropertyRecord {
        parse_record(&format!(
            r#"{{"id":"{id}","modality":"image",
                "entities":[{{"id":"p1","entity_type":"Person","primary":true,
                    "attrs":{{"gender":"{gender}","top-color":"{top}","bottom-color":"{bottom}"}}}}]}}"#
        ))
        .unwrap()
    }

    fn paper_penalties() -> CostConfig {
        crate::property::validate_cost_config(
            r#"{"rcost":{"top-color":1,"bottom-color":2,"gender":3}}"#,
        )
        .unwrap()
    }

    // ---- list comparisons -------------------------------------------------

    /// Brute-force alignment oracle for the ordered comparison.
    fn brute_led(query: &[String], cand: &[String], rcost: f64, icost: f64) -> f64 {
        if query.is_empty() {
            return 0.0;
        }
        if cand.is_empty() {
            return query.len() as f64 * icost;
        }
        let sub = brute_led(&query[1..], &cand[1..], rcost, icost)
            + if query[0] == cand[0] { 0.0 } else { rcost };
        let ins = brute_led(&query[1..], cand, rcost, icost) + icost;
        let del = brute_led(query, &cand[1..], rcost, icost);
        sub.min(ins).min(del)
    }

    #[test]
    fn prdist_examples() {
        assert_eq!(list_edit_distance(&toks(&["a", "b"]), &toks(&["a", "b"]), 1.0, 1.0), 0.0);
        let d = list_edit_distance(&toks(&["blue", "shirt"]), &toks(&["red", "shirt"]), 1.0, 1.0);
        assert_eq!(d, brute_led(&toks(&["blue", "shirt"]), &toks(&["red", "shirt"]), 1.0, 1.0));
        assert_eq!(d, 1.0);
        let d = list_edit_distance(&toks(&["a", "b", "c"]), &toks(&["b", "c"]), 1.0, 1.0);
        assert_eq!(d, brute_led(&toks(&["a", "b", "c"]), &toks(&["b", "c"]), 1.0, 1.0));
        assert_eq!(d, 1.0);
        // surplus candidate tokens are free
        assert_eq!(list_edit_distance(&toks(&["a"]), &toks(&["x", "a", "y"]), 1.0, 1.0), 0.0);
    }

    #[test]
    fn hcomp_examples() {
        assert_eq!(hash_compare(&toks(&["shirt", "jeans"]), &toks(&["jeans", "shirt"]), 1.0), 0.0);
        assert_eq!(hash_compare(&toks(&["shirt", "jeans"]), &toks(&["shirt"]), 1.0), 1.0);
        assert_eq!(hash_compare(&toks(&["a", "a", "b"]), &toks(&["a", "b"]), 2.0), 2.0);
        assert_eq!(hash_compare(&[], &toks(&["x"]), 1.0), 0.0);
    }

    // ---- vertex costs -----------------------------------------------------

    #[test]
    fn identical_vertices_cost_zero() {
        let tax = Taxonomy::bundled();
        let cfg = CostConfig::default();
        let u = vertex(1, "Person", 1, &[("gender", "male")], Some(0), &["hasEntity", "wear"]);
        assert_eq!(eplv_cost(&u, &u, &cfg, &tax), 0.0);
    }

    #[test]
    fn type_mismatch_costs_infinity() {
        let tax = Taxonomy::bundled();
        let cfg = CostConfig::default();
        let u = vertex(1, "Person", 1, &[("gender", "male")], Some(0), &[]);
        let v = vertex(2, "Clothes", 1, &[("type", "shirt")], Some(0), &[]);
        assert!(eplv_cost(&u, &v, &cfg, &tax).is_infinite());
    }

    #[test]
    fn soft_edge_label_costs_inverse_wpdist() {
        let tax = Taxonomy::bundled();
        let cfg = CostConfig::default();
        let u = vertex(1, "Clothes", 2, &[], Some(0), &["upper-wear-color"]);
        let v = vertex(2, "Clothes", 2, &[], Some(0), &["shirt-color"]);
        let cost = eplv_cost(&u, &v, &cfg, &tax);
        assert!((cost - 1.5).abs() < 1e-9, "got {cost}");
    }

    #[test]
    fn literal_edge_formula_when_exact_zero_disabled() {
        let tax = Taxonomy::bundled();
        let cfg = CostConfig {
            exact_edge_match_zero: false,
            ..CostConfig::default()
        };
        let u = vertex(1, "Clothes", 2, &[], Some(0), &["wear"]);
        // identical known labels now cost 1/wpdist(x,x) = 1
        assert_eq!(eplv_cost(&u, &u, &cfg, &tax), 1.0);
        // unknown labels fall back to exact matching
        let w = vertex(1, "Clothes", 2, &[], Some(0), &["hasEntity"]);
        assert_eq!(eplv_cost(&w, &w, &cfg, &tax), 0.0);
    }

    #[test]
    fn missing_property_pays_insertion() {
        let tax = Taxonomy::bundled();
        let cfg = paper_penalties();
        let u = vertex(1, "Person", 1, &[("gender", "male"), ("race", "white")], Some(0), &[]);
        let v = vertex(2, "Person", 1, &[("gender", "male")], Some(0), &[]);
        assert_eq!(eplv_cost(&u, &v, &cfg, &tax), 1.0); // icost(race) defaults to 1
        // asymmetric: the candidate's surplus is free
        assert_eq!(eplv_cost(&v, &u, &cfg, &tax), 0.0);
    }

    #[test]
    fn list_property_uses_configured_comparison() {
        let tax = Taxonomy::bundled();
        let mut cfg = CostConfig::default();
        let mut u = vertex(1, "Person", 1, &[], Some(0), &[]);
        let mut v = vertex(2, "Person", 1, &[], Some(0), &[]);
        u.props.insert("clothes".into(), PropertyValue::list(["shirt", "jeans"]));
        v.props.insert("clothes".into(), PropertyValue::list(["jeans", "shirt"]));
        // unordered by default: permutation is free
        assert_eq!(eplv_cost(&u, &v, &cfg, &tax), 0.0);
        cfg.ordcmp.insert("clothes".into(), 1);
        // ordered: one substitution each way, surplus-free deletion keeps it at 1+...
        let d = eplv_cost(&u, &v, &cfg, &tax);
        assert_eq!(
            d,
            list_edit_distance(
                &toks(&["shirt", "jeans"]),
                &toks(&["jeans", "shirt"]),
                1.0,
                1.0
            )
        );
    }

    // ---- cost matrix + cumulative -----------------------------------------

    #[test]
    fn identical_graphs_have_zero_diagonal() {
        let record = person_record("A", "male", "blue", "black");
        let g = discover_eplv(&construct_harg(&record));
        let m = build_cost_matrix(&g, &g, &CostConfig::default(), &Taxonomy::bundled());
        for i in 0..m.rows() {
            assert_eq!(m.get(i, i), 0.0);
        }
    }

    #[test]
    fn larger_query_pads_with_insertion_columns() {
        let q = graph(
            "q",
            vec![
                vertex(0, "ROOT", 0, &[], None, &[]),
                vertex(1, "Person", 1, &[("gender", "male")], Some(0), &["hasEntity"]),
                vertex(2, "Clothes", 2, &[("type", "shirt")], Some(1), &["wear"]),
            ],
        );
        let c = graph(
            "c",
            vec![
                vertex(0, "ROOT", 0, &[], None, &[]),
                vertex(1, "Person", 1, &[("gender", "male")], Some(0), &["hasEntity"]),
            ],
        );
        let cfg = CostConfig::default();
        let m = build_cost_matrix(&q, &c, &cfg, &Taxonomy::bundled());
        assert_eq!(m.rows(), 3);
        assert_eq!(m.cols(), 3);
        assert_eq!(m.col_map[2], None);
        // clothes row: 1 property icost + 1 edge label
        assert_eq!(m.get(2, 2), 2.0);
    }

    /// The worked two-person example: base costs C(u4,v3)=1, C(u4,v7)=3,
    /// C(u2,v2)=6, C(u2,v6)=3 with parents u2, v2, v6 respectively.
    fn paper_graphs() -> (EplGraph, EplGraph) {
        let six = [
            ("a", "x"),
            ("b", "x"),
            ("c", "x"),
            ("d", "x"),
            ("e", "x"),
            ("f", "x"),
        ];
        let v2_props = [
            ("a", "y"),
            ("b", "y"),
            ("c", "y"),
            ("d", "y"),
            ("e", "y"),
            ("f", "y"),
        ];
        let v6_props = [
            ("a", "y"),
            ("b", "y"),
            ("c", "y"),
            ("d", "x"),
            ("e", "x"),
            ("f", "x"),
        ];
        let u4_props = [("g", "1"), ("h", "1"), ("k", "1")];
        let v3_props = [("g", "1"), ("h", "1"), ("k", "2")];
        let gq = graph(
            "q",
            vec![
                vertex(1, "ROOT", 0, &[], None, &[]),
                vertex(2, "Person", 1, &six, Some(1), &["hasEntity", "wear"]),
                vertex(4, "Clothes", 2, &u4_props, Some(2), &["wear"]),
            ],
        );
        let gc = graph(
            "c",
            vec![
                vertex(1, "ROOT", 0, &[], None, &[]),
                vertex(2, "Person", 1, &v2_props, Some(1), &["hasEntity", "wear"]),
                vertex(3, "Clothes", 2, &v3_props, Some(2), &["wear"]),
                vertex(6, "Person", 1, &v6_props, Some(1), &["hasEntity", "wear"]),
                vertex(7, "Clothes", 2, &[], Some(6), &["wear"]),
            ],
        );
        (gq, gc)
    }

    #[test]
    fn paper_base_costs_reproduce() {
        let (gq, gc) = paper_graphs();
        let tax = Taxonomy::bundled();
        let cfg = CostConfig::default();
        let u2 = gq.vertex(2).unwrap();
        let u4 = gq.vertex(4).unwrap();
        assert_eq!(eplv_cost(u4, gc.vertex(3).unwrap(), &cfg, &tax), 1.0);
        assert_eq!(eplv_cost(u4, gc.vertex(7).unwrap(), &cfg, &tax), 3.0);
        assert_eq!(eplv_cost(u2, gc.vertex(2).unwrap(), &cfg, &tax), 6.0);
        assert_eq!(eplv_cost(u2, gc.vertex(6).unwrap(), &cfg, &tax), 3.0);
    }

    #[test]
    fn cumulative_update_adds_parent_costs() {
        let (gq, gc) = paper_graphs();
        let tax = Taxonomy::bundled();
        let cfg = CostConfig::default();
        let base = build_cost_matrix(&gq, &gc, &cfg, &tax);
        let cum = apply_cumulative(base.clone(), &gq, &gc);

        // column order follows candidate vertex ids: 1, 2, 3, 6, 7
        let col = |vid: usize| cum.col_map.iter().position(|&c| c == Some(vid)).unwrap();
        let row_u4 = 2;
        let row_u2 = 1;
        assert_eq!(base.get(row_u4, col(3)), 1.0);
        assert_eq!(cum.get(row_u4, col(3)), 7.0);
        assert_eq!(base.get(row_u4, col(7)), 3.0);
        assert_eq!(cum.get(row_u4, col(7)), 6.0);
        // level-1 rows keep their base costs (root parent contributes 0)
        for j in 0..cum.cols() {
            assert_eq!(cum.get(row_u2, j), base.get(row_u2, j));
        }
        // the cumulative assignment prefers v7 for u4
        let assignment = munkres_assign(&cum).unwrap();
        assert!(assignment.pairs.contains(&(row_u4, col(7))));
    }

    #[test]
    fn cumulative_on_zero_matrix_is_identity() {
        let (gq, gc) = paper_graphs();
        let mut zero = build_cost_matrix(&gq, &gc, &CostConfig::default(), &Taxonomy::bundled());
        for i in 0..zero.rows() {
            for j in 0..zero.cols() {
                zero.set(i, j, 0.0);
            }
        }
        let out = apply_cumulative(zero.clone(), &gq, &gc);
        assert_eq!(out, zero);
    }

    // ---- end-to-end CED ---------------------------------------------------

    #[test]
    fn identical_graphs_have_zero_distance_and_unit_sim() {
        let record = person_record("A", "male", "blue", "black");
        let g = discover_eplv(&construct_harg(&record));
        let label = ced(&g, &g, &CostConfig::default(), &Taxonomy::bundled());
        assert_eq!(label.ced, 0.0);
        assert_eq!(label.nced, 0.0);
        assert_eq!(label.sim, 1.0);
    }

    #[test]
    fn top_color_mismatch_hand_trace() {
        let tax = Taxonomy::bundled();
        let cfg = paper_penalties();
        let q = person_record("Q", "male", "blue", "black");
        let c = person_record("C", "male", "red", "black");
        let label = ced_records(&q, &c, &cfg, &tax);
        assert_eq!(label.ced, 1.0);
        assert_eq!(label.nced, 0.5);
        assert!((label.sim - (-0.5_f64).exp()).abs() < 1e-12);
        assert!((label.sim - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn gender_mismatch_crosses_relevance_threshold() {
        let tax = Taxonomy::bundled();
        let cfg = paper_penalties();
        let q = person_record("Q", "male", "blue", "black");
        let c = person_record("C", "female", "blue", "black");
        let label = ced_records(&q, &c, &cfg, &tax);
        assert_eq!(label.ced, 3.0);
        assert!(label.ced >= cfg.relevance_ced_threshold);
        assert!((label.sim - (-1.5_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn infeasible_pair_has_zero_sim() {
        let tax = Taxonomy::bundled();
        let cfg = CostConfig::default();
        let q = graph(
            "q",
            vec![
                vertex(0, "ROOT", 0, &[], None, &[]),
                vertex(1, "Person", 1, &[], Some(0), &["hasEntity"]),
            ],
        );
        let c = graph(
            "c",
            vec![
                vertex(0, "ROOT", 0, &[], None, &[]),
                vertex(1, "Clothes", 1, &[], Some(0), &["hasEntity"]),
                vertex(2, "Clothes", 1, &[], Some(0), &["hasEntity"]),
            ],
        );
        let label = ced(&q, &c, &cfg, &tax);
        assert!(label.ced.is_infinite());
        assert_eq!(label.sim, 0.0);
        assert!(label.assignment.is_empty());
    }

    #[test]
    fn extra_mismatched_property_raises_ced_by_its_rcost() {
        let tax = Taxonomy::bundled();
        let mut cfg = paper_penalties();
        cfg.rcost.insert("race".into(), 2.5);
        let q = parse_record(
            r#"{"id":"Q","modality":"image",
                "entities":[{"id":"p1","entity_type":"Person","primary":true,
                    "attrs":{"gender":"male","top-color":"blue","race":"white"}}]}"#,
        )
        .unwrap();
        let base_c = parse_record(
            r#"{"id":"C","modality":"image",
                "entities":[{"id":"p1","entity_type":"Person","primary":true,
                    "attrs":{"gender":"male","top-color":"red","race":"white"}}]}"#,
        )
        .unwrap();
        let changed_c = parse_record(
            r#"{"id":"C","modality":"image",
                "entities":[{"id":"p1","entity_type":"Person","primary":true,
                    "attrs":{"gender":"male","top-color":"red","race":"black"}}]}"#,
        )
        .unwrap();
        let before = ced_records(&q, &base_c, &cfg, &tax).ced;
        let after = ced_records(&q, &changed_c, &cfg, &tax).ced;
        assert!((after - before - 2.5).abs() < 1e-9);
    }

    #[test]
    fn penalty_ordering_of_similarities() {
        let tax = Taxonomy::bundled();
        let cfg = paper_penalties();
        let q = person_record("Q", "male", "blue", "black");
        let top = ced_records(&q, &person_record("T", "male", "red", "black"), &cfg, &tax);
        let bottom = ced_records(&q, &person_record("B", "male", "blue", "white"), &cfg, &tax);
        let gender = ced_records(&q, &person_record("G", "female", "blue", "black"), &cfg, &tax);
        assert!(top.sim > bottom.sim);
        assert!(bottom.sim > gender.sim);
    }

    #[test]
    fn ced_is_directional() {
        // Documented asymmetry: the query must be contained in the candidate,
        // so surplus candidate content is free in one direction only.
        let tax = Taxonomy::bundled();
        let cfg = CostConfig::default();
        let small = parse_record(
            r#"{"id":"S","modality":"text",
                "entities":[{"id":"p1","entity_type":"Person","primary":true,
                    "attrs":{"gender":"male"}}]}"#,
        )
        .unwrap();
        let big = parse_record(
            r#"{"id":"B","modality":"text",
                "entities":[{"id":"p1","entity_type":"Person","primary":true,
                    "attrs":{"gender":"male","race":"white","top-color":"blue"}}]}"#,
        )
        .unwrap();
        let forward = ced_records(&small, &big, &cfg, &tax).ced;
        let backward = ced_records(&big, &small, &cfg, &tax).ced;
        assert_eq!(forward, 0.0);
        assert_eq!(backward, 2.0);
    }

    #[test]
    fn metadata_participates_unless_excluded() {
        let tax = Taxonomy::bundled();
        let q = parse_record(r#"{"id":"Q","modality":"text","metadata":{"time":"t1"}}"#).unwrap();
        let c = parse_record(r#"{"id":"C","modality":"text","metadata":{"time":"t2"}}"#).unwrap();
        let mut cfg = CostConfig::default();
        assert_eq!(ced_records(&q, &c, &cfg, &tax).ced, 1.0);
        cfg.include_metadata = false;
        assert_eq!(ced_records(&q, &c, &cfg, &tax).ced, 0.0);
    }

    #[test]
    fn label_csv_formatting() {
        let label = CedLabel {
            query_id: "Q".into(),
            cand_id: "C".into(),
            ced: 1.0,
            nced: 0.5,
            sim: (-0.5_f64).exp(),
            assignment: vec![(0, 0)],
        };
        let csv = labels_to_csv(&[label]);
        assert_eq!(csv, "query_id,cand_id,ced,nced,sim\nQ,C,1.000000,0.500000,0.606531\n");
    }

    #[cfg(test)]
    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn token_list() -> impl Strategy<Value = Vec<String>> {
            proptest::collection::vec("[abc]", 0..5)
        }

        proptest! {
            #[test]
            fn prdist_matches_brute_force(q in token_list(), c in token_list(),
                                          r in 0.25_f64..3.0, i in 0.25_f64..3.0) {
                let fast = list_edit_distance(&q, &c, r, i);
                let slow = brute_led(&q, &c, r, i);
                prop_assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
            }

            #[test]
            fn hcomp_matches_multiset_difference(q in token_list(), c in token_list(),
                                                 r in 0.25_f64..3.0) {
                let mut cand = c.clone();
                let mut missing = 0usize;
                for t in &q {
                    if let Some(pos) = cand.iter().position(|x| x == t) {
                        cand.remove(pos);
                    } else {
                        missing += 1;
                    }
                }
                prop_assert_eq!(hash_compare(&q, &c, r), r * missing as f64);
            }
        }
    }
}
