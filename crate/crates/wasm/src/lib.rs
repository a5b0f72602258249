//! Browser bindings: projection costs of one system, its variable
//! permutation orbit, and the class balance of a skewed sample versus its
//! augmented counterpart. Every entry point returns JSON.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use varord_core::augment::{augment_dataset, class_distribution, imbalance_ratio, orbit};
use varord_core::cadcost::{rank_orderings, CostReport};
use varord_core::dataset::{
    bias_subsample, generate_synthetic, max_subsample_size, GeneratorConfig, ProblemRecord,
};
use varord_core::features::extract_features;
use varord_core::pipeline::BENCHMARK_SKEW;
use varord_core::polysys::{label_to_ordering, parse_system, OrderingLabel, PolySystem};

/// Largest synthetic sample the page may request.
pub const MAX_DEMO_ROOTS: usize = 400;

#[derive(Serialize)]
struct OrderingRow {
    label: usize,
    /// Elimination order as 1-based variable names, first eliminated first.
    ordering: Vec<String>,
    cost: CostReport,
}

#[derive(Serialize)]
struct CostView {
    system: String,
    features: Vec<f64>,
    orderings: Vec<OrderingRow>,
    best_label: usize,
    tie: bool,
}

fn var_names(label: usize, nvars: usize) -> Vec<String> {
    label_to_ordering(OrderingLabel(label), nvars)
        .map(|o| o.iter().map(|v| format!("x{}", v + 1)).collect())
        .unwrap_or_default()
}

fn parse(text: &str) -> Result<PolySystem, String> {
    parse_system(text).map_err(|e| e.to_string())
}

fn cost_view(s: &PolySystem) -> Result<CostView, String> {
    let table = rank_orderings(s).map_err(|e| e.to_string())?;
    Ok(CostView {
        system: s.to_string(),
        features: extract_features(s).0,
        orderings: table
            .costs
            .into_iter()
            .enumerate()
            .map(|(label, cost)| OrderingRow {
                label,
                ordering: var_names(label, s.nvars()),
                cost,
            })
            .collect(),
        best_label: table.argmin_label.0,
        tie: table.tie,
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn cost_table(text: &str) -> Result<String, String> {
    to_json(&cost_view(&parse(text)?)?)
}

#[derive(Serialize)]
struct OrbitMember {
    id: String,
    perm: Vec<usize>,
    system: String,
    label: Option<usize>,
    tie: bool,
    sotd: Vec<f64>,
}

pub fn orbit_view(text: &str) -> Result<String, String> {
    let s = parse(text)?;
    if s.nvars() != 3 {
        return Err(format!("orbits are shown for 3 variables, got {}", s.nvars()));
    }
    let table = rank_orderings(&s).map_err(|e| e.to_string())?;
    let mut root = ProblemRecord::root("s", s);
    root.set_timings(table.costs.iter().map(|c| c.total_sotd as f64).collect())
        .map_err(|e| e.to_string())?;
    let members: Vec<OrbitMember> = orbit(&root)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|m| OrbitMember {
            id: m.id,
            perm: m.perm.image().to_vec(),
            system: m.system.map(|s| s.to_string()).unwrap_or_default(),
            label: m.label.map(|l| l.0),
            tie: m.tie,
            sotd: m.timings.unwrap_or_default(),
        })
        .collect();
    to_json(&members)
}

#[derive(Serialize)]
struct BalanceView {
    roots: Vec<usize>,
    biased: Vec<usize>,
    augmented: Vec<usize>,
    biased_ratio: Option<f64>,
    augmented_ratio: Option<f64>,
}

/// Generates `count` tie-free roots, draws the skewed sample and augments
/// the roots.
pub fn class_balance(count: usize, seed: u64) -> Result<String, String> {
    if count == 0 || count > MAX_DEMO_ROOTS {
        return Err(format!("count must lie in 1..={MAX_DEMO_ROOTS}"));
    }
    let cfg = GeneratorConfig {
        count,
        exclude_ties: true,
        ..GeneratorConfig::default()
    };
    let roots = generate_synthetic(&cfg, seed).map_err(|e| e.to_string())?;
    let size = max_subsample_size(&roots, &BENCHMARK_SKEW).map_err(|e| e.to_string())?;
    let biased = bias_subsample(&roots, &BENCHMARK_SKEW, size, seed).map_err(|e| e.to_string())?;
    let augmented = augment_dataset(&roots).map_err(|e| e.to_string())?;
    let (b, a) = (class_distribution(&biased), class_distribution(&augmented));
    to_json(&BalanceView {
        roots: class_distribution(&roots).counts,
        biased_ratio: imbalance_ratio(&b).ok(),
        augmented_ratio: imbalance_ratio(&a).ok(),
        biased: b.counts,
        augmented: a.counts,
    })
}

#[wasm_bindgen(js_name = costTable)]
pub fn cost_table_js(text: &str) -> Result<String, JsValue> {
    cost_table(text).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = orbitView)]
pub fn orbit_view_js(text: &str) -> Result<String, JsValue> {
    orbit_view(text).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = classBalance)]
pub fn class_balance_js(count: usize, seed: u32) -> Result<String, JsValue> {
    class_balance(count, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_table_lists_six_orderings() {
        let v: serde_json::Value =
            serde_json::from_str(&cost_table("vars 3; x1^2*x2 + x3; x2*x3 - 1").unwrap()).unwrap();
        assert_eq!(v["orderings"].as_array().unwrap().len(), 6);
        assert_eq!(v["orderings"][0]["ordering"], serde_json::json!(["x1", "x2", "x3"]));
        assert_eq!(v["features"].as_array().unwrap().len(), 11);
    }

    #[test]
    fn orbit_has_six_members_with_permuted_labels() {
        let v: serde_json::Value =
            serde_json::from_str(&orbit_view("vars 3; x1^3 + x2*x3; x2 - x3^2").unwrap()).unwrap();
        let members = v.as_array().unwrap();
        assert_eq!(members.len(), 6);
        assert_eq!(members[0]["id"], "s");
        assert_eq!(members[5]["id"], "s#5");
    }

    #[test]
    fn balance_is_uniform_after_augmentation() {
        let v: serde_json::Value = serde_json::from_str(&class_balance(30, 4).unwrap()).unwrap();
        assert_eq!(v["augmented"], serde_json::json!([30, 30, 30, 30, 30, 30]));
        assert_eq!(v["augmented_ratio"], 1.0);
    }

    #[test]
    fn errors_are_messages() {
        assert!(cost_table("vars 3; x1 +").is_err());
        assert!(orbit_view("vars 2; x1 + x2").is_err());
        assert!(class_balance(0, 1).is_err());
    }
}
