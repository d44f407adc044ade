//! Regenerates data/sachs.json: the 11-node protein-signalling network
//! structure with synthetic, seeded conditional tables. See data/README.md
//! for why the table values are stand-ins.
//!
//! Usage: cargo run -p abdiv-cli --example generate_sachs_fixture [OUT_PATH]

use abdiv_core::bayes::BayesianNetwork;
use abdiv_core::factor::Factor;
use abdiv_core::io::save_bn_path;
use abdiv_core::vars::{Variable, VariableTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const STATES: usize = 3;
const SEED: u64 = 42;

/// Node names with their parent sets, both alphabetical. 11 nodes, 17 arcs.
const STRUCTURE: [(&str, &[&str]); 11] = [
    ("Akt", &["Erk", "PKA"]),
    ("Erk", &["Mek", "PKA"]),
    ("Jnk", &["PKA", "PKC"]),
    ("Mek", &["PKA", "PKC", "Raf"]),
    ("P38", &["PKA", "PKC"]),
    ("PIP2", &["PIP3", "Plcg"]),
    ("PIP3", &["Plcg"]),
    ("PKA", &["PKC"]),
    ("PKC", &[]),
    ("Plcg", &[]),
    ("Raf", &["PKA", "PKC"]),
];

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/sachs.json".to_string());
    let vars = VariableTable::new(
        STRUCTURE
            .iter()
            .map(|(name, _)| Variable {
                name: name.to_string(),
                cardinality: STATES,
            })
            .collect(),
    )
    .expect("distinct names");

    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let nodes = STRUCTURE
        .iter()
        .map(|(name, parents)| {
            let child = vars.id_of(name).expect("declared above");
            let parent_ids: Vec<_> = parents
                .iter()
                .map(|p| vars.id_of(p).expect("declared above"))
                .collect();
            // Row-major over [parents..., child] with the child fastest:
            // one strictly positive normalized column per parent setting.
            let columns = STATES.pow(parent_ids.len() as u32);
            let mut values = Vec::with_capacity(columns * STATES);
            for _ in 0..columns {
                let raw: Vec<f64> = (0..STATES).map(|_| 0.2 + rng.random::<f64>()).collect();
                let total: f64 = raw.iter().sum();
                values.extend(raw.iter().map(|v| v / total));
            }
            let listed: Vec<_> = parent_ids.iter().copied().chain([child]).collect();
            let factor = Factor::from_permuted_layout(&vars, &listed, values)
                .expect("layout matches construction");
            (child, parent_ids, factor)
        })
        .collect();

    let bn = BayesianNetwork::new(vars, nodes).expect("columns are normalized");
    save_bn_path(&bn, &out).expect("write fixture");
    println!("wrote {out}");
}
