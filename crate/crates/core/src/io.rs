//! File formats: JSON for models and structures, CSV for observations.
//!
//! Decomposable model: `{"variables":[{"name","card"}],
//! "cliques":[{"vars":[names],"table":[...]}]}`. The graph is implied by
//! the cliques (their pairwise edges); separators are derived internally.
//! Tables are row-major over the listed variable order, last listed
//! variable fastest.
//!
//! Bayesian network: `{"variables":[...],"nodes":[{"name","parents":
//! [names],"cpt":[...]}]}`. CPTs are row-major with the child fastest and
//! parents outer, in their listed order.
//!
//! Structure (for fitting): `{"variables":[...],"edges":[[name,name]]}`.
//!
//! Observations: CSV whose header names every variable (any order), one
//! complete row per observation, values are 0-based state indices.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bayes::BayesianNetwork;
use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::graph::UndirectedGraph;
use crate::model::DecomposableModel;
use crate::vars::{VarId, Variable, VariableTable};

#[derive(Debug, Serialize, Deserialize)]
struct VarDecl {
    name: String,
    card: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CliqueDecl {
    vars: Vec<String>,
    table: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DmFile {
    variables: Vec<VarDecl>,
    cliques: Vec<CliqueDecl>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDecl {
    name: String,
    parents: Vec<String>,
    cpt: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BnFile {
    variables: Vec<VarDecl>,
    nodes: Vec<NodeDecl>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StructureFile {
    variables: Vec<VarDecl>,
    edges: Vec<(String, String)>,
}

fn table_from_decls(decls: Vec<VarDecl>) -> Result<VariableTable> {
    VariableTable::new(
        decls
            .into_iter()
            .map(|d| Variable {
                name: d.name,
                cardinality: d.card,
            })
            .collect(),
    )
}

fn decls_from_table(vars: &VariableTable) -> Vec<VarDecl> {
    vars.iter()
        .map(|v| VarDecl {
            name: v.name.clone(),
            card: v.cardinality,
        })
        .collect()
}

fn ids_of_names(vars: &VariableTable, names: &[String]) -> Result<Vec<VarId>> {
    names
        .iter()
        .map(|n| {
            vars.id_of(n)
                .ok_or_else(|| Error::Validation(format!("unknown variable {n:?}")))
        })
        .collect()
}

/// Reads a decomposable model. The listed cliques must be exactly the
/// maximal cliques of the graph they span, and the model must pass full
/// construction validation (chordality, normalization, consistency).
pub fn load_dm(reader: impl Read) -> Result<DecomposableModel> {
    let file: DmFile = serde_json::from_reader(reader)?;
    let vars = table_from_decls(file.variables)?;
    let mut edges = Vec::new();
    let mut listed: Vec<(Vec<VarId>, Factor)> = Vec::with_capacity(file.cliques.len());
    for decl in file.cliques {
        let scope = ids_of_names(&vars, &decl.vars)?;
        for (i, &a) in scope.iter().enumerate() {
            for &b in &scope[i + 1..] {
                edges.push((a.min(b), a.max(b)));
            }
        }
        let f = Factor::from_permuted_layout(&vars, &scope, decl.table)?;
        listed.push((f.scope().to_vec(), f));
    }
    let graph = UndirectedGraph::from_edges(vars.len(), &edges)?;
    let forest = crate::jt::build_forest(&graph)?;
    let cliques = forest.cliques();
    if listed.len() != cliques.len() {
        return Err(Error::Validation(format!(
            "file lists {} cliques but the implied graph has {} maximal cliques",
            listed.len(),
            cliques.len()
        )));
    }
    let mut tables: Vec<Option<Factor>> = vec![None; cliques.len()];
    for (scope, f) in listed {
        let pos = cliques
            .position(&scope)
            .ok_or_else(|| Error::Validation(format!("listed clique {scope:?} is not maximal")))?;
        if tables[pos].replace(f).is_some() {
            return Err(Error::Validation(format!("clique {scope:?} listed twice")));
        }
    }
    let tables: Vec<Factor> = tables.into_iter().map(|t| t.unwrap()).collect();
    DecomposableModel::new(vars, graph, tables)
}

pub fn load_dm_path(path: impl AsRef<Path>) -> Result<DecomposableModel> {
    load_dm(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Writes a model in the format `load_dm` reads: cliques in storage order,
/// scopes listed ascending, so tables are written as stored.
pub fn save_dm(m: &DecomposableModel, writer: impl Write) -> Result<()> {
    let vars = m.vars();
    let cliques = (0..m.n_cliques())
        .map(|c| {
            let f = m.clique_marginal(c);
            CliqueDecl {
                vars: f
                    .scope()
                    .iter()
                    .map(|&v| vars.name(v).to_string())
                    .collect(),
                table: f.values().to_vec(),
            }
        })
        .collect();
    let file = DmFile {
        variables: decls_from_table(vars),
        cliques,
    };
    serde_json::to_writer_pretty(writer, &file)?;
    Ok(())
}

pub fn save_dm_path(m: &DecomposableModel, path: impl AsRef<Path>) -> Result<()> {
    save_dm(m, std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Reads a Bayesian network. Every variable must appear as exactly one
/// node; construction validates column normalization and acyclicity.
pub fn load_bn(reader: impl Read) -> Result<BayesianNetwork> {
    let file: BnFile = serde_json::from_reader(reader)?;
    let vars = table_from_decls(file.variables)?;
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for decl in file.nodes {
        let child = vars
            .id_of(&decl.name)
            .ok_or_else(|| Error::Validation(format!("unknown variable {:?}", decl.name)))?;
        let parents = ids_of_names(&vars, &decl.parents)?;
        let mut listed = parents.clone();
        listed.push(child);
        let factor = Factor::from_permuted_layout(&vars, &listed, decl.cpt)?;
        nodes.push((child, parents, factor));
    }
    BayesianNetwork::new(vars, nodes)
}

pub fn load_bn_path(path: impl AsRef<Path>) -> Result<BayesianNetwork> {
    load_bn(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Writes a network in the format `load_bn` reads, nodes in id order.
pub fn save_bn(bn: &BayesianNetwork, writer: impl Write) -> Result<()> {
    let vars = bn.vars();
    let nodes = bn
        .cpts()
        .iter()
        .map(|cpt| {
            let mut listed: Vec<VarId> = cpt.parents().to_vec();
            listed.push(cpt.child());
            Ok(NodeDecl {
                name: vars.name(cpt.child()).to_string(),
                parents: cpt
                    .parents()
                    .iter()
                    .map(|&p| vars.name(p).to_string())
                    .collect(),
                cpt: cpt.factor().to_permuted_layout(&listed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let file = BnFile {
        variables: decls_from_table(vars),
        nodes,
    };
    serde_json::to_writer_pretty(writer, &file)?;
    Ok(())
}

pub fn save_bn_path(bn: &BayesianNetwork, path: impl AsRef<Path>) -> Result<()> {
    save_bn(bn, std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Reads an undirected structure for fitting.
pub fn load_structure(reader: impl Read) -> Result<(VariableTable, UndirectedGraph)> {
    let file: StructureFile = serde_json::from_reader(reader)?;
    let vars = table_from_decls(file.variables)?;
    let mut edges = Vec::with_capacity(file.edges.len());
    for (a, b) in &file.edges {
        let ia = vars
            .id_of(a)
            .ok_or_else(|| Error::Validation(format!("unknown variable {a:?}")))?;
        let ib = vars
            .id_of(b)
            .ok_or_else(|| Error::Validation(format!("unknown variable {b:?}")))?;
        edges.push((ia, ib));
    }
    let graph = UndirectedGraph::from_edges(vars.len(), &edges)?;
    Ok((vars, graph))
}

pub fn load_structure_path(path: impl AsRef<Path>) -> Result<(VariableTable, UndirectedGraph)> {
    load_structure(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Reads observation rows. The header must name every variable exactly
/// once; row values are 0-based state indices, returned in variable-id
/// order.
pub fn load_csv(reader: impl Read, vars: &VariableTable) -> Result<Vec<Vec<usize>>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != vars.len() {
        return Err(Error::Validation(format!(
            "header names {} columns, model has {} variables",
            header.len(),
            vars.len()
        )));
    }
    let mut col_of_var: Vec<Option<usize>> = vec![None; vars.len()];
    for (col, name) in header.iter().enumerate() {
        let id = vars
            .id_of(name)
            .ok_or_else(|| Error::Validation(format!("unknown column {name:?}")))?;
        if col_of_var[id as usize].replace(col).is_some() {
            return Err(Error::Validation(format!("duplicate column {name:?}")));
        }
    }
    let col_of_var: Vec<usize> = col_of_var.into_iter().map(|c| c.unwrap()).collect();
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != vars.len() {
            return Err(Error::Validation(format!(
                "row {} has {} fields, expected {}",
                line + 1,
                record.len(),
                vars.len()
            )));
        }
        let mut row = vec![0usize; vars.len()];
        for (v, row_slot) in row.iter_mut().enumerate() {
            let field = record.get(col_of_var[v]).unwrap();
            *row_slot = field.trim().parse::<usize>().map_err(|_| {
                Error::Validation(format!(
                    "row {} column {:?}: {field:?} is not a state index",
                    line + 1,
                    vars.name(v as VarId)
                ))
            })?;
        }
        vars.check_assignment(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_csv_path(path: impl AsRef<Path>, vars: &VariableTable) -> Result<Vec<Vec<usize>>> {
    load_csv(std::io::BufReader::new(std::fs::File::open(path)?), vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::random_model_pair;
    use rand::SeedableRng;

    #[test]
    fn dm_round_trips_and_permutes() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(6);
        let vars = VariableTable::uniform(5, 2).unwrap();
        let (p, _) = random_model_pair(&vars, &[5], 3, &mut rng).unwrap();
        let mut buf = Vec::new();
        save_dm(&p, &mut buf).unwrap();
        let p2 = load_dm(buf.as_slice()).unwrap();
        assert_eq!(p.graph().edges(), p2.graph().edges());
        for c in 0..p.n_cliques() {
            assert_eq!(
                p.clique_marginal(c).values(),
                p2.clique_marginal(c).values()
            );
        }
    }

    #[test]
    fn dm_accepts_reordered_clique_listing() {
        let json = r#"{
            "variables": [{"name":"a","card":2},{"name":"b","card":2}],
            "cliques": [{"vars":["b","a"],"table":[0.1,0.2,0.3,0.4]}]
        }"#;
        let m = load_dm(json.as_bytes()).unwrap();
        // Listed (b,a) layout: cell order (b=0,a=0),(b=0,a=1),(b=1,a=0),(b=1,a=1).
        assert_eq!(m.evaluate_joint(&[0, 0]).unwrap(), 0.1);
        assert_eq!(m.evaluate_joint(&[1, 0]).unwrap(), 0.2);
        assert_eq!(m.evaluate_joint(&[0, 1]).unwrap(), 0.3);
        assert_eq!(m.evaluate_joint(&[1, 1]).unwrap(), 0.4);
    }

    #[test]
    fn dm_rejects_non_maximal_or_missing_cliques() {
        // {a,b} listed alongside {a,b,c}: subset clique.
        let json = r#"{
            "variables": [{"name":"a","card":2},{"name":"b","card":2},{"name":"c","card":2}],
            "cliques": [
                {"vars":["a","b","c"],"table":[0.125,0.125,0.125,0.125,0.125,0.125,0.125,0.125]},
                {"vars":["a","b"],"table":[0.25,0.25,0.25,0.25]}
            ]
        }"#;
        assert!(load_dm(json.as_bytes()).is_err());
        // A variable not covered by any clique has no table.
        let json = r#"{
            "variables": [{"name":"a","card":2},{"name":"b","card":2}],
            "cliques": [{"vars":["a"],"table":[0.5,0.5]}]
        }"#;
        assert!(load_dm(json.as_bytes()).is_err());
    }

    #[test]
    fn dm_loader_validates_consistency() {
        // Two cliques disagree on their shared marginal.
        let json = r#"{
            "variables": [{"name":"a","card":2},{"name":"b","card":2},{"name":"c","card":2}],
            "cliques": [
                {"vars":["a","b"],"table":[0.4,0.1,0.1,0.4]},
                {"vars":["b","c"],"table":[0.1,0.1,0.4,0.4]}
            ]
        }"#;
        assert!(matches!(
            load_dm(json.as_bytes()).unwrap_err(),
            Error::InconsistentModel(_)
        ));
    }

    #[test]
    fn bn_round_trips_with_child_fastest_layout() {
        let json = r#"{
            "variables": [{"name":"y","card":2},{"name":"x","card":2}],
            "nodes": [
                {"name":"y","parents":[],"cpt":[0.3,0.7]},
                {"name":"x","parents":["y"],"cpt":[0.9,0.1,0.2,0.8]}
            ]
        }"#;
        let bn = load_bn(json.as_bytes()).unwrap();
        // P(x=0|y=0) = 0.9, P(x=0|y=1) = 0.2.
        assert_eq!(bn.evaluate_joint(&[0, 0]).unwrap(), 0.3 * 0.9);
        assert_eq!(bn.evaluate_joint(&[1, 0]).unwrap(), 0.7 * 0.2);
        let mut buf = Vec::new();
        save_bn(&bn, &mut buf).unwrap();
        let bn2 = load_bn(buf.as_slice()).unwrap();
        assert_eq!(
            bn.evaluate_joint(&[1, 1]).unwrap(),
            bn2.evaluate_joint(&[1, 1]).unwrap()
        );
    }

    #[test]
    fn structure_and_csv_loaders_validate() {
        let sjson = r#"{
            "variables": [{"name":"a","card":2},{"name":"b","card":3}],
            "edges": [["a","b"]]
        }"#;
        let (vars, graph) = load_structure(sjson.as_bytes()).unwrap();
        assert_eq!(graph.edges(), vec![(0, 1)]);

        let csv = "b,a\n0,1\n2,0\n";
        let rows = load_csv(csv.as_bytes(), &vars).unwrap();
        assert_eq!(rows, vec![vec![1, 0], vec![0, 2]]);

        let bad_domain = "a,b\n0,3\n";
        assert!(matches!(
            load_csv(bad_domain.as_bytes(), &vars).unwrap_err(),
            Error::OutOfDomainValue { .. }
        ));
        let bad_header = "a,c\n0,0\n";
        assert!(load_csv(bad_header.as_bytes(), &vars).is_err());
        let not_a_number = "a,b\nx,0\n";
        assert!(load_csv(not_a_number.as_bytes(), &vars).is_err());
        let missing_field = "a,b\n0\n";
        assert!(load_csv(missing_field.as_bytes(), &vars).is_err());
    }

    #[test]
    fn malformed_json_is_a_json_error() {
        assert!(matches!(
            load_dm("{".as_bytes()).unwrap_err(),
            Error::Json(_)
        ));
    }
}
