//! CSV ingestion and byte-stable serialization.
//!
//! Nodes: header `id,kind,label` (label optional). Edges: header
//! `source,target`. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};

use super::{EcosystemGraph, GraphBuilder, IngestOptions, Node, NodeKind};
use crate::error::{Error, Result};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(Trim::All)
        .flexible(true)
        .from_reader(r)
}

fn line_of(rec: &StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?.clone();
    let got: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got.len() < expected.len() || got.iter().zip(expected).any(|(g, e)| g != e) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

/// Parses a node table and an edge table into a validated graph.
pub fn read_network<N: Read, E: Read>(
    nodes: N,
    edges: E,
    options: IngestOptions,
) -> Result<EcosystemGraph> {
    let mut builder = GraphBuilder::new(options);

    let mut rdr = reader(nodes);
    check_header(&mut rdr, &["id", "kind"])?;
    let mut seen = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "expected id,kind[,label]".into(),
            });
        }
        let kind: NodeKind = rec[1]
            .parse()
            .map_err(|message| Error::Parse { line, message })?;
        let mut node = Node::new(&rec[0], kind);
        if let Some(label) = rec.get(2).filter(|l| !l.is_empty()) {
            node.label = Some(label.to_owned());
        }
        builder.add_node(node, line)?;
        seen += 1;
    }
    if seen == 0 {
        return Err(Error::Empty("node file"));
    }

    let mut rdr = reader(edges);
    check_header(&mut rdr, &["source", "target"])?;
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "expected source,target".into(),
            });
        }
        builder.add_edge(&rec[0], &rec[1], line)?;
    }
    builder.build()
}

/// [`read_network`] over two files.
pub fn load_network(
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
    options: IngestOptions,
) -> Result<EcosystemGraph> {
    let (np, ep) = (nodes_path.as_ref(), edges_path.as_ref());
    let nodes = File::open(np).map_err(Error::file(np))?;
    let edges = File::open(ep).map_err(Error::file(ep))?;
    read_network(nodes, edges, options)
}

/// Writes the node table sorted by id.
pub fn write_nodes<W: Write>(g: &EcosystemGraph, w: W) -> Result<()> {
    let mut wtr = WriterBuilder::new().from_writer(w);
    wtr.write_record(["id", "kind", "label"])?;
    for n in g.nodes() {
        wtr.write_record([
            n.id.as_str(),
            n.kind.as_str(),
            n.label.as_deref().unwrap_or(""),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes the edge table sorted by (smaller id, larger id).
pub fn write_edges<W: Write>(g: &EcosystemGraph, w: W) -> Result<()> {
    let mut wtr = WriterBuilder::new().from_writer(w);
    wtr.write_record(["source", "target"])?;
    for (u, v) in g.edges() {
        wtr.write_record([g.node(u).id.as_str(), g.node(v).id.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read(nodes: &str, edges: &str) -> Result<EcosystemGraph> {
        read_network(nodes.as_bytes(), edges.as_bytes(), IngestOptions::default())
    }

    fn serialize(g: &EcosystemGraph) -> (String, String) {
        let mut n = Vec::new();
        let mut e = Vec::new();
        write_nodes(g, &mut n).unwrap();
        write_edges(g, &mut e).unwrap();
        (String::from_utf8(n).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn minimal_input() {
        let g = read(
            "id,kind,label\na,physical,Hotel A\nb,virtual\n",
            "source,target\na,b\n",
        )
        .unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.node(0).label.as_deref(), Some("Hotel A"));
        assert_eq!(g.node(1).label, None);
    }

    #[test]
    fn reciprocal_edges_merge() {
        let g = read(
            "id,kind\na,physical\nb,Virtual\n",
            "source,target\na,b\nb,a\na,b\n",
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn comments_and_self_loops_ignored() {
        let g = read(
            "# exported\nid,kind,label\n# a comment\na,PHYSICAL,\nb,virtual,\n",
            "source,target\na,a\nb,a\n",
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn undeclared_endpoint_is_named() {
        let err = read(
            "id,kind\na,physical\nb,virtual\n",
            "source,target\na,b\na,c\n",
        )
        .unwrap_err();
        match err {
            Error::UnknownNode { ids, line } => {
                assert_eq!(ids, ["c"]);
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_kind_names_row() {
        let err = read("id,kind\na,physical\nb,hybrid\n", "source,target\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        assert!(err.to_string().contains("hybrid"));
    }

    #[test]
    fn empty_node_file_rejected() {
        assert!(matches!(
            read("id,kind,label\n", "source,target\n"),
            Err(Error::Empty(_))
        ));
        assert!(read("", "source,target\n").is_err());
    }

    #[test]
    fn duplicate_node_rejected() {
        assert!(read("id,kind\na,physical\na,virtual\n", "source,target\n").is_err());
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read("name,kind\na,physical\n", "source,target\n").is_err());
        assert!(read("id,kind\na,physical\n", "from,to\n").is_err());
    }

    #[test]
    fn serialization_is_sorted() {
        let g = read(
            "id,kind,label\nz,physical,\"Z, Inc\"\nb,virtual,\na,physical,\n",
            "source,target\nz,a\nb,z\nb,a\n",
        )
        .unwrap();
        let (n, e) = serialize(&g);
        assert_eq!(
            n,
            "id,kind,label\na,physical,\nb,virtual,\nz,physical,\"Z, Inc\"\n"
        );
        assert_eq!(e, "source,target\na,b\na,z\nb,z\n");
    }

    fn arb_graph() -> impl Strategy<Value = (Vec<bool>, Vec<(usize, usize)>)> {
        (1usize..15).prop_flat_map(|n| {
            (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec((0..n, 0..n), 0..40),
            )
        })
    }

    proptest! {
        #[test]
        fn load_serialize_load_is_fixed_point((kinds, edges) in arb_graph(), rev in any::<bool>()) {
            let mut nodes = String::from("id,kind,label\n");
            let order: Vec<usize> = if rev { (0..kinds.len()).rev().collect() } else { (0..kinds.len()).collect() };
            for &i in &order {
                let k = if kinds[i] { "virtual" } else { "physical" };
                nodes.push_str(&format!("n{i},{k},\n"));
            }
            let mut es = String::from("source,target\n");
            for (u, v) in &edges {
                es.push_str(&format!("n{u},n{v}\n"));
            }
            let g1 = read(&nodes, &es).unwrap();
            let (n1, e1) = serialize(&g1);
            let g2 = read(&n1, &e1).unwrap();
            prop_assert_eq!(&g1, &g2);
            prop_assert_eq!(serialize(&g2), (n1, e1));
            let deg: usize = crate::graph::degree_sequence(&g1, None).iter().sum();
            prop_assert_eq!(deg, 2 * g1.edge_count());
        }
    }
}
