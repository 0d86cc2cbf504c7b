//! Text formats for networks and block assignments.
//!
//! Edge lists start with a header `N=<int>` followed by one `i<TAB>j<TAB>s`
//! record per line, `s` in {-1, 1}. Block files hold one `node<TAB>block`
//! line per node. Ids are 1-based on disk.

use std::io::{BufRead, Write};

use super::{BlockAssignment, SignedNetwork, Sign};
use crate::error::{Error, Result};

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader
        .lines()
        .enumerate()
        .map(|(idx, line)| (idx + 1, line))
}

fn parse_id(field: &str, line: usize, what: &str) -> Result<usize> {
    field
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{}`", field.trim())))
}

pub fn load_edge_list<R: BufRead>(reader: R) -> Result<SignedNetwork> {
    let mut net: Option<SignedNetwork> = None;
    for (line_no, line) in content_lines(reader) {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(current) = net.as_mut() else {
            let header = line.trim();
            let n = header
                .strip_prefix("N=")
                .ok_or_else(|| Error::parse(line_no, "expected header `N=<int>`"))?;
            let n = parse_id(n, line_no, "node count")?;
            if n == 0 {
                return Err(Error::parse(line_no, "node count must be positive"));
            }
            net = Some(SignedNetwork::empty(n));
            continue;
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let i = parse_id(fields[0], line_no, "node id")?;
        let j = parse_id(fields[1], line_no, "node id")?;
        let s: i64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid sign `{}`", fields[2].trim())))?;
        let sign =
            Sign::from_int(s).ok_or_else(|| Error::parse(line_no, format!("sign must be -1 or 1, found {s}")))?;
        let n = current.n_nodes();
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::parse(
                line_no,
                format!("node id out of range 1..={n}: ({i}, {j})"),
            ));
        }
        if i == j {
            return Err(Error::parse(line_no, format!("self-loop at node {i}")));
        }
        current
            .insert_checked(i - 1, j - 1, sign)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
    }
    net.ok_or_else(|| Error::parse(1, "missing header `N=<int>`"))
}

pub fn save_edge_list<W: Write>(net: &SignedNetwork, mut out: W) -> Result<()> {
    writeln!(out, "N={}", net.n_nodes())?;
    for (i, j, s) in net.edges() {
        writeln!(out, "{}\t{}\t{}", i + 1, j + 1, s.as_int())?;
    }
    Ok(())
}

/// Reads a block file. Every node `1..=N` must appear exactly once; `K` is
/// the largest block id unless `k_blocks` is given.
pub fn load_blocks<R: BufRead>(reader: R, k_blocks: Option<usize>) -> Result<BlockAssignment> {
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (line_no, line) in content_lines(reader) {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                line_no,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let node = parse_id(fields[0], line_no, "node id")?;
        let block = parse_id(fields[1], line_no, "block id")?;
        if node == 0 || block == 0 {
            return Err(Error::parse(line_no, "ids are 1-based"));
        }
        pairs.push((node, block, line_no));
    }
    let n = pairs.len();
    let mut z = vec![usize::MAX; n];
    for &(node, block, line_no) in &pairs {
        if node > n {
            return Err(Error::parse(line_no, format!("node id {node} exceeds node count {n}")));
        }
        if z[node - 1] != usize::MAX {
            return Err(Error::parse(line_no, format!("node {node} listed twice")));
        }
        z[node - 1] = block - 1;
    }
    let k = match k_blocks {
        Some(k) => k,
        None => z.iter().map(|&b| b + 1).max().unwrap_or(1),
    };
    BlockAssignment::new(z, k)
}

pub fn save_blocks<W: Write>(z: &BlockAssignment, mut out: W) -> Result<()> {
    for (i, &b) in z.labels().iter().enumerate() {
        writeln!(out, "{}\t{}", i + 1, b + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::DyadValue;
    use proptest::prelude::*;

    fn load(text: &str) -> Result<SignedNetwork> {
        load_edge_list(text.as_bytes())
    }

    #[test]
    fn loads_direct_encoding() {
        let y = load("N=3\n1\t2\t1\n2\t3\t-1").unwrap();
        assert_eq!(y.n_nodes(), 3);
        assert_eq!(y.value(0, 1), DyadValue::Pos);
        assert_eq!(y.value(1, 2), DyadValue::Neg);
        assert_eq!(y.value(0, 2), DyadValue::Zero);
    }

    #[test]
    fn loads_empty_network() {
        let y = load("N=2\n").unwrap();
        assert_eq!(y.n_nodes(), 2);
        assert_eq!(y.n_edges(), 0);
    }

    #[test]
    fn folds_reversed_records() {
        assert_eq!(load("N=3\n2\t1\t1").unwrap(), load("N=3\n1\t2\t1").unwrap());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("N=3\n1\t1\t1", 2),
            ("N=3\n1\t2\t1\n2\t1\t-1", 3),
            ("N=3\n1\t4\t1", 2),
            ("N=3\n1\t2\n", 2),
            ("N=3\n1\t2\t0", 2),
            ("1\t2\t1", 1),
        ];
        for (text, expected) in cases {
            match load(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn consistent_duplicates_are_accepted() {
        let y = load("N=3\n1\t2\t1\n2\t1\t1\n").unwrap();
        assert_eq!(y.n_edges(), 1);
    }

    #[test]
    fn block_files() {
        let z = load_blocks("1\t2\n2\t1\n3\t2\n".as_bytes(), None).unwrap();
        assert_eq!(z.labels(), &[1, 0, 1]);
        assert_eq!(z.n_blocks(), 2);
        let mut buf = Vec::new();
        save_blocks(&z, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1\t2\n2\t1\n3\t2\n");
        assert!(load_blocks("1\t1\n1\t2\n".as_bytes(), None).is_err());
        assert!(load_blocks("1\t1\n3\t2\n".as_bytes(), None).is_err());
    }

    proptest! {
        #[test]
        fn save_then_load_is_identity(y in crate::network::tests::arb_network(8)) {
            let mut buf = Vec::new();
            save_edge_list(&y, &mut buf).unwrap();
            let back = load_edge_list(buf.as_slice()).unwrap();
            prop_assert_eq!(back, y);
        }
    }
}
