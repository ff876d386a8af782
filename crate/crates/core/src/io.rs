//! Plain-text complex format: an optional `n <N>` header, then one facet per
//! line as whitespace-separated 1-based vertex ids. `#` starts a comment line.

use std::path::Path;

use crate::complex::{SimplicialComplex, VertexId};
use crate::error::{Error, Result};

pub fn parse_complex(text: &str) -> Result<SimplicialComplex> {
    let mut n: Option<usize> = None;
    let mut facets: Vec<Vec<VertexId>> = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        if let Some(rest) = line.strip_prefix('n').filter(|r| r.starts_with(char::is_whitespace)) {
            if seen_content {
                return Err(err("the `n <N>` header must precede every facet".into()));
            }
            let value = rest.trim();
            n = Some(value.parse().map_err(|_| err(format!("invalid vertex count `{value}`")))?);
            seen_content = true;
            continue;
        }
        seen_content = true;
        let mut facet = Vec::new();
        for tok in line.split_whitespace() {
            let v: VertexId = tok.parse().map_err(|_| err(format!("invalid vertex `{tok}`")))?;
            if v == 0 {
                return Err(err("vertex ids are 1-based".into()));
            }
            if let Some(n) = n.filter(|&n| v as usize > n) {
                return Err(err(format!("vertex {v} exceeds n = {n}")));
            }
            facet.push(v);
        }
        let mut sorted = facet.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != facet.len() {
            return Err(err("repeated vertex in facet".into()));
        }
        facets.push(facet);
    }
    let n =
        match n {
            Some(n) => n,
            None => facets.iter().flatten().copied().max().map(|v| v as usize).ok_or(Error::Parse {
                line: text.lines().count().max(1),
                msg: "no `n <N>` header and no facets".into(),
            })?,
        };
    SimplicialComplex::from_facets(n, &facets)
}

/// Header plus the maximal faces in lexicographic order.
pub fn format_complex(k: &SimplicialComplex) -> String {
    let mut out = format!("n {}\n", k.n());
    for f in k.facets() {
        let line: Vec<String> = f.vertices().iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_complex(path: impl AsRef<Path>) -> Result<SimplicialComplex> {
    parse_complex(&std::fs::read_to_string(path)?)
}

pub fn write_complex(path: impl AsRef<Path>, k: &SimplicialComplex) -> Result<()> {
    std::fs::write(path, format_complex(k))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_comments_and_facets() {
        let k = parse_complex("# figure\nn 5\n1 2\n2 3\n\n1 4\n3 5\n3 4 5\n").unwrap();
        assert_eq!(k.n(), 5);
        assert_eq!(k.count(2), 6);
        assert_eq!(format_complex(&k), "n 5\n1 2\n1 4\n2 3\n3 4 5\n");
    }

    #[test]
    fn infers_n_without_header() {
        let k = parse_complex("2 1\n4\n").unwrap();
        assert_eq!(k.n(), 4);
        assert_eq!(format_complex(&k), "n 4\n1 2\n3\n4\n");
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_complex("n 3\n1 2\n1 x\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_complex("n 3\n1 4\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_complex("1 2\nn 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_complex("0 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
        assert!(parse_complex("# nothing\n").is_err());
    }
}
