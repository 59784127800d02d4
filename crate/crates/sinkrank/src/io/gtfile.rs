//! Ground-truth text format.
//!
//! UTF-8 text, one record per line: `query_id<TAB>item_id(,item_id)*`.
//! Lines starting with `#` are comments; blank lines are ignored.
//! Identifiers resolve against sidecar id lists when the matrix has
//! them, otherwise they must parse as 0-based integer indices within
//! the matrix shape. Repeated query lines merge their item sets.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::GroundTruth;

/// How identifiers in a ground-truth file map to matrix indices.
pub enum IdSpace<'a> {
    /// Ids are looked up in a sidecar list (position = index).
    Named(&'a [String]),
    /// Ids are 0-based integers, checked against this dimension.
    Indexed(usize),
}

struct Resolver<'a> {
    map: Option<HashMap<&'a str, usize>>,
    n: usize,
    what: &'static str,
}

impl<'a> Resolver<'a> {
    fn new(space: &IdSpace<'a>, what: &'static str, path: &Path) -> Result<Self> {
        match space {
            IdSpace::Named(ids) => {
                let mut map = HashMap::with_capacity(ids.len());
                for (idx, id) in ids.iter().enumerate() {
                    if map.insert(id.as_str(), idx).is_some() {
                        return Err(Error::Ingestion(format!(
                            "{}: duplicate {what} id {id:?} in sidecar",
                            path.display()
                        )));
                    }
                }
                Ok(Self {
                    map: Some(map),
                    n: ids.len(),
                    what,
                })
            }
            IdSpace::Indexed(n) => Ok(Self {
                map: None,
                n: *n,
                what,
            }),
        }
    }

    fn resolve(&self, token: &str, path: &Path, line: usize) -> Result<usize> {
        if let Some(map) = &self.map {
            return map.get(token).copied().ok_or_else(|| Error::Parse {
                path: path.into(),
                line,
                detail: format!("unknown {} id {token:?}", self.what),
            });
        }
        let idx: usize = token.parse().map_err(|_| Error::Parse {
            path: path.into(),
            line,
            detail: format!("{} id {token:?} is not a 0-based integer index", self.what),
        })?;
        if idx >= self.n {
            return Err(Error::Parse {
                path: path.into(),
                line,
                detail: format!("{} index {idx} out of range (matrix has {})", self.what, self.n),
            });
        }
        Ok(idx)
    }
}

/// Read and resolve a ground-truth file against the given id spaces.
pub fn read_ground_truth(path: &Path, rows: IdSpace, cols: IdSpace) -> Result<GroundTruth> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    parse_ground_truth(&text, path, rows, cols)
}

fn parse_ground_truth(
    text: &str,
    path: &Path,
    rows: IdSpace,
    cols: IdSpace,
) -> Result<GroundTruth> {
    let queries = Resolver::new(&rows, "query", path)?;
    let items = Resolver::new(&cols, "item", path)?;
    let mut pairs: Vec<(usize, Vec<usize>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (q_tok, items_tok) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.into(),
            line: line_no,
            detail: "expected `query_id<TAB>item_id(,item_id)*`".to_string(),
        })?;
        let q = queries.resolve(q_tok, path, line_no)?;
        let mut rel = Vec::new();
        for tok in items_tok.split(',') {
            if tok.is_empty() {
                return Err(Error::Parse {
                    path: path.into(),
                    line: line_no,
                    detail: "empty item id in list".to_string(),
                });
            }
            rel.push(items.resolve(tok, path, line_no)?);
        }
        pairs.push((q, rel));
    }
    if pairs.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            line: text.lines().count(),
            detail: "no ground-truth records found".to_string(),
        });
    }
    GroundTruth::from_pairs(pairs)
}

/// Write ground truth in the text format, using sidecar ids when given
/// and 0-based indices otherwise.
pub fn write_ground_truth(
    path: &Path,
    gt: &GroundTruth,
    row_ids: Option<&[String]>,
    col_ids: Option<&[String]>,
) -> Result<()> {
    let mut out = String::new();
    for (q, items) in gt.iter() {
        let q_id = match row_ids {
            Some(ids) => ids
                .get(q)
                .ok_or_else(|| {
                    Error::Input(format!("query {q} has no id in a {}−entry sidecar", ids.len()))
                })?
                .clone(),
            None => q.to_string(),
        };
        let item_ids: Result<Vec<String>> = items
            .iter()
            .map(|&i| match col_ids {
                Some(ids) => ids
                    .get(i)
                    .cloned()
                    .ok_or_else(|| {
                        Error::Input(format!(
                            "item {i} has no id in a {}−entry sidecar",
                            ids.len()
                        ))
                    }),
                None => Ok(i.to_string()),
            })
            .collect();
        out.push_str(&q_id);
        out.push('\t');
        out.push_str(&item_ids?.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn tmp(name: &str) -> PathBuf {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn parses_indices_comments_and_merges_duplicates() {
        let text = "# header comment\n\n0\t1,2\n2\t0\n0\t3\n";
        let gt =
            parse_ground_truth(text, Path::new("x.gt"), IdSpace::Indexed(3), IdSpace::Indexed(4))
                .unwrap();
        assert_eq!(gt.relevant(0), Some(&[1usize, 2, 3][..]));
        assert_eq!(gt.relevant(2), Some(&[0usize][..]));
        assert_eq!(gt.n_judged(), 2);
    }

    #[test]
    fn resolves_named_ids_via_sidecars() {
        let rows = vec!["qa".to_string(), "qb".to_string()];
        let cols = vec!["v1".to_string(), "v2".to_string(), "v3".to_string()];
        let text = "qb\tv3,v1\n";
        let gt = parse_ground_truth(
            text,
            Path::new("x.gt"),
            IdSpace::Named(&rows),
            IdSpace::Named(&cols),
        )
        .unwrap();
        assert_eq!(gt.relevant(1), Some(&[0usize, 2][..]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad_sep = "0 1\n";
        match parse_ground_truth(bad_sep, Path::new("x.gt"), IdSpace::Indexed(2), IdSpace::Indexed(2))
        {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected Parse, got {other:?}"),
        }
        let unknown = "0\t1\nqz\t0\n";
        let rows = vec!["q0".to_string()];
        match parse_ground_truth(
            unknown,
            Path::new("x.gt"),
            IdSpace::Named(&rows),
            IdSpace::Indexed(2),
        ) {
            Err(Error::Parse { line, detail, .. }) => {
                assert_eq!(line, 1);
                assert!(detail.contains("\"0\""), "{detail}");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
        let out_of_range = "5\t0\n";
        match parse_ground_truth(
            out_of_range,
            Path::new("x.gt"),
            IdSpace::Indexed(3),
            IdSpace::Indexed(2),
        ) {
            Err(Error::Parse { line, detail, .. }) => {
                assert_eq!(line, 1);
                assert!(detail.contains("out of range"), "{detail}");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_sidecar_ids_are_rejected() {
        let rows = vec!["q".to_string(), "q".to_string()];
        match parse_ground_truth(
            "q\t0\n",
            Path::new("x.gt"),
            IdSpace::Named(&rows),
            IdSpace::Indexed(1),
        ) {
            Err(Error::Ingestion(msg)) => assert!(msg.contains("duplicate"), "{msg}"),
            other => panic!("expected Ingestion, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        match parse_ground_truth(
            "# only comments\n",
            Path::new("x.gt"),
            IdSpace::Indexed(2),
            IdSpace::Indexed(2),
        ) {
            Err(Error::Parse { detail, .. }) => assert!(detail.contains("no ground-truth")),
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn write_then_read_round_trips() {
        let gt = GroundTruth::from_pairs(vec![(0usize, vec![2usize, 1]), (3, vec![0])]).unwrap();
        let p = tmp("rt.gt");
        write_ground_truth(&p, &gt, None, None).unwrap();
        let back = read_ground_truth(&p, IdSpace::Indexed(4), IdSpace::Indexed(3)).unwrap();
        assert_eq!(back, gt);

        let rows: Vec<String> = (0..4).map(|i| format!("row{i}")).collect();
        let cols: Vec<String> = (0..3).map(|i| format!("col{i}")).collect();
        let p2 = tmp("rt2.gt");
        write_ground_truth(&p2, &gt, Some(&rows), Some(&cols)).unwrap();
        let back2 = read_ground_truth(&p2, IdSpace::Named(&rows), IdSpace::Named(&cols)).unwrap();
        assert_eq!(back2, gt);
        let text = fs::read_to_string(&p2).unwrap();
        assert!(text.contains("row3\tcol0"), "{text}");
    }
}
