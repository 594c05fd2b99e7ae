//! MatrixMarket coordinate format (real, general or symmetric on input;
//! general on output, 1-based indices).

use std::fmt::Write as _;
use std::path::Path;

use super::CsrMatrix;
use crate::error::{Error, Result};

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn to_string(m: &CsrMatrix) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "{} {} {}", m.nrows(), m.ncols(), m.nnz()).unwrap();
    for (i, j, v) in m.iter() {
        writeln!(s, "{} {} {:.17e}", i + 1, j + 1, v).unwrap();
    }
    s
}

pub fn write(m: &CsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_string(m))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn parse(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let h: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_lowercase())
        .collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported header '{header}'"),
        });
    }
    if h[3] != "real" && h[3] != "integer" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported field '{}'", h[3]),
        });
    }
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported symmetry '{other}'"),
            })
        }
    };
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    for (ln, line) in lines {
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parse_err = |msg: &str| Error::Parse {
            line: ln + 1,
            msg: msg.to_string(),
        };
        let tok: Vec<&str> = t.split_whitespace().collect();
        match dims {
            None => {
                if tok.len() != 3 {
                    return Err(parse_err("expected 'nrows ncols nnz'"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| parse_err("bad size"));
                dims = Some((p(tok[0])?, p(tok[1])?, p(tok[2])?));
            }
            Some((nr, nc, _)) => {
                if tok.len() != 3 {
                    return Err(parse_err("expected 'i j value'"));
                }
                let i: usize = tok[0].parse().map_err(|_| parse_err("bad row index"))?;
                let j: usize = tok[1].parse().map_err(|_| parse_err("bad column index"))?;
                let v: f64 = tok[2].parse().map_err(|_| parse_err("bad value"))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(parse_err("index out of range"));
                }
                trip.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    trip.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = dims.ok_or(Error::Parse {
        line: 2,
        msg: "missing size line".into(),
    })?;
    let stored = if symmetric {
        trip.iter().filter(|t| t.0 >= t.1).count()
    } else {
        trip.len()
    };
    if stored != nnz {
        return Err(Error::Parse {
            line: 2,
            msg: format!("declared {nnz} entries, found {stored}"),
        });
    }
    CsrMatrix::from_triplets(nr, nc, &trip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_parse() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.5), (1, 0, -0.1)]).unwrap();
        let s = to_string(&m);
        assert!(s.starts_with(HEADER));
        assert_eq!(parse(&s).unwrap(), m);
    }

    #[test]
    fn symmetric_input_is_expanded() {
        let s = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 2.0\n2 1 -1.0\n";
        let m = parse(s).unwrap();
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(1, 0), -1.0);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse("").is_err());
        assert!(parse("%%MatrixMarket matrix array real general\n1 1\n1\n").is_err());
        let bad = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(parse(bad), Err(Error::Parse { line: 3, .. })));
        let count = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(parse(count).is_err());
    }
}
