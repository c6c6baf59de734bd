//! Text formats for network datasets.
//!
//! Vector form:
//!
//! ```text
//! V=4 n=2
//! s1, 1.5, 0 1 ? 0 0 1
//! s2, 2, 1 1 0 0 1 0
//! ```
//!
//! Each row lists the lower-triangle entries in edge-index order; `?` marks
//! a missing (held-out) entry. Matrix form has the same header, then for
//! every subject a `subject_id, trait` line followed by V rows of V entries.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use netresp_core::network::{EdgeIndexer, EdgeState, EdgeVector, NetworkDataset};
use netresp_core::sim::Regime;

use crate::error::{CliError, IoContext, Result};

fn parse_header(line: &str, path: &Path, lineno: usize) -> Result<(usize, usize)> {
    let mut nodes = None;
    let mut subjects = None;
    for tok in line.split_whitespace() {
        let (key, value) =
            tok.split_once('=').ok_or_else(|| CliError::parse(path, lineno, format!("bad header token `{tok}`")))?;
        let value: usize =
            value.parse().map_err(|_| CliError::parse(path, lineno, format!("bad header value `{tok}`")))?;
        match key {
            "V" => nodes = Some(value),
            "n" => subjects = Some(value),
            _ => return Err(CliError::parse(path, lineno, format!("unknown header key `{key}`"))),
        }
    }
    match (nodes, subjects) {
        (Some(v), Some(n)) if v >= 2 => Ok((v, n)),
        _ => Err(CliError::parse(path, lineno, "header must read `V=<int> n=<int>` with V >= 2")),
    }
}

fn parse_state(tok: &str) -> Option<EdgeState> {
    match tok {
        "0" => Some(EdgeState::Absent),
        "1" => Some(EdgeState::Present),
        "?" => Some(EdgeState::Missing),
        _ => None,
    }
}

fn state_char(s: EdgeState) -> char {
    match s {
        EdgeState::Absent => '0',
        EdgeState::Present => '1',
        EdgeState::Missing => '?',
    }
}

fn parse_trait(tok: &str, path: &Path, lineno: usize) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::parse(path, lineno, format!("bad trait value `{}`", tok.trim())))
}

/// Non-blank lines with 1-based line numbers.
fn content_lines<'a, R: BufRead + 'a>(r: R, path: &'a Path) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    r.lines().enumerate().filter_map(move |(k, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((k + 1, l))),
        Err(e) => Some(Err(CliError::io(path, e))),
    })
}

fn finish(
    path: &Path,
    last_line: usize,
    nodes: usize,
    expected: usize,
    ids: Vec<String>,
    nets: Vec<EdgeVector>,
    traits: Vec<f64>,
) -> Result<NetworkDataset> {
    if ids.len() != expected {
        return Err(CliError::parse(
            path,
            last_line,
            format!("header announces {expected} subjects, found {}", ids.len()),
        ));
    }
    NetworkDataset::new(nodes, ids, nets, traits).map_err(|e| CliError::parse(path, last_line, e.to_string()))
}

/// Reads the vector form; `path` only labels error messages.
pub fn read_dataset<R: BufRead>(r: R, path: &Path) -> Result<NetworkDataset> {
    let mut lines = content_lines(r, path);
    let (hline, header) = lines.next().transpose()?.ok_or_else(|| CliError::parse(path, 1, "empty file"))?;
    let (nodes, expected) = parse_header(&header, path, hline)?;
    let edges = nodes * (nodes - 1) / 2;
    let (mut ids, mut nets, mut traits) = (Vec::new(), Vec::new(), Vec::new());
    let mut last = hline;
    for item in lines {
        let (lineno, line) = item?;
        last = lineno;
        let mut parts = line.splitn(3, ',');
        let (id, tr, body) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a.trim(), b, c),
            _ => return Err(CliError::parse(path, lineno, "expected `subject_id, trait, edges`")),
        };
        if id.is_empty() {
            return Err(CliError::parse(path, lineno, "empty subject id"));
        }
        let x = parse_trait(tr, path, lineno)?;
        let values = body
            .split_whitespace()
            .map(|t| parse_state(t).ok_or_else(|| CliError::parse(path, lineno, format!("bad edge value `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != edges {
            return Err(CliError::parse(
                path,
                lineno,
                format!("expected {edges} edge values for V={nodes}, found {}", values.len()),
            ));
        }
        ids.push(id.to_string());
        nets.push(EdgeVector::new(nodes, values).map_err(|e| CliError::parse(path, lineno, e.to_string()))?);
        traits.push(x);
    }
    finish(path, last, nodes, expected, ids, nets, traits)
}

pub fn write_dataset<W: Write>(ds: &NetworkDataset, mut w: W) -> std::io::Result<()> {
    writeln!(w, "V={} n={}", ds.nodes(), ds.num_subjects())?;
    let mut line = String::new();
    for i in 0..ds.num_subjects() {
        line.clear();
        let _ = write!(line, "{}, {}, ", ds.subject_ids()[i], ds.traits()[i]);
        for (l, &s) in ds.network(i).values().iter().enumerate() {
            if l > 0 {
                line.push(' ');
            }
            line.push(state_char(s));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads the matrix form, rejecting asymmetric matrices and self-loops.
pub fn read_matrix_dataset<R: BufRead>(r: R, path: &Path) -> Result<NetworkDataset> {
    let mut lines = content_lines(r, path);
    let (hline, header) = lines.next().transpose()?.ok_or_else(|| CliError::parse(path, 1, "empty file"))?;
    let (nodes, expected) = parse_header(&header, path, hline)?;
    let ix = EdgeIndexer::new(nodes);
    let (mut ids, mut nets, mut traits) = (Vec::new(), Vec::new(), Vec::new());
    let mut last = hline;
    while let Some(item) = lines.next() {
        let (lineno, line) = item?;
        last = lineno;
        let (id, tr) =
            line.split_once(',').ok_or_else(|| CliError::parse(path, lineno, "expected `subject_id, trait`"))?;
        ids.push(id.trim().to_string());
        traits.push(parse_trait(tr, path, lineno)?);
        let mut rows: Vec<(usize, Vec<EdgeState>)> = Vec::with_capacity(nodes);
        for v in 0..nodes {
            let (rl, row) = lines
                .next()
                .transpose()?
                .ok_or_else(|| CliError::parse(path, last, format!("matrix truncated at row {}", v + 1)))?;
            last = rl;
            let row = row
                .split_whitespace()
                .map(|t| parse_state(t).ok_or_else(|| CliError::parse(path, rl, format!("bad entry `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != nodes {
                return Err(CliError::parse(path, rl, format!("expected {nodes} entries, found {}", row.len())));
            }
            if row[v] == EdgeState::Present {
                return Err(CliError::parse(path, rl, format!("self-loop at node {}", v + 1)));
            }
            for (u, &s) in row.iter().enumerate().take(v) {
                if rows[u].1[v] != s {
                    return Err(CliError::parse(
                        path,
                        rl,
                        format!("asymmetric entry: A[{},{}] differs from A[{},{}]", v + 1, u + 1, u + 1, v + 1),
                    ));
                }
            }
            rows.push((rl, row));
        }
        let values = (0..ix.len())
            .map(|l| {
                let (v, u) = ix.pair(l);
                rows[v].1[u]
            })
            .collect();
        nets.push(EdgeVector::new(nodes, values)?);
    }
    finish(path, last, nodes, expected, ids, nets, traits)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).at(path)?;
    Ok(csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file))
}

fn csv_records(path: &Path, width: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    for (k, rec) in csv_reader(path)?.records().enumerate() {
        let rec = rec.map_err(|e| CliError::parse(path, k + 1, e.to_string()))?;
        if rec.len() != width {
            return Err(CliError::parse(path, k + 1, format!("expected {width} columns, found {}", rec.len())));
        }
        out.push((k + 1, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

/// Edge-list ingestion: `subject_id,node_v,node_u` rows (1-based nodes) and
/// a trait file of `subject_id,trait` rows. Pairs never listed are absent.
/// Either file may start with a header row. Subjects follow the trait file.
/// `nodes` defaults to the largest node index seen.
pub fn read_edge_list(edges_path: &Path, traits_path: &Path, nodes: Option<usize>) -> Result<NetworkDataset> {
    let mut trait_rows = csv_records(traits_path, 2)?;
    if trait_rows.first().is_some_and(|(_, r)| r[1].parse::<f64>().is_err()) {
        trait_rows.remove(0);
    }
    let mut ids = Vec::new();
    let mut traits = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (line, r) in &trait_rows {
        if index.insert(r[0].clone(), ids.len()).is_some() {
            return Err(CliError::parse(traits_path, *line, format!("duplicate subject `{}`", r[0])));
        }
        ids.push(r[0].clone());
        traits.push(parse_trait(&r[1], traits_path, *line)?);
    }
    let mut edge_rows = csv_records(edges_path, 3)?;
    if edge_rows.first().is_some_and(|(_, r)| r[1].parse::<usize>().is_err()) {
        edge_rows.remove(0);
    }
    let mut pairs = Vec::with_capacity(edge_rows.len());
    let mut max_node = 0;
    for (line, r) in &edge_rows {
        let i = *index
            .get(&r[0])
            .ok_or_else(|| CliError::parse(edges_path, *line, format!("subject `{}` has no trait", r[0])))?;
        let node = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| CliError::parse(edges_path, *line, format!("bad node `{s}`")))
        };
        let (v, u) = (node(&r[1])?, node(&r[2])?);
        if v == u {
            return Err(CliError::parse(edges_path, *line, format!("self-loop at node {v}")));
        }
        max_node = max_node.max(v).max(u);
        pairs.push((*line, i, v - 1, u - 1));
    }
    let nodes = nodes.unwrap_or(max_node);
    if nodes < 2 {
        return Err(CliError::Usage("edge list needs at least two nodes".into()));
    }
    let ix = EdgeIndexer::new(nodes);
    let mut nets = vec![vec![EdgeState::Absent; ix.len()]; ids.len()];
    for (line, i, v, u) in pairs {
        if v >= nodes || u >= nodes {
            return Err(CliError::parse(edges_path, line, format!("node index exceeds V={nodes}")));
        }
        nets[i][ix.offset(v, u)] = EdgeState::Present;
    }
    let nets = nets.into_iter().map(|s| EdgeVector::new(nodes, s)).collect::<Result<Vec<_>, _>>()?;
    Ok(NetworkDataset::new(nodes, ids, nets, traits)?)
}

pub fn load_dataset(path: &Path) -> Result<NetworkDataset> {
    let file = std::fs::File::open(path).at(path)?;
    read_dataset(std::io::BufReader::new(file), path)
}

pub fn load_matrix_dataset(path: &Path) -> Result<NetworkDataset> {
    let file = std::fs::File::open(path).at(path)?;
    read_matrix_dataset(std::io::BufReader::new(file), path)
}

pub fn dataset_bytes(ds: &NetworkDataset) -> Vec<u8> {
    let mut buf = Vec::new();
    write_dataset(ds, &mut buf).expect("writing to memory");
    buf
}

/// `subject_id,trait,regime` rows.
pub fn regimes_csv(ds: &NetworkDataset, regimes: &[Regime]) -> Vec<u8> {
    let mut out = String::from("subject_id,trait,regime\n");
    for (i, r) in regimes.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", ds.subject_ids()[i], ds.traits()[i], r.name());
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<NetworkDataset> {
        read_dataset(text.as_bytes(), Path::new("mem"))
    }

    #[test]
    fn round_trip_with_missing() {
        let text = "V=5 n=3\n\
                    a, 1, 0 1 ? 0 0 1 1 0 0 1\n\
                    b, 2.5, 1 1 1 1 1 1 1 1 1 1\n\
                    c, -0.125, ? ? 0 0 0 0 0 0 0 ?\n";
        let ds = parse(text).unwrap();
        assert_eq!(ds.missing_count(), 4);
        assert_eq!(String::from_utf8(dataset_bytes(&ds)).unwrap(), text.replace("\n\n", "\n"));
        let again = parse(std::str::from_utf8(&dataset_bytes(&ds)).unwrap()).unwrap();
        assert_eq!(again, ds);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse("V=4 n=2\ns1, 1, 0 1 0 0 1 0\ns2, 1, 0 1 0 2 1 0\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err}");
        let err = parse("V=4 n=2\ns1, 1, 0 1 0 0 1\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }), "{err}");
        let err = parse("V=4 n=3\ns1, 1, 0 1 0 0 1 0\n").unwrap_err();
        assert!(err.to_string().contains("announces 3"), "{err}");
        assert!(parse("V=4\n").is_err());
        assert!(parse("V=4 n=1\ns1, nan, 0 0 0 0 0 0\n").is_err());
    }

    #[test]
    fn matrix_form() {
        let good = "V=3 n=1\ns1, 2\n0 1 0\n1 0 ?\n0 ? 0\n";
        let ds = read_matrix_dataset(good.as_bytes(), Path::new("m")).unwrap();
        assert_eq!(ds.network(0).values(), &[EdgeState::Present, EdgeState::Absent, EdgeState::Missing]);
        let bad = "V=3 n=1\ns1, 2\n0 1 0\n0 0 0\n0 0 0\n";
        let err = read_matrix_dataset(bad.as_bytes(), Path::new("m")).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 4, .. }), "{err}");
        assert!(err.to_string().contains("asymmetric"));
    }

    #[test]
    fn edge_list() {
        let dir = tempfile::tempdir().unwrap();
        let e = dir.path().join("edges.csv");
        let t = dir.path().join("traits.csv");
        std::fs::write(&e, "subject_id,node_v,node_u\nb,2,1\na,3,1\na,1,3\n").unwrap();
        std::fs::write(&t, "subject_id,trait\na,1.5\nb,2\n").unwrap();
        let ds = read_edge_list(&e, &t, Some(4)).unwrap();
        assert_eq!(ds.nodes(), 4);
        assert_eq!(ds.subject_ids(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ds.edge(0, 1), EdgeState::Present);
        assert_eq!(ds.edge(1, 0), EdgeState::Present);
        assert_eq!(ds.network(0).values().iter().filter(|s| **s == EdgeState::Present).count(), 1);
        std::fs::write(&e, "c,2,1\n").unwrap();
        assert!(matches!(read_edge_list(&e, &t, None), Err(CliError::Parse { line: 1, .. })));
    }
}
