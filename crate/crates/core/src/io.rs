//! Text formats: edge-list TSV, point and signal CSV, and JSON reports.
//!
//! CSV floats are written with 17 significant digits; JSON floats use the
//! shortest representation that round-trips.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::applications::{Detection, SweepTable};
use crate::error::{GspError, Result};
use crate::filtering::{FilterDesign, GraphFilter, TargetResponse};
use crate::graph::{Graph, GraphSignal, LabelSignal};
use crate::spectral::{FrequencyOrdering, SpectralBasis};

type C = Complex64;

fn parse_err(line: usize, message: impl Into<String>) -> GspError {
    GspError::Parse {
        line,
        message: message.into(),
    }
}

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// `a`, `a+bi`, `a-bi`, `bi`; `j` is accepted in place of `i`.
pub fn parse_complex(s: &str) -> Option<C> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return s.parse::<f64>().ok().map(|re| C::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| match t {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        t => t.parse::<f64>().ok(),
    };
    match split {
        Some(k) => Some(C::new(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(C::new(0.0, imag(body)?)),
    }
}

pub fn format_complex(z: C) -> String {
    if z.im == 0.0 {
        format_float(z.re)
    } else {
        let sign = if z.im.is_sign_negative() { '-' } else { '+' };
        format!("{}{sign}{}i", format_float(z.re), format_float(z.im.abs()))
    }
}

/// Edge-list TSV. Optional `# nodes: N` and `# directed: true|false`
/// comment lines precede the `src\tdst\tweight` header. With
/// `directed: false` each row is one undirected edge and is mirrored.
pub fn read_edge_list(text: &str) -> Result<Graph> {
    let mut declared_n: Option<usize> = None;
    let mut directed: Option<bool> = None;
    let mut edges: Vec<(usize, usize, C)> = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "nodes" => {
                        declared_n = Some(
                            value
                                .parse()
                                .map_err(|_| parse_err(line_no, "bad node count"))?,
                        )
                    }
                    "directed" => {
                        directed =
                            Some(value.parse().map_err(|_| {
                                parse_err(line_no, "directed must be true or false")
                            })?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !saw_header {
            saw_header = true;
            if fields.first().is_some_and(|f| f.parse::<usize>().is_err()) {
                if fields.len() < 2 || fields[0] != "src" || fields[1] != "dst" {
                    return Err(parse_err(line_no, "expected header src\\tdst[\\tweight]"));
                }
                continue;
            }
        }
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_err(
                line_no,
                format!("expected 2 or 3 tab-separated fields, got {}", fields.len()),
            ));
        }
        let src = fields[0]
            .parse::<usize>()
            .map_err(|_| parse_err(line_no, format!("bad node id {:?}", fields[0])))?;
        let dst = fields[1]
            .parse::<usize>()
            .map_err(|_| parse_err(line_no, format!("bad node id {:?}", fields[1])))?;
        let w = match fields.get(2) {
            Some(f) => {
                parse_complex(f).ok_or_else(|| parse_err(line_no, format!("bad weight {f:?}")))?
            }
            None => C::new(1.0, 0.0),
        };
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(parse_err(line_no, "non-finite weight"));
        }
        edges.push((src, dst, w));
    }
    let max_id = edges
        .iter()
        .map(|(s, d, _)| (*s).max(*d) + 1)
        .max()
        .unwrap_or(0);
    let n = match declared_n {
        Some(n) if n < max_id => {
            return Err(GspError::InvalidArgument(format!(
                "node id {} exceeds declared node count {n}",
                max_id - 1
            )))
        }
        Some(n) => n,
        None => max_id,
    };
    if n == 0 {
        return Err(GspError::InvalidArgument(
            "edge list describes no nodes".into(),
        ));
    }
    let mut a = DMatrix::from_element(n, n, C::new(0.0, 0.0));
    for &(src, dst, w) in &edges {
        a[(dst, src)] += w;
        if directed == Some(false) && src != dst {
            a[(src, dst)] += w.conj();
        }
    }
    match directed {
        Some(d) => Graph::with_directed(a, d),
        None => Graph::new(a),
    }
}

pub fn write_edge_list(g: &Graph) -> String {
    let n = g.n();
    let a = g.adjacency();
    let mut out = format!(
        "# nodes: {n}\n# directed: {}\nsrc\tdst\tweight\n",
        g.is_directed()
    );
    let zero = C::new(0.0, 0.0);
    for src in 0..n {
        for dst in 0..n {
            let w = a[(dst, src)];
            if w == zero || (!g.is_directed() && dst < src) {
                continue;
            }
            out.push_str(&format!("{src}\t{dst}\t{}\n", format_complex(w)));
        }
    }
    out
}

fn is_header(line: &str) -> bool {
    line.split(',')
        .next()
        .is_some_and(|f| f.trim().parse::<f64>().is_err())
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut first = true;
    text.lines().enumerate().filter_map(move |(i, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            return None;
        }
        if first {
            first = false;
            if is_header(l) {
                return None;
            }
        }
        Some((i + 1, l))
    })
}

/// One row of numeric coordinates per node; an optional header is skipped.
pub fn read_points(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in data_lines(text) {
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("bad coordinate {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = pts.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    line_no,
                    format!("expected {} coordinates, got {}", first.len(), row.len()),
                ));
            }
        }
        pts.push(row);
    }
    if pts.is_empty() {
        return Err(GspError::InvalidArgument("point file has no rows".into()));
    }
    Ok(pts)
}

/// Rows `node,re[,im]`, every node exactly once.
pub fn read_signal(g: &Graph, text: &str) -> Result<GraphSignal> {
    let n = g.n();
    let mut values = vec![None; n];
    for (line_no, line) in data_lines(text) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_err(line_no, "expected node,re[,im]"));
        }
        let node = fields[0]
            .parse::<usize>()
            .map_err(|_| parse_err(line_no, format!("bad node id {:?}", fields[0])))?;
        if node >= n {
            return Err(GspError::IndexOutOfRange {
                index: node,
                len: n,
            });
        }
        let re = fields[1]
            .parse::<f64>()
            .map_err(|_| parse_err(line_no, "bad real part"))?;
        let im = match fields.get(2) {
            Some(f) => f
                .parse::<f64>()
                .map_err(|_| parse_err(line_no, "bad imaginary part"))?,
            None => 0.0,
        };
        if values[node].replace(C::new(re, im)).is_some() {
            return Err(parse_err(line_no, format!("node {node} listed twice")));
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| GspError::InvalidArgument(format!("signal has no value for node {i}")))
        })
        .collect::<Result<Vec<C>>>()?;
    GraphSignal::new(g, values)
}

pub fn write_signal(s: &GraphSignal) -> String {
    let mut out = String::from("node,re,im\n");
    for (i, z) in s.values().iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{}\n",
            format_float(z.re),
            format_float(z.im)
        ));
    }
    out
}

/// Rows `node,label` with labels in `{+1, −1, 0}`; unlisted nodes are 0.
pub fn read_labels(n: usize, text: &str) -> Result<LabelSignal> {
    let mut labels = vec![0.0; n];
    for (line_no, line) in data_lines(text) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(parse_err(line_no, "expected node,label"));
        }
        let node = fields[0]
            .parse::<usize>()
            .map_err(|_| parse_err(line_no, format!("bad node id {:?}", fields[0])))?;
        if node >= n {
            return Err(GspError::IndexOutOfRange {
                index: node,
                len: n,
            });
        }
        labels[node] = fields[1]
            .parse::<f64>()
            .map_err(|_| parse_err(line_no, "bad label"))?;
    }
    LabelSignal::new(labels)
}

pub fn write_labels(l: &LabelSignal) -> String {
    let mut out = String::from("node,label\n");
    for (i, v) in l.labels().iter().enumerate() {
        out.push_str(&format!("{i},{}\n", *v as i64));
    }
    out
}

fn pair(z: C) -> [f64; 2] {
    [z.re, z.im]
}

fn pairs(zs: &[C]) -> Vec<[f64; 2]> {
    zs.iter().map(|&z| pair(z)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterFile {
    pub taps: Vec<[f64; 2]>,
}

pub fn filter_to_json(f: &GraphFilter) -> String {
    let file = FilterFile {
        taps: pairs(f.taps()),
    };
    serde_json::to_string_pretty(&file).expect("filter serializes") + "\n"
}

pub fn filter_from_json(text: &str) -> Result<GraphFilter> {
    let file: FilterFile =
        serde_json::from_str(text).map_err(|e| parse_err(e.line(), format!("filter JSON: {e}")))?;
    GraphFilter::new(file.taps.iter().map(|t| C::new(t[0], t[1])).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<[f64; 2]>,
    /// TV of the ℓ₁-normalized eigenvector, per spectral index.
    pub variations: Vec<f64>,
    /// Spectral indices from lowest to highest frequency.
    pub order: Vec<usize>,
    pub basis_condition: f64,
}

impl SpectrumReport {
    pub fn new(b: &SpectralBasis, ordering: &FrequencyOrdering) -> Self {
        SpectrumReport {
            eigenvalues: pairs(b.eigenvalues()),
            variations: (0..b.n()).map(|k| b.eigen_variation(k)).collect(),
            order: ordering.order.clone(),
            basis_condition: b.basis_condition(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AchievedResponse {
    pub frequency: [f64; 2],
    pub desired: [f64; 2],
    pub achieved: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub taps: Vec<[f64; 2]>,
    pub residual: f64,
    pub response: Vec<AchievedResponse>,
}

impl DesignReport {
    pub fn new(t: &TargetResponse, d: &FilterDesign) -> Self {
        DesignReport {
            taps: pairs(d.filter.taps()),
            residual: d.residual,
            response: t
                .frequencies()
                .iter()
                .zip(t.desired())
                .zip(&d.achieved)
                .map(|((&f, &a), &h)| AchievedResponse {
                    frequency: pair(f),
                    desired: pair(a),
                    achieved: pair(h),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offending {
    pub index: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub threshold: f64,
    pub flagged: bool,
    pub offending: Vec<Offending>,
}

impl From<&Detection> for DetectionReport {
    fn from(d: &Detection) -> Self {
        DetectionReport {
            threshold: d.threshold,
            flagged: d.flagged,
            offending: d
                .offending
                .iter()
                .map(|&(index, magnitude)| Offending { index, magnitude })
                .collect(),
        }
    }
}

pub fn write_accuracy_table(t: &SweepTable) -> String {
    let mut out = String::from("alpha,ratio,mean_accuracy,std\n");
    for r in &t.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_float(r.alpha),
            format_float(r.ratio),
            format_float(r.mean_accuracy),
            format_float(r.std)
        ));
    }
    out
}

/// Rows `rank,index,re,im,before,after`: spectral magnitudes in frequency
/// order before and after filtering.
pub fn write_spectrum_table(
    ordering: &FrequencyOrdering,
    lambdas: &[C],
    before: &[C],
    after: &[C],
) -> String {
    let mut out =
        String::from("rank,index,lambda_re,lambda_im,before_re,before_im,after_re,after_im\n");
    for (rank, &k) in ordering.order.iter().enumerate() {
        out.push_str(&format!(
            "{rank},{k},{},{},{},{},{},{}\n",
            format_float(lambdas[k].re),
            format_float(lambdas[k].im),
            format_float(before[k].re),
            format_float(before[k].im),
            format_float(after[k].re),
            format_float(after[k].im)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{cycle, path};

    #[test]
    fn complex_parsing() {
        let cases = [
            ("1.5", C::new(1.5, 0.0)),
            ("-2", C::new(-2.0, 0.0)),
            ("1+2i", C::new(1.0, 2.0)),
            ("1-2i", C::new(1.0, -2.0)),
            ("-3.5e-2+4E+1i", C::new(-0.035, 40.0)),
            ("2i", C::new(0.0, 2.0)),
            ("-i", C::new(0.0, -1.0)),
            ("0.5+j", C::new(0.5, 1.0)),
            ("1e-3-1e-4j", C::new(1e-3, -1e-4)),
        ];
        for (s, want) in cases {
            assert_eq!(parse_complex(s), Some(want), "{s}");
        }
        for bad in ["", "x", "1+", "1+2", "i1"] {
            assert!(parse_complex(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn complex_format_round_trip() {
        for z in [
            C::new(0.1, 0.0),
            C::new(-1.0 / 3.0, 2.0f64.sqrt()),
            C::new(1e-300, -7.25),
        ] {
            assert_eq!(parse_complex(&format_complex(z)), Some(z));
        }
    }

    #[test]
    fn edge_list_round_trip() {
        for g in [cycle(5).unwrap(), path(4).unwrap()] {
            let text = write_edge_list(&g);
            let back = read_edge_list(&text).unwrap();
            assert_eq!(back.adjacency(), g.adjacency());
            assert_eq!(back.is_directed(), g.is_directed());
        }
        let text = write_edge_list(&path(3).unwrap());
        assert_eq!(
            text.lines()
                .filter(|l| l.starts_with(char::is_numeric))
                .count(),
            2
        );
    }

    #[test]
    fn edge_list_defaults_and_errors() {
        let g = read_edge_list("src\tdst\n0\t1\n1\t2\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.adjacency()[(1, 0)], C::new(1.0, 0.0));
        let g = read_edge_list("# nodes: 5\nsrc\tdst\tweight\n0\t1\t2-1i\n").unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.adjacency()[(1, 0)], C::new(2.0, -1.0));
        assert!(matches!(
            read_edge_list("src\tdst\n0\tx\n"),
            Err(GspError::Parse { line: 2, .. })
        ));
        assert!(read_edge_list("# nodes: 2\nsrc\tdst\n0\t4\n").is_err());
        assert!(read_edge_list("").is_err());
    }

    #[test]
    fn signal_round_trip_and_rotation() {
        let g = cycle(3).unwrap();
        let s = GraphSignal::new(
            &g,
            vec![C::new(1.0, 0.5), C::new(0.1, 0.0), C::new(-3.0, 1e-20)],
        )
        .unwrap();
        let back = read_signal(&g, &write_signal(&s)).unwrap();
        assert_eq!(back.values(), s.values());
        let real = read_signal(&g, "node,re\n2,3\n0,1\n1,2\n").unwrap();
        assert_eq!(real.real_parts(), vec![1.0, 2.0, 3.0]);
        assert!(read_signal(&g, "node,re\n0,1\n1,2\n").is_err());
        assert!(read_signal(&g, "node,re\n0,1\n0,1\n1,2\n2,2\n").is_err());
    }

    #[test]
    fn labels_and_points() {
        let l = read_labels(4, "node,label\n0,1\n3,-1\n").unwrap();
        assert_eq!(l.labels(), &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(read_labels(4, &write_labels(&l)).unwrap(), l);
        assert!(read_labels(2, "0,2\n").is_err());
        let pts = read_points("x,y\n0,0\n1,0.5\n").unwrap();
        assert_eq!(pts, vec![vec![0.0, 0.0], vec![1.0, 0.5]]);
        assert!(read_points("0,0\n1\n").is_err());
    }

    #[test]
    fn filter_json_round_trip() {
        let f = GraphFilter::new(vec![C::new(0.1, -0.2), C::new(1.0 / 3.0, 0.0)]).unwrap();
        let text = filter_to_json(&f);
        assert_eq!(filter_from_json(&text).unwrap(), f);
        assert!(filter_from_json(r#"{"taps": []}"#).is_err());
        assert!(filter_from_json("nope").is_err());
    }
}
