//! Undirected simple graphs in compressed adjacency form.
//!
//! Input ids are arbitrary non-negative integers. [`build_graph`] drops
//! self-loops, collapses duplicate and reversed edges, and remaps the
//! surviving ids to `0..n` in ascending order of the original id. The
//! original ids are kept so results can be reported in the file's id space.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Edges exactly as read, before sanitation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    pub pairs: Vec<(u64, u64)>,
}

impl EdgeList {
    pub fn new(pairs: Vec<(u64, u64)>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl FromIterator<(u64, u64)> for EdgeList {
    fn from_iter<I: IntoIterator<Item = (u64, u64)>>(iter: I) -> Self {
        Self {
            pairs: iter.into_iter().collect(),
        }
    }
}

/// Parses a whitespace-separated edge list. Lines starting with `#` or `%`
/// are comments; blank lines are skipped.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected two node ids, got {trimmed:?}"),
            });
        };
        let parse = |tok: &str| {
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid node id {tok:?}"),
            })
        };
        pairs.push((parse(a)?, parse(b)?));
    }
    Ok(EdgeList { pairs })
}

pub fn parse_edge_list_str(text: &str) -> Result<EdgeList> {
    parse_edge_list(text.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    original_ids: Vec<u64>,
    min_degree: usize,
    max_degree: usize,
    connected: bool,
    bipartite: bool,
}

/// Sanitizes an edge list into a [`Graph`]. Connectivity and bipartiteness
/// are recorded but not enforced; see [`Graph::check_ergodic`].
pub fn build_graph(edges: &EdgeList) -> Result<Graph> {
    let mut pairs: Vec<(u64, u64)> = edges
        .pairs
        .iter()
        .filter(|(u, v)| u != v)
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyGraph);
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut ids: Vec<u64> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!(
            "{} nodes exceed the supported maximum",
            ids.len()
        )));
    }
    let dense = |x: u64| ids.binary_search(&x).expect("id collected above");
    let local: Vec<(usize, usize)> = pairs.iter().map(|&(u, v)| (dense(u), dense(v))).collect();
    Ok(Graph::from_dense_edges(ids, &local))
}

impl Graph {
    /// Builds from dense, deduplicated, loop-free edges over `0..original_ids.len()`.
    fn from_dense_edges(original_ids: Vec<u64>, edges: &[(usize, usize)]) -> Self {
        let n = original_ids.len();
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; 2 * edges.len()];
        for &(u, v) in edges {
            neighbors[fill[u]] = v as u32;
            fill[u] += 1;
            neighbors[fill[v]] = u as u32;
            fill[v] += 1;
        }
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        let min_degree = degree.iter().copied().min().unwrap_or(0);
        let max_degree = degree.iter().copied().max().unwrap_or(0);
        let mut g = Self {
            offsets,
            neighbors,
            original_ids,
            min_degree,
            max_degree,
            connected: false,
            bipartite: false,
        };
        g.connected = g.components().1 == 1;
        g.bipartite = g.two_colorable();
        g
    }

    pub fn n(&self) -> usize {
        self.original_ids.len()
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Neighbors of `v` in ascending order.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degrees(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    pub fn min_degree(&self) -> usize {
        self.min_degree
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.m() as f64 / self.n() as f64
    }

    pub fn original_id(&self, v: usize) -> u64 {
        self.original_ids[v]
    }

    pub fn original_ids(&self) -> &[u64] {
        &self.original_ids
    }

    /// Dense id of an original id, if the node survived sanitation.
    pub fn dense_id(&self, original: u64) -> Option<usize> {
        self.original_ids.binary_search(&original).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in dense ids.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Component label per node; labels are assigned in order of the
    /// smallest node of each component.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for root in 0..n {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = count;
            queue.push_back(root);
            while let Some(u) = queue.pop_front() {
                for &w in self.neighbors(u) {
                    let w = w as usize;
                    if label[w] == usize::MAX {
                        label[w] = count;
                        queue.push_back(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// True iff the graph is 2-colorable (checked per component).
    pub fn is_bipartite(&self) -> bool {
        self.bipartite
    }

    /// Breadth-first 2-coloring.
    fn two_colorable(&self) -> bool {
        let n = self.n();
        let mut color = vec![u8::MAX; n];
        let mut queue = VecDeque::new();
        for root in 0..n {
            if color[root] != u8::MAX {
                continue;
            }
            color[root] = 0;
            queue.push_back(root);
            while let Some(u) = queue.pop_front() {
                for &w in self.neighbors(u) {
                    let w = w as usize;
                    if color[w] == u8::MAX {
                        color[w] = 1 - color[u];
                        queue.push_back(w);
                    } else if color[w] == color[u] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Induced subgraph on the largest connected component. Ties go to the
    /// component holding the smallest original id.
    pub fn largest_connected_component(&self) -> Graph {
        let (label, count) = self.components();
        if count <= 1 {
            return self.clone();
        }
        let mut sizes = vec![0usize; count];
        for &l in &label {
            sizes[l] += 1;
        }
        // Labels follow node order and dense order follows original ids, so
        // the first maximal label holds the smallest original id.
        let best = (0..count)
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .unwrap();
        let mut remap = vec![usize::MAX; self.n()];
        let mut ids = Vec::with_capacity(sizes[best]);
        for v in 0..self.n() {
            if label[v] == best {
                remap[v] = ids.len();
                ids.push(self.original_ids[v]);
            }
        }
        let edges: Vec<(usize, usize)> = self
            .edges()
            .filter(|&(u, _)| label[u] == best)
            .map(|(u, v)| (remap[u], remap[v]))
            .collect();
        Graph::from_dense_edges(ids, &edges)
    }

    /// Fails unless the graph is connected and not bipartite, which the
    /// approximate estimators need for a spectral gap.
    pub fn check_ergodic(&self) -> Result<()> {
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        if self.is_bipartite() {
            return Err(Error::Bipartite);
        }
        Ok(())
    }

    /// Writes `u v` per edge, `u < v` in original ids.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{} {}", self.original_ids[u], self.original_ids[v])?;
        }
        Ok(())
    }
}

pub fn largest_connected_component(g: &Graph) -> Graph {
    g.largest_connected_component()
}

pub fn is_bipartite(g: &Graph) -> bool {
    g.is_bipartite()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(pairs: &[(u64, u64)]) -> Graph {
        build_graph(&EdgeList::new(pairs.to_vec())).unwrap()
    }

    #[test]
    fn parses_pairs_in_order() {
        let e = parse_edge_list_str("0 1\n1 2\n").unwrap();
        assert_eq!(e.pairs, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn skips_comments() {
        let e = parse_edge_list_str("# c\n5 7\n% other\n\n").unwrap();
        assert_eq!(e.pairs, vec![(5, 7)]);
    }

    #[test]
    fn reports_line_of_bad_token() {
        match parse_edge_list_str("0 1\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_edge_list_str("0 1 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_edge_list_str("-1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn dedupes_and_drops_loops() {
        let g = graph(&[(0, 1), (1, 0), (1, 1)]);
        assert_eq!((g.n(), g.m()), (2, 1));
    }

    #[test]
    fn triangle() {
        let g = graph(&[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(g.degrees().collect::<Vec<_>>(), vec![2, 2, 2]);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn remaps_sparse_ids() {
        let g = graph(&[(10, 20)]);
        assert_eq!((g.n(), g.m()), (2, 1));
        assert_eq!(g.dense_id(10), Some(0));
        assert_eq!(g.dense_id(20), Some(1));
        assert_eq!(g.original_id(1), 20);
        assert_eq!(g.dense_id(15), None);
    }

    #[test]
    fn empty_after_sanitation() {
        assert!(matches!(
            build_graph(&EdgeList::new(vec![(3, 3)])),
            Err(Error::EmptyGraph)
        ));
        assert!(matches!(
            build_graph(&EdgeList::default()),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn lcc_picks_triangle() {
        let g = graph(&[(0, 1), (1, 2), (2, 0), (7, 8)]);
        let lcc = g.largest_connected_component();
        assert_eq!((lcc.n(), lcc.m()), (3, 3));
        assert_eq!(lcc.original_ids(), &[0, 1, 2]);
    }

    #[test]
    fn lcc_of_connected_is_identity() {
        let g = graph(&[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(g.largest_connected_component(), g);
    }

    #[test]
    fn lcc_tie_goes_to_smallest_id() {
        let g = graph(&[(2, 3), (0, 1)]);
        let lcc = g.largest_connected_component();
        assert_eq!(lcc.original_ids(), &[0, 1]);
        let g = graph(&[(9, 5), (1, 4)]);
        assert_eq!(g.largest_connected_component().original_ids(), &[1, 4]);
    }

    #[test]
    fn bipartiteness() {
        assert!(!graph(&[(0, 1), (1, 2), (2, 0)]).is_bipartite());
        assert!(graph(&[(0, 1), (1, 2)]).is_bipartite());
        assert!(!graph(&[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).is_bipartite());
        assert!(graph(&[(0, 1), (1, 2), (2, 3), (3, 0)]).is_bipartite());
    }

    #[test]
    fn ergodic_check() {
        assert!(graph(&[(0, 1), (1, 2), (2, 0)]).check_ergodic().is_ok());
        assert!(matches!(
            graph(&[(0, 1), (1, 2)]).check_ergodic(),
            Err(Error::Bipartite)
        ));
        assert!(matches!(
            graph(&[(0, 1), (1, 2), (2, 0), (5, 6)]).check_ergodic(),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn writer_emits_original_ids_low_first() {
        let g = graph(&[(20, 10), (30, 10)]);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "10 20\n10 30\n");
    }

    proptest! {
        #[test]
        fn invariants_and_round_trip(pairs in prop::collection::vec((0u64..40, 0u64..40), 1..120)) {
            let edges = EdgeList::new(pairs);
            let Ok(g) = build_graph(&edges) else {
                return Ok(());
            };
            let g = g.largest_connected_component();
            prop_assert_eq!(g.degrees().sum::<usize>(), 2 * g.m());
            for v in 0..g.n() {
                let nb = g.neighbors(v);
                prop_assert!(!nb.is_empty());
                prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
                for &w in nb {
                    prop_assert!(w as usize != v);
                    prop_assert!(g.has_edge(w as usize, v));
                }
            }
            prop_assert_eq!(g.min_degree(), g.degrees().min().unwrap());

            let mut text = Vec::new();
            g.write_edge_list(&mut text).unwrap();
            let again = build_graph(&parse_edge_list(text.as_slice()).unwrap()).unwrap();
            prop_assert_eq!(again, g);
        }
    }
}
