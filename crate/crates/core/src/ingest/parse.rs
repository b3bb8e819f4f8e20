//! Line-oriented TSV readers for the input formats.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::TopicInfo;

/// Iterates non-empty, non-comment lines with their 1-based line numbers.
fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(Error::Io(e))),
        Ok(l) => {
            let l = l.strip_suffix('\r').map(str::to_string).unwrap_or(l);
            if l.trim().is_empty() || l.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, l)))
            }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawEdge {
    pub src: u32,
    pub dst: u32,
    pub position: Option<u32>,
}

/// The unfiltered hyperlink graph, with names interned in order of first
/// appearance and edges kept in order of first appearance.
#[derive(Clone, Debug, Default)]
pub struct RawGraph {
    names: Vec<String>,
    index: HashMap<String, u32>,
    edges: Vec<RawEdge>,
    edge_slot: HashMap<(u32, u32), usize>,
}

impl RawGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = u32::try_from(self.names.len()).expect("too many nodes");
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    /// Adds a link; self-loops are dropped and a repeated pair keeps the
    /// smaller position rank. Returns whether a new edge was created.
    pub fn add_edge(&mut self, src: &str, dst: &str, position: Option<u32>) -> bool {
        let s = self.intern(src);
        let d = self.intern(dst);
        if s == d {
            return false;
        }
        match self.edge_slot.get(&(s, d)) {
            Some(&slot) => {
                let e = &mut self.edges[slot];
                e.position = match (e.position, position) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                false
            }
            None => {
                self.edge_slot.insert((s, d), self.edges.len());
                self.edges.push(RawEdge { src: s, dst: d, position });
                true
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn edges(&self) -> &[RawEdge] {
        &self.edges
    }
}

/// Reads `src \t dst [\t position_rank]` lines.
pub fn parse_edge_list<R: BufRead>(reader: R, source_name: &str) -> Result<RawGraph> {
    let mut g = RawGraph::new();
    for item in data_lines(reader) {
        let (ln, line) = item?;
        let fields: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::parse(
                source_name,
                ln,
                format!("expected 2 or 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::parse(source_name, ln, "empty node name"));
        }
        let position = match fields.get(2) {
            None | Some(&"") => None,
            Some(p) => Some(p.trim().parse::<u32>().map_err(|_| {
                Error::parse(
                    source_name,
                    ln,
                    format!("position rank {p:?} is not a non-negative integer"),
                )
            })?),
        };
        g.add_edge(fields[0], fields[1], position);
    }
    Ok(g)
}

/// Average observed clicks per (source, target) page pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClickCounts {
    by_source: HashMap<String, HashMap<String, f64>>,
}

impl ClickCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, src: &str, dst: &str, count: f64) -> Result<()> {
        if !count.is_finite() || count < 0.0 {
            return Err(Error::NegativeClicks {
                src: src.to_string(),
                dst: dst.to_string(),
                count,
            });
        }
        self.by_source
            .entry(src.to_string())
            .or_default()
            .insert(dst.to_string(), count);
        Ok(())
    }

    pub fn get(&self, src: &str, dst: &str) -> Option<f64> {
        self.by_source.get(src)?.get(dst).copied()
    }

    pub fn len(&self) -> usize {
        self.by_source.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.by_source.iter().flat_map(|(s, m)| {
            m.iter().map(move |(d, &c)| (s.as_str(), d.as_str(), c))
        })
    }

    /// Per-pair arithmetic mean over the periods in which the pair appears.
    pub fn average<'a>(periods: impl IntoIterator<Item = &'a ClickCounts>) -> ClickCounts {
        let mut acc: HashMap<(&str, &str), (f64, u32)> = HashMap::new();
        for period in periods {
            for (s, d, c) in period.iter() {
                let slot = acc.entry((s, d)).or_insert((0.0, 0));
                slot.0 += c;
                slot.1 += 1;
            }
        }
        let mut out = ClickCounts::new();
        for ((s, d), (sum, k)) in acc {
            out.by_source
                .entry(s.to_string())
                .or_default()
                .insert(d.to_string(), sum / f64::from(k));
        }
        out
    }
}

/// Reads one period of the public clickstream (`prev \t curr \t type \t n`),
/// keeping only `link` rows.
pub fn parse_clickstream<R: BufRead>(reader: R, source_name: &str) -> Result<ClickCounts> {
    let mut out = ClickCounts::new();
    for item in data_lines(reader) {
        let (ln, line) = item?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                source_name,
                ln,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let n: f64 = fields[3]
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| {
                Error::parse(source_name, ln, format!("click count {:?} is not a non-negative number", fields[3]))
            })?;
        if fields[2] != "link" || fields[0] == fields[1] {
            continue;
        }
        let prev = out.get(fields[0], fields[1]).unwrap_or(0.0);
        out.insert(fields[0], fields[1], prev + n)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    P,
    PBar,
}

/// Assignment of page names to the two sides of a topic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PartitionSpec {
    pub topic: TopicInfo,
    assignments: BTreeMap<String, Side>,
    overlap: BTreeSet<String>,
}

impl PartitionSpec {
    pub fn new(topic: TopicInfo) -> Self {
        PartitionSpec {
            topic,
            ..Default::default()
        }
    }

    /// Records `name` on `side`; a name seen on both sides becomes overlap.
    pub fn assign(&mut self, name: &str, side: Side) {
        if self.overlap.contains(name) {
            return;
        }
        match self.assignments.get(name) {
            Some(&prev) if prev != side => {
                self.assignments.remove(name);
                self.overlap.insert(name.to_string());
            }
            Some(_) => {}
            None => {
                self.assignments.insert(name.to_string(), side);
            }
        }
    }

    pub fn side(&self, name: &str) -> Option<Side> {
        self.assignments.get(name).copied()
    }

    pub fn assignments(&self) -> impl Iterator<Item = (&str, Side)> {
        self.assignments.iter().map(|(n, &s)| (n.as_str(), s))
    }

    pub fn members(&self, side: Side) -> impl Iterator<Item = &str> {
        self.assignments
            .iter()
            .filter(move |(_, &s)| s == side)
            .map(|(n, _)| n.as_str())
    }

    pub fn overlap(&self) -> &BTreeSet<String> {
        &self.overlap
    }
}

/// Reads `name \t {P|PBAR}` lines.
pub fn parse_partition_file<R: BufRead>(
    reader: R,
    source_name: &str,
    topic: TopicInfo,
) -> Result<PartitionSpec> {
    let mut spec = PartitionSpec::new(topic);
    for item in data_lines(reader) {
        let (ln, line) = item?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 || fields[0].is_empty() {
            return Err(Error::parse(source_name, ln, "expected `name\\t{P|PBAR}`"));
        }
        let side = match fields[1].trim() {
            "P" => Side::P,
            "PBAR" => Side::PBar,
            other => {
                return Err(Error::parse(
                    source_name,
                    ln,
                    format!("unknown partition {other:?}, expected P or PBAR"),
                ))
            }
        };
        spec.assign(fields[0], side);
    }
    Ok(spec)
}
