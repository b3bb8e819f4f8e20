//! Partition mining from a category hierarchy.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::io::BufRead;

use super::parse::{PartitionSpec, Side};
use crate::error::{Error, Result};
use crate::graph::TopicInfo;

/// Category → subcategory and category → member article relations.
#[derive(Clone, Debug, Default)]
pub struct CategoryGraph {
    subcats: HashMap<String, Vec<String>>,
    members: HashMap<String, Vec<String>>,
    categories: HashSet<String>,
}

impl CategoryGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_subcategory(&mut self, parent: &str, child: &str) {
        self.categories.insert(parent.to_string());
        self.categories.insert(child.to_string());
        self.subcats
            .entry(parent.to_string())
            .or_default()
            .push(child.to_string());
    }

    pub fn add_member(&mut self, category: &str, article: &str) {
        self.categories.insert(category.to_string());
        self.members
            .entry(category.to_string())
            .or_default()
            .push(article.to_string());
    }

    pub fn contains(&self, category: &str) -> bool {
        self.categories.contains(category)
    }

    /// Categories reachable from `seed` through subcategories whose names
    /// contain at least one keyword (case-insensitive). The seed is always
    /// admitted; a rejected category is not descended into. An empty keyword
    /// list admits everything.
    pub fn admitted_categories(&self, seed: &str, keywords: &[String]) -> Result<BTreeSet<String>> {
        if !self.contains(seed) {
            return Err(Error::UnknownSeed(seed.to_string()));
        }
        let keywords: Vec<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
        let admits = |name: &str| {
            keywords.is_empty() || {
                let lower = name.to_lowercase();
                keywords.iter().any(|k| lower.contains(k.as_str()))
            }
        };
        let mut seen: HashSet<&str> = HashSet::new();
        let mut admitted = BTreeSet::new();
        let mut queue = VecDeque::from([seed]);
        seen.insert(seed);
        while let Some(cat) = queue.pop_front() {
            admitted.insert(cat.to_string());
            for child in self.subcats.get(cat).into_iter().flatten() {
                if admits(child) && seen.insert(child.as_str()) {
                    queue.push_back(child.as_str());
                }
            }
        }
        Ok(admitted)
    }

    /// Articles filed under any admitted category.
    pub fn closure_members(&self, seed: &str, keywords: &[String]) -> Result<BTreeSet<String>> {
        let cats = self.admitted_categories(seed, keywords)?;
        Ok(cats
            .iter()
            .flat_map(|c| self.members.get(c).into_iter().flatten())
            .cloned()
            .collect())
    }
}

/// Reads `parent \t {subcat|member} \t child` lines.
pub fn parse_category_file<R: BufRead>(reader: R, source_name: &str) -> Result<CategoryGraph> {
    let mut g = CategoryGraph::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 || f[0].is_empty() || f[2].is_empty() {
            return Err(Error::parse(source_name, i + 1, "expected `parent\\t{subcat|member}\\tchild`"));
        }
        match f[1] {
            "subcat" => g.add_subcategory(f[0], f[2]),
            "member" => g.add_member(f[0], f[2]),
            other => {
                return Err(Error::parse(source_name, i + 1, format!("unknown relation {other:?}")));
            }
        }
    }
    Ok(g)
}

/// Builds both partitions from their seed categories. Articles reached from
/// both seeds end up in the overlap set.
pub fn mine_partitions(
    cats: &CategoryGraph,
    topic: TopicInfo,
    seed_p: &str,
    seed_pbar: &str,
    keywords_p: &[String],
    keywords_pbar: &[String],
) -> Result<PartitionSpec> {
    let p = cats.closure_members(seed_p, keywords_p)?;
    let pbar = cats.closure_members(seed_pbar, keywords_pbar)?;
    let mut spec = PartitionSpec::new(topic);
    for name in &p {
        spec.assign(name, Side::P);
    }
    for name in &pbar {
        spec.assign(name, Side::PBar);
    }
    Ok(spec)
}
