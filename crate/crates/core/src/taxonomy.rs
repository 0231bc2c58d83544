//! Label hierarchy: construction, validation and structural queries.
//!
//! A [`Taxonomy`] is an immutable rooted tree over class names. Leaves are the
//! fine-grained classes; the distinct parents of leaves form the coarse level.
//! Node heights count edges on the longest downward path to a leaf, so every
//! leaf has height 0 and the LCA height of two distinct leaves is at least 1.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::riskmin::CostMatrix;

/// Dense index into a taxonomy's node table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("EmptyInput: taxonomy needs at least one child/parent edge")]
    EmptyInput,
    #[error("EmptyName: edge {index} has an empty node name")]
    EmptyName { index: usize },
    #[error("CycleDetected: parent links form a cycle through {}", .nodes.join(" -> "))]
    CycleDetected { nodes: Vec<String> },
    #[error("MultipleRoots: nodes without a parent: {}", .roots.join(", "))]
    MultipleRoots { roots: Vec<String> },
    #[error("NodeWithTwoParents: {node} has parents {first} and {second}")]
    NodeWithTwoParents {
        node: String,
        first: String,
        second: String,
    },
    #[error("InvalidNode: {0} is not a node of this taxonomy")]
    InvalidNode(NodeId),
    #[error("UnknownNode: no node named {0:?}")]
    UnknownNode(String),
    #[error("NotALeaf: {0} is not a leaf")]
    NotALeaf(String),
    #[error("DepthOutOfRange: {node} lies at depth {node_depth}, requested depth {requested}")]
    DepthOutOfRange {
        node: String,
        node_depth: usize,
        requested: usize,
    },
    #[error("NonLeveledTree: leaves lie at different depths ({first} at {first_depth}, {other} at {other_depth})")]
    NonLeveledTree {
        first: String,
        first_depth: usize,
        other: String,
        other_depth: usize,
    },
    #[error("InvalidOrder: {which}: {reason}")]
    InvalidOrder { which: &'static str, reason: String },
}

/// Immutable label hierarchy.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    names: Vec<String>,
    parents: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    root: NodeId,
    leaf_order: Vec<NodeId>,
    coarse_order: Vec<NodeId>,
    depth: Vec<usize>,
    height: Vec<usize>,
    by_name: HashMap<String, NodeId>,
    leaf_pos: Vec<Option<usize>>,
    coarse_pos: Vec<Option<usize>>,
}

/// Builds a taxonomy from `(child, parent)` edges with lexicographic leaf and
/// coarse orderings.
pub fn build_taxonomy<S: AsRef<str>>(edges: &[(S, S)]) -> Result<Taxonomy, TaxonomyError> {
    build_taxonomy_with_orders(edges, None, None)
}

/// Builds a taxonomy, overriding the default column orderings when given.
///
/// `leaf_order` must list every leaf exactly once and `coarse_order` every
/// distinct parent-of-leaf exactly once.
pub fn build_taxonomy_with_orders<S: AsRef<str>>(
    edges: &[(S, S)],
    leaf_order: Option<&[String]>,
    coarse_order: Option<&[String]>,
) -> Result<Taxonomy, TaxonomyError> {
    if edges.is_empty() {
        return Err(TaxonomyError::EmptyInput);
    }

    let mut parent_of: BTreeMap<&str, &str> = BTreeMap::new();
    let mut all: BTreeSet<&str> = BTreeSet::new();
    for (index, (child, parent)) in edges.iter().enumerate() {
        let (child, parent) = (child.as_ref(), parent.as_ref());
        if child.is_empty() || parent.is_empty() {
            return Err(TaxonomyError::EmptyName { index });
        }
        if child == parent {
            return Err(TaxonomyError::CycleDetected {
                nodes: vec![child.to_string(), child.to_string()],
            });
        }
        all.insert(child);
        all.insert(parent);
        match parent_of.get(child) {
            Some(&existing) if existing != parent => {
                return Err(TaxonomyError::NodeWithTwoParents {
                    node: child.to_string(),
                    first: existing.to_string(),
                    second: parent.to_string(),
                });
            }
            _ => {
                parent_of.insert(child, parent);
            }
        }
    }

    // Ids follow lexicographic name order so the same edge set always yields
    // the same node table.
    let names: Vec<String> = all.iter().map(|s| s.to_string()).collect();
    let by_name: HashMap<String, NodeId> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), NodeId(i)))
        .collect();
    let n = names.len();
    let mut parents = vec![None; n];
    let mut children = vec![Vec::new(); n];
    for (child, parent) in &parent_of {
        let c = by_name[*child];
        let p = by_name[*parent];
        parents[c.0] = Some(p);
        children[p.0].push(c);
    }
    for list in &mut children {
        list.sort();
    }

    let roots: Vec<NodeId> = (0..n)
        .filter(|&i| parents[i].is_none())
        .map(NodeId)
        .collect();
    if roots.len() > 1 {
        return Err(TaxonomyError::MultipleRoots {
            roots: roots.iter().map(|r| names[r.0].clone()).collect(),
        });
    }

    let mut depth = vec![usize::MAX; n];
    let mut bfs = Vec::with_capacity(n);
    if let Some(&root) = roots.first() {
        let mut queue = VecDeque::from([root]);
        depth[root.0] = 0;
        while let Some(id) = queue.pop_front() {
            bfs.push(id);
            for &c in &children[id.0] {
                depth[c.0] = depth[id.0] + 1;
                queue.push_back(c);
            }
        }
    }
    if bfs.len() < n {
        // Every unreached node has a parent, so following parents from it must
        // revisit a node.
        let start = (0..n).find(|&i| depth[i] == usize::MAX).unwrap();
        return Err(TaxonomyError::CycleDetected {
            nodes: find_cycle(start, &parents, &names),
        });
    }
    let root = roots[0];

    let mut height = vec![0usize; n];
    for &id in bfs.iter().rev() {
        if let Some(p) = parents[id.0] {
            height[p.0] = height[p.0].max(height[id.0] + 1);
        }
    }

    let default_leaves: Vec<NodeId> = (0..n)
        .filter(|&i| children[i].is_empty())
        .map(NodeId)
        .collect();
    let default_coarse: Vec<NodeId> = default_leaves
        .iter()
        .filter_map(|l| parents[l.0])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let leaf_order = match leaf_order {
        Some(order) => resolve_order("leaf_order", order, &default_leaves, &by_name)?,
        None => default_leaves,
    };
    let coarse_order = match coarse_order {
        Some(order) => resolve_order("coarse_order", order, &default_coarse, &by_name)?,
        None => default_coarse,
    };

    let mut leaf_pos = vec![None; n];
    for (i, l) in leaf_order.iter().enumerate() {
        leaf_pos[l.0] = Some(i);
    }
    let mut coarse_pos = vec![None; n];
    for (i, c) in coarse_order.iter().enumerate() {
        coarse_pos[c.0] = Some(i);
    }

    Ok(Taxonomy {
        names,
        parents,
        children,
        root,
        leaf_order,
        coarse_order,
        depth,
        height,
        by_name,
        leaf_pos,
        coarse_pos,
    })
}

fn find_cycle(start: usize, parents: &[Option<NodeId>], names: &[String]) -> Vec<String> {
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut path = Vec::new();
    let mut cur = start;
    loop {
        if let Some(&at) = seen.get(&cur) {
            let mut cycle: Vec<String> = path[at..]
                .iter()
                .map(|&i: &usize| names[i].clone())
                .collect();
            cycle.push(names[cur].clone());
            return cycle;
        }
        seen.insert(cur, path.len());
        path.push(cur);
        match parents[cur] {
            Some(p) => cur = p.0,
            None => unreachable!("node reachable from a root is never on a cycle walk"),
        }
    }
}

fn resolve_order(
    which: &'static str,
    order: &[String],
    expected: &[NodeId],
    by_name: &HashMap<String, NodeId>,
) -> Result<Vec<NodeId>, TaxonomyError> {
    let expected_set: BTreeSet<NodeId> = expected.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(order.len());
    for name in order {
        let id = *by_name
            .get(name)
            .ok_or_else(|| TaxonomyError::InvalidOrder {
                which,
                reason: format!("unknown node {name:?}"),
            })?;
        if !expected_set.contains(&id) {
            return Err(TaxonomyError::InvalidOrder {
                which,
                reason: format!("{name:?} does not belong to this level"),
            });
        }
        if !seen.insert(id) {
            return Err(TaxonomyError::InvalidOrder {
                which,
                reason: format!("{name:?} listed twice"),
            });
        }
        out.push(id);
    }
    if out.len() != expected.len() {
        let missing = expected.iter().find(|id| !seen.contains(id)).unwrap();
        return Err(TaxonomyError::InvalidOrder {
            which,
            reason: format!(
                "missing {:?}",
                by_name.iter().find(|(_, v)| *v == missing).unwrap().0
            ),
        });
    }
    Ok(out)
}

impl Taxonomy {
    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_order.len()
    }

    pub fn coarse_count(&self) -> usize {
        self.coarse_order.len()
    }

    /// Leaves in fine-class column order.
    pub fn leaf_order(&self) -> &[NodeId] {
        &self.leaf_order
    }

    /// Distinct parents of leaves in coarse-class column order.
    pub fn coarse_order(&self) -> &[NodeId] {
        &self.coarse_order
    }

    pub fn leaf_names(&self) -> Vec<String> {
        self.leaf_order
            .iter()
            .map(|&l| self.names[l.0].clone())
            .collect()
    }

    pub fn coarse_names(&self) -> Vec<String> {
        self.coarse_order
            .iter()
            .map(|&c| self.names[c.0].clone())
            .collect()
    }

    fn check(&self, n: NodeId) -> Result<(), TaxonomyError> {
        if n.0 < self.names.len() {
            Ok(())
        } else {
            Err(TaxonomyError::InvalidNode(n))
        }
    }

    /// Name of a node. Panics on an id from another taxonomy.
    pub fn name(&self, n: NodeId) -> &str {
        &self.names[n.0]
    }

    pub fn id_of(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub fn parent_of(&self, n: NodeId) -> Result<Option<NodeId>, TaxonomyError> {
        self.check(n)?;
        Ok(self.parents[n.0])
    }

    pub fn children(&self, n: NodeId) -> Result<&[NodeId], TaxonomyError> {
        self.check(n)?;
        Ok(&self.children[n.0])
    }

    pub fn is_leaf(&self, n: NodeId) -> bool {
        n.0 < self.names.len() && self.children[n.0].is_empty()
    }

    pub fn depth(&self, n: NodeId) -> Result<usize, TaxonomyError> {
        self.check(n)?;
        Ok(self.depth[n.0])
    }

    pub fn height(&self, n: NodeId) -> Result<usize, TaxonomyError> {
        self.check(n)?;
        Ok(self.height[n.0])
    }

    /// Largest leaf depth, equal to the root's height.
    pub fn max_depth(&self) -> usize {
        self.height[self.root.0]
    }

    /// True when every leaf sits at the same depth.
    pub fn is_leveled(&self) -> bool {
        self.leveled_depth().is_ok()
    }

    fn leveled_depth(&self) -> Result<usize, TaxonomyError> {
        let first = self.leaf_order[0];
        let d = self.depth[first.0];
        match self.leaf_order.iter().find(|l| self.depth[l.0] != d) {
            None => Ok(d),
            Some(other) => Err(TaxonomyError::NonLeveledTree {
                first: self.names[first.0].clone(),
                first_depth: d,
                other: self.names[other.0].clone(),
                other_depth: self.depth[other.0],
            }),
        }
    }

    /// Column of `n` in the fine-level score matrix.
    pub fn leaf_index(&self, n: NodeId) -> Option<usize> {
        self.leaf_pos.get(n.0).copied().flatten()
    }

    /// Column of `n` in the coarse-level score matrix.
    pub fn coarse_index(&self, n: NodeId) -> Option<usize> {
        self.coarse_pos.get(n.0).copied().flatten()
    }

    fn require_leaf(&self, n: NodeId) -> Result<(), TaxonomyError> {
        self.check(n)?;
        if self.children[n.0].is_empty() {
            Ok(())
        } else {
            Err(TaxonomyError::NotALeaf(self.names[n.0].clone()))
        }
    }

    /// Lowest common ancestor of any two nodes.
    pub fn lca(&self, a: NodeId, b: NodeId) -> Result<NodeId, TaxonomyError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.lca_unchecked(a, b))
    }

    fn lca_unchecked(&self, mut a: NodeId, mut b: NodeId) -> NodeId {
        while self.depth[a.0] > self.depth[b.0] {
            a = self.parents[a.0].unwrap();
        }
        while self.depth[b.0] > self.depth[a.0] {
            b = self.parents[b.0].unwrap();
        }
        while a != b {
            a = self.parents[a.0].unwrap();
            b = self.parents[b.0].unwrap();
        }
        a
    }

    /// Height of the lowest common ancestor of two leaves.
    pub fn lca_height(&self, a: NodeId, b: NodeId) -> Result<usize, TaxonomyError> {
        self.require_leaf(a)?;
        self.require_leaf(b)?;
        Ok(self.height[self.lca_unchecked(a, b).0])
    }

    /// LCA height addressed by fine-class columns. Panics if either column is
    /// out of range.
    pub fn leaf_lca_height(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.leaf_order[i], self.leaf_order[j]);
        if a == b {
            return 0;
        }
        self.height[self.lca_unchecked(a, b).0]
    }

    /// Leaf × leaf LCA heights in `leaf_order`.
    pub fn cost_matrix(&self) -> CostMatrix {
        let n = self.leaf_count();
        let mut values = vec![0u32; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let h = self.leaf_lca_height(i, j) as u32;
                values[i * n + j] = h;
                values[j * n + i] = h;
            }
        }
        CostMatrix::new(n, values).expect("tree LCA heights always form a valid cost matrix")
    }

    /// For each fine column, the coarse column of its parent.
    pub fn parent_index_map(&self) -> Vec<usize> {
        self.leaf_order
            .iter()
            .map(|l| {
                let p = self.parents[l.0].expect("a leaf always has a parent");
                self.coarse_pos[p.0].expect("parents of leaves are coarse classes")
            })
            .collect()
    }

    pub fn ancestor_at_depth(&self, leaf: NodeId, d: usize) -> Result<NodeId, TaxonomyError> {
        self.require_leaf(leaf)?;
        let node_depth = self.depth[leaf.0];
        if d > node_depth {
            return Err(TaxonomyError::DepthOutOfRange {
                node: self.names[leaf.0].clone(),
                node_depth,
                requested: d,
            });
        }
        let mut cur = leaf;
        for _ in d..node_depth {
            cur = self.parents[cur.0].unwrap();
        }
        Ok(cur)
    }

    /// Nodes at depth `d`, ordered by first appearance as an ancestor while
    /// walking `leaf_order`. This is the canonical column order of a depth-`d`
    /// score matrix.
    pub fn level_order(&self, d: usize) -> Vec<NodeId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &l in &self.leaf_order {
            if let Ok(a) = self.ancestor_at_depth(l, d) {
                if seen.insert(a) {
                    out.push(a);
                }
            }
        }
        out
    }

    /// For each fine column, the column of its depth-`d` ancestor within
    /// [`Taxonomy::level_order`]. Requires a leveled tree.
    pub fn ancestor_index_map(&self, d: usize) -> Result<Vec<usize>, TaxonomyError> {
        self.leveled_depth()?;
        let order = self.level_order(d);
        let pos: HashMap<NodeId, usize> = order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        self.leaf_order
            .iter()
            .map(|&l| self.ancestor_at_depth(l, d).map(|a| pos[&a]))
            .collect()
    }

    /// `(child, parent)` edges in node-id order.
    pub fn edges(&self) -> Vec<(String, String)> {
        (0..self.names.len())
            .filter_map(|i| {
                self.parents[i].map(|p| (self.names[i].clone(), self.names[p.0].clone()))
            })
            .collect()
    }

    /// Name → parent-name map covering every node (root maps to `None`).
    pub fn parent_map(&self) -> BTreeMap<String, Option<String>> {
        (0..self.names.len())
            .map(|i| {
                (
                    self.names[i].clone(),
                    self.parents[i].map(|p| self.names[p.0].clone()),
                )
            })
            .collect()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len()).map(NodeId)
    }
}

/// Same names, parent links and column orders.
impl PartialEq for Taxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.parent_map() == other.parent_map()
            && self.leaf_names() == other.leaf_names()
            && self.coarse_names() == other.coarse_names()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fixture() -> Taxonomy {
        build_taxonomy(&[
            ("rose", "flower"),
            ("tulip", "flower"),
            ("bus", "vehicle"),
            ("car", "vehicle"),
            ("flower", "entity"),
            ("vehicle", "entity"),
        ])
        .unwrap()
    }

    fn fixture_flip_order() -> Taxonomy {
        let order: Vec<String> = ["rose", "tulip", "bus", "car"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        build_taxonomy_with_orders(
            &[
                ("rose", "flower"),
                ("tulip", "flower"),
                ("bus", "vehicle"),
                ("car", "vehicle"),
                ("flower", "entity"),
                ("vehicle", "entity"),
            ],
            Some(&order),
            None,
        )
        .unwrap()
    }

    fn id(t: &Taxonomy, name: &str) -> NodeId {
        t.id_of(name).unwrap()
    }

    #[test]
    fn builds_seven_node_fixture() {
        let t = fixture();
        assert_eq!(t.node_count(), 7);
        assert_eq!(t.name(t.root()), "entity");
        assert_eq!(t.leaf_count(), 4);
        assert_eq!(t.coarse_names(), vec!["flower", "vehicle"]);
        assert_eq!(t.leaf_names(), vec!["bus", "car", "rose", "tulip"]);
        assert_eq!(t.max_depth(), 2);
        assert!(t.is_leveled());
    }

    #[test]
    fn parent_queries() {
        let t = fixture();
        assert_eq!(t.parent_of(id(&t, "rose")).unwrap(), Some(id(&t, "flower")));
        assert_eq!(t.parent_of(t.root()).unwrap(), None);
        assert_eq!(
            t.parent_of(NodeId(99)),
            Err(TaxonomyError::InvalidNode(NodeId(99)))
        );
    }

    #[test]
    fn depths_and_heights() {
        let t = fixture();
        assert_eq!(t.depth(t.root()).unwrap(), 0);
        assert_eq!(t.height(t.root()).unwrap(), 2);
        assert_eq!(t.depth(id(&t, "flower")).unwrap(), 1);
        assert_eq!(t.height(id(&t, "flower")).unwrap(), 1);
        assert_eq!(t.height(id(&t, "rose")).unwrap(), 0);
    }

    #[test]
    fn lca_heights_on_fixture() {
        let t = fixture();
        let (rose, tulip, bus) = (id(&t, "rose"), id(&t, "tulip"), id(&t, "bus"));
        assert_eq!(t.lca_height(rose, rose).unwrap(), 0);
        assert_eq!(t.lca_height(rose, tulip).unwrap(), 1);
        assert_eq!(t.lca_height(rose, bus).unwrap(), 2);
        assert_eq!(t.lca_height(bus, rose).unwrap(), 2);
        assert!(matches!(
            t.lca_height(rose, id(&t, "flower")),
            Err(TaxonomyError::NotALeaf(n)) if n == "flower"
        ));
    }

    #[test]
    fn cost_matrix_in_flip_order() {
        let t = fixture_flip_order();
        let c = t.cost_matrix();
        let rows: Vec<Vec<u32>> = (0..4).map(|i| c.row(i).to_vec()).collect();
        assert_eq!(
            rows,
            vec![
                vec![0, 1, 2, 2],
                vec![1, 0, 2, 2],
                vec![2, 2, 0, 1],
                vec![2, 2, 1, 0]
            ]
        );
        assert_eq!(t.parent_index_map(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn star_taxonomy() {
        let t = build_taxonomy(&[("a", "r"), ("b", "r"), ("c", "r")]).unwrap();
        let c = t.cost_matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c.get(i, j), u32::from(i != j));
            }
        }
        assert_eq!(t.parent_index_map(), vec![0, 0, 0]);
        assert_eq!(t.coarse_names(), vec!["r"]);
    }

    #[test]
    fn ancestor_at_depth_walks_up() {
        let t = fixture();
        let rose = id(&t, "rose");
        assert_eq!(t.ancestor_at_depth(rose, 0).unwrap(), t.root());
        assert_eq!(t.ancestor_at_depth(rose, 1).unwrap(), id(&t, "flower"));
        assert_eq!(t.ancestor_at_depth(rose, 2).unwrap(), rose);
        assert!(matches!(
            t.ancestor_at_depth(rose, 3),
            Err(TaxonomyError::DepthOutOfRange { requested: 3, .. })
        ));
    }

    #[test]
    fn ancestor_index_map_requires_leveled_tree() {
        let t = fixture_flip_order();
        assert_eq!(t.ancestor_index_map(1).unwrap(), vec![0, 0, 1, 1]);
        assert_eq!(t.ancestor_index_map(0).unwrap(), vec![0, 0, 0, 0]);

        let ragged = build_taxonomy(&[("a", "r"), ("m", "r"), ("b", "m")]).unwrap();
        assert!(!ragged.is_leveled());
        assert!(matches!(
            ragged.ancestor_index_map(1),
            Err(TaxonomyError::NonLeveledTree { .. })
        ));
        // Two-level use is still fine on ragged trees.
        assert_eq!(ragged.coarse_names(), vec!["m", "r"]);
    }

    #[test]
    fn rejects_bad_structures() {
        assert_eq!(
            build_taxonomy::<&str>(&[]).unwrap_err(),
            TaxonomyError::EmptyInput
        );
        assert!(matches!(
            build_taxonomy(&[("a", "b"), ("b", "a")]).unwrap_err(),
            TaxonomyError::CycleDetected { .. }
        ));
        assert!(matches!(
            build_taxonomy(&[("a", "r"), ("x", "y"), ("y", "z"), ("z", "x")]).unwrap_err(),
            TaxonomyError::CycleDetected { nodes } if nodes.len() == 4
        ));
        assert_eq!(
            build_taxonomy(&[("a", "r1"), ("b", "r2")]).unwrap_err(),
            TaxonomyError::MultipleRoots {
                roots: vec!["r1".into(), "r2".into()]
            }
        );
        assert!(matches!(
            build_taxonomy(&[("a", "r"), ("a", "s"), ("s", "r")]).unwrap_err(),
            TaxonomyError::NodeWithTwoParents { node, .. } if node == "a"
        ));
        assert_eq!(
            build_taxonomy(&[("a", "")]).unwrap_err(),
            TaxonomyError::EmptyName { index: 0 }
        );
        assert!(matches!(
            build_taxonomy(&[("a", "a")]).unwrap_err(),
            TaxonomyError::CycleDetected { .. }
        ));
    }

    #[test]
    fn explicit_orders_are_validated() {
        let edges = [("a", "p"), ("b", "p"), ("p", "r")];
        let bad: Vec<String> = vec!["a".into(), "p".into()];
        assert!(matches!(
            build_taxonomy_with_orders(&edges, Some(&bad), None).unwrap_err(),
            TaxonomyError::InvalidOrder {
                which: "leaf_order",
                ..
            }
        ));
        let short: Vec<String> = vec!["b".into()];
        assert!(build_taxonomy_with_orders(&edges, Some(&short), None).is_err());
        let dup: Vec<String> = vec!["b".into(), "b".into()];
        assert!(build_taxonomy_with_orders(&edges, Some(&dup), None).is_err());
        let good: Vec<String> = vec!["b".into(), "a".into()];
        let t = build_taxonomy_with_orders(&edges, Some(&good), None).unwrap();
        assert_eq!(t.leaf_names(), vec!["b", "a"]);
    }

    #[test]
    fn single_child_chains_are_allowed() {
        let t = build_taxonomy(&[("a", "m"), ("m", "r"), ("b", "r")]).unwrap();
        assert_eq!(t.height(t.root()).unwrap(), 2);
        let (a, b) = (id(&t, "a"), id(&t, "b"));
        assert_eq!(t.lca_height(a, b).unwrap(), 2);
        assert_eq!(t.coarse_names(), vec!["m", "r"]);
    }
}
