//! Binary dimension trees over tensor axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::AxisSet;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub axes: AxisSet,
    /// `(left, right)` node indices; the left child holds the lower axes.
    pub children: Option<(usize, usize)>,
    pub parent: Option<usize>,
    /// Column count of the node basis. The root carries none.
    pub rank: Option<usize>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Binary tree whose root is the full axis set and whose leaves are the
/// singletons. Every internal node splits into two contiguous halves, the
/// lower axes going to the left child.
///
/// Nodes are stored in depth-first pre-order, so iterating indices in reverse
/// visits children before their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionTree {
    order: usize,
    nodes: Vec<TreeNode>,
    leaf_of_axis: Vec<usize>,
}

/// Shape of a dimension tree, independent of ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Balanced,
    /// Tensor-train chain: internal nodes `{0,1}, {0,1,2}, …`.
    Chain,
}

impl DimensionTree {
    /// Recursive halving; the left half gets the first `ceil(len/2)` axes.
    pub fn balanced(order: usize) -> Result<Self> {
        check_order(order)?;
        let mut sets = Vec::new();
        fn split(lo: usize, hi: usize, out: &mut Vec<(usize, usize)>) {
            out.push((lo, hi));
            if hi - lo > 1 {
                let mid = lo + (hi - lo).div_ceil(2);
                split(lo, mid, out);
                split(mid, hi, out);
            }
        }
        split(0, order, &mut sets);
        Self::from_ranges(order, &sets)
    }

    /// Linear tree: root `{0..n}` splits into `{0..n-1}` and `{n-1}`, and so on down.
    pub fn tensor_train(order: usize) -> Result<Self> {
        check_order(order)?;
        let mut sets = Vec::new();
        fn split(hi: usize, out: &mut Vec<(usize, usize)>) {
            out.push((0, hi));
            if hi > 1 {
                split(hi - 1, out);
                out.push((hi - 1, hi));
            }
        }
        split(order, &mut sets);
        Self::from_ranges(order, &sets)
    }

    pub fn of_kind(kind: TreeKind, order: usize) -> Result<Self> {
        match kind {
            TreeKind::Balanced => Self::balanced(order),
            TreeKind::Chain => Self::tensor_train(order),
        }
    }

    fn from_ranges(order: usize, ranges: &[(usize, usize)]) -> Result<Self> {
        let sets = ranges
            .iter()
            .map(|&(lo, hi)| AxisSet::range(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Self::from_node_sets(order, &sets)
    }

    /// Builds a tree from its node set; parent/child links are inferred.
    pub fn from_node_sets(order: usize, sets: &[AxisSet]) -> Result<Self> {
        check_order(order)?;
        let mut sets = sets.to_vec();
        sets.sort();
        sets.dedup();
        for s in &sets {
            if s.last() >= order {
                return Err(Error::Tree(format!("node {:?} exceeds order {order}", s.axes())));
            }
            if !s.is_contiguous() {
                return Err(Error::Tree(format!(
                    "node {:?} is not a contiguous axis range",
                    s.axes()
                )));
            }
        }
        let root = AxisSet::range(0, order)?;
        if !sets.contains(&root) {
            return Err(Error::Tree("missing root node".into()));
        }
        let mut nodes = Vec::with_capacity(sets.len());
        let mut leaf_of_axis = vec![usize::MAX; order];
        Self::build(&root, None, &sets, &mut nodes, &mut leaf_of_axis)?;
        if nodes.len() != sets.len() {
            return Err(Error::Tree("node set contains sets unreachable from the root".into()));
        }
        Ok(DimensionTree {
            order,
            nodes,
            leaf_of_axis,
        })
    }

    fn build(
        set: &AxisSet,
        parent: Option<usize>,
        all: &[AxisSet],
        nodes: &mut Vec<TreeNode>,
        leaf_of_axis: &mut [usize],
    ) -> Result<usize> {
        let idx = nodes.len();
        nodes.push(TreeNode {
            axes: set.clone(),
            children: None,
            parent,
            rank: None,
        });
        if set.len() == 1 {
            leaf_of_axis[set.first()] = idx;
            return Ok(idx);
        }
        // children: maximal proper subsets present in the node set
        let subsets: Vec<&AxisSet> = all
            .iter()
            .filter(|s| s.len() < set.len() && s.axes().iter().all(|a| set.contains(*a)))
            .collect();
        let maximal: Vec<&AxisSet> = subsets
            .iter()
            .copied()
            .filter(|s| {
                !subsets
                    .iter()
                    .any(|t| t.len() > s.len() && s.axes().iter().all(|a| t.contains(*a)))
            })
            .collect();
        if maximal.len() != 2 || maximal[0].len() + maximal[1].len() != set.len() {
            return Err(Error::Tree(format!(
                "node {:?} is not split into exactly two disjoint children",
                set.axes()
            )));
        }
        let (left, right) = if maximal[0].first() < maximal[1].first() {
            (maximal[0], maximal[1])
        } else {
            (maximal[1], maximal[0])
        };
        if left.last() + 1 != right.first() {
            return Err(Error::Tree(format!("children of {:?} do not partition it", set.axes())));
        }
        let l = Self::build(left, Some(idx), all, nodes, leaf_of_axis)?;
        let r = Self::build(right, Some(idx), all, nodes, leaf_of_axis)?;
        nodes[idx].children = Some((l, r));
        Ok(idx)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &TreeNode {
        &self.nodes[idx]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub const ROOT: usize = 0;

    pub fn root_children(&self) -> (usize, usize) {
        self.nodes[Self::ROOT].children.expect("order >= 2 root has children")
    }

    pub fn leaf_of_axis(&self, axis: usize) -> usize {
        self.leaf_of_axis[axis]
    }

    /// Internal nodes other than the root, in pre-order.
    pub fn internal_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (1..self.nodes.len()).filter(|&i| !self.nodes[i].is_leaf())
    }

    /// Indices ordered so every node comes after its children.
    pub fn bottom_up(&self) -> impl Iterator<Item = usize> {
        (0..self.nodes.len()).rev()
    }

    pub fn is_chain(&self) -> bool {
        self.internal_nodes().all(|i| self.nodes[i].axes.first() == 0)
            && self.nodes.iter().all(|n| match n.children {
                Some((_, r)) => self.nodes[r].is_leaf(),
                None => true,
            })
    }

    pub fn kind(&self) -> Option<TreeKind> {
        if Self::tensor_train(self.order).is_ok_and(|t| t.same_shape(self)) {
            Some(TreeKind::Chain)
        } else if Self::balanced(self.order).is_ok_and(|t| t.same_shape(self)) {
            Some(TreeKind::Balanced)
        } else {
            None
        }
    }

    fn same_shape(&self, other: &DimensionTree) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| a.axes == b.axes)
    }

    /// Node axis sets in pre-order.
    pub fn node_sets(&self) -> Vec<Vec<usize>> {
        self.nodes.iter().map(|n| n.axes.axes().to_vec()).collect()
    }

    pub fn rank(&self, idx: usize) -> Option<usize> {
        self.nodes[idx].rank
    }

    pub fn set_rank(&mut self, idx: usize, rank: usize) -> Result<()> {
        if idx == Self::ROOT {
            return Err(Error::Tree("the root carries no rank".into()));
        }
        if rank == 0 {
            return Err(Error::Rank {
                what: format!("node {:?}", self.nodes[idx].axes.axes()),
                rank,
                max: 0,
            });
        }
        self.nodes[idx].rank = Some(rank);
        Ok(())
    }

    /// Same rank on every leaf and another on every non-root internal node.
    pub fn with_uniform_ranks(mut self, leaf: usize, internal: usize) -> Result<Self> {
        for i in 1..self.nodes.len() {
            let r = if self.nodes[i].is_leaf() { leaf } else { internal };
            self.set_rank(i, r)?;
        }
        Ok(self)
    }

    /// Rank ceiling of a node's unfolding of the stacked training tensor:
    /// `min(∏_{i∈s} I_i, N · ∏_{j∉s} I_j)`.
    pub fn full_rank(&self, idx: usize, shape: &[usize], samples: usize) -> usize {
        let inside = self.nodes[idx].axes.extent(shape);
        let total: usize = shape.iter().product();
        inside.min(samples * (total / inside))
    }

    /// Largest rank Algorithm-1 style learning can give node `idx`: the
    /// unfolding ceiling, and for internal nodes also the product of the
    /// children's ranks.
    pub fn rank_ceiling(&self, idx: usize, shape: &[usize], samples: usize) -> usize {
        let full = self.full_rank(idx, shape, samples);
        match self.nodes[idx].children {
            Some((l, r)) => {
                let kids = self.nodes[l].rank.unwrap_or(0) * self.nodes[r].rank.unwrap_or(0);
                full.min(kids)
            }
            None => full,
        }
    }

    /// Checks every non-root rank against its ceiling for `samples` training tensors.
    pub fn validate_ranks(&self, shape: &[usize], samples: usize) -> Result<()> {
        if shape.len() != self.order {
            return Err(Error::Shape(format!(
                "order-{} tree used with shape {shape:?}",
                self.order
            )));
        }
        for idx in self.bottom_up().filter(|&i| i != Self::ROOT) {
            let node = &self.nodes[idx];
            let rank = node.rank.ok_or_else(|| {
                Error::Tree(format!("node {:?} has no rank", node.axes.axes()))
            })?;
            let max = self.rank_ceiling(idx, shape, samples);
            if rank > max {
                return Err(Error::Rank {
                    what: format!("node {:?}", node.axes.axes()),
                    rank,
                    max,
                });
            }
        }
        Ok(())
    }
}

fn check_order(order: usize) -> Result<()> {
    if order < 2 {
        return Err(Error::Tree(format!("dimension trees need order >= 2, got {order}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(t: &DimensionTree) -> Vec<Vec<usize>> {
        let mut s = t.node_sets();
        s.sort();
        s
    }

    fn one_based(v: &[&[usize]]) -> Vec<Vec<usize>> {
        let mut s: Vec<Vec<usize>> = v.iter().map(|n| n.iter().map(|a| a - 1).collect()).collect();
        s.sort();
        s
    }

    #[test]
    fn balanced_order_four() {
        let t = DimensionTree::balanced(4).unwrap();
        let expected = one_based(&[&[1, 2, 3, 4], &[1, 2], &[1], &[2], &[3, 4], &[3], &[4]]);
        assert_eq!(sets(&t), expected);
        let (l, r) = t.root_children();
        assert_eq!(t.node(l).axes.axes(), &[0, 1]);
        assert_eq!(t.node(r).axes.axes(), &[2, 3]);
    }

    #[test]
    fn balanced_order_two_and_three() {
        let t2 = DimensionTree::balanced(2).unwrap();
        assert_eq!(sets(&t2), one_based(&[&[1, 2], &[1], &[2]]));
        let t3 = DimensionTree::balanced(3).unwrap();
        assert_eq!(sets(&t3), one_based(&[&[1, 2, 3], &[1, 2], &[1], &[2], &[3]]));
    }

    #[test]
    fn chain_trees() {
        let t4 = DimensionTree::tensor_train(4).unwrap();
        let internal: Vec<Vec<usize>> = t4
            .internal_nodes()
            .map(|i| t4.node(i).axes.axes().to_vec())
            .collect();
        assert_eq!(internal, vec![vec![0, 1, 2], vec![0, 1]]);
        let (l, r) = t4.root_children();
        assert_eq!(t4.node(l).axes.axes(), &[0, 1, 2]);
        assert_eq!(t4.node(r).axes.axes(), &[3]);
        assert!(t4.is_chain());

        assert_eq!(DimensionTree::tensor_train(2).unwrap(), DimensionTree::balanced(2).unwrap());

        let t5 = DimensionTree::tensor_train(5).unwrap();
        let mut internal: Vec<usize> = t5.internal_nodes().map(|i| t5.node(i).axes.len()).collect();
        internal.sort();
        assert_eq!(internal, vec![2, 3, 4]);
    }

    #[test]
    fn order_below_two_rejected() {
        assert!(DimensionTree::balanced(1).is_err());
        assert!(DimensionTree::tensor_train(0).is_err());
    }

    #[test]
    fn bottom_up_visits_children_first() {
        let t = DimensionTree::balanced(5).unwrap();
        let order: Vec<usize> = t.bottom_up().collect();
        for (pos, &i) in order.iter().enumerate() {
            if let Some((l, r)) = t.node(i).children {
                let lp = order.iter().position(|&x| x == l).unwrap();
                let rp = order.iter().position(|&x| x == r).unwrap();
                assert!(lp < pos && rp < pos);
            }
        }
    }

    #[test]
    fn invalid_node_sets() {
        let s = |v: &[usize]| AxisSet::new(v.iter().copied()).unwrap();
        // root missing
        assert!(DimensionTree::from_node_sets(2, &[s(&[0]), s(&[1])]).is_err());
        // non-contiguous internal node
        let bad = [s(&[0, 1, 2]), s(&[0, 2]), s(&[0]), s(&[1]), s(&[2])];
        assert!(DimensionTree::from_node_sets(3, &bad).is_err());
        // three children
        let bad = [s(&[0, 1, 2]), s(&[0]), s(&[1]), s(&[2])];
        assert!(DimensionTree::from_node_sets(3, &bad).is_err());
    }

    #[test]
    fn kinds() {
        assert_eq!(DimensionTree::balanced(4).unwrap().kind(), Some(TreeKind::Balanced));
        assert_eq!(DimensionTree::tensor_train(4).unwrap().kind(), Some(TreeKind::Chain));
        assert!(!DimensionTree::balanced(4).unwrap().is_chain());
    }

    #[test]
    fn rank_ceilings() {
        let t = DimensionTree::balanced(4).unwrap().with_uniform_ranks(2, 5).unwrap();
        let shape = [3, 3, 3, 3];
        // {0,1}: min(9, N*9) but children allow only 2*2
        let (l, _) = t.root_children();
        assert_eq!(t.full_rank(l, &shape, 1), 9);
        assert_eq!(t.rank_ceiling(l, &shape, 1), 4);
        assert!(t.validate_ranks(&shape, 1).is_err());
        let ok = DimensionTree::balanced(4).unwrap().with_uniform_ranks(2, 4).unwrap();
        ok.validate_ranks(&shape, 1).unwrap();
        assert!(ok.validate_ranks(&[3, 3, 3], 1).is_err());
    }

    #[test]
    fn root_rank_rejected() {
        let mut t = DimensionTree::balanced(2).unwrap();
        assert!(t.set_rank(DimensionTree::ROOT, 1).is_err());
        assert!(t.set_rank(1, 0).is_err());
    }
}
