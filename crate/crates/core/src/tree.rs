//! Binary-tree arrangement of EV units.
//!
//! Nodes are stored in heap order: node `id` has light child `2·id + 1` and
//! dark child `2·id + 2`. A node at layer `d` (root at 0) owns the signal
//! block `[lo, lo + 2^{k−d})`; its photon enters on `lo`, the unit
//! interferes `lo` with `lo + 2^{k−d−1}`, and the light and dark outputs
//! seed the lower and upper halves of the block. Absorber of node `id` is
//! mode `2^k + id`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::optics::{CircuitSpec, Reflectivity};

/// Largest supported layer count (keeps the dense engine within its range).
pub const MAX_LAYERS: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub layer: usize,
    pub input_mode: usize,
    pub partner_mode: usize,
    pub absorber_mode: usize,
    pub light_child: Option<usize>,
    pub dark_child: Option<usize>,
}

/// Maximal run of dark edges. All of its objects can be probed by one photon
/// that ends on the chain's last dark port.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub nodes: Vec<usize>,
    pub coloured: bool,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeLayout {
    pub layers: usize,
    /// Signal modes, `2^layers`.
    pub modes: usize,
    /// Beamsplitter depth, `2·layers`.
    pub depth: usize,
    pub nodes: Vec<TreeNode>,
    pub chains: Vec<Chain>,
}

impl TreeLayout {
    pub fn new(layers: usize) -> Result<Self> {
        if !(1..=MAX_LAYERS).contains(&layers) {
            return Err(domain("k", layers as f64, "1 <= k <= 4"));
        }
        let modes = 1usize << layers;
        let count = modes - 1;
        let mut nodes = Vec::with_capacity(count);
        // (id, layer, lo) in breadth-first order, which is heap order.
        let mut queue = std::collections::VecDeque::from([(0usize, 0usize, 0usize)]);
        while let Some((id, layer, lo)) = queue.pop_front() {
            let half = 1usize << (layers - layer - 1);
            let leaf = layer + 1 == layers;
            let (light, dark) = if leaf { (None, None) } else { (Some(2 * id + 1), Some(2 * id + 2)) };
            nodes.push(TreeNode {
                id,
                layer,
                input_mode: lo,
                partner_mode: lo + half,
                absorber_mode: modes + id,
                light_child: light,
                dark_child: dark,
            });
            if let (Some(l), Some(d)) = (light, dark) {
                queue.push_back((l, layer + 1, lo));
                queue.push_back((d, layer + 1, lo + half));
            }
        }
        debug_assert_eq!(nodes.len(), count);
        let chains = enumerate_chains(&nodes);
        Ok(Self {
            layers,
            modes,
            depth: 2 * layers,
            nodes,
            chains,
        })
    }

    /// Signal plus absorber modes.
    pub fn total_modes(&self) -> usize {
        self.modes + self.nodes.len()
    }

    /// Layer-by-layer circuit; units within a layer act on disjoint modes.
    pub fn circuit(&self, r: Reflectivity, presence: &[bool]) -> Result<CircuitSpec> {
        if presence.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                what: "tree nodes vs presence mask",
                left: self.nodes.len(),
                right: presence.len(),
            });
        }
        let mut c = CircuitSpec::new(self.total_modes())?;
        for node in &self.nodes {
            c.bs(node.input_mode, node.partner_mode, r)?;
            if presence[node.id] {
                c.swap(node.partner_mode, node.absorber_mode)?;
            }
            c.bs(node.input_mode, node.partner_mode, r)?;
        }
        Ok(c)
    }

    /// Nodes on the path the photon takes when every unit sends it to its
    /// dark port, ending on the IFM detector `2^k − 1`.
    pub fn dark_path(&self) -> &[usize] {
        &self.chains[0].nodes
    }

    /// Length → count over the coloured chains.
    pub fn chain_multiset(&self) -> BTreeMap<usize, usize> {
        multiset(self.chains.iter().filter(|c| c.coloured))
    }

    /// Length → count over every chain of the partition.
    pub fn partition_multiset(&self) -> BTreeMap<usize, usize> {
        multiset(self.chains.iter())
    }
}

fn multiset<'a>(chains: impl Iterator<Item = &'a Chain>) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for c in chains {
        *out.entry(c.len()).or_insert(0) += 1;
    }
    out
}

/// A chain starts at the root and at every light child, then follows dark
/// children to a leaf. The single-node chain at the end of the all-light
/// path only ever sees photons bound for the null port and is left
/// uncoloured.
fn enumerate_chains(nodes: &[TreeNode]) -> Vec<Chain> {
    let on_light_path = |id: usize| {
        let mut n = id;
        while n != 0 {
            if n.is_multiple_of(2) {
                return false;
            }
            n = (n - 1) / 2;
        }
        true
    };
    let mut chains = Vec::new();
    for start in nodes.iter().filter(|n| n.id == 0 || n.id % 2 == 1) {
        let mut path = vec![start.id];
        let mut cur = start;
        while let Some(d) = cur.dark_child {
            path.push(d);
            cur = &nodes[d];
        }
        let coloured = !(start.layer > 0 && start.light_child.is_none() && on_light_path(start.id));
        chains.push(Chain { nodes: path, coloured });
    }
    chains.sort_by(|a, b| b.len().cmp(&a.len()).then(a.nodes[0].cmp(&b.nodes[0])));
    chains
}

/// Tree scheme descriptor; same as [`TreeLayout::new`].
pub fn build_tree(layers: usize) -> Result<TreeLayout> {
    TreeLayout::new(layers)
}
