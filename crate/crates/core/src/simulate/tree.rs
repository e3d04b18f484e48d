//! Fully stored realizations of the tree process: one byte of state per
//! vertex, one contraction ratio per non-root vertex, generation-major
//! layout. Stored trees power the min-cut flow dynamic program, survivor and
//! martingale trajectories, and geometric realization.

use rand::Rng;

use crate::analytics;
use crate::model::{EnvironmentModel, GeometryRule, State};

use super::draw::draw_children;
use super::rng::{child_seed, root_seed, vertex_rng};
use super::{SimBudget, SimError};

/// Global vertex index in generation-major order.
pub type NodeId = usize;

/// One sampled prefix of the random construction.
#[derive(Debug, Clone)]
pub struct SampledTree {
    depth: usize,
    /// Branching factor per generation 0..depth.
    ms: Vec<usize>,
    /// Start offset of each generation; last entry is the node count.
    offsets: Vec<usize>,
    states: Vec<u8>,
    /// Contraction ratio of each non-root vertex; the root slot holds 1.
    ratios: Vec<f64>,
    survivor_counts: Vec<u64>,
    seed: u64,
}

impl SampledTree {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn node_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn state(&self, node: NodeId) -> u8 {
        self.states[node]
    }

    pub fn ratio(&self, node: NodeId) -> f64 {
        self.ratios[node]
    }

    /// Number of on-vertices per generation, all ancestries included.
    pub fn survivor_counts(&self) -> &[u64] {
        &self.survivor_counts
    }

    pub fn generation_of(&self, node: NodeId) -> usize {
        match self.offsets.binary_search(&node) {
            Ok(g) => g,
            Err(g) => g - 1,
        }
    }

    /// First child and branching factor; `None` for bottom-generation nodes.
    pub fn children(&self, node: NodeId) -> Option<(NodeId, usize)> {
        let g = self.generation_of(node);
        if g >= self.depth {
            return None;
        }
        let m = self.ms[g];
        let within = node - self.offsets[g];
        Some((self.offsets[g + 1] + within * m, m))
    }

    /// Trajectory of descendant counts along unbroken on-paths from `node`
    /// (the node itself included), one entry per generation up to the depth.
    /// Identically zero when the node is off.
    pub fn survivor_process(&self, node: NodeId) -> Vec<u64> {
        let start = self.generation_of(node);
        let mut out = Vec::with_capacity(self.depth - start + 1);
        if self.states[node] == 0 {
            out.resize(self.depth - start + 1, 0);
            return out;
        }
        let mut frontier: Vec<NodeId> = vec![node];
        out.push(1);
        for _ in start..self.depth {
            let mut next = Vec::new();
            for &v in &frontier {
                let (first, m) = self.children(v).expect("not bottom generation");
                for k in 0..m {
                    if self.states[first + k] == 1 {
                        next.push(first + k);
                    }
                }
            }
            out.push(next.len() as u64);
            frontier = next;
        }
        out
    }

    /// Truncated min-cut flow through the on-subtree rooted at `node`: leaves
    /// at the cut depth are worth one, inner vertices the minimum of one and
    /// the ratio-weighted sum over their on-children (children in index
    /// order, sum then min). An upper bound on the untruncated flow,
    /// nonincreasing in the cut depth.
    pub fn flow(&self, s: f64, node: NodeId) -> FlowEstimate {
        self.flow_truncated(s, node, self.depth)
    }

    pub fn flow_truncated(&self, s: f64, node: NodeId, cut_depth: usize) -> FlowEstimate {
        let value = if self.states[node] == 0 {
            0.0
        } else {
            self.flow_value(s, node, self.generation_of(node), cut_depth)
        };
        FlowEstimate {
            s,
            truncation_depth: cut_depth,
            value,
            is_upper_bound: true,
        }
    }

    fn flow_value(&self, s: f64, node: NodeId, generation: usize, cut_depth: usize) -> f64 {
        if generation == cut_depth {
            return 1.0;
        }
        let (first, m) = self.children(node).expect("cut depth within tree");
        let mut acc = 0.0;
        for k in 0..m {
            let child = first + k;
            if self.states[child] == 1 {
                acc += self.ratios[child].powf(s) * self.flow_value(s, child, generation + 1, cut_depth);
            }
        }
        acc.min(1.0)
    }

    /// Trajectory of the normalized ratio-weighted survivor sums from `node`:
    /// the sum over generation-j members of the on-subtree of the path
    /// product of ratios to the power s, divided by the product of Moran
    /// sums. A nonnegative martingale in j.
    pub fn martingale_series(
        &self,
        model: &EnvironmentModel,
        s: f64,
        node: NodeId,
    ) -> Result<Vec<f64>, SimError> {
        let start = self.generation_of(node);
        for l in start..self.depth {
            if analytics::moran_sum(model, s, l) == 0.0 {
                return Err(SimError::UndefinedNormalizer { generation: l });
            }
        }
        let mut out = Vec::with_capacity(self.depth - start + 1);
        if self.states[node] == 0 {
            out.resize(self.depth - start + 1, 0.0);
            return Ok(out);
        }
        let mut frontier: Vec<(NodeId, f64)> = vec![(node, 1.0)];
        let mut normalizer = 1.0;
        out.push(1.0);
        for g in start..self.depth {
            normalizer *= analytics::moran_sum(model, s, g);
            let mut next = Vec::new();
            let mut total = 0.0;
            for &(v, w) in &frontier {
                let (first, m) = self.children(v).expect("within depth");
                for k in 0..m {
                    let child = first + k;
                    if self.states[child] == 1 {
                        let cw = w * self.ratios[child].powf(s);
                        total += cw;
                        next.push((child, cw));
                    }
                }
            }
            out.push(total / normalizer);
            frontier = next;
        }
        Ok(out)
    }

    /// Integer-lattice coordinates of the on-cubes at generation `j` under
    /// cube-subdivision geometry, using row-major digits (axis 0 fastest).
    pub fn realize_cubes(
        &self,
        model: &EnvironmentModel,
        j: usize,
    ) -> Result<CubeSet, SimError> {
        if model.geometry != Some(GeometryRule::CubeSubdivision) {
            return Err(SimError::WrongGeometry(
                "cube realization requires cube-subdivision geometry".into(),
            ));
        }
        let d = model.ambient_dim;
        let mut side: u64 = 1;
        // coordinates of every vertex of the current generation, flattened
        let mut coords: Vec<u64> = vec![0; d];
        for g in 0..j {
            let c = model.stage(g).c.expect("validated cube geometry") as u64;
            let m = self.ms[g];
            let count = self.offsets[g + 1] - self.offsets[g];
            let mut next = vec![0u64; count * m * d];
            for i in 0..count {
                for k in 0..m {
                    let mut digit = k as u64;
                    for axis in 0..d {
                        next[(i * m + k) * d + axis] = coords[i * d + axis] * c + digit % c;
                        digit /= c;
                    }
                }
            }
            coords = next;
            side *= c;
        }
        let first = self.offsets[j];
        let count = self.offsets[j + 1] - self.offsets[j];
        let mut out = Vec::new();
        for i in 0..count {
            if self.states[first + i] == 1 {
                out.extend_from_slice(&coords[i * d..(i + 1) * d]);
            }
        }
        Ok(CubeSet {
            generation: j,
            dim: d,
            side,
            coords: out,
        })
    }

    /// Binary raster of the generation-j cubes for planar models.
    pub fn render_2d(&self, model: &EnvironmentModel, j: usize) -> Result<Pgm, SimError> {
        if model.ambient_dim != 2 {
            return Err(SimError::WrongGeometry(
                "raster output requires ambient dimension two".into(),
            ));
        }
        let cubes = self.realize_cubes(model, j)?;
        let side = cubes.side as usize;
        let mut pixels = vec![255u8; side * side];
        for cell in cubes.cells() {
            let (x, y) = (cell[0] as usize, cell[1] as usize);
            pixels[y * side + x] = 0;
        }
        Ok(Pgm {
            width: side,
            height: side,
            pixels,
        })
    }

    /// Build a tree from explicit states and ratios (oracle and test use).
    /// `states` and `ratios` are generation-major; the root ratio slot is
    /// ignored.
    pub fn from_parts(ms: Vec<usize>, states: Vec<u8>, ratios: Vec<f64>) -> SampledTree {
        let depth = ms.len();
        let mut offsets = Vec::with_capacity(depth + 2);
        offsets.push(0);
        let mut gen_size = 1usize;
        let mut total = 0usize;
        for g in 0..=depth {
            total += gen_size;
            offsets.push(total);
            if g < depth {
                gen_size *= ms[g];
            }
        }
        assert_eq!(states.len(), total, "state vector length mismatch");
        assert_eq!(ratios.len(), total, "ratio vector length mismatch");
        let mut survivor_counts = vec![0u64; depth + 1];
        for g in 0..=depth {
            survivor_counts[g] = states[offsets[g]..offsets[g + 1]]
                .iter()
                .map(|&x| x as u64)
                .sum();
        }
        SampledTree {
            depth,
            ms,
            offsets,
            states,
            ratios,
            survivor_counts,
            seed: 0,
        }
    }
}

/// Truncated min-cut flow value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowEstimate {
    pub s: f64,
    pub truncation_depth: usize,
    pub value: f64,
    pub is_upper_bound: bool,
}

/// The on-cubes of one generation on the integer lattice at scale `side`.
#[derive(Debug, Clone)]
pub struct CubeSet {
    pub generation: usize,
    pub dim: usize,
    /// Cells per side: the product of the per-stage subdivision counts.
    pub side: u64,
    coords: Vec<u64>,
}

impl CubeSet {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = &[u64]> {
        self.coords.chunks(self.dim)
    }
}

/// 8-bit grayscale raster; 0 = on-cube, 255 = background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Pgm {
    /// Binary PGM encoding: `P5\n<w> <h>\n255\n` then one byte per pixel.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn black_pixels(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 0).count()
    }
}

/// Sample a full tree to the given depth. Deterministic in (model, depth,
/// seed): every vertex owns a stream derived from its parent's seed and its
/// child index, so the same seed at a larger depth extends the same tree.
pub fn sample_tree(
    model: &EnvironmentModel,
    depth: usize,
    seed: u64,
    budget: &SimBudget,
) -> Result<SampledTree, SimError> {
    sample_tree_replica(model, depth, seed, 0, budget)
}

/// Sample the `replica`-th tree of a replicated run; replica r here equals
/// replica r of the streaming engine with the same master seed.
pub fn sample_tree_replica(
    model: &EnvironmentModel,
    depth: usize,
    seed: u64,
    replica: u64,
    budget: &SimBudget,
) -> Result<SampledTree, SimError> {
    let ms: Vec<usize> = (0..depth).map(|g| model.branching(g)).collect();
    let mut total: u128 = 0;
    let mut gen_size: u128 = 1;
    for g in 0..=depth {
        total += gen_size;
        if total > budget.max_nodes as u128 {
            return Err(SimError::BudgetExceeded {
                required: total,
                budget: budget.max_nodes,
            });
        }
        if g < depth {
            gen_size *= ms[g] as u128;
        }
    }

    let mut offsets = Vec::with_capacity(depth + 2);
    offsets.push(0usize);
    let mut acc = 0usize;
    let mut size = 1usize;
    for g in 0..=depth {
        acc += size;
        offsets.push(acc);
        if g < depth {
            size *= ms[g];
        }
    }
    let node_count = acc;

    let mut states = vec![0u8; node_count];
    let mut ratios = vec![1.0f64; node_count];

    let replica_seed = root_seed(seed, replica);
    let mut rng = vertex_rng(replica_seed);
    states[0] = (rng.random::<f64>() < model.initial_one_prob) as u8;

    // seeds of the generation currently being expanded
    let mut seeds: Vec<u64> = vec![replica_seed];
    let mut state_buf: Vec<u8> = Vec::new();
    let mut ratio_buf: Vec<f64> = Vec::new();
    for g in 0..depth {
        let stage = model.stage(g);
        let gen_start = offsets[g];
        let gen_len = offsets[g + 1] - gen_start;
        let mut next_seeds = vec![0u64; gen_len * ms[g]];
        for i in 0..gen_len {
            let node = gen_start + i;
            let mut rng = if g == 0 {
                // the root stream already produced the root state
                let mut r = vertex_rng(seeds[i]);
                let _: f64 = r.random();
                r
            } else {
                vertex_rng(seeds[i])
            };
            state_buf.clear();
            ratio_buf.clear();
            draw_children(
                stage,
                State::from_bit(states[node]),
                &mut rng,
                &mut state_buf,
                &mut ratio_buf,
            );
            let child_base = offsets[g + 1] + i * ms[g];
            for k in 0..ms[g] {
                states[child_base + k] = state_buf[k];
                ratios[child_base + k] = ratio_buf[k];
                next_seeds[i * ms[g] + k] = child_seed(seeds[i], k);
            }
        }
        seeds = next_seeds;
    }

    let mut survivor_counts = vec![0u64; depth + 1];
    for g in 0..=depth {
        survivor_counts[g] = states[offsets[g]..offsets[g + 1]]
            .iter()
            .map(|&x| x as u64)
            .sum();
    }

    Ok(SampledTree {
        depth,
        ms,
        offsets,
        states,
        ratios,
        survivor_counts,
        seed,
    })
}
