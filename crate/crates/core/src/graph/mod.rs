//! Weighted qudit graphs and their graph states
//! `|G⟩ = ∏_{i<j} CZ_ij^{A_ij} |+⟩^{⊗n}`, with `|+⟩ = F|0⟩`.

mod encoding;
mod stabilizer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::statevec::{LevelSubset, Register, Role, StateError, DEFAULT_AMPLITUDE_CAP};

pub use encoding::{block_encoding_map, block_decoding_map, qudits_needed, QUBITS_PER_PHOTON_D8};
pub use stabilizer::{
    apply_correction, local_correction_search, stabilizer_eigenvalue, stabilizer_verify, CorrectionSet,
    StabilizerReport, STABILIZER_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("adjacency has {got} entries, expected {expected}")]
    WrongSize { expected: usize, got: usize },
    #[error("adjacency is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("adjacency diagonal entry {0} is non-zero")]
    NonZeroDiagonal(usize),
    #[error("adjacency entry ({i}, {j}) = {value} not in [0, {d})")]
    EntryOutOfRange { i: usize, j: usize, value: u32, d: u32 },
    #[error("dimension {0} must be at least 2")]
    BadDimension(u32),
    #[error("register does not match the graph: {0}")]
    RegisterMismatch(String),
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(u32),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct GraphSpecJson {
    n: usize,
    d: u32,
    adjacency: Vec<u32>,
}

/// `n` vertices of dimension `d` with a symmetric adjacency over `Z_d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphSpecJson", into = "GraphSpecJson")]
pub struct GraphSpec {
    n: usize,
    d: u32,
    adjacency: Vec<u32>,
}

impl TryFrom<GraphSpecJson> for GraphSpec {
    type Error = GraphError;

    fn try_from(j: GraphSpecJson) -> Result<Self, GraphError> {
        GraphSpec::from_flat(j.n, j.d, j.adjacency)
    }
}

impl From<GraphSpec> for GraphSpecJson {
    fn from(g: GraphSpec) -> Self {
        GraphSpecJson { n: g.n, d: g.d, adjacency: g.adjacency }
    }
}

impl GraphSpec {
    /// Row-major adjacency; validated.
    pub fn from_flat(n: usize, d: u32, adjacency: Vec<u32>) -> Result<Self, GraphError> {
        if d < 2 {
            return Err(GraphError::BadDimension(d));
        }
        if adjacency.len() != n * n {
            return Err(GraphError::WrongSize { expected: n * n, got: adjacency.len() });
        }
        for i in 0..n {
            if adjacency[i * n + i] != 0 {
                return Err(GraphError::NonZeroDiagonal(i));
            }
            for j in 0..n {
                let v = adjacency[i * n + j];
                if v >= d {
                    return Err(GraphError::EntryOutOfRange { i, j, value: v, d });
                }
                if v != adjacency[j * n + i] {
                    return Err(GraphError::NotSymmetric(i, j));
                }
            }
        }
        Ok(Self { n, d, adjacency })
    }

    /// No edges.
    pub fn empty(n: usize, d: u32) -> Result<Self, GraphError> {
        Self::from_flat(n, d, vec![0; n * n])
    }

    /// Builds from an edge list; repeated edges add their weights mod `d`.
    pub fn from_edges(n: usize, d: u32, edges: &[(usize, usize, u32)]) -> Result<Self, GraphError> {
        if d < 2 {
            return Err(GraphError::BadDimension(d));
        }
        let mut adj = vec![0u32; n * n];
        for &(i, j, w) in edges {
            if i >= n || j >= n || i == j {
                return Err(GraphError::InvalidTopology(format!("edge ({i}, {j}) on {n} vertices")));
            }
            let v = (adj[i * n + j] + w % d) % d;
            adj[i * n + j] = v;
            adj[j * n + i] = v;
        }
        Self::from_flat(n, d, adj)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn weight(&self, i: usize, j: usize) -> u32 {
        self.adjacency[i * self.n + j]
    }

    pub fn adjacency(&self) -> &[u32] {
        &self.adjacency
    }

    /// `(i, j, w)` with `i < j` and `w ≠ 0`, in row order.
    pub fn edges(&self) -> Vec<(usize, usize, u32)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let w = self.weight(i, j);
                if w != 0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.n).filter(|&w| self.weight(v, w) != 0).count()
    }

    pub fn amplitude_count(&self) -> Option<usize> {
        (self.d as usize).checked_pow(self.n as u32)
    }
}

fn check_weight(d: u32, w: u32) -> Result<(), GraphError> {
    if d < 2 {
        return Err(GraphError::BadDimension(d));
    }
    if w == 0 || w >= d {
        return Err(GraphError::InvalidTopology(format!("weight {w} not in [1, {d})")));
    }
    Ok(())
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn make_linear(n: usize, d: u32, w: u32) -> Result<GraphSpec, GraphError> {
    check_weight(d, w)?;
    if n < 2 {
        return Err(GraphError::InvalidTopology(format!("line needs n >= 2, got {n}")));
    }
    let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, w)).collect();
    GraphSpec::from_edges(n, d, &edges)
}

/// Cycle on `n` vertices. For `n = 2` the two edges coincide and the single
/// entry is `2w mod d`.
pub fn make_ring(n: usize, d: u32, w: u32) -> Result<GraphSpec, GraphError> {
    check_weight(d, w)?;
    if n < 2 {
        return Err(GraphError::InvalidTopology(format!("ring needs n >= 2, got {n}")));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, w)).collect();
    GraphSpec::from_edges(n, d, &edges)
}

/// `rows × cols` grid; vertex `(r, c)` is `r·cols + c`. Rails join
/// `(r, c)-(r, c+1)`, rungs join `(r, c)-(r+1, c)`.
pub fn make_ladder(rows: usize, cols: usize, d: u32, w: u32) -> Result<GraphSpec, GraphError> {
    check_weight(d, w)?;
    if rows < 1 || cols < 1 || rows * cols < 2 {
        return Err(GraphError::InvalidTopology(format!("grid {rows}x{cols}")));
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1, w));
            }
            if r + 1 < rows {
                edges.push((v, v + cols, w));
            }
        }
    }
    GraphSpec::from_edges(rows * cols, d, &edges)
}

/// `F` on every vertex, then `CZ^{A_ij}` for each edge.
pub fn build_graph_state(g: &GraphSpec) -> Result<Register, GraphError> {
    build_graph_state_with_cap(g, DEFAULT_AMPLITUDE_CAP)
}

pub fn build_graph_state_with_cap(g: &GraphSpec, cap: usize) -> Result<Register, GraphError> {
    let d = g.d as usize;
    let mut r = Register::basis_state(&vec![d; g.n], &vec![Role::Qudit; g.n], &vec![0; g.n], cap)?;
    for v in 0..g.n {
        r.apply_fourier(&LevelSubset::first(v, d))?;
    }
    for (i, j, w) in g.edges() {
        r.apply_cz_power(i, j, w as i64)?;
    }
    Ok(r)
}

pub(crate) fn check_register(r: &Register, g: &GraphSpec) -> Result<(), GraphError> {
    if r.num_subsystems() != g.n || r.radices().iter().any(|&x| x != g.d as usize) {
        return Err(GraphError::RegisterMismatch(format!(
            "radices {:?} vs {} qudits of dimension {}",
            r.radices(),
            g.n,
            g.d
        )));
    }
    Ok(())
}
