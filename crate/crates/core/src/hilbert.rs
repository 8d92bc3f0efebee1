//! Discretized separable Hilbert spaces.
//!
//! Every space is `L²(grid)` for a [`WeightedGrid`]: finitely many labelled
//! points with positive masses. A grid is a concatenation of segments. An
//! `Atoms` segment is a fixed block of points; a `Cells` segment discretizes
//! `L²(ℝ₊, ℂᵐ)` by cells of width `step` and may be extended to the right.
//! Zero-extension along cell segments (and by appending trailing segments) is
//! the isometric inclusion used to compare vectors living on different
//! horizons.

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, Error, Result};
use crate::random;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    Atoms,
    /// Cell-major layout: coordinate `s * fiber_dim + f` is fiber `f` of cell `s`.
    Cells {
        step: f64,
        fiber_dim: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Number of coordinates (for cells: `cells * fiber_dim`).
    pub len: usize,
    #[serde(flatten)]
    pub kind: SegmentKind,
}

impl Segment {
    pub fn cells(&self) -> Option<usize> {
        match self.kind {
            SegmentKind::Cells { fiber_dim, .. } => Some(self.len / fiber_dim),
            SegmentKind::Atoms => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDocument")]
pub struct WeightedGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    segments: Vec<Segment>,
}

#[derive(Deserialize)]
struct GridDocument {
    points: Vec<f64>,
    weights: Vec<f64>,
    #[serde(default)]
    segments: Option<Vec<Segment>>,
}

impl TryFrom<GridDocument> for WeightedGrid {
    type Error = Error;

    fn try_from(doc: GridDocument) -> Result<Self> {
        let grid = WeightedGrid::new(doc.points, doc.weights)?;
        match doc.segments {
            None => Ok(grid),
            Some(segments) => {
                let total: usize = segments.iter().map(|s| s.len).sum();
                if total != grid.len() || segments.iter().any(|s| s.len == 0) {
                    return structural("segment lengths do not cover the grid");
                }
                for s in &segments {
                    if let SegmentKind::Cells { step, fiber_dim } = s.kind {
                        if fiber_dim == 0 || s.len % fiber_dim != 0 || !(step > 0.0) {
                            return structural("malformed cell segment");
                        }
                    }
                }
                Ok(WeightedGrid { segments, ..grid })
            }
        }
    }
}

impl WeightedGrid {
    /// A single block of atoms.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return structural("grid must have at least one point");
        }
        if points.len() != weights.len() {
            return structural(format!("{} points but {} weights", points.len(), weights.len()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return domain(format!("grid weight {w} is not strictly positive and finite"));
        }
        let len = points.len();
        Ok(WeightedGrid { points, weights, segments: vec![Segment { len, kind: SegmentKind::Atoms }] })
    }

    /// `k` points `0, 1, …, k-1` with mass `1/k` each.
    pub fn uniform(k: usize) -> Result<Self> {
        let w = 1.0 / k as f64;
        Self::new((0..k).map(|i| i as f64).collect(), vec![w; k])
    }

    /// `cells` cells of width `step` with fiber `ℂ^fiber_dim`.
    pub fn cells(step: f64, fiber_dim: usize, cells: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return domain(format!("cell step {step} must be positive"));
        }
        if fiber_dim == 0 || cells == 0 {
            return structural("cell grid needs fiber_dim >= 1 and cells >= 1");
        }
        let len = cells * fiber_dim;
        let points = (0..len).map(|i| (i / fiber_dim) as f64 * step).collect();
        Ok(WeightedGrid {
            points,
            weights: vec![step; len],
            segments: vec![Segment { len, kind: SegmentKind::Cells { step, fiber_dim } }],
        })
    }

    pub fn concat<G: AsRef<WeightedGrid>>(parts: &[G]) -> Result<Self> {
        if parts.is_empty() {
            return structural("cannot concatenate zero grids");
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut segments = Vec::new();
        for g in parts {
            let g = g.as_ref();
            points.extend_from_slice(&g.points);
            weights.extend_from_slice(&g.weights);
            segments.extend_from_slice(&g.segments);
        }
        Ok(WeightedGrid { points, weights, segments })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn segment_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.segments
            .iter()
            .map(|s| {
                let r = start..start + s.len;
                start += s.len;
                r
            })
            .collect()
    }

    /// `(step, fiber_dim, cells)` when the grid is a single cell segment.
    pub fn as_cells(&self) -> Option<(f64, usize, usize)> {
        match self.segments.as_slice() {
            [Segment { len, kind: SegmentKind::Cells { step, fiber_dim } }] => {
                Some((*step, *fiber_dim, len / fiber_dim))
            }
            _ => None,
        }
    }

    fn segment_grid(&self, range: Range<usize>, segs: &[Segment]) -> WeightedGrid {
        WeightedGrid {
            points: self.points[range.clone()].to_vec(),
            weights: self.weights[range].to_vec(),
            segments: segs.to_vec(),
        }
    }

    /// Splits the grid into consecutive groups of `group_sizes[i]` segments.
    pub fn split_segments(&self, group_sizes: &[usize]) -> Result<Vec<WeightedGrid>> {
        if group_sizes.iter().sum::<usize>() != self.segments.len() {
            return structural(format!(
                "grid has {} segments, split asks for {}",
                self.segments.len(),
                group_sizes.iter().sum::<usize>()
            ));
        }
        let mut out = Vec::with_capacity(group_sizes.len());
        let mut seg = 0;
        let mut start = 0;
        for &g in group_sizes {
            let segs = &self.segments[seg..seg + g];
            let len: usize = segs.iter().map(|s| s.len).sum();
            out.push(self.segment_grid(start..start + len, segs));
            seg += g;
            start += len;
        }
        Ok(out)
    }

    /// Positions of the coordinates of `sub` inside `self`, when `sub` embeds
    /// isometrically: its segments are a prefix of ours, atom blocks agree
    /// exactly and cell blocks are no longer than ours.
    pub fn embedding_of(&self, sub: &WeightedGrid) -> Option<Vec<usize>> {
        if sub.segments.len() > self.segments.len() {
            return None;
        }
        let ours = self.segment_ranges();
        let theirs = sub.segment_ranges();
        let mut idx = Vec::with_capacity(sub.len());
        for (i, (a, b)) in self.segments.iter().zip(&sub.segments).enumerate() {
            match (a.kind, b.kind) {
                (SegmentKind::Atoms, SegmentKind::Atoms) => {
                    if a.len != b.len
                        || self.points[ours[i].clone()] != sub.points[theirs[i].clone()]
                        || self.weights[ours[i].clone()] != sub.weights[theirs[i].clone()]
                    {
                        return None;
                    }
                }
                (SegmentKind::Cells { .. }, SegmentKind::Cells { .. }) => {
                    if a.kind != b.kind || b.len > a.len {
                        return None;
                    }
                }
                _ => return None,
            }
            idx.extend(ours[i].start..ours[i].start + b.len);
        }
        Some(idx)
    }

    /// Smallest grid both `self` and `other` embed into, if any.
    pub fn join(&self, other: &WeightedGrid) -> Option<WeightedGrid> {
        if other.embedding_of(self).is_some() {
            return Some(other.clone());
        }
        if self.embedding_of(other).is_some() {
            return Some(self.clone());
        }
        let (long, short) = if self.segments.len() >= other.segments.len() { (self, other) } else { (other, self) };
        let lr = long.segment_ranges();
        let sr = short.segment_ranges();
        let mut parts = Vec::with_capacity(long.segments.len());
        for i in 0..long.segments.len() {
            let a = long.segment_grid(lr[i].clone(), &long.segments[i..=i]);
            if i >= short.segments.len() {
                parts.push(a);
                continue;
            }
            let b = short.segment_grid(sr[i].clone(), &short.segments[i..=i]);
            if a.embedding_of(&b).is_some() {
                parts.push(a);
            } else if b.embedding_of(&a).is_some() {
                parts.push(b);
            } else {
                return None;
            }
        }
        WeightedGrid::concat(&parts).ok()
    }
}

impl AsRef<WeightedGrid> for WeightedGrid {
    fn as_ref(&self) -> &WeightedGrid {
        self
    }
}

pub fn same_grid(a: &Arc<WeightedGrid>, b: &Arc<WeightedGrid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A coefficient vector in `L²(grid)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HVector {
    grid: Arc<WeightedGrid>,
    coeffs: Vec<C64>,
}

impl HVector {
    pub fn new(grid: Arc<WeightedGrid>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return structural(format!("{} coefficients on a grid of size {}", coeffs.len(), grid.len()));
        }
        Ok(HVector { grid, coeffs })
    }

    pub fn zeros(grid: Arc<WeightedGrid>) -> Self {
        let coeffs = vec![C64::new(0.0, 0.0); grid.len()];
        HVector { grid, coeffs }
    }

    pub fn from_fn(grid: Arc<WeightedGrid>, f: impl FnMut(usize) -> C64) -> Self {
        let coeffs = (0..grid.len()).map(f).collect();
        HVector { grid, coeffs }
    }

    /// Coefficient 1 at index `k` (norm `√μ_k`).
    pub fn point_mass(grid: Arc<WeightedGrid>, k: usize) -> Result<Self> {
        if k >= grid.len() {
            return structural(format!("index {k} outside grid of size {}", grid.len()));
        }
        let mut v = Self::zeros(grid);
        v.coeffs[k] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// Unit-norm vector supported at index `k`.
    pub fn unit_at(grid: Arc<WeightedGrid>, k: usize) -> Result<Self> {
        let mut v = Self::point_mass(grid, k)?;
        v.coeffs[k] /= v.grid.weights[k].sqrt();
        Ok(v)
    }

    /// Coefficients are drawn independently from the standard complex normal.
    pub fn random<R: Rng + ?Sized>(grid: Arc<WeightedGrid>, rng: &mut R) -> Self {
        let coeffs = (0..grid.len()).map(|_| random::complex_normal(rng)).collect();
        HVector { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<WeightedGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().zip(self.grid.weights()).map(|(c, w)| w * c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> HVector {
        HVector { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn normalized(&self) -> Result<HVector> {
        let n = self.norm();
        if n == 0.0 {
            return domain("cannot normalize the zero vector");
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    fn zip_with(&self, other: &HVector, f: impl Fn(C64, C64) -> C64) -> Result<HVector> {
        if !same_grid(&self.grid, &other.grid) {
            return structural("vectors live on different grids");
        }
        Ok(HVector {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn add(&self, other: &HVector) -> Result<HVector> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &HVector) -> Result<HVector> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Coordinates in the orthonormal basis `e_k / √μ_k`.
    pub fn to_orthonormal_coords(&self) -> Vec<C64> {
        self.coeffs.iter().zip(self.grid.weights()).map(|(c, w)| c * w.sqrt()).collect()
    }

    pub fn from_orthonormal_coords(grid: Arc<WeightedGrid>, v: &[C64]) -> Result<HVector> {
        if v.len() != grid.len() {
            return structural("coordinate vector does not match grid");
        }
        let coeffs = v.iter().zip(grid.weights()).map(|(c, w)| c / w.sqrt()).collect();
        Ok(HVector { grid, coeffs })
    }

    /// Isometric zero-extension onto a grid this vector's grid embeds into.
    pub fn zero_extend(&self, target: &Arc<WeightedGrid>) -> Result<HVector> {
        if same_grid(&self.grid, target) {
            return Ok(self.clone());
        }
        let Some(idx) = target.embedding_of(&self.grid) else {
            return structural("vector grid does not embed into the target grid");
        };
        let mut out = HVector::zeros(target.clone());
        for (c, i) in self.coeffs.iter().zip(idx) {
            out.coeffs[i] = *c;
        }
        Ok(out)
    }

    /// Orthogonal projection onto the coordinates of an embedded sub-grid.
    pub fn restrict(&self, sub: &Arc<WeightedGrid>) -> Result<HVector> {
        if same_grid(&self.grid, sub) {
            return Ok(self.clone());
        }
        let Some(idx) = self.grid.embedding_of(sub) else {
            return structural("sub-grid does not embed into the vector grid");
        };
        let coeffs = idx.into_iter().map(|i| self.coeffs[i]).collect();
        Ok(HVector { grid: sub.clone(), coeffs })
    }
}

/// `Σ_k μ_k x_k conj(y_k)`.
pub fn inner_product(x: &HVector, y: &HVector) -> Result<C64> {
    if !same_grid(&x.grid, &y.grid) {
        return structural("inner product of vectors on different grids");
    }
    Ok(x.coeffs.iter().zip(&y.coeffs).zip(x.grid.weights()).map(|((a, b), w)| a * b.conj() * *w).sum())
}

/// Zero-extends both vectors to the join of their grids.
pub fn align(x: &HVector, y: &HVector) -> Result<(HVector, HVector)> {
    if same_grid(&x.grid, &y.grid) {
        return Ok((x.clone(), y.clone()));
    }
    let Some(joint) = x.grid.join(&y.grid) else {
        return structural("vectors live on incompatible grids");
    };
    let joint = Arc::new(joint);
    Ok((x.zero_extend(&joint)?, y.zero_extend(&joint)?))
}

/// Inner product after zero-extension to a common grid.
pub fn aligned_inner_product(x: &HVector, y: &HVector) -> Result<C64> {
    let (a, b) = align(x, y)?;
    inner_product(&a, &b)
}

/// `‖x − y‖` after zero-extension to a common grid.
pub fn distance(x: &HVector, y: &HVector) -> Result<f64> {
    let (a, b) = align(x, y)?;
    Ok(a.sub(&b)?.norm())
}

/// Finite orthogonal sum `⊕_b L²(grid_b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SumSpaceDocument")]
pub struct SumSpace {
    components: Vec<Arc<WeightedGrid>>,
    offsets: Vec<usize>,
    #[serde(skip)]
    total: Arc<WeightedGrid>,
}

#[derive(Deserialize)]
struct SumSpaceDocument {
    components: Vec<Arc<WeightedGrid>>,
}

impl TryFrom<SumSpaceDocument> for SumSpace {
    type Error = Error;

    fn try_from(doc: SumSpaceDocument) -> Result<Self> {
        SumSpace::new(doc.components)
    }
}

impl SumSpace {
    pub fn new(components: Vec<Arc<WeightedGrid>>) -> Result<Self> {
        if components.is_empty() {
            return structural("sum space needs at least one component");
        }
        let mut offsets = Vec::with_capacity(components.len());
        let mut start = 0;
        for c in &components {
            offsets.push(start);
            start += c.len();
        }
        let total = Arc::new(WeightedGrid::concat(&components)?);
        Ok(SumSpace { components, offsets, total })
    }

    pub fn components(&self) -> &[Arc<WeightedGrid>] {
        &self.components
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn num_blocks(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components.iter().map(|c| c.len()).sum()
    }

    /// The concatenated grid the sum lives on.
    pub fn grid(&self) -> Arc<WeightedGrid> {
        self.total.clone()
    }

    pub fn block_range(&self, block: usize) -> Result<Range<usize>> {
        if block >= self.components.len() {
            return structural(format!("block {block} out of range for {} blocks", self.components.len()));
        }
        Ok(self.offsets[block]..self.offsets[block] + self.components[block].len())
    }

    /// Component `block` of a vector on the sum grid.
    pub fn project(&self, block: usize, x: &HVector) -> Result<HVector> {
        let r = self.block_range(block)?;
        if !same_grid(x.grid(), &self.grid()) {
            return structural("vector is not on the sum grid");
        }
        HVector::new(self.components[block].clone(), x.coeffs[r].to_vec())
    }
}

/// Isometric embedding of a block vector into the sum space.
pub fn direct_sum_embed(space: &SumSpace, block: usize, x: &HVector) -> Result<HVector> {
    let r = space.block_range(block)?;
    if !same_grid(x.grid(), &space.components[block]) {
        return structural(format!("vector does not live on block {block}"));
    }
    let mut out = HVector::zeros(space.grid());
    out.coeffs[r].copy_from_slice(&x.coeffs);
    Ok(out)
}

/// Finite truncation of a fixed dense sequence `{x_j}` of nonzero vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSequence {
    vectors: Vec<HVector>,
}

pub const DEFAULT_DENSE_LEN: usize = 16;

impl DenseSequence {
    pub fn new(vectors: Vec<HVector>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return structural("dense sequence must not be empty");
        };
        let grid = first.grid().clone();
        for (j, v) in vectors.iter().enumerate() {
            if !same_grid(v.grid(), &grid) {
                return structural(format!("x_{} lives on a different grid", j + 1));
            }
            if v.is_zero() {
                return domain(format!("x_{} is zero", j + 1));
            }
        }
        Ok(DenseSequence { vectors })
    }

    /// `count` standard complex Gaussian vectors from a seeded stream.
    pub fn seeded(grid: Arc<WeightedGrid>, count: usize, seed: u64) -> Result<Self> {
        let mut rng = random::rng(seed, 0x_d5e5);
        let vectors = (0..count).map(|_| HVector::random(grid.clone(), &mut rng)).collect();
        Self::new(vectors)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[HVector] {
        &self.vectors
    }

    pub fn grid(&self) -> &Arc<WeightedGrid> {
        self.vectors[0].grid()
    }

    pub fn truncated(&self, j: usize) -> Result<Self> {
        if j == 0 || j > self.vectors.len() {
            return structural(format!("cannot keep {j} of {} vectors", self.vectors.len()));
        }
        Ok(DenseSequence { vectors: self.vectors[..j].to_vec() })
    }
}
