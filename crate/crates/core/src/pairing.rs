//! Quantization of the channel space and pairing of first-hop cells with
//! second-hop cells.
//!
//! A first-hop cell `Q` is paired with the second-hop cell `F(Q)`. Because
//! `F` only permutes entries, the image of a cell is again a cell of the same
//! quantizer, and `quantize(F(H)) = F(quantize(H))` holds exactly.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::fading::{ChannelMatrix, Hop};
use crate::linalg::{CMatrix, Complex};

/// Square grid `Δ(ℤ + jℤ)` truncated to `|re|, |im| ≤ ΔN`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridQuantizer {
    pub delta: f64,
    pub n: u32,
}

/// Angle bins centered on `exp(j2πk/N)`, `k = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseQuantizer {
    pub n: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantizerKind {
    Grid(GridQuantizer),
    Phase(PhaseQuantizer),
}

impl QuantizerKind {
    fn coords_per_entry(&self) -> usize {
        match self {
            QuantizerKind::Grid(_) => 2,
            QuantizerKind::Phase(_) => 1,
        }
    }
}

/// A quantizer bound to the shape of one hop with `relays = 2M` relays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    kind: QuantizerKind,
    hop: Hop,
    relays: usize,
}

/// Cell label: per-entry integer coordinates in row-major order. Grid cells
/// store `(re, im)` indices per entry, phase cells one bin index per entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    hop: Hop,
    relays: usize,
    coords: Vec<i32>,
}

impl CellId {
    pub fn hop(&self) -> Hop {
        self.hop
    }

    pub fn relays(&self) -> usize {
        self.relays
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords
    }

    fn width(&self) -> usize {
        self.coords.len() / (2 * self.relays)
    }
}

impl Quantizer {
    pub fn grid(delta: f64, n: u32, hop: Hop, relays: usize) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid(format!("grid interval must be positive, got {delta}")));
        }
        if n == 0 {
            return Err(Error::invalid("grid range N must be at least 1"));
        }
        Self::with_kind(QuantizerKind::Grid(GridQuantizer { delta, n }), hop, relays)
    }

    pub fn phase(n: u32, hop: Hop, relays: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("phase quantizer needs at least one bin"));
        }
        Self::with_kind(QuantizerKind::Phase(PhaseQuantizer { n }), hop, relays)
    }

    pub fn with_kind(kind: QuantizerKind, hop: Hop, relays: usize) -> Result<Self> {
        if relays < 2 || !relays.is_multiple_of(2) {
            return Err(Error::invalid(format!("quantizers cover an even number of relays, got {relays}")));
        }
        Ok(Self { kind, hop, relays })
    }

    pub fn kind(&self) -> QuantizerKind {
        self.kind
    }

    pub fn hop(&self) -> Hop {
        self.hop
    }

    pub fn relays(&self) -> usize {
        self.relays
    }

    pub fn dims(&self) -> (usize, usize) {
        self.hop.dims(self.relays)
    }

    /// Same partition applied to the other hop's shape.
    pub fn for_hop(&self, hop: Hop) -> Quantizer {
        Quantizer { hop, ..*self }
    }

    /// Number of cells, `(2N+1)^{2·entries}` for the grid and `N^{entries}`
    /// for phases.
    pub fn cell_count(&self) -> f64 {
        let entries = (2 * self.relays) as f64;
        match self.kind {
            QuantizerKind::Grid(g) => (2.0 * g.n as f64 + 1.0).powf(2.0 * entries),
            QuantizerKind::Phase(p) => (p.n as f64).powf(entries),
        }
    }

    /// The cell containing `m`, or `None` when some entry is outside the grid's
    /// range. The phase quantizer is total.
    pub fn quantize(&self, m: &ChannelMatrix) -> Result<Option<CellId>> {
        if m.hop() != self.hop || m.matrix().dims() != self.dims() {
            let (r, c) = m.matrix().dims();
            let (er, ec) = self.dims();
            return Err(Error::DimensionMismatch {
                expected: format!("{:?} hop {er}x{ec}", self.hop),
                actual: format!("{:?} hop {r}x{c}", m.hop()),
            });
        }
        let mut coords = Vec::with_capacity(m.matrix().entries().len() * self.kind.coords_per_entry());
        for z in m.matrix().entries() {
            match self.kind {
                QuantizerKind::Grid(g) => {
                    let (Some(re), Some(im)) = (grid_index(z.re, g), grid_index(z.im, g)) else {
                        return Ok(None);
                    };
                    coords.push(re);
                    coords.push(im);
                }
                QuantizerKind::Phase(p) => coords.push(phase_index(*z, p)),
            }
        }
        Ok(Some(CellId { hop: self.hop, relays: self.relays, coords }))
    }

    fn check_cell(&self, cell: &CellId) -> Result<()> {
        let expected = 2 * self.relays * self.kind.coords_per_entry();
        if cell.hop != self.hop || cell.relays != self.relays || cell.coords.len() != expected {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?} cell over {} relays", self.hop, self.relays),
                actual: format!("{:?} cell over {} relays", cell.hop, cell.relays),
            });
        }
        Ok(())
    }

    /// Center `Q` of a cell.
    pub fn center(&self, cell: &CellId) -> Result<ChannelMatrix> {
        self.check_cell(cell)?;
        let (rows, cols) = self.dims();
        let entries: Vec<Complex> = match self.kind {
            QuantizerKind::Grid(g) => cell
                .coords
                .chunks_exact(2)
                .map(|c| Complex::new(g.delta * c[0] as f64, g.delta * c[1] as f64))
                .collect(),
            QuantizerKind::Phase(p) => {
                cell.coords.iter().map(|&k| Complex::from_polar(1.0, TAU * k as f64 / p.n as f64)).collect()
            }
        };
        ChannelMatrix::new(self.hop, CMatrix::from_vec(rows, cols, entries)?)
    }

    /// A random corner of the cell: every coordinate is pushed to one of its
    /// two cell edges. Used to probe the worst case over a cell.
    pub fn random_corner<R: Rng + ?Sized>(&self, cell: &CellId, rng: &mut R) -> Result<ChannelMatrix> {
        let center = self.center(cell)?;
        // just inside both edges so rounding cannot leave the cell
        let edge = 0.5 * (1.0 - 1e-9);
        let mut m = center.into_matrix();
        for z in m.entries_mut() {
            match self.kind {
                QuantizerKind::Grid(g) => {
                    let sr = if rng.random::<bool>() { edge } else { -edge };
                    let si = if rng.random::<bool>() { edge } else { -edge };
                    *z += Complex::new(sr * g.delta, si * g.delta);
                }
                QuantizerKind::Phase(p) => {
                    let s = if rng.random::<bool>() { edge } else { -edge };
                    *z *= Complex::from_polar(1.0, s * TAU / p.n as f64);
                }
            }
        }
        ChannelMatrix::new(self.hop, m)
    }
}

fn grid_index(x: f64, g: GridQuantizer) -> Option<i32> {
    if !x.is_finite() {
        return None;
    }
    let k = (x / g.delta + 0.5).floor();
    (k.abs() <= g.n as f64).then_some(k as i32)
}

fn phase_index(z: Complex, p: PhaseQuantizer) -> i32 {
    let width = TAU / p.n as f64;
    let angle = z.arg().rem_euclid(TAU);
    let k = ((angle + PI / p.n as f64) / width).floor() as i64;
    k.rem_euclid(p.n as i64) as i32
}

/// Moves every coordinate of `cell` to the position its entry takes under
/// `F` (first hop to second hop) or `F⁻¹` (second to first). `F₂` is the
/// anti-transpose of each 2×2 block, so both directions share one rule.
fn permute_under_f(cell: &CellId, target: Hop) -> CellId {
    let w = cell.width();
    let relays = cell.relays;
    let (rows, cols) = target.dims(relays);
    let (_, src_cols) = cell.hop.dims(relays);
    let mut coords = Vec::with_capacity(cell.coords.len());
    for r in 0..rows {
        for c in 0..cols {
            let (sr, sc) = match target {
                // G[r][2m + c'] = H_m[1 - c'][1 - r]
                Hop::Second => (2 * (c / 2) + 1 - c % 2, 1 - r),
                // H[2m + r'][c] = G_m[1 - c][1 - r']
                Hop::First => (1 - c, 2 * (r / 2) + 1 - r % 2),
            };
            let at = (sr * src_cols + sc) * w;
            coords.extend_from_slice(&cell.coords[at..at + w]);
        }
    }
    CellId { hop: target, relays, coords }
}

/// The second-hop cell `F(Q)` paired with first-hop cell `Q`.
pub fn cell_image_under_f(cell: &CellId) -> Result<CellId> {
    if cell.hop != Hop::First {
        return Err(Error::invalid("cell image under F takes a first-hop cell"));
    }
    Ok(permute_under_f(cell, Hop::Second))
}

/// Inverse of [`cell_image_under_f`].
pub fn cell_preimage_under_f(cell: &CellId) -> Result<CellId> {
    if cell.hop != Hop::Second {
        return Err(Error::invalid("cell preimage under F takes a second-hop cell"));
    }
    Ok(permute_under_f(cell, Hop::First))
}

/// Time indices (1-based) grouped by the cell their channel falls into.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndexSets {
    sets: BTreeMap<CellId, Vec<usize>>,
    block_length: usize,
}

impl IndexSets {
    pub fn get(&self, cell: &CellId) -> &[usize] {
        self.sets.get(cell).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellId, &[usize])> {
        self.sets.iter().map(|(c, v)| (c, v.as_slice()))
    }

    pub fn cells(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    /// Number of time indices that fell inside the quantizer range.
    pub fn covered(&self) -> usize {
        self.sets.values().map(Vec::len).sum()
    }

    pub fn insert(&mut self, cell: CellId, t: usize) {
        self.block_length = self.block_length.max(t);
        self.sets.entry(cell).or_default().push(t);
    }
}

/// `𝒯(Q) = {t | channel[t] ∈ 𝒜(Q)}` for every occupied cell.
pub fn build_index_sets(q: &Quantizer, seq: &[ChannelMatrix]) -> Result<IndexSets> {
    let cells = seq.iter().map(|m| q.quantize(m)).collect::<Result<Vec<_>>>()?;
    Ok(index_sets_from_cells(cells))
}

/// Groups precomputed cells (one per time index, `None` when uncovered).
pub fn index_sets_from_cells(cells: Vec<Option<CellId>>) -> IndexSets {
    let mut sets = IndexSets { block_length: cells.len(), ..Default::default() };
    for (i, cell) in cells.into_iter().enumerate() {
        if let Some(cell) = cell {
            sets.sets.entry(cell).or_default().push(i + 1);
        }
    }
    sets
}

/// Pairs the first `k` indices of `𝒯₁(Q)` with the first `k` of `𝒯₂(F(Q))`,
/// `k = min` of the two sizes, for every first-hop cell `Q`.
pub fn match_pairs(first: &IndexSets, second: &IndexSets) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (cell, t1) in first.iter() {
        let image = cell_image_under_f(cell)?;
        let t2 = second.get(&image);
        pairs.extend(t1.iter().copied().zip(t2.iter().copied()));
    }
    Ok(pairs)
}

/// Asymptotic quantizer schedule for block length `n_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub delta: f64,
    pub n: u32,
    /// Concentration tolerance `δ`.
    pub tolerance: f64,
}

/// `Δ = n_B^{-1/(96M)}`, `N = max(1, round(n_B^{1/(48M)}))`, `δ = n_B^{-1/3}`.
pub fn default_schedule(block_length: f64, pairs: usize) -> Result<Schedule> {
    if !(block_length >= 2.0) || pairs == 0 {
        return Err(Error::invalid("schedule needs n_B >= 2 and M >= 1"));
    }
    let m = pairs as f64;
    let delta = block_length.powf(-1.0 / (96.0 * m));
    let n = block_length.powf(1.0 / (48.0 * m)).round().max(1.0);
    let tolerance = block_length.powf(-1.0 / 3.0);
    Ok(Schedule { delta, n: n.min(u32::MAX as f64) as u32, tolerance })
}

/// Lower bound on the probability that every cell frequency lies within `δ`
/// of its probability: `1 − (|𝒬₁| + |𝒬₂|)/(2 n_B δ²)`.
pub fn concentration_bound(cells_first: f64, cells_second: f64, block_length: f64, tolerance: f64) -> f64 {
    1.0 - (cells_first + cells_second) / (2.0 * block_length * tolerance * tolerance)
}
