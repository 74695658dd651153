//! Circulant-based block codes, dummy-component partitioning and
//! spatially-coupled assembly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{format_rows, parse_grid, Token};
use crate::sparse::SparseMatrix;

/// One `z x z` block of a circulant-based parity-check matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Circulant {
    /// Identity matrix cyclically shifted by the given power.
    Power(u32),
    /// All-zero block.
    Zero,
}

impl Circulant {
    pub fn is_zero(self) -> bool {
        matches!(self, Circulant::Zero)
    }

    pub fn power(self) -> Option<u32> {
        match self {
            Circulant::Power(p) => Some(p),
            Circulant::Zero => None,
        }
    }
}

/// A `gamma x kappa` grid of circulants of size `z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CbMatrix {
    gamma: usize,
    kappa: usize,
    z: usize,
    entries: Vec<Circulant>,
}

impl CbMatrix {
    pub fn new(gamma: usize, kappa: usize, z: usize, entries: Vec<Circulant>) -> Result<Self> {
        if gamma == 0 || kappa == 0 || z == 0 {
            return Err(Error::InvalidParameter(format!(
                "gamma, kappa and z must be positive (got {gamma}, {kappa}, {z})"
            )));
        }
        if entries.len() != gamma * kappa {
            return Err(Error::mismatch(gamma * kappa, entries.len()));
        }
        if let Some(p) = entries
            .iter()
            .filter_map(|c| c.power())
            .find(|&p| p as usize >= z)
        {
            return Err(Error::InvalidParameter(format!(
                "circulant power {p} is not below z = {z}"
            )));
        }
        Ok(Self {
            gamma,
            kappa,
            z,
            entries,
        })
    }

    pub fn zeros(gamma: usize, kappa: usize, z: usize) -> Result<Self> {
        Self::new(gamma, kappa, z, vec![Circulant::Zero; gamma * kappa])
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn get(&self, row: usize, col: usize) -> Circulant {
        self.entries[row * self.kappa + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Circulant) -> Result<()> {
        if let Circulant::Power(p) = value {
            if p as usize >= self.z {
                return Err(Error::InvalidParameter(format!(
                    "circulant power {p} is not below z = {}",
                    self.z
                )));
            }
        }
        self.entries[row * self.kappa + col] = value;
        Ok(())
    }

    pub fn entries(&self) -> &[Circulant] {
        &self.entries
    }

    pub fn same_shape(&self, other: &CbMatrix) -> bool {
        self.gamma == other.gamma && self.kappa == other.kappa && self.z == other.z
    }

    /// Parses the text layout: one row group per line, an integer power per
    /// cell and `X` for positions without a circulant.
    pub fn parse(text: &str, z: usize) -> Result<Self> {
        let grid = parse_grid(text)?;
        let mut entries = Vec::with_capacity(grid.rows * grid.cols);
        for i in 0..grid.rows {
            for j in 0..grid.cols {
                entries.push(match grid.get(i, j) {
                    Token::X => Circulant::Zero,
                    Token::Int(p) if (p as usize) < z => Circulant::Power(p as u32),
                    Token::Int(p) => {
                        return Err(grid.error_at(i, j, format!("power {p} is not below z = {z}")))
                    }
                });
            }
        }
        Self::new(grid.rows, grid.cols, z, entries)
    }

    /// Text layout with `X` at zero circulants.
    pub fn to_text(&self) -> String {
        format_rows((0..self.gamma).map(|i| {
            (0..self.kappa).map(move |j| match self.get(i, j) {
                Circulant::Power(p) => p.to_string(),
                Circulant::Zero => "X".to_string(),
            })
        }))
    }

    /// Text layout with `X` wherever the partitioning marks a dummy, which is
    /// how power matrices of irregular codes are published.
    pub fn to_text_masked(&self, pm: &PartitioningMatrix) -> String {
        format_rows((0..self.gamma).map(|i| {
            (0..self.kappa).map(move |j| match (pm.get(i, j), self.get(i, j)) {
                (Label::Dummy, _) | (_, Circulant::Zero) => "X".to_string(),
                (_, Circulant::Power(p)) => p.to_string(),
            })
        }))
    }

    /// Expands every circulant into its `z x z` binary block.
    pub fn lift(&self) -> SparseMatrix {
        let z = self.z;
        let mut entries = Vec::new();
        push_lifted(self, 0, 0, &mut entries);
        SparseMatrix::from_entries(self.gamma * z, self.kappa * z, entries)
            .expect("lifted entries stay in range")
    }
}

// Circulant sigma^p has its ones at (a, (a + p) mod z).
fn push_lifted(grid: &CbMatrix, row_off: usize, col_off: usize, out: &mut Vec<(usize, usize)>) {
    let z = grid.z;
    for i in 0..grid.gamma {
        for j in 0..grid.kappa {
            if let Circulant::Power(p) = grid.get(i, j) {
                for a in 0..z {
                    out.push((row_off + i * z + a, col_off + j * z + (a + p as usize) % z));
                }
            }
        }
    }
}

/// Array-based powers `f(i, j) = i * j mod z`.
pub fn make_ab_powers(gamma: usize, kappa: usize, z: usize) -> Result<CbMatrix> {
    let entries = (0..gamma)
        .flat_map(|i| (0..kappa).map(move |j| Circulant::Power(((i * j) % z) as u32)))
        .collect();
    CbMatrix::new(gamma, kappa, z, entries)
}

/// Destination of one circulant in the partitioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Discarded; never appears in the coupled code.
    Dummy,
    Component(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Dummy => f.write_str("X"),
            Label::Component(k) => write!(f, "{k}"),
        }
    }
}

/// Assignment of every circulant to the dummy or to one of `memory + 1`
/// components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitioningMatrix {
    gamma: usize,
    kappa: usize,
    memory: usize,
    labels: Vec<Label>,
}

impl PartitioningMatrix {
    pub fn new(gamma: usize, kappa: usize, memory: usize, labels: Vec<Label>) -> Result<Self> {
        if gamma == 0 || kappa == 0 {
            return Err(Error::InvalidParameter(
                "partitioning matrix must be non-empty".into(),
            ));
        }
        if labels.len() != gamma * kappa {
            return Err(Error::mismatch(gamma * kappa, labels.len()));
        }
        if let Some(Label::Component(k)) = labels
            .iter()
            .find(|l| matches!(l, Label::Component(k) if *k > memory))
        {
            return Err(Error::InvalidParameter(format!(
                "label {k} exceeds memory {memory}"
            )));
        }
        Ok(Self {
            gamma,
            kappa,
            memory,
            labels,
        })
    }

    pub fn uniform(gamma: usize, kappa: usize, memory: usize, label: Label) -> Result<Self> {
        Self::new(gamma, kappa, memory, vec![label; gamma * kappa])
    }

    /// Parses the text layout. With `memory = None` the memory is the largest
    /// label present (at least 1).
    pub fn parse(text: &str, memory: Option<usize>) -> Result<Self> {
        let grid = parse_grid(text)?;
        let mut labels = Vec::with_capacity(grid.rows * grid.cols);
        let mut max_label = 0;
        for i in 0..grid.rows {
            for j in 0..grid.cols {
                labels.push(match grid.get(i, j) {
                    Token::X => Label::Dummy,
                    Token::Int(k) => {
                        let k = k as usize;
                        if let Some(m) = memory {
                            if k > m {
                                return Err(grid.error_at(
                                    i,
                                    j,
                                    format!("label {k} in row {i}, column {j} exceeds memory {m}"),
                                ));
                            }
                        }
                        max_label = max_label.max(k);
                        Label::Component(k)
                    }
                });
            }
        }
        let memory = memory.unwrap_or(max_label.max(1));
        Self::new(grid.rows, grid.cols, memory, labels)
    }

    pub fn to_text(&self) -> String {
        format_rows(
            (0..self.gamma).map(|i| (0..self.kappa).map(move |j| self.get(i, j).to_string())),
        )
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn get(&self, row: usize, col: usize) -> Label {
        self.labels[row * self.kappa + col]
    }

    pub fn set(&mut self, row: usize, col: usize, label: Label) {
        self.labels[row * self.kappa + col] = label;
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Protograph of the dummy component.
    pub fn dummy_protograph(&self) -> Protograph {
        let bits = self.labels.iter().map(|&l| l == Label::Dummy).collect();
        Protograph::from_bools(self.gamma, self.kappa, bits)
    }

    pub fn require_memory_one(&self) -> Result<()> {
        if self.memory != 1 {
            return Err(Error::UnsupportedMemory(self.memory));
        }
        Ok(())
    }
}

/// A dense binary matrix of circulant occupancy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Protograph {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Protograph {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn from_bools(rows: usize, cols: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), rows * cols, "protograph bit count");
        Self { rows, cols, bits }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged protograph rows".into()));
        }
        let bits = rows.iter().flatten().map(|&b| b != 0).collect();
        Ok(Self::from_bools(rows.len(), cols, bits))
    }

    /// Parses an `X`/`.` pattern (also accepting `1`/`0`).
    pub fn parse_pattern(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for (li, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for (ci, ch) in line.chars().enumerate() {
                match ch {
                    'X' | 'x' | '1' => row.push(1),
                    '.' | '0' => row.push(0),
                    c if c.is_whitespace() => {}
                    c => {
                        return Err(Error::Parse {
                            line: li + 1,
                            column: ci + 1,
                            message: format!("unexpected character `{c}` in dummy pattern"),
                        })
                    }
                }
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::Parse {
                        line: li + 1,
                        column: 1,
                        message: format!("row has {} cells, expected {}", row.len(), first.len()),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "empty dummy pattern".into(),
            });
        }
        Self::from_rows(&rows)
    }

    pub fn to_pattern(&self) -> String {
        format_rows(
            (0..self.rows)
                .map(|r| (0..self.cols).map(move |c| if self.get(r, c) { "X" } else { "." })),
        )
    }

    pub fn to_text(&self) -> String {
        format_rows(
            (0..self.rows)
                .map(|r| (0..self.cols).map(move |c| if self.get(r, c) { "1" } else { "0" })),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits[r * self.cols + c] = v;
    }

    pub fn row_weight(&self, r: usize) -> usize {
        (0..self.cols).filter(|&c| self.get(r, c)).count()
    }

    pub fn col_weight(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let entries = (0..self.rows).flat_map(|r| {
            (0..self.cols)
                .filter(move |&c| self.get(r, c))
                .map(move |c| (r, c))
        });
        SparseMatrix::from_entries(self.rows, self.cols, entries).expect("in range")
    }

    /// Copy without the listed rows.
    pub fn without_row(&self, row: usize) -> Protograph {
        let bits = (0..self.rows)
            .filter(|&r| r != row)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        Protograph::from_bools(self.rows - 1, self.cols, bits)
    }
}

pub fn protograph_of(grid: &CbMatrix) -> Protograph {
    let bits = grid.entries.iter().map(|c| !c.is_zero()).collect();
    Protograph::from_bools(grid.gamma, grid.kappa, bits)
}

/// Output of splitting a block code by a partitioning matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// `H_0 ..= H_m`; these enter the coupled code.
    pub components: Vec<CbMatrix>,
    /// Discarded circulants, kept for inspection only.
    pub dummy: CbMatrix,
}

pub fn partition(h: &CbMatrix, pm: &PartitioningMatrix) -> Result<Partition> {
    if h.gamma != pm.gamma || h.kappa != pm.kappa {
        return Err(Error::mismatch(
            format!("{}x{} partitioning", h.gamma, h.kappa),
            format!("{}x{}", pm.gamma, pm.kappa),
        ));
    }
    let mut components = vec![CbMatrix::zeros(h.gamma, h.kappa, h.z)?; pm.memory + 1];
    let mut dummy = CbMatrix::zeros(h.gamma, h.kappa, h.z)?;
    for i in 0..h.gamma {
        for j in 0..h.kappa {
            let target = match pm.get(i, j) {
                Label::Dummy => &mut dummy,
                Label::Component(k) => &mut components[k],
            };
            target.entries[i * h.kappa + j] = h.get(i, j);
        }
    }
    Ok(Partition { components, dummy })
}

/// A terminated spatially-coupled code built from `m + 1` components and
/// `L` replicas.
#[derive(Debug, Clone)]
pub struct ScCode {
    components: Vec<CbMatrix>,
    coupling_length: usize,
    lifted: SparseMatrix,
    protograph: Protograph,
}

/// Places `L` copies of the stacked components along the band diagonal:
/// replica `r` (0-based) puts `H_k` at row block `r + k`, column block `r`.
pub fn assemble_sc(components: &[CbMatrix], coupling_length: usize) -> Result<ScCode> {
    if coupling_length == 0 {
        return Err(Error::InvalidParameter(
            "coupling length must be at least 1".into(),
        ));
    }
    let first = components
        .first()
        .ok_or_else(|| Error::InvalidParameter("at least one component is required".into()))?;
    if let Some(bad) = components.iter().find(|c| !c.same_shape(first)) {
        return Err(Error::mismatch(
            format!(
                "{}x{} components with z = {}",
                first.gamma, first.kappa, first.z
            ),
            format!("{}x{} with z = {}", bad.gamma, bad.kappa, bad.z),
        ));
    }
    let (gamma, kappa, z) = (first.gamma, first.kappa, first.z);
    let m = components.len() - 1;
    let row_blocks = coupling_length + m;

    let mut entries = Vec::new();
    let mut proto = Protograph::zeros(gamma * row_blocks, kappa * coupling_length);
    for r in 0..coupling_length {
        for (k, comp) in components.iter().enumerate() {
            push_lifted(comp, (r + k) * gamma * z, r * kappa * z, &mut entries);
            for i in 0..gamma {
                for j in 0..kappa {
                    if !comp.get(i, j).is_zero() {
                        proto.set((r + k) * gamma + i, r * kappa + j, true);
                    }
                }
            }
        }
    }
    let lifted =
        SparseMatrix::from_entries(gamma * z * row_blocks, kappa * z * coupling_length, entries)?;
    Ok(ScCode {
        components: components.to_vec(),
        coupling_length,
        lifted,
        protograph: proto,
    })
}

/// Partitions `cm` by `pm` and couples the components over `L` replicas.
pub fn build_sc(cm: &CbMatrix, pm: &PartitioningMatrix, coupling_length: usize) -> Result<ScCode> {
    assemble_sc(&partition(cm, pm)?.components, coupling_length)
}

impl ScCode {
    pub fn components(&self) -> &[CbMatrix] {
        &self.components
    }

    pub fn memory(&self) -> usize {
        self.components.len() - 1
    }

    pub fn coupling_length(&self) -> usize {
        self.coupling_length
    }

    pub fn gamma(&self) -> usize {
        self.components[0].gamma
    }

    pub fn kappa(&self) -> usize {
        self.components[0].kappa
    }

    pub fn z(&self) -> usize {
        self.components[0].z
    }

    pub fn lifted(&self) -> &SparseMatrix {
        &self.lifted
    }

    pub fn protograph(&self) -> &Protograph {
        &self.protograph
    }

    pub fn code_length(&self) -> usize {
        self.lifted.n_cols()
    }

    /// `1 - gamma (L + m) / (kappa L)`.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.lifted.n_rows() as f64 / self.lifted.n_cols() as f64
    }

    /// The `kappa z` columns of replica `r` (1-based).
    pub fn replica(&self, r: usize) -> Result<SparseMatrix> {
        if r == 0 || r > self.coupling_length {
            return Err(Error::ReplicaOutOfRange {
                index: r,
                len: self.coupling_length,
            });
        }
        let width = self.kappa() * self.z();
        Ok(self.lifted.column_block((r - 1) * width, width))
    }

    /// Check-node degrees per protograph row, split into interior row blocks
    /// (`m ..= L - 1`, all components present) and the terminated boundary.
    pub fn check_degrees(&self) -> CheckDegreeReport {
        let gamma = self.gamma();
        let m = self.memory();
        let blocks = self.coupling_length + m;
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for b in 0..blocks {
            let degrees: Vec<usize> = (0..gamma)
                .map(|u| self.protograph.row_weight(b * gamma + u))
                .collect();
            if b >= m && b < self.coupling_length {
                interior.extend(degrees);
            } else {
                boundary.push(BoundaryBlock {
                    row_block: b,
                    degrees,
                });
            }
        }
        let kappa = self.kappa();
        let mut phi = vec![0.0; kappa];
        for &d in &interior {
            if d >= 1 && d <= kappa {
                phi[d - 1] += 1.0;
            }
        }
        if !interior.is_empty() {
            let n = interior.len() as f64;
            phi.iter_mut().for_each(|p| *p /= n);
        }
        CheckDegreeReport {
            interior_phi: phi,
            interior_degrees: interior,
            boundary,
        }
    }

    /// Histogram of protograph column degrees in replica 1, as fractions of
    /// `kappa` indexed by degree - 1.
    pub fn replica_vn_histogram(&self) -> Vec<f64> {
        let gamma = self.gamma();
        let kappa = self.kappa();
        let mut hist = vec![0.0; gamma];
        for c in 0..kappa {
            let d = self.protograph.col_weight(c);
            if d >= 1 {
                hist[d - 1] += 1.0 / kappa as f64;
            }
        }
        hist
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBlock {
    pub row_block: usize,
    pub degrees: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckDegreeReport {
    /// Fraction of interior check nodes with degree `j + 1`.
    pub interior_phi: Vec<f64>,
    pub interior_degrees: Vec<usize>,
    pub boundary: Vec<BoundaryBlock>,
}

/// Variable- and check-node degree fractions of the coupled protograph.
///
/// `vn[i]` is the fraction of variable nodes of degree `i + 1`; `cn[j]` the
/// fraction of interior check nodes of degree `j + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    pub vn: Vec<f64>,
    pub cn: Vec<f64>,
}

/// Degree fractions implied by the dummy protograph. A column with `beta`
/// dummy entries leaves a variable node of degree `gamma - beta`; a row with
/// `alpha` dummies leaves interior check nodes of degree `kappa - alpha`.
/// Nodes left with degree zero are not representable and are skipped.
pub fn degree_distributions(
    hd: &Protograph,
    gamma: usize,
    kappa: usize,
) -> Result<DegreeDistribution> {
    if hd.rows != gamma || hd.cols != kappa {
        return Err(Error::mismatch(
            format!("{gamma}x{kappa} dummy protograph"),
            format!("{}x{}", hd.rows, hd.cols),
        ));
    }
    let mut vn = vec![0.0; gamma];
    for v in 0..kappa {
        let beta = hd.col_weight(v);
        if beta < gamma {
            vn[gamma - beta - 1] += 1.0 / kappa as f64;
        }
    }
    let mut cn = vec![0.0; kappa];
    for u in 0..gamma {
        let alpha = hd.row_weight(u);
        if alpha < kappa {
            cn[kappa - alpha - 1] += 1.0 / gamma as f64;
        }
    }
    Ok(DegreeDistribution { vn, cn })
}
