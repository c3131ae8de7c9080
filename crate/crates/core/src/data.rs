//! Count data for a 2×2×2 Bell experiment.
//!
//! Setting pairs are ordered (1,1), (1,2), (2,1), (2,2) and outcome pairs
//! ++, +−, −+, −−; the flat index of cell `j` under pair `i` is `4i + j`.

use alloc::string::{String, ToString};
use core::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SettingPair {
    pub alice: u8,
    pub bob: u8,
}

impl SettingPair {
    pub const fn new(alice: u8, bob: u8) -> Self {
        SettingPair { alice, bob }
    }

    /// Position in the canonical order, or `None` for settings outside {1,2}.
    pub fn index(self) -> Option<usize> {
        match (self.alice, self.bob) {
            (1, 1) => Some(0),
            (1, 2) => Some(1),
            (2, 1) => Some(2),
            (2, 2) => Some(3),
            _ => None,
        }
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.alice, self.bob)
    }
}

pub const SETTING_PAIRS: [SettingPair; 4] = [
    SettingPair::new(1, 1),
    SettingPair::new(1, 2),
    SettingPair::new(2, 1),
    SettingPair::new(2, 2),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn is_flip(self) -> bool {
        self == Sign::Minus
    }
}

/// Counts of outcome pairs for one setting pair, indexed
/// `[alice_outcome][bob_outcome]` with `+` first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CountTable {
    pub counts: [[u64; 2]; 2],
}

impl CountTable {
    pub const fn new(counts: [[u64; 2]; 2]) -> Self {
        CountTable { counts }
    }

    /// From cells in the order ++, +−, −+, −−.
    pub const fn from_cells(c: [u64; 4]) -> Self {
        CountTable {
            counts: [[c[0], c[1]], [c[2], c[3]]],
        }
    }

    pub fn cells(&self) -> [u64; 4] {
        let c = self.counts;
        [c[0][0], c[0][1], c[1][0], c[1][1]]
    }

    pub fn n(&self) -> u64 {
        self.cells().iter().sum()
    }

    fn flipped(&self, alice: bool, bob: bool) -> Self {
        let mut out = [[0; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let xs = if alice { 1 - x } else { x };
                let ys = if bob { 1 - y } else { y };
                out[xs][ys] = self.counts[x][y];
            }
        }
        CountTable { counts: out }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutcomeLabels {
    pub alice: [String; 2],
    pub bob: [String; 2],
}

impl OutcomeLabels {
    pub fn plus_minus() -> Self {
        OutcomeLabels {
            alice: ["+".to_string(), "-".to_string()],
            bob: ["+".to_string(), "-".to_string()],
        }
    }

    /// Detection / non-detection, with detection playing the role of `+`.
    pub fn detect_nondetect() -> Self {
        OutcomeLabels {
            alice: ["d".to_string(), "n".to_string()],
            bob: ["d".to_string(), "n".to_string()],
        }
    }
}

impl Default for OutcomeLabels {
    fn default() -> Self {
        Self::plus_minus()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BellDataset {
    pub name: String,
    pub tables: [CountTable; 4],
    pub outcome_labels: OutcomeLabels,
    /// Set once the dataset is known to have its maximal one-sided CHSH
    /// value in the form ρ₁₁ + ρ₁₂ + ρ₂₁ − ρ₂₂.
    pub canonical: bool,
}

impl BellDataset {
    pub fn new(name: impl Into<String>, tables: [CountTable; 4], outcome_labels: OutcomeLabels) -> Self {
        BellDataset {
            name: name.into(),
            tables,
            outcome_labels,
            canonical: false,
        }
    }

    /// Convenience constructor from four rows of cells (++, +−, −+, −−).
    pub fn from_cells(name: impl Into<String>, rows: [[u64; 4]; 4]) -> Self {
        Self::new(name, rows.map(CountTable::from_cells), OutcomeLabels::default())
    }

    pub fn table(&self, pair: SettingPair) -> Option<&CountTable> {
        pair.index().map(|i| &self.tables[i])
    }

    pub fn trials(&self) -> [u64; 4] {
        self.tables.map(|t| t.n())
    }

    pub fn total_trials(&self) -> u64 {
        self.trials().iter().sum()
    }

    /// All sixteen counts in flat order.
    pub fn counts(&self) -> [u64; 16] {
        let mut out = [0; 16];
        for (i, t) in self.tables.iter().enumerate() {
            out[4 * i..4 * i + 4].copy_from_slice(&t.cells());
        }
        out
    }

    fn check_nonempty(&self) -> Result<()> {
        for (i, t) in self.tables.iter().enumerate() {
            if t.n() == 0 {
                return Err(Error::DegenerateData { setting: SETTING_PAIRS[i] });
            }
        }
        Ok(())
    }
}

pub const EMBEDDED_NAMES: [&str; 6] = ["delft", "munich", "nist", "vienna", "weihs", "zhang"];

const DELFT: [[u64; 4]; 4] = [[23, 3, 4, 23], [33, 11, 5, 30], [22, 10, 6, 24], [4, 20, 21, 6]];
const MUNICH: [[u64; 4]; 4] = [[16, 4, 3, 13], [11, 4, 2, 17], [19, 4, 3, 16], [4, 22, 10, 2]];
const NIST: [[u64; 4]; 4] = [
    [6378, 3282, 3189, 43_897_356],
    [6794, 2821, 23243, 43_276_943],
    [6486, 21334, 2843, 43_338_281],
    [106, 27539, 30040, 42_502_788],
];
const VIENNA: [[u64; 4]; 4] = [
    [141_439, 73391, 76224, 875_392_736],
    [146_831, 67941, 326_768, 874_976_534],
    [158_338, 425_067, 58742, 875_239_860],
    [8392, 576_445, 463_985, 874_651_457],
];
const WEIHS: [[u64; 4]; 4] = [
    [1683, 418, 361, 1578],
    [1100, 269, 156, 1386],
    [1728, 313, 351, 1978],
    [179, 1636, 1143, 294],
];
// The (2,1) −− cell is typeset "15 1" in the source table; 151 is the value
// that reproduces the published 1357 wins in 1649 trials.
const ZHANG: [[u64; 4]; 4] = [[178, 44, 29, 183], [199, 36, 28, 160], [160, 47, 31, 151], [38, 160, 166, 39]];

/// One of the six published experiments, already canonical.
pub fn load_embedded(name: &str) -> Result<BellDataset> {
    let (rows, labels) = match name {
        "delft" => (DELFT, OutcomeLabels::plus_minus()),
        "munich" => (MUNICH, OutcomeLabels::plus_minus()),
        "nist" => (NIST, OutcomeLabels::detect_nondetect()),
        "vienna" => (VIENNA, OutcomeLabels::detect_nondetect()),
        "weihs" => (WEIHS, OutcomeLabels::plus_minus()),
        "zhang" => (ZHANG, OutcomeLabels::plus_minus()),
        _ => return Err(Error::UnknownDataset { name: name.to_string() }),
    };
    let mut ds = BellDataset::new(name, rows.map(CountTable::from_cells), labels);
    ds.canonical = true;
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlations {
    /// ρ_ab in setting-pair order.
    pub rho: [f64; 4],
    /// Alice's P(+ | a), pooled over Bob's settings.
    pub alice_marginals: [f64; 2],
    /// Bob's P(+ | b), pooled over Alice's settings.
    pub bob_marginals: [f64; 2],
}

pub fn correlations(ds: &BellDataset) -> Result<Correlations> {
    ds.check_nonempty()?;
    let mut rho = [0.0; 4];
    for (i, t) in ds.tables.iter().enumerate() {
        let c = t.cells();
        let agree = (c[0] + c[3]) as f64;
        let disagree = (c[1] + c[2]) as f64;
        rho[i] = (agree - disagree) / t.n() as f64;
    }
    let mut alice_marginals = [0.0; 2];
    let mut bob_marginals = [0.0; 2];
    for a in 0..2 {
        // tables (a,1), (a,2)
        let (t1, t2) = (&ds.tables[2 * a], &ds.tables[2 * a + 1]);
        let plus = t1.counts[0][0] + t1.counts[0][1] + t2.counts[0][0] + t2.counts[0][1];
        alice_marginals[a] = plus as f64 / (t1.n() + t2.n()) as f64;
    }
    for b in 0..2 {
        // tables (1,b), (2,b)
        let (t1, t2) = (&ds.tables[b], &ds.tables[2 + b]);
        let plus = t1.counts[0][0] + t1.counts[1][0] + t2.counts[0][0] + t2.counts[1][0];
        bob_marginals[b] = plus as f64 / (t1.n() + t2.n()) as f64;
    }
    Ok(Correlations {
        rho,
        alice_marginals,
        bob_marginals,
    })
}

/// Signs of one one-sided CHSH combination Σ sᵢ ρᵢ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignVector(pub [i8; 4]);

impl SignVector {
    pub const CANONICAL: SignVector = SignVector([1, 1, 1, -1]);

    pub fn apply(&self, rho: &[f64; 4]) -> f64 {
        self.0.iter().zip(rho).map(|(&s, r)| s as f64 * r).sum()
    }

    pub fn as_f64(&self) -> [f64; 4] {
        self.0.map(|s| s as f64)
    }
}

/// The eight sign vectors with an odd number of minus signs, in
/// lexicographic order with `+` before `−`. The canonical one comes first.
pub const ONE_SIDED_CHSH: [SignVector; 8] = [
    SignVector([1, 1, 1, -1]),
    SignVector([1, 1, -1, 1]),
    SignVector([1, -1, 1, 1]),
    SignVector([1, -1, -1, -1]),
    SignVector([-1, 1, 1, 1]),
    SignVector([-1, 1, -1, -1]),
    SignVector([-1, -1, 1, -1]),
    SignVector([-1, -1, -1, 1]),
];

pub fn chsh_values(rho: &[f64; 4]) -> [f64; 8] {
    ONE_SIDED_CHSH.map(|s| s.apply(rho))
}

pub fn chsh_all_signs(ds: &BellDataset) -> Result<[f64; 8]> {
    Ok(chsh_values(&correlations(ds)?.rho))
}

/// Relabelling of settings and outcomes. The output table at `(a, b)` is the
/// input table at the (possibly swapped) settings, with Alice's outcomes
/// flipped when `alice_flip[a-1]` is `Minus` and likewise for Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CanonicalTransform {
    pub alice_flip: [Sign; 2],
    pub bob_flip: [Sign; 2],
    pub alice_setting_swap: bool,
    pub bob_setting_swap: bool,
    /// The maximal one-sided CHSH value was attained by more than one sign
    /// vector; the first in enumeration order was used.
    pub tie: bool,
}

impl Default for CanonicalTransform {
    fn default() -> Self {
        CanonicalTransform {
            alice_flip: [Sign::Plus; 2],
            bob_flip: [Sign::Plus; 2],
            alice_setting_swap: false,
            bob_setting_swap: false,
            tie: false,
        }
    }
}

impl CanonicalTransform {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Same relabelling, ignoring the tie note.
    pub fn is_identity(&self) -> bool {
        self.alice_flip == [Sign::Plus; 2]
            && self.bob_flip == [Sign::Plus; 2]
            && !self.alice_setting_swap
            && !self.bob_setting_swap
    }

    fn changes(&self) -> u32 {
        let flips = self.alice_flip.iter().chain(&self.bob_flip).filter(|s| s.is_flip()).count();
        flips as u32 + self.alice_setting_swap as u32 + self.bob_setting_swap as u32
    }

    pub fn inverse(&self) -> Self {
        let sa = self.alice_setting_swap as usize;
        let sb = self.bob_setting_swap as usize;
        CanonicalTransform {
            alice_flip: [self.alice_flip[sa], self.alice_flip[1 - sa]],
            bob_flip: [self.bob_flip[sb], self.bob_flip[1 - sb]],
            ..*self
        }
    }

    pub fn apply(&self, ds: &BellDataset) -> BellDataset {
        let mut tables = ds.tables;
        for a in 0..2 {
            for b in 0..2 {
                let src_a = if self.alice_setting_swap { 1 - a } else { a };
                let src_b = if self.bob_setting_swap { 1 - b } else { b };
                tables[2 * a + b] = ds.tables[2 * src_a + src_b]
                    .flipped(self.alice_flip[a].is_flip(), self.bob_flip[b].is_flip());
            }
        }
        BellDataset {
            tables,
            canonical: false,
            ..ds.clone()
        }
    }

    /// Effect of the transform on the correlation vector.
    pub fn apply_to_rho(&self, rho: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for a in 0..2 {
            for b in 0..2 {
                let src_a = if self.alice_setting_swap { 1 - a } else { a };
                let src_b = if self.bob_setting_swap { 1 - b } else { b };
                out[2 * a + b] =
                    self.alice_flip[a].value() * self.bob_flip[b].value() * rho[2 * src_a + src_b];
            }
        }
        out
    }

    /// All 64 relabellings, fewest changes first, outcome flips preferred
    /// over setting swaps.
    fn candidates() -> impl Iterator<Item = CanonicalTransform> {
        let sign = |bit: bool| if bit { Sign::Minus } else { Sign::Plus };
        let mut all: alloc::vec::Vec<CanonicalTransform> = (0..64u32)
            .map(|code| {
                let flips = code & 0xF;
                let swaps = code >> 4;
                CanonicalTransform {
                    alice_flip: [sign(flips & 1 != 0), sign(flips & 2 != 0)],
                    bob_flip: [sign(flips & 4 != 0), sign(flips & 8 != 0)],
                    alice_setting_swap: swaps & 1 != 0,
                    bob_setting_swap: swaps & 2 != 0,
                    tie: false,
                }
            })
            .collect();
        // stable sort keeps code order within equal keys
        all.sort_by_key(|t| (t.changes(), t.alice_setting_swap || t.bob_setting_swap));
        all.into_iter()
    }
}

const TIE_TOL: f64 = 1e-12;

/// Relabel so that the largest one-sided CHSH value is ρ₁₁ + ρ₁₂ + ρ₂₁ − ρ₂₂.
pub fn canonicalize(ds: &BellDataset) -> Result<(BellDataset, CanonicalTransform)> {
    let rho = correlations(ds)?.rho;
    let values = chsh_values(&rho);
    let mut best = 0;
    for i in 1..8 {
        if values[i] > values[best] {
            best = i;
        }
    }
    let max = values[best];
    let tie = values.iter().filter(|&&v| (v - max).abs() <= TIE_TOL).count() > 1;
    let target = ONE_SIDED_CHSH[best];
    let transform = CanonicalTransform::candidates()
        .find(|t| {
            // the chosen sign vector must land on the canonical one
            let moved = t.apply_to_rho(&rho);
            (SignVector::CANONICAL.apply(&moved) - target.apply(&rho)).abs() <= TIE_TOL
        })
        .expect("outcome flips reach every odd sign pattern");
    let transform = CanonicalTransform { tie, ..transform };
    let mut out = transform.apply(ds);
    out.canonical = true;
    Ok((out, transform))
}

/// Relative frequencies in flat order plus the per-setting trial totals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatView {
    pub phat: [f64; 16],
    pub n: [u64; 4],
    pub counts: [u64; 16],
}

impl FlatView {
    pub fn block(&self, i: usize) -> [f64; 4] {
        [self.phat[4 * i], self.phat[4 * i + 1], self.phat[4 * i + 2], self.phat[4 * i + 3]]
    }
}

pub fn flatten(ds: &BellDataset) -> Result<FlatView> {
    ds.check_nonempty()?;
    let counts = ds.counts();
    let n = ds.trials();
    let mut phat = [0.0; 16];
    for k in 0..16 {
        phat[k] = counts[k] as f64 / n[k / 4] as f64;
    }
    Ok(FlatView { phat, n, counts })
}
