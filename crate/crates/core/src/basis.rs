//! Bit-encoded configuration bases and excitation-number sectors.
//!
//! Site `i` maps to bit `i`; vacant sites never carry an excitation, so
//! their bits stay clear in every enumerated configuration. Hard-core
//! statistics are built in: a bit is either set or clear.

use crate::error::NumericsError;
use crate::geometry::ArrayGeometry;

/// Configuration bitmask; supports up to 128 sites.
pub type Config = u128;

/// Which slice of the Hilbert space a basis spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorMode {
    /// All 2^N configurations of the active sites.
    Full,
    /// Fixed excitation number N_r.
    Fixed(usize),
    /// Excitation band |N_r − center| ≤ halfwidth.
    Band { center: usize, halfwidth: usize },
}

/// An ordered basis of configurations with a bijective index map.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub n_sites: usize,
    pub mode: SectorMode,
    states: Vec<Config>,
}

/// Guard for full-space enumeration.
const MAX_FULL_SITES: usize = 24;

impl SectorBasis {
    pub fn full(geometry: &ArrayGeometry) -> Result<Self, NumericsError> {
        let active: Vec<usize> = geometry.active_sites().collect();
        if active.len() > MAX_FULL_SITES {
            return Err(NumericsError::DimensionOverflow(1 << active.len(), 1 << MAX_FULL_SITES));
        }
        let mut states = Vec::with_capacity(1 << active.len());
        enumerate_subsets(&active, &mut |cfg| states.push(cfg));
        states.sort_unstable();
        Ok(Self { n_sites: geometry.n_sites(), mode: SectorMode::Full, states })
    }

    pub fn fixed(geometry: &ArrayGeometry, n_r: usize) -> Self {
        let active: Vec<usize> = geometry.active_sites().collect();
        let mut states = Vec::new();
        enumerate_combinations(&active, n_r, &mut |cfg| states.push(cfg));
        states.sort_unstable();
        Self { n_sites: geometry.n_sites(), mode: SectorMode::Fixed(n_r), states }
    }

    pub fn band(geometry: &ArrayGeometry, center: usize, halfwidth: usize) -> Self {
        let active: Vec<usize> = geometry.active_sites().collect();
        let lo = center.saturating_sub(halfwidth);
        let hi = (center + halfwidth).min(active.len());
        let mut states = Vec::new();
        for k in lo..=hi {
            enumerate_combinations(&active, k, &mut |cfg| states.push(cfg));
        }
        states.sort_unstable();
        Self { n_sites: geometry.n_sites(), mode: SectorMode::Band { center, halfwidth }, states }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, idx: usize) -> Config {
        self.states[idx]
    }

    pub fn states(&self) -> &[Config] {
        &self.states
    }

    pub fn index_of(&self, config: Config) -> Option<usize> {
        self.states.binary_search(&config).ok()
    }

    pub fn excitations(&self, idx: usize) -> u32 {
        self.states[idx].count_ones()
    }

    /// Index of the configuration reached by flipping `site` from each basis
    /// state; `u32::MAX` marks a partner outside the basis.
    pub fn flip_table(&self, site: usize) -> Vec<u32> {
        let bit: Config = 1 << site;
        self.states
            .iter()
            .map(|&s| self.index_of(s ^ bit).map_or(u32::MAX, |k| k as u32))
            .collect()
    }

    /// Indices of basis states with an excitation on `site`.
    pub fn occupied_indices(&self, site: usize) -> Vec<u32> {
        let bit: Config = 1 << site;
        self.states
            .iter()
            .enumerate()
            .filter_map(|(k, &s)| (s & bit != 0).then_some(k as u32))
            .collect()
    }
}

fn enumerate_subsets(active: &[usize], f: &mut impl FnMut(Config)) {
    let n = active.len();
    for mask in 0u64..(1u64 << n) {
        let mut cfg: Config = 0;
        for (b, &site) in active.iter().enumerate() {
            if mask >> b & 1 == 1 {
                cfg |= 1 << site;
            }
        }
        f(cfg);
    }
}

fn enumerate_combinations(active: &[usize], k: usize, f: &mut impl FnMut(Config)) {
    fn rec(active: &[usize], k: usize, start: usize, acc: Config, f: &mut impl FnMut(Config)) {
        if k == 0 {
            f(acc);
            return;
        }
        for idx in start..=active.len().saturating_sub(k) {
            rec(active, k - 1, idx + 1, acc | (1 << active[idx]), f);
        }
    }
    rec(active, k, 0, 0, f);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_basis_counts() {
        let g = ArrayGeometry::rectangular(2, 2, 1.0, 1.0);
        let b = SectorBasis::full(&g).unwrap();
        assert_eq!(b.dim(), 16);
        assert_eq!(b.index_of(0), Some(0));
    }

    #[test]
    fn fixed_sector_counts_are_binomial() {
        let g = ArrayGeometry::rectangular(4, 1, 1.0, 1.0);
        assert_eq!(SectorBasis::fixed(&g, 0).dim(), 1);
        assert_eq!(SectorBasis::fixed(&g, 1).dim(), 4);
        assert_eq!(SectorBasis::fixed(&g, 2).dim(), 6);
    }

    #[test]
    fn vacancies_are_excluded_everywhere() {
        let mut g = ArrayGeometry::rectangular(3, 1, 1.0, 1.0);
        g.add_vacancy(1).unwrap();
        let b = SectorBasis::full(&g).unwrap();
        assert_eq!(b.dim(), 4);
        assert!(b.states().iter().all(|s| s & 0b010 == 0));
        let one = SectorBasis::fixed(&g, 1);
        assert_eq!(one.dim(), 2);
    }

    #[test]
    fn band_mode_unions_sectors() {
        let g = ArrayGeometry::rectangular(4, 1, 1.0, 1.0);
        let b = SectorBasis::band(&g, 1, 1);
        assert_eq!(b.dim(), 1 + 4 + 6);
        assert_eq!(b.mode, SectorMode::Band { center: 1, halfwidth: 1 });
    }

    #[test]
    fn flip_table_round_trip() {
        let g = ArrayGeometry::rectangular(3, 1, 1.0, 1.0);
        let b = SectorBasis::full(&g).unwrap();
        let t = b.flip_table(1);
        for idx in 0..b.dim() {
            let partner = t[idx] as usize;
            assert_eq!(b.state(partner) ^ b.state(idx), 0b010);
            assert_eq!(t[partner] as usize, idx);
        }
        // fixed sector: flips leave the sector
        let s1 = SectorBasis::fixed(&g, 1);
        assert!(s1.flip_table(0).iter().all(|&p| p == u32::MAX));
    }
}
