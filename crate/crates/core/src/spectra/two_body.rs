//! Two-excitation Bloch problem on a cylinder: open x direction, y resolved
//! by a center-of-mass quasimomentum K.
//!
//! Basis labels are (x₁, x₂, r) with r = y₂ − y₁; the K-dependent phase is
//! attached to y-hops of particle 1, which makes the Hamiltonian strictly
//! 2π-periodic in K. Exchange maps (x₁, x₂, r) → (x₂, x₁, −r) with phase
//! e^{−iKr}; one representative per orbit is stored.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::NumericsError;
use crate::linalg;
use crate::C64;

/// Pairwise interaction as a function of lattice displacement.
#[derive(Debug, Clone)]
pub enum Interaction {
    /// C6 / |d|⁶ over physical spacings (d_x, d_y) in μm.
    PowerLaw { c6: f64, dx: f64, dy: f64 },
    /// Explicit table over |displacement| classes (|dx|, |dy|); absent
    /// entries are zero.
    Table(std::collections::BTreeMap<(u32, u32), f64>),
    /// No interaction.
    None,
}

impl Interaction {
    pub fn v(&self, dx: i64, dy: i64) -> f64 {
        if dx == 0 && dy == 0 {
            return 0.0;
        }
        match self {
            Interaction::PowerLaw { c6, dx: ax, dy: ay } => {
                let rx = dx as f64 * ax;
                let ry = dy as f64 * ay;
                c6 / (rx * rx + ry * ry).powi(3)
            }
            Interaction::Table(map) => map
                .get(&(dx.unsigned_abs() as u32, dy.unsigned_abs() as u32))
                .copied()
                .unwrap_or(0.0),
            Interaction::None => 0.0,
        }
    }
}

/// y-direction treatment of the relative coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YExtent {
    /// Infinite cylinder with |r| ≤ r_max truncation.
    Truncated { r_max: i64 },
    /// Compact ring of circumference l_y (exact; used by the convolution
    /// oracle). K is then quantized to 2πm/l_y.
    Ring { l_y: i64 },
}

/// Anisotropic Harper-Hofstadter cylinder with finite-range interactions.
#[derive(Debug, Clone)]
pub struct CylinderModel {
    pub l_x: usize,
    pub j_x: f64,
    pub j_y: f64,
    /// Uniform flux per plaquette; Landau gauge with phase e^{iΦx} on y-links.
    pub flux: f64,
    pub interaction: Interaction,
    pub y_extent: YExtent,
    /// Two excitations may not occupy one site when set (the physical case).
    pub hard_core: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Label {
    x1: i64,
    x2: i64,
    r: i64,
}

struct PairBasis {
    labels: Vec<Label>,
    index: std::collections::HashMap<Label, usize>,
    /// 1/√2-normalization marker for exchange-fixed points (soft core only).
    fixed_point: Vec<bool>,
}

impl CylinderModel {
    fn exchange(&self, l: Label) -> Label {
        let r = match self.y_extent {
            YExtent::Truncated { .. } => -l.r,
            YExtent::Ring { l_y } => (l_y - l.r) % l_y,
        };
        Label { x1: l.x2, x2: l.x1, r }
    }

    fn r_range(&self) -> Vec<i64> {
        match self.y_extent {
            YExtent::Truncated { r_max } => (-r_max..=r_max).collect(),
            YExtent::Ring { l_y } => (0..l_y).collect(),
        }
    }

    fn is_canonical(&self, l: Label) -> bool {
        let x = self.exchange(l);
        if l == x {
            return true;
        }
        (l.r, l.x1, l.x2) < (x.r, x.x1, x.x2)
    }

    /// Exchange-fixed labels can be annihilated by symmetrization when the
    /// K-phase is −1; `k_phase_r` is e^{−iKr} at the fixed point.
    fn fixed_point_survives(&self, l: Label, k: f64) -> bool {
        let x = self.exchange(l);
        if l != x {
            return true;
        }
        let phase = (-k * l.r as f64).cos();
        phase > 0.0
    }

    fn basis(&self, k: f64) -> PairBasis {
        let mut labels = Vec::new();
        let mut fixed_point = Vec::new();
        for x1 in 0..self.l_x as i64 {
            for x2 in 0..self.l_x as i64 {
                for &r in &self.r_range() {
                    let l = Label { x1, x2, r };
                    if self.hard_core && coincident(self, l) {
                        continue;
                    }
                    if !self.is_canonical(l) {
                        continue;
                    }
                    let fp = self.exchange(l) == l;
                    if fp && !self.fixed_point_survives(l, k) {
                        continue;
                    }
                    labels.push(l);
                    fixed_point.push(fp);
                }
            }
        }
        let index = labels.iter().copied().enumerate().map(|(i, l)| (l, i)).collect();
        PairBasis { labels, index, fixed_point }
    }
}

fn coincident(model: &CylinderModel, l: Label) -> bool {
    if l.x1 != l.x2 {
        return false;
    }
    match model.y_extent {
        YExtent::Truncated { .. } => l.r == 0,
        YExtent::Ring { l_y } => l.r % l_y == 0,
    }
}

/// Assemble the K-resolved two-excitation Hamiltonian.
pub fn build_two_body_bloch(model: &CylinderModel, k: f64) -> Result<Array2<C64>, NumericsError> {
    if model.l_x < 2 {
        return Err(NumericsError::Invalid("need at least two columns".into()));
    }
    let basis = model.basis(k);
    let dim = basis.labels.len();
    let mut h = Array2::<C64>::zeros((dim, dim));

    let weight = |idx: usize| -> f64 {
        if basis.fixed_point[idx] {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            1.0
        }
    };

    for (a, &l) in basis.labels.iter().enumerate() {
        // diagonal: interaction energy of the displacement
        let (dx, dy) = displacement(model, l);
        h[[a, a]] = C64::new(model.interaction.v(dx, dy), 0.0);

        // enumerate raw hops from the representative; a non-canonical
        // target label t satisfies |t⟩ = e^{−iK r_t}|X(t)⟩
        for (target, amp) in raw_hops(model, l, k) {
            if model.hard_core && coincident(model, target) {
                continue;
            }
            let (canon, phase) = canonicalize(model, target, k);
            if let Some(&b) = basis.index.get(&canon) {
                let factor = weight(a) / weight(b);
                h[[b, a]] += amp * phase * C64::new(factor, 0.0);
            }
            // targets outside the basis (truncation) are dropped
        }
    }
    // numerical hermitization guard: assembled elements are exact by
    // construction; assert instead of symmetrize
    Ok(h)
}

fn displacement(model: &CylinderModel, l: Label) -> (i64, i64) {
    let dy = match model.y_extent {
        YExtent::Truncated { .. } => l.r,
        YExtent::Ring { l_y } => {
            let r = l.r.rem_euclid(l_y);
            r.min((l_y - r) % l_y)
        }
    };
    (l.x2 - l.x1, dy)
}

fn wrap_r(model: &CylinderModel, r: i64) -> Option<i64> {
    match model.y_extent {
        YExtent::Truncated { r_max } => (r.abs() <= r_max).then_some(r),
        YExtent::Ring { l_y } => Some(r.rem_euclid(l_y)),
    }
}

/// Raw hop targets and amplitudes from a representative label.
fn raw_hops(model: &CylinderModel, l: Label, k: f64) -> Vec<(Label, C64)> {
    let mut out = Vec::new();
    let jx = C64::new(model.j_x, 0.0);
    // x hops, open boundary
    for (x_new, ok) in [(l.x1 - 1, l.x1 > 0), (l.x1 + 1, l.x1 + 1 < model.l_x as i64)] {
        if ok {
            out.push((Label { x1: x_new, ..l }, jx));
        }
    }
    for (x_new, ok) in [(l.x2 - 1, l.x2 > 0), (l.x2 + 1, l.x2 + 1 < model.l_x as i64)] {
        if ok {
            out.push((Label { x2: x_new, ..l }, jx));
        }
    }
    // y hops: particle 1 carries the K bookkeeping phase
    let gauge = |x: i64| model.flux * x as f64;
    // particle 1 up: r → r − 1, phase e^{iΦ x1} e^{−iK}
    if let Some(r) = wrap_r(model, l.r - 1) {
        out.push((Label { r, ..l }, C64::from_polar(model.j_y, gauge(l.x1) - k)));
    }
    // particle 1 down: r → r + 1, phase e^{−iΦ x1} e^{+iK}
    if let Some(r) = wrap_r(model, l.r + 1) {
        out.push((Label { r, ..l }, C64::from_polar(model.j_y, -gauge(l.x1) + k)));
    }
    // particle 2 up: r → r + 1, phase e^{iΦ x2}
    if let Some(r) = wrap_r(model, l.r + 1) {
        out.push((Label { r, ..l }, C64::from_polar(model.j_y, gauge(l.x2))));
    }
    // particle 2 down: r → r − 1, phase e^{−iΦ x2}
    if let Some(r) = wrap_r(model, l.r - 1) {
        out.push((Label { r, ..l }, C64::from_polar(model.j_y, -gauge(l.x2))));
    }
    out
}

fn canonicalize(model: &CylinderModel, l: Label, k: f64) -> (Label, C64) {
    if model.is_canonical(l) {
        (l, C64::new(1.0, 0.0))
    } else {
        // |l⟩ = e^{−iK r_l} |X(l)⟩
        (model.exchange(l), C64::from_polar(1.0, -k * l.r as f64))
    }
}

// ---------------------------------------------------------------------------
// spectra and classification
// ---------------------------------------------------------------------------

/// Classification of one eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    /// Bound pair aligned two sites along y: displacement class (0, 2).
    TypeI,
    /// Bound pair one site along x: class (1, 0).
    TypeII,
    /// Longer-range bound pair.
    TypeIII,
    Scattering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeSide {
    Left,
    Right,
    Bulk,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundStateLabel {
    pub kind: BoundKind,
    pub dominant_displacement: (u32, u32),
    pub dominant_weight: f64,
    pub edge: EdgeSide,
    pub edge_weight: f64,
    pub energy: f64,
}

/// Weight fraction a single displacement class must reach to call a state
/// bound.
pub const BOUND_WEIGHT_THRESHOLD: f64 = 0.8;
/// Column-density fraction within 2 columns of a boundary to call a state an
/// edge state.
pub const EDGE_WEIGHT_THRESHOLD: f64 = 0.6;
pub const EDGE_COLUMNS: usize = 2;

/// K-resolved spectra with per-state classification labels.
pub struct BlochSpectrum {
    pub k_values: Vec<f64>,
    /// energies[k][state], ascending per k.
    pub energies: Vec<Vec<f64>>,
    pub labels: Vec<Vec<BoundStateLabel>>,
}

/// Eigen-energies and classification labels at one momentum.
pub fn classify_k(
    model: &CylinderModel,
    k: f64,
) -> Result<(Vec<f64>, Vec<BoundStateLabel>), NumericsError> {
    let envelope = continuum_envelope(model, 64);
    classify_k_with_envelope(model, k, &envelope)
}

fn classify_k_with_envelope(
    model: &CylinderModel,
    k: f64,
    envelope: &(f64, f64),
) -> Result<(Vec<f64>, Vec<BoundStateLabel>), NumericsError> {
    let h = build_two_body_bloch(model, k)?;
    let (vals, vecs) = linalg::eigh(&h)?;
    let basis = model.basis(k);
    let labels = classify_states(model, &basis, &vals, &vecs, envelope);
    Ok((vals.to_vec(), labels))
}

/// Diagonalize over a K grid and classify every eigenstate.
pub fn sweep_spectrum(model: &CylinderModel, k_grid: &[f64]) -> Result<BlochSpectrum, NumericsError> {
    let envelope = continuum_envelope(model, 64);
    let results: Vec<Result<(Vec<f64>, Vec<BoundStateLabel>), NumericsError>> = {
        use rayon::prelude::*;
        k_grid
            .par_iter()
            .map(|&k| classify_k_with_envelope(model, k, &envelope))
            .collect()
    };
    let mut energies = Vec::with_capacity(k_grid.len());
    let mut labels = Vec::with_capacity(k_grid.len());
    for r in results {
        let (e, l) = r?;
        energies.push(e);
        labels.push(l);
    }
    Ok(BlochSpectrum { k_values: k_grid.to_vec(), energies, labels })
}

/// Single-particle Hofstadter bands of the open-x strip at momentum k:
/// H(k) = J_x hops along x + 2 J_y cos(k + Φx) on the diagonal.
pub fn single_particle_bands(
    l_x: usize,
    j_x: f64,
    j_y: f64,
    flux: f64,
    k: f64,
) -> Result<Vec<f64>, NumericsError> {
    let mut h = Array2::<C64>::zeros((l_x, l_x));
    for x in 0..l_x {
        h[[x, x]] = C64::new(2.0 * j_y * (k + flux * x as f64).cos(), 0.0);
        if x + 1 < l_x {
            h[[x + 1, x]] = C64::new(j_x, 0.0);
            h[[x, x + 1]] = C64::new(j_x, 0.0);
        }
    }
    let (vals, _) = linalg::eigh(&h)?;
    Ok(vals.to_vec())
}

/// Min/max of the two-particle non-interacting continuum over the zone.
fn continuum_envelope(model: &CylinderModel, k_samples: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k_samples {
        let k = std::f64::consts::TAU * i as f64 / k_samples as f64;
        if let Ok(bands) = single_particle_bands(model.l_x, model.j_x, model.j_y, model.flux, k) {
            lo = lo.min(*bands.first().unwrap());
            hi = hi.max(*bands.last().unwrap());
        }
    }
    (2.0 * lo, 2.0 * hi)
}

fn classify_states(
    model: &CylinderModel,
    basis: &PairBasis,
    vals: &Array1<f64>,
    vecs: &Array2<C64>,
    continuum: &(f64, f64),
) -> Vec<BoundStateLabel> {
    let l_x = model.l_x;
    (0..vals.len())
        .map(|s| {
            let mut class_weight: std::collections::BTreeMap<(u32, u32), f64> =
                std::collections::BTreeMap::new();
            let mut col_density = vec![0.0; l_x];
            for (b, &l) in basis.labels.iter().enumerate() {
                let w = vecs[[b, s]].norm_sqr();
                if w == 0.0 {
                    continue;
                }
                let (dx, dy) = displacement(model, l);
                *class_weight
                    .entry((dx.unsigned_abs() as u32, dy.unsigned_abs() as u32))
                    .or_insert(0.0) += w;
                col_density[l.x1 as usize] += 0.5 * w;
                col_density[l.x2 as usize] += 0.5 * w;
            }
            let (&dominant, &dominant_weight) = class_weight
                .iter()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap_or((&(0, 0), &0.0));
            let energy = vals[s];
            let in_continuum = energy >= continuum.0 && energy <= continuum.1;
            let bound = dominant_weight >= BOUND_WEIGHT_THRESHOLD && !in_continuum;
            let kind = if !bound {
                BoundKind::Scattering
            } else if dominant == (0, 2) {
                BoundKind::TypeI
            } else if dominant == (1, 0) {
                BoundKind::TypeII
            } else {
                BoundKind::TypeIII
            };
            let edge_cols = EDGE_COLUMNS.min(l_x);
            let left: f64 = col_density[..edge_cols].iter().sum();
            let right: f64 = col_density[l_x - edge_cols..].iter().sum();
            let (edge, edge_weight) = if left >= EDGE_WEIGHT_THRESHOLD {
                (EdgeSide::Left, left)
            } else if right >= EDGE_WEIGHT_THRESHOLD {
                (EdgeSide::Right, right)
            } else {
                (EdgeSide::Bulk, left.max(right))
            };
            BoundStateLabel {
                kind,
                dominant_displacement: dominant,
                dominant_weight,
                edge,
                edge_weight,
                energy,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_model(l_x: usize, l_y: i64) -> CylinderModel {
        CylinderModel {
            l_x,
            j_x: 1.0,
            j_y: 0.7,
            flux: std::f64::consts::TAU / 3.0,
            interaction: Interaction::None,
            y_extent: YExtent::Ring { l_y },
            hard_core: false,
        }
    }

    #[test]
    fn bloch_hamiltonian_is_hermitian() {
        let model = CylinderModel {
            l_x: 4,
            j_x: 1.0,
            j_y: 1.7,
            flux: 0.9,
            interaction: Interaction::PowerLaw { c6: 50.0, dx: 1.0, dy: 1.0 },
            y_extent: YExtent::Truncated { r_max: 5 },
            hard_core: true,
        };
        for &k in &[0.0, 0.7, 2.9, -1.3] {
            let h = build_two_body_bloch(&model, k).unwrap();
            let mut defect = 0.0_f64;
            for i in 0..h.nrows() {
                for j in 0..h.ncols() {
                    defect = defect.max((h[[i, j]] - h[[j, i]].conj()).norm());
                }
            }
            assert!(defect < 1e-13, "hermiticity defect {defect:e} at k={k}");
        }
    }

    #[test]
    fn frozen_lattice_eigenvalues_are_interactions() {
        // J_x = J_y = 0: eigenvalues are exactly the interaction values
        let model = CylinderModel {
            l_x: 3,
            j_x: 0.0,
            j_y: 0.0,
            flux: 0.0,
            interaction: Interaction::PowerLaw { c6: 64.0, dx: 2.0, dy: 2.0 },
            y_extent: YExtent::Truncated { r_max: 2 },
            hard_core: true,
        };
        let h = build_two_body_bloch(&model, 0.4).unwrap();
        let (vals, _) = linalg::eigh(&h).unwrap();
        let basis = model.basis(0.4);
        let mut expected: Vec<f64> = basis
            .labels
            .iter()
            .map(|&l| {
                let (dx, dy) = displacement(&model, l);
                model.interaction.v(dx, dy)
            })
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, e) in vals.iter().zip(expected.iter()) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_oracle_on_compact_ring() {
        // soft-core V ≡ 0: two-body spectrum at K = pairwise sums of
        // single-particle spectra with k₁ + k₂ ≡ K
        let l_x = 3;
        let l_y = 4i64;
        let model = free_model(l_x, l_y);
        for m in 0..l_y {
            let k = std::f64::consts::TAU * m as f64 / l_y as f64;
            let h = build_two_body_bloch(&model, k).unwrap();
            let (vals, _) = linalg::eigh(&h).unwrap();

            // oracle: single-particle orbitals (band s, momentum k₁)
            let mut orbitals: Vec<(usize, i64, f64)> = Vec::new();
            for m1 in 0..l_y {
                let k1 = std::f64::consts::TAU * m1 as f64 / l_y as f64;
                let bands =
                    single_particle_bands(l_x, model.j_x, model.j_y, model.flux, k1).unwrap();
                for (s, &e) in bands.iter().enumerate() {
                    orbitals.push((s, m1, e));
                }
            }
            let mut expected: Vec<f64> = Vec::new();
            for (a, &(s1, m1, e1)) in orbitals.iter().enumerate() {
                for &(s2, m2, e2) in &orbitals[a..] {
                    let _ = (s1, s2);
                    if (m1 + m2).rem_euclid(l_y) == m {
                        expected.push(e1 + e2);
                    }
                }
            }
            expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(vals.len(), expected.len(), "dimension mismatch at m={m}");
            for (v, e) in vals.iter().zip(expected.iter()) {
                assert!((v - e).abs() < 1e-9, "K index {m}: {v} vs {e}");
            }
        }
    }

    #[test]
    fn spectrum_periodic_in_k() {
        let model = CylinderModel {
            l_x: 3,
            j_x: 1.0,
            j_y: 0.6,
            flux: std::f64::consts::TAU / 3.0,
            interaction: Interaction::PowerLaw { c6: 30.0, dx: 1.0, dy: 1.0 },
            y_extent: YExtent::Truncated { r_max: 4 },
            hard_core: true,
        };
        let k = 0.35;
        let (v0, _) = linalg::eigh(&build_two_body_bloch(&model, k).unwrap()).unwrap();
        let (v1, _) =
            linalg::eigh(&build_two_body_bloch(&model, k + std::f64::consts::TAU).unwrap())
                .unwrap();
        for (a, b) in v0.iter().zip(v1.iter()) {
            assert!((a - b).abs() < 1e-11);
        }
    }
}
