//! Dressing configuration, interaction law, noise specification, and the
//! validation entry point shared by all other modules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::formulas;
use crate::geometry::ArrayGeometry;
use crate::C64;

/// Van der Waals interaction law V(r) = C6 / r⁶.
///
/// `c6` is in rad·μs⁻¹·μm⁶ and carries its sign explicitly; it is an input,
/// never computed from atomic structure.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InteractionLaw {
    pub c6: f64,
}

impl InteractionLaw {
    pub fn new(c6: f64) -> Result<Self, ModelError> {
        if !c6.is_finite() || c6 == 0.0 {
            return Err(ModelError::BadC6(c6));
        }
        Ok(Self { c6 })
    }

    /// Interaction energy for two excitations a distance `r` μm apart.
    pub fn at_distance(&self, r: f64) -> f64 {
        self.c6 / r.powi(6)
    }
}

/// Pairwise interaction between Rydberg excitations on sites `i` and `j`.
///
/// Errors on identical-site and vacant-site queries.
pub fn pair_interaction(
    geometry: &ArrayGeometry,
    law: &InteractionLaw,
    i: usize,
    j: usize,
) -> Result<f64, ModelError> {
    if i == j {
        return Err(ModelError::IdenticalSites(i));
    }
    for s in [i, j] {
        if s >= geometry.n_sites() {
            return Err(ModelError::SiteOutOfRange(s, geometry.n_sites()));
        }
        if geometry.is_vacant(s) {
            return Err(ModelError::VacantSite(s));
        }
    }
    Ok(law.at_distance(geometry.distance(i, j)))
}

/// One dressing color: a laser frequency component with per-site complex
/// Rabi amplitudes. A missing map entry means the site is not dressed by
/// this color.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColorField {
    pub label: String,
    /// Detuning Δ in rad·μs⁻¹ (nonzero).
    pub detuning: f64,
    /// Site index → Ω = |Ω| e^{iφ} in rad·μs⁻¹.
    pub rabi: BTreeMap<usize, C64>,
}

impl ColorField {
    pub fn new(label: impl Into<String>, detuning: f64) -> Self {
        Self { label: label.into(), detuning, rabi: BTreeMap::new() }
    }

    /// Set Ω on a site from magnitude and phase.
    pub fn dress(mut self, site: usize, magnitude: f64, phase: f64) -> Self {
        self.rabi.insert(site, C64::from_polar(magnitude, phase));
        self
    }

    pub fn amplitude(&self, site: usize) -> Option<C64> {
        self.rabi.get(&site).copied()
    }
}

/// The full multicolor dressing pattern: the gauge-field control surface.
///
/// `site_detuning_offsets`, when present, shift the detunings of *all*
/// colors dressing a given site by the same amount; this is the knob used
/// for chemical-potential balancing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DressingConfig {
    pub colors: Vec<ColorField>,
    #[serde(default)]
    pub site_detuning_offsets: BTreeMap<usize, f64>,
}

impl DressingConfig {
    pub fn new(colors: Vec<ColorField>) -> Self {
        Self { colors, site_detuning_offsets: BTreeMap::new() }
    }

    pub fn color(&self, label: &str) -> Option<&ColorField> {
        self.colors.iter().find(|c| c.label == label)
    }

    pub fn offset(&self, site: usize) -> f64 {
        self.site_detuning_offsets.get(&site).copied().unwrap_or(0.0)
    }

    /// Effective detuning of `color` as seen by `site` (base + site offset).
    pub fn detuning_at(&self, color: &ColorField, site: usize) -> f64 {
        color.detuning + self.offset(site)
    }

    /// Labels of the colors dressing `site`.
    pub fn colors_at(&self, site: usize) -> impl Iterator<Item = &ColorField> {
        self.colors.iter().filter(move |c| c.rabi.contains_key(&site))
    }

    /// Largest dressing parameter max |Ω/Δ| over all dressed sites.
    pub fn max_dressing_parameter(&self) -> f64 {
        let mut max = 0.0_f64;
        for c in &self.colors {
            for (&site, amp) in &c.rabi {
                let delta = self.detuning_at(c, site);
                if delta != 0.0 {
                    max = max.max(amp.norm() / delta.abs());
                }
            }
        }
        max
    }
}

/// Shared dressing colors of two sites: the resonant hopping channels.
/// An empty set means no resonant excitation-exchange channel exists.
pub fn channels<'a>(
    config: &'a DressingConfig,
    i: usize,
    j: usize,
) -> Result<Vec<&'a ColorField>, ModelError> {
    if i == j {
        return Err(ModelError::IdenticalSites(i));
    }
    Ok(config
        .colors
        .iter()
        .filter(|c| c.rabi.contains_key(&i) && c.rabi.contains_key(&j))
        .collect())
}

/// Correlation structure of the laser phase noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseCorrelation {
    /// One phase path shared by every dressing field.
    Global,
    /// One path per color, shared by all sites that color addresses.
    PerColor,
    /// Independent path for every (atom, color) pair.
    PerAtom,
}

/// Stochastic imperfection parameters. All rates are nonnegative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Dephasing rate γ of the laser phase random walk, μs⁻¹.
    pub phase_noise_rate: f64,
    pub phase_correlation: PhaseCorrelation,
    /// Doppler detuning spread Δ_T (standard deviation), rad·μs⁻¹.
    pub doppler_sigma: f64,
    /// Rydberg decay rate κ, μs⁻¹.
    pub decay_rate: f64,
    pub rng_seed: u64,
}

impl NoiseSpec {
    pub fn quiet(seed: u64) -> Self {
        Self {
            phase_noise_rate: 0.0,
            phase_correlation: PhaseCorrelation::Global,
            doppler_sigma: 0.0,
            decay_rate: 0.0,
            rng_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for r in [self.phase_noise_rate, self.doppler_sigma, self.decay_rate] {
            if r < 0.0 || !r.is_finite() {
                return Err(ModelError::NegativeRate(r));
            }
        }
        Ok(())
    }
}

/// Validation report: weak-dressing and crosstalk diagnostics plus
/// non-fatal warnings.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// max |Ω/Δ| over dressed sites.
    pub max_dressing_parameter: f64,
    /// Minimum inter-color detuning gap δ = min |Δ_Θ − Δ_Θ'|, rad·μs⁻¹.
    pub min_color_gap: Option<f64>,
    /// Largest |J| over channel-coupled pairs, rad·μs⁻¹.
    pub max_hopping: f64,
    /// Crosstalk bound max |J| / δ.
    pub crosstalk_bound: Option<f64>,
    pub warnings: Vec<String>,
}

/// Relative margin below which |Δ_Θ + V_ij| triggers a resonance-hazard
/// warning.
const RESONANCE_WARN_MARGIN: f64 = 0.05;

/// Validate a full model description and compute its diagnostics.
///
/// Hard errors: invariant violations and exact resonances Δ_Θ + V_ij = 0 on
/// a dressed pair, where the perturbative hopping expression is singular.
pub fn validate(
    geometry: &ArrayGeometry,
    config: &DressingConfig,
    law: &InteractionLaw,
) -> Result<Diagnostics, ModelError> {
    // invariants on the color set
    for (a, ca) in config.colors.iter().enumerate() {
        if ca.detuning == 0.0 {
            return Err(ModelError::ZeroDetuning(ca.label.clone()));
        }
        for cb in &config.colors[a + 1..] {
            if ca.label == cb.label {
                return Err(ModelError::DuplicateColor(ca.label.clone()));
            }
            if ca.detuning == cb.detuning {
                return Err(ModelError::DegenerateDetunings(
                    ca.label.clone(),
                    cb.label.clone(),
                    ca.detuning,
                ));
            }
        }
        for (&site, amp) in &ca.rabi {
            if site >= geometry.n_sites() {
                return Err(ModelError::SiteOutOfRange(site, geometry.n_sites()));
            }
            if geometry.is_vacant(site) {
                return Err(ModelError::DressedVacancy(ca.label.clone(), site));
            }
            if !amp.norm().is_finite() {
                return Err(ModelError::NegativeRabi(amp.norm(), ca.label.clone(), site));
            }
        }
    }

    let mut warnings = Vec::new();
    let mut max_hopping = 0.0_f64;

    // per-pair resonance audit and hopping magnitudes
    let active: Vec<usize> = geometry.active_sites().collect();
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            let v = pair_interaction(geometry, law, i, j)?;
            // every color dressing either endpoint sees the pair energy
            for c in &config.colors {
                let dress_i = c.rabi.contains_key(&i);
                let dress_j = c.rabi.contains_key(&j);
                if !(dress_i || dress_j) {
                    continue;
                }
                for (site, dressed) in [(i, dress_i), (j, dress_j)] {
                    if !dressed {
                        continue;
                    }
                    let delta = self_detuning(config, c, site);
                    let denom = delta + v;
                    if denom == 0.0 {
                        return Err(ModelError::ResonancePole(c.label.clone(), i, j, v));
                    }
                    if denom.abs() < RESONANCE_WARN_MARGIN * delta.abs() {
                        warnings.push(format!(
                            "near resonance: |Delta_{} + V({i},{j})| = {:.3e} rad/us",
                            c.label,
                            denom.abs()
                        ));
                    }
                }
                if dress_i && dress_j {
                    let di = config.detuning_at(c, i);
                    let dj = config.detuning_at(c, j);
                    let dm = 0.5 * (di + dj);
                    let amp_i = c.rabi[&i];
                    let amp_j = c.rabi[&j];
                    let hop =
                        formulas::hopping_kernel(amp_i, amp_j, v, dm).norm();
                    max_hopping = max_hopping.max(hop);
                }
            }
        }
    }

    let max_dressing = config.max_dressing_parameter();
    if max_dressing > 0.3 {
        warnings.push(format!(
            "strong dressing: max |Omega/Delta| = {max_dressing:.3} outside the perturbative regime"
        ));
    }

    let mut min_gap: Option<f64> = None;
    for (a, ca) in config.colors.iter().enumerate() {
        for cb in &config.colors[a + 1..] {
            let gap = (ca.detuning - cb.detuning).abs();
            min_gap = Some(min_gap.map_or(gap, |g: f64| g.min(gap)));
        }
    }

    let crosstalk_bound = min_gap.map(|d| max_hopping / d);
    if let Some(x) = crosstalk_bound {
        if x > 0.1 {
            warnings.push(format!("crosstalk bound |J|/delta = {x:.3} exceeds 0.1"));
        }
    }

    Ok(Diagnostics {
        max_dressing_parameter: max_dressing,
        min_color_gap: min_gap,
        max_hopping,
        crosstalk_bound,
        warnings,
    })
}

fn self_detuning(config: &DressingConfig, color: &ColorField, site: usize) -> f64 {
    config.detuning_at(color, site)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz_to_angular;

    fn two_atom_config() -> (ArrayGeometry, DressingConfig, InteractionLaw) {
        let geom = ArrayGeometry::new(vec![(0.0, 0.0), (2.0, 0.0)]).unwrap();
        let color = ColorField::new("A", mhz_to_angular(120.0))
            .dress(0, mhz_to_angular(10.0), 0.0)
            .dress(1, mhz_to_angular(10.0), 0.0);
        let law = InteractionLaw::new(64.0).unwrap();
        (geom, DressingConfig::new(vec![color]), law)
    }

    #[test]
    fn pair_interaction_power_law() {
        // distance d and 2d differ by a factor 64 exactly
        let geom = ArrayGeometry::new(vec![(0.0, 0.0), (3.0, 0.0), (6.0, 0.0)]).unwrap();
        let law = InteractionLaw::new(1.7e7).unwrap();
        let v1 = pair_interaction(&geom, &law, 0, 1).unwrap();
        let v2 = pair_interaction(&geom, &law, 0, 2).unwrap();
        assert!((v1 / v2 - 64.0).abs() < 1e-12);
    }

    #[test]
    fn pair_interaction_direct_value() {
        // C6 = 64, d = 2 um -> V = 1 rad/us
        let (geom, _, law) = two_atom_config();
        assert_eq!(pair_interaction(&geom, &law, 0, 1).unwrap(), 1.0);
    }

    #[test]
    fn pair_interaction_is_symmetric_and_guarded() {
        let (mut geom, _, law) = two_atom_config();
        assert_eq!(
            pair_interaction(&geom, &law, 0, 1).unwrap(),
            pair_interaction(&geom, &law, 1, 0).unwrap()
        );
        assert!(matches!(
            pair_interaction(&geom, &law, 1, 1),
            Err(ModelError::IdenticalSites(1))
        ));
        geom.add_vacancy(1).unwrap();
        assert!(matches!(pair_interaction(&geom, &law, 0, 1), Err(ModelError::VacantSite(1))));
    }

    #[test]
    fn channel_intersection() {
        // site 0 dressed by {A,B}, site 1 by {B,C} -> shared {B}
        let a = ColorField::new("A", 1.0).dress(0, 0.5, 0.0);
        let b = ColorField::new("B", 2.0).dress(0, 0.5, 0.0).dress(1, 0.5, 0.0);
        let c = ColorField::new("C", 3.0).dress(1, 0.5, 0.0);
        let cfg = DressingConfig::new(vec![a, b, c]);
        let shared = channels(&cfg, 0, 1).unwrap();
        assert_eq!(shared.len(), 1);
        assert_eq!(shared[0].label, "B");
        // symmetry
        let shared_rev = channels(&cfg, 1, 0).unwrap();
        assert_eq!(shared_rev.len(), 1);
        assert_eq!(shared_rev[0].label, "B");
    }

    #[test]
    fn disjoint_and_identical_color_sets() {
        let a = ColorField::new("A", 1.0).dress(0, 0.5, 0.0);
        let c = ColorField::new("C", 3.0).dress(1, 0.5, 0.0);
        let cfg = DressingConfig::new(vec![a, c]);
        assert!(channels(&cfg, 0, 1).unwrap().is_empty());

        let a = ColorField::new("A", 1.0).dress(0, 0.5, 0.0).dress(1, 0.5, 0.0);
        let b = ColorField::new("B", 2.0).dress(0, 0.5, 0.0).dress(1, 0.5, 0.0);
        let cfg = DressingConfig::new(vec![a, b]);
        assert_eq!(channels(&cfg, 0, 1).unwrap().len(), 2);
    }

    #[test]
    fn validate_rejects_equal_detunings() {
        let (geom, _, law) = two_atom_config();
        let a = ColorField::new("A", 5.0).dress(0, 0.1, 0.0);
        let b = ColorField::new("B", 5.0).dress(1, 0.1, 0.0);
        let cfg = DressingConfig::new(vec![a, b]);
        assert!(matches!(
            validate(&geom, &cfg, &law),
            Err(ModelError::DegenerateDetunings(..))
        ));
    }

    #[test]
    fn validate_rejects_exact_resonance() {
        // Delta_A = -V for a dressed pair: pole of the hopping expression
        let (geom, _, law) = two_atom_config(); // V(0,1) = 1 rad/us
        let a = ColorField::new("A", -1.0).dress(0, 0.1, 0.0).dress(1, 0.1, 0.0);
        let cfg = DressingConfig::new(vec![a]);
        assert!(matches!(validate(&geom, &cfg, &law), Err(ModelError::ResonancePole(..))));
    }

    #[test]
    fn validate_reports_dressing_parameter() {
        let (geom, cfg, law) = two_atom_config();
        let d = validate(&geom, &cfg, &law).unwrap();
        assert!((d.max_dressing_parameter - 10.0 / 120.0).abs() < 1e-12);
        assert!(d.warnings.is_empty());
    }
}
