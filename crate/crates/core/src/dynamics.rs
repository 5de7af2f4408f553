//! Time evolution: exact dynamics of the driven many-atom Hamiltonian in the
//! rotating frame, effective-model dynamics in fixed excitation sectors, and
//! observable extraction.
//!
//! The reference integrator for the exact dynamics is a fixed-step 4th-order
//! splitting (Yoshida composition of Strang steps). The interaction part is
//! diagonal in the configuration basis and exponentiated exactly; the drive
//! part factorizes over atoms into 2×2 rotations, also exponentiated exactly,
//! with drive phases frozen at substep midpoints. Every step is therefore a
//! product of unitaries and the norm is conserved to rounding regardless of
//! step size; the step bound controls accuracy only. A classic RK4 path is
//! provided for cross-checks.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::basis::{Config, SectorBasis, SectorMode};
use crate::effective::EffectiveModel;
use crate::error::NumericsError;
use crate::geometry::ArrayGeometry;
use crate::linalg::{self, Spectrum, DENSE_EIG_LIMIT};
use crate::model::{DressingConfig, InteractionLaw};
use crate::noise::NoiseRealization;
use crate::{C64, Real};

/// A pure state over a [`SectorBasis`].
#[derive(Debug, Clone)]
pub struct StateVector {
    pub basis: SectorBasis,
    pub amplitudes: Array1<C64>,
}

impl StateVector {
    /// Computational basis state for one configuration.
    pub fn basis_state(basis: SectorBasis, config: Config) -> Result<Self, NumericsError> {
        let idx = basis.index_of(config).ok_or(NumericsError::StateOutsideSector)?;
        let mut amplitudes = Array1::zeros(basis.dim());
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes })
    }

    /// General superposition from (configuration, amplitude) pairs;
    /// normalizes the result.
    pub fn superposition(
        basis: SectorBasis,
        terms: &[(Config, C64)],
    ) -> Result<Self, NumericsError> {
        let mut amplitudes = Array1::<C64>::zeros(basis.dim());
        for &(cfg, amp) in terms {
            let idx = basis.index_of(cfg).ok_or(NumericsError::StateOutsideSector)?;
            amplitudes[idx] += amp;
        }
        let n = linalg::norm(&amplitudes);
        if n == 0.0 {
            return Err(NumericsError::Invalid("zero state".into()));
        }
        Ok(Self { basis, amplitudes: amplitudes / C64::new(n, 0.0) })
    }

    pub fn norm(&self) -> Real {
        linalg::norm(&self.amplitudes)
    }

    /// Population of an excitation on `site`.
    pub fn site_population(&self, site: usize) -> Real {
        let bit: Config = 1 << site;
        self.basis
            .states()
            .iter()
            .zip(self.amplitudes.iter())
            .filter(|(s, _)| **s & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// Diagonal pair density ⟨n_i n_j⟩. For i = j the hard-core convention
/// returns 0 (no doubly occupied site is representable).
pub fn two_body_correlator(state: &StateVector, i: usize, j: usize) -> Real {
    if i == j {
        return 0.0;
    }
    let mask: Config = (1 << i) | (1 << j);
    state
        .basis
        .states()
        .iter()
        .zip(state.amplitudes.iter())
        .filter(|(s, _)| **s & mask == mask)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Integrator selection for the exact dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    /// Fixed-step 4th-order unitary splitting (reference path).
    SplitStep4,
    /// Classic fixed-step RK4 on the full Hamiltonian; cross-check path,
    /// practical for small dimensions only.
    Rk4,
}

/// Options for [`evolve_full`].
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub integrator: Integrator,
    /// Hard upper bound on the step; `None` uses the default rule
    /// h = (2π / max energy scale) / 40 over detunings, interactions, and
    /// Rabi frequencies.
    pub step_bound: Option<f64>,
    /// Store state snapshots at every output time.
    pub snapshots: bool,
    /// Population allowed in the outermost excitation shell of a
    /// band-truncated basis before an error is raised.
    pub band_leak_threshold: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            integrator: Integrator::SplitStep4,
            step_bound: None,
            snapshots: false,
            band_leak_threshold: 1e-3,
        }
    }
}

/// Observable record of one evolution.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    /// Output times (μs), snapped to the integrator grid.
    pub times: Vec<f64>,
    /// Site-resolved excitation populations, shape (n_times, n_sites).
    pub populations: Array2<f64>,
    /// Excitation-number distribution, shape (n_times, n_active + 1).
    pub excitation_distribution: Array2<f64>,
    /// ⟨x⟩ = Σ_i x_i P_i over site positions.
    pub com_x: Vec<f64>,
    /// State norm before renormalization bookkeeping at each output.
    pub norm: Vec<f64>,
    pub snapshots: Option<Vec<(f64, StateVector)>>,
    /// State at the last output time.
    pub final_state: StateVector,
    /// Times of decay jumps (trajectory runs).
    pub jump_times: Vec<f64>,
    /// Peak population observed in the outermost excitation shell
    /// (band-truncated runs; 0 otherwise).
    pub band_leakage: f64,
}

impl EvolutionResult {
    /// CSV export: time column, then one column per observable.
    pub fn to_csv(&self) -> String {
        let n_sites = self.populations.ncols();
        let n_k = self.excitation_distribution.ncols();
        let mut head = String::from("time_us");
        for i in 0..n_sites {
            head.push_str(&format!(",pop_site_{i}"));
        }
        for k in 0..n_k {
            head.push_str(&format!(",pop_nr_{k}"));
        }
        head.push_str(",com_x,norm\n");
        let mut out = head;
        for (t_idx, &t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t:.12e}"));
            for i in 0..n_sites {
                out.push_str(&format!(",{:.12e}", self.populations[[t_idx, i]]));
            }
            for k in 0..n_k {
                out.push_str(&format!(",{:.12e}", self.excitation_distribution[[t_idx, k]]));
            }
            out.push_str(&format!(",{:.12e},{:.12e}\n", self.com_x[t_idx], self.norm[t_idx]));
        }
        out
    }

    /// Region-restricted center of mass Σ_{i∈region} x_i P_i / Σ_{i∈region} P_i.
    pub fn region_com(&self, geometry: &ArrayGeometry, region: &[usize]) -> Vec<f64> {
        self.times
            .iter()
            .enumerate()
            .map(|(t, _)| {
                let mut num = 0.0;
                let mut den = 0.0;
                for &i in region {
                    let p = self.populations[[t, i]];
                    num += geometry.position(i).0 * p;
                    den += p;
                }
                if den > 0.0 {
                    num / den
                } else {
                    f64::NAN
                }
            })
            .collect()
    }
}

/// Discrepancy metrics between two runs on identical grids.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Discrepancy {
    /// max over times of Σ_i |P_i^a − P_i^b|.
    pub max_l1: f64,
    /// Time-averaged population L¹ distance.
    pub mean_l1: f64,
    /// Max |⟨x⟩_a − ⟨x⟩_b| over times.
    pub max_com_dev: f64,
}

/// Compare site populations and COM observables of two runs.
pub fn compare_runs(a: &EvolutionResult, b: &EvolutionResult) -> Result<Discrepancy, NumericsError> {
    if a.times.len() != b.times.len()
        || a.times
            .iter()
            .zip(&b.times)
            .any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs()))
        || a.populations.ncols() != b.populations.ncols()
    {
        return Err(NumericsError::GridMismatch);
    }
    let mut max_l1 = 0.0_f64;
    let mut sum_l1 = 0.0_f64;
    let mut max_com = 0.0_f64;
    for t in 0..a.times.len() {
        let mut l1 = 0.0;
        for i in 0..a.populations.ncols() {
            l1 += (a.populations[[t, i]] - b.populations[[t, i]]).abs();
        }
        max_l1 = max_l1.max(l1);
        sum_l1 += l1;
        if a.com_x[t].is_finite() && b.com_x[t].is_finite() {
            max_com = max_com.max((a.com_x[t] - b.com_x[t]).abs());
        }
    }
    Ok(Discrepancy {
        max_l1,
        mean_l1: sum_l1 / a.times.len() as f64,
        max_com_dev: max_com,
    })
}

// ---------------------------------------------------------------------------
// exact dynamics
// ---------------------------------------------------------------------------

/// One drive term: color Θ acting on one site.
#[derive(Debug, Clone)]
struct DriveTerm {
    site: usize,
    /// Ω/2 including the static phase.
    omega_half: C64,
    /// Effective detuning Δ_Θ + site offset + Doppler offset.
    detuning: f64,
    /// Phase-noise path index, if any.
    path: Option<usize>,
}

fn assemble_drive(
    config: &DressingConfig,
    geometry: &ArrayGeometry,
    noise: Option<&NoiseRealization>,
) -> Vec<DriveTerm> {
    let mut terms = Vec::new();
    for (color_idx, color) in config.colors.iter().enumerate() {
        for (&site, &amp) in &color.rabi {
            if geometry.is_vacant(site) {
                continue;
            }
            let mut detuning = config.detuning_at(color, site);
            let mut path = None;
            if let Some(nr) = noise {
                detuning += nr.doppler_offset(site);
                path = nr.path_index(color_idx, site);
            }
            terms.push(DriveTerm { site, omega_half: 0.5 * amp, detuning, path });
        }
    }
    terms
}

/// Default step bound h = (2π / max energy scale) / 40, the scale running
/// over detunings, Rabi frequencies, and the largest interaction energy.
pub fn resolve_step_bound(
    config: &DressingConfig,
    law: &InteractionLaw,
    geometry: &ArrayGeometry,
    override_bound: Option<f64>,
) -> f64 {
    if let Some(h) = override_bound {
        return h;
    }
    let mut max_scale = 0.0_f64;
    for c in &config.colors {
        max_scale = max_scale.max(c.detuning.abs());
        for amp in c.rabi.values() {
            max_scale = max_scale.max(amp.norm());
        }
    }
    if let Some(dmin) = geometry.min_distance() {
        max_scale = max_scale.max(law.at_distance(dmin).abs());
    }
    if max_scale == 0.0 {
        return 0.05;
    }
    std::f64::consts::TAU / max_scale / 40.0
}

/// Uniform integrator grid covering `times` with step ≤ `step_bound`.
/// Returns (h, n_steps).
pub fn plan_grid(times: &[f64], step_bound: f64) -> (f64, usize) {
    let span = times[times.len() - 1] - times[0];
    let n_steps = ((span / step_bound).ceil() as usize).max(times.len() - 1).max(1);
    (span / n_steps as f64, n_steps)
}

/// Solve i ∂_t ψ = H_full(t) ψ in the rotating frame.
///
/// `times` is the requested observable grid; outputs are snapped to the
/// uniform integrator grid. With a noise realization, drive phases pick up
/// the sampled random-walk paths, detunings the quenched Doppler offsets,
/// and a nonzero decay rate runs the first-order jump unraveling.
pub fn evolve_full(
    geometry: &ArrayGeometry,
    config: &DressingConfig,
    law: &InteractionLaw,
    psi0: &StateVector,
    times: &[f64],
    basis_mode: SectorMode,
    noise: Option<&NoiseRealization>,
    options: &EvolveOptions,
) -> Result<EvolutionResult, NumericsError> {
    if times.len() < 2 {
        return Err(NumericsError::Invalid("need at least two output times".into()));
    }
    let basis = match basis_mode {
        SectorMode::Full => SectorBasis::full(geometry)?,
        SectorMode::Fixed(k) => SectorBasis::fixed(geometry, k),
        SectorMode::Band { center, halfwidth } => SectorBasis::band(geometry, center, halfwidth),
    };
    // map the initial state into the evolution basis
    let mut psi = Array1::<C64>::zeros(basis.dim());
    for (idx, amp) in psi0.amplitudes.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let cfg = psi0.basis.state(idx);
        let k = basis.index_of(cfg).ok_or(NumericsError::StateOutsideSector)?;
        psi[k] = *amp;
    }

    let drive = assemble_drive(config, geometry, noise);
    let h_bound = resolve_step_bound(config, law, geometry, options.step_bound);

    let t0 = times[0];
    let (h, n_steps) = plan_grid(times, h_bound);
    if let Some(nr) = noise {
        if nr.n_steps() < n_steps {
            return Err(NumericsError::Invalid(format!(
                "noise realization sampled on {} steps but the evolution needs {}",
                nr.n_steps(),
                n_steps
            )));
        }
        if nr.decay_rate() > 0.0 && matches!(basis_mode, SectorMode::Fixed(_)) {
            return Err(NumericsError::Invalid(
                "decay jumps leave a fixed excitation sector; use a full or band basis".into(),
            ));
        }
    }

    // interaction energies per configuration (diagonal of H in this frame)
    let active: Vec<usize> = geometry.active_sites().collect();
    let mut pair_v = Vec::new();
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            let v = pair_interaction(geometry, law, i, j);
            pair_v.push((i, j, v));
        }
    }
    let diag: Vec<f64> = basis
        .states()
        .iter()
        .map(|&s| {
            pair_v
                .iter()
                .filter(|(i, j, _)| s >> i & 1 == 1 && s >> j & 1 == 1)
                .map(|&(_, _, v)| v)
                .sum()
        })
        .collect();

    let kappa = noise.map_or(0.0, |n| n.decay_rate());
    let mut rng = noise.map(|n| ChaCha12Rng::seed_from_u64(n.jump_seed()));

    let mut stepper = SplitStepper::new(&basis, &drive, &diag, h, kappa);

    // output bookkeeping
    let n_sites = geometry.n_sites();
    let n_active = active.len();
    let out_steps: Vec<usize> = times
        .iter()
        .map(|&t| (((t - t0) / h).round() as usize).min(n_steps))
        .collect();
    let n_out = out_steps.len();
    let mut populations = Array2::zeros((n_out, n_sites));
    let mut excitation_distribution = Array2::zeros((n_out, n_active + 1));
    let mut com_x = vec![0.0; n_out];
    let mut norm_track = vec![0.0; n_out];
    let mut snaps = options.snapshots.then(Vec::new);
    let mut jump_times = Vec::new();
    let mut band_leakage = 0.0_f64;

    let outer_shell: Option<Vec<u32>> = match basis_mode {
        SectorMode::Band { center, halfwidth } => {
            let edge = (center + halfwidth).min(n_active) as u32;
            Some(
                (0..basis.dim())
                    .filter(|&k| basis.excitations(k) == edge)
                    .map(|k| k as u32)
                    .collect(),
            )
        }
        _ => None,
    };

    let record = |out_idx: usize,
                      psi: &Array1<C64>,
                      populations: &mut Array2<f64>,
                      excitation_distribution: &mut Array2<f64>,
                      com_x: &mut Vec<f64>,
                      norm_track: &mut Vec<f64>,
                      snaps: &mut Option<Vec<(f64, StateVector)>>,
                      band_leakage: &mut f64,
                      t: f64| {
        let n = linalg::norm(psi);
        norm_track[out_idx] = n;
        let mut com = 0.0;
        for (k, (&s, amp)) in basis.states().iter().zip(psi.iter()).enumerate() {
            let w = amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let nr = basis.excitations(k) as usize;
            excitation_distribution[[out_idx, nr]] += w;
            let mut bits = s;
            while bits != 0 {
                let site = bits.trailing_zeros() as usize;
                populations[[out_idx, site]] += w;
                com += geometry.position(site).0 * w;
                bits &= bits - 1;
            }
        }
        com_x[out_idx] = com;
        if let Some(shell) = &outer_shell {
            let leak: f64 = shell.iter().map(|&k| psi[k as usize].norm_sqr()).sum();
            *band_leakage = band_leakage.max(leak);
        }
        if let Some(list) = snaps {
            list.push((
                t,
                StateVector { basis: basis.clone(), amplitudes: psi.clone() },
            ));
        }
    };

    match options.integrator {
        Integrator::SplitStep4 => {
            let mut out_idx = 0;
            for step in 0..=n_steps {
                while out_idx < n_out && out_steps[out_idx] == step {
                    record(
                        out_idx,
                        &psi,
                        &mut populations,
                        &mut excitation_distribution,
                        &mut com_x,
                        &mut norm_track,
                        &mut snaps,
                        &mut band_leakage,
                        t0 + step as f64 * h,
                    );
                    out_idx += 1;
                }
                if step == n_steps {
                    break;
                }
                let t = t0 + step as f64 * h;
                let phase_noise: Option<&[f64]> = noise.map(|n| n.phases_at_step(step));
                stepper.step(&mut psi, t, phase_noise);
                if kappa > 0.0 {
                    let rng = rng.as_mut().expect("decay requires noise realization");
                    let norm_sq = psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
                    let p_decay = 1.0 - norm_sq;
                    if rng.gen::<f64>() < p_decay {
                        apply_decay_jump(&basis, &mut psi, rng);
                        jump_times.push(t + h);
                    } else {
                        let scale = C64::new(1.0 / norm_sq.sqrt(), 0.0);
                        psi.mapv_inplace(|z| z * scale);
                    }
                }
            }
        }
        Integrator::Rk4 => {
            if basis.dim() > 2048 {
                return Err(NumericsError::DimensionOverflow(basis.dim(), 2048));
            }
            let mut out_idx = 0;
            for step in 0..=n_steps {
                while out_idx < n_out && out_steps[out_idx] == step {
                    record(
                        out_idx,
                        &psi,
                        &mut populations,
                        &mut excitation_distribution,
                        &mut com_x,
                        &mut norm_track,
                        &mut snaps,
                        &mut band_leakage,
                        t0 + step as f64 * h,
                    );
                    out_idx += 1;
                }
                if step == n_steps {
                    break;
                }
                let t = t0 + step as f64 * h;
                let phase_noise: Option<&[f64]> = noise.map(|n| n.phases_at_step(step));
                rk4_step(&basis, &drive, &diag, &mut psi, t, h, phase_noise);
            }
        }
    }

    if outer_shell.is_some() {
        if band_leakage > options.band_leak_threshold {
            return Err(NumericsError::Invalid(format!(
                "band truncation leakage {band_leakage:.3e} exceeds {:.3e}; widen the excitation band",
                options.band_leak_threshold
            )));
        }
    }

    Ok(EvolutionResult {
        times: out_steps.iter().map(|&k| t0 + k as f64 * h).collect(),
        populations,
        excitation_distribution,
        com_x,
        norm: norm_track,
        snapshots: snaps,
        final_state: StateVector { basis: basis.clone(), amplitudes: psi },
        jump_times,
        band_leakage,
    })
}

/// Yoshida triple-jump coefficients for 4th-order composition.
const YOSHIDA_W1: f64 = 1.351_207_191_959_657_8;
const YOSHIDA_W0: f64 = -1.702_414_383_919_315_5;

struct SplitStepper<'a> {
    basis: &'a SectorBasis,
    drive: &'a [DriveTerm],
    /// Per-site drive terms grouped for the sweep.
    site_terms: Vec<(usize, Vec<usize>)>,
    flip: Vec<Vec<u32>>,
    /// Precomputed diagonal propagators for the distinct substep widths.
    diag_factors: Vec<Vec<C64>>,
    /// (diag factor id, drive width, t_mid offset) schedule per step.
    schedule: Vec<(usize, f64, f64)>,
    /// trailing diagonal factor id closing the step
    tail: usize,
    contiguous: bool,
}

impl<'a> SplitStepper<'a> {
    fn new(
        basis: &'a SectorBasis,
        drive: &'a [DriveTerm],
        diag: &[f64],
        h: f64,
        kappa: f64,
    ) -> Self {
        let mut sites: Vec<usize> = drive.iter().map(|d| d.site).collect();
        sites.sort_unstable();
        sites.dedup();
        let site_terms: Vec<(usize, Vec<usize>)> = sites
            .iter()
            .map(|&s| {
                (
                    s,
                    drive
                        .iter()
                        .enumerate()
                        .filter(|(_, d)| d.site == s)
                        .map(|(k, _)| k)
                        .collect(),
                )
            })
            .collect();
        let flip = sites.iter().map(|&s| basis.flip_table(s)).collect();

        // Strang triple-jump: D(w1/2) W(w1) D((w1+w0)/2) W(w0) D((w0+w1)/2) W(w1) D(w1/2)
        let widths = [
            0.5 * YOSHIDA_W1 * h,
            0.5 * (YOSHIDA_W1 + YOSHIDA_W0) * h,
            0.5 * (YOSHIDA_W0 + YOSHIDA_W1) * h,
            0.5 * YOSHIDA_W1 * h,
        ];
        let mut unique: Vec<f64> = Vec::new();
        let factor_id = |tau: f64, unique: &mut Vec<f64>| -> usize {
            if let Some(k) = unique.iter().position(|&u| u == tau) {
                k
            } else {
                unique.push(tau);
                unique.len() - 1
            }
        };
        let id0 = factor_id(widths[0], &mut unique);
        let id1 = factor_id(widths[1], &mut unique);
        let id2 = factor_id(widths[2], &mut unique);
        let id3 = factor_id(widths[3], &mut unique);

        // midpoints of the three drive substeps relative to step start
        let m1 = 0.5 * YOSHIDA_W1 * h;
        let m2 = (YOSHIDA_W1 + 0.5 * YOSHIDA_W0) * h;
        let m3 = (YOSHIDA_W1 + YOSHIDA_W0 + 0.5 * YOSHIDA_W1) * h;

        let schedule = vec![
            (id0, YOSHIDA_W1 * h, m1),
            (id1, YOSHIDA_W0 * h, m2),
            (id2, YOSHIDA_W1 * h, m3),
        ];

        let diag_factors = unique
            .iter()
            .map(|&tau| {
                basis
                    .states()
                    .iter()
                    .zip(diag.iter())
                    .map(|(&s, &e)| {
                        let damp = (-0.5 * kappa * s.count_ones() as f64 * tau).exp();
                        C64::from_polar(damp, -e * tau)
                    })
                    .collect()
            })
            .collect();

        // full mode without vacancies enumerates exactly 0..2^n in order,
        // which unlocks the chunked parallel sweep
        let contiguous = basis.mode == SectorMode::Full
            && basis
                .states()
                .iter()
                .enumerate()
                .all(|(k, &s)| s == k as Config);

        Self { basis, drive, site_terms, flip, diag_factors, schedule, tail: id3, contiguous }
    }

    /// Effective complex Rabi amplitude Ω_eff/2 on one site at time `t`.
    fn site_amplitude(&self, term_ids: &[usize], t: f64, phases: Option<&[f64]>) -> C64 {
        let mut amp = C64::new(0.0, 0.0);
        for &k in term_ids {
            let d = &self.drive[k];
            let mut phase = d.detuning * t;
            if let (Some(paths), Some(p)) = (phases, d.path) {
                phase += paths[p];
            }
            amp += d.omega_half * C64::from_polar(1.0, phase);
        }
        amp
    }

    fn apply_diag(&self, psi: &mut Array1<C64>, id: usize) {
        let f = &self.diag_factors[id];
        for (z, fac) in psi.iter_mut().zip(f.iter()) {
            *z *= *fac;
        }
    }

    /// exp(−i w (Ω_eff/2 b† + h.c.)) on every drive site, at drive phases
    /// evaluated a time `t_mid` into the step.
    fn apply_drive(&self, psi: &mut Array1<C64>, w: f64, t_start: f64, t_mid: f64, phases: Option<&[f64]>) {
        for (k, (site, term_ids)) in self.site_terms.iter().enumerate() {
            let omega_half = self.site_amplitude(term_ids, t_start + t_mid, phases);
            let mag = omega_half.norm();
            if mag == 0.0 {
                continue;
            }
            let theta = omega_half / C64::new(mag, 0.0);
            let (sin, cos) = (mag * w).sin_cos();
            let c = C64::new(cos, 0.0);
            // in the (excited, ground) pair: ψ_r' = cos ψ_r − i e^{iθ} sin ψ_g
            let s_r = C64::new(0.0, -sin) * theta;
            let s_g = C64::new(0.0, -sin) * theta.conj();
            if self.contiguous {
                let bit = 1usize << site;
                let stride = bit << 1;
                let dim = psi.len();
                let data = psi.as_slice_mut().expect("contiguous state vector");
                let blocks = dim / stride;
                if blocks >= 2 {
                    use rayon::prelude::*;
                    data.par_chunks_mut(stride).for_each(|chunk| {
                        let (g_half, r_half) = chunk.split_at_mut(bit);
                        for (g, r) in g_half.iter_mut().zip(r_half.iter_mut()) {
                            let (pg, pr) = (*g, *r);
                            *r = c * pr + s_r * pg;
                            *g = c * pg + s_g * pr;
                        }
                    });
                } else {
                    let (g_half, r_half) = data.split_at_mut(bit);
                    for (g, r) in g_half.iter_mut().zip(r_half.iter_mut()) {
                        let (pg, pr) = (*g, *r);
                        *r = c * pr + s_r * pg;
                        *g = c * pg + s_g * pr;
                    }
                }
            } else {
                let flip = &self.flip[k];
                let bit: Config = 1 << *site;
                for idx in 0..self.basis.dim() {
                    if self.basis.state(idx) & bit != 0 {
                        continue; // handle each pair from its ground side
                    }
                    let partner = flip[idx];
                    if partner == u32::MAX {
                        continue;
                    }
                    let p = partner as usize;
                    let (pg, pr) = (psi[idx], psi[p]);
                    psi[p] = c * pr + s_r * pg;
                    psi[idx] = c * pg + s_g * pr;
                }
            }
        }
    }

    fn step(&mut self, psi: &mut Array1<C64>, t: f64, phases: Option<&[f64]>) {
        for &(diag_id, w, m) in &self.schedule {
            self.apply_diag(psi, diag_id);
            self.apply_drive(psi, w, t, m, phases);
        }
        self.apply_diag(psi, self.tail);
    }
}

fn apply_decay_jump(basis: &SectorBasis, psi: &mut Array1<C64>, rng: &mut ChaCha12Rng) {
    // pick the decaying atom with probability ∝ ⟨n_i⟩
    let mut weights: Vec<(usize, f64)> = Vec::new();
    let mut total = 0.0;
    let n_sites = basis.n_sites;
    for site in 0..n_sites {
        let bit: Config = 1 << site;
        let w: f64 = basis
            .states()
            .iter()
            .zip(psi.iter())
            .filter(|(s, _)| **s & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if w > 0.0 {
            weights.push((site, w));
            total += w;
        }
    }
    if total == 0.0 {
        return;
    }
    let mut u = rng.gen::<f64>() * total;
    let mut chosen = weights[0].0;
    for (site, w) in &weights {
        if u < *w {
            chosen = *site;
            break;
        }
        u -= w;
    }
    // apply σ_gr on the chosen site: |...r...⟩ → |...g...⟩
    let bit: Config = 1 << chosen;
    let mut out = Array1::<C64>::zeros(psi.len());
    for (k, &s) in basis.states().iter().enumerate() {
        if s & bit != 0 {
            if let Some(tgt) = basis.index_of(s ^ bit) {
                out[tgt] = psi[k];
            }
        }
    }
    let n = linalg::norm(&out);
    if n > 0.0 {
        *psi = out / C64::new(n, 0.0);
    }
}

fn rk4_step(
    basis: &SectorBasis,
    drive: &[DriveTerm],
    diag: &[f64],
    psi: &mut Array1<C64>,
    t: f64,
    h: f64,
    phases: Option<&[f64]>,
) {
    let apply_h = |t_eval: f64, v: &Array1<C64>| -> Array1<C64> {
        let mut out: Array1<C64> = Array1::from(
            v.iter()
                .zip(diag.iter())
                .map(|(z, &e)| z * e)
                .collect::<Vec<C64>>(),
        );
        for d in drive {
            let mut phase = d.detuning * t_eval;
            if let (Some(paths), Some(p)) = (phases, d.path) {
                phase += paths[p];
            }
            let amp = d.omega_half * C64::from_polar(1.0, phase);
            let bit: Config = 1 << d.site;
            for idx in 0..basis.dim() {
                let s = basis.state(idx);
                if s & bit != 0 {
                    continue;
                }
                if let Some(p_idx) = basis.index_of(s | bit) {
                    // ⟨r|H|g⟩ = Ω/2 e^{iΔt}
                    out[p_idx] += amp * v[idx];
                    out[idx] += amp.conj() * v[p_idx];
                }
            }
        }
        out
    };
    let rhs = |t_eval: f64, v: &Array1<C64>| -> Array1<C64> {
        apply_h(t_eval, v).mapv(|z| -C64::i() * z)
    };
    let k1 = rhs(t, psi);
    let k2 = rhs(t + 0.5 * h, &(&*psi + &(&k1 * C64::new(0.5 * h, 0.0))));
    let k3 = rhs(t + 0.5 * h, &(&*psi + &(&k2 * C64::new(0.5 * h, 0.0))));
    let k4 = rhs(t + h, &(&*psi + &(&k3 * C64::new(h, 0.0))));
    *psi = &*psi
        + &((k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
            * C64::new(h / 6.0, 0.0));
}

use crate::model::pair_interaction as pair_interaction_impl;

fn pair_interaction(geometry: &ArrayGeometry, law: &InteractionLaw, i: usize, j: usize) -> f64 {
    pair_interaction_impl(geometry, law, i, j).expect("active pair")
}

// ---------------------------------------------------------------------------
// effective dynamics
// ---------------------------------------------------------------------------

/// Sector Hamiltonian of an effective model in a fixed excitation sector.
pub fn sector_hamiltonian(model: &EffectiveModel, basis: &SectorBasis) -> Array2<C64> {
    let dim = basis.dim();
    let n = model.n_sites;
    let mut h = Array2::<C64>::zeros((dim, dim));
    for a in 0..dim {
        let s = basis.state(a);
        let mut e = 0.0;
        for i in 0..n {
            if s >> i & 1 == 1 {
                e += model.potential[i];
                for j in (i + 1)..n {
                    if s >> j & 1 == 1 {
                        e += model.density_interaction[[i, j]];
                    }
                }
            }
        }
        h[[a, a]] = C64::new(e, 0.0);
        // hops: annihilate at i, create at j
        for i in 0..n {
            if s >> i & 1 == 0 {
                continue;
            }
            for j in 0..n {
                if s >> j & 1 == 1 || i == j {
                    continue;
                }
                let jij = model.hopping[[j, i]];
                if jij.norm_sqr() == 0.0 {
                    continue;
                }
                let target = (s & !(1 << i)) | (1 << j);
                if let Some(b) = basis.index_of(target) {
                    h[[b, a]] += jij;
                }
            }
        }
    }
    h
}

/// Evolve a state under the time-independent effective model in the N_r
/// sector of its basis; excitation number is conserved exactly.
pub fn evolve_effective(
    model: &EffectiveModel,
    psi0: &StateVector,
    times: &[f64],
    geometry: &ArrayGeometry,
    snapshots: bool,
) -> Result<EvolutionResult, NumericsError> {
    let basis = &psi0.basis;
    let dim = basis.dim();
    let h = sector_hamiltonian(model, basis);

    let n_sites = model.n_sites;
    let n_active = geometry.n_active();
    let n_out = times.len();
    let mut populations = Array2::zeros((n_out, n_sites));
    let mut excitation_distribution = Array2::zeros((n_out, n_active + 1));
    let mut com_x = vec![0.0; n_out];
    let mut norm_track = vec![0.0; n_out];
    let mut snaps = snapshots.then(Vec::new);

    let record = |out_idx: usize, psi: &Array1<C64>, snaps: &mut Option<Vec<(f64, StateVector)>>, t: f64,
                      populations: &mut Array2<f64>, excitation_distribution: &mut Array2<f64>,
                      com_x: &mut Vec<f64>, norm_track: &mut Vec<f64>| {
        norm_track[out_idx] = linalg::norm(psi);
        let mut com = 0.0;
        for (k, (&s, amp)) in basis.states().iter().zip(psi.iter()).enumerate() {
            let w = amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            excitation_distribution[[out_idx, basis.excitations(k) as usize]] += w;
            let mut bits = s;
            while bits != 0 {
                let site = bits.trailing_zeros() as usize;
                populations[[out_idx, site]] += w;
                com += geometry.position(site).0 * w;
                bits &= bits - 1;
            }
        }
        com_x[out_idx] = com;
        if let Some(list) = snaps {
            list.push((t, StateVector { basis: basis.clone(), amplitudes: psi.clone() }));
        }
    };

    if dim <= DENSE_EIG_LIMIT {
        let spec = Spectrum::of(&h)?;
        for (out_idx, &t) in times.iter().enumerate() {
            let psi_t = spec.propagate(&psi0.amplitudes, t - times[0]);
            record(
                out_idx, &psi_t, &mut snaps, t,
                &mut populations, &mut excitation_distribution, &mut com_x, &mut norm_track,
            );
        }
        let psi_end = spec.propagate(&psi0.amplitudes, times[n_out - 1] - times[0]);
        return Ok(EvolutionResult {
            times: times.to_vec(),
            populations,
            excitation_distribution,
            com_x,
            norm: norm_track,
            snapshots: snaps,
            final_state: StateVector { basis: basis.clone(), amplitudes: psi_end },
            jump_times: Vec::new(),
            band_leakage: 0.0,
        });
    }

    let mut psi = psi0.amplitudes.clone();
    record(
        0, &psi, &mut snaps, times[0],
        &mut populations, &mut excitation_distribution, &mut com_x, &mut norm_track,
    );
    for out_idx in 1..n_out {
        let dt = times[out_idx] - times[out_idx - 1];
        psi = linalg::lanczos_expm_apply(|v| h.dot(v), &psi, dt, 30)?;
        record(
            out_idx, &psi, &mut snaps, times[out_idx],
            &mut populations, &mut excitation_distribution, &mut com_x, &mut norm_track,
        );
    }

    Ok(EvolutionResult {
        times: times.to_vec(),
        populations,
        excitation_distribution,
        com_x,
        norm: norm_track,
        snapshots: snaps,
        final_state: StateVector { basis: basis.clone(), amplitudes: psi },
        jump_times: Vec::new(),
        band_leakage: 0.0,
    })
}
