//! Stochastic and open-system layers: laser phase-noise realizations,
//! quenched Doppler disorder, the Lindblad master equation, Monte Carlo
//! trajectory ensembles, and post-selection estimates.
//!
//! Phase noise is a Wiener walk φ(t) with increment variance 4γh per step,
//! calibrated so that a single driven atom dephases at the Lindblad rate γ
//! of 𝓛[S_z] with S_z = Σ_i σ_z^i (no 1/2 in the operator); the calibration
//! is pinned by validation tests against the master equation.

use ndarray::{Array2, Array3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{Config, SectorBasis, SectorMode};
use crate::dynamics::{self, EvolutionResult, EvolveOptions, StateVector};
use crate::error::NumericsError;
use crate::formulas;
use crate::geometry::ArrayGeometry;
use crate::model::{DressingConfig, InteractionLaw, NoiseSpec, PhaseCorrelation};
use crate::C64;

/// Deterministic sub-seed derivation (SplitMix64 over seed, run, channel).
fn subseed(seed: u64, run: u64, channel: u64) -> u64 {
    let mut z = seed
        .wrapping_add(run.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(channel.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One sampled realization of all noise channels on a fixed integrator grid.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    h: f64,
    n_steps: usize,
    /// phases[step][path]; row `k` applies during step `k`.
    phases: Array2<f64>,
    /// (color index, site) → path column.
    path_of: std::collections::BTreeMap<(usize, usize), usize>,
    /// Per-site quenched detuning offsets.
    doppler: Vec<f64>,
    decay_rate: f64,
    jump_seed: u64,
    pub run_index: u64,
}

impl NoiseRealization {
    /// Sample every channel of `spec` for one run on a grid of `n_steps`
    /// steps of width `h`.
    pub fn sample(
        spec: &NoiseSpec,
        config: &DressingConfig,
        geometry: &ArrayGeometry,
        h: f64,
        n_steps: usize,
        run_index: u64,
    ) -> Self {
        let mut phase_rng =
            ChaCha12Rng::seed_from_u64(subseed(spec.rng_seed, run_index, 0));
        let (phases, path_of) = sample_phase_paths(
            spec.phase_noise_rate,
            spec.phase_correlation,
            config,
            h,
            n_steps,
            &mut phase_rng,
        );
        let mut doppler_rng =
            ChaCha12Rng::seed_from_u64(subseed(spec.rng_seed, run_index, 1));
        let doppler =
            sample_doppler(spec.doppler_sigma, geometry.n_sites(), &mut doppler_rng);
        Self {
            h,
            n_steps,
            phases,
            path_of,
            doppler,
            decay_rate: spec.decay_rate,
            jump_seed: subseed(spec.rng_seed, run_index, 2),
            run_index,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step_width(&self) -> f64 {
        self.h
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn jump_seed(&self) -> u64 {
        self.jump_seed
    }

    pub fn doppler_offset(&self, site: usize) -> f64 {
        self.doppler.get(site).copied().unwrap_or(0.0)
    }

    pub fn doppler_offsets(&self) -> &[f64] {
        &self.doppler
    }

    pub fn path_index(&self, color_idx: usize, site: usize) -> Option<usize> {
        self.path_of.get(&(color_idx, site)).copied()
    }

    pub fn phases_at_step(&self, step: usize) -> &[f64] {
        let k = step.min(self.n_steps.saturating_sub(1));
        self.phases.row(k).to_slice().expect("row-major phases")
    }

    /// Phase path for one (color, site) pair, for audits.
    pub fn phase_path(&self, color_idx: usize, site: usize) -> Option<Vec<f64>> {
        self.path_index(color_idx, site)
            .map(|p| self.phases.column(p).to_vec())
    }
}

/// Wiener phase paths with diffusion 4γ, one per correlation unit.
///
/// Returns the per-step phase table and the (color, site) → path map. Paths
/// start at zero; increments are i.i.d. N(0, 4γh).
pub fn sample_phase_paths(
    gamma: f64,
    mode: PhaseCorrelation,
    config: &DressingConfig,
    h: f64,
    n_steps: usize,
    rng: &mut ChaCha12Rng,
) -> (Array2<f64>, std::collections::BTreeMap<(usize, usize), usize>) {
    let mut path_of = std::collections::BTreeMap::new();
    let mut next_path = 0usize;
    for (ci, color) in config.colors.iter().enumerate() {
        for (&site, _) in &color.rabi {
            let path = match mode {
                PhaseCorrelation::Global => 0,
                PhaseCorrelation::PerColor => ci,
                PhaseCorrelation::PerAtom => {
                    let p = next_path;
                    next_path += 1;
                    p
                }
            };
            path_of.insert((ci, site), path);
        }
    }
    let n_paths = match mode {
        PhaseCorrelation::Global => 1,
        PhaseCorrelation::PerColor => config.colors.len().max(1),
        PhaseCorrelation::PerAtom => next_path.max(1),
    };
    let mut phases = Array2::<f64>::zeros((n_steps.max(1), n_paths));
    if gamma > 0.0 {
        let step_dist = Normal::new(0.0, (4.0 * gamma * h).sqrt()).expect("valid sigma");
        for p in 0..n_paths {
            let mut acc = 0.0;
            for k in 0..n_steps.max(1) {
                phases[[k, p]] = acc;
                acc += step_dist.sample(rng);
            }
        }
    }
    (phases, path_of)
}

/// Quenched per-atom detuning offsets, i.i.d. N(0, Δ_T).
pub fn sample_doppler(delta_t: f64, n_atoms: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    if delta_t == 0.0 {
        return vec![0.0; n_atoms];
    }
    let dist = Normal::new(0.0, delta_t).expect("valid sigma");
    (0..n_atoms).map(|_| dist.sample(rng)).collect()
}

// ---------------------------------------------------------------------------
// master equation
// ---------------------------------------------------------------------------

/// Hamiltonian fed to the master equation.
pub enum MasterHamiltonian<'a> {
    /// Time-independent matrix on the basis.
    Static(Array2<C64>),
    /// The exact driven Hamiltonian assembled at each evaluation time.
    Driven {
        geometry: &'a ArrayGeometry,
        config: &'a DressingConfig,
        law: &'a InteractionLaw,
    },
}

/// Jump-operator content of the Lindblad dissipator.
#[derive(Debug, Clone, Copy)]
pub struct JumpOps {
    /// Collective dephasing rate γ for 𝓛[S_z], S_z = Σ_i σ_z^i.
    pub dephasing: f64,
    /// Per-atom decay rate κ for Σ_i 𝓛[√κ σ_gr^i].
    pub decay: f64,
}

/// Density-matrix observables of an open-system run.
#[derive(Debug, Clone)]
pub struct OpenSystemResult {
    pub times: Vec<f64>,
    pub populations: Array2<f64>,
    pub com_x: Vec<f64>,
    pub trace: Vec<f64>,
    /// Total Rydberg population Σ_i P_i.
    pub total_excitation: Vec<f64>,
}

/// Lindblad evolution ∂_t ρ = −i[H, ρ] + γ𝓛[S_z]ρ + κ Σ_i 𝓛[σ_gr^i]ρ.
///
/// RK4 with the step rule of the exact integrator; the trace is a linear
/// invariant of the flow and is preserved by the scheme to rounding.
pub fn master_equation_evolve(
    hamiltonian: &MasterHamiltonian,
    basis: &SectorBasis,
    rho0: &Array2<C64>,
    jumps: JumpOps,
    times: &[f64],
    geometry: &ArrayGeometry,
    step_bound: f64,
) -> Result<OpenSystemResult, NumericsError> {
    let dim = basis.dim();
    if dim > 512 {
        return Err(NumericsError::DimensionOverflow(dim, 512));
    }
    if rho0.nrows() != dim || rho0.ncols() != dim {
        return Err(NumericsError::Invalid("density matrix does not match basis".into()));
    }
    let n_active = geometry.n_active() as f64;
    // S_z eigenvalues per configuration
    let zvals: Vec<f64> = basis
        .states()
        .iter()
        .map(|s| 2.0 * s.count_ones() as f64 - n_active)
        .collect();
    let nr: Vec<f64> = basis.states().iter().map(|s| s.count_ones() as f64).collect();

    // decay channel targets: for each site, (from, to) index pairs
    let n_sites = basis.n_sites;
    let mut decay_pairs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_sites];
    if jumps.decay > 0.0 {
        for (k, &s) in basis.states().iter().enumerate() {
            let mut bits = s;
            while bits != 0 {
                let site = bits.trailing_zeros() as usize;
                if let Some(t) = basis.index_of(s ^ (1 << site)) {
                    decay_pairs[site].push((k, t));
                }
                bits &= bits - 1;
            }
        }
    }

    let static_h = match hamiltonian {
        MasterHamiltonian::Static(h) => Some(h.clone()),
        MasterHamiltonian::Driven { .. } => None,
    };
    let assemble = |t: f64| -> Array2<C64> {
        match hamiltonian {
            MasterHamiltonian::Static(_) => unreachable!(),
            MasterHamiltonian::Driven { geometry, config, law } => {
                driven_hamiltonian(basis, geometry, config, law, t)
            }
        }
    };

    let rhs = |t: f64, rho: &Array2<C64>| -> Array2<C64> {
        let h = match &static_h {
            Some(h) => h.clone(),
            None => assemble(t),
        };
        let mut out = &h.dot(rho) - &rho.dot(&h);
        out.mapv_inplace(|z| -C64::i() * z);
        if jumps.dephasing > 0.0 {
            for a in 0..dim {
                for b in 0..dim {
                    let w = -0.5 * jumps.dephasing * (zvals[a] - zvals[b]).powi(2);
                    out[[a, b]] += C64::new(w, 0.0) * rho[[a, b]];
                }
            }
        }
        if jumps.decay > 0.0 {
            for a in 0..dim {
                for b in 0..dim {
                    let w = -0.5 * jumps.decay * (nr[a] + nr[b]);
                    out[[a, b]] += C64::new(w, 0.0) * rho[[a, b]];
                }
            }
            for pairs in &decay_pairs {
                for &(from_a, to_a) in pairs {
                    for &(from_b, to_b) in pairs {
                        // σ ρ σ† moves |from⟩⟨from| → |to⟩⟨to|
                        let add = C64::new(jumps.decay, 0.0) * rho[[from_a, from_b]];
                        out[[to_a, to_b]] += add;
                    }
                }
            }
        }
        out
    };

    let t0 = times[0];
    let (h_step, n_steps) = dynamics::plan_grid(times, step_bound);
    let out_steps: Vec<usize> = times
        .iter()
        .map(|&t| (((t - t0) / h_step).round() as usize).min(n_steps))
        .collect();

    let mut rho = rho0.clone();
    let n_out = times.len();
    let mut populations = Array2::zeros((n_out, n_sites));
    let mut com_x = vec![0.0; n_out];
    let mut trace = vec![0.0; n_out];
    let mut total_exc = vec![0.0; n_out];

    let record = |out_idx: usize, rho: &Array2<C64>,
                      populations: &mut Array2<f64>, com_x: &mut Vec<f64>,
                      trace: &mut Vec<f64>, total_exc: &mut Vec<f64>| {
        let mut tr = 0.0;
        let mut com = 0.0;
        for (k, &s) in basis.states().iter().enumerate() {
            let p = rho[[k, k]].re;
            tr += p;
            let mut bits = s;
            while bits != 0 {
                let site = bits.trailing_zeros() as usize;
                populations[[out_idx, site]] += p;
                com += geometry.position(site).0 * p;
                total_exc[out_idx] += p;
                bits &= bits - 1;
            }
        }
        trace[out_idx] = tr;
        com_x[out_idx] = com;
    };

    let mut out_idx = 0;
    for step in 0..=n_steps {
        while out_idx < n_out && out_steps[out_idx] == step {
            record(out_idx, &rho, &mut populations, &mut com_x, &mut trace, &mut total_exc);
            out_idx += 1;
        }
        if step == n_steps {
            break;
        }
        let t = t0 + step as f64 * h_step;
        let k1 = rhs(t, &rho);
        let k2 = rhs(t + 0.5 * h_step, &(&rho + &(&k1 * C64::new(0.5 * h_step, 0.0))));
        let k3 = rhs(t + 0.5 * h_step, &(&rho + &(&k2 * C64::new(0.5 * h_step, 0.0))));
        let k4 = rhs(t + h_step, &(&rho + &(&k3 * C64::new(h_step, 0.0))));
        rho = &rho
            + &((k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                * C64::new(h_step / 6.0, 0.0));
    }

    Ok(OpenSystemResult { times: times.to_vec(), populations, com_x, trace, total_excitation: total_exc })
}

/// Dense rotating-frame Hamiltonian of the driven system at time `t`.
pub fn driven_hamiltonian(
    basis: &SectorBasis,
    geometry: &ArrayGeometry,
    config: &DressingConfig,
    law: &InteractionLaw,
    t: f64,
) -> Array2<C64> {
    let dim = basis.dim();
    let mut h = Array2::<C64>::zeros((dim, dim));
    let active: Vec<usize> = geometry.active_sites().collect();
    for (k, &s) in basis.states().iter().enumerate() {
        let mut e = 0.0;
        for (ai, &i) in active.iter().enumerate() {
            if s >> i & 1 == 0 {
                continue;
            }
            for &j in &active[ai + 1..] {
                if s >> j & 1 == 1 {
                    e += crate::model::pair_interaction(geometry, law, i, j).expect("active pair");
                }
            }
        }
        h[[k, k]] = C64::new(e, 0.0);
    }
    for color in &config.colors {
        for (&site, &amp) in &color.rabi {
            if geometry.is_vacant(site) {
                continue;
            }
            let delta = config.detuning_at(color, site);
            let half = 0.5 * amp * C64::from_polar(1.0, delta * t);
            let bit: Config = 1 << site;
            for (k, &s) in basis.states().iter().enumerate() {
                if s & bit != 0 {
                    continue;
                }
                if let Some(p) = basis.index_of(s | bit) {
                    h[[p, k]] += half;
                    h[[k, p]] += half.conj();
                }
            }
        }
    }
    h
}

// ---------------------------------------------------------------------------
// trajectory ensembles
// ---------------------------------------------------------------------------

/// Audit record of one stochastic run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub run_id: u64,
    pub seed: u64,
    pub jump_count: usize,
    pub jump_times: Vec<f64>,
    /// Final projective measurement in the configuration basis.
    pub final_bitstring: u64,
}

/// Ensemble of seeded stochastic realizations with per-run records.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    pub mean_populations: Array2<f64>,
    pub stderr_populations: Array2<f64>,
    pub mean_com_x: Vec<f64>,
    pub stderr_com_x: Vec<f64>,
    pub runs: Vec<RunRecord>,
    /// populations[run][time][site], kept for post-selection estimates.
    pub per_run_populations: Array3<f64>,
    pub per_run_com: Array2<f64>,
    pub initial_excitations: usize,
}

/// Run `n_runs` noisy realizations of the exact dynamics and average.
///
/// Runs fan out over the worker pool with deterministically derived
/// sub-seeds; aggregation is sequential compensated summation in run order,
/// so results are bit-stable for a fixed seed regardless of thread count.
#[allow(clippy::too_many_arguments)]
pub fn trajectory_ensemble(
    geometry: &ArrayGeometry,
    config: &DressingConfig,
    law: &InteractionLaw,
    psi0: &StateVector,
    times: &[f64],
    basis_mode: SectorMode,
    spec: &NoiseSpec,
    n_runs: usize,
    options: &EvolveOptions,
) -> Result<TrajectoryEnsemble, NumericsError> {
    spec.validate().map_err(|e| NumericsError::Invalid(e.to_string()))?;
    if n_runs == 0 {
        return Err(NumericsError::Invalid("n_runs must be >= 1".into()));
    }
    let bound = dynamics::resolve_step_bound(config, law, geometry, options.step_bound);
    let (h, n_steps) = dynamics::plan_grid(times, bound);

    let n_r0 = psi0
        .basis
        .states()
        .iter()
        .zip(psi0.amplitudes.iter())
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(s, _)| s.count_ones() as usize)
        .max()
        .unwrap_or(0);

    let results: Vec<Result<(EvolutionResult, RunRecord), NumericsError>> = (0..n_runs as u64)
        .into_par_iter()
        .map(|run| {
            let noise = NoiseRealization::sample(spec, config, geometry, h, n_steps, run);
            let out = dynamics::evolve_full(
                geometry, config, law, psi0, times, basis_mode, Some(&noise), options,
            )?;
            // final projective measurement from |ψ|²
            let mut rng = ChaCha12Rng::seed_from_u64(subseed(spec.rng_seed, run, 3));
            let bitstring = measure_configuration(&out.final_state, &mut rng);
            let record = RunRecord {
                run_id: run,
                seed: subseed(spec.rng_seed, run, 0),
                jump_count: out.jump_times.len(),
                jump_times: out.jump_times.clone(),
                final_bitstring: bitstring,
            };
            Ok((out, record))
        })
        .collect();

    let mut runs_out = Vec::with_capacity(n_runs);
    let n_t = times.len();
    let n_sites = geometry.n_sites();
    let mut per_run_pop = Array3::<f64>::zeros((n_runs, n_t, n_sites));
    let mut per_run_com = Array2::<f64>::zeros((n_runs, n_t));

    for (run, res) in results.into_iter().enumerate() {
        let (evo, record) = res?;
        for t in 0..n_t {
            for s in 0..n_sites {
                per_run_pop[[run, t, s]] = evo.populations[[t, s]];
            }
            per_run_com[[run, t]] = evo.com_x[t];
        }
        runs_out.push(record);
    }

    let mut mean_pop = Array2::<f64>::zeros((n_t, n_sites));
    let mut stderr_pop = Array2::<f64>::zeros((n_t, n_sites));
    let mut mean_com = vec![0.0; n_t];
    let mut stderr_com = vec![0.0; n_t];
    for t in 0..n_t {
        for s in 0..n_sites {
            let (mean, se) = mean_stderr((0..n_runs).map(|r| per_run_pop[[r, t, s]]));
            mean_pop[[t, s]] = mean;
            stderr_pop[[t, s]] = se;
        }
        let (mean, se) = mean_stderr((0..n_runs).map(|r| per_run_com[[r, t]]));
        mean_com[t] = mean;
        stderr_com[t] = se;
    }

    Ok(TrajectoryEnsemble {
        times: times.to_vec(),
        mean_populations: mean_pop,
        stderr_populations: stderr_pop,
        mean_com_x: mean_com,
        stderr_com_x: stderr_com,
        runs: runs_out,
        per_run_populations: per_run_pop,
        per_run_com,
        initial_excitations: n_r0,
    })
}

/// Compensated mean and standard error of a sequence, in iteration order.
fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut count = 0usize;
    for v in values.clone() {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        count += 1;
    }
    if count == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / count as f64;
    let mut var = 0.0;
    for v in values {
        var += (v - mean).powi(2);
    }
    if count > 1 {
        var /= (count - 1) as f64;
        (mean, (var / count as f64).sqrt())
    } else {
        (mean, 0.0)
    }
}

fn measure_configuration(state: &StateVector, rng: &mut ChaCha12Rng) -> u64 {
    let mut u = rng.gen::<f64>() * state.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>();
    for (k, amp) in state.amplitudes.iter().enumerate() {
        let w = amp.norm_sqr();
        if u < w {
            return state.basis.state(k) as u64;
        }
        u -= w;
    }
    state.basis.state(state.basis.dim() - 1) as u64
}

// ---------------------------------------------------------------------------
// post-selection
// ---------------------------------------------------------------------------

/// Conditional estimates from post-selecting runs that conserve the
/// excitation number.
#[derive(Debug, Clone, Serialize)]
pub struct PostSelectionEstimate {
    pub times: Vec<f64>,
    /// Fraction of runs with no decay jump before each time.
    pub success_probability: Vec<f64>,
    pub success_stderr: Vec<f64>,
    /// e^{−N_r κ t} reference curve.
    pub predicted_probability: Vec<f64>,
    /// Conditional ⟨x⟩ over surviving runs (NaN when none survive).
    pub conditional_com_x: Vec<f64>,
    pub conditional_com_stderr: Vec<f64>,
    /// Unconditional ensemble ⟨x⟩.
    pub unconditional_com_x: Vec<f64>,
    pub n_runs: usize,
}

/// Post-select on excitation-number conservation using the per-run jump
/// records: a run contributes at time t while it has not yet jumped.
pub fn post_select(
    ensemble: &TrajectoryEnsemble,
    decay_rate: f64,
) -> PostSelectionEstimate {
    let n_runs = ensemble.runs.len();
    let n_t = ensemble.times.len();
    let n_r = ensemble.initial_excitations as f64;
    let mut success = vec![0.0; n_t];
    let mut success_se = vec![0.0; n_t];
    let mut cond_com = vec![f64::NAN; n_t];
    let mut cond_se = vec![0.0; n_t];
    for (ti, &t) in ensemble.times.iter().enumerate() {
        let alive: Vec<usize> = ensemble
            .runs
            .iter()
            .enumerate()
            .filter(|(_, r)| r.jump_times.iter().all(|&tj| tj > t))
            .map(|(k, _)| k)
            .collect();
        let p = alive.len() as f64 / n_runs as f64;
        success[ti] = p;
        success_se[ti] = (p * (1.0 - p) / n_runs as f64).sqrt();
        if !alive.is_empty() {
            let (mean, se) = mean_stderr(alive.iter().map(|&r| ensemble.per_run_com[[r, ti]]));
            cond_com[ti] = mean;
            cond_se[ti] = se;
        }
    }
    let predicted = ensemble
        .times
        .iter()
        .map(|&t| (-n_r * decay_rate * (t - ensemble.times[0])).exp())
        .collect();
    PostSelectionEstimate {
        times: ensemble.times.clone(),
        success_probability: success,
        success_stderr: success_se,
        predicted_probability: predicted,
        conditional_com_x: cond_com,
        conditional_com_stderr: cond_se,
        unconditional_com_x: ensemble.mean_com_x.clone(),
        n_runs,
    }
}

// ---------------------------------------------------------------------------
// Doppler scalings
// ---------------------------------------------------------------------------

/// Closed-form Doppler suppression figures.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DopplerDiagnostics {
    /// Two-site eigenvalue magnitude √(J² + Δ_T²).
    pub two_site_shift: f64,
    /// Effective dephasing rate Δ_T²/J.
    pub gamma_eff: f64,
    /// Anderson localization length J²/Δ_T² (∞ when Δ_T = 0).
    pub localization_length: f64,
    /// Ballistic coherence time ξ/J.
    pub coherence_time: f64,
}

pub fn doppler_scaling_diagnostics(j: f64, delta_t: f64) -> Result<DopplerDiagnostics, NumericsError> {
    if j <= 0.0 {
        return Err(NumericsError::Invalid("J must be positive".into()));
    }
    let (two_site, gamma_eff, xi, t_c) = formulas::doppler_scaling_kernel(j, delta_t);
    Ok(DopplerDiagnostics {
        two_site_shift: two_site,
        gamma_eff,
        localization_length: xi,
        coherence_time: t_c,
    })
}

// ---------------------------------------------------------------------------

/// CSV export of ensemble means: time, mean, stderr per site population.
pub fn ensemble_csv(e: &TrajectoryEnsemble) -> String {
    let n_sites = e.mean_populations.ncols();
    let mut head = String::from("time_us");
    for s in 0..n_sites {
        head.push_str(&format!(",mean_pop_{s},stderr_pop_{s}"));
    }
    head.push_str(",mean_com_x,stderr_com_x\n");
    let mut out = head;
    for (t_idx, &t) in e.times.iter().enumerate() {
        out.push_str(&format!("{t:.12e}"));
        for s in 0..n_sites {
            out.push_str(&format!(
                ",{:.12e},{:.12e}",
                e.mean_populations[[t_idx, s]],
                e.stderr_populations[[t_idx, s]]
            ));
        }
        out.push_str(&format!(
            ",{:.12e},{:.12e}\n",
            e.mean_com_x[t_idx], e.stderr_com_x[t_idx]
        ));
    }
    out
}

/// CSV audit log of per-run outcomes.
pub fn run_log_csv(e: &TrajectoryEnsemble) -> String {
    let mut out = String::from("run_id,seed,jump_count,first_jump_time,final_bitstring\n");
    for r in &e.runs {
        let first = r
            .jump_times
            .first()
            .map_or(String::from("nan"), |t| format!("{t:.12e}"));
        out.push_str(&format!(
            "{},{},{},{},{:#018b}\n",
            r.run_id, r.seed, r.jump_count, first, r.final_bitstring
        ));
    }
    out
}
