//! Floquet machinery: Fourier decomposition of the multicolor drive, the
//! truncated extended-space matrix, an exact quasienergy oracle, and
//! generalized van Vleck (GVV) perturbation theory on quasi-degenerate
//! blocks.
//!
//! Conventions follow the Shirley picture: the extended basis is |α, n⟩ with
//! zeroth-order energy E_α + nω, and a drive component oscillating as
//! e^{+i n_Θ ω t} that excites an atom raises the Fourier index by n_Θ.

use ndarray::{Array1, Array2};
use num_integer::Integer;

use crate::basis::{Config, SectorBasis};
use crate::error::NumericsError;
use crate::geometry::ArrayGeometry;
use crate::linalg::{self, Csr};
use crate::model::{pair_interaction, DressingConfig, InteractionLaw};
use crate::{C64, Real};

/// Elementary frequency decomposition: ω and the integer harmonics n_Θ with
/// Δ_Θ = n_Θ ω.
#[derive(Debug, Clone)]
pub struct Harmonics {
    pub omega: f64,
    pub n_of_color: Vec<i64>,
}

/// Relative tolerance of the rationalization.
pub const COMMENSURATE_TOL: f64 = 1e-12;

/// Find the largest ω with Δ_Θ = n_Θ ω for integers |n_Θ| ≤ `bound`.
///
/// Detuning ratios are rationalized by continued fractions at relative
/// tolerance 10⁻¹²; incommensurate inputs error out.
pub fn elementary_frequency(detunings: &[f64], bound: i64) -> Result<Harmonics, NumericsError> {
    if detunings.is_empty() || detunings.iter().any(|&d| d == 0.0 || !d.is_finite()) {
        return Err(NumericsError::Invalid("detunings must be nonzero and finite".into()));
    }
    let d0 = detunings[0];
    let mut qs: Vec<i128> = Vec::with_capacity(detunings.len());
    let mut ratios: Vec<f64> = Vec::with_capacity(detunings.len());
    for &d in detunings {
        let r = d / d0;
        let (_, q) = rationalize(r, COMMENSURATE_TOL, bound as i128)
            .ok_or(NumericsError::Incommensurate { tol: COMMENSURATE_TOL, bound })?;
        qs.push(q);
        ratios.push(r);
    }
    let mut lcm: i128 = 1;
    for &q in &qs {
        lcm = lcm.lcm(&q);
        if lcm.abs() > bound as i128 {
            return Err(NumericsError::Incommensurate { tol: COMMENSURATE_TOL, bound });
        }
    }
    let mut ns: Vec<i128> = ratios.iter().map(|r| (r * lcm as f64).round() as i128).collect();
    let mut g: i128 = 0;
    for &n in &ns {
        g = g.gcd(&n);
    }
    if g == 0 {
        return Err(NumericsError::Incommensurate { tol: COMMENSURATE_TOL, bound });
    }
    for n in ns.iter_mut() {
        *n /= g;
    }
    let mut omega = d0 * g as f64 / lcm as f64;
    if omega < 0.0 {
        omega = -omega;
        for n in ns.iter_mut() {
            *n = -*n;
        }
    }
    // verify the decomposition
    for (&d, &n) in detunings.iter().zip(ns.iter()) {
        if n == 0
            || n.abs() > bound as i128
            || (d - n as f64 * omega).abs() > COMMENSURATE_TOL.max(1e-15) * d.abs() * 10.0
        {
            return Err(NumericsError::Incommensurate { tol: COMMENSURATE_TOL, bound });
        }
    }
    Ok(Harmonics { omega, n_of_color: ns.iter().map(|&n| n as i64).collect() })
}

/// Best rational p/q ≈ x by continued fractions with |x − p/q| ≤ tol·|x|.
fn rationalize(x: f64, tol: f64, bound: i128) -> Option<(i128, i128)> {
    let target = x;
    let mut a = x.floor();
    let mut frac = x - a;
    let (mut p0, mut q0): (i128, i128) = (1, 0);
    let (mut p1, mut q1): (i128, i128) = (a as i128, 1);
    for _ in 0..64 {
        let approx = p1 as f64 / q1 as f64;
        if (approx - target).abs() <= tol * target.abs().max(1e-300) {
            return Some((p1, q1));
        }
        if frac.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / frac;
        a = inv.floor();
        frac = inv - a;
        let p2 = a as i128 * p1 + p0;
        let q2 = a as i128 * q1 + q0;
        if q2.abs() > bound || p2.abs() > bound {
            return None;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    let approx = p1 as f64 / q1 as f64;
    ((approx - target).abs() <= tol * target.abs().max(1e-300)).then_some((p1, q1))
}

/// Fourier components of the drive: block n holds every term oscillating as
/// e^{+i n ω t} on the physical basis.
pub struct FourierHamiltonian {
    pub omega: f64,
    pub harmonics: Harmonics,
    pub basis: SectorBasis,
    /// n → operator block (sparse).
    pub blocks: std::collections::BTreeMap<i64, Csr>,
    /// Physical-state energies E_α (interactions).
    pub energies: Vec<f64>,
}

impl FourierHamiltonian {
    /// max |H_{−n} − H_n†| over stored blocks.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut max = 0.0_f64;
        for (&n, block) in &self.blocks {
            if let Some(neg) = self.blocks.get(&-n) {
                let a = block.to_dense();
                let b = neg.to_dense();
                for i in 0..a.nrows() {
                    for j in 0..a.ncols() {
                        max = max.max((a[[i, j]].conj() - b[[j, i]]).norm());
                    }
                }
            } else if n != 0 {
                max = f64::INFINITY;
            }
        }
        max
    }
}

/// Decompose the driven Hamiltonian over the requested excitation sectors.
pub fn fourier_hamiltonian(
    config: &DressingConfig,
    law: &InteractionLaw,
    geometry: &ArrayGeometry,
    sectors: &[usize],
) -> Result<FourierHamiltonian, NumericsError> {
    let detunings: Vec<f64> = config.colors.iter().map(|c| c.detuning).collect();
    let harmonics = elementary_frequency(&detunings, 1_000_000)?;
    let basis = union_basis(geometry, sectors);
    let dim = basis.dim();

    let energies: Vec<f64> = basis
        .states()
        .iter()
        .map(|&s| interaction_energy(geometry, law, s))
        .collect();

    let mut triplets: std::collections::BTreeMap<i64, Vec<(usize, usize, C64)>> =
        std::collections::BTreeMap::new();
    for (ci, color) in config.colors.iter().enumerate() {
        let n_c = harmonics.n_of_color[ci];
        for (&site, &amp) in &color.rabi {
            if geometry.is_vacant(site) {
                continue;
            }
            let bit: Config = 1 << site;
            for (k, &s) in basis.states().iter().enumerate() {
                if s & bit != 0 {
                    continue;
                }
                if let Some(up) = basis.index_of(s | bit) {
                    // exciting term (Ω/2) b† oscillates as e^{+i n_c ω t}
                    triplets.entry(n_c).or_default().push((up, k, 0.5 * amp));
                    triplets.entry(-n_c).or_default().push((k, up, 0.5 * amp.conj()));
                }
            }
        }
    }

    let blocks = triplets
        .into_iter()
        .map(|(n, t)| (n, Csr::from_triplets(dim, dim, t)))
        .collect();

    Ok(FourierHamiltonian { omega: harmonics.omega, harmonics, basis, blocks, energies })
}

fn union_basis(geometry: &ArrayGeometry, sectors: &[usize]) -> SectorBasis {
    // sectors are excitation numbers; a contiguous range is a band
    let lo = sectors.iter().copied().min().unwrap_or(0);
    let hi = sectors.iter().copied().max().unwrap_or(0);
    // require contiguity for a faithful drive representation
    SectorBasis::band(geometry, (lo + hi) / 2, (hi - lo + 1) / 2 + (hi - lo) % 2)
}

fn interaction_energy(geometry: &ArrayGeometry, law: &InteractionLaw, s: Config) -> f64 {
    let mut e = 0.0;
    let mut bits_i = s;
    while bits_i != 0 {
        let i = bits_i.trailing_zeros() as usize;
        bits_i &= bits_i - 1;
        let mut bits_j = bits_i;
        while bits_j != 0 {
            let j = bits_j.trailing_zeros() as usize;
            bits_j &= bits_j - 1;
            e += pair_interaction(geometry, law, i, j).expect("active pair");
        }
    }
    e
}

/// Truncated extended-space matrix over (physical state × Fourier index).
pub struct FloquetMatrix {
    pub omega: f64,
    pub n_max: i64,
    pub harmonics: Harmonics,
    pub basis: SectorBasis,
    /// Zeroth-order energies E_α + nω of the extended basis.
    pub diag: Vec<f64>,
    matrix: Csr,
}

impl FloquetMatrix {
    pub fn dim(&self) -> usize {
        self.basis.dim() * (2 * self.n_max as usize + 1)
    }

    /// Extended index of (physical index, Fourier index).
    pub fn index(&self, phys: usize, n: i64) -> usize {
        debug_assert!(n.abs() <= self.n_max);
        (n + self.n_max) as usize * self.basis.dim() + phys
    }

    pub fn split_index(&self, ext: usize) -> (usize, i64) {
        let d = self.basis.dim();
        (ext % d, (ext / d) as i64 - self.n_max)
    }

    pub fn to_dense(&self) -> Array2<C64> {
        self.matrix.to_dense()
    }

    pub fn matvec(&self, x: &Array1<C64>) -> Array1<C64> {
        self.matrix.matvec(x)
    }

    /// Hermiticity defect of the assembled matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.to_dense();
        let mut max = 0.0_f64;
        for i in 0..d.nrows() {
            for j in 0..=i {
                max = max.max((d[[i, j]] - d[[j, i]].conj()).norm());
            }
        }
        max
    }

    /// Debug dump of the block structure: block row, block col, harmonic, nnz.
    pub fn block_structure_csv(&self) -> String {
        let dim = self.basis.dim();
        let dense = self.to_dense();
        let total = 2 * self.n_max + 1;
        let mut out = String::from("block_row,block_col,harmonic,nnz\n");
        for br in 0..total {
            for bc in 0..total {
                let mut nnz = 0;
                for i in 0..dim {
                    for j in 0..dim {
                        if dense[[br as usize * dim + i, bc as usize * dim + j]].norm() > 0.0 {
                            nnz += 1;
                        }
                    }
                }
                if nnz > 0 {
                    out.push_str(&format!("{br},{bc},{},{nnz}\n", bc - br));
                }
            }
        }
        out
    }
}

/// Assemble the truncated Floquet matrix on the requested sectors.
pub fn build_sector_floquet(
    config: &DressingConfig,
    law: &InteractionLaw,
    geometry: &ArrayGeometry,
    sectors: &[usize],
    n_max: i64,
) -> Result<FloquetMatrix, NumericsError> {
    let fourier = fourier_hamiltonian(config, law, geometry, sectors)?;
    let max_harmonic = fourier
        .harmonics
        .n_of_color
        .iter()
        .map(|n| n.abs())
        .max()
        .unwrap_or(0);
    if n_max < max_harmonic {
        return Err(NumericsError::TruncationTooSmall { n_max, max_harmonic });
    }
    let dim_phys = fourier.basis.dim();
    let total = (2 * n_max + 1) as usize;
    let ext_dim = dim_phys * total;
    let index = |phys: usize, n: i64| -> usize { (n + n_max) as usize * dim_phys + phys };

    let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
    let mut diag = vec![0.0; ext_dim];
    for n in -n_max..=n_max {
        for (k, &e) in fourier.energies.iter().enumerate() {
            let ext = index(k, n);
            let val = e + n as f64 * fourier.omega;
            diag[ext] = val;
            triplets.push((ext, ext, C64::new(val, 0.0)));
        }
        for (&h, block) in &fourier.blocks {
            let m = n + h;
            if m.abs() > n_max {
                continue;
            }
            for r in 0..block.n_rows {
                for idx in block.row_ptr[r]..block.row_ptr[r + 1] {
                    let c = block.col_idx[idx];
                    triplets.push((index(r, m), index(c, n), block.values[idx]));
                }
            }
        }
    }
    let matrix = Csr::from_triplets(ext_dim, ext_dim, triplets);
    Ok(FloquetMatrix {
        omega: fourier.omega,
        n_max,
        harmonics: fourier.harmonics,
        basis: fourier.basis,
        diag,
        matrix,
    })
}

/// Eigenpairs of the Floquet matrix within an energy window.
pub fn quasienergies(
    floquet: &FloquetMatrix,
    window: (f64, f64),
) -> Result<(Vec<f64>, Vec<Array1<C64>>), NumericsError> {
    let dim = floquet.dim();
    if dim > linalg::DENSE_EIG_LIMIT {
        return Err(NumericsError::DimensionOverflow(dim, linalg::DENSE_EIG_LIMIT));
    }
    let dense = floquet.to_dense();
    let (vals, vecs) = linalg::eigh(&dense)?;
    let mut out_vals = Vec::new();
    let mut out_vecs = Vec::new();
    for (k, &e) in vals.iter().enumerate() {
        if e >= window.0 && e <= window.1 {
            out_vals.push(e);
            out_vecs.push(vecs.column(k).to_owned());
        }
    }
    Ok((out_vals, out_vecs))
}

/// Quasienergies with an automatic truncation-convergence check: the window
/// eigenvalues must move by less than `tol` when N_max grows by 2.
#[allow(clippy::too_many_arguments)]
pub fn quasienergies_converged(
    config: &DressingConfig,
    law: &InteractionLaw,
    geometry: &ArrayGeometry,
    sectors: &[usize],
    n_max: i64,
    window: (f64, f64),
    tol: f64,
) -> Result<(Vec<f64>, FloquetMatrix), NumericsError> {
    let f1 = build_sector_floquet(config, law, geometry, sectors, n_max)?;
    let (v1, _) = quasienergies(&f1, window)?;
    let f2 = build_sector_floquet(config, law, geometry, sectors, n_max + 2)?;
    let (v2, _) = quasienergies(&f2, window)?;
    if v1.len() != v2.len() {
        return Err(NumericsError::NotConverged { drift: f64::INFINITY, tol });
    }
    let drift = v1
        .iter()
        .zip(v2.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    if drift > tol {
        return Err(NumericsError::NotConverged { drift, tol });
    }
    Ok((v1, f1))
}

/// Result of a GVV expansion on a quasi-degenerate block.
pub struct GvvResult {
    pub order: usize,
    /// Effective Hamiltonian on the block, orders summed through `order`
    /// (zeroth-order diagonal included).
    pub h_eff: Array2<C64>,
    /// Per-order contributions [order][block][block].
    pub contributions: Vec<Array2<C64>>,
    /// Anti-Hermitian residual max |H − H†| of the order-2 term.
    pub anti_hermitian_residual: f64,
    /// Norm of the ⟨Ψ⁽⁰⁾|Ψ⁽¹⁾⟩ cross term, asserted numerically zero.
    pub overlap_term_norm: f64,
    /// First-order corrected state coefficients over the complement,
    /// shape (complement dim, block dim).
    pub first_order_states: Array2<C64>,
    /// Extended-space indices of the complement (row labels of
    /// `first_order_states`).
    pub complement: Vec<usize>,
}

/// Ratio gate for quasi-degeneracy: intra-block spread must stay below this
/// fraction of the gap to the complement.
pub const QUASI_DEGENERACY_RATIO: f64 = 0.1;

/// GVV effective Hamiltonian on the `block` of extended-space indices.
pub fn gvv_effective(
    floquet: &FloquetMatrix,
    block: &[usize],
    order: usize,
) -> Result<GvvResult, NumericsError> {
    gvv_effective_gated(floquet, block, order, QUASI_DEGENERACY_RATIO)
}

pub fn gvv_effective_gated(
    floquet: &FloquetMatrix,
    block: &[usize],
    order: usize,
    gate_ratio: f64,
) -> Result<GvvResult, NumericsError> {
    if !(1..=3).contains(&order) {
        return Err(NumericsError::Invalid(format!("GVV order {order} not in 1..=3")));
    }
    let dim = floquet.dim();
    let nb = block.len();
    if nb == 0 {
        return Err(NumericsError::Invalid("empty block".into()));
    }
    let e0: Vec<f64> = block.iter().map(|&k| floquet.diag[k]).collect();
    let e_min = e0.iter().cloned().fold(f64::INFINITY, f64::min);
    let e_max = e0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = e_max - e_min;

    let in_block = {
        let mut mask = vec![false; dim];
        for &k in block {
            mask[k] = true;
        }
        mask
    };
    let complement: Vec<usize> = (0..dim).filter(|&k| !in_block[k]).collect();
    let gap = complement
        .iter()
        .map(|&c| {
            e0.iter()
                .map(|&e| (floquet.diag[c] - e).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    if spread > gate_ratio * gap {
        return Err(NumericsError::NotQuasiDegenerate { spread, gap });
    }

    let dense = floquet.to_dense();
    // V = H_F − diag(H_F)
    let v = {
        let mut v = dense.clone();
        for k in 0..dim {
            v[[k, k] ] = C64::new(0.0, 0.0);
        }
        v
    };

    let mut contributions: Vec<Array2<C64>> = Vec::new();

    // order 1: block projection of V
    let mut h1 = Array2::<C64>::zeros((nb, nb));
    for (a, &ka) in block.iter().enumerate() {
        for (b, &kb) in block.iter().enumerate() {
            h1[[a, b]] = v[[ka, kb]];
        }
    }
    contributions.push(h1.clone());

    // first-order states: |b⟩^(1) = Σ_{c∉B} V_cb / (E_b − E_c) |c⟩
    let mut psi1 = Array2::<C64>::zeros((complement.len(), nb));
    for (b, &kb) in block.iter().enumerate() {
        for (ci, &kc) in complement.iter().enumerate() {
            let vcb = v[[kc, kb]];
            if vcb.norm_sqr() > 0.0 {
                psi1[[ci, b]] = vcb / (floquet.diag[kb] - floquet.diag[kc]);
            }
        }
    }

    let mut anti_res = 0.0_f64;
    let mut overlap_norm = 0.0;
    if order >= 2 {
        // ⟨a|V|b⁽¹⁾⟩ term
        let mut h2 = Array2::<C64>::zeros((nb, nb));
        for (a, &ka) in block.iter().enumerate() {
            for b in 0..nb {
                let mut acc = C64::new(0.0, 0.0);
                for (ci, &kc) in complement.iter().enumerate() {
                    let vac = v[[ka, kc]];
                    if vac.norm_sqr() > 0.0 {
                        acc += vac * psi1[[ci, b]];
                    }
                }
                h2[[a, b]] = acc;
            }
        }
        // second term −H⁽¹⁾⟨Ψ⁽⁰⁾|Ψ⁽¹⁾⟩: the corrections live in the
        // complement, so every overlap vanishes; computed literally here
        let mut overlap = Array2::<C64>::zeros((nb, nb));
        for (ap, &kap) in block.iter().enumerate() {
            for b in 0..nb {
                // ⟨Ψ⁰_{a'}|Ψ¹_b⟩: coefficient of basis state kap in |b⟩⁽¹⁾
                let c = complement.iter().position(|&k| k == kap);
                if let Some(ci) = c {
                    overlap[[ap, b]] = psi1[[ci, b]];
                }
            }
        }
        let corr = h1.dot(&overlap);
        overlap_norm = corr.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let h2_full = &h2 - &corr;
        for a in 0..nb {
            for b in 0..nb {
                anti_res = anti_res.max((h2_full[[a, b]] - h2_full[[b, a]].conj()).norm());
            }
        }
        contributions.push(h2_full);
    }

    if order >= 3 {
        // ⟨Ψ¹_a|V|Ψ¹_b⟩ − H⁽¹⁾⟨Ψ¹|Ψ¹⟩
        let nc = complement.len();
        let mut v_cc = Array2::<C64>::zeros((nc, nc));
        for (ci, &kc) in complement.iter().enumerate() {
            for (cj, &kd) in complement.iter().enumerate() {
                v_cc[[ci, cj]] = v[[kc, kd]];
            }
        }
        let vp = v_cc.dot(&psi1);
        let mut h3 = psi1.t().mapv(|z| z.conj()).dot(&vp);
        let s11 = psi1.t().mapv(|z| z.conj()).dot(&psi1);
        let corr = contributions[0].dot(&s11);
        h3 = &h3 - &corr;
        contributions.push(h3);
    }

    let mut h_eff = Array2::<C64>::zeros((nb, nb));
    for (a, &e) in e0.iter().enumerate() {
        h_eff[[a, a]] = C64::new(e, 0.0);
    }
    for c in contributions.iter().take(order) {
        h_eff = &h_eff + c;
    }

    Ok(GvvResult {
        order,
        h_eff,
        contributions,
        anti_hermitian_residual: anti_res,
        overlap_term_norm: overlap_norm,
        first_order_states: psi1,
        complement,
    })
}

/// Extended indices of a set of physical configurations at Fourier index n.
pub fn extended_block(
    floquet: &FloquetMatrix,
    configs: &[Config],
    n: i64,
) -> Result<Vec<usize>, NumericsError> {
    configs
        .iter()
        .map(|&c| {
            floquet
                .basis
                .index_of(c)
                .map(|k| floquet.index(k, n))
                .ok_or(NumericsError::StateOutsideSector)
        })
        .collect()
}

pub type QuasiSpectrum = (Vec<Real>, Vec<Array1<C64>>);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ColorField;
    use crate::units::mhz_to_angular;

    #[test]
    fn elementary_frequency_paper_detunings() {
        let d: Vec<f64> = [120.0, 140.0, 160.0, 180.0]
            .iter()
            .map(|&x| mhz_to_angular(x))
            .collect();
        let h = elementary_frequency(&d, 1_000_000).unwrap();
        assert!((h.omega - mhz_to_angular(20.0)).abs() < 1e-9);
        assert_eq!(h.n_of_color, vec![6, 7, 8, 9]);
    }

    #[test]
    fn elementary_frequency_single_detuning() {
        let h = elementary_frequency(&[5.5], 100).unwrap();
        assert_eq!(h.n_of_color, vec![1]);
        assert!((h.omega - 5.5).abs() < 1e-15);
    }

    #[test]
    fn incommensurate_detunings_error() {
        let d = [mhz_to_angular(100.0), mhz_to_angular(100.0) * 2.0_f64.sqrt()];
        assert!(matches!(
            elementary_frequency(&d, 1_000_000),
            Err(NumericsError::Incommensurate { .. })
        ));
    }

    #[test]
    fn negative_detunings_get_negative_harmonics() {
        let h = elementary_frequency(&[-10.0, 20.0], 100).unwrap();
        assert!(h.omega > 0.0);
        assert_eq!(h.n_of_color, vec![-1, 2]);
    }

    fn two_atom_system() -> (ArrayGeometry, DressingConfig, InteractionLaw) {
        let geom = ArrayGeometry::new(vec![(0.0, 0.0), (8.0, 0.0)]).unwrap();
        let law = InteractionLaw::new(2.0e7).unwrap(); // V ≈ 76.3 rad/us
        let a = ColorField::new("A", mhz_to_angular(120.0))
            .dress(0, mhz_to_angular(10.0), 0.4)
            .dress(1, mhz_to_angular(10.0), -0.2);
        (geom, DressingConfig::new(vec![a]), law)
    }

    #[test]
    fn fourier_blocks_are_hermitian_pairs() {
        let (geom, cfg, law) = two_atom_system();
        let f = fourier_hamiltonian(&cfg, &law, &geom, &[0, 1, 2]).unwrap();
        assert!(f.hermiticity_defect() < 1e-14);
        // single color: every drive term lives in harmonics ±1
        assert_eq!(f.blocks.keys().copied().collect::<Vec<_>>(), vec![-1, 1]);
    }

    #[test]
    fn floquet_matrix_diagonal_when_undriven() {
        let geom = ArrayGeometry::new(vec![(0.0, 0.0), (8.0, 0.0)]).unwrap();
        let law = InteractionLaw::new(2.0e7).unwrap();
        let a = ColorField::new("A", mhz_to_angular(100.0)); // no dressed sites
        let cfg = DressingConfig::new(vec![a]);
        let f = build_sector_floquet(&cfg, &law, &geom, &[0, 1, 2], 2).unwrap();
        let dense = f.to_dense();
        for i in 0..f.dim() {
            for j in 0..f.dim() {
                if i != j {
                    assert_eq!(dense[[i, j]].norm(), 0.0);
                }
            }
        }
        // ladder spectrum E_α + nω reproduced exactly
        let (vals, _) = quasienergies(&f, (f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        let mut expected: Vec<f64> = f.diag.clone();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, e) in vals.iter().zip(expected.iter()) {
            assert!((v - e).abs() < 1e-9);
        }
    }

    #[test]
    fn selection_rule_couples_only_harmonic_shifted_blocks() {
        let (geom, cfg, law) = two_atom_system();
        let f = build_sector_floquet(&cfg, &law, &geom, &[0, 1, 2], 3).unwrap();
        let dense = f.to_dense();
        let d = f.basis.dim();
        for i in 0..f.dim() {
            for j in 0..f.dim() {
                if dense[[i, j]].norm() > 0.0 && i != j {
                    let bi = (i / d) as i64;
                    let bj = (j / d) as i64;
                    assert_eq!((bi - bj).abs(), 1, "coupling outside ±n_Θ blocks");
                }
            }
        }
        assert!(f.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn truncation_guard() {
        let (geom, cfg, law) = two_atom_system();
        assert!(matches!(
            build_sector_floquet(&cfg, &law, &geom, &[0, 1], 0),
            Err(NumericsError::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn gvv_order1_vanishes_for_block_offdiagonal_perturbation() {
        let (geom, cfg, law) = two_atom_system();
        let f = build_sector_floquet(&cfg, &law, &geom, &[0, 1, 2], 2).unwrap();
        // single-excitation block at n = 0
        let block = extended_block(&f, &[0b01, 0b10], 0).unwrap();
        let g = gvv_effective(&f, &block, 1).unwrap();
        // the drive only connects different excitation numbers: order 1 is zero
        for z in g.contributions[0].iter() {
            assert_eq!(z.norm(), 0.0);
        }
    }

    #[test]
    fn gvv_order2_reproduces_hopping_and_light_shifts() {
        let (geom, cfg, law) = two_atom_system();
        let f = build_sector_floquet(&cfg, &law, &geom, &[0, 1, 2], 2).unwrap();
        let block = extended_block(&f, &[0b01, 0b10], 0).unwrap();
        let g = gvv_effective(&f, &block, 2).unwrap();
        assert!(g.overlap_term_norm < 1e-14);
        assert!(g.anti_hermitian_residual < 1e-12);

        let v = pair_interaction(&geom, &law, 0, 1).unwrap();
        let delta = cfg.colors[0].detuning;
        let o0 = cfg.colors[0].rabi[&0];
        let o1 = cfg.colors[0].rabi[&1];
        // diagonal: |Ω_i|²/4Δ − |Ω_j|²/4(Δ+V)
        let mu0 = o0.norm_sqr() / (4.0 * delta) - o1.norm_sqr() / (4.0 * (delta + v));
        let h2 = &g.contributions[1];
        assert!((h2[[0, 0]].re - mu0).abs() / mu0.abs() < 1e-12);
        // off-diagonal: (Ω_i Ω_j*/4)(1/Δ − 1/(Δ+V)) with i the created excitation
        let expect = o1 * o0.conj() * (1.0 / delta - 1.0 / (delta + v)) / 4.0;
        let got = h2[[1, 0]];
        assert!((got - expect).norm() / expect.norm() < 1e-12);
    }

    #[test]
    fn quasienergy_convergence_wrapper() {
        let (geom, cfg, law) = two_atom_system();
        let win = (-10.0, 10.0);
        let (vals, _) =
            quasienergies_converged(&cfg, &law, &geom, &[0, 1, 2], 2, win, 1e-6).unwrap();
        assert!(!vals.is_empty());
    }
}
