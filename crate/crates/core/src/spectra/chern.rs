//! Lattice Chern numbers by the discrete field-strength (plaquette-link)
//! method on the magnetic Brillouin zone.

use ndarray::Array2;
use ndarray_linalg::Determinant;

use crate::error::NumericsError;
use crate::linalg;
use crate::C64;

/// Harper model at rational flux Φ = 2π p/q: magnetic unit cell of q sites
/// along x, Bloch momenta k_x ∈ [0, 2π/q), k_y ∈ [0, 2π).
#[derive(Debug, Clone, Copy)]
pub struct HarperModel {
    pub j_x: f64,
    pub j_y: f64,
    pub flux: f64,
    pub q: usize,
}

/// Bloch Hamiltonian of the Harper model.
pub fn harper_bloch(model: &HarperModel, kx: f64, ky: f64) -> Array2<C64> {
    let q = model.q;
    let mut h = Array2::<C64>::zeros((q, q));
    for m in 0..q {
        h[[m, m]] = C64::new(2.0 * model.j_y * (ky + model.flux * m as f64).cos(), 0.0);
        let next = (m + 1) % q;
        // hop across the magnetic cell boundary carries the cell Bloch phase
        let phase = if next == 0 { q as f64 * kx } else { 0.0 };
        let amp = C64::from_polar(model.j_x, phase);
        h[[next, m]] += amp;
        h[[m, next]] += amp.conj();
    }
    h
}

/// Chern numbers of grouped bands via the Fukui-Hatsugai construction.
///
/// `h_of_k` must be periodic on [0, 2π/q) × [0, 2π); `groups` lists the band
/// index ranges (contiguous, ascending, covering all bands). The grid is
/// doubled until the integers are stable; gap closings and per-plaquette
/// Berry fluxes ≥ π are rejected.
pub fn fukui_hatsugai<F>(
    h_of_k: F,
    dim: usize,
    q: usize,
    groups: &[std::ops::Range<usize>],
    initial_grid: usize,
) -> Result<Vec<i64>, NumericsError>
where
    F: Fn(f64, f64) -> Array2<C64> + Sync,
{
    let mut grid = initial_grid.max(8);
    let mut last: Option<Vec<i64>> = None;
    for _ in 0..4 {
        let vectors = eigenvector_grid(&h_of_k, q, groups, grid)?;
        let c = chern_from_vectors(&vectors, dim, groups, grid)?;
        if let Some(prev) = &last {
            if *prev == c {
                return Ok(c);
            }
        }
        last = Some(c);
        grid *= 2;
    }
    Err(NumericsError::Invalid(
        "Chern numbers did not stabilize under grid doubling".into(),
    ))
}

/// Eigenvector fields on an n×n grid of the magnetic zone, with the gap
/// structure between `groups` verified at every point.
pub fn eigenvector_grid<F>(
    h_of_k: &F,
    q: usize,
    groups: &[std::ops::Range<usize>],
    n: usize,
) -> Result<Vec<Array2<C64>>, NumericsError>
where
    F: Fn(f64, f64) -> Array2<C64> + Sync,
{
    use rayon::prelude::*;
    let kx_period = std::f64::consts::TAU / q as f64;
    let ky_period = std::f64::consts::TAU;
    let eigs: Vec<Result<Array2<C64>, NumericsError>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let i = idx / n;
            let j = idx % n;
            let kx = kx_period * i as f64 / n as f64;
            let ky = ky_period * j as f64 / n as f64;
            let h = h_of_k(kx, ky);
            let (vals, vecs) = linalg::eigh(&h)?;
            for w in groups.windows(2) {
                let top = vals[w[0].end - 1];
                let bottom = vals[w[1].start];
                if bottom - top <= 1e-12 {
                    return Err(NumericsError::GapClosing(i, j));
                }
            }
            Ok(vecs)
        })
        .collect();
    let mut vectors = Vec::with_capacity(n * n);
    for e in eigs {
        vectors.push(e?);
    }
    Ok(vectors)
}

/// Plaquette-product Chern numbers from a precomputed eigenvector grid
/// (row-major n×n, periodic wraparound).
pub fn chern_from_vectors(
    vectors: &[Array2<C64>],
    dim: usize,
    groups: &[std::ops::Range<usize>],
    n: usize,
) -> Result<Vec<i64>, NumericsError> {
    let at = |i: usize, j: usize| -> &Array2<C64> { &vectors[(i % n) * n + (j % n)] };

    let link = |a: &Array2<C64>,
                b: &Array2<C64>,
                range: &std::ops::Range<usize>|
     -> Result<C64, NumericsError> {
        let nb = range.len();
        let mut overlap = Array2::<C64>::zeros((nb, nb));
        for (r, br) in range.clone().enumerate() {
            for (c, bc) in range.clone().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for s in 0..dim {
                    acc += a[[s, br]].conj() * b[[s, bc]];
                }
                overlap[[r, c]] = acc;
            }
        }
        let det = overlap.det().map_err(|e| NumericsError::Eigen(e.to_string()))?;
        if det.norm() < 1e-12 {
            return Err(NumericsError::Invalid("singular link variable".into()));
        }
        Ok(det / det.norm())
    };

    let mut out = Vec::with_capacity(groups.len());
    for range in groups {
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let u1 = link(at(i, j), at(i + 1, j), range)?;
                let u2 = link(at(i + 1, j), at(i + 1, j + 1), range)?;
                let u3 = link(at(i + 1, j + 1), at(i, j + 1), range)?;
                let u4 = link(at(i, j + 1), at(i, j), range)?;
                let f = (u1 * u2 * u3 * u4).arg();
                if f.abs() >= std::f64::consts::PI - 1e-9 {
                    return Err(NumericsError::Invalid(
                        "per-plaquette Berry flux reached π; grid too coarse".into(),
                    ));
                }
                total += f;
            }
        }
        let c = total / std::f64::consts::TAU;
        let rounded = c.round();
        if (c - rounded).abs() > 1e-6 {
            return Err(NumericsError::Invalid(format!("non-integer Chern number {c}")));
        }
        out.push(rounded as i64);
    }
    Ok(out)
}

/// Chern numbers of the Harper model bands, one group per band.
pub fn chern_numbers(model: &HarperModel) -> Result<Vec<i64>, NumericsError> {
    let q = model.q;
    let groups: Vec<std::ops::Range<usize>> = (0..q).map(|b| b..b + 1).collect();
    fukui_hatsugai(|kx, ky| harper_bloch(model, kx, ky), q, q, &groups, 24)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn zero_flux_single_band_is_trivial() {
        let model = HarperModel { j_x: 1.0, j_y: 1.0, flux: 0.0, q: 1 };
        assert_eq!(chern_numbers(&model).unwrap(), vec![0]);
    }

    #[test]
    fn chern_sum_rule_q3() {
        let model = HarperModel { j_x: 1.0, j_y: 1.0, flux: std::f64::consts::TAU / 3.0, q: 3 };
        let c = chern_numbers(&model).unwrap();
        assert_eq!(c.iter().sum::<i64>(), 0);
        assert_eq!(c.iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![1, 2, 1]);
    }

    #[test]
    fn chern_flips_sign_with_flux() {
        let m_plus = HarperModel { j_x: 0.6, j_y: 1.0, flux: std::f64::consts::TAU / 3.0, q: 3 };
        let m_minus =
            HarperModel { j_x: 0.6, j_y: 1.0, flux: -std::f64::consts::TAU / 3.0, q: 3 };
        let cp = chern_numbers(&m_plus).unwrap();
        let cm = chern_numbers(&m_minus).unwrap();
        let flipped: Vec<i64> = cp.iter().map(|&c| -c).collect();
        assert_eq!(cm, flipped);
    }

    #[test]
    fn random_rephasing_leaves_chern_invariant() {
        // the link construction cancels arbitrary per-point band phases
        let model = HarperModel { j_x: 1.0, j_y: 1.0, flux: std::f64::consts::TAU / 3.0, q: 3 };
        let groups = [0..1usize, 1..2, 2..3];
        let n = 24;
        let mut vectors =
            eigenvector_grid(&|kx, ky| harper_bloch(&model, kx, ky), 3, &groups, n).unwrap();
        let base = chern_from_vectors(&vectors, 3, &groups, n).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for v in vectors.iter_mut() {
            for band in 0..3 {
                let phase = C64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU);
                for s in 0..3 {
                    v[[s, band]] *= phase;
                }
            }
        }
        let rotated = chern_from_vectors(&vectors, 3, &groups, n).unwrap();
        assert_eq!(base, rotated);
    }
}
