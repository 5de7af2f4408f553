//! Atom array geometry: site positions, lattice tags, vacancy defects.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Positions of the trapped atoms in the plane, in μm.
///
/// A vacancy removes the site from every basis, coupling, and dressing map;
/// vacant sites keep their index so that lattice coordinates stay addressable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayGeometry {
    sites: Vec<(f64, f64)>,
    vacancies: BTreeSet<usize>,
    /// Optional lattice spacing metadata (d_x, d_y) in μm.
    pub lattice_tags: Option<(f64, f64)>,
}

impl ArrayGeometry {
    /// Build a geometry from explicit site positions.
    pub fn new(sites: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        let geom = Self { sites, vacancies: BTreeSet::new(), lattice_tags: None };
        geom.check_distinct()?;
        Ok(geom)
    }

    /// Rectangular lattice of `nx` × `ny` sites with spacings `dx`, `dy` μm.
    /// Site index is `x + nx * y` (row-major in y).
    pub fn rectangular(nx: usize, ny: usize, dx: f64, dy: f64) -> Self {
        let mut sites = Vec::with_capacity(nx * ny);
        for y in 0..ny {
            for x in 0..nx {
                sites.push((x as f64 * dx, y as f64 * dy));
            }
        }
        Self { sites, vacancies: BTreeSet::new(), lattice_tags: Some((dx, dy)) }
    }

    /// Equilateral triangle with circumradius `r` μm, centered at the origin.
    pub fn triangle(r: f64) -> Self {
        let sites = (0..3)
            .map(|k| {
                let th = std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::TAU / 3.0;
                (r * th.cos(), r * th.sin())
            })
            .collect();
        Self { sites, vacancies: BTreeSet::new(), lattice_tags: None }
    }

    /// Regular polygon with `n` vertices and circumradius `r` μm.
    pub fn regular_polygon(n: usize, r: f64) -> Self {
        let sites = (0..n)
            .map(|k| {
                let th = k as f64 * std::f64::consts::TAU / n as f64;
                (r * th.cos(), r * th.sin())
            })
            .collect();
        Self { sites, vacancies: BTreeSet::new(), lattice_tags: None }
    }

    fn check_distinct(&self) -> Result<(), ModelError> {
        for i in 0..self.sites.len() {
            for j in (i + 1)..self.sites.len() {
                if self.distance(i, j) == 0.0 {
                    return Err(ModelError::DuplicatePositions(i, j));
                }
            }
        }
        Ok(())
    }

    /// Mark a site as vacant. Errors if the index does not exist.
    pub fn add_vacancy(&mut self, site: usize) -> Result<(), ModelError> {
        if site >= self.sites.len() {
            return Err(ModelError::SiteOutOfRange(site, self.sites.len()));
        }
        self.vacancies.insert(site);
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Indices of non-vacant sites, in order.
    pub fn active_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.sites.len()).filter(move |i| !self.vacancies.contains(i))
    }

    pub fn n_active(&self) -> usize {
        self.sites.len() - self.vacancies.len()
    }

    pub fn is_vacant(&self, site: usize) -> bool {
        self.vacancies.contains(&site)
    }

    pub fn vacancies(&self) -> impl Iterator<Item = usize> + '_ {
        self.vacancies.iter().copied()
    }

    pub fn position(&self, site: usize) -> (f64, f64) {
        self.sites[site]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (xi, yi) = self.sites[i];
        let (xj, yj) = self.sites[j];
        ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt()
    }

    /// Minimum pairwise distance over non-vacant sites.
    pub fn min_distance(&self) -> Option<f64> {
        let active: Vec<usize> = self.active_sites().collect();
        let mut min = f64::INFINITY;
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                min = min.min(self.distance(i, j));
            }
        }
        (min < f64::INFINITY).then_some(min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_indexing() {
        let g = ArrayGeometry::rectangular(4, 4, 5.1, 4.8);
        assert_eq!(g.n_sites(), 16);
        assert_eq!(g.position(0), (0.0, 0.0));
        assert_eq!(g.position(5), (5.1, 4.8));
        assert!((g.distance(0, 1) - 5.1).abs() < 1e-15);
        assert!((g.distance(0, 4) - 4.8).abs() < 1e-15);
    }

    #[test]
    fn duplicate_positions_rejected() {
        let err = ArrayGeometry::new(vec![(0.0, 0.0), (0.0, 0.0)]);
        assert!(matches!(err, Err(ModelError::DuplicatePositions(0, 1))));
    }

    #[test]
    fn vacancy_bookkeeping() {
        let mut g = ArrayGeometry::rectangular(2, 2, 1.0, 1.0);
        g.add_vacancy(3).unwrap();
        assert!(g.is_vacant(3));
        assert_eq!(g.n_active(), 3);
        assert_eq!(g.active_sites().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(g.add_vacancy(4).is_err());
    }

    #[test]
    fn triangle_is_equilateral() {
        let g = ArrayGeometry::triangle(4.34);
        let d01 = g.distance(0, 1);
        let d12 = g.distance(1, 2);
        let d02 = g.distance(0, 2);
        assert!((d01 - d12).abs() < 1e-12);
        assert!((d01 - d02).abs() < 1e-12);
    }
}
