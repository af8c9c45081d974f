use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CarnotError, Result};
use crate::group::{CarnotGroup, Point};
use crate::poly::GradedPolynomial;

use super::operator::Assembled;

/// `L = Σ_kl a_kl ∂_k∂_l + Σ_l b_l ∂_l` in exponential coordinates.
#[derive(Clone, Debug)]
pub(crate) struct SecondOrderForm {
    pub a: Vec<Vec<GradedPolynomial>>,
    pub b: Vec<GradedPolynomial>,
}

impl SecondOrderForm {
    pub fn new(group: &CarnotGroup) -> Self {
        let n = group.dimension();
        let mut a = vec![vec![GradedPolynomial::zero(n); n]; n];
        let mut b = vec![GradedPolynomial::zero(n); n];
        for x in group.horizontal_fields() {
            for k in 0..n {
                for l in 0..n {
                    let prod = &x.coefficients[k] * &x.coefficients[l];
                    a[k][l] = &a[k][l] + &prod;
                }
                b[k] = &b[k] + &x.apply(&x.coefficients[k]);
            }
        }
        Self { a, b }
    }
}

/// What lies at the end of one stencil arm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Arm {
    /// A neighboring interior node (unknown index), at unit fraction.
    Node(u32),
    /// The gauge sphere, crossed at fraction `s ∈ (0, 1)` of a grid step.
    Boundary { crossing: u32, s: f64 },
}

impl Arm {
    pub fn fraction(&self) -> f64 {
        match *self {
            Arm::Node(_) => 1.0,
            Arm::Boundary { s, .. } => s,
        }
    }
}

/// Stencil direction: a coordinate axis or a diagonal `e_k ± e_l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Axis(usize),
    Diagonal { k: usize, l: usize, plus: bool },
}

impl Direction {
    fn offset(&self, dim: usize) -> Vec<i64> {
        let mut o = vec![0i64; dim];
        match *self {
            Direction::Axis(k) => o[k] = 1,
            Direction::Diagonal { k, l, plus } => {
                o[k] = 1;
                o[l] = if plus { 1 } else { -1 };
            }
        }
        o
    }
}

/// Grid over the unit gauge ball at the origin. Every concrete problem is a
/// left translate of a dilate of this structure, so one assembly serves all
/// centers and radii.
pub struct GridStructure {
    pub(crate) group: CarnotGroup,
    pub(crate) form: SecondOrderForm,
    n: usize,
    strides: Vec<usize>,
    unknown_of: Vec<u32>,
    interior: Vec<usize>,
    directions: Vec<Direction>,
    arms: Vec<Arm>,
    crossings: Vec<Vec<f64>>,
    pub(crate) assembled: OnceLock<Arc<Assembled>>,
}

impl std::fmt::Debug for GridStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridStructure")
            .field("n", &self.n)
            .field("interior", &self.interior.len())
            .field("crossings", &self.crossings.len())
            .finish()
    }
}

const EXTERIOR: u32 = u32::MAX;

impl GridStructure {
    fn build(group: &CarnotGroup, n: usize) -> Result<Self> {
        let dim = group.dimension();
        let total = n
            .checked_pow(dim as u32)
            .filter(|&t| t <= 50_000_000)
            .ok_or_else(|| CarnotError::InvalidParameter(format!("{n}^{dim} grid nodes is too many")))?;
        let mut strides = vec![1usize; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * n;
        }
        let h = 2.0 / (n - 1) as f64;
        let coords_of =
            |flat: usize| -> Vec<f64> { (0..dim).map(|k| unit_coord((flat / strides[k]) % n, n)).collect() };
        let inside: Vec<bool> = (0..total)
            .into_par_iter()
            .map(|flat| group.gauge_norm(&coords_of(flat)) < 1.0 - 1e-10)
            .collect();
        let mut unknown_of = vec![EXTERIOR; total];
        let mut interior = Vec::new();
        for (flat, &ins) in inside.iter().enumerate() {
            if ins {
                unknown_of[flat] = interior.len() as u32;
                interior.push(flat);
            }
        }
        if interior.is_empty() {
            return Err(CarnotError::EmptyInterior);
        }

        let form = SecondOrderForm::new(group);
        let mut directions: Vec<Direction> = (0..dim).map(Direction::Axis).collect();
        for k in 0..dim {
            for l in k + 1..dim {
                if !form.a[k][l].is_zero() {
                    directions.push(Direction::Diagonal { k, l, plus: true });
                    directions.push(Direction::Diagonal { k, l, plus: false });
                }
            }
        }
        let offsets: Vec<Vec<i64>> = directions.iter().map(|d| d.offset(dim)).collect();

        // Arms per interior node: (direction, side) with side 0 = +, 1 = -.
        let per_node: Vec<Vec<(Option<u32>, Option<(f64, Vec<f64>)>)>> = interior
            .par_iter()
            .map(|&flat| {
                let x = coords_of(flat);
                let idx: Vec<i64> = (0..dim).map(|k| ((flat / strides[k]) % n) as i64).collect();
                let mut out = Vec::with_capacity(2 * offsets.len());
                for off in &offsets {
                    for sign in [1i64, -1] {
                        let mut nb = 0usize;
                        for k in 0..dim {
                            // Interior nodes never sit on the box faces, so this stays in range.
                            nb += ((idx[k] + sign * off[k]) as usize) * strides[k];
                        }
                        if inside[nb] {
                            out.push((Some(unknown_of[nb]), None));
                        } else {
                            let step: Vec<f64> = off.iter().map(|&o| (sign * o) as f64 * h).collect();
                            let s = bisect_crossing(group, &x, &step);
                            let p: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + s * b).collect();
                            out.push((None, Some((s, p))));
                        }
                    }
                }
                out
            })
            .collect();
        let mut arms = Vec::with_capacity(interior.len() * 2 * offsets.len());
        let mut crossings = Vec::new();
        for node in per_node {
            for (nb, cross) in node {
                match (nb, cross) {
                    (Some(j), _) => arms.push(Arm::Node(j)),
                    (None, Some((s, p))) => {
                        arms.push(Arm::Boundary {
                            crossing: crossings.len() as u32,
                            s,
                        });
                        crossings.push(p);
                    }
                    (None, None) => unreachable!(),
                }
            }
        }
        Ok(Self {
            group: group.clone(),
            form,
            n,
            strides,
            unknown_of,
            interior,
            directions,
            arms,
            crossings,
            assembled: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    /// Arm of interior node `i` in direction `d`, side `+` or `-`.
    pub fn arm(&self, i: usize, d: usize, plus: bool) -> Arm {
        self.arms[(i * self.directions.len() + d) * 2 + usize::from(!plus)]
    }

    pub(crate) fn unit_coords(&self, i: usize) -> Vec<f64> {
        let flat = self.interior[i];
        (0..self.strides.len())
            .map(|k| unit_coord((flat / self.strides[k]) % self.n, self.n))
            .collect()
    }

    pub(crate) fn unit_spacing(&self) -> f64 {
        2.0 / (self.n - 1) as f64
    }

    pub(crate) fn unit_crossing(&self, c: usize) -> &[f64] {
        &self.crossings[c]
    }

    pub(crate) fn grid_index(&self, i: usize) -> Vec<usize> {
        let flat = self.interior[i];
        self.strides.iter().map(|&s| (flat / s) % self.n).collect()
    }

    /// Unknown index of the node at a box multi-index, if interior.
    pub(crate) fn unknown_at(&self, idx: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for (k, &v) in idx.iter().enumerate() {
            if v < 0 || v >= self.n as i64 {
                return None;
            }
            flat += v as usize * self.strides[k];
        }
        match self.unknown_of[flat] {
            EXTERIOR => None,
            u => Some(u as usize),
        }
    }
}

/// Node coordinate on `[-1, 1]`, exactly symmetric so that odd `n` puts a
/// node at the origin.
pub(crate) fn unit_coord(i: usize, n: usize) -> f64 {
    (2 * i) as f64 / (n - 1) as f64 - 1.0
}

/// Bisection for `|x + s·step| = 1` with `|x| < 1 ≤ |x + step|`.
fn bisect_crossing(group: &CarnotGroup, x: &[f64], step: &[f64]) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut p = vec![0.0; x.len()];
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        for k in 0..x.len() {
            p[k] = x[k] + mid * step[k];
        }
        if group.gauge_norm(&p) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A Dirichlet problem domain: the gauge ball `B_radius(center)`, discretized
/// in local coordinates `η` with physical point `center · η`.
#[derive(Clone, Debug)]
pub struct DiscreteProblem {
    structure: Arc<GridStructure>,
    center: Point,
    radius: f64,
}

/// Grid over `B_radius(center)` with `n_per_axis` nodes per coordinate.
/// Layer-`l` coordinates span `[-radius^l, radius^l]`, so the spacing there is
/// `2 radius^l / (n_per_axis - 1)`.
pub fn build_grid(group: &CarnotGroup, center: &[f64], radius: f64, n_per_axis: usize) -> Result<DiscreteProblem> {
    if n_per_axis < 9 {
        return Err(CarnotError::InvalidParameter(format!(
            "n_per_axis must be at least 9, got {n_per_axis}"
        )));
    }
    let structure = Arc::new(GridStructure::build(group, n_per_axis)?);
    DiscreteProblem::from_structure(structure, center, radius)
}

impl DiscreteProblem {
    pub fn from_structure(structure: Arc<GridStructure>, center: &[f64], radius: f64) -> Result<Self> {
        let dim = structure.group.dimension();
        if center.len() != dim {
            return Err(CarnotError::DimensionMismatch {
                expected: dim,
                got: center.len(),
            });
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(CarnotError::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            structure,
            center: Point(center.to_vec()),
            radius,
        })
    }

    /// Same grid shape over another ball; shares the assembled operator.
    pub fn rescaled(&self, center: &[f64], radius: f64) -> Result<Self> {
        Self::from_structure(self.structure.clone(), center, radius)
    }

    pub fn structure(&self) -> &Arc<GridStructure> {
        &self.structure
    }

    pub fn group(&self) -> &CarnotGroup {
        &self.structure.group
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_per_axis(&self) -> usize {
        self.structure.n
    }

    pub fn interior_count(&self) -> usize {
        self.structure.interior_count()
    }

    pub fn boundary_count(&self) -> usize {
        self.structure.crossing_count()
    }

    /// Per-coordinate spacing `2 radius^{w_k} / (n - 1)`.
    pub fn spacing(&self) -> Vec<f64> {
        let h = self.structure.unit_spacing();
        self.group()
            .weights()
            .iter()
            .map(|&w| h * self.radius.powi(w as i32))
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Quadrature volume of the domain: interior nodes times cell volume.
    pub fn volume(&self) -> f64 {
        self.interior_count() as f64 * self.cell_volume()
    }

    pub fn to_local(&self, unit: &[f64]) -> Vec<f64> {
        self.group().dilate_unchecked(self.radius, unit)
    }

    pub fn to_physical(&self, local: &[f64]) -> Point {
        let mut out = vec![0.0; local.len()];
        self.group().multiply_into(&self.center, local, &mut out);
        Point(out)
    }

    /// `center^{-1} · p`.
    pub fn physical_to_local(&self, p: &[f64]) -> Vec<f64> {
        let inv: Vec<f64> = self.center.iter().map(|x| -x).collect();
        let mut out = vec![0.0; p.len()];
        self.group().multiply_into(&inv, p, &mut out);
        out
    }

    pub fn node_local(&self, i: usize) -> Vec<f64> {
        self.to_local(&self.structure.unit_coords(i))
    }

    pub fn node_point(&self, i: usize) -> Point {
        self.to_physical(&self.node_local(i))
    }

    pub fn crossing_point(&self, c: usize) -> Point {
        self.to_physical(&self.to_local(self.structure.unit_crossing(c)))
    }

    pub fn node_points(&self) -> Vec<Point> {
        (0..self.interior_count())
            .into_par_iter()
            .map(|i| self.node_point(i))
            .collect()
    }

    pub fn crossing_points(&self) -> Vec<Point> {
        (0..self.boundary_count())
            .into_par_iter()
            .map(|c| self.crossing_point(c))
            .collect()
    }

    /// Gauge distance from the center of a node, in physical units.
    pub fn node_distance(&self, i: usize) -> f64 {
        self.radius * self.group().gauge_norm(&self.structure.unit_coords(i))
    }
}

/// Grid metadata for export.
#[derive(Clone, Debug, Serialize)]
pub struct GridHeader {
    pub group: crate::group::GroupSpec,
    pub center: Point,
    pub radius: f64,
    pub n_per_axis: usize,
    pub spacing: Vec<f64>,
    pub interior_count: usize,
    pub boundary_count: usize,
}

impl DiscreteProblem {
    pub fn header(&self) -> GridHeader {
        GridHeader {
            group: self.group().spec().clone(),
            center: self.center.clone(),
            radius: self.radius,
            n_per_axis: self.n_per_axis(),
            spacing: self.spacing(),
            interior_count: self.interior_count(),
            boundary_count: self.boundary_count(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_nodes_lie_inside_and_crossings_on_sphere() {
        let g = CarnotGroup::heisenberg();
        let p = build_grid(&g, &[0.3, -0.1, 0.2], 0.5, 13).unwrap();
        for i in 0..p.interior_count() {
            let d = g.distance(p.center(), &p.node_point(i));
            assert!(d < 0.5, "node {i} at distance {d}");
        }
        for c in 0..p.boundary_count() {
            let d = g.distance(p.center(), &p.crossing_point(c));
            assert!((d - 0.5).abs() < 1e-12, "crossing {c} at distance {d}");
        }
    }

    #[test]
    fn small_n_is_rejected() {
        let g = CarnotGroup::heisenberg();
        assert!(build_grid(&g, &[0.0; 3], 1.0, 8).is_err());
        assert!(build_grid(&g, &[0.0; 3], 0.0, 9).is_err());
        assert!(build_grid(&g, &[0.0; 2], 1.0, 9).is_err());
    }

    #[test]
    fn heisenberg_form_matches_expansion() {
        // ∂xx + ∂yy + ((x²+y²)/4)∂tt − y∂x∂t + x∂y∂t
        let g = CarnotGroup::heisenberg();
        let f = SecondOrderForm::new(&g);
        let at = [0.3, -0.7, 0.2];
        assert_eq!(f.a[0][0].eval(&at), 1.0);
        assert_eq!(f.a[1][1].eval(&at), 1.0);
        assert!(f.a[0][1].is_zero());
        assert!((f.a[2][2].eval(&at) - (0.09 + 0.49) / 4.0).abs() < 1e-15);
        assert!((2.0 * f.a[0][2].eval(&at) - 0.7).abs() < 1e-15);
        assert!((2.0 * f.a[1][2].eval(&at) - 0.3).abs() < 1e-15);
        assert!(f.b.iter().all(|b| b.is_zero()));
    }
}
