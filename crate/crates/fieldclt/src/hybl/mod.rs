//! Feasibility checking for the nonhomogeneous
//! Hoelder-Young-Brascamp-Lieb inequality in exact rational arithmetic.
//!
//! An instance is a family of surjective rational linear maps l_j from an
//! ambient space together with reciprocal integrability exponents z_j.
//! Feasibility is governed by a dimension-balance condition (C1) and a
//! per-subspace power-counting condition (C2); given (C1), (C2) is
//! equivalent to a codimension condition (C3). The general critical
//! subspace enumeration is open, so the generic checker searches the
//! lattice generated by the map kernels and reports an honest tri-state.

pub mod matrix;

use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::HashSet;
use thiserror::Error;

pub use matrix::{format_rat, parse_rat, rat, rat_int, Rat, RatMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum HyblError {
    #[error("map {index} is not surjective: rank {rank} < {expected}")]
    NotSurjective {
        index: usize,
        rank: usize,
        expected: usize,
    },
    #[error("kernels do not intersect trivially: common kernel has dimension {dim}")]
    KernelsOverlap { dim: usize },
    #[error("exponent z_{index} = {value} outside [0, 1]")]
    ExponentRange { index: usize, value: String },
    #[error("instance shape mismatch: {0}")]
    Shape(String),
    #[error("k must be >= 3, got {0}")]
    OrderTooSmall(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// One HYBL feasibility problem.
#[derive(Debug, Clone)]
pub struct HyblInstance {
    pub ambient_dim: usize,
    pub maps: Vec<RatMatrix>,
    pub exponents: Vec<Rat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    Proved,
    Refuted,
    Undecided,
}

/// Outcome of the condition checks for one instance.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityVerdict {
    pub c1_holds: bool,
    pub c2: TriState,
    pub c3: TriState,
    /// Whether the subspace search was exhaustive for this instance class.
    pub complete: bool,
    pub tested_candidates: usize,
    /// Basis rows of a refuting subspace, as "p/q" strings.
    pub witness: Option<Vec<Vec<String>>>,
}

const CANDIDATE_CAP: usize = 10_000;

impl HyblInstance {
    pub fn new(
        ambient_dim: usize,
        maps: Vec<RatMatrix>,
        exponents: Vec<Rat>,
    ) -> Result<Self, HyblError> {
        if maps.len() != exponents.len() {
            return Err(HyblError::Shape(format!(
                "{} maps but {} exponents",
                maps.len(),
                exponents.len()
            )));
        }
        for (j, m) in maps.iter().enumerate() {
            if m.cols != ambient_dim {
                return Err(HyblError::Shape(format!(
                    "map {j} has {} columns, ambient dimension is {ambient_dim}",
                    m.cols
                )));
            }
            let rank = m.rank();
            if rank != m.rows {
                return Err(HyblError::NotSurjective {
                    index: j,
                    rank,
                    expected: m.rows,
                });
            }
        }
        for (j, z) in exponents.iter().enumerate() {
            if z < &Rat::zero() || z > &Rat::one() {
                return Err(HyblError::ExponentRange {
                    index: j,
                    value: format_rat(z),
                });
            }
        }
        // intersection of all kernels must be {0}
        let stacked = maps
            .iter()
            .skip(1)
            .fold(maps[0].clone(), |acc, m| RatMatrix::stack(&acc, m));
        let common = stacked.nullspace();
        if common.rows != 0 {
            return Err(HyblError::KernelsOverlap { dim: common.rows });
        }
        Ok(HyblInstance {
            ambient_dim,
            maps,
            exponents,
        })
    }

    /// (C1): sum z_j dim(H_j) equals the ambient dimension, exactly.
    pub fn check_c1(&self) -> bool {
        let total: Rat = self
            .maps
            .iter()
            .zip(&self.exponents)
            .map(|(m, z)| z * rat_int(m.rows as i64))
            .sum();
        total == rat_int(self.ambient_dim as i64)
    }

    /// (C2): dim V <= sum z_j dim(l_j(V)) over the candidate subspace set.
    ///
    /// Candidates are the lattice generated by the map kernels under sums
    /// and intersections, the coordinate lines, the full space, and any
    /// caller-supplied subspaces (bases as rows). The verdict is proved
    /// and complete only when a structural argument covers every V; a
    /// clean search otherwise reports undecided.
    pub fn check_c2(&self, subspaces: Option<&[RatMatrix]>) -> FeasibilityVerdict {
        let c1 = self.check_c1();
        let candidates = self.candidate_subspaces(subspaces);
        let tested = candidates.len();

        // report the violating subspace of smallest dimension, so the
        // witness is as interpretable as possible
        let witness = candidates
            .iter()
            .filter(|v| !self.c2_holds_for(v))
            .min_by_key(|v| v.rank())
            .map(basis_strings);
        let mut c3_witness = None;
        if witness.is_none() {
            for v in &candidates {
                if !self.c3_holds_for(v) {
                    c3_witness = Some(basis_strings(v));
                    break;
                }
            }
        }

        let structural = witness.is_none() && self.structurally_proved();
        let c2 = if witness.is_some() {
            TriState::Refuted
        } else if structural {
            TriState::Proved
        } else {
            TriState::Undecided
        };
        let c3 = if c3_witness.is_some() {
            TriState::Refuted
        } else if c1 && c2 == TriState::Proved {
            // any two of (C1), (C2), (C3) imply the third
            TriState::Proved
        } else {
            TriState::Undecided
        };
        FeasibilityVerdict {
            c1_holds: c1,
            c2,
            c3,
            complete: structural,
            tested_candidates: tested,
            witness: witness.or(c3_witness),
        }
    }

    /// Structural sufficient conditions under which (C2) holds for every
    /// subspace: either the injectivity mass sum_{l_j injective} z_j
    /// reaches 1, or the instance is the cumulant family of projections,
    /// block sum, and identity, whose reduction closes in general.
    fn structurally_proved(&self) -> bool {
        let injective_mass: Rat = self
            .maps
            .iter()
            .zip(&self.exponents)
            .filter(|(m, _)| m.rows == self.ambient_dim)
            .map(|(_, z)| z.clone())
            .sum();
        if injective_mass >= Rat::one() {
            return true;
        }
        if let Some((k, d)) = self.projection_family_shape() {
            // dim V <= z1 k d + z_{k+1} dim V reduces, via (C1), to
            // dim V <= d (k - 1), true for every subspace
            let _ = (k, d);
            return self.check_c1();
        }
        false
    }

    /// Detect the cumulant instance: k - 1 coordinate-block projections,
    /// one block-sum map, one identity, with equal leading exponents.
    fn projection_family_shape(&self) -> Option<(usize, usize)> {
        let k = self.maps.len().checked_sub(1)?;
        if k < 3 || self.ambient_dim % (k - 1) != 0 {
            return None;
        }
        let d = self.ambient_dim / (k - 1);
        let reference = projection_family_maps(k, d);
        if self.maps != reference {
            return None;
        }
        let z1 = &self.exponents[0];
        if !self.exponents[..k].iter().all(|z| z == z1) {
            return None;
        }
        Some((k, d))
    }

    fn c2_holds_for(&self, v: &RatMatrix) -> bool {
        let dim_v = rat_int(v.rows as i64);
        let rhs: Rat = self
            .maps
            .iter()
            .zip(&self.exponents)
            .map(|(m, z)| z * rat_int(image_dim(v, m) as i64))
            .sum();
        dim_v <= rhs
    }

    fn c3_holds_for(&self, v: &RatMatrix) -> bool {
        let codim_v = rat_int((self.ambient_dim - v.rows) as i64);
        let rhs: Rat = self
            .maps
            .iter()
            .zip(&self.exponents)
            .map(|(m, z)| z * rat_int((m.rows - image_dim(v, m)) as i64))
            .sum();
        codim_v >= rhs
    }

    /// Kernel-lattice closure plus coordinate lines and extremes.
    fn candidate_subspaces(&self, extra: Option<&[RatMatrix]>) -> Vec<RatMatrix> {
        let n = self.ambient_dim;
        let mut seen: HashSet<RatMatrix> = HashSet::new();
        let mut list: Vec<RatMatrix> = Vec::new();
        let push = |m: RatMatrix, seen: &mut HashSet<RatMatrix>, list: &mut Vec<RatMatrix>| {
            if seen.insert(m.clone()) {
                list.push(m);
            }
        };

        push(RatMatrix::zero(0, n), &mut seen, &mut list);
        push(RatMatrix::identity(n), &mut seen, &mut list);
        for i in 0..n {
            let mut e = RatMatrix::zero(1, n);
            *e.at_mut(0, i) = Rat::one();
            push(e, &mut seen, &mut list);
        }
        for m in &self.maps {
            push(m.nullspace().row_space_basis(), &mut seen, &mut list);
        }
        if let Some(extra) = extra {
            for m in extra {
                push(m.row_space_basis(), &mut seen, &mut list);
            }
        }

        // close under pairwise sum and intersection
        let mut frontier = 0;
        while frontier < list.len() && list.len() < CANDIDATE_CAP {
            let v = list[frontier].clone();
            frontier += 1;
            for i in 0..frontier.saturating_sub(1) {
                if list.len() >= CANDIDATE_CAP {
                    break;
                }
                let w = list[i].clone();
                push(subspace_sum(&v, &w), &mut seen, &mut list);
                push(subspace_intersection(&v, &w), &mut seen, &mut list);
            }
        }
        list
    }
}

/// dim(l(V)) for V given by basis rows: rank of the mapped basis.
fn image_dim(v: &RatMatrix, map: &RatMatrix) -> usize {
    if v.rows == 0 {
        return 0;
    }
    v.mul(&map.transpose()).rank()
}

/// Canonical basis of V + W.
pub fn subspace_sum(v: &RatMatrix, w: &RatMatrix) -> RatMatrix {
    RatMatrix::stack(v, w).row_space_basis()
}

/// Canonical basis of the intersection of V and W.
pub fn subspace_intersection(v: &RatMatrix, w: &RatMatrix) -> RatMatrix {
    let n = v.cols;
    if v.rows == 0 || w.rows == 0 {
        return RatMatrix::zero(0, n);
    }
    // solve v^T u = w^T x: nullspace of [v^T | -w^T]
    let mut m = RatMatrix::zero(n, v.rows + w.rows);
    for i in 0..n {
        for j in 0..v.rows {
            *m.at_mut(i, j) = v.at(j, i).clone();
        }
        for j in 0..w.rows {
            *m.at_mut(i, v.rows + j) = -w.at(j, i).clone();
        }
    }
    let ns = m.nullspace();
    if ns.rows == 0 {
        return RatMatrix::zero(0, n);
    }
    let mut vectors = Vec::new();
    for r in 0..ns.rows {
        let coeffs = RatMatrix::from_rows(vec![ns.row(r)[..v.rows].to_vec()]);
        let vec = coeffs.mul(v);
        vectors.push(vec.row(0).to_vec());
    }
    RatMatrix::from_rows(vectors).row_space_basis()
}

fn basis_strings(v: &RatMatrix) -> Vec<Vec<String>> {
    (0..v.rows)
        .map(|r| v.row(r).iter().map(format_rat).collect())
        .collect()
}

/// Maps of the cumulant instance on R^{d(k-1)}: the k - 1 coordinate-block
/// projections, the block sum, and the identity.
pub fn projection_family_maps(k: usize, d: usize) -> Vec<RatMatrix> {
    assert!(k >= 3 && d >= 1);
    let n = d * (k - 1);
    let mut maps = Vec::with_capacity(k + 1);
    for j in 0..k - 1 {
        let mut m = RatMatrix::zero(d, n);
        for i in 0..d {
            *m.at_mut(i, j * d + i) = Rat::one();
        }
        maps.push(m);
    }
    let mut sum_map = RatMatrix::zero(d, n);
    for j in 0..k - 1 {
        for i in 0..d {
            *sum_map.at_mut(i, j * d + i) = Rat::one();
        }
    }
    maps.push(sum_map);
    maps.push(RatMatrix::identity(n));
    maps
}

/// z_{k+1} solved from (C1) for the cumulant family with z_1 = ... = z_k.
pub fn projection_family_z_last(k: usize, z1: &Rat) -> Rat {
    // d k z1 + d (k - 1) z_last = d (k - 1)
    Rat::one() - rat_int(k as i64) * z1 / rat_int((k - 1) as i64)
}

/// Closed-form feasibility verdict for the cumulant family.
///
/// When `z_last` is absent it is solved from (C1). The reduction
/// dim V <= z1 k d + z_last dim V collapses, given (C1), to
/// dim V <= d (k - 1), which holds for every subspace, so (C1) plus
/// in-range exponents yields a proved, complete verdict.
pub fn check_projection_family(
    k: usize,
    d: usize,
    z1: &Rat,
    z_last: Option<&Rat>,
) -> Result<FeasibilityVerdict, HyblError> {
    if k < 3 {
        return Err(HyblError::OrderTooSmall(k));
    }
    if z1 < &Rat::zero() || z1 > &Rat::one() {
        return Err(HyblError::ExponentRange {
            index: 0,
            value: format_rat(z1),
        });
    }
    let solved = projection_family_z_last(k, z1);
    let z_last = z_last.cloned().unwrap_or(solved);
    let in_range = z_last >= Rat::zero() && z_last <= Rat::one();
    let c1 = {
        let lhs = rat_int((d * k) as i64) * z1 + rat_int((d * (k - 1)) as i64) * &z_last;
        lhs == rat_int((d * (k - 1)) as i64)
    };
    let (c2, c3, complete) = if c1 && in_range {
        (TriState::Proved, TriState::Proved, true)
    } else {
        (TriState::Undecided, TriState::Undecided, false)
    };
    Ok(FeasibilityVerdict {
        c1_holds: c1 && in_range,
        c2,
        c3,
        complete,
        tested_candidates: 0,
        witness: None,
    })
}

/// Integrability index of the order-k spectral density under the p_1 = 2
/// choice: p_{k+1} = 2 (k - 1) / (k - 2), exact.
pub fn admissible_pk(k: usize) -> Result<Rat, HyblError> {
    if k < 3 {
        return Err(HyblError::OrderTooSmall(k));
    }
    Ok(rat(2 * (k as i64 - 1), k as i64 - 2))
}

/// Cumulant decay exponent nu = k d (1/p_1 - 1/2); positive iff p_1 < 2.
pub fn decay_exponent(k: usize, d: usize, p1: &Rat) -> Rat {
    assert!(p1 >= &Rat::one());
    rat_int((k * d) as i64) * (p1.recip() - rat(1, 2))
}

/// Whether (k, p1) admits the cumulant-family exponent choice: the solved
/// z_{k+1} must land in [0, 1].
pub fn projection_family_admissible(k: usize, p1: &Rat) -> bool {
    if k < 3 || p1 < &Rat::one() {
        return false;
    }
    let z_last = projection_family_z_last(k, &p1.recip());
    z_last >= Rat::zero() && z_last <= Rat::one()
}

/// Parse the plain-text instance interchange format:
///
/// ```text
/// ambient_dim: 2
/// map:
/// 1 0
/// 0 1
/// map:
/// 1 1
/// exponents: 1/2 1/2
/// ```
pub fn parse_instance(text: &str) -> Result<HyblInstance, HyblError> {
    let mut ambient = None;
    let mut maps: Vec<Vec<Vec<Rat>>> = Vec::new();
    let mut exponents: Vec<Rat> = Vec::new();
    let mut in_map = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            in_map = false;
            continue;
        }
        if let Some(rest) = line.strip_prefix("ambient_dim:") {
            ambient = Some(rest.trim().parse::<usize>().map_err(|_| {
                HyblError::Parse(format!("line {}: bad ambient_dim", lineno + 1))
            })?);
            in_map = false;
        } else if line == "map:" {
            maps.push(Vec::new());
            in_map = true;
        } else if let Some(rest) = line.strip_prefix("exponents:") {
            for token in rest.split_whitespace() {
                exponents.push(parse_rat(token).ok_or_else(|| {
                    HyblError::Parse(format!("line {}: bad rational '{token}'", lineno + 1))
                })?);
            }
            in_map = false;
        } else if in_map {
            let row = line
                .split_whitespace()
                .map(|token| {
                    parse_rat(token).ok_or_else(|| {
                        HyblError::Parse(format!("line {}: bad rational '{token}'", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            maps.last_mut().unwrap().push(row);
        } else {
            return Err(HyblError::Parse(format!(
                "line {}: unexpected content '{line}'",
                lineno + 1
            )));
        }
    }
    let ambient = ambient.ok_or_else(|| HyblError::Parse("missing ambient_dim".into()))?;
    let maps = maps.into_iter().map(RatMatrix::from_rows).collect();
    HyblInstance::new(ambient, maps, exponents)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn projection_instance(k: usize, d: usize) -> HyblInstance {
        let z1 = rat(1, 2);
        let z_last = projection_family_z_last(k, &z1);
        let mut z = vec![z1; k];
        z.push(z_last);
        HyblInstance::new(d * (k - 1), projection_family_maps(k, d), z).unwrap()
    }

    #[test]
    fn c1_projection_instance() {
        // k = 3, d = 1: z = (1/2, 1/2, 1/2, 1/4), 3/2 + 2/4 = 2
        let inst = projection_instance(3, 1);
        assert_eq!(inst.exponents[3], rat(1, 4));
        assert!(inst.check_c1());

        let mut bad = inst.clone();
        bad.exponents[3] = rat(1, 2);
        assert!(!bad.check_c1());
    }

    #[test]
    fn c1_identity_degenerate() {
        let inst = HyblInstance::new(2, vec![RatMatrix::identity(2)], vec![rat_int(1)]).unwrap();
        assert!(inst.check_c1());
        let v = inst.check_c2(None);
        assert_eq!(v.c2, TriState::Proved);
        assert!(v.complete);
    }

    #[test]
    fn c2_projection_instance_proved_complete() {
        for (k, d) in [(3, 1), (4, 1), (3, 2)] {
            let inst = projection_instance(k, d);
            let v = inst.check_c2(None);
            assert!(v.c1_holds);
            assert_eq!(v.c2, TriState::Proved, "k={k} d={d}");
            assert_eq!(v.c3, TriState::Proved);
            assert!(v.complete);
        }
    }

    #[test]
    fn c2_duplicated_projection_refuted_with_witness() {
        // two copies of the same projection (x, y) -> x on R^2 cannot be
        // feasible: the shared kernel line maps to 0 under both
        let proj = RatMatrix::from_i64_rows(&[&[1, 0]]);
        let inst = HyblInstance::new(2, vec![proj.clone(), proj], vec![rat(1, 2), rat(1, 2)]);
        // kernels coincide, so the instance is rejected at validation
        assert!(matches!(inst, Err(HyblError::KernelsOverlap { dim: 1 })));

        // relax with a third map so validation passes, keep the duplicated
        // projections underweighted: the kernel line still refutes C2
        let proj = RatMatrix::from_i64_rows(&[&[1, 0]]);
        let other = RatMatrix::from_i64_rows(&[&[0, 1]]);
        let inst = HyblInstance::new(
            2,
            vec![proj.clone(), proj, other],
            vec![rat(1, 2), rat(1, 2), rat_int(0)],
        )
        .unwrap();
        let v = inst.check_c2(None);
        assert_eq!(v.c2, TriState::Refuted);
        let w = v.witness.unwrap();
        // witness is the shared kernel span{e_2}
        assert_eq!(w, vec![vec!["0".to_string(), "1".to_string()]]);
    }

    #[test]
    fn check_projection_family_examples() {
        let v = check_projection_family(3, 1, &rat(1, 2), None).unwrap();
        assert!(v.c1_holds && v.complete);
        assert_eq!(v.c2, TriState::Proved);

        // k = 4, d = 2, z1 = 1/2: z_last = 1/3
        assert_eq!(projection_family_z_last(4, &rat(1, 2)), rat(1, 3));
        let v = check_projection_family(4, 2, &rat(1, 2), None).unwrap();
        assert!(v.c1_holds);

        // z_last violating C1
        let v = check_projection_family(3, 1, &rat(1, 2), Some(&rat(1, 2))).unwrap();
        assert!(!v.c1_holds);
        assert_eq!(v.c2, TriState::Undecided);
    }

    #[test]
    fn admissible_pk_sequence() {
        assert_eq!(admissible_pk(3).unwrap(), rat_int(4));
        assert_eq!(admissible_pk(4).unwrap(), rat_int(3));
        assert_eq!(admissible_pk(10).unwrap(), rat(9, 4));
        assert!(admissible_pk(2).is_err());
        // strictly decreasing toward 2
        for k in 3..12 {
            assert!(admissible_pk(k).unwrap() > admissible_pk(k + 1).unwrap());
            assert!(admissible_pk(k).unwrap() > rat_int(2));
        }
    }

    #[test]
    fn pk_consistent_with_c1_solution() {
        for k in 3..=12 {
            let z_last = projection_family_z_last(k, &rat(1, 2));
            assert_eq!(z_last, admissible_pk(k).unwrap().recip());
        }
    }

    #[test]
    fn decay_exponent_values() {
        assert_eq!(decay_exponent(3, 1, &rat_int(2)), rat_int(0));
        assert_eq!(decay_exponent(4, 1, &rat(4, 3)), rat_int(1));
        assert_eq!(decay_exponent(3, 2, &rat_int(3)), rat_int(-1));
    }

    #[test]
    fn instance_roundtrip_parse() {
        let text = "# cumulant instance k=3 d=1\nambient_dim: 2\nmap:\n1 0\nmap:\n0 1\nmap:\n1 1\nmap:\n1 0\n0 1\nexponents: 1/2 1/2 1/2 1/4\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.ambient_dim, 2);
        assert_eq!(inst.maps.len(), 4);
        assert!(inst.check_c1());
        let v = inst.check_c2(None);
        assert_eq!(v.c2, TriState::Proved);
    }

    #[test]
    fn subspace_algebra() {
        let e1 = RatMatrix::from_i64_rows(&[&[1, 0, 0]]);
        let e2 = RatMatrix::from_i64_rows(&[&[0, 1, 0]]);
        let plane = subspace_sum(&e1, &e2);
        assert_eq!(plane.rows, 2);
        let meet = subspace_intersection(&plane, &RatMatrix::from_i64_rows(&[&[1, 1, 0]]));
        assert_eq!(meet.rows, 1);
        let empty = subspace_intersection(&e1, &e2);
        assert_eq!(empty.rows, 0);
    }
}
