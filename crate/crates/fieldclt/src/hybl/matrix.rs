//! Dense matrices over exact rationals with the elimination primitives
//! the feasibility checker needs: reduced row echelon form, rank,
//! nullspace, and canonical row-space bases.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(num: i64) -> Rat {
    BigRational::from(BigInt::from(num))
}

/// Parse "p/q" or "p" into an exact rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(BigRational::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(BigRational::from(n))
    }
}

pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMatrix::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        RatMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&x| rat_int(x)).collect())
                .collect(),
        )
    }

    pub fn at(&self, r: usize, c: usize) -> &Rat {
        &self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Rat {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Rat] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn stack(top: &RatMatrix, bottom: &RatMatrix) -> Self {
        assert_eq!(top.cols, bottom.cols);
        let mut data = top.data.clone();
        data.extend_from_slice(&bottom.data);
        RatMatrix {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        }
    }

    /// self (r x m) times other (m x c).
    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = RatMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = a * other.at(k, j);
                    *out.at_mut(i, j) += add;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> RatMatrix {
        let mut out = RatMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        out
    }

    /// In-place Gauss-Jordan; returns pivot column indices.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            // pick the largest-magnitude pivot for mild coefficient control
            let pivot_row = (row..self.rows)
                .filter(|&r| !self.at(r, col).is_zero())
                .max_by_key(|&r| self.at(r, col).abs());
            let Some(p) = pivot_row else { continue };
            self.swap_rows(row, p);
            let inv = self.at(row, col).recip();
            for j in col..self.cols {
                let v = self.at(row, j) * &inv;
                *self.at_mut(row, j) = v;
            }
            for r in 0..self.rows {
                if r != row && !self.at(r, col).is_zero() {
                    let factor = self.at(r, col).clone();
                    for j in col..self.cols {
                        let sub = &factor * self.at(row, j);
                        *self.at_mut(r, j) -= sub;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Canonical basis of the row space: nonzero rows of the RREF.
    pub fn row_space_basis(&self) -> RatMatrix {
        let mut m = self.clone();
        let pivots = m.rref();
        let rows: Vec<Vec<Rat>> = (0..pivots.len()).map(|r| m.row(r).to_vec()).collect();
        if rows.is_empty() {
            RatMatrix::zero(0, self.cols)
        } else {
            RatMatrix::from_rows(rows)
        }
    }

    /// Basis (as rows) of { x : self * x = 0 }.
    pub fn nullspace(&self) -> RatMatrix {
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivot_set.contains(c)).collect();
        let mut basis = Vec::new();
        for &fc in &free {
            let mut v = vec![Rat::zero(); self.cols];
            v[fc] = Rat::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m.at(r, fc).clone();
            }
            basis.push(v);
        }
        if basis.is_empty() {
            RatMatrix::zero(0, self.cols)
        } else {
            RatMatrix::from_rows(basis)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_rref() {
        let m = RatMatrix::from_i64_rows(&[&[1, 2, 3], &[2, 4, 6], &[0, 1, 1]]);
        assert_eq!(m.rank(), 2);
        assert_eq!(RatMatrix::identity(4).rank(), 4);
    }

    #[test]
    fn nullspace_orthogonality() {
        let m = RatMatrix::from_i64_rows(&[&[1, 1, 0], &[0, 1, 1]]);
        let ns = m.nullspace();
        assert_eq!(ns.rows, 1);
        let prod = m.mul(&ns.transpose());
        for i in 0..prod.rows {
            for j in 0..prod.cols {
                assert!(prod.at(i, j).is_zero());
            }
        }
    }

    #[test]
    fn row_space_canonical_dedup() {
        let a = RatMatrix::from_i64_rows(&[&[2, 4], &[1, 3]]);
        let b = RatMatrix::from_i64_rows(&[&[1, 0], &[0, 1]]);
        assert_eq!(a.row_space_basis(), b.row_space_basis());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rat("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rat("-2").unwrap(), rat_int(-2));
        assert!(parse_rat("1/0").is_none());
        assert_eq!(format_rat(&rat(10, 4)), "5/2");
    }
}
