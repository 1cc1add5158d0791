//! Square min-plus matrices and classical difference matrices.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{Entry, TropicalScalar};

/// Square matrix of tropical scalars, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TropicalMatrix<T> {
    order: usize,
    entries: Vec<TropicalScalar<T>>,
}

impl<T: Entry> TropicalMatrix<T> {
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> TropicalScalar<T>) -> Self {
        assert!(order > 0, "matrix order must be positive");
        let mut entries = Vec::with_capacity(order * order);
        for i in 0..order {
            for j in 0..order {
                entries.push(f(i, j));
            }
        }
        TropicalMatrix { order, entries }
    }

    pub fn from_rows(rows: Vec<Vec<TropicalScalar<T>>>) -> Result<Self> {
        let order = rows.len();
        if order == 0 || rows.iter().any(|r| r.len() != order) {
            return Err(Error::NotSquare {
                rows: order,
                detail: format!("{:?}", rows.iter().map(Vec::len).collect::<Vec<_>>()),
            });
        }
        Ok(TropicalMatrix {
            order,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    /// Builds an all-finite matrix from `i64` rows, e.g. `[[0, -1], [0, 0]]`.
    pub fn from_i64_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| TropicalScalar::from_i64(v)).collect())
                .collect(),
        )
    }

    /// Multiplicative identity: `0` on the diagonal, `∞` elsewhere.
    pub fn identity(order: usize) -> Self {
        Self::from_fn(order, |i, j| {
            if i == j {
                TropicalScalar::zero()
            } else {
                TropicalScalar::Infinity
            }
        })
    }

    /// Additive identity: every entry `∞`.
    pub fn infinity(order: usize) -> Self {
        Self::from_fn(order, |_, _| TropicalScalar::Infinity)
    }

    pub fn zeros(order: usize) -> Self {
        Self::from_fn(order, |_, _| TropicalScalar::zero())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> &TropicalScalar<T> {
        &self.entries[row * self.order + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[TropicalScalar<T>]> {
        self.entries.chunks(self.order)
    }

    pub fn entries(&self) -> &[TropicalScalar<T>] {
        &self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| !e.is_infinite())
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch {
                left: self.order,
                right: other.order,
            });
        }
        Ok(())
    }

    /// Entrywise minimum.
    pub fn oplus(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(TropicalMatrix {
            order: self.order,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.oplus(b))
                .collect(),
        })
    }

    /// Min-plus product.
    pub fn otimes(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let n = self.order;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            for j in 0..n {
                let mut acc = TropicalScalar::Infinity;
                for (k, left) in row.iter().enumerate() {
                    let (TropicalScalar::Finite(a), TropicalScalar::Finite(b)) =
                        (left, &other.entries[k * n + j])
                    else {
                        continue;
                    };
                    let sum = a.checked_add(b).ok_or(Error::Overflow)?;
                    match &acc {
                        TropicalScalar::Finite(best) if *best <= sum => {}
                        _ => acc = TropicalScalar::Finite(sum),
                    }
                }
                entries.push(acc);
            }
        }
        Ok(TropicalMatrix { order: n, entries })
    }

    /// `X ∘ H = X ⊕ H ⊕ (X ⊗ H)`.
    pub fn adjoint(&self, h: &Self) -> Result<Self> {
        self.oplus(h)?.oplus(&self.otimes(h)?)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.order, |i, j| self.get(j, i).clone())
    }

    /// Classical entrywise difference `self − other`; both operands must be finite.
    pub fn sub_classical(&self, other: &Self) -> Result<DifferenceMatrix<T>> {
        self.check_order(other)?;
        let n = self.order;
        let mut entries = Vec::with_capacity(n * n);
        for (idx, (a, b)) in self.entries.iter().zip(&other.entries).enumerate() {
            let (Some(a), Some(b)) = (a.finite(), b.finite()) else {
                return Err(Error::InfiniteEntry {
                    row: idx / n,
                    col: idx % n,
                });
            };
            entries.push(a.checked_sub(b).ok_or(Error::Overflow)?);
        }
        Ok(DifferenceMatrix { order: n, entries })
    }

    /// Classical entrywise `self + delta`, used to rebuild a sequence term
    /// from its differences.
    pub fn add_classical(&self, delta: &DifferenceMatrix<T>) -> Result<Self> {
        if self.order != delta.order {
            return Err(Error::DimensionMismatch {
                left: self.order,
                right: delta.order,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&delta.entries)
            .map(|(a, d)| match a {
                TropicalScalar::Finite(v) => v
                    .checked_add(d)
                    .map(TropicalScalar::Finite)
                    .ok_or(Error::Overflow),
                TropicalScalar::Infinity => Ok(TropicalScalar::Infinity),
            })
            .collect::<Result<_>>()?;
        Ok(TropicalMatrix {
            order: self.order,
            entries,
        })
    }
}

impl<T: fmt::Debug> fmt::Debug for TropicalMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.chunks(self.order)).finish()
    }
}

impl<T: Entry> fmt::Display for TropicalMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.entries.iter().map(ToString::to_string).collect();
        let width = cells.iter().map(String::len).max().unwrap_or(1);
        for (i, row) in cells.chunks(self.order).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            f.write_str("[")?;
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{c:>width$}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr<E> {
    order: usize,
    entries: Vec<Vec<E>>,
}

impl<T: Entry> Serialize for TropicalMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            order: self.order,
            entries: self.rows().map(<[_]>::to_vec).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Entry> Deserialize<'de> for TropicalMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::<TropicalScalar<T>>::deserialize(deserializer)?;
        let declared = repr.order;
        let m = TropicalMatrix::from_rows(repr.entries).map_err(serde::de::Error::custom)?;
        if m.order != declared {
            return Err(serde::de::Error::custom(format!(
                "declared order {declared} but entries form a {0}x{0} matrix",
                m.order
            )));
        }
        Ok(m)
    }
}

/// Classical entrywise differences of two finite tropical matrices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DifferenceMatrix<T> {
    order: usize,
    entries: Vec<T>,
}

impl<T: Entry> DifferenceMatrix<T> {
    pub fn zeros(order: usize) -> Self {
        DifferenceMatrix {
            order,
            entries: vec![T::zero(); order * order],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.entries[row * self.order + col]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(T::is_zero)
    }

    /// Classical entrywise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch {
                left: self.order,
                right: other.order,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.checked_add(b).ok_or(Error::Overflow))
            .collect::<Result<_>>()?;
        Ok(DifferenceMatrix {
            order: self.order,
            entries,
        })
    }
}

impl<T: fmt::Debug> fmt::Debug for DifferenceMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.chunks(self.order)).finish()
    }
}

impl<T: Entry> Serialize for DifferenceMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            order: self.order,
            entries: self
                .entries
                .chunks(self.order)
                .map(|r| r.iter().cloned().map(TropicalScalar::Finite).collect())
                .collect::<Vec<Vec<_>>>(),
        }
        .serialize(serializer)
    }
}
