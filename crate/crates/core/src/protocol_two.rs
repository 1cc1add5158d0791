//! The second pair operation `(M,G)(S,H) = ((H⊗Mᵀ)⊕(Mᵀ⊗H)⊕S, G⊗H)`.
//!
//! This operation is not associative, so "the `n`-th power of a pair" has
//! no single meaning: different bracketings of the same product disagree.
//! Everything here takes the bracketing as an explicit argument and makes
//! no promise that the two parties of an exchange end up with the same key.

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::TropicalMatrix;
use crate::scalar::{Entry, TropicalScalar};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "T: Entry")]
pub struct PairTwo<T> {
    pub m: TropicalMatrix<T>,
    pub h: TropicalMatrix<T>,
}

impl<T: Entry> PairTwo<T> {
    pub fn new(m: TropicalMatrix<T>, h: TropicalMatrix<T>) -> Result<Self> {
        if m.order() != h.order() {
            return Err(Error::DimensionMismatch {
                left: m.order(),
                right: h.order(),
            });
        }
        Ok(PairTwo { m, h })
    }

    pub fn order(&self) -> usize {
        self.m.order()
    }

    /// With `self = (M, G)` and `other = (S, H)`:
    /// `((H ⊗ Mᵀ) ⊕ (Mᵀ ⊗ H) ⊕ S, G ⊗ H)`.
    pub fn op(&self, other: &Self) -> Result<Self> {
        let mt = self.m.transpose();
        let m = other
            .h
            .otimes(&mt)?
            .oplus(&mt.otimes(&other.h)?)?
            .oplus(&other.m)?;
        Ok(PairTwo {
            m,
            h: self.h.otimes(&other.h)?,
        })
    }
}

/// A triple on which the two bracketings disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "T: Entry")]
pub struct AssocWitness<T> {
    pub p: PairTwo<T>,
    pub q: PairTwo<T>,
    pub r: PairTwo<T>,
    /// `(p·q)·r`
    pub left: PairTwo<T>,
    /// `p·(q·r)`
    pub right: PairTwo<T>,
}

/// Evaluates both bracketings of `p·q·r`; returns a witness when they differ.
pub fn check_associativity<T: Entry>(
    p: &PairTwo<T>,
    q: &PairTwo<T>,
    r: &PairTwo<T>,
) -> Result<Option<AssocWitness<T>>> {
    let left = p.op(q)?.op(r)?;
    let right = p.op(&q.op(r)?)?;
    if left == right {
        return Ok(None);
    }
    Ok(Some(AssocWitness {
        p: p.clone(),
        q: q.clone(),
        r: r.clone(),
        left,
        right,
    }))
}

/// `((p·p)·p)···` with `n` factors.
pub fn fold_power_left<T: Entry>(p: &PairTwo<T>, n: u64) -> Result<PairTwo<T>> {
    if n == 0 {
        return Err(Error::ZeroExponent);
    }
    let mut acc = p.clone();
    for _ in 1..n {
        acc = acc.op(p)?;
    }
    Ok(acc)
}

/// `p·(p·(p···))` with `n` factors.
pub fn fold_power_right<T: Entry>(p: &PairTwo<T>, n: u64) -> Result<PairTwo<T>> {
    if n == 0 {
        return Err(Error::ZeroExponent);
    }
    let mut acc = p.clone();
    for _ in 1..n {
        acc = p.op(&acc)?;
    }
    Ok(acc)
}

/// The `(A, B)` pair whose cube exposes the non-associativity.
pub fn counterexample_pair<T: Entry>() -> PairTwo<T> {
    PairTwo {
        m: TropicalMatrix::from_i64_rows(&[[0, -1], [0, 0]]).expect("square"),
        h: TropicalMatrix::from_i64_rows(&[[0, -2], [0, 0]]).expect("square"),
    }
}

/// Draws random all-finite triples until one violates associativity.
pub fn sample_violation<T: Entry, R: Rng>(
    rng: &mut R,
    order: usize,
    entry_range: std::ops::RangeInclusive<i64>,
    max_samples: usize,
) -> Result<Option<(usize, AssocWitness<T>)>> {
    let random_pair = |rng: &mut R| PairTwo {
        m: TropicalMatrix::from_fn(order, |_, _| {
            TropicalScalar::from_i64(rng.gen_range(entry_range.clone()))
        }),
        h: TropicalMatrix::from_fn(order, |_, _| {
            TropicalScalar::from_i64(rng.gen_range(entry_range.clone()))
        }),
    };
    for sample in 1..=max_samples {
        let p = random_pair(rng);
        let q = random_pair(rng);
        let r = random_pair(rng);
        if let Some(w) = check_associativity(&p, &q, &r)? {
            return Ok(Some((sample, w)));
        }
    }
    Ok(None)
}

/// Bracketing used to "exponentiate" under the non-associative operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldOrder {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "T: Entry")]
pub struct TranscriptTwo<T> {
    pub fold: FoldOrder,
    #[serde(with = "crate::decimal")]
    pub a: BigUint,
    #[serde(with = "crate::decimal")]
    pub b: BigUint,
    pub m_a: TropicalMatrix<T>,
    pub m_b: TropicalMatrix<T>,
    pub h_a: TropicalMatrix<T>,
    pub h_b: TropicalMatrix<T>,
    pub key_alice: TropicalMatrix<T>,
    pub key_bob: TropicalMatrix<T>,
}

impl<T: Entry> TranscriptTwo<T> {
    pub fn keys_agree(&self) -> bool {
        self.key_alice == self.key_bob
    }
}

/// `(other_m ⊗ own_h) ⊕ own_m`.
pub fn derive_key<T: Entry>(
    other_m: &TropicalMatrix<T>,
    own_h: &TropicalMatrix<T>,
    own_m: &TropicalMatrix<T>,
) -> Result<TropicalMatrix<T>> {
    other_m.otimes(own_h)?.oplus(own_m)
}

/// Runs the second exchange with powers taken by the given fold.
///
/// The keys are returned as computed; they generally differ.
pub fn run_exchange<T: Entry>(
    m: &TropicalMatrix<T>,
    h: &TropicalMatrix<T>,
    a: u64,
    b: u64,
    fold: FoldOrder,
) -> Result<TranscriptTwo<T>> {
    let base = PairTwo::new(m.clone(), h.clone())?;
    let power = |n| match fold {
        FoldOrder::Left => fold_power_left(&base, n),
        FoldOrder::Right => fold_power_right(&base, n),
    };
    let alice = power(a)?;
    let bob = power(b)?;
    Ok(TranscriptTwo {
        fold,
        a: a.into(),
        b: b.into(),
        key_alice: derive_key(&bob.m, &alice.h, &alice.m)?,
        key_bob: derive_key(&alice.m, &bob.h, &bob.m)?,
        m_a: alice.m,
        m_b: bob.m,
        h_a: alice.h,
        h_b: bob.h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = TropicalMatrix<i64>;

    fn pair(m: [[i64; 2]; 2], h: [[i64; 2]; 2]) -> PairTwo<i64> {
        PairTwo::new(M::from_i64_rows(&m).unwrap(), M::from_i64_rows(&h).unwrap()).unwrap()
    }

    #[test]
    fn square_of_counterexample() {
        let ab = counterexample_pair::<i64>();
        assert_eq!(
            ab.op(&ab).unwrap(),
            pair([[-3, -2], [-1, -3]], [[-2, -2], [0, -2]])
        );
    }

    #[test]
    fn two_bracketings_of_the_cube() {
        let ab = counterexample_pair::<i64>();
        let sq = ab.op(&ab).unwrap();
        let right = ab.op(&sq).unwrap();
        let left = sq.op(&ab).unwrap();
        assert_eq!(right, pair([[-3, -2], [-3, -3]], [[-2, -4], [-2, -2]]));
        assert_eq!(left, pair([[-4, -5], [-3, -4]], [[-2, -4], [-2, -2]]));
        assert_ne!(left.m, right.m);
        assert_eq!(left.h, right.h);
    }

    #[test]
    fn witness_for_counterexample() {
        let ab = counterexample_pair::<i64>();
        let w = check_associativity(&ab, &ab, &ab).unwrap().expect("not associative");
        assert_eq!(w.left, fold_power_left(&ab, 3).unwrap());
        assert_eq!(w.right, fold_power_right(&ab, 3).unwrap());
        assert_eq!(w.left.m, M::from_i64_rows(&[[-4, -5], [-3, -4]]).unwrap());
        assert_eq!(w.right.m, M::from_i64_rows(&[[-3, -2], [-3, -3]]).unwrap());
    }

    #[test]
    fn zero_pairs_checked_both_ways() {
        let z = PairTwo::new(M::zeros(2), M::zeros(2)).unwrap();
        let left = z.op(&z).unwrap().op(&z).unwrap();
        let right = z.op(&z.op(&z).unwrap()).unwrap();
        let verdict = check_associativity(&z, &z, &z).unwrap();
        assert_eq!(verdict.is_none(), left == right);
    }

    #[test]
    fn folds_agree_up_to_two_factors() {
        let ab = counterexample_pair::<i64>();
        assert_eq!(fold_power_left(&ab, 1).unwrap(), ab);
        assert_eq!(fold_power_right(&ab, 1).unwrap(), ab);
        assert_eq!(fold_power_left(&ab, 2).unwrap(), fold_power_right(&ab, 2).unwrap());
        assert_ne!(fold_power_left(&ab, 3).unwrap(), fold_power_right(&ab, 3).unwrap());
        assert_ne!(fold_power_left(&ab, 4).unwrap(), fold_power_right(&ab, 4).unwrap());
        assert_eq!(fold_power_left(&ab, 0), Err(Error::ZeroExponent));
        assert_eq!(fold_power_right(&ab, 0), Err(Error::ZeroExponent));
    }

    #[test]
    fn random_sampling_finds_a_violation() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let found = sample_violation::<i64, _>(&mut rng, 2, -3..=3, 1000).unwrap();
        let (_, w) = found.expect("violation within 1000 samples");
        assert_ne!(w.left, w.right);
    }

    #[test]
    fn exchange_reports_keys_without_assuming_agreement() {
        let ab = counterexample_pair::<i64>();
        for fold in [FoldOrder::Left, FoldOrder::Right] {
            let t = run_exchange(&ab.m, &ab.h, 3, 5, fold).unwrap();
            assert_eq!(t.m_a, match fold {
                FoldOrder::Left => fold_power_left(&ab, 3).unwrap().m,
                FoldOrder::Right => fold_power_right(&ab, 3).unwrap().m,
            });
            let v = serde_json::to_value(&t).unwrap();
            assert_eq!(v["a"], "3");
        }
    }

    #[test]
    fn witness_serializes_all_five_pairs() {
        let ab = counterexample_pair::<i64>();
        let w = check_associativity(&ab, &ab, &ab).unwrap().unwrap();
        let v = serde_json::to_value(&w).unwrap();
        for key in ["p", "q", "r", "left", "right"] {
            assert!(v[key]["m"]["entries"].is_array(), "{key}");
            assert!(v[key]["h"]["entries"].is_array(), "{key}");
        }
    }
}
