//! The associative pair semigroup `(X,G)(Y,H) = ((X∘H)⊕Y, G∘H)` and the
//! key exchange built on it.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::TropicalMatrix;
use crate::scalar::Entry;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "T: Entry")]
pub struct PairOne<T> {
    pub m: TropicalMatrix<T>,
    pub h: TropicalMatrix<T>,
}

impl<T: Entry> PairOne<T> {
    pub fn new(m: TropicalMatrix<T>, h: TropicalMatrix<T>) -> Result<Self> {
        if m.order() != h.order() {
            return Err(Error::DimensionMismatch {
                left: m.order(),
                right: h.order(),
            });
        }
        Ok(PairOne { m, h })
    }

    pub fn order(&self) -> usize {
        self.m.order()
    }

    /// `self · other = ((self.m ∘ other.h) ⊕ other.m, self.h ∘ other.h)`.
    pub fn op(&self, other: &Self) -> Result<Self> {
        Ok(PairOne {
            m: self.m.adjoint(&other.h)?.oplus(&other.m)?,
            h: self.h.adjoint(&other.h)?,
        })
    }

    /// `n`-th power by square-and-multiply, scanning bits from the top.
    ///
    /// The semigroup has no identity in general, so `n = 0` is rejected.
    pub fn pow(&self, n: &BigUint) -> Result<Self> {
        if n.is_zero() {
            return Err(Error::ZeroExponent);
        }
        let bits = n.bits();
        let mut acc = self.clone();
        for i in (0..bits - 1).rev() {
            acc = acc.op(&acc)?;
            if n.bit(i) {
                acc = acc.op(self)?;
            }
        }
        Ok(acc)
    }

    pub fn pow_u64(&self, n: u64) -> Result<Self> {
        self.pow(&BigUint::from(n))
    }
}

/// Session key from the other party's public share and one's own private
/// and public components: `(other_m ∘ own_h) ⊕ own_m`.
pub fn derive_key<T: Entry>(
    other_m: &TropicalMatrix<T>,
    own_h: &TropicalMatrix<T>,
    own_m: &TropicalMatrix<T>,
) -> Result<TropicalMatrix<T>> {
    other_m.adjoint(own_h)?.oplus(own_m)
}

/// Everything produced by one honest run of the exchange.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "T: Entry")]
pub struct ExchangeTranscript<T> {
    pub m: TropicalMatrix<T>,
    pub h: TropicalMatrix<T>,
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

impl<T: Entry> ExchangeTranscript<T> {
    pub fn keys_agree(&self) -> bool {
        self.key_alice == self.key_bob
    }
}

pub fn run_exchange<T: Entry>(
    m: &TropicalMatrix<T>,
    h: &TropicalMatrix<T>,
    a: &BigUint,
    b: &BigUint,
) -> Result<ExchangeTranscript<T>> {
    let base = PairOne::new(m.clone(), h.clone())?;
    let alice = base.pow(a)?;
    let bob = base.pow(b)?;
    let key_alice = derive_key(&bob.m, &alice.h, &alice.m)?;
    let key_bob = derive_key(&alice.m, &bob.h, &bob.m)?;
    Ok(ExchangeTranscript {
        m: m.clone(),
        h: h.clone(),
        a: a.clone(),
        b: b.clone(),
        m_a: alice.m,
        m_b: bob.m,
        h_a: alice.h,
        h_b: bob.h,
        key_alice,
        key_bob,
    })
}

/// Left fold `((p·p)·p)···`, the naive reference for [`PairOne::pow`].
pub fn fold_power<T: Entry>(p: &PairOne<T>, n: u64) -> Result<PairOne<T>> {
    if n == 0 {
        return Err(Error::ZeroExponent);
    }
    let mut acc = p.clone();
    for _ in 1..n {
        acc = acc.op(p)?;
    }
    Ok(acc)
}
