//! Recovery of the private exponent from the public matrices `M`, `H` and
//! `M_a` of the first exchange, and from it the shared key.
//!
//! The public sequence `M_1 = M`, `M_n = (M_{n-1} ∘ H) ⊕ M` is eventually
//! linear-periodic: past a defect `d` the classical differences
//! `D_n = M_{n+1} − M_n` repeat with some period `ρ`. Once `d` and `ρ` are
//! known, `M_a − M_{d+1}` splits into `x` whole periods plus a partial
//! period of `k` terms, which pins down `a = d + xρ + k`.
//!
//! A repeated difference can also show up before the defect. Such false
//! candidates are filtered by a short re-check window, then by the
//! exponent solve, and finally by recomputing `M_a` from the candidate
//! exponent. Any rejection resumes the period search where it stopped.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DifferenceMatrix, TropicalMatrix};
use crate::protocol_one::{derive_key, PairOne};
use crate::scalar::Entry;

/// Number of further periods re-checked before a candidate `(d, ρ)` is handed
/// to the exponent solve.
pub const VALIDATION_WINDOW: usize = 2;

/// Default bound on enumerated terms: ten times the largest defect seen in
/// the published experiments (2151), plus room for the period.
pub const DEFAULT_MAX_STEPS: usize = 10 * 2151 + 64;

/// `[M_1, …, M_limit]`.
pub fn enumerate_m_sequence<T: Entry>(
    m: &TropicalMatrix<T>,
    h: &TropicalMatrix<T>,
    limit: usize,
) -> Result<Vec<TropicalMatrix<T>>> {
    let mut seq = Vec::with_capacity(limit);
    seq.push(m.clone());
    while seq.len() < limit {
        let next = next_term(seq.last().expect("non-empty"), m, h)?;
        seq.push(next);
    }
    Ok(seq)
}

fn next_term<T: Entry>(
    prev: &TropicalMatrix<T>,
    m: &TropicalMatrix<T>,
    h: &TropicalMatrix<T>,
) -> Result<TropicalMatrix<T>> {
    prev.adjoint(h)?.oplus(m)
}

/// A candidate defect and period together with the enumerated prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodInfo<T> {
    /// Number of leading differences before the periodic part.
    pub d: usize,
    pub rho: usize,
    /// `D_1 … D_{d+ρ}`.
    pub diffs: Vec<DifferenceMatrix<T>>,
    /// `M_1 … M_{d+ρ+1}`.
    pub m_snapshots: Vec<TropicalMatrix<T>>,
    /// `Σ_{i=d+1}^{d+ρ} D_i`.
    pub period_sum: DifferenceMatrix<T>,
}

impl<T: Entry> PeriodInfo<T> {
    /// `D_n` (1-based).
    pub fn diff(&self, n: usize) -> &DifferenceMatrix<T> {
        &self.diffs[n - 1]
    }

    /// `M_n` (1-based).
    pub fn snapshot(&self, n: usize) -> &TropicalMatrix<T> {
        &self.m_snapshots[n - 1]
    }

    /// `Σ_{i=d+1}^{d+j} D_i`, the first `j` differences of the periodic part.
    pub fn partial_sum(&self, j: usize) -> Result<DifferenceMatrix<T>> {
        let order = self.period_sum.order();
        self.diffs[self.d..self.d + j]
            .iter()
            .try_fold(DifferenceMatrix::zeros(order), |acc, d| acc.add(d))
    }

    /// The common per-period drift, when every entry of the period sum is equal.
    pub fn linear_factor(&self) -> Option<T> {
        let (first, rest) = self.period_sum.entries().split_first()?;
        rest.iter().all(|e| e == first).then(|| first.clone())
    }

    /// Checks `M_n = M_1 + Σ_{i<n} D_i` for every stored term.
    pub fn reconstruction_holds(&self) -> Result<bool> {
        let mut acc = self.m_snapshots[0].clone();
        for (n, d) in self.diffs.iter().enumerate() {
            acc = acc.add_classical(d)?;
            if acc != self.m_snapshots[n + 1] {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Incremental scan of the difference sequence, yielding validated
/// `(d, ρ)` candidates in order of discovery.
///
/// Candidates are ordered by the index at which the repeat is seen, and
/// for one index by increasing period.
pub struct PeriodSearch<T> {
    m: TropicalMatrix<T>,
    h: TropicalMatrix<T>,
    max_steps: usize,
    seq: Vec<TropicalMatrix<T>>,
    diffs: Vec<DifferenceMatrix<T>>,
    first_seen: HashMap<DifferenceMatrix<T>, Vec<usize>>,
    scanned: usize,
    pending: Vec<usize>,
    rejected_by_window: usize,
}

impl<T: Entry> PeriodSearch<T> {
    pub fn new(m: &TropicalMatrix<T>, h: &TropicalMatrix<T>, max_steps: usize) -> Result<Self> {
        if m.order() != h.order() {
            return Err(Error::DimensionMismatch {
                left: m.order(),
                right: h.order(),
            });
        }
        Ok(PeriodSearch {
            m: m.clone(),
            h: h.clone(),
            max_steps: max_steps.max(1),
            seq: vec![m.clone()],
            diffs: Vec::new(),
            first_seen: HashMap::new(),
            scanned: 0,
            pending: Vec::new(),
            rejected_by_window: 0,
        })
    }

    /// Terms of `M_n` enumerated so far.
    pub fn enumerated(&self) -> usize {
        self.seq.len()
    }

    /// Candidates discarded by the re-check window so far.
    pub fn rejected_by_window(&self) -> usize {
        self.rejected_by_window
    }

    pub fn sequence(&self) -> &[TropicalMatrix<T>] {
        &self.seq
    }

    fn ensure_diffs(&mut self, count: usize) -> Result<()> {
        while self.diffs.len() < count {
            if self.seq.len() >= self.max_steps {
                return Err(Error::PeriodNotFound {
                    steps: self.max_steps,
                });
            }
            let last = self.seq.last().expect("non-empty");
            let next = next_term(last, &self.m, &self.h)?;
            self.diffs.push(next.sub_classical(last)?);
            self.seq.push(next);
        }
        Ok(())
    }

    fn window_holds(&mut self, d: usize, rho: usize) -> Result<bool> {
        self.ensure_diffs(d + (VALIDATION_WINDOW + 1) * rho)?;
        // D_{i+ρ} = D_i for i in (d, d + Vρ], 1-based.
        Ok((d + 1..=d + VALIDATION_WINDOW * rho).all(|i| self.diffs[i + rho - 1] == self.diffs[i - 1]))
    }

    fn period_sum(&self, d: usize, rho: usize) -> Result<DifferenceMatrix<T>> {
        self.diffs[d..d + rho]
            .iter()
            .try_fold(DifferenceMatrix::zeros(self.m.order()), |acc, x| acc.add(x))
    }

    fn info(&self, d: usize, rho: usize) -> Result<PeriodInfo<T>> {
        Ok(PeriodInfo {
            d,
            rho,
            diffs: self.diffs[..d + rho].to_vec(),
            m_snapshots: self.seq[..d + rho + 1].to_vec(),
            period_sum: self.period_sum(d, rho)?,
        })
    }

    pub fn next_candidate(&mut self) -> Result<PeriodInfo<T>> {
        let (d, rho) = self.next_period()?;
        self.info(d, rho)
    }

    /// Like [`next_candidate`](Self::next_candidate) but returns only `(d, ρ)`.
    pub fn next_period(&mut self) -> Result<(usize, usize)> {
        loop {
            while let Some(j) = self.pending.pop() {
                let (d, rho) = (j - 1, self.scanned - j);
                if self.window_holds(d, rho)? {
                    return Ok((d, rho));
                }
                self.rejected_by_window += 1;
            }
            let n = self.scanned + 1;
            self.ensure_diffs(n)?;
            self.scanned = n;
            let slot = self.first_seen.entry(self.diffs[n - 1].clone()).or_default();
            self.pending.clone_from(slot);
            slot.push(n);
        }
    }
}

/// Earliest validated `(d, ρ)`; with `resume_from`, the earliest one strictly
/// after that candidate.
pub fn find_period<T: Entry>(
    m: &TropicalMatrix<T>,
    h: &TropicalMatrix<T>,
    max_steps: usize,
    resume_from: Option<(usize, usize)>,
) -> Result<PeriodInfo<T>> {
    let mut search = PeriodSearch::new(m, h, max_steps)?;
    let after = resume_from.map(|(d, rho)| (d + 1 + rho, rho));
    loop {
        let info = search.next_candidate()?;
        let key = (info.d + 1 + info.rho, info.rho);
        if after.is_none_or(|a| key > a) {
            return Ok(info);
        }
    }
}

/// Re-enumerates the sequence and checks `D_{n+ρ} = D_n` for
/// `n ∈ (d, d + window·ρ]`. Independent of [`PeriodSearch`].
pub fn validate_period<T: Entry>(
    m: &TropicalMatrix<T>,
    h: &TropicalMatrix<T>,
    info: &PeriodInfo<T>,
    window: usize,
) -> Result<bool> {
    let (d, rho) = (info.d, info.rho);
    let seq = enumerate_m_sequence(m, h, d + (window + 1) * rho + 1)?;
    let diffs = seq
        .windows(2)
        .map(|w| w[1].sub_classical(&w[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok((d + 1..=d + window * rho).all(|n| diffs[n + rho - 1] == diffs[n - 1]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// `M_a` is one of the already enumerated terms.
    DirectLookup,
    /// Differences vanish past the defect, so `d + 1` stands in for `a`.
    Degenerate,
    /// `a = d + xρ + k` from the period decomposition.
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentSolution {
    pub a: BigUint,
    pub k: Option<usize>,
    pub x: Option<BigUint>,
    pub method: SolveMethod,
}

/// Solves for an exponent consistent with `m_a` under the candidate period.
///
/// `M_a` is first looked up among the stored terms `M_1 … M_{d+ρ+1}`.
/// Otherwise `a = d + xρ + k` with `k ∈ 1..=ρ` and `x ≥ 1`, where
/// `M_a − M_{d+1} = x·Σ_{i=d+1}^{d+ρ} D_i + Σ_{i=d+1}^{d+k−1} D_i`.
///
/// Returns `Ok(None)` when no `k ∈ 1..=ρ` admits one positive quotient `x`
/// shared by all entries, which means the candidate period is false.
pub fn solve_exponent<T: Entry>(
    info: &PeriodInfo<T>,
    m_a: &TropicalMatrix<T>,
) -> Result<Option<ExponentSolution>> {
    solve_candidate(
        &CandidateView {
            d: info.d,
            rho: info.rho,
            diffs: &info.diffs,
            snapshots: &info.m_snapshots,
            period_sum: &info.period_sum,
        },
        m_a,
    )
}

/// Borrowed form of [`PeriodInfo`], so rejected candidates cost no copies.
struct CandidateView<'a, T> {
    d: usize,
    rho: usize,
    diffs: &'a [DifferenceMatrix<T>],
    snapshots: &'a [TropicalMatrix<T>],
    period_sum: &'a DifferenceMatrix<T>,
}

fn solve_candidate<T: Entry>(
    info: &CandidateView<'_, T>,
    m_a: &TropicalMatrix<T>,
) -> Result<Option<ExponentSolution>> {
    let order = info.period_sum.order();
    if m_a.order() != order {
        return Err(Error::DimensionMismatch {
            left: order,
            right: m_a.order(),
        });
    }

    if let Some(j) = info.snapshots[..info.d + info.rho + 1].iter().position(|s| s == m_a) {
        let n = j + 1;
        let method = if n == info.d + 1 && info.period_sum.is_zero() {
            SolveMethod::Degenerate
        } else {
            SolveMethod::DirectLookup
        };
        return Ok(Some(ExponentSolution {
            a: BigUint::from(n),
            k: None,
            x: None,
            method,
        }));
    }
    if info.period_sum.is_zero() {
        // Constant past the defect, yet M_a is not M_{d+1}.
        return Ok(None);
    }

    // M_a − M_{d+1} sums the a − d − 1 = xρ + (k − 1) differences after the
    // defect: x whole periods, then the first k − 1 terms of one more.
    let y = m_a.sub_classical(&info.snapshots[info.d])?;
    let mut partial = DifferenceMatrix::zeros(order);
    for k in 1..=info.rho {
        if k > 1 {
            partial = partial.add(&info.diffs[info.d + k - 2])?;
        }
        if let Some(x) = common_quotient(&y, &partial, info.period_sum)? {
            let x = x.to_bigint().and_then(|v| v.to_biguint()).expect("positive quotient");
            let a = &x * info.rho + info.d + k;
            return Ok(Some(ExponentSolution {
                a,
                k: Some(k),
                x: Some(x),
                method: SolveMethod::Periodic,
            }));
        }
    }
    Ok(None)
}

/// The single `x ≥ 1` with `y − partial = x · period_sum` entrywise, if any.
/// Entries with a zero period sum must have a zero numerator.
fn common_quotient<T: Entry>(
    y: &DifferenceMatrix<T>,
    partial: &DifferenceMatrix<T>,
    period_sum: &DifferenceMatrix<T>,
) -> Result<Option<T>> {
    let mut x: Option<T> = None;
    for ((yv, pv), sv) in y.entries().iter().zip(partial.entries()).zip(period_sum.entries()) {
        let num = yv.checked_sub(pv).ok_or(Error::Overflow)?;
        if sv.is_zero() {
            if !num.is_zero() {
                return Ok(None);
            }
            continue;
        }
        if !num.is_multiple_of(sv) {
            return Ok(None);
        }
        let q = num.checked_div(sv).ok_or(Error::Overflow)?;
        match &x {
            Some(prev) if *prev != q => return Ok(None),
            Some(_) => {}
            None => x = Some(q),
        }
    }
    Ok(x.filter(|q| *q >= T::one()))
}

/// True iff the first component of `(M, H)^a` equals `m_a`.
pub fn verify_candidate<T: Entry>(
    m: &TropicalMatrix<T>,
    h: &TropicalMatrix<T>,
    m_a: &TropicalMatrix<T>,
    a: &BigUint,
) -> Result<bool> {
    let p = PairOne::new(m.clone(), h.clone())?;
    Ok(p.pow(a)?.m == *m_a)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub period_search_s: f64,
    pub solve_s: f64,
    pub verify_s: f64,
}

impl PhaseTimings {
    pub fn total_s(&self) -> f64 {
        self.period_search_s + self.solve_s + self.verify_s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    #[serde(with = "crate::decimal")]
    pub recovered_a: BigUint,
    pub k: Option<usize>,
    #[serde(with = "crate::decimal::option")]
    pub x: Option<BigUint>,
    pub d_used: usize,
    pub rho_used: usize,
    pub false_period_retries: usize,
    pub window_rejections: usize,
    pub method: SolveMethod,
    pub verified: bool,
    /// Common per-period drift when all entries of the period sum agree.
    pub linear_factor: Option<String>,
    pub enumerated_terms: usize,
    pub timings: PhaseTimings,
}

/// Full exponent recovery from public data.
pub fn recover_exponent<T: Entry>(
    m: &TropicalMatrix<T>,
    h: &TropicalMatrix<T>,
    m_a: &TropicalMatrix<T>,
    max_steps: usize,
) -> Result<AttackResult> {
    Ok(recover_exponent_with_period(m, h, m_a, max_steps)?.0)
}

/// Like [`recover_exponent`], also returning the accepted period.
pub fn recover_exponent_with_period<T: Entry>(
    m: &TropicalMatrix<T>,
    h: &TropicalMatrix<T>,
    m_a: &TropicalMatrix<T>,
    max_steps: usize,
) -> Result<(AttackResult, PeriodInfo<T>)> {
    if m_a.order() != m.order() {
        return Err(Error::DimensionMismatch {
            left: m.order(),
            right: m_a.order(),
        });
    }
    let mut search = PeriodSearch::new(m, h, max_steps)?;
    let mut timings = PhaseTimings::default();
    let mut retries = 0;
    // Different false periods can propose the same exponent.
    let mut rejected: HashSet<BigUint> = HashSet::new();
    loop {
        let started = Instant::now();
        let (d, rho) = match search.next_period() {
            Ok(found) => found,
            Err(Error::PeriodNotFound { steps }) => {
                return Err(Error::AttackFailed { steps, retries })
            }
            Err(e) => return Err(e),
        };
        timings.period_search_s += started.elapsed().as_secs_f64();

        let started = Instant::now();
        let period_sum = search.period_sum(d, rho)?;
        let solution = solve_candidate(
            &CandidateView {
                d,
                rho,
                diffs: &search.diffs,
                snapshots: &search.seq,
                period_sum: &period_sum,
            },
            m_a,
        )?;
        timings.solve_s += started.elapsed().as_secs_f64();

        if let Some(sol) = solution.filter(|s| !rejected.contains(&s.a)) {
            let started = Instant::now();
            let verified = verify_candidate(m, h, m_a, &sol.a)?;
            timings.verify_s += started.elapsed().as_secs_f64();
            if !verified {
                rejected.insert(sol.a.clone());
            }
            if verified {
                let info = search.info(d, rho)?;
                let result = AttackResult {
                    recovered_a: sol.a,
                    k: sol.k,
                    x: sol.x,
                    d_used: info.d,
                    rho_used: info.rho,
                    false_period_retries: retries,
                    window_rejections: search.rejected_by_window(),
                    method: sol.method,
                    verified,
                    linear_factor: info.linear_factor().map(|v| v.to_string()),
                    enumerated_terms: search.enumerated(),
                    timings,
                };
                return Ok((result, info));
            }
        }
        retries += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Entry")]
pub struct KeyRecovery<T> {
    pub key: TropicalMatrix<T>,
    pub attack: AttackResult,
}

/// Recovers `a`, rebuilds `H_a`, and derives `(M_b ∘ H_a) ⊕ M_a`.
pub fn recover_shared_key<T: Entry>(
    m: &TropicalMatrix<T>,
    h: &TropicalMatrix<T>,
    m_a: &TropicalMatrix<T>,
    m_b: &TropicalMatrix<T>,
    max_steps: usize,
) -> Result<KeyRecovery<T>> {
    let attack = recover_exponent(m, h, m_a, max_steps)?;
    let h_a = PairOne::new(m.clone(), h.clone())?.pow(&attack.recovered_a)?.h;
    let key = derive_key(m_b, &h_a, m_a)?;
    Ok(KeyRecovery { key, attack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol_one::fold_power;
    use crate::scalar::TropicalScalar;

    type M = TropicalMatrix<i64>;

    fn m2(rows: [[i64; 2]; 2]) -> M {
        M::from_i64_rows(&rows).unwrap()
    }

    #[test]
    fn enumeration_starts_at_m() {
        let m = m2([[3, 1], [4, 1]]);
        let h = m2([[5, -9], [2, 6]]);
        assert_eq!(enumerate_m_sequence(&m, &h, 1).unwrap(), vec![m.clone()]);
        let seq = enumerate_m_sequence(&m, &h, 20).unwrap();
        let p = PairOne::new(m, h).unwrap();
        for (i, term) in seq.iter().enumerate() {
            assert_eq!(*term, fold_power(&p, i as u64 + 1).unwrap().m, "M_{}", i + 1);
        }
    }

    #[test]
    fn constant_differences_give_zero_defect() {
        // 1x1 with negative H: M_n = M + (n-1)·H once H dominates.
        let m = M::from_i64_rows(&[[0]]).unwrap();
        let h = M::from_i64_rows(&[[-3]]).unwrap();
        let info = find_period(&m, &h, 100, None).unwrap();
        assert_eq!((info.d, info.rho), (0, 1));
        assert_eq!(info.period_sum.entries(), &[-3]);
        assert_eq!(info.linear_factor(), Some(-3));
        assert!(info.reconstruction_holds().unwrap());
    }

    #[test]
    fn periodic_solve_recovers_forward_generated_exponent() {
        let m = m2([[3, 1], [4, 1]]);
        let h = m2([[5, -9], [2, 6]]);
        let info = find_period(&m, &h, 1000, None).unwrap();
        let a = info.d + 2 * info.rho + 1;
        let m_a = PairOne::new(m.clone(), h.clone()).unwrap().pow_u64(a as u64).unwrap().m;
        let sol = solve_exponent(&info, &m_a).unwrap().unwrap();
        assert_eq!(sol.method, SolveMethod::Periodic);
        assert_eq!(sol.k, Some(1));
        assert_eq!(sol.x, Some(BigUint::from(2u32)));
        assert_eq!(sol.a, BigUint::from(a));
    }

    #[test]
    fn zero_offset_resolves_by_lookup() {
        let m = m2([[3, 1], [4, 1]]);
        let h = m2([[5, -9], [2, 6]]);
        let info = find_period(&m, &h, 1000, None).unwrap();
        let m_d1 = info.snapshot(info.d + 1).clone();
        let sol = solve_exponent(&info, &m_d1).unwrap().unwrap();
        assert_eq!(sol.method, SolveMethod::DirectLookup);
        assert_eq!(sol.a, BigUint::from(info.d + 1));
    }

    #[test]
    fn degenerate_sequence_substitutes_d_plus_one() {
        let m = m2([[0, 5], [7, 0]]);
        let h = m2([[1, 2], [3, 4]]);
        let info = find_period(&m, &h, 100, None).unwrap();
        assert!(info.period_sum.is_zero());
        let m_a = PairOne::new(m.clone(), h.clone()).unwrap().pow_u64(1000).unwrap().m;
        let sol = solve_exponent(&info, &m_a).unwrap().unwrap();
        assert_eq!(sol.method, SolveMethod::Degenerate);
        assert_eq!(sol.a, BigUint::from(info.d + 1));
        for a in info.d + 1..info.d + 6 {
            assert!(verify_candidate(&m, &h, &m_a, &BigUint::from(a)).unwrap());
        }
    }

    #[test]
    fn verify_rejects_neighbouring_exponent() {
        let m = m2([[3, 1], [4, 1]]);
        let h = m2([[5, -9], [2, 6]]);
        let m_a = PairOne::new(m.clone(), h.clone()).unwrap().pow_u64(37).unwrap().m;
        assert!(verify_candidate(&m, &h, &m_a, &BigUint::from(37u32)).unwrap());
        assert!(!verify_candidate(&m, &h, &m_a, &BigUint::from(38u32)).unwrap());
    }

    #[test]
    fn infinite_entries_in_differences_are_domain_errors() {
        let m = M::from_rows(vec![
            vec![TropicalScalar::Infinity, TropicalScalar::Infinity],
            vec![TropicalScalar::Infinity, TropicalScalar::Infinity],
        ])
        .unwrap();
        let h = M::infinity(2);
        assert!(matches!(find_period(&m, &h, 50, None), Err(Error::InfiniteEntry { .. })));
    }

    #[test]
    fn step_limit_is_reported() {
        let m = m2([[3, 1], [4, 1]]);
        let h = m2([[5, -9], [2, 6]]);
        assert_eq!(
            find_period(&m, &h, 2, None).map(|_| ()),
            Err(Error::PeriodNotFound { steps: 2 })
        );
        assert!(matches!(
            recover_exponent(&m, &h, &m, 2),
            Err(Error::AttackFailed { .. })
        ));
    }

    #[test]
    fn attack_result_json() {
        let m = m2([[3, 1], [4, 1]]);
        let h = m2([[5, -9], [2, 6]]);
        let m_a = PairOne::new(m.clone(), h.clone()).unwrap().pow_u64(1_000_003).unwrap().m;
        let r = recover_exponent(&m, &h, &m_a, 1000).unwrap();
        assert!(r.verified);
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["recovered_a"].is_string());
        assert!(v["timings"]["period_search_s"].is_number());
        assert_eq!(v["method"], "periodic");
    }
}
