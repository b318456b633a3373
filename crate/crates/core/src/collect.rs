//! A small generic engine for consistent polycyclic presentations.
//!
//! Words are brought to normal form by collection from the left with an
//! explicit stack of pending letters. The engine shares no arithmetic with
//! the closed forms in [`crate::group`] — it knows nothing about Heisenberg
//! groups beyond the relator data handed to it — so the two can cross-check
//! each other as genuinely independent routes to the same normal forms.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::group::{Sign, Word};

/// Hard ceiling on collection work per call. An honest nilpotent presentation
/// stays far below this; hitting it signals a malformed relator set.
const STEP_CAP: u64 = 10_000_000;

/// Relative order of one polycyclic generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelativeOrder {
    Infinite,
    Finite(u64),
}

/// The pair of conjugation relators for an ordered generator pair (i, j),
/// i < j: a word for `g_j^{g_i}` and one for `g_j^{g_i^-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjPair {
    pub by_positive: Word,
    pub by_negative: Word,
}

/// A consistent polycyclic presentation on generators `g_1 .. g_k`.
///
/// Conjugation relators are stored per ordered pair; a missing pair means the
/// two generators commute. Power relators exist exactly for the finite-order
/// generators. All relator words may reference only strictly later generators.
#[derive(Debug, Clone)]
pub struct PcPresentation {
    orders: Vec<RelativeOrder>,
    conj_relators: BTreeMap<(usize, usize), ConjPair>,
    power_relators: BTreeMap<usize, Word>,
}

/// Normal-form exponent vector of a word under some presentation; for a
/// finite-order generator k the entry is normalized into `0..r_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GenericElement {
    exponents: Vec<i64>,
}

impl GenericElement {
    pub fn exponents(&self) -> &[i64] {
        &self.exponents
    }

    pub fn is_zero(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    /// Spell the normal form back out as the word `g_1^{e_1} .. g_k^{e_k}`.
    pub fn to_word(&self) -> Word {
        let mut w = Word::empty();
        for (index, &e) in self.exponents.iter().enumerate() {
            let sign = if e >= 0 { Sign::Plus } else { Sign::Minus };
            for _ in 0..e.unsigned_abs() {
                w.push(index, sign);
            }
        }
        w
    }
}

/// Outcome of the randomized consistency probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsistencyReport {
    Consistent {
        trials: usize,
    },
    Counterexample {
        left: Word,
        right: Word,
        via_concatenation: GenericElement,
        via_normal_forms: GenericElement,
    },
}

impl PcPresentation {
    pub fn new(orders: Vec<RelativeOrder>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::BadParams(
                "a presentation needs at least one generator".into(),
            ));
        }
        for (i, order) in orders.iter().enumerate() {
            if let RelativeOrder::Finite(r) = order {
                if *r < 2 {
                    return Err(Error::BadParams(format!(
                        "relative order of g{} must be >= 2, got {r}",
                        i + 1
                    )));
                }
            }
        }
        Ok(PcPresentation {
            orders,
            conj_relators: BTreeMap::new(),
            power_relators: BTreeMap::new(),
        })
    }

    pub fn generator_count(&self) -> usize {
        self.orders.len()
    }

    pub fn relative_order(&self, index: usize) -> Result<RelativeOrder> {
        self.orders.get(index).copied().ok_or(Error::BadIndex {
            index,
            count: self.orders.len(),
        })
    }

    /// Indices of the finite-order generators (the set I of the normal-form
    /// exponent constraints).
    pub fn finite_order_indices(&self) -> Vec<usize> {
        self.orders
            .iter()
            .enumerate()
            .filter(|(_, o)| matches!(o, RelativeOrder::Finite(_)))
            .map(|(i, _)| i)
            .collect()
    }

    fn check_relator_word(&self, floor: usize, word: &Word) -> Result<()> {
        for &(index, _) in word.letters() {
            if index >= self.orders.len() {
                return Err(Error::BadIndex {
                    index,
                    count: self.orders.len(),
                });
            }
            if index <= floor {
                return Err(Error::BadParams(format!(
                    "relator word may only use generators after g{}, found g{}",
                    floor + 1,
                    index + 1
                )));
            }
        }
        Ok(())
    }

    /// Install the relator pair for `g_moved^{g_acting}` / `g_moved^{g_acting^-1}`.
    pub fn set_conjugation(
        &mut self,
        acting: usize,
        moved: usize,
        by_positive: Word,
        by_negative: Word,
    ) -> Result<()> {
        if moved >= self.orders.len() {
            return Err(Error::BadIndex {
                index: moved,
                count: self.orders.len(),
            });
        }
        if acting >= moved {
            return Err(Error::BadParams(format!(
                "conjugation relator requires acting index < moved index, got {} >= {}",
                acting, moved
            )));
        }
        self.check_relator_word(acting, &by_positive)?;
        self.check_relator_word(acting, &by_negative)?;
        self.conj_relators.insert(
            (acting, moved),
            ConjPair {
                by_positive,
                by_negative,
            },
        );
        Ok(())
    }

    /// Install the relator `g_index^{r_index} = word` for a finite-order
    /// generator.
    pub fn set_power_relator(&mut self, index: usize, word: Word) -> Result<()> {
        match self.relative_order(index)? {
            RelativeOrder::Finite(_) => {}
            RelativeOrder::Infinite => {
                return Err(Error::BadParams(format!(
                    "g{} has infinite relative order and admits no power relator",
                    index + 1
                )));
            }
        }
        self.check_relator_word(index, &word)?;
        self.power_relators.insert(index, word);
        Ok(())
    }

    /// Collect a word to its unique normal form.
    ///
    /// Letters are consumed left to right. Multiplying the collected prefix
    /// `g_1^{e_1}..g_k^{e_k}` by a letter `g_t^s` sets `e_t += s` and replaces
    /// the tail `g_{t+1}^{e_{t+1}}..g_k^{e_k}` by its conjugate under `g_t^s`,
    /// whose spelled-out letters go onto a pending stack. Every popped or
    /// pushed letter counts against the step cap.
    pub fn collect(&self, word: &Word) -> Result<GenericElement> {
        let k = self.orders.len();
        for &(index, _) in word.letters() {
            if index >= k {
                return Err(Error::BadIndex { index, count: k });
            }
        }

        let mut exponents = vec![0i64; k];
        let mut steps: u64 = 0;
        let mut pending: Vec<(usize, Sign)> = word.letters().iter().rev().copied().collect();

        while let Some((t, sign)) = pending.pop() {
            steps += 1;
            if steps > STEP_CAP {
                return Err(Error::NonTerminating { steps });
            }

            if exponents[t + 1..].iter().any(|&e| e != 0) {
                // Push the conjugated tail, rightmost factor first, so the
                // factors pop in left-to-right order.
                for u in (t + 1..k).rev() {
                    let e = exponents[u];
                    if e == 0 {
                        continue;
                    }
                    exponents[u] = 0;
                    steps = self.push_conjugated_power(t, sign, u, e, steps, &mut pending)?;
                }
            }

            exponents[t] = exponents[t]
                .checked_add(sign.exponent())
                .ok_or(Error::Overflow)?;
            steps = self.normalize_power(t, &mut exponents, steps, &mut pending)?;
        }

        Ok(GenericElement { exponents })
    }

    /// Push the letters of `(g_moved^{g_acting^sign})^power` onto the pending
    /// stack (in reverse, so they pop in order), charging them to the step
    /// budget before materializing anything.
    fn push_conjugated_power(
        &self,
        acting: usize,
        sign: Sign,
        moved: usize,
        power: i64,
        steps: u64,
        pending: &mut Vec<(usize, Sign)>,
    ) -> Result<u64> {
        let base: Vec<(usize, Sign)> = match self.conj_relators.get(&(acting, moved)) {
            Some(pair) => {
                let relator = match sign {
                    Sign::Plus => &pair.by_positive,
                    Sign::Minus => &pair.by_negative,
                };
                if power >= 0 {
                    relator.letters().to_vec()
                } else {
                    relator.inverse().letters().to_vec()
                }
            }
            // Absent relator: the pair commutes, the conjugate is g_moved itself.
            None => vec![(moved, if power >= 0 { Sign::Plus } else { Sign::Minus })],
        };

        let reps = power.unsigned_abs();
        let cost = reps.saturating_mul(base.len() as u64);
        let steps = steps.saturating_add(cost);
        if steps > STEP_CAP {
            return Err(Error::NonTerminating { steps });
        }
        for _ in 0..reps {
            pending.extend(base.iter().rev());
        }
        Ok(steps)
    }

    /// Renormalize `e_t` into `0..r_t` for a finite-order generator, pushing
    /// the corresponding power-relator word. Only called when all exponents
    /// after position t are zero.
    fn normalize_power(
        &self,
        t: usize,
        exponents: &mut [i64],
        steps: u64,
        pending: &mut Vec<(usize, Sign)>,
    ) -> Result<u64> {
        let r = match self.orders[t] {
            RelativeOrder::Infinite => return Ok(steps),
            RelativeOrder::Finite(r) => r as i64,
        };
        let e = exponents[t];
        if (0..r).contains(&e) {
            return Ok(steps);
        }
        let quotient = e.div_euclid(r);
        exponents[t] = e.rem_euclid(r);

        let relator = self.power_relators.get(&t).cloned().unwrap_or_default();
        let base: Vec<(usize, Sign)> = if quotient >= 0 {
            relator.letters().to_vec()
        } else {
            relator.inverse().letters().to_vec()
        };
        let reps = quotient.unsigned_abs();
        let cost = reps.saturating_mul(base.len() as u64);
        let steps = steps.saturating_add(cost);
        if steps > STEP_CAP {
            return Err(Error::NonTerminating { steps });
        }
        for _ in 0..reps {
            pending.extend(base.iter().rev());
        }
        Ok(steps)
    }

    /// Randomized consistency probe: for `trials` random word pairs (u, v),
    /// check that collecting the concatenation u·v agrees with collecting the
    /// concatenation of the two normal forms spelled back out as words. A
    /// consistent presentation passes every trial; the first mismatch is
    /// returned as a counterexample.
    pub fn check_consistency<R: Rng + ?Sized>(
        &self,
        trials: usize,
        rng: &mut R,
    ) -> Result<ConsistencyReport> {
        if trials < 1 {
            return Err(Error::BadParams(
                "consistency check needs trials >= 1".into(),
            ));
        }
        let k = self.orders.len();
        let random_word = |rng: &mut R| {
            let len = rng.random_range(0..=6);
            let mut w = Word::empty();
            for _ in 0..len {
                w.push(rng.random_range(0..k), Sign::random(rng));
            }
            w
        };
        for _ in 0..trials {
            let u = random_word(rng);
            let v = random_word(rng);

            let mut concatenated = u.clone();
            for &(i, s) in v.letters() {
                concatenated.push(i, s);
            }
            let via_concatenation = self.collect(&concatenated)?;

            let mut normal_forms = self.collect(&u)?.to_word();
            for &(i, s) in self.collect(&v)?.to_word().letters() {
                normal_forms.push(i, s);
            }
            let via_normal_forms = self.collect(&normal_forms)?;

            if via_concatenation != via_normal_forms {
                return Ok(ConsistencyReport::Counterexample {
                    left: u,
                    right: v,
                    via_concatenation,
                    via_normal_forms,
                });
            }
        }
        Ok(ConsistencyReport::Consistent { trials })
    }

    /// Human-readable serialization, one relator per line, for golden-file
    /// tests. Missing conjugation pairs (implicit commuting) are not printed.
    pub fn to_text(&self) -> String {
        let name = |i: usize| format!("g{}", i + 1);
        let mut out = String::new();
        let _ = writeln!(out, "generators: {}", self.orders.len());
        for (i, order) in self.orders.iter().enumerate() {
            match order {
                RelativeOrder::Infinite => {
                    let _ = writeln!(out, "{}: infinite", name(i));
                }
                RelativeOrder::Finite(r) => {
                    let _ = writeln!(out, "{}: order {r}", name(i));
                }
            }
        }
        for (i, word) in &self.power_relators {
            let r = match self.orders[*i] {
                RelativeOrder::Finite(r) => r,
                RelativeOrder::Infinite => unreachable!("power relator on infinite generator"),
            };
            let _ = writeln!(out, "{}^{} = {}", name(*i), r, word.render(name));
        }
        for ((i, j), pair) in &self.conj_relators {
            let _ = writeln!(
                out,
                "{}^{} = {}",
                name(*j),
                name(*i),
                pair.by_positive.render(name)
            );
            let _ = writeln!(
                out,
                "{}^{}^-1 = {}",
                name(*j),
                name(*i),
                pair.by_negative.render(name)
            );
        }
        out
    }
}

/// The polycyclic presentation of H^{2n+1} on a_1..a_n, b_1..b_n, c in that
/// order: `b_i^{a_i} = b_i c^-1` and `b_i^{a_i^-1} = b_i c` (the `[a_i,b_i]=c`
/// relators), every other pair explicitly commuting, all orders infinite.
pub fn heisenberg_presentation(n: usize) -> Result<PcPresentation> {
    if n == 0 {
        return Err(Error::BadParams("group parameter n must be >= 1".into()));
    }
    let count = 2 * n + 1;
    let c = 2 * n;
    let mut p = PcPresentation::new(vec![RelativeOrder::Infinite; count])?;
    for i in 0..count {
        for j in (i + 1)..count {
            let (w, v) = if j == i + n && i < n {
                // b_i conjugated by a_i^±1.
                (
                    Word::new(vec![(j, Sign::Plus), (c, Sign::Minus)]),
                    Word::new(vec![(j, Sign::Plus), (c, Sign::Plus)]),
                )
            } else {
                let commuting = Word::new(vec![(j, Sign::Plus)]);
                (commuting.clone(), commuting)
            };
            p.set_conjugation(i, j, w, v)?;
        }
    }
    Ok(p)
}
