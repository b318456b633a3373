//! The length-based attack with memory: a beam search over conjugating words.
//!
//! Starting from the captured tuple, each round conjugates every retained
//! state by all 2·N1 attacker generators, succeeds as soon as some state
//! reaches the public target tuple, and otherwise keeps the M states of
//! smallest total normal-form length for the next round. The recovered
//! conjugator is the inverse of the accumulated word, an explicit product of
//! attacker generators whose action maps the target tuple back onto the
//! captured one.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::aag::{conjugate_tuple, PublicSet, Session};
use crate::error::{Error, Result};
use crate::group::{tuple_length, Element, Sign, Word};

/// Everything an eavesdropper sees: one party's public set (the attacker's
/// generator alphabet), the other party's public tuple, and that tuple's
/// transmitted conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct CapturedInstance {
    attacker_generators: PublicSet,
    target_tuple: Vec<Element>,
    captured_tuple: Vec<Element>,
}

impl CapturedInstance {
    pub fn new(
        attacker_generators: PublicSet,
        target_tuple: Vec<Element>,
        captured_tuple: Vec<Element>,
    ) -> Result<Self> {
        if target_tuple.len() != captured_tuple.len() {
            return Err(Error::MismatchedParams {
                left: target_tuple.len(),
                right: captured_tuple.len(),
            });
        }
        if target_tuple.is_empty() {
            return Err(Error::BadParams(
                "captured instance needs a nonempty tuple".into(),
            ));
        }
        let n = attacker_generators.params().n();
        for e in target_tuple.iter().chain(captured_tuple.iter()) {
            if e.params().n() != n {
                return Err(Error::MismatchedParams {
                    left: n,
                    right: e.params().n(),
                });
            }
        }
        Ok(CapturedInstance {
            attacker_generators,
            target_tuple,
            captured_tuple,
        })
    }

    /// The eavesdropper goes after Alice's key: alphabet ā, target b̄,
    /// captured b̄' = A^-1 b̄ A.
    pub fn targeting_alice(session: &Session) -> Self {
        CapturedInstance {
            attacker_generators: session.alice_public.clone(),
            target_tuple: session.bob_public.elements().to_vec(),
            captured_tuple: session.transmitted_b_prime.clone(),
        }
    }

    /// Role swap, going after Bob's key: alphabet b̄, target ā, captured
    /// ā' = B^-1 ā B.
    pub fn targeting_bob(session: &Session) -> Self {
        CapturedInstance {
            attacker_generators: session.bob_public.clone(),
            target_tuple: session.alice_public.elements().to_vec(),
            captured_tuple: session.transmitted_a_prime.clone(),
        }
    }

    pub fn attacker_generators(&self) -> &PublicSet {
        &self.attacker_generators
    }

    pub fn target_tuple(&self) -> &[Element] {
        &self.target_tuple
    }

    pub fn captured_tuple(&self) -> &[Element] {
        &self.captured_tuple
    }
}

/// One retained search state: a conjugate of the captured tuple, the word
/// that produced it, and its cached total length (the sort key).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamEntry {
    pub total_length: u64,
    pub tuple: Vec<Element>,
    pub conjugator: Word,
}

/// Search budget: a fixed number of beam iterations (deterministic, used by
/// tests and CI) or a wall-clock limit (replication mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackBudget {
    Iterations(u64),
    WallClock(Duration),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig {
    /// Beam width M: how many states survive each round.
    pub memory: usize,
    pub budget: AttackBudget,
    /// Keep only the first candidate per distinct tuple within a round.
    /// Without this, beam slots fill with equivalent states — in a nilpotent
    /// group many conjugators act identically. Off replicates the bare
    /// algorithm.
    pub dedup: bool,
}

impl AttackConfig {
    fn validate(&self) -> Result<()> {
        if self.memory < 1 {
            return Err(Error::BadParams("attack memory must be >= 1".into()));
        }
        Ok(())
    }
}

/// How the search ended: the recovered conjugator word (over attacker-set
/// indices) and its evaluated element, or exhaustion of the budget.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackOutcome {
    Success { conjugator: Word, element: Element },
    Fail,
}

/// Work counters for one attack run. `elapsed` is measured wall time and is
/// intentionally not part of any equality notion; all other fields are
/// deterministic given the instance, config, and (for iteration budgets) the
/// budget value.
#[derive(Debug, Clone)]
pub struct AttackStats {
    pub iterations: u64,
    pub expanded: u64,
    pub peak_candidates: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct AttackResult {
    pub outcome: AttackOutcome,
    pub stats: AttackStats,
}

impl AttackResult {
    pub fn is_success(&self) -> bool {
        matches!(self.outcome, AttackOutcome::Success { .. })
    }
}

/// Per-round progress record emitted after the prune step, so `beam_size` is
/// the beam as the next round will see it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationProgress {
    pub iteration: u64,
    /// Beam size after pruning; bounded by M.
    pub beam_size: usize,
    /// Candidates generated this round (after dedup, before pruning);
    /// bounded by 2·N1·M.
    pub candidate_count: usize,
    /// Smallest total length seen in any retained beam so far.
    pub best_length: u64,
    pub beam_min_length: u64,
    pub beam_max_length: u64,
}

/// All 2·N1 single-generator extensions of one beam entry, in the fixed order
/// (index 0, +), (index 0, −), (index 1, +), ... Total lengths are recomputed
/// from the conjugated tuples, never carried over.
pub fn expand(entry: &BeamEntry, gens: &PublicSet) -> Result<Vec<BeamEntry>> {
    let mut out = Vec::with_capacity(2 * gens.size());
    for index in 0..gens.size() {
        for sign in [Sign::Plus, Sign::Minus] {
            let by = gens.elements()[index].signed(sign)?;
            let tuple = conjugate_tuple(&entry.tuple, &by)?;
            out.push(BeamEntry {
                total_length: tuple_length(&tuple)?,
                tuple,
                conjugator: entry.conjugator.extended(index, sign),
            });
        }
    }
    Ok(out)
}

/// Run the attack with a progress sink receiving one record per completed
/// round.
///
/// The search maintains the loop invariant that every beam entry's tuple is
/// the captured tuple conjugated by the entry's accumulated word. When a
/// candidate's tuple equals the target, its accumulated word `w` satisfies
/// `captured^w = target`, so the inverse word conjugates the target onto the
/// captured tuple — it acts exactly as the private key did — and is returned.
/// If the captured tuple already equals the target (a central or otherwise
/// trivially-acting key), the empty word is returned immediately: the bare
/// algorithm only tests equality after a conjugation and could never
/// terminate on such instances.
pub fn attack_with_progress<F>(
    instance: &CapturedInstance,
    config: &AttackConfig,
    mut sink: F,
) -> Result<AttackResult>
where
    F: FnMut(&IterationProgress),
{
    config.validate()?;
    let start = Instant::now();
    let gens = &instance.attacker_generators;
    let target = &instance.target_tuple;

    let mut stats = AttackStats {
        iterations: 0,
        expanded: 0,
        peak_candidates: 0,
        elapsed: Duration::ZERO,
    };

    if instance.captured_tuple == *target {
        stats.elapsed = start.elapsed();
        return Ok(AttackResult {
            outcome: AttackOutcome::Success {
                conjugator: Word::empty(),
                element: gens.params().identity(),
            },
            stats,
        });
    }

    let mut beam = vec![BeamEntry {
        total_length: tuple_length(&instance.captured_tuple)?,
        tuple: instance.captured_tuple.clone(),
        conjugator: Word::empty(),
    }];
    let mut best_length = beam[0].total_length;
    let mut audit_counter: u64 = 0;

    loop {
        match config.budget {
            AttackBudget::Iterations(max) => {
                if stats.iterations >= max {
                    break;
                }
            }
            AttackBudget::WallClock(limit) => {
                if start.elapsed() >= limit {
                    break;
                }
            }
        }
        stats.iterations += 1;

        let mut candidates: Vec<BeamEntry> = Vec::new();
        let mut seen: HashSet<Vec<Element>> = HashSet::new();
        for entry in &beam {
            stats.expanded += 1;
            for candidate in expand(entry, gens)? {
                if candidate.tuple == *target {
                    let conjugator = candidate.conjugator.inverse();
                    let element = gens.evaluate_word(&conjugator)?;
                    stats.peak_candidates = stats.peak_candidates.max(candidates.len() + 1);
                    stats.elapsed = start.elapsed();
                    return Ok(AttackResult {
                        outcome: AttackOutcome::Success {
                            conjugator,
                            element,
                        },
                        stats,
                    });
                }
                audit_candidate(instance, &candidate, &mut audit_counter)?;
                if config.dedup && !seen.insert(candidate.tuple.clone()) {
                    continue;
                }
                candidates.push(candidate);
            }
        }

        stats.peak_candidates = stats.peak_candidates.max(candidates.len());
        let candidate_count = candidates.len();
        // Stable sort on the cached length: ties keep insertion order, which
        // makes the retained beam deterministic.
        candidates.sort_by_key(|e| e.total_length);
        candidates.truncate(config.memory);
        beam = candidates;
        if beam.is_empty() {
            break;
        }
        best_length = best_length.min(beam[0].total_length);
        sink(&IterationProgress {
            iteration: stats.iterations,
            beam_size: beam.len(),
            candidate_count,
            best_length,
            beam_min_length: beam[0].total_length,
            beam_max_length: beam[beam.len() - 1].total_length,
        });
    }

    stats.elapsed = start.elapsed();
    Ok(AttackResult {
        outcome: AttackOutcome::Fail,
        stats,
    })
}

/// Run the attack without progress reporting.
pub fn attack(instance: &CapturedInstance, config: &AttackConfig) -> Result<AttackResult> {
    attack_with_progress(instance, config, |_| {})
}

/// Debug-build audit of the full-path invariant on a deterministic ~1% sample
/// of candidates: the tuple must equal the captured tuple conjugated by the
/// evaluated accumulated word, and the cached length must match a recompute.
#[cfg(debug_assertions)]
fn audit_candidate(
    instance: &CapturedInstance,
    candidate: &BeamEntry,
    counter: &mut u64,
) -> Result<()> {
    *counter += 1;
    if *counter % 128 != 1 {
        return Ok(());
    }
    let word_element = instance
        .attacker_generators
        .evaluate_word(&candidate.conjugator)?;
    let replayed = conjugate_tuple(&instance.captured_tuple, &word_element)?;
    debug_assert_eq!(
        replayed, candidate.tuple,
        "beam entry tuple diverged from its accumulated conjugator"
    );
    debug_assert_eq!(
        tuple_length(&candidate.tuple)?,
        candidate.total_length,
        "beam entry cached length diverged"
    );
    Ok(())
}

#[cfg(not(debug_assertions))]
fn audit_candidate(
    _instance: &CapturedInstance,
    _candidate: &BeamEntry,
    _counter: &mut u64,
) -> Result<()> {
    Ok(())
}

/// Confirm a Success independently of the search: the conjugator word must
/// use only attacker-set indices, its evaluation must match the reported
/// element, and that element's action must map the target tuple onto the
/// captured tuple. A Fail result verifies as false.
pub fn verify_result(instance: &CapturedInstance, result: &AttackResult) -> bool {
    let AttackOutcome::Success {
        conjugator,
        element,
    } = &result.outcome
    else {
        return false;
    };
    let size = instance.attacker_generators.size();
    if conjugator.letters().iter().any(|&(i, _)| i >= size) {
        return false;
    }
    let Ok(recomputed) = instance.attacker_generators.evaluate_word(conjugator) else {
        return false;
    };
    if recomputed != *element {
        return false;
    }
    match conjugate_tuple(&instance.target_tuple, element) {
        Ok(conjugated) => conjugated == instance.captured_tuple,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aag::{generate_public_set, run_session};
    use crate::group::GroupParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn small_session(seed: u64, key_length: usize) -> crate::aag::Session {
        let params = GroupParams::new(2).unwrap();
        run_session(params, 5, 5, key_length, 3, 5, &mut rng(seed)).unwrap()
    }

    fn iter_config(memory: usize, iterations: u64) -> AttackConfig {
        AttackConfig {
            memory,
            budget: AttackBudget::Iterations(iterations),
            dedup: true,
        }
    }

    #[test]
    fn expand_produces_all_single_steps() {
        let params = GroupParams::new(1).unwrap();
        let gens = generate_public_set(params, 1, 2, 3, &mut rng(1)).unwrap();
        let entry = BeamEntry {
            total_length: tuple_length(gens.elements()).unwrap(),
            tuple: gens.elements().to_vec(),
            conjugator: Word::empty(),
        };
        let out = expand(&entry, &gens).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].conjugator.letters(), &[(0, Sign::Plus)]);
        assert_eq!(out[1].conjugator.letters(), &[(0, Sign::Minus)]);
        for e in &out {
            assert_eq!(e.total_length, tuple_length(&e.tuple).unwrap());
        }
    }

    #[test]
    fn expand_fixes_central_tuples() {
        let params = GroupParams::new(2).unwrap();
        let gens = generate_public_set(params, 3, 3, 5, &mut rng(2)).unwrap();
        let c = params.generator(2 * params.n(), Sign::Plus).unwrap();
        let entry = BeamEntry {
            total_length: 2,
            tuple: vec![c.clone(), c],
            conjugator: Word::empty(),
        };
        for candidate in expand(&entry, &gens).unwrap() {
            assert_eq!(candidate.tuple, entry.tuple);
            assert_eq!(candidate.total_length, entry.total_length);
        }
    }

    #[test]
    fn expand_round_trips_through_inverse_step() {
        let params = GroupParams::new(2).unwrap();
        let gens = generate_public_set(params, 4, 3, 5, &mut rng(3)).unwrap();
        let session = small_session(4, 3);
        let entry = BeamEntry {
            total_length: tuple_length(&session.transmitted_b_prime).unwrap(),
            tuple: session.transmitted_b_prime.clone(),
            conjugator: Word::empty(),
        };
        let forward = &expand(&entry, &gens).unwrap()[2]; // (1, +)
        let back = &expand(forward, &gens).unwrap()[3]; // (1, −)
        assert_eq!(back.tuple, entry.tuple);
    }

    #[test]
    fn length_one_key_recovered_in_one_iteration() {
        for seed in [20u64, 21, 22, 23] {
            let session = small_session(seed, 1);
            let instance = CapturedInstance::targeting_alice(&session);
            if instance.captured_tuple() == instance.target_tuple() {
                // Degenerate draw: key acts trivially; not the case under test.
                continue;
            }
            let result = attack(&instance, &iter_config(10, 5)).unwrap();
            assert!(result.is_success(), "seed {seed}");
            assert_eq!(result.stats.iterations, 1, "seed {seed}");
            assert!(verify_result(&instance, &result), "seed {seed}");
        }
    }

    #[test]
    fn trivially_acting_key_succeeds_before_the_loop() {
        // A public set of central elements makes every key central, so the
        // captured tuple equals the target and the empty word is the answer.
        let params = GroupParams::new(1).unwrap();
        let c = params.generator(2, Sign::Plus).unwrap();
        let attacker = PublicSet::new(vec![c.clone(), c.multiply(&c).unwrap()]).unwrap();
        let target = vec![
            params.generator(0, Sign::Plus).unwrap(),
            params.generator(1, Sign::Plus).unwrap(),
        ];
        let instance = CapturedInstance::new(attacker, target.clone(), target).unwrap();
        let result = attack(&instance, &iter_config(4, 10)).unwrap();
        match &result.outcome {
            AttackOutcome::Success {
                conjugator,
                element,
            } => {
                assert!(conjugator.is_empty());
                assert!(element.is_identity());
            }
            AttackOutcome::Fail => panic!("expected success"),
        }
        assert_eq!(result.stats.iterations, 0);
        assert!(verify_result(&instance, &result));
    }

    #[test]
    fn role_swap_targets_bob() {
        let session = small_session(30, 1);
        let instance = CapturedInstance::targeting_bob(&session);
        let result = attack(&instance, &iter_config(10, 5)).unwrap();
        assert!(result.is_success());
        assert!(verify_result(&instance, &result));
    }

    #[test]
    fn budget_exhaustion_fails_cleanly() {
        let session = small_session(31, 8);
        let instance = CapturedInstance::targeting_alice(&session);
        let result = attack(&instance, &iter_config(3, 2)).unwrap();
        if !result.is_success() {
            assert_eq!(result.stats.iterations, 2);
            assert!(!verify_result(&instance, &result));
        }

        let timed = AttackConfig {
            memory: 3,
            budget: AttackBudget::WallClock(Duration::ZERO),
            dedup: true,
        };
        let result = attack(&instance, &timed).unwrap();
        assert!(!result.is_success());
        assert_eq!(result.stats.iterations, 0);
    }

    #[test]
    fn beam_respects_memory_and_candidate_bounds() {
        let session = small_session(32, 6);
        let instance = CapturedInstance::targeting_alice(&session);
        let memory = 7;
        let n1 = instance.attacker_generators().size();
        let mut records = Vec::new();
        let result = attack_with_progress(&instance, &iter_config(memory, 12), |p| {
            records.push(*p);
        })
        .unwrap();
        assert!(!records.is_empty());
        for (i, p) in records.iter().enumerate() {
            assert_eq!(p.iteration, i as u64 + 1);
            assert!(p.beam_size <= memory);
            assert!(p.candidate_count <= 2 * n1 * memory);
            assert!(p.beam_min_length <= p.beam_max_length);
            assert!(p.best_length <= p.beam_min_length);
        }
        let _ = result;
    }

    #[test]
    fn deterministic_given_iteration_budget() {
        let session = small_session(33, 5);
        let instance = CapturedInstance::targeting_alice(&session);
        let config = iter_config(20, 15);
        let a = attack(&instance, &config).unwrap();
        let b = attack(&instance, &config).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.stats.iterations, b.stats.iterations);
        assert_eq!(a.stats.expanded, b.stats.expanded);
        assert_eq!(a.stats.peak_candidates, b.stats.peak_candidates);
    }

    #[test]
    fn dedup_never_inflates_candidates() {
        let session = small_session(34, 10);
        let instance = CapturedInstance::targeting_alice(&session);
        let mut with_dedup = Vec::new();
        let mut config = iter_config(10, 4);
        let _ = attack_with_progress(&instance, &config, |p| with_dedup.push(p.candidate_count));

        config.dedup = false;
        let mut without = Vec::new();
        let _ = attack_with_progress(&instance, &config, |p| without.push(p.candidate_count));

        // This instance survives the first rounds, so both runs report
        // progress; dedup can only shrink a round's candidate set.
        assert!(!with_dedup.is_empty() && !without.is_empty());
        assert!(with_dedup[0] <= without[0]);
        assert_eq!(without[0], 2 * instance.attacker_generators().size());
    }

    #[test]
    fn verify_rejects_corrupted_results() {
        let session = small_session(35, 1);
        let instance = CapturedInstance::targeting_alice(&session);
        let result = attack(&instance, &iter_config(10, 5)).unwrap();
        let AttackOutcome::Success {
            conjugator,
            element,
        } = result.outcome.clone()
        else {
            panic!("expected success");
        };

        // Corrupted word: prepend a letter; evaluation no longer matches.
        let mut corrupted_letters = vec![(0, Sign::Plus)];
        corrupted_letters.extend_from_slice(conjugator.letters());
        let corrupted = AttackResult {
            outcome: AttackOutcome::Success {
                conjugator: Word::new(corrupted_letters),
                element: element.clone(),
            },
            stats: result.stats.clone(),
        };
        assert!(!verify_result(&instance, &corrupted));

        // Out-of-range generator index.
        let out_of_range = AttackResult {
            outcome: AttackOutcome::Success {
                conjugator: Word::new(vec![(instance.attacker_generators().size(), Sign::Plus)]),
                element,
            },
            stats: result.stats.clone(),
        };
        assert!(!verify_result(&instance, &out_of_range));

        let failed = AttackResult {
            outcome: AttackOutcome::Fail,
            stats: result.stats,
        };
        assert!(!verify_result(&instance, &failed));
    }

    #[test]
    fn verify_accepts_equal_action_with_different_element() {
        // Attacker alphabet contains a and c: the words "a" and "a c" have
        // equal conjugation action but different evaluations, so a recovered
        // element need not equal the true key element to verify.
        let params = GroupParams::new(1).unwrap();
        let a = params.generator(0, Sign::Plus).unwrap();
        let b = params.generator(1, Sign::Plus).unwrap();
        let c = params.generator(2, Sign::Plus).unwrap();
        let attacker = PublicSet::new(vec![a.clone(), c]).unwrap();
        let target = vec![b.clone()];
        let captured = vec![b.conjugate_by(&a).unwrap()];
        let instance = CapturedInstance::new(attacker.clone(), target, captured).unwrap();

        let word = Word::new(vec![(0, Sign::Plus), (1, Sign::Plus)]); // a·c
        let element = attacker.evaluate_word(&word).unwrap();
        assert_ne!(element, a);
        let result = AttackResult {
            outcome: AttackOutcome::Success {
                conjugator: word,
                element,
            },
            stats: AttackStats {
                iterations: 1,
                expanded: 1,
                peak_candidates: 1,
                elapsed: Duration::ZERO,
            },
        };
        assert!(verify_result(&instance, &result));
    }

    #[test]
    fn instance_validation() {
        let params = GroupParams::new(1).unwrap();
        let gens = generate_public_set(params, 2, 2, 3, &mut rng(40)).unwrap();
        let g = params.generator(0, Sign::Plus).unwrap();
        assert!(CapturedInstance::new(gens.clone(), vec![g.clone()], vec![]).is_err());
        assert!(CapturedInstance::new(gens.clone(), vec![], vec![]).is_err());
        let other = GroupParams::new(2).unwrap().identity();
        assert!(CapturedInstance::new(gens, vec![g], vec![other]).is_err());
    }

    #[test]
    fn attack_config_validation() {
        let session = small_session(41, 1);
        let instance = CapturedInstance::targeting_alice(&session);
        let bad = AttackConfig {
            memory: 0,
            budget: AttackBudget::Iterations(1),
            dedup: true,
        };
        assert!(attack(&instance, &bad).is_err());
    }
}
