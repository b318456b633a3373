//! The Anshel–Anshel–Goldfeld key exchange over a Heisenberg group.
//!
//! Both parties publish a tuple of group elements, keep a private product of
//! their own tuple, and exchange the other party's tuple conjugated by that
//! product. Each side then derives the commutator `K = A^-1 B^-1 A B`: Alice
//! obtains it directly, Bob obtains its inverse, so the shared secret is fixed
//! up by one inversion.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Element, GroupParams, Sign, Word};

/// A party's published tuple of non-identity group elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicSet {
    elements: Vec<Element>,
}

impl PublicSet {
    pub fn new(elements: Vec<Element>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::BadParams(
                "a public set needs at least one element".into(),
            ));
        }
        let n = elements[0].params().n();
        for e in &elements[1..] {
            if e.params().n() != n {
                return Err(Error::MismatchedParams {
                    left: n,
                    right: e.params().n(),
                });
            }
        }
        Ok(PublicSet { elements })
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn params(&self) -> GroupParams {
        self.elements[0].params()
    }

    pub fn element(&self, index: usize) -> Result<&Element> {
        self.elements.get(index).ok_or(Error::BadIndex {
            index,
            count: self.elements.len(),
        })
    }

    /// Product of set members selected by the word's letters: letter `(i, +)`
    /// contributes `elements[i]`, letter `(i, -)` its inverse.
    pub fn evaluate_word(&self, word: &Word) -> Result<Element> {
        let mut acc = self.params().identity();
        for &(index, sign) in word.letters() {
            acc = acc.multiply(&self.element(index)?.signed(sign)?)?;
        }
        Ok(acc)
    }
}

/// A private key: an ordered product of the owner's public-set members, each
/// possibly inverted. Stored as factor letters, not the evaluated element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateKey {
    factors: Word,
}

impl PrivateKey {
    /// Validates length ≥ 1, indices below `set_size`, and the free-reduction
    /// invariant: no factor immediately followed by its own inverse.
    pub fn new(factors: Vec<(usize, Sign)>, set_size: usize) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::BadParams(
                "a private key needs at least one factor".into(),
            ));
        }
        for &(index, _) in &factors {
            if index >= set_size {
                return Err(Error::BadIndex {
                    index,
                    count: set_size,
                });
            }
        }
        for pair in factors.windows(2) {
            let (i0, s0) = pair[0];
            let (i1, s1) = pair[1];
            if i0 == i1 && s0 == s1.flip() {
                return Err(Error::BadParams(format!(
                    "key factors {i0}^{s0} and {i1}^{s1} cancel immediately"
                )));
            }
        }
        Ok(PrivateKey {
            factors: Word::new(factors),
        })
    }

    pub fn factors(&self) -> &[(usize, Sign)] {
        self.factors.letters()
    }

    pub fn length(&self) -> usize {
        self.factors.len()
    }

    pub fn as_word(&self) -> &Word {
        &self.factors
    }
}

/// Draw a private key of exactly `length` factors: uniform index and sign,
/// resampling any letter that would immediately cancel its predecessor.
pub fn generate_private_key<R: Rng + ?Sized>(
    set_size: usize,
    length: usize,
    rng: &mut R,
) -> Result<PrivateKey> {
    if set_size < 1 || length < 1 {
        return Err(Error::BadParams(format!(
            "private key needs set_size >= 1 and length >= 1, got {set_size} and {length}"
        )));
    }
    let mut factors: Vec<(usize, Sign)> = Vec::with_capacity(length);
    while factors.len() < length {
        let index = rng.random_range(0..set_size);
        let sign = Sign::random(rng);
        if let Some(&(prev_index, prev_sign)) = factors.last() {
            if prev_index == index && prev_sign == sign.flip() {
                continue;
            }
        }
        factors.push((index, sign));
    }
    PrivateKey::new(factors, set_size)
}

/// Draw a public set of `size` elements, each the evaluation of a random
/// freely-reduced word of `min_len..=max_len` letters. Identity elements are
/// useless as conjugators and are resampled.
pub fn generate_public_set<R: Rng + ?Sized>(
    params: GroupParams,
    size: usize,
    min_len: usize,
    max_len: usize,
    rng: &mut R,
) -> Result<PublicSet> {
    if size < 1 {
        return Err(Error::BadParams("a public set needs size >= 1".into()));
    }
    let mut elements = Vec::with_capacity(size);
    while elements.len() < size {
        let word = params.random_word(min_len, max_len, rng)?;
        let element = params.evaluate_word(&word)?;
        if !element.is_identity() {
            elements.push(element);
        }
    }
    PublicSet::new(elements)
}

/// Evaluate a private key against its owner's public set.
pub fn key_element(owner_public: &PublicSet, key: &PrivateKey) -> Result<Element> {
    owner_public.evaluate_word(key.as_word())
}

/// Conjugate every entry of a tuple by the same element, preserving order.
pub fn conjugate_tuple(tuple: &[Element], by: &Element) -> Result<Vec<Element>> {
    tuple.iter().map(|g| g.conjugate_by(by)).collect()
}

fn derive_shared_key(
    key: &PrivateKey,
    own_element: &Element,
    transmitted: &[Element],
) -> Result<Element> {
    let mut acc = own_element.inverse()?;
    for &(index, sign) in key.factors() {
        let factor = transmitted.get(index).ok_or(Error::BadIndex {
            index,
            count: transmitted.len(),
        })?;
        acc = acc.multiply(&factor.signed(sign)?)?;
    }
    Ok(acc)
}

/// Alice's derivation `K_A = A^-1 · ∏ (a'_{s_i})^{ε_i}` from Bob's
/// transmission `a'_i = B^-1 a_i B`; the product telescopes to `A^-1 B^-1 A B`.
pub fn derive_shared_key_alice(
    alice_key: &PrivateKey,
    a_element: &Element,
    a_prime: &[Element],
) -> Result<Element> {
    derive_shared_key(alice_key, a_element, a_prime)
}

/// Bob's derivation `K_B = B^-1 · ∏ (b'_{t_i})^{δ_i} = B^-1 A^-1 B A`, the
/// inverse of Alice's key.
pub fn derive_shared_key_bob(
    bob_key: &PrivateKey,
    b_element: &Element,
    b_prime: &[Element],
) -> Result<Element> {
    derive_shared_key(bob_key, b_element, b_prime)
}

/// One complete protocol run: both public sets, both private keys, the two
/// transmitted conjugated tuples, and both derived shared keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub params: GroupParams,
    pub alice_public: PublicSet,
    pub bob_public: PublicSet,
    pub alice_key: PrivateKey,
    pub bob_key: PrivateKey,
    pub a_element: Element,
    pub b_element: Element,
    pub transmitted_b_prime: Vec<Element>,
    pub transmitted_a_prime: Vec<Element>,
    pub shared_key_alice: Element,
    pub shared_key_bob: Element,
}

/// Execute the protocol end to end with one RNG stream. Both private keys use
/// the same length; the data model supports distinct lengths via the
/// lower-level functions. The two derived keys are checked against each other:
/// a mismatch can only come from an arithmetic bug and is reported as
/// `ProtocolMismatch` rather than returned as data.
pub fn run_session<R: Rng + ?Sized>(
    params: GroupParams,
    alice_size: usize,
    bob_size: usize,
    key_length: usize,
    min_len: usize,
    max_len: usize,
    rng: &mut R,
) -> Result<Session> {
    let alice_public = generate_public_set(params, alice_size, min_len, max_len, rng)?;
    let bob_public = generate_public_set(params, bob_size, min_len, max_len, rng)?;
    let alice_key = generate_private_key(alice_size, key_length, rng)?;
    let bob_key = generate_private_key(bob_size, key_length, rng)?;

    let a_element = key_element(&alice_public, &alice_key)?;
    let b_element = key_element(&bob_public, &bob_key)?;

    let transmitted_b_prime = conjugate_tuple(bob_public.elements(), &a_element)?;
    let transmitted_a_prime = conjugate_tuple(alice_public.elements(), &b_element)?;

    let shared_key_alice = derive_shared_key_alice(&alice_key, &a_element, &transmitted_a_prime)?;
    let shared_key_bob = derive_shared_key_bob(&bob_key, &b_element, &transmitted_b_prime)?;

    if shared_key_alice != shared_key_bob.inverse()? {
        return Err(Error::ProtocolMismatch);
    }

    Ok(Session {
        params,
        alice_public,
        bob_public,
        alice_key,
        bob_key,
        a_element,
        b_element,
        transmitted_b_prime,
        transmitted_a_prime,
        shared_key_alice,
        shared_key_bob,
    })
}
