//! Exact arithmetic for the integer Heisenberg group H^{2n+1}.
//!
//! Elements are kept in normal form `a_1^{x_1}..a_n^{x_n} b_1^{y_1}..b_n^{y_n} c^z`
//! over the presentation `[a_i,b_i] = c`, all other generator pairs commuting
//! (commutator convention `[g,h] = g^-1 h^-1 g h`, so `ab = ba·c`). All exponent
//! arithmetic is overflow-checked; a wraparound is reported as `Error::Overflow`,
//! never silently absorbed.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of H^{2n+1}: `n` pairs a_i, b_i plus the central generator c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupParams {
    n: usize,
}

impl GroupParams {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadParams("group parameter n must be >= 1".into()));
        }
        Ok(GroupParams { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of polycyclic generators: a_1..a_n, b_1..b_n, c.
    pub fn generator_count(&self) -> usize {
        2 * self.n + 1
    }

    /// The Hirsch length of H^{2n+1} is 2n+1: every polycyclic factor is
    /// infinite cyclic.
    pub fn hirsch_length(&self) -> usize {
        2 * self.n + 1
    }

    /// Printable name for a generator index under the fixed ordering
    /// `0..n-1 -> a_{i+1}`, `n..2n-1 -> b_{i-n+1}`, `2n -> c`.
    pub fn generator_name(&self, index: usize) -> Result<String> {
        let n = self.n;
        match index {
            i if i < n => Ok(format!("a{}", i + 1)),
            i if i < 2 * n => Ok(format!("b{}", i - n + 1)),
            i if i == 2 * n => Ok("c".to_string()),
            _ => Err(Error::BadIndex {
                index,
                count: self.generator_count(),
            }),
        }
    }

    pub fn identity(&self) -> Element {
        Element {
            x: vec![0; self.n],
            y: vec![0; self.n],
            z: 0,
        }
    }

    /// The normal-form element of a single generator letter.
    pub fn generator(&self, index: usize, sign: Sign) -> Result<Element> {
        let n = self.n;
        if index >= self.generator_count() {
            return Err(Error::BadIndex {
                index,
                count: self.generator_count(),
            });
        }
        let mut g = self.identity();
        let e = sign.exponent();
        if index < n {
            g.x[index] = e;
        } else if index < 2 * n {
            g.y[index - n] = e;
        } else {
            g.z = e;
        }
        Ok(g)
    }

    /// Left-to-right product of the word's letters; the empty word evaluates
    /// to the identity.
    pub fn evaluate_word(&self, word: &Word) -> Result<Element> {
        let mut acc = self.identity();
        for &(index, sign) in word.letters() {
            let g = self.generator(index, sign)?;
            acc = acc.multiply(&g)?;
        }
        Ok(acc)
    }

    /// Uniform random freely-reduced word: length uniform in `[min_len, max_len]`,
    /// letters uniform over all 2n+1 generators and both signs. A letter that
    /// would immediately cancel its predecessor is resampled, so the advertised
    /// length is the effective one.
    pub fn random_word<R: Rng + ?Sized>(
        &self,
        min_len: usize,
        max_len: usize,
        rng: &mut R,
    ) -> Result<Word> {
        if min_len < 1 || min_len > max_len {
            return Err(Error::BadRange {
                min: min_len,
                max: max_len,
            });
        }
        let len = rng.random_range(min_len..=max_len);
        let count = self.generator_count();
        let mut letters: Vec<(usize, Sign)> = Vec::with_capacity(len);
        while letters.len() < len {
            let index = rng.random_range(0..count);
            let sign = Sign::random(rng);
            if let Some(&(prev_index, prev_sign)) = letters.last() {
                if prev_index == index && prev_sign == sign.flip() {
                    continue;
                }
            }
            letters.push((index, sign));
        }
        Ok(Word::new(letters))
    }
}

/// Exponent sign of a single word letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn exponent(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Sign {
        if rng.random::<bool>() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+"),
            Sign::Minus => write!(f, "-"),
        }
    }
}

/// A sequence of `(generator index, sign)` letters. The index space is
/// caller-defined: group words index the 2n+1 polycyclic generators, while
/// private keys and attack conjugators index a public set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    letters: Vec<(usize, Sign)>,
}

impl Word {
    pub fn new(letters: Vec<(usize, Sign)>) -> Self {
        Word { letters }
    }

    pub fn empty() -> Self {
        Word::default()
    }

    pub fn letters(&self) -> &[(usize, Sign)] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn push(&mut self, index: usize, sign: Sign) {
        self.letters.push((index, sign));
    }

    /// The formal inverse: letters reversed, signs flipped.
    pub fn inverse(&self) -> Word {
        Word {
            letters: self
                .letters
                .iter()
                .rev()
                .map(|&(i, s)| (i, s.flip()))
                .collect(),
        }
    }

    /// Clone of this word with one extra letter, used by the beam expansion.
    pub fn extended(&self, index: usize, sign: Sign) -> Word {
        let mut letters = Vec::with_capacity(self.letters.len() + 1);
        letters.extend_from_slice(&self.letters);
        letters.push((index, sign));
        Word { letters }
    }

    /// Render with a naming function, e.g. `|i| format!("g{}", i + 1)`.
    pub fn render<F: Fn(usize) -> String>(&self, name: F) -> String {
        if self.letters.is_empty() {
            return "1".to_string();
        }
        self.letters
            .iter()
            .map(|&(i, s)| match s {
                Sign::Plus => name(i),
                Sign::Minus => format!("{}^-1", name(i)),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A Heisenberg group element in normal form: exponent vectors for a_1..a_n
/// and b_1..b_n plus the center exponent. The representation is unique, so
/// structural equality is group equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Element {
    x: Vec<i64>,
    y: Vec<i64>,
    z: i64,
}

impl Element {
    pub fn new(x: Vec<i64>, y: Vec<i64>, z: i64) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::BadParams(format!(
                "exponent vectors must have equal nonzero length (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        Ok(Element { x, y, z })
    }

    pub fn params(&self) -> GroupParams {
        GroupParams { n: self.x.len() }
    }

    pub fn x(&self) -> &[i64] {
        &self.x
    }

    pub fn y(&self) -> &[i64] {
        &self.y
    }

    pub fn z(&self) -> i64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.z == 0 && self.x.iter().all(|&v| v == 0) && self.y.iter().all(|&v| v == 0)
    }

    fn check_same(&self, other: &Element) -> Result<()> {
        if self.x.len() != other.x.len() {
            return Err(Error::MismatchedParams {
                left: self.x.len(),
                right: other.x.len(),
            });
        }
        Ok(())
    }

    /// Normal form of the product `self · other`.
    ///
    /// Moving the right factor's a-part left past this element's b-part
    /// applies `b_i a_i = a_i b_i c^-1` once per crossing, so the center picks
    /// up `-<y_self, x_other>`.
    pub fn multiply(&self, other: &Element) -> Result<Element> {
        self.check_same(other)?;
        let x = add_vectors(&self.x, &other.x)?;
        let y = add_vectors(&self.y, &other.y)?;
        let cross = dot(&self.y, &other.x)?;
        let z = self
            .z
            .checked_add(other.z)
            .and_then(|s| s.checked_sub(cross))
            .ok_or(Error::Overflow)?;
        Ok(Element { x, y, z })
    }

    pub fn inverse(&self) -> Result<Element> {
        let x: Vec<i64> = self
            .x
            .iter()
            .map(|&v| v.checked_neg().ok_or(Error::Overflow))
            .collect::<Result<_>>()?;
        let y: Vec<i64> = self
            .y
            .iter()
            .map(|&v| v.checked_neg().ok_or(Error::Overflow))
            .collect::<Result<_>>()?;
        let z = self
            .z
            .checked_neg()
            .and_then(|v| v.checked_sub(dot(&self.y, &self.x).ok()?))
            .ok_or(Error::Overflow)?;
        Ok(Element { x, y, z })
    }

    /// `h^-1 · self · h`. Conjugation in H^{2n+1} only shifts the center:
    /// the a/b exponents are untouched and z moves by
    /// `<y_h, x_self> - <y_self, x_h>`.
    pub fn conjugate_by(&self, h: &Element) -> Result<Element> {
        self.check_same(h)?;
        let shift = dot(&h.y, &self.x)?
            .checked_sub(dot(&self.y, &h.x)?)
            .ok_or(Error::Overflow)?;
        let z = self.z.checked_add(shift).ok_or(Error::Overflow)?;
        Ok(Element {
            x: self.x.clone(),
            y: self.y.clone(),
            z,
        })
    }

    /// `self^-1 · h^-1 · self · h`.
    pub fn commutator_with(&self, h: &Element) -> Result<Element> {
        self.check_same(h)?;
        self.inverse()?
            .multiply(&h.inverse()?)?
            .multiply(self)?
            .multiply(h)
    }

    /// Signed copy: `Plus` is the element itself, `Minus` its inverse.
    pub fn signed(&self, sign: Sign) -> Result<Element> {
        match sign {
            Sign::Plus => Ok(self.clone()),
            Sign::Minus => self.inverse(),
        }
    }

    /// Normal-form length: the sum of absolute exponent values.
    pub fn length(&self) -> u64 {
        let mut total: u64 = self.z.unsigned_abs();
        for &v in self.x.iter().chain(self.y.iter()) {
            total = total.saturating_add(v.unsigned_abs());
        }
        total
    }

    /// Upper unitriangular embedding into (n+2)x(n+2) integer matrices.
    ///
    /// Row 0 carries x_1..x_n in columns 1..n, column n+1 carries y_i in row i,
    /// and the corner (0, n+1) holds `z + <x, y>` (the corner of the matrix
    /// product a^x b^y c^z, not the bare center exponent).
    pub fn to_matrix(&self) -> Result<IntMatrix> {
        let n = self.x.len();
        let dim = n + 2;
        let mut m = IntMatrix::identity(dim);
        for i in 0..n {
            m.set(0, 1 + i, self.x[i]);
            m.set(1 + i, n + 1, self.y[i]);
        }
        let corner = self
            .z
            .checked_add(dot(&self.x, &self.y)?)
            .ok_or(Error::Overflow)?;
        m.set(0, n + 1, corner);
        Ok(m)
    }
}

impl fmt::Display for Element {
    /// Canonical text form `[x_1,..,x_n | y_1,..,y_n | z]`, used in logs and
    /// golden files; the layout never varies.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[i64]| {
            v.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "[{} | {} | {}]", join(&self.x), join(&self.y), self.z)
    }
}

/// Sum of normal-form lengths over a tuple; the empty tuple has length 0.
pub fn tuple_length(tuple: &[Element]) -> Result<u64> {
    let mut total: u64 = 0;
    for (i, g) in tuple.iter().enumerate() {
        if i > 0 {
            g.check_same(&tuple[0])?;
        }
        total = total.saturating_add(g.length());
    }
    Ok(total)
}

fn add_vectors(a: &[i64], b: &[i64]) -> Result<Vec<i64>> {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| p.checked_add(q).ok_or(Error::Overflow))
        .collect()
}

fn dot(a: &[i64], b: &[i64]) -> Result<i64> {
    let mut acc: i64 = 0;
    for (&p, &q) in a.iter().zip(b) {
        let term = p.checked_mul(q).ok_or(Error::Overflow)?;
        acc = acc.checked_add(term).ok_or(Error::Overflow)?;
    }
    Ok(acc)
}

/// Dense square integer matrix with an overflow-checked product; deliberately
/// plain so matrix checks stay independent of the group arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    dim: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1;
        }
        IntMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: i64) {
        self.data[row * self.dim + col] = value;
    }

    /// Schoolbook product with checked arithmetic.
    pub fn checked_mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.dim != other.dim {
            return Err(Error::MismatchedParams {
                left: self.dim,
                right: other.dim,
            });
        }
        let dim = self.dim;
        let mut out = IntMatrix {
            dim,
            data: vec![0; dim * dim],
        };
        for r in 0..dim {
            for c in 0..dim {
                let mut acc: i64 = 0;
                for k in 0..dim {
                    let term = self
                        .get(r, k)
                        .checked_mul(other.get(k, c))
                        .ok_or(Error::Overflow)?;
                    acc = acc.checked_add(term).ok_or(Error::Overflow)?;
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }
}
