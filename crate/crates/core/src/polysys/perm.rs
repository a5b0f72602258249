//! Variable permutations and the ordering/label bijection.
//!
//! Orderings of `n` variables are numbered by their rank in lexicographic
//! enumeration of permutations of `{0..n-1}`, so for three variables
//! label 0 is `(x1, x2, x3)` and label 5 is `(x3, x2, x1)`. The first
//! variable of an ordering is the one eliminated first.

use serde::{Deserialize, Serialize};

use super::PolyError;

/// Bijection on variable indices: `x{i+1}` is sent to `x{image[i]+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct VarPermutation {
    image: Vec<usize>,
}

impl VarPermutation {
    pub fn new(image: Vec<usize>) -> Result<Self, PolyError> {
        if !is_permutation(&image) {
            return Err(PolyError::NotAPermutation(image));
        }
        Ok(VarPermutation { image })
    }

    pub fn identity(n: usize) -> Self {
        VarPermutation {
            image: (0..n).collect(),
        }
    }

    /// Transposition of variables `a` and `b` (0-based).
    pub fn swap(n: usize, a: usize, b: usize) -> Self {
        let mut image: Vec<usize> = (0..n).collect();
        image.swap(a, b);
        VarPermutation { image }
    }

    /// All `n!` permutations in lexicographic order of their image vectors.
    pub fn all(n: usize) -> Vec<VarPermutation> {
        (0..factorial(n))
            .map(|k| VarPermutation {
                image: unrank(n, k),
            })
            .collect()
    }

    pub fn from_index(n: usize, index: usize) -> Option<Self> {
        (index < factorial(n)).then(|| VarPermutation {
            image: unrank(n, index),
        })
    }

    /// Lexicographic rank among all permutations of the same length.
    pub fn index(&self) -> usize {
        rank(&self.image)
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (i, &j) in self.image.iter().enumerate() {
            inv[j] = i;
        }
        VarPermutation { image: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &VarPermutation) -> Self {
        assert_eq!(self.len(), other.len(), "permutation lengths differ");
        VarPermutation {
            image: other.image.iter().map(|&j| self.image[j]).collect(),
        }
    }
}

impl TryFrom<Vec<usize>> for VarPermutation {
    type Error = PolyError;
    fn try_from(image: Vec<usize>) -> Result<Self, Self::Error> {
        VarPermutation::new(image)
    }
}

impl From<VarPermutation> for Vec<usize> {
    fn from(p: VarPermutation) -> Self {
        p.image
    }
}

/// Index of a variable ordering, `0..n!`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderingLabel(pub usize);

impl OrderingLabel {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for OrderingLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn num_orderings(nvars: usize) -> usize {
    factorial(nvars)
}

/// Label of an elimination ordering given as 0-based variable indices.
pub fn ordering_to_label(ordering: &[usize]) -> Result<OrderingLabel, PolyError> {
    if !is_permutation(ordering) {
        return Err(PolyError::NotAPermutation(ordering.to_vec()));
    }
    Ok(OrderingLabel(rank(ordering)))
}

pub fn label_to_ordering(label: OrderingLabel, nvars: usize) -> Result<Vec<usize>, PolyError> {
    if label.0 >= factorial(nvars) {
        return Err(PolyError::LabelOutOfRange {
            label: label.0,
            nvars,
        });
    }
    Ok(unrank(nvars, label.0))
}

/// If `label` names `(x_a, x_b, ...)` the result names `(x_σ(a), x_σ(b), ...)`.
pub fn permute_label(label: OrderingLabel, sigma: &VarPermutation) -> OrderingLabel {
    let ordering = unrank(sigma.len(), label.0);
    let image: Vec<usize> = ordering.into_iter().map(|v| sigma.apply(v)).collect();
    OrderingLabel(rank(&image))
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

fn is_permutation(xs: &[usize]) -> bool {
    let mut seen = vec![false; xs.len()];
    for &x in xs {
        if x >= xs.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

// Lehmer code rank.
fn rank(perm: &[usize]) -> usize {
    let n = perm.len();
    let mut r = 0;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count();
        r += smaller * factorial(n - 1 - i);
    }
    r
}

fn unrank(n: usize, mut k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let f = factorial(n - 1 - i);
        out.push(pool.remove(k / f));
        k %= f;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_variable_label_table() {
        let expected = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for (l, o) in expected.iter().enumerate() {
            assert_eq!(label_to_ordering(OrderingLabel(l), 3).unwrap(), o.to_vec());
            assert_eq!(ordering_to_label(o).unwrap(), OrderingLabel(l));
        }
    }

    #[test]
    fn ordering_errors() {
        assert!(ordering_to_label(&[0, 0, 2]).is_err());
        assert!(ordering_to_label(&[0, 3, 1]).is_err());
        assert!(label_to_ordering(OrderingLabel(6), 3).is_err());
    }

    #[test]
    fn permute_label_examples() {
        let s12 = VarPermutation::swap(3, 0, 1);
        let s13 = VarPermutation::swap(3, 0, 2);
        assert_eq!(permute_label(OrderingLabel(0), &s12), OrderingLabel(2));
        assert_eq!(permute_label(OrderingLabel(5), &s13), OrderingLabel(0));
        let id = VarPermutation::identity(3);
        for l in 0..6 {
            assert_eq!(permute_label(OrderingLabel(l), &id), OrderingLabel(l));
        }
    }

    #[test]
    fn permute_label_is_bijection_for_every_sigma() {
        for sigma in VarPermutation::all(3) {
            let mut images: Vec<usize> = (0..6)
                .map(|l| permute_label(OrderingLabel(l), &sigma).0)
                .collect();
            images.sort_unstable();
            assert_eq!(images, vec![0, 1, 2, 3, 4, 5]);
        }
    }

    #[test]
    fn permutation_index_roundtrip() {
        for (k, p) in VarPermutation::all(4).iter().enumerate() {
            assert_eq!(p.index(), k);
            assert_eq!(VarPermutation::from_index(4, k).as_ref(), Some(p));
        }
        assert_eq!(VarPermutation::all(3)[0], VarPermutation::identity(3));
    }

    #[test]
    fn compose_and_inverse() {
        for a in VarPermutation::all(3) {
            assert!(a.compose(&a.inverse()).is_identity());
            for b in VarPermutation::all(3) {
                let ab = a.compose(&b);
                for i in 0..3 {
                    assert_eq!(ab.apply(i), a.apply(b.apply(i)));
                }
            }
        }
    }

    #[test]
    fn rejects_non_permutation() {
        assert!(VarPermutation::new(vec![1, 1, 0]).is_err());
        assert!(serde_json::from_str::<VarPermutation>("[0,2,2]").is_err());
        let p: VarPermutation = serde_json::from_str("[2,0,1]").unwrap();
        assert_eq!(p.image(), &[2, 0, 1]);
    }
}
