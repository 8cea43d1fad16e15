/// Sentinel for "no such multi-index" in the shift tables.
pub const NONE: usize = usize::MAX;

/// All multi-indices `k ∈ ℕ^d` with `|k| ≤ p`, in graded order (every
/// `k − e_s` precedes `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexSet {
    dim: usize,
    order: usize,
    items: Vec<[usize; 3]>,
    minus1: Vec<[usize; 3]>,
    minus2: Vec<[usize; 3]>,
    lookup: Vec<usize>,
}

impl MultiIndexSet {
    pub fn new(dim: usize, order: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        let mut items = Vec::new();
        for total in 0..=order {
            for k0 in (0..=total).rev() {
                if dim == 2 {
                    items.push([k0, total - k0, 0]);
                } else {
                    for k1 in (0..=total - k0).rev() {
                        items.push([k0, k1, total - k0 - k1]);
                    }
                }
            }
        }
        let side = order + 1;
        let mut lookup = vec![NONE; side * side * side];
        for (i, k) in items.iter().enumerate() {
            lookup[(k[0] * side + k[1]) * side + k[2]] = i;
        }
        let find = |k: [isize; 3]| -> usize {
            if k.iter().any(|&c| c < 0) {
                NONE
            } else {
                lookup[((k[0] as usize) * side + k[1] as usize) * side + k[2] as usize]
            }
        };
        let shifted = |by: isize| -> Vec<[usize; 3]> {
            items
                .iter()
                .map(|k| {
                    let mut row = [NONE; 3];
                    for (s, slot) in row.iter_mut().enumerate().take(dim) {
                        let mut q = [k[0] as isize, k[1] as isize, k[2] as isize];
                        q[s] -= by;
                        *slot = find(q);
                    }
                    row
                })
                .collect()
        };
        let minus1 = shifted(1);
        let minus2 = shifted(2);
        Self {
            dim,
            order,
            items,
            minus1,
            minus2,
            lookup,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[[usize; 3]] {
        &self.items
    }

    /// Position of `k`, if `|k| ≤ p`.
    pub fn index(&self, k: [usize; 3]) -> Option<usize> {
        if k[0] + k[1] + k[2] > self.order || (self.dim == 2 && k[2] != 0) {
            return None;
        }
        let side = self.order + 1;
        Some(self.lookup[(k[0] * side + k[1]) * side + k[2]])
    }

    /// Position of `k − e_s` for the `i`-th index, or [`NONE`].
    #[inline]
    pub fn minus1(&self, i: usize, s: usize) -> usize {
        self.minus1[i][s]
    }

    /// Position of `k − 2e_s` for the `i`-th index, or [`NONE`].
    #[inline]
    pub fn minus2(&self, i: usize, s: usize) -> usize {
        self.minus2[i][s]
    }

    /// Number of indices with `|k| ≤ q`, a prefix of the graded order.
    pub fn prefix_len(&self, q: usize) -> usize {
        let q = q.min(self.order);
        self.items.iter().take_while(|k| k[0] + k[1] + k[2] <= q).count()
    }
}

/// `k! = Π k_s!`.
pub fn factorial(k: &[usize; 3]) -> f64 {
    k.iter()
        .map(|&n| (1..=n).map(|x| x as f64).product::<f64>())
        .product()
}

/// `δ^k = Π δ_s^{k_s}` for every index of `set`, in set order.
pub fn monomials(set: &MultiIndexSet, delta: &crate::kernel::Vec3, out: &mut [f64]) {
    let order = set.order();
    let mut pows = [[1.0; 32]; 3];
    for s in 0..set.dim() {
        for n in 1..=order {
            pows[s][n] = pows[s][n - 1] * delta[s];
        }
    }
    for (slot, k) in out.iter_mut().zip(set.items()) {
        *slot = pows[0][k[0]] * pows[1][k[1]] * pows[2][k[2]];
    }
}
