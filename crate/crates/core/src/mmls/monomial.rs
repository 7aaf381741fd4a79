//! Total-degree monomial basis in graded-lexicographic order.
//!
//! Monomials are grouped by total degree (constant first); inside one degree
//! the exponent vectors appear in decreasing lexicographic order, so for
//! `d = 3, m = 2` the layout is
//! `1, x1, x2, x3, x1^2, x1 x2, x1 x3, x2^2, x2 x3, x3^2`.
//! The linear monomial `x_k` sits at index `1 + k`.

/// Number of monomials of total degree at most `m` in `d` variables,
/// i.e. `C(d + m, m)`.
pub fn num_monomials(d: usize, m: usize) -> usize {
    // C(d+m, m) computed incrementally stays exact for the sizes used here
    let mut acc: usize = 1;
    for i in 1..=m {
        acc = acc * (d + i) / i;
    }
    acc
}

/// Precomputed exponent table for `Π_m^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    dim: usize,
    degree: usize,
    exponents: Vec<u16>,
    degrees: Vec<u16>,
}

impl MonomialBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        assert!(dim >= 1, "monomial basis needs at least one variable");
        let len = num_monomials(dim, degree);
        let mut exponents = Vec::with_capacity(len * dim);
        let mut degrees = Vec::with_capacity(len);
        let mut current = vec![0u16; dim];
        for total in 0..=degree {
            push_degree(&mut current, 0, total, &mut exponents);
            degrees.extend(std::iter::repeat(total as u16).take(num_monomials(dim - 1, total)));
        }
        debug_assert_eq!(exponents.len(), len * dim);
        Self {
            dim,
            degree,
            exponents,
            degrees,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// Exponent vector of monomial `j`.
    pub fn exponents(&self, j: usize) -> &[u16] {
        &self.exponents[j * self.dim..(j + 1) * self.dim]
    }

    /// Total degree of monomial `j`.
    pub fn total_degree(&self, j: usize) -> usize {
        self.degrees[j] as usize
    }

    /// Evaluates every monomial at `x` into `out` (length [`Self::len`]).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        assert_eq!(out.len(), self.len(), "output length mismatch");
        let stride = self.degree + 1;
        let mut powers = vec![1.0; self.dim * stride];
        for (v, &xv) in x.iter().enumerate() {
            for p in 1..stride {
                powers[v * stride + p] = powers[v * stride + p - 1] * xv;
            }
        }
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc = 1.0;
            for (v, &e) in self.exponents(j).iter().enumerate() {
                if e > 0 {
                    acc *= powers[v * stride + e as usize];
                }
            }
            *slot = acc;
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }
}

// Emits every exponent vector with entries summing to `remaining` over the
// variables `var..`, highest power of the leading variable first.
fn push_degree(current: &mut [u16], var: usize, remaining: usize, out: &mut Vec<u16>) {
    if var + 1 == current.len() {
        current[var] = remaining as u16;
        out.extend_from_slice(current);
        return;
    }
    for e in (0..=remaining).rev() {
        current[var] = e as u16;
        push_degree(current, var + 1, remaining - e, out);
    }
    current[var] = 0;
}

/// All monomials of total degree `<= m` evaluated at `x`, graded-lex order.
pub fn monomial_basis(d: usize, m: usize, x: &[f64]) -> Vec<f64> {
    MonomialBasis::new(d, m).eval(x)
}
