//! Symbolic Baker–Campbell–Hausdorff product via Dynkin's formula.
//!
//! Lie algebra elements carry polynomial coefficients in `2N` variables
//! (`ξ` then `η`); the result is the group law `ξ·η` as `N` polynomials.
//! Brackets nested deeper than the step vanish, so the series is truncated at
//! word length `s`.

use crate::group::spec::StructureTensor;
use crate::poly::{Coefficient, Polynomial};

type LieElement<T> = Vec<Polynomial<T>>;

fn lie_bracket<T: Coefficient>(tensor: &StructureTensor<T>, u: &LieElement<T>, v: &LieElement<T>) -> LieElement<T> {
    let n = u.len();
    let nvars = u[0].nvars();
    let mut out = vec![Polynomial::zero(nvars); n];
    for (a, ua) in u.iter().enumerate() {
        if ua.is_zero() {
            continue;
        }
        for (b, vb) in v.iter().enumerate() {
            if vb.is_zero() || tensor[a][b].is_empty() {
                continue;
            }
            let prod = ua * vb;
            for (c, coef) in &tensor[a][b] {
                out[*c] = &out[*c] + &prod.scale(coef);
            }
        }
    }
    out
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

/// Compositions `((r_1,s_1),…,(r_n,s_n))` with `r_i + s_i ≥ 1` and total at most `max_len`.
fn dynkin_blocks(n: usize, max_len: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(n: usize, budget: usize, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let remaining = n - cur.len() - 1;
        for total in 1..=budget.saturating_sub(remaining) {
            for r in 0..=total {
                cur.push((r, total - r));
                rec(n, budget - total, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, max_len, &mut Vec::new(), &mut out);
    out
}

/// `log(exp(ξ) exp(η))` truncated at bracket depth `step`, as polynomials in
/// the `2N` variables `(ξ, η)`.
pub(crate) fn group_law<T: Coefficient>(tensor: &StructureTensor<T>, dim: usize, step: usize) -> Vec<Polynomial<T>> {
    let nvars = 2 * dim;
    let x: LieElement<T> = (0..dim).map(|i| Polynomial::var(nvars, i)).collect();
    let y: LieElement<T> = (0..dim).map(|i| Polynomial::var(nvars, dim + i)).collect();
    let mut z: LieElement<T> = vec![Polynomial::zero(nvars); dim];

    for n in 1..=step {
        for blocks in dynkin_blocks(n, step) {
            // Word X^{r1} Y^{s1} … X^{rn} Y^{sn}.
            let mut word: Vec<bool> = Vec::new();
            let mut denom: i64 = 1;
            for &(r, s) in &blocks {
                word.extend(std::iter::repeat_n(false, r));
                word.extend(std::iter::repeat_n(true, s));
                denom *= factorial(r) * factorial(s);
            }
            let len = word.len();
            if len >= 2 && word[len - 1] == word[len - 2] {
                continue;
            }
            let letter = |is_y: bool| if is_y { &y } else { &x };
            let mut v = letter(word[len - 1]).clone();
            for &w in word[..len - 1].iter().rev() {
                v = lie_bracket(tensor, letter(w), &v);
            }
            let sign = if n % 2 == 1 { 1 } else { -1 };
            let coef = T::from_ratio(sign, n as i64 * len as i64 * denom);
            for (zc, vc) in z.iter_mut().zip(&v) {
                if !vc.is_zero() {
                    *zc = &*zc + &vc.scale(&coef);
                }
            }
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::spec::GroupSpec;
    use num_rational::Rational64;

    #[test]
    fn heisenberg_law_has_half_commutator() {
        let spec = GroupSpec::heisenberg();
        let law = group_law(&spec.rational_structure_tensor().unwrap(), 3, 2);
        // t-component: t + t' + (x y' - y x') / 2
        let t = &law[2];
        assert_eq!(t.coefficient(&[0, 0, 1, 0, 0, 0]), Rational64::from_integer(1));
        assert_eq!(t.coefficient(&[0, 0, 0, 0, 0, 1]), Rational64::from_integer(1));
        assert_eq!(t.coefficient(&[1, 0, 0, 0, 1, 0]), Rational64::new(1, 2));
        assert_eq!(t.coefficient(&[0, 1, 0, 1, 0, 0]), Rational64::new(-1, 2));
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn block_enumeration_small_cases() {
        // n = 1, length <= 2: (1,0),(0,1),(2,0),(1,1),(0,2)
        assert_eq!(dynkin_blocks(1, 2).len(), 5);
        // n = 2, length <= 2: each block has length exactly 1 -> 2*2
        assert_eq!(dynkin_blocks(2, 2).len(), 4);
    }
}
