use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};

/// One structure constant: `[e_a, e_b] = coef * e_c + ...`.
///
/// Indices are 0-based positions in the flattened basis, layer by layer.
/// Each unordered pair `{a, b}` is listed once; the opposite orientation is
/// implied by antisymmetry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub coef: f64,
}

/// A stratified nilpotent Lie algebra `V_1 ⊕ … ⊕ V_s` given by its layer
/// dimensions and structure constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub step: usize,
    pub layer_dims: Vec<usize>,
    pub brackets: Vec<Bracket>,
}

/// Dense structure tensor `c[a][b]` holding `(c, coef)` pairs, both orientations.
pub(crate) type StructureTensor<T> = Vec<Vec<Vec<(usize, T)>>>;

impl GroupSpec {
    /// First Heisenberg group with `[X, Y] = T`.
    pub fn heisenberg() -> Self {
        Self {
            step: 2,
            layer_dims: vec![2, 1],
            brackets: vec![Bracket {
                a: 0,
                b: 1,
                c: 2,
                coef: 1.0,
            }],
        }
    }

    /// Engel group: `[X1, X2] = X3`, `[X1, X3] = X4`.
    pub fn engel() -> Self {
        Self {
            step: 3,
            layer_dims: vec![2, 1, 1],
            brackets: vec![
                Bracket {
                    a: 0,
                    b: 1,
                    c: 2,
                    coef: 1.0,
                },
                Bracket {
                    a: 0,
                    b: 2,
                    c: 3,
                    coef: 1.0,
                },
            ],
        }
    }

    /// Abelian group `R^m` (step one).
    pub fn abelian(m: usize) -> Self {
        Self {
            step: 1,
            layer_dims: vec![m],
            brackets: vec![],
        }
    }

    /// Built-in specs: `"h1"`, `"engel"`, `"r2"`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "h1" | "heisenberg" => Ok(Self::heisenberg()),
            "engel" => Ok(Self::engel()),
            "r2" => Ok(Self::abelian(2)),
            _ => Err(CarnotError::UnknownGroup(name.to_string())),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Topological dimension `N = Σ m_l`.
    pub fn dimension(&self) -> usize {
        self.layer_dims.iter().sum()
    }

    /// Number of horizontal generators `m_1`.
    pub fn horizontal_dim(&self) -> usize {
        self.layer_dims.first().copied().unwrap_or(0)
    }

    /// Layer (1-based) of each flattened basis index.
    pub fn weights(&self) -> Vec<u32> {
        self.layer_dims
            .iter()
            .enumerate()
            .flat_map(|(l, &m)| std::iter::repeat_n((l + 1) as u32, m))
            .collect()
    }

    pub fn layer_of(&self, index: usize) -> usize {
        let mut start = 0;
        for (l, &m) in self.layer_dims.iter().enumerate() {
            if index < start + m {
                return l + 1;
            }
            start += m;
        }
        panic!("basis index {index} out of range");
    }

    /// Flattened index range of layer `l` (1-based).
    pub fn layer_range(&self, l: usize) -> std::ops::Range<usize> {
        let start: usize = self.layer_dims[..l - 1].iter().sum();
        start..start + self.layer_dims[l - 1]
    }

    /// `Q = Σ l·m_l`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.layer_dims.iter().enumerate().map(|(l, &m)| (l + 1) * m).sum()
    }

    pub(crate) fn rational_structure_tensor(&self) -> Result<StructureTensor<Rational64>> {
        let n = self.dimension();
        let mut t = vec![vec![Vec::new(); n]; n];
        for br in &self.brackets {
            let q = to_rational(br.coef)?;
            t[br.a][br.b].push((br.c, q));
            t[br.b][br.a].push((br.c, -q));
        }
        Ok(t)
    }

    /// Bracket of two algebra elements given in basis coordinates.
    pub fn bracket(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        let mut out = vec![0.0; n];
        for br in &self.brackets {
            let w = u[br.a] * v[br.b] - u[br.b] * v[br.a];
            out[br.c] += br.coef * w;
        }
        out
    }

    /// Checks shape, grading, antisymmetric listing, Jacobi, stratification
    /// and rational representability of the structure constants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CarnotError::InvalidSpec(m));
        if self.step == 0 {
            return bad("step must be positive".into());
        }
        if self.layer_dims.len() != self.step {
            return bad(format!(
                "{} layer dimensions given for step {}",
                self.layer_dims.len(),
                self.step
            ));
        }
        if self.layer_dims.contains(&0) {
            return bad("layer dimensions must be positive".into());
        }
        let n = self.dimension();
        let mut seen = std::collections::BTreeSet::new();
        for br in &self.brackets {
            if br.a >= n || br.b >= n || br.c >= n {
                return bad(format!("bracket index out of range in {br:?}"));
            }
            if br.a == br.b {
                return bad(format!("[e_{0}, e_{0}] must vanish", br.a));
            }
            if !br.coef.is_finite() || br.coef == 0.0 {
                return bad(format!("coefficient must be finite and nonzero in {br:?}"));
            }
            if self.layer_of(br.c) != self.layer_of(br.a) + self.layer_of(br.b) {
                return bad(format!("bracket {br:?} does not respect the grading"));
            }
            let key = (br.a.min(br.b), br.a.max(br.b), br.c);
            if !seen.insert(key) {
                return bad(format!("pair ({}, {}) -> {} listed twice", key.0, key.1, key.2));
            }
            to_rational(br.coef)?;
        }

        // Jacobi on the basis.
        let basis = |i: usize| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        };
        let scale = self.brackets.iter().fold(1.0f64, |m, b| m.max(b.coef.abs()));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let (ea, eb, ec) = (basis(a), basis(b), basis(c));
                    let t1 = self.bracket(&ea, &self.bracket(&eb, &ec));
                    let t2 = self.bracket(&eb, &self.bracket(&ec, &ea));
                    let t3 = self.bracket(&ec, &self.bracket(&ea, &eb));
                    let err = t1
                        .iter()
                        .zip(&t2)
                        .zip(&t3)
                        .fold(0.0f64, |m, ((x, y), z)| m.max((x + y + z).abs()));
                    if err > 1e-12 * scale * scale {
                        return bad(format!("Jacobi identity fails on ({a}, {b}, {c})"));
                    }
                }
            }
        }

        // [V_1, V_l] must span V_{l+1}.
        for l in 1..self.step {
            let target = self.layer_range(l + 1);
            let mut vectors = Vec::new();
            for i in self.layer_range(1) {
                for j in self.layer_range(l) {
                    let v = self.bracket(&basis(i), &basis(j));
                    vectors.push(v[target.clone()].to_vec());
                }
            }
            let r = rank(vectors, 1e-10);
            if r != self.layer_dims[l] {
                return bad(format!(
                    "[V_1, V_{l}] has rank {r}, expected dim V_{} = {}",
                    l + 1,
                    self.layer_dims[l]
                ));
            }
        }
        Ok(())
    }
}

fn to_rational(x: f64) -> Result<Rational64> {
    let q = Rational64::approximate_float(x)
        .ok_or_else(|| CarnotError::InvalidSpec(format!("coefficient {x} is not representable")))?;
    let back = *q.numer() as f64 / *q.denom() as f64;
    if (back - x).abs() > 1e-12 * x.abs().max(1.0) {
        return Err(CarnotError::InvalidSpec(format!(
            "coefficient {x} has no small rational form"
        )));
    }
    Ok(q)
}

fn rank(mut rows: Vec<Vec<f64>>, tol: f64) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).max_by(|&i, &j| rows[i][c].abs().total_cmp(&rows[j][c].abs())) else {
            break;
        };
        if rows[p][c].abs() <= tol {
            continue;
        }
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][c] / rows[r][c];
                for k in c..cols {
                    rows[i][k] -= f * rows[r][k];
                }
            }
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for name in ["h1", "engel", "r2"] {
            GroupSpec::builtin(name).unwrap().validate().unwrap();
        }
        assert!(matches!(GroupSpec::builtin("h7"), Err(CarnotError::UnknownGroup(_))));
    }

    #[test]
    fn homogeneous_dimensions() {
        assert_eq!(GroupSpec::heisenberg().homogeneous_dimension(), 4);
        assert_eq!(GroupSpec::engel().homogeneous_dimension(), 7);
        assert_eq!(GroupSpec::abelian(2).homogeneous_dimension(), 2);
    }

    #[test]
    fn rejects_bad_grading() {
        let mut s = GroupSpec::heisenberg();
        s.brackets[0].c = 1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_missing_stratification() {
        // Layer 2 declared but nothing generates it.
        let s = GroupSpec {
            step: 2,
            layer_dims: vec![2, 1],
            brackets: vec![],
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_jacobi_failure() {
        // e0,e1,e2 | f3,f4,f5 with [e_i,e_j] = f_k cyclically, and only
        // [e0,f3] = g6: the Jacobi sum over (e0,e1,e2) is g6 != 0.
        let bad = GroupSpec {
            step: 3,
            layer_dims: vec![3, 3, 1],
            brackets: vec![
                Bracket {
                    a: 1,
                    b: 2,
                    c: 3,
                    coef: 1.0,
                },
                Bracket {
                    a: 2,
                    b: 0,
                    c: 4,
                    coef: 1.0,
                },
                Bracket {
                    a: 0,
                    b: 1,
                    c: 5,
                    coef: 1.0,
                },
                Bracket {
                    a: 0,
                    b: 3,
                    c: 6,
                    coef: 1.0,
                },
            ],
        };
        let err = bad.validate().unwrap_err().to_string();
        assert!(err.contains("Jacobi"), "{err}");
    }

    #[test]
    fn rejects_duplicate_pair() {
        let mut s = GroupSpec::heisenberg();
        s.brackets.push(Bracket {
            a: 1,
            b: 0,
            c: 2,
            coef: -1.0,
        });
        assert!(s.validate().is_err());
    }

    #[test]
    fn json_format() {
        let s = GroupSpec::engel();
        let back = GroupSpec::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        let raw = r#"{"step":2,"layer_dims":[2,1],"brackets":[{"a":0,"b":1,"c":2,"coef":1.0}]}"#;
        assert_eq!(GroupSpec::from_json(raw).unwrap(), GroupSpec::heisenberg());
    }
}
