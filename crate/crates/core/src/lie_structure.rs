//! Step-2 free-nilpotent Lie algebra with `k` generators, the Poisson
//! structure on its dual, and the linear Casimirs `I_a(h) = <a, h>`.
//!
//! Basis of `L`: `X_1..X_k` followed by `X_ij` (i < j) in lexicographic
//! order. The same order is used for the coordinates `h_i, h_ij` on `L*`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative kernel threshold on singular values.
pub const KERNEL_TOL: f64 = 1e-10;
/// Absolute floor on the kernel threshold when `sigma_max < SMALL_MATRIX`.
pub const KERNEL_FLOOR: f64 = 1e-14;
const SMALL_MATRIX: f64 = 1e-4;
/// Smallest non-kernel singular values below this are reported as unstable.
pub const NEAR_SINGULAR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgebraSpec {
    k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisElement {
    /// `X_i`, 0-based.
    First(usize),
    /// `X_ij` with `i < j`, 0-based.
    Second(usize, usize),
}

impl AlgebraSpec {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!(
                "number of generators must be at least 2, got {k}"
            )));
        }
        Ok(Self { k })
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    /// `dim L = k(k+1)/2`.
    pub fn dim(&self) -> usize {
        self.k * (self.k + 1) / 2
    }

    /// Number of second-layer generators, `k(k-1)/2`.
    pub fn pair_count(&self) -> usize {
        self.k * (self.k - 1) / 2
    }

    /// Flat index of `(i, j)`, 0-based with `i < j < k`.
    pub fn pair_index(&self, i: usize, j: usize) -> Option<usize> {
        if i < j && j < self.k {
            Some(i * (2 * self.k - i - 1) / 2 + (j - i - 1))
        } else {
            None
        }
    }

    pub fn pair(&self, idx: usize) -> Option<(usize, usize)> {
        self.pairs().nth(idx)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.k).flat_map(move |i| ((i + 1)..self.k).map(move |j| (i, j)))
    }

    pub fn basis_index(&self, e: BasisElement) -> Option<usize> {
        match e {
            BasisElement::First(i) if i < self.k => Some(i),
            BasisElement::First(_) => None,
            BasisElement::Second(i, j) => self.pair_index(i, j).map(|p| self.k + p),
        }
    }

    pub fn basis_element(&self, idx: usize) -> Option<BasisElement> {
        if idx < self.k {
            Some(BasisElement::First(idx))
        } else {
            self.pair(idx - self.k).map(|(i, j)| BasisElement::Second(i, j))
        }
    }

    /// Human-readable 1-based label, e.g. `h_1` or `h_12` (`h_1_12` for k >= 10).
    pub fn label(&self, idx: usize) -> String {
        match self.basis_element(idx) {
            Some(BasisElement::First(i)) => format!("{}", i + 1),
            Some(BasisElement::Second(i, j)) if self.k < 10 => format!("{}{}", i + 1, j + 1),
            Some(BasisElement::Second(i, j)) => format!("{}_{}", i + 1, j + 1),
            None => String::from("?"),
        }
    }

    pub fn bracket_table(&self) -> BracketTable {
        let n = self.dim();
        let mut constants = vec![0.0; n * n * n];
        for (i, j) in self.pairs() {
            let c = self.k + self.pair_index(i, j).unwrap();
            constants[(i * n + j) * n + c] = 1.0;
            constants[(j * n + i) * n + c] = -1.0;
        }
        BracketTable { spec: *self, constants }
    }
}

/// Structure constants `c^c_{ab}` of `{h_a, h_b} = sum_c c^c_{ab} h_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketTable {
    spec: AlgebraSpec,
    constants: Vec<f64>,
}

impl BracketTable {
    pub fn spec(&self) -> AlgebraSpec {
        self.spec
    }

    pub fn constant(&self, a: usize, b: usize, c: usize) -> f64 {
        let n = self.spec.dim();
        self.constants[(a * n + b) * n + c]
    }

    /// Coefficients of `{h_a, h_b}` in the basis.
    pub fn bracket(&self, a: usize, b: usize) -> &[f64] {
        let n = self.spec.dim();
        &self.constants[(a * n + b) * n..(a * n + b + 1) * n]
    }

    /// Number of unordered pairs `a < b` with a nonzero bracket.
    pub fn nonzero_brackets(&self) -> usize {
        let n = self.spec.dim();
        (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.bracket(a, b).iter().any(|&x| x != 0.0))
            .count()
    }

    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.spec.dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    worst = worst.max((self.constant(a, b, c) + self.constant(b, a, c)).abs());
                }
            }
        }
        worst
    }

    /// Largest violation of the Jacobi identity over all basis triples.
    pub fn jacobi_defect(&self) -> f64 {
        let n = self.spec.dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for e in 0..n {
                        let mut s = 0.0;
                        for d in 0..n {
                            s += self.constant(a, b, d) * self.constant(d, c, e)
                                + self.constant(b, c, d) * self.constant(d, a, e)
                                + self.constant(c, a, d) * self.constant(d, b, e);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Lie–Poisson bracket of two linear functions (coefficient vectors over
    /// the basis) evaluated at the point `lambda` of `L*`.
    pub fn poisson_bracket(&self, f: &[f64], g: &[f64], lambda: &[f64]) -> Result<f64> {
        let n = self.spec.dim();
        for v in [f, g, lambda] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
        }
        let mut acc = 0.0;
        for a in 0..n {
            if f[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if g[b] == 0.0 {
                    continue;
                }
                let pair: f64 = self.bracket(a, b).iter().zip(lambda).map(|(c, l)| c * l).sum();
                acc += f[a] * g[b] * pair;
            }
        }
        Ok(acc)
    }
}

/// The constant matrix `M = (h_ij)` in `so(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    spec: AlgebraSpec,
    mat: DMatrix<f64>,
}

impl SkewMatrix {
    pub fn zero(spec: AlgebraSpec) -> Self {
        let k = spec.rank();
        Self { spec, mat: DMatrix::zeros(k, k) }
    }

    /// Builds `M` from the upper-triangle values `h_ij` in flat pair order.
    pub fn from_upper(spec: AlgebraSpec, values: &[f64]) -> Result<Self> {
        if values.len() != spec.pair_count() {
            return Err(Error::DimensionMismatch { expected: spec.pair_count(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("h_ij entries must be finite".into()));
        }
        let mut m = Self::zero(spec);
        for ((i, j), &v) in spec.pairs().zip(values) {
            m.mat[(i, j)] = v;
            m.mat[(j, i)] = -v;
        }
        Ok(m)
    }

    pub fn spec(&self) -> AlgebraSpec {
        self.spec
    }

    pub fn k(&self) -> usize {
        self.spec.rank()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn upper(&self) -> Vec<f64> {
        self.spec.pairs().map(|(i, j)| self.mat[(i, j)]).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.mat.iter().all(|&x| x == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { spec: self.spec, mat: &self.mat * factor }
    }

    /// `M v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let k = self.k();
        (0..k).map(|i| (0..k).map(|j| self.mat[(i, j)] * v[j]).sum()).collect()
    }

    pub(crate) fn apply_into(&self, v: &[f64], out: &mut [f64], sign: f64) {
        let k = self.k();
        for i in 0..k {
            let mut s = 0.0;
            for j in 0..k {
                s += self.mat[(i, j)] * v[j];
            }
            out[i] = sign * s;
        }
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.mat.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Orthonormal basis of the numerical kernel, with threshold
    /// `tol * sigma_max` (floored at `KERNEL_FLOOR` for tiny matrices).
    pub fn kernel_basis(&self, tol: f64) -> CasimirBasis {
        let k = self.k();
        if self.is_zero() {
            return CasimirBasis {
                vectors: (0..k)
                    .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect(),
                threshold: 0.0,
                sigma_max: 0.0,
                smallest_nonkernel: None,
            };
        }
        let svd = self.mat.clone().svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let sigma_max = svd.singular_values.max();
        let mut threshold = tol * sigma_max;
        if sigma_max < SMALL_MATRIX {
            threshold = threshold.max(KERNEL_FLOOR);
        }
        let mut vectors = Vec::new();
        let mut smallest_nonkernel: Option<f64> = None;
        for (idx, &s) in svd.singular_values.iter().enumerate() {
            if s <= threshold {
                let mut a: Vec<f64> = v_t.row(idx).iter().copied().collect();
                let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                a.iter_mut().for_each(|x| *x /= norm);
                fix_sign(&mut a);
                vectors.push(a);
            } else {
                smallest_nonkernel = Some(smallest_nonkernel.map_or(s, |m| m.min(s)));
            }
        }
        CasimirBasis { vectors, threshold, sigma_max, smallest_nonkernel }
    }
}

/// Flips `a` so that its first entry that is not negligible is positive.
fn fix_sign(a: &mut [f64]) {
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(first) = a.iter().find(|x| x.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CasimirBasis {
    pub vectors: Vec<Vec<f64>>,
    pub threshold: f64,
    pub sigma_max: f64,
    /// Smallest singular value that was kept out of the kernel.
    pub smallest_nonkernel: Option<f64>,
}

impl CasimirBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Warning text when the rank decision sits close to the threshold.
    pub fn near_singular_warning(&self) -> Option<String> {
        match self.smallest_nonkernel {
            Some(s) if s < NEAR_SINGULAR => Some(format!(
                "near-singular M: smallest non-kernel singular value {s:e} is below {NEAR_SINGULAR:e}; \
                 kernel dimension and leaf type are unstable"
            )),
            _ => None,
        }
    }

    pub fn values(&self, h: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|a| dot(a, h)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `I_a(h) = <a, h>`.
pub fn casimir_value(a: &[f64], h: &[f64]) -> Result<f64> {
    if a.len() != h.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: h.len() });
    }
    Ok(dot(a, h))
}

/// `({I_a, h_i})_i` on the slice where the second-level coordinates equal
/// `M`, computed from the structure constants.
pub fn casimir_brackets(table: &BracketTable, m: &SkewMatrix, a: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    let spec = table.spec();
    let k = spec.rank();
    if m.spec() != spec {
        return Err(Error::DimensionMismatch { expected: k, got: m.k() });
    }
    if a.len() != k || h.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: a.len().min(h.len()) });
    }
    let n = spec.dim();
    let mut lambda = h.to_vec();
    lambda.extend(m.upper());
    let mut f = a.to_vec();
    f.resize(n, 0.0);
    (0..k)
        .map(|i| {
            let mut g = vec![0.0; n];
            g[i] = 1.0;
            table.poisson_bracket(&f, &g, &lambda)
        })
        .collect()
}

/// Symplectic leaf through a point of `L*` for `k = 3`.
#[derive(Debug, Clone, PartialEq)]
pub enum LeafClass {
    /// `M != 0`: level set of the Casimir `I_a` inside the slice `h_ij = const`.
    TwoDim { casimir: [f64; 3], level: f64, h_ij: [f64; 3] },
    /// `M = 0`: a single point.
    ZeroDim { point: [f64; 3] },
}

impl LeafClass {
    pub fn dimension(&self) -> usize {
        match self {
            LeafClass::TwoDim { .. } => 2,
            LeafClass::ZeroDim { .. } => 0,
        }
    }
}

pub fn leaf_classify(m: &SkewMatrix, h: &[f64]) -> Result<LeafClass> {
    if m.k() != 3 {
        return Err(Error::UnsupportedRank(m.k()));
    }
    if h.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: h.len() });
    }
    let basis = m.kernel_basis(KERNEL_TOL);
    let point = [h[0], h[1], h[2]];
    if basis.dim() == 3 {
        return Ok(LeafClass::ZeroDim { point });
    }
    debug_assert_eq!(basis.dim(), 1, "rank of a nonzero 3x3 skew matrix is 2");
    let a = &basis.vectors[0];
    let upper = m.upper();
    Ok(LeafClass::TwoDim {
        casimir: [a[0], a[1], a[2]],
        level: dot(a, h),
        h_ij: [upper[0], upper[1], upper[2]],
    })
}
