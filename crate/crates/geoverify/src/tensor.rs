//! Small dense tensors over one chart dimension.
//!
//! Ranks above two show up all over the connection and torsion code
//! (Christoffel arrays, curvature, covariant derivatives of 3-forms).
//! Dimensions never exceed single digits, so flat `Vec<f64>` storage with
//! row-major indexing is both simple and fast enough.

/// Rank-3 tensor, all axes of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Tensor3 { dim, data: vec![0.0; dim * dim * dim] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        assert_eq!(self.dim, other.dim);
        Tensor3 {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Tensor3 {
        Tensor3 { dim: self.dim, data: self.data.iter().map(|v| c * v).collect() }
    }

    pub fn add(&self, other: &Tensor3) -> Tensor3 {
        assert_eq!(self.dim, other.dim);
        Tensor3 {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Rank-4 tensor, all axes of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Tensor4 { dim, data: vec![0.0; dim * dim * dim * dim] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[((i * self.dim + j) * self.dim + k) * self.dim + l] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[((i * self.dim + j) * self.dim + k) * self.dim + l] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Tensor4) -> Tensor4 {
        assert_eq!(self.dim, other.dim);
        Tensor4 {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Rank-5 tensor, all axes of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor5 {
    pub dim: usize,
    data: Vec<f64>,
}

impl Tensor5 {
    pub fn zeros(dim: usize) -> Self {
        Tensor5 { dim, data: vec![0.0; dim.pow(5)] }
    }

    #[inline]
    pub fn get(&self, m: usize, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[(((m * self.dim + i) * self.dim + j) * self.dim + k) * self.dim + l]
    }

    #[inline]
    pub fn set(&mut self, m: usize, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.data[(((m * self.dim + i) * self.dim + j) * self.dim + k) * self.dim + l] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Dense alternating form of arbitrary (small) rank. Stores all `dim^rank`
/// components; constructors keep the data fully antisymmetric so consumers
/// can index any tuple without sign bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiForm {
    pub dim: usize,
    pub rank: usize,
    data: Vec<f64>,
}

/// Sign of the permutation sorting `idx`, or 0 if an index repeats.
pub fn perm_sign(idx: &[usize]) -> i32 {
    let mut v = idx.to_vec();
    let mut sign = 1;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            if v[i] == v[j] {
                return 0;
            }
            if v[i] > v[j] {
                v.swap(i, j);
                sign = -sign;
            }
        }
    }
    sign
}

impl MultiForm {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        MultiForm { dim, rank, data: vec![0.0; dim.pow(rank as u32)] }
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    /// Sets the component on `idx` and every permutation of it, with signs.
    /// `idx` must have pairwise distinct entries.
    pub fn set_antisym(&mut self, idx: &[usize], v: f64) {
        assert_ne!(perm_sign(idx), 0, "repeated index in alternating form");
        let dim = self.dim;
        let rank = self.rank;
        let mut tuple = vec![0usize; rank];
        // walk all rank-tuples that are permutations of idx
        let sorted: Vec<usize> = {
            let mut s = idx.to_vec();
            s.sort_unstable();
            s
        };
        let base_sign = perm_sign(idx) as f64;
        self.for_each_tuple_mut(&mut tuple, 0, &mut |form, tuple| {
            let mut st = tuple.to_vec();
            st.sort_unstable();
            if st == sorted {
                let s = perm_sign(tuple) as f64;
                let off = tuple.iter().fold(0, |acc, &i| acc * dim + i);
                form.data[off] = s * base_sign * v;
            }
        });
    }

    fn for_each_tuple_mut(
        &mut self,
        tuple: &mut Vec<usize>,
        depth: usize,
        f: &mut impl FnMut(&mut MultiForm, &[usize]),
    ) {
        if depth == self.rank {
            let t = tuple.clone();
            f(self, &t);
            return;
        }
        for i in 0..self.dim {
            tuple[depth] = i;
            self.for_each_tuple_mut(tuple, depth + 1, f);
        }
    }

    /// All strictly increasing index tuples of this form's rank.
    pub fn increasing_tuples(dim: usize, rank: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(rank);
        fn rec(dim: usize, rank: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == rank {
                out.push(cur.clone());
                return;
            }
            for i in start..dim {
                cur.push(i);
                rec(dim, rank, i + 1, cur, out);
                cur.pop();
            }
        }
        rec(dim, rank, 0, &mut cur, &mut out);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &MultiForm) -> f64 {
        assert_eq!((self.dim, self.rank), (other.dim, other.rank));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scale(&self, c: f64) -> MultiForm {
        MultiForm { dim: self.dim, rank: self.rank, data: self.data.iter().map(|v| c * v).collect() }
    }

    pub fn add(&self, other: &MultiForm) -> MultiForm {
        assert_eq!((self.dim, self.rank), (other.dim, other.rank));
        MultiForm {
            dim: self.dim,
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// Largest deviation from full antisymmetry: compares every component
    /// against the signed component on the sorted tuple.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        let mut tuple = vec![0usize; self.rank];
        let mut done = false;
        while !done {
            let s = perm_sign(&tuple);
            let val = self.get(&tuple);
            if s == 0 {
                defect = defect.max(val.abs());
            } else {
                let mut sorted = tuple.clone();
                sorted.sort_unstable();
                let canon = self.get(&sorted);
                defect = defect.max((val - s as f64 * canon).abs());
            }
            // advance odometer
            done = true;
            for d in (0..self.rank).rev() {
                tuple[d] += 1;
                if tuple[d] < self.dim {
                    done = false;
                    break;
                }
                tuple[d] = 0;
            }
            if self.rank == 0 {
                break;
            }
        }
        defect
    }
}

/// Wedge product of alternating forms using the shuffle convention
/// (a ∧ b)(v_1..v_{p+q}) = Σ_shuffles sgn · a(..) b(..), so that
/// e^1 ∧ e^2 has component +1 on (1,2).
pub fn wedge(a: &MultiForm, b: &MultiForm) -> MultiForm {
    assert_eq!(a.dim, b.dim);
    let (p, q) = (a.rank, b.rank);
    let mut out = MultiForm::zeros(a.dim, p + q);
    let shuffles = shuffle_splits(p + q, p);
    for tuple in MultiForm::increasing_tuples(a.dim, p + q) {
        let mut v = 0.0;
        for (left, right, sign) in &shuffles {
            let ia: Vec<usize> = left.iter().map(|&m| tuple[m]).collect();
            let ib: Vec<usize> = right.iter().map(|&m| tuple[m]).collect();
            v += *sign as f64 * a.get(&ia) * b.get(&ib);
        }
        out.set_antisym(&tuple, v);
    }
    out
}

/// All ways to split positions 0..n into an increasing p-subset and its
/// complement, with the shuffle sign.
fn shuffle_splits(n: usize, p: usize) -> Vec<(Vec<usize>, Vec<usize>, i32)> {
    let mut out = Vec::new();
    for left in MultiForm::increasing_tuples(n, p) {
        let right: Vec<usize> = (0..n).filter(|i| !left.contains(i)).collect();
        let mut concat = left.clone();
        concat.extend(&right);
        out.push((left, right, perm_sign(&concat)));
    }
    out
}
