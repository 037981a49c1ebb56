//! Dense row-major f64 tensors. Everything in this crate is double
//! precision; the nets are tiny and exactness matters more than speed.

/// Row-major tensor. Rank 1 for activations, rank 2 for weight matrices,
/// shape `[1]` for scalars such as losses.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn from_shape(shape: Vec<usize>, data: Vec<f64>) -> Self {
        let expect: usize = shape.iter().product();
        assert_eq!(
            expect,
            data.len(),
            "tensor shape {shape:?} wants {expect} elements, got {}",
            data.len()
        );
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        Self::from_shape(vec![rows, cols], data)
    }

    /// One-hot vector of length `n`; `hot` must be in range.
    pub fn one_hot(n: usize, hot: usize) -> Self {
        assert!(hot < n, "one_hot index {hot} out of range for length {n}");
        let mut data = vec![0.0; n];
        data[hot] = 1.0;
        Self::vector(data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// Value of a scalar tensor; panics on anything longer.
    pub fn item(&self) -> f64 {
        assert!(self.is_scalar(), "item() on shape {:?}", self.shape);
        self.data[0]
    }

    /// Rows of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "rows() on shape {:?}", self.shape);
        self.shape[0]
    }

    /// Cols of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "cols() on shape {:?}", self.shape);
        self.shape[1]
    }

    /// Index of the largest entry; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        assert!(!self.data.is_empty(), "argmax of empty tensor");
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate().skip(1) {
            if v > self.data[best] {
                best = i;
            }
        }
        best
    }
}

/// Numerically stable softmax of a slice (max subtraction before exp).
pub fn softmax_slice(logits: &[f64]) -> Vec<f64> {
    assert!(!logits.is_empty(), "softmax of empty slice");
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}
