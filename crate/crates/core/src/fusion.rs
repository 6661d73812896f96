//! Cross-modal fusion kernels: selective attention (text queries over video
//! frames) and bidirectional text/video attention, forward passes plus the
//! analytic gradient of a sum-of-outputs probe for finite-difference checks.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let data = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// `self · other`
    pub fn matmul(&self, other: &Matrix<T>) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`, i.e. all pairwise row dot products.
    pub fn matmul_t(&self, other: &Matrix<T>) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "row dimensions differ: {} vs {}",
                self.cols, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.rows, |i, j| dot(self.row(i), other.row(j))))
    }

    pub fn scale(&self, s: T) -> Self {
        Matrix {
            data: self.data.iter().map(|&x| x * s).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Matrix<T>) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix {
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
            ..self.clone()
        })
    }

    /// Softmax of every row, with the row maximum subtracted first.
    pub fn softmax_rows(&self) -> Self {
        let mut out = self.clone();
        for r in 0..self.rows {
            softmax_in_place(&mut out.data[r * self.cols..(r + 1) * self.cols]);
        }
        out
    }

    /// Softmax of every column.
    pub fn softmax_cols(&self) -> Self {
        self.transpose().softmax_rows().transpose()
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|r| self.row(r).iter().copied().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.cols];
        for r in 0..self.rows {
            for (s, &x) in sums.iter_mut().zip(self.row(r)) {
                *s = *s + x;
            }
        }
        sums
    }

    /// Parses `rows cols` followed by row-major values, whitespace separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut dim = |what: &str| -> Result<usize> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(1, format!("expected {what} count in header")))
        };
        let rows = dim("row")?;
        let cols = dim("column")?;
        let data = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Invalid(format!("bad matrix value `{t}`")))
            })
            .collect::<Result<Vec<T>>>()?;
        Self::new(rows, cols, data)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|x| x.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn softmax_in_place<T: Scalar>(v: &mut [T]) {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        total = total + *x;
    }
    for x in v.iter_mut() {
        *x = *x / total;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Text,
    Video,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Text => "text",
            Modality::Video => "video",
        })
    }
}

/// Token representations (text) or frame/region features (video); rows are
/// positions, columns the shared model dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub matrix: Matrix<T>,
    pub modality: Modality,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn text(matrix: Matrix<T>) -> Result<Self> {
        Self::with_modality(matrix, Modality::Text)
    }

    pub fn video(matrix: Matrix<T>) -> Result<Self> {
        Self::with_modality(matrix, Modality::Video)
    }

    fn with_modality(matrix: Matrix<T>, modality: Modality) -> Result<Self> {
        if matrix.rows == 0 || matrix.cols == 0 {
            return Err(Error::Dimension(format!(
                "{modality} features must be non-empty, got {}x{}",
                matrix.rows, matrix.cols
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite(format!("{modality} features")));
        }
        Ok(FeatureMatrix { matrix, modality })
    }

    pub fn len(&self) -> usize {
        self.matrix.rows
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows == 0
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols
    }
}

fn check_pair<T: Scalar>(text: &FeatureMatrix<T>, video: &FeatureMatrix<T>) -> Result<()> {
    if text.modality != Modality::Text {
        return Err(Error::Modality(format!("expected text features, got {}", text.modality)));
    }
    if video.modality != Modality::Video {
        return Err(Error::Modality(format!("expected video features, got {}", video.modality)));
    }
    if text.dim() != video.dim() {
        return Err(Error::Dimension(format!(
            "text dimension {} differs from video dimension {}",
            text.dim(),
            video.dim()
        )));
    }
    if !text.matrix.is_finite() || !video.matrix.is_finite() {
        return Err(Error::NonFinite("fusion input".into()));
    }
    Ok(())
}

/// Single-head attention with text as query and video as key and value:
/// `softmax_L(H_e · H_Vᵀ / √d) · H_V`, an N×d matrix.
pub fn selective_attention<T: Scalar>(
    text: &FeatureMatrix<T>,
    video: &FeatureMatrix<T>,
) -> Result<FeatureMatrix<T>> {
    let weights = selective_weights(text, video)?;
    Ok(FeatureMatrix {
        matrix: weights.matmul(&video.matrix)?,
        modality: Modality::Video,
    })
}

/// The N×L row-stochastic attention of text tokens over video frames.
pub fn selective_weights<T: Scalar>(
    text: &FeatureMatrix<T>,
    video: &FeatureMatrix<T>,
) -> Result<Matrix<T>> {
    check_pair(text, video)?;
    let scale = T::one() / T::from_count(text.dim()).sqrt();
    Ok(text.matrix.matmul_t(&video.matrix)?.scale(scale).softmax_rows())
}

/// Scalar function applied to each text/video dot product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreFn {
    #[default]
    Identity,
    /// Divides by `√d`.
    Scaled,
}

impl ScoreFn {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreFn::Identity => "identity",
            ScoreFn::Scaled => "scaled",
        }
    }

    fn factor<T: Scalar>(self, dim: usize) -> T {
        match self {
            ScoreFn::Identity => T::one(),
            ScoreFn::Scaled => T::one() / T::from_count(dim).sqrt(),
        }
    }
}

impl FromStr for ScoreFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "identity" => Ok(ScoreFn::Identity),
            "scaled" => Ok(ScoreFn::Scaled),
            other => Err(Error::UnknownScoreFn(other.to_string())),
        }
    }
}

/// N×L alignment matrix `S[n, l] = g(h_n · a_l)`.
pub fn alignment_scores<T: Scalar>(
    text: &FeatureMatrix<T>,
    video: &FeatureMatrix<T>,
    g: ScoreFn,
) -> Result<Matrix<T>> {
    check_pair(text, video)?;
    Ok(text
        .matrix
        .matmul_t(&video.matrix)?
        .scale(g.factor(text.dim())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput<T> {
    /// Rows `h̄_n = h_n + Σ_l w_t2v[n, l] a_l`.
    pub text_enhanced: Matrix<T>,
    /// Rows `ā_l = a_l + Σ_n w_v2t[n, l] h_n`.
    pub video_enhanced: Matrix<T>,
    /// Row-wise softmax of S (N×L).
    pub weights_t2v: Matrix<T>,
    /// Column-wise softmax of S (N×L).
    pub weights_v2t: Matrix<T>,
}

/// Bidirectional attention with residual connections. `video` may be the
/// raw L×d frame features or the N×d selective-attention output; only the
/// shared dimension is required.
pub fn bi_attention<T: Scalar>(
    text: &FeatureMatrix<T>,
    video: &FeatureMatrix<T>,
    g: ScoreFn,
) -> Result<FusionOutput<T>> {
    let s = alignment_scores(text, video, g)?;
    let weights_t2v = s.softmax_rows();
    let weights_v2t = s.softmax_cols();
    let text_enhanced = text.matrix.add(&weights_t2v.matmul(&video.matrix)?)?;
    let video_enhanced = video
        .matrix
        .add(&weights_v2t.transpose().matmul(&text.matrix)?)?;
    Ok(FusionOutput {
        text_enhanced,
        video_enhanced,
        weights_t2v,
        weights_v2t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionOp {
    AlignmentScores,
    SelectiveAttention,
    BiAttention,
}

impl FromStr for FusionOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "align" | "alignment" => Ok(FusionOp::AlignmentScores),
            "selattn" => Ok(FusionOp::SelectiveAttention),
            "biattn" => Ok(FusionOp::BiAttention),
            other => Err(Error::Invalid(format!("unknown fusion op `{other}`"))),
        }
    }
}

/// Sum of every output entry of `op`; the scalar the gradient check probes.
pub fn probe<T: Scalar>(
    op: FusionOp,
    text: &FeatureMatrix<T>,
    video: &FeatureMatrix<T>,
    g: ScoreFn,
) -> Result<T> {
    Ok(match op {
        FusionOp::AlignmentScores => alignment_scores(text, video, g)?.sum(),
        FusionOp::SelectiveAttention => selective_attention(text, video)?.matrix.sum(),
        FusionOp::BiAttention => {
            let out = bi_attention(text, video, g)?;
            out.text_enhanced.sum() + out.video_enhanced.sum()
        }
    })
}

/// Backward pass of a row softmax: given weights `w` and upstream gradient
/// `gw`, returns `w ⊙ (gw − rowsum(w ⊙ gw))`.
fn softmax_rows_backward<T: Scalar>(w: &Matrix<T>, gw: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(w.rows, w.cols);
    for r in 0..w.rows {
        let inner = dot(w.row(r), gw.row(r));
        for c in 0..w.cols {
            out.set(r, c, w.get(r, c) * (gw.get(r, c) - inner));
        }
    }
    out
}

/// Analytic gradient of [`probe`] with respect to the text and video inputs.
pub fn probe_gradient<T: Scalar>(
    op: FusionOp,
    text: &FeatureMatrix<T>,
    video: &FeatureMatrix<T>,
    g: ScoreFn,
) -> Result<(Matrix<T>, Matrix<T>)> {
    check_pair(text, video)?;
    let h = &text.matrix;
    let v = &video.matrix;
    let (n, l, d) = (h.rows, v.rows, h.cols);
    match op {
        FusionOp::AlignmentScores => {
            let c = g.factor::<T>(d);
            let vsum = v.col_sums();
            let hsum = h.col_sums();
            Ok((
                Matrix::from_fn(n, d, |_, k| c * vsum[k]),
                Matrix::from_fn(l, d, |_, k| c * hsum[k]),
            ))
        }
        FusionOp::SelectiveAttention => {
            let c = T::one() / T::from_count(d).sqrt();
            let w = selective_weights(text, video)?;
            let v_rows = v.row_sums();
            let gw = Matrix::from_fn(n, l, |_, j| v_rows[j]);
            let gz = softmax_rows_backward(&w, &gw).scale(c);
            let grad_h = gz.matmul(v)?;
            let w_cols = w.col_sums();
            let direct = Matrix::from_fn(l, d, |j, _| w_cols[j]);
            let grad_v = direct.add(&gz.transpose().matmul(h)?)?;
            Ok((grad_h, grad_v))
        }
        FusionOp::BiAttention => {
            let c = g.factor::<T>(d);
            let out = bi_attention(text, video, g)?;
            let (wt, wv) = (&out.weights_t2v, &out.weights_v2t);
            let v_rows = v.row_sums();
            let h_rows = h.row_sums();
            let gwt = Matrix::from_fn(n, l, |_, j| v_rows[j]);
            let gwv = Matrix::from_fn(n, l, |i, _| h_rows[i]);
            let gs_rows = softmax_rows_backward(wt, &gwt);
            let gs_cols = softmax_rows_backward(&wv.transpose(), &gwv.transpose()).transpose();
            let gz = gs_rows.add(&gs_cols)?.scale(c);

            let wv_rows = wv.row_sums();
            let wt_cols = wt.col_sums();
            let direct_h = Matrix::from_fn(n, d, |i, _| T::one() + wv_rows[i]);
            let direct_v = Matrix::from_fn(l, d, |j, _| T::one() + wt_cols[j]);
            let grad_h = direct_h.add(&gz.matmul(v)?)?;
            let grad_v = direct_v.add(&gz.transpose().matmul(h)?)?;
            Ok((grad_h, grad_v))
        }
    }
}

/// Central-difference gradient of the probe compared against the analytic
/// gradient. Returns the largest `|analytic − numeric| / max(1, |analytic|,
/// |numeric|)` over all text and video entries.
pub fn numeric_gradient_check<T: Scalar>(
    op: FusionOp,
    text: &FeatureMatrix<T>,
    video: &FeatureMatrix<T>,
    g: ScoreFn,
    epsilon: T,
) -> Result<T> {
    if !(epsilon > T::zero() && epsilon <= T::lit(1e-2)) {
        return Err(Error::Invalid(format!("epsilon {epsilon} outside (0, 1e-2]")));
    }
    let (grad_h, grad_v) = probe_gradient(op, text, video, g)?;
    let two = T::lit(2.0);
    let mut worst = T::zero();

    let mut perturb = |which: Modality, analytic: &Matrix<T>| -> Result<()> {
        let base = match which {
            Modality::Text => text,
            Modality::Video => video,
        };
        for idx in 0..base.matrix.data.len() {
            let eval = |delta: T| -> Result<T> {
                let mut m = base.clone();
                m.matrix.data[idx] = m.matrix.data[idx] + delta;
                match which {
                    Modality::Text => probe(op, &m, video, g),
                    Modality::Video => probe(op, text, &m, g),
                }
            };
            let numeric = (eval(epsilon)? - eval(-epsilon)?) / (two * epsilon);
            let exact = analytic.data[idx];
            if !numeric.is_finite() || !exact.is_finite() {
                return Err(Error::NonFinite("gradient".into()));
            }
            let denom = T::one().max(exact.abs()).max(numeric.abs());
            worst = worst.max((exact - numeric).abs() / denom);
        }
        Ok(())
    };
    perturb(Modality::Text, &grad_h)?;
    perturb(Modality::Video, &grad_v)?;
    Ok(worst)
}
