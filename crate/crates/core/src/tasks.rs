//! Learning tasks: datasets, losses, analytic gradients, and a central
//! finite-difference oracle for checking the gradients.
//!
//! Three task kinds are implemented: a three-parameter quadratic regression
//! (fit y = a·x² + b·x + c from raw x values), multinomial logistic
//! regression, and a one-hidden-layer tanh MLP with softmax output. All of
//! them expose their parameters as a single flat [`ParamVector`] and report
//! the mean loss/gradient over a batch of row indices.

use crate::params::{ParamError, ParamVector};
use crate::rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("parameter dimension {found} does not match task dimension {expected}")]
    ParamDim { expected: usize, found: usize },
    #[error("feature count {found} does not match task input dimension {expected}")]
    FeatureDim { expected: usize, found: usize },
    #[error("batch index {index} out of range for dataset with {n} samples")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("batch must contain at least one sample")]
    EmptyBatch,
    #[error("dataset must contain at least one sample")]
    EmptyDataset,
    #[error("feature matrix size {len} is not a multiple of the input dimension {input_dim}")]
    RaggedFeatures { len: usize, input_dim: usize },
    #[error("labels length {labels} does not match sample count {n}")]
    LabelCount { labels: usize, n: usize },
    #[error("classification requires class labels, dataset has real labels")]
    ClassLabelsRequired,
    #[error("regression requires real labels, dataset has class labels")]
    RealLabelsRequired,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("classification needs at least two classes, got {classes}")]
    TooFewClasses { classes: usize },
    #[error("model dimensions must be at least 1")]
    ZeroDimension,
    #[error("finite-difference step must be positive and finite, got {h}")]
    InvalidStep { h: f64 },
    #[error("x range [{low}, {high}] is empty")]
    EmptyRange { low: f64, high: f64 },
    #[error("csv row {row}: {message}")]
    CsvFormat { row: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Target values attached to a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Labels {
    /// Real-valued regression targets.
    Real(Vec<f64>),
    /// Class indices for classification.
    Class(Vec<usize>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Real(v) => v.len(),
            Labels::Class(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An immutable feature matrix plus labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    input_dim: usize,
    labels: Labels,
}

impl Dataset {
    /// Builds a dataset from a row-major feature buffer of width `input_dim`.
    pub fn new(features: Vec<f64>, input_dim: usize, labels: Labels) -> Result<Self, TaskError> {
        if input_dim == 0 {
            return Err(TaskError::ZeroDimension);
        }
        if features.len() % input_dim != 0 {
            return Err(TaskError::RaggedFeatures {
                len: features.len(),
                input_dim,
            });
        }
        let n = features.len() / input_dim;
        if n == 0 {
            return Err(TaskError::EmptyDataset);
        }
        if labels.len() != n {
            return Err(TaskError::LabelCount {
                labels: labels.len(),
                n,
            });
        }
        Ok(Self {
            features,
            input_dim,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len() / self.input_dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn class_labels(&self) -> Result<&[usize], TaskError> {
        match &self.labels {
            Labels::Class(v) => Ok(v),
            Labels::Real(_) => Err(TaskError::ClassLabelsRequired),
        }
    }

    pub fn real_labels(&self) -> Result<&[f64], TaskError> {
        match &self.labels {
            Labels::Real(v) => Ok(v),
            Labels::Class(_) => Err(TaskError::RealLabelsRequired),
        }
    }

    /// Copies the given rows (in order) into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, TaskError> {
        let mut features = Vec::with_capacity(indices.len() * self.input_dim);
        for &i in indices {
            if i >= self.len() {
                return Err(TaskError::IndexOutOfRange {
                    index: i,
                    n: self.len(),
                });
            }
            features.extend_from_slice(self.row(i));
        }
        let labels = match &self.labels {
            Labels::Real(v) => Labels::Real(indices.iter().map(|&i| v[i]).collect()),
            Labels::Class(v) => Labels::Class(indices.iter().map(|&i| v[i]).collect()),
        };
        Self::new(features, self.input_dim, labels)
    }
}

/// A batch: row indices into a dataset, evaluated in slice order.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub indices: &'a [usize],
}

impl<'a> Batch<'a> {
    pub fn new(indices: &'a [usize]) -> Self {
        Self { indices }
    }

    fn check(&self, data: &Dataset) -> Result<(), TaskError> {
        if self.indices.is_empty() {
            return Err(TaskError::EmptyBatch);
        }
        for &i in self.indices {
            if i >= data.len() {
                return Err(TaskError::IndexOutOfRange {
                    index: i,
                    n: data.len(),
                });
            }
        }
        Ok(())
    }
}

/// The learning problem being simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    /// Fit (a, b, c) of y = a·x² + b·x + c; features are raw x values.
    QuadraticRegression,
    /// Multinomial logistic regression with bias.
    LogisticRegression { classes: usize, input_dim: usize },
    /// One tanh hidden layer, then softmax cross-entropy.
    Mlp {
        input_dim: usize,
        hidden: usize,
        classes: usize,
    },
}

impl TaskKind {
    pub fn validate(&self) -> Result<(), TaskError> {
        match *self {
            TaskKind::QuadraticRegression => Ok(()),
            TaskKind::LogisticRegression { classes, input_dim } => {
                if input_dim == 0 {
                    Err(TaskError::ZeroDimension)
                } else if classes < 2 {
                    Err(TaskError::TooFewClasses { classes })
                } else {
                    Ok(())
                }
            }
            TaskKind::Mlp {
                input_dim,
                hidden,
                classes,
            } => {
                if input_dim == 0 || hidden == 0 {
                    Err(TaskError::ZeroDimension)
                } else if classes < 2 {
                    Err(TaskError::TooFewClasses { classes })
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Flat parameter count.
    pub fn param_dim(&self) -> usize {
        match *self {
            TaskKind::QuadraticRegression => 3,
            TaskKind::LogisticRegression { classes, input_dim } => classes * (input_dim + 1),
            TaskKind::Mlp {
                input_dim,
                hidden,
                classes,
            } => hidden * (input_dim + 1) + classes * (hidden + 1),
        }
    }

    pub fn is_classification(&self) -> bool {
        !matches!(self, TaskKind::QuadraticRegression)
    }

    /// Expected feature width of a compatible dataset.
    pub fn input_dim(&self) -> usize {
        match *self {
            TaskKind::QuadraticRegression => 1,
            TaskKind::LogisticRegression { input_dim, .. } => input_dim,
            TaskKind::Mlp { input_dim, .. } => input_dim,
        }
    }

    /// Initial model: zeros, except MLP weights which are drawn uniformly
    /// from ±sqrt(6/(fan_in+fan_out)) per layer (biases zero).
    pub fn init_params(&self, seed: u64) -> Result<ParamVector, TaskError> {
        self.validate()?;
        let mut theta = ParamVector::zeros(self.param_dim())?;
        if let TaskKind::Mlp {
            input_dim,
            hidden,
            classes,
        } = *self
        {
            let mut r = rng::stream(seed, "init", &[]);
            let out = theta.as_mut_slice();
            let s1 = (6.0 / (input_dim + hidden) as f64).sqrt();
            for w in &mut out[..hidden * input_dim] {
                *w = r.random_range(-s1..s1);
            }
            let s2 = (6.0 / (hidden + classes) as f64).sqrt();
            let w2_start = hidden * input_dim + hidden;
            for w in &mut out[w2_start..w2_start + classes * hidden] {
                *w = r.random_range(-s2..s2);
            }
        }
        Ok(theta)
    }

    fn check_inputs(&self, theta: &ParamVector, data: &Dataset) -> Result<(), TaskError> {
        self.validate()?;
        if theta.dim() != self.param_dim() {
            return Err(TaskError::ParamDim {
                expected: self.param_dim(),
                found: theta.dim(),
            });
        }
        if data.input_dim() != self.input_dim() {
            return Err(TaskError::FeatureDim {
                expected: self.input_dim(),
                found: data.input_dim(),
            });
        }
        if self.is_classification() {
            data.class_labels()?;
        } else {
            data.real_labels()?;
        }
        Ok(())
    }
}

/// Numerically stable softmax cross-entropy; returns the loss and overwrites
/// `logits` with the softmax probabilities.
fn softmax_ce(logits: &mut [f64], label: usize) -> Result<f64, TaskError> {
    if label >= logits.len() {
        return Err(TaskError::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let mut max = logits[0];
    for &z in &logits[1..] {
        if z > max {
            max = z;
        }
    }
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    let p_label = logits[label] / sum;
    for z in logits.iter_mut() {
        *z /= sum;
    }
    Ok(-p_label.ln())
}

struct LogisticLayout {
    classes: usize,
    input_dim: usize,
}

impl LogisticLayout {
    fn logits(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let d = self.input_dim;
        let bias_start = self.classes * d;
        for (c, o) in out.iter_mut().enumerate() {
            let w = &theta[c * d..(c + 1) * d];
            let mut acc = 0.0;
            for (wi, xi) in w.iter().zip(x) {
                acc += wi * xi;
            }
            *o = acc + theta[bias_start + c];
        }
    }
}

struct MlpLayout {
    input_dim: usize,
    hidden: usize,
    classes: usize,
}

impl MlpLayout {
    fn b1(&self) -> usize {
        self.hidden * self.input_dim
    }

    fn w2(&self) -> usize {
        self.b1() + self.hidden
    }

    fn b2(&self) -> usize {
        self.w2() + self.classes * self.hidden
    }

    /// Fills `hidden_out` with tanh activations and `logits` with the output
    /// layer pre-activations.
    fn forward(&self, theta: &[f64], x: &[f64], hidden_out: &mut [f64], logits: &mut [f64]) {
        let d = self.input_dim;
        for (j, h) in hidden_out.iter_mut().enumerate() {
            let w = &theta[j * d..(j + 1) * d];
            let mut acc = 0.0;
            for (wi, xi) in w.iter().zip(x) {
                acc += wi * xi;
            }
            *h = (acc + theta[self.b1() + j]).tanh();
        }
        let w2 = self.w2();
        for (c, o) in logits.iter_mut().enumerate() {
            let w = &theta[w2 + c * self.hidden..w2 + (c + 1) * self.hidden];
            let mut acc = 0.0;
            for (wi, hi) in w.iter().zip(hidden_out.iter()) {
                acc += wi * hi;
            }
            *o = acc + theta[self.b2() + c];
        }
    }
}

/// Mean loss over the batch.
pub fn loss(task: &TaskKind, theta: &ParamVector, data: &Dataset, batch: Batch) -> Result<f64, TaskError> {
    task.check_inputs(theta, data)?;
    batch.check(data)?;
    let t = theta.as_slice();
    let mut total = 0.0;
    match *task {
        TaskKind::QuadraticRegression => {
            let y = data.real_labels()?;
            for &i in batch.indices {
                let x = data.row(i)[0];
                let pred = t[0] * x * x + t[1] * x + t[2];
                let r = pred - y[i];
                total += 0.5 * r * r;
            }
        }
        TaskKind::LogisticRegression { classes, input_dim } => {
            let labels = data.class_labels()?;
            let layout = LogisticLayout { classes, input_dim };
            let mut logits = vec![0.0; classes];
            for &i in batch.indices {
                layout.logits(t, data.row(i), &mut logits);
                total += softmax_ce(&mut logits, labels[i])?;
            }
        }
        TaskKind::Mlp {
            input_dim,
            hidden,
            classes,
        } => {
            let labels = data.class_labels()?;
            let layout = MlpLayout {
                input_dim,
                hidden,
                classes,
            };
            let mut h = vec![0.0; hidden];
            let mut logits = vec![0.0; classes];
            for &i in batch.indices {
                layout.forward(t, data.row(i), &mut h, &mut logits);
                total += softmax_ce(&mut logits, labels[i])?;
            }
        }
    }
    Ok(total / batch.indices.len() as f64)
}

/// Analytic gradient of [`loss`], mean over the batch.
pub fn grad(task: &TaskKind, theta: &ParamVector, data: &Dataset, batch: Batch) -> Result<ParamVector, TaskError> {
    task.check_inputs(theta, data)?;
    batch.check(data)?;
    let t = theta.as_slice();
    let mut g = ParamVector::zeros(task.param_dim())?;
    let out = g.as_mut_slice();
    match *task {
        TaskKind::QuadraticRegression => {
            let y = data.real_labels()?;
            for &i in batch.indices {
                let x = data.row(i)[0];
                let r = t[0] * x * x + t[1] * x + t[2] - y[i];
                out[0] += r * x * x;
                out[1] += r * x;
                out[2] += r;
            }
        }
        TaskKind::LogisticRegression { classes, input_dim } => {
            let labels = data.class_labels()?;
            let layout = LogisticLayout { classes, input_dim };
            let mut p = vec![0.0; classes];
            let bias_start = classes * input_dim;
            for &i in batch.indices {
                let x = data.row(i);
                layout.logits(t, x, &mut p);
                softmax_ce(&mut p, labels[i])?;
                p[labels[i]] -= 1.0;
                for (c, &delta) in p.iter().enumerate() {
                    let w = &mut out[c * input_dim..(c + 1) * input_dim];
                    for (wi, xi) in w.iter_mut().zip(x) {
                        *wi += delta * xi;
                    }
                    out[bias_start + c] += delta;
                }
            }
        }
        TaskKind::Mlp {
            input_dim,
            hidden,
            classes,
        } => {
            let labels = data.class_labels()?;
            let layout = MlpLayout {
                input_dim,
                hidden,
                classes,
            };
            let mut h = vec![0.0; hidden];
            let mut p = vec![0.0; classes];
            let mut dh = vec![0.0; hidden];
            let (b1, w2, b2) = (layout.b1(), layout.w2(), layout.b2());
            for &i in batch.indices {
                let x = data.row(i);
                layout.forward(t, x, &mut h, &mut p);
                softmax_ce(&mut p, labels[i])?;
                p[labels[i]] -= 1.0;
                for d in dh.iter_mut() {
                    *d = 0.0;
                }
                for (c, &delta) in p.iter().enumerate() {
                    let w_row = &t[w2 + c * hidden..w2 + (c + 1) * hidden];
                    let g_row = &mut out[w2 + c * hidden..w2 + (c + 1) * hidden];
                    for j in 0..hidden {
                        g_row[j] += delta * h[j];
                        dh[j] += delta * w_row[j];
                    }
                    out[b2 + c] += delta;
                }
                for j in 0..hidden {
                    let dz = dh[j] * (1.0 - h[j] * h[j]);
                    let g_row = &mut out[j * input_dim..(j + 1) * input_dim];
                    for (gi, xi) in g_row.iter_mut().zip(x) {
                        *gi += dz * xi;
                    }
                    out[b1 + j] += dz;
                }
            }
        }
    }
    let scale = 1.0 / batch.indices.len() as f64;
    g.scale(scale);
    Ok(g)
}

/// Central finite differences of [`loss`]: the oracle the analytic gradients
/// are checked against.
pub fn finite_diff_grad(
    task: &TaskKind,
    theta: &ParamVector,
    data: &Dataset,
    batch: Batch,
    h: f64,
) -> Result<ParamVector, TaskError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(TaskError::InvalidStep { h });
    }
    let mut g = ParamVector::zeros(task.param_dim().max(1))?;
    let mut probe = theta.clone();
    for k in 0..theta.dim() {
        let orig = probe[k];
        probe[k] = orig + h;
        let up = loss(task, &probe, data, batch)?;
        probe[k] = orig - h;
        let down = loss(task, &probe, data, batch)?;
        probe[k] = orig;
        g[k] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

/// Full-dataset metrics at `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    /// Top-1 accuracy; absent for regression tasks.
    pub accuracy: Option<f64>,
}

/// Mean loss over the whole dataset, plus top-1 accuracy for classification.
/// Argmax ties break toward the lowest class index.
pub fn evaluate(task: &TaskKind, theta: &ParamVector, data: &Dataset) -> Result<Evaluation, TaskError> {
    let all: Vec<usize> = (0..data.len()).collect();
    let mean_loss = loss(task, theta, data, Batch::new(&all))?;
    if !task.is_classification() {
        return Ok(Evaluation {
            loss: mean_loss,
            accuracy: None,
        });
    }
    let labels = data.class_labels()?;
    let t = theta.as_slice();
    let mut correct = 0usize;
    match *task {
        TaskKind::LogisticRegression { classes, input_dim } => {
            let layout = LogisticLayout { classes, input_dim };
            let mut logits = vec![0.0; classes];
            for i in 0..data.len() {
                layout.logits(t, data.row(i), &mut logits);
                if argmax(&logits) == labels[i] {
                    correct += 1;
                }
            }
        }
        TaskKind::Mlp {
            input_dim,
            hidden,
            classes,
        } => {
            let layout = MlpLayout {
                input_dim,
                hidden,
                classes,
            };
            let mut h = vec![0.0; hidden];
            let mut logits = vec![0.0; classes];
            for i in 0..data.len() {
                layout.forward(t, data.row(i), &mut h, &mut logits);
                if argmax(&logits) == labels[i] {
                    correct += 1;
                }
            }
        }
        TaskKind::QuadraticRegression => unreachable!(),
    }
    Ok(Evaluation {
        loss: mean_loss,
        accuracy: Some(correct as f64 / data.len() as f64),
    })
}

/// Index of the largest value; first occurrence wins on ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Quadratic-regression data: x equally spaced ascending over
/// [x_low, x_high], y = a·x² + b·x + c plus optional Gaussian noise.
pub fn generate_quadratic_dataset(
    n: usize,
    x_low: f64,
    x_high: f64,
    coeffs: (f64, f64, f64),
    noise_std: f64,
    seed: u64,
) -> Result<Dataset, TaskError> {
    if n == 0 {
        return Err(TaskError::EmptyDataset);
    }
    if !(x_low < x_high) {
        return Err(TaskError::EmptyRange {
            low: x_low,
            high: x_high,
        });
    }
    let (a, b, c) = coeffs;
    let mut r = rng::stream(seed, "quadratic-data", &[]);
    let noise = if noise_std > 0.0 {
        Some(Normal::new(0.0, noise_std).expect("positive std"))
    } else {
        None
    };
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let step = if n > 1 {
        (x_high - x_low) / (n - 1) as f64
    } else {
        0.0
    };
    for i in 0..n {
        let x = x_low + step * i as f64;
        let mut y = a * x * x + b * x + c;
        if let Some(dist) = &noise {
            y += dist.sample(&mut r);
        }
        xs.push(x);
        ys.push(y);
    }
    Dataset::new(xs, 1, Labels::Real(ys))
}

/// Balanced Gaussian class clusters: means drawn from a unit normal per
/// coordinate, samples spread around them with standard deviation
/// `cluster_spread`. Labels cycle 0..classes, so counts differ by at most 1.
pub fn generate_synthetic_classification(
    n: usize,
    input_dim: usize,
    classes: usize,
    cluster_spread: f64,
    seed: u64,
) -> Result<Dataset, TaskError> {
    if n == 0 {
        return Err(TaskError::EmptyDataset);
    }
    if input_dim == 0 {
        return Err(TaskError::ZeroDimension);
    }
    if classes < 2 {
        return Err(TaskError::TooFewClasses { classes });
    }
    let mut r = rng::stream(seed, "blob-data", &[]);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let means: Vec<f64> = (0..classes * input_dim).map(|_| unit.sample(&mut r)).collect();
    let mut features = Vec::with_capacity(n * input_dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % classes;
        let mean = &means[class * input_dim..(class + 1) * input_dim];
        for &m in mean {
            features.push(m + cluster_spread * unit.sample(&mut r));
        }
        labels.push(class);
    }
    Dataset::new(features, input_dim, Labels::Class(labels))
}

/// Which label column type to expect when importing a CSV dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Real,
    Class,
}

/// Writes the dataset as CSV: header `f0,...,f{d-1},label`, one sample per
/// row, reals formatted to round-trip exactly.
pub fn export_csv<W: io::Write>(data: &Dataset, writer: W) -> Result<(), TaskError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..data.input_dim()).map(|j| format!("f{j}")).collect();
    header.push("label".to_string());
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut record: Vec<String> = data
            .row(i)
            .iter()
            .map(|&v| crate::report::fmt_real(v))
            .collect();
        record.push(match data.labels() {
            Labels::Real(v) => crate::report::fmt_real(v[i]),
            Labels::Class(v) => v[i].to_string(),
        });
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`export_csv`].
pub fn import_csv<R: io::Read>(reader: R, labels: LabelKind) -> Result<Dataset, TaskError> {
    let mut r = csv::Reader::from_reader(reader);
    let width = r.headers()?.len();
    if width < 2 {
        return Err(TaskError::CsvFormat {
            row: 1,
            message: format!("expected at least 2 columns, found {width}"),
        });
    }
    let input_dim = width - 1;
    let mut features = Vec::new();
    let mut real = Vec::new();
    let mut class = Vec::new();
    for (idx, record) in r.records().enumerate() {
        let row = idx + 2;
        let record = record?;
        if record.len() != width {
            return Err(TaskError::CsvFormat {
                row,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for field in record.iter().take(input_dim) {
            features.push(field.parse::<f64>().map_err(|e| TaskError::CsvFormat {
                row,
                message: format!("bad feature {field:?}: {e}"),
            })?);
        }
        let label = &record[input_dim];
        match labels {
            LabelKind::Real => real.push(label.parse::<f64>().map_err(|e| TaskError::CsvFormat {
                row,
                message: format!("bad label {label:?}: {e}"),
            })?),
            LabelKind::Class => class.push(label.parse::<usize>().map_err(|e| {
                TaskError::CsvFormat {
                    row,
                    message: format!("bad class label {label:?}: {e}"),
                }
            })?),
        }
    }
    let labels = match labels {
        LabelKind::Real => Labels::Real(real),
        LabelKind::Class => Labels::Class(class),
    };
    Dataset::new(features, input_dim, labels)
}
