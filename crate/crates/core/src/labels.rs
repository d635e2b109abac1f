use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::graph::header_value;

/// Per-node class labels with a known-label mask and optional soft rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelData {
    classes: usize,
    labels: Vec<usize>,
    mask: Vec<bool>,
    soft: Option<Dense>,
}

pub const SOFT_ROW_TOL: f64 = 1e-9;

/// Which label rows feed the filter and the similarity term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// One-hot rows; `I(v)` is the filtered mass on the node's own class.
    #[default]
    Hard,
    /// Soft rows; `I(v)` is the inner product of the soft row with the
    /// filtered row. Extension beyond the one-hot formulation.
    Soft,
}

impl LabelData {
    /// Every node labeled.
    pub fn from_classes(classes: usize, labels: Vec<usize>) -> Result<Self> {
        let mask = vec![true; labels.len()];
        Self::with_mask(classes, labels, mask)
    }

    /// Labels of nodes with `mask[v] == false` are ignored (stored as 0).
    pub fn with_mask(classes: usize, mut labels: Vec<usize>, mask: Vec<bool>) -> Result<Self> {
        if classes == 0 {
            return Err(Error::Validation("class count must be positive".into()));
        }
        if labels.len() != mask.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} mask entries", labels.len()),
                got: mask.len().to_string(),
            });
        }
        for (v, (l, &m)) in labels.iter_mut().zip(&mask).enumerate() {
            if !m {
                *l = 0;
            } else if *l >= classes {
                return Err(Error::Validation(format!(
                    "node {v} has class {l}, but only {classes} classes are declared"
                )));
            }
        }
        Ok(LabelData {
            classes,
            labels,
            mask,
            soft: None,
        })
    }

    /// Attaches an `n x c` row-stochastic matrix. Rows of unmasked nodes must be
    /// all zero; masked rows must be non-negative and sum to 1.
    pub fn with_soft(mut self, soft: Dense) -> Result<Self> {
        if soft.rows() != self.len() || soft.cols() != self.classes {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.len(), self.classes),
                got: format!("{}x{}", soft.rows(), soft.cols()),
            });
        }
        for v in 0..self.len() {
            let row = soft.row(v);
            if self.mask[v] {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > SOFT_ROW_TOL {
                    return Err(Error::Validation(format!(
                        "soft label row of node {v} is not a probability vector (sum {sum})"
                    )));
                }
            } else if row.iter().any(|&p| p != 0.0) {
                return Err(Error::Validation(format!(
                    "node {v} is unlabeled but has a nonzero soft row"
                )));
            }
        }
        self.soft = Some(soft);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn class_of(&self, v: usize) -> Option<usize> {
        self.mask[v].then(|| self.labels[v])
    }

    pub fn is_labeled(&self, v: usize) -> bool {
        self.mask[v]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn soft(&self) -> Option<&Dense> {
        self.soft.as_ref()
    }

    pub fn labeled_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// The matrix that gets filtered under `mode`.
    pub fn matrix(&self, mode: LabelMode) -> Result<Dense> {
        match mode {
            LabelMode::Hard => Ok(self.one_hot()),
            LabelMode::Soft => self.soft.clone().ok_or_else(|| {
                Error::Validation("soft label mode requires soft labels".into())
            }),
        }
    }

    /// One-hot `L`; unlabeled rows are zero.
    pub fn one_hot(&self) -> Dense {
        let mut l = Dense::zeros(self.len(), self.classes);
        for v in 0..self.len() {
            if self.mask[v] {
                l[(v, self.labels[v])] = 1.0;
            }
        }
        l
    }
}

/// Parses `node class` lines. A `# classes=c` (or bare `classes=c`) header fixes
/// the class count; otherwise it is `max class + 1`. Unlisted nodes are unlabeled.
pub fn load_labels(text: &str, n: usize) -> Result<LabelData> {
    let mut declared = None;
    let mut labels = vec![0usize; n];
    let mut mask = vec![false; n];
    let mut max_class = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let header = header_value(raw, "classes")
            .or_else(|| header_value(&format!("#{}", raw.trim()), "classes"));
        if let Some(h) = header {
            declared = Some(h.map_err(|msg| Error::Parse { line: line_no, msg })?);
            continue;
        }
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected `node class`, got {line:?}"),
            });
        }
        let parse = |t: &str, what: &str| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("{what} {t:?} is not a non-negative integer"),
            })
        };
        let v = parse(toks[0], "node")?;
        let c = parse(toks[1], "class")?;
        if v >= n {
            return Err(Error::Validation(format!(
                "line {line_no}: node {v} outside 0..{n}"
            )));
        }
        if mask[v] && labels[v] != c {
            return Err(Error::Validation(format!(
                "line {line_no}: node {v} labeled twice with different classes"
            )));
        }
        labels[v] = c;
        mask[v] = true;
        max_class = Some(max_class.map_or(c, |m: usize| m.max(c)));
    }
    let classes = match (declared, max_class) {
        (Some(d), Some(m)) if m >= d => {
            return Err(Error::Validation(format!(
                "class {m} out of range for classes={d}"
            )))
        }
        (Some(d), _) => d,
        (None, Some(m)) => m + 1,
        (None, None) => {
            return Err(Error::Validation(
                "label file has no labels and no classes= header".into(),
            ))
        }
    };
    LabelData::with_mask(classes, labels, mask)
}

/// Parses a soft-label TSV (`node p_0 .. p_{c-1}` per line, `#` comments).
/// The hard view is the row argmax, ties to the lowest class id.
pub fn load_soft_labels(text: &str, n: usize) -> Result<LabelData> {
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let v: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "missing node id".into(),
            })?;
        let probs = toks
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad probability: {e}"),
            })?;
        if probs.is_empty() || width.is_some_and(|w| w != probs.len()) {
            return Err(Error::Parse {
                line: line_no,
                msg: "inconsistent number of class columns".into(),
            });
        }
        width = Some(probs.len());
        if v >= n {
            return Err(Error::Validation(format!(
                "line {line_no}: node {v} outside 0..{n}"
            )));
        }
        rows[v] = Some(probs);
    }
    let c = width.ok_or_else(|| Error::Validation("soft label file is empty".into()))?;
    let mut soft = Dense::zeros(n, c);
    let mut labels = vec![0; n];
    let mut mask = vec![false; n];
    for (v, row) in rows.into_iter().enumerate() {
        if let Some(row) = row {
            labels[v] = argmax(&row);
            mask[v] = true;
            soft.row_mut(v).copy_from_slice(&row);
        }
    }
    LabelData::with_mask(c, labels, mask)?.with_soft(soft)
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}
