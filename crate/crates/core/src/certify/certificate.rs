use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltlf::Quantifier;
use crate::oracle::{Mode, ValueTable};
use crate::product::ProductState;
use crate::scalar::Real;
use crate::trainer::Mlp;

pub const CERTIFICATE_FORMAT: &str = "obscert-certificate";
pub const CERTIFICATE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertMode {
    Universal,
    Existential,
}

impl From<Quantifier> for CertMode {
    fn from(q: Quantifier) -> Self {
        match q {
            Quantifier::Forall => CertMode::Universal,
            Quantifier::Exists => CertMode::Existential,
        }
    }
}

impl From<Mode> for CertMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Inf => CertMode::Universal,
            Mode::Sup => CertMode::Existential,
        }
    }
}

impl CertMode {
    pub fn is_universal(self) -> bool {
        self == CertMode::Universal
    }

    /// Combines candidate statistics: min for universal, max for existential.
    pub fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            CertMode::Universal => a.min(b),
            CertMode::Existential => a.max(b),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Backing<T = f64> {
    /// `max(u_t - delta, 0)` with multilinear interpolation.
    Table { table: ValueTable<T>, delta: f64 },
    Mlp(Mlp<T>),
}

/// A candidate terminal-reach barrier certificate `V(v, t) = raw(v, t) - offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate<T = f64> {
    pub backing: Backing<T>,
    pub alpha: f64,
    pub beta: f64,
    /// Constant subtracted from the backing's value.
    pub offset: f64,
    pub mode: CertMode,
    pub state_dim: usize,
    pub horizon: usize,
    pub num_q: usize,
    pub dfa_hash: String,
    pub provenance: Option<serde_json::Value>,
}

/// One evaluation query `(x1, x2, q, t)`.
#[derive(Clone, Copy, Debug)]
pub struct Query<'a> {
    pub x1: &'a [f64],
    pub x2: &'a [f64],
    pub q: usize,
    pub t: usize,
}

impl<T: Real> Certificate<T> {
    pub fn from_table(table: ValueTable<T>, delta: f64, dfa_hash: String) -> Self {
        Self {
            state_dim: table.dim(),
            horizon: table.horizon,
            num_q: table.num_q,
            mode: table.mode.into(),
            backing: Backing::Table { table, delta },
            alpha: 1.0,
            beta: 0.0,
            offset: 0.0,
            dfa_hash,
            provenance: None,
        }
    }

    pub fn from_mlp(mlp: Mlp<T>, mode: CertMode, beta: f64, dfa_hash: String) -> Self {
        Self {
            state_dim: mlp.state_dim,
            horizon: mlp.horizon,
            num_q: mlp.num_q,
            backing: Backing::Mlp(mlp),
            alpha: 1.0,
            beta,
            offset: 0.0,
            mode,
            dfa_hash,
            provenance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !self.beta.is_finite() || !self.offset.is_finite() {
            return Err(Error::NonFinite("certificate constants".into()));
        }
        match &self.backing {
            Backing::Mlp(m) => m.validate(),
            Backing::Table { delta, .. } if *delta < 0.0 => Err(Error::Config("safety margin must be nonnegative".into())),
            Backing::Table { .. } => Ok(()),
        }
    }

    fn raw(&self, q: &Query<'_>) -> f64 {
        match &self.backing {
            Backing::Table { table, delta } => (table.interpolate(q.t, q.q, q.x1, q.x2).as_f64() - delta).max(0.0),
            Backing::Mlp(m) => m.eval(q.x1, q.x2, q.q, q.t).as_f64(),
        }
    }

    fn check_time(&self, t: usize) -> Result<()> {
        if t > self.horizon {
            return Err(Error::TimeOutOfRange { t, horizon: self.horizon });
        }
        Ok(())
    }

    /// `V(v, t)`; the sink evaluates to 0.
    pub fn eval(&self, v: &ProductState, t: usize) -> Result<f64> {
        self.check_time(t)?;
        match v {
            ProductState::Sink => Ok(0.0),
            ProductState::Live { x1, x2, q } => Ok(self.raw(&Query { x1, x2, q: *q as usize, t }) - self.offset),
        }
    }

    /// Values for many queries; network backings run one batched pass.
    pub fn eval_many(&self, queries: &[Query<'_>]) -> Result<Vec<f64>> {
        for q in queries {
            self.check_time(q.t)?;
        }
        Ok(match &self.backing {
            Backing::Mlp(m) => {
                let width = m.input_dim();
                let mut inputs = vec![T::zero(); queries.len() * width];
                for (q, row) in queries.iter().zip(inputs.chunks_exact_mut(width)) {
                    m.encode(q.x1, q.x2, q.q, q.t, row);
                }
                m.forward(&inputs, queries.len()).into_iter().map(|v| v.as_f64() - self.offset).collect()
            }
            Backing::Table { .. } => queries.iter().map(|q| self.raw(q) - self.offset).collect(),
        })
    }

    /// `sum_{i<T} alpha^{-i}`.
    pub fn beta_multiplier(&self) -> f64 {
        (0..self.horizon).map(|i| self.alpha.powi(-(i as i32))).sum()
    }

    /// The closed-form probability bound for a given initial certificate value.
    pub fn bound_from_value(&self, v0: f64) -> f64 {
        v0 * self.alpha.powi(-(self.horizon as i32)) + self.beta * self.beta_multiplier()
    }

    /// Writes the certificate JSON to `path`; table backings also write a
    /// binary blob next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let (kind, weights, table) = match &self.backing {
            Backing::Mlp(m) => ("mlp", Some(m.cast::<f64>()), None),
            Backing::Table { table, delta } => {
                let blob = path.with_extension("table.bin");
                let mut file = std::io::BufWriter::new(fs::File::create(&blob)?);
                table.write_binary(&mut file)?;
                let name = blob.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
                ("table", None, Some(TableRef { blob: name, delta: *delta, interpolation: "multilinear".into() }))
            }
        };
        let file = CertificateFile {
            format: CERTIFICATE_FORMAT.into(),
            version: CERTIFICATE_VERSION,
            kind: kind.into(),
            alpha: self.alpha,
            beta: self.beta,
            offset: self.offset,
            mode: self.mode,
            dims: self.state_dim,
            horizon: self.horizon,
            num_q: self.num_q,
            dfa_hash: self.dfa_hash.clone(),
            weights,
            table,
            provenance: self.provenance.clone(),
        };
        fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: CertificateFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        if file.format != CERTIFICATE_FORMAT || file.version != CERTIFICATE_VERSION {
            return Err(Error::Format(format!("unsupported certificate {} v{}", file.format, file.version)));
        }
        let backing = match (file.kind.as_str(), file.weights, file.table) {
            ("mlp", Some(m), _) => Backing::Mlp(m.cast()),
            ("table", _, Some(t)) => {
                let blob = path.parent().unwrap_or(Path::new(".")).join(&t.blob);
                let table = ValueTable::<f64>::read_binary(std::io::BufReader::new(fs::File::open(blob)?))?;
                let table = ValueTable {
                    values: table.values.iter().map(|v| T::lit(*v)).collect(),
                    region: table.region,
                    per_dim: table.per_dim,
                    horizon: table.horizon,
                    num_q: table.num_q,
                    mode: table.mode,
                };
                Backing::Table { table, delta: t.delta }
            }
            (k, _, _) => return Err(Error::Format(format!("certificate kind {k} lacks its payload"))),
        };
        let cert = Self {
            backing,
            alpha: file.alpha,
            beta: file.beta,
            offset: file.offset,
            mode: file.mode,
            state_dim: file.dims,
            horizon: file.horizon,
            num_q: file.num_q,
            dfa_hash: file.dfa_hash,
            provenance: file.provenance,
        };
        cert.validate()?;
        Ok(cert)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRef {
    blob: String,
    delta: f64,
    interpolation: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateFile {
    format: String,
    version: u32,
    kind: String,
    alpha: f64,
    beta: f64,
    offset: f64,
    mode: CertMode,
    dims: usize,
    #[serde(rename = "T")]
    horizon: usize,
    num_q: usize,
    dfa_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Mlp<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<TableRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}
