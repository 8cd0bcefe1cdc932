//! JSON interchange for channels, ensembles and problem instances.
//!
//! A complex matrix is a row-major list of `[re, im]` pairs, either flat
//! (`[[1,0],[0,0],[0,0],[1,0]]`) or grouped by rows
//! (`[[[1,0],[0,0]],[[0,0],[1,0]]]`). Output always uses the flat form.
//!
//! ```json
//! {"channel": {"d_in": 2, "d_out": 2, "kraus": [<matrix>, ...]},
//!  "rho": <matrix>,
//!  "ensemble": {"members": [{"p": 0.5, "rho": <matrix>}], "labels": "computational"}}
//! ```

use serde::{Deserialize, Serialize};

use crate::channels::{DensityMatrix, Ensemble, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::pgm::{LabeledEnsemble, Labels};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MatrixJson {
    Flat(Vec<[f64; 2]>),
    Rows(Vec<Vec<[f64; 2]>>),
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        MatrixJson::Flat(entries)
    }

    /// Decodes with the given shape; a flat list must have exactly `rows * cols` entries.
    pub fn to_matrix(&self, rows: usize, cols: usize) -> Result<CMatrix> {
        let flat: Vec<[f64; 2]> = match self {
            MatrixJson::Flat(v) => v.clone(),
            MatrixJson::Rows(r) => {
                if r.len() != rows || r.iter().any(|row| row.len() != cols) {
                    return Err(Error::Format(format!(
                        "matrix rows do not form a {rows}x{cols} array"
                    )));
                }
                r.concat()
            }
        };
        if flat.len() != rows * cols {
            return Err(Error::Format(format!(
                "expected {} entries for a {rows}x{cols} matrix, found {}",
                rows * cols,
                flat.len()
            )));
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| {
            let [re, im] = flat[i * cols + j];
            c(re, im)
        }))
    }

    /// Decodes a square matrix, inferring its size.
    pub fn to_square(&self) -> Result<CMatrix> {
        let d = match self {
            MatrixJson::Rows(r) => r.len(),
            MatrixJson::Flat(v) => {
                let d = (v.len() as f64).sqrt().round() as usize;
                if d * d != v.len() {
                    return Err(Error::Format(format!(
                        "{} entries do not form a square matrix",
                        v.len()
                    )));
                }
                d
            }
        };
        self.to_matrix(d, d)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChannelJson {
    pub d_in: usize,
    pub d_out: usize,
    pub kraus: Vec<MatrixJson>,
}

impl ChannelJson {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Self {
            d_in: ch.d_in(),
            d_out: ch.d_out(),
            kraus: ch.operators().iter().map(MatrixJson::from_matrix).collect(),
        }
    }

    /// Validated trace-preserving channel.
    pub fn to_channel(&self) -> Result<KrausChannel> {
        let ops = self
            .kraus
            .iter()
            .map(|m| m.to_matrix(self.d_out, self.d_in))
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(self.d_in, self.d_out, ops)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MemberJson {
    pub p: f64,
    pub rho: MatrixJson,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum LabelsJson {
    /// Only `"computational"` is accepted.
    Named(String),
    Basis(MatrixJson),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EnsembleJson {
    pub members: Vec<MemberJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelsJson>,
}

impl EnsembleJson {
    pub fn from_ensemble(e: &Ensemble) -> Self {
        Self::from_members(e.members(), None)
    }

    pub fn from_labeled(e: &LabeledEnsemble) -> Self {
        Self::from_members(e.members(), Some(LabelsJson::Named("computational".into())))
    }

    fn from_members(members: &[(f64, DensityMatrix)], labels: Option<LabelsJson>) -> Self {
        Self {
            members: members
                .iter()
                .map(|(p, rho)| MemberJson {
                    p: *p,
                    rho: MatrixJson::from_matrix(rho.as_matrix()),
                })
                .collect(),
            labels,
        }
    }

    fn members(&self) -> Result<Vec<(f64, DensityMatrix)>> {
        self.members
            .iter()
            .map(|m| Ok((m.p, DensityMatrix::new(m.rho.to_square()?)?)))
            .collect()
    }

    pub fn to_ensemble(&self) -> Result<Ensemble> {
        Ensemble::new(self.members()?)
    }

    /// Labeled form; labels default to the computational basis.
    pub fn to_labeled(&self) -> Result<LabeledEnsemble> {
        let labels = match &self.labels {
            None => Labels::Computational,
            Some(LabelsJson::Named(name)) if name == "computational" => Labels::Computational,
            Some(LabelsJson::Named(name)) => {
                return Err(Error::Format(format!("unknown label basis \"{name}\"")))
            }
            Some(LabelsJson::Basis(m)) => Labels::Explicit(m.to_square()?),
        };
        LabeledEnsemble::new(self.members()?, labels)
    }
}

/// A channel with an optional input state and an optional ensemble.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InstanceJson {
    pub channel: ChannelJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleJson>,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub channel: KrausChannel,
    pub rho: Option<DensityMatrix>,
    pub ensemble: Option<Ensemble>,
}

impl Instance {
    /// Input ensemble: the explicit ensemble, else `rho`, else the maximally mixed state.
    pub fn input_ensemble(&self) -> Ensemble {
        if let Some(e) = &self.ensemble {
            e.clone()
        } else if let Some(rho) = &self.rho {
            Ensemble::single(rho.clone())
        } else {
            Ensemble::single(DensityMatrix::maximally_mixed(self.channel.d_in()))
        }
    }

    /// Reference state for the reversal: `rho` if given, else the ensemble average.
    pub fn reference_state(&self) -> DensityMatrix {
        match &self.rho {
            Some(rho) => rho.clone(),
            None => self.input_ensemble().average(),
        }
    }
}

impl InstanceJson {
    pub fn to_instance(&self) -> Result<Instance> {
        let channel = self.channel.to_channel()?;
        let rho = self
            .rho
            .as_ref()
            .map(|m| DensityMatrix::new(m.to_square()?))
            .transpose()?;
        let ensemble = self.ensemble.as_ref().map(EnsembleJson::to_ensemble).transpose()?;
        for (what, dim) in [
            ("rho dimension", rho.as_ref().map(DensityMatrix::dim)),
            ("ensemble dimension", ensemble.as_ref().map(Ensemble::dim)),
        ] {
            if let Some(d) = dim {
                if d != channel.d_in() {
                    return Err(Error::DimensionMismatch {
                        context: what,
                        expected: channel.d_in(),
                        found: d,
                    });
                }
            }
        }
        Ok(Instance {
            channel,
            rho,
            ensemble,
        })
    }
}

/// Labeled-ensemble document: either the ensemble itself or `{"ensemble": ...}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum LabeledDocument {
    Wrapped { ensemble: EnsembleJson },
    Bare(EnsembleJson),
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Format(format!("line {}, column {}: {}", e.line(), e.column(), e))
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(json_error)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse::<InstanceJson>(text)?.to_instance()
}

pub fn parse_channel(text: &str) -> Result<KrausChannel> {
    parse::<ChannelJson>(text)?.to_channel()
}

pub fn parse_labeled_ensemble(text: &str) -> Result<LabeledEnsemble> {
    // syntax errors are reported against the plain schema, which carries positions
    let _: serde_json::Value = parse(text)?;
    match parse::<LabeledDocument>(text)? {
        LabeledDocument::Wrapped { ensemble } | LabeledDocument::Bare(ensemble) => {
            ensemble.to_labeled()
        }
    }
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{choi_distance, random_channel};
    use crate::linalg::identity;

    #[test]
    fn channel_round_trip() {
        let ch = random_channel(2, 3, 2, 1);
        let text = to_pretty_json(&ChannelJson::from_channel(&ch));
        let back = parse_channel(&text).unwrap();
        assert!(choi_distance(&ch, &back).unwrap() < 1e-14);
    }

    #[test]
    fn nested_rows_are_accepted() {
        let text = r#"{"d_in":2,"d_out":2,"kraus":[[[[1,0],[0,0]],[[0,0],[1,0]]]]}"#;
        let ch = parse_channel(text).unwrap();
        assert!((&ch.operators()[0] - identity(2)).norm() < 1e-15);
    }

    #[test]
    fn instance_with_rho() {
        let text = r#"{
            "channel": {"d_in": 2, "d_out": 2, "kraus": [[[1,0],[0,0],[0,0],[1,0]]]},
            "rho": [[0.5,0],[0,0],[0,0],[0.5,0]]
        }"#;
        let inst = parse_instance(text).unwrap();
        assert!((inst.reference_state().as_matrix() - identity(2) * c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(inst.input_ensemble().len(), 1);
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = parse_instance("{\n  \"channel\": [1,\n}").unwrap_err();
        let Error::Format(msg) = err else { panic!("wrong error") };
        assert!(msg.starts_with("line 3, column"), "{msg}");
    }

    #[test]
    fn invalid_channel_is_rejected() {
        let text = r#"{"d_in":2,"d_out":2,"kraus":[[[2,0],[0,0],[0,0],[1,0]]]}"#;
        assert!(matches!(parse_channel(text), Err(Error::NotTracePreserving { .. })));
        let short = r#"{"d_in":2,"d_out":2,"kraus":[[[1,0],[0,0],[0,0]]]}"#;
        assert!(matches!(parse_channel(short), Err(Error::Format(_))));
    }

    #[test]
    fn labeled_ensemble_forms() {
        let bare = r#"{"members":[{"p":0.5,"rho":[[1,0],[0,0],[0,0],[0,0]]},
                                  {"p":0.5,"rho":[[0,0],[0,0],[0,0],[1,0]]}],
                       "labels":"computational"}"#;
        let e = parse_labeled_ensemble(bare).unwrap();
        assert_eq!(e.len(), 2);
        let wrapped = format!("{{\"ensemble\": {bare}}}");
        assert_eq!(parse_labeled_ensemble(&wrapped).unwrap().len(), 2);
        let bad = bare.replace("computational", "hadamard");
        assert!(parse_labeled_ensemble(&bad).is_err());
    }

    #[test]
    fn dimension_mismatch_between_channel_and_state() {
        let text = r#"{
            "channel": {"d_in": 2, "d_out": 2, "kraus": [[[1,0],[0,0],[0,0],[1,0]]]},
            "rho": [[1,0]]
        }"#;
        assert!(matches!(parse_instance(text), Err(Error::DimensionMismatch { .. })));
    }
}
