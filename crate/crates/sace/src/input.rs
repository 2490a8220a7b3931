//! TOML input files: one schema covering the three analysis modes
//! (`large_sample`, `counts`, `ground_truth`), plus writers that round-trip
//! every input. See `docs/input-format.md` for the schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::copula::{CopulaFamily, JointSurvivalPMF, RHO_MAX};
use crate::error::{Error, Result};
use crate::model::{
    risks_from_joint, ArmCounts, CountData, FollowUpSchedule, GroundTruth, LargeSampleInput,
    MarginalSurvival, OutcomeRisk, RiskTable, SurvivorCounts,
};

/// How far the two redundant risk parameterizations may disagree.
const DUAL_SPEC_TOL: f64 = 1e-9;

/// The copula a ground-truth file declares its joint was generated under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthCopula {
    pub family: CopulaFamily,
    pub rho: f64,
}

/// A parsed input file.
#[derive(Debug, Clone)]
pub enum ParsedInput {
    LargeSample(LargeSampleInput),
    Counts(CountData),
    Truth {
        truth: GroundTruth,
        copula: Option<TruthCopula>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct FileSchedule {
    times: Vec<f64>,
    measurement_index: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct FilePair {
    treated: Vec<f64>,
    control: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileSurvivorRow {
    t: usize,
    n_bad: u64,
    n_good: u64,
    #[serde(default)]
    n_missing: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileArmCounts {
    deaths: Vec<u64>,
    survivors: Vec<FileSurvivorRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileCounts {
    treated: FileArmCounts,
    control: FileArmCounts,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileQ {
    treated: Vec<Vec<f64>>,
    control: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileTruthCopula {
    family: String,
    rho: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileTruth {
    joint: Vec<Vec<f64>>,
    q: FileQ,
    #[serde(skip_serializing_if = "Option::is_none")]
    copula: Option<FileTruthCopula>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InputFile {
    mode: String,
    schedule: FileSchedule,
    #[serde(skip_serializing_if = "Option::is_none")]
    marginals: Option<FilePair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    risks: Option<FilePair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    joint_y1: Option<FilePair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts: Option<FileCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<FileTruth>,
}

fn family_from_name(name: &str) -> Result<CopulaFamily> {
    match name {
        "plackett" => Ok(CopulaFamily::Plackett),
        "gaussian" => Ok(CopulaFamily::Gaussian),
        "independence" => Ok(CopulaFamily::Independence),
        other => Err(Error::Parse(format!(
            "truth.copula.family: unknown family {other:?}"
        ))),
    }
}

fn arm_counts(name: &str, schedule: &FollowUpSchedule, arm: &FileArmCounts) -> Result<ArmCounts> {
    let t_first = schedule.t();
    if arm.survivors.len() != schedule.n_survivor_times() {
        return Err(Error::InvalidInput(format!(
            "counts.{name}.survivors: expected {} rows, got {}",
            schedule.n_survivor_times(),
            arm.survivors.len()
        )));
    }
    let mut survivors = Vec::with_capacity(arm.survivors.len());
    for (i, row) in arm.survivors.iter().enumerate() {
        if row.t != t_first + i {
            return Err(Error::InvalidInput(format!(
                "counts.{name}.survivors[{i}].t: expected {}, got {}",
                t_first + i,
                row.t
            )));
        }
        survivors.push(SurvivorCounts {
            n_bad: row.n_bad,
            n_good: row.n_good,
            n_missing: row.n_missing,
        });
    }
    Ok(ArmCounts {
        deaths: arm.deaths.clone(),
        survivors,
    })
}

/// Parses an input string. The analysis mode comes from the top-level
/// `mode` field; large-sample files may supply `risks`, `joint_y1`, or both
/// (checked for agreement within 1e-9 when both are present).
pub fn parse_input_str(text: &str) -> Result<ParsedInput> {
    let file: InputFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let schedule = FollowUpSchedule::new(file.schedule.times, file.schedule.measurement_index)?;
    match file.mode.as_str() {
        "large_sample" => {
            let m = file
                .marginals
                .ok_or_else(|| Error::Parse("large_sample mode requires [marginals]".into()))?;
            let marginals = MarginalSurvival::new(m.treated, m.control)?;
            let from_joint = match &file.joint_y1 {
                Some(j) => Some(risks_from_joint(&schedule, &marginals, &j.treated, &j.control)?),
                None => None,
            };
            let risks = match (file.risks, from_joint) {
                (Some(r), derived) => {
                    let direct = OutcomeRisk::new(schedule.t(), r.treated, r.control)?;
                    if let Some(derived) = derived {
                        for t in schedule.t()..=schedule.k() {
                            for arm in [crate::model::Arm::Treated, crate::model::Arm::Control] {
                                let d = direct.alpha(arm, t);
                                let j = derived.alpha(arm, t);
                                if (d - j).abs() > DUAL_SPEC_TOL {
                                    return Err(Error::Inconsistent(format!(
                                        "risks and joint_y1 disagree at t={t}: {d} vs {j}"
                                    )));
                                }
                            }
                        }
                    }
                    direct
                }
                (None, Some(derived)) => derived,
                (None, None) => {
                    return Err(Error::Parse(
                        "large_sample mode requires [risks] or [joint_y1]".into(),
                    ))
                }
            };
            Ok(ParsedInput::LargeSample(LargeSampleInput::new(
                schedule, marginals, risks,
            )?))
        }
        "counts" => {
            let c = file
                .counts
                .ok_or_else(|| Error::Parse("counts mode requires [counts.treated] and [counts.control]".into()))?;
            let treated = arm_counts("treated", &schedule, &c.treated)?;
            let control = arm_counts("control", &schedule, &c.control)?;
            Ok(ParsedInput::Counts(CountData::new(schedule, treated, control)?))
        }
        "ground_truth" => {
            let t = file
                .truth
                .ok_or_else(|| Error::Parse("ground_truth mode requires [truth]".into()))?;
            let joint = JointSurvivalPMF::new(t.joint, None)?;
            let q = RiskTable::new(schedule.t(), schedule.k(), t.q.treated, t.q.control)?;
            let copula = match t.copula {
                Some(c) => {
                    if !(0.0..=RHO_MAX).contains(&c.rho) {
                        return Err(Error::Domain(format!(
                            "truth.copula.rho: {} outside [0, {RHO_MAX}]",
                            c.rho
                        )));
                    }
                    Some(TruthCopula {
                        family: family_from_name(&c.family)?,
                        rho: c.rho,
                    })
                }
                None => None,
            };
            Ok(ParsedInput::Truth {
                truth: GroundTruth::new(schedule, joint, q)?,
                copula,
            })
        }
        other => Err(Error::Parse(format!(
            "mode: expected large_sample, counts, or ground_truth, got {other:?}"
        ))),
    }
}

pub fn parse_input_file(path: &Path) -> Result<ParsedInput> {
    let text = std::fs::read_to_string(path)?;
    parse_input_str(&text)
}

fn schedule_to_file(schedule: &FollowUpSchedule) -> FileSchedule {
    FileSchedule {
        times: schedule.times().to_vec(),
        measurement_index: schedule.t(),
    }
}

/// Serializes any input back to the file format.
pub fn write_input_str(input: &ParsedInput) -> Result<String> {
    let file = match input {
        ParsedInput::LargeSample(ls) => {
            let t_first = ls.schedule.t();
            let k = ls.schedule.k();
            InputFile {
                mode: "large_sample".into(),
                schedule: schedule_to_file(&ls.schedule),
                marginals: Some(FilePair {
                    treated: ls.marginals.arm(crate::model::Arm::Treated).to_vec(),
                    control: ls.marginals.arm(crate::model::Arm::Control).to_vec(),
                }),
                risks: Some(FilePair {
                    treated: (t_first..=k)
                        .map(|t| ls.risks.alpha(crate::model::Arm::Treated, t))
                        .collect(),
                    control: (t_first..=k)
                        .map(|t| ls.risks.alpha(crate::model::Arm::Control, t))
                        .collect(),
                }),
                joint_y1: None,
                counts: None,
                truth: None,
            }
        }
        ParsedInput::Counts(c) => {
            let arm_to_file = |arm: &ArmCounts| FileArmCounts {
                deaths: arm.deaths.clone(),
                survivors: arm
                    .survivors
                    .iter()
                    .enumerate()
                    .map(|(i, s)| FileSurvivorRow {
                        t: c.schedule.t() + i,
                        n_bad: s.n_bad,
                        n_good: s.n_good,
                        n_missing: s.n_missing,
                    })
                    .collect(),
            };
            InputFile {
                mode: "counts".into(),
                schedule: schedule_to_file(&c.schedule),
                marginals: None,
                risks: None,
                joint_y1: None,
                counts: Some(FileCounts {
                    treated: arm_to_file(&c.treated),
                    control: arm_to_file(&c.control),
                }),
                truth: None,
            }
        }
        ParsedInput::Truth { truth, copula } => {
            let t_first = truth.schedule.t();
            let k = truth.schedule.k();
            InputFile {
                mode: "ground_truth".into(),
                schedule: schedule_to_file(&truth.schedule),
                marginals: None,
                risks: None,
                joint_y1: None,
                counts: None,
                truth: Some(FileTruth {
                    joint: truth.joint.rows().to_vec(),
                    q: FileQ {
                        treated: (t_first..=k)
                            .map(|t1| {
                                (0..=k)
                                    .map(|t0| truth.q.q(crate::model::Arm::Treated, t1, t0))
                                    .collect()
                            })
                            .collect(),
                        control: (0..=k)
                            .map(|t1| {
                                (t_first..=k)
                                    .map(|t0| truth.q.q(crate::model::Arm::Control, t1, t0))
                                    .collect()
                            })
                            .collect(),
                    },
                    copula: copula.map(|c| FileTruthCopula {
                        family: c.family.name().into(),
                        rho: c.rho,
                    }),
                }),
            }
        }
    };
    toml::to_string_pretty(&file).map_err(|e| Error::Internal(e.to_string()))
}
