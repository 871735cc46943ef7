//! Abstract one-versus-one voting.

use std::collections::BTreeMap;

use crate::abstract_svm::{AbstractError, Domain, ModelEvaluator, Verdict};
use crate::interval::IntervalBox;
use crate::perturb::RafVec;
use crate::svm::SvmModel;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MulticlassError {
    #[error("no verdict for class pair ({0}, {1})")]
    MissingPair(usize, usize),
    #[error("verdict for invalid pair ({0}, {1})")]
    InvalidPair(usize, usize),
    #[error("expected {expected} pair verdicts, got {found}")]
    WrongCount { expected: usize, found: usize },
    #[error(transparent)]
    Abstract(#[from] AbstractError),
}

/// Possible vote counts `[vmin, vmax]` of one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VoteRange {
    pub vmin: usize,
    pub vmax: usize,
}

impl VoteRange {
    pub fn new(vmin: usize, vmax: usize) -> Self {
        assert!(vmin <= vmax);
        Self { vmin, vmax }
    }
}

/// Vote ranges from pair verdicts given as a map over `(i, j)`, `i < j`.
pub fn abstract_votes(
    verdicts: &BTreeMap<(usize, usize), Verdict>,
    m: usize,
) -> Result<Vec<VoteRange>, MulticlassError> {
    if let Some(&(i, j)) = verdicts.keys().find(|&&(i, j)| !(i < j && j < m)) {
        return Err(MulticlassError::InvalidPair(i, j));
    }
    let mut ordered = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            ordered.push(
                *verdicts
                    .get(&(i, j))
                    .ok_or(MulticlassError::MissingPair(i, j))?,
            );
        }
    }
    abstract_votes_ordered(&ordered, m)
}

/// Vote ranges from pair verdicts listed in pair order `(0,1), (0,2), …`.
/// `+1` is a vote for the first class of the pair, `−1` for the second and
/// `⊤` a possible vote for either.
pub fn abstract_votes_ordered(
    verdicts: &[Verdict],
    m: usize,
) -> Result<Vec<VoteRange>, MulticlassError> {
    let expected = m * m.saturating_sub(1) / 2;
    if verdicts.len() != expected {
        return Err(MulticlassError::WrongCount {
            expected,
            found: verdicts.len(),
        });
    }
    let mut votes = vec![VoteRange::default(); m];
    let mut it = verdicts.iter();
    for i in 0..m {
        for j in i + 1..m {
            match it.next().unwrap() {
                Verdict::Pos => {
                    votes[i].vmin += 1;
                    votes[i].vmax += 1;
                }
                Verdict::Neg => {
                    votes[j].vmin += 1;
                    votes[j].vmax += 1;
                }
                Verdict::Top => {
                    votes[i].vmax += 1;
                    votes[j].vmax += 1;
                }
            }
        }
    }
    Ok(votes)
}

/// Classes that may win: `i` such that no other class surely beats it,
/// i.e. `vⱼmin ≤ vᵢmax` for all `j ≠ i`. Returned as sorted class indices.
pub fn m_ovo_sharp(votes: &[VoteRange]) -> Vec<usize> {
    (0..votes.len())
        .filter(|&i| {
            votes
                .iter()
                .enumerate()
                .all(|(j, v)| j == i || v.vmin <= votes[i].vmax)
        })
        .collect()
}

/// Set of classes the model may output on any point of the region.
pub fn verify_multiclass(
    eval: &ModelEvaluator<'_>,
    b: &IntervalBox,
    region: &RafVec,
    domain: Domain,
) -> Result<Vec<usize>, MulticlassError> {
    let model: &SvmModel = eval.model();
    let verdicts = eval.pair_verdicts(b, region, domain)?;
    let votes = abstract_votes_ordered(&verdicts, model.num_classes())?;
    Ok(m_ovo_sharp(&votes))
}
