//! The record of every channel use in one trial.
//!
//! The questioner's side keeps responses; the eavesdropper only ever gets an
//! [`EavesdropperView`], which borrows the query records and has no path to
//! the responses.

use crate::cells::CellSet;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryRecord {
    /// A non-adaptive query over the first-level grid.
    Stage1(CellSet),
    /// One accept/reject symbol of the hypothesis test; it carries no set.
    HypothesisTest,
    /// A cloned adaptive query over the full second-level grid.
    Stage2(CellSet),
}

impl QueryRecord {
    pub fn set(&self) -> Option<&CellSet> {
        match self {
            QueryRecord::Stage1(s) | QueryRecord::Stage2(s) => Some(s),
            QueryRecord::HypothesisTest => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    queries: Vec<QueryRecord>,
    responses: Vec<usize>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, query: QueryRecord, response: usize) {
        self.queries.push(query);
        self.responses.push(response);
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn responses(&self) -> &[usize] {
        &self.responses
    }

    pub fn records(&self) -> impl Iterator<Item = (&QueryRecord, usize)> {
        self.queries.iter().zip(self.responses.iter().copied())
    }

    pub fn eavesdropper_view(&self) -> EavesdropperView<'_> {
        EavesdropperView { queries: &self.queries }
    }
}

/// What the eavesdropper observes: query sets, their order, and the timing
/// of hypothesis-test symbols. Responses are not reachable from here.
///
/// ```compile_fail
/// use private_twentyq::transcript::Transcript;
/// let t = Transcript::new();
/// let view = t.eavesdropper_view();
/// let _ = view.responses();
/// ```
#[derive(Debug, Clone, Copy)]
pub struct EavesdropperView<'a> {
    queries: &'a [QueryRecord],
}

impl<'a> EavesdropperView<'a> {
    pub fn queries(&self) -> &'a [QueryRecord] {
        self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn stage2_queries(&self) -> impl Iterator<Item = &'a CellSet> + 'a {
        self.queries.iter().filter_map(|q| match q {
            QueryRecord::Stage2(s) => Some(s),
            _ => None,
        })
    }
}
