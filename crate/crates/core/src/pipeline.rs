//! One-call construction of every table derived from the sites.

use crate::anchors::AnchorAssignment;
use crate::audit::Audit;
use crate::czdecomp::CzDecomposition;
use crate::error::Result;
use crate::functionals::FunctionalFamily;
use crate::grouping::GroupTable;
use crate::rational::{self, Rational};
use crate::sites::SiteSet;

/// Sites plus decomposition, groups, anchors and the functional family.
#[derive(Clone, Debug)]
pub struct Model {
    pub sites: SiteSet,
    pub cz: CzDecomposition,
    pub groups: GroupTable,
    pub anchors: AnchorAssignment,
    pub family: FunctionalFamily,
}

impl Model {
    pub fn new(sites: SiteSet) -> Result<Self> {
        let cz = CzDecomposition::decompose(&sites)?;
        let groups = GroupTable::build(&cz, &sites)?;
        let anchors = AnchorAssignment::assign(&cz, &groups, &sites)?;
        let family = FunctionalFamily::build(&cz, &groups, &anchors, &sites)?;
        Ok(Model { sites, cz, groups, anchors, family })
    }

    pub fn from_rationals(raw: &[Rational]) -> Result<Self> {
        Self::new(SiteSet::normalize(raw)?)
    }

    pub fn from_integers(raw: &[i64]) -> Result<Self> {
        Self::from_rationals(&raw.iter().map(|&x| rational::from_i64(x)).collect::<Vec<_>>())
    }

    /// All structural checks of the decomposition, groups and anchors.
    pub fn audit(&self) -> Audit {
        let mut a = self.cz.audit(&self.sites);
        a.merge(self.groups.audit(&self.cz, &self.sites));
        a.merge(self.anchors.audit(&self.cz, &self.groups, &self.sites));
        a.record("functional supports have at most 6 sites", self.family.max_support() <= 6, || {
            format!("max support {}", self.family.max_support())
        });
        a.measure_max("functionals per site", self.family.nu_max() as f64 / self.sites.len() as f64);
        a
    }
}
