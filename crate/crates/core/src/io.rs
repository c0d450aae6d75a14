//! JSON documents read and written by the command line.
//!
//! Site indices in every output refer to the input order. Square ids are the
//! decomposition's ids, ordered by level, then `i`, then `j`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::czdecomp::Kind;
use crate::error::{Error, Result};
use crate::extension::ExtensionField;
use crate::functionals::FunctionalKind;
use crate::geometry::DyadicInterval;
use crate::pipeline::Model;
use crate::rational;
use crate::sites::{PlusSite, SiteSet};

/// `{"sites": [rational strings], "values": [floats]}`; values optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Input {
    pub sites: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))
}

impl Input {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("bad sites document: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn site_set(&self) -> Result<SiteSet> {
        SiteSet::from_strings(&self.sites)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ValuesDoc {
    Bare(Vec<f64>),
    Wrapped { values: Vec<f64> },
}

/// Data values from `[floats]` or `{"values": [floats], ...}`.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    match serde_json::from_str::<ValuesDoc>(text) {
        Ok(ValuesDoc::Bare(v)) | Ok(ValuesDoc::Wrapped { values: v }) => Ok(v),
        Err(e) => Err(Error::input(format!("bad values document: {e}"))),
    }
}

pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    parse_values(&read_text(path)?)
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc).map_err(|e| Error::invariant(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SquareDoc {
    pub id: usize,
    pub k: u32,
    pub i: i128,
    pub j: i128,
    pub kind: Kind,
    pub relevant: bool,
    pub shadow: DyadicInterval,
    /// Input index of the unique site in `1.1Q`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub site_in_1_1: Option<usize>,
    /// `[x0, y0, side]` in the normalized frame.
    pub bounds: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CzDoc {
    pub n_sites: usize,
    /// `x_frame = scale · (x_user - translate)`.
    pub scale: String,
    pub translate: String,
    pub squares: Vec<SquareDoc>,
}

pub fn cz_doc(m: &Model) -> CzDoc {
    let order = m.sites.order();
    CzDoc {
        n_sites: m.sites.len(),
        scale: rational::format(m.sites.scale()),
        translate: rational::format(m.sites.translate()),
        squares: m
            .cz
            .squares()
            .iter()
            .enumerate()
            .map(|(id, q)| SquareDoc {
                id,
                k: q.level,
                i: q.i,
                j: q.j,
                kind: q.kind,
                relevant: q.relevant,
                shadow: q.shadow(),
                site_in_1_1: q.site_in_1_1.map(|k| order[k]),
                bounds: [q.bounds.0, q.bounds.1, q.bounds.2],
            })
            .collect(),
    }
}

/// A point of `E+` in user coordinates.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PointDoc {
    /// Input index, or `None` for the outer point.
    pub site: Option<usize>,
    pub x: String,
}

fn point(m: &Model, s: PlusSite) -> PointDoc {
    match s {
        PlusSite::Outer => PointDoc { site: None, x: rational::format(&m.sites.to_user_exact(&rational::from_i64(-1))) },
        PlusSite::Site(k) => PointDoc { site: Some(m.sites.order()[k]), x: rational::format(m.sites.user_x(k)) },
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupDoc {
    pub owner: PointDoc,
    #[serde(rename = "L")]
    pub top: usize,
    pub tower: Vec<usize>,
    pub gangs: Vec<Vec<usize>>,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SquareGroupDoc {
    pub id: usize,
    pub easy: bool,
    pub group: Option<PointDoc>,
    pub z1: PointDoc,
    pub z2: PointDoc,
    pub zbar: PointDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupsDoc {
    pub groups: Vec<GroupDoc>,
    /// Relevant squares only.
    pub squares: Vec<SquareGroupDoc>,
}

pub fn groups_doc(m: &Model) -> GroupsDoc {
    let groups = m
        .groups
        .groups
        .values()
        .map(|g| GroupDoc {
            owner: point(m, g.owner),
            top: g.top(),
            tower: g.tower.clone(),
            gangs: g.gangs.clone(),
            members: g.squares.clone(),
        })
        .collect();
    let squares = m
        .cz
        .relevant_ids()
        .into_iter()
        .filter_map(|id| {
            let a = m.anchors.get(id)?;
            Some(SquareGroupDoc {
                id,
                easy: m.groups.easy(id),
                group: m.groups.owner(id).map(|o| point(m, o)),
                z1: point(m, a.z1),
                z2: point(m, a.z2),
                zbar: point(m, PlusSite::Site(a.zbar)),
            })
        })
        .collect();
    GroupsDoc { groups, squares }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermDoc {
    pub site: usize,
    pub coeff: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctionalDoc {
    pub lambda: f64,
    pub terms: Vec<TermDoc>,
    pub pair: [usize; 2],
    pub kind: FunctionalKind,
}

/// The family without its identically zero members.
pub fn family_doc(m: &Model) -> Vec<FunctionalDoc> {
    let order = m.sites.order();
    m.family
        .functionals
        .iter()
        .filter(|f| !f.is_zero())
        .map(|f| {
            let mut terms: Vec<TermDoc> =
                f.terms.iter().map(|(k, c)| TermDoc { site: order[*k], coeff: rational::format(c) }).collect();
            terms.sort_by_key(|t| t.site);
            FunctionalDoc { lambda: f.lambda(), terms, pair: [f.pair.0, f.pair.1], kind: f.kind }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldDoc {
    pub width: usize,
    pub height: usize,
    /// `[x0, y0, x1, y1]` in user coordinates.
    pub bbox: [f64; 4],
    /// Row-major, row 0 at `y0`.
    pub value: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dxx: Vec<f64>,
    pub dxy: Vec<f64>,
    pub dyy: Vec<f64>,
}

/// Samples `T♯f` and its derivatives on a `width x height` grid of user
/// coordinates spanning `bbox` (ends included).
pub fn field_doc(field: &ExtensionField, width: usize, height: usize, bbox: [f64; 4]) -> Result<FieldDoc> {
    use rayon::prelude::*;
    if width < 1 || height < 1 {
        return Err(Error::input("grid must be at least 1x1"));
    }
    if bbox.iter().any(|v| !v.is_finite()) || bbox[0] > bbox[2] || bbox[1] > bbox[3] {
        return Err(Error::input(format!("bad bounding box {bbox:?}")));
    }
    let at = |k: usize, m: usize, lo: f64, hi: f64| if m == 1 { lo } else { lo + (hi - lo) * k as f64 / (m - 1) as f64 };
    let jets: Vec<_> = (0..width * height)
        .into_par_iter()
        .map(|t| {
            let (a, b) = (t % width, t / width);
            field.evaluate_user(at(a, width, bbox[0], bbox[2]), at(b, height, bbox[1], bbox[3])).map(|e| e.jet)
        })
        .collect::<Result<_>>()?;
    Ok(FieldDoc {
        width,
        height,
        bbox,
        value: jets.iter().map(|j| j.v).collect(),
        dx: jets.iter().map(|j| j.dx).collect(),
        dy: jets.iter().map(|j| j.dy).collect(),
        dxx: jets.iter().map(|j| j.dxx).collect(),
        dxy: jets.iter().map(|j| j.dxy).collect(),
        dyy: jets.iter().map(|j| j.dyy).collect(),
    })
}
