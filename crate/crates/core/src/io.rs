//! JSON instance and report documents with exact rational literals.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matroid::{Matroid, MatroidKind, Ranking};
use crate::mnat::ValuedFamily;
use crate::nearopt::{Color, ColoredBipartite, Edge, PrefBipartite, Side, Voters};
use crate::onesided::{Agent, Objective, OneSidedInstance, PartialOrder, PopularBaseInstance};
use crate::rational::{self, one, zero, Q};
use crate::set::{ElemSet, Ground};
use crate::twosided::{OrderedMatroid, TwoSidedInstance};

/// Exact rational literal: a JSON integer or a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rat(pub Q);

impl From<Q> for Rat {
    fn from(x: Q) -> Self {
        Rat(x)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match i64::try_from(self.0.to_integer()) {
            Ok(n) if self.0.is_integer() => s.serialize_i64(n),
            _ => s.serialize_str(&rational::render(&self.0)),
        }
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Rat;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a \"p/q\" string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rat, E> {
                Ok(Rat(Q::from_integer(v.into())))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rat, E> {
                Ok(Rat(Q::from_integer(v.into())))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rat, E> {
                rational::parse(v).map(Rat).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// One preference tier: a single id or a list of tied ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tier {
    One(String),
    Tied(Vec<String>),
}

impl Tier {
    pub fn ids(&self) -> &[String] {
        match self {
            Tier::One(s) => std::slice::from_ref(s),
            Tier::Tied(v) => v,
        }
    }

    fn from_ids(mut v: Vec<String>) -> Tier {
        if v.len() == 1 {
            Tier::One(v.pop().expect("one id"))
        } else {
            Tier::Tied(v)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub elements: Vec<String>,
    pub capacity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphEdge {
    pub element: String,
    pub ends: (String, String),
}

/// Recursive matroid description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatroidSpec {
    Free(Vec<String>),
    Uniform { elements: Vec<String>, rank: usize },
    Partition(Vec<Block>),
    Graphic(Vec<GraphEdge>),
    Independents { elements: Vec<String>, sets: Vec<Vec<String>> },
    Bases { elements: Vec<String>, sets: Vec<Vec<String>> },
    DirectSum(Vec<MatroidSpec>),
    Restrict { matroid: Box<MatroidSpec>, to: Vec<String> },
    Contract { matroid: Box<MatroidSpec>, by: Vec<String> },
    Truncate { matroid: Box<MatroidSpec>, rank: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// The agent's block; elements named in `pairs` or `tiers` are added to it.
    #[serde(default)]
    pub part: Vec<String>,
    /// `[a, b]` means `a` is preferred to `b`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tiers: Vec<Tier>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityEntry {
    pub set: Vec<String>,
    pub value: Rat,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OneSidedTag {
    #[default]
    #[serde(rename = "one-sided")]
    Tag,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneSidedDoc {
    pub model: OneSidedTag,
    pub ground: Vec<String>,
    pub m2: MatroidSpec,
    pub preferences: Vec<AgentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, Rat>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<Vec<UtilityEntry>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rankings {
    pub m1: Vec<String>,
    pub m2: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoSidedTag {
    #[default]
    #[serde(rename = "two-sided")]
    Tag,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoSidedDoc {
    pub model: TwoSidedTag,
    pub ground: Vec<String>,
    /// A top-level `direct-sum` lists the summands; anything else is one summand.
    pub m1: MatroidSpec,
    pub m2: MatroidSpec,
    pub preferences: Rankings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, Rat>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: String,
    pub left: String,
    pub right: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexPrefs {
    pub vertex: String,
    /// Incident edge ids, best tier first.
    pub tiers: Vec<Tier>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VotersDoc {
    Left,
    Both,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NearOptTag {
    #[default]
    #[serde(rename = "near-opt")]
    Tag,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearOptDoc {
    pub model: NearOptTag,
    /// Edge ids.
    pub ground: Vec<String>,
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    pub preferences: Vec<VertexPrefs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voters: Option<VotersDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Rat>,
}

/// Instance file; the `model` field picks the variant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum InstanceDocument {
    OneSided(OneSidedDoc),
    TwoSided(TwoSidedDoc),
    NearOpt(NearOptDoc),
}

/// A document turned into solver inputs.
#[derive(Clone, Debug)]
pub enum Instance {
    OneSided(OneSidedInstance),
    /// One-sided document without weights or utility.
    PopularBase(PopularBaseInstance),
    TwoSided(TwoSidedInstance),
    NearOpt { graph: PrefBipartite, threshold: Q },
}

fn schema_of(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Schema(m),
        e => e,
    }
}

fn path_error<E: fmt::Display>(e: serde_path_to_error::Error<serde_json::Error>, what: E) -> Error {
    let path = e.path().to_string();
    let inner = e.into_inner();
    Error::Schema(format!(
        "{what} at `{path}` (line {}, column {}): {inner}",
        inner.line(),
        inner.column()
    ))
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de).map_err(|e| path_error(e, what))?;
    // reject trailing content
    serde_json::Deserializer::from_str(text)
        .into_iter::<serde_json::Value>()
        .nth(1)
        .map_or(Ok(()), |_| Err(Error::Schema(format!("{what}: trailing content after the document"))))?;
    Ok(value)
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<InstanceDocument> {
    #[derive(Deserialize)]
    struct Model {
        model: Option<String>,
    }
    let head: Model = serde_json::from_str::<serde_json::Value>(text)
        .and_then(serde_json::from_value)
        .map_err(|e| Error::Schema(format!("invalid instance: {e}")))?;
    let what = "invalid instance";
    let doc = match head.model.as_deref() {
        Some("one-sided") => InstanceDocument::OneSided(from_json(text, what)?),
        Some("two-sided") => InstanceDocument::TwoSided(from_json(text, what)?),
        Some("near-opt") => InstanceDocument::NearOpt(from_json(text, what)?),
        Some(m) => {
            return Err(Error::Schema(format!(
                "{what} at `model`: unknown model `{m}`, expected `one-sided`, `two-sided` or `near-opt`"
            )))
        }
        None => return Err(Error::Schema(format!("{what}: missing field `model`"))),
    };
    doc.build()?;
    Ok(doc)
}

/// Pretty JSON with a trailing newline.
pub fn emit<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

/// Canonical text of an instance: canonicalized, then emitted.
pub fn emit_instance(doc: &InstanceDocument) -> Result<String> {
    Ok(emit(&doc.canonical()?))
}

/// SHA-256 of the canonical text, hex encoded.
pub fn instance_hash(doc: &InstanceDocument) -> Result<String> {
    let text = emit_instance(doc)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

pub fn parse_report(text: &str) -> Result<SolveReport> {
    from_json(text, "invalid report")
}

/// Sorting and lookup of ids against one ground.
struct Names<'a>(&'a Ground);

impl Names<'_> {
    fn set(&self, ids: &[String]) -> Result<ElemSet> {
        self.0.set_of(ids).map_err(schema_of)
    }

    fn one(&self, id: &str) -> Result<usize> {
        self.0.lookup(id).map_err(schema_of)
    }

    fn sorted(&self, ids: &[String]) -> Result<Vec<String>> {
        Ok(self.0.names(self.set(ids)?))
    }

    fn sorted_family(&self, sets: &[Vec<String>]) -> Result<Vec<Vec<String>>> {
        let mut v: Vec<ElemSet> = sets.iter().map(|s| self.set(s)).collect::<Result<_>>()?;
        v.sort();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Schema(format!("set {} listed twice", self.0.show(w[0]))));
        }
        Ok(v.into_iter().map(|s| self.0.names(s)).collect())
    }

    fn weights(&self, w: &BTreeMap<String, Rat>) -> Result<Vec<Q>> {
        let mut out = vec![zero(); self.0.len()];
        for (id, v) in w {
            out[self.one(id)?] = v.0.clone();
        }
        Ok(out)
    }
}

impl MatroidSpec {
    pub fn build(&self, ground: &Ground) -> Result<Matroid> {
        let n = Names(ground);
        Ok(match self {
            MatroidSpec::Free(e) => Matroid::free(n.set(e)?),
            MatroidSpec::Uniform { elements, rank } => Matroid::uniform(n.set(elements)?, *rank),
            MatroidSpec::Partition(blocks) => Matroid::partition(
                blocks
                    .iter()
                    .map(|b| Ok((n.set(&b.elements)?, b.capacity)))
                    .collect::<Result<_>>()?,
            )
            .map_err(schema_of)?,
            MatroidSpec::Graphic(edges) => Matroid::graphic(
                edges
                    .iter()
                    .map(|g| Ok((n.one(&g.element)?, g.ends.0.clone(), g.ends.1.clone())))
                    .collect::<Result<_>>()?,
            )?,
            MatroidSpec::Independents { elements, sets } => Matroid::from_independents(
                n.set(elements)?,
                sets.iter().map(|s| n.set(s)).collect::<Result<_>>()?,
            )?,
            MatroidSpec::Bases { elements, sets } => {
                Matroid::from_bases(n.set(elements)?, sets.iter().map(|s| n.set(s)).collect::<Result<_>>()?)?
            }
            MatroidSpec::DirectSum(children) => {
                Matroid::direct_sum(children.iter().map(|c| c.build(ground)).collect::<Result<_>>()?)?
            }
            MatroidSpec::Restrict { matroid, to } => matroid.build(ground)?.restrict(n.set(to)?)?,
            MatroidSpec::Contract { matroid, by } => matroid.build(ground)?.contract(n.set(by)?)?,
            MatroidSpec::Truncate { matroid, rank } => matroid.build(ground)?.truncate(*rank),
        })
    }

    /// Same matroid with every list in canonical order.
    pub fn canonical(&self, ground: &Ground) -> Result<MatroidSpec> {
        let n = Names(ground);
        Ok(match self {
            MatroidSpec::Free(e) => MatroidSpec::Free(n.sorted(e)?),
            MatroidSpec::Uniform { elements, rank } => MatroidSpec::Uniform {
                elements: n.sorted(elements)?,
                rank: *rank,
            },
            MatroidSpec::Partition(blocks) => {
                let mut v: Vec<(ElemSet, usize)> = blocks
                    .iter()
                    .map(|b| Ok((n.set(&b.elements)?, b.capacity)))
                    .collect::<Result<_>>()?;
                v.sort();
                MatroidSpec::Partition(
                    v.into_iter()
                        .map(|(s, capacity)| Block {
                            elements: ground.names(s),
                            capacity,
                        })
                        .collect(),
                )
            }
            MatroidSpec::Graphic(edges) => {
                let mut v: Vec<(usize, GraphEdge)> = edges
                    .iter()
                    .map(|g| Ok((n.one(&g.element)?, g.clone())))
                    .collect::<Result<_>>()?;
                v.sort_by_key(|(e, _)| *e);
                MatroidSpec::Graphic(v.into_iter().map(|(_, g)| g).collect())
            }
            MatroidSpec::Independents { elements, sets } => MatroidSpec::Independents {
                elements: n.sorted(elements)?,
                sets: n.sorted_family(sets)?,
            },
            MatroidSpec::Bases { elements, sets } => MatroidSpec::Bases {
                elements: n.sorted(elements)?,
                sets: n.sorted_family(sets)?,
            },
            MatroidSpec::DirectSum(children) => {
                MatroidSpec::DirectSum(children.iter().map(|c| c.canonical(ground)).collect::<Result<_>>()?)
            }
            MatroidSpec::Restrict { matroid, to } => MatroidSpec::Restrict {
                matroid: Box::new(matroid.canonical(ground)?),
                to: n.sorted(to)?,
            },
            MatroidSpec::Contract { matroid, by } => MatroidSpec::Contract {
                matroid: Box::new(matroid.canonical(ground)?),
                by: n.sorted(by)?,
            },
            MatroidSpec::Truncate { matroid, rank } => MatroidSpec::Truncate {
                matroid: Box::new(matroid.canonical(ground)?),
                rank: *rank,
            },
        })
    }

    /// Description of an in-memory matroid. Parallel-copy matroids are spelled
    /// out as their independent sets.
    pub fn describe(m: &Matroid, ground: &Ground) -> MatroidSpec {
        let ids = |s: ElemSet| ground.names(s);
        let family = |sets: Vec<ElemSet>| -> Vec<Vec<String>> {
            let mut sets = sets;
            sets.sort();
            sets.into_iter().map(ids).collect()
        };
        match m.kind() {
            MatroidKind::Free => MatroidSpec::Free(ids(m.ground())),
            MatroidKind::Uniform { rank } => MatroidSpec::Uniform {
                elements: ids(m.ground()),
                rank: *rank,
            },
            MatroidKind::Partition { parts } => MatroidSpec::Partition(
                parts
                    .iter()
                    .map(|(s, c)| Block {
                        elements: ids(*s),
                        capacity: *c,
                    })
                    .collect(),
            ),
            MatroidKind::Graphic { ends, vertices } => MatroidSpec::Graphic(
                m.ground()
                    .iter()
                    .filter_map(|e| {
                        ends[e].map(|(a, b)| GraphEdge {
                            element: ground.id(e).to_string(),
                            ends: (vertices[a].clone(), vertices[b].clone()),
                        })
                    })
                    .collect(),
            ),
            MatroidKind::Independents { sets } => MatroidSpec::Independents {
                elements: ids(m.ground()),
                sets: family(sets.iter().copied().collect()),
            },
            MatroidKind::Bases { bases, .. } => MatroidSpec::Bases {
                elements: ids(m.ground()),
                sets: family(bases.clone()),
            },
            MatroidKind::DirectSum { children } => {
                MatroidSpec::DirectSum(children.iter().map(|c| MatroidSpec::describe(c, ground)).collect())
            }
            MatroidKind::Restriction { child } => MatroidSpec::Restrict {
                matroid: Box::new(MatroidSpec::describe(child, ground)),
                to: ids(m.ground()),
            },
            MatroidKind::Contraction { child, contracted, .. } => MatroidSpec::Contract {
                matroid: Box::new(MatroidSpec::describe(child, ground)),
                by: ids(*contracted),
            },
            MatroidKind::Truncation { child, k } => MatroidSpec::Truncate {
                matroid: Box::new(MatroidSpec::describe(child, ground)),
                rank: *k,
            },
            MatroidKind::Lift { .. } => MatroidSpec::Independents {
                elements: ids(m.ground()),
                sets: family(m.independent_sets()),
            },
        }
    }
}

fn whole_ground(m: &Matroid, ground: &Ground, name: &str) -> Result<()> {
    if m.ground() != ground.all() {
        return Err(Error::Schema(format!("`{name}` must be defined on the whole ground")));
    }
    Ok(())
}

fn pair_of(names: &Names, (a, b): &(String, String)) -> Result<(usize, usize)> {
    Ok((names.one(a)?, names.one(b)?))
}

impl AgentDoc {
    fn block(&self, names: &Names) -> Result<ElemSet> {
        let mut s = names.set(&self.part)?;
        for p in &self.pairs {
            let (a, b) = pair_of(names, p)?;
            s.insert(a);
            s.insert(b);
        }
        for t in &self.tiers {
            for id in t.ids() {
                let e = names.one(id)?;
                if s.contains(e) && !self.part.contains(id) {
                    return Err(Error::Schema(format!("element `{id}` ranked twice")));
                }
                s.insert(e);
            }
        }
        Ok(s)
    }

    fn build(&self, names: &Names) -> Result<Agent> {
        let part = self.block(names)?;
        let mut pairs: Vec<(usize, usize)> = self.pairs.iter().map(|p| pair_of(names, p)).collect::<Result<_>>()?;
        for (i, hi) in self.tiers.iter().enumerate() {
            for lo in &self.tiers[i + 1..] {
                for a in hi.ids() {
                    for b in lo.ids() {
                        pairs.push((names.one(a)?, names.one(b)?));
                    }
                }
            }
        }
        Ok(Agent {
            part,
            order: PartialOrder::from_pairs(part, &pairs)?,
        })
    }

    fn canonical(&self, names: &Names) -> Result<AgentDoc> {
        let part = self.block(names)?;
        let mut pairs: Vec<(usize, usize)> = self.pairs.iter().map(|p| pair_of(names, p)).collect::<Result<_>>()?;
        pairs.sort();
        pairs.dedup();
        let g = names.0;
        Ok(AgentDoc {
            name: self.name.clone(),
            part: g.names(part),
            pairs: pairs
                .into_iter()
                .map(|(a, b)| (g.id(a).to_string(), g.id(b).to_string()))
                .collect(),
            tiers: self
                .tiers
                .iter()
                .map(|t| Ok(Tier::from_ids(names.sorted(t.ids())?)))
                .collect::<Result<_>>()?,
        })
    }
}

fn canonical_weights(names: &Names, w: &BTreeMap<String, Rat>) -> Result<BTreeMap<String, Rat>> {
    let dense = names.weights(w)?;
    Ok(names
        .0
        .ids()
        .iter()
        .zip(dense)
        .map(|(id, v)| (id.clone(), Rat(v)))
        .collect())
}

fn summands_of(spec: &MatroidSpec, ground: &Ground) -> Result<Vec<Matroid>> {
    match spec {
        MatroidSpec::DirectSum(children) => children.iter().map(|c| c.build(ground)).collect(),
        other => Ok(vec![other.build(ground)?]),
    }
}

fn ranking_of(names: &Names, ids: &[String], side: &str) -> Result<Ranking> {
    let list: Vec<usize> = ids.iter().map(|id| names.one(id)).collect::<Result<_>>()?;
    let r = Ranking::from_list(&list).map_err(schema_of)?;
    if !r.covers(names.0.all()) || list.len() != names.0.len() {
        return Err(Error::Schema(format!(
            "the `{side}` ranking must list every ground element exactly once"
        )));
    }
    Ok(r)
}

impl OneSidedDoc {
    pub fn build(&self) -> Result<Instance> {
        let ground = Ground::new(&self.ground)?;
        let names = Names(&ground);
        let m2 = self.m2.build(&ground)?;
        whole_ground(&m2, &ground, "m2")?;
        let agents: Vec<Agent> = self.preferences.iter().map(|a| a.build(&names)).collect::<Result<_>>()?;
        let mut seen = ElemSet::EMPTY;
        for a in &agents {
            if !seen.is_disjoint(a.part) {
                return Err(Error::Schema(format!(
                    "element `{}` belongs to two agents",
                    ground.id(seen.intersection(a.part).first().expect("overlap"))
                )));
            }
            seen = seen.union(a.part);
        }
        if seen != ground.all() {
            return Err(Error::Schema(format!(
                "elements {} belong to no agent",
                ground.show(ground.all().difference(seen))
            )));
        }
        let objective = match (&self.weights, &self.utility) {
            (Some(_), Some(_)) => {
                return Err(Error::Schema("give either `weights` or `utility`, not both".into()))
            }
            (Some(w), None) => Objective::Weights(names.weights(w)?),
            (None, Some(u)) => {
                let mut values = BTreeMap::new();
                for entry in u {
                    let s = names.set(&entry.set)?;
                    if values.insert(s, entry.value.0.clone()).is_some() {
                        return Err(Error::Schema(format!("utility lists {} twice", ground.show(s))));
                    }
                }
                Objective::Utility(ValuedFamily::new(ground.all(), values)?)
            }
            (None, None) => return Ok(Instance::PopularBase(PopularBaseInstance { ground, agents, m2 })),
        };
        Ok(Instance::OneSided(
            OneSidedInstance::new(ground, agents, m2, objective).map_err(schema_of)?,
        ))
    }

    fn canonical(&self) -> Result<OneSidedDoc> {
        let ground = Ground::new(&self.ground)?;
        let names = Names(&ground);
        let utility = match &self.utility {
            None => None,
            Some(u) => {
                let mut v: Vec<(ElemSet, Rat)> = u
                    .iter()
                    .map(|e| Ok((names.set(&e.set)?, e.value.clone())))
                    .collect::<Result<_>>()?;
                v.sort();
                Some(
                    v.into_iter()
                        .map(|(s, value)| UtilityEntry {
                            set: ground.names(s),
                            value,
                        })
                        .collect(),
                )
            }
        };
        Ok(OneSidedDoc {
            model: OneSidedTag::Tag,
            ground: self.ground.clone(),
            m2: self.m2.canonical(&ground)?,
            preferences: self
                .preferences
                .iter()
                .map(|a| a.canonical(&names))
                .collect::<Result<_>>()?,
            weights: self.weights.as_ref().map(|w| canonical_weights(&names, w)).transpose()?,
            utility,
        })
    }
}

impl TwoSidedDoc {
    pub fn build(&self) -> Result<Instance> {
        let ground = Ground::new(&self.ground)?;
        let names = Names(&ground);
        let side = |spec: &MatroidSpec, ids: &[String], name: &str| -> Result<OrderedMatroid> {
            let summands = summands_of(spec, &ground)?;
            let m = OrderedMatroid::new(summands, ranking_of(&names, ids, name)?).map_err(schema_of)?;
            whole_ground(m.matroid(), &ground, name)?;
            Ok(m)
        };
        let m1 = side(&self.m1, &self.preferences.m1, "m1")?;
        let m2 = side(&self.m2, &self.preferences.m2, "m2")?;
        let w = match &self.weights {
            Some(w) => names.weights(w)?,
            None => vec![zero(); ground.len()],
        };
        Ok(Instance::TwoSided(TwoSidedInstance::new(ground, m1, m2, w).map_err(schema_of)?))
    }

    fn canonical(&self) -> Result<TwoSidedDoc> {
        let ground = Ground::new(&self.ground)?;
        let names = Names(&ground);
        Ok(TwoSidedDoc {
            model: TwoSidedTag::Tag,
            ground: self.ground.clone(),
            m1: self.m1.canonical(&ground)?,
            m2: self.m2.canonical(&ground)?,
            preferences: self.preferences.clone(),
            weights: self.weights.as_ref().map(|w| canonical_weights(&names, w)).transpose()?,
        })
    }
}

impl NearOptDoc {
    pub fn build(&self) -> Result<Instance> {
        let edge_ids = Ground::new(&self.ground)?;
        let mut vertex_list = self.left.clone();
        vertex_list.extend(self.right.iter().cloned());
        let vertices = Ground::new(&vertex_list)?;
        let side: Vec<Side> = (0..vertices.len())
            .map(|v| if v < self.left.len() { Side::Left } else { Side::Right })
            .collect();
        let mut edges: Vec<Option<Edge>> = vec![None; edge_ids.len()];
        for e in &self.edges {
            let i = Names(&edge_ids).one(&e.id)?;
            if edges[i].is_some() {
                return Err(Error::Schema(format!("edge `{}` described twice", e.id)));
            }
            let vn = Names(&vertices);
            edges[i] = Some(Edge {
                left: vn.one(&e.left)?,
                right: vn.one(&e.right)?,
                weight: e.weight.as_ref().map_or_else(one, |w| w.0.clone()),
            });
        }
        let edges: Vec<Edge> = edges
            .into_iter()
            .enumerate()
            .map(|(i, e)| e.ok_or_else(|| Error::Schema(format!("edge `{}` has no description", edge_ids.id(i)))))
            .collect::<Result<_>>()?;
        let mut tiers = vec![Vec::new(); vertices.len()];
        for p in &self.preferences {
            let v = Names(&vertices).one(&p.vertex)?;
            if !tiers[v].is_empty() {
                return Err(Error::Schema(format!("preferences of `{}` given twice", p.vertex)));
            }
            tiers[v] = p
                .tiers
                .iter()
                .map(|t| Ok(Names(&edge_ids).set(t.ids())?.to_vec()))
                .collect::<Result<_>>()?;
        }
        let voters = match self.voters.unwrap_or(VotersDoc::Both) {
            VotersDoc::Left => Voters::Left,
            VotersDoc::Both => Voters::Both,
        };
        let graph = PrefBipartite::new(vertices, side, edge_ids, edges, tiers, voters)?;
        let threshold = self.threshold.as_ref().map_or_else(zero, |t| t.0.clone());
        Ok(Instance::NearOpt { graph, threshold })
    }

    fn canonical(&self) -> Result<NearOptDoc> {
        let Instance::NearOpt { graph, threshold } = self.build()? else {
            unreachable!("near-opt documents build graphs")
        };
        Ok(NearOptDoc::describe(&graph, &threshold))
    }

    pub fn describe(g: &PrefBipartite, threshold: &Q) -> NearOptDoc {
        let ids = |side: Side| -> Vec<String> {
            (0..g.vertices.len())
                .filter(|&v| g.side[v] == side)
                .map(|v| g.vertices.id(v).to_string())
                .collect()
        };
        NearOptDoc {
            model: NearOptTag::Tag,
            ground: g.edge_ids.ids().to_vec(),
            left: ids(Side::Left),
            right: ids(Side::Right),
            edges: g
                .edges
                .iter()
                .enumerate()
                .map(|(i, e)| EdgeDoc {
                    id: g.edge_ids.id(i).to_string(),
                    left: g.vertices.id(e.left).to_string(),
                    right: g.vertices.id(e.right).to_string(),
                    weight: Some(Rat(e.weight.clone())),
                })
                .collect(),
            preferences: (0..g.vertices.len())
                .filter(|&v| !g.tiers[v].is_empty())
                .map(|v| VertexPrefs {
                    vertex: g.vertices.id(v).to_string(),
                    tiers: g.tiers[v]
                        .iter()
                        .map(|t| {
                            let s: ElemSet = t.iter().copied().collect();
                            Tier::from_ids(g.edge_ids.names(s))
                        })
                        .collect(),
                })
                .collect(),
            voters: Some(match g.voters {
                Voters::Left => VotersDoc::Left,
                Voters::Both => VotersDoc::Both,
            }),
            threshold: Some(Rat(threshold.clone())),
        }
    }
}

impl InstanceDocument {
    pub fn build(&self) -> Result<Instance> {
        match self {
            InstanceDocument::OneSided(d) => d.build(),
            InstanceDocument::TwoSided(d) => d.build(),
            InstanceDocument::NearOpt(d) => d.build(),
        }
    }

    /// Sorted lists, normalized rationals and explicit defaults.
    pub fn canonical(&self) -> Result<InstanceDocument> {
        Ok(match self {
            InstanceDocument::OneSided(d) => InstanceDocument::OneSided(d.canonical()?),
            InstanceDocument::TwoSided(d) => InstanceDocument::TwoSided(d.canonical()?),
            InstanceDocument::NearOpt(d) => InstanceDocument::NearOpt(d.canonical()?),
        })
    }

    pub fn from_one_sided(inst: &OneSidedInstance) -> InstanceDocument {
        let g = &inst.ground;
        let (weights, utility) = match &inst.objective {
            Objective::Weights(w) => (
                Some(g.ids().iter().cloned().zip(w.iter().map(|x| Rat(x.clone()))).collect()),
                None,
            ),
            Objective::Utility(f) => (
                None,
                Some(
                    f.iter()
                        .map(|(s, v)| UtilityEntry {
                            set: g.names(s),
                            value: Rat(v.clone()),
                        })
                        .collect(),
                ),
            ),
        };
        InstanceDocument::OneSided(OneSidedDoc {
            model: OneSidedTag::Tag,
            ground: g.ids().to_vec(),
            m2: MatroidSpec::describe(&inst.m2, g),
            preferences: agent_docs(g, &inst.agents),
            weights,
            utility,
        })
    }

    pub fn from_popular_base(inst: &PopularBaseInstance) -> InstanceDocument {
        let g = &inst.ground;
        InstanceDocument::OneSided(OneSidedDoc {
            model: OneSidedTag::Tag,
            ground: g.ids().to_vec(),
            m2: MatroidSpec::describe(&inst.m2, g),
            preferences: agent_docs(g, &inst.agents),
            weights: None,
            utility: None,
        })
    }

    pub fn from_two_sided(inst: &TwoSidedInstance) -> InstanceDocument {
        let g = &inst.ground;
        let side = |m: &OrderedMatroid| -> MatroidSpec {
            MatroidSpec::DirectSum(m.summands().iter().map(|s| MatroidSpec::describe(s, g)).collect())
        };
        let rank = |m: &OrderedMatroid| -> Vec<String> {
            m.order().list().into_iter().map(|e| g.id(e).to_string()).collect()
        };
        InstanceDocument::TwoSided(TwoSidedDoc {
            model: TwoSidedTag::Tag,
            ground: g.ids().to_vec(),
            m1: side(&inst.m1),
            m2: side(&inst.m2),
            preferences: Rankings {
                m1: rank(&inst.m1),
                m2: rank(&inst.m2),
            },
            weights: Some(g.ids().iter().cloned().zip(inst.weights.iter().map(|x| Rat(x.clone()))).collect()),
        })
    }

    pub fn from_near_opt(g: &PrefBipartite, threshold: &Q) -> InstanceDocument {
        InstanceDocument::NearOpt(NearOptDoc::describe(g, threshold))
    }
}

fn agent_docs(g: &Ground, agents: &[Agent]) -> Vec<AgentDoc> {
    agents
        .iter()
        .map(|a| AgentDoc {
            name: None,
            part: g.names(a.part),
            pairs: a
                .order
                .pairs()
                .map(|(x, y)| (g.id(x).to_string(), g.id(y).to_string()))
                .collect(),
            tiers: Vec::new(),
        })
        .collect()
}

/// Input of `gen exact-matching`: a bipartite graph with red and blue edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColoredGraphDoc {
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub edges: Vec<ColoredEdgeDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColoredEdgeDoc {
    pub left: String,
    pub right: String,
    pub color: ColorDoc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorDoc {
    Red,
    Blue,
}

impl ColoredGraphDoc {
    pub fn parse(text: &str) -> Result<ColoredGraphDoc> {
        from_json(text, "invalid colored graph")
    }

    pub fn build(&self) -> Result<ColoredBipartite> {
        let l = Ground::new(&self.left)?;
        let r = Ground::new(&self.right)?;
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let color = match e.color {
                    ColorDoc::Red => Color::Red,
                    ColorDoc::Blue => Color::Blue,
                };
                Ok((Names(&l).one(&e.left)?, Names(&r).one(&e.right)?, color))
            })
            .collect::<Result<_>>()?;
        Ok(ColoredBipartite {
            left: self.left.clone(),
            right: self.right.clone(),
            edges,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Solution,
    NoneExists,
    Infeasible,
    Budget,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Solution => 0,
            Status::NoneExists => 2,
            Status::Infeasible => 3,
            Status::Budget => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedSet {
    pub set: Vec<String>,
    pub value: Rat,
}

/// Sparse dual: `y` (and `z` for two sides) over subsets, `alpha` per agent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualDoc {
    pub y: Vec<WeightedSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<WeightedSet>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<Rat>>,
    pub value: Rat,
}

pub fn weighted_sets(g: &Ground, y: &BTreeMap<ElemSet, Q>) -> Vec<WeightedSet> {
    y.iter()
        .map(|(s, v)| WeightedSet {
            set: g.names(*s),
            value: Rat(v.clone()),
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionDoc {
    /// Ground of the reduced instance, dummies last.
    pub ground: Vec<String>,
    pub dummies: Vec<String>,
    /// Original elements the reduction keeps.
    pub kept: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_solution: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificates {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimum: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tight: Option<Vec<String>>,
    /// Dual chains per side, smallest set first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<Vec<Vec<Vec<String>>>>,
    /// Splitting vector of a utility reduction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<BTreeMap<String, Rat>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<String>>,
    /// Level of the copy chosen for each solution element.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<BTreeMap<String, i32>>,
}

impl Certificates {
    pub fn is_empty(&self) -> bool {
        *self == Certificates::default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RivalEntry {
    pub rival: Vec<String>,
    /// `Delta` or vote total of the solution against the rival.
    pub margin: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transcript {
    pub optimal: bool,
    pub popular: bool,
    /// Set when the rival list was left out for size.
    #[serde(default)]
    pub omitted: bool,
    #[serde(default)]
    pub rivals: Vec<RivalEntry>,
}

/// Rival lists longer than this are left out of reports.
pub const TRANSCRIPT_LIMIT: usize = 4096;

impl Transcript {
    pub fn new(g: &Ground, optimal: bool, popular: bool, rivals: &[(ElemSet, i64)]) -> Transcript {
        let omitted = rivals.len() > TRANSCRIPT_LIMIT;
        Transcript {
            optimal,
            popular,
            omitted,
            rivals: if omitted {
                Vec::new()
            } else {
                rivals
                    .iter()
                    .map(|(s, m)| RivalEntry {
                        rival: g.names(*s),
                        margin: *m,
                    })
                    .collect()
            },
        }
    }

    /// Transcript for a run whose verification exceeded the budget.
    pub fn over_budget(optimal: bool, popular: bool) -> Transcript {
        Transcript {
            optimal,
            popular,
            omitted: true,
            rivals: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReport {
    pub command: String,
    pub status: Status,
    pub instance_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<String>>,
    /// Weight or utility of the solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Rat>,
    #[serde(default, skip_serializing_if = "Certificates::is_empty")]
    pub certificates: Certificates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Transcript>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl SolveReport {
    pub fn new(command: &str, status: Status, instance_hash: String) -> SolveReport {
        SolveReport {
            command: command.to_string(),
            status,
            instance_hash,
            solution: None,
            value: None,
            certificates: Certificates::default(),
            verification: None,
            message: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    const SMALL: &str = r#"{
        "model": "one-sided",
        "ground": ["x", "y", "z"],
        "m2": {"uniform": {"elements": ["z", "y", "x"], "rank": 2}},
        "preferences": [{"tiers": ["x", "y"]}, {"part": ["z"]}],
        "weights": {"x": 1, "y": "2", "z": "0/5"}
    }"#;

    #[test]
    fn rationals_accept_integers_and_fractions() {
        let r: Rat = serde_json::from_str("\"-6/4\"").unwrap();
        assert_eq!(r.0, qf(-3, 2));
        assert_eq!(serde_json::to_string(&r).unwrap(), "\"-3/2\"");
        let r: Rat = serde_json::from_str("7").unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), "7");
        assert!(serde_json::from_str::<Rat>("0.5").is_err());
        assert!(serde_json::from_str::<Rat>("\"1/0\"").is_err());
    }

    #[test]
    fn small_document_builds() {
        let doc = parse_instance(SMALL).unwrap();
        let Instance::OneSided(inst) = doc.build().unwrap() else { panic!() };
        assert_eq!(inst.agents.len(), 2);
        assert!(inst.agents[0].order.prefers(0, 1));
        assert_eq!(inst.objective, Objective::Weights(vec![q(1), q(2), q(0)]));
        assert_eq!(inst.m2.full_rank(), 2);
    }

    #[test]
    fn canonical_emission_is_stable() {
        let doc = parse_instance(SMALL).unwrap();
        let once = emit_instance(&doc).unwrap();
        let again = emit_instance(&parse_instance(&once).unwrap()).unwrap();
        assert_eq!(once, again);
        let InstanceDocument::OneSided(d) = doc.canonical().unwrap() else { panic!() };
        assert_eq!(d.m2, MatroidSpec::Uniform { elements: vec!["x".into(), "y".into(), "z".into()], rank: 2 });
        assert_eq!(d.weights.unwrap()["z"], Rat(q(0)));
    }

    #[test]
    fn minimal_document_round_trips() {
        let text = r#"{"model": "one-sided", "ground": ["a"], "m2": {"free": ["a"]},
                       "preferences": [{"part": ["a"]}], "weights": {"a": 1}}"#;
        let canon = emit_instance(&parse_instance(text).unwrap()).unwrap();
        assert_eq!(emit_instance(&parse_instance(&canon).unwrap()).unwrap(), canon);
    }

    #[test]
    fn duplicate_ids_are_named() {
        let text = SMALL.replace(r#"["x", "y", "z"]"#, r#"["x", "y", "x"]"#);
        let err = parse_instance(&text).unwrap_err();
        assert!(matches!(&err, Error::Schema(m) if m.contains("`x`")), "{err}");
    }

    #[test]
    fn unknown_fields_report_their_path() {
        let text = SMALL.replace(r#""rank": 2"#, r#""rank": 2, "colour": 1"#);
        let err = parse_instance(&text).unwrap_err().to_string();
        assert!(err.contains("m2.uniform") && err.contains("colour"), "{err}");
        let text = SMALL.replace(r#""ground""#, r#""extra": 0, "ground""#);
        let err = parse_instance(&text).unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn undeclared_ids_are_schema_errors() {
        let text = SMALL.replace(r#"{"part": ["z"]}"#, r#"{"part": ["w"]}"#);
        let err = parse_instance(&text).unwrap_err();
        assert!(matches!(&err, Error::Schema(m) if m.contains("`w`")), "{err}");
    }

    #[test]
    fn uncovered_elements_are_rejected() {
        let text = SMALL.replace(r#", {"part": ["z"]}"#, "");
        assert!(matches!(parse_instance(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn describe_round_trips_through_build() {
        let g = Ground::new(&["a", "b", "c", "d"]).unwrap();
        let gr = Matroid::graphic(vec![
            (0, "u".into(), "v".into()),
            (1, "v".into(), "w".into()),
            (2, "u".into(), "w".into()),
        ])
        .unwrap();
        let m = Matroid::direct_sum(vec![gr.contract(ElemSet::singleton(0)).unwrap(), Matroid::free(ElemSet::singleton(3))])
            .unwrap()
            .truncate(2);
        let spec = MatroidSpec::describe(&m, &g);
        let back = spec.build(&g).unwrap();
        assert_eq!(back.ground(), m.ground());
        assert_eq!(back.independent_sets(), m.independent_sets());
    }

    #[test]
    fn report_round_trips() {
        let mut r = SolveReport::new("solve-one", Status::Solution, "00".into());
        r.solution = Some(vec!["y".into()]);
        r.value = Some(Rat(qf(5, 2)));
        r.verification = Some(Transcript::over_budget(true, true));
        let text = emit(&r);
        assert_eq!(parse_report(&text).unwrap(), r);
    }
}
