//! JSON interchange. Every number is an exact rational string `"p/q"`
//! (`"p"` when the denominator is 1); terms are listed in graded
//! lexicographic order so output is byte-stable.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::normalform::{
    ConditionRecord, DegreeReport, NormalFormResult, ParameterRecord, Resonance, Strategy,
    StrategyComparison,
};
use crate::poly::{BiPoly, Bideg};
use crate::scalar::{format_rat, parse_rat, GaussRat, ParamMono, ParamScalar, Rat, Scalar};
use crate::surface::{FormalMap, Surface};

/// Rational in string form; parse errors carry the JSON position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatStr(pub Rat);

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = RatStr;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational string \"p\" or \"p/q\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<RatStr, E> {
                parse_rat(v).map(RatStr).map_err(|e| match e {
                    Error::Parse(msg) => E::custom(msg),
                    other => E::custom(other),
                })
            }
        }
        d.deserialize_str(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonoJson {
    pub exponents: Vec<u16>,
    pub re: RatStr,
    pub im: RatStr,
}

/// Coefficient: constant part plus, for parametric values, the
/// nonconstant monomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueJson {
    pub re: RatStr,
    pub im: RatStr,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<MonoJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub m: u32,
    pub n: u32,
    pub re: RatStr,
    pub im: RatStr,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<MonoJson>,
}

/// Map term `c·z^k·w^l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapTermJson {
    pub k: u32,
    pub l: u32,
    pub re: RatStr,
    pub im: RatStr,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<MonoJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceJson {
    pub truncation: u32,
    pub coeffs: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapJson {
    pub truncation: u32,
    pub f: Vec<MapTermJson>,
    pub g: Vec<MapTermJson>,
}

/// Scalars with a JSON coefficient form.
pub trait JsonScalar: Scalar {
    fn to_value(&self) -> ValueJson;
    fn from_value(v: ValueJson) -> Result<Self>;
}

impl JsonScalar for GaussRat {
    fn to_value(&self) -> ValueJson {
        ValueJson { re: RatStr(self.re.clone()), im: RatStr(self.im.clone()), params: Vec::new() }
    }

    fn from_value(v: ValueJson) -> Result<Self> {
        if !v.params.is_empty() {
            return Err(Error::Parse("parametric coefficient where a number is required".into()));
        }
        Ok(GaussRat::new(v.re.0, v.im.0))
    }
}

impl JsonScalar for ParamScalar {
    fn to_value(&self) -> ValueJson {
        let c = self.constant_term();
        let params = self
            .terms()
            .filter(|(e, _)| !e.is_empty())
            .map(|(e, c)| MonoJson { exponents: e.clone(), re: RatStr(c.re.clone()), im: RatStr(c.im.clone()) })
            .collect();
        ValueJson { re: RatStr(c.re), im: RatStr(c.im), params }
    }

    fn from_value(v: ValueJson) -> Result<Self> {
        let mut terms: Vec<(ParamMono, GaussRat)> = vec![(Vec::new(), GaussRat::new(v.re.0, v.im.0))];
        for m in v.params {
            if m.exponents.iter().all(|&x| x == 0) {
                return Err(Error::Parse("parameter monomial without parameters".into()));
            }
            terms.push((m.exponents, GaussRat::new(m.re.0, m.im.0)));
        }
        Ok(ParamScalar::from_terms(terms))
    }
}

fn value_of(re: RatStr, im: RatStr, params: Vec<MonoJson>) -> ValueJson {
    ValueJson { re, im, params }
}

pub fn poly_to_json<S: JsonScalar>(p: &BiPoly<S>) -> Vec<TermJson> {
    p.terms()
        .map(|(k, c)| {
            let v = c.to_value();
            TermJson { m: k.m, n: k.n, re: v.re, im: v.im, params: v.params }
        })
        .collect()
}

pub fn poly_from_json<S: JsonScalar>(terms: Vec<TermJson>) -> Result<BiPoly<S>> {
    let mut p = BiPoly::zero();
    let mut seen = std::collections::BTreeSet::new();
    for t in terms {
        if !seen.insert((t.m, t.n)) {
            return Err(Error::Parse(format!("duplicate term z^{} zb^{}", t.m, t.n)));
        }
        p.add_term(Bideg::new(t.m, t.n), S::from_value(value_of(t.re, t.im, t.params))?);
    }
    Ok(p)
}

fn map_part_to_json<S: JsonScalar>(p: &BiPoly<S>) -> Vec<MapTermJson> {
    p.terms()
        .map(|(k, c)| {
            let v = c.to_value();
            MapTermJson { k: k.m, l: k.n, re: v.re, im: v.im, params: v.params }
        })
        .collect()
}

fn map_part_from_json<S: JsonScalar>(terms: Vec<MapTermJson>) -> Result<BiPoly<S>> {
    poly_from_json(
        terms
            .into_iter()
            .map(|t| TermJson { m: t.k, n: t.l, re: t.re, im: t.im, params: t.params })
            .collect(),
    )
}

pub fn surface_to_json<S: JsonScalar>(s: &Surface<S>) -> SurfaceJson {
    SurfaceJson { truncation: s.truncation(), coeffs: poly_to_json(s.coeffs()) }
}

pub fn surface_from_json<S: JsonScalar>(j: SurfaceJson) -> Result<Surface<S>> {
    Surface::new(j.truncation, poly_from_json(j.coeffs)?)
}

pub fn map_to_json<S: JsonScalar>(m: &FormalMap<S>) -> MapJson {
    MapJson { truncation: m.truncation(), f: map_part_to_json(m.f()), g: map_part_to_json(m.g()) }
}

pub fn map_from_json<S: JsonScalar>(j: MapJson) -> Result<FormalMap<S>> {
    FormalMap::new(j.truncation, map_part_from_json(j.f)?, map_part_from_json(j.g)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionJson {
    pub degree: u32,
    pub depth: usize,
    pub index: usize,
    pub value: ValueJson,
    pub resolved: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonJson {
    pub ortho_dim: usize,
    pub chain_dim: usize,
    pub overlap_dim: usize,
    pub chain_spans: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeJson {
    pub degree: u32,
    pub unknowns: usize,
    pub rank: usize,
    pub kernel_dim: usize,
    pub normal_dim: usize,
    pub introduced: Vec<usize>,
    pub resolved: Vec<usize>,
    pub conditions: Vec<ConditionJson>,
    pub normal_component: Vec<TermJson>,
    pub comparison: Option<ComparisonJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterJson {
    pub index: usize,
    pub degree: u32,
    pub label: String,
    pub value: Option<ValueJson>,
    pub resolved_at: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultJson {
    pub order: u32,
    pub strategy: String,
    pub resonance: String,
    pub surface: SurfaceJson,
    pub map: MapJson,
    pub w: Vec<TermJson>,
    pub degrees: Vec<DegreeJson>,
    pub parameters: Vec<ParameterJson>,
    pub unresolved: Vec<usize>,
}

pub fn result_to_json(r: &NormalFormResult) -> ResultJson {
    ResultJson {
        order: r.order,
        strategy: r.strategy.name().into(),
        resonance: r.resonance.name().into(),
        surface: surface_to_json(&r.surface),
        map: map_to_json(&r.map),
        w: poly_to_json(&r.w),
        degrees: r
            .degrees
            .iter()
            .map(|d| DegreeJson {
                degree: d.degree,
                unknowns: d.unknowns,
                rank: d.rank,
                kernel_dim: d.kernel_dim,
                normal_dim: d.normal_dim,
                introduced: d.introduced.clone(),
                resolved: d.resolved.clone(),
                conditions: d
                    .conditions
                    .iter()
                    .map(|c| ConditionJson {
                        degree: c.degree,
                        depth: c.depth,
                        index: c.index,
                        value: c.value.to_value(),
                        resolved: c.resolved,
                    })
                    .collect(),
                normal_component: poly_to_json(&d.normal_component),
                comparison: d.comparison.as_ref().map(|c| ComparisonJson {
                    ortho_dim: c.ortho_dim,
                    chain_dim: c.chain_dim,
                    overlap_dim: c.overlap_dim,
                    chain_spans: c.chain_spans,
                }),
            })
            .collect(),
        parameters: r
            .parameters
            .iter()
            .map(|p| ParameterJson {
                index: p.index,
                degree: p.degree,
                label: p.label.clone(),
                value: p.value.as_ref().map(|v| v.to_value()),
                resolved_at: p.resolved_at,
            })
            .collect(),
        unresolved: r.unresolved(),
    }
}

pub fn result_from_json(j: ResultJson) -> Result<NormalFormResult> {
    let strategy: Strategy = j.strategy.parse()?;
    let resonance: Resonance = j.resonance.parse()?;
    let degrees = j
        .degrees
        .into_iter()
        .map(|d| {
            Ok(DegreeReport {
                degree: d.degree,
                unknowns: d.unknowns,
                rank: d.rank,
                kernel_dim: d.kernel_dim,
                normal_dim: d.normal_dim,
                introduced: d.introduced,
                resolved: d.resolved,
                conditions: d
                    .conditions
                    .into_iter()
                    .map(|c| {
                        Ok(ConditionRecord {
                            degree: c.degree,
                            depth: c.depth,
                            index: c.index,
                            value: ParamScalar::from_value(c.value)?,
                            resolved: c.resolved,
                        })
                    })
                    .collect::<Result<_>>()?,
                normal_component: poly_from_json(d.normal_component)?,
                comparison: d.comparison.map(|c| StrategyComparison {
                    ortho_dim: c.ortho_dim,
                    chain_dim: c.chain_dim,
                    overlap_dim: c.overlap_dim,
                    chain_spans: c.chain_spans,
                }),
            })
        })
        .collect::<Result<_>>()?;
    let parameters = j
        .parameters
        .into_iter()
        .map(|p| {
            Ok(ParameterRecord {
                index: p.index,
                degree: p.degree,
                label: p.label,
                value: p.value.map(ParamScalar::from_value).transpose()?,
                resolved_at: p.resolved_at,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let result = NormalFormResult {
        order: j.order,
        strategy,
        resonance,
        surface: surface_from_json(j.surface)?,
        map: map_from_json(j.map)?,
        w: poly_from_json(j.w)?,
        degrees,
        parameters,
    };
    if result.unresolved() != j.unresolved {
        return Err(Error::Parse("unresolved list disagrees with parameter records".into()));
    }
    Ok(result)
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn parse_poly(text: &str) -> Result<BiPoly<GaussRat>> {
    poly_from_json(parse(text)?)
}

pub fn parse_surface(text: &str) -> Result<Surface<GaussRat>> {
    surface_from_json(parse(text)?)
}

pub fn parse_map(text: &str) -> Result<FormalMap<GaussRat>> {
    map_from_json(parse(text)?)
}

pub fn parse_result(text: &str) -> Result<NormalFormResult> {
    result_from_json(parse(text)?)
}

pub fn write_poly<S: JsonScalar>(p: &BiPoly<S>) -> String {
    to_json_string(&poly_to_json(p))
}

pub fn write_surface<S: JsonScalar>(s: &Surface<S>) -> String {
    to_json_string(&surface_to_json(s))
}

pub fn write_map<S: JsonScalar>(m: &FormalMap<S>) -> String {
    to_json_string(&map_to_json(m))
}

pub fn write_result(r: &NormalFormResult) -> String {
    to_json_string(&result_to_json(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_literal() {
        let p = BiPoly::from_terms([((1, 2), GaussRat::from_ratio(-3, 4)), ((3, 0), GaussRat::i())]);
        let text = write_poly(&p);
        assert!(text.contains("\"re\": \"-3/4\""));
        assert!(text.find("\"m\": 1").unwrap() < text.find("\"m\": 3").unwrap());
        assert_eq!(parse_poly(&text).unwrap(), p);
    }

    #[test]
    fn bad_rational_reports_position() {
        let text = "[\n  {\"m\": 1, \"n\": 0, \"re\": \"1/0\", \"im\": \"0\"}\n]";
        let e = parse_poly(text).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        assert!(e.contains("column"), "{e}");
        assert!(parse_poly("[{\"m\": 1, \"n\": 0, \"re\": \"1.5\", \"im\": \"0\"}]").is_err());
        assert!(parse_poly("[{\"m\": 1, \"n\": 0, \"re\": 1, \"im\": \"0\"}]").is_err());
    }

    #[test]
    fn duplicate_and_unknown_fields_rejected() {
        assert!(parse_poly("[{\"m\":1,\"n\":0,\"re\":\"1\",\"im\":\"0\"},{\"m\":1,\"n\":0,\"re\":\"2\",\"im\":\"0\"}]").is_err());
        assert!(parse_poly("[{\"m\":1,\"n\":0,\"re\":\"1\",\"im\":\"0\",\"x\":1}]").is_err());
    }

    #[test]
    fn surface_schema_enforced() {
        let ok = "{\"truncation\": 4, \"coeffs\": [{\"m\": 2, \"n\": 1, \"re\": \"1/2\", \"im\": \"0\"}]}";
        assert_eq!(parse_surface(ok).unwrap().coeffs().coeff(2, 1), GaussRat::from_ratio(1, 2));
        let low = "{\"truncation\": 4, \"coeffs\": [{\"m\": 1, \"n\": 1, \"re\": \"1\", \"im\": \"0\"}]}";
        assert!(parse_surface(low).is_err());
        let high = "{\"truncation\": 3, \"coeffs\": [{\"m\": 4, \"n\": 0, \"re\": \"1\", \"im\": \"0\"}]}";
        assert!(parse_surface(high).is_err());
    }

    #[test]
    fn parametric_values_round_trip() {
        let v = ParamScalar::param(2).mul_gauss(&GaussRat::from_ratio(1, 3)) + ParamScalar::constant(GaussRat::i());
        let back = ParamScalar::from_value(v.to_value()).unwrap();
        assert_eq!(back, v);
        assert!(GaussRat::from_value(v.to_value()).is_err());
    }
}
