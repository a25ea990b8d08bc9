use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::affine::{AffineExpr, Binding, Parser};
use super::SymbolicError;

/// Half-open strided range `begin:end:stride`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Range {
    pub begin: AffineExpr,
    pub end: AffineExpr,
    pub stride: i64,
}

impl Range {
    pub fn new(begin: impl Into<AffineExpr>, end: impl Into<AffineExpr>) -> Self {
        Self {
            begin: begin.into(),
            end: end.into(),
            stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: i64) -> Self {
        self.stride = stride;
        self
    }

    /// Number of points under `binding`; zero for empty ranges.
    pub fn len(&self, binding: &Binding) -> Result<i64, SymbolicError> {
        if self.stride <= 0 {
            return Err(SymbolicError::NonPositiveStride(self.stride));
        }
        let b = self.begin.eval(binding)?;
        let e = self.end.eval(binding)?;
        Ok(if e <= b {
            0
        } else {
            (e - b + self.stride - 1) / self.stride
        })
    }

    pub fn is_empty(&self, binding: &Binding) -> Result<bool, SymbolicError> {
        Ok(self.len(binding)? == 0)
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, sep: &str) -> fmt::Result {
        write!(f, "{}{sep}{}", self.begin, self.end)?;
        if self.stride != 1 {
            write!(f, "{sep}{}", self.stride)?;
        }
        Ok(())
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, ":")
    }
}

impl FromStr for Range {
    type Err = SymbolicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser::new(s);
        let dim = parse_dim(&mut p)?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input"));
        }
        match dim {
            Dim::Range(r) => Ok(r),
            _ => Err(p.error("expected begin:end[:stride]")),
        }
    }
}

/// One iteration parameter of a map scope.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MapParam {
    pub name: String,
    pub range: Range,
}

impl MapParam {
    pub fn new(name: impl Into<String>, range: Range) -> Self {
        Self {
            name: name.into(),
            range,
        }
    }
}

/// One dimension of a memlet subset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Dim {
    Index(AffineExpr),
    Range(Range),
    /// Index computed at run time from data; not analyzable.
    Dynamic,
}

impl Dim {
    fn extent(&self, binding: &Binding) -> Result<i64, SymbolicError> {
        match self {
            Dim::Index(_) => Ok(1),
            Dim::Range(r) => r.len(binding),
            Dim::Dynamic => Err(SymbolicError::NonAffine),
        }
    }
}

/// Symbolic description of the elements an edge moves per map iteration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Memlet {
    pub data: String,
    pub subset: Vec<Dim>,
}

impl Memlet {
    pub fn new(data: impl Into<String>, subset: Vec<Dim>) -> Self {
        Self {
            data: data.into(),
            subset,
        }
    }

    /// `data[e0, e1, ...]` with one affine index per dimension.
    pub fn indexed(data: impl Into<String>, idx: &[&str]) -> Self {
        Self::new(
            data,
            idx.iter().map(|s| Dim::Index(AffineExpr::from(*s))).collect(),
        )
    }

    pub fn is_affine(&self) -> bool {
        !self.subset.iter().any(|d| matches!(d, Dim::Dynamic))
    }

    /// Elements moved per iteration (product of per-dimension extents).
    pub fn volume(&self, binding: &Binding) -> Result<i64, SymbolicError> {
        self.subset
            .iter()
            .try_fold(1i64, |acc, d| Ok(acc * d.extent(binding)?))
    }

    fn for_each_point(
        &self,
        binding: &Binding,
        f: &mut dyn FnMut(&[i64]) -> Result<(), SymbolicError>,
    ) -> Result<(), SymbolicError> {
        fn rec(
            dims: &[Dim],
            binding: &Binding,
            cur: &mut Vec<i64>,
            f: &mut dyn FnMut(&[i64]) -> Result<(), SymbolicError>,
        ) -> Result<(), SymbolicError> {
            let Some((first, rest)) = dims.split_first() else {
                return f(cur);
            };
            match first {
                Dim::Index(e) => {
                    cur.push(e.eval(binding)?);
                    rec(rest, binding, cur, f)?;
                    cur.pop();
                }
                Dim::Range(r) => {
                    let b = r.begin.eval(binding)?;
                    for k in 0..r.len(binding)? {
                        cur.push(b + k * r.stride);
                        rec(rest, binding, cur, f)?;
                        cur.pop();
                    }
                }
                Dim::Dynamic => return Err(SymbolicError::NonAffine),
            }
            Ok(())
        }
        rec(&self.subset, binding, &mut Vec::new(), f)
    }
}

impl fmt::Display for Memlet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.data)?;
        for (i, d) in self.subset.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match d {
                Dim::Index(e) => write!(f, "{e}")?,
                Dim::Range(r) => r.fmt_with(f, " : ")?,
                Dim::Dynamic => write!(f, "?")?,
            }
        }
        write!(f, "]")
    }
}

fn parse_dim(p: &mut Parser<'_>) -> Result<Dim, SymbolicError> {
    if p.eat('?') {
        return Ok(Dim::Dynamic);
    }
    let begin = p.expr()?;
    if !p.eat(':') {
        return Ok(Dim::Index(begin));
    }
    let end = p.expr()?;
    let stride = if p.eat(':') {
        p.expr()?
            .as_constant()
            .ok_or_else(|| p.error("stride must be an integer"))?
    } else {
        1
    };
    if stride <= 0 {
        return Err(SymbolicError::NonPositiveStride(stride));
    }
    Ok(Dim::Range(Range { begin, end, stride }))
}

impl FromStr for Memlet {
    type Err = SymbolicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let open = s.find('[').ok_or_else(|| SymbolicError::Parse {
            input: s.to_string(),
            msg: "expected '['".into(),
        })?;
        let data = s[..open].trim();
        if data.is_empty()
            || !data
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return Err(SymbolicError::Parse {
                input: s.to_string(),
                msg: "bad container name".into(),
            });
        }
        let mut p = Parser::new(s);
        p.pos = open + 1;
        let mut subset = vec![parse_dim(&mut p)?];
        while p.eat(',') {
            subset.push(parse_dim(&mut p)?);
        }
        if !p.eat(']') {
            return Err(p.error("expected ']'"));
        }
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input"));
        }
        Ok(Memlet::new(data, subset))
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(Range);
string_serde!(Memlet);

/// Visit every point of a map's iteration space in lexicographic order
/// (outer-to-inner as declared). Inner ranges may reference outer params.
pub fn for_each_iteration(
    params: &[MapParam],
    binding: &Binding,
    f: &mut dyn FnMut(&Binding) -> Result<(), SymbolicError>,
) -> Result<(), SymbolicError> {
    let Some((first, rest)) = params.split_first() else {
        return f(binding);
    };
    let b = first.range.begin.eval(binding)?;
    let n = first.range.len(binding)?;
    let mut inner = binding.clone();
    for k in 0..n {
        inner.insert(first.name.clone(), b + k * first.range.stride);
        for_each_iteration(rest, &inner, f)?;
    }
    Ok(())
}

pub fn iteration_count(params: &[MapParam], binding: &Binding) -> Result<i64, SymbolicError> {
    let mut n = 0i64;
    for_each_iteration(params, binding, &mut |_| {
        n += 1;
        Ok(())
    })?;
    Ok(n)
}

pub const DEFAULT_SEQUENCE_CAP: usize = 1 << 20;

/// Ordered element indices touched by `memlet` across the iteration space.
pub fn access_sequence(
    memlet: &Memlet,
    params: &[MapParam],
    binding: &Binding,
    cap: usize,
) -> Result<Vec<Vec<i64>>, SymbolicError> {
    if !memlet.is_affine() {
        return Err(SymbolicError::NonAffine);
    }
    let mut out = Vec::new();
    for_each_iteration(params, binding, &mut |b| {
        memlet.for_each_point(b, &mut |pt| {
            if out.len() >= cap {
                return Err(SymbolicError::SequenceTooLong { cap });
            }
            out.push(pt.to_vec());
            Ok(())
        })
    })?;
    Ok(out)
}

/// Why a producer/consumer pair cannot be turned into a FIFO.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamReason {
    DifferentContainer,
    NonAffine,
    /// Same multiset of elements, different order.
    OrderMismatch,
    /// Different elements or multiplicities.
    SetMismatch,
    TooLong,
    Unbound(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Streamability {
    Streamable,
    NotStreamable(StreamReason),
}

impl Streamability {
    pub fn is_streamable(&self) -> bool {
        matches!(self, Streamability::Streamable)
    }
}

/// One side of a producer/consumer pair: the memlet and the iteration space
/// it is replayed over.
#[derive(Clone, Copy, Debug)]
pub struct AccessSide<'a> {
    pub memlet: &'a Memlet,
    pub params: &'a [MapParam],
}

/// Streamable iff the producer's write sequence equals the consumer's read
/// sequence element-for-element.
pub fn sequences_compatible(
    producer: AccessSide<'_>,
    consumer: AccessSide<'_>,
    binding: &Binding,
) -> Streamability {
    sequences_compatible_capped(producer, consumer, binding, DEFAULT_SEQUENCE_CAP)
}

pub fn sequences_compatible_capped(
    producer: AccessSide<'_>,
    consumer: AccessSide<'_>,
    binding: &Binding,
    cap: usize,
) -> Streamability {
    use Streamability::*;
    if producer.memlet.data != consumer.memlet.data {
        return NotStreamable(StreamReason::DifferentContainer);
    }
    if !producer.memlet.is_affine() || !consumer.memlet.is_affine() {
        return NotStreamable(StreamReason::NonAffine);
    }
    if producer.memlet == consumer.memlet && producer.params == consumer.params {
        return Streamable;
    }
    let seq = |side: AccessSide<'_>| access_sequence(side.memlet, side.params, binding, cap);
    let (p, c) = match (seq(producer), seq(consumer)) {
        (Ok(p), Ok(c)) => (p, c),
        (Err(SymbolicError::UnboundSymbol(s)), _) | (_, Err(SymbolicError::UnboundSymbol(s))) => {
            return NotStreamable(StreamReason::Unbound(s))
        }
        (Err(SymbolicError::SequenceTooLong { .. }), _)
        | (_, Err(SymbolicError::SequenceTooLong { .. })) => {
            return NotStreamable(StreamReason::TooLong)
        }
        _ => return NotStreamable(StreamReason::NonAffine),
    };
    if p == c {
        return Streamable;
    }
    let (mut ps, mut cs) = (p, c);
    ps.sort_unstable();
    cs.sort_unstable();
    if ps == cs {
        NotStreamable(StreamReason::OrderMismatch)
    } else {
        NotStreamable(StreamReason::SetMismatch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, i64)]) -> Binding {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn flat(seq: Vec<Vec<i64>>) -> Vec<i64> {
        seq.into_iter().map(|v| v[0]).collect()
    }

    #[test]
    fn access_sequence_examples() {
        let i = [MapParam::new("i", Range::new(0, 4))];
        let m: Memlet = "x[i]".parse().unwrap();
        let seq = access_sequence(&m, &i, &Binding::new(), DEFAULT_SEQUENCE_CAP).unwrap();
        assert_eq!(flat(seq), vec![0, 1, 2, 3]);

        let i = [MapParam::new("i", Range::new(0, 2))];
        let m: Memlet = "x[2*i : 2*i+2]".parse().unwrap();
        let seq = access_sequence(&m, &i, &Binding::new(), DEFAULT_SEQUENCE_CAP).unwrap();
        assert_eq!(flat(seq), vec![0, 1, 2, 3]);

        let i = [MapParam::new("i", Range::new(0, "N"))];
        let m: Memlet = "x[N-1-i]".parse().unwrap();
        let seq = access_sequence(&m, &i, &bind(&[("N", 4)]), DEFAULT_SEQUENCE_CAP).unwrap();
        assert_eq!(flat(seq), vec![3, 2, 1, 0]);
    }

    #[test]
    fn sequence_cap() {
        let i = [MapParam::new("i", Range::new(0, 100))];
        let m: Memlet = "x[i]".parse().unwrap();
        assert_eq!(
            access_sequence(&m, &i, &Binding::new(), 10),
            Err(SymbolicError::SequenceTooLong { cap: 10 })
        );
    }

    #[test]
    fn compatibility_examples() {
        let n = bind(&[("N", 8)]);
        let i = [MapParam::new("i", Range::new(0, "N"))];
        let w: Memlet = "z[i]".parse().unwrap();
        let r: Memlet = "z[i]".parse().unwrap();
        let side = |m| AccessSide { memlet: m, params: &i };
        assert_eq!(sequences_compatible(side(&w), side(&r), &n), Streamability::Streamable);
        let rev: Memlet = "z[N-1-i]".parse().unwrap();
        assert_eq!(
            sequences_compatible(side(&w), side(&rev), &n),
            Streamability::NotStreamable(StreamReason::OrderMismatch)
        );
        let i4 = [MapParam::new("i", Range::new(0, 4))];
        let side4 = |m| AccessSide { memlet: m, params: &i4 };
        let w2: Memlet = "z[2*i]".parse().unwrap();
        assert_eq!(
            sequences_compatible(side4(&w2), side4(&r), &n),
            Streamability::NotStreamable(StreamReason::SetMismatch)
        );
        let dynm: Memlet = "z[?]".parse().unwrap();
        assert_eq!(
            sequences_compatible(side(&w), side(&dynm), &n),
            Streamability::NotStreamable(StreamReason::NonAffine)
        );
    }

    #[test]
    fn memlet_display_roundtrip() {
        for s in ["x[2*i+1 : 2*i+2]", "A[i, 4*k : 4*k+4]", "a[?]", "t[0 : N, 0 : N : 2]"] {
            let m: Memlet = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("[i]".parse::<Memlet>().is_err());
        assert!("x[i".parse::<Memlet>().is_err());
        assert!("x[0:4:0]".parse::<Memlet>().is_err());
    }

    #[test]
    fn volume_is_product_of_extents() {
        let m: Memlet = "t[0 : N, 2*k : 2*k+2]".parse().unwrap();
        assert_eq!(m.volume(&bind(&[("N", 5), ("k", 0)])).unwrap(), 10);
    }
}
