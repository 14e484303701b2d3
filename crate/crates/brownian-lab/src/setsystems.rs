//! Set systems on a finite universe: semirings, contents, induced outer
//! measures, and the Caratheodory construction, all checked by exhaustive
//! enumeration in exact rational arithmetic. Points are indices 0..n-1 and
//! subsets are bitmasks, so a universe of size n has 2^n enumerable subsets.

use crate::exact::{parse_ext_rat, rat, ExtRat, Rat};
use crate::tol::FLOAT_INTEROP_TOL;
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;

/// Largest universe for which 2^n enumeration is considered feasible.
pub const MAX_UNIVERSE: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SetSystemError {
    #[error("universe size {0} exceeds the enumeration cap of {MAX_UNIVERSE}")]
    UniverseTooLarge(u32),
    #[error("set {0} is not contained in the universe")]
    NotInUniverse(Subset),
    #[error("duplicate member {0}")]
    DuplicateMember(Subset),
    #[error("{0} is not a member of the family")]
    NotAMember(Subset),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("content value for {0} is negative")]
    NegativeContent(Subset),
    #[error("value for {0} is not an extended nonnegative real")]
    BadValue(Subset),
    #[error("family is not a semiring: {0}")]
    NotASemiring(SemiringFailure),
    #[error("content is not additive: {0}")]
    NotAdditive(AdditivityWitness),
    #[error("table is not an outer measure: {0}")]
    NotOuterMeasure(OuterMeasureDefect),
    #[error("family is not projective: pushing J={super_mask} onto H={sub_mask} disagrees at point {point:?} ({pushed} vs {expected})")]
    NotProjective {
        sub_mask: u32,
        super_mask: u32,
        point: Vec<u32>,
        expected: Rat,
        pushed: Rat,
    },
    #[error("projective family too large: {0}")]
    ProjectiveTooLarge(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A subset of the universe as a bitmask; bit i is point i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn singleton(point: u32) -> Subset {
        Subset(1 << point)
    }

    pub fn of(points: &[u32]) -> Subset {
        Subset(points.iter().fold(0, |m, &p| m | (1 << p)))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn contains(self, point: u32) -> bool {
        self.0 & (1 << point) != 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn inter(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn minus(self, other: Subset) -> Subset {
        Subset(self.0 & !other.0)
    }

    pub fn points(self) -> impl Iterator<Item = u32> {
        let mask = self.0;
        (0..32).filter(move |p| mask & (1 << p) != 0)
    }

    /// Bit string b_{n-1}..b_0, the on-disk representation.
    pub fn bits(self, n: u32) -> String {
        (0..n).rev().map(|p| if self.contains(p) { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.points().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Universe {
    n: u32,
}

impl Universe {
    pub fn new(n: u32) -> Result<Universe, SetSystemError> {
        if n == 0 || n > MAX_UNIVERSE {
            return Err(SetSystemError::UniverseTooLarge(n));
        }
        Ok(Universe { n })
    }

    pub fn size(self) -> u32 {
        self.n
    }

    pub fn full(self) -> Subset {
        Subset((1u32 << self.n) - 1)
    }

    pub fn subset_count(self) -> usize {
        1usize << self.n
    }

    pub fn subsets(self) -> impl Iterator<Item = Subset> {
        (0..self.subset_count() as u32).map(Subset)
    }
}

/// A finite collection of subsets, kept sorted in canonical mask order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetFamily {
    universe: Universe,
    members: Vec<Subset>,
}

impl SetFamily {
    pub fn new(universe: Universe, mut members: Vec<Subset>) -> Result<SetFamily, SetSystemError> {
        for &m in &members {
            if !m.is_subset_of(universe.full()) {
                return Err(SetSystemError::NotInUniverse(m));
            }
        }
        members.sort();
        for w in members.windows(2) {
            if w[0] == w[1] {
                return Err(SetSystemError::DuplicateMember(w[0]));
            }
        }
        Ok(SetFamily { universe, members })
    }

    pub fn power_set(universe: Universe) -> SetFamily {
        SetFamily { universe, members: universe.subsets().collect() }
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn members(&self) -> &[Subset] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, s: Subset) -> bool {
        self.members.binary_search(&s).is_ok()
    }

    pub fn index_of(&self, s: Subset) -> Option<usize> {
        self.members.binary_search(&s).ok()
    }
}

/// A set function on the members of a family, with values in [0, +inf].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Content {
    family: SetFamily,
    values: Vec<ExtRat>,
    float_inputs: bool,
}

impl Content {
    /// `values` must be parallel to `family.members()`, i.e. in canonical
    /// mask order. Use [`Content::from_pairs`] for unordered input.
    pub fn new(family: SetFamily, values: Vec<ExtRat>) -> Result<Content, SetSystemError> {
        Self::build(family, values, false)
    }

    pub fn from_pairs(
        universe: Universe,
        mut pairs: Vec<(Subset, ExtRat)>,
    ) -> Result<Content, SetSystemError> {
        pairs.sort_by_key(|(s, _)| *s);
        let (members, values): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let family = SetFamily::new(universe, members)?;
        Self::build(family, values, false)
    }

    /// Float interop: each finite double embeds exactly as a rational.
    pub fn from_f64(family: SetFamily, values: &[f64]) -> Result<Content, SetSystemError> {
        let exact = values
            .iter()
            .zip(family.members())
            .map(|(&v, &m)| ExtRat::from_f64(v).ok_or(SetSystemError::BadValue(m)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::build(family, exact, true)
    }

    fn build(family: SetFamily, values: Vec<ExtRat>, float_inputs: bool) -> Result<Content, SetSystemError> {
        if values.len() != family.len() {
            return Err(SetSystemError::LengthMismatch { expected: family.len(), got: values.len() });
        }
        for (m, v) in family.members().iter().zip(&values) {
            if v.is_negative() {
                return Err(SetSystemError::NegativeContent(*m));
            }
        }
        Ok(Content { family, values, float_inputs })
    }

    pub fn family(&self) -> &SetFamily {
        &self.family
    }

    pub fn float_inputs(&self) -> bool {
        self.float_inputs
    }

    pub fn value(&self, s: Subset) -> Option<&ExtRat> {
        self.family.index_of(s).map(|i| &self.values[i])
    }

    pub fn value_at(&self, idx: usize) -> &ExtRat {
        &self.values[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Subset, &ExtRat)> {
        self.family.members().iter().copied().zip(self.values.iter())
    }
}

/// Memoized search for decompositions of a mask into pairwise disjoint
/// nonempty members. Parts are chosen smallest-first in canonical mask order,
/// anchored at the lowest uncovered point, so each decomposition is canonical
/// and each unordered partition is considered exactly once.
struct PartitionOracle<'a> {
    family: &'a SetFamily,
    // 0 = unknown, 1 = impossible, k+2 = canonical first member index k
    memo: Vec<u32>,
}

impl<'a> PartitionOracle<'a> {
    fn new(family: &'a SetFamily) -> Self {
        PartitionOracle { family, memo: vec![0; family.universe().subset_count()] }
    }

    fn first_part(&mut self, mask: u32) -> Option<usize> {
        debug_assert!(mask != 0);
        match self.memo[mask as usize] {
            1 => return None,
            0 => {}
            k => return Some((k - 2) as usize),
        }
        let low = mask & mask.wrapping_neg();
        let mut found = None;
        for (idx, &m) in self.family.members().iter().enumerate() {
            if m.0 == 0 || m.0 & low == 0 || !m.is_subset_of(Subset(mask)) {
                continue;
            }
            if self.can(mask & !m.0) {
                found = Some(idx);
                break;
            }
        }
        self.memo[mask as usize] = match found {
            Some(idx) => idx as u32 + 2,
            None => 1,
        };
        found
    }

    fn can(&mut self, mask: u32) -> bool {
        mask == 0 || self.first_part(mask).is_some()
    }

    fn decompose(&mut self, mask: u32) -> Option<Vec<Subset>> {
        let mut rest = mask;
        let mut parts = Vec::new();
        while rest != 0 {
            let idx = self.first_part(rest)?;
            let m = self.family.members()[idx];
            parts.push(m);
            rest &= !m.0;
        }
        Some(parts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SemiringFailure {
    /// The intersection of the two members is not a member.
    IntersectionMissing { a: Subset, b: Subset },
    /// b minus a is not a disjoint union of members.
    DifferenceNotDecomposable { a: Subset, b: Subset },
}

impl fmt::Display for SemiringFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemiringFailure::IntersectionMissing { a, b } => {
                write!(f, "{a} \u{2229} {b} is not a member")
            }
            SemiringFailure::DifferenceNotDecomposable { a, b } => {
                write!(f, "{b} \u{2216} {a} is not a disjoint union of members")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemiringVerdict {
    pub is_semiring: bool,
    pub witness: Option<SemiringFailure>,
}

/// Both semiring clauses, checked over all ordered member pairs.
pub fn check_semiring(family: &SetFamily) -> SemiringVerdict {
    for &a in family.members() {
        for &b in family.members() {
            if !family.contains(a.inter(b)) {
                return SemiringVerdict {
                    is_semiring: false,
                    witness: Some(SemiringFailure::IntersectionMissing { a, b }),
                };
            }
        }
    }
    let mut oracle = PartitionOracle::new(family);
    for &a in family.members() {
        for &b in family.members() {
            if !oracle.can(b.minus(a).0) {
                return SemiringVerdict {
                    is_semiring: false,
                    witness: Some(SemiringFailure::DifferenceNotDecomposable { a, b }),
                };
            }
        }
    }
    SemiringVerdict { is_semiring: true, witness: None }
}

fn require_semiring(family: &SetFamily) -> Result<(), SetSystemError> {
    match check_semiring(family).witness {
        None => Ok(()),
        Some(w) => Err(SetSystemError::NotASemiring(w)),
    }
}

/// Pairwise disjoint members whose union is A minus the union of I.
pub fn disjoint_of_diff_union(
    family: &SetFamily,
    a: Subset,
    i: &[Subset],
) -> Result<Vec<Subset>, SetSystemError> {
    require_semiring(family)?;
    if !family.contains(a) {
        return Err(SetSystemError::NotAMember(a));
    }
    for &s in i {
        if !family.contains(s) {
            return Err(SetSystemError::NotAMember(s));
        }
    }
    let target = i.iter().fold(a, |acc, &s| acc.minus(s));
    if target == a {
        return Ok(vec![a]);
    }
    let mut oracle = PartitionOracle::new(family);
    // A semiring always admits a decomposition of A minus a union of members.
    Ok(oracle.decompose(target.0).expect("semiring decomposition must exist"))
}

/// Per-input collections K_1..K_m; their union is pairwise disjoint and
/// covers the union of the inputs (K_n decomposes A_n minus A_1..A_{n-1}).
pub fn disjoint_of_union(
    family: &SetFamily,
    sets: &[Subset],
) -> Result<Vec<Vec<Subset>>, SetSystemError> {
    require_semiring(family)?;
    let mut out = Vec::with_capacity(sets.len());
    for (n, &a) in sets.iter().enumerate() {
        out.push(disjoint_of_diff_union(family, a, &sets[..n])?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdditivityWitness {
    pub member: Subset,
    pub member_value: ExtRat,
    pub parts: Vec<Subset>,
    pub parts_sum: ExtRat,
}

impl fmt::Display for AdditivityWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m({}) = {} but the disjoint decomposition [", self.member, self.member_value)?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "] sums to {}", self.parts_sum)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdditivityVerdict {
    pub is_additive: bool,
    pub witness: Option<AdditivityWitness>,
}

/// Partition sums explorer; retains at most two distinct sums per mask.
/// For a pi-system this is lossless: a mask with two distinct partition sums
/// always surfaces two distinct representatives.
struct SumOracle<'a> {
    content: &'a Content,
    memo: Vec<Option<Vec<(ExtRat, Vec<usize>)>>>,
}

impl<'a> SumOracle<'a> {
    fn new(content: &'a Content) -> Self {
        let size = content.family().universe().subset_count();
        SumOracle { content, memo: vec![None; size] }
    }

    fn sums(&mut self, mask: u32) -> Vec<(ExtRat, Vec<usize>)> {
        if mask == 0 {
            return vec![(ExtRat::zero(), Vec::new())];
        }
        if let Some(s) = &self.memo[mask as usize] {
            return s.clone();
        }
        let low = mask & mask.wrapping_neg();
        let members: Vec<(usize, Subset)> = self
            .content
            .family()
            .members()
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, m)| m.0 != 0 && m.0 & low != 0 && m.is_subset_of(Subset(mask)))
            .collect();
        let mut found: Vec<(ExtRat, Vec<usize>)> = Vec::new();
        'outer: for (idx, m) in members {
            for (sub_sum, sub_parts) in self.sums(mask & !m.0) {
                let total = self.content.value_at(idx).add(&sub_sum);
                if !found.iter().any(|(v, _)| *v == total) {
                    let mut parts = vec![idx];
                    parts.extend(sub_parts);
                    found.push((total, parts));
                    if found.len() == 2 {
                        break 'outer;
                    }
                }
            }
        }
        self.memo[mask as usize] = Some(found.clone());
        found
    }
}

/// Additivity over all decompositions of members into pairwise disjoint
/// nonempty members. The value at the empty set is unconstrained here; see
/// `check_sigma_additive`.
pub fn check_additive(content: &Content) -> AdditivityVerdict {
    let mut oracle = SumOracle::new(content);
    for (idx, &member) in content.family().members().iter().enumerate() {
        if member.is_empty() {
            continue;
        }
        let expected = content.value_at(idx).clone();
        for (sum, part_idx) in oracle.sums(member.0) {
            if sum != expected {
                let parts = part_idx.iter().map(|&i| content.family().members()[i]).collect();
                return AdditivityVerdict {
                    is_additive: false,
                    witness: Some(AdditivityWitness {
                        member,
                        member_value: expected,
                        parts,
                        parts_sum: sum,
                    }),
                };
            }
        }
    }
    AdditivityVerdict { is_additive: true, witness: None }
}

/// On a finite universe countable disjoint unions have finitely many nonempty
/// terms, so sigma-additivity reduces to additivity plus m(empty) = 0.
pub fn check_sigma_additive(content: &Content) -> AdditivityVerdict {
    let verdict = check_additive(content);
    if !verdict.is_additive {
        return verdict;
    }
    if let Some(v) = content.value(Subset::EMPTY) {
        if !v.is_zero() {
            return AdditivityVerdict {
                is_additive: false,
                witness: Some(AdditivityWitness {
                    member: Subset::EMPTY,
                    member_value: v.clone(),
                    parts: Vec::new(),
                    parts_sum: ExtRat::zero(),
                }),
            };
        }
    }
    AdditivityVerdict { is_additive: true, witness: None }
}

fn require_sigma_additive(content: &Content) -> Result<(), SetSystemError> {
    match check_sigma_additive(content).witness {
        None => Ok(()),
        Some(w) => Err(SetSystemError::NotAdditive(w)),
    }
}

/// The generated ring: every disjoint union of members, with the content
/// extended by summing any decomposition (well-defined by additivity).
pub fn generate_ring(content: &Content) -> Result<Content, SetSystemError> {
    let family = content.family();
    require_semiring(family)?;
    require_sigma_additive(content)?;
    let universe = family.universe();
    let mut oracle = PartitionOracle::new(family);
    let mut members = Vec::new();
    let mut values = Vec::new();
    for mask in universe.subsets() {
        if let Some(idx) = family.index_of(mask) {
            members.push(mask);
            values.push(content.value_at(idx).clone());
        } else if let Some(parts) = oracle.decompose(mask.0) {
            let sum = parts
                .iter()
                .fold(ExtRat::zero(), |acc, p| acc.add(content.value(*p).unwrap()));
            members.push(mask);
            values.push(sum);
        } else if mask.is_empty() {
            members.push(mask);
            values.push(ExtRat::zero());
        }
    }
    let ring = SetFamily::new(universe, members)?;
    Content::build(ring, values, content.float_inputs())
}

/// All 2^n values of an outer measure, validated at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OuterMeasureTable {
    universe: Universe,
    values: Vec<ExtRat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OuterMeasureDefect {
    EmptyNotZero,
    NotMonotone { smaller: Subset, larger: Subset },
    NotSubadditive { a: Subset, b: Subset },
}

impl fmt::Display for OuterMeasureDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OuterMeasureDefect::EmptyNotZero => write!(f, "value at the empty set is nonzero"),
            OuterMeasureDefect::NotMonotone { smaller, larger } => {
                write!(f, "value({smaller}) > value({larger})")
            }
            OuterMeasureDefect::NotSubadditive { a, b } => {
                write!(f, "value({a} \u{222A} {b}) > value({a}) + value({b})")
            }
        }
    }
}

impl OuterMeasureTable {
    /// Validates all three outer-measure clauses. Monotonicity is checked on
    /// single-point removals (which implies it for all inclusions) and
    /// sub-additivity on disjoint pairs (with monotonicity this implies the
    /// general finite case).
    pub fn from_values(universe: Universe, values: Vec<ExtRat>) -> Result<Self, SetSystemError> {
        if values.len() != universe.subset_count() {
            return Err(SetSystemError::LengthMismatch {
                expected: universe.subset_count(),
                got: values.len(),
            });
        }
        for (mask, v) in values.iter().enumerate() {
            if v.is_negative() {
                return Err(SetSystemError::NegativeContent(Subset(mask as u32)));
            }
        }
        let table = OuterMeasureTable { universe, values };
        if let Some(defect) = table.defect() {
            return Err(SetSystemError::NotOuterMeasure(defect));
        }
        Ok(table)
    }

    fn defect(&self) -> Option<OuterMeasureDefect> {
        if !self.values[0].is_zero() {
            return Some(OuterMeasureDefect::EmptyNotZero);
        }
        let count = self.universe.subset_count();
        for mask in 1..count as u32 {
            let mut bits = mask;
            while bits != 0 {
                let bit = bits & bits.wrapping_neg();
                let sub = mask & !bit;
                if self.values[sub as usize] > self.values[mask as usize] {
                    return Some(OuterMeasureDefect::NotMonotone {
                        smaller: Subset(sub),
                        larger: Subset(mask),
                    });
                }
                bits &= !bit;
            }
        }
        for a in 0..count as u32 {
            let comp = self.universe.full().0 & !a;
            // Enumerate b over submasks of the complement of a.
            let mut b = comp;
            loop {
                let sum = self.values[a as usize].add(&self.values[b as usize]);
                if self.values[(a | b) as usize] > sum {
                    return Some(OuterMeasureDefect::NotSubadditive { a: Subset(a), b: Subset(b) });
                }
                if b == 0 {
                    break;
                }
                b = (b - 1) & comp;
            }
        }
        None
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn value(&self, s: Subset) -> &ExtRat {
        &self.values[s.0 as usize]
    }
}

/// The induced outer measure: for each subset the cheapest covering by
/// members (finite families make countable coverings finite). Computed by
/// dynamic programming anchored at the lowest uncovered point.
pub fn induced_outer_measure(content: &Content) -> Result<OuterMeasureTable, SetSystemError> {
    let family = content.family();
    require_semiring(family)?;
    if let Some(w) = check_additive(content).witness {
        return Err(SetSystemError::NotAdditive(w));
    }
    let universe = family.universe();
    let n = universe.size();
    let mut with_point: Vec<Vec<usize>> = vec![Vec::new(); n as usize];
    for (idx, m) in family.members().iter().enumerate() {
        for p in m.points() {
            with_point[p as usize].push(idx);
        }
    }
    let count = universe.subset_count();
    let mut dp = vec![ExtRat::Infinity; count];
    dp[0] = ExtRat::zero();
    for mask in 1..count as u32 {
        let low_point = mask.trailing_zeros();
        let mut best = ExtRat::Infinity;
        for &idx in &with_point[low_point as usize] {
            let m = family.members()[idx];
            let rest = &dp[(mask & !m.0) as usize];
            let cost = content.value_at(idx).add(rest);
            if cost < best {
                best = cost;
            }
        }
        dp[mask as usize] = best;
    }
    // By construction the table is monotone and sub-additive with value 0 at
    // the empty set; constructing through the validating path keeps the
    // invariant machine-checked.
    OuterMeasureTable::from_values(universe, dp)
}

/// All sets A that split every test set B additively:
/// mu(B) = mu(B inter A) + mu(B minus A), in extended arithmetic.
pub fn caratheodory_sets(outer: &OuterMeasureTable) -> SetFamily {
    let universe = outer.universe();
    let mut members = Vec::new();
    'candidates: for a in universe.subsets() {
        for b in universe.subsets() {
            let split = outer.value(b.inter(a)).add(outer.value(b.minus(a)));
            if *outer.value(b) != split {
                continue 'candidates;
            }
        }
        members.push(a);
    }
    SetFamily { universe, members }
}

/// The sigma-algebra generated by the family: on a finite universe this is
/// exactly the collection of unions of membership atoms.
pub fn generated_sigma_algebra(family: &SetFamily) -> SetFamily {
    let universe = family.universe();
    let mut atom_of: BTreeMap<Vec<bool>, u32> = BTreeMap::new();
    for p in 0..universe.size() {
        let signature: Vec<bool> = family.members().iter().map(|m| m.contains(p)).collect();
        *atom_of.entry(signature).or_insert(0) |= 1 << p;
    }
    let atoms: Vec<u32> = atom_of.into_values().collect();
    let mut members: Vec<Subset> = (0..1u32 << atoms.len())
        .map(|combo| {
            Subset(
                atoms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| combo & (1 << i) != 0)
                    .fold(0, |acc, (_, &a)| acc | a),
            )
        })
        .collect();
    members.sort();
    members.dedup();
    SetFamily { universe, members }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberResidual {
    pub set: Subset,
    pub content_value: ExtRat,
    pub outer_value: ExtRat,
    /// Signed outer-minus-content difference (0 when both are infinite).
    pub residual: ExtRat,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionReport {
    pub sigma_algebra_size: usize,
    pub caratheodory_size: usize,
    pub sigma_in_caratheodory: bool,
    pub sigma_witness: Option<Subset>,
    pub members: Vec<MemberResidual>,
    pub pass: bool,
}

/// Extension theorem, checked end to end: the induced outer measure restricted
/// to the Caratheodory sigma-algebra extends the content, and the generated
/// sigma-algebra is contained in the Caratheodory family. Residuals must
/// vanish exactly for rational inputs, and within 1e-12 for float interop.
pub fn verify_extension(content: &Content) -> Result<ExtensionReport, SetSystemError> {
    let family = content.family();
    require_semiring(family)?;
    require_sigma_additive(content)?;
    let outer = induced_outer_measure(content)?;
    let cara = caratheodory_sets(&outer);
    let sigma = generated_sigma_algebra(family);
    let mut sigma_witness = None;
    for &s in sigma.members() {
        if !cara.contains(s) {
            sigma_witness = Some(s);
            break;
        }
    }
    let mut members = Vec::with_capacity(family.len());
    let mut all_ok = true;
    for (set, m_val) in content.iter() {
        let mu_val = outer.value(set).clone();
        let (residual, ok) = match (m_val.as_rat(), mu_val.as_rat()) {
            (Some(m), Some(mu)) => {
                let r = mu - m;
                let ok = if content.float_inputs() {
                    crate::exact::rat_to_f64(&r).abs() <= FLOAT_INTEROP_TOL
                } else {
                    r.is_zero()
                };
                (ExtRat::Finite(r), ok)
            }
            (None, None) => (ExtRat::zero(), true),
            _ => (ExtRat::Infinity, false),
        };
        all_ok &= ok;
        members.push(MemberResidual {
            set,
            content_value: m_val.clone(),
            outer_value: mu_val,
            residual,
            ok,
        });
    }
    let sigma_ok = sigma_witness.is_none();
    Ok(ExtensionReport {
        sigma_algebra_size: sigma.len(),
        caratheodory_size: cara.len(),
        sigma_in_caratheodory: sigma_ok,
        sigma_witness,
        members,
        pass: sigma_ok && all_ok,
    })
}

/// A family of finite measures on finite products, one per subset of the
/// index set, given as weight vectors in mixed-radix point order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteProjectiveFamily {
    state_sizes: Vec<u32>,
    /// measures[mask] has one weight per point of the product over the
    /// indices in mask (ascending index order, first index fastest).
    measures: Vec<Vec<Rat>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectiveReport {
    pub pairs_checked: usize,
    /// Number of points of the full product; every singleton is itself a
    /// cylinder over the full index set, so agreement on cylinders pins the
    /// full-index measure uniquely by direct enumeration.
    pub full_product_points: usize,
}

impl FiniteProjectiveFamily {
    pub fn new(state_sizes: Vec<u32>, measures: Vec<Vec<Rat>>) -> Result<Self, SetSystemError> {
        let k = state_sizes.len();
        if k > 10 {
            return Err(SetSystemError::ProjectiveTooLarge(format!("{k} indices")));
        }
        if state_sizes.iter().any(|&s| s == 0) {
            return Err(SetSystemError::ProjectiveTooLarge("empty state space".into()));
        }
        let full_points: u64 = state_sizes.iter().map(|&s| s as u64).product();
        if full_points > 1 << 16 {
            return Err(SetSystemError::ProjectiveTooLarge(format!("{full_points} product points")));
        }
        if measures.len() != 1usize << k {
            return Err(SetSystemError::LengthMismatch {
                expected: 1usize << k,
                got: measures.len(),
            });
        }
        for (mask, weights) in measures.iter().enumerate() {
            let expected = Self::points_of(&state_sizes, mask as u32);
            if weights.len() != expected {
                return Err(SetSystemError::LengthMismatch { expected, got: weights.len() });
            }
            if weights.iter().any(|w| w < &Rat::zero()) {
                return Err(SetSystemError::NegativeContent(Subset(mask as u32)));
            }
        }
        Ok(FiniteProjectiveFamily { state_sizes, measures })
    }

    fn points_of(sizes: &[u32], mask: u32) -> usize {
        sizes
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &s)| s as usize)
            .product()
    }

    fn indices(mask: u32, k: usize) -> Vec<usize> {
        (0..k).filter(|i| mask & (1 << i) != 0).collect()
    }

    fn decode(rank: usize, sizes: &[u32]) -> Vec<u32> {
        let mut coords = Vec::with_capacity(sizes.len());
        let mut r = rank;
        for &s in sizes {
            coords.push((r % s as usize) as u32);
            r /= s as usize;
        }
        coords
    }

    fn encode(coords: &[u32], sizes: &[u32]) -> usize {
        let mut rank = 0usize;
        for (c, s) in coords.iter().zip(sizes).rev() {
            rank = rank * *s as usize + *c as usize;
        }
        rank
    }
}

/// Pushforward consistency over every nested pair of index sets.
pub fn verify_projective_finite(
    family: &FiniteProjectiveFamily,
) -> Result<ProjectiveReport, SetSystemError> {
    let k = family.state_sizes.len();
    let mut pairs_checked = 0usize;
    for super_mask in 0..(1u32 << k) {
        let super_idx = FiniteProjectiveFamily::indices(super_mask, k);
        let super_sizes: Vec<u32> = super_idx.iter().map(|&i| family.state_sizes[i]).collect();
        let super_weights = &family.measures[super_mask as usize];
        // Proper submasks of super_mask.
        let mut sub_mask = (super_mask.wrapping_sub(1)) & super_mask;
        loop {
            let sub_idx = FiniteProjectiveFamily::indices(sub_mask, k);
            let sub_sizes: Vec<u32> = sub_idx.iter().map(|&i| family.state_sizes[i]).collect();
            let positions: Vec<usize> = sub_idx
                .iter()
                .map(|i| super_idx.iter().position(|j| j == i).unwrap())
                .collect();
            let mut pushed = vec![Rat::zero(); family.measures[sub_mask as usize].len()];
            for (rank, w) in super_weights.iter().enumerate() {
                let coords = FiniteProjectiveFamily::decode(rank, &super_sizes);
                let sub_coords: Vec<u32> = positions.iter().map(|&p| coords[p]).collect();
                pushed[FiniteProjectiveFamily::encode(&sub_coords, &sub_sizes)] += w;
            }
            pairs_checked += 1;
            for (rank, expected) in family.measures[sub_mask as usize].iter().enumerate() {
                if &pushed[rank] != expected {
                    return Err(SetSystemError::NotProjective {
                        sub_mask,
                        super_mask,
                        point: FiniteProjectiveFamily::decode(rank, &sub_sizes),
                        expected: expected.clone(),
                        pushed: pushed[rank].clone(),
                    });
                }
            }
            if sub_mask == 0 {
                break;
            }
            sub_mask = (sub_mask - 1) & super_mask;
        }
    }
    let full_product_points = family.measures.last().map_or(0, |w| w.len());
    Ok(ProjectiveReport { pairs_checked, full_product_points })
}

/// Text format: first line `universe n`, then one `set <bits> <value>` line
/// per member, bits written b_{n-1}..b_0 and values as `p/q`, decimals, or
/// `inf`. Blank lines and `#` comments are ignored.
pub fn parse_content_text(text: &str) -> Result<Content, SetSystemError> {
    let mut universe = None;
    let mut members = Vec::new();
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse_err = |msg: &str| SetSystemError::Parse { line: lineno, msg: msg.to_string() };
        match parts.next() {
            Some("universe") => {
                let n: u32 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| parse_err("expected `universe n`"))?;
                universe = Some(Universe::new(n)?);
            }
            Some("set") => {
                let u = universe.ok_or_else(|| parse_err("`set` before `universe`"))?;
                let bits = parts.next().ok_or_else(|| parse_err("missing bit string"))?;
                if bits.len() != u.size() as usize || !bits.bytes().all(|b| b == b'0' || b == b'1') {
                    return Err(parse_err("bit string must be n characters of 0/1"));
                }
                let mask = u32::from_str_radix(bits, 2).map_err(|_| parse_err("bad bit string"))?;
                let value = parts.next().ok_or_else(|| parse_err("missing value"))?;
                let value = parse_ext_rat(value)
                    .map_err(|e| parse_err(&e.to_string()))?;
                members.push(Subset(mask));
                values.push(value);
            }
            Some(other) => {
                return Err(parse_err(&format!("unknown directive {other:?}")));
            }
            None => unreachable!(),
        }
    }
    let universe = universe.ok_or(SetSystemError::Parse { line: 0, msg: "missing `universe n`".into() })?;
    Content::from_pairs(universe, members.into_iter().zip(values).collect())
}

pub fn write_content_text(content: &Content) -> String {
    let n = content.family().universe().size();
    let mut out = format!("universe {n}\n");
    for (set, value) in content.iter() {
        out.push_str(&format!("set {} {}\n", set.bits(n), value));
    }
    out
}

/// The bundled dyadic demo: E = {0,1,2,3} modelling the four quarter
/// intervals of [0,1), members the dyadic intervals, content = length.
pub fn dyadic_demo_content() -> Content {
    let universe = Universe::new(4).unwrap();
    let pairs = vec![
        (Subset::EMPTY, ExtRat::zero()),
        (Subset::of(&[0]), ExtRat::Finite(rat(1, 4))),
        (Subset::of(&[1]), ExtRat::Finite(rat(1, 4))),
        (Subset::of(&[2]), ExtRat::Finite(rat(1, 4))),
        (Subset::of(&[3]), ExtRat::Finite(rat(1, 4))),
        (Subset::of(&[0, 1]), ExtRat::Finite(rat(1, 2))),
        (Subset::of(&[2, 3]), ExtRat::Finite(rat(1, 2))),
        (Subset::of(&[0, 1, 2, 3]), ExtRat::Finite(rat(1, 1))),
    ];
    Content::from_pairs(universe, pairs).unwrap()
}
