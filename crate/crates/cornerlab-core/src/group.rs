//! Finite groups as dense multiplication tables.
//!
//! Every group is materialized as an `order x order` table over dense element
//! ids, so multiplication is one lookup and all higher layers can enumerate.
//! Families: `cyclic:n`, `sym:m`, `alt:m`, `sl2:p`, and `prod:(a,b)`.
//! The element order within each family is canonical and documented on the
//! constructor; the identity always receives id 0.

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};
use rand::Rng as _;
use serde::Serialize;
use std::fmt;

/// Hard cap on group order (= |S_7|); tables beyond this are refused.
pub const MAX_ORDER: usize = 5040;

/// Dense element id, valid only relative to the `Group` that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ElementId(pub u16);

impl ElementId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which constructor produced a group.  Used for labels and for the
/// quasirandomness-degree catalog cross-check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Family {
    Cyclic { n: usize },
    Symmetric { m: usize },
    Alternating { m: usize },
    Sl2 { p: usize },
    Product,
}

/// A finite group with a fully materialized multiplication table.
#[derive(Debug, Clone)]
pub struct Group {
    label: String,
    order: usize,
    family: Family,
    /// Row-major: `table[a * order + b]` is the id of `a * b`.
    table: Vec<u16>,
    inverse: Vec<u16>,
}

impl Group {
    /// Z_n with element `i` = residue class `i`, addition as the operation.
    pub fn cyclic(n: usize) -> Result<Group> {
        if n == 0 {
            return Err(Error::invalid("cyclic group needs n >= 1"));
        }
        check_order(n)?;
        let mut table = vec![0u16; n * n];
        for a in 0..n {
            for b in 0..n {
                table[a * n + b] = ((a + b) % n) as u16;
            }
        }
        let inverse = (0..n).map(|a| ((n - a) % n) as u16).collect();
        Ok(Group {
            label: format!("cyclic:{n}"),
            order: n,
            family: Family::Cyclic { n },
            table,
            inverse,
        })
    }

    /// S_m acting on `{0..m-1}`; elements are one-line permutations in
    /// lexicographic order (so the identity is id 0) and the operation is
    /// composition, `(s t)(x) = s(t(x))`.
    pub fn symmetric(m: usize) -> Result<Group> {
        if m == 0 || m > 7 {
            return Err(Error::invalid(format!("sym:{m} outside supported range 1..=7")));
        }
        let perms = all_permutations(m);
        let n = perms.len();
        check_order(n)?;
        let table = permutation_table(&perms, |rank| rank);
        let inverse = permutation_inverses(&perms, |rank| rank);
        Ok(Group {
            label: format!("sym:{m}"),
            order: n,
            family: Family::Symmetric { m },
            table,
            inverse,
        })
    }

    /// A_m: the even permutations of S_m, in lexicographic one-line order.
    pub fn alternating(m: usize) -> Result<Group> {
        if m == 0 || m > 7 {
            return Err(Error::invalid(format!("alt:{m} outside supported range 1..=7")));
        }
        let all = all_permutations(m);
        // Map S_m lex rank -> A_m id (even permutations only, in lex order).
        let mut a_index = vec![u16::MAX; all.len()];
        let mut perms = Vec::new();
        for (rank, p) in all.iter().enumerate() {
            if permutation_is_even(p) {
                a_index[rank] = perms.len() as u16;
                perms.push(p.clone());
            }
        }
        let n = perms.len();
        check_order(n)?;
        let table = permutation_table(&perms, |rank| a_index[rank] as usize);
        let inverse = permutation_inverses(&perms, |rank| a_index[rank] as usize);
        Ok(Group {
            label: format!("alt:{m}"),
            order: n,
            family: Family::Alternating { m },
            table,
            inverse,
        })
    }

    /// SL(2, p) for prime `p`: 2x2 matrices over F_p with determinant 1.
    /// The identity matrix gets id 0; the remaining matrices follow in
    /// lexicographic order of `(a, b, c, d)`.
    pub fn sl2(p: usize) -> Result<Group> {
        if !is_prime(p) {
            return Err(Error::invalid(format!("sl2:{p} needs a prime p")));
        }
        let order = p * p * p - p;
        check_order(order)?;
        let mut mats: Vec<[usize; 4]> = vec![[1, 0, 0, 1]];
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    for d in 0..p {
                        let det = (a * d % p + p - b * c % p) % p;
                        if det == 1 && [a, b, c, d] != [1, 0, 0, 1] {
                            mats.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        debug_assert_eq!(mats.len(), order);
        // Dense index over all p^4 tuples for O(1) product lookup.
        let key = |m: &[usize; 4]| ((m[0] * p + m[1]) * p + m[2]) * p + m[3];
        let mut id_of = vec![u16::MAX; p * p * p * p];
        for (i, m) in mats.iter().enumerate() {
            id_of[key(m)] = i as u16;
        }
        let mut table = vec![0u16; order * order];
        for (i, x) in mats.iter().enumerate() {
            for (j, y) in mats.iter().enumerate() {
                let prod = [
                    (x[0] * y[0] + x[1] * y[2]) % p,
                    (x[0] * y[1] + x[1] * y[3]) % p,
                    (x[2] * y[0] + x[3] * y[2]) % p,
                    (x[2] * y[1] + x[3] * y[3]) % p,
                ];
                table[i * order + j] = id_of[key(&prod)];
            }
        }
        let inverse = mats
            .iter()
            .map(|m| {
                // (a b; c d)^-1 = (d -b; -c a) for det 1
                let inv = [m[3], (p - m[1]) % p, (p - m[2]) % p, m[0]];
                id_of[key(&inv)]
            })
            .collect();
        Ok(Group {
            label: format!("sl2:{p}"),
            order,
            family: Family::Sl2 { p },
            table,
            inverse,
        })
    }

    /// Direct product; element `(g, h)` gets id `g * |H| + h`.
    pub fn product(g: &Group, h: &Group) -> Result<Group> {
        let order = g
            .order
            .checked_mul(h.order)
            .ok_or_else(|| Error::cap("product order overflows".to_string()))?;
        check_order(order)?;
        let (ng, nh) = (g.order, h.order);
        let mut table = vec![0u16; order * order];
        for g1 in 0..ng {
            for h1 in 0..nh {
                let a = g1 * nh + h1;
                let row = a * order;
                for g2 in 0..ng {
                    let gm = g.table[g1 * ng + g2] as usize * nh;
                    for h2 in 0..nh {
                        table[row + g2 * nh + h2] = (gm + h.table[h1 * nh + h2] as usize) as u16;
                    }
                }
            }
        }
        let inverse = (0..order)
            .map(|a| {
                let (g1, h1) = (a / nh, a % nh);
                (g.inverse[g1] as usize * nh + h.inverse[h1] as usize) as u16
            })
            .collect();
        Ok(Group {
            label: format!("prod:({},{})", g.label, h.label),
            order,
            family: Family::Product,
            table,
            inverse,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// The identity element.  Every constructor places it at id 0.
    #[inline]
    pub fn identity(&self) -> ElementId {
        ElementId(0)
    }

    #[inline]
    pub fn mul(&self, a: ElementId, b: ElementId) -> ElementId {
        ElementId(self.table[a.index() * self.order + b.index()])
    }

    #[inline]
    pub fn inv(&self, a: ElementId) -> ElementId {
        ElementId(self.inverse[a.index()])
    }

    /// Left-to-right product of a possibly empty chain; empty product is the
    /// identity.
    pub fn mul_chain(&self, chain: &[ElementId]) -> ElementId {
        chain.iter().fold(self.identity(), |acc, &x| self.mul(acc, x))
    }

    /// Validated id construction.
    pub fn element(&self, index: usize) -> Result<ElementId> {
        if index < self.order {
            Ok(ElementId(index as u16))
        } else {
            Err(Error::invalid(format!(
                "element index {index} out of range for {} (order {})",
                self.label, self.order
            )))
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = ElementId> {
        (0..self.order as u16).map(ElementId)
    }

    /// Multiplication-table row of `a`: `row(a)[b] = (a*b) id`.  Hot paths
    /// index this directly instead of calling [`Group::mul`].
    #[inline]
    pub fn row(&self, a: ElementId) -> &[u16] {
        let start = a.index() * self.order;
        &self.table[start..start + self.order]
    }

    pub fn is_abelian(&self) -> bool {
        for a in 0..self.order {
            for b in 0..a {
                if self.table[a * self.order + b] != self.table[b * self.order + a] {
                    return false;
                }
            }
        }
        true
    }

    /// Check the group axioms on the realized table.
    ///
    /// Associativity is verified exhaustively (`order^3` lookups) when
    /// `order <= exhaustive_limit`, otherwise on `trials` seeded random
    /// triples.  Identity, inverses and the Latin-square property are always
    /// checked exhaustively (`order^2`).
    pub fn check_axioms(&self, exhaustive_limit: usize, trials: usize, seed: u64) -> Result<()> {
        let n = self.order;
        let e = self.identity();
        for a in self.elements() {
            if self.mul(e, a) != a || self.mul(a, e) != a {
                return Err(Error::Verification(format!("{}: identity fails at {a}", self.label)));
            }
            if self.mul(a, self.inv(a)) != e || self.mul(self.inv(a), a) != e {
                return Err(Error::Verification(format!("{}: inverse fails at {a}", self.label)));
            }
        }
        // Latin square: each row and column is a permutation.
        let mut seen_row = vec![false; n];
        let mut seen_col = vec![false; n];
        for a in 0..n {
            seen_row.fill(false);
            seen_col.fill(false);
            for b in 0..n {
                let r = self.table[a * n + b] as usize;
                let c = self.table[b * n + a] as usize;
                if seen_row[r] || seen_col[c] {
                    return Err(Error::Verification(format!(
                        "{}: row/column {a} is not a permutation",
                        self.label
                    )));
                }
                seen_row[r] = true;
                seen_col[c] = true;
            }
        }
        let check_triple = |a: ElementId, b: ElementId, c: ElementId| -> Result<()> {
            if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                return Err(Error::Verification(format!(
                    "{}: associativity fails at ({a},{b},{c})",
                    self.label
                )));
            }
            Ok(())
        };
        if n <= exhaustive_limit {
            for a in self.elements() {
                for b in self.elements() {
                    for c in self.elements() {
                        check_triple(a, b, c)?;
                    }
                }
            }
        } else {
            let mut rng: Rng = rng_from_seed(seed);
            for _ in 0..trials {
                let a = ElementId(rng.gen_range(0..n) as u16);
                let b = ElementId(rng.gen_range(0..n) as u16);
                let c = ElementId(rng.gen_range(0..n) as u16);
                check_triple(a, b, c)?;
            }
        }
        Ok(())
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::cap(format!("group order {order} exceeds cap {MAX_ORDER}")))
    } else {
        Ok(())
    }
}

/// Parse a group descriptor: `cyclic:n`, `sym:m`, `alt:m`, `sl2:p`, or
/// `prod:(a,b)` with recursively nested descriptors.
pub fn parse_descriptor(desc: &str) -> Result<Group> {
    let desc = desc.trim();
    let (head, rest) = desc
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("descriptor `{desc}` has no `:`")))?;
    let parse_num = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("`{s}` is not a number in `{desc}`")))
    };
    match head {
        "cyclic" => Group::cyclic(parse_num(rest)?),
        "sym" => Group::symmetric(parse_num(rest)?),
        "alt" => Group::alternating(parse_num(rest)?),
        "sl2" => Group::sl2(parse_num(rest)?),
        "prod" => {
            let inner = rest
                .trim()
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::Parse(format!("prod needs `(a,b)` in `{desc}`")))?;
            // Split on the top-level comma only; components may nest prods.
            let mut depth = 0usize;
            let mut split = None;
            for (i, ch) in inner.char_indices() {
                match ch {
                    '(' => depth += 1,
                    ')' => {
                        depth = depth
                            .checked_sub(1)
                            .ok_or_else(|| Error::Parse(format!("unbalanced parens in `{desc}`")))?
                    }
                    ',' if depth == 0 => {
                        split = Some(i);
                        break;
                    }
                    _ => {}
                }
            }
            let split = split.ok_or_else(|| Error::Parse(format!("prod needs two components in `{desc}`")))?;
            let left = parse_descriptor(&inner[..split])?;
            let right = parse_descriptor(&inner[split + 1..])?;
            Group::product(&left, &right)
        }
        other => Err(Error::Parse(format!("unknown family `{other}` in `{desc}`"))),
    }
}

// --- permutation helpers (one-line notation, lexicographic ranking) ---

fn all_permutations(m: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current: Vec<u8> = (0..m as u8).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (0..m.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

/// Lexicographic rank of a one-line permutation (Lehmer code).
fn permutation_rank(p: &[u8]) -> usize {
    let m = p.len();
    let mut rank = 0;
    let mut factorial = 1;
    for i in (0..m).rev() {
        let smaller = p[i + 1..].iter().filter(|&&x| x < p[i]).count();
        rank += smaller * factorial;
        factorial *= m - i;
    }
    rank
}

fn permutation_is_even(p: &[u8]) -> bool {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

/// Build the composition table for a list of permutations, where `reindex`
/// maps an S_m lexicographic rank to the local id (identity for S_m itself,
/// the A_m id map for the alternating group).
fn permutation_table(perms: &[Vec<u8>], reindex: impl Fn(usize) -> usize) -> Vec<u16> {
    let n = perms.len();
    let m = perms[0].len();
    let mut table = vec![0u16; n * n];
    let mut prod = vec![0u8; m];
    for (i, s) in perms.iter().enumerate() {
        for (j, t) in perms.iter().enumerate() {
            for x in 0..m {
                prod[x] = s[t[x] as usize];
            }
            table[i * n + j] = reindex(permutation_rank(&prod)) as u16;
        }
    }
    table
}

fn permutation_inverses(perms: &[Vec<u8>], reindex: impl Fn(usize) -> usize) -> Vec<u16> {
    let m = perms[0].len();
    let mut inv = vec![0u8; m];
    perms
        .iter()
        .map(|p| {
            for x in 0..m {
                inv[p[x] as usize] = x as u8;
            }
            reindex(permutation_rank(&inv)) as u16
        })
        .collect()
}

fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn element_orders(g: &Group) -> Vec<usize> {
        let mut orders: Vec<usize> = g
            .elements()
            .map(|a| {
                let mut x = a;
                let mut ord = 1;
                while x != g.identity() {
                    x = g.mul(x, a);
                    ord += 1;
                }
                ord
            })
            .collect();
        orders.sort_unstable();
        orders
    }

    #[test]
    fn cyclic_is_modular_addition() {
        let g = Group::cyclic(12).unwrap();
        assert_eq!(g.mul(ElementId(7), ElementId(8)), ElementId(3));
        assert_eq!(g.inv(ElementId(5)), ElementId(7));
        assert_eq!(g.identity(), ElementId(0));
        assert!(g.is_abelian());
    }

    #[test]
    fn symmetric_orders_and_composition_convention() {
        let g = Group::symmetric(3).unwrap();
        assert_eq!(g.order(), 6);
        // lex order of one-line perms on {0,1,2}:
        // 0:(012) 1:(021) 2:(102) 3:(120) 4:(201) 5:(210)
        // (s t)(x) = s(t(x)): s = (1,2,0) id 3, t = (0,2,1) id 1,
        // product maps 0->1, 1->0, 2->2, i.e. (1,0,2) id 2.
        assert_eq!(g.mul(ElementId(3), ElementId(1)), ElementId(2));
        assert!(!g.is_abelian());
        assert_eq!(element_orders(&g), vec![1, 2, 2, 2, 3, 3]);
    }

    #[test]
    fn alternating_five_has_expected_order_profile() {
        let g = Group::alternating(5).unwrap();
        assert_eq!(g.order(), 60);
        let orders = element_orders(&g);
        let count = |k: usize| orders.iter().filter(|&&o| o == k).count();
        // 1 identity, 15 double transpositions, 20 three-cycles, 24 five-cycles.
        assert_eq!((count(1), count(2), count(3), count(5)), (1, 15, 20, 24));
    }

    #[test]
    fn sl2_small_orders() {
        for (p, expect) in [(2, 6), (3, 24), (5, 120), (7, 336), (13, 2184)] {
            let g = Group::sl2(p).unwrap();
            assert_eq!(g.order(), expect, "sl2:{p}");
            assert_eq!(g.identity(), ElementId(0));
        }
        assert!(Group::sl2(4).is_err());
        assert!(Group::sl2(19).is_err(), "19^3-19 = 6840 over the cap");
    }

    #[test]
    fn product_of_coprime_cyclics_is_cyclic() {
        let a = Group::cyclic(2).unwrap();
        let b = Group::cyclic(3).unwrap();
        let p = Group::product(&a, &b).unwrap();
        assert_eq!(element_orders(&p), element_orders(&Group::cyclic(6).unwrap()));
        assert_eq!(p.label(), "prod:(cyclic:2,cyclic:3)");
    }

    #[test]
    fn descriptor_roundtrip_and_errors() {
        for desc in ["cyclic:6", "sym:4", "alt:4", "sl2:3", "prod:(cyclic:2,prod:(cyclic:3,alt:4))"] {
            let g = parse_descriptor(desc).unwrap();
            assert_eq!(g.label(), desc);
        }
        assert!(parse_descriptor("cyclic").is_err());
        assert!(parse_descriptor("dihedral:5").is_err());
        assert!(parse_descriptor("prod:(cyclic:2)").is_err());
        assert!(parse_descriptor("cyclic:0").is_err());
        assert!(matches!(parse_descriptor("cyclic:9999"), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn axioms_exhaustive_on_every_family() {
        for desc in ["cyclic:16", "sym:4", "alt:5", "sl2:3", "prod:(cyclic:4,sym:3)"] {
            let g = parse_descriptor(desc).unwrap();
            g.check_axioms(200, 0, 0).unwrap();
        }
    }

    #[test]
    fn mul_chain_empty_is_identity() {
        let g = Group::symmetric(4).unwrap();
        assert_eq!(g.mul_chain(&[]), g.identity());
        let ElementId(x) = g.mul_chain(&[ElementId(5), ElementId(11), ElementId(2)]);
        let direct = g.mul(g.mul(ElementId(5), ElementId(11)), ElementId(2));
        assert_eq!(ElementId(x), direct);
    }

    proptest! {
        #[test]
        fn chain_product_is_parenthesization_independent(
            ids in proptest::collection::vec(0usize..24, 1..6),
            cut in 0usize..6,
        ) {
            let g = Group::sl2(3).unwrap();
            let chain: Vec<ElementId> = ids.iter().map(|&i| ElementId(i as u16)).collect();
            let cut = cut.min(chain.len());
            let left = g.mul_chain(&chain[..cut]);
            let right = g.mul_chain(&chain[cut..]);
            prop_assert_eq!(g.mul(left, right), g.mul_chain(&chain));
        }

        #[test]
        fn inverse_is_an_antihomomorphism(a in 0usize..120, b in 0usize..120) {
            let g = Group::sl2(5).unwrap();
            let (a, b) = (ElementId(a as u16), ElementId(b as u16));
            prop_assert_eq!(g.inv(g.mul(a, b)), g.mul(g.inv(b), g.inv(a)));
        }
    }
}
