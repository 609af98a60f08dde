//! Test-only loader for the frozen reference coefficient tables
//! (`tests/data/reference_tables.json`), generated by an independent
//! prototype implementation. Both engines must reproduce them exactly.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use std::fs;
use std::path::PathBuf;

use serde::Deserialize;

use crate::kahler::JetContext;
use crate::laplace::OperatorSeries;
use crate::multi_index::MultiIndex;
use crate::scalar::{ExactScalar, Rat, Ring};

#[derive(Deserialize)]
struct Entry {
    #[serde(rename = "I")]
    i: Vec<u8>,
    #[serde(rename = "J")]
    j: Vec<u8>,
    num: alloc::string::String,
    den: alloc::string::String,
}

fn parse_rat(num: &str, den: &str) -> Rat {
    use num_bigint::BigInt;
    let n: BigInt = num.parse().expect("integer numerator");
    let d: BigInt = den.parse().expect("integer denominator");
    Rat::from_big_parts(n, d).expect("nonzero denominator")
}

#[derive(Deserialize)]
struct Table {
    k: u32,
    terms: Vec<Entry>,
}

#[derive(Deserialize)]
struct CtxFix {
    order: u32,
    phi: Vec<Entry>,
    tables: Vec<Table>,
}

#[derive(Deserialize)]
struct Fix {
    ctx1d: CtxFix,
    ctx2d: CtxFix,
}

fn data_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/reference_tables.json")
}

fn load() -> Fix {
    let text = fs::read_to_string(data_path()).expect("reference tables present");
    serde_json::from_str(&text).expect("reference tables parse")
}

type RefTables = Vec<BTreeMap<(MultiIndex, MultiIndex), ExactScalar>>;

fn build(fix: &CtxFix, n: usize) -> (JetContext<ExactScalar>, RefTables) {
    let mut phi = BTreeMap::new();
    for e in &fix.phi {
        phi.insert(
            (MultiIndex::from_slice(&e.i), MultiIndex::from_slice(&e.j)),
            ExactScalar::new(parse_rat(&e.num, &e.den), Rat::zero()),
        );
    }
    let ctx = JetContext::from_phi_table(n, fix.order, phi).expect("reference context builds");
    let mut tables = Vec::new();
    for t in &fix.tables {
        assert_eq!(t.k as usize, tables.len());
        let mut m = BTreeMap::new();
        for e in &t.terms {
            // fixture keys are (J, I) in the serialized "J"/"I" fields
            m.insert(
                (MultiIndex::from_slice(&e.j), MultiIndex::from_slice(&e.i)),
                ExactScalar::new(parse_rat(&e.num, &e.den), Rat::zero()),
            );
        }
        tables.push(m);
    }
    (ctx, tables)
}

pub fn load_1d() -> (JetContext<ExactScalar>, RefTables) {
    build(&load().ctx1d, 1)
}

pub fn load_2d() -> (JetContext<ExactScalar>, RefTables) {
    build(&load().ctx2d, 2)
}

pub fn compare_tables(ops: &OperatorSeries<ExactScalar>, reference: &RefTables) {
    for (k, t) in reference.iter().enumerate() {
        let k = k as u32;
        if k > ops.order() {
            break;
        }
        for ((j, i), c) in t {
            assert_eq!(ops.coeff(k, j, i), *c, "k={k} J={j:?} I={i:?}");
        }
        let mut count = 0;
        for ((j, i), c) in ops.table(k) {
            if !c.is_zero() {
                assert_eq!(
                    t.get(&(j.clone(), i.clone())).cloned().unwrap_or_else(|| {
                        panic!("extra entry k={k} J={j:?} I={i:?}: {c:?}")
                    }),
                    *c
                );
                count += 1;
            }
        }
        assert_eq!(count, t.len(), "entry count at k={k}");
    }
}
