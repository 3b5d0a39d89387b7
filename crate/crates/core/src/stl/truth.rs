use super::Expr;
use crate::error::{Error, Result};

pub const MAX_TRUTH_TABLE_ATOMS: usize = 24;

/// Boolean value of an expression under each of the `2^M` atom assignments.
/// Assignment `j` sets atom `i` true iff bit `i` of `j` is set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruthTable {
    atom_count: usize,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn len(&self) -> usize {
        1 << self.atom_count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, assignment: usize) -> bool {
        self.words[assignment / 64] >> (assignment % 64) & 1 == 1
    }

    pub fn to_vec(&self) -> Vec<bool> {
        (0..self.len()).map(|j| self.get(j)).collect()
    }

    fn valid_mask(&self) -> u64 {
        if self.len() >= 64 {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        }
    }

    pub fn is_tautology(&self) -> bool {
        let m = self.valid_mask();
        self.words.iter().all(|w| w & m == m)
    }

    pub fn is_contradiction(&self) -> bool {
        let m = self.valid_mask();
        self.words.iter().all(|w| w & m == 0)
    }

    pub fn is_constant(&self) -> bool {
        self.is_tautology() || self.is_contradiction()
    }
}

// Bit patterns of atoms 0..6 within one 64-assignment word.
const LOW_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

fn eval_word(e: &Expr, word: usize) -> u64 {
    match e {
        Expr::Atom(i) if *i < 6 => LOW_PATTERNS[*i],
        Expr::Atom(i) => {
            if (word >> (i - 6)) & 1 == 1 {
                u64::MAX
            } else {
                0
            }
        }
        Expr::Not(c) => !eval_word(c, word),
        Expr::And(cs) => cs.iter().fold(u64::MAX, |acc, c| acc & eval_word(c, word)),
        Expr::Or(cs) => cs.iter().fold(0, |acc, c| acc | eval_word(c, word)),
    }
}

/// Exhaustive Boolean evaluation of `expr` over `atom_count` atoms.
pub fn truth_table(expr: &Expr, atom_count: usize) -> Result<TruthTable> {
    if atom_count > MAX_TRUTH_TABLE_ATOMS {
        return Err(Error::Capacity(format!(
            "truth table over {atom_count} atoms exceeds {MAX_TRUTH_TABLE_ATOMS}"
        )));
    }
    if let Some(i) = expr.max_atom() {
        if i >= atom_count {
            return Err(Error::invalid(format!(
                "expression references atom {} beyond atom_count {atom_count}",
                i + 1
            )));
        }
    }
    let n_words = (1usize << atom_count).div_ceil(64);
    let mask = if atom_count >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << atom_count)) - 1
    };
    let words = (0..n_words).map(|w| eval_word(expr, w) & mask).collect();
    Ok(TruthTable { atom_count, words })
}
