//! Independent reference implementations and instance generators shared by
//! the integration tests. Nothing here goes through the tries or the interned
//! BPE tables of the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHABET: [char; 5] = ['a', 'b', 'c', 'd', 'e'];

/// Greedy longest match by direct substring scanning over the raw token
/// list. Returns surfaces, with the unknown token for unsegmentable words.
pub fn greedy_oracle(word: &str, tokens: &[String], prefix: &str, unk: &str) -> Vec<String> {
    let set: HashSet<&str> = tokens.iter().map(String::as_str).collect();
    let chars: Vec<char> = word.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut found = None;
        for end in (i + 1..=chars.len()).rev() {
            let sub: String = chars[i..end].iter().collect();
            let key = if i == 0 { sub.clone() } else { format!("{prefix}{sub}") };
            let initial_ok = i > 0 || prefix.is_empty() || !(sub.starts_with(prefix) && sub.len() > prefix.len());
            if set.contains(key.as_str()) && key != unk && initial_ok {
                found = Some((end, key));
                break;
            }
        }
        match found {
            Some((end, key)) => {
                out.push(key);
                i = end;
            }
            None => return vec![unk.to_string()],
        }
    }
    out
}

/// Plain BPE: repeatedly merge the leftmost occurrence of the best-ranked
/// adjacent pair.
pub fn bpe_oracle(word: &str, merges: &[(String, String)]) -> Vec<String> {
    let rank: HashMap<(&str, &str), usize> = merges
        .iter()
        .enumerate()
        .rev()
        .map(|(i, (l, r))| ((l.as_str(), r.as_str()), i))
        .collect();
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for pos in 0..symbols.len().saturating_sub(1) {
            if let Some(&r) = rank.get(&(symbols[pos].as_str(), symbols[pos + 1].as_str())) {
                if best.map_or(true, |(br, _)| r < br) {
                    best = Some((r, pos));
                }
            }
        }
        let Some((_, pos)) = best else { break };
        let right = symbols.remove(pos + 1);
        symbols[pos].push_str(&right);
    }
    symbols
}

/// Exact BPE-Dropout outcome distribution by exploring every subset of
/// skipped candidates in every round.
pub fn bpe_dropout_distribution(word: &str, merges: &[(String, String)], p: f64) -> BTreeMap<Vec<String>, f64> {
    let rank: HashMap<(String, String), usize> = merges
        .iter()
        .enumerate()
        .rev()
        .map(|(i, pair)| (pair.clone(), i))
        .collect();
    let mut dist = BTreeMap::new();
    let symbols: Vec<String> = word.chars().map(String::from).collect();
    explore_bpe(symbols, &rank, p, 1.0, &mut dist);
    dist
}

fn explore_bpe(
    symbols: Vec<String>,
    rank: &HashMap<(String, String), usize>,
    p: f64,
    prob: f64,
    dist: &mut BTreeMap<Vec<String>, f64>,
) {
    let candidates: Vec<(usize, usize)> = (0..symbols.len().saturating_sub(1))
        .filter_map(|pos| rank.get(&(symbols[pos].clone(), symbols[pos + 1].clone())).map(|&r| (r, pos)))
        .collect();
    let n = candidates.len();
    for mask in 0u32..(1 << n) {
        // bit set = candidate kept
        let kept = mask.count_ones() as i32;
        let weight = (1.0 - p).powi(kept) * p.powi(n as i32 - kept);
        if weight == 0.0 {
            continue;
        }
        let best = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &c)| c)
            .min();
        match best {
            None => *dist.entry(symbols.clone()).or_insert(0.0) += prob * weight,
            Some((_, pos)) => {
                let mut next = symbols.clone();
                let right = next.remove(pos + 1);
                next[pos].push_str(&right);
                explore_bpe(next, rank, p, prob * weight, dist);
            }
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_string(rng: &mut ChaCha8Rng, alphabet: &[char], min: usize, max: usize) -> String {
    let len = rng.random_range(min..=max);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

/// Up to 20 distinct tokens over `alphabet`. With a non-empty prefix, about a
/// third of them are continuation tokens.
pub fn random_vocab(rng: &mut ChaCha8Rng, alphabet: &[char], prefix: &str) -> Vec<String> {
    let size = rng.random_range(1..=20);
    let mut seen = HashSet::new();
    let mut tokens = Vec::new();
    for _ in 0..size * 3 {
        if tokens.len() == size {
            break;
        }
        let body = random_string(rng, alphabet, 1, 4);
        let token = if !prefix.is_empty() && rng.random_bool(0.35) { format!("{prefix}{body}") } else { body };
        if seen.insert(token.clone()) {
            tokens.push(token);
        }
    }
    tokens
}

/// A merge table where every operand is a character or an earlier product.
pub fn random_merges(rng: &mut ChaCha8Rng, alphabet: &[char], max: usize) -> Vec<(String, String)> {
    let mut symbols: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
    let mut merges = Vec::new();
    let mut seen = HashSet::new();
    let target = rng.random_range(0..=max);
    for _ in 0..target * 4 {
        if merges.len() == target {
            break;
        }
        let l = symbols.choose(rng).unwrap().clone();
        let r = symbols.choose(rng).unwrap().clone();
        if seen.insert((l.clone(), r.clone())) {
            let merged = format!("{l}{r}");
            if !symbols.contains(&merged) {
                symbols.push(merged);
            }
            merges.push((l, r));
        }
    }
    merges
}
