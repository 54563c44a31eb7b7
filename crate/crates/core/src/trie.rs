//! Arena-backed character trie with dropout-aware longest-match search.

use crate::rng::RandomSource;
use crate::vocab::{PositionClass, TokenId, Vocabulary};

type NodeId = u32;

const ROOT: NodeId = 0;

#[derive(Clone, Debug, Default)]
struct TrieNode {
    /// Sorted by character.
    children: Vec<(char, NodeId)>,
    token_id: Option<TokenId>,
}

impl TrieNode {
    fn child(&self, ch: char) -> Option<NodeId> {
        // Small fan-outs dominate below the root; a linear scan beats the
        // branchy binary search there.
        if self.children.len() <= 8 {
            self.children.iter().find(|(c, _)| *c == ch).map(|&(_, n)| n)
        } else {
            self.children
                .binary_search_by_key(&ch, |&(c, _)| c)
                .ok()
                .map(|i| self.children[i].1)
        }
    }
}

/// A successful match starting at some position of a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchResult {
    /// Matched length in characters, excluding any continuation prefix.
    pub length: usize,
    pub token_id: TokenId,
}

/// Prefix tree over the vocabulary entries of one position class.
#[derive(Clone, Debug)]
pub struct Trie {
    nodes: Vec<TrieNode>,
    class: PositionClass,
}

impl Trie {
    /// Inserts every token of `class`, with continuation prefixes stripped.
    /// Special tokens are skipped.
    pub fn build(vocab: &Vocabulary, class: PositionClass) -> Self {
        let mut trie = Trie {
            nodes: vec![TrieNode::default()],
            class,
        };
        for (id, token) in vocab.tokens() {
            if let Some(surface) = vocab.surface_in_class(token, class) {
                trie.insert(surface, id);
            }
        }
        trie
    }

    fn insert(&mut self, surface: &str, id: TokenId) {
        let mut node = ROOT;
        for ch in surface.chars() {
            node = match self.nodes[node as usize]
                .children
                .binary_search_by_key(&ch, |&(c, _)| c)
            {
                Ok(i) => self.nodes[node as usize].children[i].1,
                Err(i) => {
                    let next = self.nodes.len() as NodeId;
                    self.nodes.push(TrieNode::default());
                    self.nodes[node as usize].children.insert(i, (ch, next));
                    next
                }
            };
        }
        self.nodes[node as usize].token_id = Some(id);
    }

    pub fn position_class(&self) -> PositionClass {
        self.class
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn accepting_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.token_id.is_some()).count()
    }

    /// Token id accepted at the end of `path`, if any.
    pub fn get(&self, path: &str) -> Option<TokenId> {
        let mut node = ROOT;
        for ch in path.chars() {
            node = self.nodes[node as usize].child(ch)?;
        }
        self.nodes[node as usize].token_id
    }

    /// Longest match of `word[start..]` where each accepting state of length
    /// two or more survives with probability `1 - dropout`.
    ///
    /// Draws are taken from `rng` in increasing candidate length, one per
    /// accepting state of length >= 2 on the walk. Length-1 states are always
    /// kept. The walk stops at the first missing edge or the end of `word`.
    pub fn longest_match<R: RandomSource + ?Sized>(
        &self,
        word: &[char],
        start: usize,
        dropout: f64,
        rng: &mut R,
    ) -> Option<MatchResult> {
        debug_assert!(start < word.len());
        let keep = 1.0 - dropout;
        let mut node = &self.nodes[ROOT as usize];
        let mut best = None;
        for (offset, &ch) in word[start..].iter().enumerate() {
            match node.child(ch) {
                Some(next) => node = &self.nodes[next as usize],
                None => break,
            }
            if let Some(token_id) = node.token_id {
                let length = offset + 1;
                if length == 1 || rng.bernoulli(keep) {
                    best = Some(MatchResult { length, token_id });
                }
            }
        }
        best
    }
}
