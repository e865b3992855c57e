//! Cell genotype: six edges over a four-node DAG, five candidate operations
//! per edge.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::rng::Stream;

pub const NUM_NODES: usize = 4;
pub const NUM_EDGES: usize = 6;
pub const NUM_OPS: usize = 5;
/// `NUM_OPS ^ NUM_EDGES`
pub const SPACE_SIZE: usize = 15_625;

/// `(source, destination)` for each edge position, grouped by destination.
pub const EDGES: [(usize, usize); NUM_EDGES] = [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Zeroize,
    SkipConnect,
    Conv1x1,
    Conv3x3,
    AvgPool3x3,
}

impl OpKind {
    pub const ALL: [OpKind; NUM_OPS] = [
        OpKind::Zeroize,
        OpKind::SkipConnect,
        OpKind::Conv1x1,
        OpKind::Conv3x3,
        OpKind::AvgPool3x3,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<OpKind> {
        Self::ALL.get(i).copied()
    }

    /// Canonical name used in architecture strings and benchmark files.
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Zeroize => "none",
            OpKind::SkipConnect => "skip_connect",
            OpKind::Conv1x1 => "nor_conv_1x1",
            OpKind::Conv3x3 => "nor_conv_3x3",
            OpKind::AvgPool3x3 => "avg_pool_3x3",
        }
    }

    pub fn from_name(name: &str) -> Option<OpKind> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArchEncoding {
    pub edge_ops: [OpKind; NUM_EDGES],
}

impl ArchEncoding {
    pub fn new(edge_ops: [OpKind; NUM_EDGES]) -> Self {
        Self { edge_ops }
    }

    pub fn uniform(op: OpKind) -> Self {
        Self::new([op; NUM_EDGES])
    }

    /// Position in lexicographic order of edge-op indices (edge 0 most significant).
    pub fn ordinal(&self) -> usize {
        self.edge_ops
            .iter()
            .fold(0, |acc, op| acc * NUM_OPS + op.index())
    }

    pub fn from_ordinal(mut ordinal: usize) -> Option<Self> {
        if ordinal >= SPACE_SIZE {
            return None;
        }
        let mut ops = [OpKind::Zeroize; NUM_EDGES];
        for slot in ops.iter_mut().rev() {
            *slot = OpKind::ALL[ordinal % NUM_OPS];
            ordinal /= NUM_OPS;
        }
        Some(Self::new(ops))
    }

    /// Operation on the edge `source -> dest`, if that edge exists.
    pub fn op(&self, source: usize, dest: usize) -> Option<OpKind> {
        EDGES
            .iter()
            .position(|&e| e == (source, dest))
            .map(|i| self.edge_ops[i])
    }

    pub fn hamming(&self, other: &ArchEncoding) -> usize {
        self.edge_ops
            .iter()
            .zip(other.edge_ops.iter())
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn encode_str(&self) -> String {
        let mut out = String::from("|");
        for dest in 1..NUM_NODES {
            if dest > 1 {
                out.push_str("+|");
            }
            for src in 0..dest {
                let op = self.op(src, dest).expect("edge exists");
                out.push_str(op.name());
                out.push('~');
                out.push_str(&src.to_string());
                out.push('|');
            }
        }
        out
    }

    pub fn decode_str(text: &str) -> Result<Self, ParseError> {
        let groups: Vec<&str> = text.split('+').collect();
        if groups.len() != NUM_NODES - 1 {
            return Err(ParseError::at(
                0,
                text,
                format!("expected {} node groups, found {}", NUM_NODES - 1, groups.len()),
            ));
        }
        let mut ops = [OpKind::Zeroize; NUM_EDGES];
        let mut offset = 0;
        for (g, group) in groups.iter().enumerate() {
            let dest = g + 1;
            let inner = group
                .strip_prefix('|')
                .and_then(|s| s.strip_suffix('|'))
                .ok_or_else(|| ParseError::at(offset, group, "group must be delimited by '|'"))?;
            let tokens: Vec<&str> = inner.split('|').collect();
            if tokens.len() != dest {
                return Err(ParseError::at(
                    offset,
                    group,
                    format!("wrong group arity: node {dest} expects {dest} inputs, found {}", tokens.len()),
                ));
            }
            let mut tok_offset = offset + 1;
            for (src, tok) in tokens.iter().enumerate() {
                let (name, idx) = tok
                    .split_once('~')
                    .ok_or_else(|| ParseError::at(tok_offset, tok, "expected 'op~source'"))?;
                let op = OpKind::from_name(name)
                    .ok_or_else(|| ParseError::at(tok_offset, name, "unknown op name"))?;
                if idx.parse::<usize>().ok() != Some(src) {
                    return Err(ParseError::at(
                        tok_offset + name.len() + 1,
                        idx,
                        format!("expected source index {src}"),
                    ));
                }
                let edge = EDGES.iter().position(|&e| e == (src, dest)).expect("edge exists");
                ops[edge] = op;
                tok_offset += tok.len() + 1;
            }
            offset += group.len() + 1;
        }
        Ok(Self::new(ops))
    }
}

impl fmt::Display for ArchEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode_str())
    }
}

impl FromStr for ArchEncoding {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::decode_str(s)
    }
}

impl Serialize for ArchEncoding {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.encode_str())
    }
}

impl<'de> Deserialize<'de> for ArchEncoding {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::decode_str(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub nodes: usize,
    pub ops: Vec<String>,
}

impl Default for SpaceDescriptor {
    fn default() -> Self {
        Self {
            nodes: NUM_NODES,
            ops: OpKind::ALL.iter().map(|op| op.name().to_string()).collect(),
        }
    }
}

impl SpaceDescriptor {
    pub fn num_edges(&self) -> usize {
        self.nodes * (self.nodes - 1) / 2
    }

    pub fn size(&self) -> usize {
        self.ops.len().pow(self.num_edges() as u32)
    }
}

/// Uniform draw over the whole space; always consumes exactly one output.
pub fn random_arch(rng: &mut Stream) -> ArchEncoding {
    ArchEncoding::from_ordinal(rng.index(SPACE_SIZE)).expect("ordinal in range")
}

/// Replace the op on `edge` with the `choice`-th op (0..4) among the four that
/// differ from the current one.
pub fn mutate_with(parent: &ArchEncoding, edge: usize, choice: usize) -> ArchEncoding {
    assert!(edge < NUM_EDGES && choice < NUM_OPS - 1);
    let current = parent.edge_ops[edge].index();
    let replacement = if choice < current { choice } else { choice + 1 };
    let mut child = *parent;
    child.edge_ops[edge] = OpKind::ALL[replacement];
    child
}

/// Single-edge mutation. One draw selects among the 6 x 4 possible children.
pub fn mutate(parent: &ArchEncoding, rng: &mut Stream) -> ArchEncoding {
    let k = rng.index(NUM_EDGES * (NUM_OPS - 1));
    mutate_with(parent, k / (NUM_OPS - 1), k % (NUM_OPS - 1))
}

pub fn enumerate_all() -> Vec<ArchEncoding> {
    (0..SPACE_SIZE)
        .map(|i| ArchEncoding::from_ordinal(i).expect("ordinal in range"))
        .collect()
}
