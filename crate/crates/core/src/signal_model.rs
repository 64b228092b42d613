//! Block partitions over coefficient vectors and packetization of sample streams.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Contiguous, non-overlapping blocks covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    boundaries: Vec<usize>,
    sizes: Vec<usize>,
    n: usize,
}

impl BlockPartition {
    /// Builds a partition from explicit block sizes (`d_i`), laid out in order.
    pub fn from_sizes(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Partition("at least one block is required".into()));
        }
        if let Some(pos) = sizes.iter().position(|&d| d == 0) {
            return Err(Error::Partition(format!("block {pos} has size 0")));
        }
        let mut boundaries = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for &d in &sizes {
            boundaries.push(start);
            start += d;
        }
        Ok(BlockPartition {
            boundaries,
            sizes,
            n: start,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks `g`.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, block: usize) -> usize {
        self.sizes[block]
    }

    pub fn start(&self, block: usize) -> usize {
        self.boundaries[block]
    }

    pub fn range(&self, block: usize) -> Range<usize> {
        let start = self.boundaries[block];
        start..start + self.sizes[block]
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.len()).map(move |i| self.range(i))
    }
}

/// Splits `0..n` into `n / block_size` equal blocks.
pub fn uniform_partition(n: usize, block_size: usize) -> Result<BlockPartition> {
    if n == 0 || block_size == 0 {
        return Err(Error::Partition(format!(
            "length ({n}) and block size ({block_size}) must be positive"
        )));
    }
    if !n.is_multiple_of(block_size) {
        return Err(Error::Partition(format!(
            "block size {block_size} does not divide length {n}"
        )));
    }
    BlockPartition::from_sizes(vec![block_size; n / block_size])
}

/// A fixed-length window of consecutive samples from one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub samples: Vec<f64>,
    pub index: usize,
    pub source_id: String,
}

/// Output of [`packetize`]: the full packets plus the number of trailing
/// samples that did not fill a packet.
#[derive(Debug, Clone, PartialEq)]
pub struct Packetized {
    pub packets: Vec<Packet>,
    pub dropped: usize,
}

/// Cuts a stream into consecutive non-overlapping packets of `packet_size`
/// samples. A trailing remainder is dropped, never padded.
pub fn packetize(stream: &[f64], packet_size: usize, source_id: &str) -> Result<Packetized> {
    if packet_size == 0 {
        return Err(Error::InvalidParameter("packet size must be at least 1".into()));
    }
    let chunks = stream.chunks_exact(packet_size);
    let dropped = chunks.remainder().len();
    let packets = chunks
        .enumerate()
        .map(|(index, samples)| Packet {
            samples: samples.to_vec(),
            index,
            source_id: source_id.to_owned(),
        })
        .collect();
    Ok(Packetized { packets, dropped })
}
