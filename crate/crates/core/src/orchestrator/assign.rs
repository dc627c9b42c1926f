use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Backend index of every work unit (reservoir or readout instance).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub units: Vec<usize>,
    pub num_backends: usize,
}

impl Assignment {
    pub fn backend_of(&self, unit: usize) -> usize {
        self.units[unit]
    }

    /// Units placed on each backend.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_backends];
        for &b in &self.units {
            c[b] += 1;
        }
        c
    }
}

/// Fixed placement table for three backends: units per backend, in order.
fn three_backend_counts(units: usize) -> Option<[usize; 3]> {
    match units {
        1 => Some([0, 1, 0]),
        2 => Some([1, 1, 0]),
        3 => Some([1, 1, 1]),
        5 => Some([2, 2, 1]),
        _ => None,
    }
}

/// With three backends and 1, 2, 3 or 5 units the fixed table is used, filling
/// backends contiguously in listed order; everything else is round-robin.
pub fn assign_backends(num_units: usize, num_backends: usize) -> Result<Assignment> {
    if num_backends == 0 {
        return Err(Error::config("at least one backend is required"));
    }
    let units = match (num_backends, three_backend_counts(num_units)) {
        (3, Some(counts)) => counts.iter().enumerate().flat_map(|(b, &c)| std::iter::repeat_n(b, c)).collect(),
        _ => (0..num_units).map(|i| i % num_backends).collect(),
    };
    Ok(Assignment { units, num_backends })
}
