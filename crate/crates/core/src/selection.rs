use crate::error::{Error, Result};

/// Checks that `x` is a 0/1 vector of length `n` and returns its cardinality.
pub fn cardinality(x: &[u8], n: usize) -> Result<usize> {
    if x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len(),
        });
    }
    let mut k = 0;
    for (index, &value) in x.iter().enumerate() {
        match value {
            0 => {}
            1 => k += 1,
            _ => return Err(Error::NonBinary { index, value }),
        }
    }
    Ok(k)
}

/// Indices of the selected entries.
pub fn selected_indices(x: &[u8]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &v)| v == 1)
        .map(|(i, _)| i)
        .collect()
}

/// Builds a 0/1 vector of length `n` with ones at `indices`.
pub fn from_indices(indices: &[usize], n: usize) -> Result<Vec<u8>> {
    let mut x = vec![0u8; n];
    for &i in indices {
        if i >= n {
            return Err(Error::Dimension {
                expected: n,
                got: i + 1,
            });
        }
        x[i] = 1;
    }
    Ok(x)
}
