use crate::error::{Error, Result};

/// A fixed-length sequence of state vectors with uniform dimension.
///
/// States are stored row-major in one buffer; `state(t)` borrows row `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    id: String,
    dim: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, states: Vec<Vec<f64>>) -> Result<Self> {
        let id = id.into();
        let dim = states
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid(format!("trajectory {id} has no states")))?;
        let mut data = Vec::with_capacity(dim * states.len());
        for (t, s) in states.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::invalid(format!(
                    "trajectory {id}: state {t} has dimension {} (expected {dim})",
                    s.len()
                )));
            }
            data.extend_from_slice(s);
        }
        Self::from_flat(id, dim, data)
    }

    pub fn from_flat(id: impl Into<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if dim == 0 {
            return Err(Error::invalid(format!("trajectory {id} has zero dimension")));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "trajectory {id}: buffer of {} values is not a nonempty multiple of {dim}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("trajectory {id} has non-finite component {v}")));
        }
        Ok(Self { id, dim, data })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of time steps `T`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_states(&self) -> Vec<Vec<f64>> {
        self.states().map(<[f64]>::to_vec).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_states() {
        let err = Trajectory::new("a", vec![vec![0.0, 1.0], vec![2.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(Trajectory::new("a", vec![]).is_err());
        assert!(Trajectory::new("a", vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn row_access() {
        let x = Trajectory::new("a", vec![vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(x.state(1), &[2.0, 3.0]);
        assert_eq!(x.to_states(), vec![vec![0.0, 1.0], vec![2.0, 3.0]]);
    }
}
