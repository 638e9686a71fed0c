//! Flat particle storage.
//!
//! Positions live in one contiguous buffer, `dim` floats per particle, so a
//! million-particle ensemble costs one allocation and resampling is a gather.

#[derive(Debug, Clone, PartialEq)]
pub struct Particles {
    data: Vec<f64>,
    dim: usize,
}

impl Particles {
    pub fn zeros(n: usize, dim: usize) -> Self {
        assert!(dim >= 1);
        Particles {
            data: vec![0.0; n * dim],
            dim,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty());
        let dim = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            assert_eq!(row.len(), dim);
            data.extend_from_slice(row);
        }
        Particles { data, dim }
    }

    pub fn filled(n: usize, point: &[f64]) -> Self {
        let dim = point.len();
        let mut data = Vec::with_capacity(n * dim);
        for _ in 0..n {
            data.extend_from_slice(point);
        }
        Particles { data, dim }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Split the storage into disjoint chunks of at most `chunk` particles.
    /// Chunk boundaries depend only on `chunk`, never on thread count.
    pub fn chunks_mut(&mut self, chunk: usize) -> impl Iterator<Item = &mut [f64]> {
        self.data.chunks_mut(chunk * self.dim)
    }

    /// Gather `indices` into a fresh particle set (resampling output order is
    /// the draw order).
    pub fn gather(&self, indices: &[usize]) -> Particles {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Particles { data, dim: self.dim }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gather_preserves_draw_order() {
        let p = Particles::from_rows(&[vec![0.0, 0.5], vec![1.0, 1.5], vec![2.0, 2.5]]);
        let g = p.gather(&[2, 0, 2]);
        assert_eq!(g.row(0), &[2.0, 2.5]);
        assert_eq!(g.row(1), &[0.0, 0.5]);
        assert_eq!(g.row(2), &[2.0, 2.5]);
    }

    #[test]
    fn chunk_boundaries_are_fixed() {
        let mut p = Particles::zeros(10, 2);
        let sizes: Vec<usize> = p.chunks_mut(4).map(|c| c.len() / 2).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
    }
}
