use std::sync::Arc;

/// Data attached to lattice points: either one value everywhere or one value
/// per lattice point (indexed by linear lattice index).
#[derive(Clone, Debug)]
pub enum Pointwise<T> {
    Constant(T),
    PerPoint(Arc<Vec<T>>),
}

impl<T> Pointwise<T> {
    #[inline]
    pub fn at(&self, idx: usize) -> &T {
        match self {
            Pointwise::Constant(v) => v,
            Pointwise::PerPoint(vs) => &vs[idx],
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Pointwise::Constant(_))
    }

    /// Number of stored values; `None` for constants.
    pub fn len(&self) -> Option<usize> {
        match self {
            Pointwise::Constant(_) => None,
            Pointwise::PerPoint(vs) => Some(vs.len()),
        }
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = &T> + '_> {
        match self {
            Pointwise::Constant(v) => Box::new(std::iter::once(v)),
            Pointwise::PerPoint(vs) => Box::new(vs.iter()),
        }
    }
}
