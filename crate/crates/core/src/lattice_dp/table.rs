use crate::weight::Weight;

/// One time slice of a DP table: explicit values on `[start, start + len)`,
/// constant defaults on either side.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Row<P> {
    pub start: i64,
    pub vals: Vec<P>,
    pub below: P,
    pub above: P,
}

impl<P: Weight> Row<P> {
    pub fn constant(value: P) -> Self {
        Row { start: 0, vals: Vec::new(), below: value.clone(), above: value }
    }

    #[inline]
    pub fn get(&self, x: i64) -> &P {
        let idx = x - self.start;
        if idx < 0 {
            &self.below
        } else if let Some(v) = self.vals.get(idx as usize) {
            v
        } else {
            &self.above
        }
    }
}

/// Rows indexed by the number of remaining steps `m = 0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Table<P> {
    pub rows: Vec<Row<P>>,
}

impl<P: Weight> Table<P> {
    #[inline]
    pub fn get(&self, m: usize, x: i64) -> &P {
        self.rows[m].get(x)
    }
}
