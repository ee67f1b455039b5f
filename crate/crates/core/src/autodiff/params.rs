use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::AutodiffError;

/// A named contiguous block of parameters, e.g. `u.sym.l1.k3`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

impl Segment {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Ordered, gap-free list of segments covering a flat parameter array.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    segments: Vec<Segment>,
}

impl ParamLayout {
    pub fn new() -> ParamLayout {
        ParamLayout::default()
    }

    /// Appends a segment right after the last one and returns its offset.
    pub fn push(&mut self, name: impl Into<String>, len: usize) -> usize {
        let offset = self.len();
        self.segments.push(Segment { name: name.into(), offset, len });
        offset
    }

    /// Appends every segment of `other`, shifted to follow this layout.
    pub fn extend(&mut self, other: &ParamLayout) {
        let base = self.len();
        for s in &other.segments {
            self.segments.push(Segment {
                name: s.name.clone(),
                offset: base + s.offset,
                len: s.len,
            });
        }
    }

    pub fn len(&self) -> usize {
        self.segments.last().map_or(0, |s| s.offset + s.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    /// Union of the ranges of all segments whose name starts with `prefix`.
    pub fn ranges_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = Range<usize>> + 'a {
        self.segments
            .iter()
            .filter(move |s| s.name.starts_with(prefix))
            .map(Segment::range)
    }

    /// Segments are contiguous, disjoint and start at zero.
    pub fn validate(&self) -> Result<(), AutodiffError> {
        let mut next = 0;
        for s in &self.segments {
            if s.offset != next {
                return Err(AutodiffError::Layout(format!(
                    "segment {} starts at {} but previous segment ends at {}",
                    s.name, s.offset, next
                )));
            }
            next = s.offset + s.len;
        }
        Ok(())
    }
}

/// Flat trainable parameters with their layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    layout: ParamLayout,
}

/// Gradient of a scalar loss; shares the layout of the parameters.
pub type ParamGradient = ParamVector;

impl ParamVector {
    pub fn zeros(layout: ParamLayout) -> ParamVector {
        ParamVector { values: vec![0.0; layout.len()], layout }
    }

    pub fn from_values(layout: ParamLayout, values: Vec<f64>) -> Result<ParamVector, AutodiffError> {
        layout.validate()?;
        if values.len() != layout.len() {
            return Err(AutodiffError::Layout(format!(
                "{} values for a layout of {} parameters",
                values.len(),
                layout.len()
            )));
        }
        Ok(ParamVector { values, layout })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn segment_values(&self, name: &str) -> Option<&[f64]> {
        self.layout.segment(name).map(|s| &self.values[s.range()])
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        self.layout == other.layout
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_cover_array_exactly() {
        let mut layout = ParamLayout::new();
        layout.push("a", 3);
        layout.push("b", 0);
        layout.push("c", 5);
        layout.validate().unwrap();
        assert_eq!(layout.len(), 8);
        let p = ParamVector::zeros(layout.clone());
        assert_eq!(p.len(), 8);
        assert!(ParamVector::from_values(layout, vec![0.0; 7]).is_err());
    }

    #[test]
    fn extend_shifts_offsets() {
        let mut a = ParamLayout::new();
        a.push("x", 2);
        let mut b = ParamLayout::new();
        b.push("y", 4);
        a.extend(&b);
        assert_eq!(a.segment("y").unwrap().range(), 2..6);
        a.validate().unwrap();
    }
}
