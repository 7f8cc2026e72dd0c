/// One draw together with its unnormalized log weight and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub x: Vec<f64>,
    /// `-inf` or finite, never NaN.
    pub log_w: f64,
    /// Index of the generating proposal, `0..N`.
    pub proposal_index: usize,
    /// Position of this draw among the `K` draws of its proposal, `0..K`.
    pub sample_index: usize,
    /// 1-based iteration that produced the draw.
    pub iteration: usize,
}
