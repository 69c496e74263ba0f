/// Resource caps for the potentially expensive operations.
#[derive(Debug, Clone)]
pub struct Limits {
    /// Maximum simplex pivots per LP solve.
    pub max_pivots: u64,
    /// Maximum number of finite-support mappings enumerated as LP columns.
    pub max_columns: u64,
    /// Maximum search-tree nodes explored by brute-force optimisation.
    pub max_maps: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_pivots: 1_000_000,
            max_columns: 200_000,
            max_maps: 10_000_000,
        }
    }
}
