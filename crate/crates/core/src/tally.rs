//! Percentage quantization shared by the board, the authority and the ideal
//! model.

/// One percent is 100 basis points.
pub const FULL_SCALE: u32 = 10_000;

/// `floor(10000 · c_i / Σ c)` per option. An all-zero input gives all zeros.
pub fn basis_points(counts: &[u64]) -> Vec<u32> {
    let total: u128 = counts.iter().map(|&c| c as u128).sum();
    if total == 0 {
        return vec![0; counts.len()];
    }
    counts
        .iter()
        .map(|&c| (c as u128 * FULL_SCALE as u128 / total) as u32)
        .collect()
}

/// `12.34%`.
pub fn format_basis_points(bp: u32) -> String {
    format!("{}.{:02}%", bp / 100, bp % 100)
}
