/// Mixes a base seed and run index into an independent 64-bit seed.
///
/// The index is spread by an odd multiplier and the result passed through
/// the splitmix64 finaliser, so the map is a bijection in `run_index` for a
/// fixed base.
pub fn derive_run_seed(base_seed: u64, run_index: u64) -> u64 {
    let mut z = base_seed ^ run_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
