//! Fixtures shared by the oracle benchmarks.

use maxmin::instances::{make_hard_instance, HardInstance, HardInstanceConfig};
use maxmin::{Result, SmoothingParams, Vector};

/// A hard instance with `N` components, chain length `T` and `d <= 64`,
/// with a point near the start of the chain.
pub fn hard_fixture(t: usize, n: usize, seed: u64) -> Result<(HardInstance, SmoothingParams, Vector)> {
    let inst = make_hard_instance(HardInstanceConfig::sample(t, n, 16.0, Some(64), seed)?)?;
    let params = SmoothingParams::for_problem(0.05, &inst)?;
    let x = inst.minimizer() * 0.25;
    Ok((inst, params, x))
}
