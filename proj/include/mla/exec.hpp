#pragma once

namespace mla {

/// Execution policy for the data-parallel kernels. Serial is the reference
/// path; Parallel distributes loop iterations over OpenMP threads. Every
/// kernel writes per-iteration results into indexed slots and reduces them in
/// a fixed serial order, so both policies produce bit-identical output.
enum class Exec { Serial, Parallel };

}  // namespace mla
