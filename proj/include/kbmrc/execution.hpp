#pragma once

namespace kbmrc {

/// Selects between the OpenMP fan-out over instances and the plain serial
/// loop. Both must produce bit-identical results; the serial path is the
/// reference the parallel one is tested against.
enum class Execution { kSerial, kParallel };

/// Number of OpenMP threads the parallel path will use.
int parallel_threads();

}  // namespace kbmrc
