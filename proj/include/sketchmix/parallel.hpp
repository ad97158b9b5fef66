#pragma once

#include <cstddef>
#include <functional>

namespace sketchmix {

/// Worker count: `requested` if nonzero, else SKETCHMIX_THREADS, else hardware.
unsigned resolve_threads(unsigned requested = 0);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items are
/// claimed dynamically, so callers must write results into slot i and reduce
/// afterwards in index order to stay deterministic.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace sketchmix
