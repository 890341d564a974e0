#ifndef FREQLAB_PARALLEL_HPP
#define FREQLAB_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace freqlab {

/// Process-wide worker count used by batch APIs. Zero means "hardware
/// concurrency". A value of 1 runs everything on the calling thread.
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Iterations are split into contiguous
/// blocks; callers that reduce results must do so in index order afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace freqlab

#endif  // FREQLAB_PARALLEL_HPP
