#pragma once

#include <cstddef>
#include <functional>

namespace cdcnn {

// Name of the environment variable that caps worker threads.
inline constexpr const char* kThreadsEnvVar = "CDCNN_NUM_THREADS";

// Effective worker count: CDCNN_NUM_THREADS if set and positive, otherwise the
// OpenMP default (1 when built without OpenMP).
int thread_count();
void set_thread_count(int n);

// Runs body(i) for i in [0, n). Iterations must write disjoint memory; every
// caller keeps reductions inside one iteration so results do not depend on
// the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cdcnn
