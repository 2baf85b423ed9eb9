#pragma once

#include <cstddef>
#include <cstdint>

#include "cdcnn/dataset.hpp"

namespace cdcnn {

struct SyntheticOptions {
  std::size_t num_subjects = 8;
  std::size_t windows_per_subject_per_class = 100;
  std::uint64_t seed = 0;
  std::size_t time_steps = kWindowSteps;
  double sample_rate_hz = 50.0;
};

// Class-conditioned insole windows with per-subject gain, sensor sensitivity,
// cadence, tilt and gyro bias, plus additive Gaussian noise:
//   Walking  - heel-to-toe pressure wave at 1.5-2.5 Hz, oscillating accel/gyro
//   Standing - high static pressure, accel near (0, 0, 1) g, quiet gyro
//   Sitting  - near-zero pressure, quiet accel/gyro
//   Tandem   - load on a narrow midline sensor subset, elevated gyro sway
// Subjects are numbered 1..num_subjects; labels use default_label_names().
// Each window draws from its own derived stream, so output depends only on
// the options.
Dataset generate_synthetic(const SyntheticOptions& options);

}  // namespace cdcnn
