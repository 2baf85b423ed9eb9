#include "cdcnn/synthetic.hpp"

#include <array>
#include <cmath>

#include "cdcnn/error.hpp"
#include "cdcnn/rng.hpp"

namespace cdcnn {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr std::size_t kPressure = 18;
constexpr float kPressureScale = 80.0f;

enum Activity { sitting = 0, standing = 1, tandem = 2, walking = 3 };

struct SubjectProfile {
  float gain;
  std::array<float, kPressure> sensitivity;
  float cadence_hz;
  float tilt_x, tilt_y;
  std::array<float, 3> gyro_bias;
  float sway_hz;
};

SubjectProfile draw_subject(Rng& rng) {
  SubjectProfile p{};
  p.gain = rng.uniform(0.8f, 1.25f);
  for (auto& s : p.sensitivity) s = rng.uniform(0.85f, 1.15f);
  p.cadence_hz = rng.uniform(1.5f, 2.5f);
  p.tilt_x = rng.uniform(-0.08f, 0.08f);
  p.tilt_y = rng.uniform(-0.08f, 0.08f);
  for (auto& b : p.gyro_bias) b = rng.uniform(-2.0f, 2.0f);
  p.sway_hz = rng.uniform(0.25f, 0.6f);
  return p;
}

// Position of pressure sensor k along the foot, heel (0) to toe (1).
float foot_position(std::size_t k) { return static_cast<float>(k) / static_cast<float>(kPressure - 1); }

void fill_window(Activity activity, const SubjectProfile& subj, const SyntheticOptions& opt, Rng& rng,
                 std::span<float> out) {
  const std::size_t channels = kSensorChannels;
  const double phase0 = rng.uniform_double();
  const float amp_jitter = rng.uniform(0.9f, 1.1f);
  const float load = subj.gain * kPressureScale * amp_jitter;

  for (std::size_t t = 0; t < opt.time_steps; ++t) {
    const double sec = static_cast<double>(t) / opt.sample_rate_hz;
    float* row = out.data() + t * channels;
    float* accel = row + kPressure;
    float* gyro = row + kPressure + 3;

    switch (activity) {
      case walking: {
        const double cyc = std::fmod(subj.cadence_hz * sec + phase0, 1.0);
        const double phi = kTwoPi * (subj.cadence_hz * sec + phase0);
        for (std::size_t k = 0; k < kPressure; ++k) {
          // Each sensor is loaded for 30% of the gait cycle, heel first.
          const double start = 0.05 + 0.3 * foot_position(k);
          const double rel = cyc - start;
          const double bump = (rel >= 0.0 && rel < 0.3) ? std::sin(3.14159265358979 * rel / 0.3) : 0.0;
          row[k] = static_cast<float>(load * subj.sensitivity[k] * 1.1 * bump);
        }
        accel[0] = subj.tilt_x + static_cast<float>(0.35 * std::sin(phi));
        accel[1] = subj.tilt_y + static_cast<float>(0.15 * std::sin(2.0 * phi));
        accel[2] = 1.0f + static_cast<float>(0.3 * std::sin(2.0 * phi + 0.5));
        gyro[0] = static_cast<float>(40.0 * std::sin(phi + 0.3));
        gyro[1] = static_cast<float>(120.0 * std::sin(phi));
        gyro[2] = static_cast<float>(25.0 * std::sin(2.0 * phi));
        break;
      }
      case standing: {
        const double sway = std::sin(kTwoPi * (0.5 * subj.sway_hz * sec + phase0));
        for (std::size_t k = 0; k < kPressure; ++k) {
          row[k] = static_cast<float>(load * subj.sensitivity[k] * 0.5 * (1.0 + 0.04 * sway));
        }
        accel[0] = subj.tilt_x;
        accel[1] = subj.tilt_y;
        accel[2] = 1.0f;
        for (int a = 0; a < 3; ++a) gyro[a] = 0.0f;
        break;
      }
      case sitting: {
        for (std::size_t k = 0; k < kPressure; ++k) {
          // Residual load mostly under the heel.
          row[k] = static_cast<float>(load * subj.sensitivity[k] * (0.08 - 0.05 * foot_position(k)));
        }
        accel[0] = subj.tilt_x + 0.12f;
        accel[1] = subj.tilt_y;
        accel[2] = 0.99f;
        for (int a = 0; a < 3; ++a) gyro[a] = 0.0f;
        break;
      }
      case tandem: {
        const double phi = kTwoPi * (subj.sway_hz * sec + phase0);
        const double sway = std::sin(phi);
        for (std::size_t k = 0; k < kPressure; ++k) {
          // Narrow base of support: only the two midline sensors of each row of six.
          const bool midline = (k % 6 == 2) || (k % 6 == 3);
          const double base = midline ? 0.85 : 0.08;
          row[k] = static_cast<float>(load * subj.sensitivity[k] * base * (1.0 + 0.15 * sway));
        }
        accel[0] = subj.tilt_x + static_cast<float>(0.06 * sway);
        accel[1] = subj.tilt_y + static_cast<float>(0.04 * std::cos(phi));
        accel[2] = 1.0f;
        gyro[0] = static_cast<float>(14.0 * std::cos(phi));
        gyro[1] = static_cast<float>(6.0 * std::sin(2.0 * phi));
        gyro[2] = static_cast<float>(9.0 * sway);
        break;
      }
    }

    const float gyro_noise = activity == tandem ? 4.0f : 1.0f;
    for (std::size_t k = 0; k < kPressure; ++k) row[k] += 3.0f * rng.normal();
    for (int a = 0; a < 3; ++a) accel[a] += 0.02f * rng.normal();
    for (int a = 0; a < 3; ++a) gyro[a] += subj.gyro_bias[static_cast<std::size_t>(a)] + gyro_noise * rng.normal();
  }
}

}  // namespace

Dataset generate_synthetic(const SyntheticOptions& options) {
  if (options.num_subjects == 0 || options.windows_per_subject_per_class == 0) {
    throw UsageError("synthetic: subject and window counts must be positive");
  }
  if (options.time_steps == 0 || !(options.sample_rate_hz > 0.0)) {
    throw UsageError("synthetic: time_steps and sample rate must be positive");
  }
  DatasetMeta meta;
  meta.time_steps = options.time_steps;
  meta.units = {{"pressure", "arbitrary"},
                {"accel", "g"},
                {"gyro", "deg/s"},
                {"sample_rate_hz", options.sample_rate_hz},
                {"source", "synthetic"}};
  Dataset ds(meta);

  std::vector<float> window(meta.time_steps * meta.channels);
  std::int64_t sample_id = 0;
  for (std::size_t s = 0; s < options.num_subjects; ++s) {
    const int subject = static_cast<int>(s) + 1;
    Rng subject_rng(Rng::derive(options.seed, {0, static_cast<std::uint64_t>(subject)}));
    const SubjectProfile profile = draw_subject(subject_rng);
    for (int cls = 0; cls < 4; ++cls) {
      for (std::size_t w = 0; w < options.windows_per_subject_per_class; ++w) {
        Rng rng(Rng::derive(options.seed, {1, static_cast<std::uint64_t>(subject),
                                           static_cast<std::uint64_t>(cls), w}));
        fill_window(static_cast<Activity>(cls), profile, options, rng, window);
        ds.add({sample_id++, subject, cls}, window);
      }
    }
  }
  return ds;
}

}  // namespace cdcnn
