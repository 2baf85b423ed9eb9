#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdcnn/tensor.hpp"

namespace cdcnn {

// A learnable tensor together with the name used in errors and checkpoints.
struct ParamRef {
  std::string name;
  Tensor* value;
};

struct AdamOptions {
  float lr = 0.01f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

// Moment estimates for one parameter list. The moments are allocated on the
// first step, so a default-constructed state can be handed to any model.
class AdamState {
public:
  explicit AdamState(AdamOptions options = {}) : options_(options) {}

  const AdamOptions& options() const noexcept { return options_; }
  std::uint64_t step_count() const noexcept { return t_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

private:
  friend void adam_step(std::span<const ParamRef>, std::span<const Tensor>, AdamState&);

  AdamOptions options_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

// One bias-corrected Adam update of every parameter in place.
// Throws ShapeError on mismatched lists or shapes, NumericError (naming the
// parameter) on a non-finite gradient; parameters are untouched on error.
void adam_step(std::span<const ParamRef> params, std::span<const Tensor> grads, AdamState& state);

}  // namespace cdcnn
