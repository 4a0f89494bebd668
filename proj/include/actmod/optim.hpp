#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "actmod/tape.hpp"

namespace actmod {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam update from p.grad, then clears p.grad. A gradient that
// is zero everywhere only advances the step counter. Non-finite gradients
// raise NumericError naming the parameter and leave p untouched.
void adam_step(Parameter& p, const AdamConfig& config);

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for |analytic - numeric| / max(|analytic|, |numeric|).
  double floor = 1e-6;
};

struct GradCheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool flagged = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // descending by relative error
  double tolerance = 0.0;

  double max_relative_error() const;
  bool passed() const;
};

// Central differences of `loss` against the analytic gradients left in each
// Parameter::grad by `analytic` (grads are zeroed before it runs).
GradCheckReport fd_gradient_check(const std::function<double()>& loss,
                                  const std::function<void()>& analytic,
                                  std::span<Parameter* const> params,
                                  const GradCheckOptions& options = {});

using LossBuilder = std::function<NodeId(Tape&)>;

GradCheckReport fd_gradient_check(const LossBuilder& build,
                                  std::span<Parameter* const> params,
                                  const GradCheckOptions& options = {});

}  // namespace actmod
