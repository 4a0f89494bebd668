#include "actmod/optim.hpp"

#include <algorithm>
#include <cmath>

#include "actmod/errors.hpp"

namespace actmod {

void adam_step(Parameter& p, const AdamConfig& config) {
  if (!(config.lr > 0.0))
    throw ContractError("adam_step: learning rate must be positive");
  if (!p.grad.all_finite())
    throw NumericError("non-finite gradient in parameter '" + p.name + "'");
  ++p.step;
  const auto g = p.grad.values();
  if (std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; }))
    return;
  const double t = static_cast<double>(p.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  double* m = p.adam_m.data();
  double* v = p.adam_v.data();
  double* w = p.value.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    w[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
  p.zero_grad();
}

double GradCheckReport::max_relative_error() const {
  return entries.empty() ? 0.0 : entries.front().max_relative_error;
}

bool GradCheckReport::passed() const {
  return std::none_of(entries.begin(), entries.end(),
                      [](const GradCheckEntry& e) { return e.flagged; });
}

GradCheckReport fd_gradient_check(const std::function<double()>& loss,
                                  const std::function<void()>& analytic,
                                  std::span<Parameter* const> params,
                                  const GradCheckOptions& options) {
  for (Parameter* p : params) p->zero_grad();
  analytic();
  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (Parameter* p : params) {
    GradCheckEntry e;
    e.name = p->name;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + options.epsilon;
      const double up = loss();
      w = saved - options.epsilon;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double exact = p->grad.data()[i];
      const double abs_err = std::abs(exact - numeric);
      const double denom =
          std::max({std::abs(exact), std::abs(numeric), options.floor});
      const double rel = abs_err / denom;
      if (rel > e.max_relative_error) {
        e.max_relative_error = rel;
        e.worst_index = i;
      }
      e.max_absolute_error = std::max(e.max_absolute_error, abs_err);
      ++e.checked;
    }
    e.flagged = e.max_relative_error >= options.tolerance;
    report.entries.push_back(std::move(e));
  }
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const GradCheckEntry& a, const GradCheckEntry& b) {
                     return a.max_relative_error > b.max_relative_error;
                   });
  return report;
}

GradCheckReport fd_gradient_check(const LossBuilder& build,
                                  std::span<Parameter* const> params,
                                  const GradCheckOptions& options) {
  auto loss = [&] {
    Tape tape;
    return tape.scalar(build(tape));
  };
  auto analytic = [&] {
    Tape tape;
    tape.backward(build(tape));
  };
  return fd_gradient_check(loss, analytic, params, options);
}

}  // namespace actmod
