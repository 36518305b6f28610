#include <cmath>
#include <sstream>

#include "blurrast/optim.hpp"

namespace blurrast {

void AdamState::validate() const {
  if (!(alpha > 0.0)) throw InputError("Adam learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InputError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw InputError("Adam epsilon must be positive");
}

void adam_step(AdamState& s, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw InputError("adam_step: parameter and gradient sizes differ");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      std::ostringstream msg;
      msg << "non-finite gradient " << grads[i] << " at parameter " << i << " (step " << s.step + 1 << ")";
      throw NumericalError(msg.str());
    }
  }
  if (s.m.empty()) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  if (s.m.size() != params.size()) throw InputError("adam_step: moment buffers do not match the parameters");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    params[i] -= s.alpha * mhat / (std::sqrt(vhat) + s.eps);
  }
}

}  // namespace blurrast
