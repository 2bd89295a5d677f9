#pragma once

// Shared synthetic problems. Each is built once per test binary.

#include "covkit/minimize.hpp"
#include "covkit/models.hpp"

namespace fixture {

struct FittedPo {
  covkit::PoModel model;
  covkit::Vector theta_hat;
};

inline const FittedPo& po_fit() {
  static const FittedPo fit = [] {
    covkit::PoModel model(covkit::synthesize_po(covkit::po_default_truth(), 768, 7));
    auto r = covkit::fit_mle(model, model.default_start());
    return FittedPo{std::move(model), r.theta};
  }();
  return fit;
}

struct FittedBasketball {
  covkit::BasketballModel model;
  covkit::Vector theta_hat;
};

inline const FittedBasketball& basketball_fit() {
  static const FittedBasketball fit = [] {
    const auto truth = covkit::basketball_default_truth(12, 5);
    covkit::BasketballModel model(covkit::synthesize_basketball(truth, 12, 300, 5));
    auto r = covkit::fit_mle(model, model.default_start());
    return FittedBasketball{std::move(model), r.theta};
  }();
  return fit;
}

}  // namespace fixture
