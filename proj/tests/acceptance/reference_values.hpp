//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//
// Regression values frozen from the first verified optimize run on the
// shipped desk fixture (static prices, constant 110 degC baseline).
//

#pragma once

namespace dhn::ref {

inline constexpr double kDeskBaselineMwh = 82.38190290466952;
inline constexpr double kDeskSavings = 0.041449301064320154;
// the optimizer stops on iteration limits, so allow for libm differences
inline constexpr double kDeskSavingsTol = 1e-4;

}  // namespace dhn::ref
