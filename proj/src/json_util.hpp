// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "maft/encoding.hpp"
#include "maft/error.hpp"

namespace maft::detail {

using nlohmann::json;

json rational_json(const Rational& r);
Rational rational_from(const json& j);

json plan_json(const LayerPlan& plan);
LayerPlan plan_from(const json& j);

/// Runs `fn`, turning nlohmann exceptions into Error(InvalidArgument).
template <class Fn>
auto guarded_parse(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string(what) + ": " + e.what());
  }
}

}  // namespace maft::detail
