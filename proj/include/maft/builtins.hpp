// SPDX-License-Identifier: Apache-2.0
//
// Bundled example networks: the 2x2 layouts, small test networks and the
// 7x7 digit classifier.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "maft/network.hpp"

namespace maft {

struct BuiltinExample {
  std::string name;
  std::string description;
  NetworkSpec spec;
  std::vector<double> input;  // a representative input vector
};

std::vector<std::string> builtin_names();
/// Throws Error(InvalidArgument) for unknown names. `seed` drives the random
/// initial weights of the trainable examples.
BuiltinExample builtin_example(std::string_view name, std::uint64_t seed = 0);

}  // namespace maft
