// chainmmi/common.hpp

// Copyright 2026  The chainmmi Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CHAINMMI_COMMON_HPP_
#define CHAINMMI_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace chainmmi {

using StateId = std::uint32_t;
using PdfId = std::uint32_t;

/// Thrown for every contract violation in the library (bad input, shape
/// mismatch, malformed file).  Numerical failure of a single utterance is
/// not an error; it is reported per item instead.
class ChainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename... Args>
[[noreturn]] inline void Fail(Args &&...args) {
  std::ostringstream os;
  (os << ... << std::forward<Args>(args));
  throw ChainError(os.str());
}

}  // namespace detail

}  // namespace chainmmi

#define CHAINMMI_CHECK(cond, ...)                        \
  do {                                                   \
    if (!(cond)) ::chainmmi::detail::Fail(__VA_ARGS__);  \
  } while (0)

#endif  // CHAINMMI_COMMON_HPP_
