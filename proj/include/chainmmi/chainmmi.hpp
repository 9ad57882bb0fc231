// chainmmi/chainmmi.hpp

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

#ifndef CHAINMMI_CHAINMMI_HPP_
#define CHAINMMI_CHAINMMI_HPP_

#include "chainmmi/array_io.hpp"
#include "chainmmi/batching.hpp"
#include "chainmmi/common.hpp"
#include "chainmmi/forward_backward.hpp"
#include "chainmmi/fst_io.hpp"
#include "chainmmi/graph.hpp"
#include "chainmmi/loss.hpp"
#include "chainmmi/oracle.hpp"
#include "chainmmi/parallel.hpp"
#include "chainmmi/toy_builder.hpp"

#endif  // CHAINMMI_CHAINMMI_HPP_
