/* Copyright 2026 The radseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef RADSEG_PARALLEL_HPP_
#define RADSEG_PARALLEL_HPP_

#include <cstddef>
#include <functional>
#include <optional>

namespace radseg {

// Explicit request if given, else RADSEG_THREADS, else hardware concurrency.
std::size_t resolve_workers(std::optional<std::size_t> requested = std::nullopt);

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index must
// write only its own outputs. The exception of the lowest failing index is
// rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace radseg

#endif  // RADSEG_PARALLEL_HPP_
