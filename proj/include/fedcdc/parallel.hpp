//------------------------------------------------------------------------------
//
//   Copyright 2026 The fedcdc-market Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <cstddef>
#include <functional>

namespace fedcdc {

/// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency).
/// Tasks must write only to their own output slot; the first exception thrown
/// by any task is rethrown on the calling thread after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, std::function<void(std::size_t)> const &fn);

}  // namespace fedcdc
