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

#include "fedcdc/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fedcdc {

void parallel_for(std::size_t n, std::size_t threads, std::function<void(std::size_t)> const &fn)
{
  if (threads == 0)
  {
    threads = std::max(1U, std::thread::hardware_concurrency());
  }
  threads = std::min(threads, n);
  if (threads <= 1)
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      fn(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr       failure;
  std::mutex               failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
    {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++)
        {
          try
          {
            fn(i);
          }
          catch (...)
          {
            std::lock_guard lock(failure_mutex);
            if (!failure)
            {
              failure = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }
}

}  // namespace fedcdc
