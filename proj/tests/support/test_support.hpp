#pragma once

#include <doctest.h>

#include <functional>
#include <optional>

#include "optsurr/errors.hpp"
#include "oracles.hpp"

namespace testing {

inline std::optional<optsurr::ErrorCode> error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const optsurr::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing

#define CHECK_ERROR(code, expr) CHECK(::testing::error_of([&] { (void)(expr); }) == (code))
