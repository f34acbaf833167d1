#pragma once

#include <cstdint>

namespace recgpt {

using ItemId = std::int32_t;
using UserId = std::int32_t;

// Tag carried by every sequence position; the value is the row of the
// segment embedding table.
enum class Segment : std::int32_t {
  kReal = 0,
  kPrompt = 1,
};

}  // namespace recgpt
