#pragma once

#include <string_view>

namespace vihoi::data {

// Files from core/data compiled into the library.
std::string_view skeleton_json();
std::string_view vocabulary();

}  // namespace vihoi::data
