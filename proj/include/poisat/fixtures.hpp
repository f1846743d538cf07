#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace poisat::fixtures {

const std::vector<std::string>& names();
// Scene text of a shipped example; throws Error for unknown names.
const std::string& text(std::string_view name);

}  // namespace poisat::fixtures
