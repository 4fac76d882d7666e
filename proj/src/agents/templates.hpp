#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace alphalogics::agents::detail {

/// (agent name, template JSON text) in pipeline order.
const std::vector<std::pair<std::string_view, std::string_view>>& template_texts();

} // namespace alphalogics::agents::detail
