#pragma once

#include <string>
#include <string_view>

namespace fakescope {

std::string base64_encode(std::string_view bytes);
// Throws Error on malformed input.
std::string base64_decode(std::string_view text);

}  // namespace fakescope
