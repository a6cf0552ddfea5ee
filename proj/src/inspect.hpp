#pragma once

#include <string>
#include <string_view>

namespace svq {

// Header fields and summary statistics of any artifact this library writes,
// recognized by its magic bytes or text header.
std::string describe_artifact(std::string_view bytes);

}  // namespace svq
