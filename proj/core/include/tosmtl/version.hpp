#pragma once

namespace tosmtl {

inline constexpr const char* kVersion = "tosmtl 0.1.0";

}  // namespace tosmtl
