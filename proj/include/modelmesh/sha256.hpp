#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace modelmesh {

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data);

std::string hex_encode(std::span<const uint8_t> data);

}  // namespace modelmesh
