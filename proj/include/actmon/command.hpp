#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace actmon {

// One actuator operation, e.g. fwd, grip_open, st_sp(120), ON.
struct CommandAtom {
  std::string name;
  std::optional<std::int64_t> arg;

  bool operator==(const CommandAtom&) const = default;

  std::string to_string() const {
    if (arg) return name + "(" + std::to_string(*arg) + ")";
    return name;
  }
};

// A command as issued by one control decision: a sequence of atoms applied
// atomically in order (e.g. st_sp(120) and rht).
struct Command {
  std::vector<CommandAtom> atoms;

  bool operator==(const Command&) const = default;

  static Command single(std::string name, std::optional<std::int64_t> arg = std::nullopt) {
    return Command{{CommandAtom{std::move(name), arg}}};
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (i) out += " and ";
      out += atoms[i].to_string();
    }
    return out;
  }
};

using Payload = std::vector<std::uint8_t>;

inline std::string payload_hex(const Payload& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

inline std::optional<Payload> payload_from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  Payload out;
  out.reserve(hex.size() / 2);
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

}  // namespace actmon
