#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "actmon/command.hpp"

namespace actmon {

struct UnknownCommandError : std::runtime_error {
  explicit UnknownCommandError(const std::string& what) : std::runtime_error(what) {}
};

struct ParameterRangeError : std::runtime_error {
  explicit ParameterRangeError(const std::string& what) : std::runtime_error(what) {}
};

// Maps symbolic commands to fixed-size register frames and back. decode
// returns nullopt for byte patterns that match no declared command; an
// unrecognizable frame arriving at the monitor is itself evidence of
// spoofing and is handled there, not here.
class Codec {
 public:
  virtual ~Codec() = default;

  virtual std::string name() const = 0;
  virtual std::size_t frame_size() const = 0;
  virtual bool knows(const std::string& command) const = 0;
  virtual Payload encode_atom(const CommandAtom& atom) const = 0;
  virtual std::optional<CommandAtom> decode_frame(const Payload& frame) const = 0;

  // Full vocabulary with parameter boundary values included; drives the
  // round-trip property tests.
  virtual std::vector<CommandAtom> vocabulary_samples() const = 0;
};

using CodecPtr = std::shared_ptr<const Codec>;

// --- operations -----------------------------------------------------------

inline Payload encode_command(const Codec& codec, const Command& command) {
  Payload out;
  for (const auto& atom : command.atoms) {
    Payload frame = codec.encode_atom(atom);
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

inline std::optional<Command> decode_command(const Codec& codec, const Payload& payload) {
  const std::size_t n = codec.frame_size();
  if (n == 0 || payload.empty() || payload.size() % n != 0) return std::nullopt;
  Command out;
  for (std::size_t off = 0; off < payload.size(); off += n) {
    Payload frame(payload.begin() + off, payload.begin() + off + n);
    auto atom = codec.decode_frame(frame);
    if (!atom) return std::nullopt;
    out.atoms.push_back(std::move(*atom));
  }
  return out;
}

// --- built-in codecs ------------------------------------------------------

// Servo grip codec. Each operation is a pulse value x sent as four 1-byte
// register writes: 0 & 0xFF, 0 >> 8, x & 0xFF, x >> 8.
class ArmPulseCodec final : public Codec {
 public:
  static constexpr int kOpenPulse = 577;
  static constexpr int kClosePulse = 420;

  std::string name() const override { return "arm_pulse"; }
  std::size_t frame_size() const override { return 4; }

  bool knows(const std::string& command) const override {
    return command == "grip_open" || command == "grip_close";
  }

  static Payload pulse_frame(int pulse) {
    return Payload{0x00, 0x00, static_cast<std::uint8_t>(pulse & 0xFF),
                   static_cast<std::uint8_t>((pulse >> 8) & 0xFF)};
  }

  static std::optional<int> frame_pulse(const Payload& frame) {
    if (frame.size() != 4 || frame[0] != 0x00 || frame[1] != 0x00) return std::nullopt;
    return frame[2] | (frame[3] << 8);
  }

  Payload encode_atom(const CommandAtom& atom) const override {
    if (atom.arg) throw ParameterRangeError("arm command takes no parameter: " + atom.to_string());
    if (atom.name == "grip_open") return pulse_frame(kOpenPulse);
    if (atom.name == "grip_close") return pulse_frame(kClosePulse);
    throw UnknownCommandError("unknown arm command: " + atom.name);
  }

  std::optional<CommandAtom> decode_frame(const Payload& frame) const override {
    auto pulse = frame_pulse(frame);
    if (!pulse) return std::nullopt;
    if (*pulse == kOpenPulse) return CommandAtom{"grip_open", std::nullopt};
    if (*pulse == kClosePulse) return CommandAtom{"grip_close", std::nullopt};
    return std::nullopt;
  }

  std::vector<CommandAtom> vocabulary_samples() const override {
    return {{"grip_open", std::nullopt}, {"grip_close", std::nullopt}};
  }
};

// Rover drive codec: fwd(), lft(), rht(), st_sp(delta). Each command is a
// 5-byte frame [opcode, b1, b2, b3, b4] with delta in b1 and unused bytes
// zero. The frame layout is this artifact's concretization; only the
// command set and the 5-byte width are fixed by the platform.
class RoverCodec final : public Codec {
 public:
  static constexpr std::uint8_t kFwd = 0x01;
  static constexpr std::uint8_t kLft = 0x02;
  static constexpr std::uint8_t kRht = 0x03;
  static constexpr std::uint8_t kStSp = 0x04;

  std::string name() const override { return "rover"; }
  std::size_t frame_size() const override { return 5; }

  bool knows(const std::string& command) const override {
    return command == "fwd" || command == "lft" || command == "rht" || command == "st_sp";
  }

  Payload encode_atom(const CommandAtom& atom) const override {
    if (atom.name == "st_sp") {
      if (!atom.arg) throw ParameterRangeError("st_sp requires a speed parameter");
      if (*atom.arg < 0 || *atom.arg > 255)
        throw ParameterRangeError("speed out of [0,255]: " + std::to_string(*atom.arg));
      return Payload{kStSp, static_cast<std::uint8_t>(*atom.arg), 0x00, 0x00, 0x00};
    }
    if (atom.arg) throw ParameterRangeError("command takes no parameter: " + atom.to_string());
    if (atom.name == "fwd") return Payload{kFwd, 0x00, 0x00, 0x00, 0x00};
    if (atom.name == "lft") return Payload{kLft, 0x00, 0x00, 0x00, 0x00};
    if (atom.name == "rht") return Payload{kRht, 0x00, 0x00, 0x00, 0x00};
    throw UnknownCommandError("unknown rover command: " + atom.name);
  }

  std::optional<CommandAtom> decode_frame(const Payload& frame) const override {
    if (frame.size() != 5 || frame[2] != 0 || frame[3] != 0 || frame[4] != 0)
      return std::nullopt;
    switch (frame[0]) {
      case kFwd:
        return frame[1] == 0 ? std::optional<CommandAtom>({"fwd", std::nullopt}) : std::nullopt;
      case kLft:
        return frame[1] == 0 ? std::optional<CommandAtom>({"lft", std::nullopt}) : std::nullopt;
      case kRht:
        return frame[1] == 0 ? std::optional<CommandAtom>({"rht", std::nullopt}) : std::nullopt;
      case kStSp:
        return CommandAtom{"st_sp", static_cast<std::int64_t>(frame[1])};
      default:
        return std::nullopt;
    }
  }

  std::vector<CommandAtom> vocabulary_samples() const override {
    std::vector<CommandAtom> out{{"fwd", std::nullopt}, {"lft", std::nullopt}, {"rht", std::nullopt}};
    for (std::int64_t delta : {0, 1, 100, 120, 254, 255}) out.push_back({"st_sp", delta});
    return out;
  }
};

// Single-byte ON/OFF codec (buzzer, display enable).
class OnOffCodec final : public Codec {
 public:
  std::string name() const override { return "on_off"; }
  std::size_t frame_size() const override { return 1; }

  bool knows(const std::string& command) const override {
    return command == "ON" || command == "OFF";
  }

  Payload encode_atom(const CommandAtom& atom) const override {
    if (atom.arg) throw ParameterRangeError("ON/OFF takes no parameter");
    if (atom.name == "ON") return Payload{0x01};
    if (atom.name == "OFF") return Payload{0x00};
    throw UnknownCommandError("unknown command: " + atom.name);
  }

  std::optional<CommandAtom> decode_frame(const Payload& frame) const override {
    if (frame.size() != 1) return std::nullopt;
    if (frame[0] == 0x01) return CommandAtom{"ON", std::nullopt};
    if (frame[0] == 0x00) return CommandAtom{"OFF", std::nullopt};
    return std::nullopt;
  }

  std::vector<CommandAtom> vocabulary_samples() const override {
    return {{"ON", std::nullopt}, {"OFF", std::nullopt}};
  }
};

inline CodecPtr make_codec(const std::string& name) {
  if (name == "arm_pulse") return std::make_shared<ArmPulseCodec>();
  if (name == "rover") return std::make_shared<RoverCodec>();
  if (name == "on_off") return std::make_shared<OnOffCodec>();
  throw UnknownCommandError("unknown codec: " + name);
}

}  // namespace actmon
