#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "actmon/codec.hpp"
#include "actmon/core.hpp"

namespace actmon {

// Plant side of the loop. apply() is the register interface: it receives
// whatever bytes got past the monitor, exactly like the real hardware, so
// spoofed frames act on the plant when nothing blocks them.
class Plant {
 public:
  virtual ~Plant() = default;

  virtual std::string model() const = 0;
  virtual void apply(const std::string& actuator_id, const Payload& payload, Us now) = 0;
  virtual void step(Us dt) = 0;
  virtual SystemState state(Us now) const = 0;
  virtual std::vector<std::string> signal_names() const = 0;
  virtual std::vector<std::string> readout_names() const = 0;
  virtual std::vector<double> readouts() const = 0;
  // Column plotted against time in the two-column plot file.
  virtual std::string primary_readout() const = 0;
};

using PlantPtr = std::unique_ptr<Plant>;

// 1-D line follower. The line-offset signal s_LF drifts away from the line;
// driving forward pulls it back toward zero, turn commands push it hard in
// one direction. Distance accumulates only while both motors run (a turn
// switches one motor off). All constants are artifact defaults, tunable
// from the scenario; none are platform-measured values.
class RoverPlant final : public Plant {
 public:
  struct Params {
    double drift_per_ms = 40.0;    // s_LF units gained per ms
    double center_pull = 0.04;     // fractional pull toward 0 per ms while fwd
    double turn_rate = 60.0;       // s_LF units per ms while turning
    double speed_scale = 0.001;    // distance units per (speed unit * ms)
    double initial_speed = 100.0;  // delta_2: rolling when the trace starts
    double initial_line_offset = 0.0;
  };

  RoverPlant() : RoverPlant(Params()) {}
  explicit RoverPlant(Params params) : params_(params) {
    speed_ = params_.initial_speed;
    line_offset_ = params_.initial_line_offset;
  }

  std::string model() const override { return "rover"; }

  void apply(const std::string&, const Payload& payload, Us now) override {
    (void)now;
    for (std::size_t off = 0; off + 5 <= payload.size(); off += 5) {
      switch (payload[off]) {
        case RoverCodec::kFwd: mode_ = Mode::Forward; break;
        case RoverCodec::kLft: mode_ = Mode::LeftTurn; break;
        case RoverCodec::kRht: mode_ = Mode::RightTurn; break;
        case RoverCodec::kStSp: speed_ = static_cast<double>(payload[off + 1]); break;
        default: break;  // unknown opcode moves nothing
      }
    }
  }

  void step(Us dt) override {
    double ms = static_cast<double>(dt) / 1000.0;
    line_offset_ += params_.drift_per_ms * ms;
    switch (mode_) {
      case Mode::Forward:
        line_offset_ -= line_offset_ * params_.center_pull * ms;
        distance_ += speed_ * params_.speed_scale * ms;
        break;
      case Mode::LeftTurn:
        line_offset_ -= params_.turn_rate * ms;
        break;
      case Mode::RightTurn:
        line_offset_ += params_.turn_rate * ms;
        break;
    }
  }

  SystemState state(Us now) const override {
    SystemState s;
    s.time = now;
    s.signals["s_LF"] = line_offset_;
    return s;
  }

  std::vector<std::string> signal_names() const override { return {"s_LF"}; }
  std::vector<std::string> readout_names() const override {
    return {"distance", "speed", "both_motors_on"};
  }
  std::vector<double> readouts() const override {
    return {distance_, speed_, mode_ == Mode::Forward ? 1.0 : 0.0};
  }
  std::string primary_readout() const override { return "distance"; }

  double distance() const { return distance_; }
  double applied_speed() const { return speed_; }

 private:
  enum class Mode { Forward, LeftTurn, RightTurn };
  Params params_;
  Mode mode_ = Mode::Forward;
  double speed_ = 0;
  double line_offset_ = 0;
  double distance_ = 0;
};

// Servo grip. State is the last applied pulse; s_grip reads 1 while the
// grip sits at the open pulse. Arbitrary pulses move the servo (nothing at
// the hardware validates them) which is exactly what the monitor must stop.
class ArmPlant final : public Plant {
 public:
  struct Params {
    int initial_pulse = ArmPulseCodec::kClosePulse;
  };

  ArmPlant() : ArmPlant(Params()) {}
  explicit ArmPlant(Params params) : last_pulse_(params.initial_pulse) {}

  std::string model() const override { return "arm"; }

  void apply(const std::string&, const Payload& payload, Us now) override {
    for (std::size_t off = 0; off + 4 <= payload.size(); off += 4) {
      Payload frame(payload.begin() + off, payload.begin() + off + 4);
      if (auto pulse = ArmPulseCodec::frame_pulse(frame)) {
        last_pulse_ = *pulse;
        pulse_history_.push_back({now, *pulse});
      }
    }
  }

  void step(Us) override {}

  SystemState state(Us now) const override {
    SystemState s;
    s.time = now;
    s.signals["s_grip"] = last_pulse_ == ArmPulseCodec::kOpenPulse ? 1.0 : 0.0;
    return s;
  }

  std::vector<std::string> signal_names() const override { return {"s_grip"}; }
  std::vector<std::string> readout_names() const override { return {"pulse"}; }
  std::vector<double> readouts() const override { return {static_cast<double>(last_pulse_)}; }
  std::string primary_readout() const override { return "pulse"; }

  struct PulseEvent {
    Us time;
    int pulse;
  };
  const std::vector<PulseEvent>& pulse_history() const { return pulse_history_; }

 private:
  int last_pulse_;
  std::vector<PulseEvent> pulse_history_;
};

// Warehouse water tank with a buzzer. Level follows a triangular
// fill/drain cycle; temperature is constant by default.
class WaterTankPlant final : public Plant {
 public:
  struct Params {
    double fill_rate = 0.02;   // level units per ms while filling
    double drain_rate = 0.03;  // while draining
    double low_mark = 20.0;
    double high_mark = 95.0;
    double initial_level = 40.0;
    double temperature = 25.0;
  };

  WaterTankPlant() : WaterTankPlant(Params()) {}
  explicit WaterTankPlant(Params params) : params_(params), level_(params.initial_level) {}

  std::string model() const override { return "water_tank"; }

  void apply(const std::string&, const Payload& payload, Us) override {
    if (!payload.empty()) buzzer_on_ = payload.back() != 0x00;
  }

  void step(Us dt) override {
    double ms = static_cast<double>(dt) / 1000.0;
    if (filling_) {
      level_ += params_.fill_rate * ms;
      if (level_ >= params_.high_mark) filling_ = false;
    } else {
      level_ -= params_.drain_rate * ms;
      if (level_ <= params_.low_mark) filling_ = true;
    }
  }

  SystemState state(Us now) const override {
    SystemState s;
    s.time = now;
    s.signals["s_WL"] = level_;
    s.signals["s_WT"] = params_.temperature;
    return s;
  }

  std::vector<std::string> signal_names() const override { return {"s_WL", "s_WT"}; }
  std::vector<std::string> readout_names() const override { return {"level", "buzzer"}; }
  std::vector<double> readouts() const override { return {level_, buzzer_on_ ? 1.0 : 0.0}; }
  std::string primary_readout() const override { return "level"; }

  bool buzzer_on() const { return buzzer_on_; }

 private:
  Params params_;
  double level_;
  bool filling_ = true;
  bool buzzer_on_ = false;
};

// Plant with no physics; lets schedulability scenarios run without
// modelling any hardware.
class NullPlant final : public Plant {
 public:
  std::string model() const override { return "none"; }
  void apply(const std::string&, const Payload&, Us) override {}
  void step(Us) override {}
  SystemState state(Us now) const override {
    SystemState s;
    s.time = now;
    return s;
  }
  std::vector<std::string> signal_names() const override { return {}; }
  std::vector<std::string> readout_names() const override { return {}; }
  std::vector<double> readouts() const override { return {}; }
  std::string primary_readout() const override { return ""; }
};

}  // namespace actmon
