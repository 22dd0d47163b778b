#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "envs.hpp"
#include "errors.hpp"
#include "state.hpp"

namespace sparse_strike {

// Binary rollout log. All integers little-endian.
//
//   header (16 bytes): magic "SSTJ", u16 version, u16 height, u16 width,
//                      u16 channels, u32 reserved (0)
//   record:            u32 payload length, then payload =
//                      u32 t, u32 action, f64 reward, u8 done, height*width frame bytes
//
// `frame` is the screen observed at step t, `action` the action taken there,
// `reward` and `done` the result of that step.
inline constexpr std::array<char, 4> kTrajectoryMagic{'S', 'S', 'T', 'J'};
inline constexpr std::uint16_t kTrajectoryVersion = 1;

struct TrajectoryRecord {
  std::uint32_t t = 0;
  Frame frame;
  std::uint32_t action = 0;
  double reward = 0.0;
  bool done = false;

  friend bool operator==(const TrajectoryRecord &, const TrajectoryRecord &) = default;
};

struct Trajectory {
  StateShape shape{};
  std::vector<TrajectoryRecord> records;

  friend bool operator==(const Trajectory &, const Trajectory &) = default;
};

namespace detail {

template <typename T>
void put_le(std::ostream &out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((std::uint64_t(v) >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::istream &in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw ParseError("truncated trajectory file");
    v |= std::uint64_t(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace detail

inline void write_trajectory(std::ostream &out, const Trajectory &traj) {
  out.write(kTrajectoryMagic.data(), 4);
  detail::put_le<std::uint16_t>(out, kTrajectoryVersion);
  detail::put_le<std::uint16_t>(out, std::uint16_t(traj.shape.height));
  detail::put_le<std::uint16_t>(out, std::uint16_t(traj.shape.width));
  detail::put_le<std::uint16_t>(out, std::uint16_t(traj.shape.channels));
  detail::put_le<std::uint32_t>(out, 0);
  const std::uint32_t plane = std::uint32_t(traj.shape.plane_size());
  for (const auto &r : traj.records) {
    if (r.frame.height() != traj.shape.height || r.frame.width() != traj.shape.width)
      throw ShapeError("trajectory frame does not match header shape");
    detail::put_le<std::uint32_t>(out, 4 + 4 + 8 + 1 + plane);
    detail::put_le<std::uint32_t>(out, r.t);
    detail::put_le<std::uint32_t>(out, r.action);
    detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(r.reward));
    out.put(r.done ? 1 : 0);
    out.write(reinterpret_cast<const char *>(r.frame.pixels().data()), std::streamsize(plane));
  }
}

inline Trajectory read_trajectory(std::istream &in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kTrajectoryMagic) throw ParseError("not a trajectory file (bad magic)");
  const auto version = detail::get_le<std::uint16_t>(in);
  if (version != kTrajectoryVersion) throw ParseError("unsupported trajectory version " + std::to_string(version));
  const int h = detail::get_le<std::uint16_t>(in);
  const int w = detail::get_le<std::uint16_t>(in);
  const int c = detail::get_le<std::uint16_t>(in);
  detail::get_le<std::uint32_t>(in);
  Trajectory traj;
  try {
    traj.shape = StateShape(h, w, c);
  } catch (const ShapeError &e) {
    throw ParseError(std::string("bad trajectory header: ") + e.what());
  }
  const std::uint32_t plane = std::uint32_t(traj.shape.plane_size());
  while (in.peek() != std::char_traits<char>::eof()) {
    const auto len = detail::get_le<std::uint32_t>(in);
    if (len != 4 + 4 + 8 + 1 + plane) throw ParseError("trajectory record length mismatch");
    TrajectoryRecord r;
    r.t = detail::get_le<std::uint32_t>(in);
    r.action = detail::get_le<std::uint32_t>(in);
    r.reward = std::bit_cast<double>(detail::get_le<std::uint64_t>(in));
    r.done = detail::get_le<std::uint8_t>(in) != 0;
    std::vector<std::uint8_t> px(plane);
    if (!in.read(reinterpret_cast<char *>(px.data()), std::streamsize(plane))) throw ParseError("truncated trajectory frame");
    r.frame = Frame(h, w, std::move(px));
    traj.records.push_back(std::move(r));
  }
  return traj;
}

inline void save_trajectory(const std::string &path, const Trajectory &traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write trajectory file '" + path + "'");
  write_trajectory(out, traj);
}

inline Trajectory load_trajectory(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open trajectory file '" + path + "'");
  return read_trajectory(in);
}

// The stacked state the agent saw at every record: a zero stack with each
// observed screen pushed in turn.
inline std::vector<FrameState> replay_states(const Trajectory &traj) {
  std::vector<FrameState> out;
  out.reserve(traj.records.size());
  FrameState state(traj.shape);
  for (const auto &r : traj.records) {
    state = push_frame(state, r.frame);
    out.push_back(state);
  }
  return out;
}

using AgentFn = std::function<int(const Environment &, const FrameState &)>;

// Runs one unattacked episode and logs it.
inline Trajectory record_rollout(const EnvSpec &spec, const AgentFn &agent) {
  auto env = make_environment(spec);
  Trajectory traj;
  traj.shape = spec.shape;
  Frame obs = env->reset();
  FrameState state = push_frame(FrameState(spec.shape), obs);
  while (!env->done()) {
    const int action = agent(*env, state);
    auto step = env->step(action);
    traj.records.push_back(TrajectoryRecord{std::uint32_t(step.t - 1), obs, std::uint32_t(action), step.reward, step.done});
    obs = std::move(step.observation);
    state = push_frame(state, obs);
  }
  return traj;
}

inline int scripted_agent(const Environment &env, const FrameState &) { return env.expert_action(); }

}  // namespace sparse_strike
