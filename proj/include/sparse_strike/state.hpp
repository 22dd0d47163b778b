#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace sparse_strike {

inline constexpr int kMaxPixel = 255;

struct StateShape {
  int height = 84;
  int width = 84;
  int channels = 4;

  StateShape() = default;
  StateShape(int h, int w, int c) : height(h), width(w), channels(c) {
    if (h <= 0 || w <= 0 || c <= 0)
      throw ShapeError("state shape must be strictly positive, got " + to_string());
  }

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return plane_size() * channels; }

  std::string to_string() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
  }

  friend bool operator==(const StateShape &, const StateShape &) = default;
};

// A single grayscale screen, row-major.
class Frame {
 public:
  Frame() = default;
  Frame(int height, int width) : height_(height), width_(width), pixels_(std::size_t(height) * width, 0) {
    if (height <= 0 || width <= 0) throw ShapeError("frame dimensions must be positive");
  }
  Frame(int height, int width, std::vector<std::uint8_t> pixels)
      : height_(height), width_(width), pixels_(std::move(pixels)) {
    if (height <= 0 || width <= 0) throw ShapeError("frame dimensions must be positive");
    if (pixels_.size() != std::size_t(height) * width)
      throw ShapeError("frame pixel count does not match " + std::to_string(height) + "x" + std::to_string(width));
  }

  // Checked construction from wider integers; rejects anything outside [0, 255].
  static Frame from_values(int height, int width, std::span<const int> values) {
    if (values.size() != std::size_t(height) * width)
      throw ShapeError("frame value count does not match " + std::to_string(height) + "x" + std::to_string(width));
    std::vector<std::uint8_t> px(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < 0 || values[i] > kMaxPixel)
        throw DomainError("pixel value " + std::to_string(values[i]) + " outside [0, 255]");
      px[i] = static_cast<std::uint8_t>(values[i]);
    }
    return Frame(height, width, std::move(px));
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::uint8_t at(int x, int y) const { return pixels_[std::size_t(x) * width_ + y]; }
  void set(int x, int y, std::uint8_t v) { pixels_[std::size_t(x) * width_ + y] = v; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }

  friend bool operator==(const Frame &, const Frame &) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Stacked observation fed to a policy. Storage is channel-major
// ([channel][row][col]); channel 0 is the oldest frame, channel C-1 the newest.
// Values are never mutated in place: every modification returns a new state.
class FrameState {
 public:
  FrameState() = default;
  explicit FrameState(StateShape shape) : shape_(shape), pixels_(shape.size(), 0) {}
  FrameState(StateShape shape, std::vector<std::uint8_t> pixels) : shape_(shape), pixels_(std::move(pixels)) {
    if (pixels_.size() != shape_.size())
      throw ShapeError("pixel buffer of size " + std::to_string(pixels_.size()) + " does not match shape " +
                       shape_.to_string());
  }

  static FrameState from_values(StateShape shape, std::span<const int> values) {
    if (values.size() != shape.size()) throw ShapeError("value count does not match shape " + shape.to_string());
    std::vector<std::uint8_t> px(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < 0 || values[i] > kMaxPixel)
        throw DomainError("pixel value " + std::to_string(values[i]) + " outside [0, 255]");
      px[i] = static_cast<std::uint8_t>(values[i]);
    }
    return FrameState(shape, std::move(px));
  }

  const StateShape &shape() const { return shape_; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }

  // x indexes rows (height), y indexes columns (width), c the stacked frame.
  std::uint8_t get_pixel(int x, int y, int c) const {
    check_axis(x, shape_.height, "x");
    check_axis(y, shape_.width, "y");
    check_axis(c, shape_.channels, "channel");
    return pixels_[offset(x, y, c)];
  }

  FrameState with_pixel(int x, int y, int c, int value) const {
    get_pixel(x, y, c);
    if (value < 0 || value > kMaxPixel) throw DomainError("pixel value " + std::to_string(value) + " outside [0, 255]");
    FrameState out = *this;
    out.pixels_[offset(x, y, c)] = static_cast<std::uint8_t>(value);
    return out;
  }

  Frame channel(int c) const {
    check_axis(c, shape_.channels, "channel");
    auto first = pixels_.begin() + std::ptrdiff_t(shape_.plane_size() * c);
    return Frame(shape_.height, shape_.width, std::vector<std::uint8_t>(first, first + std::ptrdiff_t(shape_.plane_size())));
  }

  std::size_t offset(int x, int y, int c) const {
    return (std::size_t(c) * shape_.height + x) * shape_.width + y;
  }

  friend bool operator==(const FrameState &, const FrameState &) = default;

 private:
  friend FrameState push_frame(const FrameState &, const Frame &);

  static void check_axis(int v, int limit, const char *axis) {
    if (v < 0 || v >= limit)
      throw BoundsError(std::string("index out of bounds on axis ") + axis + ": " + std::to_string(v) +
                        " not in [0, " + std::to_string(limit) + ")");
  }

  StateShape shape_{};
  std::vector<std::uint8_t> pixels_;
};

// Drops the oldest channel and appends `frame` as the newest.
inline FrameState push_frame(const FrameState &state, const Frame &frame) {
  const auto &shape = state.shape();
  if (frame.height() != shape.height || frame.width() != shape.width)
    throw ShapeError("frame " + std::to_string(frame.height()) + "x" + std::to_string(frame.width()) +
                     " does not match state plane " + std::to_string(shape.height) + "x" + std::to_string(shape.width));
  const std::size_t plane = shape.plane_size();
  std::vector<std::uint8_t> px(shape.size());
  std::copy(state.pixels_.begin() + std::ptrdiff_t(plane), state.pixels_.end(), px.begin());
  std::copy(frame.pixels().begin(), frame.pixels().end(), px.end() - std::ptrdiff_t(plane));
  return FrameState(shape, std::move(px));
}

inline FrameState push_frame(const FrameState &state, int height, int width, std::span<const int> values) {
  return push_frame(state, Frame::from_values(height, width, values));
}

}  // namespace sparse_strike
