#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace ceesim {

/// RGB raster with samples normalized to [0,1], interleaved row-major
/// (index = (y * width + x) * 3 + c).
class Frame {
public:
    static constexpr int kChannels = 3;

    Frame() = default;
    Frame(int width, int height, double fill = 0.0);
    Frame(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }

    std::span<const double> samples() const { return data_; }
    std::span<double> samples() { return data_; }

    bool same_shape(const Frame& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    /// Clamps every sample into [0,1].
    void clamp();

    bool operator==(const Frame& other) const = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

class Gop {
public:
    explicit Gop(std::vector<Frame> frames);

    std::size_t size() const { return frames_.size(); }
    int width() const { return frames_.front().width(); }
    int height() const { return frames_.front().height(); }
    const Frame& operator[](std::size_t i) const { return frames_[i]; }
    const std::vector<Frame>& frames() const { return frames_; }

private:
    std::vector<Frame> frames_;
};

class VideoSequence {
public:
    VideoSequence(std::vector<Frame> frames, double fps);

    std::size_t size() const { return frames_.size(); }
    bool empty() const { return frames_.empty(); }
    int width() const { return frames_.empty() ? 0 : frames_.front().width(); }
    int height() const { return frames_.empty() ? 0 : frames_.front().height(); }
    double fps() const { return fps_; }
    double duration_seconds() const { return static_cast<double>(frames_.size()) / fps_; }
    const Frame& operator[](std::size_t i) const { return frames_[i]; }
    const std::vector<Frame>& frames() const { return frames_; }

private:
    std::vector<Frame> frames_;
    double fps_;
};

/// Splits a sequence into GOPs of `n` frames; the last GOP may be shorter.
std::vector<Gop> segment_gops(const VideoSequence& video, std::size_t n);

/// Flattens GOPs back into one sequence.
VideoSequence concat_gops(const std::vector<Gop>& gops, double fps);

/// Box-filter downsampling. Output is ceil(dim / factor); partial blocks at
/// the right and bottom edges replicate the last row/column.
Frame downsample(const Frame& frame, int factor);

/// 8-bit quantization used by the on-disk format: round(v * 255) / 255.
double quantize8(double v);
Frame quantize8(const Frame& frame);

/// Raw container: `<stem>.rgb` holds planar RGB8 frames (all R rows, then G,
/// then B, frame after frame); `<stem>.json` holds
/// {"width", "height", "fps", "frames", "channels": 3, "layout": "planar_rgb8"}.
/// `path` may name either file or the bare stem.
VideoSequence load_raw(const std::filesystem::path& path);
void save_raw(const VideoSequence& video, const std::filesystem::path& path);

}  // namespace ceesim
