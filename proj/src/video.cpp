#include "ceesim/video.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

namespace ceesim {

Frame::Frame(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * height * kChannels, fill) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("frame dimensions must be positive");
}

Frame::Frame(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("frame dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(width) * height * kChannels)
        throw std::invalid_argument("frame data length does not match width*height*3");
}

void Frame::clamp() {
    for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

Gop::Gop(std::vector<Frame> frames) : frames_(std::move(frames)) {
    if (frames_.empty()) throw std::invalid_argument("GOP needs at least one frame");
    for (const auto& f : frames_)
        if (!f.same_shape(frames_.front())) throw std::invalid_argument("GOP frames differ in size");
}

VideoSequence::VideoSequence(std::vector<Frame> frames, double fps)
    : frames_(std::move(frames)), fps_(fps) {
    if (!(fps > 0.0)) throw std::invalid_argument("fps must be positive");
    for (const auto& f : frames_)
        if (!f.same_shape(frames_.front())) throw std::invalid_argument("video frames differ in size");
}

std::vector<Gop> segment_gops(const VideoSequence& video, std::size_t n) {
    if (n == 0) throw std::invalid_argument("GOP size must be >= 1");
    if (video.empty()) throw std::invalid_argument("cannot segment an empty video");
    std::vector<Gop> gops;
    const auto& frames = video.frames();
    for (std::size_t start = 0; start < frames.size(); start += n) {
        const std::size_t stop = std::min(frames.size(), start + n);
        gops.emplace_back(std::vector<Frame>(frames.begin() + start, frames.begin() + stop));
    }
    return gops;
}

VideoSequence concat_gops(const std::vector<Gop>& gops, double fps) {
    std::vector<Frame> frames;
    for (const auto& g : gops) frames.insert(frames.end(), g.frames().begin(), g.frames().end());
    return VideoSequence(std::move(frames), fps);
}

Frame downsample(const Frame& frame, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
    if (factor == 1) return frame;
    const int ow = (frame.width() + factor - 1) / factor;
    const int oh = (frame.height() + factor - 1) / factor;
    Frame out(ow, oh);
    const double norm = 1.0 / (factor * factor);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            for (int c = 0; c < Frame::kChannels; ++c) {
                double acc = 0.0;
                for (int dy = 0; dy < factor; ++dy) {
                    const int y = std::min(oy * factor + dy, frame.height() - 1);
                    for (int dx = 0; dx < factor; ++dx) {
                        const int x = std::min(ox * factor + dx, frame.width() - 1);
                        acc += frame.at(x, y, c);
                    }
                }
                out.at(ox, oy, c) = acc * norm;
            }
        }
    }
    return out;
}

double quantize8(double v) {
    return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

Frame quantize8(const Frame& frame) {
    Frame out = frame;
    for (double& v : out.samples()) v = quantize8(v);
    return out;
}

namespace {

struct RawPaths {
    std::filesystem::path payload;
    std::filesystem::path header;
};

RawPaths raw_paths(const std::filesystem::path& path) {
    auto stem = path;
    if (stem.extension() == ".rgb" || stem.extension() == ".json") stem.replace_extension();
    auto payload = stem;
    payload += ".rgb";
    auto header = stem;
    header += ".json";
    return {payload, header};
}

}  // namespace

VideoSequence load_raw(const std::filesystem::path& path) {
    const auto paths = raw_paths(path);
    std::ifstream hs(paths.header);
    if (!hs) throw std::runtime_error("cannot open raw video header " + paths.header.string());
    nlohmann::json header;
    try {
        hs >> header;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed raw video header: " + std::string(e.what()));
    }
    const int width = header.at("width").get<int>();
    const int height = header.at("height").get<int>();
    const double fps = header.at("fps").get<double>();
    const auto count = header.at("frames").get<std::size_t>();
    if (header.value("channels", 3) != 3) throw std::runtime_error("only 3-channel raw video is supported");
    if (header.value("layout", std::string("planar_rgb8")) != "planar_rgb8")
        throw std::runtime_error("unsupported raw layout");
    if (width <= 0 || height <= 0) throw std::runtime_error("raw video header has non-positive size");

    const std::size_t plane = static_cast<std::size_t>(width) * height;
    const std::size_t frame_bytes = plane * 3;
    std::ifstream ps(paths.payload, std::ios::binary | std::ios::ate);
    if (!ps) throw std::runtime_error("cannot open raw video payload " + paths.payload.string());
    const auto actual = static_cast<std::size_t>(ps.tellg());
    if (actual != frame_bytes * count)
        throw std::runtime_error("raw payload size " + std::to_string(actual) + " does not match header (" +
                                 std::to_string(frame_bytes * count) + " bytes expected)");
    ps.seekg(0);

    std::vector<std::uint8_t> buf(frame_bytes);
    std::vector<Frame> frames;
    frames.reserve(count);
    for (std::size_t f = 0; f < count; ++f) {
        ps.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(frame_bytes));
        Frame frame(width, height);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x)
                    frame.at(x, y, c) = buf[c * plane + static_cast<std::size_t>(y) * width + x] / 255.0;
        frames.push_back(std::move(frame));
    }
    return VideoSequence(std::move(frames), fps);
}

void save_raw(const VideoSequence& video, const std::filesystem::path& path) {
    if (video.empty()) throw std::invalid_argument("cannot save an empty video");
    const auto paths = raw_paths(path);
    if (paths.payload.has_parent_path()) std::filesystem::create_directories(paths.payload.parent_path());
    const int width = video.width();
    const int height = video.height();
    const std::size_t plane = static_cast<std::size_t>(width) * height;

    std::ofstream ps(paths.payload, std::ios::binary | std::ios::trunc);
    if (!ps) throw std::runtime_error("cannot write " + paths.payload.string());
    std::vector<std::uint8_t> buf(plane * 3);
    for (const auto& frame : video.frames()) {
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x)
                    buf[c * plane + static_cast<std::size_t>(y) * width + x] =
                        static_cast<std::uint8_t>(std::lround(std::clamp(frame.at(x, y, c), 0.0, 1.0) * 255.0));
        ps.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }

    nlohmann::ordered_json header;
    header["width"] = width;
    header["height"] = height;
    header["fps"] = video.fps();
    header["frames"] = video.size();
    header["channels"] = 3;
    header["layout"] = "planar_rgb8";
    std::ofstream hs(paths.header, std::ios::trunc);
    if (!hs) throw std::runtime_error("cannot write " + paths.header.string());
    hs << header.dump(2) << '\n';
}

}  // namespace ceesim
