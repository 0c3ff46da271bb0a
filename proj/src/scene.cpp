#include "ceesim/scene.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "scene_geometry.hpp"

namespace ceesim::scene {

using nlohmann::json;

Mat3 exp_so3(const Vec3& w) {
    const double theta = w.norm();
    if (theta < 1e-12) return Mat3::Identity();
    return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

std::vector<double> Gaussian3D::motion_weights() const {
    std::vector<double> w(motion_logits.size());
    if (w.empty()) return w;
    const double top = *std::max_element(motion_logits.begin(), motion_logits.end());
    double total = 0.0;
    for (std::size_t b = 0; b < w.size(); ++b) total += (w[b] = std::exp(motion_logits[b] - top));
    for (auto& x : w) x /= total;
    return w;
}

Mat3 Gaussian3D::covariance() const {
    const Mat3 R = R0.toRotationMatrix();
    return R * scales.cwiseProduct(scales).asDiagonal() * R.transpose();
}

MotionBasisSet MotionBasisSet::identity(int count, int timesteps) {
    if (count < 1 || timesteps < 1) throw std::invalid_argument("basis set needs at least one basis and timestep");
    MotionBasisSet m;
    m.bases.assign(count, std::vector<RigidTransform>(timesteps));
    return m;
}

Camera Camera::pinhole(int width, int height, double focal, const RigidTransform& E) {
    Camera c;
    c.width = width;
    c.height = height;
    c.K << focal, 0.0, 0.5 * (width - 1), 0.0, focal, 0.5 * (height - 1), 0.0, 0.0, 1.0;
    c.E = E;
    return c;
}

void GaussianScene::validate() const {
    if (timesteps < 1) throw std::invalid_argument("scene needs at least one timestep");
    if (bases.count() < 1) throw std::invalid_argument("scene needs at least one motion basis");
    for (const auto& b : bases.bases)
        if (static_cast<int>(b.size()) != timesteps) throw std::invalid_argument("basis length differs from timesteps");
    for (const auto& b : bases.bases)
        for (const auto& T : b)
            if (!(T.R.transpose() * T.R).isApprox(Mat3::Identity(), 1e-6) || T.R.determinant() < 0.0)
                throw std::invalid_argument("basis rotation is not orthonormal");
    if (static_cast<int>(cameras.size()) != timesteps) throw std::invalid_argument("need one camera per timestep");
    for (const auto& c : cameras) {
        if (c.width < 1 || c.height < 1) throw std::invalid_argument("camera image size must be positive");
        if (!(c.K(0, 0) > 0.0 && c.K(1, 1) > 0.0) || c.K(1, 0) != 0.0 || c.K(2, 0) != 0.0 || c.K(2, 1) != 0.0)
            throw std::invalid_argument("camera intrinsics must be upper triangular with positive focal lengths");
    }
    for (const auto& g : gaussians) {
        if (std::abs(g.R0.norm() - 1.0) > 1e-9) throw std::invalid_argument("gaussian rotation is not a unit quaternion");
        if ((g.scales.array() <= 0.0).any()) throw std::invalid_argument("gaussian scales must be positive");
        if (!(g.opacity > 0.0 && g.opacity < 1.0)) throw std::invalid_argument("gaussian opacity must lie in (0,1)");
        if (static_cast<int>(g.motion_logits.size()) != bases.count())
            throw std::invalid_argument("motion coefficient count differs from basis count");
    }
}

namespace {

std::vector<RigidTransform> bases_at(const MotionBasisSet& bases, int t) {
    if (t < 0 || t >= bases.timesteps()) throw std::out_of_range("timestep out of range");
    std::vector<RigidTransform> out;
    for (const auto& b : bases.bases) out.push_back(b[t]);
    return out;
}

}  // namespace

Pose pose_at_time(const Gaussian3D& g, const MotionBasisSet& bases, int t) {
    if (static_cast<int>(g.motion_logits.size()) != bases.count())
        throw std::invalid_argument("motion coefficient count differs from basis count");
    const std::vector<double> zeros(detail::gaussian_params(bases.count()), 0.0);
    const auto p = detail::pose<double>(g, bases_at(bases, t), zeros.data(), nullptr);
    return {p.mu, p.R};
}

Projection project(const Vec3& mu, const Mat3& sigma, const Camera& cam) {
    const Vec3 X = cam.E.apply(mu);
    if (!(X.z() > detail::kNearDepth)) throw std::domain_error("point is not in front of the camera");
    const double fx = cam.K(0, 0), s = cam.K(0, 1), fy = cam.K(1, 1);
    const double iz = 1.0 / X.z();
    Projection p;
    p.mu = {fx * X.x() * iz + s * X.y() * iz + cam.K(0, 2), fy * X.y() * iz + cam.K(1, 2)};
    Eigen::Matrix<double, 2, 3> J;
    J << fx * iz, s * iz, -(fx * X.x() + s * X.y()) * iz * iz, 0.0, fy * iz, -fy * X.y() * iz * iz;
    const Mat3 W = cam.E.R;
    p.sigma = J * W * sigma * W.transpose() * J.transpose();
    p.depth = X.z();
    return p;
}

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json mat_json(const Mat3& m) {
    json a = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
    return a;
}

Vec3 json_vec(const json& j) {
    if (!j.is_array() || j.size() != 3) throw std::runtime_error("scene file: expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Mat3 json_mat(const json& j) {
    if (!j.is_array() || j.size() != 9) throw std::runtime_error("scene file: expected a row-major 3x3 matrix");
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = j[r * 3 + c].get<double>();
    return m;
}

json transform_json(const RigidTransform& T) { return {{"R", mat_json(T.R)}, {"t", vec_json(T.t)}}; }
RigidTransform json_transform(const json& j) { return {json_mat(j.at("R")), json_vec(j.at("t"))}; }

}  // namespace

void save_scene(const GaussianScene& scene, const std::filesystem::path& path) {
    json j;
    j["timesteps"] = scene.timesteps;
    j["background"] = vec_json(scene.background);
    j["gaussians"] = json::array();
    for (const auto& g : scene.gaussians) {
        j["gaussians"].push_back({{"mu0", vec_json(g.mu0)},
                                  {"rotation", {g.R0.w(), g.R0.x(), g.R0.y(), g.R0.z()}},
                                  {"scales", vec_json(g.scales)},
                                  {"opacity", g.opacity},
                                  {"color", vec_json(g.color)},
                                  {"motion_logits", g.motion_logits}});
    }
    j["bases"] = json::array();
    for (const auto& b : scene.bases.bases) {
        json seq = json::array();
        for (const auto& T : b) seq.push_back(transform_json(T));
        j["bases"].push_back(seq);
    }
    j["cameras"] = json::array();
    for (const auto& c : scene.cameras) {
        json cj = transform_json(c.E);
        cj["width"] = c.width;
        cj["height"] = c.height;
        cj["K"] = mat_json(c.K);
        j["cameras"].push_back(cj);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scene file " + path.string());
    out << j.dump(2) << '\n';
}

GaussianScene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file " + path.string());
    GaussianScene s;
    try {
        const json j = json::parse(in);
        s.timesteps = j.at("timesteps").get<int>();
        s.background = json_vec(j.at("background"));
        for (const auto& gj : j.at("gaussians")) {
            Gaussian3D g;
            g.mu0 = json_vec(gj.at("mu0"));
            const auto& q = gj.at("rotation");
            g.R0 = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>());
            g.R0.normalize();
            g.scales = json_vec(gj.at("scales"));
            g.opacity = gj.at("opacity").get<double>();
            g.color = json_vec(gj.at("color"));
            g.motion_logits = gj.at("motion_logits").get<std::vector<double>>();
            s.gaussians.push_back(std::move(g));
        }
        for (const auto& bj : j.at("bases")) {
            std::vector<RigidTransform> seq;
            for (const auto& tj : bj) seq.push_back(json_transform(tj));
            s.bases.bases.push_back(std::move(seq));
        }
        for (const auto& cj : j.at("cameras")) {
            Camera c;
            c.width = cj.at("width").get<int>();
            c.height = cj.at("height").get<int>();
            c.K = json_mat(cj.at("K"));
            c.E = json_transform(cj);
            s.cameras.push_back(c);
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed scene file " + path.string() + ": " + e.what());
    }
    s.validate();
    return s;
}

}  // namespace ceesim::scene
