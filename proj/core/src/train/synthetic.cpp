#include "minkunext/train/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace minkunext {

namespace {

struct Quad {
  Point3 origin;
  Point3 u;
  Point3 v;
  double area;
};

Quad make_quad(Point3 o, Point3 u, Point3 v) {
  const Point3 n{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  return {o, u, v, std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])};
}

std::vector<Quad> make_scene(const SyntheticConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-0.8, 0.8);
  std::uniform_real_distribution<double> half(0.05, 0.3);
  std::uniform_real_distribution<double> height(0.1, 0.8);
  std::uniform_int_distribution<int> box_count(cfg.min_boxes, cfg.max_boxes);
  std::uniform_int_distribution<int> wall_count(0, cfg.max_walls);

  std::vector<Quad> quads;
  const int boxes = box_count(rng);
  for (int i = 0; i < boxes; ++i) {
    const double cx = pos(rng), cy = pos(rng), sx = half(rng), sy = half(rng), h = height(rng);
    const double x0 = cx - sx, x1 = cx + sx, y0 = cy - sy, y1 = cy + sy;
    quads.push_back(make_quad({x0, y0, 0}, {2 * sx, 0, 0}, {0, 0, h}));
    quads.push_back(make_quad({x0, y1, 0}, {2 * sx, 0, 0}, {0, 0, h}));
    quads.push_back(make_quad({x0, y0, 0}, {0, 2 * sy, 0}, {0, 0, h}));
    quads.push_back(make_quad({x1, y0, 0}, {0, 2 * sy, 0}, {0, 0, h}));
    quads.push_back(make_quad({x0, y0, h}, {2 * sx, 0, 0}, {0, 2 * sy, 0}));
  }
  const int walls = wall_count(rng);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979323846);
  std::uniform_real_distribution<double> length(0.6, 1.6);
  for (int i = 0; i < walls; ++i) {
    const double a = angle(rng), len = length(rng), h = height(rng);
    const Point3 dir{std::cos(a) * len, std::sin(a) * len, 0};
    quads.push_back(make_quad({pos(rng) - dir[0] / 2, pos(rng) - dir[1] / 2, 0}, dir, {0, 0, h}));
  }
  return quads;
}

PointCloud sample_scene(const std::vector<Quad>& quads, const SyntheticConfig& cfg, std::mt19937_64& rng) {
  std::vector<double> areas;
  for (const auto& q : quads) areas.push_back(q.area);
  std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-cfg.window_shift, cfg.window_shift);
  std::uniform_real_distribution<double> noise(-cfg.jitter, cfg.jitter);
  const double wx = shift(rng), wy = shift(rng);
  constexpr double window = 0.9;

  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(cfg.points));
  std::size_t attempts = 0;
  const std::size_t max_attempts = 1000 * static_cast<std::size_t>(cfg.points);
  while (cloud.points.size() < static_cast<std::size_t>(cfg.points)) {
    if (++attempts > max_attempts) throw std::runtime_error("synthetic scene has no surface inside the window");
    const Quad& q = quads[pick(rng)];
    const double a = unit(rng), b = unit(rng);
    Point3 p;
    for (std::size_t k = 0; k < 3; ++k) p[k] = q.origin[k] + a * q.u[k] + b * q.v[k];
    if (std::abs(p[0] - wx) > window || std::abs(p[1] - wy) > window) continue;
    for (double& c : p) c += noise(rng);
    cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (places < 1 || variants < 1 || points < 2) throw std::invalid_argument("degenerate synthetic parameters");
  if (test_variants < 0 || test_variants > variants) throw std::invalid_argument("test_variants out of range");
  if (min_boxes < 1 || max_boxes < min_boxes || max_walls < 0) throw std::invalid_argument("invalid scene complexity");
  if (!(variant_spread >= 0.0) || !(grid_spacing > variant_spread))
    throw std::invalid_argument("grid spacing must exceed the variant spread");
  if (!(window_shift >= 0.0) || !(jitter >= 0.0)) throw std::invalid_argument("negative perturbation");
}

void normalize_cloud(PointCloud& cloud) {
  if (cloud.empty()) throw std::invalid_argument("empty input");
  Point3 mean{0, 0, 0};
  for (const auto& p : cloud.points)
    for (std::size_t k = 0; k < 3; ++k) mean[k] += p[k];
  for (double& m : mean) m /= static_cast<double>(cloud.size());
  double scale = 0.0;
  for (auto& p : cloud.points)
    for (std::size_t k = 0; k < 3; ++k) {
      p[k] -= mean[k];
      scale = std::max(scale, std::abs(p[k]));
    }
  if (!(scale > 0.0)) throw std::invalid_argument("degenerate cloud");
  for (auto& p : cloud.points)
    for (double& c : p) c = std::clamp(c / scale, -1.0, 1.0);
}

Dataset generate_synthetic(const SyntheticConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.places))));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = cfg.variant_spread / 2.0;

  Dataset ds;
  std::vector<std::vector<SubmapRecord>> by_variant(static_cast<std::size_t>(cfg.variants));
  for (int p = 0; p < cfg.places; ++p) {
    const auto scene = make_scene(cfg, rng);
    const Utm centre{(p / side) * cfg.grid_spacing, (p % side) * cfg.grid_spacing};
    for (int v = 0; v < cfg.variants; ++v) {
      SubmapRecord r;
      r.cloud = sample_scene(scene, cfg, rng);
      normalize_cloud(r.cloud);
      const double rr = radius * std::sqrt(unit(rng));
      const double a = 2.0 * 3.14159265358979323846 * unit(rng);
      r.utm = {centre.northing + rr * std::cos(a), centre.easting + rr * std::sin(a)};
      r.split = v >= cfg.variants - cfg.test_variants ? Split::test : Split::train;
      r.region = "synthetic";
      char run[32];
      char file[32];
      std::snprintf(run, sizeof run, "run_%02d", v);
      std::snprintf(file, sizeof file, "place_%04d.bin", p);
      r.run = std::string("synthetic/") + run;
      r.path = r.run + "/" + file;
      by_variant[static_cast<std::size_t>(v)].push_back(std::move(r));
    }
  }
  for (auto& group : by_variant)
    for (auto& r : group) {
      r.id = static_cast<std::int64_t>(ds.records.size());
      ds.records.push_back(std::move(r));
    }
  return ds;
}

Dataset generate_synthetic(int places, int variants, int points, std::mt19937_64& rng) {
  SyntheticConfig cfg;
  cfg.places = places;
  cfg.variants = variants;
  cfg.points = points;
  cfg.test_variants = std::min(cfg.test_variants, variants);
  return generate_synthetic(cfg, rng);
}

}  // namespace minkunext
