#include "bevfuse/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <fmt/format.h>

#include "bevfuse/error.hpp"

namespace bevfuse::io {
namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw ParseError("cannot open " + path.string() + " for writing");
  }

  void magic(std::string_view m) { out_.write(m.data(), static_cast<std::streamsize>(m.size())); }

  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  void finish() {
    out_.flush();
    if (!out_) throw ParseError("write to " + path_.string() + " failed");
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  void expect_magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::string_view(bytes_.data() + pos_, m.size()) != m) {
      throw ParseError(path_.string() + ": bad magic, expected \"" + std::string(m) + "\"");
    }
    pos_ += m.size();
  }

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(fmt::format("{}: truncated while reading {} (offset {}, file size {})", path_.string(), what,
                                   pos_, bytes_.size()));
    }
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw ParseError(fmt::format("{}: {} trailing bytes", path_.string(), bytes_.size() - pos_));
    }
  }

 private:
  fs::path path_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

GridSpec read_grid_header(Reader& r, const fs::path& path) {
  r.expect_magic("BEVG");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kGridVersion) {
    throw ParseError(fmt::format("{}: grid format version {} is not supported (expected {})", path.string(), version,
                                 kGridVersion));
  }
  GridSpec spec;
  spec.height = static_cast<int>(r.get<std::uint32_t>("height"));
  spec.width = static_cast<int>(r.get<std::uint32_t>("width"));
  spec.channels = static_cast<int>(r.get<std::uint32_t>("channels"));
  spec.x_min = r.get<double>("x_range");
  spec.x_max = r.get<double>("x_range");
  spec.y_min = r.get<double>("y_range");
  spec.y_max = r.get<double>("y_range");
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return spec;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

template <typename T, typename F>
std::vector<T> load_jsonl(const fs::path& path, F&& from_json) {
  std::vector<T> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    try {
      out.push_back(from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

template <typename T, typename F>
void save_jsonl(const fs::path& path, std::span<const T> items, F&& to_json) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");
  for (const auto& item : items) out << to_json(item).dump() << '\n';
  if (!out) throw ParseError("write to " + path.string() + " failed");
}

int class_field(const json& j) {
  const auto& c = j.at("class");
  if (c.is_number_integer()) {
    const int id = c.get<int>();
    if (id < 0 || id >= kNumClasses) throw ParseError(fmt::format("class id {} out of range", id));
    return id;
  }
  const auto id = class_from_name(c.get<std::string>());
  if (!id) throw ParseError("unknown class \"" + c.get<std::string>() + "\"");
  return *id;
}

std::string fmt_metric(double v) { return fmt::format("{:.4f}", v); }

}  // namespace

json spec_to_json(const GridSpec& s) {
  return {{"height", s.height}, {"width", s.width}, {"channels", s.channels},
          {"x_range", {s.x_min, s.x_max}}, {"y_range", {s.y_min, s.y_max}}};
}

GridSpec spec_from_json(const json& j) {
  GridSpec s;
  s.height = j.at("height").get<int>();
  s.width = j.at("width").get<int>();
  s.channels = j.at("channels").get<int>();
  s.x_min = j.at("x_range").at(0).get<double>();
  s.x_max = j.at("x_range").at(1).get<double>();
  s.y_min = j.at("y_range").at(0).get<double>();
  s.y_max = j.at("y_range").at(1).get<double>();
  return s;
}

void save_grid(const fs::path& path, const BevGrid& grid) {
  const GridSpec& s = grid.spec();
  {
    Writer w(path);
    w.magic("BEVG");
    w.put<std::uint32_t>(kGridVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.height));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.width));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.channels));
    w.put<double>(s.x_min);
    w.put<double>(s.x_max);
    w.put<double>(s.y_min);
    w.put<double>(s.y_max);
    for (double v : grid.data()) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) throw ConfigError(path.string() + ": grid value " + std::to_string(v) + " does not fit in f32");
      w.put<float>(f);
    }
    w.finish();
  }
  write_json(sidecar_path(path), grid_sidecar(s));
}

BevGrid load_grid(const fs::path& path) {
  Reader r(path);
  const GridSpec spec = read_grid_header(r, path);
  r.need(spec.value_count() * sizeof(float), "grid values");
  std::vector<double> data(spec.value_count());
  for (auto& v : data) {
    v = static_cast<double>(r.get<float>("grid values"));
    if (!std::isfinite(v)) throw ParseError(path.string() + ": non-finite grid value");
  }
  r.expect_end();
  return BevGrid(spec, std::move(data));
}

GridSpec read_grid_spec(const fs::path& path) {
  Reader r(path);
  return read_grid_header(r, path);
}

json grid_sidecar(const GridSpec& spec) {
  json j = spec_to_json(spec);
  j["format"] = "BEVG";
  j["version"] = kGridVersion;
  j["dtype"] = "f32";
  j["layout"] = "row, col, channel";
  return j;
}

fs::path sidecar_path(const fs::path& grid_path) {
  fs::path p = grid_path;
  p += ".json";
  return p;
}

void save_projection(const fs::path& path, const Projection& proj) {
  proj.validate();
  Writer w(path);
  w.magic("PROJ");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(proj.rows));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(proj.cols));
  for (double v : proj.matrix) w.put<float>(static_cast<float>(v));
  for (double v : proj.bias) w.put<float>(static_cast<float>(v));
  w.finish();
}

Projection load_projection(const fs::path& path) {
  Reader r(path);
  r.expect_magic("PROJ");
  const auto rows = r.get<std::uint32_t>("rows");
  const auto cols = r.get<std::uint32_t>("cols");
  Projection p = Projection::zeros(rows, cols);
  r.need((p.matrix.size() + p.bias.size()) * sizeof(float), "projection values");
  for (auto& v : p.matrix) v = r.get<float>("matrix");
  for (auto& v : p.bias) v = r.get<float>("bias");
  r.expect_end();
  return p;
}

void save_points(const fs::path& path, std::span<const Vec3> points) {
  Writer w(path);
  w.magic("PNTS");
  w.put<std::uint32_t>(kPointsVersion);
  w.put<std::uint64_t>(points.size());
  for (const auto& p : points) {
    w.put<float>(static_cast<float>(p.x));
    w.put<float>(static_cast<float>(p.y));
    w.put<float>(static_cast<float>(p.z));
  }
  w.finish();
}

std::vector<Vec3> load_points(const fs::path& path) {
  Reader r(path);
  r.expect_magic("PNTS");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kPointsVersion) {
    throw ParseError(fmt::format("{}: point format version {} is not supported", path.string(), version));
  }
  const auto n = r.get<std::uint64_t>("count");
  r.need(n * 3 * sizeof(float), "points");
  std::vector<Vec3> pts(n);
  for (auto& p : pts) {
    p.x = r.get<float>("x");
    p.y = r.get<float>("y");
    p.z = r.get<float>("z");
  }
  r.expect_end();
  return pts;
}

json box_to_json(const Box3D& b) {
  return {{"x", b.center.x}, {"y", b.center.y}, {"z", b.center.z}, {"w", b.size.w},     {"l", b.size.l},
          {"h", b.size.h},   {"yaw", b.yaw},    {"vx", b.velocity.x}, {"vy", b.velocity.y}};
}

Box3D box_from_json(const json& j) {
  Box3D b;
  b.center = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
  b.size = {j.at("w").get<double>(), j.at("l").get<double>(), j.at("h").get<double>()};
  b.yaw = j.at("yaw").get<double>();
  b.velocity = {j.value("vx", 0.0), j.value("vy", 0.0)};
  if (!b.valid()) throw ParseError("box sizes must be positive");
  return b;
}

json proposal_to_json(const Proposal& p) {
  json j = box_to_json(p.box);
  j["score"] = p.score;
  j["class"] = std::string(class_name(p.class_id));
  j["modality"] = std::string(modality_name(p.modality));
  return j;
}

Proposal proposal_from_json(const json& j) {
  Proposal p;
  p.box = box_from_json(j);
  p.score = j.at("score").get<double>();
  if (!(p.score >= 0.0 && p.score <= 1.0)) throw ParseError(fmt::format("score {} outside [0, 1]", p.score));
  p.class_id = class_field(j);
  const auto m = modality_from_name(j.at("modality").get<std::string>());
  if (!m) throw ParseError("modality must be \"lidar\" or \"camera\"");
  p.modality = *m;
  return p;
}

json annotation_to_json(const Annotation& a) {
  json j = box_to_json(a.box);
  j["class"] = std::string(class_name(a.class_id));
  j["visibility"] = a.visibility;
  j["num_lidar_pts"] = a.num_lidar_pts;
  return j;
}

Annotation annotation_from_json(const json& j) {
  Annotation a;
  a.box = box_from_json(j);
  a.class_id = class_field(j);
  a.visibility = j.at("visibility").get<int>();
  if (a.visibility < 1 || a.visibility > 4) throw ParseError(fmt::format("visibility token {} outside 1..4", a.visibility));
  a.num_lidar_pts = j.value("num_lidar_pts", 0);
  if (a.num_lidar_pts < 0) throw ParseError("num_lidar_pts must be non-negative");
  return a;
}

json detection_to_json(const Detection& d) {
  json j = box_to_json(d.box);
  j["score"] = d.score;
  j["class"] = std::string(class_name(d.class_id));
  return j;
}

Detection detection_from_json(const json& j) {
  Detection d;
  d.box = box_from_json(j);
  d.score = j.at("score").get<double>();
  if (!(d.score >= 0.0 && d.score <= 1.0)) throw ParseError(fmt::format("score {} outside [0, 1]", d.score));
  d.class_id = class_field(j);
  return d;
}

void save_proposals(const fs::path& path, std::span<const Proposal> proposals) {
  save_jsonl(path, proposals, proposal_to_json);
}
std::vector<Proposal> load_proposals(const fs::path& path) {
  return load_jsonl<Proposal>(path, proposal_from_json);
}
void save_annotations(const fs::path& path, std::span<const Annotation> annotations) {
  save_jsonl(path, annotations, annotation_to_json);
}
std::vector<Annotation> load_annotations(const fs::path& path) {
  return load_jsonl<Annotation>(path, annotation_from_json);
}
void save_detections(const fs::path& path, std::span<const Detection> detections) {
  save_jsonl(path, detections, detection_to_json);
}
std::vector<Detection> load_detections(const fs::path& path) {
  return load_jsonl<Detection>(path, detection_from_json);
}

json pairs_to_json(const PairSets& sets, std::span<const InstanceFeature> lidar,
                   std::span<const InstanceFeature> camera) {
  auto dump = [&](std::span<const InstancePair> pairs) {
    json arr = json::array();
    for (const auto& p : pairs) {
      const bool anchor_lidar = p.kind != PairKind::c_hip;
      const InstanceFeature& a = anchor_lidar ? lidar[p.anchor] : camera[p.anchor];
      const InstanceFeature& g = anchor_lidar ? camera[p.guide] : lidar[p.guide];
      arr.push_back({{"kind", std::string(pair_kind_name(p.kind))},
                     {"anchor_idx", a.source_index},
                     {"guide_idx", g.source_index},
                     {"similarity", p.similarity},
                     {"classes", {std::string(class_name(a.proposal.class_id)),
                                  std::string(class_name(g.proposal.class_id))}}});
    }
    return arr;
  };
  return {{"counts",
           {{"lidar_instances", lidar.size()},
            {"camera_instances", camera.size()},
            {"eip", sets.eip.size()},
            {"c_hip", sets.c_hip.size()},
            {"l_hip", sets.l_hip.size()},
            {"eip_candidates", sets.eip_candidates},
            {"c_hip_candidates", sets.c_hip_candidates},
            {"l_hip_candidates", sets.l_hip_candidates},
            {"unmatched_lidar", sets.unmatched_lidar},
            {"unmatched_camera", sets.unmatched_camera}}},
          {"eip", dump(sets.eip)},
          {"c_hip", dump(sets.c_hip)},
          {"l_hip", dump(sets.l_hip)}};
}

namespace {

json bin_to_json(const BinReport& b) {
  json per_class = json::object();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& row = b.map.per_class[static_cast<std::size_t>(c)];
    if (std::none_of(row.begin(), row.end(), [](const auto& v) { return v.has_value(); })) continue;
    json aps = json::object();
    for (std::size_t t = 0; t < kDistanceThresholds.size(); ++t) {
      aps[fmt::format("{}", kDistanceThresholds[t])] = row[t] ? json(*row[t]) : json(nullptr);
    }
    per_class[std::string(class_name(c))] = aps;
  }
  json recall = json::object();
  for (std::size_t t = 0; t < kRecallIouThresholds.size(); ++t) {
    recall[fmt::format("{}", kRecallIouThresholds[t])] = b.recall[t];
  }
  return {{"label", b.label},
          {"gt_count", b.gt_count},
          {"det_count", b.det_count},
          {"has_data", b.has_data},
          {"mAP", b.has_data ? json(b.map.map) : json(nullptr)},
          {"ap", per_class},
          {"recall", b.has_data ? recall : json(nullptr)}};
}

}  // namespace

json report_to_json(const StratifiedReport& report) {
  json bins = json::array();
  for (const auto& b : report.bins) bins.push_back(bin_to_json(b));
  return {{"axis", std::string(axis_name(report.axis))}, {"overall", bin_to_json(report.overall)}, {"bins", bins}};
}

std::string report_to_table(const StratifiedReport& report) {
  std::ostringstream os;
  os << fmt::format("{:<14} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8}\n", std::string(axis_name(report.axis)), "GT", "Det",
                    "mAP", "R@0.3", "R@0.5", "R@0.7");
  auto row = [&](const BinReport& b) {
    if (!b.has_data) {
      os << fmt::format("{:<14} {:>6} {:>6} {:>8}\n", b.label, b.gt_count, b.det_count, "no-data");
      return;
    }
    os << fmt::format("{:<14} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8}\n", b.label, b.gt_count, b.det_count,
                      fmt_metric(b.map.map), fmt_metric(b.recall[0]), fmt_metric(b.recall[1]),
                      fmt_metric(b.recall[2]));
  };
  row(report.overall);
  for (const auto& b : report.bins) row(b);
  return os.str();
}

json histogram_to_json(const VisibilityHistogram& h) {
  json out = json::object();
  for (std::size_t t = 0; t < 4; ++t) {
    json row = json::object();
    for (std::size_t b = 0; b < kPointBuckets.size(); ++b) row[std::string(kPointBuckets[b])] = h.counts[t][b];
    out[fmt::format("token={}", t + 1)] = row;
  }
  return {{"buckets", kPointBuckets}, {"counts", out}};
}

std::string histogram_to_table(const VisibilityHistogram& h) {
  std::ostringstream os;
  os << fmt::format("{:<9}", "token");
  for (auto b : kPointBuckets) os << fmt::format(" {:>7}", b);
  os << '\n';
  for (std::size_t t = 0; t < 4; ++t) {
    os << fmt::format("{:<9}", t + 1);
    for (std::size_t b = 0; b < kPointBuckets.size(); ++b) os << fmt::format(" {:>7}", h.counts[t][b]);
    os << '\n';
  }
  return os.str();
}

std::string histogram_to_csv(const VisibilityHistogram& h) {
  std::ostringstream os;
  os << "token";
  for (auto b : kPointBuckets) os << ',' << b;
  os << '\n';
  for (std::size_t t = 0; t < 4; ++t) {
    os << t + 1;
    for (std::size_t b = 0; b < kPointBuckets.size(); ++b) os << ',' << h.counts[t][b];
    os << '\n';
  }
  return os.str();
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw ParseError("write to " + path.string() + " failed");
}

void save_manifest(const fs::path& path, const SceneManifest& m) {
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) { return p.empty() ? std::string() : fs::relative(p, base.empty() ? "." : base).generic_string(); };
  json j = {{"version", 1},
            {"seed", m.seed},
            {"lidar_spec", spec_to_json(m.lidar_spec)},
            {"camera_spec", spec_to_json(m.camera_spec)},
            {"lidar_grid", rel(m.lidar_grid)},
            {"camera_grid", rel(m.camera_grid)},
            {"lidar_proposals", rel(m.lidar_proposals)},
            {"camera_proposals", rel(m.camera_proposals)},
            {"annotations", rel(m.annotations)},
            {"points", rel(m.points)}};
  write_json(path, j);
}

SceneManifest load_manifest(const fs::path& path) {
  const json j = read_json(path);
  const fs::path base = path.parent_path();
  SceneManifest m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.lidar_spec = spec_from_json(j.at("lidar_spec"));
    m.camera_spec = spec_from_json(j.at("camera_spec"));
    auto resolve = [&](const char* key) {
      const auto s = j.value(key, std::string());
      return s.empty() ? fs::path() : base / s;
    };
    m.lidar_grid = resolve("lidar_grid");
    m.camera_grid = resolve("camera_grid");
    m.lidar_proposals = resolve("lidar_proposals");
    m.camera_proposals = resolve("camera_proposals");
    m.annotations = resolve("annotations");
    m.points = resolve("points");
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  for (const auto* p : {&m.lidar_grid, &m.camera_grid, &m.lidar_proposals, &m.camera_proposals, &m.annotations}) {
    if (p->empty() || !fs::exists(*p)) throw ParseError(path.string() + ": referenced file missing: " + p->string());
  }
  if (!m.points.empty() && !fs::exists(m.points)) {
    throw ParseError(path.string() + ": referenced file missing: " + m.points.string());
  }
  auto check = [&](const fs::path& grid, const GridSpec& echoed) {
    const GridSpec actual = read_grid_spec(grid);
    if (!actual.same_window(echoed) || actual.channels != echoed.channels) {
      throw ParseError(grid.string() + ": header does not match the manifest's grid spec");
    }
  };
  check(m.lidar_grid, m.lidar_spec);
  check(m.camera_grid, m.camera_spec);
  return m;
}

}  // namespace bevfuse::io
