#include "surf/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace surf {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

bool is_header(const std::vector<std::string_view> &fields) {
  for (std::size_t k = 0; k < fields.size(); ++k)
    if (fields[k] != "x" + std::to_string(k))
      return false;
  return true;
}

} // namespace

PointCloud read_points_csv(std::istream &in) {
  std::vector<double> values;
  Eigen::Index dim = 0;
  Eigen::Index rows = 0;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty())
      continue;
    const auto fields = split(body);
    if (first) {
      first = false;
      dim = static_cast<Eigen::Index>(fields.size());
      if (is_header(fields))
        continue;
    }
    if (static_cast<Eigen::Index>(fields.size()) != dim)
      throw DataError("expected " + std::to_string(dim) + " columns, found " +
                          std::to_string(fields.size()),
                      lineno);
    for (const auto f : fields) {
      double v = 0;
      const auto *begin = f.data() + (!f.empty() && f.front() == '+' ? 1 : 0);
      const auto res = std::from_chars(begin, f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw DataError("cannot parse number '" + std::string(f) + "'", lineno);
      if (!std::isfinite(v))
        throw DataError("non-finite value '" + std::string(f) + "'", lineno);
      values.push_back(v);
    }
    ++rows;
  }
  if (dim == 0)
    throw DataError("no data rows");
  Matrix m(dim, rows);
  std::copy(values.begin(), values.end(), m.data());
  return PointCloud(std::move(m));
}

PointCloud read_points_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open " + path);
  try {
    return read_points_csv(in);
  } catch (const DataError &e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_points_csv(std::ostream &out, const PointCloud &points, bool header) {
  if (header) {
    for (Eigen::Index k = 0; k < points.dim(); ++k)
      out << (k ? "," : "") << 'x' << k;
    out << '\n';
  }
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    for (Eigen::Index k = 0; k < points.dim(); ++k)
      out << (k ? "," : "") << format_double(points.matrix()(k, i));
    out << '\n';
  }
}

void write_points_csv(const std::string &path, const PointCloud &points, bool header) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write " + path);
  write_points_csv(out, points, header);
}

void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write " + path);
  out << text;
}

PointCloud points_from_json(const Json &j) {
  if (!j.is_array() || j.empty())
    throw DataError("points JSON must be a nonempty array of arrays");
  const auto dim = static_cast<Eigen::Index>(j.front().size());
  Matrix m(dim, static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto &row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim)
      throw DataError("point " + std::to_string(i) + " has wrong arity");
    for (Eigen::Index k = 0; k < dim; ++k) {
      const auto &v = row[static_cast<std::size_t>(k)];
      if (!v.is_number())
        throw DataError("point " + std::to_string(i) + " has a non-numeric entry");
      const double x = v.get<double>();
      if (!std::isfinite(x))
        throw DataError("point " + std::to_string(i) + " is not finite");
      m(k, static_cast<Eigen::Index>(i)) = x;
    }
  }
  return PointCloud(std::move(m));
}

Json points_to_json(const PointCloud &points) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < points.size(); ++i)
    out.push_back(vector_to_json(points.point(i)));
  return out;
}

Json vector_to_json(const Vector &v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k)
    out.push_back(v(k));
  return out;
}

Vector vector_from_json(const Json &j) {
  if (!j.is_array())
    throw DataError("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k)
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  return v;
}

Json matrix_to_json(const Matrix &m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    out.push_back(vector_to_json(m.row(r).transpose()));
  return out;
}

Json model_to_json(const DensityModel &model) {
  Json j;
  j["dim"] = model.dim();
  if (model.kind() == DensityModel::Kind::kde) {
    j["kind"] = "kde";
    j["bandwidth"] = model.bandwidth();
    j["n"] = model.size();
  } else {
    j["kind"] = "mixture";
    Json comps = Json::array();
    for (const auto &c : model.components()) {
      Json jc{{"weight", c.weight}, {"mean", vector_to_json(c.mean)}};
      if (c.covariance.size() > 0)
        jc["covariance"] = matrix_to_json(c.covariance);
      else
        jc["sigma"] = c.sigma;
      comps.push_back(std::move(jc));
    }
    j["components"] = std::move(comps);
  }
  return j;
}

DensityModel model_from_json(const Json &j, const std::optional<PointCloud> &kde_data) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "kde") {
    if (!kde_data)
      throw DataError("kde model description needs its data points");
    return DensityModel::kde(*kde_data, j.at("bandwidth").get<double>());
  }
  if (kind == "mixture") {
    std::vector<MixtureComponent> comps;
    for (const auto &c : j.at("components")) {
      MixtureComponent mc{c.at("weight").get<double>(), vector_from_json(c.at("mean"))};
      if (c.contains("covariance")) {
        const auto &rows = c["covariance"];
        mc.covariance.resize(static_cast<Eigen::Index>(rows.size()),
                             static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
          mc.covariance.row(static_cast<Eigen::Index>(r)) = vector_from_json(rows[r]).transpose();
      } else {
        mc.sigma = c.at("sigma").get<double>();
      }
      comps.push_back(std::move(mc));
    }
    return DensityModel::mixture(comps);
  }
  throw DataError("unknown model kind '" + kind + "'");
}

Json local_info_to_json(const Vector &x, const LocalDensityInfo &info) {
  Json j{{"x", vector_to_json(x)},
         {"value", info.value},
         {"g", vector_to_json(info.g)},
         {"H", matrix_to_json(info.H)}};
  if (info.Hprime)
    j["Hprime"] = matrix_to_json(*info.Hprime);
  return j;
}

Json config_to_json(const SurfConfig &c) {
  Json j{{"d", c.d},
         {"threshold_frac", c.threshold_frac},
         {"use_log", c.use_log},
         {"step_tol", c.step_tol},
         {"grad_tol", c.grad_tol},
         {"max_iter", c.max_iter}};
  j["bandwidth"] = c.bandwidth ? Json(*c.bandwidth) : Json(nullptr);
  return j;
}

SurfConfig config_from_json(const Json &j) {
  SurfConfig c;
  c.d = j.at("d").get<int>();
  if (j.contains("bandwidth") && !j["bandwidth"].is_null())
    c.bandwidth = j["bandwidth"].get<double>();
  c.threshold_frac = j.value("threshold_frac", c.threshold_frac);
  c.use_log = j.value("use_log", c.use_log);
  c.step_tol = j.value("step_tol", c.step_tol);
  c.grad_tol = j.value("grad_tol", c.grad_tol);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.validate();
  return c;
}

Json manifold_to_json(const ManifoldSpec &m) {
  if (const auto *c = m.as_circle())
    return {{"type", "circle"}, {"center", vector_to_json(c->center)}, {"radius", c->radius}};
  if (const auto *segs = m.as_segments()) {
    Json arr = Json::array();
    for (const auto &s : *segs)
      arr.push_back(Json::array({vector_to_json(s.a), vector_to_json(s.b)}));
    return {{"type", "segments"}, {"segments", std::move(arr)}};
  }
  return {{"type", "point_set"}, {"points", points_to_json(*m.as_point_set())}};
}

ManifoldSpec manifold_from_json(const Json &j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "circle")
    return ManifoldSpec::circle(vector_from_json(j.at("center")), j.at("radius").get<double>());
  if (type == "segments") {
    std::vector<Segment> segs;
    for (const auto &s : j.at("segments"))
      segs.push_back({vector_from_json(s.at(0)), vector_from_json(s.at(1))});
    return ManifoldSpec::segments(std::move(segs));
  }
  if (type == "point_set")
    return ManifoldSpec::point_set(points_from_json(j.at("points")));
  throw DataError("unknown manifold type '" + type + "'");
}

Json hidden_model_to_json(const HiddenManifoldModel &model) {
  Json box = Json::array();
  for (const auto &[lo, hi] : model.box.intervals)
    box.push_back(Json::array({lo, hi}));
  return {{"manifold", manifold_to_json(model.manifold)},
          {"weight", {{"cosine_amplitude", model.weight.cosine_amplitude}}},
          {"sigma", model.sigma},
          {"eta", model.eta},
          {"box", std::move(box)},
          {"seed", model.seed}};
}

Json ridge_to_json(const RidgeEstimate &est) {
  Json points = Json::array();
  for (std::size_t i = 0; i < est.records.size(); ++i) {
    const auto &r = est.records[i];
    Json p{{"index", i},
           {"status", to_string(r.status)},
           {"iterations", r.iterations},
           {"origin", vector_to_json(r.origin)},
           {"position", vector_to_json(r.position)}};
    if (r.diagnostics) {
      p["density"] = r.diagnostics->density;
      p["grad_ratio"] = r.diagnostics->grad_ratio;
      p["lambda_next"] = r.diagnostics->lambda_next;
      p["eigengap"] = std::isfinite(r.diagnostics->eigengap) ? Json(r.diagnostics->eigengap)
                                                             : Json(nullptr);
    }
    points.push_back(std::move(p));
  }
  Json counts;
  for (auto s : {PointStatus::converged, PointStatus::max_iter_reached,
                 PointStatus::denoised, PointStatus::underflow})
    counts[to_string(s)] = est.count(s);
  return {{"config", config_to_json(est.config)},
          {"counts", std::move(counts)},
          {"ridge_points", est.ridge_points.size()},
          {"points", std::move(points)}};
}

} // namespace surf
