#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "surf/density.hpp"
#include "surf/geometry.hpp"
#include "surf/ridge.hpp"
#include "surf/synth.hpp"

namespace surf {

using Json = nlohmann::json;

/// "%.17g": round-trips every double.
std::string format_double(double v);

/// One point per row, comma separated. A first row of the form
/// x0,x1,...,x{D-1} is accepted as a header. Blank lines are skipped.
/// Throws DataError (with line number) on ragged rows, unparsable fields
/// and NaN/Inf.
PointCloud read_points_csv(std::istream &in);
PointCloud read_points_csv(const std::string &path);

void write_points_csv(std::ostream &out, const PointCloud &points,
                      bool header = false);
void write_points_csv(const std::string &path, const PointCloud &points,
                      bool header = false);

/// Array of equal-length numeric arrays.
PointCloud points_from_json(const Json &j);
Json points_to_json(const PointCloud &points);

Json vector_to_json(const Vector &v);
Vector vector_from_json(const Json &j);
Json matrix_to_json(const Matrix &m); // array of rows

/// {"kind":"kde","bandwidth":h,"n":..,"dim":..} or
/// {"kind":"mixture","dim":..,"components":[{"weight","mean","sigma"}]}.
/// KDE data points are not embedded; model_from_json takes them separately.
Json model_to_json(const DensityModel &model);
DensityModel model_from_json(const Json &j,
                             const std::optional<PointCloud> &kde_data = std::nullopt);

Json local_info_to_json(const Vector &x, const LocalDensityInfo &info);

Json config_to_json(const SurfConfig &config);
SurfConfig config_from_json(const Json &j);

Json manifold_to_json(const ManifoldSpec &m);
ManifoldSpec manifold_from_json(const Json &j);

Json hidden_model_to_json(const HiddenManifoldModel &model);

/// Per-point status and diagnostics plus the resolved configuration.
Json ridge_to_json(const RidgeEstimate &est);

void write_text_file(const std::string &path, const std::string &text);

} // namespace surf
