#include "patchwork/error.hpp"
#include "patchwork/init.hpp"
#include "patchwork/io.hpp"
#include "patchwork/mesh.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace patchwork {
namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<double> parse_args(const std::string& spec, const std::string& body) {
  std::vector<double> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw 0;
    } catch (...) {
      raise(ErrorCode::InvalidArgument,
            "bad numeric argument '" + item + "' in oracle '" + spec + "'");
    }
  }
  return out;
}

void expect_count(const std::string& spec, const std::vector<double>& args,
                  std::size_t n) {
  if (args.size() != n) {
    raise(ErrorCode::InvalidArgument, "oracle '" + spec + "' expects " +
                                          std::to_string(n) + " argument(s)");
  }
  for (double v : args) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      raise(ErrorCode::InvalidArgument,
            "oracle '" + spec + "' needs positive finite sizes");
    }
  }
}

}  // namespace

OccupancyOracle circle_oracle(double radius) {
  return {[r2 = radius * radius](const Vec3& p) {
            return p.x() * p.x() + p.y() * p.y() < r2;
          },
          "circle(" + fmt_num(radius) + ")"};
}

OccupancyOracle square_oracle(double side) {
  const double h = 0.5 * side;
  return {[h](const Vec3& p) { return std::abs(p.x()) < h && std::abs(p.y()) < h; },
          "square(" + fmt_num(side) + ")"};
}

OccupancyOracle sphere_oracle(double radius) {
  return {[r2 = radius * radius](const Vec3& p) { return p.squaredNorm() < r2; },
          "sphere(" + fmt_num(radius) + ")"};
}

OccupancyOracle torus_oracle(double major, double minor) {
  return {[major, minor](const Vec3& p) {
            const double q = std::hypot(p.x(), p.y()) - major;
            return q * q + p.z() * p.z() < minor * minor;
          },
          "torus(" + fmt_num(major) + "," + fmt_num(minor) + ")"};
}

OccupancyOracle cell_oracle(Vec3 center, double half_width) {
  return {[center, half_width](const Vec3& p) {
            return ((p - center).cwiseAbs().array() < half_width).all();
          },
          "cell"};
}

OccupancyOracle empty_oracle() {
  return {[](const Vec3&) { return false; }, "empty"};
}

OccupancyOracle complement(OccupancyOracle oracle) {
  std::string name = "not(" + oracle.name + ")";
  return {[inner = std::move(oracle.inside)](const Vec3& p) { return !inner(p); },
          std::move(name)};
}

OccupancyOracle oracle_by_name(const std::string& spec) {
  const auto open = spec.find('(');
  if (open == std::string::npos || spec.back() != ')') {
    if (spec == "empty") return empty_oracle();
    raise(ErrorCode::InvalidArgument, "cannot parse oracle '" + spec + "'");
  }
  const std::string kind = spec.substr(0, open);
  const std::string body = spec.substr(open + 1, spec.size() - open - 2);
  if (kind == "mesh") {
    auto mesh = std::make_shared<TriangleMesh>(load_mesh(body));
    if (mesh->empty()) raise(ErrorCode::DegenerateMesh, "mesh '" + body + "' has no faces");
    return {[mesh](const Vec3& p) { return winding_number(*mesh, p) >= 0.5; },
            spec};
  }
  const auto args = parse_args(spec, body);
  if (kind == "circle") {
    expect_count(spec, args, 1);
    return circle_oracle(args[0]);
  }
  if (kind == "square") {
    expect_count(spec, args, 1);
    return square_oracle(args[0]);
  }
  if (kind == "sphere") {
    expect_count(spec, args, 1);
    return sphere_oracle(args[0]);
  }
  if (kind == "torus") {
    expect_count(spec, args, 2);
    return torus_oracle(args[0], args[1]);
  }
  raise(ErrorCode::InvalidArgument, "unknown oracle kind '" + kind + "'");
}

}  // namespace patchwork
