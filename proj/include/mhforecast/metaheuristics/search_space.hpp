#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mhforecast/error.hpp"

namespace mhf::opt {

enum class ParamKind { continuous, continuous_log, integer };

/// One bounded hyperparameter. Bounds are inclusive and given in natural units.
struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::continuous;
  double lower = 0.0;
  double upper = 1.0;

  void validate() const {
    if (!(lower < upper)) throw Error(Errc::invalid_config, name + ": lower must be < upper");
    if (kind == ParamKind::continuous_log && !(lower > 0.0)) {
      throw Error(Errc::invalid_config, name + ": log-scaled bounds must be positive");
    }
  }

  // Integers get half a unit of slack on each side so every value has an
  // equally wide rounding basin.
  double internal_lower() const {
    switch (kind) {
      case ParamKind::continuous_log: return std::log(lower);
      case ParamKind::integer: return lower - 0.5;
      default: return lower;
    }
  }
  double internal_upper() const {
    switch (kind) {
      case ParamKind::continuous_log: return std::log(upper);
      case ParamKind::integer: return upper + 0.5;
      default: return upper;
    }
  }
  double internal_width() const { return internal_upper() - internal_lower(); }

  double decode(double internal) const {
    switch (kind) {
      case ParamKind::continuous_log: return std::clamp(std::exp(internal), lower, upper);
      case ParamKind::integer: return std::clamp(std::round(internal), lower, upper);  // half away from zero
      default: return std::clamp(internal, lower, upper);
    }
  }

  double encode(double value) const {
    return kind == ParamKind::continuous_log ? std::log(value) : value;
  }
};

using Position = std::vector<double>;

/// Decoded hyperparameters in search-space order.
struct Assignment {
  std::vector<std::pair<std::string, double>> values;

  double at(const std::string& name) const {
    for (const auto& [k, v] : values)
      if (k == name) return v;
    throw Error(Errc::dimension_mismatch, "no hyperparameter named '" + name + "'");
  }
  bool contains(const std::string& name) const {
    return std::any_of(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
  }
  bool operator==(const Assignment&) const = default;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {
    std::unordered_set<std::string> seen;
    for (const auto& p : params_) {
      p.validate();
      if (!seen.insert(p.name).second) throw Error(Errc::invalid_config, "duplicate parameter '" + p.name + "'");
    }
  }

  std::size_t dimension() const { return params_.size(); }
  const std::vector<ParamSpec>& params() const { return params_; }
  const ParamSpec& operator[](std::size_t j) const { return params_[j]; }

  double lower(std::size_t j) const { return params_[j].internal_lower(); }
  double upper(std::size_t j) const { return params_[j].internal_upper(); }
  double width(std::size_t j) const { return params_[j].internal_width(); }

  void clamp(Position& x) const {
    check(x);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::clamp(x[j], lower(j), upper(j));
  }

  bool contains(std::span<const double> x) const {
    if (x.size() != dimension()) return false;
    for (std::size_t j = 0; j < x.size(); ++j)
      if (!(x[j] >= lower(j) && x[j] <= upper(j))) return false;
    return true;
  }

  void check(std::span<const double> x) const {
    if (x.size() != dimension()) {
      throw Error(Errc::dimension_mismatch, "position has " + std::to_string(x.size()) +
                                                " coordinates, space has " + std::to_string(dimension()));
    }
  }

 private:
  std::vector<ParamSpec> params_;
};

inline Assignment decode_candidate(const SearchSpace& space, std::span<const double> position) {
  space.check(position);
  Assignment out;
  out.values.reserve(space.dimension());
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    out.values.emplace_back(space[j].name, space[j].decode(position[j]));
  }
  return out;
}

struct Candidate {
  Position position;
  double fitness = std::numeric_limits<double>::quiet_NaN();  // NaN = unevaluated

  bool evaluated() const { return !std::isnan(fitness); }
};

}  // namespace mhf::opt
