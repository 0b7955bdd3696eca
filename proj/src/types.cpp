#include "postopt/types.hpp"

#include <algorithm>
#include <cmath>

#include "postopt/random.hpp"

namespace postopt {

bool Box::contains(const Vector& x) const {
  if (x.size() != lower.size() || x.size() != upper.size()) return false;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (!(x[k] >= lower[k] && x[k] <= upper[k])) return false;
  }
  return true;
}

ParameterBox::ParameterBox(ParameterVector nominal, Vector half_widths)
    : nominal_(std::move(nominal)), half_widths_(std::move(half_widths)) {
  if (half_widths_.size() != nominal_.size()) {
    throw std::invalid_argument("ParameterBox: half_widths length " +
                                std::to_string(half_widths_.size()) + " != nominal length " +
                                std::to_string(nominal_.size()));
  }
  for (Eigen::Index k = 0; k < half_widths_.size(); ++k) {
    if (!std::isfinite(half_widths_[k]) || half_widths_[k] < 0.0) {
      throw std::invalid_argument("ParameterBox: half width " + std::to_string(k) +
                                  " must be finite and nonnegative");
    }
  }
}

ParameterBox ParameterBox::relative(const ParameterVector& nominal, const Vector& fractions) {
  if (fractions.size() != nominal.size()) {
    throw std::invalid_argument("ParameterBox: fraction count does not match nominal length");
  }
  return ParameterBox(nominal, fractions.cwiseProduct(nominal.values().cwiseAbs()));
}

ParameterBox ParameterBox::relative(const ParameterVector& nominal, double fraction) {
  return relative(nominal, Vector::Constant(nominal.size(), fraction));
}

bool ParameterBox::contains(const ParameterVector& theta) const {
  return first_violation(theta) < 0 && theta.size() == dimension();
}

Eigen::Index ParameterBox::first_violation(const ParameterVector& theta) const {
  if (theta.size() != dimension()) return 0;
  for (Eigen::Index k = 0; k < dimension(); ++k) {
    if (!(theta[k] >= lower(k) && theta[k] <= upper(k))) return k;
  }
  return -1;
}

Vector uniform_in(const Vector& lower, const Vector& upper, std::uint64_t seed,
                  std::uint64_t index) {
  RandomStream stream(seed, index);
  Vector x(lower.size());
  for (Eigen::Index k = 0; k < lower.size(); ++k) {
    const double u = stream.uniform();
    // clamp guards the last-ulp overshoot of lower + u * width
    x[k] = std::clamp(lower[k] + u * (upper[k] - lower[k]), lower[k], upper[k]);
  }
  return x;
}

std::vector<ParameterVector> box_sample(const ParameterBox& box, std::uint64_t seed, int count) {
  if (count < 1) throw std::invalid_argument("box_sample: count must be positive");
  Vector lower(box.dimension());
  Vector upper(box.dimension());
  for (Eigen::Index k = 0; k < box.dimension(); ++k) {
    lower[k] = box.lower(k);
    upper[k] = box.upper(k);
  }
  std::vector<ParameterVector> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Vector x = uniform_in(lower, upper, seed, static_cast<std::uint64_t>(i));
    // a degenerate coordinate reproduces the nominal value bit for bit
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (box.half_widths()[k] == 0.0) x[k] = box.nominal()[k];
    }
    samples.emplace_back(std::move(x));
  }
  return samples;
}

}  // namespace postopt
