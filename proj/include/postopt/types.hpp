#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace postopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base error for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A finite, non-empty real vector tagged with its role, so decision variables
/// and problem parameters cannot be swapped by accident.
template <class Tag>
class TaggedVector {
 public:
  TaggedVector() = default;

  explicit TaggedVector(Vector values) : values_(std::move(values)) {
    if (values_.size() < 1) {
      throw std::invalid_argument(std::string(Tag::kName) + ": empty vector");
    }
    if (!values_.allFinite()) {
      throw std::invalid_argument(std::string(Tag::kName) + ": non-finite entry");
    }
  }

  TaggedVector(std::initializer_list<double> values)
      : TaggedVector(Vector(Eigen::Map<const Vector>(values.begin(),
                                                     static_cast<Eigen::Index>(values.size())))) {}

  static TaggedVector from(const std::vector<double>& values) {
    return TaggedVector(
        Vector(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()))));
  }

  [[nodiscard]] const Vector& values() const { return values_; }
  [[nodiscard]] Eigen::Index size() const { return values_.size(); }
  [[nodiscard]] double operator[](Eigen::Index i) const { return values_[i]; }
  [[nodiscard]] std::vector<double> to_std() const {
    return {values_.data(), values_.data() + values_.size()};
  }

  friend bool operator==(const TaggedVector& a, const TaggedVector& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Vector values_;
};

struct DecisionTag {
  static constexpr const char* kName = "DecisionVector";
};
struct ParameterTag {
  static constexpr const char* kName = "ParameterVector";
};

/// Optimization variable m.
using DecisionVector = TaggedVector<DecisionTag>;
/// Problem parameters theta.
using ParameterVector = TaggedVector<ParameterTag>;

/// Axis-aligned box [lower, upper] in some vector space.
struct Box {
  Vector lower;
  Vector upper;

  [[nodiscard]] bool contains(const Vector& x) const;
};

/// Uncertainty hyper-rectangle: theta_k in [nominal_k - eps_k, nominal_k + eps_k].
class ParameterBox {
 public:
  ParameterBox(ParameterVector nominal, Vector half_widths);

  /// eps_k = fractions_k * |nominal_k|.
  static ParameterBox relative(const ParameterVector& nominal, const Vector& fractions);
  static ParameterBox relative(const ParameterVector& nominal, double fraction);

  [[nodiscard]] const ParameterVector& nominal() const { return nominal_; }
  [[nodiscard]] const Vector& half_widths() const { return half_widths_; }
  [[nodiscard]] Eigen::Index dimension() const { return nominal_.size(); }
  [[nodiscard]] double lower(Eigen::Index k) const { return nominal_[k] - half_widths_[k]; }
  [[nodiscard]] double upper(Eigen::Index k) const { return nominal_[k] + half_widths_[k]; }

  [[nodiscard]] bool contains(const ParameterVector& theta) const;
  /// Index of the first coordinate outside the box, or -1.
  [[nodiscard]] Eigen::Index first_violation(const ParameterVector& theta) const;

 private:
  ParameterVector nominal_;
  Vector half_widths_;
};

/// Deterministic uniform samples from the box. Sample i draws from its own
/// stream derived from (seed, i), so any subset can be regenerated alone.
std::vector<ParameterVector> box_sample(const ParameterBox& box, std::uint64_t seed, int count);

/// Uniform sample from the stream of (seed, index), coordinates in [lower, upper].
Vector uniform_in(const Vector& lower, const Vector& upper, std::uint64_t seed,
                  std::uint64_t index);

}  // namespace postopt
