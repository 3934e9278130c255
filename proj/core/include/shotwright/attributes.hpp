#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shotwright/error.hpp"

namespace shotwright {

/// Number of attribute families every shot is labelled with.
inline constexpr std::size_t kAttributeCount = 8;

/// Class counts per attribute in storage order. The 51-wide distribution
/// layout is the concatenation of blocks with these widths.
inline constexpr std::array<std::size_t, kAttributeCount> kClassCounts = {7, 6, 3, 6, 6, 9, 8, 6};

/// Start of each attribute block inside a 51-wide distribution.
inline constexpr std::array<std::size_t, kAttributeCount> kBlockOffsets = [] {
  std::array<std::size_t, kAttributeCount> out{};
  std::size_t acc = 0;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    out[i] = acc;
    acc += kClassCounts[i];
  }
  return out;
}();

inline constexpr std::size_t kDistributionWidth = kBlockOffsets.back() + kClassCounts.back();
static_assert(kDistributionWidth == 51);

struct AttributeInfo {
  std::string name;
  std::vector<std::string> class_names;

  std::size_t class_count() const { return class_names.size(); }

  friend bool operator==(const AttributeInfo&, const AttributeInfo&) = default;
};

/// The 8 attribute families with their class names. Counts are fixed by
/// kClassCounts; names are configuration.
class AttributeTaxonomy {
 public:
  /// Generic taxonomy: canonical attribute names and class names "c0", "c1", ...
  static AttributeTaxonomy standard();

  /// Throws if the entries violate the count/name invariants.
  explicit AttributeTaxonomy(std::vector<AttributeInfo> attributes);

  const std::vector<AttributeInfo>& attributes() const { return attributes_; }
  const AttributeInfo& operator[](std::size_t i) const { return attributes_.at(i); }
  std::size_t size() const { return attributes_.size(); }

  friend bool operator==(const AttributeTaxonomy&, const AttributeTaxonomy&) = default;

 private:
  std::vector<AttributeInfo> attributes_;
};

/// Canonical attribute names in storage order.
const std::array<std::string, kAttributeCount>& attribute_names();

AttributeTaxonomy load_taxonomy(const std::filesystem::path& path);
void save_taxonomy(const AttributeTaxonomy& taxonomy, const std::filesystem::path& path);

/// One class index per attribute.
class AttributeVector {
 public:
  AttributeVector() = default;
  /// Throws if any index is outside its attribute's class range.
  explicit AttributeVector(std::array<int, kAttributeCount> classes);

  int operator[](std::size_t i) const { return classes_[i]; }
  const std::array<int, kAttributeCount>& classes() const { return classes_; }

  friend bool operator==(const AttributeVector&, const AttributeVector&) = default;
  friend auto operator<=>(const AttributeVector&, const AttributeVector&) = default;

 private:
  std::array<int, kAttributeCount> classes_{};
};

/// 51 non-negative values; each of the 8 blocks sums to one.
class AttributeDistribution {
 public:
  static constexpr double kTolerance = 1e-6;

  AttributeDistribution();  // uniform in every block
  /// Throws if the values are not a valid blockwise distribution.
  explicit AttributeDistribution(std::span<const double> values);

  std::span<const double> values() const { return values_; }
  std::span<const double> block(std::size_t attribute) const;
  double operator[](std::size_t i) const { return values_[i]; }

  /// Argmax per block, ties toward the lowest class.
  AttributeVector argmax() const;

  friend bool operator==(const AttributeDistribution&, const AttributeDistribution&) = default;

 private:
  std::array<double, kDistributionWidth> values_{};
};

/// Checks block widths, non-negativity and normalization. Empty string if valid.
std::string validate_distribution(std::span<const double> values, double tolerance = AttributeDistribution::kTolerance);

AttributeDistribution one_hot_encode(const AttributeVector& attrs);

}  // namespace shotwright
