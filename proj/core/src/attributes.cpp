#include "shotwright/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "shotwright/text.hpp"

namespace shotwright {

namespace {
constexpr std::string_view kTaxonomyHeader = "shotwright-taxonomy v1";
}

const std::array<std::string, kAttributeCount>& attribute_names() {
  static const std::array<std::string, kAttributeCount> names = {
      "number_of_people", "shot_angle", "shot_location", "shot_motion",
      "shot_size",        "shot_subject", "shot_type",   "sound_source"};
  return names;
}

AttributeTaxonomy AttributeTaxonomy::standard() {
  std::vector<AttributeInfo> attrs;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    AttributeInfo info{attribute_names()[i], {}};
    for (std::size_t k = 0; k < kClassCounts[i]; ++k) info.class_names.push_back("c" + std::to_string(k));
    attrs.push_back(std::move(info));
  }
  return AttributeTaxonomy(std::move(attrs));
}

AttributeTaxonomy::AttributeTaxonomy(std::vector<AttributeInfo> attributes) : attributes_(std::move(attributes)) {
  if (attributes_.size() != kAttributeCount) {
    throw Error("taxonomy must list exactly 8 attributes, got " + std::to_string(attributes_.size()));
  }
  std::set<std::string> attr_names;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const auto& a = attributes_[i];
    if (a.name.empty()) throw Error("taxonomy attribute " + std::to_string(i) + " has an empty name");
    if (!attr_names.insert(a.name).second) throw Error("duplicate attribute name '" + a.name + "'");
    if (a.class_count() != kClassCounts[i]) {
      throw Error("attribute '" + a.name + "' must have " + std::to_string(kClassCounts[i]) + " classes, got " +
                  std::to_string(a.class_count()));
    }
    std::set<std::string> seen;
    for (const auto& c : a.class_names) {
      if (c.empty()) throw Error("attribute '" + a.name + "' has an empty class name");
      if (!seen.insert(c).second) throw Error("attribute '" + a.name + "' repeats class '" + c + "'");
    }
  }
}

AttributeTaxonomy load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open taxonomy file " + path.string());
  const std::string source = path.string();
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<AttributeInfo> attrs;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != kTaxonomyHeader) throw ParseError(source, line_no, "expected header '" + std::string(kTaxonomyHeader) + "'");
      header = true;
      continue;
    }
    const auto fields = text::split(t, '\t');
    if (fields.size() != 2) throw ParseError(source, line_no, "expected '<name><TAB><class,class,...>'");
    AttributeInfo info{std::string(text::trim(fields[0])), {}};
    for (auto c : text::split(fields[1], ',')) info.class_names.emplace_back(text::trim(c));
    attrs.push_back(std::move(info));
  }
  if (!header) throw ParseError(source, line_no, "missing header '" + std::string(kTaxonomyHeader) + "'");
  try {
    return AttributeTaxonomy(std::move(attrs));
  } catch (const Error& e) {
    throw Error(source + ": " + e.what());
  }
}

void save_taxonomy(const AttributeTaxonomy& taxonomy, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write taxonomy file " + path.string());
  out << kTaxonomyHeader << '\n';
  for (const auto& a : taxonomy.attributes()) {
    out << a.name << '\t';
    for (std::size_t k = 0; k < a.class_names.size(); ++k) out << (k ? "," : "") << a.class_names[k];
    out << '\n';
  }
}

AttributeVector::AttributeVector(std::array<int, kAttributeCount> classes) : classes_(classes) {
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    if (classes_[i] < 0 || static_cast<std::size_t>(classes_[i]) >= kClassCounts[i]) {
      throw Error("class index " + std::to_string(classes_[i]) + " out of range for attribute '" +
                  attribute_names()[i] + "' (" + std::to_string(kClassCounts[i]) + " classes)");
    }
  }
}

AttributeDistribution::AttributeDistribution() {
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    std::fill_n(values_.begin() + static_cast<std::ptrdiff_t>(kBlockOffsets[i]), kClassCounts[i],
                1.0 / static_cast<double>(kClassCounts[i]));
  }
}

AttributeDistribution::AttributeDistribution(std::span<const double> values) {
  if (auto problem = validate_distribution(values); !problem.empty()) throw Error(problem);
  std::copy(values.begin(), values.end(), values_.begin());
}

std::span<const double> AttributeDistribution::block(std::size_t attribute) const {
  return std::span<const double>(values_).subspan(kBlockOffsets.at(attribute), kClassCounts[attribute]);
}

AttributeVector AttributeDistribution::argmax() const {
  std::array<int, kAttributeCount> classes{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const auto b = block(i);
    classes[i] = static_cast<int>(std::max_element(b.begin(), b.end()) - b.begin());
  }
  return AttributeVector(classes);
}

std::string validate_distribution(std::span<const double> values, double tolerance) {
  if (values.size() != kDistributionWidth) {
    return "distribution must have " + std::to_string(kDistributionWidth) + " values, got " +
           std::to_string(values.size());
  }
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < kClassCounts[i]; ++k) {
      const double v = values[kBlockOffsets[i] + k];
      if (!std::isfinite(v) || v < 0.0) {
        return "distribution value " + text::format_double(v) + " in block '" + attribute_names()[i] +
               "' is negative or non-finite";
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      return "distribution block '" + attribute_names()[i] + "' sums to " + text::format_double(sum);
    }
  }
  return {};
}

AttributeDistribution one_hot_encode(const AttributeVector& attrs) {
  std::array<double, kDistributionWidth> v{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) v[kBlockOffsets[i] + static_cast<std::size_t>(attrs[i])] = 1.0;
  return AttributeDistribution(v);
}

}  // namespace shotwright
