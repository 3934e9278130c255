#include "shotwright/dataset.hpp"

#include <fstream>
#include <set>
#include <unordered_set>

#include "shotwright/text.hpp"

namespace shotwright {

namespace {

constexpr std::string_view kDatasetHeader = "shotwright-dataset v1";

AttributeVector parse_attributes(std::string_view field, const std::string& source, std::size_t line_no) {
  const auto parts = text::split(field, ',');
  if (parts.size() != kAttributeCount) {
    throw ParseError(source, line_no, "expected 8 comma-separated class indices, got " + std::to_string(parts.size()));
  }
  std::array<int, kAttributeCount> classes{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    long long v = 0;
    try {
      v = text::parse_int(parts[i]);
    } catch (const Error& e) {
      throw ParseError(source, line_no, "attribute '" + attribute_names()[i] + "': " + e.what());
    }
    if (v < 0 || static_cast<unsigned long long>(v) >= kClassCounts[i]) {
      throw ParseError(source, line_no,
                       "class index " + std::to_string(v) + " out of range for attribute '" + attribute_names()[i] +
                           "' (" + std::to_string(kClassCounts[i]) + " classes)");
    }
    classes[i] = static_cast<int>(v);
  }
  return AttributeVector(classes);
}

AttributeDistribution parse_distribution(std::string_view field, const std::string& source, std::size_t line_no) {
  const auto parts = text::split(field, ',');
  if (parts.size() != kDistributionWidth) {
    throw ParseError(source, line_no, "expected 51 distribution values, got " + std::to_string(parts.size()));
  }
  std::array<double, kDistributionWidth> values{};
  for (std::size_t k = 0; k < kDistributionWidth; ++k) {
    try {
      values[k] = text::parse_double(parts[k]);
    } catch (const Error& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  if (auto problem = validate_distribution(values); !problem.empty()) throw ParseError(source, line_no, problem);
  return AttributeDistribution(values);
}

}  // namespace

std::vector<Scene> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file " + path.string());
  const std::string source = path.string();

  std::vector<Scene> scenes;
  std::unordered_set<std::string> closed_scenes;
  std::set<std::string> shot_ids;  // of the current scene
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    if (!header) {
      if (text::trim(line) != kDatasetHeader) {
        throw ParseError(source, line_no, "expected header '" + std::string(kDatasetHeader) + "'");
      }
      header = true;
      continue;
    }
    const auto fields = text::split(line, '\t');
    if (fields.size() != 3 && fields.size() != 4) {
      throw ParseError(source, line_no, "expected 3 or 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    Shot shot;
    shot.scene_id = std::string(text::trim(fields[0]));
    shot.shot_id = std::string(text::trim(fields[1]));
    if (shot.scene_id.empty() || shot.shot_id.empty()) throw ParseError(source, line_no, "empty scene or shot id");
    shot.attributes = parse_attributes(fields[2], source, line_no);
    if (fields.size() == 4) shot.distribution = parse_distribution(fields[3], source, line_no);

    if (scenes.empty() || scenes.back().scene_id != shot.scene_id) {
      if (!scenes.empty()) closed_scenes.insert(scenes.back().scene_id);
      if (closed_scenes.contains(shot.scene_id)) {
        throw ParseError(source, line_no, "scene '" + shot.scene_id + "' is not contiguous");
      }
      scenes.push_back(Scene{shot.scene_id, {}});
      shot_ids.clear();
    }
    if (!shot_ids.insert(shot.shot_id).second) {
      throw ParseError(source, line_no, "duplicate shot id '" + shot.shot_id + "' in scene '" + shot.scene_id + "'");
    }
    scenes.back().shots.push_back(std::move(shot));
  }
  if (!header) throw ParseError(source, line_no, "missing header '" + std::string(kDatasetHeader) + "'");
  return scenes;
}

void save_dataset(const std::vector<Scene>& scenes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset file " + path.string());
  out << kDatasetHeader << '\n';
  for (const auto& scene : scenes) {
    for (const auto& shot : scene.shots) {
      out << scene.scene_id << '\t' << shot.shot_id << '\t';
      for (std::size_t i = 0; i < kAttributeCount; ++i) out << (i ? "," : "") << shot.attributes[i];
      if (shot.distribution) {
        out << '\t';
        const auto v = shot.distribution->values();
        for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "," : "") << text::format_double(v[k]);
      }
      out << '\n';
    }
  }
  if (!out) throw Error("failed writing dataset file " + path.string());
}

std::vector<Episode> sample_episodes(const Scene& scene, std::size_t stride) {
  if (stride == 0) throw Error("episode stride must be positive");
  std::vector<Episode> out;
  const auto& shots = scene.shots;
  for (std::size_t start = 0; start + kEpisodeShots <= shots.size(); start += stride) {
    Episode ep;
    for (std::size_t k = 0; k < kContextShots; ++k) ep.context[k] = shots[start + k];
    for (std::size_t k = 0; k < kTargetShots; ++k) ep.targets[k] = shots[start + kContextShots + k];
    out.push_back(std::move(ep));
  }
  return out;
}

std::vector<Episode> sample_episodes(const std::vector<Scene>& scenes, std::size_t stride) {
  std::vector<Episode> out;
  for (const auto& s : scenes) {
    auto eps = sample_episodes(s, stride);
    out.insert(out.end(), std::make_move_iterator(eps.begin()), std::make_move_iterator(eps.end()));
  }
  return out;
}

}  // namespace shotwright
