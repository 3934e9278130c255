#include "shotwright/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "shotwright/error.hpp"
#include "shotwright/text.hpp"

namespace shotwright {

namespace {

constexpr std::string_view kCheckpointHeader = "shotwright-ckpt v1";

void put_double(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (char& b : bytes) {
    b = static_cast<char>(bits & 0xff);
    bits >>= 8;
  }
  out.write(bytes, 8);
}

double get_double(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << kCheckpointHeader << '\n' << "entries " << params.size() << '\n';
  for (const Parameter* p : params) {
    if (p->name.empty() || p->name.find_first_of(" \t\n") != std::string::npos) {
      throw Error("checkpoint parameter name '" + p->name + "' must be non-empty without whitespace");
    }
    out << p->name << ' ' << p->value.rank();
    for (auto d : p->value.shape()) out << ' ' << d;
    out << '\n';
    for (double v : p->value.data()) put_double(out, v);
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  const std::string source = path.string();
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointHeader) {
    throw ParseError(source, 1, "unsupported checkpoint version (expected header '" + std::string(kCheckpointHeader) + "')");
  }
  if (!std::getline(in, line) || !line.starts_with("entries ")) throw ParseError(source, 2, "missing entry count");
  std::size_t count = 0;
  try {
    count = static_cast<std::size_t>(text::parse_int(std::string_view(line).substr(8)));
  } catch (const Error& e) {
    throw ParseError(source, 2, e.what());
  }
  std::vector<CheckpointEntry> entries;
  for (std::size_t e = 0; e < count; ++e) {
    if (!std::getline(in, line)) throw Error(source + ": truncated checkpoint (entry " + std::to_string(e) + " missing)");
    std::istringstream fields(line);
    CheckpointEntry entry;
    std::size_t rank = 0;
    if (!(fields >> entry.name >> rank)) throw Error(source + ": malformed entry header '" + line + "'");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) {
      if (!(fields >> d)) throw Error(source + ": malformed shape for entry '" + entry.name + "'");
    }
    entry.value = Tensor(shape);
    for (auto& v : entry.value.data()) v = get_double(in);
    if (!in) throw Error(source + ": truncated checkpoint in entry '" + entry.name + "'");
    entries.push_back(std::move(entry));
  }
  return entries;
}

void assign_parameters(const std::vector<CheckpointEntry>& entries, std::span<Parameter* const> params) {
  std::unordered_map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  for (Parameter* p : params) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) throw Error("checkpoint has no entry for parameter '" + p->name + "'");
    const auto& stored = it->second->value;
    if (stored.shape() != p->value.shape()) {
      throw ShapeError("parameter '" + p->name + "' has shape " + shape_string(p->value.shape()) +
                       " but the checkpoint stores " + shape_string(stored.shape()));
    }
    p->value = stored;
  }
}

}  // namespace shotwright
