#include "airobject/diff/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "json.hpp"

namespace airobject::diff {

namespace {

constexpr const char* kMagic = "AIROBJECT-CHECKPOINT 1";

void write_le_double(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_le_double(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

struct Parsed {
  nlohmann::json manifest;
  std::vector<unsigned char> payload;
};

Parsed parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != kMagic) throw ParseError("not a checkpoint file: " + path.string());
  std::string header;
  std::getline(in, header);
  Parsed parsed;
  try {
    parsed.manifest = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint manifest: " + std::string(e.what()));
  }
  if (parsed.manifest.value("byte_order", "") != "little" ||
      parsed.manifest.value("dtype", "") != "float64") {
    throw ParseError("checkpoint: unsupported byte order or dtype");
  }
  parsed.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return parsed;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointSection>& sections,
                     const std::string& metadata_json) {
  nlohmann::json manifest;
  manifest["byte_order"] = "little";
  manifest["dtype"] = "float64";
  manifest["layout"] = "row-major";
  try {
    manifest["metadata"] = nlohmann::json::parse(metadata_json);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint metadata: " + std::string(e.what()));
  }
  nlohmann::json secs = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const auto& section : sections) {
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto* p : section.tensors) {
      tensors.push_back({{"name", p->name},
                         {"shape", {p->value.rows(), p->value.cols()}},
                         {"offset", offset}});
      offset += p->value.size();
    }
    secs.push_back({{"name", section.name}, {"tensors", tensors}});
  }
  manifest["sections"] = secs;

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out << kMagic << '\n' << manifest.dump() << '\n';
    for (const auto& section : sections) {
      for (const auto* p : section.tensors) {
        for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
          for (Eigen::Index c = 0; c < p->value.cols(); ++c) write_le_double(out, p->value(r, c));
        }
      }
    }
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  Parsed parsed = parse_file(path);
  CheckpointInfo info;
  for (const auto& s : parsed.manifest.at("sections")) info.sections.push_back(s.at("name"));
  info.metadata_json = parsed.manifest.value("metadata", nlohmann::json::object()).dump();
  return info;
}

void load_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointSection>& sections) {
  Parsed parsed = parse_file(path);
  std::map<std::string, const nlohmann::json*> file_sections;
  for (const auto& s : parsed.manifest.at("sections")) {
    file_sections[s.at("name").get<std::string>()] = &s;
  }
  for (const auto& section : sections) {
    auto it = file_sections.find(section.name);
    if (it == file_sections.end()) {
      throw DataError("checkpoint " + path.string() + " has no section '" + section.name + "'");
    }
    std::map<std::string, const nlohmann::json*> tensors;
    for (const auto& t : it->second->at("tensors")) tensors[t.at("name").get<std::string>()] = &t;
    for (auto* p : section.tensors) {
      auto t = tensors.find(p->name);
      if (t == tensors.end()) {
        throw DataError("checkpoint section '" + section.name + "' lacks tensor " + p->name);
      }
      const auto& shape = t->second->at("shape");
      const auto rows = shape.at(0).get<Eigen::Index>();
      const auto cols = shape.at(1).get<Eigen::Index>();
      if (rows != p->value.rows() || cols != p->value.cols()) {
        throw DimensionError("checkpoint tensor " + p->name + " has shape [" + std::to_string(rows) +
                             "," + std::to_string(cols) + "], expected [" +
                             std::to_string(p->value.rows()) + "," +
                             std::to_string(p->value.cols()) + "]");
      }
      const auto offset = t->second->at("offset").get<std::int64_t>();
      const std::size_t begin = static_cast<std::size_t>(offset) * 8;
      const std::size_t bytes = static_cast<std::size_t>(rows * cols) * 8;
      if (begin + bytes > parsed.payload.size()) throw ParseError("checkpoint payload truncated");
      const unsigned char* data = parsed.payload.data() + begin;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          p->value(r, c) = read_le_double(data + 8 * (r * cols + c));
        }
      }
      if (!p->value.allFinite()) throw NumericalError("checkpoint tensor " + p->name + " holds a non-finite value");
      p->zero_grad();
    }
  }
}

}  // namespace airobject::diff
