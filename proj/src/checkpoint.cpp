#include "taxograft/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "taxograft/corpus_io.hpp"

namespace taxograft::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem, std::span<ParameterXd* const> params,
                     const nlohmann::json& extra) {
  nlohmann::json manifest{{"format", "taxograft-params-v1"}, {"scalar", "float64"}, {"extra", extra}};
  nlohmann::json entries = nlohmann::json::array();
  auto bin = open_output(with_suffix(stem, ".bin"));
  std::int64_t offset = 0;
  for (const ParameterXd* p : params) {
    entries.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}, {"offset", offset}});
    bin.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p->value.size())));
    offset += p->value.size();
  }
  if (!bin) throw Error(ErrorKind::Io, "failed writing " + with_suffix(stem, ".bin").string());
  manifest["params"] = std::move(entries);
  manifest["total_scalars"] = offset;
  auto out = open_output(with_suffix(stem, ".json"));
  out << manifest.dump(2) << '\n';
}

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& stem) {
  auto in = open_input(with_suffix(stem, ".json"));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, "invalid checkpoint manifest " + with_suffix(stem, ".json").string() + ": " + e.what());
  }
}

nlohmann::json load_checkpoint(const std::filesystem::path& stem, std::span<ParameterXd* const> params) {
  const nlohmann::json manifest = read_checkpoint_manifest(stem);
  if (manifest.value("format", "") != "taxograft-params-v1") {
    throw Error(ErrorKind::Io, "unsupported checkpoint format in " + stem.string());
  }
  std::map<std::string, nlohmann::json> by_name;
  for (const auto& entry : manifest.at("params")) by_name[entry.at("name").get<std::string>()] = entry;
  if (by_name.size() != params.size()) {
    throw Error(ErrorKind::ShapeMismatch, "checkpoint has " + std::to_string(by_name.size()) +
                                              " parameters, expected " + std::to_string(params.size()));
  }
  auto bin = open_input(with_suffix(stem, ".bin"));
  std::vector<char> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  const auto total = manifest.at("total_scalars").get<std::int64_t>();
  if (blob.size() != sizeof(double) * static_cast<std::size_t>(total)) {
    throw Error(ErrorKind::ShapeMismatch, "checkpoint blob size does not match manifest");
  }
  for (ParameterXd* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw Error(ErrorKind::ShapeMismatch, "checkpoint lacks parameter " + p->name);
    const auto rows = it->second.at("rows").get<Eigen::Index>();
    const auto cols = it->second.at("cols").get<Eigen::Index>();
    const auto offset = it->second.at("offset").get<std::int64_t>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw Error(ErrorKind::ShapeMismatch, "parameter " + p->name + " expected " + std::to_string(p->value.rows()) +
                                                "x" + std::to_string(p->value.cols()) + ", checkpoint has " +
                                                std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (offset < 0 || offset + rows * cols > total) {
      throw Error(ErrorKind::ShapeMismatch, "parameter " + p->name + " offset out of range");
    }
    std::memcpy(p->value.data(), blob.data() + sizeof(double) * static_cast<std::size_t>(offset),
                sizeof(double) * static_cast<std::size_t>(rows * cols));
    p->zero_grad();
  }
  return manifest.value("extra", nlohmann::json::object());
}

}  // namespace taxograft::nn
