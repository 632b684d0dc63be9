#include "rii/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "rii/errors.hpp"

namespace rii::archive {

namespace {

constexpr char kMagic[8] = {'R', 'I', 'I', 'A', 'R', 'C', 'H', '1'};

static_assert(std::endian::native == std::endian::little,
              "archive payload assumes a little-endian host");

}  // namespace

void save(const std::string& path, const std::vector<NamedArray>& arrays,
          const nlohmann::json& meta) {
  nlohmann::json dir = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& a : arrays) {
    dir.push_back({{"name", a.name},
                   {"rows", a.values.rows()},
                   {"cols", a.values.cols()},
                   {"dtype", "f64"},
                   {"offset", offset}});
    offset += static_cast<std::uint64_t>(a.values.size()) * sizeof(double);
  }
  const std::string header = nlohmann::json{{"arrays", dir}, {"meta", meta}}.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write archive to " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t header_len = header.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& a : arrays) {
    out.write(reinterpret_cast<const char*>(a.values.data()),
              static_cast<std::streamsize>(a.values.size() * sizeof(double)));
  }
  if (!out) throw IoError("short write to " + path);
}

const Eigen::MatrixXd& Archive::at(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a.values;
  }
  throw IoError("archive has no array named '" + name + "'");
}

Archive load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read archive from " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path + " is not a parameter archive");
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw IoError("truncated archive header in " + path);

  const auto j = nlohmann::json::parse(header);
  Archive archive;
  archive.meta = j.value("meta", nlohmann::json::object());
  for (const auto& entry : j.at("arrays")) {
    NamedArray a;
    a.name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    a.values.resize(rows, cols);
    in.read(reinterpret_cast<char*>(a.values.data()),
            static_cast<std::streamsize>(a.values.size() * sizeof(double)));
    if (!in) throw IoError("truncated payload for array '" + a.name + "' in " + path);
    archive.arrays.push_back(std::move(a));
  }
  return archive;
}

}  // namespace rii::archive
