#pragma once

// Model directories: `manifest.json` plus one raw little-endian float64
// row-major `.bin` file per stored array. Every array is declared in the
// manifest with name, file, rows and cols.

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <string>

#include <json.hpp>

#include "gdm/error.hpp"
#include "gdm/kernel.hpp"
#include "gdm/matrix_io.hpp"
#include "gdm/solver.hpp"

namespace gdm {

inline constexpr int model_format_version = 1;

namespace model_detail {

class ArrayWriter {
public:
  explicit ArrayWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, const Matrix& m) {
    const std::string file = name + ".bin";
    io_detail::write_file(dir_ / file, encode_f64_row_major(m));
    entries_.push_back({{"name", name}, {"file", file}, {"rows", m.rows()}, {"cols", m.cols()}});
  }

  nlohmann::json entries() const { return entries_; }

private:
  std::filesystem::path dir_;
  nlohmann::json entries_ = nlohmann::json::array();
};

class ArrayReader {
public:
  ArrayReader(std::filesystem::path dir, const nlohmann::json& entries) : dir_(std::move(dir)) {
    for (const auto& e : entries) index_[e.at("name").get<std::string>()] = e;
  }

  Matrix get(const std::string& name) const {
    const auto it = index_.find(name);
    require(it != index_.end(), ErrorKind::format, "model manifest lacks array '" + name + "'");
    const auto& e = it->second;
    const auto path = dir_ / e.at("file").get<std::string>();
    return decode_f64_row_major(io_detail::read_file(path), e.at("rows").get<Index>(), e.at("cols").get<Index>(), 0,
                                path.string());
  }

private:
  std::filesystem::path dir_;
  std::map<std::string, nlohmann::json> index_;
};

inline Vector as_vector(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

}  // namespace model_detail

inline void save_model(const std::filesystem::path& dir, const AlignmentModel& model) {
  std::filesystem::create_directories(dir);
  model_detail::ArrayWriter arrays(dir);
  nlohmann::json subjects = nlohmann::json::array();
  for (std::size_t i = 0; i < model.subjects.size(); ++i) {
    const SubjectModel& s = model.subjects[i];
    const std::string p = "s" + std::to_string(i) + "_";
    arrays.add(p + "train", s.train);
    arrays.add(p + "means", s.stats.means);
    arrays.add(p + "stds", s.stats.stds);
    arrays.add(p + "gram_raw", s.gram_raw);
    arrays.add(p + "eigvecs", s.basis.eigvecs);
    arrays.add(p + "eigvals", s.basis.eigvals);
    arrays.add(p + "ehat", s.ehat);
    subjects.push_back({{"id", s.id},
                        {"array_prefix", p},
                        {"voxels", s.train.rows()},
                        {"samples", s.train.cols()},
                        {"kernel", to_string(s.kernel)},
                        {"energy_percent", s.energy_percent},
                        {"retained_dim", s.basis.retained_dim},
                        {"total_rank", s.basis.total_rank},
                        {"energy_kept", s.basis.energy_kept}});
  }
  arrays.add("reduced_eigenvalues", model.reduced_eigenvalues);
  nlohmann::json manifest{{"format_version", model_format_version},
                          {"solver", model.solver},
                          {"k", model.k},
                          {"objective", model.objective},
                          {"eigengap", std::isfinite(model.eigengap) ? nlohmann::json(model.eigengap) : nlohmann::json()},
                          {"eigenvalues", std::vector<double>(model.reduced_eigenvalues.data(),
                                                              model.reduced_eigenvalues.data() +
                                                                  model.reduced_eigenvalues.size())},
                          {"subjects", subjects},
                          {"arrays", arrays.entries()}};
  io_detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline AlignmentModel load_model(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io_detail::read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, (dir / "manifest.json").string() + ": malformed JSON: " + e.what());
  }
  try {
    require(manifest.at("format_version").get<int>() == model_format_version, ErrorKind::format,
            "unsupported model format version");
    const model_detail::ArrayReader arrays(dir, manifest.at("arrays"));
    AlignmentModel model;
    model.solver = manifest.at("solver").get<std::string>();
    model.k = manifest.at("k").get<Index>();
    model.objective = manifest.at("objective").get<double>();
    model.eigengap = manifest.at("eigengap").is_null() ? std::numeric_limits<double>::infinity()
                                                       : manifest.at("eigengap").get<double>();
    model.reduced_eigenvalues = model_detail::as_vector(arrays.get("reduced_eigenvalues"));
    for (const auto& e : manifest.at("subjects")) {
      SubjectModel s;
      const std::string p = e.at("array_prefix").get<std::string>();
      s.id = e.at("id").get<std::string>();
      s.kernel = parse_kernel(e.at("kernel").get<std::string>());
      s.energy_percent = e.at("energy_percent").get<double>();
      s.train = arrays.get(p + "train");
      s.stats.means = model_detail::as_vector(arrays.get(p + "means"));
      s.stats.stds = model_detail::as_vector(arrays.get(p + "stds"));
      s.gram_raw = arrays.get(p + "gram_raw");
      s.basis.eigvecs = arrays.get(p + "eigvecs");
      s.basis.eigvals = model_detail::as_vector(arrays.get(p + "eigvals"));
      s.basis.retained_dim = e.at("retained_dim").get<Index>();
      s.basis.total_rank = e.at("total_rank").get<Index>();
      s.basis.energy_kept = e.at("energy_kept").get<double>();
      s.ehat = arrays.get(p + "ehat");
      require(s.basis.eigvecs.cols() == s.basis.retained_dim && s.ehat.rows() == s.basis.retained_dim &&
                  s.ehat.cols() == model.k,
              ErrorKind::format, "subject '" + s.id + "' arrays disagree with the manifest");
      model.subjects.push_back(std::move(s));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, (dir / "manifest.json").string() + ": " + e.what());
  }
}

}  // namespace gdm
