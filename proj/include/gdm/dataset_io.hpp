#pragma once

// Dataset manifests:
//   { "format": 1,
//     "subjects": [ { "id": "sub1", "data": "sub1.gdm", "labels": "sub1.labels" }, ... ] }
// Relative paths resolve against the manifest's directory; subject order is
// manifest order.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdm/dataset.hpp"
#include "gdm/error.hpp"
#include "gdm/matrix_io.hpp"

namespace gdm {

inline constexpr int dataset_format_version = 1;

inline MultiSubjectDataset read_dataset(const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io_detail::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, manifest_path.string() + ": malformed JSON: " + e.what());
  }
  require(manifest.is_object() && manifest.value("format", 0) == dataset_format_version, ErrorKind::format,
          manifest_path.string() + ": expected \"format\": 1");
  require(manifest.contains("subjects") && manifest["subjects"].is_array(), ErrorKind::format,
          manifest_path.string() + ": missing \"subjects\" array");
  const std::filesystem::path base = manifest_path.parent_path();
  std::vector<Subject> subjects;
  for (const auto& entry : manifest["subjects"]) {
    require(entry.is_object() && entry.contains("id") && entry["id"].is_string() && entry.contains("data") &&
                entry["data"].is_string(),
            ErrorKind::format, manifest_path.string() + ": every subject needs string \"id\" and \"data\"");
    Subject s;
    s.id = entry["id"].get<std::string>();
    try {
      s.data = read_matrix(base / entry["data"].get<std::string>());
      if (entry.contains("labels") && !entry["labels"].is_null())
        s.labels = read_labels(base / entry["labels"].get<std::string>());
    } catch (const Error& e) {
      throw Error(e.kind(), "subject '" + s.id + "': " + e.what());
    }
    if (s.labels)
      require(static_cast<Index>(s.labels->size()) == s.data.cols(), ErrorKind::dimension,
              "subject '" + s.id + "': label-length mismatch, " + std::to_string(s.labels->size()) + " labels for " +
                  std::to_string(s.data.cols()) + " samples");
    subjects.push_back(std::move(s));
  }
  return MultiSubjectDataset(std::move(subjects));
}

// Writes one matrix file per subject (extension `ext`, ".gdm" or ".csv"),
// label files where present, and `manifest.json`. Returns the manifest path.
inline std::filesystem::path write_dataset(const std::filesystem::path& dir, const MultiSubjectDataset& data,
                                           const std::string& ext = ".gdm") {
  std::filesystem::create_directories(dir);
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& s : data.subjects()) {
    nlohmann::json entry{{"id", s.id}, {"data", s.id + ext}};
    write_matrix(dir / (s.id + ext), s.data);
    if (s.labels) {
      entry["labels"] = s.id + ".labels";
      write_labels(dir / (s.id + ".labels"), *s.labels);
    }
    subjects.push_back(std::move(entry));
  }
  const nlohmann::json manifest{{"format", dataset_format_version}, {"subjects", subjects}};
  const auto path = dir / "manifest.json";
  io_detail::write_file(path, manifest.dump(2) + "\n");
  return path;
}

inline void write_ground_truth(const std::filesystem::path& dir, const SynthGroundTruth& truth) {
  std::filesystem::create_directories(dir);
  nlohmann::json mixings = nlohmann::json::array();
  write_matrix(dir / "truth_shared.gdm", truth.shared);
  for (std::size_t i = 0; i < truth.mixings.size(); ++i) {
    const std::string name = "truth_mixing_" + std::to_string(i + 1) + ".gdm";
    write_matrix(dir / name, truth.mixings[i]);
    mixings.push_back(name);
  }
  const nlohmann::json record{{"format", dataset_format_version},
                              {"shared", "truth_shared.gdm"},
                              {"mixings", mixings},
                              {"noise_sigma", truth.noise_sigma},
                              {"seed", truth.seed}};
  io_detail::write_file(dir / "truth.json", record.dump(2) + "\n");
}

}  // namespace gdm
