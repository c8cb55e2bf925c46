#ifndef LSA_IO_HPP
#define LSA_IO_HPP

#include <string>
#include <vector>

#include "lsa/model.hpp"

namespace lsa {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- graph and episode files (structured text, versioned) --------------

void write_graph(const std::string& path, const NavGraph& graph);
NavGraph read_graph(const std::string& path);

void write_episodes(const std::string& path, const std::vector<Episode>& episodes);
// Reference paths are recomputed against the graph on load.
std::vector<Episode> read_episodes(const std::string& path, const NavGraph& graph);

// ---- feature fixture: text header + little-endian float64 payload ------

struct FeatureRecord {
  int node = 0;
  std::size_t view = 0;  // flat grid index
  Tensor image;          // d_image
};

void write_feature_fixture(const std::string& path, const FeatureDims& dims,
                           const std::vector<FeatureRecord>& records);
std::vector<FeatureRecord> read_feature_fixture(const std::string& path,
                                                FeatureDims* dims_out = nullptr);

// ---- checkpoint: text header (config, step) + float64 parameter payload -

void write_checkpoint(const std::string& path, const Model& model,
                      std::size_t step);
// Loads parameters into the model; rejects a mismatched configuration.
std::size_t read_checkpoint(const std::string& path, Model& model);

// ---- inspection dumps ---------------------------------------------------

std::string mask_to_text(const MaskMatrix& mask);
std::string mask_to_csv(const MaskMatrix& mask);

// Records of (iteration, slot, view_row, view_col, weight).
std::string trace_to_text(const AttentionTrace& trace);
std::string trace_to_csv(const AttentionTrace& trace);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace lsa

#endif  // LSA_IO_HPP
