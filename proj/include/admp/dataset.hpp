#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "admp/graph.hpp"

namespace admp {

/// On-disk container:
///
///   manifest.txt  key=value text (format, version, name, endianness, counts, one `file=` line per payload)
///   features.bin  fp64, N x d, row-major
///   edges.bin     u32 pairs (u, v), u < v, one per undirected edge, ascending
///   labels.bin    u16 per node
///   masks.bin     u8 planes train | val | test, N bytes each, values 0/1
///   regions.bin   optional, u8 per node (0 sparse, 1 dense) for synthetic graphs
///
/// All integers and floats are little-endian. `file=` lines read
/// `file=<name> <bytes> <crc32>`; unknown keys are preserved as extras.
struct DatasetManifest {
  struct FileEntry {
    std::string name;
    std::size_t bytes = 0;
    std::uint32_t crc32 = 0;
    friend bool operator==(const FileEntry&, const FileEntry&) = default;
  };

  std::string name;
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::string endianness = "little";
  std::vector<FileEntry> files;
  std::vector<std::pair<std::string, std::string>> extras;

  std::string to_text() const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct Dataset {
  DatasetManifest manifest;
  Graph graph;
  std::vector<std::uint8_t> regions;  // empty unless regions.bin is present
};

/// Writes the container; returns the manifest. Rejects graphs without features.
DatasetManifest save_dataset(const Graph& g, const std::filesystem::path& dir, const std::string& name,
                             const std::vector<std::uint8_t>& regions = {},
                             std::vector<std::pair<std::string, std::string>> extras = {});

/// Reads and validates a container: sizes and checksums against the manifest,
/// payload dimensions against the declared counts, then the Graph invariants.
/// Throws DataError on any mismatch.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace admp
