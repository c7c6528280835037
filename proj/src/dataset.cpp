#include "admp/dataset.hpp"

#include <limits>
#include <sstream>
#include <stdexcept>

#include "admp/binary_io.hpp"
#include "admp/errors.hpp"

namespace admp {

namespace {

constexpr const char* kFormat = "admp-dataset";

const char* const kReserved[] = {"format", "version", "name", "endianness", "n_nodes",
                                 "n_edges", "n_features", "n_classes", "file"};

bool reserved(const std::string& key) {
  for (const char* k : kReserved)
    if (key == k) return true;
  return false;
}

std::size_t to_count(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError("manifest: '" + key + "' is not a count: " + text);
  }
}

}  // namespace

std::string DatasetManifest::to_text() const {
  std::ostringstream s;
  s << "format=" << kFormat << "\nversion=1\n"
    << "name=" << name << "\n"
    << "endianness=" << endianness << "\n"
    << "n_nodes=" << n_nodes << "\n"
    << "n_edges=" << n_edges << "\n"
    << "n_features=" << n_features << "\n"
    << "n_classes=" << n_classes << "\n";
  for (const auto& f : files) s << "file=" << f.name << " " << f.bytes << " " << f.crc32 << "\n";
  for (const auto& [k, v] : extras) s << k << "=" << v << "\n";
  return s.str();
}

DatasetManifest save_dataset(const Graph& g, const std::filesystem::path& dir, const std::string& name,
                             const std::vector<std::uint8_t>& regions,
                             std::vector<std::pair<std::string, std::string>> extras) {
  const std::size_t n = g.num_nodes();
  if (g.num_features() == 0) throw DataError("save_dataset: graph has no node features (d = 0)");
  if (g.num_classes() > std::numeric_limits<std::uint16_t>::max())
    throw DataError("save_dataset: more classes than the u16 label encoding allows");
  if (!regions.empty() && regions.size() != n) throw DataError("save_dataset: region vector length mismatch");
  for (const auto& [k, v] : extras)
    if (reserved(k)) throw std::invalid_argument("save_dataset: extra key '" + k + "' is reserved");

  std::filesystem::create_directories(dir);
  DatasetManifest m;
  m.name = name;
  m.n_nodes = n;
  m.n_edges = g.num_edges();
  m.n_features = g.num_features();
  m.n_classes = g.num_classes();
  m.extras = std::move(extras);

  auto emit = [&](const std::string& file, const std::vector<unsigned char>& bytes) {
    io::write_file(dir / file, bytes);
    m.files.push_back({file, bytes.size(), io::crc32(bytes)});
  };

  std::vector<unsigned char> buf;
  buf.reserve(g.features().size() * sizeof(double));
  for (double v : g.features().data()) io::put_le(buf, v);
  emit("features.bin", buf);

  buf.clear();
  for (auto [u, v] : g.edge_list()) {
    io::put_le<std::uint32_t>(buf, u);
    io::put_le<std::uint32_t>(buf, v);
  }
  emit("edges.bin", buf);

  buf.clear();
  for (int y : g.labels()) io::put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(y));
  emit("labels.bin", buf);

  buf.clear();
  for (Split s : {Split::Train, Split::Val, Split::Test})
    for (bool b : g.mask(s)) buf.push_back(b ? 1 : 0);
  emit("masks.bin", buf);

  if (!regions.empty()) emit("regions.bin", {regions.begin(), regions.end()});

  io::write_text(dir / "manifest.txt", m.to_text());
  return m;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  const auto kv = io::parse_manifest(io::read_text(dir / "manifest.txt"));
  if (io::manifest_get(kv, "format") != kFormat) throw DataError(dir.string() + ": not an admp dataset manifest");
  if (io::manifest_get(kv, "version") != "1") throw DataError(dir.string() + ": unsupported container version");

  Dataset ds;
  DatasetManifest& m = ds.manifest;
  m.name = io::manifest_get(kv, "name");
  m.endianness = io::manifest_get(kv, "endianness");
  if (m.endianness != "little") throw DataError("unsupported endianness tag '" + m.endianness + "'");
  m.n_nodes = to_count("n_nodes", io::manifest_get(kv, "n_nodes"));
  m.n_edges = to_count("n_edges", io::manifest_get(kv, "n_edges"));
  m.n_features = to_count("n_features", io::manifest_get(kv, "n_features"));
  m.n_classes = to_count("n_classes", io::manifest_get(kv, "n_classes"));
  if (m.n_features == 0) throw DataError("dataset declares no node features (d = 0)");

  std::vector<std::pair<std::string, std::vector<unsigned char>>> payloads;
  for (const auto& [k, v] : kv) {
    if (k != "file") {
      if (!reserved(k)) m.extras.emplace_back(k, v);
      continue;
    }
    std::istringstream in(v);
    DatasetManifest::FileEntry fe;
    std::string bytes, crc;
    if (!(in >> fe.name >> bytes >> crc)) throw DataError("malformed file entry: " + v);
    fe.bytes = to_count("file bytes", bytes);
    fe.crc32 = static_cast<std::uint32_t>(to_count("file crc32", crc));
    auto data = io::read_file(dir / fe.name);
    if (data.size() != fe.bytes)
      throw DataError(fe.name + ": size " + std::to_string(data.size()) + " does not match manifest " + bytes);
    if (io::crc32(data) != fe.crc32) throw DataError(fe.name + ": checksum mismatch");
    m.files.push_back(fe);
    payloads.emplace_back(fe.name, std::move(data));
  }
  auto payload = [&](const std::string& name, bool required) -> const std::vector<unsigned char>* {
    for (const auto& [n, d] : payloads)
      if (n == name) return &d;
    if (required) throw DataError("dataset is missing payload " + name);
    return nullptr;
  };

  const std::size_t n = m.n_nodes, d = m.n_features;
  const auto& fb = *payload("features.bin", true);
  if (fb.size() != n * d * sizeof(double)) throw DataError("features.bin does not hold n_nodes x n_features fp64 values");
  Matrix x(n, d);
  for (std::size_t i = 0; i < n * d; ++i) x.data()[i] = io::get_le<double>(fb.data() + i * sizeof(double));

  const auto& eb = *payload("edges.bin", true);
  if (eb.size() != m.n_edges * 2 * sizeof(std::uint32_t)) throw DataError("edges.bin does not hold n_edges u32 pairs");
  std::vector<Edge> edges(m.n_edges);
  for (std::size_t i = 0; i < m.n_edges; ++i)
    edges[i] = {io::get_le<std::uint32_t>(eb.data() + 8 * i), io::get_le<std::uint32_t>(eb.data() + 8 * i + 4)};

  const auto& lb = *payload("labels.bin", true);
  if (lb.size() != n * sizeof(std::uint16_t)) throw DataError("labels.bin does not hold n_nodes u16 values");
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = io::get_le<std::uint16_t>(lb.data() + 2 * i);

  const auto& mb = *payload("masks.bin", true);
  if (mb.size() != 3 * n) throw DataError("masks.bin does not hold three n_nodes u8 planes");
  SplitMasks masks{std::vector<bool>(n), std::vector<bool>(n), std::vector<bool>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    masks.train[i] = mb[i] != 0;
    masks.val[i] = mb[n + i] != 0;
    masks.test[i] = mb[2 * n + i] != 0;
  }

  if (const auto* rb = payload("regions.bin", false)) {
    if (rb->size() != n) throw DataError("regions.bin does not hold one byte per node");
    ds.regions.assign(rb->begin(), rb->end());
  }

  BuildReport rep;
  ds.graph = build_graph(edges, std::move(x), std::move(labels), std::move(masks), m.n_classes, &rep);
  if (rep.self_loops_dropped || rep.duplicates_merged || ds.graph.num_edges() != m.n_edges)
    throw DataError("edges.bin contains self-loops or duplicate pairs");
  return ds;
}

}  // namespace admp
