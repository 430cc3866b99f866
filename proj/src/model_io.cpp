#include "styler/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace styler {

static_assert(std::endian::native == std::endian::little, "model IO assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'B', 'L', 'D', '1'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw FormatError("model file is truncated");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> b) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), b.data(), static_cast<uInt>(b.size())));
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

std::size_t serialized_model_size(int side, int o, int s, int c) {
  const std::size_t header = 4 + 4 + 4 + 3 * 4 + 8 + 4;
  const std::size_t thresholds = 8 * static_cast<std::size_t>((s - 1) + (c - 1));
  const std::size_t coefficients = 8 * static_cast<std::size_t>(o) * s * c * side * side;
  return header + thresholds + coefficients + 4;
}

std::vector<std::uint8_t> serialize_model(const BladeModel& model) {
  model.validate();
  Writer w;
  for (char ch : kMagic) w.put(static_cast<std::uint8_t>(ch));
  const auto& q = model.quantizer;
  w.put<std::uint32_t>(kModelFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.side));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(q.orientation_bins));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(q.strength_bins));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(q.coherence_bins));
  w.put<double>(q.rho);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.passes));
  for (double t : q.strength_thresholds) w.put(t);
  for (double t : q.coherence_thresholds) w.put(t);
  for (Eigen::Index k = 0; k < model.filters.rows(); ++k)
    for (Eigen::Index j = 0; j < model.filters.cols(); ++j) w.put<double>(model.filters(k, j));
  w.put<std::uint32_t>(crc_of(w.bytes));
  return std::move(w.bytes);
}

BladeModel parse_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char ch : kMagic)
    if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(ch)) throw FormatError("not a BLADE model (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion) throw FormatError("unsupported model version " + std::to_string(version));
  BladeModel m;
  const auto side = r.get<std::uint32_t>();
  const auto o = r.get<std::uint32_t>(), s = r.get<std::uint32_t>(), c = r.get<std::uint32_t>();
  if (side == 0 || side > 63 || o == 0 || s == 0 || c == 0 || o > 4096 || s > 4096 || c > 4096)
    throw FormatError("model header holds implausible dimensions");
  m.side = static_cast<int>(side);
  m.quantizer.orientation_bins = static_cast<int>(o);
  m.quantizer.strength_bins = static_cast<int>(s);
  m.quantizer.coherence_bins = static_cast<int>(c);
  m.quantizer.rho = r.get<double>();
  m.passes = static_cast<int>(r.get<std::uint32_t>());
  if (bytes.size() != serialized_model_size(m.side, m.quantizer.orientation_bins, m.quantizer.strength_bins,
                                            m.quantizer.coherence_bins))
    throw FormatError("model file size does not match its header (truncated or padded)");
  for (std::uint32_t i = 0; i + 1 < s; ++i) m.quantizer.strength_thresholds.push_back(r.get<double>());
  for (std::uint32_t i = 0; i + 1 < c; ++i) m.quantizer.coherence_thresholds.push_back(r.get<double>());
  m.filters.resize(m.bucket_count(), m.taps());
  for (Eigen::Index k = 0; k < m.filters.rows(); ++k)
    for (Eigen::Index j = 0; j < m.filters.cols(); ++j) m.filters(k, j) = r.get<double>();
  const std::size_t payload = r.pos();
  const auto stored = r.get<std::uint32_t>();
  if (stored != crc_of(bytes.first(payload))) throw FormatError("model checksum mismatch");
  try {
    m.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("model content invalid: ") + e.what());
  }
  return m;
}

void save_model(const BladeModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
  }
  const auto& info = model.info;
  if (info.effect.empty() && info.params.empty() && info.notes.empty() && info.name.empty()) return;
  nlohmann::json j;
  j["name"] = info.name.empty() ? path.stem().string() : info.name;
  j["effect"] = info.effect;
  j["params"] = info.params;
  j["notes"] = info.notes;
  std::ofstream side(sidecar_path(path));
  if (!side) throw IoError("cannot write " + sidecar_path(path).string());
  side << j.dump(2) << "\n";
}

BladeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  BladeModel m = parse_model(bytes);
  m.info.name = path.stem().string();
  const auto meta = sidecar_path(path);
  if (std::filesystem::exists(meta)) {
    std::ifstream js(meta);
    try {
      const auto j = nlohmann::json::parse(js);
      m.info.name = j.value("name", m.info.name);
      m.info.effect = j.value("effect", std::string{});
      m.info.notes = j.value("notes", std::string{});
      if (j.contains("params")) m.info.params = j.at("params").get<std::map<std::string, double>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(meta.string() + ": " + e.what());
    }
  }
  return m;
}

}  // namespace styler
