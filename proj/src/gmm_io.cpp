#include "pnpgmm/gmm_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <vector>

#include "pnpgmm/errors.hpp"

namespace pnpgmm {
namespace {

constexpr const char* kMagic = "GMMPRIOR v1";

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    std::reverse(std::begin(bytes), std::end(bytes));
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

void put_double(std::string& out, double v) {
  const double le = to_little(v);
  out.append(reinterpret_cast<const char*>(&le), sizeof(le));
}

class PayloadReader {
 public:
  explicit PayloadReader(const std::string& data) : data_(data) {}
  double next() {
    if (pos_ + sizeof(double) > data_.size()) throw DataError("model payload is truncated");
    double v;
    std::memcpy(&v, data_.data() + pos_, sizeof(v));
    pos_ += sizeof(v);
    return to_little(v);
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

std::vector<double> payload_values(const GmmModel& model) {
  std::vector<double> values;
  const int k = model.components();
  const Eigen::Index d = model.dim();
  values.reserve(static_cast<std::size_t>(3 + k + k * d + k * d * d));
  values.push_back(k);
  values.push_back(model.patch_size());
  values.push_back(static_cast<double>(d));
  for (int m = 0; m < k; ++m) values.push_back(model.weight(m));
  for (int m = 0; m < k; ++m)
    for (Eigen::Index i = 0; i < d; ++i) values.push_back(model.mean(m)[i]);
  for (int m = 0; m < k; ++m)
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) values.push_back(model.covariance(m)(r, c));
  return values;
}

template <typename Next>
GmmModel model_from_values(Next&& next) {
  const double kf = next(), pf = next(), df = next();
  if (!(kf >= 1 && kf <= 1e6 && pf >= 1 && pf <= 1e4) || kf != std::floor(kf) ||
      pf != std::floor(pf) || df != pf * pf) {
    throw DataError("model header fields K, p, d are inconsistent");
  }
  const int k = static_cast<int>(kf);
  const int p = static_cast<int>(pf);
  const Eigen::Index d = static_cast<Eigen::Index>(df);
  std::vector<double> weights(static_cast<std::size_t>(k));
  for (auto& w : weights) w = next();
  std::vector<Eigen::VectorXd> means(static_cast<std::size_t>(k), Eigen::VectorXd(d));
  for (auto& mu : means)
    for (Eigen::Index i = 0; i < d; ++i) mu[i] = next();
  std::vector<Eigen::MatrixXd> covs(static_cast<std::size_t>(k), Eigen::MatrixXd(d, d));
  for (auto& c : covs)
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index col = 0; col < d; ++col) c(r, col) = next();
  return GmmModel(p, std::move(weights), std::move(means), std::move(covs));
}

}  // namespace

std::string model_payload(const GmmModel& model) {
  std::string out;
  for (double v : payload_values(model)) put_double(out, v);
  return out;
}

std::uint32_t payload_crc32(const std::string& payload) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size()));
  return static_cast<std::uint32_t>(crc);
}

void save_model(const std::filesystem::path& path, const GmmModel& model, ModelFormat format) {
  if (model.patch_size() < 1) throw ArgumentError("only patch models can be saved");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::string payload = model_payload(model);
  const std::uint32_t crc = payload_crc32(payload);
  if (format == ModelFormat::binary) {
    out << kMagic << "\n";
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    const std::uint32_t le = to_little(crc);
    out.write(reinterpret_cast<const char*>(&le), sizeof(le));
  } else {
    out << kMagic << " text\n";
    out << std::setprecision(17);
    const int k = model.components();
    const Eigen::Index d = model.dim();
    out << "K " << k << "\np " << model.patch_size() << "\nd " << d << "\nweights";
    for (int m = 0; m < k; ++m) out << " " << model.weight(m);
    out << "\n";
    for (int m = 0; m < k; ++m) {
      out << "mean";
      for (Eigen::Index i = 0; i < d; ++i) out << " " << model.mean(m)[i];
      out << "\n";
    }
    for (int m = 0; m < k; ++m) {
      out << "covariance\n";
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) out << (c ? " " : "") << model.covariance(m)(r, c);
        out << "\n";
      }
    }
    out << "crc32 " << std::hex << std::setw(8) << std::setfill('0') << crc << "\n";
  }
  if (!out) throw DataError("failed writing " + path.string());
}

GmmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  if (header == kMagic) {
    std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (rest.size() < sizeof(std::uint32_t)) throw DataError(path.string() + ": truncated model");
    const std::string payload = rest.substr(0, rest.size() - sizeof(std::uint32_t));
    std::uint32_t stored;
    std::memcpy(&stored, rest.data() + payload.size(), sizeof(stored));
    if (to_little(stored) != payload_crc32(payload)) {
      throw DataError(path.string() + ": CRC-32 mismatch");
    }
    PayloadReader reader(payload);
    GmmModel model = model_from_values([&] { return reader.next(); });
    if (!reader.done()) throw DataError(path.string() + ": trailing bytes in model payload");
    return model;
  }
  if (header == std::string(kMagic) + " text") {
    // Tokens are either field labels or numbers; labels are skipped.
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    if (tokens.size() < 2 || tokens[tokens.size() - 2] != "crc32") {
      throw DataError(path.string() + ": missing crc32 line");
    }
    const std::uint32_t stored = static_cast<std::uint32_t>(std::stoul(tokens.back(), nullptr, 16));
    tokens.resize(tokens.size() - 2);
    std::size_t pos = 0;
    auto next = [&]() -> double {
      while (pos < tokens.size()) {
        const std::string& t = tokens[pos++];
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() && *end == '\0') return v;
      }
      throw DataError(path.string() + ": model text is truncated");
    };
    GmmModel model = model_from_values(next);
    if (payload_crc32(model_payload(model)) != stored) {
      throw DataError(path.string() + ": CRC-32 mismatch");
    }
    return model;
  }
  throw DataError(path.string() + ": not a GMMPRIOR v1 file");
}

}  // namespace pnpgmm
