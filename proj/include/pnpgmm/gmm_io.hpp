#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pnpgmm/gmm.hpp"

namespace pnpgmm {

enum class ModelFormat { binary, text };

/// GMMPRIOR v1 files. Both formats start with the line "GMMPRIOR v1"
/// (the text format appends " text"). The payload holds K, p, d, the K
/// weights, the K x d means (row-major) and K d x d covariances (row-major),
/// all as little-endian IEEE-754 doubles in the binary format. A CRC-32 of
/// the binary payload follows: 4 little-endian bytes in the binary format, a
/// "crc32 xxxxxxxx" line in the text format.
void save_model(const std::filesystem::path& path, const GmmModel& model,
                ModelFormat format = ModelFormat::binary);

/// Detects the format from the header line. Throws DataError on a bad header,
/// truncated payload or CRC mismatch.
GmmModel load_model(const std::filesystem::path& path);

std::string model_payload(const GmmModel& model);
std::uint32_t payload_crc32(const std::string& payload);

}  // namespace pnpgmm
