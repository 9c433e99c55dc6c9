#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srff/gp_model.hpp"
#include "srff/spectral.hpp"
#include "srff/trainer.hpp"

namespace srff {

// JSON documents. Matrices are stored as {"rows", "cols", "data"} where data is
// base64 of the row-major little-endian IEEE-754 float64 payload, so every
// value round-trips bit for bit.

inline constexpr int kBankFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string spec_to_json(const SpectralMeasureSpec& spec);
SpectralMeasureSpec spec_from_json(std::string_view text);

std::string bank_to_json(const FrequencyBank& bank);
FrequencyBank bank_from_json(std::string_view text);

struct ModelFile {
  FitState state;
  TrainMode mode = TrainMode::NonstationaryLearned;
  std::vector<std::string> input_columns;
  std::string output_column;
};

std::string model_to_json(const ModelFile& model);
ModelFile model_from_json(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace srff
